mod common;

use std::io::Write;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::Arc;
use std::time::Duration;

use common::render;
use proptest::prelude::*;
use tafall::frame::TemperatureFrame;
use tafall::grid::Grid;
use tafall::pose::SkeletonTopology;
use tafall::scenario::scenario_by_name;
use tafall::stream::{
    decode_frame, encode_frame, record_frames, record_stream, replay, replay_into, run_pipeline, serve, DecodeError,
    PipelineConfig, PoseProvider, ProviderFactory, Recording, ReplayPoseProvider, ServeReport, write_framed,
};

fn arb_frame() -> impl Strategy<Value = (TemperatureFrame, u16)> {
    (1..24usize, 1..24usize, any::<u64>(), any::<u32>(), any::<u16>()).prop_flat_map(|(w, h, ts, seq, id)| {
        proptest::collection::vec(any::<i16>(), w * h).prop_map(move |px| {
            (TemperatureFrame { grid: Grid::from_vec(w, h, px).unwrap(), timestamp_us: ts, seq_no: seq }, id)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn encode_then_decode_is_exact((frame, id) in arb_frame()) {
        let bytes = encode_frame(&frame, id, frame.seq_no).unwrap();
        let p = decode_frame(&bytes).unwrap();
        prop_assert_eq!(p.sensor_id, id);
        prop_assert_eq!(p.seq_no, frame.seq_no);
        prop_assert_eq!(p.frame, frame);
    }

    #[test]
    fn every_proper_prefix_is_rejected((frame, id) in arb_frame()) {
        let bytes = encode_frame(&frame, id, frame.seq_no).unwrap();
        for n in 0..bytes.len() {
            prop_assert!(decode_frame(&bytes[..n]).is_err(), "prefix {}", n);
        }
        let mut longer = bytes.clone();
        longer.push(0);
        prop_assert_eq!(decode_frame(&longer), Err(DecodeError::TrailingBytes { extra: 1 }));
    }

    #[test]
    fn any_single_byte_change_is_rejected((frame, id) in arb_frame(), at in any::<prop::sample::Index>(), flip in 1..=255u8) {
        let mut bytes = encode_frame(&frame, id, frame.seq_no).unwrap();
        let i = at.index(bytes.len());
        bytes[i] ^= flip;
        prop_assert!(decode_frame(&bytes).is_err());
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..4096)) {
        let _ = decode_frame(&bytes);
    }

    #[test]
    fn garbage_after_a_valid_header_never_panics(tail in proptest::collection::vec(any::<u8>(), 0..2048)) {
        let mut bytes = b"TAF1\x01".to_vec();
        bytes.extend(tail);
        let _ = decode_frame(&bytes);
    }
}

fn big_queues() -> PipelineConfig {
    PipelineConfig { queue_capacity: 100_000, ..PipelineConfig::default() }
}

fn providers_for(scenarios: &[(u16, &str)]) -> ProviderFactory {
    let table: Vec<(u16, ReplayPoseProvider)> = scenarios
        .iter()
        .map(|&(id, name)| (id, ReplayPoseProvider::new(&scenario_by_name(name).unwrap().poses, 0)))
        .collect();
    Arc::new(move |id| {
        let p = table.iter().find(|(i, _)| *i == id).map(|(_, p)| p.clone()).expect("known sensor");
        Box::new(p) as Box<dyn PoseProvider>
    })
}

fn packets(frames: &[TemperatureFrame], id: u16) -> Vec<Vec<u8>> {
    frames.iter().map(|f| encode_frame(f, id, f.seq_no).unwrap()).collect()
}

fn send_all(addr: SocketAddr, packets: &[Vec<u8>]) {
    let mut s = TcpStream::connect(addr).unwrap();
    for p in packets {
        write_framed(&mut s, p).unwrap();
    }
    s.flush().unwrap();
}

fn serve_packets(config: PipelineConfig, providers: ProviderFactory, packets: &[Vec<u8>]) -> ServeReport {
    let h = serve("127.0.0.1:0", config, SkeletonTopology::default_17(), providers, None).unwrap();
    send_all(h.local_addr(), packets);
    std::thread::sleep(Duration::from_millis(50));
    h.shutdown()
}

fn offline(name: &str, frames: &[TemperatureFrame], id: u16) -> Vec<tafall::detector::FallEvent> {
    let s = scenario_by_name(name).unwrap();
    let (out, _) = run_pipeline(frames, id, &big_queues(), s.poses.topology(), Box::new(ReplayPoseProvider::new(&s.poses, 0)))
        .unwrap();
    out.events
}

#[test]
fn served_stream_matches_the_offline_pipeline() {
    let frames = render(&scenario_by_name("trip").unwrap(), 0.3, 4);
    let report = serve_packets(big_queues(), providers_for(&[(5, "trip")]), &packets(&frames, 5));
    let expected = offline("trip", &frames, 5);
    assert_eq!(expected.len(), 1);
    assert_eq!(report.events.iter().map(|e| e.event.clone()).collect::<Vec<_>>(), expected);
    let st = report.stats.sensors[&5];
    assert_eq!(st.frames_received, frames.len() as u64);
    assert_eq!((st.frames_dropped, st.out_of_order, st.crc_failures, st.sequence_gaps), (0, 0, 0, 0));
}

#[test]
fn shuffled_delivery_within_the_reorder_window_changes_nothing() {
    let frames = render(&scenario_by_name("trip").unwrap(), 0.3, 4);
    let mut shuffled = packets(&frames, 5);
    let mut r = common::rng(3);
    for chunk in shuffled.chunks_mut(6) {
        use rand::seq::SliceRandom;
        chunk.shuffle(&mut r);
    }
    let report = serve_packets(big_queues(), providers_for(&[(5, "trip")]), &shuffled);
    assert_eq!(report.events.iter().map(|e| e.event.clone()).collect::<Vec<_>>(), offline("trip", &frames, 5));
    let st = report.stats.sensors[&5];
    assert!(st.out_of_order > 0);
    assert_eq!((st.frames_dropped, st.sequence_gaps), (0, 0));
}

#[test]
fn interleaved_sensors_do_not_interfere() {
    let a = render(&scenario_by_name("trip").unwrap(), 0.3, 4);
    let b = render(&scenario_by_name("slip").unwrap(), 0.3, 8);
    let (pa, pb) = (packets(&a, 1), packets(&b, 2));
    let mut mixed = Vec::new();
    for i in 0..pa.len().max(pb.len()) {
        mixed.extend(pa.get(i).cloned());
        mixed.extend(pb.get(i).cloned());
    }
    let report = serve_packets(big_queues(), providers_for(&[(1, "trip"), (2, "slip")]), &mixed);
    for (id, name, frames) in [(1, "trip", &a), (2, "slip", &b)] {
        let got: Vec<_> = report.events.iter().filter(|e| e.sensor_id == id).map(|e| e.event.clone()).collect();
        assert_eq!(got, offline(name, frames, id), "sensor {id}");
        assert_eq!(report.stats.sensors[&id].frames_received, frames.len() as u64);
    }
}

#[test]
fn repeated_runs_give_identical_results() {
    let frames = render(&scenario_by_name("slip").unwrap(), 0.3, 2);
    let p = packets(&frames, 3);
    let runs: Vec<_> = (0..3).map(|_| serve_packets(big_queues(), providers_for(&[(3, "slip")]), &p).events).collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[1], runs[2]);
}

#[test]
fn gaps_duplicates_and_corruption_are_counted() {
    let frames = render(&scenario_by_name("trip").unwrap(), 0.3, 4);
    let mut p = packets(&frames[..80], 7);
    p.drain(20..25);
    p.insert(40, p[39].clone());
    let last = p[60].len() - 10;
    p[60][last] ^= 0x40;
    let report = serve_packets(big_queues(), providers_for(&[(7, "trip")]), &p);
    let st = report.stats.sensors[&7];
    assert_eq!(st.crc_failures, 1);
    assert_eq!(st.sequence_gaps, 6);
    assert_eq!(st.frames_dropped, 1);
    assert_eq!(st.frames_received, 80 - 5 + 1 - 1);
}

#[test]
fn garbage_packets_are_counted_and_the_connection_survives() {
    let frames = render(&scenario_by_name("trip").unwrap(), 0.3, 4);
    let mut p = packets(&frames[..30], 9);
    p.insert(10, b"not a packet".to_vec());
    let report = serve_packets(big_queues(), providers_for(&[(9, "trip")]), &p);
    assert_eq!(report.stats.malformed_packets, 1);
    assert_eq!(report.stats.sensors[&9].frames_received, 30);
}

struct SlowPoses(ReplayPoseProvider);

impl PoseProvider for SlowPoses {
    fn pose(&mut self, id: u16, f: &TemperatureFrame) -> Option<tafall::pose::WorldPose> {
        std::thread::sleep(Duration::from_millis(4));
        self.0.pose(id, f)
    }
}

#[test]
fn a_slow_consumer_drops_the_oldest_frames() {
    let s = scenario_by_name("trip").unwrap();
    let frames = render(&s, 0.3, 4);
    let provider = ReplayPoseProvider::new(&s.poses, 0);
    let providers: ProviderFactory = Arc::new(move |_| Box::new(SlowPoses(provider.clone())) as Box<dyn PoseProvider>);
    let config = PipelineConfig { queue_capacity: 8, shutdown_deadline_ms: 5000, ..PipelineConfig::default() };
    let report = serve_packets(config, providers, &packets(&frames, 4));
    let st = report.stats.sensors[&4];
    assert_eq!(st.frames_received, frames.len() as u64);
    assert!(st.frames_dropped > 0, "{st:?}");
    assert!(report.stats.pipeline_errors.is_empty());
}

#[test]
fn record_replay_rerecord_is_byte_identical() {
    let frames = render(&scenario_by_name("lateral").unwrap(), 0.3, 6);
    let mut original = Vec::new();
    record_frames(&frames, 2, 20.0, &mut original).unwrap();
    let rec = Recording::read_from(original.as_slice()).unwrap();
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let header = rec.header;
    let receiver = std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut out = Vec::new();
        record_stream(stream, &header, &mut out).unwrap();
        out
    });
    let sent = replay(&rec, addr, 50.0).unwrap();
    assert_eq!(sent.packets, frames.len());
    assert_eq!(receiver.join().unwrap(), original);
}

#[test]
fn replay_keeps_pace_at_double_speed() {
    let frames = render(&scenario_by_name("lateral").unwrap(), 0.0, 6);
    let mut bytes = Vec::new();
    record_frames(&frames[..101], 2, 20.0, &mut bytes).unwrap();
    let rec = Recording::read_from(bytes.as_slice()).unwrap();
    let report = replay_into(&rec, std::io::sink(), 2.0).unwrap();
    let expected = rec.duration() / 2.0;
    let wall = report.wall_time.as_secs_f64();
    assert!((wall - expected).abs() <= 0.1 * expected, "{wall} vs {expected}");
    let mut late = report.lateness.clone();
    late.sort();
    assert!(late[late.len() / 2] < Duration::from_millis(5));
}

#[test]
fn recordings_report_their_gaps() {
    let frames = render(&scenario_by_name("lateral").unwrap(), 0.0, 6);
    let kept: Vec<_> = frames[..50].iter().enumerate().filter(|(i, _)| !(10..14).contains(i)).map(|(_, f)| f.clone()).collect();
    let mut bytes = Vec::new();
    record_frames(&kept, 2, 20.0, &mut bytes).unwrap();
    let rec = Recording::read_from(bytes.as_slice()).unwrap();
    assert_eq!(rec.gaps(), vec![(frames[10].seq_no, 4)]);
    assert_eq!(rec.frames(), kept);
}

#[test]
fn replay_at_recorded_pace_keeps_frame_intervals() {
    let frames = render(&scenario_by_name("lateral").unwrap(), 0.0, 6);
    let mut bytes = Vec::new();
    record_frames(&frames[..41], 2, 20.0, &mut bytes).unwrap();
    let rec = Recording::read_from(bytes.as_slice()).unwrap();
    let report = replay_into(&rec, std::io::sink(), 1.0).unwrap();
    let mut late = report.lateness.clone();
    late.sort();
    assert!(late[late.len() / 2] < Duration::from_millis(5), "{late:?}");
    assert!((report.wall_time.as_secs_f64() - 2.0).abs() < 0.1);
}
