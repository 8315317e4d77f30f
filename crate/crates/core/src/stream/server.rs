//! TCP ingestion service: length-prefixed packets in, fall events out, one
//! ordered pipeline per sensor.

use std::collections::{BTreeMap, VecDeque};
use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::pipeline::{PipelineConfig, PoseProvider, SensorPipeline};
use super::protocol::{decode_frame, DecodeError, FramePacket, MAX_FRAMED_LEN};
use crate::detector::FallEvent;
use crate::pose::SkeletonTopology;

const POLL: Duration = Duration::from_millis(20);
/// Arrivals older than this do not count toward the current rate.
const RATE_SPAN: Duration = Duration::from_secs(2);

/// Builds the pose provider for a newly seen sensor.
pub type ProviderFactory = Arc<dyn Fn(u16) -> Box<dyn PoseProvider> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineStats {
    pub frames_received: u64,
    pub frames_dropped: u64,
    pub out_of_order: u64,
    pub crc_failures: u64,
    /// Sequence numbers skipped over because they never arrived in time.
    pub sequence_gaps: u64,
    /// Packets per second over the last two seconds.
    pub current_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ServerStats {
    pub sensors: BTreeMap<u16, PipelineStats>,
    /// Corrupt packets whose sensor could not be trusted or was unknown.
    pub unrouted_crc_failures: u64,
    /// Packets rejected for reasons other than the CRC.
    pub malformed_packets: u64,
    pub connections: u64,
    pub pipeline_errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorEvent {
    pub sensor_id: u16,
    #[serde(flatten)]
    pub event: FallEvent,
}

#[derive(Default)]
struct SensorCounters {
    received: AtomicU64,
    dropped: AtomicU64,
    out_of_order: AtomicU64,
    crc_failures: AtomicU64,
    gaps: AtomicU64,
    arrivals: Mutex<VecDeque<Instant>>,
}

impl SensorCounters {
    fn arrived(&self) {
        self.received.fetch_add(1, Ordering::Relaxed);
        let now = Instant::now();
        let mut a = self.arrivals.lock().expect("lock");
        a.push_back(now);
        while a.front().is_some_and(|t| now.duration_since(*t) > RATE_SPAN) {
            a.pop_front();
        }
    }

    fn snapshot(&self) -> PipelineStats {
        let now = Instant::now();
        let rate = {
            let mut a = self.arrivals.lock().expect("lock");
            while a.front().is_some_and(|t| now.duration_since(*t) > RATE_SPAN) {
                a.pop_front();
            }
            match (a.front(), a.back()) {
                (Some(f), Some(l)) if a.len() >= 2 && *l > *f => (a.len() - 1) as f64 / l.duration_since(*f).as_secs_f64(),
                _ => 0.0,
            }
        };
        PipelineStats {
            frames_received: self.received.load(Ordering::Relaxed),
            frames_dropped: self.dropped.load(Ordering::Relaxed),
            out_of_order: self.out_of_order.load(Ordering::Relaxed),
            crc_failures: self.crc_failures.load(Ordering::Relaxed),
            sequence_gaps: self.gaps.load(Ordering::Relaxed),
            current_rate: rate,
        }
    }
}

struct SensorWorker {
    queue: Mutex<VecDeque<FramePacket>>,
    ready: Condvar,
    counters: SensorCounters,
}

impl SensorWorker {
    /// Bounded enqueue; a full queue loses its oldest frame.
    fn enqueue(&self, p: FramePacket, capacity: usize) {
        let mut q = self.queue.lock().expect("lock");
        if q.len() >= capacity.max(1) {
            q.pop_front();
            self.counters.dropped.fetch_add(1, Ordering::Relaxed);
        }
        q.push_back(p);
        self.ready.notify_one();
    }
}

/// Restores sequence order within a bounded window. Packets older than
/// the next expected number are dropped; a gap is given up on once more
/// than `window` packets wait behind it. Output starts only after the
/// first `window + 1` packets, from the lowest of them.
struct Reorder {
    window: usize,
    next: Option<u32>,
    max_seen: Option<u32>,
    pending: BTreeMap<u32, FramePacket>,
}

impl Reorder {
    fn new(window: usize) -> Self {
        Self { window, next: None, max_seen: None, pending: BTreeMap::new() }
    }

    fn push(&mut self, p: FramePacket, counters: &SensorCounters) -> Vec<FramePacket> {
        if self.max_seen.is_some_and(|m| p.seq_no < m) {
            counters.out_of_order.fetch_add(1, Ordering::Relaxed);
        }
        self.max_seen = Some(self.max_seen.map_or(p.seq_no, |m| m.max(p.seq_no)));
        if self.next.is_some_and(|n| p.seq_no < n) || self.pending.contains_key(&p.seq_no) {
            counters.dropped.fetch_add(1, Ordering::Relaxed);
            return Vec::new();
        }
        self.pending.insert(p.seq_no, p);
        if self.next.is_none() {
            // the stream starts at the lowest number seen once the window fills
            if self.pending.len() <= self.window {
                return Vec::new();
            }
            self.next = self.pending.keys().next().copied();
        }
        let mut out = Vec::new();
        loop {
            let next = self.next.expect("set above");
            if let Some(p) = self.pending.remove(&next) {
                self.next = Some(next.wrapping_add(1));
                out.push(p);
            } else if self.pending.len() > self.window {
                let (seq, p) = self.pending.pop_first().expect("non-empty");
                counters.gaps.fetch_add(u64::from(seq.wrapping_sub(next)), Ordering::Relaxed);
                self.next = Some(seq.wrapping_add(1));
                out.push(p);
            } else {
                break;
            }
        }
        out
    }

    fn flush(&mut self, counters: &SensorCounters) -> Vec<FramePacket> {
        let out: Vec<FramePacket> = std::mem::take(&mut self.pending).into_values().collect();
        for p in &out {
            if let Some(next) = self.next {
                counters.gaps.fetch_add(u64::from(p.seq_no.wrapping_sub(next)), Ordering::Relaxed);
            }
            self.next = Some(p.seq_no.wrapping_add(1));
        }
        out
    }
}

struct Shared {
    config: PipelineConfig,
    topology: SkeletonTopology,
    providers: ProviderFactory,
    sensors: Mutex<BTreeMap<u16, Arc<SensorWorker>>>,
    workers: Mutex<Vec<JoinHandle<()>>>,
    connections: Mutex<Vec<JoinHandle<()>>>,
    connection_count: AtomicU64,
    events: Mutex<Vec<SensorEvent>>,
    sink: Mutex<Option<Box<dyn Write + Send>>>,
    unrouted_crc: AtomicU64,
    malformed: AtomicU64,
    errors: Mutex<Vec<String>>,
    stopping: AtomicBool,
    inputs_closed: AtomicBool,
    deadline: Mutex<Option<Instant>>,
}

impl Shared {
    fn emit(&self, sensor_id: u16, events: Vec<FallEvent>) {
        if events.is_empty() {
            return;
        }
        let mut sink = self.sink.lock().expect("lock");
        let mut all = self.events.lock().expect("lock");
        for event in events {
            let e = SensorEvent { sensor_id, event };
            if let Some(w) = sink.as_mut() {
                let line = serde_json::to_string(&e).expect("events serialize");
                if let Err(err) = writeln!(w, "{line}").and_then(|_| w.flush()) {
                    self.errors.lock().expect("lock").push(format!("event sink: {err}"));
                }
            }
            all.push(e);
        }
    }

    fn worker_for(self: &Arc<Self>, sensor_id: u16) -> Arc<SensorWorker> {
        let mut sensors = self.sensors.lock().expect("lock");
        if let Some(w) = sensors.get(&sensor_id) {
            return w.clone();
        }
        let worker = Arc::new(SensorWorker {
            queue: Mutex::new(VecDeque::new()),
            ready: Condvar::new(),
            counters: SensorCounters::default(),
        });
        sensors.insert(sensor_id, worker.clone());
        let (shared, w) = (self.clone(), worker.clone());
        let handle = std::thread::Builder::new()
            .name(format!("sensor-{sensor_id}"))
            .spawn(move || shared.run_worker(sensor_id, &w))
            .expect("spawn sensor worker");
        self.workers.lock().expect("lock").push(handle);
        worker
    }

    fn past_deadline(&self) -> bool {
        self.deadline.lock().expect("lock").is_some_and(|d| Instant::now() > d)
    }

    fn run_worker(&self, sensor_id: u16, worker: &SensorWorker) {
        let provider = (self.providers)(sensor_id);
        let mut pipeline = match SensorPipeline::new(sensor_id, self.config, &self.topology, provider) {
            Ok(p) => p,
            Err(e) => {
                self.errors.lock().expect("lock").push(format!("sensor {sensor_id}: {e}"));
                return;
            }
        };
        let mut reorder = Reorder::new(self.config.reorder_window);
        let mut failed = false;
        let mut process = |p: FramePacket, pipeline: &mut SensorPipeline| {
            if failed {
                return;
            }
            match pipeline.process(&p.frame) {
                Ok(out) => self.emit(sensor_id, out.events),
                Err(e) => {
                    failed = true;
                    self.errors.lock().expect("lock").push(format!("sensor {sensor_id}: {e}"));
                }
            }
        };
        loop {
            let batch: Vec<FramePacket> = {
                let mut q = worker.queue.lock().expect("lock");
                while q.is_empty() && !self.inputs_closed.load(Ordering::Acquire) {
                    q = worker.ready.wait_timeout(q, POLL).expect("lock").0;
                }
                if q.is_empty() {
                    break;
                }
                if self.inputs_closed.load(Ordering::Acquire) && self.past_deadline() {
                    worker.counters.dropped.fetch_add(q.len() as u64, Ordering::Relaxed);
                    q.clear();
                    break;
                }
                q.drain(..).collect()
            };
            for p in batch {
                for ready in reorder.push(p, &worker.counters) {
                    process(ready, &mut pipeline);
                }
            }
        }
        for ready in reorder.flush(&worker.counters) {
            process(ready, &mut pipeline);
        }
        self.emit(sensor_id, pipeline.finish());
    }

    fn handle_packet(self: &Arc<Self>, bytes: &[u8]) {
        match decode_frame(bytes) {
            Ok(p) => {
                let worker = self.worker_for(p.sensor_id);
                worker.counters.arrived();
                worker.enqueue(p, self.config.queue_capacity);
            }
            Err(DecodeError::CrcMismatch { .. }) => {
                let sensor = u16::from_le_bytes([bytes[5], bytes[6]]);
                match self.sensors.lock().expect("lock").get(&sensor) {
                    Some(w) => w.counters.crc_failures.fetch_add(1, Ordering::Relaxed),
                    None => self.unrouted_crc.fetch_add(1, Ordering::Relaxed),
                };
            }
            Err(_) => {
                self.malformed.fetch_add(1, Ordering::Relaxed);
            }
        }
    }

    /// Reads packets until the peer closes, the framing breaks, or the
    /// server stops and the socket has gone quiet.
    fn run_connection(self: &Arc<Self>, mut stream: TcpStream) {
        if stream.set_read_timeout(Some(POLL)).is_err() {
            return;
        }
        let mut buf: Vec<u8> = Vec::new();
        let mut chunk = vec![0u8; 64 * 1024];
        loop {
            match stream.read(&mut chunk) {
                Ok(0) => break,
                Ok(n) => buf.extend_from_slice(&chunk[..n]),
                Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {
                    if self.stopping.load(Ordering::Acquire) {
                        break;
                    }
                    continue;
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(_) => break,
            }
            let mut at = 0;
            while buf.len() - at >= 4 {
                let len = u32::from_le_bytes(buf[at..at + 4].try_into().expect("4 bytes")) as usize;
                if len > MAX_FRAMED_LEN {
                    self.malformed.fetch_add(1, Ordering::Relaxed);
                    return;
                }
                if buf.len() - at - 4 < len {
                    break;
                }
                self.handle_packet(&buf[at + 4..at + 4 + len]);
                at += 4 + len;
            }
            buf.drain(..at);
            if self.stopping.load(Ordering::Acquire) && self.past_deadline() {
                break;
            }
        }
    }

    fn stats(&self) -> ServerStats {
        ServerStats {
            sensors: self.sensors.lock().expect("lock").iter().map(|(id, w)| (*id, w.counters.snapshot())).collect(),
            unrouted_crc_failures: self.unrouted_crc.load(Ordering::Relaxed),
            malformed_packets: self.malformed.load(Ordering::Relaxed),
            connections: self.connection_count.load(Ordering::Relaxed),
            pipeline_errors: self.errors.lock().expect("lock").clone(),
        }
    }
}

/// Final state after a shutdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServeReport {
    pub events: Vec<SensorEvent>,
    pub stats: ServerStats,
}

/// A running service; dropping it without [`ServerHandle::shutdown`]
/// leaves the threads running until the process exits.
pub struct ServerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    accept: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stats(&self) -> ServerStats {
        self.shared.stats()
    }

    /// Events emitted so far, in emission order.
    pub fn events(&self) -> Vec<SensorEvent> {
        self.shared.events.lock().expect("lock").clone()
    }

    /// Stops accepting, reads what clients already sent, drains every
    /// queue (up to the configured deadline) and finishes each detector.
    pub fn shutdown(mut self) -> ServeReport {
        let deadline = Instant::now() + Duration::from_millis(self.shared.config.shutdown_deadline_ms);
        *self.shared.deadline.lock().expect("lock") = Some(deadline);
        self.shared.stopping.store(true, Ordering::Release);
        if let Some(a) = self.accept.take() {
            let _ = a.join();
        }
        let conns: Vec<_> = std::mem::take(&mut *self.shared.connections.lock().expect("lock"));
        for c in conns {
            let _ = c.join();
        }
        self.shared.inputs_closed.store(true, Ordering::Release);
        for w in self.shared.sensors.lock().expect("lock").values() {
            w.ready.notify_all();
        }
        let workers: Vec<_> = std::mem::take(&mut *self.shared.workers.lock().expect("lock"));
        for w in workers {
            let _ = w.join();
        }
        if let Some(s) = self.shared.sink.lock().expect("lock").as_mut() {
            let _ = s.flush();
        }
        ServeReport { events: self.events(), stats: self.stats() }
    }
}

/// Binds `listen` and serves until [`ServerHandle::shutdown`]. Events are
/// collected in memory and, when a sink is given, written to it as JSON
/// lines as they happen.
pub fn serve(
    listen: impl ToSocketAddrs,
    config: PipelineConfig,
    topology: SkeletonTopology,
    providers: ProviderFactory,
    sink: Option<Box<dyn Write + Send>>,
) -> io::Result<ServerHandle> {
    config
        .detector
        .validate()
        .and_then(|_| config.mhi.validate().map_err(|e| crate::detector::DetectorError::InvalidConfig(e.to_string())))
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
    let listener = TcpListener::bind(listen)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let shared = Arc::new(Shared {
        config,
        topology,
        providers,
        sensors: Mutex::new(BTreeMap::new()),
        workers: Mutex::new(Vec::new()),
        connections: Mutex::new(Vec::new()),
        connection_count: AtomicU64::new(0),
        events: Mutex::new(Vec::new()),
        sink: Mutex::new(sink),
        unrouted_crc: AtomicU64::new(0),
        malformed: AtomicU64::new(0),
        errors: Mutex::new(Vec::new()),
        stopping: AtomicBool::new(false),
        inputs_closed: AtomicBool::new(false),
        deadline: Mutex::new(None),
    });
    let s = shared.clone();
    let accept = std::thread::Builder::new().name("accept".into()).spawn(move || {
        while !s.stopping.load(Ordering::Acquire) {
            match listener.accept() {
                Ok((stream, _)) => {
                    let _ = stream.set_nonblocking(false);
                    let _ = stream.set_nodelay(true);
                    s.connection_count.fetch_add(1, Ordering::Relaxed);
                    let c = s.clone();
                    let h = std::thread::spawn(move || c.run_connection(stream));
                    s.connections.lock().expect("lock").push(h);
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => std::thread::sleep(Duration::from_millis(5)),
                Err(_) => std::thread::sleep(Duration::from_millis(5)),
            }
        }
    })?;
    Ok(ServerHandle { addr, shared, accept: Some(accept) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::TemperatureFrame;

    fn packet(seq: u32) -> FramePacket {
        FramePacket { sensor_id: 1, seq_no: seq, frame: TemperatureFrame::uniform(2, 2, 22.0, seq as u64, seq) }
    }

    fn order(r: &mut Reorder, c: &SensorCounters, seqs: &[u32]) -> Vec<u32> {
        seqs.iter().flat_map(|&s| r.push(packet(s), c)).map(|p| p.seq_no).collect()
    }

    #[test]
    fn in_order_packets_pass_straight_through() {
        let c = SensorCounters::default();
        let mut r = Reorder::new(8);
        let mut out = order(&mut r, &c, &[5, 6, 7]);
        out.extend(r.flush(&c).iter().map(|p| p.seq_no));
        assert_eq!(out, vec![5, 6, 7]);
        assert_eq!(c.out_of_order.load(Ordering::Relaxed), 0);
    }

    #[test]
    fn swapped_packets_are_reordered() {
        let c = SensorCounters::default();
        let mut r = Reorder::new(8);
        assert_eq!(order(&mut r, &c, &[0, 2, 1, 3, 4, 5, 6, 7, 8]), (0..9).collect::<Vec<_>>());
        assert_eq!(c.out_of_order.load(Ordering::Relaxed), 1);
        assert_eq!(c.dropped.load(Ordering::Relaxed), 0);
    }

    #[test]
    fn a_lost_packet_is_given_up_after_the_window() {
        let c = SensorCounters::default();
        let mut r = Reorder::new(2);
        let out = order(&mut r, &c, &[0, 2, 3, 4, 1]);
        assert_eq!(out, vec![0, 2, 3, 4]);
        assert_eq!(c.dropped.load(Ordering::Relaxed), 1);
        assert_eq!(c.gaps.load(Ordering::Relaxed), 1);
    }

    #[test]
    fn a_late_first_packet_still_starts_the_stream() {
        let c = SensorCounters::default();
        let mut r = Reorder::new(3);
        assert_eq!(order(&mut r, &c, &[2, 0, 1, 3, 4]), vec![0, 1, 2, 3, 4]);
        assert_eq!(c.dropped.load(Ordering::Relaxed), 0);
    }

    #[test]
    fn flush_counts_gaps_left_at_the_end() {
        let c = SensorCounters::default();
        let mut r = Reorder::new(8);
        assert_eq!(order(&mut r, &c, &[0, 3, 5]), Vec::<u32>::new());
        let rest: Vec<u32> = r.flush(&c).iter().map(|p| p.seq_no).collect();
        assert_eq!(rest, vec![0, 3, 5]);
        assert_eq!(c.gaps.load(Ordering::Relaxed), 3);
    }

    #[test]
    fn full_queue_drops_the_oldest() {
        let w = SensorWorker { queue: Mutex::new(VecDeque::new()), ready: Condvar::new(), counters: SensorCounters::default() };
        for s in 0..5 {
            w.enqueue(packet(s), 3);
        }
        let q: Vec<u32> = w.queue.lock().unwrap().iter().map(|p| p.seq_no).collect();
        assert_eq!(q, vec![2, 3, 4]);
        assert_eq!(w.counters.dropped.load(Ordering::Relaxed), 2);
    }
}
