//! `.taf` recordings: a fixed header followed by length-prefixed packets,
//! byte for byte as they travel on the wire.
//!
//! Header, little-endian: magic `TAFR`, format version (u8), content type
//! (u8: 0 temperature, 1 motion history scaled by 10⁴), sensor id (u16),
//! width (u16), height (u16), frame rate (f64), CRC-32 of the preceding
//! bytes (u32).

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::path::Path;
use std::time::{Duration, Instant};

use super::protocol::{decode_frame, encode_frame, read_framed, write_framed, DecodeError, EncodeError, FramePacket};
use crate::frame::TemperatureFrame;
use crate::grid::Grid;
use crate::motion::MotionHistoryImage;

pub const RECORDING_MAGIC: [u8; 4] = *b"TAFR";
pub const RECORDING_VERSION: u8 = 1;
pub const RECORDING_HEADER_LEN: usize = 24;
/// Motion history values are stored as `round(M * MHI_SCALE)`.
pub const MHI_SCALE: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContentType {
    Temperature,
    MotionHistory,
}

impl ContentType {
    fn code(self) -> u8 {
        match self {
            ContentType::Temperature => 0,
            ContentType::MotionHistory => 1,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(ContentType::Temperature),
            1 => Some(ContentType::MotionHistory),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordingHeader {
    pub content: ContentType,
    pub sensor_id: u16,
    pub width: u16,
    pub height: u16,
    pub frame_rate: f64,
}

impl RecordingHeader {
    pub fn to_bytes(&self) -> [u8; RECORDING_HEADER_LEN] {
        let mut b = [0u8; RECORDING_HEADER_LEN];
        b[..4].copy_from_slice(&RECORDING_MAGIC);
        b[4] = RECORDING_VERSION;
        b[5] = self.content.code();
        b[6..8].copy_from_slice(&self.sensor_id.to_le_bytes());
        b[8..10].copy_from_slice(&self.width.to_le_bytes());
        b[10..12].copy_from_slice(&self.height.to_le_bytes());
        b[12..20].copy_from_slice(&self.frame_rate.to_le_bytes());
        let crc = crc32fast::hash(&b[..20]);
        b[20..24].copy_from_slice(&crc.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8; RECORDING_HEADER_LEN]) -> Result<Self, RecordingError> {
        if b[..4] != RECORDING_MAGIC {
            return Err(RecordingError::Header("not a .taf recording".into()));
        }
        if b[4] != RECORDING_VERSION {
            return Err(RecordingError::Header(format!("unsupported recording version {}", b[4])));
        }
        let crc = u32::from_le_bytes(b[20..24].try_into().expect("4 bytes"));
        if crc != crc32fast::hash(&b[..20]) {
            return Err(RecordingError::Header("header CRC mismatch".into()));
        }
        let content = ContentType::from_code(b[5]).ok_or_else(|| RecordingError::Header(format!("content type {}", b[5])))?;
        Ok(Self {
            content,
            sensor_id: u16::from_le_bytes([b[6], b[7]]),
            width: u16::from_le_bytes([b[8], b[9]]),
            height: u16::from_le_bytes([b[10], b[11]]),
            frame_rate: f64::from_le_bytes(b[12..20].try_into().expect("8 bytes")),
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RecordingError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("bad recording header: {0}")]
    Header(String),
    #[error("packet {index}: {source}")]
    Packet { index: usize, source: DecodeError },
    #[error("packet {index}: sequence number {seq_no} does not follow {prev}")]
    Sequence { index: usize, prev: u32, seq_no: u32 },
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// Streams packets into a recording.
pub struct RecordingWriter<W: Write> {
    out: W,
    last_seq: Option<u32>,
    count: usize,
}

impl<W: Write> RecordingWriter<W> {
    pub fn new(mut out: W, header: &RecordingHeader) -> io::Result<Self> {
        out.write_all(&header.to_bytes())?;
        Ok(Self { out, last_seq: None, count: 0 })
    }

    /// Appends an already encoded packet after checking it decodes and
    /// continues the sequence.
    pub fn write_packet(&mut self, packet: &[u8]) -> Result<(), RecordingError> {
        let p = decode_frame(packet).map_err(|source| RecordingError::Packet { index: self.count, source })?;
        if let Some(prev) = self.last_seq {
            if p.seq_no <= prev {
                return Err(RecordingError::Sequence { index: self.count, prev, seq_no: p.seq_no });
            }
        }
        write_framed(&mut self.out, packet)?;
        self.last_seq = Some(p.seq_no);
        self.count += 1;
        Ok(())
    }

    pub fn write_frame(&mut self, frame: &TemperatureFrame, sensor_id: u16) -> Result<(), RecordingError> {
        self.write_packet(&encode_frame(frame, sensor_id, frame.seq_no)?)
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// A whole recording in memory, packets kept as raw bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub header: RecordingHeader,
    pub packets: Vec<Vec<u8>>,
}

impl Recording {
    pub fn read_from(mut r: impl Read) -> Result<Self, RecordingError> {
        let mut hb = [0u8; RECORDING_HEADER_LEN];
        r.read_exact(&mut hb)?;
        let header = RecordingHeader::from_bytes(&hb)?;
        let mut packets = Vec::new();
        let mut prev: Option<u32> = None;
        while let Some(p) = read_framed(&mut r)? {
            let index = packets.len();
            let decoded = decode_frame(&p).map_err(|source| RecordingError::Packet { index, source })?;
            if let Some(prev) = prev {
                if decoded.seq_no <= prev {
                    return Err(RecordingError::Sequence { index, prev, seq_no: decoded.seq_no });
                }
            }
            prev = Some(decoded.seq_no);
            packets.push(p);
        }
        Ok(Self { header, packets })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RecordingError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    pub fn write_to(&self, w: impl Write) -> Result<(), RecordingError> {
        let mut rw = RecordingWriter::new(w, &self.header)?;
        for p in &self.packets {
            rw.write_packet(p)?;
        }
        rw.finish()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RecordingError> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn decoded(&self) -> Vec<FramePacket> {
        self.packets.iter().map(|p| decode_frame(p).expect("validated on load")).collect()
    }

    pub fn frames(&self) -> Vec<TemperatureFrame> {
        self.decoded().into_iter().map(|p| p.frame).collect()
    }

    /// Missing sequence-number ranges `(first_missing, count)`.
    pub fn gaps(&self) -> Vec<(u32, u32)> {
        let seqs: Vec<u32> = self.decoded().iter().map(|p| p.seq_no).collect();
        seqs.windows(2).filter(|w| w[1] > w[0] + 1).map(|w| (w[0] + 1, w[1] - w[0] - 1)).collect()
    }

    /// Seconds between the first and last packet timestamps.
    pub fn duration(&self) -> f64 {
        let d = self.decoded();
        match (d.first(), d.last()) {
            (Some(a), Some(b)) => (b.frame.timestamp_us.saturating_sub(a.frame.timestamp_us)) as f64 * 1e-6,
            _ => 0.0,
        }
    }
}

/// Temperature frames to a recording, using each frame's own sequence number.
pub fn record_frames(
    frames: &[TemperatureFrame],
    sensor_id: u16,
    frame_rate: f64,
    w: impl Write,
) -> Result<(), RecordingError> {
    let (width, height) = frames.first().map_or((0, 0), |f| f.grid.dims());
    let header = RecordingHeader {
        content: ContentType::Temperature,
        sensor_id,
        width: u16::try_from(width).map_err(|_| EncodeError::DimensionOverflow(width, height))?,
        height: u16::try_from(height).map_err(|_| EncodeError::DimensionOverflow(width, height))?,
        frame_rate,
    };
    let mut rw = RecordingWriter::new(w, &header)?;
    for f in frames {
        rw.write_frame(f, sensor_id)?;
    }
    rw.finish()?;
    Ok(())
}

/// Copies length-prefixed packets from a byte stream into a recording until
/// the stream ends. Returns the number of packets written.
pub fn record_stream(input: impl Read, header: &RecordingHeader, out: impl Write) -> Result<usize, RecordingError> {
    let mut input = input;
    let mut rw = RecordingWriter::new(out, header)?;
    while let Some(p) = read_framed(&mut input)? {
        rw.write_packet(&p)?;
    }
    let n = rw.count;
    rw.finish()?;
    Ok(n)
}

/// Motion history as a packet payload: values scaled by 10⁴.
pub fn mhi_to_frame(mhi: &MotionHistoryImage, seq_no: u32) -> TemperatureFrame {
    let g = mhi.grid();
    let data = g.data().iter().map(|v| (v * MHI_SCALE).round() as i16).collect();
    TemperatureFrame {
        grid: Grid::from_vec(g.width(), g.height(), data).expect("same size"),
        timestamp_us: crate::frame::seconds_to_us(mhi.timestamp()),
        seq_no,
    }
}

pub fn frame_to_mhi(frame: &TemperatureFrame) -> Result<MotionHistoryImage, crate::motion::MotionError> {
    MotionHistoryImage::new(frame.grid.map(|&v| v as f64 / MHI_SCALE), frame.timestamp_secs())
}

/// Motion history sequence to a recording flagged as MHI content.
pub fn record_mhi(
    mhis: &[MotionHistoryImage],
    sensor_id: u16,
    frame_rate: f64,
    first_seq_no: u32,
    w: impl Write,
) -> Result<(), RecordingError> {
    let (width, height) = mhis.first().map_or((0, 0), |m| m.grid().dims());
    let header = RecordingHeader {
        content: ContentType::MotionHistory,
        sensor_id,
        width: u16::try_from(width).map_err(|_| EncodeError::DimensionOverflow(width, height))?,
        height: u16::try_from(height).map_err(|_| EncodeError::DimensionOverflow(width, height))?,
        frame_rate,
    };
    let mut rw = RecordingWriter::new(w, &header)?;
    for (i, m) in mhis.iter().enumerate() {
        rw.write_frame(&mhi_to_frame(m, first_seq_no.wrapping_add(i as u32)), sensor_id)?;
    }
    rw.finish()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub packets: usize,
    pub wall_time: Duration,
    /// Send-time error of each packet against its schedule.
    pub lateness: Vec<Duration>,
}

/// Sends the recording's packets to `to`, spaced by their timestamps
/// divided by `rate_multiplier`. Packets go out byte-identical to the file.
pub fn replay(recording: &Recording, to: impl ToSocketAddrs, rate_multiplier: f64) -> Result<ReplayReport, RecordingError> {
    let stream = TcpStream::connect(to)?;
    stream.set_nodelay(true)?;
    replay_into(recording, stream, rate_multiplier)
}

/// [`replay`] into any writer.
pub fn replay_into(recording: &Recording, mut out: impl Write, rate_multiplier: f64) -> Result<ReplayReport, RecordingError> {
    if !(rate_multiplier > 0.0 && rate_multiplier.is_finite()) {
        return Err(RecordingError::Io(io::Error::new(io::ErrorKind::InvalidInput, "rate multiplier must be positive")));
    }
    let decoded = recording.decoded();
    let t0 = decoded.first().map_or(0, |p| p.frame.timestamp_us);
    let start = Instant::now();
    let mut lateness = Vec::with_capacity(decoded.len());
    for (raw, p) in recording.packets.iter().zip(&decoded) {
        let offset = p.frame.timestamp_us.saturating_sub(t0) as f64 * 1e-6 / rate_multiplier;
        let due = start + Duration::from_secs_f64(offset);
        let now = Instant::now();
        if due > now {
            std::thread::sleep(due - now);
        }
        lateness.push(Instant::now().saturating_duration_since(due));
        write_framed(&mut out, raw)?;
        out.flush()?;
    }
    Ok(ReplayReport { packets: decoded.len(), wall_time: start.elapsed(), lateness })
}
