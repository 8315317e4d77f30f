//! Sensor frame packets. All integers little-endian:
//!
//! | bytes | field |
//! |---|---|
//! | 4 | magic `TAF1` |
//! | 1 | version (1) |
//! | 2 | sensor id |
//! | 4 | sequence number |
//! | 8 | timestamp, microseconds |
//! | 2 | width |
//! | 2 | height |
//! | 2·w·h | pixels, signed centi-degrees Celsius, row-major |
//! | 4 | CRC-32 (IEEE) of everything before it |

use std::io::{self, Read, Write};

use crate::frame::TemperatureFrame;
use crate::grid::Grid;

pub const MAGIC: [u8; 4] = *b"TAF1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 23;
pub const CRC_LEN: usize = 4;
/// Largest length prefix accepted on a byte stream.
pub const MAX_FRAMED_LEN: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramePacket {
    pub sensor_id: u16,
    pub seq_no: u32,
    /// Carries the packet's timestamp and sequence number.
    pub frame: TemperatureFrame,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("frame {0}x{1} does not fit 16-bit dimensions")]
    DimensionOverflow(usize, usize),
    #[error("frame has no pixels")]
    EmptyFrame,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("truncated packet: {got} of {needed} bytes")]
    Truncated { needed: usize, got: usize },
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("zero-sized frame")]
    EmptyFrame,
    #[error("{extra} bytes after the packet")]
    TrailingBytes { extra: usize },
    #[error("CRC mismatch: computed {computed:08x}, packet says {stored:08x}")]
    CrcMismatch { computed: u32, stored: u32 },
}

pub fn packet_len(width: usize, height: usize) -> usize {
    HEADER_LEN + 2 * width * height + CRC_LEN
}

pub fn encode_frame(frame: &TemperatureFrame, sensor_id: u16, seq_no: u32) -> Result<Vec<u8>, EncodeError> {
    let (w, h) = frame.grid.dims();
    if w > u16::MAX as usize || h > u16::MAX as usize {
        return Err(EncodeError::DimensionOverflow(w, h));
    }
    if w == 0 || h == 0 {
        return Err(EncodeError::EmptyFrame);
    }
    let mut out = Vec::with_capacity(packet_len(w, h));
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&sensor_id.to_le_bytes());
    out.extend_from_slice(&seq_no.to_le_bytes());
    out.extend_from_slice(&frame.timestamp_us.to_le_bytes());
    out.extend_from_slice(&(w as u16).to_le_bytes());
    out.extend_from_slice(&(h as u16).to_le_bytes());
    for v in frame.grid.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

/// Validates and parses one packet occupying all of `bytes`.
pub fn decode_frame(bytes: &[u8]) -> Result<FramePacket, DecodeError> {
    let truncated = |needed: usize| DecodeError::Truncated { needed, got: bytes.len() };
    if bytes.len() < MAGIC.len() {
        return Err(truncated(HEADER_LEN + CRC_LEN));
    }
    if bytes[..4] != MAGIC {
        return Err(DecodeError::BadMagic(bytes[..4].try_into().expect("4 bytes")));
    }
    if bytes.len() < 5 {
        return Err(truncated(HEADER_LEN + CRC_LEN));
    }
    if bytes[4] != VERSION {
        return Err(DecodeError::UnsupportedVersion(bytes[4]));
    }
    if bytes.len() < HEADER_LEN {
        return Err(truncated(HEADER_LEN + CRC_LEN));
    }
    let (w, h) = (le_u16(bytes, 19) as usize, le_u16(bytes, 21) as usize);
    if w == 0 || h == 0 {
        return Err(DecodeError::EmptyFrame);
    }
    let needed = packet_len(w, h);
    if bytes.len() < needed {
        return Err(truncated(needed));
    }
    if bytes.len() > needed {
        return Err(DecodeError::TrailingBytes { extra: bytes.len() - needed });
    }
    let body = &bytes[..needed - CRC_LEN];
    let stored = le_u32(bytes, needed - CRC_LEN);
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(DecodeError::CrcMismatch { computed, stored });
    }
    let sensor_id = le_u16(bytes, 5);
    let seq_no = le_u32(bytes, 7);
    let timestamp_us = u64::from_le_bytes(bytes[11..19].try_into().expect("8 bytes"));
    let pixels = body[HEADER_LEN..].chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect();
    let grid = Grid::from_vec(w, h, pixels).expect("payload length checked");
    Ok(FramePacket { sensor_id, seq_no, frame: TemperatureFrame { grid, timestamp_us, seq_no } })
}

/// Writes `packet` behind a 4-byte little-endian length prefix.
pub fn write_framed(mut w: impl Write, packet: &[u8]) -> io::Result<()> {
    let len = u32::try_from(packet.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "packet too long"))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(packet)
}

/// Reads one length-prefixed packet; `Ok(None)` on a clean end of stream.
pub fn read_framed(mut r: impl Read) -> io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    let len = u32::from_le_bytes(len) as usize;
    if len > MAX_FRAMED_LEN {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("length prefix {len} exceeds limit")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(Some(buf))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame() -> TemperatureFrame {
        let data = (0..80 * 62).map(|i| (i as i16).wrapping_mul(37)).collect();
        TemperatureFrame { grid: Grid::from_vec(80, 62, data).unwrap(), timestamp_us: 1_234_567, seq_no: 7 }
    }

    #[test]
    fn reference_packet_is_9947_bytes() {
        assert_eq!(encode_frame(&frame(), 3, 7).unwrap().len(), 9947);
        assert_eq!(packet_len(80, 62), 9947);
    }

    #[test]
    fn round_trip() {
        let bytes = encode_frame(&frame(), 3, 7).unwrap();
        let p = decode_frame(&bytes).unwrap();
        assert_eq!(p.seq_no, 7);
        assert_eq!(p.sensor_id, 3);
        assert_eq!(p.frame, frame());
    }

    #[test]
    fn every_truncation_is_reported() {
        let bytes = encode_frame(&frame(), 3, 7).unwrap();
        for n in 0..bytes.len() {
            assert!(matches!(decode_frame(&bytes[..n]), Err(DecodeError::Truncated { .. })), "prefix {n}");
        }
    }

    #[test]
    fn payload_flip_fails_the_crc() {
        let mut bytes = encode_frame(&frame(), 3, 7).unwrap();
        bytes[100] ^= 0x01;
        assert!(matches!(decode_frame(&bytes), Err(DecodeError::CrcMismatch { .. })));
    }

    #[test]
    fn header_errors() {
        let mut bytes = encode_frame(&frame(), 3, 7).unwrap();
        bytes[4] = 2;
        assert_eq!(decode_frame(&bytes), Err(DecodeError::UnsupportedVersion(2)));
        bytes[0] = b'X';
        assert!(matches!(decode_frame(&bytes), Err(DecodeError::BadMagic(_))));
        let mut long = encode_frame(&frame(), 3, 7).unwrap();
        long.push(0);
        assert_eq!(decode_frame(&long), Err(DecodeError::TrailingBytes { extra: 1 }));
    }

    #[test]
    fn framing_round_trip() {
        let mut buf = Vec::new();
        write_framed(&mut buf, b"abc").unwrap();
        write_framed(&mut buf, b"").unwrap();
        let mut r = buf.as_slice();
        assert_eq!(read_framed(&mut r).unwrap().unwrap(), b"abc");
        assert_eq!(read_framed(&mut r).unwrap().unwrap(), b"");
        assert!(read_framed(&mut r).unwrap().is_none());
        assert!(read_framed(&[1u8, 0][..]).is_err());
    }
}
