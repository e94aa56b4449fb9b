//! Per-frame radar packet wire format.
//!
//! ```text
//! offset  size  field
//!      0     8  magic 02 01 04 03 06 05 08 07
//!      8     4  version (u32, currently 1)
//!     12     4  total_len (u32, whole packet including magic and crc)
//!     16     4  radar_id (u32)
//!     20     4  seq (u32)
//!     24     8  timestamp_us (u64)
//!     32     4  num_points (u32)
//!     36  20*n  points: x, y, z, energy, speed as f32
//!   36+20n   4  CRC-32 (IEEE) over bytes [8, 36+20n)
//! ```
//!
//! All integers and floats are little-endian. An empty packet is 40 bytes.
//! Recordings (`.mmr`) are raw concatenations of packets.

use thiserror::Error;

use crate::model::RadarPoint;

pub const MAGIC: [u8; 8] = [0x02, 0x01, 0x04, 0x03, 0x06, 0x05, 0x08, 0x07];
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 36;
pub const POINT_LEN: usize = 20;
pub const CRC_LEN: usize = 4;
/// Largest packet the decoder will accept.
pub const MAX_PACKET_LEN: usize = 1 << 20;
pub const MAX_POINTS: usize = 65_535;

/// One radar's frame as carried on the wire. Points are radar-local.
#[derive(Clone, Debug, PartialEq)]
pub struct FramePacket {
    pub radar_id: u32,
    pub seq: u32,
    pub timestamp_us: u64,
    pub points: Vec<RadarPoint>,
}

impl FramePacket {
    pub fn encoded_len(&self) -> usize {
        packet_len(self.points.len())
    }
}

pub const fn packet_len(num_points: usize) -> usize {
    HEADER_LEN + num_points * POINT_LEN + CRC_LEN
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("packet holds {points} points; the wire format allows at most {max}")]
    Capacity { points: usize, max: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BadReason {
    Truncated,
    BadMagic,
    BadCrc,
    BadLength,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DecodeOutcome {
    Packet {
        packet: FramePacket,
        bytes_consumed: usize,
    },
    Bad {
        reason: BadReason,
        bytes_consumed: usize,
    },
}

impl DecodeOutcome {
    pub fn bytes_consumed(&self) -> usize {
        match self {
            DecodeOutcome::Packet { bytes_consumed, .. }
            | DecodeOutcome::Bad { bytes_consumed, .. } => *bytes_consumed,
        }
    }

    pub fn packet(&self) -> Option<&FramePacket> {
        match self {
            DecodeOutcome::Packet { packet, .. } => Some(packet),
            DecodeOutcome::Bad { .. } => None,
        }
    }

    pub fn into_packet(self) -> Option<FramePacket> {
        match self {
            DecodeOutcome::Packet { packet, .. } => Some(packet),
            DecodeOutcome::Bad { .. } => None,
        }
    }
}

/// Largest point count whose encoding fits under [`MAX_PACKET_LEN`].
pub const fn max_encodable_points() -> usize {
    let by_len = (MAX_PACKET_LEN - HEADER_LEN - CRC_LEN) / POINT_LEN;
    if by_len < MAX_POINTS {
        by_len
    } else {
        MAX_POINTS
    }
}

pub fn encode(packet: &FramePacket) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::with_capacity(packet.encoded_len());
    encode_into(packet, &mut out)?;
    Ok(out)
}

/// Append the encoding of `packet` to `out`.
pub fn encode_into(packet: &FramePacket, out: &mut Vec<u8>) -> Result<(), CodecError> {
    let n = packet.points.len();
    let max = max_encodable_points();
    if n > max {
        return Err(CodecError::Capacity { points: n, max });
    }
    let total = packet_len(n);
    let start = out.len();
    out.reserve(total);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(total as u32).to_le_bytes());
    out.extend_from_slice(&packet.radar_id.to_le_bytes());
    out.extend_from_slice(&packet.seq.to_le_bytes());
    out.extend_from_slice(&packet.timestamp_us.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for p in &packet.points {
        for v in [p.x, p.y, p.z, p.energy, p.speed] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out[start + MAGIC.len()..]);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(())
}

fn u32_at(buf: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(buf[at..at + 4].try_into().expect("4 bytes"))
}

fn f32_at(buf: &[u8], at: usize) -> f64 {
    f64::from(f32::from_le_bytes(
        buf[at..at + 4].try_into().expect("4 bytes"),
    ))
}

fn find_magic(buf: &[u8], from: usize) -> Option<usize> {
    if buf.len() < MAGIC.len() || from > buf.len() - MAGIC.len() {
        return None;
    }
    buf[from..]
        .windows(MAGIC.len())
        .position(|w| w == MAGIC)
        .map(|i| i + from)
}

/// Length of the longest suffix of `buf` that is a proper prefix of the magic.
fn magic_prefix_suffix(buf: &[u8]) -> usize {
    (1..MAGIC.len())
        .rev()
        .find(|&k| buf.len() >= k && buf[buf.len() - k..] == MAGIC[..k])
        .unwrap_or(0)
}

enum Step {
    Emit(DecodeOutcome),
    NeedMore,
}

/// Decode at most one outcome from the front of `buf`.
fn step(buf: &[u8], eof: bool) -> Step {
    if buf.is_empty() {
        return Step::NeedMore;
    }
    let bad = |reason, bytes_consumed| {
        Step::Emit(DecodeOutcome::Bad {
            reason,
            bytes_consumed,
        })
    };

    if buf.len() < MAGIC.len() || buf[..MAGIC.len()] != MAGIC {
        return match find_magic(buf, 0) {
            Some(at) => bad(BadReason::BadMagic, at),
            None if eof => bad(BadReason::BadMagic, buf.len()),
            None => {
                let keep = magic_prefix_suffix(buf);
                if buf.len() > keep {
                    bad(BadReason::BadMagic, buf.len() - keep)
                } else {
                    Step::NeedMore
                }
            }
        };
    }

    // Resync point after a failure at the start of `buf`.
    let resync = |reason| match find_magic(buf, 1) {
        Some(at) => Step::Emit(DecodeOutcome::Bad {
            reason,
            bytes_consumed: at,
        }),
        None if eof => Step::Emit(DecodeOutcome::Bad {
            reason,
            bytes_consumed: buf.len(),
        }),
        None => Step::NeedMore,
    };

    if buf.len() < HEADER_LEN {
        return if eof {
            resync(BadReason::Truncated)
        } else {
            Step::NeedMore
        };
    }
    let version = u32_at(buf, 8);
    let total = u32_at(buf, 12) as usize;
    let n = u32_at(buf, 32) as usize;
    if version != VERSION {
        return resync(BadReason::BadMagic);
    }
    if total > MAX_PACKET_LEN || n > MAX_POINTS || total != packet_len(n) {
        return resync(BadReason::BadLength);
    }
    if buf.len() < total {
        return if eof {
            resync(BadReason::Truncated)
        } else {
            Step::NeedMore
        };
    }

    let crc_at = total - CRC_LEN;
    let crc = u32_at(buf, crc_at);
    if crc32fast::hash(&buf[MAGIC.len()..crc_at]) != crc {
        // A magic inside the claimed span means this packet was cut short
        // and the next one starts there.
        return match find_magic(&buf[..total], 1) {
            Some(at) => bad(BadReason::Truncated, at),
            None => bad(BadReason::BadCrc, total),
        };
    }

    let points = (0..n)
        .map(|i| {
            let at = HEADER_LEN + i * POINT_LEN;
            RadarPoint::new(
                f32_at(buf, at),
                f32_at(buf, at + 4),
                f32_at(buf, at + 8),
                f32_at(buf, at + 12),
                f32_at(buf, at + 16),
            )
        })
        .collect();
    let packet = FramePacket {
        radar_id: u32_at(buf, 16),
        seq: u32_at(buf, 20),
        timestamp_us: u64::from_le_bytes(buf[24..32].try_into().expect("8 bytes")),
        points,
    };
    Step::Emit(DecodeOutcome::Packet {
        packet,
        bytes_consumed: total,
    })
}

/// Incremental decoder holding the scan state of one stream.
#[derive(Debug, Default)]
pub struct StreamDecoder {
    buf: Vec<u8>,
}

impl StreamDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Bytes held waiting for the rest of a packet.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }

    pub fn feed(&mut self, bytes: &[u8]) -> Vec<DecodeOutcome> {
        self.buf.extend_from_slice(bytes);
        self.drain(false)
    }

    /// Flush everything left as outcomes (end of stream).
    pub fn finish(&mut self) -> Vec<DecodeOutcome> {
        self.drain(true)
    }

    fn drain(&mut self, eof: bool) -> Vec<DecodeOutcome> {
        let mut out = Vec::new();
        let mut at = 0;
        while let Step::Emit(outcome) = step(&self.buf[at..], eof) {
            at += outcome.bytes_consumed();
            out.push(outcome);
        }
        self.buf.drain(..at);
        out
    }
}

/// Decode a complete byte sequence.
pub fn decode_stream(bytes: &[u8]) -> Vec<DecodeOutcome> {
    let mut dec = StreamDecoder::new();
    let mut out = dec.feed(bytes);
    out.extend(dec.finish());
    out
}
