//! Virtual bitstream: bit-exact packing of a [`GridConfig`].
//!
//! Payload layout, in order:
//!
//! 1. memory-interface selects,
//! 2. for each level top to bottom: one 4-bit opcode per PE slot, left to
//!    right, then the selects of the channel below that level (the output
//!    interface after the last level).
//!
//! Selects are `bw` bits wide and written in channel output order
//! (`2 * slot + port`). Fields are packed LSB-first into bytes and the last
//! byte is zero-padded.
//!
//! File framing is a 16-byte little-endian header: magic `PIXV`, `u16`
//! version, `u16` reserved (zero), `u64` grid digest; the payload follows.

use alloc::vec::Vec;
use core::fmt;

use crate::config::{ChannelConfig, GridConfig, Opcode, PeConfig, ShapeError};
use crate::grid::{ChannelSpec, GridError, GridSpec, OPCODE_BITS};

pub const MAGIC: [u8; 4] = *b"PIXV";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitstreamHeader {
    pub format_version: u16,
    pub grid_digest: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualBitstream {
    pub header: BitstreamHeader,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodecError {
    Grid(GridError),
    Shape(ShapeError),
    WrongGrid { expected: u64, found: u64 },
    BadMagic,
    UnsupportedVersion(u16),
    Framing { expected_bytes: usize, found_bytes: usize },
    NonZeroPadding,
    InvalidOpcode { slot: usize, value: u8 },
    InvalidSelect { channel: usize, output: usize, select: u32, predecessors: u32 },
}

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodecError::Grid(e) => write!(f, "{e}"),
            CodecError::Shape(e) => write!(f, "config does not fit grid: {e}"),
            CodecError::WrongGrid { expected, found } => write!(
                f,
                "bitstream was built for grid {found:#018x}, this grid is {expected:#018x}"
            ),
            CodecError::BadMagic => f.write_str("not a virtual bitstream (bad magic)"),
            CodecError::UnsupportedVersion(v) => write!(f, "unsupported bitstream version {v}"),
            CodecError::Framing { expected_bytes, found_bytes } => write!(
                f,
                "payload is {found_bytes} bytes, grid requires {expected_bytes}"
            ),
            CodecError::NonZeroPadding => f.write_str("payload padding bits are not zero"),
            CodecError::InvalidOpcode { slot, value } => write!(f, "slot {slot}: invalid opcode {value}"),
            CodecError::InvalidSelect { channel, output, select, predecessors } => write!(
                f,
                "channel {channel} output {output}: select {select} out of range for {predecessors} predecessors"
            ),
        }
    }
}

impl core::error::Error for CodecError {}

struct BitWriter {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl BitWriter {
    fn with_capacity(bits: u64) -> Self {
        BitWriter { bytes: Vec::with_capacity(bits.div_ceil(8) as usize), bit_len: 0 }
    }

    fn push(&mut self, value: u64, width: u32) {
        for i in 0..width {
            let byte = (self.bit_len / 8) as usize;
            if byte == self.bytes.len() {
                self.bytes.push(0);
            }
            if (value >> i) & 1 == 1 {
                self.bytes[byte] |= 1 << (self.bit_len % 8);
            }
            self.bit_len += 1;
        }
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
}

impl BitReader<'_> {
    fn read(&mut self, width: u32) -> u64 {
        let mut value = 0u64;
        for i in 0..width {
            let bit = (self.bytes[(self.pos / 8) as usize] >> (self.pos % 8)) & 1;
            value |= (bit as u64) << i;
            self.pos += 1;
        }
        value
    }
}

/// Channel below each level, plus the memory interface in front.
fn layout(spec: &GridSpec) -> Result<(Vec<ChannelSpec>, u64), CodecError> {
    let channels = spec.derive_channels().map_err(CodecError::Grid)?;
    let stats = spec.stats().map_err(CodecError::Grid)?;
    Ok((channels, stats.total_config_bits))
}

pub fn encode(cfg: &GridConfig, spec: &GridSpec) -> Result<VirtualBitstream, CodecError> {
    let (channels, total_bits) = layout(spec)?;
    cfg.check_shape(spec, &channels).map_err(CodecError::Shape)?;

    let mut w = BitWriter::with_capacity(total_bits);
    let write_channel = |w: &mut BitWriter, cc: &ChannelConfig, ch: &ChannelSpec| {
        for &s in &cc.selects {
            w.push(s as u64, ch.select_word_width);
        }
    };
    write_channel(&mut w, &cfg.input_distribution, &channels[0]);
    let mut slot = 0;
    for (l, level) in spec.levels.iter().enumerate() {
        for pe in &cfg.pe_configs[slot..slot + level.pe_count as usize] {
            w.push(pe.opcode.bits() as u64, OPCODE_BITS);
        }
        slot += level.pe_count as usize;
        write_channel(&mut w, cfg.channel(l + 1), &channels[l + 1]);
    }
    debug_assert_eq!(w.bit_len, total_bits);

    Ok(VirtualBitstream {
        header: BitstreamHeader { format_version: FORMAT_VERSION, grid_digest: spec.digest() },
        payload: w.bytes,
    })
}

pub fn decode(bits: &VirtualBitstream, spec: &GridSpec) -> Result<GridConfig, CodecError> {
    let (channels, total_bits) = layout(spec)?;
    if bits.header.format_version != FORMAT_VERSION {
        return Err(CodecError::UnsupportedVersion(bits.header.format_version));
    }
    let expected = spec.digest();
    if bits.header.grid_digest != expected {
        return Err(CodecError::WrongGrid { expected, found: bits.header.grid_digest });
    }
    let expected_bytes = total_bits.div_ceil(8) as usize;
    if bits.payload.len() != expected_bytes {
        return Err(CodecError::Framing { expected_bytes, found_bytes: bits.payload.len() });
    }
    let pad = (expected_bytes as u64 * 8 - total_bits) as u32;
    if pad > 0 && bits.payload[expected_bytes - 1] >> (8 - pad) != 0 {
        return Err(CodecError::NonZeroPadding);
    }

    let mut r = BitReader { bytes: &bits.payload, pos: 0 };
    let read_channel = |r: &mut BitReader, index: usize| -> Result<ChannelConfig, CodecError> {
        let ch = &channels[index];
        let mut selects = Vec::with_capacity(ch.output_count as usize);
        for output in 0..ch.output_count as usize {
            let select = r.read(ch.select_word_width) as u32;
            if select >= ch.predecessor_count {
                return Err(CodecError::InvalidSelect {
                    channel: index,
                    output,
                    select,
                    predecessors: ch.predecessor_count,
                });
            }
            selects.push(select);
        }
        Ok(ChannelConfig { selects })
    };

    let input_distribution = read_channel(&mut r, 0)?;
    let mut pe_configs = Vec::with_capacity(spec.total_pe_slots());
    let mut below = Vec::with_capacity(spec.levels.len());
    for (l, level) in spec.levels.iter().enumerate() {
        for _ in 0..level.pe_count {
            let value = r.read(OPCODE_BITS) as u8;
            let opcode = Opcode::from_bits(value)
                .ok_or(CodecError::InvalidOpcode { slot: pe_configs.len(), value })?;
            pe_configs.push(PeConfig { opcode });
        }
        below.push(read_channel(&mut r, l + 1)?);
    }
    let output_selection = below.pop().expect("grid has at least one level");
    Ok(GridConfig { pe_configs, input_distribution, channel_configs: below, output_selection })
}

impl VirtualBitstream {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&self.header.format_version.to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(&self.header.grid_digest.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Splits a file into header and payload. Payload length is checked
    /// against the grid by [`decode`].
    pub fn from_bytes(bytes: &[u8]) -> Result<VirtualBitstream, CodecError> {
        if bytes.len() < HEADER_LEN {
            return Err(CodecError::Framing { expected_bytes: HEADER_LEN, found_bytes: bytes.len() });
        }
        if bytes[..4] != MAGIC {
            return Err(CodecError::BadMagic);
        }
        let format_version = u16::from_le_bytes([bytes[4], bytes[5]]);
        let mut digest = [0u8; 8];
        digest.copy_from_slice(&bytes[8..16]);
        Ok(VirtualBitstream {
            header: BitstreamHeader { format_version, grid_digest: u64::from_le_bytes(digest) },
            payload: bytes[HEADER_LEN..].to_vec(),
        })
    }
}
