//! Grid settings: what every PE computes and how every channel routes.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::graph::Op;
use crate::grid::{ChannelSpec, GridSpec};

/// PE opcode. The discriminant is the 4-bit bitstream encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
#[repr(u8)]
pub enum Opcode {
    /// Unused slot: never latches, never asserts valid.
    #[default]
    None = 0,
    Add = 1,
    Sub = 2,
    Mul = 3,
    Div = 4,
    Gt = 5,
    Eq = 6,
    Buf = 7,
}

impl Opcode {
    pub const ALL: [Opcode; 8] = [
        Opcode::None,
        Opcode::Add,
        Opcode::Sub,
        Opcode::Mul,
        Opcode::Div,
        Opcode::Gt,
        Opcode::Eq,
        Opcode::Buf,
    ];

    pub fn from_bits(bits: u8) -> Option<Opcode> {
        Opcode::ALL.get(bits as usize).copied()
    }

    pub fn bits(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Opcode::None => "NONE",
            Opcode::Add => "ADD",
            Opcode::Sub => "SUB",
            Opcode::Mul => "MUL",
            Opcode::Div => "DIV",
            Opcode::Gt => "GT",
            Opcode::Eq => "EQ",
            Opcode::Buf => "BUF",
        }
    }
}

impl From<Op> for Opcode {
    fn from(op: Op) -> Opcode {
        match op {
            Op::Add => Opcode::Add,
            Op::Sub => Opcode::Sub,
            Op::Mul => Opcode::Mul,
            Op::Div => Opcode::Div,
            Op::Gt => Opcode::Gt,
            Op::Eq => Opcode::Eq,
            Op::Buf => Opcode::Buf,
        }
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PeConfig {
    pub opcode: Opcode,
}

/// One multiplexer select per channel output. Output `2 * slot + port` feeds
/// operand `port` of PE `slot` in the level below.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ChannelConfig {
    pub selects: Vec<u32>,
}

impl ChannelConfig {
    pub fn zeroed(outputs: u32) -> Self {
        ChannelConfig { selects: vec![0; outputs as usize] }
    }
}

/// Complete settings of a grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GridConfig {
    /// Level-major, left to right.
    pub pe_configs: Vec<PeConfig>,
    pub input_distribution: ChannelConfig,
    pub channel_configs: Vec<ChannelConfig>,
    pub output_selection: ChannelConfig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShapeError {
    PeCount { expected: usize, found: usize },
    ChannelCount { expected: usize, found: usize },
    SelectCount { channel: usize, expected: usize, found: usize },
    SelectRange { channel: usize, output: usize, select: u32, predecessors: u32 },
}

impl fmt::Display for ShapeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeError::PeCount { expected, found } => {
                write!(f, "config has {found} PE settings, grid has {expected} slots")
            }
            ShapeError::ChannelCount { expected, found } => {
                write!(f, "config has {found} intermediate channels, grid has {expected}")
            }
            ShapeError::SelectCount { channel, expected, found } => {
                write!(f, "channel {channel}: {found} selects, expected {expected}")
            }
            ShapeError::SelectRange { channel, output, select, predecessors } => write!(
                f,
                "channel {channel} output {output}: select {select} out of range for {predecessors} predecessors"
            ),
        }
    }
}

impl core::error::Error for ShapeError {}

impl GridConfig {
    /// All slots NONE, all selects 0.
    pub fn empty(channels: &[ChannelSpec], spec: &GridSpec) -> GridConfig {
        let last = channels.len() - 1;
        GridConfig {
            pe_configs: vec![PeConfig::default(); spec.total_pe_slots()],
            input_distribution: ChannelConfig::zeroed(channels[0].output_count),
            channel_configs: channels[1..last].iter().map(|c| ChannelConfig::zeroed(c.output_count)).collect(),
            output_selection: ChannelConfig::zeroed(channels[last].output_count),
        }
    }

    /// Channel settings in grid order: memory interface, intermediates,
    /// output interface.
    pub fn channels(&self) -> impl Iterator<Item = &ChannelConfig> {
        core::iter::once(&self.input_distribution)
            .chain(self.channel_configs.iter())
            .chain(core::iter::once(&self.output_selection))
    }

    pub fn channels_mut(&mut self) -> impl Iterator<Item = &mut ChannelConfig> {
        core::iter::once(&mut self.input_distribution)
            .chain(self.channel_configs.iter_mut())
            .chain(core::iter::once(&mut self.output_selection))
    }

    pub fn channel(&self, index: usize) -> &ChannelConfig {
        if index == 0 {
            &self.input_distribution
        } else if index <= self.channel_configs.len() {
            &self.channel_configs[index - 1]
        } else {
            &self.output_selection
        }
    }

    /// Checks the config against derived channels of its grid.
    pub fn check_shape(&self, spec: &GridSpec, channels: &[ChannelSpec]) -> Result<(), ShapeError> {
        let slots = spec.total_pe_slots();
        if self.pe_configs.len() != slots {
            return Err(ShapeError::PeCount { expected: slots, found: self.pe_configs.len() });
        }
        if self.channel_configs.len() + 2 != channels.len() {
            return Err(ShapeError::ChannelCount {
                expected: channels.len() - 2,
                found: self.channel_configs.len(),
            });
        }
        for (ci, (cfg, ch)) in self.channels().zip(channels).enumerate() {
            if cfg.selects.len() != ch.output_count as usize {
                return Err(ShapeError::SelectCount {
                    channel: ci,
                    expected: ch.output_count as usize,
                    found: cfg.selects.len(),
                });
            }
            if let Some((output, &select)) =
                cfg.selects.iter().enumerate().find(|(_, &s)| s >= ch.predecessor_count)
            {
                return Err(ShapeError::SelectRange {
                    channel: ci,
                    output,
                    select,
                    predecessors: ch.predecessor_count,
                });
            }
        }
        Ok(())
    }

    pub fn occupied(&self) -> usize {
        self.pe_configs.iter().filter(|p| p.opcode != Opcode::None).count()
    }
}
