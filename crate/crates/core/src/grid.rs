//! Grid architectures: level shapes, validation and derived channel
//! parameters.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Widest word any PE or channel may carry.
pub const MAX_BITWIDTH: u32 = 64;

/// Width of the opcode field of every PE slot in the bitstream.
pub const OPCODE_BITS: u32 = 4;

/// One row of processing elements.
///
/// Both operands of a PE share `pe_input_bitwidth`, so a slot with mismatched
/// operand widths cannot be expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LevelSpec {
    pub pe_count: u32,
    pub pe_input_bitwidth: u32,
    pub pe_output_bitwidth: u32,
}

impl LevelSpec {
    pub fn uniform(pe_count: u32, bitwidth: u32) -> Self {
        LevelSpec {
            pe_count,
            pe_input_bitwidth: bitwidth,
            pe_output_bitwidth: bitwidth,
        }
    }
}

/// Static description of a grid: the memory interface plus the PE levels,
/// top to bottom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GridSpec {
    pub memory_input_count: u32,
    pub memory_input_bitwidth: u32,
    pub levels: Vec<LevelSpec>,
}

/// What is wrong with a [`GridSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    NoLevels,
    EmptyLevel,
    ZeroMemoryInputs,
    ZeroBitwidth,
    BitwidthTooLarge(u32),
}

/// A single invariant violation. `level` is `None` for grid-wide fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub level: Option<usize>,
    pub field: &'static str,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level {
            Some(level) => write!(f, "level {level}: {}: ", self.field)?,
            None => write!(f, "{}: ", self.field)?,
        }
        match self.kind {
            ViolationKind::NoLevels => f.write_str("grid has no levels"),
            ViolationKind::EmptyLevel => f.write_str("empty level"),
            ViolationKind::ZeroMemoryInputs => f.write_str("memory interface has no inputs"),
            ViolationKind::ZeroBitwidth => f.write_str("bitwidth must be at least 1"),
            ViolationKind::BitwidthTooLarge(bits) => {
                write!(f, "bitwidth {bits} exceeds {MAX_BITWIDTH}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridError {
    Invalid(Vec<Violation>),
    ZeroArgument(&'static str),
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::Invalid(violations) => {
                f.write_str("invalid grid")?;
                for (i, v) in violations.iter().enumerate() {
                    let sep = if i == 0 { ": " } else { "; " };
                    write!(f, "{sep}{v}")?;
                }
                Ok(())
            }
            GridError::ZeroArgument(name) => write!(f, "{name} must be at least 1"),
        }
    }
}

impl core::error::Error for GridError {}

/// Role of a channel within the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ChannelKind {
    /// Distributes frame words from the host to the first level.
    MemoryInterface,
    /// Sits between level `above` and level `above + 1`.
    Intermediate { above: u32 },
    /// Collects the last level's results for the host.
    OutputInterface,
}

/// Channel parameters derived from the grid shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub predecessor_count: u32,
    pub output_count: u32,
    /// `N`: the widest predecessor word.
    pub internal_bitwidth: u32,
    /// `M`: one valid bit per predecessor.
    pub valid_vector_width: u32,
    /// `bw`: select word width of each output multiplexer.
    pub select_word_width: u32,
}

/// `⌈log2 n⌉`, floored at one bit so a single-input multiplexer still owns a
/// select bit in the bitstream.
pub fn select_word_width(predecessor_count: u32) -> u32 {
    if predecessor_count <= 2 {
        1
    } else {
        u32::BITS - (predecessor_count - 1).leading_zeros()
    }
}

impl ChannelSpec {
    /// Derives a channel from the output widths of its predecessors and the
    /// number of multiplexed outputs it drives.
    pub fn from_predecessors(kind: ChannelKind, widths: &[u32], output_count: u32) -> Self {
        let predecessor_count = widths.len() as u32;
        ChannelSpec {
            kind,
            predecessor_count,
            output_count,
            internal_bitwidth: widths.iter().copied().max().unwrap_or(0),
            valid_vector_width: predecessor_count,
            select_word_width: select_word_width(predecessor_count),
        }
    }

    pub fn config_bits(&self) -> u64 {
        self.output_count as u64 * self.select_word_width as u64
    }
}

/// Summary counts for a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GridStats {
    pub total_pe_slots: u64,
    pub intermediate_channel_count: u64,
    pub total_config_bits: u64,
}

impl GridSpec {
    /// A grid of `levels` identical rows of `width` PEs. The memory interface
    /// gets one word per first-level PE port.
    pub fn rectangular(width: u32, levels: u32, bitwidth: u32) -> Result<GridSpec, GridError> {
        if width == 0 {
            return Err(GridError::ZeroArgument("width"));
        }
        if levels == 0 {
            return Err(GridError::ZeroArgument("levels"));
        }
        if bitwidth == 0 {
            return Err(GridError::ZeroArgument("bitwidth"));
        }
        let spec = GridSpec {
            memory_input_count: 2 * width,
            memory_input_bitwidth: bitwidth,
            levels: (0..levels).map(|_| LevelSpec::uniform(width, bitwidth)).collect(),
        };
        spec.check()?;
        Ok(spec)
    }

    /// Every invariant violation, in level order. Empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.memory_input_count == 0 {
            out.push(Violation {
                level: None,
                field: "memory_input_count",
                kind: ViolationKind::ZeroMemoryInputs,
            });
        }
        check_width(&mut out, None, "memory_input_bitwidth", self.memory_input_bitwidth);
        if self.levels.is_empty() {
            out.push(Violation {
                level: None,
                field: "levels",
                kind: ViolationKind::NoLevels,
            });
        }
        for (i, level) in self.levels.iter().enumerate() {
            if level.pe_count == 0 {
                out.push(Violation {
                    level: Some(i),
                    field: "pe_count",
                    kind: ViolationKind::EmptyLevel,
                });
            }
            check_width(&mut out, Some(i), "pe_input_bitwidth", level.pe_input_bitwidth);
            check_width(&mut out, Some(i), "pe_output_bitwidth", level.pe_output_bitwidth);
        }
        out
    }

    pub fn check(&self) -> Result<(), GridError> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(GridError::Invalid(violations))
        }
    }

    /// Memory interface first, then one channel between each pair of adjacent
    /// levels, then the output interface.
    pub fn derive_channels(&self) -> Result<Vec<ChannelSpec>, GridError> {
        self.check()?;
        let mut channels = Vec::with_capacity(self.levels.len() + 1);
        let mem_widths: Vec<u32> =
            (0..self.memory_input_count).map(|_| self.memory_input_bitwidth).collect();
        channels.push(ChannelSpec::from_predecessors(
            ChannelKind::MemoryInterface,
            &mem_widths,
            2 * self.levels[0].pe_count,
        ));
        for (i, pair) in self.levels.windows(2).enumerate() {
            let widths: Vec<u32> = (0..pair[0].pe_count).map(|_| pair[0].pe_output_bitwidth).collect();
            channels.push(ChannelSpec::from_predecessors(
                ChannelKind::Intermediate { above: i as u32 },
                &widths,
                2 * pair[1].pe_count,
            ));
        }
        let last = self.levels[self.levels.len() - 1];
        let widths: Vec<u32> = (0..last.pe_count).map(|_| last.pe_output_bitwidth).collect();
        channels.push(ChannelSpec::from_predecessors(
            ChannelKind::OutputInterface,
            &widths,
            last.pe_count,
        ));
        Ok(channels)
    }

    pub fn stats(&self) -> Result<GridStats, GridError> {
        let channels = self.derive_channels()?;
        let total_pe_slots: u64 = self.levels.iter().map(|l| l.pe_count as u64).sum();
        let channel_bits: u64 = channels.iter().map(ChannelSpec::config_bits).sum();
        Ok(GridStats {
            total_pe_slots,
            intermediate_channel_count: self.levels.len() as u64 - 1,
            total_config_bits: total_pe_slots * OPCODE_BITS as u64 + channel_bits,
        })
    }

    pub fn total_pe_slots(&self) -> usize {
        self.levels.iter().map(|l| l.pe_count as usize).sum()
    }

    /// Flat slot index of `(level, index)` in level-major order.
    pub fn slot_offset(&self, level: usize) -> usize {
        self.levels[..level].iter().map(|l| l.pe_count as usize).sum()
    }

    /// Compact JSON text with a fixed key order; the bitstream digest is
    /// computed over these bytes.
    pub fn canonical_json(&self) -> String {
        let levels: Vec<String> = self
            .levels
            .iter()
            .map(|l| {
                format!(
                    "{{\"pe_count\":{},\"pe_input_bitwidth\":{},\"pe_output_bitwidth\":{}}}",
                    l.pe_count, l.pe_input_bitwidth, l.pe_output_bitwidth
                )
            })
            .collect();
        format!(
            "{{\"memory_input_count\":{},\"memory_input_bitwidth\":{},\"levels\":[{}]}}",
            self.memory_input_count,
            self.memory_input_bitwidth,
            levels.join(",")
        )
    }

    /// 64-bit FNV-1a over [`GridSpec::canonical_json`].
    pub fn digest(&self) -> u64 {
        use core::hash::Hasher;
        let mut hasher = fnv::FnvHasher::default();
        hasher.write(self.canonical_json().as_bytes());
        hasher.finish()
    }
}

fn check_width(out: &mut Vec<Violation>, level: Option<usize>, field: &'static str, bits: u32) {
    let kind = if bits == 0 {
        ViolationKind::ZeroBitwidth
    } else if bits > MAX_BITWIDTH {
        ViolationKind::BitwidthTooLarge(bits)
    } else {
        return;
    };
    out.push(Violation { level, field, kind });
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn sobel_grid_is_valid() {
        let spec = GridSpec::rectangular(9, 5, 8).unwrap();
        assert!(spec.validate().is_empty());
        assert_eq!(spec.memory_input_count, 18);
    }

    #[test]
    fn empty_level_is_reported() {
        let mut spec = GridSpec::rectangular(3, 3, 8).unwrap();
        spec.levels[1].pe_count = 0;
        let v = spec.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].level, Some(1));
        assert_eq!(v[0].kind, ViolationKind::EmptyLevel);
        assert_eq!(v[0].to_string(), "level 1: pe_count: empty level");
    }

    #[test]
    fn all_violations_are_collected() {
        let spec = GridSpec {
            memory_input_count: 0,
            memory_input_bitwidth: 65,
            levels: vec![LevelSpec { pe_count: 1, pe_input_bitwidth: 0, pe_output_bitwidth: 8 }],
        };
        let kinds: Vec<_> = spec.validate().iter().map(|v| v.kind).collect();
        assert_eq!(
            kinds,
            vec![
                ViolationKind::ZeroMemoryInputs,
                ViolationKind::BitwidthTooLarge(65),
                ViolationKind::ZeroBitwidth
            ]
        );
        let no_levels = GridSpec { memory_input_count: 1, memory_input_bitwidth: 8, levels: vec![] };
        assert_eq!(no_levels.validate()[0].kind, ViolationKind::NoLevels);
        assert!(no_levels.derive_channels().is_err());
    }

    #[test]
    fn select_width_formula() {
        assert_eq!(select_word_width(1), 1);
        assert_eq!(select_word_width(2), 1);
        assert_eq!(select_word_width(3), 2);
        assert_eq!(select_word_width(4), 2);
        assert_eq!(select_word_width(5), 3);
        assert_eq!(select_word_width(9), 4);
        assert_eq!(select_word_width(16), 4);
        assert_eq!(select_word_width(17), 5);
    }

    #[test]
    fn channel_from_mixed_widths() {
        let ch = ChannelSpec::from_predecessors(ChannelKind::Intermediate { above: 0 }, &[8, 16, 12], 4);
        assert_eq!(ch.internal_bitwidth, 16);
        assert_eq!(ch.valid_vector_width, 3);
        assert_eq!(ch.select_word_width, 2);
        let single = ChannelSpec::from_predecessors(ChannelKind::OutputInterface, &[8], 1);
        assert_eq!((single.select_word_width, single.valid_vector_width), (1, 1));
    }

    #[test]
    fn derive_channels_order_and_shape() {
        let spec = GridSpec::rectangular(9, 5, 8).unwrap();
        let ch = spec.derive_channels().unwrap();
        assert_eq!(ch.len(), 6);
        assert_eq!(ch[0].kind, ChannelKind::MemoryInterface);
        assert_eq!((ch[0].predecessor_count, ch[0].output_count, ch[0].select_word_width), (18, 18, 5));
        for (k, c) in ch[1..5].iter().enumerate() {
            assert_eq!(c.kind, ChannelKind::Intermediate { above: k as u32 });
            assert_eq!((c.predecessor_count, c.output_count, c.select_word_width), (9, 18, 4));
        }
        assert_eq!(ch[5].kind, ChannelKind::OutputInterface);
        assert_eq!((ch[5].predecessor_count, ch[5].output_count), (9, 9));
    }

    #[test]
    fn stats_for_sobel_grid() {
        // mem 18 outputs x 5 bits = 90, 45 opcodes x 4 = 180,
        // 4 channels x 18 outputs x 4 bits = 288, output 9 x 4 = 36.
        let stats = GridSpec::rectangular(9, 5, 8).unwrap().stats().unwrap();
        assert_eq!(stats.total_pe_slots, 45);
        assert_eq!(stats.intermediate_channel_count, 4);
        assert_eq!(stats.total_config_bits, 594);
    }

    #[test]
    fn minimal_and_square_grids() {
        let min = GridSpec::rectangular(1, 1, 8).unwrap();
        let stats = min.stats().unwrap();
        assert_eq!((stats.total_pe_slots, stats.intermediate_channel_count), (1, 0));
        // 2 mem selects + 4 opcode bits + 1 output select
        assert_eq!(stats.total_config_bits, 7);
        let sq = GridSpec::rectangular(4, 4, 16).unwrap();
        assert_eq!(sq.stats().unwrap().total_pe_slots, 16);
        assert_eq!(sq.levels[0].pe_input_bitwidth, 16);
    }

    #[test]
    fn zero_arguments_rejected() {
        assert_eq!(GridSpec::rectangular(0, 5, 8), Err(GridError::ZeroArgument("width")));
        assert_eq!(GridSpec::rectangular(9, 0, 8), Err(GridError::ZeroArgument("levels")));
        assert_eq!(GridSpec::rectangular(9, 5, 0), Err(GridError::ZeroArgument("bitwidth")));
        assert!(matches!(GridSpec::rectangular(9, 5, 65), Err(GridError::Invalid(_))));
    }

    #[test]
    fn triangular_grid_derives() {
        let spec = GridSpec {
            memory_input_count: 18,
            memory_input_bitwidth: 8,
            levels: [9, 5, 3, 2, 1].iter().map(|&n| LevelSpec::uniform(n, 16)).collect(),
        };
        assert!(spec.validate().is_empty());
        let ch = spec.derive_channels().unwrap();
        let bws: Vec<u32> = ch.iter().map(|c| c.select_word_width).collect();
        assert_eq!(bws, vec![5, 4, 3, 2, 1, 1]);
        let outs: Vec<u32> = ch.iter().map(|c| c.output_count).collect();
        assert_eq!(outs, vec![18, 10, 6, 4, 2, 1]);
    }

    #[test]
    fn canonical_json_and_digest() {
        let spec = GridSpec::rectangular(1, 1, 8).unwrap();
        assert_eq!(
            spec.canonical_json(),
            r#"{"memory_input_count":2,"memory_input_bitwidth":8,"levels":[{"pe_count":1,"pe_input_bitwidth":8,"pe_output_bitwidth":8}]}"#
        );
        assert_ne!(spec.digest(), GridSpec::rectangular(1, 1, 16).unwrap().digest());
    }

    #[test]
    fn fnv1a_reference_vector() {
        use core::hash::Hasher;
        let mut h = fnv::FnvHasher::default();
        h.write(b"a");
        assert_eq!(h.finish(), 0xaf63dc4c8601ec8c);
    }
}
