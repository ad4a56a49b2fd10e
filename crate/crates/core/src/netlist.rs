//! Structural netlist of a grid: every PE instance, every channel with its
//! derived parameters, and every port-to-port connection.
//!
//! Port names: `host.in[i]` / `host.out[i]` on the processor side,
//! `vc_mem`, `vc_<level>` (below `<level>`) and `vc_out` for channels with
//! `.in[i]` / `.out[i]` ports, and `pe_<level>_<index>` with `.in[0]`,
//! `.in[1]` and `.out`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::grid::{ChannelKind, GridError, GridSpec};

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PeInstance {
    pub name: String,
    pub level: u32,
    pub index: u32,
    pub input_bitwidth: u32,
    pub output_bitwidth: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ChannelInstance {
    pub name: String,
    pub kind: ChannelKind,
    pub predecessor_count: u32,
    pub output_count: u32,
    pub internal_bitwidth: u32,
    pub valid_vector_width: u32,
    pub select_word_width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Connection {
    pub from: String,
    pub to: String,
    pub bitwidth: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Netlist {
    pub pes: Vec<PeInstance>,
    pub channels: Vec<ChannelInstance>,
    pub connections: Vec<Connection>,
}

impl Netlist {
    pub fn intermediate_channel_count(&self) -> usize {
        self.channels
            .iter()
            .filter(|c| matches!(c.kind, ChannelKind::Intermediate { .. }))
            .count()
    }
}

fn channel_name(kind: ChannelKind) -> String {
    match kind {
        ChannelKind::MemoryInterface => String::from("vc_mem"),
        ChannelKind::Intermediate { above } => format!("vc_{above}"),
        ChannelKind::OutputInterface => String::from("vc_out"),
    }
}

fn pe_name(level: usize, index: u32) -> String {
    format!("pe_{level}_{index}")
}

pub fn export_netlist(spec: &GridSpec) -> Result<Netlist, GridError> {
    let channels = spec.derive_channels()?;
    let mut pes = Vec::with_capacity(spec.total_pe_slots());
    for (l, level) in spec.levels.iter().enumerate() {
        for index in 0..level.pe_count {
            pes.push(PeInstance {
                name: pe_name(l, index),
                level: l as u32,
                index,
                input_bitwidth: level.pe_input_bitwidth,
                output_bitwidth: level.pe_output_bitwidth,
            });
        }
    }

    let mut connections = Vec::new();
    for i in 0..spec.memory_input_count {
        connections.push(Connection {
            from: format!("host.in[{i}]"),
            to: format!("vc_mem.in[{i}]"),
            bitwidth: spec.memory_input_bitwidth,
        });
    }
    for (c, ch) in channels.iter().enumerate() {
        let name = channel_name(ch.kind);
        // Producers of a channel are the PEs of the level above it.
        if c > 0 {
            let above = &spec.levels[c - 1];
            for s in 0..above.pe_count {
                connections.push(Connection {
                    from: format!("{}.out", pe_name(c - 1, s)),
                    to: format!("{name}.in[{s}]"),
                    bitwidth: above.pe_output_bitwidth,
                });
            }
        }
        match ch.kind {
            ChannelKind::OutputInterface => {
                for o in 0..ch.output_count {
                    connections.push(Connection {
                        from: format!("{name}.out[{o}]"),
                        to: format!("host.out[{o}]"),
                        bitwidth: ch.internal_bitwidth,
                    });
                }
            }
            _ => {
                let below = &spec.levels[c];
                for o in 0..ch.output_count {
                    connections.push(Connection {
                        from: format!("{name}.out[{o}]"),
                        to: format!("{}.in[{}]", pe_name(c, o / 2), o % 2),
                        bitwidth: below.pe_input_bitwidth,
                    });
                }
            }
        }
    }

    let channels = channels
        .iter()
        .map(|ch| ChannelInstance {
            name: channel_name(ch.kind),
            kind: ch.kind,
            predecessor_count: ch.predecessor_count,
            output_count: ch.output_count,
            internal_bitwidth: ch.internal_bitwidth,
            valid_vector_width: ch.valid_vector_width,
            select_word_width: ch.select_word_width,
        })
        .collect();
    Ok(Netlist { pes, channels, connections })
}
