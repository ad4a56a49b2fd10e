//! Core model of the Pixie virtual coarse-grained reconfigurable array.
//!
//! A grid is a stack of processing-element levels separated by virtual
//! channels. Applications arrive as dataflow task graphs, are levelized and
//! mapped onto a grid, packed into a virtual bitstream, and executed by a
//! cycle-level simulator.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the PGM codec
//! and the command-line frontend live in the `pixie` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod codec;
pub mod config;
pub mod graph;
pub mod grid;
pub mod kernels;
pub mod mapper;
pub mod netlist;
pub mod sim;

pub use netlist::{export_netlist, Netlist};
pub use sim::{pe_alu, run, Frame, FsmState, RunResult, SimError, SimGrid};

pub use codec::{decode, encode, BitstreamHeader, CodecError, VirtualBitstream};
pub use config::{ChannelConfig, GridConfig, Opcode, PeConfig};
pub use graph::{Edge, GraphError, LeveledGraph, Node, NodeKind, Op, TaskGraph};
pub use grid::{ChannelKind, ChannelSpec, GridError, GridSpec, GridStats, LevelSpec, Violation};
pub use mapper::{map, place, route, MapError, Placement, Slot};


