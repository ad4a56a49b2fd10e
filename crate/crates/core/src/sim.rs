//! Cycle-level simulation of a configured grid.
//!
//! Every register updates on the same clock edge. One [`SimGrid::step`]:
//!
//! 1. each channel latches its predecessors' output word and valid bit
//!    (the host bus for the memory interface, the level above otherwise);
//! 2. each PE advances its state machine from the channel outputs of the
//!    previous cycle:
//!    * `AwaitData` latches both operands, keeping a port once it has seen a
//!      valid word, and moves to `ProcessData` when both ports are enabled;
//!    * `ProcessData` computes the result into the output buffer;
//!    * `ValidData` raises `valid` for this one cycle, clears the enables and
//!      returns to `AwaitData`;
//! 3. each channel routes its latched inputs through the configured selects
//!    into its output registers.
//!
//! A PE therefore needs three cycles per datum, a channel crossing costs one
//! cycle, and the first result of an `L`-level grid is visible at the output
//! interface [`latency`]`(L) = 1 + 3L + (L - 1) + 1` cycles after the frame
//! is presented. Frames are accepted every [`INITIATION_INTERVAL`] cycles.
//!
//! Words are kept as sign-extended `i64`. Channels widen to their internal
//! width, PE inputs narrow to the PE input width, and results wrap to the PE
//! output width.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::config::{GridConfig, Opcode, ShapeError};
use crate::grid::{ChannelSpec, GridError, GridSpec};

/// Cycles between accepted frames: one per PE state.
pub const INITIATION_INTERVAL: u64 = 3;

/// Cycles from presenting a frame to its result being valid at the output
/// interface of a grid with `levels` levels.
pub const fn latency(levels: u32) -> u64 {
    let l = levels as u64;
    1 + 3 * l + (l - 1) + 1
}

/// Two's-complement value of the low `bits` bits of `value`.
pub fn sign_extend(value: i64, bits: u32) -> i64 {
    if bits >= 64 {
        value
    } else {
        let shift = 64 - bits;
        (value << shift) >> shift
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AluOutput {
    pub value: i64,
    pub div_by_zero: bool,
}

/// Result of one PE operation, wrapped to `out_bits`. Division truncates
/// toward zero; dividing by zero yields 0 and reports it.
pub fn pe_alu(op: Opcode, a: i64, b: i64, out_bits: u32) -> AluOutput {
    let mut div_by_zero = false;
    let raw = match op {
        Opcode::None => 0,
        Opcode::Add => a.wrapping_add(b),
        Opcode::Sub => a.wrapping_sub(b),
        Opcode::Mul => a.wrapping_mul(b),
        Opcode::Div => {
            if b == 0 {
                div_by_zero = true;
                0
            } else {
                a.wrapping_div(b)
            }
        }
        Opcode::Gt => (a > b) as i64,
        Opcode::Eq => (a == b) as i64,
        Opcode::Buf => a,
    };
    AluOutput { value: sign_extend(raw, out_bits), div_by_zero }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FsmState {
    #[default]
    AwaitData,
    ProcessData,
    ValidData,
}

impl FsmState {
    pub fn name(self) -> &'static str {
        match self {
            FsmState::AwaitData => "AWAIT_DATA",
            FsmState::ProcessData => "PROCESS_DATA",
            FsmState::ValidData => "VALID_DATA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Operand {
    pub value: i64,
    pub enabled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PeState {
    pub fsm: FsmState,
    pub in_buf: [Operand; 2],
    pub out_buf: i64,
    pub valid: bool,
}

/// A word together with its valid bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Reg {
    pub value: i64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelState {
    pub data_regs: Vec<i64>,
    pub valid_regs: Vec<bool>,
    pub out_regs: Vec<Reg>,
}

/// Memory-interface words for one activation of the grid.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Frame(pub Vec<i64>);

impl From<Vec<i64>> for Frame {
    fn from(words: Vec<i64>) -> Self {
        Frame(words)
    }
}

/// What a PE did during one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeTrace {
    /// State the PE was in while the cycle executed.
    pub fsm: FsmState,
    pub valid: bool,
    pub out: i64,
}

/// Observable state after one cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRow {
    pub cycle: u64,
    pub pes: Vec<PeTrace>,
    /// Output registers of every channel, memory interface first.
    pub channels: Vec<Vec<Reg>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimError {
    Grid(GridError),
    Shape(ShapeError),
    FrameWidth { frame: usize, expected: usize, found: usize },
    Stall { expected: usize, collected: usize, cycles: u64 },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Grid(e) => write!(f, "{e}"),
            SimError::Shape(e) => write!(f, "config does not fit grid: {e}"),
            SimError::FrameWidth { frame, expected, found } => {
                write!(f, "frame {frame} has {found} words, memory interface takes {expected}")
            }
            SimError::Stall { expected, collected, cycles } => write!(
                f,
                "grid produced {collected} of {expected} results within {cycles} cycles"
            ),
        }
    }
}

impl core::error::Error for SimError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    /// One entry per frame: every output-interface word, in output order.
    pub outputs: Vec<Vec<i64>>,
    pub cycles: u64,
    pub div_by_zero: bool,
}

/// Full dynamic state of a grid.
#[derive(Debug, Clone)]
pub struct SimGrid {
    spec: GridSpec,
    config: GridConfig,
    channels: Vec<ChannelSpec>,
    /// Level index of each flat PE slot.
    pe_level: Vec<usize>,
    /// Slot index within its level.
    pe_index: Vec<usize>,
    /// Flat index of the first slot of each level.
    level_offset: Vec<usize>,
    pes: Vec<PeState>,
    chans: Vec<ChannelState>,
    host: Vec<i64>,
    start: bool,
    cycle: u64,
    div_by_zero: bool,
    trace: Option<Vec<TraceRow>>,
}

impl SimGrid {
    pub fn new(spec: &GridSpec, config: &GridConfig) -> Result<SimGrid, SimError> {
        let channels = spec.derive_channels().map_err(SimError::Grid)?;
        config.check_shape(spec, &channels).map_err(SimError::Shape)?;
        let mut pe_level = Vec::with_capacity(spec.total_pe_slots());
        let mut pe_index = Vec::with_capacity(spec.total_pe_slots());
        for (l, level) in spec.levels.iter().enumerate() {
            for s in 0..level.pe_count as usize {
                pe_level.push(l);
                pe_index.push(s);
            }
        }
        let chans = channels
            .iter()
            .map(|c| ChannelState {
                data_regs: vec![0; c.predecessor_count as usize],
                valid_regs: vec![false; c.predecessor_count as usize],
                out_regs: vec![Reg::default(); c.output_count as usize],
            })
            .collect();
        Ok(SimGrid {
            spec: spec.clone(),
            config: config.clone(),
            pes: vec![PeState::default(); pe_level.len()],
            level_offset: (0..spec.levels.len()).map(|l| spec.slot_offset(l)).collect(),
            pe_level,
            pe_index,
            chans,
            host: vec![0; spec.memory_input_count as usize],
            start: false,
            cycle: 0,
            div_by_zero: false,
            channels,
            trace: None,
        })
    }

    /// Records a [`TraceRow`] for every subsequent step.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn div_by_zero(&self) -> bool {
        self.div_by_zero
    }

    pub fn pes(&self) -> &[PeState] {
        &self.pes
    }

    pub fn channel_states(&self) -> &[ChannelState] {
        &self.chans
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn trace(&self) -> &[TraceRow] {
        self.trace.as_deref().unwrap_or(&[])
    }

    /// Drives a frame onto the host bus and asserts start for the next cycle.
    pub fn present(&mut self, frame: &Frame) -> Result<(), SimError> {
        if frame.0.len() != self.host.len() {
            return Err(SimError::FrameWidth { frame: 0, expected: self.host.len(), found: frame.0.len() });
        }
        let bits = self.spec.memory_input_bitwidth;
        for (dst, &w) in self.host.iter_mut().zip(&frame.0) {
            *dst = sign_extend(w, bits);
        }
        self.start = true;
        Ok(())
    }

    /// Output-interface registers.
    pub fn outputs(&self) -> &[Reg] {
        &self.chans[self.chans.len() - 1].out_regs
    }

    pub fn output_valid(&self) -> bool {
        self.outputs().iter().any(|r| r.valid)
    }

    /// Advances one clock cycle.
    pub fn step(&mut self) {
        let pre_fsm: Option<Vec<FsmState>> = self.trace.as_ref().map(|_| self.pes.iter().map(|p| p.fsm).collect());

        // Channel input registers latch the previous cycle's producers.
        for (c, ch) in self.chans.iter_mut().enumerate() {
            let width = self.channels[c].internal_bitwidth;
            if c == 0 {
                for (i, &w) in self.host.iter().enumerate() {
                    ch.data_regs[i] = sign_extend(w, width);
                    ch.valid_regs[i] = self.start;
                }
            } else {
                let base = self.level_offset[c - 1];
                for i in 0..ch.data_regs.len() {
                    let pe = &self.pes[base + i];
                    ch.data_regs[i] = sign_extend(pe.out_buf, width);
                    ch.valid_regs[i] = pe.valid;
                }
            }
        }

        for slot in 0..self.pes.len() {
            let level = self.pe_level[slot];
            let index = self.pe_index[slot];
            let opcode = self.config.pe_configs[slot].opcode;
            let spec = self.spec.levels[level];
            let feed = &self.chans[level].out_regs;
            let pe = &mut self.pes[slot];
            if opcode == Opcode::None {
                pe.valid = false;
                continue;
            }
            match pe.fsm {
                FsmState::AwaitData => {
                    pe.valid = false;
                    for port in 0..2 {
                        let reg = feed[2 * index + port];
                        let operand = &mut pe.in_buf[port];
                        if !operand.enabled {
                            operand.value = sign_extend(reg.value, spec.pe_input_bitwidth);
                            operand.enabled = reg.valid;
                        }
                    }
                    if pe.in_buf.iter().all(|o| o.enabled) {
                        pe.fsm = FsmState::ProcessData;
                    }
                }
                FsmState::ProcessData => {
                    let out = pe_alu(opcode, pe.in_buf[0].value, pe.in_buf[1].value, spec.pe_output_bitwidth);
                    pe.out_buf = out.value;
                    self.div_by_zero |= out.div_by_zero;
                    pe.valid = false;
                    pe.fsm = FsmState::ValidData;
                }
                FsmState::ValidData => {
                    pe.valid = true;
                    pe.in_buf[0].enabled = false;
                    pe.in_buf[1].enabled = false;
                    pe.fsm = FsmState::AwaitData;
                }
            }
        }

        let cfg = &self.config;
        for (c, ch) in self.chans.iter_mut().enumerate() {
            let selects = &cfg.channel(c).selects;
            for (reg, &sel) in ch.out_regs.iter_mut().zip(selects) {
                *reg = Reg { value: ch.data_regs[sel as usize], valid: ch.valid_regs[sel as usize] };
            }
        }

        self.start = false;
        self.cycle += 1;

        if let (Some(trace), Some(fsm)) = (self.trace.as_mut(), pre_fsm) {
            trace.push(TraceRow {
                cycle: self.cycle,
                pes: self
                    .pes
                    .iter()
                    .zip(fsm)
                    .map(|(p, fsm)| PeTrace { fsm, valid: p.valid, out: p.out_buf })
                    .collect(),
                channels: self.chans.iter().map(|c| c.out_regs.clone()).collect(),
            });
        }
    }

    /// Streams `frames` through the grid, one every [`INITIATION_INTERVAL`]
    /// cycles, and collects one result per frame.
    pub fn run_frames(&mut self, frames: &[Frame]) -> Result<RunResult, SimError> {
        let expected = self.host.len();
        if let Some((i, f)) = frames.iter().enumerate().find(|(_, f)| f.0.len() != expected) {
            return Err(SimError::FrameWidth { frame: i, expected, found: f.0.len() });
        }
        let levels = self.spec.levels.len() as u32;
        let origin = self.cycle;
        let deadline = match frames.len() {
            0 => 0,
            n => (n as u64 - 1) * INITIATION_INTERVAL + latency(levels) + 3 * levels as u64,
        };
        let mut outputs = Vec::with_capacity(frames.len());
        let mut next = 0;
        while outputs.len() < frames.len() {
            if next < frames.len() && self.cycle - origin == next as u64 * INITIATION_INTERVAL {
                self.present(&frames[next])?;
                next += 1;
            }
            self.step();
            if self.output_valid() {
                outputs.push(self.outputs().iter().map(|r| r.value).collect());
            }
            if self.cycle - origin > deadline && outputs.len() < frames.len() {
                return Err(SimError::Stall {
                    expected: frames.len(),
                    collected: outputs.len(),
                    cycles: self.cycle - origin,
                });
            }
        }
        Ok(RunResult { outputs, cycles: self.cycle - origin, div_by_zero: self.div_by_zero })
    }
}

/// Runs `frames` on a fresh grid.
pub fn run(spec: &GridSpec, config: &GridConfig, frames: &[Frame]) -> Result<RunResult, SimError> {
    SimGrid::new(spec, config)?.run_frames(frames)
}
