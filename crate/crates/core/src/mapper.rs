//! Placement and routing of levelized graphs onto grids.
//!
//! Channels are full crossbars, so any placement that fits the level
//! capacities is routable. Placement is deterministic: within a level nodes
//! take slots left to right in id order.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::config::{GridConfig, Opcode, PeConfig, ShapeError};
use crate::graph::{LeveledGraph, NodeKind, TaskGraph};
use crate::grid::{GridError, GridSpec};

/// Position of a node on the grid. `level` is 1-based like graph levels;
/// grid level index is `level - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub level: u32,
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Placement {
    slots: BTreeMap<String, Slot>,
}

impl Placement {
    pub fn get(&self, id: &str) -> Option<Slot> {
        self.slots.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Slot)> {
        self.slots.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Occupied slots per grid level.
    pub fn occupancy(&self, levels: usize) -> Vec<usize> {
        let mut out = vec![0; levels];
        for slot in self.slots.values() {
            out[slot.level as usize - 1] += 1;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapError {
    Grid(GridError),
    TooManyLevels { graph: u32, grid: u32 },
    ShallowGraph { graph: u32, grid: u32 },
    LevelOverflow { level: u32, demand: usize, capacity: u32 },
    TooManyInputs { demand: usize, capacity: u32 },
    TooManyOutputs { demand: usize, capacity: u32 },
    PlacementMismatch(String),
    Shape(ShapeError),
}

impl fmt::Display for MapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapError::Grid(e) => write!(f, "{e}"),
            MapError::TooManyLevels { graph, grid } => {
                write!(f, "graph needs {graph} levels, grid has {grid}")
            }
            MapError::ShallowGraph { graph, grid } => write!(
                f,
                "graph has {graph} levels but the grid has {grid}; extend the graph to the grid depth first"
            ),
            MapError::LevelOverflow { level, demand, capacity } => write!(
                f,
                "level {level} needs {demand} PEs, grid provides {capacity} (short by {})",
                demand - *capacity as usize
            ),
            MapError::TooManyInputs { demand, capacity } => {
                write!(f, "graph has {demand} inputs, memory interface accepts {capacity}")
            }
            MapError::TooManyOutputs { demand, capacity } => {
                write!(f, "graph has {demand} outputs, output interface provides {capacity}")
            }
            MapError::PlacementMismatch(msg) => write!(f, "placement does not match graph: {msg}"),
            MapError::Shape(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for MapError {}

impl From<GridError> for MapError {
    fn from(e: GridError) -> Self {
        MapError::Grid(e)
    }
}

/// Assigns every OP/BUF node a distinct slot on its level.
///
/// The graph must be exactly as deep as the grid unless it has no outputs;
/// use [`LeveledGraph::extend_to_depth`] (as [`map`] does) to pad it.
pub fn place(g: &LeveledGraph, spec: &GridSpec) -> Result<Placement, MapError> {
    spec.check()?;
    let grid_levels = spec.levels.len() as u32;
    let graph = g.graph();
    if g.depth() > grid_levels {
        return Err(MapError::TooManyLevels { graph: g.depth(), grid: grid_levels });
    }
    let outputs = graph.count(NodeKind::Output);
    if g.depth() < grid_levels && outputs > 0 {
        return Err(MapError::ShallowGraph { graph: g.depth(), grid: grid_levels });
    }
    let inputs = graph.count(NodeKind::Input);
    if inputs > spec.memory_input_count as usize {
        return Err(MapError::TooManyInputs { demand: inputs, capacity: spec.memory_input_count });
    }
    let last = spec.levels[spec.levels.len() - 1].pe_count;
    if outputs > last as usize {
        return Err(MapError::TooManyOutputs { demand: outputs, capacity: last });
    }
    for (i, &demand) in g.graph_width().iter().enumerate() {
        let capacity = spec.levels[i].pe_count;
        if demand > capacity as usize {
            return Err(MapError::LevelOverflow { level: i as u32 + 1, demand, capacity });
        }
    }

    let mut by_level: Vec<Vec<&str>> = vec![Vec::new(); g.depth() as usize];
    for (i, node) in graph.nodes().iter().enumerate() {
        if let NodeKind::Op(_) = node.kind {
            by_level[g.level(i) as usize - 1].push(node.id.as_str());
        }
    }
    let mut slots = BTreeMap::new();
    for (l, ids) in by_level.iter_mut().enumerate() {
        ids.sort_unstable();
        for (index, id) in ids.iter().enumerate() {
            slots.insert(String::from(*id), Slot { level: l as u32 + 1, index: index as u32 });
        }
    }
    Ok(Placement { slots })
}

/// Produces the grid settings realizing `g` under placement `p`.
///
/// Operand `q` of the node in slot `s` on level `k` is fed by output
/// `2 * s + q` of the channel above level `k`. Inputs are addressed by their
/// rank in id order, outputs likewise. Unused outputs select 0.
pub fn route(g: &LeveledGraph, p: &Placement, spec: &GridSpec) -> Result<GridConfig, MapError> {
    let channels = spec.derive_channels()?;
    let graph = g.graph();
    let mut cfg = GridConfig::empty(&channels, spec);

    let mut input_rank = vec![usize::MAX; graph.nodes().len()];
    for (rank, i) in graph.canonical_inputs().into_iter().enumerate() {
        input_rank[i] = rank;
    }
    let slot_of = |i: usize| -> Result<Slot, MapError> {
        let id = &graph.nodes()[i].id;
        let slot = p
            .get(id)
            .ok_or_else(|| MapError::PlacementMismatch(alloc::format!("`{id}` is not placed")))?;
        if slot.level != g.level(i) || slot.level as usize > spec.levels.len() {
            return Err(MapError::PlacementMismatch(alloc::format!("`{id}` placed on wrong level")));
        }
        if slot.index >= spec.levels[slot.level as usize - 1].pe_count {
            return Err(MapError::PlacementMismatch(alloc::format!("`{id}` placed outside its level")));
        }
        Ok(slot)
    };
    // Index of `src` among the predecessors of the channel feeding level `level`.
    let source_index = |src: usize, level: u32| -> Result<u32, MapError> {
        match graph.nodes()[src].kind {
            NodeKind::Input if level == 1 => Ok(input_rank[src] as u32),
            NodeKind::Op(_) => {
                let s = slot_of(src)?;
                if s.level + 1 != level {
                    return Err(MapError::PlacementMismatch(alloc::format!(
                        "edge from `{}` skips a level",
                        graph.nodes()[src].id
                    )));
                }
                Ok(s.index)
            }
            _ => Err(MapError::PlacementMismatch(alloc::format!(
                "input `{}` feeds a node below level 1",
                graph.nodes()[src].id
            ))),
        }
    };

    let mut placed = 0;
    for (i, node) in graph.nodes().iter().enumerate() {
        let NodeKind::Op(op) = node.kind else { continue };
        let slot = slot_of(i)?;
        placed += 1;
        let level = slot.level as usize - 1;
        cfg.pe_configs[spec.slot_offset(level) + slot.index as usize] = PeConfig { opcode: Opcode::from(op) };
        let sources = graph.sources(i).expect("op nodes have sources");
        let channel = if level == 0 { &mut cfg.input_distribution } else { &mut cfg.channel_configs[level - 1] };
        for (port, &src) in sources.iter().enumerate() {
            channel.selects[2 * slot.index as usize + port] = source_index(src, slot.level)?;
        }
    }
    if placed != p.len() {
        return Err(MapError::PlacementMismatch(alloc::format!(
            "placement has {} entries, graph has {placed} placed nodes",
            p.len()
        )));
    }

    let bottom = spec.levels.len() as u32 + 1;
    for (rank, out) in graph.canonical_outputs().into_iter().enumerate() {
        let src = graph.sources(out).expect("outputs have a source")[0];
        if rank >= cfg.output_selection.selects.len() {
            return Err(MapError::TooManyOutputs {
                demand: rank + 1,
                capacity: cfg.output_selection.selects.len() as u32,
            });
        }
        cfg.output_selection.selects[rank] = source_index(src, bottom)?;
    }
    cfg.check_shape(spec, &channels).map_err(MapError::Shape)?;
    Ok(cfg)
}

/// Levelize, pad to the grid depth, place, route.
pub fn map(g: &TaskGraph, spec: &GridSpec) -> Result<GridConfig, MapError> {
    map_detailed(g, spec).map(|m| m.config)
}

/// Leveled graph, placement and settings together, for callers that need to
/// inspect the intermediate results.
#[derive(Debug, Clone)]
pub struct Mapping {
    pub leveled: LeveledGraph,
    pub placement: Placement,
    pub config: GridConfig,
}

pub fn map_detailed(g: &TaskGraph, spec: &GridSpec) -> Result<Mapping, MapError> {
    let leveled = g.levelize();
    let grid_levels = spec.levels.len() as u32;
    if leveled.depth() > grid_levels {
        return Err(MapError::TooManyLevels { graph: leveled.depth(), grid: grid_levels });
    }
    let leveled = leveled.extend_to_depth(grid_levels);
    let placement = place(&leveled, spec)?;
    let config = route(&leveled, &placement, spec)?;
    Ok(Mapping { leveled, placement, config })
}
