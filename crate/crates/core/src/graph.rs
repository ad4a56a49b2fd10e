//! Dataflow task graphs and their levelized form.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Operations a PE can be asked to perform. `Buf` only appears in levelized
/// graphs; it copies its single source to the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Gt,
    Eq,
    Buf,
}

impl Op {
    /// Operations accepted in graph documents.
    pub const APPLICATION: [Op; 6] = [Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Gt, Op::Eq];

    pub fn name(self) -> &'static str {
        match self {
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Gt => "gt",
            Op::Eq => "eq",
            Op::Buf => "buf",
        }
    }

    pub fn from_name(name: &str) -> Option<Op> {
        Op::APPLICATION.into_iter().find(|op| op.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Input,
    Output,
    Op(Op),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
}

impl Node {
    pub fn input(id: impl Into<String>) -> Node {
        Node { id: id.into(), kind: NodeKind::Input }
    }

    pub fn output(id: impl Into<String>) -> Node {
        Node { id: id.into(), kind: NodeKind::Output }
    }

    pub fn op(id: impl Into<String>, op: Op) -> Node {
        Node { id: id.into(), kind: NodeKind::Op(op) }
    }
}

/// Edge between node indices. `port` selects the destination operand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub port: u8,
}

/// An edge as written in a document, before ids are resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedEdge {
    pub src: String,
    pub dst: String,
    pub port: u32,
}

impl NamedEdge {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, port: u32) -> Self {
        NamedEdge { src: src.into(), dst: dst.into(), port }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    DuplicateId(String),
    UnknownNode { edge: usize, id: String },
    BadPort { edge: usize, port: u32 },
    PortFilledTwice { node: String, port: u8 },
    MissingPort { node: String, port: u8 },
    InputHasInEdge { node: String },
    OutputInDegree { node: String, count: usize },
    OutputHasOutEdge { node: String },
    BufSourcesDiffer { node: String },
    Cycle { node: String },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::DuplicateId(id) => write!(f, "duplicate node id `{id}`"),
            GraphError::UnknownNode { edge, id } => write!(f, "edge {edge}: unknown node `{id}`"),
            GraphError::BadPort { edge, port } => write!(f, "edge {edge}: port {port} is not 0 or 1"),
            GraphError::PortFilledTwice { node, port } => {
                write!(f, "node `{node}`: port {port} has more than one in-edge")
            }
            GraphError::MissingPort { node, port } => write!(f, "node `{node}`: port {port} is not driven"),
            GraphError::InputHasInEdge { node } => write!(f, "input node `{node}` has an in-edge"),
            GraphError::OutputInDegree { node, count } => {
                write!(f, "output node `{node}` has {count} in-edges, expected 1")
            }
            GraphError::OutputHasOutEdge { node } => write!(f, "output node `{node}` has an out-edge"),
            GraphError::BufSourcesDiffer { node } => {
                write!(f, "buffer node `{node}` must read the same source on both ports")
            }
            GraphError::Cycle { node } => write!(f, "graph has a cycle through `{node}`"),
        }
    }
}

impl core::error::Error for GraphError {}

/// A validated dataflow DAG.
///
/// Every OP node has both ports driven exactly once, inputs have no
/// in-edges, outputs have exactly one in-edge and no out-edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    sources: Vec<[usize; 2]>,
    topo: Vec<usize>,
}

const NO_SOURCE: usize = usize::MAX;

impl TaskGraph {
    pub fn new(nodes: Vec<Node>, edges: Vec<NamedEdge>) -> Result<TaskGraph, GraphError> {
        let index = index_nodes(&nodes)?;
        let mut resolved = Vec::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            let lookup = |id: &String| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| GraphError::UnknownNode { edge: i, id: id.clone() })
            };
            let src = lookup(&e.src)?;
            let dst = lookup(&e.dst)?;
            if e.port > 1 {
                return Err(GraphError::BadPort { edge: i, port: e.port });
            }
            resolved.push(Edge { src, dst, port: e.port as u8 });
        }
        TaskGraph::from_indexed(nodes, resolved)
    }

    pub fn from_indexed(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<TaskGraph, GraphError> {
        index_nodes(&nodes)?;
        let n = nodes.len();
        let mut sources = vec![[NO_SOURCE; 2]; n];
        let mut in_degree = vec![0usize; n];
        let mut out_degree = vec![0usize; n];
        for (i, e) in edges.iter().enumerate() {
            if e.src >= n || e.dst >= n {
                let bad = if e.src >= n { e.src } else { e.dst };
                return Err(GraphError::UnknownNode { edge: i, id: bad.to_string() });
            }
            if e.port > 1 {
                return Err(GraphError::BadPort { edge: i, port: e.port as u32 });
            }
            in_degree[e.dst] += 1;
            out_degree[e.src] += 1;
            let dst = &nodes[e.dst];
            match dst.kind {
                NodeKind::Input => return Err(GraphError::InputHasInEdge { node: dst.id.clone() }),
                NodeKind::Output => sources[e.dst][0] = e.src,
                NodeKind::Op(_) => {
                    let slot = &mut sources[e.dst][e.port as usize];
                    if *slot != NO_SOURCE {
                        return Err(GraphError::PortFilledTwice { node: dst.id.clone(), port: e.port });
                    }
                    *slot = e.src;
                }
            }
        }
        for (i, node) in nodes.iter().enumerate() {
            match node.kind {
                NodeKind::Input => {}
                NodeKind::Output => {
                    if in_degree[i] != 1 {
                        return Err(GraphError::OutputInDegree { node: node.id.clone(), count: in_degree[i] });
                    }
                    if out_degree[i] != 0 {
                        return Err(GraphError::OutputHasOutEdge { node: node.id.clone() });
                    }
                    sources[i][1] = sources[i][0];
                }
                NodeKind::Op(op) => {
                    for port in 0..2u8 {
                        if sources[i][port as usize] == NO_SOURCE {
                            return Err(GraphError::MissingPort { node: node.id.clone(), port });
                        }
                    }
                    if op == Op::Buf && sources[i][0] != sources[i][1] {
                        return Err(GraphError::BufSourcesDiffer { node: node.id.clone() });
                    }
                }
            }
        }
        let topo = topological_order(&nodes, &edges)?;
        Ok(TaskGraph { nodes, edges, sources, topo })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Source node of each port. Outputs report their single source on both.
    /// Inputs have no sources and return `None`.
    pub fn sources(&self, node: usize) -> Option<[usize; 2]> {
        match self.nodes[node].kind {
            NodeKind::Input => None,
            _ => Some(self.sources[node]),
        }
    }

    /// Node indices in a topological order (sources before consumers).
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn find(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Input node indices ordered by id. Position in this list is the
    /// memory-interface word index of the input.
    pub fn canonical_inputs(&self) -> Vec<usize> {
        self.sorted_by_id(NodeKind::Input)
    }

    /// Output node indices ordered by id. Position in this list is the
    /// output-interface index of the output.
    pub fn canonical_outputs(&self) -> Vec<usize> {
        self.sorted_by_id(NodeKind::Output)
    }

    fn sorted_by_id(&self, kind: NodeKind) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.nodes.len()).filter(|&i| self.nodes[i].kind == kind).collect();
        out.sort_by(|&a, &b| self.nodes[a].id.cmp(&self.nodes[b].id));
        out
    }

    pub fn op_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n.kind, NodeKind::Op(_))).count()
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// ASAP levelization with buffer insertion.
    ///
    /// Inputs sit at level 0, every OP node at one more than its deepest
    /// source, and outputs one below the deepest OP level. Any edge that
    /// skips levels is routed through a chain of BUF nodes, one per skipped
    /// level. Consumers of the same source share that source's chain.
    pub fn levelize(&self) -> LeveledGraph {
        let n = self.nodes.len();
        let mut level = vec![0u32; n];
        for &i in &self.topo {
            if let NodeKind::Op(_) = self.nodes[i].kind {
                let [a, b] = self.sources[i];
                level[i] = 1 + level[a].max(level[b]);
            }
        }
        let mut depth = (0..n)
            .filter(|&i| matches!(self.nodes[i].kind, NodeKind::Op(_)))
            .map(|i| level[i])
            .max()
            .unwrap_or(0);
        if depth == 0 && self.nodes.iter().any(|n| n.kind == NodeKind::Output) {
            depth = 1;
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.kind == NodeKind::Output {
                level[i] = depth + 1;
            }
        }

        // Deepest consumer level per source decides the length of its chain.
        let mut reach = vec![0u32; n];
        for e in &self.edges {
            reach[e.src] = reach[e.src].max(level[e.dst]);
        }

        let mut nodes = self.nodes.clone();
        let mut levels = level.clone();
        let mut taken: BTreeSet<String> = nodes.iter().map(|n| n.id.clone()).collect();
        // chain[src] lists BUF node indices for levels level[src]+1 ..
        let mut chains: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut buf_edges = Vec::new();
        for src in 0..n {
            let first = level[src] + 1;
            let mut prev = src;
            for l in first..reach[src] {
                let mut id = format!("{}.buf{}", self.nodes[src].id, l);
                while taken.contains(&id) {
                    id.push('_');
                }
                taken.insert(id.clone());
                let idx = nodes.len();
                nodes.push(Node::op(id, Op::Buf));
                levels.push(l);
                buf_edges.push(Edge { src: prev, dst: idx, port: 0 });
                buf_edges.push(Edge { src: prev, dst: idx, port: 1 });
                chains[src].push(idx);
                prev = idx;
            }
        }

        let mut edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|e| {
                let span = level[e.dst] - level[e.src];
                if span > 1 {
                    Edge { src: chains[e.src][(span - 2) as usize], ..*e }
                } else {
                    *e
                }
            })
            .collect();
        edges.extend(buf_edges);

        let graph = TaskGraph::from_indexed(nodes, edges)
            .expect("buffer insertion preserves graph validity");
        LeveledGraph { graph, levels, depth }
    }
}

fn index_nodes(nodes: &[Node]) -> Result<BTreeMap<&str, usize>, GraphError> {
    let mut index = BTreeMap::new();
    for (i, node) in nodes.iter().enumerate() {
        if index.insert(node.id.as_str(), i).is_some() {
            return Err(GraphError::DuplicateId(node.id.clone()));
        }
    }
    Ok(index)
}

fn topological_order(nodes: &[Node], edges: &[Edge]) -> Result<Vec<usize>, GraphError> {
    let n = nodes.len();
    let mut indeg = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in edges {
        indeg[e.dst] += 1;
        succ[e.src].push(e.dst);
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = queue.pop_front() {
        order.push(i);
        for &j in &succ[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                queue.push_back(j);
            }
        }
    }
    if order.len() != n {
        let stuck = (0..n).find(|&i| indeg[i] > 0).unwrap_or(0);
        return Err(GraphError::Cycle { node: nodes[stuck].id.clone() });
    }
    Ok(order)
}

/// A task graph where every OP/BUF node carries a level and every edge
/// between them spans exactly one level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeveledGraph {
    graph: TaskGraph,
    levels: Vec<u32>,
    depth: u32,
}

impl LeveledGraph {
    pub fn graph(&self) -> &TaskGraph {
        &self.graph
    }

    pub fn nodes(&self) -> &[Node] {
        self.graph.nodes()
    }

    pub fn edges(&self) -> &[Edge] {
        self.graph.edges()
    }

    /// 0 for inputs, `1..=depth` for OP/BUF nodes, `depth + 1` for outputs.
    pub fn level(&self, node: usize) -> u32 {
        self.levels[node]
    }

    /// Number of PE levels the graph occupies.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn buf_count(&self) -> usize {
        self.graph
            .nodes()
            .iter()
            .filter(|n| n.kind == NodeKind::Op(Op::Buf))
            .count()
    }

    /// OP+BUF node count per level, top to bottom.
    pub fn graph_width(&self) -> Vec<usize> {
        let mut widths = vec![0usize; self.depth as usize];
        for (i, node) in self.graph.nodes().iter().enumerate() {
            if let NodeKind::Op(_) = node.kind {
                widths[self.levels[i] as usize - 1] += 1;
            }
        }
        widths
    }

    /// Forgets the levels. BUF nodes stay in the graph as ordinary nodes.
    pub fn strip_levels(&self) -> TaskGraph {
        self.graph.clone()
    }

    /// Pads the graph to `depth` levels by extending every output's buffer
    /// chain down to the new last level. Graphs without outputs just grow.
    pub fn extend_to_depth(&self, depth: u32) -> LeveledGraph {
        if depth <= self.depth {
            return self.clone();
        }
        let g = &self.graph;
        let mut nodes = g.nodes().to_vec();
        let mut levels = self.levels.clone();
        let mut edges = g.edges().to_vec();
        let mut taken: BTreeSet<String> = nodes.iter().map(|n| n.id.clone()).collect();
        for out in g.canonical_outputs() {
            let pos = edges.iter().position(|e| e.dst == out).expect("output has one in-edge");
            let mut prev = edges[pos].src;
            for l in (self.depth + 1).max(levels[prev] + 1)..=depth {
                let mut id = format!("{}.pad{}", g.nodes()[out].id, l);
                while taken.contains(&id) {
                    id.push('_');
                }
                taken.insert(id.clone());
                let idx = nodes.len();
                nodes.push(Node::op(id, Op::Buf));
                levels.push(l);
                edges.push(Edge { src: prev, dst: idx, port: 0 });
                edges.push(Edge { src: prev, dst: idx, port: 1 });
                prev = idx;
            }
            edges[pos].src = prev;
            levels[out] = depth + 1;
        }
        let graph = TaskGraph::from_indexed(nodes, edges).expect("padding preserves graph validity");
        LeveledGraph { graph, levels, depth }
    }
}
