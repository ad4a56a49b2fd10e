//! JSON documents exchanged by the toolchain.
//!
//! Grid files and GridConfig files mirror the core types field for field.
//! Task graphs use a small document of nodes and edges:
//!
//! ```json
//! {"nodes": [{"id": "a", "kind": "input"},
//!            {"id": "s", "kind": "op", "op": "add"},
//!            {"id": "out", "kind": "output"}],
//!  "edges": [{"src": "a", "dst": "s", "port": 0}, ...]}
//! ```

use std::fs;
use std::path::Path;

use pixie_core::graph::NamedEdge;
use pixie_core::kernels::Kernel3x3;
use pixie_core::{Frame, GridConfig, GridSpec, Netlist, Node, NodeKind, Op, TaskGraph};
use serde::{Deserialize, Serialize};

use crate::Error;

pub fn read_text(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse<'a, T: Deserialize<'a>>(what: &str, text: &'a str) -> Result<T, Error> {
    serde_json::from_str(text).map_err(|e| Error::json(what, e))
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("document types always serialize");
    s.push('\n');
    s
}

/// Parses and validates a grid file.
pub fn parse_grid(text: &str) -> Result<GridSpec, Error> {
    let spec: GridSpec = parse("grid", text)?;
    spec.check()?;
    Ok(spec)
}

/// Canonical form: the same bytes the digest is computed over.
pub fn grid_to_json(spec: &GridSpec) -> String {
    let mut s = spec.canonical_json();
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum KindDoc {
    Input,
    Output,
    Op,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: String,
    kind: KindDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    op: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    src: String,
    dst: String,
    port: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
}

/// Parses a task graph document. Buffers are not part of the application
/// vocabulary; they are inserted by levelization.
pub fn parse_graph(text: &str) -> Result<TaskGraph, Error> {
    let doc: GraphDoc = parse("graph", text)?;
    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for n in doc.nodes {
        let kind = match (n.kind, n.op) {
            (KindDoc::Input, None) => NodeKind::Input,
            (KindDoc::Output, None) => NodeKind::Output,
            (KindDoc::Op, Some(name)) => match Op::from_name(&name) {
                Some(op) => NodeKind::Op(op),
                None => return Err(Error::Format(format!("node `{}`: unknown op `{name}`", n.id))),
            },
            (KindDoc::Op, None) => return Err(Error::Format(format!("node `{}`: op node without `op`", n.id))),
            (_, Some(_)) => {
                return Err(Error::Format(format!("node `{}`: only op nodes carry `op`", n.id)))
            }
        };
        nodes.push(Node { id: n.id, kind });
    }
    let edges = doc.edges.into_iter().map(|e| NamedEdge::new(e.src, e.dst, e.port)).collect();
    Ok(TaskGraph::new(nodes, edges)?)
}

pub fn graph_to_json(g: &TaskGraph) -> String {
    let nodes = g
        .nodes()
        .iter()
        .map(|n| {
            let (kind, op) = match n.kind {
                NodeKind::Input => (KindDoc::Input, None),
                NodeKind::Output => (KindDoc::Output, None),
                NodeKind::Op(op) => (KindDoc::Op, Some(op.name().to_owned())),
            };
            NodeDoc { id: n.id.clone(), kind, op }
        })
        .collect();
    let edges = g
        .edges()
        .iter()
        .map(|e| EdgeDoc {
            src: g.nodes()[e.src].id.clone(),
            dst: g.nodes()[e.dst].id.clone(),
            port: e.port as u32,
        })
        .collect();
    pretty(&GraphDoc { nodes, edges })
}

pub fn parse_config(text: &str) -> Result<GridConfig, Error> {
    parse("config", text)
}

pub fn config_to_json(cfg: &GridConfig) -> String {
    pretty(cfg)
}

/// Frames file: a JSON array of arrays of integers, one array per frame.
pub fn parse_frames(text: &str) -> Result<Vec<Frame>, Error> {
    let words: Vec<Vec<i64>> = parse("frames", text)?;
    Ok(words.into_iter().map(Frame).collect())
}

/// One compact line per frame.
pub fn outputs_to_json(outputs: &[Vec<i64>]) -> String {
    if outputs.is_empty() {
        return String::from("[]\n");
    }
    let lines: Vec<String> =
        outputs.iter().map(|o| serde_json::to_string(o).expect("integers serialize")).collect();
    format!("[\n  {}\n]\n", lines.join(",\n  "))
}

/// Kernel file: nine integers, row-major.
pub fn parse_kernel(text: &str) -> Result<Kernel3x3, Error> {
    let coeffs: [i64; 9] = parse("kernel", text)?;
    Ok(Kernel3x3(coeffs))
}

pub fn netlist_to_json(n: &Netlist) -> String {
    pretty(n)
}
