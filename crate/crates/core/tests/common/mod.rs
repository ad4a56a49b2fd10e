//! Random task graphs and an independent dataflow evaluator used as the
//! oracle for mapping and simulation tests.

#![allow(dead_code)]

use std::collections::HashMap;

use pixie_core::graph::{NamedEdge, Node, NodeKind, Op, TaskGraph};
use rand::seq::SliceRandom;
use rand::Rng;

pub const ALL_OPS: [Op; 6] = [Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Gt, Op::Eq];

/// A DAG with `1..=max_levels` levels of `1..=max_width` ops each. Every
/// input is consumed on level 1; each op reads one operand from the level
/// directly above so levels are exact. Outputs hang off distinct nodes, at
/// least one on the last level.
pub fn random_dag<R: Rng>(rng: &mut R, max_levels: u32, max_width: usize, ops: &[Op]) -> TaskGraph {
    let levels = rng.gen_range(1..=max_levels);
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut by_level: Vec<Vec<String>> = Vec::new();

    let first_width = rng.gen_range(1..=max_width);
    let inputs = rng.gen_range(1..=2 * first_width);
    let input_ids: Vec<String> = (0..inputs).map(|i| format!("in{i:02}")).collect();
    for id in &input_ids {
        nodes.push(Node::input(id.clone()));
    }
    by_level.push(input_ids.clone());

    for level in 1..=levels {
        let width = if level == 1 { first_width } else { rng.gen_range(1..=max_width) };
        let mut ids = Vec::new();
        for k in 0..width {
            let id = format!("n{level}_{k}");
            let op = *ops.choose(rng).unwrap();
            nodes.push(Node::op(id.clone(), op));
            let (a, b) = if level == 1 {
                (input_ids[(2 * k) % inputs].clone(), input_ids[(2 * k + 1) % inputs].clone())
            } else {
                let above = &by_level[level as usize - 1];
                let a = above.choose(rng).unwrap().clone();
                let from = rng.gen_range(0..level as usize);
                let b = by_level[from].choose(rng).unwrap().clone();
                (a, b)
            };
            let (p, q) = if rng.gen_bool(0.5) { (0, 1) } else { (1, 0) };
            edges.push(NamedEdge::new(a, id.clone(), p));
            edges.push(NamedEdge::new(b, id.clone(), q));
            ids.push(id);
        }
        by_level.push(ids);
    }

    let last = by_level.last().unwrap().clone();
    let outs = rng.gen_range(1..=last.len().min(3));
    let mut sources: Vec<String> = last.choose_multiple(rng, outs).cloned().collect();
    // Occasionally tap an earlier level too, exercising output buffer chains.
    if levels > 1 && rng.gen_bool(0.3) {
        let l = rng.gen_range(1..levels as usize);
        sources.push(by_level[l].choose(rng).unwrap().clone());
    }
    for (i, src) in sources.into_iter().enumerate() {
        let id = format!("out{i}");
        nodes.push(Node::output(id.clone()));
        edges.push(NamedEdge::new(src, id, 0));
    }
    TaskGraph::new(nodes, edges).expect("generator builds valid graphs")
}

/// Low `bits` bits of `v` read as two's complement, via i128 modular
/// arithmetic.
pub fn wrap(v: i128, bits: u32) -> i64 {
    let m = 1i128 << bits;
    let mut r = v.rem_euclid(m);
    if r >= m / 2 {
        r -= m;
    }
    r as i64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub outputs: Vec<i64>,
    pub div_by_zero: bool,
}

struct Evaluator<'a> {
    nodes: &'a [Node],
    src: HashMap<(usize, u8), usize>,
    input_ids: Vec<&'a str>,
    inputs: &'a [i64],
    bits: u32,
    memo: HashMap<usize, i64>,
    div0: bool,
}

impl Evaluator<'_> {
    fn value(&mut self, i: usize) -> i64 {
        if let Some(&v) = self.memo.get(&i) {
            return v;
        }
        let v = match self.nodes[i].kind {
            NodeKind::Input => {
                let rank = self.input_ids.iter().position(|&id| id == self.nodes[i].id).unwrap();
                wrap(self.inputs[rank] as i128, self.bits)
            }
            NodeKind::Output => self.value(self.src[&(i, 0)]),
            NodeKind::Op(op) => {
                let a = self.value(self.src[&(i, 0)]) as i128;
                let b = self.value(self.src[&(i, 1)]) as i128;
                let r = match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => {
                        if b == 0 {
                            self.div0 = true;
                            0
                        } else {
                            a / b
                        }
                    }
                    Op::Gt => (a > b) as i128,
                    Op::Eq => (a == b) as i128,
                    Op::Buf => a,
                };
                wrap(r, self.bits)
            }
        };
        self.memo.insert(i, v);
        v
    }
}

/// Evaluates every node of `g` at a uniform word width by direct recursion
/// over node ids. `inputs[r]` feeds the input whose id ranks `r`.
pub fn evaluate(g: &TaskGraph, inputs: &[i64], bits: u32) -> Evaluation {
    let nodes = g.nodes();
    let mut src: HashMap<(usize, u8), usize> = HashMap::new();
    for e in g.edges() {
        src.insert((e.dst, e.port), e.src);
    }
    let mut input_ids: Vec<&str> =
        nodes.iter().filter(|n| n.kind == NodeKind::Input).map(|n| n.id.as_str()).collect();
    input_ids.sort();
    let mut ev = Evaluator { nodes, src, input_ids, inputs, bits, memo: HashMap::new(), div0: false };
    for i in 0..nodes.len() {
        ev.value(i);
    }
    let (memo, div0) = (ev.memo, ev.div0);

    let mut outs: Vec<(&str, usize)> = nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.kind == NodeKind::Output)
        .map(|(i, n)| (n.id.as_str(), i))
        .collect();
    outs.sort();
    Evaluation { outputs: outs.iter().map(|&(_, i)| memo[&i]).collect(), div_by_zero: div0 }
}

pub fn random_inputs<R: Rng>(rng: &mut R, n: usize, bits: u32) -> Vec<i64> {
    let half = 1i64 << (bits.min(63) - 1);
    (0..n)
        .map(|_| match rng.gen_range(0..4) {
            0 => rng.gen_range(-4..=4),
            _ => rng.gen_range(-half..half),
        })
        .collect()
}
