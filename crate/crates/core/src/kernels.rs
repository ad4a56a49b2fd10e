//! Sobel edge detection: the 3x3 task graph, a software reference and
//! execution through a mapped grid.
//!
//! Both paths compute, for every interior pixel `(x, y)`,
//!
//! ```text
//! sum = Σ_{j,i ∈ -1..=1} k[1 + j][1 + i] · img[y - j][x - i]
//! ```
//!
//! and store `min(|sum|, 255)`. Border pixels are 0.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::graph::{NamedEdge, Node, Op, TaskGraph};
use crate::grid::GridSpec;
use crate::mapper::{map, MapError};
use crate::sim::{run, Frame, SimError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Image, KernelError> {
        if width == 0 || height == 0 || pixels.len() != width as usize * height as usize {
            return Err(KernelError::PixelCount { width, height, found: pixels.len() });
        }
        Ok(Image { width, height, pixels })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Image {
        Image { width, height, pixels: vec![value; width as usize * height as usize] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        self.pixels[(y * self.width + x) as usize] = v;
    }
}

/// 3x3 mask, row-major, setpoint at the center.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Kernel3x3(pub [i64; 9]);

pub const SOBEL_GX: Kernel3x3 = Kernel3x3([-1, 0, 1, -2, 0, 2, -1, 0, 1]);
pub const SOBEL_GY: Kernel3x3 = Kernel3x3([-1, -2, -1, 0, 0, 0, 1, 2, 1]);

impl Kernel3x3 {
    pub fn at(&self, row: usize, col: usize) -> i64 {
        self.0[row * 3 + col]
    }

    /// Largest `|sum|` any 8-bit neighborhood can produce.
    pub fn max_abs_sum(&self) -> i64 {
        255 * self.0.iter().map(|c| c.abs()).sum::<i64>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelError {
    PixelCount { width: u32, height: u32, found: usize },
    TooSmall { width: u32, height: u32 },
    Overflow { what: &'static str, bits: u32, needed: i64 },
    Map(MapError),
    Sim(SimError),
}

impl fmt::Display for KernelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelError::PixelCount { width, height, found } => {
                write!(f, "{width}x{height} image needs {} pixels, got {found}", *width as u64 * *height as u64)
            }
            KernelError::TooSmall { width, height } => {
                write!(f, "image is {width}x{height}, at least 3x3 is required")
            }
            KernelError::Overflow { what, bits, needed } => {
                write!(f, "{what} is {bits} bits wide, values up to {needed} need more")
            }
            KernelError::Map(e) => write!(f, "{e}"),
            KernelError::Sim(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for KernelError {}

/// The 3x3 filter as a task graph.
///
/// Inputs `p0..p8` are the neighborhood pixels and `c0..c8` the matching
/// coefficients (index `3 * (1 + j) + (1 + i)`). Products `m0..m8` are
/// summed by a balanced tree `a0..a6` over `m0..m7`, and `a7 = a6 + m8`
/// feeds the output `out`. Sorted input order puts `c0..c8` on memory words
/// 0..8 and `p0..p8` on words 9..17.
pub fn build_sobel_graph() -> TaskGraph {
    let mut nodes = Vec::with_capacity(36);
    let mut edges = Vec::with_capacity(36);
    for n in 0..9 {
        nodes.push(Node::input(format!("p{n}")));
        nodes.push(Node::input(format!("c{n}")));
        nodes.push(Node::op(format!("m{n}"), Op::Mul));
        edges.push(NamedEdge::new(format!("p{n}"), format!("m{n}"), 0));
        edges.push(NamedEdge::new(format!("c{n}"), format!("m{n}"), 1));
    }
    let tree: [(&str, &str, &str); 8] = [
        ("a0", "m0", "m1"),
        ("a1", "m2", "m3"),
        ("a2", "m4", "m5"),
        ("a3", "m6", "m7"),
        ("a4", "a0", "a1"),
        ("a5", "a2", "a3"),
        ("a6", "a4", "a5"),
        ("a7", "a6", "m8"),
    ];
    for (id, lhs, rhs) in tree {
        nodes.push(Node::op(id, Op::Add));
        edges.push(NamedEdge::new(lhs, id, 0));
        edges.push(NamedEdge::new(rhs, id, 1));
    }
    nodes.push(Node::output("out"));
    edges.push(NamedEdge::new("a7", "out", 0));
    TaskGraph::new(nodes, edges).expect("sobel graph is well formed")
}

/// 9x5 grid, 16-bit datapath throughout.
pub fn sobel_grid() -> GridSpec {
    GridSpec::rectangular(9, 5, 16).expect("valid shape")
}

fn check_size(img: &Image) -> Result<(), KernelError> {
    if img.width < 3 || img.height < 3 {
        return Err(KernelError::TooSmall { width: img.width, height: img.height });
    }
    Ok(())
}

/// Unclamped interior sums, row-major over the `(w - 2) x (h - 2)` interior.
pub fn sobel_sums(img: &Image, k: &Kernel3x3) -> Result<Vec<i64>, KernelError> {
    check_size(img)?;
    let mut out = Vec::with_capacity((img.width as usize - 2) * (img.height as usize - 2));
    for y in 1..img.height - 1 {
        for x in 1..img.width - 1 {
            let mut sum = 0i64;
            for j in -1i64..=1 {
                for i in -1i64..=1 {
                    let coeff = k.at((1 + j) as usize, (1 + i) as usize);
                    let px = img.get((x as i64 - i) as u32, (y as i64 - j) as u32);
                    sum += coeff * px as i64;
                }
            }
            out.push(sum);
        }
    }
    Ok(out)
}

pub fn clamp_magnitude(sum: i64) -> u8 {
    sum.unsigned_abs().min(255) as u8
}

fn assemble(img: &Image, sums: impl IntoIterator<Item = i64>) -> Image {
    let mut out = Image::filled(img.width, img.height, 0);
    let mut sums = sums.into_iter();
    for y in 1..img.height - 1 {
        for x in 1..img.width - 1 {
            out.set(x, y, clamp_magnitude(sums.next().expect("one sum per interior pixel")));
        }
    }
    out
}

pub fn sobel_reference(img: &Image, k: &Kernel3x3) -> Result<Image, KernelError> {
    let sums = sobel_sums(img, k)?;
    Ok(assemble(img, sums))
}

/// One memory-interface frame per interior pixel, row-major, padded with
/// zeros to `memory_inputs` words (at least the 18 the graph reads).
pub fn sobel_frames(img: &Image, k: &Kernel3x3, memory_inputs: usize) -> Result<Vec<Frame>, KernelError> {
    check_size(img)?;
    let mut frames = Vec::with_capacity((img.width as usize - 2) * (img.height as usize - 2));
    for y in 1..img.height - 1 {
        for x in 1..img.width - 1 {
            let mut words = vec![0i64; memory_inputs.max(18)];
            for j in -1i64..=1 {
                for i in -1i64..=1 {
                    let n = ((1 + j) * 3 + (1 + i)) as usize;
                    words[n] = k.0[n];
                    words[9 + n] = img.get((x as i64 - i) as u32, (y as i64 - j) as u32) as i64;
                }
            }
            frames.push(Frame(words));
        }
    }
    Ok(frames)
}

fn check_widths(k: &Kernel3x3, spec: &GridSpec) -> Result<(), KernelError> {
    let fits = |v: i64, bits: u32| bits >= 64 || v < (1i64 << (bits - 1));
    let max_word = k.0.iter().map(|c| c.abs()).max().unwrap_or(0).max(255);
    if !fits(max_word, spec.memory_input_bitwidth) {
        return Err(KernelError::Overflow {
            what: "memory interface",
            bits: spec.memory_input_bitwidth,
            needed: max_word,
        });
    }
    let bound = k.max_abs_sum().max(max_word);
    for level in &spec.levels {
        if !fits(bound, level.pe_input_bitwidth) || !fits(bound, level.pe_output_bitwidth) {
            let bits = level.pe_input_bitwidth.min(level.pe_output_bitwidth);
            return Err(KernelError::Overflow { what: "PE datapath", bits, needed: bound });
        }
    }
    Ok(())
}

/// Maps the filter graph onto `spec` and streams one frame per interior
/// pixel through the simulator.
///
/// The grid's datapath must hold every intermediate value exactly, so the
/// result equals [`sobel_reference`].
pub fn run_sobel_on_grid(img: &Image, k: &Kernel3x3, spec: &GridSpec) -> Result<Image, KernelError> {
    check_size(img)?;
    let config = map(&build_sobel_graph(), spec).map_err(KernelError::Map)?;
    check_widths(k, spec)?;
    let frames = sobel_frames(img, k, spec.memory_input_count as usize)?;
    let result = run(spec, &config, &frames).map_err(KernelError::Sim)?;
    Ok(assemble(img, result.outputs.iter().map(|o| o[0])))
}

/// Per-pixel `min(a + b, 255)`, the usual cheap gradient magnitude.
pub fn combine_magnitude(a: &Image, b: &Image) -> Image {
    let pixels = a.pixels.iter().zip(&b.pixels).map(|(&x, &y)| x.saturating_add(y)).collect();
    Image { width: a.width, height: a.height, pixels }
}
