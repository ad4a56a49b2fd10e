mod common;

use common::{evaluate, random_dag, random_inputs, ALL_OPS};
use pixie_core::codec::{decode, encode, VirtualBitstream};
use pixie_core::graph::NamedEdge;
use pixie_core::grid::{GridSpec, LevelSpec};
use pixie_core::kernels::{
    build_sobel_graph, run_sobel_on_grid, sobel_grid, sobel_reference, sobel_sums, Image, Kernel3x3, SOBEL_GX,
    SOBEL_GY,
};
use pixie_core::sim::{latency, INITIATION_INTERVAL};
use pixie_core::{map, run, ChannelConfig, Frame, GridConfig, Node, NodeKind, Op, Opcode, PeConfig, SimGrid, TaskGraph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WIDTHS: [u32; 4] = [8, 16, 32, 64];

fn frame_for(inputs: &[i64], spec: &GridSpec) -> Frame {
    let mut words = vec![0i64; spec.memory_input_count as usize];
    words[..inputs.len()].copy_from_slice(inputs);
    Frame(words)
}

#[test]
fn grid_matches_dataflow_oracle_on_random_dags() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xda6);
    for case in 0..120 {
        let g = random_dag(&mut rng, 5, 6, &ALL_OPS);
        let bits = WIDTHS[case % WIDTHS.len()];
        let lg = g.levelize();
        let width = *lg.graph_width().iter().max().unwrap() as u32;
        let spec = GridSpec::rectangular(width, lg.depth(), bits).unwrap();
        let config = map(&g, &spec).unwrap();

        let vectors: Vec<Vec<i64>> =
            (0..12).map(|_| random_inputs(&mut rng, g.count(NodeKind::Input), bits)).collect();
        let frames: Vec<Frame> = vectors.iter().map(|v| frame_for(v, &spec)).collect();
        let result = run(&spec, &config, &frames).unwrap();

        let outputs = g.count(NodeKind::Output);
        let mut any_div0 = false;
        for (v, got) in vectors.iter().zip(&result.outputs) {
            let want = evaluate(&g, v, bits);
            any_div0 |= want.div_by_zero;
            assert_eq!(&got[..outputs], &want.outputs[..], "case {case}, inputs {v:?}");
        }
        assert_eq!(result.div_by_zero, any_div0, "case {case}");
    }
}

/// in0 + in1 followed by `levels - 1` doublings.
fn chain(levels: u32) -> TaskGraph {
    let mut nodes = vec![Node::input("in0"), Node::input("in1")];
    let mut edges = vec![NamedEdge::new("in0", "n1", 0), NamedEdge::new("in1", "n1", 1)];
    nodes.push(Node::op("n1", Op::Add));
    for l in 2..=levels {
        let (prev, id) = (format!("n{}", l - 1), format!("n{l}"));
        nodes.push(Node::op(id.clone(), Op::Add));
        edges.push(NamedEdge::new(prev.clone(), id.clone(), 0));
        edges.push(NamedEdge::new(prev, id, 1));
    }
    nodes.push(Node::output("out"));
    edges.push(NamedEdge::new(format!("n{levels}"), "out", 0));
    TaskGraph::new(nodes, edges).unwrap()
}

#[test]
fn latency_and_throughput() {
    for levels in 1..=6u32 {
        let spec = GridSpec::rectangular(1, levels, 32).unwrap();
        let config = map(&chain(levels), &spec).unwrap();

        let mut grid = SimGrid::new(&spec, &config).unwrap();
        grid.present(&Frame(vec![3, 4])).unwrap();
        let mut first = None;
        for _ in 0..100 {
            grid.step();
            if grid.output_valid() {
                first = Some(grid.cycle());
                break;
            }
        }
        assert_eq!(first, Some(4 * levels as u64 + 1));
        assert_eq!(latency(levels), 4 * levels as u64 + 1);
        assert_eq!(grid.outputs()[0].value, 7 << (levels - 1));

        // Consecutive frames leave the grid exactly three cycles apart.
        let mut grid = SimGrid::new(&spec, &config).unwrap().with_trace();
        let frames: Vec<Frame> = (0..8).map(|i| Frame(vec![i, 1])).collect();
        let result = grid.run_frames(&frames).unwrap();
        assert_eq!(result.cycles, latency(levels) + 7 * INITIATION_INTERVAL);
        let valid_cycles: Vec<u64> = grid
            .trace()
            .iter()
            .filter(|row| row.channels.last().unwrap().iter().any(|r| r.valid))
            .map(|row| row.cycle)
            .collect();
        assert_eq!(valid_cycles.len(), 8);
        assert!(valid_cycles.windows(2).all(|w| w[1] - w[0] == 3), "{valid_cycles:?}");
        for (i, out) in result.outputs.iter().enumerate() {
            assert_eq!(out[0], (i as i64 + 1) << (levels - 1));
        }
    }
}

#[test]
fn valid_is_a_single_cycle_pulse() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let g = random_dag(&mut rng, 4, 5, &ALL_OPS);
        let lg = g.levelize();
        let width = *lg.graph_width().iter().max().unwrap() as u32;
        let spec = GridSpec::rectangular(width, lg.depth(), 16).unwrap();
        let config = map(&g, &spec).unwrap();
        let frames: Vec<Frame> = (0..5)
            .map(|_| frame_for(&random_inputs(&mut rng, g.count(NodeKind::Input), 16), &spec))
            .collect();
        let mut grid = SimGrid::new(&spec, &config).unwrap().with_trace();
        grid.run_frames(&frames).unwrap();
        let trace = grid.trace();
        for pe in 0..spec.total_pe_slots() {
            for w in trace.windows(2) {
                assert!(!(w[0].pes[pe].valid && w[1].pes[pe].valid), "pe {pe} valid twice at {}", w[1].cycle);
            }
            if config.pe_configs[pe].opcode == Opcode::None {
                assert!(trace.iter().all(|r| !r.pes[pe].valid));
            }
        }
    }
}

#[test]
fn trace_is_deterministic() {
    let g = build_sobel_graph();
    let spec = sobel_grid();
    let config = map(&g, &spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let frames: Vec<Frame> = (0..6).map(|_| Frame((0..18).map(|_| rng.gen_range(-9..=255)).collect())).collect();
    let trace = |frames: &[Frame]| {
        let mut grid = SimGrid::new(&spec, &config).unwrap().with_trace();
        let r = grid.run_frames(frames).unwrap();
        (r, grid.trace().to_vec())
    };
    assert_eq!(trace(&frames), trace(&frames));
}

#[test]
fn division_flag_is_sticky() {
    let g = TaskGraph::new(
        vec![Node::input("a"), Node::input("b"), Node::op("q", Op::Div), Node::output("out")],
        vec![NamedEdge::new("a", "q", 0), NamedEdge::new("b", "q", 1), NamedEdge::new("q", "out", 0)],
    )
    .unwrap();
    let spec = GridSpec::rectangular(1, 1, 16).unwrap();
    let config = map(&g, &spec).unwrap();
    let mut grid = SimGrid::new(&spec, &config).unwrap();
    let mut seen = false;
    for (i, b) in [3, 1, 0, 5, 2, 7].iter().enumerate() {
        let r = grid.run_frames(&[Frame(vec![12, *b])]).unwrap();
        seen |= *b == 0;
        assert_eq!(r.div_by_zero, seen, "frame {i}");
        assert_eq!(r.outputs[0][0], if *b == 0 { 0 } else { 12 / b });
    }
}

fn arb_grid() -> impl Strategy<Value = GridSpec> {
    (
        1u32..=20,
        1u32..=64,
        prop::collection::vec((1u32..=10, 1u32..=64, 1u32..=64), 1..=5),
    )
        .prop_map(|(m, bits, levels)| GridSpec {
            memory_input_count: m,
            memory_input_bitwidth: bits,
            levels: levels
                .into_iter()
                .map(|(pe_count, pe_input_bitwidth, pe_output_bitwidth)| LevelSpec {
                    pe_count,
                    pe_input_bitwidth,
                    pe_output_bitwidth,
                })
                .collect(),
        })
}

fn random_config(spec: &GridSpec, seed: u64) -> GridConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels = spec.derive_channels().unwrap();
    let pick = |rng: &mut ChaCha8Rng, c: usize| ChannelConfig {
        selects: (0..channels[c].output_count).map(|_| rng.gen_range(0..channels[c].predecessor_count)).collect(),
    };
    let pe_configs =
        (0..spec.total_pe_slots()).map(|_| PeConfig { opcode: Opcode::ALL[rng.gen_range(0..8)] }).collect();
    let input_distribution = pick(&mut rng, 0);
    let channel_configs = (1..spec.levels.len()).map(|c| pick(&mut rng, c)).collect();
    let output_selection = pick(&mut rng, spec.levels.len());
    GridConfig { pe_configs, input_distribution, channel_configs, output_selection }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn codec_roundtrip(spec in arb_grid(), seed in any::<u64>()) {
        let cfg = random_config(&spec, seed);
        let bs = encode(&cfg, &spec).unwrap();

        let slots = spec.total_pe_slots() as u64;
        let channels = spec.derive_channels().unwrap();
        let select_bits: u64 = channels.iter().map(|c| c.output_count as u64 * c.select_word_width as u64).sum();
        prop_assert_eq!(bs.payload.len() as u64, (4 * slots + select_bits).div_ceil(8));

        prop_assert_eq!(&decode(&bs, &spec).unwrap(), &cfg);
        let reread = VirtualBitstream::from_bytes(&bs.to_bytes()).unwrap();
        prop_assert_eq!(&reread, &bs);
    }
}

#[test]
fn sobel_bitstream_size() {
    let spec = GridSpec::rectangular(9, 5, 8).unwrap();
    let cfg = map(&build_sobel_graph(), &spec).unwrap();
    let bs = encode(&cfg, &spec).unwrap();
    // 45 opcodes; 18 five-bit memory selects (18 words); 4 x 18 + 9
    // four-bit selects over 9 PEs.
    assert_eq!(4 * 45 + 18 * 5 + (4 * 18 + 9) * 4, 594);
    assert_eq!(bs.payload.len(), 75);
    assert_eq!(cfg.occupied(), 20);
}

fn random_image(rng: &mut impl Rng, w: u32, h: u32) -> Image {
    Image::new(w, h, (0..w * h).map(|_| rng.gen()).collect()).unwrap()
}

#[test]
fn zero_kernel_gives_zero_output() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let img = random_image(&mut rng, 9, 7);
    let out = sobel_reference(&img, &Kernel3x3([0; 9])).unwrap();
    assert!(out.pixels().iter().all(|&p| p == 0));
}

#[test]
fn sums_are_linear_in_the_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let img = random_image(&mut rng, 8, 6);
        let a = Kernel3x3(core::array::from_fn(|_| rng.gen_range(-4..=4)));
        let b = Kernel3x3(core::array::from_fn(|_| rng.gen_range(-4..=4)));
        let ab = Kernel3x3(core::array::from_fn(|i| a.0[i] + b.0[i]));
        let (sa, sb, sab) =
            (sobel_sums(&img, &a).unwrap(), sobel_sums(&img, &b).unwrap(), sobel_sums(&img, &ab).unwrap());
        for i in 0..sab.len() {
            assert_eq!(sab[i], sa[i] + sb[i]);
        }
    }
}

#[test]
fn grid_matches_reference_on_random_images() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spec = sobel_grid();
    for k in [SOBEL_GX, SOBEL_GY] {
        for _ in 0..3 {
            let img = random_image(&mut rng, 16, 12);
            assert_eq!(run_sobel_on_grid(&img, &k, &spec).unwrap(), sobel_reference(&img, &k).unwrap());
        }
    }
}

#[test]
fn constant_image_has_no_edges() {
    let img = Image::filled(10, 10, 137);
    for k in [SOBEL_GX, SOBEL_GY] {
        let out = run_sobel_on_grid(&img, &k, &sobel_grid()).unwrap();
        assert!(out.pixels().iter().all(|&p| p == 0));
    }
}

/// Direct 2-D convolution: flip the mask, then correlate. Borders stay 0.
fn brute_force(img: &Image, k: &Kernel3x3) -> Vec<u8> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let px = img.pixels();
    let flipped: [[i64; 3]; 3] = core::array::from_fn(|r| core::array::from_fn(|c| k.0[(2 - r) * 3 + (2 - c)]));
    let mut out = vec![0u8; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let mut acc = 0i64;
            for r in 0..3 {
                for c in 0..3 {
                    acc += flipped[r][c] * px[(y + r - 1) * w + (x + c - 1)] as i64;
                }
            }
            out[y * w + x] = acc.abs().min(255) as u8;
        }
    }
    out
}

#[test]
fn small_random_image_against_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5 {
        let img = random_image(&mut rng, 8, 8);
        let want = brute_force(&img, &SOBEL_GX);
        assert_eq!(sobel_reference(&img, &SOBEL_GX).unwrap().pixels(), &want[..]);
        assert_eq!(run_sobel_on_grid(&img, &SOBEL_GX, &sobel_grid()).unwrap().pixels(), &want[..]);
    }
}

#[test]
fn doubling_coefficients_doubles_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let img = random_image(&mut rng, 10, 9);
    for k in [SOBEL_GX, SOBEL_GY] {
        let doubled = Kernel3x3(k.0.map(|c| 2 * c));
        let (a, b) = (sobel_sums(&img, &k).unwrap(), sobel_sums(&img, &doubled).unwrap());
        assert!(a.iter().zip(&b).all(|(x, y)| 2 * x == *y));
    }
}
