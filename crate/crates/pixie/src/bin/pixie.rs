use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use pixie::formats::{self, read_text, write_text};
use pixie::pgm::{load_pgm, save_pgm};
use pixie::trace::trace_to_csv;
use pixie::Error;
use pixie_core::kernels::{self, Image, Kernel3x3, SOBEL_GX, SOBEL_GY};
use pixie_core::mapper::map_detailed;
use pixie_core::{decode, encode, export_netlist, GridSpec, SimGrid, VirtualBitstream};

/// Toolchain for the Pixie virtual coarse-grained reconfigurable array.
#[derive(Parser)]
#[command(name = "pixie", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and inspect grid descriptions.
    #[command(subcommand)]
    Grid(GridCommand),
    /// Map a task graph onto a grid, writing its configuration and bitstream.
    Compile {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        bitstream: PathBuf,
    },
    /// Convert between configuration files and virtual bitstreams.
    #[command(subcommand)]
    Bitstream(BitstreamCommand),
    /// Stream frames through a configured grid.
    Sim {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        bitstream: PathBuf,
        #[arg(long)]
        frames: PathBuf,
        /// Results file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write a per-cycle CSV trace.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a 3x3 edge filter over a PGM image on the simulated grid.
    Sobel(SobelArgs),
}

#[derive(Subcommand)]
enum GridCommand {
    /// Rectangular grid with uniform bitwidths.
    Gen {
        #[arg(long)]
        width: u32,
        #[arg(long)]
        levels: u32,
        #[arg(long)]
        bits: u32,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    Stats { grid: PathBuf },
    /// Structural netlist as JSON.
    Netlist {
        grid: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BitstreamCommand {
    Encode {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    Decode {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        bitstream: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SobelArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Kernel file (nine integers, row-major). Defaults to the horizontal
    /// Sobel mask.
    #[arg(long, conflicts_with_all = ["gy", "magnitude"])]
    kernel: Option<PathBuf>,
    /// Use the vertical Sobel mask.
    #[arg(long, conflicts_with = "magnitude")]
    gy: bool,
    /// Run both masks and write min(|Gx| + |Gy|, 255).
    #[arg(long)]
    magnitude: bool,
    /// Grid file; otherwise a rectangular grid from the shape flags.
    #[arg(long, conflicts_with_all = ["width", "levels", "bits"])]
    grid: Option<PathBuf>,
    #[arg(long, default_value_t = 9)]
    width: u32,
    #[arg(long, default_value_t = 5)]
    levels: u32,
    #[arg(long, default_value_t = 16)]
    bits: u32,
    /// Fail unless the grid result equals the software reference.
    #[arg(long)]
    compare_reference: bool,
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_grid(path: &Path) -> Result<GridSpec, Error> {
    formats::parse_grid(&read_text(path)?)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, Error> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn load_bitstream(path: &Path, spec: &GridSpec) -> Result<pixie_core::GridConfig, Error> {
    let bs = VirtualBitstream::from_bytes(&read_bytes(path)?)?;
    Ok(decode(&bs, spec)?)
}

fn grid(cmd: GridCommand) -> Result<(), Error> {
    match cmd {
        GridCommand::Gen { width, levels, bits, output } => {
            let spec = GridSpec::rectangular(width, levels, bits)?;
            emit(output.as_deref(), &formats::grid_to_json(&spec))
        }
        GridCommand::Stats { grid } => {
            let spec = load_grid(&grid)?;
            let stats = spec.stats()?;
            println!("{} PE slots, {} channels", stats.total_pe_slots, stats.intermediate_channel_count);
            println!("{} configuration bits", stats.total_config_bits);
            Ok(())
        }
        GridCommand::Netlist { grid, output } => {
            let spec = load_grid(&grid)?;
            emit(output.as_deref(), &formats::netlist_to_json(&export_netlist(&spec)?))
        }
    }
}

fn compile(graph: &Path, grid: &Path, config: &Path, bitstream: &Path) -> Result<(), Error> {
    let g = formats::parse_graph(&read_text(graph)?)?;
    let spec = load_grid(grid)?;
    let start = Instant::now();
    let mapping = map_detailed(&g, &spec)?;
    let elapsed = start.elapsed();
    eprintln!("mapping took {:.3} ms", elapsed.as_secs_f64() * 1e3);
    let bs = encode(&mapping.config, &spec)?;
    write_text(config, &formats::config_to_json(&mapping.config))?;
    write_bytes(bitstream, &bs.to_bytes())?;
    eprintln!(
        "{} of {} PEs used, {} buffers",
        mapping.config.occupied(),
        spec.total_pe_slots(),
        mapping.leveled.buf_count()
    );
    Ok(())
}

fn bitstream(cmd: BitstreamCommand) -> Result<(), Error> {
    match cmd {
        BitstreamCommand::Encode { grid, config, output } => {
            let spec = load_grid(&grid)?;
            let cfg = formats::parse_config(&read_text(&config)?)?;
            write_bytes(&output, &encode(&cfg, &spec)?.to_bytes())
        }
        BitstreamCommand::Decode { grid, bitstream, output } => {
            let spec = load_grid(&grid)?;
            let cfg = load_bitstream(&bitstream, &spec)?;
            emit(output.as_deref(), &formats::config_to_json(&cfg))
        }
    }
}

fn sim(grid: &Path, bitstream: &Path, frames: &Path, output: Option<&Path>, trace: Option<&Path>) -> Result<(), Error> {
    let spec = load_grid(grid)?;
    let cfg = load_bitstream(bitstream, &spec)?;
    let frames = formats::parse_frames(&read_text(frames)?)?;
    let mut sim = SimGrid::new(&spec, &cfg)?;
    if trace.is_some() {
        sim = sim.with_trace();
    }
    let result = sim.run_frames(&frames)?;
    if let Some(path) = trace {
        write_text(path, &trace_to_csv(&spec, sim.trace())?)?;
    }
    if result.div_by_zero {
        eprintln!("warning: division by zero occurred");
    }
    emit(output, &formats::outputs_to_json(&result.outputs))
}

fn sobel(args: SobelArgs) -> Result<(), Error> {
    let img = load_pgm(&read_bytes(&args.input)?)?;
    let spec = match &args.grid {
        Some(path) => load_grid(path)?,
        None => GridSpec::rectangular(args.width, args.levels, args.bits)?,
    };
    let kernels: Vec<Kernel3x3> = if args.magnitude {
        vec![SOBEL_GX, SOBEL_GY]
    } else if let Some(path) = &args.kernel {
        vec![formats::parse_kernel(&read_text(path)?)?]
    } else if args.gy {
        vec![SOBEL_GY]
    } else {
        vec![SOBEL_GX]
    };

    let mut results: Vec<Image> = Vec::new();
    for k in &kernels {
        let out = kernels::run_sobel_on_grid(&img, k, &spec)?;
        if args.compare_reference {
            let reference = kernels::sobel_reference(&img, k)?;
            let mismatches = out.pixels().iter().zip(reference.pixels()).filter(|(a, b)| a != b).count();
            if mismatches > 0 {
                return Err(Error::Format(format!("{mismatches} pixels differ from the reference")));
            }
        }
        results.push(out);
    }
    let out = match results.as_slice() {
        [gx, gy] => kernels::combine_magnitude(gx, gy),
        _ => results.pop().expect("one kernel"),
    };
    if args.compare_reference {
        eprintln!("grid output matches reference ({} frames)", (img.width() - 2) * (img.height() - 2));
    }
    write_bytes(&args.output, &save_pgm(&out))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Grid(cmd) => grid(cmd),
        Command::Compile { graph, grid, config, bitstream } => compile(&graph, &grid, &config, &bitstream),
        Command::Bitstream(cmd) => bitstream(cmd),
        Command::Sim { grid, bitstream, frames, output, trace } => {
            sim(&grid, &bitstream, &frames, output.as_deref(), trace.as_deref())
        }
        Command::Sobel(args) => sobel(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
