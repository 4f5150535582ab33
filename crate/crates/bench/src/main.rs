use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lowrank::amm::StopRule;
use lowrank::newton::NewtonStop;
use lowrank::rank222::{best222_core_rank, rank222_experiment};
use lowrank::synth::GeneratorSpec;
use lowrank::tensor::io::{read_any, write_binary, write_text};
use lowrank::Tensor;
use lowrank_bench::{converged_spread, run_bench, write_csv, write_traces, Algorithm, BenchConfig, InitKind};

const CONFIG_ERROR: u8 = 2;
const SOLVER_FAILURE: u8 = 3;

/// Benchmarks for best low-rank tensor approximation.
#[derive(Parser)]
#[command(name = "lowrank-bench", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    bench: BenchArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic tensor.
    Generate {
        /// Generator, e.g. gaussian:8x8x8:3 or lowrank:6x6x6:2,2,2:0.0:7.
        spec: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Fraction of Gaussian 2×2×2 tensors of rank at most two.
    Rank222 {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Core of the best (2,2,2)-approximation and its rank.
    Best222 {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 10)]
        max_iters: usize,
        #[arg(long, default_value_t = 4.53999e-5)]
        newton_tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Binary,
}

#[derive(Args)]
#[group(required = false, multiple = false)]
struct Source {
    /// Tensor file, text or binary container.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Generator spec instead of an input file.
    #[arg(long)]
    generate: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    source: Source,
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',', default_value = "amm,mamm,2ammv")]
    algos: Vec<String>,
    /// One rank per mode; defaults to 2 in every mode.
    #[arg(long, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    /// Comma-separated seeds or a range `a..b`.
    #[arg(long, default_value = "0..10")]
    seeds: String,
    #[arg(long, default_value_t = 10)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-4)]
    fit_tol: f64,
    #[arg(long, default_value_t = 4.53999e-5)]
    newton_tol: f64,
    /// AMM sweeps before a Newton method starts.
    #[arg(long, default_value_t = 1)]
    warm_sweeps: usize,
    /// Starting point: random (seeded) or hosvd.
    #[arg(long, default_value = "random")]
    init: String,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for per-run objective traces.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Solver(String),
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range '{s}'"))?;
        let b: u64 = b.trim().parse().map_err(|_| format!("bad seed range '{s}'"))?;
        return Ok((a..b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| format!("bad seed '{x}'"))).collect()
}

fn load(source: &Source) -> Result<Tensor, Failure> {
    match (&source.input, &source.generate) {
        (Some(path), None) => {
            let bytes = std::fs::read(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            read_any(&bytes).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
        }
        (None, Some(spec)) => spec
            .parse::<GeneratorSpec>()
            .and_then(|g| g.generate())
            .map_err(|e| Failure::Config(e.to_string())),
        _ => Err(Failure::Config("give exactly one of --input or --generate".into())),
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn bench(args: &BenchArgs) -> Result<(), Failure> {
    let t = load(&args.source)?;
    let algorithms = args.algos.iter().map(|a| a.parse::<Algorithm>()).collect::<Result<Vec<_>, _>>().map_err(Failure::Config)?;
    let ranks = args.ranks.clone().unwrap_or_else(|| t.shape().iter().map(|&n| n.min(2)).collect());
    let mut config = BenchConfig::new(algorithms, ranks);
    config.seeds = parse_seeds(&args.seeds).map_err(Failure::Config)?;
    config.stop = StopRule { max_iters: args.max_iters, fit_tol: args.fit_tol };
    config.newton = NewtonStop { max_iters: args.max_iters, change_tol: args.newton_tol };
    config.warm_sweeps = args.warm_sweeps;
    config.init = args.init.parse::<InitKind>().map_err(Failure::Config)?;
    let outcome = run_bench(&t, &config).map_err(Failure::Config)?;
    let mut w = output(&args.out)?;
    write_csv(&outcome.records, &mut w).map_err(|e| Failure::Config(e.to_string()))?;
    w.flush().map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(dir) = &args.trace_dir {
        write_traces(&outcome.records, dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
    }
    for &seed in &config.seeds {
        if let Some(spread) = converged_spread(&outcome.records, seed) {
            if spread > 1e-4 * t.hs_norm() {
                eprintln!("note: seed {seed}: converged runs differ in HS norm by {spread:.3e} (different stationary points)");
            }
        }
    }
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        let msgs: Vec<String> = outcome.failures.iter().map(ToString::to_string).collect();
        Err(Failure::Solver(msgs.join("\n")))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        None => bench(&cli.bench),
        Some(Command::Generate { spec, out, format }) => {
            let t = spec.parse::<GeneratorSpec>().and_then(|g| g.generate()).map_err(|e| Failure::Config(e.to_string()))?;
            let mut w = output(&out)?;
            match format {
                Format::Text => write_text(&t, &mut w),
                Format::Binary => write_binary(&t, &mut w),
            }
            .map_err(|e| Failure::Config(e.to_string()))?;
            w.flush().map_err(|e| Failure::Config(e.to_string()))
        }
        Some(Command::Rank222 { samples, seed }) => {
            let (p, se) = rank222_experiment(samples, seed).map_err(|e| Failure::Config(e.to_string()))?;
            println!("samples,seed,rank2_fraction,std_error,pi_over_4");
            println!("{samples},{seed},{p:.6},{se:.6},{:.6}", std::f64::consts::FRAC_PI_4);
            Ok(())
        }
        Some(Command::Best222 { source, max_iters, newton_tol }) => {
            let t = load(&source)?;
            let stop = NewtonStop::new(max_iters, newton_tol).map_err(|e| Failure::Config(e.to_string()))?;
            let fallback = StopRule::new(max_iters, 1e-4).map_err(|e| Failure::Config(e.to_string()))?;
            let (core, rank) = match best222_core_rank(&t, &stop, &fallback) {
                Ok(r) => r,
                Err(e @ lowrank::Error::Dimension(_)) => return Err(Failure::Config(e.to_string())),
                Err(e) => return Err(Failure::Solver(e.to_string())),
            };
            println!("core_rank,{rank}");
            println!("core_hs_norm,{:.12e}", core.hs_norm());
            let mut w = io::stdout().lock();
            write_text(&core, &mut w).map_err(|e| Failure::Config(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(CONFIG_ERROR)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure:\n{msg}");
            ExitCode::from(SOLVER_FAILURE)
        }
    }
}
