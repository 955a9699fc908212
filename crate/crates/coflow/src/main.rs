use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use coflow_core::circuit::{RoundingParams, DEFAULT_EPSILON};
use coflow_core::lp::SolverOptions;
use coflow_core::packet::DEFAULT_HORIZON_CAP;
use coflow_core::sim::Scheme;
use coflow_core::Mode;

use coflow::bench::{run_bench, write_csv, BenchConfig, SweepAxis};
use coflow::config::Config;
use coflow::gen::{gen_instance, GenParams};
use coflow::io::{read_instance, to_json, write_instance, write_text, ModeDoc};
use coflow::run::{lp_export, simulate_doc, solve, SolveOptions};

/// Coflow scheduling: generate workloads, solve and round the interval
/// programs, simulate heuristics and compare them.
#[derive(Parser, Debug)]
#[command(name = "coflow", version)]
struct Cli {
    /// TOML settings (`[lp] feas_tol, opt_tol, iter_cap`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Random instance on a fat tree.
    Gen(GenArgs),
    /// Solve the interval program of an instance and round it.
    Solve(SolveArgs),
    /// Run one scheme through the event simulator.
    Simulate(SimArgs),
    /// Paired benchmark of all schemes over a sweep.
    Bench(BenchArgs),
    /// Write the interval program in CPLEX LP format.
    LpExport(ExportArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Number of coflows.
    #[arg(long, short = 'n', default_value_t = 10)]
    coflows: usize,
    /// Flows per coflow.
    #[arg(long, short = 'w', default_value_t = 4)]
    width: usize,
    #[arg(long, default_value_t = 10.0)]
    size_mean: f64,
    #[arg(long, default_value_t = 5.0)]
    release_mean: f64,
    #[arg(long, default_value_t = 2.0)]
    weight_mean: f64,
    #[arg(long, default_value_t = 1.0)]
    capacity: f64,
    #[arg(long, value_enum, default_value = "paths-free")]
    mode: ModeDoc,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    instance: PathBuf,
    /// Override the mode stored in the instance.
    #[arg(long, value_enum)]
    mode: Option<ModeDoc>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Displacement factor.
    #[arg(long)]
    disp: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_HORIZON_CAP)]
    horizon_cap: usize,
    /// Packets keep the paths stored in the instance.
    #[arg(long)]
    given_paths: bool,
    /// Also write the program in CPLEX LP format here.
    #[arg(long)]
    lp_dump: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimArgs {
    instance: PathBuf,
    #[arg(long, default_value = "lp-based")]
    scheme: Scheme,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "width")]
    sweep: SweepAxis,
    /// Sweep values, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [4usize, 8, 16, 32])]
    points: Vec<usize>,
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Coflow count when sweeping width.
    #[arg(long, short = 'n', default_value_t = 10)]
    coflows: usize,
    /// Width when sweeping coflow count.
    #[arg(long, short = 'w', default_value_t = 16)]
    width: usize,
    #[arg(long, default_value_t = 10.0)]
    size_mean: f64,
    #[arg(long, default_value_t = 5.0)]
    release_mean: f64,
    #[arg(long, default_value_t = 2.0)]
    weight_mean: f64,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for results.csv and summary.csv.
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExportArgs {
    instance: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<ModeDoc>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_HORIZON_CAP)]
    horizon_cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_text(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COFLOW_LOG", "warn")).init();
    let cli = Cli::parse();
    let solver = match &cli.config {
        Some(p) => Config::load(p)?.solver(),
        None => SolverOptions::default(),
    };
    match cli.command {
        Command::Gen(a) => {
            let p = GenParams {
                k: a.k,
                link_capacity: a.capacity,
                coflows: a.coflows,
                width: a.width,
                size_mean: a.size_mean,
                release_mean: a.release_mean,
                weight_mean: a.weight_mean,
                mode: a.mode.into(),
                seed: a.seed,
            };
            let inst = gen_instance(&p)?;
            match &a.out {
                Some(path) => write_instance(path, &inst)?,
                None => emit(None, &to_json(&coflow::io::InstanceDoc::from_instance(&inst))?)?,
            }
        }
        Command::Solve(a) => {
            let inst = read_instance(&a.instance)?;
            let mode = a.mode.map(Mode::from).unwrap_or(inst.mode());
            let base = if mode == Mode::PathsFree { RoundingParams::routing(a.seed) } else { RoundingParams { seed: a.seed, ..Default::default() } };
            let params = RoundingParams {
                alpha: a.alpha.unwrap_or(base.alpha),
                displacement: a.disp.unwrap_or(base.displacement),
                epsilon: a.epsilon.unwrap_or(base.epsilon),
                seed: a.seed,
            };
            if let Some(dump) = &a.lp_dump {
                write_text(dump, &lp_export(&inst, Some(mode), params.epsilon, a.horizon_cap)?)?;
            }
            let opts = SolveOptions {
                mode: Some(mode),
                params: Some(params),
                seed: a.seed,
                horizon_cap: a.horizon_cap,
                given_paths: a.given_paths,
                solver,
            };
            let doc = solve(&inst, &opts).with_context(|| format!("solving {}", a.instance.display()))?;
            emit(a.out.as_deref(), &to_json(&doc)?)?;
        }
        Command::Simulate(a) => {
            let inst = read_instance(&a.instance)?;
            if inst.mode() == Mode::Packet {
                bail!("the simulator handles circuit instances only");
            }
            emit(a.out.as_deref(), &to_json(&simulate_doc(&inst, a.scheme, a.seed, &solver)?)?)?;
        }
        Command::Bench(a) => {
            if a.reps == 0 {
                bail!("--reps must be at least 1");
            }
            let cfg = BenchConfig {
                gen: GenParams {
                    k: a.k,
                    coflows: a.coflows,
                    width: a.width,
                    size_mean: a.size_mean,
                    release_mean: a.release_mean,
                    weight_mean: a.weight_mean,
                    seed: a.seed,
                    ..GenParams::default()
                },
                axis: a.sweep,
                points: a.points,
                reps: a.reps,
                schemes: Scheme::ALL.to_vec(),
                solver,
            };
            let result = run_bench(&cfg);
            std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
            write_csv(&result.rows, std::fs::File::create(a.out.join("results.csv"))?)?;
            write_csv(&result.summary, std::fs::File::create(a.out.join("summary.csv"))?)?;
            write_csv(&result.summary, std::io::stdout())?;
            for f in &result.failures {
                eprintln!("cell point={} rep={} failed: {}", f.point, f.rep, f.reason);
            }
        }
        Command::LpExport(a) => {
            let inst = read_instance(&a.instance)?;
            let text = lp_export(&inst, a.mode.map(Mode::from), a.epsilon, a.horizon_cap)?;
            emit(a.out.as_deref(), &text)?;
        }
    }
    Ok(())
}
