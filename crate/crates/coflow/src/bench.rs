//! Paired comparison of the schemes over generated workloads.

use std::io::Write;
use std::time::Instant;

use coflow_core::lp::SolverOptions;
use coflow_core::sim::{improvement, Scheme};
use rayon::prelude::*;
use serde::Serialize;

use crate::gen::{gen_instance, GenParams};
use crate::run::simulate_scheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Vary flows per coflow.
    Width,
    /// Vary the number of coflows.
    Coflows,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Base workload; the swept field is overwritten per point.
    pub gen: GenParams,
    pub axis: SweepAxis,
    pub points: Vec<usize>,
    pub reps: usize,
    pub schemes: Vec<Scheme>,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub axis: SweepAxis,
    pub point: usize,
    pub rep: usize,
    pub seed: u64,
    pub scheme: String,
    pub objective: f64,
    pub makespan: f64,
    pub stretch: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub point: usize,
    pub rep: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub axis: SweepAxis,
    pub point: usize,
    pub scheme: String,
    pub cells: usize,
    pub mean_objective: f64,
    /// Improvement of the LP-based scheme over this one on mean objectives.
    pub lp_improvement_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
    pub failures: Vec<CellFailure>,
    pub summary: Vec<SummaryRow>,
}

/// Seed of repetition `rep` at point index `i`; every scheme of a cell
/// shares it.
pub fn cell_seed(base: u64, i: usize, reps: usize, rep: usize) -> u64 {
    base.wrapping_add((i * reps + rep) as u64)
}

fn run_cell(cfg: &BenchConfig, i: usize, rep: usize) -> Result<Vec<BenchRow>, CellFailure> {
    let point = cfg.points[i];
    let seed = cell_seed(cfg.gen.seed, i, cfg.reps, rep);
    let fail = |reason: String| CellFailure { point, rep, reason };
    let mut gen = GenParams { seed, ..cfg.gen.clone() };
    match cfg.axis {
        SweepAxis::Width => gen.width = point,
        SweepAxis::Coflows => gen.coflows = point,
    }
    let inst = gen_instance(&gen).map_err(|e| fail(e.to_string()))?;
    let mut rows = Vec::new();
    for &scheme in &cfg.schemes {
        let t0 = Instant::now();
        let out = simulate_scheme(&inst, scheme, seed, &cfg.solver).map_err(|e| fail(format!("{scheme}: {e}")))?;
        rows.push(BenchRow {
            axis: cfg.axis,
            point,
            rep,
            seed,
            scheme: scheme.name().to_string(),
            objective: out.report.objective,
            makespan: out.report.makespan(),
            stretch: out.report.stretch,
            wall_ms: t0.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(rows)
}

/// Runs every (point, repetition) cell in parallel. A failing cell is
/// dropped whole so that the remaining comparisons stay paired.
pub fn run_bench(cfg: &BenchConfig) -> BenchResult {
    let cells: Vec<(usize, usize)> = (0..cfg.points.len()).flat_map(|i| (0..cfg.reps).map(move |r| (i, r))).collect();
    let outcomes: Vec<_> = cells.par_iter().map(|&(i, r)| run_cell(cfg, i, r)).collect();
    let mut result = BenchResult::default();
    for o in outcomes {
        match o {
            Ok(rows) => result.rows.extend(rows),
            Err(f) => {
                log::warn!("cell point={} rep={} failed: {}", f.point, f.rep, f.reason);
                result.failures.push(f);
            }
        }
    }
    for &point in &cfg.points {
        let mean = |scheme: Scheme| {
            let objs: Vec<f64> = result.rows.iter().filter(|r| r.point == point && r.scheme == scheme.name()).map(|r| r.objective).collect();
            (objs.len(), objs.iter().sum::<f64>() / objs.len().max(1) as f64)
        };
        let lp = cfg.schemes.contains(&Scheme::LpBased).then(|| mean(Scheme::LpBased).1);
        for &scheme in &cfg.schemes {
            let (cells, m) = mean(scheme);
            result.summary.push(SummaryRow {
                axis: cfg.axis,
                point,
                scheme: scheme.name().to_string(),
                cells,
                mean_objective: m,
                lp_improvement_pct: lp.filter(|_| cells > 0).map(|a| improvement(a, m)),
            });
        }
    }
    result
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
