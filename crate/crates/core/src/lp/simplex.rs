//! Bounded revised simplex.
//!
//! Every row `a x` gets a logical column `r` with `a x - r = 0`, and the row
//! relation becomes bounds on `r`. The all-logical basis is always a valid
//! start. Phase one minimizes the sum of bound violations of the basic
//! columns with costs recomputed every iteration, so no artificial columns
//! are needed. Pricing is Dantzig's rule; after a run of degenerate pivots
//! it switches to Bland's rule until the objective moves again.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use super::lu::{LuFactors, SparseVec};
use super::problem::{LpProblem, Relation, Sense};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Primal feasibility tolerance, relative to `max(1, |bound|)`.
    pub feas_tol: f64,
    /// Reduced-cost tolerance.
    pub opt_tol: f64,
    pub iter_cap: usize,
    pub refactor_every: usize,
    /// Tolerance of the independent check on the returned point.
    pub verify_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { feas_tol: 1e-9, opt_tol: 1e-9, iter_cap: 1_000_000, refactor_every: 100, verify_tol: 1e-7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective in the problem's own sense; meaningful when optimal.
    pub objective: f64,
    pub values: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("iteration cap of {0} reached")]
    IterationCap(usize),
    #[error("numerical trouble: {0}")]
    Numerical(String),
    #[error("problem has no variables")]
    Empty,
}

pub fn solve(problem: &LpProblem) -> Result<LpSolution, LpError> {
    solve_with(problem, &SolverOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic(usize),
    Lower,
    Upper,
    Zero,
}

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;

struct Simplex<'a> {
    opts: &'a SolverOptions,
    n: usize,
    m: usize,
    columns: Vec<SparseVec>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    lu: Option<LuFactors>,
    iterations: usize,
}

enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
}

pub fn solve_with(problem: &LpProblem, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    if problem.is_empty() {
        return Err(LpError::Empty);
    }
    let mut s = Simplex::new(problem, opts);
    let mut attempts = 0;
    loop {
        let outcome = s.run()?;
        let values = s.x[..s.n].to_vec();
        let status = match outcome {
            Outcome::Infeasible => LpStatus::Infeasible,
            Outcome::Unbounded => LpStatus::Unbounded,
            Outcome::Optimal => {
                let (viol, at) = problem.max_violation(&values);
                if viol > opts.verify_tol {
                    attempts += 1;
                    if attempts > 3 {
                        return Err(LpError::Numerical(alloc::format!(
                            "returned point violates {} by {viol:e}",
                            at.unwrap_or_default()
                        )));
                    }
                    log::debug!("re-verification failed by {viol:e}; refactoring");
                    s.refactor()?;
                    continue;
                }
                LpStatus::Optimal
            }
        };
        let objective = problem.objective_value(&values);
        return Ok(LpSolution { status, objective, values, iterations: s.iterations });
    }
}

fn rel(tol: f64, bound: f64) -> f64 {
    tol * bound.abs().max(1.0)
}

impl<'a> Simplex<'a> {
    fn new(p: &LpProblem, opts: &'a SolverOptions) -> Self {
        let n = p.num_vars();
        let m = p.num_constraints();
        let mut columns: Vec<SparseVec> = alloc::vec![Vec::new(); n + m];
        for (i, c) in p.constraints.iter().enumerate() {
            for &(v, a) in &c.terms {
                if a != 0.0 {
                    columns[v.0].push((i, a));
                }
            }
        }
        for col in columns.iter_mut().take(n) {
            col.sort_by_key(|e| e.0);
            let mut merged: SparseVec = Vec::with_capacity(col.len());
            for &(i, a) in col.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == i => last.1 += a,
                    _ => merged.push((i, a)),
                }
            }
            *col = merged;
        }
        for i in 0..m {
            columns[n + i] = alloc::vec![(i, -1.0)];
        }
        let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let mut cost: Vec<f64> = p.objective.iter().map(|c| sign * c).collect();
        cost.resize(n + m, 0.0);
        let mut lower: Vec<f64> = p.variables.iter().map(|v| v.lower).collect();
        let mut upper: Vec<f64> = p.variables.iter().map(|v| v.upper).collect();
        for c in &p.constraints {
            let (l, u) = match c.relation {
                Relation::Le => (f64::NEG_INFINITY, c.rhs),
                Relation::Ge => (c.rhs, f64::INFINITY),
                Relation::Eq => (c.rhs, c.rhs),
            };
            lower.push(l);
            upper.push(u);
        }
        let mut x = alloc::vec![0.0; n + m];
        let mut state = alloc::vec![State::Zero; n + m];
        for j in 0..n {
            if lower[j].is_finite() {
                x[j] = lower[j];
                state[j] = State::Lower;
            } else if upper[j].is_finite() {
                x[j] = upper[j];
                state[j] = State::Upper;
            }
        }
        let basis: Vec<usize> = (n..n + m).collect();
        for (pos, &j) in basis.iter().enumerate() {
            state[j] = State::Basic(pos);
        }
        Simplex { opts, n, m, columns, cost, lower, upper, x, state, basis, lu: None, iterations: 0 }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let lo = self.lower[j] - self.x[j];
        if lo > rel(self.opts.feas_tol, self.lower[j]) {
            return -1.0;
        }
        let hi = self.x[j] - self.upper[j];
        if hi > rel(self.opts.feas_tol, self.upper[j]) {
            return 1.0;
        }
        0.0
    }

    /// Refactors the basis, repairing singular columns with logicals, and
    /// recomputes the basic values from the nonbasic ones.
    fn refactor(&mut self) -> Result<(), LpError> {
        for _ in 0..self.m.max(1) + 1 {
            let cols: Vec<SparseVec> = self.basis.iter().map(|&j| self.columns[j].clone()).collect();
            match LuFactors::factorize(self.m, &cols) {
                Ok(lu) => {
                    self.lu = Some(lu);
                    self.recompute_basics();
                    return Ok(());
                }
                Err(sing) => {
                    log::debug!("basis repair: {} singular columns", sing.positions.len());
                    for (&pos, &row) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.basis[pos];
                        let (l, u) = (self.lower[out], self.upper[out]);
                        self.state[out] = if l.is_finite() && (!u.is_finite() || self.x[out] - l <= u - self.x[out]) {
                            self.x[out] = l;
                            State::Lower
                        } else if u.is_finite() {
                            self.x[out] = u;
                            State::Upper
                        } else {
                            self.x[out] = 0.0;
                            State::Zero
                        };
                        let logical = self.n + row;
                        self.basis[pos] = logical;
                        self.state[logical] = State::Basic(pos);
                    }
                }
            }
        }
        Err(LpError::Numerical("basis repair did not converge".into()))
    }

    fn recompute_basics(&mut self) {
        let mut rhs = alloc::vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if matches!(self.state[j], State::Basic(_)) || self.x[j] == 0.0 {
                continue;
            }
            for &(i, a) in &self.columns[j] {
                rhs[i] -= a * self.x[j];
            }
        }
        self.lu.as_ref().expect("factorized").ftran(&mut rhs);
        for (pos, &j) in self.basis.iter().enumerate() {
            self.x[j] = rhs[pos];
        }
    }

    fn run(&mut self) -> Result<Outcome, LpError> {
        if self.lu.is_none() {
            self.refactor()?;
        }
        let mut degenerate = 0usize;
        let mut confirmed_infeasible = false;
        let mut y = alloc::vec![0.0; self.m];
        let mut alpha = alloc::vec![0.0; self.m];
        loop {
            if self.iterations >= self.opts.iter_cap {
                return Err(LpError::IterationCap(self.opts.iter_cap));
            }
            if self.lu.as_ref().is_some_and(|lu| lu.eta_count() >= self.opts.refactor_every) {
                self.refactor()?;
            }
            let mut phase_one = false;
            for (pos, &j) in self.basis.iter().enumerate() {
                let f = self.infeasibility(j);
                y[pos] = f;
                phase_one |= f != 0.0;
            }
            if !phase_one {
                for (pos, &j) in self.basis.iter().enumerate() {
                    y[pos] = self.cost[j];
                }
            }
            self.lu.as_ref().expect("factorized").btran(&mut y);

            let bland = degenerate >= DEGENERATE_RUN;
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.n + self.m {
                let st = self.state[j];
                if matches!(st, State::Basic(_)) {
                    continue;
                }
                let mut d = if phase_one { 0.0 } else { self.cost[j] };
                for &(i, a) in &self.columns[j] {
                    d -= y[i] * a;
                }
                let can_up = self.x[j] < self.upper[j];
                let can_down = self.x[j] > self.lower[j];
                let dir = if d < -self.opts.opt_tol && can_up {
                    1.0
                } else if d > self.opts.opt_tol && can_down {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    entering = Some((j, dir));
                    break;
                }
                if entering.map_or(true, |(_, best)| d.abs() > best.abs()) {
                    entering = Some((j, d.abs() * dir));
                }
            }
            let Some((q, signed)) = entering else {
                if phase_one {
                    if confirmed_infeasible {
                        return Ok(Outcome::Infeasible);
                    }
                    confirmed_infeasible = true;
                    self.refactor()?;
                    continue;
                }
                return Ok(Outcome::Optimal);
            };
            let dir = if signed > 0.0 { 1.0 } else { -1.0 };

            alpha.iter_mut().for_each(|a| *a = 0.0);
            for &(i, a) in &self.columns[q] {
                alpha[i] = a;
            }
            self.lu.as_ref().expect("factorized").ftran(&mut alpha);

            let (leave, theta) = self.ratio_test(&alpha, dir, bland);
            let flip = self.upper[q] - self.lower[q];
            let step = match leave {
                Some(_) if theta <= flip => theta,
                _ if flip.is_finite() => flip,
                Some(_) => theta,
                None => {
                    if phase_one {
                        return Err(LpError::Numerical("phase one direction is unbounded".into()));
                    }
                    return Ok(Outcome::Unbounded);
                }
            };
            self.iterations += 1;
            confirmed_infeasible = false;
            if step <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            for pos in 0..self.m {
                if alpha[pos] != 0.0 {
                    let j = self.basis[pos];
                    self.x[j] -= step * dir * alpha[pos];
                }
            }
            let is_flip = !(leave.is_some() && theta <= flip);
            if is_flip {
                if dir > 0.0 {
                    self.x[q] = self.upper[q];
                    self.state[q] = State::Upper;
                } else {
                    self.x[q] = self.lower[q];
                    self.state[q] = State::Lower;
                }
                continue;
            }
            let (r, to_upper) = leave.expect("pivot row");
            self.x[q] += dir * step;
            let out = self.basis[r];
            if to_upper {
                self.x[out] = self.upper[out];
                self.state[out] = State::Upper;
            } else {
                self.x[out] = self.lower[out];
                self.state[out] = State::Lower;
            }
            self.basis[r] = q;
            self.state[q] = State::Basic(r);
            if alpha[r].abs() < 1e-7 {
                self.refactor()?;
            } else {
                self.lu.as_mut().expect("factorized").update(r, &alpha);
            }
        }
    }

    /// Returns the leaving position with the bound it reaches, and the step.
    fn ratio_test(&self, alpha: &[f64], dir: f64, bland: bool) -> (Option<(usize, bool)>, f64) {
        let tol = self.opts.feas_tol;
        // (position, exact limit, relaxed limit, reaches upper)
        let mut cands: Vec<(usize, f64, f64, bool)> = Vec::new();
        for (pos, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.basis[pos];
            let delta = -dir * a;
            let (l, u, x) = (self.lower[j], self.upper[j], self.x[j]);
            let below = l - x > rel(tol, l);
            let above = x - u > rel(tol, u);
            if delta > 0.0 {
                let target = if below { l } else { u };
                if !above && target.is_finite() {
                    let slack = if below { 0.0 } else { rel(tol, u) };
                    cands.push((pos, (target - x) / delta, (target - x + slack) / delta, !below));
                }
            } else {
                let target = if above { u } else { l };
                if !below && target.is_finite() {
                    let slack = if above { 0.0 } else { rel(tol, l) };
                    cands.push((pos, (x - target) / -delta, (x - target + slack) / -delta, above));
                }
            }
        }
        if cands.is_empty() {
            return (None, f64::INFINITY);
        }
        if bland {
            let min = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            let best = cands
                .iter()
                .filter(|c| c.1 <= min + 1e-12)
                .min_by_key(|c| self.basis[c.0])
                .expect("non-empty");
            return (Some((best.0, best.3)), best.1.max(0.0));
        }
        let bound = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
        let best = cands
            .iter()
            .filter(|c| c.1 <= bound)
            .max_by(|a, b| alpha[a.0].abs().total_cmp(&alpha[b.0].abs()))
            .expect("the minimizer of the relaxed limit qualifies");
        (Some((best.0, best.3)), best.1.max(0.0))
    }
}
