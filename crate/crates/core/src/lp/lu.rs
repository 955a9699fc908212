//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! Columns are processed left-looking in order of increasing fill; each
//! column is reduced by the previous columns of L, then a pivot row is picked
//! among rows whose magnitude is within a threshold of the largest, favouring
//! rows that appear in few remaining columns.

use alloc::vec::Vec;

pub(crate) type SparseVec = Vec<(usize, f64)>;

/// Basis positions that could not be pivoted, and rows left without a pivot.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct LuFactors {
    m: usize,
    /// Pivot row of step k.
    pivot_row: Vec<usize>,
    /// Basis position handled at step k.
    position: Vec<usize>,
    /// Below-pivot multipliers of step k, by original row.
    lower: Vec<SparseVec>,
    /// Entries U[j][k] for j < k, by step j.
    upper: Vec<SparseVec>,
    diag: Vec<f64>,
    etas: Vec<Eta>,
}

#[derive(Debug, Clone)]
struct Eta {
    position: usize,
    pivot: f64,
    others: SparseVec,
}

const THRESHOLD: f64 = 0.01;
const SINGULAR: f64 = 1e-11;

impl LuFactors {
    /// Factorizes the square matrix whose column at basis position `p` is
    /// `columns[p]` (entries by row).
    pub fn factorize(m: usize, columns: &[SparseVec]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| columns[p].len());

        let mut row_count = alloc::vec![0usize; m];
        for c in columns {
            for &(i, _) in c {
                row_count[i] += 1;
            }
        }
        let mut step_of_row = alloc::vec![usize::MAX; m];
        let mut lu = LuFactors {
            m,
            pivot_row: Vec::with_capacity(m),
            position: Vec::with_capacity(m),
            lower: Vec::with_capacity(m),
            upper: Vec::with_capacity(m),
            diag: Vec::with_capacity(m),
            etas: Vec::new(),
        };
        let mut work = alloc::vec![0.0; m];
        let mut in_pattern = alloc::vec![false; m];
        let mut pattern: Vec<usize> = Vec::new();
        let mut reach: Vec<usize> = Vec::new();
        let mut visited = alloc::vec![false; m];
        let mut stack: Vec<usize> = Vec::new();
        let mut singular = Vec::new();

        for &p in &order {
            for &(i, v) in &columns[p] {
                row_count[i] -= 1;
                if !in_pattern[i] {
                    in_pattern[i] = true;
                    pattern.push(i);
                }
                work[i] += v;
            }
            // Steps whose L column touches this column, transitively.
            reach.clear();
            for &i in &pattern {
                let s = step_of_row[i];
                if s != usize::MAX && !visited[s] {
                    visited[s] = true;
                    stack.push(s);
                    while let Some(s) = stack.pop() {
                        reach.push(s);
                        for &(r, _) in &lu.lower[s] {
                            let t = step_of_row[r];
                            if t != usize::MAX && !visited[t] {
                                visited[t] = true;
                                stack.push(t);
                            }
                        }
                    }
                }
            }
            reach.sort_unstable();
            for &s in &reach {
                visited[s] = false;
                let xs = work[lu.pivot_row[s]];
                if xs == 0.0 {
                    continue;
                }
                for &(r, l) in &lu.lower[s] {
                    if !in_pattern[r] {
                        in_pattern[r] = true;
                        pattern.push(r);
                    }
                    work[r] -= l * xs;
                }
            }
            let mut ucol = SparseVec::new();
            for &s in &reach {
                let v = work[lu.pivot_row[s]];
                if v != 0.0 {
                    ucol.push((s, v));
                }
            }
            let mut max = 0.0f64;
            for &i in &pattern {
                if step_of_row[i] == usize::MAX {
                    max = max.max(work[i].abs());
                }
            }
            if max <= SINGULAR {
                singular.push(p);
            } else {
                let mut best = usize::MAX;
                for &i in &pattern {
                    if step_of_row[i] == usize::MAX
                        && work[i].abs() >= THRESHOLD * max
                        && (best == usize::MAX
                            || row_count[i] < row_count[best]
                            || (row_count[i] == row_count[best] && work[i].abs() > work[best].abs()))
                    {
                        best = i;
                    }
                }
                let d = work[best];
                let mut lcol = SparseVec::new();
                for &i in &pattern {
                    if step_of_row[i] == usize::MAX && i != best && work[i] != 0.0 {
                        lcol.push((i, work[i] / d));
                    }
                }
                step_of_row[best] = lu.pivot_row.len();
                lu.pivot_row.push(best);
                lu.position.push(p);
                lu.lower.push(lcol);
                lu.upper.push(ucol);
                lu.diag.push(d);
            }
            for &i in &pattern {
                work[i] = 0.0;
                in_pattern[i] = false;
            }
            pattern.clear();
        }
        if singular.is_empty() {
            Ok(lu)
        } else {
            let rows = (0..m).filter(|&i| step_of_row[i] == usize::MAX).collect();
            Err(Singular { positions: singular, rows })
        }
    }

    pub fn eta_count(&self) -> usize {
        self.etas.len()
    }

    /// Solves `B x = a`; `rhs` holds `a` by row on entry and `x` by basis
    /// position on exit.
    pub fn ftran(&self, rhs: &mut [f64]) {
        let m = self.m;
        let mut z = alloc::vec![0.0; m];
        for k in 0..m {
            let v = rhs[self.pivot_row[k]];
            if v != 0.0 {
                z[k] = v;
                for &(r, l) in &self.lower[k] {
                    rhs[r] -= l * v;
                }
            }
        }
        for k in (0..m).rev() {
            let y = z[k] / self.diag[k];
            z[k] = y;
            if y != 0.0 {
                for &(j, u) in &self.upper[k] {
                    z[j] -= u * y;
                }
            }
        }
        for k in 0..m {
            rhs[self.position[k]] = z[k];
        }
        for e in &self.etas {
            let v = rhs[e.position];
            if v != 0.0 {
                let v = v / e.pivot;
                rhs[e.position] = v;
                for &(i, a) in &e.others {
                    rhs[i] -= a * v;
                }
            }
        }
    }

    /// Solves `y^T B = c^T`; `rhs` holds `c` by basis position on entry and
    /// `y` by row on exit.
    pub fn btran(&self, rhs: &mut [f64]) {
        let m = self.m;
        for e in self.etas.iter().rev() {
            let mut v = rhs[e.position];
            for &(i, a) in &e.others {
                v -= a * rhs[i];
            }
            rhs[e.position] = v / e.pivot;
        }
        let mut w = alloc::vec![0.0; m];
        for k in 0..m {
            let mut v = rhs[self.position[k]];
            for &(j, u) in &self.upper[k] {
                v -= u * w[j];
            }
            w[k] = v / self.diag[k];
        }
        for x in rhs.iter_mut() {
            *x = 0.0;
        }
        for k in (0..m).rev() {
            let mut v = w[k];
            for &(r, l) in &self.lower[k] {
                v -= l * rhs[r];
            }
            rhs[self.pivot_row[k]] = v;
        }
    }

    /// Records that the column at basis position `position` was replaced by a
    /// column whose FTRAN image is `alpha`.
    pub fn update(&mut self, position: usize, alpha: &[f64]) {
        let others = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != position && a != 0.0)
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push(Eta { position, pivot: alpha[position], others });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_mul(m: usize, cols: &[SparseVec], x: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; m];
        for (p, c) in cols.iter().enumerate() {
            for &(i, v) in c {
                out[i] += v * x[p];
            }
        }
        out
    }

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize) -> Vec<SparseVec> {
        // Diagonal plus random sparse entries keeps it nonsingular almost surely.
        (0..m)
            .map(|p| {
                let mut c = alloc::vec![((p * 7 + 3) % m, rng.gen_range(1.0..2.0))];
                for _ in 0..rng.gen_range(0..3) {
                    let i = rng.gen_range(0..m);
                    if c.iter().all(|&(r, _)| r != i) {
                        c.push((i, rng.gen_range(-1.0..1.0)));
                    }
                }
                c
            })
            .collect()
    }

    #[test]
    fn solves_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let m = rng.gen_range(1..30);
            let cols = random_matrix(&mut rng, m);
            let Ok(lu) = LuFactors::factorize(m, &cols) else { continue };
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut b = dense_mul(m, &cols, &x);
            lu.ftran(&mut b);
            for p in 0..m {
                assert!((b[p] - x[p]).abs() < 1e-8);
            }
            // y^T B = c^T  <=>  for each position p: sum_i y_i B[i][p] = c_p
            let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut c: Vec<f64> = cols.iter().map(|col| col.iter().map(|&(i, v)| y[i] * v).sum()).collect();
            lu.btran(&mut c);
            for i in 0..m {
                assert!((c[i] - y[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn eta_updates_track_column_replacement() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = 12;
        let mut cols = random_matrix(&mut rng, m);
        let mut lu = LuFactors::factorize(m, &cols).unwrap();
        for step in 0..8 {
            let pos = (step * 5) % m;
            let new_col: SparseVec = alloc::vec![(pos, 3.0), ((pos + 1) % m, rng.gen_range(-1.0..1.0))];
            let mut alpha = alloc::vec![0.0; m];
            for &(i, v) in &new_col {
                alpha[i] = v;
            }
            lu.ftran(&mut alpha);
            if alpha[pos].abs() < 1e-6 {
                continue;
            }
            lu.update(pos, &alpha);
            cols[pos] = new_col;
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut b = dense_mul(m, &cols, &x);
            lu.ftran(&mut b);
            for p in 0..m {
                assert!((b[p] - x[p]).abs() < 1e-7);
            }
            let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut c: Vec<f64> = cols.iter().map(|col| col.iter().map(|&(i, v)| y[i] * v).sum()).collect();
            lu.btran(&mut c);
            for i in 0..m {
                assert!((c[i] - y[i]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn reports_singular_columns() {
        let cols = alloc::vec![alloc::vec![(0, 1.0)], alloc::vec![(0, 2.0)]];
        let err = LuFactors::factorize(2, &cols).unwrap_err();
        assert_eq!(err.positions.len(), 1);
        assert_eq!(err.rows, alloc::vec![1]);
    }
}
