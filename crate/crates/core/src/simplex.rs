//! Dense two-phase simplex for small equality-form linear programs:
//! minimize `c·x` subject to `A x = b`, `x >= 0`.
//!
//! Pivoting follows Bland's rule (lowest eligible index for both the
//! entering column and ties in the ratio test), so the method terminates on
//! degenerate problems. Rows that phase 1 shows to be linearly dependent are
//! dropped before phase 2.

use crate::error::{Error, Result};

/// Reduced costs below `-OPT_EPS` make a column eligible to enter.
const OPT_EPS: f64 = 1e-11;
/// Smallest pivot magnitude accepted in the ratio test.
const PIVOT_EPS: f64 = 1e-12;
/// Smallest coefficient used to pivot a zero-level artificial out of the basis.
const DRIVE_OUT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Result<Self> {
        if objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::MalformedLp(
                "non-finite objective coefficient".into(),
            ));
        }
        Ok(LinearProgram {
            objective,
            rows: Vec::new(),
            rhs: Vec::new(),
        })
    }

    /// Appends the constraint `coeffs · x = rhs`.
    pub fn add_equality(&mut self, coeffs: Vec<f64>, rhs: f64) -> Result<()> {
        if coeffs.len() != self.objective.len() {
            return Err(Error::MalformedLp(format!(
                "row has {} coefficients, expected {}",
                coeffs.len(),
                self.objective.len()
            )));
        }
        if !rhs.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::MalformedLp("non-finite constraint entry".into()));
        }
        self.rows.push(coeffs);
        self.rhs.push(rhs);
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) -> Result<()> {
        if objective.len() != self.objective.len() || objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::MalformedLp("objective has wrong width".into()));
        }
        self.objective = objective;
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest absolute constraint violation `max |A x - b|`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, &b)| (dot(row, x) - b).abs())
            .fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationCap,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective at `x`; for [`LpStatus::Infeasible`] and
    /// [`LpStatus::IterationCap`] during phase 1 this is the phase-1 value.
    pub objective: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Sum of artificial variables at the end of phase 1.
    pub infeasibility: f64,
    pub residual: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Converts the cap status into [`Error::SolverFailure`].
    pub fn check_cap(self, cap: usize) -> Result<Self> {
        match self.status {
            LpStatus::IterationCap => Err(Error::SolverFailure {
                cap,
                objective: self.objective,
            }),
            _ => Ok(self),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Phase-1 residual above which the problem is declared infeasible.
    pub feasibility_tol: f64,
    /// Pivot budget shared by both phases.
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feasibility_tol: 1e-9,
            max_iterations: 100_000,
        }
    }
}

pub fn simplex_solve(lp: &LinearProgram) -> LpSolution {
    solve_with(lp, SimplexOptions::default())
}

struct Tableau {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    basis: Vec<usize>,
    /// Original constraint index of each tableau row.
    row_ids: Vec<usize>,
    /// Reduced costs for every column.
    d: Vec<f64>,
    iterations: usize,
}

enum RunEnd {
    Optimal,
    Unbounded,
    Cap,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = 1.0 / self.a[r][c];
        for v in self.a[r].iter_mut() {
            *v *= inv;
        }
        self.b[r] *= inv;
        self.a[r][c] = 1.0;
        let (pivot_row, pivot_b) = (self.a[r].clone(), self.b[r]);
        for (k, row) in self.a.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[c] = 0.0;
                self.b[k] -= f * pivot_b;
                if self.b[k] < 0.0 && self.b[k] > -PIVOT_EPS {
                    self.b[k] = 0.0;
                }
            }
        }
        let f = self.d[c];
        if f != 0.0 {
            for (v, p) in self.d.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.d[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn set_costs(&mut self, cost: &[f64]) {
        self.d = cost.to_vec();
        for (r, row) in self.a.iter().enumerate() {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for (d, v) in self.d.iter_mut().zip(row) {
                    *d -= cb * v;
                }
            }
        }
    }

    fn run(&mut self, allowed: usize, cap: usize) -> RunEnd {
        loop {
            let Some(col) = (0..allowed).find(|&j| self.d[j] < -OPT_EPS) else {
                return RunEnd::Optimal;
            };
            if self.iterations >= cap {
                return RunEnd::Cap;
            }
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.a.iter().enumerate() {
                let coef = row[col];
                if coef <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.b[r].max(0.0) / coef;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                        if (!tie && ratio < lratio) || (tie && self.basis[r] < self.basis[lr]) {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else {
                return RunEnd::Unbounded;
            };
            self.pivot(row, col);
            self.iterations += 1;
        }
    }

    fn primal(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (r, &j) in self.basis.iter().enumerate() {
            if j < n {
                x[j] = self.b[r].max(0.0);
            }
        }
        x
    }
}

pub fn solve_with(lp: &LinearProgram, opts: SimplexOptions) -> LpSolution {
    let n = lp.num_vars();
    let m = lp.num_rows();
    let width = n + m;

    let mut a = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    for (r, (row, &rhs)) in lp.rows.iter().zip(&lp.rhs).enumerate() {
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        let mut full = vec![0.0; width];
        for (dst, &v) in full.iter_mut().zip(row) {
            *dst = sign * v;
        }
        full[n + r] = 1.0;
        a.push(full);
        b.push(sign * rhs);
    }
    let mut t = Tableau {
        a,
        b,
        basis: (n..width).collect(),
        row_ids: (0..m).collect(),
        d: Vec::new(),
        iterations: 0,
    };

    // Phase 1: minimize the sum of artificials.
    let mut phase1_cost = vec![0.0; width];
    phase1_cost[n..].iter_mut().for_each(|c| *c = 1.0);
    t.set_costs(&phase1_cost);
    let phase1 = t.run(width, opts.max_iterations);
    let infeasibility: f64 = t
        .basis
        .iter()
        .zip(&t.b)
        .filter(|(&j, _)| j >= n)
        .map(|(_, &v)| v.max(0.0))
        .sum();
    let finish = |t: &Tableau, status: LpStatus, objective: Option<f64>| {
        let x = t.primal(n);
        LpSolution {
            status,
            objective: objective.unwrap_or_else(|| lp.evaluate(&x)),
            residual: lp.residual(&x),
            x,
            iterations: t.iterations,
            infeasibility,
        }
    };
    if let RunEnd::Cap = phase1 {
        return finish(&t, LpStatus::IterationCap, Some(infeasibility));
    }
    if infeasibility > opts.feasibility_tol {
        return finish(&t, LpStatus::Infeasible, Some(infeasibility));
    }

    // Drive zero-level artificials out of the basis; rows where that is
    // impossible are linear combinations of the others.
    let mut r = 0;
    while r < t.basis.len() {
        if t.basis[r] < n {
            r += 1;
            continue;
        }
        t.b[r] = 0.0;
        match (0..n).find(|&j| t.a[r][j].abs() > DRIVE_OUT_EPS) {
            Some(j) => {
                t.pivot(r, j);
                r += 1;
            }
            None => {
                t.a.remove(r);
                t.b.remove(r);
                t.basis.remove(r);
                t.row_ids.remove(r);
            }
        }
    }

    // Phase 2 over the structural columns only.
    let mut cost = lp.objective.clone();
    cost.resize(width, 0.0);
    t.set_costs(&cost);
    let status = match t.run(n, opts.max_iterations) {
        RunEnd::Optimal => LpStatus::Optimal,
        RunEnd::Unbounded => LpStatus::Unbounded,
        RunEnd::Cap => LpStatus::IterationCap,
    };
    if status == LpStatus::Optimal {
        t.refine(lp);
    }
    finish(&t, status, None)
}

/// Solves the square system `m x = rhs` by Gaussian elimination with
/// partial pivoting; `None` when numerically singular.
fn solve_dense(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let k = rhs.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..k {
            let f = m[r][col] / m[col][col];
            if f != 0.0 {
                let (top, bottom) = m.split_at_mut(r);
                for (x, &y) in bottom[0][col..k].iter_mut().zip(&top[col][col..k]) {
                    *x -= f * y;
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let tail: f64 = (r + 1..k).map(|c| m[r][c] * x[c]).sum();
        x[r] = (rhs[r] - tail) / m[r][r];
    }
    Some(x)
}

impl Tableau {
    /// Recomputes basic values from the original data, discarding the
    /// rounding accumulated over pivots. Kept only if it stays feasible.
    fn refine(&mut self, lp: &LinearProgram) {
        let n = lp.num_vars();
        if self.basis.iter().any(|&j| j >= n) {
            return;
        }
        let m: Vec<Vec<f64>> = self
            .row_ids
            .iter()
            .map(|&r| self.basis.iter().map(|&j| lp.rows[r][j]).collect())
            .collect();
        let rhs = self.row_ids.iter().map(|&r| lp.rhs[r]).collect();
        if let Some(x) = solve_dense(m, rhs) {
            if x.iter().all(|&v| v >= -1e-9) {
                for (b, v) in self.b.iter_mut().zip(x) {
                    *b = v.max(0.0);
                }
            }
        }
    }
}
