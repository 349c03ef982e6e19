//! A deterministic dense revised simplex for equality-constrained linear
//! programs with variable bounds:
//!
//! ```text
//!     minimize    c·x
//!     subject to  A x = b,   l ≤ x ≤ u
//! ```
//!
//! Phase 1 drives a full artificial basis to zero; phase 2 prices with the
//! Dantzig rule and switches to Bland's rule after 3·(rows + cols) iterations
//! so that the massively degenerate transport bases cannot cycle. The basis
//! is kept as a dense LU factorization updated in product form and
//! refactorized periodically. Identical inputs produce identical outputs:
//! every loop runs in index order and ties break toward the lowest index.

use crate::error::{Error, Result};

/// Absolute primal feasibility tolerance. All callers normalize their data to
/// O(1) magnitudes before building an LP.
const FEAS_TOL: f64 = 1e-9;
/// Reduced-cost optimality tolerance.
const OPT_TOL: f64 = 1e-9;
/// Smallest pivot magnitude accepted in the ratio test.
const PIVOT_TOL: f64 = 1e-10;
/// Slack used when comparing ratios, so that among near-ties a stable (large)
/// pivot can be preferred while the Dantzig rule is active.
const RATIO_SLACK: f64 = 1e-9;
/// Eta count that triggers a refactorization.
const REFRESH_ETAS: usize = 100;

/// An equality-constrained LP with variable bounds. Columns are stored
/// sparsely; rows are indexed 0..rhs.len().
#[derive(Clone, Debug)]
pub struct LinearProgram {
    rhs: Vec<f64>,
    objective: Vec<f64>,
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver output. `primal`, `objective` and `duals` are meaningful only when
/// `status == Optimal`; the duals are the multipliers of the equality rows
/// under the phase-2 objective.
#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
    pub iterations: usize,
}

impl LinearProgram {
    pub fn new(rhs: Vec<f64>) -> Self {
        assert!(rhs.iter().all(|v| v.is_finite()), "non-finite rhs");
        LinearProgram {
            rhs,
            objective: Vec::new(),
            cols: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
        }
    }

    /// Add a variable with its objective coefficient, bounds and sparse
    /// column; returns the variable index.
    pub fn add_var(&mut self, objective: f64, bounds: (f64, f64), entries: &[(usize, f64)]) -> usize {
        let (lo, hi) = bounds;
        assert!(objective.is_finite(), "non-finite objective coefficient");
        assert!(lo <= hi, "lower bound above upper bound");
        assert!(!lo.is_nan() && !hi.is_nan());
        for &(row, coef) in entries {
            assert!(row < self.rhs.len(), "row index out of range");
            assert!(coef.is_finite(), "non-finite matrix entry");
        }
        self.objective.push(objective);
        self.cols.push(entries.to_vec());
        self.lower.push(lo);
        self.upper.push(hi);
        self.cols.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.cols.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Simplex::new(self).run(false)
    }

    /// Phase-1 feasibility check only.
    pub fn feasible(&self) -> Result<bool> {
        let sol = Simplex::new(self).run(true)?;
        Ok(sol.status != LpStatus::Infeasible)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

struct Simplex<'a> {
    lp: &'a LinearProgram,
    m: usize,
    /// Structural variable count; indices n.. are the artificials.
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    obj: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    xb: Vec<f64>,
    lu: DenseLu,
    etas: Vec<(usize, Vec<f64>)>,
    iterations: usize,
    bland_after: usize,
    iteration_cap: usize,
}

enum StepOutcome {
    Optimal,
    Unbounded,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LinearProgram) -> Self {
        let m = lp.num_rows();
        let n = lp.num_vars();
        let mut cols = lp.cols.clone();
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        let mut state = Vec::with_capacity(n + m);

        // Nonbasic start: each structural variable at its finite bound of
        // smallest magnitude (free variables are not supported; every caller
        // in this crate has a finite lower bound).
        for j in 0..n {
            let st = match (lower[j].is_finite(), upper[j].is_finite()) {
                (true, true) => {
                    if upper[j].abs() < lower[j].abs() {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    }
                }
                (true, false) => VarState::AtLower,
                (false, true) => VarState::AtUpper,
                (false, false) => panic!("free variables are not supported"),
            };
            state.push(st);
        }

        // Residual of the start point decides the artificial signs.
        let mut resid = lp.rhs.clone();
        for j in 0..n {
            let v = match state[j] {
                VarState::AtLower => lower[j],
                VarState::AtUpper => upper[j],
                VarState::Basic(_) => unreachable!(),
            };
            if v != 0.0 {
                for &(row, coef) in &cols[j] {
                    resid[row] -= coef * v;
                }
            }
        }
        let mut basis = Vec::with_capacity(m);
        let mut xb = Vec::with_capacity(m);
        for (i, &r) in resid.iter().enumerate() {
            let sign = if r >= 0.0 { 1.0 } else { -1.0 };
            cols.push(vec![(i, sign)]);
            lower.push(0.0);
            upper.push(f64::INFINITY);
            state.push(VarState::Basic(i));
            basis.push(n + i);
            xb.push(r.abs());
        }
        let obj = vec![0.0; n + m];

        Simplex {
            lp,
            m,
            n,
            cols,
            obj,
            lower,
            upper,
            state,
            basis,
            xb,
            lu: DenseLu::identity(m),
            etas: Vec::new(),
            iterations: 0,
            bland_after: 3 * (m + n),
            iteration_cap: 10_000 + 10 * (m + n),
        }
    }

    fn run(mut self, phase1_only: bool) -> Result<LpSolution> {
        // Phase 1: minimize the sum of artificials.
        for j in self.n..self.n + self.m {
            self.obj[j] = 1.0;
        }
        match self.optimize()? {
            StepOutcome::Unbounded => {
                return Err(Error::NumericalBreakdown {
                    iterations: self.iterations,
                })
            }
            StepOutcome::Optimal => {}
        }
        let scale = 1.0 + self.lp.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let phase1_value: f64 = self
            .basis
            .iter()
            .zip(&self.xb)
            .filter(|(j, _)| **j >= self.n)
            .map(|(_, v)| v)
            .sum();
        if phase1_value > FEAS_TOL * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                primal: Vec::new(),
                objective: f64::NAN,
                duals: Vec::new(),
                iterations: self.iterations,
            });
        }
        if phase1_only {
            return Ok(LpSolution {
                status: LpStatus::Optimal,
                primal: Vec::new(),
                objective: 0.0,
                duals: Vec::new(),
                iterations: self.iterations,
            });
        }

        // Phase 2: pin artificials to zero and swap in the real objective.
        for j in self.n..self.n + self.m {
            self.obj[j] = 0.0;
            self.upper[j] = 0.0;
        }
        self.obj[..self.n].copy_from_slice(&self.lp.objective);
        match self.optimize()? {
            StepOutcome::Unbounded => {
                return Ok(LpSolution {
                    status: LpStatus::Unbounded,
                    primal: Vec::new(),
                    objective: f64::NEG_INFINITY,
                    duals: Vec::new(),
                    iterations: self.iterations,
                })
            }
            StepOutcome::Optimal => {}
        }

        // Fresh factorization before extraction kills the drift accumulated
        // in the eta file.
        self.refactor()?;
        let mut primal = vec![0.0; self.n];
        for j in 0..self.n {
            primal[j] = match self.state[j] {
                VarState::Basic(r) => self.xb[r],
                VarState::AtLower => self.lower[j],
                VarState::AtUpper => self.upper[j],
            };
        }
        let objective: f64 = primal
            .iter()
            .zip(&self.lp.objective)
            .map(|(x, c)| x * c)
            .sum();
        let duals = self.duals();
        Ok(LpSolution {
            status: LpStatus::Optimal,
            primal,
            objective,
            duals,
            iterations: self.iterations,
        })
    }

    fn optimize(&mut self) -> Result<StepOutcome> {
        self.refactor()?;
        loop {
            if self.iterations >= self.iteration_cap {
                return Err(Error::NumericalBreakdown {
                    iterations: self.iterations,
                });
            }
            let bland = self.iterations >= self.bland_after;
            let y = self.duals();

            // Pricing.
            let mut entering: Option<(usize, f64, f64)> = None; // (var, violation, direction)
            for j in 0..self.n + self.m {
                match self.state[j] {
                    VarState::Basic(_) => continue,
                    _ => {}
                }
                if self.lower[j] == self.upper[j] {
                    continue;
                }
                let mut z = self.obj[j];
                for &(row, coef) in &self.cols[j] {
                    z -= y[row] * coef;
                }
                let (viol, dir) = match self.state[j] {
                    VarState::AtLower => (-z, 1.0),
                    VarState::AtUpper => (z, -1.0),
                    VarState::Basic(_) => unreachable!(),
                };
                if viol > OPT_TOL {
                    if bland {
                        entering = Some((j, viol, dir));
                        break;
                    }
                    match entering {
                        Some((_, best, _)) if best >= viol => {}
                        _ => entering = Some((j, viol, dir)),
                    }
                }
            }
            let (t, _, dir) = match entering {
                Some(e) => e,
                None => return Ok(StepOutcome::Optimal),
            };

            let alpha = self.ftran(t);

            // Ratio test: the entering variable moves by theta in direction
            // dir; basic variable basis[r] moves by -dir·theta·alpha[r].
            let own_range = self.upper[t] - self.lower[t]; // may be +inf
            let mut theta = own_range;
            let mut leaving: Option<(usize, VarState)> = None;
            for r in 0..self.m {
                let a = dir * alpha[r];
                let (cand, hit) = if a > PIVOT_TOL {
                    let lo = self.lower[self.basis[r]];
                    if lo.is_finite() {
                        (((self.xb[r] - lo) / a).max(0.0), VarState::AtLower)
                    } else {
                        continue;
                    }
                } else if a < -PIVOT_TOL {
                    let hi = self.upper[self.basis[r]];
                    if hi.is_finite() {
                        (((hi - self.xb[r]) / (-a)).max(0.0), VarState::AtUpper)
                    } else {
                        continue;
                    }
                } else {
                    continue;
                };
                let replace = match leaving {
                    None => cand < theta,
                    Some((cur, _)) => {
                        if cand < theta - RATIO_SLACK {
                            true
                        } else if cand <= theta + RATIO_SLACK {
                            if bland {
                                // Anti-cycling: lowest variable index leaves.
                                self.basis[r] < self.basis[cur]
                            } else {
                                // Stability: largest pivot among near-ties.
                                alpha[r].abs() > alpha[cur].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if replace {
                    theta = cand.min(theta);
                    leaving = Some((r, hit));
                }
            }

            if theta.is_infinite() {
                return Ok(StepOutcome::Unbounded);
            }
            self.iterations += 1;

            match leaving {
                None => {
                    // Bound flip: the entering variable crosses its own range.
                    for r in 0..self.m {
                        self.xb[r] -= dir * theta * alpha[r];
                    }
                    self.state[t] = match self.state[t] {
                        VarState::AtLower => VarState::AtUpper,
                        VarState::AtUpper => VarState::AtLower,
                        VarState::Basic(_) => unreachable!(),
                    };
                }
                Some((r, hit)) => {
                    let enter_from = match self.state[t] {
                        VarState::AtLower => self.lower[t],
                        VarState::AtUpper => self.upper[t],
                        VarState::Basic(_) => unreachable!(),
                    };
                    for i in 0..self.m {
                        self.xb[i] -= dir * theta * alpha[i];
                    }
                    let leaving_var = self.basis[r];
                    self.state[leaving_var] = hit;
                    self.basis[r] = t;
                    self.state[t] = VarState::Basic(r);
                    self.xb[r] = enter_from + dir * theta;
                    self.etas.push((r, alpha));
                    if self.etas.len() >= REFRESH_ETAS {
                        self.refactor()?;
                    }
                }
            }
        }
    }

    /// Dual vector y = B^{-T} c_B for the current objective.
    fn duals(&self) -> Vec<f64> {
        let mut y: Vec<f64> = self.basis.iter().map(|&j| self.obj[j]).collect();
        self.btran(&mut y);
        y
    }

    fn ftran(&self, var: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.m];
        for &(row, coef) in &self.cols[var] {
            x[row] += coef;
        }
        self.lu.solve(&mut x);
        for (r, alpha) in &self.etas {
            let t = x[*r] / alpha[*r];
            if t != 0.0 {
                for i in 0..self.m {
                    x[i] -= t * alpha[i];
                }
                x[*r] = t;
            } else {
                x[*r] = 0.0;
            }
        }
        x
    }

    fn btran(&self, y: &mut [f64]) {
        for (r, alpha) in self.etas.iter().rev() {
            let mut s = 0.0;
            for i in 0..self.m {
                s += alpha[i] * y[i];
            }
            s -= alpha[*r] * y[*r];
            y[*r] = (y[*r] - s) / alpha[*r];
        }
        self.lu.solve_transpose(y);
    }

    /// Rebuild the dense basis factorization and recompute the basic values
    /// from scratch.
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut dense = vec![0.0; m * m];
        for (c, &j) in self.basis.iter().enumerate() {
            for &(row, coef) in &self.cols[j] {
                dense[row * m + c] += coef;
            }
        }
        self.lu = DenseLu::factor(m, dense).ok_or(Error::NumericalBreakdown {
            iterations: self.iterations,
        })?;
        self.etas.clear();

        let mut rhs = self.lp.rhs.clone();
        for j in 0..self.n + self.m {
            let v = match self.state[j] {
                VarState::Basic(_) => continue,
                VarState::AtLower => self.lower[j],
                VarState::AtUpper => self.upper[j],
            };
            if v != 0.0 {
                for &(row, coef) in &self.cols[j] {
                    rhs[row] -= coef * v;
                }
            }
        }
        self.lu.solve(&mut rhs);
        self.xb = rhs;
        Ok(())
    }
}

/// Dense LU factorization with partial pivoting, row-swap representation.
struct DenseLu {
    n: usize,
    a: Vec<f64>,
    piv: Vec<usize>,
}

impl DenseLu {
    fn identity(n: usize) -> Self {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 1.0;
        }
        DenseLu {
            n,
            a,
            piv: (0..n).collect(),
        }
    }

    fn factor(n: usize, mut a: Vec<f64>) -> Option<Self> {
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best < 1e-12 {
                return None;
            }
            piv[k] = p;
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] / pivot;
                a[i * n + k] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        a[i * n + j] -= l * a[k * n + j];
                    }
                }
            }
        }
        Some(DenseLu { n, a, piv })
    }

    /// Solve A x = b in place.
    fn solve(&self, x: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            x.swap(k, self.piv[k]);
        }
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.a[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.a[i * n + j] * x[j];
            }
            x[i] = s / self.a[i * n + i];
        }
    }

    /// Solve A^T y = c in place.
    fn solve_transpose(&self, y: &mut [f64]) {
        let n = self.n;
        // U^T z = c (forward), then L^T w = z (backward).
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.a[j * n + i] * y[j];
            }
            y[i] = s / self.a[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.a[j * n + i] * y[j];
            }
            y[i] = s;
        }
        for k in (0..n).rev() {
            y.swap(k, self.piv[k]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_variable() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add_var(1.0, (0.0, 2.0), &[(0, 1.0)]);
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.primal[0] - 1.0).abs() < 1e-12);
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn forced_transport_plan() {
        // W1 between a point mass at 0 and the ±1 pair: every unit of mass
        // travels distance one.
        let mut lp = LinearProgram::new(vec![1.0, 0.5, 0.5]);
        lp.add_var(1.0, (0.0, f64::INFINITY), &[(0, 1.0), (1, 1.0)]);
        lp.add_var(1.0, (0.0, f64::INFINITY), &[(0, 1.0), (2, 1.0)]);
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_system() {
        let mut lp = LinearProgram::new(vec![1.0, 3.0]);
        lp.add_var(0.0, (0.0, 1.0), &[(0, 1.0), (1, 1.0)]);
        lp.add_var(0.0, (0.0, 1.0), &[(0, 1.0), (1, -1.0)]);
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
        assert!(!lp.feasible().unwrap());
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LinearProgram::new(vec![0.0]);
        lp.add_var(-1.0, (0.0, f64::INFINITY), &[(0, 1.0)]);
        lp.add_var(0.0, (0.0, f64::INFINITY), &[(0, -1.0)]);
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn upper_bound_binds() {
        // min -x - y  s.t.  x + y = 3, x in [0,2], y in [0,2].
        let mut lp = LinearProgram::new(vec![3.0]);
        lp.add_var(-1.0, (0.0, 2.0), &[(0, 1.0)]);
        lp.add_var(-1.0, (0.0, 2.0), &[(0, 1.0)]);
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 3.0).abs() < 1e-12);
    }

    /// Exhaustive optimum over basic solutions: every choice of m basic
    /// columns and of a finite bound for each nonbasic column.
    fn enumerate_optimum(lp: &LinearProgram) -> Option<f64> {
        let m = lp.num_rows();
        let n = lp.num_vars();
        let mut best: Option<f64> = None;
        let mut basis = Vec::new();
        enumerate_rec(lp, 0, m, n, &mut basis, &mut best);
        best
    }

    fn enumerate_rec(
        lp: &LinearProgram,
        start: usize,
        m: usize,
        n: usize,
        basis: &mut Vec<usize>,
        best: &mut Option<f64>,
    ) {
        if basis.len() == m {
            let nonbasic: Vec<usize> = (0..n).filter(|j| !basis.contains(j)).collect();
            let mut choice = vec![false; nonbasic.len()]; // false = lower
            loop {
                try_basis(lp, basis, &nonbasic, &choice, best);
                // Increment the bound-choice counter; skip infinite bounds.
                let mut k = 0;
                loop {
                    if k == nonbasic.len() {
                        return;
                    }
                    if !choice[k] && lp.upper[nonbasic[k]].is_finite() {
                        choice[k] = true;
                        break;
                    }
                    choice[k] = false;
                    k += 1;
                }
            }
        }
        for j in start..n {
            basis.push(j);
            enumerate_rec(lp, j + 1, m, n, basis, best);
            basis.pop();
        }
    }

    fn try_basis(
        lp: &LinearProgram,
        basis: &[usize],
        nonbasic: &[usize],
        at_upper: &[bool],
        best: &mut Option<f64>,
    ) {
        let m = lp.num_rows();
        let mut rhs = lp.rhs.clone();
        let mut vals = vec![0.0; lp.num_vars()];
        for (k, &j) in nonbasic.iter().enumerate() {
            let v = if at_upper[k] { lp.upper[j] } else { lp.lower[j] };
            if !v.is_finite() {
                return;
            }
            vals[j] = v;
            for &(row, coef) in &lp.cols[j] {
                rhs[row] -= coef * v;
            }
        }
        let mut dense = vec![0.0; m * m];
        for (c, &j) in basis.iter().enumerate() {
            for &(row, coef) in &lp.cols[j] {
                dense[row * m + c] += coef;
            }
        }
        let lu = match DenseLu::factor(m, dense) {
            Some(lu) => lu,
            None => return,
        };
        lu.solve(&mut rhs);
        for (r, &j) in basis.iter().enumerate() {
            if rhs[r] < lp.lower[j] - 1e-9 || rhs[r] > lp.upper[j] + 1e-9 {
                return;
            }
            vals[j] = rhs[r];
        }
        let obj: f64 = vals.iter().zip(&lp.objective).map(|(x, c)| x * c).sum();
        if best.map_or(true, |b| obj < b) {
            *best = Some(obj);
        }
    }

    fn random_feasible_lp(rng: &mut ChaCha8Rng, m: usize, n: usize) -> LinearProgram {
        // Build around a known feasible interior point so phase 1 always has
        // something to find.
        let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..0.8)).collect();
        let entries: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|_| {
                (0..m)
                    .filter_map(|row| {
                        if rng.random_bool(0.7) {
                            Some((row, rng.random_range(-2.0..2.0)))
                        } else {
                            None
                        }
                    })
                    .collect()
            })
            .collect();
        let mut rhs = vec![0.0; m];
        for (j, col) in entries.iter().enumerate() {
            for &(row, coef) in col {
                rhs[row] += coef * x0[j];
            }
        }
        let mut lp = LinearProgram::new(rhs);
        for col in &entries {
            let upper = if rng.random_bool(0.5) {
                rng.random_range(1.0..3.0)
            } else {
                f64::INFINITY
            };
            lp.add_var(rng.random_range(-1.0..1.0), (0.0, upper), col);
        }
        lp
    }

    #[test]
    fn random_lps_match_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut solved = 0;
        for _ in 0..25 {
            let lp = random_feasible_lp(&mut rng, 6, 10);
            let sol = lp.solve().unwrap();
            if sol.status != LpStatus::Optimal {
                // Unbounded draws are possible; the enumerator cannot see
                // rays, so skip them.
                continue;
            }
            let brute = enumerate_optimum(&lp).expect("enumeration found no vertex");
            assert!(
                (sol.objective - brute).abs() <= 1e-9 * (1.0 + brute.abs()),
                "simplex {} vs enumeration {}",
                sol.objective,
                brute
            );
            solved += 1;
        }
        assert!(solved >= 15, "too few optimal instances: {solved}");
    }

    #[test]
    fn solution_certificates() {
        // Feasibility, complementary slackness and strong duality on random
        // optimal instances.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..25 {
            let lp = random_feasible_lp(&mut rng, 5, 9);
            let sol = lp.solve().unwrap();
            if sol.status != LpStatus::Optimal {
                continue;
            }
            let mut resid = lp.rhs.clone();
            for (j, col) in lp.cols.iter().enumerate() {
                for &(row, coef) in col {
                    resid[row] -= coef * sol.primal[j];
                }
            }
            for r in resid {
                assert!(r.abs() <= 1e-9, "primal residual {r}");
            }
            // Dual objective = y·b + sum of bound contributions of nonbasic
            // reduced costs; strong duality should close the gap.
            let mut dual_obj: f64 = sol.duals.iter().zip(&lp.rhs).map(|(y, b)| y * b).sum();
            for j in 0..lp.num_vars() {
                let mut z = lp.objective[j];
                for &(row, coef) in &lp.cols[j] {
                    z -= sol.duals[row] * coef;
                }
                let x = sol.primal[j];
                let at_lower = (x - lp.lower[j]).abs() <= 1e-7;
                let at_upper = lp.upper[j].is_finite() && (lp.upper[j] - x).abs() <= 1e-7;
                if !at_lower && !at_upper {
                    assert!(z.abs() <= 1e-7, "basic reduced cost {z}");
                }
                dual_obj += z * x;
            }
            assert!(
                (dual_obj - sol.objective).abs() <= 1e-7 * (1.0 + sol.objective.abs()),
                "duality gap {} vs {}",
                dual_obj,
                sol.objective
            );
        }
    }

    #[test]
    fn objective_scaling_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let lp = random_feasible_lp(&mut rng, 4, 8);
            let sol = lp.solve().unwrap();
            if sol.status != LpStatus::Optimal {
                continue;
            }
            let mut scaled = lp.clone();
            for c in &mut scaled.objective {
                *c *= 4.0;
            }
            let sol2 = scaled.solve().unwrap();
            assert_eq!(sol2.status, LpStatus::Optimal);
            assert!((sol2.objective - 4.0 * sol.objective).abs() <= 1e-8 * (1.0 + sol.objective.abs()));
            for (a, b) in sol.primal.iter().zip(&sol2.primal) {
                assert!((a - b).abs() <= 1e-8, "optimal vertex moved under scaling");
            }
        }
    }
}
