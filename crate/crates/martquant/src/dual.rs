//! Dual (Delaunay) quantization: the 1D splitting operator, optimal 1D dual
//! grids, and dual distortion for a given grid in any dimension via small
//! per-atom LPs. A dual quantization dominates its source in the convex
//! order; the distortion d_p(μ,Γ)^p is the minimal martingale transport cost
//! onto measures carried by the grid.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpStatus};
use crate::measure::{Analytic1D, DiscreteMeasure, Measure};
use crate::par::par_map;
use crate::primal::Quantizer;
use crate::transport::Coupling;
use crate::util::{binomial, dist_pow, gauss_legendre, golden_section, pow_abs};

/// Row sums may drift this far before construction fails; rows within the
/// slack are renormalized.
const ROW_SLACK: f64 = 1e-9;
/// Tolerance on the row-barycenter (martingale) property of a kernel.
pub const KERNEL_BARYCENTER_TOL: f64 = 1e-10;

/// A splitting kernel: one sparse probability row over grid indices per
/// source point, each row having its source point as barycenter. In
/// dimension 1 a row charges at most the two grid neighbours of its source.
///
/// For an analytic source measure the stored sources are the conditional
/// means of the grid intervals carrying mass; pushing the interval masses
/// through those rows reproduces the dual quantization exactly.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SplittingKernelRepr", into = "SplittingKernelRepr")]
pub struct SplittingKernel {
    grid: Quantizer,
    sources: Vec<Vec<f64>>,
    rows: Vec<Vec<(usize, f64)>>,
}

#[derive(Serialize, Deserialize)]
struct KernelRowRepr {
    src: usize,
    cols: Vec<usize>,
    w: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SplittingKernelRepr {
    grid: Vec<Vec<f64>>,
    sources: Vec<Vec<f64>>,
    rows: Vec<KernelRowRepr>,
}

impl TryFrom<SplittingKernelRepr> for SplittingKernel {
    type Error = Error;
    fn try_from(r: SplittingKernelRepr) -> Result<Self> {
        let grid = Quantizer::new(r.grid)?;
        let mut rows = vec![Vec::new(); r.sources.len()];
        for row in r.rows {
            if row.src >= r.sources.len() || row.cols.len() != row.w.len() {
                return Err(Error::InvalidInput("malformed kernel row".into()));
            }
            rows[row.src] = row.cols.into_iter().zip(row.w).collect();
        }
        SplittingKernel::new(grid, r.sources, rows)
    }
}

impl From<SplittingKernel> for SplittingKernelRepr {
    fn from(k: SplittingKernel) -> Self {
        SplittingKernelRepr {
            grid: k.grid.points().to_vec(),
            sources: k.sources,
            rows: k
                .rows
                .into_iter()
                .enumerate()
                .map(|(i, row)| KernelRowRepr {
                    src: i,
                    cols: row.iter().map(|e| e.0).collect(),
                    w: row.iter().map(|e| e.1).collect(),
                })
                .collect(),
        }
    }
}

impl SplittingKernel {
    pub fn new(grid: Quantizer, sources: Vec<Vec<f64>>, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if sources.len() != rows.len() {
            return Err(Error::InvalidInput(
                "kernel needs one row per source point".into(),
            ));
        }
        let d = grid.dim();
        let mut norm_rows = Vec::with_capacity(rows.len());
        for (src, row) in sources.iter().zip(rows) {
            if src.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: src.len(),
                });
            }
            let mut row: Vec<(usize, f64)> = row.into_iter().filter(|e| e.1 > 0.0).collect();
            row.sort_by_key(|e| e.0);
            if row.is_empty() {
                return Err(Error::InvalidInput("empty kernel row".into()));
            }
            let total: f64 = row.iter().map(|e| e.1).sum();
            if (total - 1.0).abs() > ROW_SLACK {
                return Err(Error::InvalidInput(format!(
                    "kernel row sums to {total}"
                )));
            }
            for e in &mut row {
                if e.0 >= grid.len() {
                    return Err(Error::InvalidInput("kernel column out of range".into()));
                }
                e.1 /= total;
            }
            // Martingale property of the row.
            let mut dev = 0.0;
            for k in 0..d {
                let bary: f64 = row.iter().map(|&(j, w)| w * grid.point(j)[k]).sum();
                dev += (bary - src[k]) * (bary - src[k]);
            }
            let src_norm: f64 = src.iter().map(|v| v * v).sum::<f64>().sqrt();
            if dev.sqrt() > KERNEL_BARYCENTER_TOL * (1.0 + src_norm) {
                return Err(Error::InvalidInput(format!(
                    "kernel row barycenter off by {:e}",
                    dev.sqrt()
                )));
            }
            norm_rows.push(row);
        }
        Ok(SplittingKernel {
            grid,
            sources,
            rows: norm_rows,
        })
    }

    pub fn grid(&self) -> &Quantizer {
        &self.grid
    }

    pub fn sources(&self) -> &[Vec<f64>] {
        &self.sources
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// Pushforward of the weighted sources through the kernel.
    pub fn pushforward(&self, src_weights: &[f64]) -> Result<DiscreteMeasure> {
        if src_weights.len() != self.sources.len() {
            return Err(Error::InvalidInput("weight count mismatch".into()));
        }
        let mut mass = vec![0.0; self.grid.len()];
        for (row, w) in self.rows.iter().zip(src_weights) {
            for &(j, q) in row {
                mass[j] += w * q;
            }
        }
        DiscreteMeasure::new(self.grid.points().to_vec(), mass)
    }

    /// ∫ |y - Proj(y,U)|^p under the kernel: the transport cost of splitting
    /// the weighted sources onto the grid.
    pub fn transport_cost(&self, src_weights: &[f64], p: f64) -> f64 {
        self.rows
            .iter()
            .zip(&self.sources)
            .zip(src_weights)
            .map(|((row, src), w)| {
                w * row
                    .iter()
                    .map(|&(j, q)| q * dist_pow(src, self.grid.point(j), p))
                    .sum::<f64>()
            })
            .sum()
    }

    /// The martingale coupling (source, split target) as a [`Coupling`].
    pub fn to_coupling(&self, src_weights: &[f64]) -> Result<Coupling> {
        let mut entries = Vec::new();
        for (i, (row, w)) in self.rows.iter().zip(src_weights).enumerate() {
            for &(j, q) in row {
                entries.push((i, j, w * q));
            }
        }
        Coupling::new(self.sources.clone(), self.grid.points().to_vec(), entries)
    }
}

/// 1D splitting operator: the bracketing grid pair of x with the barycentric
/// weights ((x_{i+1}-x)/Δ, (x-x_i)/Δ). A point on the grid gets unit mass on
/// itself (returned as an (i, i) pair carrying weight (1, 0)).
pub fn split_1d(grid: &Quantizer, x: f64) -> Result<((usize, usize), (f64, f64))> {
    if grid.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: grid.dim(),
        });
    }
    let n = grid.len();
    let lo = grid.scalar_point(0);
    let hi = grid.scalar_point(n - 1);
    let slack = 1e-12 * (1.0 + hi - lo);
    if x < lo - slack || x > hi + slack {
        return Err(Error::OutsideHull);
    }
    let x = x.clamp(lo, hi);
    if n == 1 {
        return Ok(((0, 0), (1.0, 0.0)));
    }
    // Index of the last grid point <= x.
    let mut i = match grid
        .points()
        .binary_search_by(|p| p[0].partial_cmp(&x).unwrap())
    {
        Ok(k) => return Ok(((k, k), (1.0, 0.0))),
        Err(k) => k - 1,
    };
    if i == n - 1 {
        i -= 1;
    }
    let gi = grid.scalar_point(i);
    let gj = grid.scalar_point(i + 1);
    let delta = gj - gi;
    Ok(((i, i + 1), ((gj - x) / delta, (x - gi) / delta)))
}

/// Result of pushing a measure through the splitting operator on a grid.
#[derive(Clone, Debug)]
pub struct DualQuantization {
    pub pushforward: DiscreteMeasure,
    pub kernel: SplittingKernel,
    /// d_p(μ,Γ)^p, the splitting transport cost.
    pub distortion_p: f64,
}

/// Dual quantization of a 1D measure on a given grid: the pushforward
/// through the splitting operator, the kernel, and the distortion
/// d_p(μ,Γ)^p computed cellwise (exactly for analytic families with integer
/// p, by quantile-space quadrature otherwise).
pub fn dual_quantize_1d(m: &Measure, grid: &Quantizer, p: f64) -> Result<DualQuantization> {
    if grid.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: grid.dim(),
        });
    }
    if p < 1.0 {
        return Err(Error::InvalidInput(format!("order p={p} < 1")));
    }
    let (lo, hi) = m.support_bounds_1d()?;
    let g0 = grid.scalar_point(0);
    let gn = grid.scalar_point(grid.len() - 1);
    let slack = 1e-9 * (1.0 + gn - g0);
    if lo < g0 - slack || hi > gn + slack {
        return Err(Error::OutsideHull);
    }

    match m {
        Measure::Discrete(mu) => {
            let mut mass = vec![0.0; grid.len()];
            let mut sources = Vec::with_capacity(mu.len());
            let mut rows = Vec::with_capacity(mu.len());
            let mut cost = 0.0;
            for (pt, &w) in mu.points().iter().zip(mu.weights()) {
                let x = pt[0];
                let ((i, j), (a, b)) = split_1d(grid, x)?;
                mass[i] += w * a;
                if j != i {
                    mass[j] += w * b;
                }
                cost += w
                    * (a * pow_abs(x - grid.scalar_point(i), p)
                        + b * pow_abs(grid.scalar_point(j) - x, p));
                sources.push(pt.clone());
                if j != i && b > 0.0 {
                    rows.push(vec![(i, a), (j, b)]);
                } else {
                    rows.push(vec![(i, 1.0)]);
                }
            }
            let pushforward = DiscreteMeasure::new(grid.points().to_vec(), mass)?;
            let kernel = SplittingKernel::new(grid.clone(), sources, rows)?;
            Ok(DualQuantization {
                pushforward,
                kernel,
                distortion_p: cost,
            })
        }
        Measure::Analytic(mu) => {
            let g = grid.scalars();
            let mut mass = vec![0.0; grid.len()];
            let mut sources = Vec::new();
            let mut rows = Vec::new();
            let mut src_weights = Vec::new();
            let mut cost = 0.0;
            for i in 0..g.len() - 1 {
                let (ga, gb) = (g[i], g[i + 1]);
                let ua = mu.cdf(ga);
                let ub = mu.cdf(gb);
                let m0 = ub - ua;
                if m0 <= 0.0 {
                    continue;
                }
                let m1 = mu.partial_moment_u(1, ua, ub);
                let delta = gb - ga;
                mass[i] += (gb * m0 - m1) / delta;
                mass[i + 1] += (m1 - ga * m0) / delta;
                let mean = m1 / m0;
                sources.push(vec![mean]);
                src_weights.push(m0);
                rows.push(vec![(i, (gb - mean) / delta), ((i + 1), (mean - ga) / delta)]);
                cost += interval_split_cost(mu, ga, gb, ua, ub, p);
            }
            let pushforward = DiscreteMeasure::new(grid.points().to_vec(), mass)?;
            let kernel = SplittingKernel::new(grid.clone(), sources, rows)?;
            Ok(DualQuantization {
                pushforward,
                kernel,
                distortion_p: cost,
            })
        }
    }
}

/// ∫ over [ga,gb] of the split cost
/// [(gb-x)(x-ga)^p + (x-ga)(gb-x)^p] / (gb-ga) dμ.
fn interval_split_cost(mu: &Analytic1D, ga: f64, gb: f64, ua: f64, ub: f64, p: f64) -> f64 {
    let delta = gb - ga;
    if delta <= 0.0 || ub <= ua {
        return 0.0;
    }
    if p.fract() == 0.0 && p <= 16.0 {
        let pi = p as u32;
        // Raw moments over the cell feed the two binomial expansions.
        let moments: Vec<f64> = (0..=pi + 1).map(|k| mu.partial_moment_u(k, ua, ub)).collect();
        let mut acc = 0.0;
        for j in 0..=pi {
            let c = binomial(pi, j);
            let s1 = if (pi - j) % 2 == 0 { 1.0 } else { -1.0 };
            // (x-ga)^p expanded: Σ C(p,j)(-ga)^{p-j} x^j, times (gb - x).
            acc += c * s1 * ga.powi((pi - j) as i32) * (gb * moments[j as usize] - moments[j as usize + 1]);
            // (gb-x)^p expanded: Σ C(p,j)(-1)^j gb^{p-j} x^j, times (x - ga).
            let s2 = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += c * s2 * gb.powi((pi - j) as i32) * (moments[j as usize + 1] - ga * moments[j as usize]);
        }
        acc / delta
    } else {
        gauss_legendre(ua, ub, |u| {
            let x = mu.quantile(u.clamp(1e-300, 1.0 - 1e-16)).unwrap().clamp(ga, gb);
            ((gb - x) * (x - ga).powf(p) + (x - ga) * (gb - x).powf(p)) / delta
        })
    }
}

/// Output of a 1D dual grid search.
#[derive(Clone, Debug)]
pub struct OptimalDualGrid {
    pub quantizer: Quantizer,
    pub pushforward: DiscreteMeasure,
    /// d_2(μ,Γ)² for the quadratic search, d_p(μ,Γ)^p for the general one.
    pub distortion: f64,
}

/// Quadratic-optimal 1D dual grid: endpoints pinned at the essential
/// inf/sup (or the declared `support`), interior points minimizing the
/// pushforward second moment, which in the quadratic case is equivalent to
/// minimizing d_2(μ,Γ)². Coordinate descent with multistart; for discrete
/// measures each coordinate step is an exact scan over the atoms inside the
/// bracket (the per-coordinate objective is piecewise linear with kinks only
/// at atoms).
pub fn optimal_dual_1d_quadratic(
    m: &Measure,
    n: usize,
    tol: f64,
    support: Option<(f64, f64)>,
) -> Result<OptimalDualGrid> {
    let interior = search_dual_grid(m, n, 2.0, tol, support)?;
    finish_dual_grid(m, interior, 2.0)
}

/// General-p 1D dual grid by the same derivative-free coordinate descent
/// over the split-based distortion. No optimality theory is claimed for
/// p ≠ 2; the search returns a stationary grid of the distortion.
pub fn optimal_dual_1d(
    m: &Measure,
    n: usize,
    p: f64,
    tol: f64,
    support: Option<(f64, f64)>,
) -> Result<OptimalDualGrid> {
    if p < 1.0 {
        return Err(Error::InvalidInput(format!("order p={p} < 1")));
    }
    let interior = search_dual_grid(m, n, p, tol, support)?;
    finish_dual_grid(m, interior, p)
}

fn finish_dual_grid(m: &Measure, grid: Vec<f64>, p: f64) -> Result<OptimalDualGrid> {
    let quantizer = Quantizer::from_scalars(grid)?;
    let dq = dual_quantize_1d(m, &quantizer, p)?;
    let distortion = if p == 2.0 {
        // The quadratic identity d² = ∫y² dμ̌ - ∫x² dμ holds exactly; prefer
        // the moment form, which is what the search minimized.
        (dq.pushforward.second_moment() - m.second_moment()).max(0.0)
    } else {
        dq.distortion_p
    };
    Ok(OptimalDualGrid {
        quantizer,
        pushforward: dq.pushforward,
        distortion,
    })
}

fn search_dual_grid(
    m: &Measure,
    n: usize,
    p: f64,
    tol: f64,
    support: Option<(f64, f64)>,
) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidInput("dual grid needs n >= 2".into()));
    }
    let (lo, hi) = match support {
        Some((a, b)) => (a, b),
        None => m.support_bounds_1d()?,
    };
    if !(lo < hi) {
        return Err(Error::InvalidInput(
            "degenerate support; declare a wider support interval".into(),
        ));
    }
    let (mlo, mhi) = m.support_bounds_1d()?;
    if mlo < lo - 1e-12 || mhi > hi + 1e-12 {
        return Err(Error::OutsideHull);
    }
    if n == 2 {
        return Ok(vec![lo, hi]);
    }

    let k = n - 2;
    let mut starts: Vec<Vec<f64>> = Vec::new();
    starts.push(
        (1..=k)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    );
    let n_starts = if n > 3 { 5 } else { 1 };
    let mut rng = ChaCha8Rng::seed_from_u64(0xD0A1);
    while starts.len() < n_starts {
        let mut pts: Vec<f64> = (0..k)
            .map(|_| lo + (hi - lo) * rng.random_range(0.02..0.98))
            .collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if pts.windows(2).all(|w| w[0] < w[1]) {
            starts.push(pts);
        }
    }

    let results: Vec<Result<(f64, Vec<f64>)>> = par_map(&starts, |start| {
        descend(m, lo, hi, start.clone(), p, tol)
    });
    // Deterministic reduction: best objective, then lexicographically
    // smallest grid.
    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in results {
        let (obj, grid) = r?;
        let better = match &best {
            None => true,
            Some((bobj, bgrid)) => {
                obj < bobj - 1e-12
                    || ((obj - bobj).abs() <= 1e-12
                        && grid.partial_cmp(bgrid) == Some(std::cmp::Ordering::Less))
            }
        };
        if better {
            best = Some((obj, grid));
        }
    }
    let (_, interior) = best.unwrap();
    let mut grid = Vec::with_capacity(n);
    grid.push(lo);
    grid.extend(interior);
    grid.push(hi);
    Ok(grid)
}

/// Cyclic coordinate descent on the interior points.
fn descend(
    m: &Measure,
    lo: f64,
    hi: f64,
    mut interior: Vec<f64>,
    p: f64,
    tol: f64,
) -> Result<(f64, Vec<f64>)> {
    let span = hi - lo;
    let k = interior.len();
    let cost = IntervalCost::new(m, p);
    let total = |pts: &[f64]| -> f64 {
        let mut acc = cost.eval(lo, pts.first().copied().unwrap_or(hi));
        for w in pts.windows(2) {
            acc += cost.eval(w[0], w[1]);
        }
        if let Some(&last) = pts.last() {
            acc += cost.eval(last, hi);
        }
        acc
    };
    let mut obj = total(&interior);
    let max_sweeps = 50_000;
    for _ in 0..max_sweeps {
        let mut displacement = 0.0f64;
        for i in 0..k {
            let l = if i == 0 { lo } else { interior[i - 1] };
            let r = if i + 1 == k { hi } else { interior[i + 1] };
            let new = cost.coordinate_min(l, interior[i], r);
            displacement = displacement.max((new - interior[i]).abs());
            interior[i] = new;
        }
        let new_obj = total(&interior);
        let improved = obj - new_obj;
        obj = new_obj;
        if displacement <= 1e-11 * span || improved.abs() <= tol.min(1e-12) {
            return Ok((obj, interior));
        }
    }
    Err(Error::NonConvergence {
        iterations: max_sweeps,
        residual: f64::NAN,
    })
}

/// Split cost of a single grid interval, with an exact per-coordinate
/// minimizer where one exists.
enum IntervalCost<'a> {
    AnalyticQuad(&'a Analytic1D),
    AnalyticGeneral(&'a Analytic1D, f64),
    /// Sorted atoms with prefix sums of w and w·x (quadratic case).
    DiscreteQuad {
        xs: Vec<f64>,
        cw: Vec<f64>,
        cwx: Vec<f64>,
    },
    DiscreteGeneral(&'a DiscreteMeasure, f64),
}

impl<'a> IntervalCost<'a> {
    fn new(m: &'a Measure, p: f64) -> Self {
        match (m, p == 2.0) {
            (Measure::Analytic(a), true) => IntervalCost::AnalyticQuad(a),
            (Measure::Analytic(a), false) => IntervalCost::AnalyticGeneral(a, p),
            (Measure::Discrete(d), true) => {
                let xs: Vec<f64> = (0..d.len()).map(|i| d.scalar_point(i)).collect();
                let mut cw = vec![0.0];
                let mut cwx = vec![0.0];
                for (i, &x) in xs.iter().enumerate() {
                    cw.push(cw[i] + d.weights()[i]);
                    cwx.push(cwx[i] + d.weights()[i] * x);
                }
                IntervalCost::DiscreteQuad { xs, cw, cwx }
            }
            (Measure::Discrete(d), false) => IntervalCost::DiscreteGeneral(d, p),
        }
    }

    /// Cost contribution of the interval [a, b). For the quadratic case this
    /// is the second-moment form (a+b)·M1 - a·b·M0, whose sum over intervals
    /// is the pushforward second moment up to the constant ∫x²dμ.
    fn eval(&self, a: f64, b: f64) -> f64 {
        match self {
            IntervalCost::AnalyticQuad(m) => {
                let ua = m.cdf(a);
                let ub = m.cdf(b);
                if ub <= ua {
                    return 0.0;
                }
                let m0 = ub - ua;
                let m1 = m.partial_moment_u(1, ua, ub);
                (a + b) * m1 - a * b * m0
            }
            IntervalCost::AnalyticGeneral(m, p) => {
                interval_split_cost(m, a, b, m.cdf(a), m.cdf(b), *p)
            }
            IntervalCost::DiscreteQuad { xs, cw, cwx } => {
                let ia = xs.partition_point(|&x| x < a);
                let ib = xs.partition_point(|&x| x < b);
                let m0 = cw[ib] - cw[ia];
                let m1 = cwx[ib] - cwx[ia];
                (a + b) * m1 - a * b * m0
            }
            IntervalCost::DiscreteGeneral(m, p) => {
                let delta = b - a;
                if delta <= 0.0 {
                    return 0.0;
                }
                let mut acc = 0.0;
                for (pt, &w) in m.points().iter().zip(m.weights()) {
                    let x = pt[0];
                    if x >= a && x < b {
                        let wa = (b - x) / delta;
                        let wb = (x - a) / delta;
                        acc += w * (wa * pow_abs(x - a, *p) + wb * pow_abs(b - x, *p));
                    }
                }
                acc
            }
        }
    }

    /// argmin over t in (l, r) of eval(l,t) + eval(t,r).
    fn coordinate_min(&self, l: f64, cur: f64, r: f64) -> f64 {
        match self {
            IntervalCost::DiscreteQuad { xs, .. } => {
                // Piecewise linear in t between atoms: scan atoms strictly
                // inside the bracket, keep the current spot unless something
                // is strictly better.
                let from = xs.partition_point(|&x| x <= l);
                let to = xs.partition_point(|&x| x < r);
                let mut best_t = cur;
                let mut best = self.eval(l, cur) + self.eval(cur, r);
                for &t in &xs[from..to] {
                    if t <= l || t >= r {
                        continue;
                    }
                    let v = self.eval(l, t) + self.eval(t, r);
                    if v < best - 1e-15 * (1.0 + best.abs()) {
                        best = v;
                        best_t = t;
                    }
                }
                best_t
            }
            _ => {
                let eps = 1e-9 * (r - l);
                golden_section(l + eps, r - eps, 1e-11 * (r - l).max(1.0), |t| {
                    self.eval(l, t) + self.eval(t, r)
                })
            }
        }
    }
}

/// Dual distortion of a discrete measure on a given grid in any dimension:
/// per source atom, the cheapest probability row over the grid with the atom
/// as barycenter (a small LP); infeasibility of a row means the atom lies
/// outside the convex hull of the grid. Returns d_p(μ,Γ)^p and the optimal
/// kernel. Atom subproblems are independent and run data-parallel.
pub fn dual_distortion_lp(
    mu: &DiscreteMeasure,
    grid: &Quantizer,
    p: f64,
) -> Result<(f64, SplittingKernel)> {
    if mu.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: mu.dim(),
        });
    }
    if p < 1.0 {
        return Err(Error::InvalidInput(format!("order p={p} < 1")));
    }
    let d = mu.dim();
    let idx: Vec<usize> = (0..mu.len()).collect();
    let solved: Vec<Result<(f64, Vec<(usize, f64)>)>> = par_map(&idx, |&i| {
        let x = mu.point(i);
        let mut rhs = vec![1.0];
        rhs.extend(x.iter().copied());
        let mut lp = LinearProgram::new(rhs);
        let mut col: Vec<(usize, f64)> = Vec::with_capacity(1 + d);
        for j in 0..grid.len() {
            col.clear();
            col.push((0, 1.0));
            for k in 0..d {
                col.push((1 + k, grid.point(j)[k]));
            }
            lp.add_var(dist_pow(x, grid.point(j), p), (0.0, 1.0), &col);
        }
        let sol = lp.solve()?;
        match sol.status {
            LpStatus::Optimal => {
                let row: Vec<(usize, f64)> = sol
                    .primal
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w > 1e-12)
                    .map(|(j, &w)| (j, w))
                    .collect();
                Ok((sol.objective, row))
            }
            LpStatus::Infeasible => Err(Error::OutsideHull),
            LpStatus::Unbounded => Err(Error::Unbounded),
        }
    });
    let mut value = 0.0;
    let mut rows = Vec::with_capacity(mu.len());
    for (i, r) in solved.into_iter().enumerate() {
        let (v, row) = r?;
        value += mu.weights()[i] * v;
        rows.push(row);
    }
    let kernel = SplittingKernel::new(grid.clone(), mu.points().to_vec(), rows)?;
    Ok((value, kernel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{convex_order_leq_1d, mu6, CONVEX_ORDER_TOL};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn uniform01() -> Measure {
        Measure::Analytic(Analytic1D::uniform01())
    }

    fn tri2x() -> Measure {
        Measure::Analytic(Analytic1D::power(2.0).unwrap())
    }

    #[test]
    fn split_examples() {
        let g = Quantizer::from_scalars(vec![0.0, 1.0]).unwrap();
        let ((i, j), (a, b)) = split_1d(&g, 0.25).unwrap();
        assert_eq!((i, j), (0, 1));
        assert!(close(a, 0.75, 1e-15) && close(b, 0.25, 1e-15));

        let g3 = Quantizer::from_scalars(vec![0.0, 1.0 / 3f64.sqrt(), 1.0]).unwrap();
        let ((i, j), (a, _)) = split_1d(&g3, 1.0 / 3f64.sqrt()).unwrap();
        assert_eq!(i, j);
        assert_eq!(i, 1);
        assert_eq!(a, 1.0);

        let g = Quantizer::from_scalars(vec![0.0, 0.4, 1.0]).unwrap();
        let ((i, j), (a, b)) = split_1d(&g, 0.7).unwrap();
        assert_eq!((i, j), (1, 2));
        assert!(close(a, 0.5, 1e-12) && close(b, 0.5, 1e-12));

        assert!(matches!(split_1d(&g, 1.5), Err(Error::OutsideHull)));
    }

    #[test]
    fn uniform_pushforward_weights() {
        for n in [3usize, 5, 9] {
            let grid = Quantizer::from_scalars(
                (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
            )
            .unwrap();
            let dq = dual_quantize_1d(&uniform01(), &grid, 2.0).unwrap();
            let w = dq.pushforward.weights();
            let edge = 1.0 / (2.0 * (n - 1) as f64);
            assert!(close(w[0], edge, 1e-14));
            assert!(close(w[n - 1], edge, 1e-14));
            for k in 1..n - 1 {
                assert!(close(w[k], 2.0 * edge, 1e-14));
            }
        }
    }

    #[test]
    fn uniform_dual_distortion_closed_form() {
        for n in [3usize, 6, 12] {
            let grid = Quantizer::from_scalars(
                (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
            )
            .unwrap();
            for p in [1.0, 2.0, 3.0] {
                let dq = dual_quantize_1d(&uniform01(), &grid, p).unwrap();
                let expect =
                    ((2.0 / ((p + 1.0) * (p + 2.0))).powf(1.0 / p) / (n - 1) as f64).powf(p);
                assert!(
                    close(dq.distortion_p, expect, 1e-12),
                    "n={n} p={p}: {} vs {expect}",
                    dq.distortion_p
                );
            }
        }
    }

    #[test]
    fn tri2x_parametric_pushforward() {
        for u in [0.1f64, 1.0 / 3.0, 0.7] {
            let r = u.sqrt();
            let grid = Quantizer::from_scalars(vec![0.0, r, 1.0]).unwrap();
            let dq = dual_quantize_1d(&tri2x(), &grid, 2.0).unwrap();
            let w = dq.pushforward.weights();
            assert!(close(w[0], u / 3.0, 1e-13), "u={u}");
            assert!(close(w[1], (1.0 + r) / 3.0, 1e-13));
            assert!(close(w[2], (2.0 - r - u) / 3.0, 1e-13));
        }
    }

    #[test]
    fn quadratic_identity_on_grids() {
        // d_2(μ,Γ)² = ∫y² dμ̌ - ∫x² dμ for any grid.
        let m = tri2x();
        for grid in [
            Quantizer::from_scalars(vec![0.0, 0.3, 0.8, 1.0]).unwrap(),
            Quantizer::from_scalars(vec![0.0, 0.5, 1.0]).unwrap(),
        ] {
            let dq = dual_quantize_1d(&m, &grid, 2.0).unwrap();
            let diff = dq.pushforward.second_moment() - m.second_moment();
            assert!(close(dq.distortion_p, diff, 1e-12));
        }
        let disc = Measure::Discrete(
            Analytic1D::power(0.5).unwrap().discretize(100).unwrap(),
        );
        let grid = Quantizer::from_scalars(vec![0.0, 0.2, 0.9, 1.0]).unwrap();
        let dq = dual_quantize_1d(&disc, &grid, 2.0).unwrap();
        let diff = dq.pushforward.second_moment() - disc.second_moment();
        assert!(close(dq.distortion_p, diff, 1e-12));
    }

    #[test]
    fn dual_pushforward_dominates_source() {
        let m = Analytic1D::power(2.0).unwrap().discretize(60).unwrap();
        let grid = Quantizer::from_scalars(vec![0.0, 0.25, 0.7, 1.0]).unwrap();
        let dq = dual_quantize_1d(&Measure::Discrete(m.clone()), &grid, 2.0).unwrap();
        assert!(convex_order_leq_1d(&m, &dq.pushforward, CONVEX_ORDER_TOL).unwrap());
    }

    #[test]
    fn order_preserved_on_fixed_grid() {
        // μ ≤cvx η implies μ̌ ≤cvx η̌ on the same grid.
        let mu = Analytic1D::uniform01().discretize(40).unwrap();
        // η: spread every atom toward the endpoints, staying inside [0,1].
        let mut pts = Vec::new();
        let mut ws = Vec::new();
        for (i, x) in mu.points().iter().enumerate() {
            let w = mu.weights()[i];
            let x = x[0];
            let lam = 0.5;
            let s = 0.8 * x.min(1.0 - x);
            pts.push(vec![x + (1.0 - lam) * s]);
            ws.push(w * lam);
            pts.push(vec![x - lam * s]);
            ws.push(w * (1.0 - lam));
        }
        let eta = DiscreteMeasure::new(pts, ws).unwrap();
        assert!(convex_order_leq_1d(&mu, &eta, CONVEX_ORDER_TOL).unwrap());
        let grid = Quantizer::from_scalars(vec![0.0, 0.35, 0.75, 1.0]).unwrap();
        let mu_check = dual_quantize_1d(&Measure::Discrete(mu), &grid, 2.0).unwrap();
        let eta_check = dual_quantize_1d(&Measure::Discrete(eta), &grid, 2.0).unwrap();
        assert!(convex_order_leq_1d(
            &mu_check.pushforward,
            &eta_check.pushforward,
            CONVEX_ORDER_TOL
        )
        .unwrap());
    }

    #[test]
    fn optimal_quadratic_uniform_grid() {
        for n in [3usize, 4, 7] {
            let r = optimal_dual_1d_quadratic(&uniform01(), n, 1e-10, None).unwrap();
            for (k, g) in r.quantizer.scalars().iter().enumerate() {
                let expect = k as f64 / (n - 1) as f64;
                assert!(close(*g, expect, 1e-7), "n={n} k={k}: {g} vs {expect}");
            }
            let expect_d2 = (1.0 / 6.0) / ((n - 1) * (n - 1)) as f64;
            assert!(close(r.distortion, expect_d2, 1e-9));
        }
    }

    #[test]
    fn optimal_quadratic_tri2x_three_points() {
        let r = optimal_dual_1d_quadratic(&tri2x(), 3, 1e-12, None).unwrap();
        let g = r.quantizer.scalars();
        assert!(close(g[0], 0.0, 1e-12));
        assert!(close(g[1], 1.0 / 3f64.sqrt(), 1e-7));
        assert!(close(g[2], 1.0, 1e-12));
        let expect = 1.0 / 6.0 - 2.0 / 3f64.powf(2.5);
        assert!(close(r.distortion, expect, 1e-9));
    }

    #[test]
    fn forced_split_of_an_atom() {
        let m = Measure::Discrete(DiscreteMeasure::dirac(vec![0.5]));
        let r = optimal_dual_1d_quadratic(&m, 2, 1e-10, Some((0.0, 1.0))).unwrap();
        assert_eq!(r.quantizer.scalars(), vec![0.0, 1.0]);
        assert!(close(r.pushforward.weights()[0], 0.5, 1e-14));
        assert!(close(r.distortion, 0.25, 1e-14));
    }

    #[test]
    fn mu6_is_its_own_dual_quantization() {
        let m = mu6();
        let r = optimal_dual_1d_quadratic(&Measure::Discrete(m.clone()), 6, 1e-12, None).unwrap();
        assert!(r.distortion.abs() <= 1e-12);
        for (a, b) in r.pushforward.points().iter().zip(m.points()) {
            assert!(close(a[0], b[0], 1e-12));
        }
        for (a, b) in r.pushforward.weights().iter().zip(m.weights()) {
            assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn dual_grid_reuse_on_intermediate_measure() {
        // η = ½μ + ½μ̌ keeps the optimal pushforward second moment.
        let mu = Analytic1D::power(2.0).unwrap().discretize(80).unwrap();
        let opt = optimal_dual_1d_quadratic(&Measure::Discrete(mu.clone()), 4, 1e-12, None).unwrap();
        let eta = mu.mixture(&opt.pushforward, 0.5).unwrap();
        let opt_eta =
            optimal_dual_1d_quadratic(&Measure::Discrete(eta), 4, 1e-12, None).unwrap();
        assert!(close(
            opt_eta.pushforward.second_moment(),
            opt.pushforward.second_moment(),
            1e-9
        ));
    }

    #[test]
    fn general_p_search_agrees_with_quadratic_for_uniform() {
        let r = optimal_dual_1d(&uniform01(), 4, 1.0, 1e-12, None).unwrap();
        for (k, g) in r.quantizer.scalars().iter().enumerate() {
            assert!(close(*g, k as f64 / 3.0, 1e-6), "k={k}: {g}");
        }
    }

    #[test]
    fn lp_distortion_matches_split_in_1d() {
        let m = Analytic1D::power(2.0).unwrap().discretize(30).unwrap();
        let grid = Quantizer::from_scalars(vec![0.0, 0.4, 1.0]).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let (lp_val, kernel) = dual_distortion_lp(&m, &grid, p).unwrap();
            let split = dual_quantize_1d(&Measure::Discrete(m.clone()), &grid, p).unwrap();
            assert!(
                close(lp_val, split.distortion_p, 1e-9),
                "p={p}: {lp_val} vs {}",
                split.distortion_p
            );
            let push_lp = kernel.pushforward(m.weights()).unwrap();
            if p == 2.0 {
                // Same optimal value forces the same second moment.
                assert!(close(
                    push_lp.second_moment(),
                    split.pushforward.second_moment(),
                    1e-9
                ));
            }
        }
    }

    #[test]
    fn lp_distortion_square_example() {
        let inner = DiscreteMeasure::new(
            vec![
                vec![-0.25, -0.25],
                vec![-0.25, 0.25],
                vec![0.25, -0.25],
                vec![0.25, 0.25],
            ],
            vec![0.25; 4],
        )
        .unwrap();
        let corners = Quantizer::new(vec![
            vec![-1.0, -1.0],
            vec![-1.0, 1.0],
            vec![1.0, -1.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let (val, kernel) = dual_distortion_lp(&inner, &corners, 2.0).unwrap();
        // Quadratic case: every feasible row has cost 2 - |x|², so the value
        // is the second-moment difference (corners all have |γ|² = 2).
        let expect = 2.0 - inner.second_moment();
        assert!(close(val, expect, 1e-10));
        let push = kernel.pushforward(inner.weights()).unwrap();
        assert!(close(push.second_moment(), 2.0, 1e-10));

        // Support outside the hull is rejected.
        let outside = DiscreteMeasure::new(vec![vec![2.0, 0.0]], vec![1.0]).unwrap();
        assert!(matches!(
            dual_distortion_lp(&outside, &corners, 2.0),
            Err(Error::OutsideHull)
        ));
    }

    #[test]
    fn kernel_json_roundtrip() {
        let grid = Quantizer::from_scalars(vec![0.0, 1.0]).unwrap();
        let dq = dual_quantize_1d(
            &Measure::Discrete(DiscreteMeasure::dirac(vec![0.25])),
            &grid,
            2.0,
        )
        .unwrap();
        let s = serde_json::to_string(&dq.kernel).unwrap();
        assert!(s.contains("\"grid\""));
        assert!(s.contains("\"src\":0"));
        let back: SplittingKernel = serde_json::from_str(&s).unwrap();
        assert_eq!(back.rows().len(), 1);
        assert!(close(back.row(0)[0].1, 0.75, 1e-15));
    }
}
