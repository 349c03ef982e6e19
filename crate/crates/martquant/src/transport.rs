//! Exact transport between finitely supported measures: Wasserstein
//! distances (1D comonotone fast path plus LP), the martingale-constrained
//! variant, Strassen-type convex-order feasibility and martingale optimal
//! transport values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpStatus};
use crate::measure::DiscreteMeasure;
use crate::util::{dist_pow, pow_abs};

/// Relative tolerance on marginal residuals of a stored coupling.
pub const MARGINAL_TOL: f64 = 1e-10;
/// Relative tolerance on the martingale (barycenter) residual.
pub const MARTINGALE_TOL: f64 = 1e-9;
/// Means may disagree by this much before a martingale LP is even built;
/// quantizations preserve means only to solver precision.
pub const MEAN_TOL: f64 = 1e-9;

/// A finitely supported coupling: a joint measure on R^d × R^d stored as
/// sparse entries over the two support lists, with cached marginals and a
/// row-normalized Markov-kernel view.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "CouplingRepr", into = "CouplingRepr")]
pub struct Coupling {
    dim: usize,
    src_points: Vec<Vec<f64>>,
    dst_points: Vec<Vec<f64>>,
    entries: Vec<(usize, usize, f64)>,
    src_marginal: Vec<f64>,
    dst_marginal: Vec<f64>,
    row_ranges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct CouplingEntryRepr {
    i: usize,
    j: usize,
    w: f64,
}

#[derive(Serialize, Deserialize)]
struct CouplingRepr {
    src_points: Vec<Vec<f64>>,
    dst_points: Vec<Vec<f64>>,
    entries: Vec<CouplingEntryRepr>,
}

impl TryFrom<CouplingRepr> for Coupling {
    type Error = Error;
    fn try_from(r: CouplingRepr) -> Result<Self> {
        Coupling::new(
            r.src_points,
            r.dst_points,
            r.entries.into_iter().map(|e| (e.i, e.j, e.w)).collect(),
        )
    }
}

impl From<Coupling> for CouplingRepr {
    fn from(c: Coupling) -> Self {
        CouplingRepr {
            src_points: c.src_points,
            dst_points: c.dst_points,
            entries: c
                .entries
                .into_iter()
                .map(|(i, j, w)| CouplingEntryRepr { i, j, w })
                .collect(),
        }
    }
}

impl Coupling {
    pub fn new(
        src_points: Vec<Vec<f64>>,
        dst_points: Vec<Vec<f64>>,
        entries: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        if src_points.is_empty() || dst_points.is_empty() {
            return Err(Error::InvalidInput("empty coupling support".into()));
        }
        let dim = src_points[0].len();
        for p in src_points.iter().chain(&dst_points) {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
        }
        let mut entries: Vec<(usize, usize, f64)> = entries
            .into_iter()
            .filter(|&(_, _, w)| w > 0.0)
            .collect();
        for &(i, j, w) in &entries {
            if i >= src_points.len() || j >= dst_points.len() {
                return Err(Error::InvalidInput("coupling entry out of range".into()));
            }
            if !w.is_finite() {
                return Err(Error::InvalidInput("non-finite coupling weight".into()));
            }
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        // Merge duplicate cells.
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (i, j, w) in entries {
            if let Some(last) = merged.last_mut() {
                if last.0 == i && last.1 == j {
                    last.2 += w;
                    continue;
                }
            }
            merged.push((i, j, w));
        }
        if merged.is_empty() {
            return Err(Error::InvalidInput("coupling carries no mass".into()));
        }
        let total: f64 = merged.iter().map(|e| e.2).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "coupling mass {total}, expected 1"
            )));
        }
        for e in &mut merged {
            e.2 /= total;
        }

        let mut src_marginal = vec![0.0; src_points.len()];
        let mut dst_marginal = vec![0.0; dst_points.len()];
        for &(i, j, w) in &merged {
            src_marginal[i] += w;
            dst_marginal[j] += w;
        }
        let mut row_ranges = vec![(0usize, 0usize); src_points.len()];
        let mut k = 0;
        for i in 0..src_points.len() {
            let start = k;
            while k < merged.len() && merged[k].0 == i {
                k += 1;
            }
            row_ranges[i] = (start, k);
        }
        Ok(Coupling {
            dim,
            src_points,
            dst_points,
            entries: merged,
            src_marginal,
            dst_marginal,
            row_ranges,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn src_points(&self) -> &[Vec<f64>] {
        &self.src_points
    }

    pub fn dst_points(&self) -> &[Vec<f64>] {
        &self.dst_points
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Cached row sums over the source support (may contain zero rows).
    pub fn src_marginal(&self) -> &[f64] {
        &self.src_marginal
    }

    pub fn dst_marginal(&self) -> &[f64] {
        &self.dst_marginal
    }

    pub fn first_marginal(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(self.src_points.clone(), self.src_marginal.clone())
    }

    pub fn second_marginal(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(self.dst_points.clone(), self.dst_marginal.clone())
    }

    /// Row i of the Markov-kernel view: destination indices with conditional
    /// weights summing to 1. Empty when the row carries no mass.
    pub fn kernel_row(&self, i: usize) -> Vec<(usize, f64)> {
        let (s, e) = self.row_ranges[i];
        let mass = self.src_marginal[i];
        if mass <= 0.0 {
            return Vec::new();
        }
        self.entries[s..e]
            .iter()
            .map(|&(_, j, w)| (j, w / mass))
            .collect()
    }

    /// ∫ |x-y|^p dπ.
    pub fn transport_cost(&self, p: f64) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, w)| w * dist_pow(&self.src_points[i], &self.dst_points[j], p))
            .sum()
    }

    /// The coupling viewed as a discrete measure on R^{2d} (stacked vectors).
    pub fn as_product_measure(&self) -> Result<DiscreteMeasure> {
        let points: Vec<Vec<f64>> = self
            .entries
            .iter()
            .map(|&(i, j, _)| {
                let mut v = self.src_points[i].clone();
                v.extend_from_slice(&self.dst_points[j]);
                v
            })
            .collect();
        let weights: Vec<f64> = self.entries.iter().map(|e| e.2).collect();
        DiscreteMeasure::new(points, weights)
    }

    /// Largest violation of the barycenter property max_i |Σ_j π_ij (y_j -
    /// x_i)| / (1 + |x_i|), the defect of being a martingale coupling.
    pub fn martingale_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, &(s, e)) in self.row_ranges.iter().enumerate() {
            if s == e {
                continue;
            }
            let x = &self.src_points[i];
            let mut dev = vec![0.0; self.dim];
            for &(_, j, w) in &self.entries[s..e] {
                for (k, v) in self.dst_points[j].iter().enumerate() {
                    dev[k] += w * (v - x[k]);
                }
            }
            let norm = dev.iter().map(|v| v * v).sum::<f64>().sqrt();
            let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            worst = worst.max(norm / (1.0 + xnorm));
        }
        worst
    }
}

/// A coupling whose kernel rows have their source point as barycenter,
/// checked on construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MartingaleCoupling(Coupling);

impl MartingaleCoupling {
    pub fn new(coupling: Coupling) -> Result<Self> {
        let residual = coupling.martingale_residual();
        if residual > MARTINGALE_TOL {
            return Err(Error::InvalidInput(format!(
                "martingale residual {residual:e} above {MARTINGALE_TOL:e}"
            )));
        }
        Ok(MartingaleCoupling(coupling))
    }

    pub fn coupling(&self) -> &Coupling {
        &self.0
    }

    pub fn into_coupling(self) -> Coupling {
        self.0
    }
}

impl std::ops::Deref for MartingaleCoupling {
    type Target = Coupling;
    fn deref(&self) -> &Coupling {
        &self.0
    }
}

// ---------------------------------------------------------------------------
// Cost specifications
// ---------------------------------------------------------------------------

/// Cost function for transport problems, either a named analytic form
/// evaluated at support pairs or an explicit matrix. Keeps the module free of
/// user-code execution.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostSpec {
    /// |y - x|^p with the Euclidean norm.
    AbsPower { p: f64 },
    /// (y - x)^p for integer p, dimension 1.
    SignedPower { p: u32 },
    /// ((y - x)^+)^p, dimension 1.
    PosPartPower { p: f64 },
    /// ((y - x)^-)^p, dimension 1.
    NegPartPower { p: f64 },
    /// Scalar product x·y.
    ScalarProduct,
    /// Explicit |supp μ| × |supp ν| cost matrix.
    Matrix { values: Vec<Vec<f64>> },
}

impl CostSpec {
    /// Row-major cost matrix over the two supports.
    pub fn cost_matrix(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Vec<f64>> {
        let m = mu.len();
        let n = nu.len();
        if let CostSpec::Matrix { values } = self {
            if values.len() != m || values.iter().any(|row| row.len() != n) {
                return Err(Error::InvalidInput(format!(
                    "cost matrix must be {m}x{n}"
                )));
            }
            return Ok(values.iter().flatten().copied().collect());
        }
        let needs_1d = matches!(
            self,
            CostSpec::SignedPower { .. } | CostSpec::PosPartPower { .. } | CostSpec::NegPartPower { .. }
        );
        if needs_1d && (mu.dim() != 1 || nu.dim() != 1) {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: mu.dim().max(nu.dim()),
            });
        }
        let mut c = Vec::with_capacity(m * n);
        for i in 0..m {
            for j in 0..n {
                let x = mu.point(i);
                let y = nu.point(j);
                let v = match self {
                    CostSpec::AbsPower { p } => dist_pow(x, y, *p),
                    CostSpec::SignedPower { p } => (y[0] - x[0]).powi(*p as i32),
                    CostSpec::PosPartPower { p } => pow_abs((y[0] - x[0]).max(0.0), *p),
                    CostSpec::NegPartPower { p } => pow_abs((x[0] - y[0]).max(0.0), *p),
                    CostSpec::ScalarProduct => x.iter().zip(y).map(|(a, b)| a * b).sum(),
                    CostSpec::Matrix { .. } => unreachable!(),
                };
                c.push(v);
            }
        }
        Ok(c)
    }
}

// ---------------------------------------------------------------------------
// Wasserstein distance
// ---------------------------------------------------------------------------

/// W_p(μ,ν)^p together with an optimal coupling. In dimension 1 the
/// comonotone (quantile) coupling is optimal and is used directly; higher
/// dimensions solve the transportation LP.
pub fn w_p(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<(f64, Coupling)> {
    check_pair(mu, nu, p)?;
    if mu.dim() == 1 {
        return comonotone(mu, nu, p);
    }
    let cost = CostSpec::AbsPower { p }.cost_matrix(mu, nu)?;
    let (value, coupling) = transport_lp(mu, nu, &cost)?;
    Ok((value, coupling))
}

fn check_pair(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    if p < 1.0 {
        return Err(Error::InvalidInput(format!("order p={p} < 1")));
    }
    Ok(())
}

fn comonotone(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<(f64, Coupling)> {
    let mut entries = Vec::with_capacity(mu.len() + nu.len());
    let mut cost = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    let mut a = mu.weights()[0];
    let mut b = nu.weights()[0];
    loop {
        let m = a.min(b);
        if m > 0.0 {
            cost += m * pow_abs(mu.scalar_point(i) - nu.scalar_point(j), p);
            entries.push((i, j, m));
        }
        if a <= b {
            b -= a;
            i += 1;
            if i == mu.len() {
                break;
            }
            a = mu.weights()[i];
        } else {
            a -= b;
            j += 1;
            if j == nu.len() {
                break;
            }
            b = nu.weights()[j];
        }
    }
    let coupling = Coupling::new(mu.points().to_vec(), nu.points().to_vec(), entries)?;
    Ok((cost, coupling))
}

/// Transportation LP between two raw weight vectors (each summing to 1)
/// under a row-major cost matrix; returns the optimal value and the sparse
/// plan. The building block behind [`w_p`] in d ≥ 2 and the outer problem of
/// the adapted distance.
pub(crate) fn transport_lp_raw(
    wa: &[f64],
    wb: &[f64],
    cost: &[f64],
) -> Result<(f64, Vec<(usize, usize, f64)>)> {
    let m = wa.len();
    let n = wb.len();
    let mut rhs = Vec::with_capacity(m + n);
    rhs.extend_from_slice(wa);
    rhs.extend_from_slice(wb);
    let mut lp = LinearProgram::new(rhs);
    for i in 0..m {
        for j in 0..n {
            lp.add_var(
                cost[i * n + j],
                (0.0, f64::INFINITY),
                &[(i, 1.0), (m + j, 1.0)],
            );
        }
    }
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible),
        LpStatus::Unbounded => return Err(Error::Unbounded),
    }
    let plan: Vec<(usize, usize, f64)> = sol
        .primal
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 1e-13)
        .map(|(k, &w)| (k / n, k % n, w))
        .collect();
    Ok((sol.objective, plan))
}

/// Plain transportation LP for an arbitrary cost matrix (row-major m×n).
pub(crate) fn transport_lp(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &[f64],
) -> Result<(f64, Coupling)> {
    let (value, plan) = transport_lp_raw(mu.weights(), nu.weights(), cost)?;
    let coupling = Coupling::new(mu.points().to_vec(), nu.points().to_vec(), plan)?;
    check_marginals(&coupling, mu, nu, 0)?;
    Ok((value, coupling))
}

fn extract_coupling(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    primal: &[f64],
) -> Result<Coupling> {
    let n = nu.len();
    let entries: Vec<(usize, usize, f64)> = primal
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 1e-13)
        .map(|(k, &w)| (k / n, k % n, w))
        .collect();
    Coupling::new(mu.points().to_vec(), nu.points().to_vec(), entries)
}

fn check_marginals(
    c: &Coupling,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    iterations: usize,
) -> Result<()> {
    let bad_row = c
        .src_marginal()
        .iter()
        .zip(mu.weights())
        .any(|(a, b)| (a - b).abs() > MARGINAL_TOL);
    let bad_col = c
        .dst_marginal()
        .iter()
        .zip(nu.weights())
        .any(|(a, b)| (a - b).abs() > MARGINAL_TOL);
    if bad_row || bad_col {
        return Err(Error::NumericalBreakdown { iterations });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Martingale transport
// ---------------------------------------------------------------------------

fn martingale_lp(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: Option<&[f64]>) -> LinearProgram {
    let m = mu.len();
    let n = nu.len();
    let d = mu.dim();
    let mut rhs = Vec::with_capacity(m + n + m * d);
    rhs.extend_from_slice(mu.weights());
    rhs.extend_from_slice(nu.weights());
    rhs.extend(std::iter::repeat(0.0).take(m * d));
    let mut lp = LinearProgram::new(rhs);
    let mut col: Vec<(usize, f64)> = Vec::with_capacity(2 + d);
    for i in 0..m {
        for j in 0..n {
            col.clear();
            col.push((i, 1.0));
            col.push((m + j, 1.0));
            for k in 0..d {
                let coef = nu.point(j)[k] - mu.point(i)[k];
                if coef != 0.0 {
                    col.push((m + n + i * d + k, coef));
                }
            }
            let c = cost.map_or(0.0, |c| c[i * n + j]);
            lp.add_var(c, (0.0, f64::INFINITY), &col);
        }
    }
    lp
}

fn means_close(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> bool {
    mu.mean()
        .iter()
        .zip(nu.mean())
        .all(|(a, b)| (a - b).abs() <= MEAN_TOL * (1.0 + a.abs()))
}

/// M_p(μ,ν)^p, the minimal ∫|x-y|^p dπ over martingale couplings, with an
/// optimizer. Fails with [`Error::NotInConvexOrder`] when no martingale
/// coupling exists.
pub fn m_p(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<(f64, MartingaleCoupling)> {
    check_pair(mu, nu, p)?;
    let cost = CostSpec::AbsPower { p }.cost_matrix(mu, nu)?;
    mot_value(mu, nu, &CostSpec::Matrix {
        values: cost.chunks(nu.len()).map(|r| r.to_vec()).collect(),
    })
}

/// Strassen test: is there a martingale coupling between μ and ν, i.e. is
/// μ ≤ ν in the convex order? Decided by LP phase-1 feasibility.
pub fn convex_order_feasible(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<bool> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    if !means_close(mu, nu) {
        return Ok(false);
    }
    martingale_lp(mu, nu, None).feasible()
}

/// Martingale optimal transport value V_c(μ,ν) = inf over martingale
/// couplings of ∫ c dπ, with an optimal coupling. `-mot_value(μ,ν,-c)` is the
/// corresponding robust upper price bound, see [`mot_upper_value`].
pub fn mot_value(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostSpec,
) -> Result<(f64, MartingaleCoupling)> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    if !means_close(mu, nu) {
        return Err(Error::NotInConvexOrder);
    }
    let c = cost.cost_matrix(mu, nu)?;
    let lp = martingale_lp(mu, nu, Some(&c));
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::NotInConvexOrder),
        LpStatus::Unbounded => return Err(Error::Unbounded),
    }
    let coupling = extract_coupling(mu, nu, &sol.primal)?;
    check_marginals(&coupling, mu, nu, sol.iterations)?;
    Ok((sol.objective, MartingaleCoupling::new(coupling)?))
}

/// The robust upper price bound -V_{-c}(μ,ν) and the coupling attaining it.
pub fn mot_upper_value(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &CostSpec,
) -> Result<(f64, MartingaleCoupling)> {
    let c = cost.cost_matrix(mu, nu)?;
    let negated: Vec<Vec<f64>> = c
        .chunks(nu.len())
        .map(|row| row.iter().map(|v| -v).collect())
        .collect();
    let (value, coupling) = mot_value(mu, nu, &CostSpec::Matrix { values: negated })?;
    Ok((-value, coupling))
}
