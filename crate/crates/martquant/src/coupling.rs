//! Quantized martingale couplings: pushing a coupling through a stationary
//! primal grid on one side and a splitting kernel on the other, the adapted
//! (nested) Wasserstein distance, and weak martingale transport values for
//! measure-convex kernel costs.

use std::collections::HashMap;

use crate::dual::SplittingKernel;
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpStatus};
use crate::measure::DiscreteMeasure;
use crate::par::par_map;
use crate::primal::{stationarity_residual, Quantizer};
use crate::transport::{
    convex_order_feasible, mot_value, transport_lp_raw, w_p, Coupling, CostSpec,
    MartingaleCoupling,
};
use crate::util::dist_pow;

/// Stationarity defect allowed for the primal grid; beyond this the pushed
/// coupling provably loses the martingale property.
pub const STATIONARITY_TOL: f64 = 1e-8;

/// A martingale coupling pushed onto quantized marginals, with the
/// intermediate coupling and both quantization error terms.
#[derive(Clone, Debug)]
pub struct QuantizedCouplingBundle {
    pub primal_grid: Quantizer,
    pub dual_kernel: SplittingKernel,
    /// Coupling μ → ν̌ (only the second coordinate quantized).
    pub pi_check: MartingaleCoupling,
    /// Coupling μ̂ → ν̌ (both coordinates quantized).
    pub pi_bar: MartingaleCoupling,
    /// e_{2,N}(μ)², the quadratic primal quantization error of the first
    /// marginal on the grid.
    pub primal_error_sq: f64,
    /// The splitting transport cost ∫|y - Proj(y,U)|^p of the second
    /// marginal through the kernel; equals d_p(ν,Γ)^p for an optimal kernel.
    pub dual_error_p: f64,
    pub p: f64,
}

/// Push a martingale coupling π onto quantized marginals: the first
/// coordinate through nearest-neighbour projection on `primal_grid` (which
/// must be stationary for π's first marginal), the second through the
/// splitting kernel. The kernel must provide a row for every support point
/// of π's second marginal.
pub fn build_pi_bar(
    pi: &MartingaleCoupling,
    primal_grid: &Quantizer,
    kernel: &SplittingKernel,
    p: f64,
) -> Result<QuantizedCouplingBundle> {
    let c = pi.coupling();
    if c.dim() != primal_grid.dim() || c.dim() != kernel.grid().dim() {
        return Err(Error::DimensionMismatch {
            expected: c.dim(),
            got: primal_grid.dim().max(kernel.grid().dim()),
        });
    }
    let mu = c.first_marginal()?;
    let residual = stationarity_residual(&mu, primal_grid);
    if residual > STATIONARITY_TOL {
        return Err(Error::NotStationary { residual });
    }

    // Kernel rows are looked up by exact source-point identity.
    let row_of: HashMap<Vec<u64>, usize> = kernel
        .sources()
        .iter()
        .enumerate()
        .map(|(r, pt)| (point_key(pt), r))
        .collect();
    let dst_row: Vec<usize> = c
        .dst_points()
        .iter()
        .enumerate()
        .map(|(j, pt)| {
            row_of
                .get(&point_key(pt))
                .copied()
                .ok_or(Error::MissingKernelRow { index: j })
        })
        .collect::<Result<_>>()?;
    let src_cell: Vec<usize> = c
        .src_points()
        .iter()
        .map(|x| primal_grid.project(x))
        .collect();

    let n_src = c.src_points().len();
    let n_hat = primal_grid.len();
    let n_check = kernel.grid().len();
    let mut check_mass = vec![0.0; n_src * n_check];
    let mut bar_mass = vec![0.0; n_hat * n_check];
    let mut dual_cost = 0.0;
    for &(i, j, w) in c.entries() {
        let row = kernel.row(dst_row[j]);
        let y = &c.dst_points()[j];
        for &(g, q) in row {
            check_mass[i * n_check + g] += w * q;
            bar_mass[src_cell[i] * n_check + g] += w * q;
            dual_cost += w * q * dist_pow(y, kernel.grid().point(g), p);
        }
    }

    let pi_check = MartingaleCoupling::new(Coupling::new(
        c.src_points().to_vec(),
        kernel.grid().points().to_vec(),
        dense_entries(&check_mass, n_check),
    )?)?;
    let pi_bar = MartingaleCoupling::new(Coupling::new(
        primal_grid.points().to_vec(),
        kernel.grid().points().to_vec(),
        dense_entries(&bar_mass, n_check),
    )?)?;

    let primal_error_sq: f64 = mu
        .points()
        .iter()
        .zip(mu.weights())
        .map(|(x, w)| w * dist_pow(x, primal_grid.point(primal_grid.project(x)), 2.0))
        .sum();

    Ok(QuantizedCouplingBundle {
        primal_grid: primal_grid.clone(),
        dual_kernel: kernel.clone(),
        pi_check,
        pi_bar,
        primal_error_sq,
        dual_error_p: dual_cost,
        p,
    })
}

fn point_key(pt: &[f64]) -> Vec<u64> {
    pt.iter().map(|v| v.to_bits()).collect()
}

fn dense_entries(mass: &[f64], cols: usize) -> Vec<(usize, usize, f64)> {
    mass.iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(k, &w)| (k / cols, k % cols, w))
        .collect()
}

/// Adapted Wasserstein distance AW_p(π, π̃): couple the first marginals and
/// pay |x-x̃|^p plus W_p^p between the conditional kernels. Inner distances
/// are computed once per distinct kernel-row pair (rows repeat heavily after
/// quantization) and in parallel; the outer problem is a transportation LP.
/// Returns the distance itself (the p-th root).
pub fn aw_p(pi: &Coupling, pi_tilde: &Coupling, p: f64) -> Result<f64> {
    if pi.dim() != pi_tilde.dim() {
        return Err(Error::DimensionMismatch {
            expected: pi.dim(),
            got: pi_tilde.dim(),
        });
    }
    if p < 1.0 {
        return Err(Error::InvalidInput(format!("order p={p} < 1")));
    }
    let a = KernelSide::new(pi)?;
    let b = KernelSide::new(pi_tilde)?;

    // All distinct row pairs, solved independently.
    let pairs: Vec<(usize, usize)> = (0..a.reps.len())
        .flat_map(|i| (0..b.reps.len()).map(move |j| (i, j)))
        .collect();
    let inner: Vec<Result<f64>> = par_map(&pairs, |&(i, j)| Ok(w_p(&a.reps[i], &b.reps[j], p)?.0));
    let mut inner_cost = vec![0.0; a.reps.len() * b.reps.len()];
    for (k, r) in inner.into_iter().enumerate() {
        inner_cost[k] = r?;
    }

    let mut cost = Vec::with_capacity(a.active.len() * b.active.len());
    for (ai, &i) in a.active.iter().enumerate() {
        for (bj, &j) in b.active.iter().enumerate() {
            let c = dist_pow(&pi.src_points()[i], &pi_tilde.src_points()[j], p)
                + inner_cost[a.rep_of[ai] * b.reps.len() + b.rep_of[bj]];
            cost.push(c);
        }
    }
    let (value, _) = transport_lp_raw(&a.masses, &b.masses, &cost)?;
    Ok(value.max(0.0).powf(1.0 / p))
}

/// One side of the adapted distance: active rows, their masses, and the
/// deduplicated conditional kernels.
struct KernelSide {
    active: Vec<usize>,
    masses: Vec<f64>,
    rep_of: Vec<usize>,
    reps: Vec<DiscreteMeasure>,
}

impl KernelSide {
    fn new(pi: &Coupling) -> Result<Self> {
        let mut active = Vec::new();
        let mut masses = Vec::new();
        let mut rep_of = Vec::new();
        let mut reps: Vec<DiscreteMeasure> = Vec::new();
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        for (i, &m) in pi.src_marginal().iter().enumerate() {
            if m <= 0.0 {
                continue;
            }
            let row = pi.kernel_row(i);
            let mut key = Vec::with_capacity(row.len() * 3);
            for &(j, w) in &row {
                key.extend(point_key(&pi.dst_points()[j]));
                key.push(w.to_bits());
            }
            let rep = match seen.get(&key) {
                Some(&r) => r,
                None => {
                    let pts: Vec<Vec<f64>> =
                        row.iter().map(|&(j, _)| pi.dst_points()[j].clone()).collect();
                    let ws: Vec<f64> = row.iter().map(|&(_, w)| w).collect();
                    reps.push(DiscreteMeasure::new(pts, ws)?);
                    seen.insert(key, reps.len() - 1);
                    reps.len() - 1
                }
            };
            active.push(i);
            masses.push(m);
            rep_of.push(rep);
        }
        Ok(KernelSide {
            active,
            masses,
            rep_of,
            reps,
        })
    }
}

/// W_p distance between two couplings viewed as discrete measures on
/// R^{2d} with the Euclidean norm on stacked vectors. Returns the distance
/// (p-th root).
pub fn coupling_distance_w_p(pi: &Coupling, pi_tilde: &Coupling, p: f64) -> Result<f64> {
    if pi.dim() != pi_tilde.dim() {
        return Err(Error::DimensionMismatch {
            expected: pi.dim(),
            got: pi_tilde.dim(),
        });
    }
    let a = pi.as_product_measure()?;
    let b = pi_tilde.as_product_measure()?;
    let (vp, _) = w_p(&a, &b, p)?;
    Ok(vp.max(0.0).powf(1.0 / p))
}

/// Measure-convex cost C(x,η) for the weak martingale transport problem.
/// All variants are built in; no user code runs.
#[derive(Clone, Debug)]
pub enum KernelCost {
    /// C(x,η) = ∫|y-x|² η(dy), linear in η.
    VarianceAboutSource,
    /// C(x,η) = W_p^p(η, δ_x) = ∫|y-x|^p η(dy), linear in η.
    WpToSourceDirac { p: f64 },
    /// C(x,η) = W_p^p(η, ref) for a fixed reference measure; convex in η.
    WpToReference { p: f64, reference: DiscreteMeasure },
    /// C(x_i,η) = values[i], independent of η.
    SourceValues(Vec<f64>),
}

/// Weak martingale optimal transport value
/// V(μ,ν) = inf over martingale couplings of ∫ C(x, π_x) μ(dx)
/// for the built-in kernel costs. Linear costs reduce to plain martingale
/// transport; the W_p-to-reference cost is solved by one joint LP whose
/// variables are the coupling together with one inner transport plan per
/// source atom (cost columns precomputed per atom).
pub fn wmot_value_via_kernel_cost(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &KernelCost,
) -> Result<f64> {
    match cost {
        KernelCost::VarianceAboutSource => Ok(mot_value(mu, nu, &CostSpec::AbsPower { p: 2.0 })?.0),
        KernelCost::WpToSourceDirac { p } => {
            Ok(mot_value(mu, nu, &CostSpec::AbsPower { p: *p })?.0)
        }
        KernelCost::SourceValues(values) => {
            if values.len() != mu.len() {
                return Err(Error::InvalidInput(
                    "one cost value per source atom required".into(),
                ));
            }
            if !convex_order_feasible(mu, nu)? {
                return Err(Error::NotInConvexOrder);
            }
            Ok(values.iter().zip(mu.weights()).map(|(v, w)| v * w).sum())
        }
        KernelCost::WpToReference { p, reference } => {
            wmot_to_reference(mu, nu, *p, reference)
        }
    }
}

fn wmot_to_reference(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    reference: &DiscreteMeasure,
) -> Result<f64> {
    if reference.dim() != nu.dim() || mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: nu.dim(),
            got: reference.dim(),
        });
    }
    let m = mu.len();
    let n = nu.len();
    let r = reference.len();
    let d = mu.dim();

    // Row layout: μ marginal | ν marginal | martingale | linking Σ_z S = P
    // per (i,j) | reference marginal μ_i·ref_z per (i,z).
    let rows_mu = 0;
    let rows_nu = m;
    let rows_mart = m + n;
    let rows_link = m + n + m * d;
    let rows_ref = rows_link + m * n;
    let mut rhs = vec![0.0; rows_ref + m * r];
    rhs[rows_mu..rows_mu + m].copy_from_slice(mu.weights());
    rhs[rows_nu..rows_nu + n].copy_from_slice(nu.weights());
    for i in 0..m {
        for z in 0..r {
            rhs[rows_ref + i * r + z] = mu.weights()[i] * reference.weights()[z];
        }
    }
    let mut lp = LinearProgram::new(rhs);
    // Coupling variables P_ij.
    for i in 0..m {
        for j in 0..n {
            let mut col = vec![(rows_mu + i, 1.0), (rows_nu + j, 1.0)];
            for k in 0..d {
                let coef = nu.point(j)[k] - mu.point(i)[k];
                if coef != 0.0 {
                    col.push((rows_mart + i * d + k, coef));
                }
            }
            col.push((rows_link + i * n + j, -1.0));
            lp.add_var(0.0, (0.0, f64::INFINITY), &col);
        }
    }
    // Inner plans S_ijz between π_x-mass at y_j and μ_i·ref at z.
    for i in 0..m {
        for j in 0..n {
            for z in 0..r {
                let col = [
                    (rows_link + i * n + j, 1.0),
                    (rows_ref + i * r + z, 1.0),
                ];
                lp.add_var(
                    dist_pow(nu.point(j), reference.point(z), p),
                    (0.0, f64::INFINITY),
                    &col,
                );
            }
        }
    }
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective),
        LpStatus::Infeasible => Err(Error::NotInConvexOrder),
        LpStatus::Unbounded => Err(Error::Unbounded),
    }
}
