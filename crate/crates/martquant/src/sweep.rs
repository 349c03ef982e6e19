//! Convergence sweeps: quantize both marginals at increasing levels, solve
//! the transport problem on the quantized pair, and fit the error rates.

use std::time::Instant;

use crate::coupling::{aw_p, build_pi_bar, coupling_distance_w_p};
use crate::dual::{dual_quantize_1d, optimal_dual_1d_quadratic};
use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, Measure};
use crate::par::par_map;
use crate::primal::{lloyd, LloydInit, LLOYD_MAX_ITER, LLOYD_TOL};
use crate::transport::{mot_value, CostSpec, MartingaleCoupling};
use crate::util::fit_slope;

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub cost: CostSpec,
    /// Order used for the dual distortion and the coupling distances.
    pub p: f64,
    /// Quantization level pairs (N, K), primal then dual.
    pub levels: Vec<(usize, usize)>,
    /// Also build π̄ against the reference coupling and report W_p and AW_p
    /// distances to it. Costly for large supports.
    pub coupling_metrics: bool,
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub n: usize,
    pub k: usize,
    /// e_{2,N}(μ): quadratic primal quantization error (the root).
    pub primal_err: f64,
    /// d_{p,K}(ν): dual quantization error (the root).
    pub dual_err: f64,
    /// Transport value on the quantized pair.
    pub value: f64,
    /// W_p(π̄, π) when coupling metrics are on.
    pub coupling_wp: Option<f64>,
    /// AW_p(π̄, π) when coupling metrics are on.
    pub coupling_awp: Option<f64>,
    pub seconds: f64,
    /// Per-row failure; the sweep keeps going.
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Log-log fit of e_{2,N} against N.
    pub primal_rate: Option<RateFit>,
    /// Log-log fit of d_{p,K} against the interval count K-1 (a dual grid of
    /// K points has K-1 cells, which is the parameter the closed forms decay
    /// in).
    pub dual_rate: Option<RateFit>,
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    if cfg.mu.dim() != 1 || cfg.nu.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: cfg.mu.dim().max(cfg.nu.dim()),
        });
    }
    // The reference coupling is only solved once, and only when requested.
    let reference: Option<MartingaleCoupling> = if cfg.coupling_metrics {
        Some(mot_value(&cfg.mu, &cfg.nu, &cfg.cost)?.1)
    } else {
        None
    };

    let rows: Vec<SweepRow> = par_map(&cfg.levels, |&(n, k)| {
        let start = Instant::now();
        match sweep_row(cfg, reference.as_ref(), n, k) {
            Ok(mut row) => {
                row.seconds = start.elapsed().as_secs_f64();
                row
            }
            Err(e) => SweepRow {
                n,
                k,
                primal_err: f64::NAN,
                dual_err: f64::NAN,
                value: f64::NAN,
                coupling_wp: None,
                coupling_awp: None,
                seconds: start.elapsed().as_secs_f64(),
                error: Some(e.to_string()),
            },
        }
    });

    let primal_rate = fit_rate(
        rows.iter()
            .filter(|r| r.error.is_none() && r.primal_err > 0.0)
            .map(|r| (r.n as f64, r.primal_err)),
    );
    let dual_rate = fit_rate(
        rows.iter()
            .filter(|r| r.error.is_none() && r.dual_err > 0.0 && r.k >= 2)
            .map(|r| ((r.k - 1) as f64, r.dual_err)),
    );
    Ok(SweepReport {
        rows,
        primal_rate,
        dual_rate,
    })
}

fn sweep_row(
    cfg: &SweepConfig,
    reference: Option<&MartingaleCoupling>,
    n: usize,
    k: usize,
) -> Result<SweepRow> {
    let hat = lloyd(&cfg.mu, n, LloydInit::Default, LLOYD_TOL, LLOYD_MAX_ITER)?;
    let dual = optimal_dual_1d_quadratic(&Measure::Discrete(cfg.nu.clone()), k, 1e-10, None)?;
    let dq = dual_quantize_1d(&Measure::Discrete(cfg.nu.clone()), &dual.quantizer, cfg.p)?;
    let (value, _) = mot_value(&hat.pushforward, &dq.pushforward, &cfg.cost)?;

    let (coupling_wp, coupling_awp) = match reference {
        Some(pi) => {
            let bundle = build_pi_bar(pi, &hat.quantizer, &dq.kernel, cfg.p)?;
            let wp = coupling_distance_w_p(bundle.pi_bar.coupling(), pi.coupling(), cfg.p)?;
            let awp = aw_p(bundle.pi_bar.coupling(), pi.coupling(), cfg.p)?;
            (Some(wp), Some(awp))
        }
        None => (None, None),
    };

    Ok(SweepRow {
        n,
        k,
        primal_err: hat.distortion_p.max(0.0).sqrt(),
        dual_err: dq.distortion_p.max(0.0).powf(1.0 / cfg.p),
        value,
        coupling_wp,
        coupling_awp,
        seconds: 0.0,
        error: None,
    })
}

fn fit_rate(points: impl Iterator<Item = (f64, f64)>) -> Option<RateFit> {
    let pts: Vec<(f64, f64)> = points.collect();
    let xs: Vec<f64> = pts.iter().map(|(x, _)| x.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, y)| y.ln()).collect();
    let distinct = {
        let mut sorted = xs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup();
        sorted.len()
    };
    if distinct < 2 {
        return None;
    }
    let (slope, intercept, residual) = fit_slope(&xs, &ys);
    Some(RateFit {
        slope,
        intercept,
        residual,
    })
}
