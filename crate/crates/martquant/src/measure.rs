//! Measure representations: finitely supported measures, closed-form 1D
//! families, potential functions and the 1D convex-order test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::binomial;

/// Slack accepted on the input mass before renormalizing. Weights coming out
/// of an LP carry roundoff; anything within this slack is rescaled so the
/// stored measure sums to 1 up to machine precision.
const MASS_SLACK: f64 = 1e-9;

/// Default slack for the 1D convex-order test. LP and quantization outputs
/// carry roughly 1e-10 noise.
pub const CONVEX_ORDER_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Discrete measures
// ---------------------------------------------------------------------------

/// A finitely supported probability measure on R^d.
///
/// Support points are pairwise distinct (duplicates are merged on
/// construction by summing weights), weights are positive and sum to 1.
/// Points are stored in ascending lexicographic order, so in dimension 1 the
/// support is sorted.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "DiscreteMeasureRepr", into = "DiscreteMeasureRepr")]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DiscreteMeasureRepr {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<DiscreteMeasureRepr> for DiscreteMeasure {
    type Error = Error;
    fn try_from(r: DiscreteMeasureRepr) -> Result<Self> {
        let m = DiscreteMeasure::new(r.points, r.weights)?;
        if m.dim != r.dim {
            return Err(Error::DimensionMismatch {
                expected: r.dim,
                got: m.dim,
            });
        }
        Ok(m)
    }
}

impl From<DiscreteMeasure> for DiscreteMeasureRepr {
    fn from(m: DiscreteMeasure) -> Self {
        DiscreteMeasureRepr {
            dim: m.dim,
            points: m.points,
            weights: m.weights,
        }
    }
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::InvalidMeasure("zero-dimensional points".into()));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidMeasure("non-finite support point".into()));
            }
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure("negative or non-finite weight".into()));
        }

        // Sort lexicographically, then merge equal points. Zero weights are
        // dropped so pushforwards can hand in dead grid points.
        let mut idx: Vec<usize> = (0..points.len()).collect();
        idx.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]));
        let mut merged_points: Vec<Vec<f64>> = Vec::with_capacity(points.len());
        let mut merged_weights: Vec<f64> = Vec::with_capacity(points.len());
        for &i in &idx {
            if let Some(last) = merged_points.last() {
                if lex_cmp(last, &points[i]) == std::cmp::Ordering::Equal {
                    *merged_weights.last_mut().unwrap() += weights[i];
                    continue;
                }
            }
            merged_points.push(points[i].clone());
            merged_weights.push(weights[i]);
        }
        let keep: Vec<usize> = (0..merged_points.len())
            .filter(|&i| merged_weights[i] > 0.0)
            .collect();
        if keep.is_empty() {
            return Err(Error::InvalidMeasure("all weights are zero".into()));
        }
        let points: Vec<Vec<f64>> = keep.iter().map(|&i| merged_points[i].clone()).collect();
        let mut weights: Vec<f64> = keep.iter().map(|&i| merged_weights[i]).collect();

        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_SLACK {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, not 1"
            )));
        }
        for w in &mut weights {
            *w /= total;
        }
        Ok(DiscreteMeasure {
            dim,
            points,
            weights,
        })
    }

    pub fn from_scalars(xs: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::new(xs.into_iter().map(|x| vec![x]).collect(), weights)
    }

    pub fn dirac(point: Vec<f64>) -> Self {
        DiscreteMeasure {
            dim: point.len(),
            points: vec![point],
            weights: vec![1.0],
        }
    }

    /// Convex combination t·self + (1-t)·other.
    pub fn mixture(&self, other: &DiscreteMeasure, t: f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidInput(format!("mixture weight {t} not in [0,1]")));
        }
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        let mut weights: Vec<f64> = self.weights.iter().map(|w| w * t).collect();
        weights.extend(other.weights.iter().map(|w| w * (1.0 - t)));
        Self::new(points, weights)
    }

    pub fn translate(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: shift.len(),
            });
        }
        let points = self
            .points
            .iter()
            .map(|p| p.iter().zip(shift).map(|(a, b)| a + b).collect())
            .collect();
        Self::new(points, self.weights.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// Scalar support point, valid in dimension 1.
    pub fn scalar_point(&self, i: usize) -> f64 {
        debug_assert_eq!(self.dim, 1);
        self.points[i][0]
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (p, w) in self.points.iter().zip(&self.weights) {
            for (acc, v) in m.iter_mut().zip(p) {
                *acc += w * v;
            }
        }
        m
    }

    pub fn mean_1d(&self) -> f64 {
        debug_assert_eq!(self.dim, 1);
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * p[0])
            .sum()
    }

    /// ∫ |x|² dμ.
    pub fn second_moment(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * p.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }

    /// ∫ x^p dμ in dimension 1.
    pub fn raw_moment_1d(&self, p: u32) -> f64 {
        debug_assert_eq!(self.dim, 1);
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(pt, w)| w * pt[0].powi(p as i32))
            .sum()
    }

    /// Lower quantile F^{-1}(u) = inf { x : F(x) ≥ u } in dimension 1.
    pub fn quantile_1d(&self, u: f64) -> Result<f64> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: self.dim,
            });
        }
        if !(0.0 < u && u < 1.0) {
            return Err(Error::InvalidInput(format!("quantile level {u} not in (0,1)")));
        }
        let mut acc = 0.0;
        for (p, w) in self.points.iter().zip(&self.weights) {
            acc += w;
            if acc >= u - 1e-15 {
                return Ok(p[0]);
            }
        }
        Ok(self.points.last().unwrap()[0])
    }

    /// (min, max) of the support in dimension 1.
    pub fn support_bounds_1d(&self) -> (f64, f64) {
        debug_assert_eq!(self.dim, 1);
        (self.points[0][0], self.points[self.points.len() - 1][0])
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).expect("non-finite point") {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

// ---------------------------------------------------------------------------
// Closed-form 1D families
// ---------------------------------------------------------------------------

/// Family of a closed-form 1D distribution on the unit interval, before the
/// affine transform. `Power { rho }` has density ρ·t^(ρ-1) on (0,1); `Uniform`
/// is the Lebesgue measure on [0,1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    Uniform,
    Power { rho: f64 },
}

/// A closed-form 1D measure: a [`Family`] pushed through x = offset + scale·t.
///
/// CDF, quantile and all partial moments are exact, which keeps quantization
/// of these families free of discretization error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Analytic1DRepr", into = "Analytic1DRepr")]
pub struct Analytic1D {
    family: Family,
    offset: f64,
    scale: f64,
}

#[derive(Serialize, Deserialize)]
struct Analytic1DRepr {
    family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[serde(default)]
    offset: f64,
    #[serde(default = "one")]
    scale: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<Analytic1DRepr> for Analytic1D {
    type Error = Error;
    fn try_from(r: Analytic1DRepr) -> Result<Self> {
        let family = match r.family.as_str() {
            "uniform" => Family::Uniform,
            "power" => Family::Power {
                rho: r
                    .rho
                    .ok_or_else(|| Error::InvalidMeasure("power family needs rho".into()))?,
            },
            other => {
                return Err(Error::InvalidMeasure(format!("unknown family {other:?}")));
            }
        };
        Analytic1D::new(family, r.offset, r.scale)
    }
}

impl From<Analytic1D> for Analytic1DRepr {
    fn from(m: Analytic1D) -> Self {
        let (family, rho) = match m.family {
            Family::Uniform => ("uniform".to_string(), None),
            Family::Power { rho } => ("power".to_string(), Some(rho)),
        };
        Analytic1DRepr {
            family,
            rho,
            offset: m.offset,
            scale: m.scale,
        }
    }
}

impl Analytic1D {
    pub fn new(family: Family, offset: f64, scale: f64) -> Result<Self> {
        if !offset.is_finite() || !scale.is_finite() || scale <= 0.0 {
            return Err(Error::InvalidMeasure(format!(
                "affine transform offset={offset}, scale={scale}"
            )));
        }
        if let Family::Power { rho } = family {
            if !(rho > 0.0) || !rho.is_finite() {
                return Err(Error::InvalidMeasure(format!("power exponent rho={rho}")));
            }
        }
        Ok(Analytic1D {
            family,
            offset,
            scale,
        })
    }

    /// Uniform distribution on [a, b].
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::Uniform, a, b - a)
    }

    pub fn uniform01() -> Self {
        Self::uniform(0.0, 1.0).unwrap()
    }

    /// Power family ρ·t^(ρ-1) on (0,1).
    pub fn power(rho: f64) -> Result<Self> {
        Self::new(Family::Power { rho }, 0.0, 1.0)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Support interval [offset, offset + scale].
    pub fn support(&self) -> (f64, f64) {
        (self.offset, self.offset + self.scale)
    }

    /// Exponent e such that the standardized quantile is u^e.
    fn quantile_exponent(&self) -> f64 {
        match self.family {
            Family::Uniform => 1.0,
            Family::Power { rho } => 1.0 / rho,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let t = ((x - self.offset) / self.scale).clamp(0.0, 1.0);
        match self.family {
            Family::Uniform => t,
            Family::Power { rho } => t.powf(rho),
        }
    }

    /// Exact inverse of the CDF on (0,1).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0 < u && u < 1.0) {
            return Err(Error::InvalidInput(format!("quantile level {u} not in (0,1)")));
        }
        Ok(self.quantile_inner(u))
    }

    fn quantile_inner(&self, u: f64) -> f64 {
        let t = match self.family {
            Family::Uniform => u,
            Family::Power { rho } => u.powf(1.0 / rho),
        };
        self.offset + self.scale * t
    }

    /// ∫ (F^{-1}(u))^p du over the u-interval [u0, u1] — the raw partial
    /// moment in quantile space.
    pub(crate) fn partial_moment_u(&self, p: u32, u0: f64, u1: f64) -> f64 {
        let e = self.quantile_exponent();
        let mut acc = 0.0;
        for j in 0..=p {
            let je1 = j as f64 * e + 1.0;
            acc += binomial(p, j)
                * self.offset.powi((p - j) as i32)
                * self.scale.powi(j as i32)
                * (u1.powf(je1) - u0.powf(je1))
                / je1;
        }
        acc
    }

    /// Conditional mean of the measure on the u-interval [u0, u1].
    pub(crate) fn conditional_mean_u(&self, u0: f64, u1: f64) -> f64 {
        self.partial_moment_u(1, u0, u1) / (u1 - u0)
    }

    /// ∫_{lo}^{hi} x^p dμ, exact closed form.
    pub fn partial_moment(&self, p: u32, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let u0 = self.cdf(lo);
        let u1 = self.cdf(hi);
        self.partial_moment_u(p, u0, u1)
    }

    pub fn mean(&self) -> f64 {
        self.partial_moment_u(1, 0.0, 1.0)
    }

    /// ∫ x² dμ.
    pub fn second_moment(&self) -> f64 {
        self.partial_moment_u(2, 0.0, 1.0)
    }

    /// Conditional-mean discretization on n equal-mass quantile cells. The
    /// result has the same mean and is below the source in the convex order
    /// (conditional expectations contract convex integrals).
    pub fn discretize(&self, n: usize) -> Result<DiscreteMeasure> {
        if n == 0 {
            return Err(Error::InvalidInput("discretize needs n >= 1".into()));
        }
        let nf = n as f64;
        let mut xs = Vec::with_capacity(n);
        for k in 0..n {
            let u0 = k as f64 / nf;
            let u1 = (k + 1) as f64 / nf;
            xs.push(self.conditional_mean_u(u0, u1) );
        }
        DiscreteMeasure::from_scalars(xs, vec![1.0 / nf; n])
    }
}

// ---------------------------------------------------------------------------
// Union input type
// ---------------------------------------------------------------------------

/// Either a closed-form family or a finitely supported measure. Operations
/// that accept both (distortion, dual quantization, grid search) take this.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Measure {
    Analytic(Analytic1D),
    Discrete(DiscreteMeasure),
}

impl Measure {
    pub fn dim(&self) -> usize {
        match self {
            Measure::Analytic(_) => 1,
            Measure::Discrete(m) => m.dim(),
        }
    }

    pub fn mean_1d(&self) -> Result<f64> {
        match self {
            Measure::Analytic(m) => Ok(m.mean()),
            Measure::Discrete(m) => {
                if m.dim() != 1 {
                    return Err(Error::DimensionMismatch {
                        expected: 1,
                        got: m.dim(),
                    });
                }
                Ok(m.mean_1d())
            }
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            Measure::Analytic(m) => m.second_moment(),
            Measure::Discrete(m) => m.second_moment(),
        }
    }

    /// Support bounds in dimension 1.
    pub fn support_bounds_1d(&self) -> Result<(f64, f64)> {
        match self {
            Measure::Analytic(m) => Ok(m.support()),
            Measure::Discrete(m) => {
                if m.dim() != 1 {
                    return Err(Error::DimensionMismatch {
                        expected: 1,
                        got: m.dim(),
                    });
                }
                Ok(m.support_bounds_1d())
            }
        }
    }

    /// The measure itself when discrete, otherwise the n-cell
    /// conditional-mean discretization.
    pub fn to_discrete(&self, n: usize) -> Result<DiscreteMeasure> {
        match self {
            Measure::Analytic(m) => m.discretize(n),
            Measure::Discrete(m) => Ok(m.clone()),
        }
    }

    /// Built-in measures usable by name: `uniform01`, `tri2x` (density 2x on
    /// (0,1)), `invsqrt` (density 1/(2√x) on (0,1)), `mu6`, `mu6check`.
    pub fn builtin(name: &str) -> Option<Measure> {
        match name {
            "uniform01" => Some(Measure::Analytic(Analytic1D::uniform01())),
            "tri2x" => Some(Measure::Analytic(Analytic1D::power(2.0).unwrap())),
            "invsqrt" => Some(Measure::Analytic(Analytic1D::power(0.5).unwrap())),
            "mu6" => Some(Measure::Discrete(mu6())),
            "mu6check" => Some(Measure::Discrete(mu6_check())),
            _ => None,
        }
    }
}

impl From<Analytic1D> for Measure {
    fn from(m: Analytic1D) -> Self {
        Measure::Analytic(m)
    }
}

impl From<DiscreteMeasure> for Measure {
    fn from(m: DiscreteMeasure) -> Self {
        Measure::Discrete(m)
    }
}

// ---------------------------------------------------------------------------
// Fixtures
// ---------------------------------------------------------------------------

/// Six-point measure on {0, 2/5, 7/15, 8/15, 3/5, 1} with weights
/// (1/5, 7/30, 1/15, 1/15, 7/30, 1/5). It equals its own optimal dual
/// quantization on six points yet is not comparable with [`mu6_check`] in the
/// convex order.
pub fn mu6() -> DiscreteMeasure {
    DiscreteMeasure::from_scalars(
        vec![0.0, 2.0 / 5.0, 7.0 / 15.0, 8.0 / 15.0, 3.0 / 5.0, 1.0],
        vec![
            1.0 / 5.0,
            7.0 / 30.0,
            1.0 / 15.0,
            1.0 / 15.0,
            7.0 / 30.0,
            1.0 / 5.0,
        ],
    )
    .unwrap()
}

/// Optimal dual quantization of the uniform law on [0,1] at six points:
/// weights (1/10, 1/5, 1/5, 1/5, 1/5, 1/10) on {0, 1/5, 2/5, 3/5, 4/5, 1}.
pub fn mu6_check() -> DiscreteMeasure {
    DiscreteMeasure::from_scalars(
        vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
        vec![0.1, 0.2, 0.2, 0.2, 0.2, 0.1],
    )
    .unwrap()
}

// ---------------------------------------------------------------------------
// Potential functions and the convex order
// ---------------------------------------------------------------------------

/// The convex, piecewise-affine antiderivative φ(x) = ∫_{-∞}^x F(y) dy of a
/// 1D discrete measure's CDF. Slopes increase from 0 to 1 with kinks exactly
/// at the atoms; φ(x) - (x - mean) vanishes as x → +∞.
#[derive(Clone, Debug)]
pub struct PotentialFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    mean: f64,
}

impl PotentialFunction {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Slope on the segment to the right of breakpoint i (the cumulative
    /// weight through atom i).
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.breakpoints.len();
        if x <= self.breakpoints[0] {
            return 0.0;
        }
        if x >= self.breakpoints[n - 1] {
            return self.values[n - 1] + (x - self.breakpoints[n - 1]);
        }
        let i = self.breakpoints.partition_point(|b| *b <= x) - 1;
        self.values[i] + self.slopes[i] * (x - self.breakpoints[i])
    }
}

/// Potential function of a 1D discrete measure.
pub fn potential(m: &DiscreteMeasure) -> Result<PotentialFunction> {
    if m.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: m.dim(),
        });
    }
    let n = m.len();
    let breakpoints: Vec<f64> = (0..n).map(|i| m.scalar_point(i)).collect();
    let mut slopes = Vec::with_capacity(n);
    let mut acc = 0.0;
    for w in m.weights() {
        acc += w;
        slopes.push(acc);
    }
    // Final slope is exactly 1 by construction of the measure.
    slopes[n - 1] = 1.0;
    let mut values = vec![0.0; n];
    for i in 1..n {
        values[i] = values[i - 1] + slopes[i - 1] * (breakpoints[i] - breakpoints[i - 1]);
    }
    Ok(PotentialFunction {
        breakpoints,
        values,
        slopes,
        mean: m.mean_1d(),
    })
}

/// 1D convex-order test: `mu` ≤ `nu` in the convex order iff the means agree
/// and φ_ν ≥ φ_μ pointwise. Both sides are piecewise affine with kinks only
/// at atoms and their difference vanishes at ±∞ once the means agree, so
/// checking the inequality at the union of the atoms is sufficient.
pub fn convex_order_leq_1d(mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: f64) -> Result<bool> {
    if mu.dim() != 1 || nu.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: mu.dim().max(nu.dim()),
        });
    }
    if (mu.mean_1d() - nu.mean_1d()).abs() > tol {
        return Ok(false);
    }
    let phi_mu = potential(mu)?;
    let phi_nu = potential(nu)?;
    let ordered = phi_mu
        .breakpoints
        .iter()
        .chain(phi_nu.breakpoints.iter())
        .all(|&x| phi_nu.eval(x) >= phi_mu.eval(x) - tol);
    Ok(ordered)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn cdf_examples() {
        let invsqrt = Analytic1D::power(0.5).unwrap();
        assert!(close(invsqrt.cdf(0.25), 0.5, 1e-15));
        let u = Analytic1D::uniform01();
        assert!(close(u.cdf(0.3), 0.3, 1e-15));
        let tri = Analytic1D::power(2.0).unwrap();
        assert!(close(tri.cdf(0.5), 0.25, 1e-15));
    }

    #[test]
    fn quantile_examples() {
        let invsqrt = Analytic1D::power(0.5).unwrap();
        assert!(close(invsqrt.quantile(0.5).unwrap(), 0.25, 1e-15));
        let u = Analytic1D::uniform01();
        assert!(close(u.quantile(0.7).unwrap(), 0.7, 1e-15));
        let tri = Analytic1D::power(2.0).unwrap();
        assert!(close(tri.quantile(0.49).unwrap(), 0.7, 1e-15));
        assert!(u.quantile(0.0).is_err());
        assert!(u.quantile(1.0).is_err());
    }

    #[test]
    fn quantile_cdf_roundtrip_fine_grid() {
        for m in [
            Analytic1D::uniform01(),
            Analytic1D::power(0.5).unwrap(),
            Analytic1D::power(2.0).unwrap(),
            Analytic1D::new(Family::Power { rho: 3.5 }, -2.0, 5.0).unwrap(),
            Analytic1D::uniform(1.0, 4.0).unwrap(),
        ] {
            for k in 1..1000 {
                let u = k as f64 / 1000.0;
                let x = m.quantile(u).unwrap();
                assert!(
                    close(m.cdf(x), u, 1e-10),
                    "roundtrip failed for {m:?} at u={u}"
                );
            }
        }
    }

    #[test]
    fn partial_moment_examples() {
        let u = Analytic1D::uniform01();
        assert!(close(u.partial_moment(1, 0.0, 1.0), 0.5, 1e-15));
        let tri = Analytic1D::power(2.0).unwrap();
        assert!(close(tri.partial_moment(2, 0.0, 1.0), 0.5, 1e-15));
        let invsqrt = Analytic1D::power(0.5).unwrap();
        assert!(close(invsqrt.partial_moment(1, 0.0, 1.0), 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn partial_moment_affine_transform() {
        // Uniform on [2, 5]: ∫ x² dx / 3 over [2,5] = (125-8)/9 = 13.
        let m = Analytic1D::uniform(2.0, 5.0).unwrap();
        assert!(close(m.partial_moment(2, 2.0, 5.0), 13.0, 1e-12));
        assert!(close(m.mean(), 3.5, 1e-14));
    }

    #[test]
    fn discretize_examples() {
        let u = Analytic1D::uniform01();
        let d2 = u.discretize(2).unwrap();
        assert_eq!(d2.len(), 2);
        assert!(close(d2.scalar_point(0), 0.25, 1e-15));
        assert!(close(d2.scalar_point(1), 0.75, 1e-15));

        let tri = Analytic1D::power(2.0).unwrap();
        let d1 = tri.discretize(1).unwrap();
        assert!(close(d1.scalar_point(0), 2.0 / 3.0, 1e-14));

        let d4 = u.discretize(4).unwrap();
        for (k, expect) in [0.125, 0.375, 0.625, 0.875].iter().enumerate() {
            assert!(close(d4.scalar_point(k), *expect, 1e-15));
            assert!(close(d4.weights()[k], 0.25, 1e-15));
        }
    }

    #[test]
    fn discretize_preserves_mean_and_refines_upward() {
        for m in [
            Analytic1D::uniform01(),
            Analytic1D::power(0.5).unwrap(),
            Analytic1D::power(2.0).unwrap(),
        ] {
            for n in [1usize, 3, 10, 25] {
                let coarse = m.discretize(n).unwrap();
                let fine = m.discretize(2 * n).unwrap();
                assert!(close(coarse.mean_1d(), m.mean(), 1e-12));
                assert!(close(fine.mean_1d(), m.mean(), 1e-12));
                assert!(convex_order_leq_1d(&coarse, &fine, CONVEX_ORDER_TOL).unwrap());
            }
        }
    }

    #[test]
    fn duplicate_points_merge() {
        let m = DiscreteMeasure::from_scalars(vec![1.0, 0.0, 1.0], vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(m.len(), 2);
        assert!(close(m.weights()[1], 0.5, 1e-15));
        assert!(close(m.scalar_point(0), 0.0, 0.0));
    }

    #[test]
    fn bad_mass_rejected() {
        assert!(DiscreteMeasure::from_scalars(vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(DiscreteMeasure::from_scalars(vec![0.0], vec![-1.0]).is_err());
    }

    #[test]
    fn potential_of_dirac_is_positive_part() {
        let phi = potential(&DiscreteMeasure::dirac(vec![0.0])).unwrap();
        assert_eq!(phi.eval(-3.0), 0.0);
        assert_eq!(phi.eval(0.0), 0.0);
        assert!(close(phi.eval(2.5), 2.5, 1e-15));
    }

    #[test]
    fn potential_of_symmetric_pair() {
        let m = DiscreteMeasure::from_scalars(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let phi = potential(&m).unwrap();
        assert!(close(phi.eval(-1.0), 0.0, 1e-15));
        assert!(close(phi.eval(0.0), 0.5, 1e-15));
        assert!(close(phi.eval(1.0), 1.0, 1e-15));
    }

    #[test]
    fn potential_slopes_are_cumulative_weights() {
        let m = DiscreteMeasure::from_scalars(vec![0.0, 0.3, 0.9], vec![0.2, 0.5, 0.3]).unwrap();
        let phi = potential(&m).unwrap();
        assert!(close(phi.slopes()[0], 0.2, 1e-15));
        assert!(close(phi.slopes()[1], 0.7, 1e-15));
        assert_eq!(phi.slopes()[2], 1.0);
    }

    /// The three-point family ν_u dominating the density 2x on (0,1).
    fn nu_u(u: f64) -> DiscreteMeasure {
        let r = u.sqrt();
        DiscreteMeasure::from_scalars(
            vec![0.0, r, 1.0],
            vec![u / 3.0, (1.0 + r) / 3.0, (2.0 - r - u) / 3.0],
        )
        .unwrap()
    }

    #[test]
    fn potential_of_nu_third_at_one() {
        let phi = potential(&nu_u(1.0 / 3.0)).unwrap();
        assert!(close(phi.eval(1.0), 1.0 / 3.0, 1e-14));
    }

    #[test]
    fn convex_order_examples() {
        let dirac = DiscreteMeasure::dirac(vec![0.5]);
        let pair = DiscreteMeasure::from_scalars(vec![0.25, 0.75], vec![0.5, 0.5]).unwrap();
        assert!(convex_order_leq_1d(&dirac, &pair, CONVEX_ORDER_TOL).unwrap());
        assert!(!convex_order_leq_1d(&pair, &dirac, CONVEX_ORDER_TOL).unwrap());

        // The counterexample pair is incomparable in both directions.
        assert!(!convex_order_leq_1d(&mu6(), &mu6_check(), CONVEX_ORDER_TOL).unwrap());
        assert!(!convex_order_leq_1d(&mu6_check(), &mu6(), CONVEX_ORDER_TOL).unwrap());

        let tri = Analytic1D::power(2.0).unwrap();
        let d50 = tri.discretize(50).unwrap();
        assert!(convex_order_leq_1d(&d50, &nu_u(1.0 / 3.0), CONVEX_ORDER_TOL).unwrap());
    }

    #[test]
    fn convex_order_needs_equal_means() {
        let a = DiscreteMeasure::dirac(vec![0.0]);
        let b = DiscreteMeasure::from_scalars(vec![-1.0, 1.2], vec![0.5, 0.5]).unwrap();
        assert!(!convex_order_leq_1d(&a, &b, CONVEX_ORDER_TOL).unwrap());
    }

    #[test]
    fn measure_json_roundtrip() {
        let m = DiscreteMeasure::from_scalars(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"dim\":1"));
        let back: DiscreteMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(back.len(), 2);

        let a = Analytic1D::power(0.5).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains("\"family\":\"power\""));
        let back: Analytic1D = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);

        let m: Measure = serde_json::from_str(r#"{"family":"uniform"}"#).unwrap();
        assert!(matches!(m, Measure::Analytic(_)));
        let m: Measure =
            serde_json::from_str(r#"{"dim":1,"points":[[0.5]],"weights":[1.0]}"#).unwrap();
        assert!(matches!(m, Measure::Discrete(_)));
    }

    #[test]
    fn builtin_names_resolve() {
        for name in ["uniform01", "tri2x", "invsqrt", "mu6", "mu6check"] {
            assert!(Measure::builtin(name).is_some(), "missing builtin {name}");
        }
        assert!(Measure::builtin("nope").is_none());
    }
}
