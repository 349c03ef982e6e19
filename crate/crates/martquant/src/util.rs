//! Small numeric helpers shared across modules.

/// Squared Euclidean distance.
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// |v|^p, with exact fast paths for the small integer exponents that dominate
/// this crate's workloads.
pub(crate) fn pow_abs(v: f64, p: f64) -> f64 {
    let a = v.abs();
    if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else if p == 3.0 {
        a * a * a
    } else if p == 4.0 {
        let s = a * a;
        s * s
    } else {
        a.powf(p)
    }
}

/// Euclidean distance raised to the power p.
pub(crate) fn dist_pow(a: &[f64], b: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        sq_dist(a, b)
    } else {
        pow_abs(sq_dist(a, b).sqrt(), p)
    }
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Golden-section minimization of a unimodal scalar function on [lo, hi].
/// Deterministic; runs until the bracket is below `tol` (absolute).
pub(crate) fn golden_section(mut lo: f64, mut hi: f64, tol: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    while hi - lo > tol {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Least-squares slope of y against x with the fit residual (RMS of the
/// deviations from the fitted line).
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Nodes and weights of the 32-point Gauss-Legendre rule on [-1, 1],
/// symmetric half stored (positive nodes).
const GL32_NODES: [f64; 16] = [
    0.048_307_665_687_738_32,
    0.144_471_961_582_796_5,
    0.239_287_362_252_137_2,
    0.331_868_602_282_127_65,
    0.421_351_276_130_635_3,
    0.506_899_908_932_229_4,
    0.587_715_757_240_762_3,
    0.663_044_266_930_215_2,
    0.732_182_118_740_289_7,
    0.794_483_795_967_942_4,
    0.849_367_613_732_569_97,
    0.896_321_155_766_052_1,
    0.934_906_075_937_739_7,
    0.964_762_255_587_506_4,
    0.985_611_511_545_268_3,
    0.997_263_861_849_481_6,
];
const GL32_WEIGHTS: [f64; 16] = [
    0.096_540_088_514_727_8,
    0.095_638_720_079_274_86,
    0.093_844_399_080_804_57,
    0.091_173_878_695_763_88,
    0.087_652_093_004_403_8,
    0.083_311_924_226_946_76,
    0.078_193_895_787_070_3,
    0.072_345_794_108_848_51,
    0.065_822_222_776_361_85,
    0.058_684_093_478_535_55,
    0.050_998_059_262_376_18,
    0.042_835_898_022_226_68,
    0.034_273_862_913_021_43,
    0.025_392_065_309_262_06,
    0.016_274_394_730_905_67,
    0.007_018_610_009_470_097,
];

/// ∫_{lo}^{hi} f(t) dt by 32-point Gauss-Legendre quadrature.
pub(crate) fn gauss_legendre(lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut acc = 0.0;
    for (&x, &w) in GL32_NODES.iter().zip(&GL32_WEIGHTS) {
        acc += w * (f(c + h * x) + f(c - h * x));
    }
    acc * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_quadratic_min() {
        let m = golden_section(-1.0, 2.0, 1e-10, |x| (x - 0.7) * (x - 0.7));
        assert!((m - 0.7).abs() < 1e-8);
    }

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        let v = gauss_legendre(0.0, 1.0, |t| t * t * t);
        assert!((v - 0.25).abs() < 1e-14);
        let v = gauss_legendre(-1.0, 3.0, |t| 5.0 * t.powi(4) - t);
        assert!((v - (3f64.powi(5) + 1.0 - (9.0 - 1.0) / 2.0)).abs() < 1e-11);
    }

    #[test]
    fn fit_slope_recovers_line() {
        let xs: Vec<f64> = (1..20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        let (s, b, r) = fit_slope(&xs, &ys);
        assert!((s + 2.0).abs() < 1e-12);
        assert!((b - 3.0).abs() < 1e-11);
        assert!(r < 1e-12);
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(6, 0), 1.0);
        assert_eq!(binomial(6, 6), 1.0);
    }
}
