//! Numerical building blocks: the κ → 0 limit helpers, bracketed bisection,
//! adaptive Gauss–Kronrod quadrature and pairwise summation.

use crate::error::{Error, Result};

/// Below this magnitude a persistence rate is treated as exactly zero and
/// every expression with κ in a denominator switches to its limit branch.
pub const KAPPA_EPS: f64 = 1e-8;

/// Default absolute tolerance of the root searches.
pub const ROOT_TOL: f64 = 1e-12;

/// `(e^{2κh} − 1) / (2κ)`, with limit `h` as κ → 0.
pub fn growth(kappa: f64, h: f64) -> f64 {
    if kappa.abs() < KAPPA_EPS {
        h
    } else {
        (2.0 * kappa * h).exp_m1() / (2.0 * kappa)
    }
}

/// Bisection on a sign change of `f` over `[lo, hi]`.
///
/// Stops when the bracket is narrower than `tol` and returns its midpoint.
/// An exact zero at either end point is returned as is.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo.signum() == f_hi.signum() {
        return Err(Error::RootSearch(format!(
            "no sign change on [{lo}, {hi}] (f = {f_lo}, {f_hi})"
        )));
    }
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

const MAX_DEPTH: u32 = 50;

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Quadrature {
    let (value, err) = gk15(f, a, b);
    if err <= tol || depth >= MAX_DEPTH || (b - a) <= f64::EPSILON * a.abs().max(1.0) {
        return Quadrature {
            value,
            abs_error: err,
        };
    }
    let mid = 0.5 * (a + b);
    let left = adapt(f, a, mid, 0.5 * tol, depth + 1);
    let right = adapt(f, mid, b, 0.5 * tol, depth + 1);
    Quadrature {
        value: left.value + right.value,
        abs_error: left.abs_error + right.abs_error,
    }
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]` to absolute
/// tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Quadrature {
    if b <= a {
        return Quadrature {
            value: 0.0,
            abs_error: 0.0,
        };
    }
    adapt(&f, a, b, tol, 0)
}

/// Integrates over `[a, b]` split at every breakpoint strictly inside it.
/// The tolerance is shared evenly between the pieces.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Quadrature {
    let mut cuts: Vec<f64> = vec![a];
    cuts.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let share = tol / (cuts.len() - 1).max(1) as f64;
    let mut total = Quadrature {
        value: 0.0,
        abs_error: 0.0,
    };
    for w in cuts.windows(2) {
        let q = adapt(&f, w[0], w[1], share, 0);
        total.value += q.value;
        total.abs_error += q.abs_error;
    }
    total
}

/// Integrates `f` over `[a, ∞)` through the substitution `s = a + x/(1 − x)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> Quadrature {
    let g = |x: f64| {
        if x >= 1.0 {
            return 0.0;
        }
        let one_minus = 1.0 - x;
        let s = a + x / one_minus;
        let v = f(s) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    adapt(&g, 0.0, 1.0, tol, 0)
}

/// Pairwise (cascade) summation with a fixed reduction tree, so the result
/// depends only on the order of `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Sample mean and standard error of the mean. The standard error is `None`
/// for fewer than two samples.
pub fn mean_and_se(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = pairwise_sum(values) / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let sq: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, Some((var / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growth_matches_limit_and_expm1() {
        assert_eq!(growth(0.0, 2.5), 2.5);
        assert_eq!(growth(1e-9, 2.5), 2.5);
        let k = -0.5;
        let expected = ((2.0 * k * 1.5_f64).exp() - 1.0) / (2.0 * k);
        assert!((growth(k, 1.5) - expected).abs() < 1e-15);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let root = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((root - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_rejects_unbracketed() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn gauss_kronrod_polynomial_and_exponential() {
        let q = integrate(|x| x.powi(5) - 3.0 * x, 0.0, 2.0, 1e-12);
        assert!((q.value - (64.0 / 6.0 - 6.0)).abs() < 1e-12);
        let q = integrate(|x| 3.0 * (-3.0 * x).exp(), 0.0, 1.0, 1e-12);
        assert!((q.value - (1.0 - (-3.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn infinite_range_discount_integrates_to_one() {
        let q = integrate_to_infinity(|s| 2.0 * (-2.0 * s).exp(), 0.0, 1e-12);
        assert!((q.value - 1.0).abs() < 1e-10);
        let q = integrate_to_infinity(|s| 3.0 * (-3.0 * s).exp() * (-8.0 * s).exp(), 0.5, 1e-13);
        let exact = 3.0 / 11.0 * (-11.0 * 0.5f64).exp();
        assert!((q.value - exact).abs() < 1e-11);
    }

    #[test]
    fn pieces_handle_kinks() {
        let q = integrate_pieces(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], 1e-12);
        assert!((q.value - (0.045 + 0.245)).abs() < 1e-13);
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
    }

    #[test]
    fn se_unavailable_for_single_sample() {
        assert_eq!(mean_and_se(&[3.0]), (3.0, None));
        let (m, se) = mean_and_se(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se.unwrap() - 1.0).abs() < 1e-15);
    }
}
