//! Shared numerical routines: 1-d minimization, quadrature nodes, modified
//! Bessel functions, quantile helpers, and deterministic seed derivation.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use statrs::function::gamma::gamma;

/// Gauss-Legendre nodes and weights on [-1, 1], 4 points (exact through
/// degree 7, enough for products of two cubic-spline pieces).
pub const GL4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
pub const GL4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_85,
    0.652_145_154_862_546_2,
    0.652_145_154_862_546_2,
    0.347_854_845_137_453_85,
];

/// Integrate `f` over [a, b] with a single 4-point Gauss-Legendre rule.
pub fn gl4<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

pub struct BrentResult {
    pub x_min: f64,
    pub f_min: f64,
    pub evaluations: usize,
}

/// Brent's method for 1-d minimization on [a, b].
///
/// `tol` is a relative tolerance on the argument; `max_eval` caps the number
/// of function evaluations.
pub fn brent_min<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_eval: usize,
) -> BrentResult {
    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x = a + GOLDEN * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    let mut evaluations = 1usize;
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    while evaluations < max_eval {
        let mid = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-12;
        let tol2 = 2.0 * tol1;
        if (x - mid).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut use_golden = true;
        if e.abs() > tol1 {
            // parabolic interpolation through (x, w, v)
            let r = (x - w) * (fx - fv);
            let q0 = (x - v) * (fx - fw);
            let mut p = (x - v) * q0 - (x - w) * r;
            let mut q = 2.0 * (q0 - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_old = e;
            e = d;
            if p.abs() < (0.5 * q * e_old).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if (u - a) < tol2 || (b - u) < tol2 {
                    d = if mid > x { tol1 } else { -tol1 };
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x < mid { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        evaluations += 1;
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    BrentResult {
        x_min: x,
        f_min: fx,
        evaluations,
    }
}

/// Standard normal quantile at probability `p`.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

/// Chi-square(k) quantile at probability `p`.
pub fn chi2_quantile(k: f64, p: f64) -> f64 {
    ChiSquared::new(k).unwrap().inverse_cdf(p)
}

/// Modified Bessel function of the second kind, K_nu(x), for x > 0, nu >= 0.
///
/// Half-integer orders use the closed form plus the standard upward
/// recurrence and are exact to rounding. Other orders combine the
/// small-argument series through I_{+/-nu} with the large-argument
/// asymptotic expansion; accuracy degrades when nu is within ~1e-6 of an
/// integer, which the covariance models here never request.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0 && nu >= 0.0, "bessel_k requires x > 0, nu >= 0");
    let two_nu = 2.0 * nu;
    if (two_nu - two_nu.round()).abs() < 1e-12 && (two_nu.round() as i64) % 2 == 1 {
        return bessel_k_half_integer((nu - 0.5).round() as usize, x);
    }
    if x < 8.0 {
        bessel_k_series(nu, x)
    } else {
        bessel_k_asymptotic(nu, x)
    }
}

fn bessel_k_half_integer(steps_above_half: usize, x: f64) -> f64 {
    // K_{1/2}(x) = sqrt(pi/(2x)) e^{-x}; K_{nu+1} = K_{nu-1} + (2 nu / x) K_nu
    let base = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp();
    let mut k_prev = base; // K_{-1/2} = K_{1/2}
    let mut k_cur = base;
    let mut order = 0.5;
    for _ in 0..steps_above_half {
        let k_next = k_prev + (2.0 * order / x) * k_cur;
        k_prev = k_cur;
        k_cur = k_next;
        order += 1.0;
    }
    k_cur
}

fn bessel_i_series(nu: f64, x: f64) -> f64 {
    let half_x = 0.5 * x;
    let mut term = half_x.powf(nu) / gamma(nu + 1.0);
    let mut sum = term;
    let x2 = half_x * half_x;
    for k in 1..200 {
        term *= x2 / (k as f64 * (k as f64 + nu));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn bessel_k_series(nu: f64, x: f64) -> f64 {
    let s = (nu * std::f64::consts::PI).sin();
    std::f64::consts::PI / (2.0 * s) * (bessel_i_series(-nu, x) - bessel_i_series(nu, x))
}

fn bessel_k_asymptotic(nu: f64, x: f64) -> f64 {
    // optimal truncation: add terms while they shrink, stop once they grow
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        term *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        if term.abs() >= prev {
            break;
        }
        sum += term;
        prev = term.abs();
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp() * sum
}

/// SplitMix64 step, used to derive independent per-task RNG seeds from a
/// root seed so results do not depend on scheduling.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic seed for a (root, stream, index) triple.
pub fn derive_seed(root: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(root ^ stream.wrapping_mul(0xA076_1D64_78BD_642F)) ^ index)
}

/// Median of a slice (averaging the two central order statistics).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Quantile by linear interpolation of order statistics, q in [0, 1].
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        v[lo]
    } else {
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn brent_finds_quadratic_minimum() {
        let r = brent_min(|x| (x - 1.7).powi(2) + 3.0, -10.0, 10.0, 1e-10, 200);
        assert_relative_eq!(r.x_min, 1.7, epsilon = 1e-6);
        assert_relative_eq!(r.f_min, 3.0, epsilon = 1e-10);
    }

    #[test]
    fn gl4_exact_for_degree_seven() {
        let exact = 2000.0f64.powi(8) / 8.0;
        let mut acc = 0.0;
        let n = 50;
        for i in 0..n {
            let a = 2000.0 * i as f64 / n as f64;
            let b = 2000.0 * (i + 1) as f64 / n as f64;
            acc += gl4(a, b, |x| x.powi(7));
        }
        assert_relative_eq!(acc, exact, max_relative = 1e-12);
    }

    #[test]
    fn bessel_k_half_matches_closed_form() {
        for &x in &[0.1, 1.0, 3.0, 10.0, 25.0] {
            let expect = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x as f64).exp();
            assert_relative_eq!(bessel_k(0.5, x), expect, max_relative = 1e-13);
        }
    }

    #[test]
    fn bessel_k_three_halves_recurrence() {
        for &x in &[0.2, 1.0, 5.0, 20.0] {
            let expect = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x as f64).exp() * (1.0 + 1.0 / x);
            assert_relative_eq!(bessel_k(1.5, x), expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn bessel_k_series_asymptotic_agree_at_switch() {
        // K_{0.3} around the interior/asymptotic switch point
        for &x in &[7.5, 8.5] {
            let s = bessel_k_series(0.3, x);
            let a = bessel_k_asymptotic(0.3, x);
            assert_relative_eq!(s, a, max_relative = 5e-8);
        }
    }

    #[test]
    fn quantile_and_median() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert_relative_eq!(median(&v), 2.5);
        assert_relative_eq!(quantile(&v, 0.0), 1.0);
        assert_relative_eq!(quantile(&v, 1.0), 4.0);
        assert_relative_eq!(quantile(&v, 0.5), 2.5);
    }

    #[test]
    fn normal_quantile_symmetry() {
        assert_relative_eq!(normal_quantile(0.975), 1.959964, epsilon = 1e-5);
        assert_relative_eq!(normal_quantile(0.025), -normal_quantile(0.975), epsilon = 1e-12);
    }
}
