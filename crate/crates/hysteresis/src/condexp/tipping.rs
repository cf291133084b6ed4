use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::functionals::{running_argmax, Smooth};
use crate::grid::TimeGrid;

fn upper_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `G(a, τ) = ∫_0^τ (2Φ(a/√σ) - 1) dσ`, the expected time in `[0, τ]` before
/// a Brownian motion started at 0 first reaches `a >= 0`. Closed form:
/// `τ (2Φ(x) - 1) + 2 a √τ φ(x) - 2 a² (1 - Φ(x))` with `x = a / √τ`.
pub fn tipping_gap_integral(a: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    if a <= 0.0 {
        return 0.0;
    }
    let n = Normal::standard();
    let st = tau.sqrt();
    let x = a / st;
    let tail = upper_tail(x);
    tau * (1.0 - 2.0 * tail) + 2.0 * a * st * n.pdf(x) - 2.0 * a * a * tail
}

/// `∂G/∂a = 4 √τ φ(a/√τ) - 4 a (1 - Φ(a/√τ))`.
pub fn tipping_gap_slope(a: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let a = a.max(0.0);
    let n = Normal::standard();
    let st = tau.sqrt();
    let x = a / st;
    4.0 * st * n.pdf(x) - 4.0 * a * upper_tail(x)
}

/// `f(t - θ_t) G(M_t - w_t, T - t)` at node `i` of the path `w`.
pub fn tipping_closed_form(grid: &TimeGrid, w: &[f64], i: usize, f: &Smooth) -> f64 {
    let theta = running_argmax(&w[..=i])[i];
    let gap = w[theta] - w[i];
    f.value(grid.time(i) - grid.time(theta)) * tipping_gap_integral(gap, grid.remaining(i))
}

/// `G(a, τ)` by adaptive Simpson quadrature after `σ = u²`, which turns the
/// integrand into the smooth `2u (2Φ(a/u) - 1)` on `[0, √τ]`.
pub fn tipping_quadrature(a: f64, tau: f64, tol: f64) -> f64 {
    if tau <= 0.0 || a <= 0.0 {
        return 0.0;
    }
    let n = Normal::standard();
    let f = |u: f64| {
        if u <= 0.0 {
            0.0
        } else {
            2.0 * u * (2.0 * n.cdf(a / u) - 1.0)
        }
    };
    let (lo, hi) = (0.0, tau.sqrt());
    let mid = 0.5 * (lo + hi);
    let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
    let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    simpson(&f, lo, hi, flo, fmid, fhi, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_matches_quadrature() {
        for (a, tau) in [
            (1.0, 1.0),
            (0.05, 0.75),
            (0.4, 0.25),
            (2.5, 0.5),
            (1e-4, 1.0),
        ] {
            let q = tipping_quadrature(a, tau, 1e-13);
            assert!(
                (tipping_gap_integral(a, tau) - q).abs() < 1e-10,
                "a={a} tau={tau}"
            );
        }
    }

    #[test]
    fn slope_matches_difference_quotient() {
        for (a, tau) in [(0.3, 0.5), (1.2, 1.0)] {
            let h = 1e-6;
            let fd =
                (tipping_gap_integral(a + h, tau) - tipping_gap_integral(a - h, tau)) / (2.0 * h);
            assert!((fd - tipping_gap_slope(a, tau)).abs() < 1e-7);
        }
    }

    #[test]
    fn zero_at_running_max_and_for_zero_weight() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        let w = [0.0, 0.3, 0.1, 0.5, 0.2];
        assert_eq!(tipping_closed_form(&g, &w, 3, &Smooth::PositivePart), 0.0);
        assert_eq!(tipping_closed_form(&g, &w, 4, &Smooth::Zero), 0.0);
        let v = tipping_closed_form(&g, &w, 4, &Smooth::PositivePart);
        assert!((v - 0.25 * tipping_gap_integral(0.3, 0.0)).abs() < 1e-15);
        let v = tipping_closed_form(&g, &w, 2, &Smooth::PositivePart);
        assert!((v - 0.25 * tipping_gap_integral(0.2, 0.5)).abs() < 1e-15);
    }

    #[test]
    fn large_gap_saturates() {
        assert!((tipping_gap_integral(50.0, 1.0) - 1.0).abs() < 1e-15);
    }
}
