use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::condexp::{tipping_closed_form, tipping_gap_integral, tipping_gap_slope};
use crate::error::{Error, Result};
use crate::functionals::{running_argmax, Smooth};
use crate::grid::{BrownianEnsemble, TimeGrid};
use crate::nodes::NodeMatrix;

/// Quantity tabulated by [`ClosedFormOracle::tabulate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleQuantity {
    /// The elasticity `C_t`.
    Elasticity,
    /// Drift of `C_t`.
    Drift,
    /// Diffusion of `C_t`.
    Diffusion,
    /// Optimal policy `c_t` at the given `ε`.
    Policy(f64),
}

/// Exact per-path evaluators. Each returns `None` when the oracle does not
/// describe that quantity.
pub trait ClosedFormOracle: Send + Sync {
    fn name(&self) -> &str;

    fn elasticity(&self, _grid: &TimeGrid, _w: &[f64], _i: usize) -> Option<f64> {
        None
    }

    fn drift(&self, _grid: &TimeGrid, _w: &[f64], _i: usize) -> Option<f64> {
        None
    }

    fn diffusion(&self, _grid: &TimeGrid, _w: &[f64], _i: usize) -> Option<f64> {
        None
    }

    fn policy(&self, _grid: &TimeGrid, _w: &[f64], _i: usize, _eps: f64) -> Option<f64> {
        None
    }

    fn evaluate(&self, q: OracleQuantity, grid: &TimeGrid, w: &[f64], i: usize) -> Option<f64> {
        match q {
            OracleQuantity::Elasticity => self.elasticity(grid, w, i),
            OracleQuantity::Drift => self.drift(grid, w, i),
            OracleQuantity::Diffusion => self.diffusion(grid, w, i),
            OracleQuantity::Policy(eps) => self.policy(grid, w, i, eps),
        }
    }

    /// `q` on every path of `ensemble` at `nodes`.
    fn tabulate(
        &self,
        q: OracleQuantity,
        ensemble: &BrownianEnsemble,
        nodes: &[usize],
    ) -> Result<NodeMatrix> {
        let grid = *ensemble.grid();
        let mut columns = Vec::with_capacity(nodes.len());
        for &i in nodes {
            grid.check_node(i)?;
            let col = (0..ensemble.len())
                .map(|j| self.evaluate(q, &grid, ensemble.path(j), i))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("{} has no {q:?} evaluator", self.name()))
                })?;
            columns.push(col);
        }
        NodeMatrix::from_columns(grid, nodes.to_vec(), columns)
    }
}

/// `h_t(c) = ∫_0^t c ds`: `C_t = -∫_0^t w ds - (T - t) w_t`, drift 0,
/// diffusion `-(T - t)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CumulativeOracle;

pub fn oracle_cumulative() -> CumulativeOracle {
    CumulativeOracle
}

impl ClosedFormOracle for CumulativeOracle {
    fn name(&self) -> &str {
        "cumulative"
    }

    fn elasticity(&self, grid: &TimeGrid, w: &[f64], i: usize) -> Option<f64> {
        let past: f64 = w[..=i].iter().sum::<f64>() * grid.dt();
        Some(-past - grid.remaining(i) * w[i])
    }

    fn drift(&self, _grid: &TimeGrid, _w: &[f64], _i: usize) -> Option<f64> {
        Some(0.0)
    }

    fn diffusion(&self, grid: &TimeGrid, _w: &[f64], i: usize) -> Option<f64> {
        Some(-grid.remaining(i))
    }
}

/// `h_t(c) = f(c_t)`: `C_t = -f'(w_t)`, drift `-f'''(w_t)/2`, diffusion `-f''(w_t)`.
#[derive(Debug, Clone)]
pub struct StateDependentOracle {
    f: Smooth,
}

pub fn oracle_state_dependent(f: Smooth) -> StateDependentOracle {
    StateDependentOracle { f }
}

impl ClosedFormOracle for StateDependentOracle {
    fn name(&self) -> &str {
        "state_dependent"
    }

    fn elasticity(&self, _grid: &TimeGrid, w: &[f64], i: usize) -> Option<f64> {
        Some(-self.f.derivative(w[i], 1))
    }

    fn drift(&self, _grid: &TimeGrid, w: &[f64], i: usize) -> Option<f64> {
        Some(-0.5 * self.f.derivative(w[i], 3))
    }

    fn diffusion(&self, _grid: &TimeGrid, w: &[f64], i: usize) -> Option<f64> {
        Some(-self.f.derivative(w[i], 2))
    }
}

/// `h_t(c) = c_{t/2}` with a deterministic shock: `c_t = θ_t - 2ε` before `T/2`
/// (including the node nearest `T/2`) and `θ_t` after.
#[derive(Debug, Clone, Copy, Default)]
pub struct JumpOracle;

pub fn oracle_jump(grid: &TimeGrid, theta: &[f64], eps: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|i| JumpOracle.policy(grid, theta, i, eps).unwrap_or(theta[i]))
        .collect()
}

impl ClosedFormOracle for JumpOracle {
    fn name(&self) -> &str {
        "jump"
    }

    fn elasticity(&self, grid: &TimeGrid, _w: &[f64], i: usize) -> Option<f64> {
        Some(if i <= grid.nearest_node(0.5 * grid.horizon()) {
            -2.0
        } else {
            0.0
        })
    }

    fn policy(&self, grid: &TimeGrid, w: &[f64], i: usize, eps: f64) -> Option<f64> {
        Some(w[i] + eps * self.elasticity(grid, w, i)?)
    }
}

/// Record-time damages: `C_t = -f(t - θ_t) G(M_t - w_t, T - t)` with
/// `G(a, τ) = ∫_0^τ (2Φ(a/√σ) - 1) dσ`, and `c^ε = w + ε C` exactly.
///
/// Away from a new running maximum, Itô's formula on `(t, w_t)` with `θ_t`
/// and `M_t` frozen gives diffusion `f G_a` and drift
/// `-f' G - f G_aa / 2 + f (2Φ(a/√τ) - 1)` where `G_aa = -4 (1 - Φ(a/√τ))`.
#[derive(Debug, Clone)]
pub struct TippingOracle {
    f: Smooth,
}

pub fn oracle_tipping(f: Smooth) -> TippingOracle {
    TippingOracle { f }
}

impl TippingOracle {
    /// `(t - θ_t, M_t - w_t, T - t)` at node `i`.
    fn state(grid: &TimeGrid, w: &[f64], i: usize) -> (f64, f64, f64) {
        let theta = running_argmax(&w[..=i])[i];
        (
            grid.time(i) - grid.time(theta),
            w[theta] - w[i],
            grid.remaining(i),
        )
    }
}

impl TippingOracle {
    /// `E[(C_{i+1} - C_i)(w_{i+1} - w_i) | F_i] / Δt` for the process sampled
    /// on the grid. A new maximum at `i + 1` sets the gap and hence `C` to 0,
    /// so only steps `x < a` contribute:
    /// `-f(age + Δt) ∫_{-∞}^{a} G(a - x, T - t_{i+1}) x φ_Δt(x) dx / Δt`.
    pub fn step_diffusion(&self, grid: &TimeGrid, w: &[f64], i: usize) -> f64 {
        if i >= grid.steps() {
            return 0.0;
        }
        let (age, a, _) = Self::state(grid, w, i);
        let dt = grid.dt();
        let sd = dt.sqrt();
        let tau = grid.remaining(i + 1);
        let (lo, hi) = (-STEP_TAIL * sd, a.min(STEP_TAIL * sd));
        if hi <= lo {
            return 0.0;
        }
        let n = Normal::new(0.0, sd).expect("positive step");
        let h = (hi - lo) / STEP_PANELS as f64;
        let integral: f64 = (0..=STEP_PANELS)
            .map(|k| {
                let x = lo + k as f64 * h;
                let weight = if k == 0 || k == STEP_PANELS {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                weight * tipping_gap_integral(a - x, tau) * x * n.pdf(x)
            })
            .sum::<f64>()
            * h
            / 3.0;
        -self.f.value(age + dt) * integral / dt
    }
}

/// Standard deviations of the step kept by [`TippingOracle::step_diffusion`].
const STEP_TAIL: f64 = 8.0;
/// Simpson panels (even) over the kept range.
const STEP_PANELS: usize = 128;

impl ClosedFormOracle for TippingOracle {
    fn name(&self) -> &str {
        "tipping"
    }

    fn elasticity(&self, grid: &TimeGrid, w: &[f64], i: usize) -> Option<f64> {
        Some(-tipping_closed_form(grid, w, i, &self.f))
    }

    fn drift(&self, grid: &TimeGrid, w: &[f64], i: usize) -> Option<f64> {
        let (age, a, tau) = Self::state(grid, w, i);
        if tau <= 0.0 {
            return Some(0.0);
        }
        let [f, df, _, _] = self.f.jet(age);
        let cdf = Normal::standard().cdf(a / tau.sqrt());
        let g = tipping_gap_integral(a, tau);
        let g_aa = -4.0 * (1.0 - cdf);
        let g_tau = if a > 0.0 { 2.0 * cdf - 1.0 } else { 0.0 };
        Some(-df * g - 0.5 * f * g_aa + f * g_tau)
    }

    fn diffusion(&self, grid: &TimeGrid, w: &[f64], i: usize) -> Option<f64> {
        let (age, a, tau) = Self::state(grid, w, i);
        Some(self.f.value(age) * tipping_gap_slope(a, tau))
    }

    fn policy(&self, grid: &TimeGrid, w: &[f64], i: usize, eps: f64) -> Option<f64> {
        Some(w[i] + eps * self.elasticity(grid, w, i)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 8).unwrap()
    }

    #[test]
    fn cumulative_boundaries() {
        let g = grid();
        let w: Vec<f64> = (0..9).map(|i| (i as f64 * 0.4).sin()).collect();
        let o = oracle_cumulative();
        assert_eq!(o.elasticity(&g, &w, 0), Some(0.0));
        let total: f64 = w.iter().sum::<f64>() * g.dt();
        assert!((o.elasticity(&g, &w, 8).unwrap() + total).abs() < 1e-15);
        let zero = vec![0.0; 9];
        assert!((0..9).all(|i| o.elasticity(&g, &zero, i) == Some(0.0)));
        assert_eq!(o.diffusion(&g, &w, 2), Some(-0.75));
    }

    #[test]
    fn state_dependent_catalog() {
        let g = grid();
        let w = vec![0.0; 9];
        let sin = oracle_state_dependent(Smooth::Sin);
        assert_eq!(sin.elasticity(&g, &w, 3), Some(-1.0));
        assert_eq!(sin.drift(&g, &w, 3), Some(0.5));
        assert_eq!(sin.diffusion(&g, &w, 3), Some(0.0));
        let quad = oracle_state_dependent(Smooth::HalfSquare);
        assert_eq!(
            (quad.drift(&g, &w, 1), quad.diffusion(&g, &w, 1)),
            (Some(0.0), Some(-1.0))
        );
        let one = vec![1.0; 9];
        let cube = oracle_state_dependent(Smooth::SixthCube);
        assert_eq!(
            (cube.drift(&g, &one, 1), cube.diffusion(&g, &one, 1)),
            (Some(-0.5), Some(-1.0))
        );
    }

    #[test]
    fn jump_catalog() {
        let g = grid();
        let theta = vec![0.0; 9];
        let c = oracle_jump(&g, &theta, 0.1);
        assert!(c[..=4].iter().all(|v| (v + 0.2).abs() < 1e-15));
        assert!(c[5..].iter().all(|v| *v == 0.0));
        let ramp: Vec<f64> = g.times().collect();
        assert_eq!(oracle_jump(&g, &ramp, 0.0), ramp);
        assert_eq!(oracle_jump(&g, &ramp, 0.3)[6], ramp[6]);
    }

    #[test]
    fn tipping_at_running_max_is_state() {
        let g = grid();
        let w: Vec<f64> = (0..9).map(|i| 0.1 * i as f64).collect();
        let o = oracle_tipping(Smooth::PositivePart);
        assert!((0..9).all(|i| o.policy(&g, &w, i, 1.0) == Some(w[i])));
        let bumpy = [0.0, 0.5, 0.2, 0.1, -0.3, 0.0, 0.4, 0.1, 0.2];
        let zero = oracle_tipping(Smooth::Zero);
        assert!((0..9).all(|i| zero.policy(&g, &bumpy, i, 1.0) == Some(bumpy[i])));
    }

    #[test]
    fn tipping_coefficients_match_finite_differences() {
        // C(t, w) with θ and M frozen, differentiated numerically
        let o = oracle_tipping(Smooth::PositivePart);
        let (age, m, tau) = (0.3, 0.8, 0.6);
        let c = |x: f64, s: f64| -(age + s) * tipping_gap_integral(m - x, tau - s);
        let x = 0.2;
        let h = 1e-4;
        let dx = (c(x + h, 0.0) - c(x - h, 0.0)) / (2.0 * h);
        let dxx = (c(x + h, 0.0) - 2.0 * c(x, 0.0) + c(x - h, 0.0)) / (h * h);
        let dt = (c(x, h) - c(x, -h)) / (2.0 * h);
        let n = 100;
        let g = TimeGrid::new(1.0, n).unwrap();
        let mut w = vec![0.0; n + 1];
        w[10] = m;
        for (k, v) in w.iter_mut().enumerate().skip(11) {
            *v = m - (m - x) * (k - 10) as f64 / 30.0;
        }
        let i = 40;
        assert!((g.time(i) - g.time(10) - age).abs() < 1e-12 && (w[i] - x).abs() < 1e-12);
        assert!((o.diffusion(&g, &w, i).unwrap() - dx).abs() < 1e-6);
        assert!((o.drift(&g, &w, i).unwrap() - (dt + 0.5 * dxx)).abs() < 1e-4);
    }
}
