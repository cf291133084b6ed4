//! Non-anticipative path functionals and their Fréchet structure.
//!
//! A functional `h_t` is evaluated at node `i` on a pair of paths: the policy
//! `c` and the Brownian noise `w`. Most catalog entries read only `c`; the
//! climate and tipping entries keep their coefficients in `w`.
//!
//! Discrete conventions used throughout the crate:
//!
//! * present integrals `∫_0^{t_i} f ds` are `Σ_{r<=i} f_r Δt`,
//! * future integrals `∫_{t_i}^T f ds` are `Σ_{r=i}^{N-1} f_r Δt`,
//! * the first-order expansion of a class-A functional reads
//!   `h_i(c + z) - h_i(c) ≈ atom_i z_i + Σ_{r<=i} density(r, i) z_r Δt`.
//!
//! With these rules the first-order condition of the discretised control
//! problem is exactly `c_i = w_i - ε (atom_i + E[S_i | F_i])` with
//! `S_i = Σ_{m=i}^{N-1} density(i, m) Δt`.

mod climate;
mod cumulative;
mod frechet;
mod kernel_average;
mod midpoint;
mod smooth;
mod smoothing;
mod state_dependent;
mod tipping;

pub use climate::{Climate, EmissionKernel, PresentDamage};
pub use cumulative::Cumulative;
pub use frechet::{frechet_check, FrechetReport};
pub use kernel_average::KernelAverage;
pub use midpoint::Midpoint;
pub use smooth::{Kernel, Partials2, Smooth, Smooth2};
pub use smoothing::{SmoothApproximation, Terminal};
pub use state_dependent::StateDependent;
pub use tipping::{running_argmax, Tipping};

use crate::grid::TimeGrid;

/// Policy and noise paths sharing one grid.
#[derive(Debug, Clone, Copy)]
pub struct Paths<'a> {
    pub grid: &'a TimeGrid,
    pub c: &'a [f64],
    pub w: &'a [f64],
}

impl<'a> Paths<'a> {
    pub fn new(grid: &'a TimeGrid, c: &'a [f64], w: &'a [f64]) -> Self {
        debug_assert_eq!(c.len(), grid.len());
        debug_assert_eq!(w.len(), grid.len());
        Self { grid, c, w }
    }

    /// Evaluation along the unperturbed optimum `c = w`.
    pub fn diagonal(grid: &'a TimeGrid, path: &'a [f64]) -> Self {
        Self::new(grid, path, path)
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt()
    }

    pub fn steps(&self) -> usize {
        self.grid.steps()
    }
}

/// Adapted family `h_t`: `eval(p, i)` reads nodes `0..=i` only.
pub trait Functional: Send + Sync {
    fn name(&self) -> &str;
    fn eval(&self, p: Paths<'_>, i: usize) -> f64;
}

/// Which path the atom and density depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dependence {
    /// Coefficients are functionals of the policy `c`.
    Policy,
    /// Coefficients are functionals of the noise `w`; `h` is linear in `c`.
    Noise,
}

/// Functionals whose Fréchet derivative is an atom at the current time plus
/// an absolutely continuous density.
///
/// The `analytic_*` suppliers are optional. Vertical derivatives are taken
/// with respect to the path named by [`ClassA::dependence`]; the Malliavin
/// sums are along the diagonal `c = w` for policy-dependent entries.
pub trait ClassA: Functional {
    fn dependence(&self) -> Dependence;

    /// `∂_{c_t} h_t`
    fn atom(&self, p: Paths<'_>, i: usize) -> f64;

    /// `δ_s h_t` for `s <= t`
    fn density(&self, p: Paths<'_>, s: usize, t: usize) -> f64;

    fn atoms(&self, p: Paths<'_>) -> Vec<f64> {
        (0..=p.steps()).map(|i| self.atom(p, i)).collect()
    }

    /// `S_i = Σ_{m=i}^{N-1} δ_{t_i} h_{t_m} Δt` for every node (`S_N = 0`).
    fn future_sums(&self, p: Paths<'_>) -> Vec<f64> {
        let n = p.steps();
        let dt = p.dt();
        (0..=n)
            .map(|i| (i..n).map(|m| self.density(p, i, m)).sum::<f64>() * dt)
            .collect()
    }

    /// `false` when the density vanishes identically.
    fn has_future(&self) -> bool {
        true
    }

    /// `∂^order` of the atom at node `i` (order 1 is `∂²h`, order 2 is `∂³h`).
    fn analytic_atom_vertical(&self, _p: Paths<'_>, _i: usize, _order: usize) -> Option<f64> {
        None
    }

    /// `Δ_t ∂_{c_t} h_t`
    fn analytic_atom_horizontal(&self, _p: Paths<'_>, _i: usize) -> Option<f64> {
        None
    }

    /// `Σ_{m>=i} ∂_t(δ_t h_{t_m}) Δt` at `t = t_i`, every node.
    fn analytic_time_sums(&self, _p: Paths<'_>) -> Option<Vec<f64>> {
        None
    }

    /// `Σ_{m>=i} D_t(δ_t h_{t_m}) Δt` at `t = t_i`, every node.
    fn analytic_malliavin_sums(&self, _p: Paths<'_>) -> Option<Vec<f64>> {
        None
    }
}

/// Marginal terms consumed by the first-order-condition solver.
///
/// The solver iterates `c_i = w_i - ε (present_i + E[future_i | F_i])`.
pub trait FocProblem: Send + Sync {
    fn present_marginals(&self, p: Paths<'_>) -> Vec<f64>;
    /// Anticipative per-node sums to be conditioned on `F_i`.
    fn future_marginals(&self, p: Paths<'_>) -> Vec<f64>;
    /// Both marginals ignore `c`, so one evaluation solves the problem.
    fn policy_free(&self) -> bool;
    fn has_future(&self) -> bool;
}

impl<T: ClassA + ?Sized> FocProblem for T {
    fn present_marginals(&self, p: Paths<'_>) -> Vec<f64> {
        self.atoms(p)
    }

    fn future_marginals(&self, p: Paths<'_>) -> Vec<f64> {
        if ClassA::has_future(self) {
            self.future_sums(p)
        } else {
            vec![0.0; p.grid.len()]
        }
    }

    fn policy_free(&self) -> bool {
        self.dependence() == Dependence::Noise
    }

    fn has_future(&self) -> bool {
        ClassA::has_future(self)
    }
}

/// Present integral `Σ_{r<=i} f_r Δt` for every `i`.
pub(crate) fn running_integral(values: &[f64], dt: f64) -> Vec<f64> {
    let mut acc = 0.0;
    values
        .iter()
        .map(|v| {
            acc += v * dt;
            acc
        })
        .collect()
}

/// Future integral `Σ_{r=i}^{N-1} f_r Δt` for every `i`.
pub(crate) fn future_integral(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len() - 1;
    let mut out = vec![0.0; n + 1];
    for i in (0..n).rev() {
        out[i] = out[i + 1] + values[i] * dt;
    }
    out
}

/// Backward recursion `S_i = u_i Δt + q S_{i+1}`, `S_N = 0`.
pub(crate) fn discounted_future(values: &[f64], dt: f64, q: f64) -> Vec<f64> {
    let n = values.len() - 1;
    let mut out = vec![0.0; n + 1];
    for i in (0..n).rev() {
        out[i] = values[i] * dt + q * out[i + 1];
    }
    out
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Checks that `eval` at node `i` ignores nodes after `i`.
    pub fn assert_adapted(h: &dyn Functional, grid: &TimeGrid, c: &[f64], w: &[f64]) {
        let n = grid.steps();
        for i in 0..=n {
            let base = h.eval(Paths::new(grid, c, w), i);
            let mut c2 = c.to_vec();
            let mut w2 = w.to_vec();
            for k in i + 1..=n {
                c2[k] += 3.7 * (k as f64).sin();
                w2[k] -= 1.9 * (k as f64).cos();
            }
            let scrambled = h.eval(Paths::new(grid, &c2, &w2), i);
            assert_eq!(base, scrambled, "{} not adapted at node {i}", h.name());
        }
    }
}
