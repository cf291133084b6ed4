use std::fmt;
use std::sync::Arc;

use super::{discounted_future, future_integral, ClassA, Dependence, Functional, Paths, Smooth};
use crate::grid::TimeGrid;

/// Contemporaneous marginal damage `g_t(w^t)`.
#[derive(Clone)]
pub enum PresentDamage {
    Zero,
    Constant(f64),
    /// `g_t(w) = f(w_t)`
    OfState(Smooth),
    /// `(w, i, grid) -> g_{t_i}`; must read `w[..=i]` only.
    Custom(Arc<dyn Fn(&[f64], usize, &TimeGrid) -> f64 + Send + Sync>),
}

/// Emission kernel `k_{s,t}(w^t)` weighting emissions at `s` in the damage at `t >= s`.
#[derive(Clone)]
pub enum EmissionKernel {
    Zero,
    Constant(f64),
    /// `scale * exp(-rate (t - s))`
    Exponential {
        scale: f64,
        rate: f64,
    },
    /// `k_{s,t} = w_t`
    PathValue,
    /// `(s, t, w, grid) -> k_{s,t}`; must read `w[..=t]` only.
    Custom(Arc<dyn Fn(usize, usize, &[f64], &TimeGrid) -> f64 + Send + Sync>),
}

impl fmt::Debug for PresentDamage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PresentDamage::Zero => write!(f, "Zero"),
            PresentDamage::Constant(v) => write!(f, "Constant({v})"),
            PresentDamage::OfState(s) => write!(f, "OfState({s:?})"),
            PresentDamage::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl fmt::Debug for EmissionKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmissionKernel::Zero => write!(f, "Zero"),
            EmissionKernel::Constant(v) => write!(f, "Constant({v})"),
            EmissionKernel::Exponential { scale, rate } => {
                write!(f, "Exponential({scale}, {rate})")
            }
            EmissionKernel::PathValue => write!(f, "PathValue"),
            EmissionKernel::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// `h_t = g_t(w^t) c_t + ∫_0^t k_{s,t}(w^t) c_s ds`, linear in the emissions `c`.
#[derive(Debug, Clone)]
pub struct Climate {
    g: PresentDamage,
    k: EmissionKernel,
}

impl Climate {
    pub fn new(g: PresentDamage, k: EmissionKernel) -> Self {
        Self { g, k }
    }

    pub fn present(&self) -> &PresentDamage {
        &self.g
    }

    pub fn kernel(&self) -> &EmissionKernel {
        &self.k
    }

    pub fn damage(&self, w: &[f64], i: usize, grid: &TimeGrid) -> f64 {
        match &self.g {
            PresentDamage::Zero => 0.0,
            PresentDamage::Constant(v) => *v,
            PresentDamage::OfState(f) => f.value(w[i]),
            PresentDamage::Custom(f) => f(w, i, grid),
        }
    }

    pub fn kernel_value(&self, s: usize, t: usize, w: &[f64], grid: &TimeGrid) -> f64 {
        match &self.k {
            EmissionKernel::Zero => 0.0,
            EmissionKernel::Constant(v) => *v,
            EmissionKernel::Exponential { scale, rate } => {
                scale * (-rate * (grid.time(t) - grid.time(s))).exp()
            }
            EmissionKernel::PathValue => w[t],
            EmissionKernel::Custom(f) => f(s, t, w, grid),
        }
    }
}

impl Functional for Climate {
    fn name(&self) -> &str {
        "climate"
    }

    fn eval(&self, p: Paths<'_>, i: usize) -> f64 {
        let past: f64 = (0..=i)
            .map(|r| self.kernel_value(r, i, p.w, p.grid) * p.c[r])
            .sum();
        self.damage(p.w, i, p.grid) * p.c[i] + past * p.dt()
    }
}

impl ClassA for Climate {
    fn dependence(&self) -> Dependence {
        Dependence::Noise
    }

    fn atom(&self, p: Paths<'_>, i: usize) -> f64 {
        self.damage(p.w, i, p.grid)
    }

    fn density(&self, p: Paths<'_>, s: usize, t: usize) -> f64 {
        self.kernel_value(s, t, p.w, p.grid)
    }

    fn future_sums(&self, p: Paths<'_>) -> Vec<f64> {
        let n = p.steps();
        let dt = p.dt();
        match &self.k {
            EmissionKernel::Zero => vec![0.0; n + 1],
            EmissionKernel::Constant(v) => (0..=n).map(|i| v * (n - i) as f64 * dt).collect(),
            EmissionKernel::Exponential { scale, rate } => {
                let ones = vec![*scale; n + 1];
                discounted_future(&ones, dt, (-rate * dt).exp())
            }
            EmissionKernel::PathValue => future_integral(p.w, dt),
            EmissionKernel::Custom(_) => (0..=n)
                .map(|i| {
                    (i..n)
                        .map(|m| self.kernel_value(i, m, p.w, p.grid))
                        .sum::<f64>()
                        * dt
                })
                .collect(),
        }
    }

    fn has_future(&self) -> bool {
        !matches!(self.k, EmissionKernel::Zero)
    }

    fn analytic_atom_vertical(&self, p: Paths<'_>, i: usize, order: usize) -> Option<f64> {
        if !(1..=2).contains(&order) {
            return None;
        }
        match &self.g {
            PresentDamage::Zero | PresentDamage::Constant(_) => Some(0.0),
            PresentDamage::OfState(f) => Some(f.derivative(p.w[i], order)),
            PresentDamage::Custom(_) => None,
        }
    }

    fn analytic_atom_horizontal(&self, _p: Paths<'_>, _i: usize) -> Option<f64> {
        match &self.g {
            PresentDamage::Custom(_) => None,
            _ => Some(0.0),
        }
    }

    fn analytic_time_sums(&self, p: Paths<'_>) -> Option<Vec<f64>> {
        match &self.k {
            EmissionKernel::Exponential { rate, .. } => {
                Some(self.future_sums(p).into_iter().map(|s| rate * s).collect())
            }
            EmissionKernel::Custom(_) => None,
            _ => Some(vec![0.0; p.grid.len()]),
        }
    }

    fn analytic_malliavin_sums(&self, p: Paths<'_>) -> Option<Vec<f64>> {
        match &self.k {
            EmissionKernel::PathValue => {
                Some((0..p.grid.len()).map(|i| p.grid.remaining(i)).collect())
            }
            EmissionKernel::Custom(_) => None,
            _ => Some(vec![0.0; p.grid.len()]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::test_support::assert_adapted;

    fn path(n: usize) -> Vec<f64> {
        (0..=n).map(|i| (i as f64 * 0.61).sin() * 0.8).collect()
    }

    #[test]
    fn zero_damage_vanishes() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        let w = path(10);
        let c = vec![1.3; 11];
        let h = Climate::new(PresentDamage::Zero, EmissionKernel::Zero);
        assert!((0..=10).all(|i| h.eval(Paths::new(&g, &c, &w), i) == 0.0));
    }

    #[test]
    fn state_damage_with_unit_emissions_is_state() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        let w = path(10);
        let c = vec![1.0; 11];
        let h = Climate::new(
            PresentDamage::OfState(Smooth::Identity),
            EmissionKernel::Zero,
        );
        for i in 0..=10 {
            assert_eq!(h.eval(Paths::new(&g, &c, &w), i), w[i]);
        }
    }

    #[test]
    fn exponential_kernel_integral() {
        let n = 2000;
        let g = TimeGrid::new(1.0, n).unwrap();
        let w = vec![0.0; n + 1];
        let c = vec![1.0; n + 1];
        let h = Climate::new(
            PresentDamage::Zero,
            EmissionKernel::Exponential {
                scale: 1.0,
                rate: 1.0,
            },
        );
        let v = h.eval(Paths::new(&g, &c, &w), n);
        assert!((v - (1.0 - (-1.0_f64).exp())).abs() <= 2.0 * g.dt());
    }

    #[test]
    fn matches_direct_product() {
        let g = TimeGrid::new(1.0, 16).unwrap();
        let w = path(16);
        let c: Vec<f64> = (0..=16).map(|i| 0.2 * i as f64 - 1.0).collect();
        let h = Climate::new(PresentDamage::OfState(Smooth::Cos), EmissionKernel::Zero);
        for i in 0..=16 {
            let direct = w[i].cos() * c[i];
            assert!((h.eval(Paths::new(&g, &c, &w), i) - direct).abs() < 1e-15);
        }
        assert_adapted(&h, &g, &c, &w);
    }

    #[test]
    fn future_sums_match_default() {
        let g = TimeGrid::new(2.0, 14).unwrap();
        let w = path(14);
        let kernels = [
            EmissionKernel::Constant(1.5),
            EmissionKernel::Exponential {
                scale: 0.7,
                rate: 1.1,
            },
            EmissionKernel::PathValue,
        ];
        for k in kernels {
            let h = Climate::new(PresentDamage::Zero, k);
            let p = Paths::diagonal(&g, &w);
            let slow: Vec<f64> = (0..=14)
                .map(|i| (i..14).map(|m| h.density(p, i, m)).sum::<f64>() * g.dt())
                .collect();
            for (a, b) in h.future_sums(p).iter().zip(&slow) {
                assert!((a - b).abs() < 1e-13, "{:?}", h.kernel());
            }
            assert_adapted(&h, &g, &w, &w);
        }
    }
}
