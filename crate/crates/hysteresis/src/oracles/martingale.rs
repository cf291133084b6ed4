use std::sync::Arc;

use crate::condexp::Conditioner;
use crate::error::{Error, Result};
use crate::functionals::{Kernel, KernelAverage, Smooth, Smooth2};
use crate::grid::{BrownianEnsemble, TimeGrid};
use crate::malliavin::clark_ocone_integrand;
use crate::nodes::NodeMatrix;

/// Future effect of a kernel average with separable kernel
/// `a(s, t) = g(s) g̃(t)` (`s` the later time), obtained by extracting the
/// martingale `M_t = E[∫_0^T g(s) h2_y(w_s, Y_s) ds | F_t]`:
///
/// `F_t = g̃(t) (M_t - ∫_0^t g(s) h2_y ds)`,
/// drift `g̃'(t) (M_t - ∫_0^t g h2_y) - g̃(t) g(t) h2_y(w_t, Y_t)`,
/// diffusion `g̃(t) ψ_t` with `ψ` the Clark–Ocone integrand of `M_T`.
#[derive(Debug, Clone)]
pub struct DetempleZapatero {
    h2: Smooth2,
    g_tilde: Smooth,
    g: Smooth,
}

pub fn oracle_detemple_zapatero(h2: Smooth2, g_tilde: Smooth, g: Smooth) -> DetempleZapatero {
    DetempleZapatero { h2, g_tilde, g }
}

/// Future effect and its coefficients on a node set.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleExtraction {
    pub martingale: NodeMatrix,
    pub future: NodeMatrix,
    pub drift: NodeMatrix,
    pub diffusion: NodeMatrix,
}

impl DetempleZapatero {
    pub fn kernel(&self) -> Kernel {
        let (g, gt) = (self.g.clone(), self.g_tilde.clone());
        Kernel::Custom(Arc::new(move |t, s| {
            let (a, b) = (g.jet(t), gt.jet(s));
            [a[0] * b[0], a[1] * b[0], a[0] * b[1]]
        }))
    }

    /// The kernel average `h2(c_t, ∫_0^t a(t, s) c_s ds)` this oracle describes.
    pub fn functional(&self) -> KernelAverage {
        KernelAverage::new(self.h2.clone(), self.kernel())
    }

    /// `g(t_m) h2_y(w_m, Y_m)` along `c = w`, with `Y` from the separable recursion.
    fn integrand(&self, grid: &TimeGrid, w: &[f64]) -> Vec<f64> {
        let dt = grid.dt();
        let mut inner = 0.0;
        w.iter()
            .enumerate()
            .map(|(m, &x)| {
                let t = grid.time(m);
                inner += self.g_tilde.value(t) * x * dt;
                let g = self.g.value(t);
                g * self.h2.partials(x, g * inner).y
            })
            .collect()
    }

    /// `∫_0^T g(s) h2_y ds` as a left sum over `0..N`.
    pub fn terminal(&self, grid: &TimeGrid, w: &[f64]) -> f64 {
        let u = self.integrand(grid, w);
        u[..grid.steps()].iter().sum::<f64>() * grid.dt()
    }

    /// Evaluates the extraction at `nodes` (all below the horizon). The
    /// Clark–Ocone integrand uses ramps of `width` steps.
    pub fn extract(
        &self,
        ensemble: &BrownianEnsemble,
        cond: &dyn Conditioner,
        nodes: &[usize],
        width: usize,
    ) -> Result<MartingaleExtraction> {
        let grid = *ensemble.grid();
        if let Some(&bad) = nodes.iter().find(|&&i| i >= grid.steps()) {
            return Err(Error::NodeOutOfRange {
                index: bad,
                steps: grid.steps(),
            });
        }
        let dt = grid.dt();
        let paths: Vec<Vec<f64>> = (0..ensemble.len())
            .map(|j| self.integrand(&grid, ensemble.path(j)))
            .collect();
        let terminal: Vec<f64> = paths
            .iter()
            .map(|u| u[..grid.steps()].iter().sum::<f64>() * dt)
            .collect();
        let psi = clark_ocone_integrand(|w| self.terminal(&grid, w), ensemble, cond, width, None)?;
        let (mut mart, mut future, mut drift, mut diffusion) = (vec![], vec![], vec![], vec![]);
        for &i in nodes {
            let t = grid.time(i);
            let [gt, dgt, _, _] = self.g_tilde.jet(t);
            let m = cond.condition(i, &terminal)?;
            let past: Vec<f64> = paths
                .iter()
                .map(|u| u[..i].iter().sum::<f64>() * dt)
                .collect();
            let gap: Vec<f64> = m.iter().zip(&past).map(|(m, a)| m - a).collect();
            future.push(gap.iter().map(|x| gt * x).collect());
            drift.push(
                gap.iter()
                    .zip(&paths)
                    .map(|(x, u)| dgt * x - gt * u[i])
                    .collect(),
            );
            diffusion.push(psi.integrand().column(i)?.iter().map(|p| gt * p).collect());
            mart.push(m);
        }
        let build = |cols| NodeMatrix::from_columns(grid, nodes.to_vec(), cols);
        Ok(MartingaleExtraction {
            martingale: build(mart)?,
            future: build(future)?,
            drift: build(drift)?,
            diffusion: build(diffusion)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condexp::Deterministic;
    use crate::functionals::{ClassA, Paths};

    #[test]
    fn unit_factors_give_remaining_time() {
        let g = TimeGrid::new(1.0, 16).unwrap();
        let e = BrownianEnsemble::sample(g, 30, 3).unwrap();
        let o = oracle_detemple_zapatero(
            Smooth2::SecondArg,
            Smooth::Constant(1.0),
            Smooth::Constant(1.0),
        );
        let nodes = [0, 4, 9, 15];
        let x = o.extract(&e, &Deterministic::new(30), &nodes, 1).unwrap();
        for &i in &nodes {
            assert!(x
                .future
                .column(i)
                .unwrap()
                .iter()
                .all(|f| (f - g.remaining(i)).abs() < 1e-12));
            assert!(x
                .drift
                .column(i)
                .unwrap()
                .iter()
                .all(|d| (d + 1.0).abs() < 1e-12));
            assert!(x
                .diffusion
                .column(i)
                .unwrap()
                .iter()
                .all(|d| d.abs() < 1e-12));
        }
    }

    #[test]
    fn separable_recursion_matches_kernel_average() {
        let g = TimeGrid::new(1.0, 20).unwrap();
        let w: Vec<f64> = (0..=20).map(|i| (i as f64 * 0.3).sin()).collect();
        let exp_neg = Smooth::Custom(Arc::new(|x: f64| {
            let e = (-x).exp();
            [e, -e, e, -e]
        }));
        let o = oracle_detemple_zapatero(Smooth2::Product, Smooth::Exp, exp_neg);
        let h = o.functional();
        let p = Paths::diagonal(&g, &w);
        let u = o.integrand(&g, &w);
        let sums = h.future_sums(p);
        for i in 0..20 {
            let tail: f64 = u[i..20].iter().sum::<f64>() * g.dt();
            assert!((sums[i] - g.time(i).exp() * tail).abs() < 1e-12, "node {i}");
        }
    }
}
