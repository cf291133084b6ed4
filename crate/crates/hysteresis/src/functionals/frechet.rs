use super::{ClassA, Paths};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::stats::log_log_slope;

/// Residuals of the first-order expansion along an `eps` ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct FrechetReport {
    pub eps: Vec<f64>,
    /// `max_i |h_i(c + eps z) - h_i(c) - eps (atom_i z_i + Σ_{r<=i} density(r, i) z_r Δt)|`
    pub residuals: Vec<f64>,
    /// Log-log slope of residual against `eps`; NaN when every residual is zero.
    pub order: f64,
}

impl FrechetReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

/// Perturbs the policy path `c` along `z` with the noise `w` held fixed.
pub fn frechet_check(
    h: &dyn ClassA,
    grid: &TimeGrid,
    c: &[f64],
    w: &[f64],
    z: &[f64],
    eps: &[f64],
) -> Result<FrechetReport> {
    if c.len() != grid.len() || w.len() != grid.len() || z.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    if eps.len() < 2 {
        return Err(Error::InvalidArgument(
            "eps ladder needs at least two rungs".into(),
        ));
    }
    let dt = grid.dt();
    let base = Paths::new(grid, c, w);
    let linear: Vec<(f64, f64)> = (0..grid.len())
        .map(|i| {
            let d = h.atom(base, i) * z[i]
                + (0..=i).map(|r| h.density(base, r, i) * z[r]).sum::<f64>() * dt;
            (h.eval(base, i), d)
        })
        .collect();
    let residuals: Vec<f64> = eps
        .iter()
        .map(|e| {
            let shifted: Vec<f64> = c.iter().zip(z).map(|(a, b)| a + e * b).collect();
            let p = Paths::new(grid, &shifted, w);
            linear
                .iter()
                .enumerate()
                .map(|(i, (h0, d))| (h.eval(p, i) - h0 - e * d).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let order = if residuals.iter().all(|r| *r > 0.0) {
        log_log_slope(eps, &residuals)
    } else {
        f64::NAN
    };
    Ok(FrechetReport {
        eps: eps.to_vec(),
        residuals,
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::*;

    const LADDER: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

    fn setup(n: usize) -> (TimeGrid, Vec<f64>, Vec<f64>) {
        let g = TimeGrid::new(1.0, n).unwrap();
        let c = (0..=n).map(|i| (i as f64 * 0.3).sin()).collect();
        let z = (0..=n).map(|i| 1.0 + (i as f64 * 0.7).cos()).collect();
        (g, c, z)
    }

    #[test]
    fn cumulative_remainder_is_exactly_quadratic() {
        let (g, c, z) = setup(16);
        let r = frechet_check(&Cumulative, &g, &c, &c, &z, &LADDER).unwrap();
        assert!(r.order >= 1.9);
        // remainder eps² z_t Σ_{r<=t} z_r Δt, maximised over t
        let expected = (0..=16)
            .map(|i| (z[i] * z[..=i].iter().sum::<f64>() * g.dt()).abs())
            .fold(0.0, f64::max);
        for (e, res) in LADDER.iter().zip(&r.residuals) {
            assert!((res - e * e * expected).abs() < 1e-12);
        }
    }

    #[test]
    fn climate_is_linear() {
        let (g, c, z) = setup(16);
        let w: Vec<f64> = c.iter().map(|x| 0.5 * x).collect();
        let h = Climate::new(
            PresentDamage::OfState(Smooth::Sin),
            EmissionKernel::PathValue,
        );
        let r = frechet_check(&h, &g, &c, &w, &z, &LADDER).unwrap();
        assert!(r.max_residual() <= 1e-12);
    }

    #[test]
    fn sine_state_remainder_is_bounded_by_second_derivative() {
        let (g, c, z) = setup(16);
        let r = frechet_check(&StateDependent::new(Smooth::Sin), &g, &c, &c, &z, &LADDER).unwrap();
        assert!(r.order >= 1.9);
        let zmax = z.iter().cloned().fold(0.0, f64::max);
        for (e, res) in LADDER.iter().zip(&r.residuals) {
            assert!(*res <= 0.5 * e * e * zmax * zmax);
        }
    }

    #[test]
    fn nonlinear_catalog_entries_are_second_order() {
        let (g, c, z) = setup(12);
        let entries: Vec<Box<dyn ClassA>> = vec![
            Box::new(KernelAverage::new(
                Smooth2::Product,
                Kernel::exponential(1.0),
            )),
            Box::new(KernelAverage::new(
                Smooth2::Separable(Smooth::Sin, Smooth::Exp),
                Kernel::constant(0.5),
            )),
            Box::new(SmoothApproximation::new(Terminal::SquareIntegral, 6.0)),
        ];
        for h in entries {
            let r = frechet_check(h.as_ref(), &g, &c, &c, &z, &LADDER).unwrap();
            assert!(r.order >= 1.9, "{}: {}", h.name(), r.order);
        }
        let t = Tipping::new(Smooth::PositivePart).unwrap();
        let r = frechet_check(&t, &g, &c, &c, &z, &LADDER).unwrap();
        assert!(r.max_residual() <= 1e-12);
    }
}
