//! Numerical horizontal and vertical derivatives and the functional Itô
//! coefficients built from them.
//!
//! A vertical bump at node `i` also moves every present integral through its
//! endpoint weight `Δt`, so numeric vertical derivatives of integral
//! functionals differ from their continuum atoms by `O(Δt)`.
//! [`dt_extrapolate`] removes that term from values computed on two grids.

use crate::error::{Error, Result};
use crate::grid::{flat_extend_in_place, sup_norm};

/// Default vertical step: `1e-4 (1 + ‖path‖∞)` for orders 1 and 2, and
/// `2e-3 (1 + ‖path‖∞)` for order 3.
pub fn default_eps(path: &[f64], order: usize) -> f64 {
    let scale = 1.0 + sup_norm(path);
    if order >= 3 {
        2e-3 * scale
    } else {
        1e-4 * scale
    }
}

/// Central differences of `f` under bumps of node `i`: order 1 uses `±eps`,
/// order 2 uses `±eps, 0`, order 3 uses `±2eps, ±eps`.
pub fn vertical_derivative(
    f: impl Fn(&[f64]) -> f64,
    path: &[f64],
    i: usize,
    order: usize,
    eps: f64,
) -> Result<f64> {
    if i >= path.len() {
        return Err(Error::NodeOutOfRange {
            index: i,
            steps: path.len() - 1,
        });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "vertical step must be positive, got {eps}"
        )));
    }
    let mut buf = path.to_vec();
    let mut at = |shift: f64| {
        buf[i] = path[i] + shift;
        f(&buf)
    };
    Ok(match order {
        1 => (at(eps) - at(-eps)) / (2.0 * eps),
        2 => (at(eps) - 2.0 * at(0.0) + at(-eps)) / (eps * eps),
        3 => {
            (at(2.0 * eps) - 2.0 * at(eps) + 2.0 * at(-eps) - at(-2.0 * eps))
                / (2.0 * eps * eps * eps)
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "vertical order must be 1, 2 or 3, got {order}"
            )))
        }
    })
}

/// `[q_{i+k}(path flat-extended from i) - q_i(path)] / (k Δt)`.
pub fn horizontal_derivative(
    q: impl Fn(&[f64], usize) -> f64,
    path: &[f64],
    dt: f64,
    i: usize,
    k: usize,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "horizontal extension needs k >= 1".into(),
        ));
    }
    let mut ext = path.to_vec();
    flat_extend_in_place(&mut ext, i, k)?;
    Ok((q(&ext, i + k) - q(path, i)) / (k as f64 * dt))
}

/// Horizontal derivative of the first vertical derivative, `Δ_t ∂ q`.
pub fn mixed_derivative(
    q: impl Fn(&[f64], usize) -> f64,
    path: &[f64],
    dt: f64,
    i: usize,
    k: usize,
    eps: f64,
) -> Result<f64> {
    let vertical =
        |x: &[f64], j: usize| vertical_derivative(|y| q(y, j), x, j, 1, eps).unwrap_or(f64::NAN);
    let v = horizontal_derivative(vertical, path, dt, i, k)?;
    if v.is_nan() {
        return Err(Error::InvalidArgument(
            "mixed derivative step failed".into(),
        ));
    }
    Ok(v)
}

/// Observed order of the differencing error from steps `eps`, `eps/2`, `eps/4`.
pub fn richardson_order(
    f: impl Fn(&[f64]) -> f64,
    path: &[f64],
    i: usize,
    order: usize,
    eps: f64,
) -> Result<f64> {
    let d = [eps, eps / 2.0, eps / 4.0]
        .iter()
        .map(|e| vertical_derivative(&f, path, i, order, *e))
        .collect::<Result<Vec<_>>>()?;
    Ok(((d[0] - d[1]).abs() / (d[1] - d[2]).abs()).log2())
}

/// Richardson combination `2 fine - coarse` of values on grids with steps
/// `Δt` and `Δt/2`, cancelling the first-order endpoint term.
pub fn dt_extrapolate(coarse: f64, fine: f64) -> f64 {
    2.0 * fine - coarse
}

/// `∂, ∂², ∂³`, `Δ_t` and `Δ_t ∂` of a functional family at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DupireDerivatives {
    pub vertical: [f64; 3],
    pub horizontal: f64,
    pub mixed: f64,
}

/// Differencing settings; `eps = None` selects [`default_eps`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DupireConfig {
    pub eps: Option<f64>,
    pub extension: usize,
}

impl Default for DupireConfig {
    fn default() -> Self {
        Self {
            eps: None,
            extension: 1,
        }
    }
}

impl DupireConfig {
    pub fn eps_for(&self, path: &[f64], order: usize) -> f64 {
        self.eps.unwrap_or_else(|| default_eps(path, order))
    }
}

pub fn dupire_derivatives(
    q: impl Fn(&[f64], usize) -> f64,
    path: &[f64],
    dt: f64,
    i: usize,
    cfg: &DupireConfig,
) -> Result<DupireDerivatives> {
    let mut vertical = [0.0; 3];
    for (o, v) in vertical.iter_mut().enumerate() {
        *v = vertical_derivative(|y| q(y, i), path, i, o + 1, cfg.eps_for(path, o + 1))?;
    }
    let horizontal = horizontal_derivative(&q, path, dt, i, cfg.extension)?;
    let mixed = mixed_derivative(&q, path, dt, i, cfg.extension, cfg.eps_for(path, 1))?;
    Ok(DupireDerivatives {
        vertical,
        horizontal,
        mixed,
    })
}

/// Drift and diffusion of a scalar Itô process at one node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ItoCoefficients {
    pub drift: f64,
    pub diffusion: f64,
}

/// Coefficients of `q_t(x)` for `dx = b dt + σ dw`:
/// drift `Δ_t q + ∂q b + ½ ∂²q σ²`, diffusion `∂q σ`.
pub fn functional_ito(
    q: impl Fn(&[f64], usize) -> f64,
    x: &[f64],
    dt: f64,
    i: usize,
    coefficients: ItoCoefficients,
    cfg: &DupireConfig,
) -> Result<ItoCoefficients> {
    let d1 = vertical_derivative(|y| q(y, i), x, i, 1, cfg.eps_for(x, 1))?;
    let d2 = vertical_derivative(|y| q(y, i), x, i, 2, cfg.eps_for(x, 2))?;
    let h = horizontal_derivative(&q, x, dt, i, cfg.extension)?;
    Ok(assemble_ito(h, d1, d2, coefficients))
}

/// Functional Itô assembly from precomputed derivatives.
pub fn assemble_ito(horizontal: f64, d1: f64, d2: f64, x: ItoCoefficients) -> ItoCoefficients {
    ItoCoefficients {
        drift: horizontal + d1 * x.drift + 0.5 * d2 * x.diffusion * x.diffusion,
        diffusion: d1 * x.diffusion,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{ClassA, Cumulative, Functional, Paths, Smooth, StateDependent};
    use crate::grid::TimeGrid;

    #[test]
    fn cumulative_vertical_carries_endpoint_weight() {
        for n in [64, 128] {
            let g = TimeGrid::new(1.0, n).unwrap();
            let c: Vec<f64> = g.times().collect();
            let f = |x: &[f64]| Cumulative.eval(Paths::diagonal(&g, x), n);
            let d = vertical_derivative(f, &c, n, 1, 1e-4).unwrap();
            let atom = Cumulative.atom(Paths::diagonal(&g, &c), n);
            assert!((d - atom).abs() <= 2.0 * g.dt());
        }
        let raw = |n: usize| {
            let g = TimeGrid::new(1.0, n).unwrap();
            let c: Vec<f64> = g.times().collect();
            vertical_derivative(
                |x| Cumulative.eval(Paths::diagonal(&g, x), n),
                &c,
                n,
                1,
                1e-4,
            )
            .unwrap()
        };
        assert!((dt_extrapolate(raw(64), raw(128)) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn sine_second_derivative_at_zero() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        let c = vec![0.0; 5];
        let h = StateDependent::new(Smooth::Sin);
        let d = vertical_derivative(|x| h.eval(Paths::diagonal(&g, x), 4), &c, 4, 2, 1e-4).unwrap();
        assert!(d.abs() < 1e-8);
    }

    #[test]
    fn richardson_confirms_second_order_differencing() {
        let path = vec![0.0, 0.3, 0.7];
        for order in 1..=3 {
            let eps = if order == 3 { 0.1 } else { 0.05 };
            let r = richardson_order(|x| (x[2] * 1.3).sin() + x[1] * x[2], &path, 2, order, eps)
                .unwrap();
            assert!(r >= 1.8, "order {order}: {r}");
        }
    }

    #[test]
    fn horizontal_examples() {
        let g = TimeGrid::new(1.0, 100).unwrap();
        let c: Vec<f64> = (0..=100).map(|i| if i <= 50 { 0.7 } else { 9.0 }).collect();
        let integral = |x: &[f64], j: usize| x[..=j].iter().sum::<f64>() * g.dt();
        let d = horizontal_derivative(integral, &c, g.dt(), 50, 1).unwrap();
        assert!((d - 0.7).abs() < 1e-12);
        let h = StateDependent::new(Smooth::Sin);
        let atom = |x: &[f64], j: usize| h.atom(Paths::diagonal(&g, x), j);
        assert_eq!(horizontal_derivative(atom, &c, g.dt(), 50, 3).unwrap(), 0.0);
        let time = |_: &[f64], j: usize| g.time(j);
        assert!((horizontal_derivative(time, &c, g.dt(), 10, 2).unwrap() - 1.0).abs() < 1e-12);
        assert!(horizontal_derivative(time, &c, g.dt(), 100, 1).is_err());
    }

    #[test]
    fn functional_ito_examples() {
        let g = TimeGrid::new(1.0, 50).unwrap();
        let x: Vec<f64> = (0..=50).map(|i| (i as f64 * 0.1).sin()).collect();
        let cfg = DupireConfig::default();
        let bm = ItoCoefficients {
            drift: 0.0,
            diffusion: 1.0,
        };
        let f = |y: &[f64], j: usize| y[j].sin();
        let r = functional_ito(f, &x, g.dt(), 20, bm, &cfg).unwrap();
        assert!((r.drift + 0.5 * x[20].sin()).abs() < 1e-6);
        assert!((r.diffusion - x[20].cos()).abs() < 1e-8);
        let integral = |y: &[f64], j: usize| y[..j].iter().sum::<f64>() * g.dt();
        let r = functional_ito(integral, &x, g.dt(), 20, bm, &cfg).unwrap();
        assert!((r.drift - x[20]).abs() < 1e-12);
        assert!(r.diffusion.abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_order() {
        assert!(vertical_derivative(|x| x[0], &[0.0, 1.0, 2.0], 1, 4, 1e-3).is_err());
    }
}
