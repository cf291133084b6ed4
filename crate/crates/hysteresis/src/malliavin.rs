//! Malliavin derivatives: the cylindrical definition, a directional estimator
//! along Cameron–Martin ramps, Clark–Ocone integrands and tangent processes.

use crate::condexp::Conditioner;
use crate::error::{Error, Result};
use crate::grid::{add_ramp, sup_norm, BrownianEnsemble};
use crate::nodes::NodeMatrix;
use crate::stats::{mean, rms, variance};

/// Ramp width, in steps, of the directional estimator.
pub const DEFAULT_RAMP: usize = 4;

pub fn default_eps(w: &[f64]) -> f64 {
    1e-4 * (1.0 + sup_norm(w))
}

/// `D_t g(w_{t_1}, ..., w_{t_k}) = Σ_k ∂_k g · 1_{t <= t_k}`, partials by
/// central differences with step `eps`.
pub fn malliavin_cylindrical(
    g: impl Fn(&[f64]) -> f64,
    times: &[usize],
    w: &[f64],
    t: usize,
    eps: f64,
) -> f64 {
    let x: Vec<f64> = times.iter().map(|&i| w[i]).collect();
    let mut buf = x.clone();
    times
        .iter()
        .enumerate()
        .filter(|(_, &tk)| t <= tk)
        .map(|(k, _)| {
            buf[k] = x[k] + eps;
            let up = g(&buf);
            buf[k] = x[k] - eps;
            let dn = g(&buf);
            buf[k] = x[k];
            (up - dn) / (2.0 * eps)
        })
        .sum()
}

/// Central difference of `f` along the ramp that lifts the path linearly over
/// `width` steps after node `i` and by one thereafter. Estimates the average of
/// `D_r F` over `r ∈ [t_i, t_i + width Δt]`; width 1 is the derivative with
/// respect to the increment `w_{i+1} - w_i`.
pub fn malliavin_directional(
    f: impl Fn(&[f64]) -> f64,
    w: &[f64],
    i: usize,
    width: usize,
    eps: f64,
) -> Result<f64> {
    let steps = w.len() - 1;
    if width == 0 || i + width > steps {
        return Err(Error::InvalidArgument(format!(
            "ramp of {width} steps from node {i} leaves a grid of {steps} steps"
        )));
    }
    Ok(directional_unchecked(&f, w, i, width, eps))
}

pub(crate) fn directional_unchecked(
    f: &impl Fn(&[f64]) -> f64,
    w: &[f64],
    i: usize,
    width: usize,
    eps: f64,
) -> f64 {
    let mut up = w.to_vec();
    add_ramp(&mut up, i, width, eps);
    let mut dn = w.to_vec();
    add_ramp(&mut dn, i, width, -eps);
    (f(&up) - f(&dn)) / (2.0 * eps)
}

/// Fitted `E[D_t ξ | F_t]` at nodes `0..N-1`.
#[derive(Debug, Clone)]
pub struct ClarkOcone {
    integrand: NodeMatrix,
}

/// `ξ - E[ξ] - Σ g_i Δw_i` with `E[ξ]` estimated as the mean of `ξ - Σ g_i Δw_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub mean: f64,
    pub residuals: Vec<f64>,
    /// `rms(residuals) / std(ξ)`
    pub relative_rms: f64,
}

/// Regresses pathwise directional estimates of `D_{t_i} ξ` on adapted features.
/// Near the horizon the ramp is shortened to the steps that remain.
pub fn clark_ocone_integrand(
    xi: impl Fn(&[f64]) -> f64 + Sync,
    ensemble: &BrownianEnsemble,
    conditioner: &dyn Conditioner,
    width: usize,
    eps: Option<f64>,
) -> Result<ClarkOcone> {
    use rayon::prelude::*;
    let grid = *ensemble.grid();
    let n = grid.steps();
    let nodes: Vec<usize> = (0..n).collect();
    let mut columns = Vec::with_capacity(n);
    for &i in &nodes {
        let w_i = width.min(n - i).max(1);
        let d: Vec<f64> = (0..ensemble.len())
            .into_par_iter()
            .map(|j| {
                let w = ensemble.path(j);
                directional_unchecked(&xi, w, i, w_i, eps.unwrap_or_else(|| default_eps(w)))
            })
            .collect();
        columns.push(conditioner.condition(i, &d)?);
    }
    Ok(ClarkOcone {
        integrand: NodeMatrix::from_columns(grid, nodes, columns)?,
    })
}

impl ClarkOcone {
    pub fn from_integrand(integrand: NodeMatrix) -> Self {
        Self { integrand }
    }

    pub fn integrand(&self) -> &NodeMatrix {
        &self.integrand
    }

    /// `Σ_i g_i Δw_i` per path.
    pub fn stochastic_integral(&self, ensemble: &BrownianEnsemble) -> Vec<f64> {
        let mut acc = vec![0.0; ensemble.len()];
        for (i, g) in self.integrand.columns() {
            for (j, a) in acc.iter_mut().enumerate() {
                *a += g[j] * ensemble.increment(j, i);
            }
        }
        acc
    }

    pub fn reconstruct(&self, xi: &[f64], ensemble: &BrownianEnsemble) -> Reconstruction {
        let integral = self.stochastic_integral(ensemble);
        let centred: Vec<f64> = xi.iter().zip(&integral).map(|(x, s)| x - s).collect();
        let m = mean(&centred);
        let residuals: Vec<f64> = centred.iter().map(|c| c - m).collect();
        let relative_rms = rms(&residuals) / variance(xi).sqrt();
        Reconstruction {
            mean: m,
            residuals,
            relative_rms,
        }
    }
}

/// Markov coefficients `α(t, c, w)`, `β(t, c, w)` of a policy `dc = α dt + β dw`.
pub struct MarkovCoefficients<A, B> {
    pub alpha: A,
    pub beta: B,
}

/// `D_{t_i} c_{t_m}` for `m = i..=N` from the Euler recursion
/// `d(D_t c_s) = D_t α_s ds + D_t β_s dw_s`, `D_t c_t = β_t`, where
/// `D_t α_s = α_c D_t c_s + α_w` and likewise for `β`.
pub fn tangent_process<A, B>(
    coefficients: &MarkovCoefficients<A, B>,
    grid: &crate::grid::TimeGrid,
    c: &[f64],
    w: &[f64],
    i: usize,
    eps: f64,
) -> Result<Vec<f64>>
where
    A: Fn(f64, f64, f64) -> f64,
    B: Fn(f64, f64, f64) -> f64,
{
    grid.check_node(i)?;
    let partials = |f: &dyn Fn(f64, f64, f64) -> f64, t: f64, x: f64, y: f64| {
        (
            (f(t, x + eps, y) - f(t, x - eps, y)) / (2.0 * eps),
            (f(t, x, y + eps) - f(t, x, y - eps)) / (2.0 * eps),
        )
    };
    let dt = grid.dt();
    let mut out = Vec::with_capacity(grid.len() - i);
    let mut y = (coefficients.beta)(grid.time(i), c[i], w[i]);
    out.push(y);
    for m in i..grid.steps() {
        let t = grid.time(m);
        let (ac, aw) = partials(&coefficients.alpha, t, c[m], w[m]);
        let (bc, bw) = partials(&coefficients.beta, t, c[m], w[m]);
        y += (ac * y + aw) * dt + (bc * y + bw) * (w[m + 1] - w[m]);
        out.push(y);
    }
    Ok(out)
}
