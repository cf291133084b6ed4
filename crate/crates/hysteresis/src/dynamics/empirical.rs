//! Windowed drift and diffusion estimates of simulated processes.

use std::ops::Range;

use nalgebra::{Matrix2, Matrix5, Vector2, Vector5};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{BrownianEnsemble, TimeGrid};
use crate::nodes::NodeMatrix;
use crate::stats::{batch_mean_se, MeanSe};

use super::ProcessCoefficients;

/// Per-path estimates over the window centred on `node`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFit {
    pub node: usize,
    pub drift: Vec<f64>,
    pub diffusion: Vec<f64>,
}

/// Steps `center - K/2 ..= center + K/2`, clipped to `0..N`.
pub fn window_steps(grid: &TimeGrid, center: usize, window: usize) -> Range<usize> {
    let half = window / 2;
    center.saturating_sub(half)..(center + half).min(grid.steps() - 1) + 1
}

fn check_window(window: usize) -> Result<()> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "window must be odd and at least 3, got {window}"
        )));
    }
    Ok(())
}

/// Local least squares over the window of each centre, path by path, with
/// regressors `[1, r - r̄, w_r - w̄, Δw_r, (r - r̄) Δw_r]`: drift and diffusion
/// may drift linearly in time across the window and the drift may move with
/// the level of `w`. The `Δw` coefficient estimates the diffusion at the window
/// centre and the intercept over `Δt` the drift at the window means.
/// `x` must hold every node of each window plus the node after it.
///
/// Only the drift of processes affine in `w` across the window is recovered:
/// for `x = g(w)` the in-sample mean of `(w_r - w̄) Δw_r` is close to `-Δt/2`
/// and cancels the Itô term `g'' Δt / 2`. Use [`covariation_coefficients`]
/// for curved processes.
pub fn empirical_coefficients(
    x: &NodeMatrix,
    ensemble: &BrownianEnsemble,
    centers: &[usize],
    window: usize,
) -> Result<Vec<WindowFit>> {
    check_window(window)?;
    let grid = *ensemble.grid();
    let dt = grid.dt();
    centers
        .iter()
        .map(|&center| {
            grid.check_node(center)?;
            let steps = window_steps(&grid, center, window);
            let cols = (steps.start..=steps.end)
                .map(|i| x.column(i))
                .collect::<Result<Vec<_>>>()?;
            let k = steps.len() as f64;
            let mid = (steps.start + steps.end - 1) as f64 / 2.0;
            let (drift, diffusion): (Vec<f64>, Vec<f64>) = (0..ensemble.len())
                .into_par_iter()
                .map(|j| {
                    let w = ensemble.path(j);
                    let level = steps.clone().map(|i| w[i]).sum::<f64>() / k;
                    let mut xtx = Matrix5::<f64>::zeros();
                    let mut xty = Vector5::<f64>::zeros();
                    for (r, i) in steps.clone().enumerate() {
                        let tau = i as f64 - mid;
                        let dw = w[i + 1] - w[i];
                        let row = Vector5::new(1.0, tau, w[i] - level, dw, tau * dw);
                        xtx += row * row.transpose();
                        xty += row * (cols[r + 1][j] - cols[r][j]);
                    }
                    let beta = match xtx.cholesky() {
                        Some(ch) if steps.len() > 5 => ch.solve(&xty),
                        _ => {
                            // too few steps for the full model: plain [1, Δw]
                            let m =
                                Matrix2::new(xtx[(0, 0)], xtx[(0, 3)], xtx[(3, 0)], xtx[(3, 3)]);
                            let b = m
                                .try_inverse()
                                .map_or(Vector2::zeros(), |inv| inv * Vector2::new(xty[0], xty[3]));
                            Vector5::new(b[0], 0.0, 0.0, b[1], 0.0)
                        }
                    };
                    (beta[0] / dt, beta[3])
                })
                .unzip();
            Ok(WindowFit {
                node: center,
                drift,
                diffusion,
            })
        })
        .collect()
}

/// Realized covariation over the window of each centre, path by path, with a
/// control variate: `β₀` is the ratio `Σ Δx Δw / Σ Δw²` over the `K` steps
/// before the window, known at its start, and
///
/// diffusion `= β₀ + Σ_r (Δx_r - β₀ Δw_r) Δw_r / (K Δt)`,
/// drift `= Σ_r (Δx_r - β₀ Δw_r) / (K Δt)`.
///
/// Both are unbiased for the window means of `E[Δx_r Δw_r | F_r] / Δt` and
/// `E[Δx_r | F_r] / Δt`, so they match one-step predictions exactly in
/// expectation even where `x` is curved or kinked in `w`, at the price of more
/// variance than [`empirical_coefficients`]. `x` must hold the nodes from `K`
/// steps before each window through the node after it.
pub fn covariation_coefficients(
    x: &NodeMatrix,
    ensemble: &BrownianEnsemble,
    centers: &[usize],
    window: usize,
) -> Result<Vec<WindowFit>> {
    check_window(window)?;
    let grid = *ensemble.grid();
    let dt = grid.dt();
    centers
        .iter()
        .map(|&center| {
            grid.check_node(center)?;
            let steps = window_steps(&grid, center, window);
            let before = steps.start.saturating_sub(window)..steps.start;
            let cols = (before.start..=steps.end)
                .map(|i| x.column(i))
                .collect::<Result<Vec<_>>>()?;
            let at = |i: usize, j: usize| cols[i - before.start][j];
            let k = steps.len() as f64;
            let (drift, diffusion): (Vec<f64>, Vec<f64>) = (0..ensemble.len())
                .into_par_iter()
                .map(|j| {
                    let w = ensemble.path(j);
                    let (xw, ww) = before.clone().fold((0.0, 0.0), |(xw, ww), i| {
                        let dw = w[i + 1] - w[i];
                        (xw + (at(i + 1, j) - at(i, j)) * dw, ww + dw * dw)
                    });
                    let beta0 = if ww > 0.0 { xw / ww } else { 0.0 };
                    let (level, slope) = steps.clone().fold((0.0, 0.0), |(l, s), i| {
                        let dw = w[i + 1] - w[i];
                        let resid = at(i + 1, j) - at(i, j) - beta0 * dw;
                        (l + resid, s + resid * dw)
                    });
                    (level / (k * dt), beta0 + slope / (k * dt))
                })
                .unzip();
            Ok(WindowFit {
                node: center,
                drift,
                diffusion,
            })
        })
        .collect()
}

/// Which windowed estimator turns a simulated process into coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// [`empirical_coefficients`]
    LocalRegression,
    /// [`covariation_coefficients`]
    #[default]
    Covariation,
}

impl Estimator {
    pub fn coefficients(
        self,
        x: &NodeMatrix,
        ensemble: &BrownianEnsemble,
        centers: &[usize],
        window: usize,
    ) -> Result<Vec<WindowFit>> {
        match self {
            Estimator::LocalRegression => empirical_coefficients(x, ensemble, centers, window),
            Estimator::Covariation => covariation_coefficients(x, ensemble, centers, window),
        }
    }
}

/// Per-path mean of `m` over the window steps of `center`.
pub fn window_average(m: &NodeMatrix, center: usize, window: usize) -> Result<Vec<f64>> {
    check_window(window)?;
    let steps = window_steps(m.grid(), center, window);
    let k = steps.len() as f64;
    let cols = steps.map(|i| m.column(i)).collect::<Result<Vec<_>>>()?;
    Ok((0..m.rows())
        .map(|j| cols.iter().map(|c| c[j]).sum::<f64>() / k)
        .collect())
}

/// Empirical against predicted coefficients at one centre. Residuals are
/// per-path differences between the estimate and the window-averaged
/// prediction; standard errors come from batch means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientCheck {
    pub node: usize,
    pub empirical_drift: MeanSe,
    pub empirical_diffusion: MeanSe,
    pub predicted_drift: f64,
    pub predicted_diffusion: f64,
    pub drift_residual: MeanSe,
    pub diffusion_residual: MeanSe,
}

impl CoefficientCheck {
    /// Both residual means lie within `k` standard errors (plus `floor`) of zero.
    pub fn passes(&self, k: f64, floor: f64) -> bool {
        self.drift_residual.within(0.0, k, floor) && self.diffusion_residual.within(0.0, k, floor)
    }
}

pub fn check_coefficients(
    x: &NodeMatrix,
    predicted: &ProcessCoefficients,
    ensemble: &BrownianEnsemble,
    centers: &[usize],
    window: usize,
    batches: &[Range<usize>],
) -> Result<Vec<CoefficientCheck>> {
    check_coefficients_with(
        Estimator::LocalRegression,
        x,
        predicted,
        ensemble,
        centers,
        window,
        batches,
    )
}

pub fn check_coefficients_with(
    estimator: Estimator,
    x: &NodeMatrix,
    predicted: &ProcessCoefficients,
    ensemble: &BrownianEnsemble,
    centers: &[usize],
    window: usize,
    batches: &[Range<usize>],
) -> Result<Vec<CoefficientCheck>> {
    let fits = estimator.coefficients(x, ensemble, centers, window)?;
    fits.into_iter()
        .map(|fit| {
            let pd = window_average(&predicted.drift, fit.node, window)?;
            let ps = window_average(&predicted.diffusion, fit.node, window)?;
            let rd: Vec<f64> = fit.drift.iter().zip(&pd).map(|(a, b)| a - b).collect();
            let rs: Vec<f64> = fit.diffusion.iter().zip(&ps).map(|(a, b)| a - b).collect();
            Ok(CoefficientCheck {
                node: fit.node,
                empirical_drift: batch_mean_se(&fit.drift, batches),
                empirical_diffusion: batch_mean_se(&fit.diffusion, batches),
                predicted_drift: crate::stats::mean(&pd),
                predicted_diffusion: crate::stats::mean(&ps),
                drift_residual: batch_mean_se(&rd, batches),
                diffusion_residual: batch_mean_se(&rs, batches),
            })
        })
        .collect()
}

/// `X_T = X_0 + Σ_i (drift_i Δt + diffusion_i Δw_i)` per path, with
/// coefficients given at every node below the horizon.
pub fn euler_terminal(
    start: &[f64],
    coefficients: &ProcessCoefficients,
    ensemble: &BrownianEnsemble,
) -> Result<Vec<f64>> {
    let grid = *ensemble.grid();
    let dt = grid.dt();
    let drift = (0..grid.steps())
        .map(|i| coefficients.drift.column(i))
        .collect::<Result<Vec<_>>>()?;
    let diffusion = (0..grid.steps())
        .map(|i| coefficients.diffusion.column(i))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..ensemble.len())
        .into_par_iter()
        .map(|j| {
            let w = ensemble.path(j);
            start[j]
                + (0..grid.steps())
                    .map(|i| drift[i][j] * dt + diffusion[i][j] * (w[i + 1] - w[i]))
                    .sum::<f64>()
        })
        .collect())
}
