//! Possibly anticipative processes `ξ_t` and the drift and diffusion of their
//! adapted projections `X_t = E[ξ_t | F_t]`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::condexp::Conditioner;
use crate::error::Result;
use crate::grid::{BrownianEnsemble, TimeGrid};
use crate::malliavin::{default_eps, directional_unchecked};
use crate::nodes::NodeMatrix;

use super::{
    check_below_horizon, check_paths, condition_at, DerivativeSource, DynamicsOptions,
    ProcessCoefficients,
};

/// `ξ_{t_i}(w)`, absolutely continuous in `t` for each path.
pub trait ConditionalProcess: Send + Sync {
    fn name(&self) -> &str;

    /// May read the whole path.
    fn xi(&self, grid: &TimeGrid, w: &[f64], i: usize) -> f64;

    /// `∂_t ξ_t` at `t_i`.
    fn time_derivative(&self, _grid: &TimeGrid, _w: &[f64], _i: usize) -> Option<f64> {
        None
    }

    /// `D_t ξ_t` at `t = t_i`.
    fn malliavin(&self, _grid: &TimeGrid, _w: &[f64], _i: usize) -> Option<f64> {
        None
    }
}

/// `ξ_t = ∫_t^T w_s ds`, discretised as `Σ_{m=i}^{N-1} w_m Δt`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FutureIntegral;

impl ConditionalProcess for FutureIntegral {
    fn name(&self) -> &str {
        "future_integral"
    }

    fn xi(&self, grid: &TimeGrid, w: &[f64], i: usize) -> f64 {
        w[i..grid.steps()].iter().sum::<f64>() * grid.dt()
    }

    fn time_derivative(&self, _grid: &TimeGrid, w: &[f64], i: usize) -> Option<f64> {
        Some(-w[i])
    }

    fn malliavin(&self, grid: &TimeGrid, _w: &[f64], i: usize) -> Option<f64> {
        Some(grid.remaining(i))
    }
}

/// `ξ_t = t w_T`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScaledTerminal;

impl ConditionalProcess for ScaledTerminal {
    fn name(&self) -> &str {
        "scaled_terminal"
    }

    fn xi(&self, grid: &TimeGrid, w: &[f64], i: usize) -> f64 {
        grid.time(i) * w[grid.steps()]
    }

    fn time_derivative(&self, grid: &TimeGrid, w: &[f64], _i: usize) -> Option<f64> {
        Some(w[grid.steps()])
    }

    fn malliavin(&self, grid: &TimeGrid, _w: &[f64], i: usize) -> Option<f64> {
        Some(grid.time(i))
    }
}

type PathFn = Arc<dyn Fn(&TimeGrid, &[f64]) -> f64 + Send + Sync>;

/// `ξ_t = F(w)` for every `t`; the projection is a martingale.
#[derive(Clone)]
pub struct ConstantInTime {
    f: PathFn,
}

impl ConstantInTime {
    pub fn new(f: impl Fn(&TimeGrid, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }
}

impl ConditionalProcess for ConstantInTime {
    fn name(&self) -> &str {
        "constant_in_time"
    }

    fn xi(&self, grid: &TimeGrid, w: &[f64], _i: usize) -> f64 {
        (self.f)(grid, w)
    }

    fn time_derivative(&self, _grid: &TimeGrid, _w: &[f64], _i: usize) -> Option<f64> {
        Some(0.0)
    }
}

type NodeFn = Arc<dyn Fn(&TimeGrid, &[f64], usize) -> f64 + Send + Sync>;

/// `ξ_t = η_0 + Σ_{r<i} α_r Δt + Σ_{r<N} β_r Δw_r`: anticipative through the
/// full stochastic integral, with projection `η_t`.
#[derive(Clone)]
pub struct ItoProjection {
    start: f64,
    alpha: NodeFn,
    beta: NodeFn,
}

/// Builds the process whose projection is `dη = α dt + β dw`, `η_0 = start`.
/// `α` and `β` must be adapted: at node `i` they may read `w[..=i]` only.
pub fn ito_to_projection(
    start: f64,
    alpha: impl Fn(&TimeGrid, &[f64], usize) -> f64 + Send + Sync + 'static,
    beta: impl Fn(&TimeGrid, &[f64], usize) -> f64 + Send + Sync + 'static,
) -> ItoProjection {
    ItoProjection {
        start,
        alpha: Arc::new(alpha),
        beta: Arc::new(beta),
    }
}

impl ItoProjection {
    /// `η_{t_i}` along `w` by the same left-point sums.
    pub fn eta(&self, grid: &TimeGrid, w: &[f64], i: usize) -> f64 {
        let dt = grid.dt();
        self.start
            + (0..i)
                .map(|r| {
                    (self.alpha)(grid, w, r) * dt + (self.beta)(grid, w, r) * (w[r + 1] - w[r])
                })
                .sum::<f64>()
    }
}

impl ConditionalProcess for ItoProjection {
    fn name(&self) -> &str {
        "ito_projection"
    }

    fn xi(&self, grid: &TimeGrid, w: &[f64], i: usize) -> f64 {
        let dt = grid.dt();
        self.start
            + (0..i).map(|r| (self.alpha)(grid, w, r) * dt).sum::<f64>()
            + (0..grid.steps())
                .map(|r| (self.beta)(grid, w, r) * (w[r + 1] - w[r]))
                .sum::<f64>()
    }

    fn time_derivative(&self, grid: &TimeGrid, w: &[f64], i: usize) -> Option<f64> {
        Some((self.alpha)(grid, w, i))
    }
}

/// `X_t = E[ξ_t | F_t]` on `nodes`.
pub fn project(
    xi: &dyn ConditionalProcess,
    ensemble: &BrownianEnsemble,
    cond: &dyn Conditioner,
    nodes: &[usize],
) -> Result<NodeMatrix> {
    check_paths(cond, ensemble.len())?;
    let grid = *ensemble.grid();
    let columns = nodes
        .iter()
        .map(|&i| {
            grid.check_node(i)?;
            let raw: Vec<f64> = (0..ensemble.len())
                .into_par_iter()
                .map(|j| xi.xi(&grid, ensemble.path(j), i))
                .collect();
            condition_at(cond, &grid, i, &raw)
        })
        .collect::<Result<Vec<_>>>()?;
    NodeMatrix::from_columns(grid, nodes.to_vec(), columns)
}

/// Drift `E[∂_t ξ_t | F_t]` and diffusion `E[D_t ξ_t | F_t]`.
///
/// Numeric `∂_t ξ` is the forward difference in `i` on a fixed path. Numeric
/// `D_t ξ` applies the ramp estimator, shortened near the horizon, to
/// `ξ_{t_{i+1}}`: with a one-step ramp this reproduces the martingale part of
/// `X_{i+1} - X_i` exactly for `ξ` linear in the increment.
pub fn total_derivative(
    xi: &dyn ConditionalProcess,
    ensemble: &BrownianEnsemble,
    cond: &dyn Conditioner,
    nodes: &[usize],
    opts: &DynamicsOptions,
) -> Result<ProcessCoefficients> {
    check_paths(cond, ensemble.len())?;
    let grid = *ensemble.grid();
    check_below_horizon(&grid, nodes)?;
    let analytic = opts.source == DerivativeSource::Analytic;
    let mut drift = Vec::with_capacity(nodes.len());
    let mut diffusion = Vec::with_capacity(nodes.len());
    for &i in nodes {
        let width = opts.ramp.min(grid.steps() - i).max(1);
        let (dt_raw, d_raw): (Vec<f64>, Vec<f64>) = (0..ensemble.len())
            .into_par_iter()
            .map(|j| {
                let w = ensemble.path(j);
                let time = analytic
                    .then(|| xi.time_derivative(&grid, w, i))
                    .flatten()
                    .unwrap_or_else(|| (xi.xi(&grid, w, i + 1) - xi.xi(&grid, w, i)) / grid.dt());
                let d = analytic
                    .then(|| xi.malliavin(&grid, w, i))
                    .flatten()
                    .unwrap_or_else(|| {
                        directional_unchecked(
                            &|x: &[f64]| xi.xi(&grid, x, i + 1),
                            w,
                            i,
                            width,
                            default_eps(w),
                        )
                    });
                (time, d)
            })
            .unzip();
        drift.push(cond.condition(i, &dt_raw)?);
        diffusion.push(cond.condition(i, &d_raw)?);
    }
    Ok(ProcessCoefficients {
        drift: NodeMatrix::from_columns(grid, nodes.to_vec(), drift)?,
        diffusion: NodeMatrix::from_columns(grid, nodes.to_vec(), diffusion)?,
    })
}
