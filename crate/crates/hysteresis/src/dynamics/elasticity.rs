//! The elasticity `C_t = -I_t - F_t`, its predicted dynamics, the Pigouvian
//! tax and the deterministic limit.

use rayon::prelude::*;

use crate::condexp::Conditioner;
use crate::error::{Error, Result};
use crate::functionals::{ClassA, Climate, Paths};
use crate::grid::{BrownianEnsemble, TimeGrid};
use crate::nodes::NodeMatrix;

use super::terms::{node_terms, Along, NodeTerms};
use super::{
    check_below_horizon, check_paths, condition_at, condition_columns, DynamicsOptions,
    ProcessCoefficients,
};

/// Present part `I`, conditioned future part `F` and `C = -I - F` on a node set.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticityResult {
    pub present: NodeMatrix,
    pub future: NodeMatrix,
    pub c: NodeMatrix,
}

pub fn elasticity<H: ClassA + ?Sized>(
    h: &H,
    ensemble: &BrownianEnsemble,
    cond: &dyn Conditioner,
    nodes: &[usize],
) -> Result<ElasticityResult> {
    check_paths(cond, ensemble.len())?;
    let grid = *ensemble.grid();
    let has_future = h.has_future();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..ensemble.len())
        .into_par_iter()
        .map(|j| {
            let p = Paths::diagonal(&grid, ensemble.path(j));
            let atoms = h.atoms(p);
            let future = if has_future {
                h.future_sums(p)
            } else {
                Vec::new()
            };
            let pick = |v: &[f64]| {
                nodes
                    .iter()
                    .map(|&i| v.get(i).copied().unwrap_or(0.0))
                    .collect::<Vec<_>>()
            };
            (pick(&atoms), pick(&future))
        })
        .collect();
    let mut present = Vec::with_capacity(nodes.len());
    let mut future = Vec::with_capacity(nodes.len());
    for (k, &i) in nodes.iter().enumerate() {
        grid.check_node(i)?;
        present.push(rows.iter().map(|r| r.0[k]).collect::<Vec<_>>());
        let raw: Vec<f64> = rows.iter().map(|r| r.1[k]).collect();
        future.push(if has_future {
            condition_at(cond, &grid, i, &raw)?
        } else {
            raw
        });
    }
    let present = NodeMatrix::from_columns(grid, nodes.to_vec(), present)?;
    let future = NodeMatrix::from_columns(grid, nodes.to_vec(), future)?;
    let c = NodeMatrix::from_columns(
        grid,
        nodes.to_vec(),
        present
            .columns()
            .zip(future.columns())
            .map(|((_, a), (_, b))| a.iter().zip(b).map(|(x, y)| -x - y).collect())
            .collect(),
    )?;
    Ok(ElasticityResult { present, future, c })
}

/// Unconditioned terms along `c = w` for every path.
pub(crate) fn diagonal_terms<H: ClassA + ?Sized>(
    h: &H,
    ensemble: &BrownianEnsemble,
    nodes: &[usize],
    opts: &DynamicsOptions,
) -> Result<Vec<Vec<NodeTerms>>> {
    let grid = *ensemble.grid();
    (0..ensemble.len())
        .into_par_iter()
        .map(|j| {
            node_terms(
                h,
                Paths::diagonal(&grid, ensemble.path(j)),
                nodes,
                Along::Diagonal,
                opts,
            )
        })
        .collect()
}

pub(crate) fn terms_column(
    grid: TimeGrid,
    nodes: &[usize],
    terms: &[Vec<NodeTerms>],
    f: impl Fn(&NodeTerms) -> f64,
) -> Result<NodeMatrix> {
    let columns = (0..nodes.len())
        .map(|k| terms.iter().map(|t| f(&t[k])).collect())
        .collect();
    NodeMatrix::from_columns(grid, nodes.to_vec(), columns)
}

/// Predicted coefficients of `C`:
/// drift `-(Δ_t I + ½ ∂²I + E[Σ ∂_t δ_t h_s Δt | F_t] - δ_t h_t)`,
/// diffusion `-(∂I + E[Σ D_t δ_t h_s Δt | F_t])`.
pub fn elasticity_dynamics<H: ClassA + ?Sized>(
    h: &H,
    ensemble: &BrownianEnsemble,
    cond: &dyn Conditioner,
    nodes: &[usize],
    opts: &DynamicsOptions,
) -> Result<ProcessCoefficients> {
    check_paths(cond, ensemble.len())?;
    let grid = *ensemble.grid();
    check_below_horizon(&grid, nodes)?;
    let terms = diagonal_terms(h, ensemble, nodes, opts)?;
    let time = condition_columns(cond, &terms_column(grid, nodes, &terms, |t| t.time_sum)?)?;
    let mall = condition_columns(
        cond,
        &terms_column(grid, nodes, &terms, |t| t.malliavin_sum)?,
    )?;
    let mut drift = Vec::with_capacity(nodes.len());
    let mut diffusion = Vec::with_capacity(nodes.len());
    for (k, &i) in nodes.iter().enumerate() {
        let (et, ed) = (time.column(i)?, mall.column(i)?);
        drift.push(
            terms
                .iter()
                .zip(et)
                .map(|(t, e)| -(t[k].horizontal + 0.5 * t[k].d2 + e - t[k].diagonal))
                .collect(),
        );
        diffusion.push(terms.iter().zip(ed).map(|(t, e)| -(t[k].d1 + e)).collect());
    }
    Ok(ProcessCoefficients {
        drift: NodeMatrix::from_columns(grid, nodes.to_vec(), drift)?,
        diffusion: NodeMatrix::from_columns(grid, nodes.to_vec(), diffusion)?,
    })
}

/// Marginal externality damage and the emissions it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct TaxResult {
    pub eps: f64,
    /// `Λ = g + E[∫ k ds | F]`
    pub lambda: NodeMatrix,
    /// `c = w - ε Λ`
    pub policy: NodeMatrix,
    /// Predicted `dΛ` on the nodes below the horizon.
    pub lambda_coefficients: ProcessCoefficients,
    pub policy_coefficients: ProcessCoefficients,
}

pub fn pigouvian_tax(
    climate: &Climate,
    eps: f64,
    ensemble: &BrownianEnsemble,
    cond: &dyn Conditioner,
    nodes: &[usize],
    opts: &DynamicsOptions,
) -> Result<TaxResult> {
    let grid = *ensemble.grid();
    let el = elasticity(climate, ensemble, cond, nodes)?;
    let lambda = el.c.map(|v| -v);
    let columns = lambda
        .columns()
        .map(|(i, col)| {
            col.iter()
                .enumerate()
                .map(|(j, l)| ensemble.path(j)[i] - eps * l)
                .collect()
        })
        .collect();
    let policy = NodeMatrix::from_columns(grid, nodes.to_vec(), columns)?;
    let inner: Vec<usize> = nodes
        .iter()
        .copied()
        .filter(|&i| i < grid.steps())
        .collect();
    let lambda_coefficients = elasticity_dynamics(climate, ensemble, cond, &inner, opts)?.negated();
    let policy_coefficients = ProcessCoefficients {
        drift: lambda_coefficients.drift.map(|v| -eps * v),
        diffusion: lambda_coefficients.diffusion.map(|v| 1.0 - eps * v),
    };
    Ok(TaxResult {
        eps,
        lambda,
        policy,
        lambda_coefficients,
        policy_coefficients,
    })
}

/// Elasticity along a deterministic optimum `dθ = b(θ) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicElasticity {
    pub theta: Vec<f64>,
    /// `C` at every node.
    pub c: Vec<f64>,
    /// `dC/dt = -(Δ_t I + ∂I b - δ_t h_t + Σ ∂_t δ_t h_s Δt)` at nodes `0..N`.
    pub dc_dt: Vec<f64>,
}

pub fn deterministic_elasticity<H: ClassA + ?Sized>(
    h: &H,
    theta0: f64,
    b: impl Fn(f64) -> f64,
    grid: &TimeGrid,
    opts: &DynamicsOptions,
) -> Result<DeterministicElasticity> {
    let dt = grid.dt();
    let mut theta = Vec::with_capacity(grid.len());
    theta.push(theta0);
    for i in 0..grid.steps() {
        theta.push(theta[i] + b(theta[i]) * dt);
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("deterministic path diverged".into()));
    }
    let p = Paths::diagonal(grid, &theta);
    let atoms = h.atoms(p);
    let future = if h.has_future() {
        h.future_sums(p)
    } else {
        vec![0.0; grid.len()]
    };
    let c = atoms.iter().zip(&future).map(|(a, f)| -a - f).collect();
    let nodes: Vec<usize> = (0..grid.steps()).collect();
    let terms = node_terms(h, p, &nodes, Along::Diagonal, opts)?;
    let dc_dt = terms
        .iter()
        .zip(&theta)
        .map(|(t, &th)| -(t.horizontal + t.d1 * b(th) - t.diagonal + t.time_sum))
        .collect();
    Ok(DeterministicElasticity { theta, c, dc_dt })
}
