//! Optimal policies from the first-order condition and the implicit
//! equations their coefficients satisfy.

use std::ops::Range;

use rayon::prelude::*;

use crate::condexp::Conditioner;
use crate::error::{Error, Result};
use crate::functionals::{ClassA, Dependence, FocProblem, Paths};
use crate::grid::{BrownianEnsemble, PathMatrix};
use crate::nodes::NodeMatrix;
use crate::stats::{batch_mean_se, log_log_slope, MeanSe};

use super::elasticity::{elasticity, terms_column};
use super::empirical::{window_average, Estimator};
use super::terms::{node_terms, Along};
use super::{
    check_below_horizon, check_paths, condition_columns, DynamicsOptions, ProcessCoefficients,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocConfig {
    pub eps: f64,
    /// Weight `λ` of the new iterate.
    pub damping: f64,
    /// Bound on the largest per-node ensemble RMS of an update.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FocConfig {
    fn default() -> Self {
        Self {
            eps: 0.1,
            damping: 0.5,
            tol: 1e-12,
            max_iter: 500,
        }
    }
}

impl FocConfig {
    pub fn with_eps(eps: f64) -> Self {
        Self {
            eps,
            ..Self::default()
        }
    }
}

/// Solved policy on every path and node.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyProcess {
    pub eps: f64,
    pub c: PathMatrix,
    pub iterations: usize,
    /// Update size after each iteration.
    pub trace: Vec<f64>,
}

/// `w - ε (present + E[future | F])` evaluated at policy `c`.
fn foc_target<P: FocProblem + ?Sized>(
    problem: &P,
    eps: f64,
    c: &PathMatrix,
    ensemble: &BrownianEnsemble,
    cond: &dyn Conditioner,
) -> Result<PathMatrix> {
    let grid = *ensemble.grid();
    let n = grid.steps();
    let has_future = problem.has_future();
    let mut present = PathMatrix::zeros(grid, ensemble.len());
    let mut future = PathMatrix::zeros(grid, ensemble.len());
    present
        .par_rows_mut()
        .zip(future.par_rows_mut())
        .enumerate()
        .for_each(|(j, (pr, fr))| {
            let p = Paths::new(&grid, c.row(j), ensemble.path(j));
            pr.copy_from_slice(&problem.present_marginals(p));
            if has_future {
                fr.copy_from_slice(&problem.future_marginals(p));
            }
        });
    if has_future {
        for i in 0..n {
            let conditioned = cond.condition(i, &future.column(i))?;
            for (j, v) in conditioned.into_iter().enumerate() {
                future.row_mut(j)[i] = v;
            }
        }
    }
    let mut target = PathMatrix::zeros(grid, ensemble.len());
    target.par_rows_mut().enumerate().for_each(|(j, row)| {
        let (w, pr, fr) = (ensemble.path(j), present.row(j), future.row(j));
        for i in 0..=n {
            row[i] = w[i] - eps * (pr[i] + fr[i]);
        }
    });
    Ok(target)
}

/// Largest per-node ensemble RMS of `a - b`.
fn update_size(a: &PathMatrix, b: &PathMatrix) -> f64 {
    let len = a.grid().len();
    let mut sq = vec![0.0; len];
    for (ra, rb) in a.iter_rows().zip(b.iter_rows()) {
        for i in 0..len {
            sq[i] += (ra[i] - rb[i]).powi(2);
        }
    }
    sq.iter()
        .map(|s| (s / a.rows() as f64).sqrt())
        .fold(0.0, f64::max)
}

/// Damped fixed-point iteration of the first-order condition, starting at
/// `c = w`. Problems whose marginals ignore `c` are solved by one evaluation.
pub fn foc_solve<P: FocProblem + ?Sized>(
    problem: &P,
    ensemble: &BrownianEnsemble,
    cond: &dyn Conditioner,
    cfg: &FocConfig,
) -> Result<PolicyProcess> {
    check_paths(cond, ensemble.len())?;
    if !(cfg.damping > 0.0 && cfg.damping <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "damping must lie in (0, 1], got {}",
            cfg.damping
        )));
    }
    let mut c = ensemble.paths().clone();
    if cfg.eps == 0.0 {
        return Ok(PolicyProcess {
            eps: 0.0,
            c,
            iterations: 1,
            trace: vec![0.0],
        });
    }
    if problem.policy_free() {
        let next = foc_target(problem, cfg.eps, &c, ensemble, cond)?;
        let step = update_size(&next, &c);
        return Ok(PolicyProcess {
            eps: cfg.eps,
            c: next,
            iterations: 1,
            trace: vec![step],
        });
    }
    let mut trace = Vec::new();
    let mut growth = 0;
    for it in 1..=cfg.max_iter {
        let target = foc_target(problem, cfg.eps, &c, ensemble, cond)?;
        let mut next = c.clone();
        next.par_rows_mut().enumerate().for_each(|(j, row)| {
            for (v, t) in row.iter_mut().zip(target.row(j)) {
                *v += cfg.damping * (t - *v);
            }
        });
        let step = update_size(&next, &c);
        growth = match trace.last() {
            Some(&last) if step > last => growth + 1,
            _ => 0,
        };
        trace.push(step);
        c = next;
        if step < cfg.tol {
            return Ok(PolicyProcess {
                eps: cfg.eps,
                c,
                iterations: it,
                trace,
            });
        }
        if !step.is_finite() || growth >= 5 {
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations: trace.len(),
        last: *trace.last().unwrap_or(&f64::NAN),
        trace,
    })
}

/// Distance between `c^ε` and the first-order expansion `w + ε C`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallEpsReport {
    pub eps: Vec<f64>,
    /// Largest per-node ensemble RMS of `c^ε - w - ε C`.
    pub errors: Vec<f64>,
    /// Log-log slope of the errors in `ε`; NaN when some error vanishes.
    pub order: f64,
}

pub fn small_eps_check<H: ClassA + ?Sized>(
    h: &H,
    ladder: &[f64],
    ensemble: &BrownianEnsemble,
    cond: &dyn Conditioner,
    base: &FocConfig,
) -> Result<SmallEpsReport> {
    let grid = *ensemble.grid();
    let nodes: Vec<usize> = (0..grid.len()).collect();
    let el = elasticity(h, ensemble, cond, &nodes)?;
    let mut linear = ensemble.paths().clone();
    let errors = ladder
        .iter()
        .map(|&eps| {
            let policy = foc_solve(h, ensemble, cond, &FocConfig { eps, ..*base })?;
            linear.par_rows_mut().enumerate().for_each(|(j, row)| {
                let w = ensemble.path(j);
                for (i, v) in row.iter_mut().enumerate() {
                    *v = w[i] + eps * el.c.column(i).map_or(f64::NAN, |col| col[j]);
                }
            });
            Ok(update_size(&policy.c, &linear))
        })
        .collect::<Result<Vec<_>>>()?;
    let order = if errors.iter().all(|e| *e > 0.0) && ladder.len() >= 2 {
        log_log_slope(ladder, &errors)
    } else {
        f64::NAN
    };
    Ok(SmallEpsReport {
        eps: ladder.to_vec(),
        errors,
        order,
    })
}

/// Predicted policy coefficients together with the pieces of the two
/// implicit equations:
/// `den β = num` and `den α = -(curvature β² + rest)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyCoefficients {
    pub coefficients: ProcessCoefficients,
    /// `1 + ε ∂_c I`
    pub denominator: NodeMatrix,
    /// `1 - ε ∂_w I - ε E[Σ D_t δ_t h_s Δt | F_t]`
    pub numerator: NodeMatrix,
    /// `½ ε ∂²_c I`
    pub curvature: NodeMatrix,
    /// `ε (Δ_t I + ½ ∂²_w I + E[Σ ∂_t δ_t h_s Δt | F_t] - δ_t h_t)`
    pub rest: NodeMatrix,
}

/// Threshold below which `|1 + ε ∂_c I|` is reported as singular.
pub const MIN_DENOMINATOR: f64 = 1e-6;

/// Coefficients of `dc = α dt + β dw` along a solved policy. Policy-dependent
/// functionals with a future term are rejected: their Malliavin sums need the
/// tangent process of `c`.
pub fn policy_coefficients<H: ClassA + ?Sized>(
    h: &H,
    eps: f64,
    c: &PathMatrix,
    ensemble: &BrownianEnsemble,
    cond: &dyn Conditioner,
    nodes: &[usize],
    opts: &DynamicsOptions,
) -> Result<PolicyCoefficients> {
    check_paths(cond, ensemble.len())?;
    let grid = *ensemble.grid();
    check_below_horizon(&grid, nodes)?;
    let terms = (0..ensemble.len())
        .into_par_iter()
        .map(|j| {
            node_terms(
                h,
                Paths::new(&grid, c.row(j), ensemble.path(j)),
                nodes,
                Along::Separate,
                opts,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let time = condition_columns(cond, &terms_column(grid, nodes, &terms, |t| t.time_sum)?)?;
    let mall = condition_columns(
        cond,
        &terms_column(grid, nodes, &terms, |t| t.malliavin_sum)?,
    )?;
    let policy = h.dependence() == Dependence::Policy;
    let split = |d: f64| if policy { (d, 0.0) } else { (0.0, d) };
    let column = |f: &dyn Fn(usize, usize) -> f64| -> Result<NodeMatrix> {
        let cols = (0..nodes.len())
            .map(|k| (0..ensemble.len()).map(|j| f(k, j)).collect())
            .collect();
        NodeMatrix::from_columns(grid, nodes.to_vec(), cols)
    };
    let denominator = column(&|k, j| 1.0 + eps * split(terms[j][k].d1).0)?;
    let numerator = column(&|k, j| {
        1.0 - eps * split(terms[j][k].d1).1 - eps * mall.column(nodes[k]).map_or(f64::NAN, |m| m[j])
    })?;
    let curvature = column(&|k, j| 0.5 * eps * split(terms[j][k].d2).0)?;
    let rest = column(&|k, j| {
        let t = &terms[j][k];
        let e = time.column(nodes[k]).map_or(f64::NAN, |m| m[j]);
        eps * (t.horizontal + 0.5 * split(t.d2).1 + e - t.diagonal)
    })?;
    for (i, col) in denominator.columns() {
        if let Some(&value) = col.iter().find(|v| v.abs() < MIN_DENOMINATOR) {
            return Err(Error::SingularDenominator { node: i, value });
        }
    }
    let beta = column(&|k, j| {
        numerator.column(nodes[k]).map_or(f64::NAN, |m| m[j])
            / denominator.column(nodes[k]).map_or(f64::NAN, |m| m[j])
    })?;
    let alpha = column(&|k, j| {
        let i = nodes[k];
        let get = |m: &NodeMatrix| m.column(i).map_or(f64::NAN, |col| col[j]);
        let b = get(&beta);
        -(get(&curvature) * b * b + get(&rest)) / get(&denominator)
    })?;
    Ok(PolicyCoefficients {
        coefficients: ProcessCoefficients {
            drift: alpha,
            diffusion: beta,
        },
        denominator,
        numerator,
        curvature,
        rest,
    })
}

/// Residuals of the two implicit equations with the empirical `α̂, β̂` of
/// the simulated policy: `den β̂ - num` and `den α̂ + curvature β̂² + rest`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualCheck {
    pub node: usize,
    pub beta: MeanSe,
    pub alpha: MeanSe,
    pub empirical_beta: MeanSe,
    pub empirical_alpha: MeanSe,
}

impl ResidualCheck {
    pub fn passes(&self, k: f64, floor: f64) -> bool {
        self.beta.within(0.0, k, floor) && self.alpha.within(0.0, k, floor)
    }
}

pub fn policy_residuals(
    pc: &PolicyCoefficients,
    policy: &NodeMatrix,
    ensemble: &BrownianEnsemble,
    centers: &[usize],
    window: usize,
    batches: &[Range<usize>],
    estimator: Estimator,
) -> Result<Vec<ResidualCheck>> {
    estimator
        .coefficients(policy, ensemble, centers, window)?
        .into_iter()
        .map(|fit| {
            let avg = |m: &NodeMatrix| window_average(m, fit.node, window);
            let (den, num, curv, rest) = (
                avg(&pc.denominator)?,
                avg(&pc.numerator)?,
                avg(&pc.curvature)?,
                avg(&pc.rest)?,
            );
            let rb: Vec<f64> = (0..fit.diffusion.len())
                .map(|j| den[j] * fit.diffusion[j] - num[j])
                .collect();
            let ra: Vec<f64> = (0..fit.drift.len())
                .map(|j| den[j] * fit.drift[j] + curv[j] * fit.diffusion[j].powi(2) + rest[j])
                .collect();
            Ok(ResidualCheck {
                node: fit.node,
                beta: batch_mean_se(&rb, batches),
                alpha: batch_mean_se(&ra, batches),
                empirical_beta: batch_mean_se(&fit.diffusion, batches),
                empirical_alpha: batch_mean_se(&fit.drift, batches),
            })
        })
        .collect()
}
