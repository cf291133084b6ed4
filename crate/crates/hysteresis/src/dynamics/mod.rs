//! Drift and diffusion of conditional-expectation processes, the hysteresis
//! elasticity and its dynamics, optimal policies, the Pigouvian tax, and a
//! windowed estimator that checks every prediction against simulation.
//!
//! Predicted coefficients are per path and per node. A prediction at node `i`
//! describes the step from `t_i` to `t_{i+1}`, so nodes must lie below `N`.

/// Steps per window of the empirical estimator.
pub const DEFAULT_WINDOW: usize = 17;

mod elasticity;
mod empirical;
mod policy;
mod process;
mod terms;

pub use elasticity::{
    deterministic_elasticity, elasticity, elasticity_dynamics, pigouvian_tax,
    DeterministicElasticity, ElasticityResult, TaxResult,
};
pub use empirical::{
    check_coefficients, check_coefficients_with, covariation_coefficients, empirical_coefficients,
    euler_terminal, window_average, window_steps, CoefficientCheck, Estimator, WindowFit,
};
pub use policy::{
    foc_solve, policy_coefficients, policy_residuals, small_eps_check, FocConfig,
    PolicyCoefficients, PolicyProcess, ResidualCheck, SmallEpsReport,
};
pub use process::{
    ito_to_projection, project, total_derivative, ConditionalProcess, ConstantInTime,
    FutureIntegral, ItoProjection, ScaledTerminal,
};

use crate::condexp::Conditioner;
use crate::dupire::DupireConfig;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::malliavin::DEFAULT_RAMP;
use crate::nodes::NodeMatrix;

/// Per-path drift and diffusion on a set of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessCoefficients {
    pub drift: NodeMatrix,
    pub diffusion: NodeMatrix,
}

impl ProcessCoefficients {
    pub fn negated(&self) -> Self {
        Self {
            drift: self.drift.map(|v| -v),
            diffusion: self.diffusion.map(|v| -v),
        }
    }
}

/// Where derivative terms come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeSource {
    /// Closed forms supplied by the functional, numeric where none exists.
    #[default]
    Analytic,
    /// Finite differences throughout.
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsOptions {
    pub source: DerivativeSource,
    /// Ramp width, in steps, of numeric Malliavin derivatives.
    pub ramp: usize,
    pub dupire: DupireConfig,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        Self {
            source: DerivativeSource::Analytic,
            ramp: DEFAULT_RAMP,
            dupire: DupireConfig::default(),
        }
    }
}

impl DynamicsOptions {
    pub fn numeric() -> Self {
        Self {
            source: DerivativeSource::Numeric,
            ..Self::default()
        }
    }
}

/// `E[targets | F_i]`; the identity at the horizon, where all information is known.
pub(crate) fn condition_at(
    cond: &dyn Conditioner,
    grid: &TimeGrid,
    node: usize,
    targets: &[f64],
) -> Result<Vec<f64>> {
    if node == grid.steps() {
        Ok(targets.to_vec())
    } else {
        cond.condition(node, targets)
    }
}

/// Conditions every column of `m` at its own node.
pub(crate) fn condition_columns(cond: &dyn Conditioner, m: &NodeMatrix) -> Result<NodeMatrix> {
    let columns = m
        .columns()
        .map(|(node, col)| condition_at(cond, m.grid(), node, col))
        .collect::<Result<Vec<_>>>()?;
    NodeMatrix::from_columns(*m.grid(), m.nodes().to_vec(), columns)
}

pub(crate) fn check_below_horizon(grid: &TimeGrid, nodes: &[usize]) -> Result<()> {
    match nodes.iter().find(|&&i| i >= grid.steps()) {
        Some(&i) => Err(Error::NodeOutOfRange {
            index: i,
            steps: grid.steps() - 1,
        }),
        None => Ok(()),
    }
}

pub(crate) fn check_paths(cond: &dyn Conditioner, paths: usize) -> Result<()> {
    if cond.paths() != paths {
        return Err(Error::InvalidArgument(format!(
            "conditioner built for {} paths, ensemble has {paths}",
            cond.paths()
        )));
    }
    Ok(())
}
