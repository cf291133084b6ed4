//! Experiment configuration: one flat TOML table per module, unknown keys rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub grid: GridConfig,
    pub ensemble: EnsembleConfig,
    pub functional: FunctionalConfig,
    pub estimator: EstimatorConfig,
    pub run: RunConfig,
    pub convergence: ConvergenceConfig,
    pub tree: TreeConfig,
    pub tipping: TippingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub horizon: f64,
    pub steps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { horizon: 1.0, steps: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub paths: usize,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { paths: 4000, seed: 1 }
    }
}

/// A catalog entry and its parameters. Parameters irrelevant to the chosen
/// entry are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FunctionalConfig {
    /// `zero`, `cumulative`, `state_dependent`, `kernel_average`, `climate` or `tipping`
    pub name: String,
    /// Smooth function of `state_dependent`, or the weight of `tipping`.
    pub f: String,
    /// `product` or `second`, for `kernel_average`.
    pub h2: String,
    pub kernel_scale: f64,
    pub kernel_rate: f64,
    /// `zero`, `constant` or a smooth function name applied to `w_t`.
    pub damage: String,
    pub damage_value: f64,
    /// `zero`, `constant`, `exponential` or `path_value`.
    pub emission: String,
    pub emission_scale: f64,
    pub emission_rate: f64,
}

impl Default for FunctionalConfig {
    fn default() -> Self {
        Self {
            name: "cumulative".into(),
            f: "sin".into(),
            h2: "product".into(),
            kernel_scale: 1.0,
            kernel_rate: 1.0,
            damage: "zero".into(),
            damage_value: 1.0,
            emission: "constant".into(),
            emission_scale: 1.0,
            emission_rate: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Feature names: `w`, `time`, `int_w`, `max_w`, `argmax`, `exp_avg_<rate>`.
    pub basis: Vec<String>,
    pub degree: usize,
    pub batches: usize,
    pub cross_fit: bool,
    /// Odd number of steps per coefficient window.
    pub window: usize,
    /// `covariation` or `local_regression`; the latter only suits processes
    /// affine in `w`.
    pub method: String,
    /// `numeric` or `analytic`. Numeric derivatives with `ramp = 1` predict
    /// the one-step moments the windowed estimators measure; analytic ones
    /// give the continuum coefficients, off by `O(Δt)` on the grid.
    pub derivatives: String,
    pub ramp: usize,
    /// Inner paths of nested Monte Carlo.
    pub inner: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            basis: vec!["w".into()],
            degree: 1,
            batches: 20,
            cross_fit: true,
            window: hysteresis::dynamics::DEFAULT_WINDOW,
            method: "covariation".into(),
            derivatives: "numeric".into(),
            ramp: 1,
            inner: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub eps: f64,
    /// Times at which coefficients are estimated.
    pub centers: Vec<f64>,
    /// `|z|` bound for a single comparison; the largest of `n` is held to
    /// the bound with the same family-wise rate.
    pub z_bound: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { eps: 0.1, centers: vec![0.25, 0.5, 0.75], z_bound: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// `ito` (ladder of step counts), `small_eps` (ladder of eps) or
    /// `standard_error` (ladder of path counts).
    pub experiment: String,
    pub ladder: Vec<f64>,
    pub min_order: Option<f64>,
    pub max_order: Option<f64>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self { experiment: "ito".into(), ladder: vec![256.0, 512.0, 1024.0], min_order: None, max_order: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    pub depth: usize,
    pub tolerance: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self { depth: 6, tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TippingConfig {
    pub prefixes: usize,
    pub times: Vec<f64>,
    /// Weight `f` of the age of the running maximum.
    pub weight: String,
}

impl Default for TippingConfig {
    fn default() -> Self {
        Self { prefixes: 20, times: vec![0.25, 0.5, 0.75], weight: "positive_part".into() }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn resolved(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse("[grid]\nsteps = 8\nbogus = 1\n").is_err());
        assert!(Config::parse("[nonsense]\n").is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = Config::parse("[grid]\nsteps = 64\n[functional]\nname = \"climate\"\n").unwrap();
        assert_eq!(c.grid.steps, 64);
        assert_eq!(c.ensemble, EnsembleConfig::default());
        assert_eq!(Config::parse(&c.resolved()).unwrap(), c);
    }
}
