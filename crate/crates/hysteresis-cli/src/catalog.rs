//! Builds library objects from configuration names.

use hysteresis::condexp::{Basis, Feature, RegressionConditioner, RegressionConfig};
use hysteresis::dynamics::{DerivativeSource, DynamicsOptions, Estimator};
use hysteresis::functionals::{
    ClassA, Climate, Cumulative, EmissionKernel, Kernel, KernelAverage, PresentDamage, Smooth, Smooth2,
    StateDependent, Tipping,
};
use hysteresis::BrownianEnsemble;

use crate::config::{Config, EstimatorConfig, FunctionalConfig};
use crate::error::CliError;

fn unknown(what: &str, name: &str) -> CliError {
    CliError::Config(format!("unknown {what} {name:?}"))
}

pub fn smooth(name: &str) -> Result<Smooth, CliError> {
    Smooth::by_name(name).ok_or_else(|| unknown("smooth function", name))
}

pub fn functional(cfg: &FunctionalConfig) -> Result<Box<dyn ClassA>, CliError> {
    Ok(match cfg.name.as_str() {
        "zero" => Box::new(StateDependent::new(Smooth::Zero)),
        "cumulative" => Box::new(Cumulative),
        "state_dependent" => Box::new(StateDependent::new(smooth(&cfg.f)?)),
        "kernel_average" => {
            let h2 = Smooth2::by_name(&cfg.h2).ok_or_else(|| unknown("h2", &cfg.h2))?;
            Box::new(KernelAverage::new(h2, Kernel::Exponential { scale: cfg.kernel_scale, rate: cfg.kernel_rate }))
        }
        "climate" => Box::new(climate(cfg)?),
        "tipping" => Box::new(Tipping::new(smooth(&cfg.f)?)?),
        other => return Err(unknown("functional", other)),
    })
}

pub fn climate(cfg: &FunctionalConfig) -> Result<Climate, CliError> {
    if cfg.name != "climate" {
        return Err(CliError::Config(format!("this command needs functional \"climate\", got {:?}", cfg.name)));
    }
    let damage = match cfg.damage.as_str() {
        "zero" => PresentDamage::Zero,
        "constant" => PresentDamage::Constant(cfg.damage_value),
        other => PresentDamage::OfState(smooth(other)?),
    };
    let emission = match cfg.emission.as_str() {
        "zero" => EmissionKernel::Zero,
        "constant" => EmissionKernel::Constant(cfg.emission_scale),
        "exponential" => EmissionKernel::Exponential { scale: cfg.emission_scale, rate: cfg.emission_rate },
        "path_value" => EmissionKernel::PathValue,
        other => return Err(unknown("emission kernel", other)),
    };
    Ok(Climate::new(damage, emission))
}

pub fn estimator(cfg: &EstimatorConfig) -> Result<Estimator, CliError> {
    match cfg.method.as_str() {
        "local_regression" => Ok(Estimator::LocalRegression),
        "covariation" => Ok(Estimator::Covariation),
        other => Err(unknown("estimator", other)),
    }
}

pub fn options(cfg: &EstimatorConfig) -> Result<DynamicsOptions, CliError> {
    let source = match cfg.derivatives.as_str() {
        "analytic" => DerivativeSource::Analytic,
        "numeric" => DerivativeSource::Numeric,
        other => return Err(unknown("derivative source", other)),
    };
    Ok(DynamicsOptions { source, ramp: cfg.ramp, ..DynamicsOptions::default() })
}

pub fn conditioner(cfg: &Config, e: &BrownianEnsemble, nodes: &[usize]) -> Result<RegressionConditioner, CliError> {
    let est = &cfg.estimator;
    let features = est
        .basis
        .iter()
        .map(|n| Feature::by_name(n).ok_or_else(|| unknown("basis feature", n)))
        .collect::<Result<Vec<_>, _>>()?;
    let config = RegressionConfig { basis: Basis::new(features, est.degree), batches: est.batches, cross_fit: est.cross_fit };
    Ok(RegressionConditioner::new(e, nodes, config)?)
}
