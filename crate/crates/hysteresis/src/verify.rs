//! The acceptance suite: ten fixed-seed experiments, each reduced to a list of
//! checks with a statistic and a bound.

use std::fmt;
use std::time::{Duration, Instant};

use crate::condexp::{
    batch_ranges, tipping_nested_mc, Basis, Conditioner, Deterministic, Feature, NestedConfig,
    RegressionConditioner, RegressionConfig,
};
use crate::dynamics::{
    check_coefficients, covariation_coefficients, elasticity, elasticity_dynamics,
    empirical_coefficients, euler_terminal, foc_solve, pigouvian_tax, policy_coefficients,
    policy_residuals, project, small_eps_check, total_derivative, window_average,
    ConditionalProcess, ConstantInTime, DynamicsOptions, Estimator, FocConfig, FutureIntegral,
    ProcessCoefficients, ScaledTerminal, DEFAULT_WINDOW,
};
use crate::error::{Error, Result};
use crate::functionals::{
    running_argmax, Climate, Cumulative, EmissionKernel, Kernel, KernelAverage, Midpoint,
    PresentDamage, Smooth, Smooth2, StateDependent,
};
use crate::grid::{BrownianEnsemble, PathMatrix, TimeGrid};
use crate::malliavin::{clark_ocone_integrand, DEFAULT_RAMP};
use crate::nodes::{window_nodes, NodeMatrix};
use crate::oracles::{
    oracle_cumulative, oracle_jump, oracle_state_dependent, oracle_tipping, tree_optimize,
    ClosedFormOracle, OracleQuantity, ScenarioTree,
};
use crate::stats::{batch_mean_se, log_log_slope, rms, MeanSe};

/// Standard errors allowed between an estimate and its target.
pub const Z_BOUND: f64 = 3.0;

/// Added to every standard error, so estimators whose sampling error vanishes
/// are judged at floating-point resolution.
pub const ROUND_OFF: f64 = 1e-9;

const SEED: u64 = 20_200_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub label: String,
    pub statistic: f64,
    pub bound: f64,
    pub direction: Direction,
    /// Wall-clock checks never decide the reported statistic unless they fail,
    /// so summaries stay reproducible.
    pub timing: bool,
}

impl Check {
    pub fn at_most(label: impl Into<String>, statistic: f64, bound: f64) -> Self {
        Self {
            label: label.into(),
            statistic,
            bound,
            direction: Direction::AtMost,
            timing: false,
        }
    }

    pub fn runtime(started: Instant, limit_seconds: f64) -> Self {
        Self {
            timing: true,
            ..Self::at_most(
                "runtime seconds",
                started.elapsed().as_secs_f64(),
                limit_seconds,
            )
        }
    }

    pub fn at_least(label: impl Into<String>, statistic: f64, bound: f64) -> Self {
        Self {
            label: label.into(),
            statistic,
            bound,
            direction: Direction::AtLeast,
            timing: false,
        }
    }

    /// `|mean - target| / (se + ROUND_OFF)` against [`Z_BOUND`].
    pub fn z(label: impl Into<String>, estimate: MeanSe, target: f64) -> Self {
        Self::at_most(
            label,
            (estimate.mean - target).abs() / (estimate.se + ROUND_OFF),
            Z_BOUND,
        )
    }

    pub fn passes(&self) -> bool {
        match self.direction {
            Direction::AtMost => self.statistic <= self.bound,
            Direction::AtLeast => self.statistic >= self.bound,
        }
    }

    /// Above 1 exactly when the check fails; NaN statistics count as failures.
    fn severity(&self) -> f64 {
        let s = match self.direction {
            Direction::AtMost => self.statistic / self.bound,
            Direction::AtLeast => self.bound / self.statistic,
        };
        if s.is_nan() {
            f64::INFINITY
        } else {
            s
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.direction {
            Direction::AtMost => "<=",
            Direction::AtLeast => ">=",
        };
        let verdict = if self.passes() { "ok" } else { "FAILED" };
        write!(
            f,
            "{}: {:.6e} {op} {:.6e} {verdict}",
            self.label, self.statistic, self.bound
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Criterion {
    Cumulative,
    NoHysteresis,
    TotalDerivative,
    TreeOracle,
    Jump,
    Tipping,
    ClarkOcone,
    SmallEps,
    PolicyResiduals,
    NonMartingale,
}

impl Criterion {
    pub const ALL: [Criterion; 10] = [
        Criterion::Cumulative,
        Criterion::NoHysteresis,
        Criterion::TotalDerivative,
        Criterion::TreeOracle,
        Criterion::Jump,
        Criterion::Tipping,
        Criterion::ClarkOcone,
        Criterion::SmallEps,
        Criterion::PolicyResiduals,
        Criterion::NonMartingale,
    ];

    pub fn number(self) -> usize {
        Self::ALL.iter().position(|c| *c == self).unwrap_or(0) + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Cumulative => "cumulative",
            Criterion::NoHysteresis => "no_hysteresis",
            Criterion::TotalDerivative => "total_derivative",
            Criterion::TreeOracle => "tree",
            Criterion::Jump => "jump",
            Criterion::Tipping => "tipping",
            Criterion::ClarkOcone => "clark_ocone",
            Criterion::SmallEps => "small_eps",
            Criterion::PolicyResiduals => "policy_residuals",
            Criterion::NonMartingale => "non_martingale",
        }
    }

    /// Accepts the name or the number.
    pub fn by_name(name: &str) -> Option<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name() == name || name.parse::<usize>().is_ok_and(|n| n == c.number()))
    }

    pub fn run(self) -> Result<CriterionReport> {
        let start = Instant::now();
        let checks = match self {
            Criterion::Cumulative => cumulative(start)?,
            Criterion::NoHysteresis => no_hysteresis()?,
            Criterion::TotalDerivative => total_derivative_formula()?,
            Criterion::TreeOracle => tree_oracle(start)?,
            Criterion::Jump => jump()?,
            Criterion::Tipping => tipping()?,
            Criterion::ClarkOcone => clark_ocone()?,
            Criterion::SmallEps => small_eps()?,
            Criterion::PolicyResiduals => policy_equation_residuals()?,
            Criterion::NonMartingale => non_martingale()?,
        };
        Ok(CriterionReport {
            criterion: self,
            checks,
            elapsed: start.elapsed(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub criterion: Criterion,
    pub checks: Vec<Check>,
    pub elapsed: Duration,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(Check::passes)
    }

    /// The worst failing check, otherwise the deterministic check closest to
    /// its bound.
    pub fn binding(&self) -> Option<&Check> {
        let worst = |keep: fn(&Check) -> bool| {
            self.checks
                .iter()
                .filter(|c| keep(c))
                .max_by(|a, b| a.severity().total_cmp(&b.severity()))
        };
        worst(|c| !c.passes())
            .or_else(|| worst(|c| !c.timing))
            .or_else(|| worst(|_| true))
    }

    /// `name, statistic, bound, PASS|FAIL`
    pub fn record(&self) -> [String; 4] {
        let (s, b) = self
            .binding()
            .map_or((f64::NAN, f64::NAN), |c| (c.statistic, c.bound));
        [
            self.criterion.name().to_string(),
            format!("{s:.6e}"),
            format!("{b:.6e}"),
            if self.passed() { "PASS" } else { "FAIL" }.to_string(),
        ]
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [name, s, b, verdict] = self.record();
        let label = self.binding().map_or("", |c| c.label.as_str());
        write!(
            f,
            "{verdict} {:>2} {name} statistic={s} bound={b} [{label}]",
            self.criterion.number()
        )
    }
}

pub fn run_suite(criteria: &[Criterion]) -> Result<Vec<CriterionReport>> {
    criteria.iter().map(|c| c.run()).collect()
}

fn nodes_at(grid: &TimeGrid, times: &[f64]) -> Vec<usize> {
    times.iter().map(|t| grid.nearest_node(*t)).collect()
}

fn linear_in_w(
    e: &BrownianEnsemble,
    nodes: &[usize],
    batches: usize,
) -> Result<RegressionConditioner> {
    RegressionConditioner::new(
        e,
        nodes,
        RegressionConfig {
            basis: Basis::new(vec![Feature::W], 1),
            batches,
            cross_fit: true,
        },
    )
}

fn max_abs_diff(a: &NodeMatrix, b: &NodeMatrix) -> Result<f64> {
    let mut worst = 0.0_f64;
    for (i, col) in a.columns() {
        for (x, y) in col.iter().zip(b.column(i)?) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}

fn one_step() -> DynamicsOptions {
    DynamicsOptions {
        ramp: 1,
        ..DynamicsOptions::numeric()
    }
}

/// `C` of the cumulative functional against its closed-form coefficients.
fn cumulative(start: Instant) -> Result<Vec<Check>> {
    let grid = TimeGrid::new(1.0, 512)?;
    let e = BrownianEnsemble::sample(grid, 50_000, SEED + 1)?;
    let centers = nodes_at(&grid, &[0.25, 0.5, 0.75]);
    let nodes = window_nodes(&grid, &centers, DEFAULT_WINDOW / 2, 1);
    let cond = linear_in_w(&e, &nodes, 20)?;
    let el = elasticity(&Cumulative, &e, &cond, &nodes)?;
    let oracle = oracle_cumulative();
    let predicted = ProcessCoefficients {
        drift: oracle.tabulate(OracleQuantity::Drift, &e, &nodes)?,
        diffusion: oracle.tabulate(OracleQuantity::Diffusion, &e, &nodes)?,
    };
    let mut checks = Vec::new();
    for c in check_coefficients(
        &el.c,
        &predicted,
        &e,
        &centers,
        DEFAULT_WINDOW,
        &cond.batches(),
    )? {
        let t = grid.time(c.node);
        checks.push(Check::z(
            format!("diffusion z at t={t}"),
            c.empirical_diffusion,
            c.predicted_diffusion,
        ));
        checks.push(Check::at_most(
            format!("diffusion relative error at t={t}"),
            (c.empirical_diffusion.mean / c.predicted_diffusion - 1.0).abs(),
            0.02,
        ));
        checks.push(Check::z(
            format!("drift z at t={t}"),
            c.empirical_drift,
            0.0,
        ));
    }
    checks.push(Check::runtime(start, 60.0));
    Ok(checks)
}

/// `h = sin(c_t)`: predicted coefficients against the closed form, and the
/// strong order of the Euler reconstruction of `C_T`.
fn no_hysteresis() -> Result<Vec<Check>> {
    let fine = BrownianEnsemble::sample(TimeGrid::new(1.0, 1024)?, 4000, SEED + 2)?;
    let h = StateDependent::new(Smooth::Sin);
    let oracle = oracle_state_dependent(Smooth::Sin);
    let (mut dts, mut errors) = (Vec::new(), Vec::new());
    let mut termwise = 0.0_f64;
    for factor in [4, 2, 1] {
        let e = fine.coarsen(factor)?;
        let grid = *e.grid();
        let below: Vec<usize> = (0..grid.steps()).collect();
        let predicted = elasticity_dynamics(
            &h,
            &e,
            &Deterministic::new(e.len()),
            &below,
            &DynamicsOptions::default(),
        )?;
        termwise = termwise
            .max(max_abs_diff(
                &predicted.drift,
                &oracle.tabulate(OracleQuantity::Drift, &e, &below)?,
            )?)
            .max(max_abs_diff(
                &predicted.diffusion,
                &oracle.tabulate(OracleQuantity::Diffusion, &e, &below)?,
            )?);
        let start = oracle.tabulate(OracleQuantity::Elasticity, &e, &[0])?;
        let terminal = euler_terminal(start.column(0)?, &predicted, &e)?;
        let exact = oracle.tabulate(OracleQuantity::Elasticity, &e, &[grid.steps()])?;
        let diff: Vec<f64> = terminal
            .iter()
            .zip(exact.column(grid.steps())?)
            .map(|(a, b)| a - b)
            .collect();
        dts.push(grid.dt());
        errors.push(rms(&diff));
    }
    Ok(vec![
        Check::at_most(
            "max termwise gap to closed-form coefficients",
            termwise,
            1e-6,
        ),
        Check::at_least("Euler strong order", log_log_slope(&dts, &errors), 0.45),
    ])
}

/// Projections of `∫_t^T w ds` and `t w_T` against the total derivative
/// formula, and the constant-in-time reduction to the Clark–Ocone integrand.
///
/// On the grid, `D_{t_i}` moves the increments after `t_i`, so the formula
/// evaluated with one-step Malliavin derivatives gives the diffusion of the
/// simulated projection, `T - t_{i+1}` and `t_{i+1}`. The continuum values
/// `T - t_i` and `t_i` are checked to sit exactly one step away.
fn total_derivative_formula() -> Result<Vec<Check>> {
    let grid = TimeGrid::new(1.0, 512)?;
    let e = BrownianEnsemble::sample(grid, 20_000, SEED + 3)?;
    let centers = nodes_at(&grid, &[0.2, 0.35, 0.5, 0.65, 0.8]);
    let nodes = window_nodes(&grid, &centers, DEFAULT_WINDOW / 2, 1);
    let below: Vec<usize> = nodes
        .iter()
        .copied()
        .filter(|&i| i < grid.steps())
        .collect();
    let cond = linear_in_w(&e, &nodes, 20)?;
    let mut checks = Vec::new();
    // drift (`None` when it is a conditional expectation) and diffusion
    type Formula = fn(&TimeGrid, &[f64], usize) -> (Option<f64>, f64);
    let cases: [(&dyn ConditionalProcess, Formula); 2] = [
        (&FutureIntegral, |g, w, i| (Some(-w[i]), g.remaining(i))),
        (&ScaledTerminal, |g, _, i| (None, g.time(i))),
    ];
    for (xi, formula) in cases {
        let x = project(xi, &e, &cond, &nodes)?;
        let discrete = total_derivative(xi, &e, &cond, &below, &one_step())?;
        let analytic = total_derivative(xi, &e, &cond, &below, &DynamicsOptions::default())?;
        for c in check_coefficients(&x, &discrete, &e, &centers, DEFAULT_WINDOW, &cond.batches())? {
            let t = grid.time(c.node);
            checks.push(Check::z(
                format!("{} drift z at t={t}", xi.name()),
                c.empirical_drift,
                c.predicted_drift,
            ));
            checks.push(Check::z(
                format!("{} diffusion z at t={t}", xi.name()),
                c.empirical_diffusion,
                c.predicted_diffusion,
            ));
        }
        let (mut closed, mut offset) = (0.0_f64, 0.0_f64);
        for &i in &centers {
            let (ad, af) = (analytic.drift.column(i)?, analytic.diffusion.column(i)?);
            let (dd, df) = (discrete.drift.column(i)?, discrete.diffusion.column(i)?);
            let mut projected = Vec::new();
            for j in 0..e.len() {
                let w = e.path(j);
                let (fd, ff) = formula(&grid, w, i);
                match fd {
                    Some(fd) => closed = closed.max((ad[j] - fd).abs()),
                    None => projected.push(ad[j] - w[i]),
                }
                closed = closed.max((af[j] - ff).abs());
                offset = offset
                    .max((dd[j] - ad[j]).abs())
                    .max(((df[j] - af[j]).abs() - grid.dt()).abs());
            }
            if !projected.is_empty() {
                checks.push(Check::z(
                    format!(
                        "{} projected drift minus w z at t={}",
                        xi.name(),
                        grid.time(i)
                    ),
                    batch_mean_se(&projected, &cond.batches()),
                    0.0,
                ));
            }
        }
        checks.push(Check::at_most(
            format!("{} analytic gap to closed form", xi.name()),
            closed,
            1e-9,
        ));
        checks.push(Check::at_most(
            format!("{} grid offset beyond one step", xi.name()),
            offset,
            1e-9,
        ));
    }
    // constant-in-time reduction on a conditioner prepared at every node
    let small = e.subset(0..2000)?;
    let all_below: Vec<usize> = (0..grid.steps()).collect();
    let cond_all = linear_in_w(&small, &all_below, 20)?;
    let terminal = |w: &[f64]| w[..w.len() - 1].iter().sum::<f64>() * grid.dt();
    let constant = ConstantInTime::new(move |g: &TimeGrid, w: &[f64]| {
        w[..g.steps()].iter().sum::<f64>() * g.dt()
    });
    let td = total_derivative(&constant, &small, &cond_all, &all_below, &one_step())?;
    let co = clark_ocone_integrand(terminal, &small, &cond_all, 1, None)?;
    let drift = td
        .drift
        .columns()
        .flat_map(|(_, c)| c.iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    checks.push(Check::at_most("constant process drift", drift, 1e-9));
    checks.push(Check::at_most(
        "constant process diffusion gap to Clark-Ocone integrand",
        max_abs_diff(&td.diffusion, co.integrand())?,
        1e-9,
    ));
    let xi: Vec<f64> = (0..small.len()).map(|j| terminal(small.path(j))).collect();
    checks.push(Check::at_most(
        "Clark-Ocone reconstruction relative RMS",
        co.reconstruct(&xi, &small).relative_rms,
        1e-6,
    ));
    Ok(checks)
}

/// Depth-6 tree optimum against the first-order-condition formula.
fn tree_oracle(start: Instant) -> Result<Vec<Check>> {
    let tree = ScenarioTree::new(1.0, 6)?;
    let h = Climate::new(
        PresentDamage::OfState(Smooth::Identity),
        EmissionKernel::Exponential {
            scale: 1.0,
            rate: 1.0,
        },
    );
    let exact = tree_optimize(&h, 0.2, &tree)?;
    let foc = foc_solve(
        &h,
        &tree.ensemble(),
        &tree.conditioner(),
        &FocConfig::with_eps(0.2),
    )?;
    let nodes: Vec<usize> = (0..tree.depth()).collect();
    let formula = NodeMatrix::select(&foc.c, nodes)?;
    Ok(vec![
        Check::at_most(
            "max node gap tree vs formula",
            max_abs_diff(&exact.policy, &formula)?,
            1e-10,
        ),
        Check::runtime(start, 5.0),
    ])
}

/// `h_t = c_{t/2}` along `θ ≡ 0`.
fn jump() -> Result<Vec<Check>> {
    let grid = TimeGrid::new(1.0, 256)?;
    let e = BrownianEnsemble::from_paths(PathMatrix::zeros(grid, 1), 0)?;
    let cfg = FocConfig {
        tol: 1e-12,
        ..FocConfig::with_eps(0.1)
    };
    let sol = foc_solve(&Midpoint, &e, &Deterministic::new(1), &cfg)?;
    let c = sol.c.row(0);
    let mid = grid.nearest_node(0.5);
    let oracle = oracle_jump(&grid, &vec![0.0; grid.len()], 0.1);
    let (mut rule, mut vs_oracle) = (0.0_f64, 0.0_f64);
    for i in (0..grid.len()).filter(|&i| i != mid) {
        let expected = if grid.time(i) < 0.5 { -0.2 } else { 0.0 };
        rule = rule.max((c[i] - expected).abs());
        vs_oracle = vs_oracle.max((c[i] - oracle[i]).abs());
    }
    Ok(vec![
        Check::at_most("max gap to -0.2 before and 0 after T/2", rule, 1e-12),
        Check::at_most("max gap to the jump oracle", vs_oracle, 1e-12),
    ])
}

/// Record-time damages: closed form against nested Monte Carlo on fixed
/// prefixes, and the predicted policy diffusion against the simulated one.
fn tipping() -> Result<Vec<Check>> {
    let grid = TimeGrid::new(1.0, 512)?;
    let f = Smooth::PositivePart;
    let oracle = oracle_tipping(f.clone());
    let times = [0.25, 0.5, 0.75];
    let centers = nodes_at(&grid, &times);
    let prefixes = BrownianEnsemble::sample(grid, 20, SEED + 6)?;
    let nested = NestedConfig {
        inner: 20_000,
        seed: SEED + 60,
    };
    let mut checks = Vec::new();
    for &i in &centers {
        let mut worst = 0.0_f64;
        for j in 0..prefixes.len() {
            let w = prefixes.path(j);
            let theta = running_argmax(&w[..=i])[i];
            let weight = f.value(grid.time(i) - grid.time(theta));
            let closed = oracle.policy(&grid, w, i, 1.0).unwrap_or(f64::NAN);
            let g = tipping_nested_mc(
                w[theta] - w[i],
                grid.remaining(i),
                512,
                j as u64,
                i as u64,
                nested,
            );
            let estimate = MeanSe {
                mean: w[i] - weight * g.mean,
                se: weight * g.se,
            };
            worst = worst.max(Check::z("", estimate, closed).statistic);
        }
        checks.push(Check::at_most(
            format!("closed form vs nested MC, worst z at t={}", grid.time(i)),
            worst,
            Z_BOUND,
        ));
    }
    // The policy is kinked where `w` sets a new maximum and curved in `w`
    // elsewhere, which biases windowed least squares by O(K Δt). The
    // covariation estimator is exact in expectation for the one-step
    // diffusion, which in turn sits within O(Δt) of `1 - g_{t,t}`.
    let e = BrownianEnsemble::sample(grid, 20_000, SEED + 61)?;
    let steps = window_nodes(&grid, &centers, DEFAULT_WINDOW / 2, 0);
    let policy = oracle.tabulate(
        OracleQuantity::Policy(1.0),
        &e,
        &window_nodes(&grid, &centers, DEFAULT_WINDOW / 2 + DEFAULT_WINDOW, 1),
    )?;
    let analytic = oracle
        .tabulate(OracleQuantity::Diffusion, &e, &steps)?
        .map(|d| 1.0 + d);
    let one_step = NodeMatrix::from_row_fn(grid, steps.clone(), e.len(), |j, row| {
        for (v, &i) in row.iter_mut().zip(&steps) {
            *v = 1.0 + oracle.step_diffusion(&grid, e.path(j), i);
        }
    })?;
    let batches = batch_ranges(e.len(), 20);
    for fit in covariation_coefficients(&policy, &e, &centers, DEFAULT_WINDOW)? {
        let t = grid.time(fit.node);
        let exact = window_average(&one_step, fit.node, DEFAULT_WINDOW)?;
        let continuum = window_average(&analytic, fit.node, DEFAULT_WINDOW)?;
        let residual: Vec<f64> = fit
            .diffusion
            .iter()
            .zip(&exact)
            .map(|(a, b)| a - b)
            .collect();
        checks.push(Check::z(
            format!("policy diffusion z at t={t}"),
            batch_mean_se(&residual, &batches),
            0.0,
        ));
        let offset = continuum
            .iter()
            .zip(&exact)
            .map(|(a, b)| a - b)
            .sum::<f64>()
            / e.len() as f64;
        checks.push(Check::at_most(
            format!("mean continuum offset of 1 - g_tt at t={t}"),
            offset.abs(),
            grid.dt(),
        ));
    }
    Ok(checks)
}

/// Clark–Ocone representation of `∫_0^T w ds` with the default ramp.
fn clark_ocone() -> Result<Vec<Check>> {
    let fine = BrownianEnsemble::sample(TimeGrid::new(1.0, 512)?, 2000, SEED + 7)?;
    let (mut dts, mut errors) = (Vec::new(), Vec::new());
    for factor in [4, 2, 1] {
        let e = fine.coarsen(factor)?;
        let grid = *e.grid();
        let below: Vec<usize> = (0..grid.steps()).collect();
        let cond = linear_in_w(&e, &below, 20)?;
        let xi = |w: &[f64]| w[..w.len() - 1].iter().sum::<f64>() * grid.dt();
        let co = clark_ocone_integrand(xi, &e, &cond, DEFAULT_RAMP, None)?;
        let values: Vec<f64> = (0..e.len()).map(|j| xi(e.path(j))).collect();
        dts.push(grid.dt());
        errors.push(co.reconstruct(&values, &e).relative_rms);
    }
    Ok(vec![
        Check::at_most("relative RMS residual at N=512", errors[2], 0.05),
        Check::at_least("residual order in dt", log_log_slope(&dts, &errors), 0.45),
    ])
}

/// `h = c_t Y_t` with an exponential average `Y`: distance from the first-order
/// expansion over an `ε` ladder.
fn small_eps() -> Result<Vec<Check>> {
    let grid = TimeGrid::new(1.0, 128)?;
    let e = BrownianEnsemble::sample(grid, 4000, SEED + 8)?;
    let below: Vec<usize> = (0..grid.steps()).collect();
    let basis = Basis::new(vec![Feature::W, Feature::ExpAvg(1.0)], 2);
    let cond = RegressionConditioner::new(
        &e,
        &below,
        RegressionConfig {
            basis,
            batches: 20,
            cross_fit: true,
        },
    )?;
    let h = KernelAverage::new(Smooth2::Product, Kernel::exponential(1.0));
    let report = small_eps_check(&h, &[0.1, 0.05, 0.025], &e, &cond, &FocConfig::default())?;
    let ratio = report.errors[1] / report.errors[2];
    Ok(vec![
        Check::at_least("observed order in eps", report.order, 1.9),
        Check::at_least("e(0.05)/e(0.025)", ratio, 3.5),
        Check::at_most("e(0.05)/e(0.025)", ratio, 4.5),
    ])
}

/// The two implicit policy equations along the solved climate policy.
fn policy_equation_residuals() -> Result<Vec<Check>> {
    let grid = TimeGrid::new(1.0, 256)?;
    let e = BrownianEnsemble::sample(grid, 4000, SEED + 9)?;
    let centers = nodes_at(&grid, &[0.2, 0.35, 0.5, 0.65, 0.8]);
    let below: Vec<usize> = (0..grid.steps()).collect();
    let cond = linear_in_w(&e, &below, 20)?;
    let h = Climate::new(
        PresentDamage::OfState(Smooth::Identity),
        EmissionKernel::Exponential {
            scale: 1.0,
            rate: 1.0,
        },
    );
    let eps = 0.2;
    let solved = foc_solve(&h, &e, &cond, &FocConfig::with_eps(eps))?;
    let nodes = window_nodes(&grid, &centers, DEFAULT_WINDOW / 2, 1);
    let inner: Vec<usize> = nodes
        .iter()
        .copied()
        .filter(|&i| i < grid.steps())
        .collect();
    let pc = policy_coefficients(&h, eps, &solved.c, &e, &cond, &inner, &one_step())?;
    // the drift of this policy is deterministic, so windowed least squares
    // would be judged on its O(K² Δt²) curvature bias rather than on noise
    let policy = NodeMatrix::select(
        &solved.c,
        window_nodes(&grid, &centers, DEFAULT_WINDOW / 2 + DEFAULT_WINDOW, 1),
    )?;
    let mut checks = Vec::new();
    for r in policy_residuals(
        &pc,
        &policy,
        &e,
        &centers,
        DEFAULT_WINDOW,
        &cond.batches(),
        Estimator::Covariation,
    )? {
        let t = grid.time(r.node);
        checks.push(Check::z(
            format!("diffusion equation residual z at t={t}"),
            r.beta,
            0.0,
        ));
        checks.push(Check::z(
            format!("drift equation residual z at t={t}"),
            r.alpha,
            0.0,
        ));
    }
    Ok(checks)
}

/// `k ≡ 1`, `g ≡ 0`: the tax is `T - t` and drifts at rate `-1`.
fn non_martingale() -> Result<Vec<Check>> {
    let grid = TimeGrid::new(1.0, 256)?;
    let e = BrownianEnsemble::sample(grid, 4000, SEED + 10)?;
    let centers = nodes_at(&grid, &[0.25, 0.5, 0.75]);
    let nodes = window_nodes(&grid, &centers, DEFAULT_WINDOW / 2, 1);
    let cond = linear_in_w(&e, &nodes, 20)?;
    let h = Climate::new(PresentDamage::Zero, EmissionKernel::Constant(1.0));
    let tax = pigouvian_tax(&h, 0.1, &e, &cond, &nodes, &DynamicsOptions::default())?;
    let exact = tax
        .lambda
        .columns()
        .flat_map(|(i, col)| col.iter().map(move |v| (v - grid.remaining(i)).abs()))
        .fold(0.0, f64::max);
    let mut checks = vec![Check::at_most("max |Λ - (T - t)|", exact, 1e-12)];
    for fit in empirical_coefficients(&tax.lambda, &e, &centers, DEFAULT_WINDOW)? {
        let drift = batch_mean_se(&fit.drift, &cond.batches());
        checks.push(Check::z(
            format!("drift z against -1 at t={}", grid.time(fit.node)),
            drift,
            -1.0,
        ));
    }
    Ok(checks)
}

/// Looks up every name, failing on the first unknown one.
pub fn parse_criteria(names: &[&str]) -> Result<Vec<Criterion>> {
    if names.contains(&"all") {
        return Ok(Criterion::ALL.to_vec());
    }
    names
        .iter()
        .map(|n| {
            Criterion::by_name(n)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown suite {n:?}")))
        })
        .collect()
}
