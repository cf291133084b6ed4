//! One function per subcommand. Each writes its CSVs into the output
//! directory and returns a human report plus machine-readable summary lines.

use std::fs::File;
use std::path::Path;

use hysteresis::condexp::{tipping_closed_form, tipping_nested_mc, Conditioner, NestedConfig};
use hysteresis::dynamics::{
    check_coefficients_with, elasticity, elasticity_dynamics, euler_terminal, foc_solve, pigouvian_tax,
    small_eps_check, CoefficientCheck, Estimator, FocConfig,
};
use hysteresis::functionals::{running_argmax, Tipping};
use hysteresis::io::format_float;
use hysteresis::nodes::{window_nodes, NodeMatrix};
use hysteresis::oracles::{tree_optimize, ScenarioTree};
use hysteresis::stats::{batch_mean_se, log_log_slope, rms, MeanSe};
use hysteresis::verify::{parse_criteria, run_suite, ROUND_OFF};
use hysteresis::{BrownianEnsemble, TimeGrid};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::catalog;
use crate::config::Config;
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub report: String,
    /// `name,statistic,bound,PASS|FAIL` lines.
    pub summary: Vec<String>,
}

enum Field {
    Int(u64),
    Float(f64),
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::Int(n) => n.to_string(),
            Field::Float(x) => format_float(*x),
        }
    }
}

fn int(n: usize) -> Field {
    Field::Int(n as u64)
}

fn float(x: f64) -> Field {
    Field::Float(x)
}

fn write_csv(out: &Path, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<Field>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(out.join(name))?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(Field::render))?;
    }
    w.flush()?;
    Ok(())
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn summary_line(name: &str, statistic: f64, bound: f64, passed: bool) -> String {
    format!("{name},{},{},{}", format_float(statistic), format_float(bound), verdict(passed))
}

/// Bound on the largest of `n` independent `|z|` values with the same
/// family-wise false-alarm rate as a single `|z| <= bound` check.
fn family_bound(bound: f64, n: usize) -> f64 {
    let normal = Normal::standard();
    normal.inverse_cdf(1.0 - normal.sf(bound) / n.max(1) as f64)
}

fn z(m: MeanSe) -> f64 {
    m.mean / (m.se + ROUND_OFF)
}

fn sample(cfg: &Config) -> Result<(TimeGrid, BrownianEnsemble)> {
    let grid = TimeGrid::new(cfg.grid.horizon, cfg.grid.steps)?;
    let e = BrownianEnsemble::sample(grid, cfg.ensemble.paths, cfg.ensemble.seed)?;
    Ok((grid, e))
}

fn center_nodes(times: &[f64], grid: &TimeGrid) -> Result<Vec<usize>> {
    if times.is_empty() {
        return Err(CliError::Config("no centre times given".into()));
    }
    let mut nodes = times
        .iter()
        .map(|&t| {
            if t > 0.0 && t < grid.horizon() {
                Ok(grid.nearest_node(t))
            } else {
                Err(CliError::Config(format!("time {t} outside (0, {})", grid.horizon())))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    nodes.sort_unstable();
    nodes.dedup();
    Ok(nodes)
}

/// Nodes covering every estimation window, including the lead-in the
/// covariation estimator needs.
fn estimation_nodes(cfg: &Config, grid: &TimeGrid, centers: &[usize], est: Estimator) -> Vec<usize> {
    let window = cfg.estimator.window;
    let lead = if est == Estimator::Covariation { window } else { 0 };
    window_nodes(grid, centers, window / 2 + lead, 1)
}

fn distribution_rows(m: &NodeMatrix, batches: &[std::ops::Range<usize>]) -> Vec<Vec<Field>> {
    let grid = *m.grid();
    m.columns()
        .map(|(i, col)| {
            let s = batch_mean_se(col, batches);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            vec![int(i), float(grid.time(i)), float(s.mean), float(s.se), float(lo), float(hi)]
        })
        .collect()
}

const DISTRIBUTION: [&str; 6] = ["node", "t", "mean", "se", "min", "max"];

const COEFFICIENTS: [&str; 10] = [
    "node",
    "t",
    "empirical_drift",
    "drift_se",
    "predicted_drift",
    "drift_z",
    "empirical_diffusion",
    "diffusion_se",
    "predicted_diffusion",
    "diffusion_z",
];

/// Writes the coefficient table and returns report lines and whether every
/// `|z|` is within the bound.
fn coefficient_table(out: &Path, name: &str, grid: &TimeGrid, checks: &[CoefficientCheck], bound: f64) -> Result<(Vec<String>, bool)> {
    let mut lines = Vec::new();
    let mut passed = true;
    let rows = checks.iter().map(|c| {
        let (zd, zs) = (z(c.drift_residual), z(c.diffusion_residual));
        passed &= zd.abs() <= bound && zs.abs() <= bound;
        lines.push(format!(
            "t={:.6}  drift {:.6} (predicted {:.6}, z={zd:.3})  diffusion {:.6} (predicted {:.6}, z={zs:.3})",
            grid.time(c.node),
            c.empirical_drift.mean,
            c.predicted_drift,
            c.empirical_diffusion.mean,
            c.predicted_diffusion,
        ));
        vec![
            int(c.node),
            float(grid.time(c.node)),
            float(c.empirical_drift.mean),
            float(c.empirical_drift.se),
            float(c.predicted_drift),
            float(zd),
            float(c.empirical_diffusion.mean),
            float(c.empirical_diffusion.se),
            float(c.predicted_diffusion),
            float(zs),
        ]
    });
    let rows: Vec<_> = rows.collect();
    write_csv(out, name, &COEFFICIENTS, rows)?;
    Ok((lines, passed))
}

fn worst_z(checks: &[CoefficientCheck]) -> f64 {
    checks.iter().flat_map(|c| [z(c.drift_residual).abs(), z(c.diffusion_residual).abs()]).fold(0.0, f64::max)
}

pub fn elasticity_cmd(cfg: &Config, out: &Path) -> Result<Outcome> {
    let h = catalog::functional(&cfg.functional)?;
    let est = catalog::estimator(&cfg.estimator)?;
    let opts = catalog::options(&cfg.estimator)?;
    let (grid, e) = sample(cfg)?;
    let centers = center_nodes(&cfg.run.centers, &grid)?;
    let nodes = estimation_nodes(cfg, &grid, &centers, est);
    let below: Vec<usize> = nodes.iter().copied().filter(|&i| i < grid.steps()).collect();
    let cond = catalog::conditioner(cfg, &e, &nodes)?;
    let batches = cond.batches();
    let el = elasticity(h.as_ref(), &e, &cond, &nodes)?;
    let predicted = elasticity_dynamics(h.as_ref(), &e, &cond, &below, &opts)?;
    let checks = check_coefficients_with(est, &el.c, &predicted, &e, &centers, cfg.estimator.window, &batches)?;

    write_csv(out, "C.csv", &DISTRIBUTION, distribution_rows(&el.c, &batches))?;
    let decomposition = el.c.columns().map(|(i, c)| {
        let mean = |m: &NodeMatrix| m.column(i).map(|col| col.iter().sum::<f64>() / col.len() as f64);
        Ok(vec![int(i), float(grid.time(i)), float(mean(&el.present)?), float(mean(&el.future)?), float(c.iter().sum::<f64>() / c.len() as f64)])
    });
    let decomposition = decomposition.collect::<Result<Vec<_>>>()?;
    write_csv(out, "decomposition.csv", &["node", "t", "present", "future", "c"], decomposition)?;
    let bound = family_bound(cfg.run.z_bound, 2 * checks.len());
    let (lines, passed) = coefficient_table(out, "empirical_vs_predicted.csv", &grid, &checks, bound)?;

    let report = format!(
        "elasticity of {} on {} paths, {} steps\n{}\nlargest |z| {:.3} (bound {bound:.3})\nresult: {}\n",
        h.name(),
        e.len(),
        grid.steps(),
        lines.join("\n"),
        worst_z(&checks),
        verdict(passed)
    );
    Ok(Outcome { passed, report, summary: vec![summary_line("elasticity", worst_z(&checks), bound, passed)] })
}

pub fn climate_cmd(cfg: &Config, out: &Path) -> Result<Outcome> {
    let h = catalog::climate(&cfg.functional)?;
    let est = catalog::estimator(&cfg.estimator)?;
    let opts = catalog::options(&cfg.estimator)?;
    let (grid, e) = sample(cfg)?;
    let centers = center_nodes(&cfg.run.centers, &grid)?;
    let nodes = estimation_nodes(cfg, &grid, &centers, est);
    let cond = catalog::conditioner(cfg, &e, &nodes)?;
    let batches = cond.batches();
    let tax = pigouvian_tax(&h, cfg.run.eps, &e, &cond, &nodes, &opts)?;
    let checks = check_coefficients_with(est, &tax.lambda, &tax.lambda_coefficients, &e, &centers, cfg.estimator.window, &batches)?;

    write_csv(out, "tax.csv", &DISTRIBUTION, distribution_rows(&tax.lambda, &batches))?;
    let policy = tax
        .policy
        .columns()
        .map(|(i, col)| {
            let s = batch_mean_se(col, &batches);
            let gap = col.iter().enumerate().map(|(j, c)| (c - e.path(j)[i]).abs()).fold(0.0, f64::max);
            vec![int(i), float(grid.time(i)), float(s.mean), float(s.se), float(gap)]
        })
        .collect::<Vec<_>>();
    write_csv(out, "policy.csv", &["node", "t", "mean", "se", "max_abs_minus_state"], policy)?;
    let bound = family_bound(cfg.run.z_bound, 2 * checks.len());
    let (lines, passed) = coefficient_table(out, "dynamics.csv", &grid, &checks, bound)?;

    let report = format!(
        "Pigouvian tax with eps={} on {} paths, {} steps\n{}\nlargest |z| {:.3} (bound {bound:.3})\nresult: {}\n",
        cfg.run.eps,
        e.len(),
        grid.steps(),
        lines.join("\n"),
        worst_z(&checks),
        verdict(passed)
    );
    Ok(Outcome { passed, report, summary: vec![summary_line("climate", worst_z(&checks), bound, passed)] })
}

pub fn verify_cmd(suite: &str, out: &Path) -> Result<Outcome> {
    let names: Vec<&str> = suite.split(',').map(str::trim).collect();
    let criteria = parse_criteria(&names).map_err(|e| CliError::Config(e.to_string()))?;
    let reports = run_suite(&criteria)?;
    let mut w = csv::Writer::from_writer(File::create(out.join("summary.csv"))?);
    w.write_record(["name", "statistic", "bound", "result"])?;
    for r in &reports {
        w.write_record(r.record())?;
    }
    w.flush()?;
    let mut report = String::new();
    for r in &reports {
        report.push_str(&format!("{r}\n"));
        for c in &r.checks {
            report.push_str(&format!("    {c}\n"));
        }
    }
    let summary = reports.iter().map(|r| r.record().join(",")).collect();
    Ok(Outcome { passed: reports.iter().all(|r| r.passed()), report, summary })
}

pub fn convergence_cmd(cfg: &Config, out: &Path) -> Result<Outcome> {
    let conv = &cfg.convergence;
    if conv.ladder.len() < 3 {
        return Err(CliError::Config(format!("convergence ladder needs at least 3 rungs, got {}", conv.ladder.len())));
    }
    let h = catalog::functional(&cfg.functional)?;
    let (xs, errors, label) = match conv.experiment.as_str() {
        "ito" => ito_ladder(cfg, h.as_ref())?,
        "small_eps" => {
            let (grid, e) = sample(cfg)?;
            let below: Vec<usize> = (0..grid.steps()).collect();
            let cond = catalog::conditioner(cfg, &e, &below)?;
            let r = small_eps_check(h.as_ref(), &conv.ladder, &e, &cond, &FocConfig::default())?;
            (conv.ladder.clone(), r.errors, "eps")
        }
        "standard_error" => {
            let grid = TimeGrid::new(cfg.grid.horizon, cfg.grid.steps)?;
            let node = grid.nearest_node(0.5 * grid.horizon());
            let errors = conv
                .ladder
                .iter()
                .map(|&m| {
                    let paths = whole(m, "path count")?;
                    let e = BrownianEnsemble::sample(grid, paths, cfg.ensemble.seed)?;
                    let cond = catalog::conditioner(cfg, &e, &[node])?;
                    let c = elasticity(h.as_ref(), &e, &cond, &[node])?.c;
                    Ok(batch_mean_se(c.column(node)?, &cond.batches()).se)
                })
                .collect::<Result<Vec<_>>>()?;
            (conv.ladder.clone(), errors, "paths")
        }
        other => return Err(CliError::Config(format!("unknown convergence experiment {other:?}"))),
    };
    let order = log_log_slope(&xs, &errors);
    let rows = (0..xs.len()).map(|k| {
        let local = if k == 0 { f64::NAN } else { (errors[k] / errors[k - 1]).ln() / (xs[k] / xs[k - 1]).ln() };
        vec![float(xs[k]), float(errors[k]), float(local)]
    });
    write_csv(out, "rates.csv", &[label, "error", "local_order"], rows)?;
    // vanishing errors: the approximation is exact and beats any order gate
    let exact = errors.iter().all(|&e| e == 0.0);
    let passed = exact
        || (order.is_finite()
            && conv.min_order.is_none_or(|lo| order >= lo)
            && conv.max_order.is_none_or(|hi| order <= hi));
    let bound = conv.min_order.or(conv.max_order).unwrap_or(f64::NAN);
    let report = format!(
        "{} convergence of {} over {label} {:?}\nerrors {:?}\n{}\nresult: {}\n",
        conv.experiment,
        h.name(),
        xs,
        errors,
        if exact { "errors vanish identically".to_string() } else { format!("observed order {order:.4}") },
        verdict(passed)
    );
    Ok(Outcome { passed, report, summary: vec![summary_line("convergence", order, bound, passed)] })
}

fn whole(x: f64, what: &str) -> Result<usize> {
    if x >= 1.0 && x.fract() == 0.0 {
        Ok(x as usize)
    } else {
        Err(CliError::Config(format!("{what} {x} is not a positive integer")))
    }
}

/// Euler reconstruction of `C_T` from the predicted coefficients, on a
/// ladder of step counts that all divide the finest.
fn ito_ladder(cfg: &Config, h: &dyn hysteresis::functionals::ClassA) -> Result<(Vec<f64>, Vec<f64>, &'static str)> {
    let steps = cfg.convergence.ladder.iter().map(|&n| whole(n, "step count")).collect::<Result<Vec<_>>>()?;
    let finest = steps.iter().copied().max().unwrap_or(0);
    if let Some(bad) = steps.iter().find(|&&n| !finest.is_multiple_of(n)) {
        return Err(CliError::Config(format!("step count {bad} does not divide {finest}")));
    }
    let opts = catalog::options(&cfg.estimator)?;
    let fine = BrownianEnsemble::sample(TimeGrid::new(cfg.grid.horizon, finest)?, cfg.ensemble.paths, cfg.ensemble.seed)?;
    let mut xs = Vec::new();
    let mut errors = Vec::new();
    for n in steps {
        let e = fine.coarsen(finest / n)?;
        let grid = *e.grid();
        let all: Vec<usize> = (0..=n).collect();
        let cond = catalog::conditioner(cfg, &e, &all)?;
        let below = &all[..n];
        let start = elasticity(h, &e, &cond, &[0])?.c;
        let end = elasticity(h, &e, &cond, &[n])?.c;
        let coefficients = elasticity_dynamics(h, &e, &cond, below, &opts)?;
        let terminal = euler_terminal(start.column(0)?, &coefficients, &e)?;
        let diff: Vec<f64> = terminal.iter().zip(end.column(n)?).map(|(a, b)| a - b).collect();
        xs.push(grid.dt());
        errors.push(rms(&diff));
    }
    Ok((xs, errors, "dt"))
}

pub fn tree_cmd(cfg: &Config, out: &Path) -> Result<Outcome> {
    let h = catalog::climate(&cfg.functional)?;
    let tree = ScenarioTree::new(cfg.grid.horizon, cfg.tree.depth)?;
    let grid = *tree.grid();
    let exact = tree_optimize(&h, cfg.run.eps, &tree)?;
    let foc = foc_solve(&h, &tree.ensemble(), &tree.conditioner(), &FocConfig::with_eps(cfg.run.eps))?;
    let n = tree.depth();
    let mut header = vec!["leaf".to_string()];
    header.extend((0..n).map(|i| format!("t_{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..tree.leaves()).map(|j| {
        let mut row = vec![int(j)];
        row.extend((0..n).map(|i| float(exact.policy.get(j, i).unwrap_or(f64::NAN))));
        row
    });
    write_csv(out, "tree_policy.csv", &header, rows)?;
    let gaps: Vec<f64> = (0..n)
        .map(|i| (0..tree.leaves()).map(|j| (exact.policy.get(j, i).unwrap_or(f64::NAN) - foc.c.get(j, i)).abs()).fold(0.0, f64::max))
        .collect();
    write_csv(out, "comparison.csv", &["node", "t", "max_gap"], gaps.iter().enumerate().map(|(i, g)| vec![int(i), float(grid.time(i)), float(*g)]))?;
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    let passed = worst <= cfg.tree.tolerance;
    let report = format!(
        "depth-{n} tree, eps={}: objective {}\nlargest gap to the first-order-condition solver {worst:.3e} (tolerance {:.1e})\nresult: {}\n",
        cfg.run.eps,
        format_float(exact.objective),
        cfg.tree.tolerance,
        verdict(passed)
    );
    Ok(Outcome { passed, report, summary: vec![summary_line("tree-oracle", worst, cfg.tree.tolerance, passed)] })
}

pub fn tipping_cmd(cfg: &Config, out: &Path) -> Result<Outcome> {
    let f = catalog::smooth(&cfg.tipping.weight)?;
    Tipping::new(f.clone())?;
    let grid = TimeGrid::new(cfg.grid.horizon, cfg.grid.steps)?;
    let prefixes = BrownianEnsemble::sample(grid, cfg.tipping.prefixes, cfg.ensemble.seed)?;
    let nodes = center_nodes(&cfg.tipping.times, &grid)?;
    let nested = NestedConfig { inner: cfg.estimator.inner, seed: cfg.ensemble.seed };
    let mut rows = Vec::new();
    let mut worst = 0.0_f64;
    for &i in &nodes {
        for j in 0..prefixes.len() {
            let w = prefixes.path(j);
            let theta = running_argmax(&w[..=i])[i];
            let (gap, age) = (w[theta] - w[i], grid.time(i) - grid.time(theta));
            let weight = f.value(age);
            let closed = tipping_closed_form(&grid, w, i, &f);
            let g = tipping_nested_mc(gap, grid.remaining(i), grid.steps(), j as u64, i as u64, nested);
            let estimate = MeanSe { mean: weight * g.mean, se: weight * g.se };
            let zj = (estimate.mean - closed) / (estimate.se + ROUND_OFF);
            worst = worst.max(zj.abs());
            rows.push(vec![
                int(j),
                int(i),
                float(grid.time(i)),
                float(gap),
                float(age),
                float(closed),
                float(estimate.mean),
                float(estimate.se),
                float(zj),
                float(w[i] - cfg.run.eps * closed),
            ]);
        }
    }
    let comparisons = rows.len();
    write_csv(
        out,
        "tipping.csv",
        &["prefix", "node", "t", "gap", "age", "closed_form", "nested_mean", "nested_se", "z", "policy"],
        rows,
    )?;
    let bound = family_bound(cfg.run.z_bound, comparisons);
    let passed = worst <= bound;
    let report = format!(
        "record-time damages on {} prefixes at {} times, {} inner paths\nlargest |z| {worst:.3} (bound {bound:.3})\nresult: {}\n",
        prefixes.len(),
        nodes.len(),
        cfg.estimator.inner,
        verdict(passed)
    );
    Ok(Outcome { passed, report, summary: vec![summary_line("tipping", worst, bound, passed)] })
}
