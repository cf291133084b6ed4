use hysteresis::condexp::{
    Basis, Conditioner, Deterministic, Feature, RegressionConditioner, RegressionConfig,
};
use hysteresis::dynamics::*;
use hysteresis::functionals::{
    Climate, Cumulative, EmissionKernel, Kernel, KernelAverage, Midpoint, PresentDamage, Smooth,
    Smooth2, StateDependent,
};
use hysteresis::nodes::{window_nodes, NodeMatrix};
use hysteresis::{BrownianEnsemble, TimeGrid};

fn ensemble(n: usize, m: usize, seed: u64) -> BrownianEnsemble {
    BrownianEnsemble::sample(TimeGrid::new(1.0, n).unwrap(), m, seed).unwrap()
}

fn regression(
    e: &BrownianEnsemble,
    nodes: &[usize],
    basis: Basis,
    batches: usize,
) -> RegressionConditioner {
    RegressionConditioner::new(
        e,
        nodes,
        RegressionConfig {
            basis,
            batches,
            cross_fit: true,
        },
    )
    .unwrap()
}

fn all_below(e: &BrownianEnsemble) -> Vec<usize> {
    (0..e.grid().steps()).collect()
}

fn climate(g: PresentDamage, k: EmissionKernel) -> Climate {
    Climate::new(g, k)
}

#[test]
fn elasticity_of_state_dependent_is_minus_slope() {
    let e = ensemble(32, 200, 1);
    let nodes: Vec<usize> = (0..=32).collect();
    let h = StateDependent::new(Smooth::Sin);
    let r = elasticity(&h, &e, &Deterministic::new(e.len()), &nodes).unwrap();
    for (i, col) in r.c.columns() {
        for (j, v) in col.iter().enumerate() {
            assert!((v + e.path(j)[i].cos()).abs() < 1e-15);
        }
    }
    assert!(r.future.columns().all(|(_, c)| c.iter().all(|v| *v == 0.0)));
}

#[test]
fn elasticity_of_zero_functional_vanishes() {
    let e = ensemble(16, 100, 2);
    let h = climate(PresentDamage::Zero, EmissionKernel::Zero);
    let r = elasticity(&h, &e, &Deterministic::new(e.len()), &[0, 5, 16]).unwrap();
    assert!(r.c.columns().all(|(_, c)| c.iter().all(|v| *v == 0.0)));
}

#[test]
fn cumulative_elasticity_matches_closed_form() {
    let e = ensemble(64, 8000, 3);
    let nodes = [16, 32, 48];
    let cond = regression(&e, &nodes, Basis::new(vec![Feature::W], 1), 10);
    let r = elasticity(&Cumulative, &e, &cond, &nodes).unwrap();
    let g = *e.grid();
    for &i in &nodes {
        let col = r.c.column(i).unwrap();
        let err: Vec<f64> = (0..e.len())
            .map(|j| {
                let w = e.path(j);
                let oracle = -w[..=i].iter().sum::<f64>() * g.dt() - g.remaining(i) * w[i];
                col[j] - oracle
            })
            .collect();
        // the fitted slope has standard error near 0.01 per half batch
        assert!(hysteresis::stats::rms(&err) < 0.03, "node {i}");
        let present = r.present.column(i).unwrap();
        let future = r.future.column(i).unwrap();
        assert!(col
            .iter()
            .zip(present)
            .zip(future)
            .all(|((c, a), b)| *c == -a - b));
    }
}

#[test]
fn state_dependent_dynamics_are_exact_analytically() {
    let e = ensemble(64, 300, 4);
    let nodes = all_below(&e);
    let h = StateDependent::new(Smooth::Sin);
    let d = elasticity_dynamics(
        &h,
        &e,
        &Deterministic::new(e.len()),
        &nodes,
        &DynamicsOptions::default(),
    )
    .unwrap();
    let n = elasticity_dynamics(
        &h,
        &e,
        &Deterministic::new(e.len()),
        &nodes,
        &DynamicsOptions::numeric(),
    )
    .unwrap();
    for &i in &nodes {
        for j in 0..e.len() {
            let w = e.path(j)[i];
            assert!((d.drift.get(j, i).unwrap() - 0.5 * w.cos()).abs() < 1e-15);
            assert!((d.diffusion.get(j, i).unwrap() - w.sin()).abs() < 1e-15);
            assert!((n.drift.get(j, i).unwrap() - 0.5 * w.cos()).abs() < 1e-4);
            assert!((n.diffusion.get(j, i).unwrap() - w.sin()).abs() < 1e-7);
        }
    }
}

#[test]
fn cumulative_dynamics_have_no_drift() {
    let e = ensemble(64, 2000, 5);
    let nodes = [8, 32, 60];
    let cond = regression(&e, &nodes, Basis::new(vec![Feature::W], 1), 4);
    let g = *e.grid();
    for opts in [DynamicsOptions::default(), DynamicsOptions::numeric()] {
        let d = elasticity_dynamics(&Cumulative, &e, &cond, &nodes, &opts).unwrap();
        for &i in &nodes {
            let shortfall = if opts.source == DerivativeSource::Numeric {
                let width = opts.ramp.min(64 - i) as f64;
                // ramp average over width steps, plus the endpoint weight of the vertical bump
                (width + 1.0) / 2.0 * g.dt() - g.dt()
            } else {
                0.0
            };
            for j in 0..e.len() {
                // second differences of a linear atom leave round-off of order 1e-16 / eps²
                assert!(d.drift.get(j, i).unwrap().abs() < 1e-6);
                let diff = d.diffusion.get(j, i).unwrap() + g.remaining(i) - shortfall;
                assert!(diff.abs() < 1e-8, "{:?} node {i}: {diff}", opts.source);
            }
        }
    }
    assert!(
        elasticity_dynamics(&Cumulative, &e, &cond, &[64], &DynamicsOptions::default()).is_err()
    );
}

#[test]
fn kernel_average_time_and_malliavin_sums_agree_across_sources() {
    let e = ensemble(64, 3000, 6);
    let nodes = [16, 32, 48];
    let cond = regression(&e, &nodes, Basis::standard(), 4);
    let h = KernelAverage::new(Smooth2::Product, Kernel::exponential(1.0));
    let a = elasticity_dynamics(&h, &e, &cond, &nodes, &DynamicsOptions::default()).unwrap();
    let opts = DynamicsOptions {
        ramp: 1,
        ..DynamicsOptions::numeric()
    };
    let n = elasticity_dynamics(&h, &e, &cond, &nodes, &opts).unwrap();
    for &i in &nodes {
        let da = a.diffusion.column(i).unwrap();
        let dn = n.diffusion.column(i).unwrap();
        let gap =
            hysteresis::stats::rms(&da.iter().zip(dn).map(|(x, y)| x - y).collect::<Vec<_>>());
        assert!(gap < 0.05, "diffusion gap {gap} at node {i}");
        let ta = a.drift.column(i).unwrap();
        let tn = n.drift.column(i).unwrap();
        let gap =
            hysteresis::stats::rms(&ta.iter().zip(tn).map(|(x, y)| x - y).collect::<Vec<_>>());
        assert!(gap < 0.05, "drift gap {gap} at node {i}");
    }
}

#[test]
fn empirical_examples() {
    let e = ensemble(128, 4000, 7);
    let g = *e.grid();
    let centers = [32, 64, 96];
    let nodes = window_nodes(&g, &centers, 8, 1);
    let batches = Deterministic::new(e.len()).batches();
    let mk = |f: &(dyn Fn(usize, &[f64]) -> f64 + Sync)| {
        NodeMatrix::from_row_fn(g, nodes.clone(), e.len(), |j, row| {
            for (k, &i) in nodes.iter().enumerate() {
                row[k] = f(i, e.path(j));
            }
        })
        .unwrap()
    };
    let w = mk(&|i, p| p[i]);
    for fit in empirical_coefficients(&w, &e, &centers, DEFAULT_WINDOW).unwrap() {
        assert!(fit.diffusion.iter().all(|b| (b - 1.0).abs() < 1e-9));
        assert!(fit.drift.iter().all(|a| a.abs() < 1e-7));
    }
    let t = mk(&|i, _| g.time(i));
    for fit in empirical_coefficients(&t, &e, &centers, DEFAULT_WINDOW).unwrap() {
        assert!(fit.diffusion.iter().all(|b| b.abs() < 1e-9));
        assert!(fit.drift.iter().all(|a| (a - 1.0).abs() < 1e-7));
    }
    // ΔX = (T - t_{i+1}) Δw - w_i Δt on the grid
    let x = mk(&|i, p| g.remaining(i) * p[i]);
    let predicted = ProcessCoefficients {
        drift: mk(&|i, p| -p[i]),
        diffusion: mk(&|i, _| g.remaining(i + 1)),
    };
    for c in check_coefficients(&x, &predicted, &e, &centers, DEFAULT_WINDOW, &batches).unwrap() {
        assert!(c.passes(3.0, 1e-12), "{c:?}");
        // the local model is exact for this process
        assert!(c.diffusion_residual.mean.abs() < 1e-9 && c.diffusion_residual.se < 1e-9);
        assert!(c.drift_residual.mean.abs() < 1e-7 && c.drift_residual.se < 1e-7);
    }
    assert!(empirical_coefficients(&w, &e, &centers, 4).is_err());
}

#[test]
fn total_derivative_examples() {
    let e = ensemble(256, 4000, 8);
    let g = *e.grid();
    let centers = [64, 128, 192];
    let nodes = window_nodes(&g, &centers, 8, 1);
    let cond = regression(&e, &nodes, Basis::new(vec![Feature::W], 1), 4);
    let below: Vec<usize> = nodes.iter().copied().filter(|&i| i < 256).collect();
    let one_step = DynamicsOptions {
        ramp: 1,
        ..DynamicsOptions::numeric()
    };
    for (xi, drift_of, diff_of) in [
        (
            &FutureIntegral as &dyn ConditionalProcess,
            (|w: f64| -w) as fn(f64) -> f64,
            (|t: f64| 1.0 - t) as fn(f64) -> f64,
        ),
        (&ScaledTerminal, |w| w, |t| t),
    ] {
        let x = project(xi, &e, &cond, &nodes).unwrap();
        let analytic =
            total_derivative(xi, &e, &cond, &below, &DynamicsOptions::default()).unwrap();
        let numeric = total_derivative(xi, &e, &cond, &below, &one_step).unwrap();
        for &i in &centers {
            for td in [&analytic, &numeric] {
                let d = td.drift.column(i).unwrap();
                let s = td.diffusion.column(i).unwrap();
                let err_d: Vec<f64> = (0..e.len())
                    .map(|j| d[j] - drift_of(e.path(j)[i]))
                    .collect();
                // regression slopes from 500 paths carry errors up to about 0.08 at t = 0.25
                assert!(hysteresis::stats::rms(&err_d) < 0.1, "{} drift", xi.name());
                assert!(
                    s.iter().all(|v| (v - diff_of(g.time(i))).abs() < 0.03),
                    "{} diffusion",
                    xi.name()
                );
            }
        }
        let checks =
            check_coefficients(&x, &numeric, &e, &centers, DEFAULT_WINDOW, &cond.batches())
                .unwrap();
        for c in checks {
            assert!(c.passes(3.0, 1e-12), "{}: {c:?}", xi.name());
        }
    }
}

#[test]
fn constant_process_is_a_martingale() {
    let e = ensemble(64, 2000, 9);
    let nodes: Vec<usize> = (0..=64).collect();
    let cond = regression(&e, &nodes, Basis::new(vec![Feature::W], 2), 4);
    let xi = ConstantInTime::new(|g: &TimeGrid, w: &[f64]| w[g.steps()].powi(2));
    let below = all_below(&e);
    let td = total_derivative(
        &xi,
        &e,
        &cond,
        &below,
        &DynamicsOptions {
            ramp: 1,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(td.drift.columns().all(|(_, c)| c.iter().all(|v| *v == 0.0)));
    let co =
        hysteresis::malliavin::clark_ocone_integrand(|w: &[f64]| w[64].powi(2), &e, &cond, 1, None)
            .unwrap();
    for &i in &below {
        let a = td.diffusion.column(i).unwrap();
        let b = co.integrand().column(i).unwrap();
        assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-10));
    }
}

#[test]
fn ito_projection_examples() {
    let e = ensemble(32, 50, 10);
    let g = *e.grid();
    let w = e.path(3);
    let bm = ito_to_projection(0.0, |_, _, _| 0.0, |_, _, _| 1.0);
    assert!((bm.xi(&g, w, 10) - w[32]).abs() < 1e-12);
    assert!((bm.eta(&g, w, 10) - w[10]).abs() < 1e-12);
    let clock = ito_to_projection(0.0, |_, _, _| 1.0, |_, _, _| 0.0);
    assert!((clock.xi(&g, w, 8) - 0.25).abs() < 1e-12);
    let integral = ito_to_projection(0.0, |_, w: &[f64], i| w[i], |_, _, _| 0.0);
    let left: f64 = w[..12].iter().sum::<f64>() * g.dt();
    assert!((integral.xi(&g, w, 12) - left).abs() < 1e-12);
    assert_eq!(integral.xi(&g, w, 12), integral.eta(&g, w, 12));
}

#[test]
fn ito_projection_round_trips() {
    let e = ensemble(64, 4000, 11);
    let nodes: Vec<usize> = (0..=64).collect();
    let cond = regression(&e, &nodes, Basis::new(vec![Feature::W], 2), 4);
    // dη = w² dt + w dw
    let eta = ito_to_projection(0.0, |_, w: &[f64], i| w[i] * w[i], |_, w: &[f64], i| w[i]);
    let td = total_derivative(
        &eta,
        &e,
        &cond,
        &[16, 32, 48],
        &DynamicsOptions {
            ramp: 1,
            ..Default::default()
        },
    )
    .unwrap();
    for i in [16, 32, 48] {
        let (mut drift_err, mut diff_err) = (Vec::new(), Vec::new());
        for j in 0..e.len() {
            let w = e.path(j)[i];
            drift_err.push(td.drift.get(j, i).unwrap() - w * w);
            diff_err.push(td.diffusion.get(j, i).unwrap() - w);
        }
        assert!(hysteresis::stats::rms(&drift_err) < 1e-9);
        assert!(hysteresis::stats::rms(&diff_err) < 0.05);
    }
}

#[test]
fn pigouvian_tax_examples() {
    let e = ensemble(64, 400, 12);
    let g = *e.grid();
    let nodes: Vec<usize> = (0..=64).collect();
    let det = Deterministic::new(e.len());
    let ones = climate(PresentDamage::Zero, EmissionKernel::Constant(1.0));
    let t = pigouvian_tax(&ones, 0.1, &e, &det, &nodes, &DynamicsOptions::default()).unwrap();
    for (i, col) in t.lambda.columns() {
        assert!(col.iter().all(|v| *v == g.remaining(i)));
    }
    for (_, col) in t.lambda_coefficients.drift.columns() {
        assert!(col.iter().all(|v| *v == -1.0));
    }
    assert!(t
        .lambda_coefficients
        .diffusion
        .columns()
        .all(|(_, c)| c.iter().all(|v| *v == 0.0)));

    let state = climate(
        PresentDamage::OfState(Smooth::Identity),
        EmissionKernel::Zero,
    );
    let t = pigouvian_tax(&state, 0.0, &e, &det, &nodes, &DynamicsOptions::numeric()).unwrap();
    for (i, col) in t.lambda.columns() {
        assert!(col.iter().enumerate().all(|(j, v)| *v == e.path(j)[i]));
        let pol = t.policy.column(i).unwrap();
        assert!(pol.iter().enumerate().all(|(j, v)| *v == e.path(j)[i]));
    }
    assert!(t
        .lambda_coefficients
        .diffusion
        .columns()
        .all(|(_, c)| c.iter().all(|v| (v - 1.0).abs() < 1e-9)));
    assert!(t
        .lambda_coefficients
        .drift
        .columns()
        .all(|(_, c)| c.iter().all(|v| v.abs() < 1e-6)));
}

#[test]
fn path_value_kernel_tax() {
    let e = ensemble(128, 4000, 13);
    let g = *e.grid();
    let centers = [32, 64, 96];
    let nodes = window_nodes(&g, &centers, 8, 1);
    let cond = regression(&e, &nodes, Basis::new(vec![Feature::W], 1), 10);
    let h = climate(PresentDamage::Zero, EmissionKernel::PathValue);
    let below: Vec<usize> = nodes.iter().copied().filter(|&i| i < 128).collect();
    let t = pigouvian_tax(&h, 0.1, &e, &cond, &nodes, &DynamicsOptions::default()).unwrap();
    // a one-step ramp yields the grid's own diffusion T - t_{i+1}
    let one_step = DynamicsOptions {
        ramp: 1,
        ..DynamicsOptions::numeric()
    };
    let discrete = pigouvian_tax(&h, 0.1, &e, &cond, &nodes, &one_step).unwrap();
    for &i in &centers {
        let d = t.lambda_coefficients.drift.column(i).unwrap();
        let err: Vec<f64> = (0..e.len()).map(|j| d[j] + e.path(j)[i]).collect();
        assert!(hysteresis::stats::rms(&err) < 0.05);
        assert!(t
            .lambda_coefficients
            .diffusion
            .column(i)
            .unwrap()
            .iter()
            .all(|v| (v - g.remaining(i)).abs() < 1e-12));
    }
    assert_eq!(t.lambda_coefficients.drift.nodes(), &below[..]);
    for &i in &centers {
        let d = discrete.lambda_coefficients.diffusion.column(i).unwrap();
        assert!(d.iter().all(|v| (v - g.remaining(i + 1)).abs() < 1e-9));
    }
    for c in check_coefficients(
        &discrete.lambda,
        &discrete.lambda_coefficients,
        &e,
        &centers,
        DEFAULT_WINDOW,
        &cond.batches(),
    )
    .unwrap()
    {
        assert!(c.passes(3.0, 1e-12), "{c:?}");
    }
}

#[test]
fn foc_examples() {
    let e = ensemble(64, 400, 14);
    let det = Deterministic::new(e.len());
    let h = StateDependent::new(Smooth::Sin);
    let p = foc_solve(&h, &e, &det, &FocConfig::with_eps(0.0)).unwrap();
    assert_eq!(&p.c, e.paths());
    assert_eq!(p.iterations, 1);

    let cl = climate(
        PresentDamage::OfState(Smooth::Identity),
        EmissionKernel::Exponential {
            scale: 1.0,
            rate: 1.0,
        },
    );
    let p = foc_solve(&cl, &e, &det, &FocConfig::with_eps(0.2)).unwrap();
    assert_eq!(p.iterations, 1);
    let nodes: Vec<usize> = (0..=64).collect();
    let el = elasticity(&cl, &e, &det, &nodes).unwrap();
    for i in nodes {
        for j in 0..e.len() {
            let expected = e.path(j)[i] + 0.2 * el.c.get(j, i).unwrap();
            assert!((p.c.get(j, i) - expected).abs() < 1e-15);
        }
    }

    let grid = TimeGrid::new(1.0, 256).unwrap();
    let flat = BrownianEnsemble::from_paths(hysteresis::PathMatrix::zeros(grid, 1), 0).unwrap();
    let p = foc_solve(
        &Midpoint,
        &flat,
        &Deterministic::new(1),
        &FocConfig::with_eps(0.1),
    )
    .unwrap();
    for i in 0..=256 {
        let c = p.c.get(0, i);
        if i < 128 {
            assert!((c + 0.2).abs() < 1e-12, "node {i}: {c}");
        } else if i > 128 {
            assert!(c.abs() < 1e-12, "node {i}: {c}");
        }
    }
}

#[test]
fn state_dependent_foc_iterates_to_fixed_point() {
    let e = ensemble(32, 100, 15);
    let h = StateDependent::new(Smooth::Sin);
    let eps = 0.3;
    let p = foc_solve(
        &h,
        &e,
        &Deterministic::new(e.len()),
        &FocConfig::with_eps(eps),
    )
    .unwrap();
    assert!(p.iterations > 1);
    for j in 0..e.len() {
        for i in 0..=32 {
            let (c, w) = (p.c.get(j, i), e.path(j)[i]);
            assert!((c - (w - eps * c.cos())).abs() < 1e-11);
        }
    }
    // c = w + 3c has no attracting fixed point
    let diverging = StateDependent::new(Smooth::Custom(std::sync::Arc::new(|x| {
        [-1.5 * x * x, -3.0 * x, -3.0, 0.0]
    })));
    assert!(matches!(
        foc_solve(
            &diverging,
            &e,
            &Deterministic::new(e.len()),
            &FocConfig {
                eps: 1.0,
                damping: 1.0,
                ..Default::default()
            }
        ),
        Err(hysteresis::Error::NoConvergence { .. })
    ));
}

#[test]
fn policy_coefficient_examples() {
    let e = ensemble(64, 200, 16);
    let det = Deterministic::new(e.len());
    let nodes = [10, 30, 50];
    let zero = climate(PresentDamage::Zero, EmissionKernel::Zero);
    let p = foc_solve(&zero, &e, &det, &FocConfig::with_eps(0.3)).unwrap();
    let pc = policy_coefficients(
        &zero,
        0.3,
        &p.c,
        &e,
        &det,
        &nodes,
        &DynamicsOptions::default(),
    )
    .unwrap();
    assert!(pc
        .coefficients
        .drift
        .columns()
        .all(|(_, c)| c.iter().all(|v| *v == 0.0)));
    assert!(pc
        .coefficients
        .diffusion
        .columns()
        .all(|(_, c)| c.iter().all(|v| *v == 1.0)));

    let eps = 0.3;
    let h = StateDependent::new(Smooth::Sin);
    let p = foc_solve(&h, &e, &det, &FocConfig::with_eps(eps)).unwrap();
    let pc =
        policy_coefficients(&h, eps, &p.c, &e, &det, &nodes, &DynamicsOptions::default()).unwrap();
    for &i in &nodes {
        for j in 0..e.len() {
            let c = p.c.get(j, i);
            let den = 1.0 - eps * c.sin();
            let beta = 1.0 / den;
            // f''' = -cos
            let alpha = 0.5 * eps * c.cos() * beta * beta / den;
            assert!((pc.coefficients.diffusion.get(j, i).unwrap() - beta).abs() < 1e-12);
            assert!((pc.coefficients.drift.get(j, i).unwrap() - alpha).abs() < 1e-12);
        }
    }
    let cond = Deterministic::new(e.len());
    assert!(policy_coefficients(
        &Cumulative,
        0.1,
        e.paths(),
        &e,
        &cond,
        &nodes,
        &DynamicsOptions::default()
    )
    .is_err());
}

#[test]
fn climate_policy_coefficients_match_closed_form() {
    let e = ensemble(128, 300, 17);
    let g = *e.grid();
    let det = Deterministic::new(e.len());
    let eps = 0.2;
    let h = climate(
        PresentDamage::OfState(Smooth::Sin),
        EmissionKernel::Exponential {
            scale: 1.0,
            rate: 1.0,
        },
    );
    let p = foc_solve(&h, &e, &det, &FocConfig::with_eps(eps)).unwrap();
    let nodes = [20, 64, 100];
    let pc =
        policy_coefficients(&h, eps, &p.c, &e, &det, &nodes, &DynamicsOptions::default()).unwrap();
    for &i in &nodes {
        // Σ_{m>=i} e^{-(t_m - t_i)} Δt
        let tail: f64 = (i..128)
            .map(|m| (-(g.time(m) - g.time(i))).exp())
            .sum::<f64>()
            * g.dt();
        for j in 0..e.len() {
            let w = e.path(j)[i];
            let beta = 1.0 - eps * w.cos();
            let alpha = -eps * (-0.5 * w.sin() + tail - 1.0);
            assert!((pc.coefficients.diffusion.get(j, i).unwrap() - beta).abs() < 1e-12);
            assert!((pc.coefficients.drift.get(j, i).unwrap() - alpha).abs() < 1e-12);
        }
    }
}

#[test]
fn deterministic_elasticity_examples() {
    let g = TimeGrid::new(1.0, 64).unwrap();
    let opts = DynamicsOptions::default();
    let d = deterministic_elasticity(&Cumulative, 1.0, |_| 0.0, &g, &opts).unwrap();
    assert!(d.c.iter().all(|c| (c + 1.0).abs() <= g.dt() + 1e-12));
    assert!(d.dc_dt.iter().all(|v| v.abs() < 1e-12));
    let zero = climate(PresentDamage::Zero, EmissionKernel::Zero);
    let d = deterministic_elasticity(&zero, 0.5, |x| -x, &g, &opts).unwrap();
    assert!(d.c.iter().chain(&d.dc_dt).all(|v| *v == 0.0));
    let d = deterministic_elasticity(
        &StateDependent::new(Smooth::Sin),
        0.7,
        |_| 0.0,
        &g,
        &DynamicsOptions::numeric(),
    )
    .unwrap();
    assert!(d.dc_dt.iter().all(|v| v.abs() < 1e-9));
    // moving optimum: C = -cos(θ), dC/dt = sin(θ) b
    let d = deterministic_elasticity(&StateDependent::new(Smooth::Sin), 0.2, |_| 1.0, &g, &opts)
        .unwrap();
    for (th, v) in d.theta.iter().zip(&d.dc_dt) {
        assert!((v - th.sin()).abs() < 1e-12);
    }
    let fd: Vec<f64> = d.c.windows(2).map(|c| (c[1] - c[0]) / g.dt()).collect();
    assert!(fd
        .iter()
        .zip(&d.dc_dt)
        .all(|(a, b)| (a - b).abs() < 2.0 * g.dt()));
}

#[test]
fn small_eps_examples() {
    let e = ensemble(32, 2000, 18);
    let nodes: Vec<usize> = (0..32).collect();
    let cond = regression(&e, &nodes, Basis::standard(), 4);
    let base = FocConfig::default();
    let zero = climate(PresentDamage::Zero, EmissionKernel::Zero);
    let r = small_eps_check(&zero, &[0.1, 0.05], &e, &cond, &base).unwrap();
    assert!(r.errors.iter().all(|v| *v == 0.0));
    assert!(r.order.is_nan());
    let linear = climate(
        PresentDamage::OfState(Smooth::Identity),
        EmissionKernel::Exponential {
            scale: 1.0,
            rate: 1.0,
        },
    );
    let r = small_eps_check(&linear, &[0.1, 0.05, 0.025], &e, &cond, &base).unwrap();
    assert!(r.errors.iter().all(|v| *v < 1e-12), "{r:?}");
    let h = KernelAverage::new(Smooth2::Product, Kernel::constant(1.0));
    let r = small_eps_check(&h, &[0.1, 0.05, 0.025], &e, &cond, &base).unwrap();
    assert!(r.order >= 1.9, "{r:?}");
}

#[test]
fn local_regression_drops_the_ito_drift_of_curved_processes() {
    let e = ensemble(128, 4000, 31);
    let g = *e.grid();
    let centers = vec![64];
    let nodes = window_nodes(&g, &centers, DEFAULT_WINDOW / 2 + DEFAULT_WINDOW, 1);
    let x = NodeMatrix::from_row_fn(g, nodes.clone(), e.len(), |j, row| {
        for (k, &i) in nodes.iter().enumerate() {
            row[k] = -e.path(j)[i].cos();
        }
    })
    .unwrap();
    // E[Δx | F_i] / Δt = cos(w_i) (1 - e^{-Δt/2}) / Δt, near cos(w_i) / 2
    let dt = g.dt();
    let predicted = ProcessCoefficients {
        drift: NodeMatrix::from_row_fn(g, nodes.clone(), e.len(), |j, row| {
            for (k, &i) in nodes.iter().enumerate() {
                row[k] = e.path(j)[i].cos() * (1.0 - (-0.5 * dt).exp()) / dt;
            }
        })
        .unwrap(),
        diffusion: NodeMatrix::from_row_fn(g, nodes.clone(), e.len(), |j, row| {
            for (k, &i) in nodes.iter().enumerate() {
                row[k] = e.path(j)[i].sin() * (-0.5 * dt).exp();
            }
        })
        .unwrap(),
    };
    let batches = Deterministic::new(e.len()).batches();
    let local = check_coefficients_with(Estimator::LocalRegression, &x, &predicted, &e, &centers, DEFAULT_WINDOW, &batches).unwrap();
    let cov = check_coefficients_with(Estimator::Covariation, &x, &predicted, &e, &centers, DEFAULT_WINDOW, &batches).unwrap();
    // the level regressor soaks up the Itô correction
    assert!(local[0].empirical_drift.mean.abs() < 0.1, "{:?}", local[0]);
    assert!(local[0].predicted_drift > 0.35);
    assert!(cov[0].passes(3.0, 1e-9), "{:?}", cov[0]);
}
