//! Solver trajectories: domain safety, trace conservation, direction-mode
//! agreement, and trace serialization.

mod common;

use common::*;
use diva_core::functionals::FunctionalSpec;
use diva_core::rdm::{classify, DomainTag, Spin, SPINS, TOL_BOUNDARY};
use diva_core::solver::{
    boundary_search, diva_run, initial_guess, line_minimize, Direction, DivaConfig, DivaMode,
    Termination,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn boundary_search_lands_on_the_surface() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let cfg = DivaConfig::default();
    for _ in 0..40 {
        let n = 6;
        let gamma = restricted(random_interior_block(&mut rng, n, 0.2, 0.8));
        let mut dir = diva_core::mat::Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..1.0);
                dir[(i, j)] = v;
                dir[(j, i)] = v;
            }
        }
        let mean = (0..n).map(|i| dir[(i, i)]).sum::<f64>() / n as f64;
        for i in 0..n {
            dir[(i, i)] -= mean;
        }
        let b = boundary_search(&gamma, &[dir.clone(), dir], &cfg).unwrap();
        let class = classify(&b, TOL_BOUNDARY);
        assert!(
            class.pseudo_distance.abs() <= cfg.bracket_tol,
            "d = {}",
            class.pseudo_distance
        );
        // trace preserved along a traceless ray
        assert!((b.trace(Spin::Up) - gamma.trace(Spin::Up)).abs() < 1e-9);
    }
}

#[test]
fn line_step_lowers_mueller_dimer_below_mean_field() {
    let model = chain(2, 4.0, 1.0, false);
    let fspec = FunctionalSpec::mueller();
    let (start, _) = initial_guess(&model).unwrap();
    let e_hf = diva_core::functionals::energy_value(&start, &model, &fspec).unwrap();
    // one interpolation step along the masked direction
    let mut dir = start.block(Spin::Up).clone();
    dir[(0, 0)] = 0.0;
    dir[(1, 1)] = 0.0;
    let boundary = boundary_search(&start, &[dir.clone(), dir], &DivaConfig::default()).unwrap();
    let (z, gamma) = line_minimize(&start, &boundary, |g| {
        diva_core::functionals::energy_value(g, &model, &fspec)
    })
    .unwrap();
    let e = diva_core::functionals::energy_value(&gamma, &model, &fspec).unwrap();
    assert!(z > 0.0 && e < e_hf - 1e-3, "z = {z}, E = {e} vs HF {e_hf}");
}

#[test]
fn iterates_never_leave_the_domain() {
    // re-run mono steps manually and classify every accepted iterate
    let model = chain(6, 4.0, 1.0, true);
    let out = diva_run(
        &model,
        &FunctionalSpec::tows_pastor(),
        &DivaConfig::default(),
        None,
    )
    .unwrap();
    assert!(out.converged());
    assert_ne!(classify(&out.gamma, TOL_BOUNDARY).tag, DomainTag::Outside);
    // energy trace is non-increasing with the documented slack
    let energies: Vec<f64> = out.trace.records.iter().map(|r| r.energy).collect();
    for w in energies.windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
    // weights stay on the simplex at every iteration
    for r in &out.trace.records {
        let sum: f64 = r.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(r.weights.iter().all(|&w| w >= -1e-12));
    }
}

#[test]
fn conjugate_and_steepest_agree_on_regression_systems() {
    for (l, u, n) in [(6usize, 4.0, 1.0), (6, 1.0, 1.0 / 3.0), (4, 2.0, 0.5)] {
        let model = chain(l, u, n, l != 4);
        let cfg = DivaConfig::default();
        let cg = diva_run(&model, &FunctionalSpec::tows_pastor(), &cfg, None).unwrap();
        let sd = diva_run(
            &model,
            &FunctionalSpec::tows_pastor(),
            &DivaConfig {
                direction: Direction::SteepestDescent,
                ..cfg
            },
            None,
        )
        .unwrap();
        assert!(
            (cg.report.total - sd.report.total).abs() < 10.0 * cfg.energy_tol * u.max(1.0),
            "L={l} U={u} n={n}: CG {} vs SD {}",
            cg.report.total,
            sd.report.total
        );
    }
}

#[test]
fn conserve_n_holds_traces_to_tight_tolerance() {
    let model = chain(8, 6.0, 0.75, true);
    let out = diva_run(
        &model,
        &FunctionalSpec::tows_pastor(),
        &DivaConfig::default(),
        None,
    )
    .unwrap();
    for spin in SPINS {
        assert!(
            (out.gamma.trace(spin) - 3.0).abs() < 1e-9,
            "trace drifted to {}",
            out.gamma.trace(spin)
        );
    }
}

#[test]
fn iteration_cap_reports_max_iterations_with_best_state() {
    let model = chain(6, 4.0, 1.0, true);
    let out = diva_run(
        &model,
        &FunctionalSpec::tows_pastor(),
        &DivaConfig {
            max_iters: 1,
            ..DivaConfig::default()
        },
        None,
    )
    .unwrap();
    assert_eq!(out.termination, Termination::MaxIterations);
    assert!(!out.converged());
    // best-so-far state is still usable and in-domain
    assert_ne!(classify(&out.gamma, TOL_BOUNDARY).tag, DomainTag::Outside);
    assert!(out.trace.records.len() >= 2);
}

#[test]
fn trace_serializes_to_csv_and_json() {
    let model = chain(4, 3.0, 0.5, false);
    let out = diva_run(
        &model,
        &FunctionalSpec::tows_pastor(),
        &DivaConfig::default(),
        None,
    )
    .unwrap();
    let csv = out.trace.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "iter,energy,delta_energy,delta_rdm,mu");
    assert!(csv.lines().count() == out.trace.records.len() + 1);
    // iteration 0 has empty delta columns
    let first = csv.lines().nth(1).unwrap();
    assert!(first.starts_with("0,"));
    assert!(first.contains(",,"));

    let json = serde_json::to_value(&out.trace).unwrap();
    assert!(json["records"].as_array().unwrap().len() == out.trace.records.len());
}

#[test]
fn energy_report_serializes_expected_fields() {
    let model = chain(4, 3.0, 0.5, false);
    let out = diva_run(
        &model,
        &FunctionalSpec::tows_pastor(),
        &DivaConfig::default(),
        None,
    )
    .unwrap();
    let v = serde_json::to_value(&out.report).unwrap();
    for key in ["total", "one_body", "interaction", "mu", "double_occupation"] {
        assert!(v.get(key).is_some(), "missing field {key}");
    }
}

#[test]
fn multi_member_count_matches_trace() {
    let model = chain(4, 4.0, 0.5, false);
    let out = diva_run(
        &model,
        &FunctionalSpec::tows_pastor(),
        &DivaConfig {
            mode: DivaMode::Multi,
            ..DivaConfig::default()
        },
        None,
    )
    .unwrap();
    for r in &out.trace.records {
        assert_eq!(r.weights.len(), r.n_boundary_members + 1);
    }
}

#[test]
fn degenerate_frontier_is_flagged_deterministically() {
    let model = chain(4, 1.0, 1.0, true); // 2 electrons per spin in a 4-ring
    let (a, warn_a) = initial_guess(&model).unwrap();
    let (b, warn_b) = initial_guess(&model).unwrap();
    assert!(warn_a && warn_b);
    assert!(diva_core::rdm::frobenius_distance(&a, &b).unwrap() < 1e-15);
}

#[test]
fn mono_weights_grow_one_member_per_iteration() {
    let model = chain(6, 4.0, 1.0, true);
    let out = diva_run(
        &model,
        &FunctionalSpec::tows_pastor(),
        &DivaConfig::default(),
        None,
    )
    .unwrap();
    for r in &out.trace.records {
        assert_eq!(r.weights.len(), r.iter + 1);
        let sum: f64 = r.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "iteration {}", r.iter);
    }
}
