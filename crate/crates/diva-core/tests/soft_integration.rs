//! Self-consistency loop invariants: effective-system idempotency,
//! diagonal matching, gauge behavior, and chemical-potential alignment.

mod common;

use common::*;
use diva_core::functionals::FunctionalSpec;
use diva_core::rdm::{idempotency_residual, site_occupations, Spin};
use diva_core::soft::{pks_solve, soft_diva_run, SoftConfig};
use diva_core::solver::DivaConfig;

#[test]
fn effective_system_is_idempotent_while_iterates_are_not() {
    let model = chain(6, 4.0, 1.0 / 3.0, true);
    let fspec = FunctionalSpec {
        fd_step: 1e-3,
        ..FunctionalSpec::tows_pastor()
    };
    let cfg = SoftConfig::default();
    let out = soft_diva_run(&model, &fspec, &cfg, &[0.0; 6]).unwrap();
    assert!(out.converged());

    let pks = pks_solve(&model, &out.state.v_hxc).unwrap();
    assert!(idempotency_residual(&pks.gamma) < 1e-10);
    // the interacting iterate is correlated, hence not idempotent
    assert!(idempotency_residual(&out.gamma) > 1e-3);
    // but the two share the same diagonal
    let [target, _] = site_occupations(&out.gamma);
    for (a, b) in pks.n_pks.iter().zip(&target) {
        assert!((a - b).abs() < 1e-8, "diagonals differ: {a} vs {b}");
    }
}

#[test]
fn constant_potential_shift_is_a_gauge() {
    let model = chain(6, 2.0, 1.0 / 3.0, true);
    let a = pks_solve(&model, &[0.0; 6]).unwrap();
    let b = pks_solve(&model, &[1.3; 6]).unwrap();
    assert!((b.mu_pks - a.mu_pks - 1.3).abs() < 1e-10);
    assert!(diva_core::rdm::frobenius_distance(&a.gamma, &b.gamma).unwrap() < 1e-10);
}

#[test]
fn chemical_potentials_align_at_convergence() {
    let model = chain(6, 4.0, 1.0 / 3.0, true);
    let fspec = FunctionalSpec {
        fd_step: 1e-3,
        ..FunctionalSpec::tows_pastor()
    };
    let out = soft_diva_run(&model, &fspec, &SoftConfig::default(), &[0.0; 6]).unwrap();
    assert!(out.converged());
    let last = out.trace.last().unwrap();
    let mu_int = last.mu_interacting.expect("interacting gradient available");
    // outer threshold is sqrt(energy_tol); alignment holds within 10x of it
    assert!(
        (mu_int - last.mu_pks).abs() < 10.0 * SoftConfig::default().diva.energy_tol.sqrt(),
        "mu = {mu_int} vs mu_pks = {}",
        last.mu_pks
    );
}

#[test]
fn non_interacting_loop_returns_fermi_sea() {
    let model = chain(6, 0.0, 1.0 / 3.0, true);
    let out = soft_diva_run(
        &model,
        &FunctionalSpec::tows_pastor(),
        &SoftConfig::default(),
        &[0.0; 6],
    )
    .unwrap();
    assert!(out.converged());
    assert!(idempotency_residual(&out.gamma) < 1e-8);
    let tb = diva_core::oracle::tight_binding_energy(&diva_core::models::LatticeSpec {
        n_sites: 6,
        hopping: 1.0,
        coulomb: 0.0,
        periodic: true,
        filling: 1.0 / 3.0,
    })
    .unwrap();
    assert!((out.report.total - tb).abs() < 1e-8);
    // converged potential is a pure constant
    let mean = out.state.v_hxc.iter().sum::<f64>() / 6.0;
    for v in &out.state.v_hxc {
        assert!((v - mean).abs() < 1e-8);
    }
}

#[test]
fn outer_cap_reports_best_state() {
    let model = chain(6, 4.0, 1.0 / 3.0, true);
    let out = soft_diva_run(
        &model,
        &FunctionalSpec::tows_pastor(),
        &SoftConfig {
            max_outer: 1,
            ..SoftConfig::default()
        },
        &[0.0; 6],
    )
    .unwrap();
    assert!(!out.converged());
    assert_eq!(out.state.iteration, 1);
    assert_eq!(out.trace.len(), 1);
}

#[test]
fn damped_mixing_still_converges() {
    let model = chain(6, 4.0, 1.0 / 3.0, true);
    let fspec = FunctionalSpec {
        fd_step: 1e-3,
        ..FunctionalSpec::tows_pastor()
    };
    let full = soft_diva_run(&model, &fspec, &SoftConfig::default(), &[0.0; 6]).unwrap();
    let damped = soft_diva_run(
        &model,
        &fspec,
        &SoftConfig {
            mixing: 0.5,
            ..SoftConfig::default()
        },
        &[0.0; 6],
    )
    .unwrap();
    assert!(damped.converged());
    assert!((full.report.total - damped.report.total).abs() < 1e-5);
}

#[test]
fn pks_occupations_sum_to_electron_count() {
    let model = chain(8, 3.0, 0.75, true);
    let sol = pks_solve(&model, &[0.2, -0.1, 0.0, 0.3, 0.2, -0.1, 0.0, 0.3]).unwrap();
    let total: f64 = sol.n_pks.iter().sum();
    assert!((total - 3.0).abs() < 1e-10);
    assert!(idempotency_residual(&sol.gamma) < 1e-10);
    // spin-up block diagonal defines n_pks
    for (i, &n) in sol.n_pks.iter().enumerate() {
        assert!((n - sol.gamma.block(Spin::Up)[(i, i)]).abs() < 1e-14);
    }
}
