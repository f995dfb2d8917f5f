//! Functional-level properties: gradient consistency, relabeling
//! invariance, and double-occupation bounds.

mod common;

use common::*;
use diva_core::functionals::{
    self, evaluate, gradient, tows_pastor_double_occ, tows_pastor_site_data, FunctionalSpec,
};
use diva_core::mat::{frob_inner, Mat};
use diva_core::models::{Interaction, ManyBodyModel};
use diva_core::rdm::{DensityMatrix, Spin, SPINS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_traceless_symmetric(rng: &mut impl Rng, n: usize) -> Mat {
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = rng.random_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let mean = (0..n).map(|i| m[(i, i)]).sum::<f64>() / n as f64;
    for i in 0..n {
        m[(i, i)] -= mean;
    }
    let norm = frob_inner(&m, &m).sqrt();
    m / norm
}

#[test]
fn directional_derivative_matches_gradient_inner_product() {
    // (E[g + eps D] - E[g - eps D]) / 2 eps == <grad, D> within 1e-5 relative
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let eps = 1e-5;
    for spec in [
        FunctionalSpec::hartree_fock(),
        FunctionalSpec::mueller(),
        FunctionalSpec::tows_pastor(),
    ] {
        for trial in 0..8 {
            let n = rng.random_range(3..=5usize);
            let model = chain(n, rng.random_range(0.5..6.0), 0.0, false);
            // electron counts are irrelevant for evaluation; keep closed shell
            let gamma = restricted(random_interior_block(&mut rng, n, 0.2, 0.8));
            let delta = random_traceless_symmetric(&mut rng, n);
            let grad = gradient(&gamma, &model, &spec).unwrap();

            let perturb = |s: f64| -> f64 {
                let up = gamma.block(Spin::Up) + &delta * s;
                let dn = gamma.block(Spin::Down) + &delta * s;
                let g = DensityMatrix::new(up, dn).unwrap();
                evaluate(&g, &model, &spec).unwrap().total
            };
            let numeric = (perturb(eps) - perturb(-eps)) / (2.0 * eps);
            let analytic: f64 = SPINS
                .iter()
                .map(|&sp| frob_inner(&grad[sp as usize], &delta))
                .sum();
            let scale = numeric.abs().max(1e-3);
            assert!(
                (numeric - analytic).abs() / scale < 1e-5,
                "{:?} trial {trial}: directional {numeric} vs <grad, D> {analytic}",
                spec.kind
            );
        }
    }
}

#[test]
fn energy_is_invariant_under_site_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for spec in [
        FunctionalSpec::hartree_fock(),
        FunctionalSpec::mueller(),
        FunctionalSpec::tows_pastor(),
    ] {
        let n = 5;
        let model = chain(n, 3.0, 0.0, false);
        let gamma = restricted(random_interior_block(&mut rng, n, 0.1, 0.9));
        let before = evaluate(&gamma, &model, &spec).unwrap().total;

        // apply a random permutation to both the model and the matrix
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        let permute = |m: &Mat| {
            let mut out = Mat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    out[(perm[i], perm[j])] = m[(i, j)];
                }
            }
            out
        };
        let model_p = ManyBodyModel {
            one_body: permute(&model.one_body),
            ..model.clone()
        };
        let gamma_p = restricted(permute(gamma.block(Spin::Up)));
        let after = evaluate(&gamma_p, &model_p, &spec).unwrap().total;
        assert!(
            (before - after).abs() < 1e-12,
            "{:?}: {before} vs {after}",
            spec.kind
        );
    }
}

#[test]
fn tp_double_occupations_respect_pauli_caps() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..300 {
        let n = rng.random_range(2..=7usize);
        let block = random_representable_block(&mut rng, n);
        for d in tows_pastor_site_data(&block) {
            let v = tows_pastor_double_occ(&d).unwrap();
            assert!(v >= 0.0 && v <= d.n.max(0.0) + 1e-15, "D = {v} at n = {}", d.n);
        }
    }
}

#[test]
fn tp_energy_report_populates_site_doubles() {
    let model = chain(4, 5.0, 1.0, true);
    let gamma = restricted(random_interior_block(
        &mut ChaCha8Rng::seed_from_u64(43),
        4,
        0.3,
        0.7,
    ));
    let report = evaluate(&gamma, &model, &FunctionalSpec::tows_pastor()).unwrap();
    let doubles = report.double_occupation.unwrap();
    assert_eq!(doubles.len(), 4);
    let total: f64 = doubles.iter().sum();
    assert!((report.interaction - 5.0 * total).abs() < 1e-12);
}

#[test]
fn mueller_full_tensor_refuses_outside_matrices() {
    let text = "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n0.5 1 1 1 1\n-1.0 1 2 0 0\n";
    let model = diva_core::models::parse_fcidump(text).unwrap();
    assert!(matches!(model.interaction, Interaction::FullTensor(_)));
    let bad = restricted(Mat::from_diagonal(&diva_core::mat::Vec64::from_vec(vec![
        1.3, -0.3,
    ])));
    assert!(functionals::mueller_energy(&bad, &model).is_err());
}

#[test]
fn one_sided_diagonal_matches_symmetric_on_smooth_points() {
    // away from the half-filling kink the one-sided probe agrees with the
    // symmetric gradient diagonal to O(h)
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let model = chain(5, 3.0, 0.4, false);
    let gamma = restricted(random_interior_block(&mut rng, 5, 0.05, 0.35));
    let spec = FunctionalSpec::tows_pastor();
    let sym = gradient(&gamma, &model, &spec).unwrap();
    for forward in [true, false] {
        let one = functionals::diagonal_gradient_one_sided(&gamma, &model, &spec, forward).unwrap();
        for i in 0..5 {
            assert!(
                (one[i] - sym[0][(i, i)]).abs() < 50.0 * spec.fd_step,
                "site {i}: one-sided {} vs symmetric {}",
                one[i],
                sym[0][(i, i)]
            );
        }
    }
}
