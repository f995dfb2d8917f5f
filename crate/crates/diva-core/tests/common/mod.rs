//! Shared fixtures for the integration suites.

use diva_core::mat::{sorted_symmetric_eigen, Mat, Vec64};
use diva_core::models::{build_hubbard, LatticeSpec, ManyBodyModel};
use diva_core::rdm::DensityMatrix;
use rand::Rng;

pub fn chain(l: usize, u: f64, filling: f64, periodic: bool) -> ManyBodyModel {
    build_hubbard(&LatticeSpec {
        n_sites: l,
        hopping: 1.0,
        coulomb: u,
        periodic,
        filling,
    })
    .expect("admissible chain")
}

pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> Mat {
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = rng.random_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let (_, u) = sorted_symmetric_eigen(&m);
    u
}

/// Representable block with occupations drawn uniformly from `[0, 1]`.
pub fn random_representable_block(rng: &mut impl Rng, n: usize) -> Mat {
    let u = random_orthogonal(rng, n);
    let eta = Vec64::from_iterator(n, (0..n).map(|_| rng.random_range(0.0..1.0)));
    &u * Mat::from_diagonal(&eta) * u.transpose()
}

/// Representable block with occupations kept strictly inside `(lo, hi)`.
pub fn random_interior_block(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Mat {
    let u = random_orthogonal(rng, n);
    let eta = Vec64::from_iterator(n, (0..n).map(|_| rng.random_range(lo..hi)));
    &u * Mat::from_diagonal(&eta) * u.transpose()
}

/// Random idempotent block (projector on `k` random orbitals).
pub fn random_idempotent_block(rng: &mut impl Rng, n: usize) -> Mat {
    let u = random_orthogonal(rng, n);
    let k = rng.random_range(0..=n);
    let mut block = Mat::zeros(n, n);
    for col in 0..k {
        let c = u.column(col);
        block += &c * c.transpose();
    }
    block
}

pub fn restricted(block: Mat) -> DensityMatrix {
    DensityMatrix::restricted(block).expect("valid block")
}
