//! Mueller and Hartree–Fock interaction energies and closed-form gradients.
//!
//! Both functionals share the Hartree term `1/2 sum (ab|cd) n_ab n_cd` over
//! the spin-summed density. Hartree–Fock exchanges with the density itself;
//! Mueller exchanges with its matrix square root `S = gamma^(1/2)`, which is
//! the basis-free statement of the natural-orbital weight
//! `sqrt(eta_p eta_q)`. Differentiating through the square root uses the
//! Sylvester relation `dgamma = S dS + dS S`, i.e. in the natural-orbital
//! frame `dS_pq = dgamma_pq / (sqrt(eta_p) + sqrt(eta_q))` — singular when
//! two occupations vanish, which is why the caller gates occupations away
//! from integers first.

use super::{EnergyReport, FunctionalError};
use crate::mat::{Mat, Vec64};
use crate::models::{Interaction, ManyBodyModel, TwoBodyTensor};
use crate::rdm::{DensityMatrix, Spin, SPINS};

/// `sum_{abcd} (ab|cd) A_ab B_cd`.
pub(super) fn coulomb_contraction(tensor: &TwoBodyTensor, a: &Mat, b: &Mat) -> f64 {
    let n = tensor.n_orbitals();
    let mut acc = 0.0;
    for p in 0..n {
        for q in 0..n {
            let apq = a[(p, q)];
            if apq == 0.0 {
                continue;
            }
            for r in 0..n {
                for s in 0..n {
                    acc += tensor.get(p, q, r, s) * apq * b[(r, s)];
                }
            }
        }
    }
    acc
}

/// Exchange contraction `sum_{abcd} (ab|cd) A_ad A_cb`.
pub(super) fn exchange_contraction(tensor: &TwoBodyTensor, a: &Mat) -> f64 {
    let n = tensor.n_orbitals();
    let mut acc = 0.0;
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    acc += tensor.get(p, q, r, s) * a[(p, s)] * a[(r, q)];
                }
            }
        }
    }
    acc
}

/// Coulomb matrix `J[P]_xy = sum_cd (xy|cd) P_cd`.
fn coulomb_matrix(tensor: &TwoBodyTensor, p: &Mat) -> Mat {
    let n = tensor.n_orbitals();
    let mut out = Mat::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            let mut acc = 0.0;
            for c in 0..n {
                for d in 0..n {
                    acc += tensor.get(x, y, c, d) * p[(c, d)];
                }
            }
            out[(x, y)] = acc;
        }
    }
    out
}

/// Exchange matrix `K[P]_xy = sum_cb (xb|cy) P_cb`.
fn exchange_matrix(tensor: &TwoBodyTensor, p: &Mat) -> Mat {
    let n = tensor.n_orbitals();
    let mut out = Mat::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            let mut acc = 0.0;
            for c in 0..n {
                for b in 0..n {
                    acc += tensor.get(x, b, c, y) * p[(c, b)];
                }
            }
            out[(x, y)] = acc;
        }
    }
    out
}

/// Clamp to `[0, 1]` and snap eigenvalue noise at the integers to exactly
/// 0 or 1: the square root amplifies a 1e-16 residue to 1e-8, which would
/// spoil the exact agreement with Hartree-Fock on idempotent input.
fn clamped_occupations(gamma: &DensityMatrix, spin: Spin) -> Vec<f64> {
    gamma
        .spectral(spin)
        .occupations
        .iter()
        .map(|&e| {
            let c = e.clamp(0.0, 1.0);
            if c <= 1e-12 {
                0.0
            } else if c >= 1.0 - 1e-12 {
                1.0
            } else {
                c
            }
        })
        .collect()
}

/// Matrix square root of one spin block through its natural orbitals, with
/// occupations clamped to absorb eigenvalue noise at the domain boundary.
fn sqrt_block(gamma: &DensityMatrix, spin: Spin) -> Mat {
    let spec = gamma.spectral(spin);
    let eta = clamped_occupations(gamma, spin);
    let roots = Vec64::from_iterator(eta.len(), eta.iter().map(|&e| e.sqrt()));
    &spec.orbitals * Mat::from_diagonal(&roots) * spec.orbitals.transpose()
}

pub(super) fn mueller_energy(
    gamma: &DensityMatrix,
    model: &ManyBodyModel,
) -> Result<EnergyReport, FunctionalError> {
    let t = super::one_body_energy(gamma, model)?;
    match &model.interaction {
        Interaction::LocalU { u } => {
            let n = gamma.n_spatial();
            // sqrt-density diagonal s_i = sum_p sqrt(eta_p) u_ip^2 per spin
            let mut doubles = vec![0.0; n];
            let mut same_spin = [vec![0.0; n], vec![0.0; n]];
            for spin in SPINS {
                let spec = gamma.spectral(spin);
                let eta = clamped_occupations(gamma, spin);
                for i in 0..n {
                    let mut s_i = 0.0;
                    for (p, &e) in eta.iter().enumerate() {
                        let c = spec.orbitals[(i, p)];
                        s_i += e.sqrt() * c * c;
                    }
                    let n_i = gamma.block(spin)[(i, i)];
                    same_spin[spin as usize][i] = 0.5 * (n_i * n_i - s_i * s_i);
                }
            }
            for i in 0..n {
                doubles[i] = gamma.block(Spin::Up)[(i, i)] * gamma.block(Spin::Down)[(i, i)]
                    + same_spin[0][i]
                    + same_spin[1][i];
            }
            let w = u * doubles.iter().sum::<f64>();
            Ok(EnergyReport::assemble(t, w, model.core_energy, Some(doubles)))
        }
        Interaction::FullTensor(tensor) => {
            let total = gamma.block(Spin::Up) + gamma.block(Spin::Down);
            let hartree = 0.5 * coulomb_contraction(tensor, &total, &total);
            let mut exchange = 0.0;
            for spin in SPINS {
                let s = sqrt_block(gamma, spin);
                exchange += 0.5 * exchange_contraction(tensor, &s);
            }
            Ok(EnergyReport::assemble(
                t,
                hartree - exchange,
                model.core_energy,
                None,
            ))
        }
    }
}

pub(super) fn hartree_fock_gradient(
    gamma: &DensityMatrix,
    model: &ManyBodyModel,
) -> Result<[Mat; 2], FunctionalError> {
    let n = gamma.n_spatial();
    match &model.interaction {
        Interaction::LocalU { u } => {
            let mut out = [model.one_body.clone(), model.one_body.clone()];
            for spin in SPINS {
                let other = match spin {
                    Spin::Up => Spin::Down,
                    Spin::Down => Spin::Up,
                };
                for i in 0..n {
                    out[spin as usize][(i, i)] += u * gamma.block(other)[(i, i)];
                }
            }
            Ok(out)
        }
        Interaction::FullTensor(tensor) => {
            let total = gamma.block(Spin::Up) + gamma.block(Spin::Down);
            let j = coulomb_matrix(tensor, &total);
            let mut out = [Mat::zeros(n, n), Mat::zeros(n, n)];
            for spin in SPINS {
                let k = exchange_matrix(tensor, gamma.block(spin));
                out[spin as usize] = &model.one_body + &j - k;
            }
            Ok(out)
        }
    }
}

pub(super) fn mueller_gradient(
    gamma: &DensityMatrix,
    model: &ManyBodyModel,
) -> Result<[Mat; 2], FunctionalError> {
    let n = gamma.n_spatial();
    let mut out = [Mat::zeros(n, n), Mat::zeros(n, n)];
    for spin in SPINS {
        let spec = gamma.spectral(spin);
        let eta = clamped_occupations(gamma, spin);
        let s = sqrt_block(gamma, spin);
        // dW_x/dS with W_x = exchange contraction of S
        let g = match &model.interaction {
            Interaction::LocalU { u } => {
                let mut g = Mat::zeros(n, n);
                for i in 0..n {
                    g[(i, i)] = 2.0 * u * s[(i, i)];
                }
                g
            }
            Interaction::FullTensor(tensor) => exchange_matrix(tensor, &s) * 2.0,
        };
        // chain rule through the square root in the natural-orbital frame
        let g_no = spec.orbitals.transpose() * g * &spec.orbitals;
        let mut y_no = Mat::zeros(n, n);
        for p in 0..n {
            for q in 0..n {
                y_no[(p, q)] = g_no[(p, q)] / (eta[p].sqrt() + eta[q].sqrt());
            }
        }
        let y = &spec.orbitals * y_no * spec.orbitals.transpose();
        out[spin as usize] = &model.one_body - y * 0.5;
    }
    // Hartree term, common to both spins
    let hartree = match &model.interaction {
        Interaction::LocalU { u } => {
            let mut j = Mat::zeros(n, n);
            for i in 0..n {
                j[(i, i)] =
                    u * (gamma.block(Spin::Up)[(i, i)] + gamma.block(Spin::Down)[(i, i)]);
            }
            j
        }
        Interaction::FullTensor(tensor) => {
            let total = gamma.block(Spin::Up) + gamma.block(Spin::Down);
            coulomb_matrix(tensor, &total)
        }
    };
    for g in &mut out {
        *g += &hartree;
    }
    Ok(out)
}
