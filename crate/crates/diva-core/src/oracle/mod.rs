//! Independent ground-truth generators: exact diagonalization on small
//! systems, the non-interacting band energy, and the half-filled-chain
//! reference from Bessel-function quadrature.

mod bessel;
mod fci;

pub use fci::{apply_single, combinations, FciProblem};

use crate::mat::Mat;
use crate::models::{Interaction, LatticeSpec, ManyBodyModel, ModelError};
use crate::rdm::{DensityMatrix, RdmError};
use thiserror::Error;

/// Largest many-body dimension attempted by exact diagonalization.
pub const DIMENSION_CAP: usize = 4_000_000;
/// Orbital cap for full-tensor exact diagonalization.
pub const FULL_TENSOR_ORBITAL_CAP: usize = 8;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("many-body dimension {dimension} exceeds the cap {cap}")]
    Dimension { dimension: usize, cap: usize },
    #[error("full-tensor exact diagonalization handles at most {cap} orbitals, got {got}")]
    TooManyOrbitals { got: usize, cap: usize },
    #[error("quadrature did not converge: {message}")]
    Quadrature { message: String },
    #[error("invalid argument: {message}")]
    Domain { message: String },
    #[error(transparent)]
    Rdm(#[from] RdmError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Ground-state data from exact diagonalization.
#[derive(Debug)]
pub struct FciResult {
    pub energy: f64,
    pub one_rdm: DensityMatrix,
    /// Per-site `<n_up n_down>`.
    pub double_occ: Vec<f64>,
    /// Many-body basis size.
    pub dimension: usize,
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc.min(usize::MAX as u128) as usize
}

/// Exact ground state of the full many-body Hamiltonian.
pub fn fci_ground_state(model: &ManyBodyModel) -> Result<FciResult, OracleError> {
    let n = model.n_spatial;
    let dimension = binomial(n, model.n_electrons.0) * binomial(n, model.n_electrons.1);
    if dimension == 0 {
        return Err(OracleError::Domain {
            message: format!(
                "no determinants for {:?} electrons on {n} orbitals",
                model.n_electrons
            ),
        });
    }
    if dimension > DIMENSION_CAP {
        return Err(OracleError::Dimension {
            dimension,
            cap: DIMENSION_CAP,
        });
    }
    if matches!(model.interaction, Interaction::FullTensor(_)) && n > FULL_TENSOR_ORBITAL_CAP {
        return Err(OracleError::TooManyOrbitals {
            got: n,
            cap: FULL_TENSOR_ORBITAL_CAP,
        });
    }

    let problem = FciProblem::build(model);
    let (e0, ground) = fci::lowest_eigenpair(&problem, 250);
    let [up, dn] = problem.one_rdm(&ground, n);
    let double_occ = problem.double_occupations(&ground, n);
    Ok(FciResult {
        energy: e0 + model.core_energy,
        one_rdm: DensityMatrix::new(up, dn)?,
        double_occ,
        dimension,
    })
}

/// Ground-state energy of the non-interacting chain: the sum of the lowest
/// single-particle levels per spin. Periodic chains use the band values
/// `-2t cos(2 pi m / L)`; open chains diagonalize the hopping matrix.
pub fn tight_binding_energy(spec: &LatticeSpec) -> Result<f64, ModelError> {
    let per_spin = spec.electrons_per_spin()?;
    let l = spec.n_sites;
    if l < 2 {
        return Err(ModelError::TooSmall(l));
    }
    let mut levels: Vec<f64> = if spec.periodic {
        (0..l)
            .map(|m| -2.0 * spec.hopping * (2.0 * std::f64::consts::PI * m as f64 / l as f64).cos())
            .collect()
    } else {
        let mut t = Mat::zeros(l, l);
        for i in 0..l - 1 {
            t[(i, i + 1)] = -spec.hopping;
            t[(i + 1, i)] = -spec.hopping;
        }
        let (vals, _) = crate::mat::sorted_symmetric_eigen(&t);
        vals.iter().copied().collect()
    };
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(2.0 * levels[..per_spin].iter().sum::<f64>())
}

fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64, OracleError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(OracleError::Quadrature {
            message: format!("recursion exhausted on [{a}, {b}]"),
        });
    }
    let l = adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, OracleError> {
    // split into unit-length panels so oscillations never hide from the
    // error estimate
    let panels = ((b - a).ceil() as usize).max(1);
    let mut acc = 0.0;
    for p in 0..panels {
        let x0 = a + (b - a) * p as f64 / panels as f64;
        let x1 = a + (b - a) * (p + 1) as f64 / panels as f64;
        let fa = f(x0);
        let fb = f(x1);
        let fm = f(0.5 * (x0 + x1));
        let whole = (x1 - x0) / 6.0 * (fa + 4.0 * fm + fb);
        acc += adaptive_simpson(&f, x0, x1, fa, fm, fb, whole, tol / panels as f64, 40)?;
    }
    Ok(acc)
}

/// Exact ground-state energy per site of the half-filled uniform chain as
/// a function of `U/t`, from quadrature of the Bessel-function integrand
/// `J0(w) J1(w) / (w (1 + exp(w U / 2)))`. Absolute accuracy 1e-8.
pub fn lieb_wu_half_filling(u_over_t: f64) -> Result<f64, OracleError> {
    if !(u_over_t >= 0.0) {
        return Err(OracleError::Domain {
            message: format!("U/t = {u_over_t} must be nonnegative"),
        });
    }
    if u_over_t == 0.0 {
        // exact non-interacting limit of the integral
        return Ok(-4.0 / std::f64::consts::PI);
    }
    // beyond the cutoff the Fermi factor is below 1e-16
    let cutoff = (74.0 / u_over_t).max(40.0);
    if cutoff > 20_000.0 {
        return Err(OracleError::Quadrature {
            message: format!("U/t = {u_over_t} too small for the integration window"),
        });
    }
    let integrand = |w: f64| -> f64 {
        if w < 1e-12 {
            return 0.25; // J1(w)/w -> 1/2, Fermi factor -> 1/2
        }
        bessel::j0(w) * bessel::j1(w) / (w * (1.0 + (0.5 * w * u_over_t).exp()))
    };
    let value = integrate(integrand, 0.0, cutoff, 1e-9)?;
    Ok(-4.0 * value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_hubbard;
    use crate::rdm::{classify, DomainTag, Spin, TOL_BOUNDARY};

    fn dimer_model(u: f64, t: f64) -> ManyBodyModel {
        build_hubbard(&LatticeSpec {
            n_sites: 2,
            hopping: t,
            coulomb: u,
            periodic: false,
            filling: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn dimer_singlet_energy_closed_form() {
        // 2x2 singlet block gives E = (U - sqrt(U^2 + 16 t^2)) / 2
        let r = fci_ground_state(&dimer_model(4.0, 1.0)).unwrap();
        let exact = (4.0 - 32.0_f64.sqrt()) / 2.0;
        assert!((r.energy - exact).abs() < 1e-10, "E = {}", r.energy);
        assert_eq!(r.dimension, 4);
    }

    #[test]
    fn non_interacting_fci_matches_tight_binding() {
        for l in [2usize, 4, 6] {
            let spec = LatticeSpec {
                n_sites: l,
                hopping: 1.0,
                coulomb: 0.0,
                periodic: l > 2,
                filling: 1.0,
            };
            let model = build_hubbard(&spec).unwrap();
            let r = fci_ground_state(&model).unwrap();
            let tb = tight_binding_energy(&spec).unwrap();
            assert!(
                (r.energy - tb).abs() < 1e-10,
                "L = {l}: FCI {} vs band {}",
                r.energy,
                tb
            );
        }
    }

    #[test]
    fn atomic_limit_kills_double_occupation() {
        let model = build_hubbard(&LatticeSpec {
            n_sites: 4,
            hopping: 0.0,
            coulomb: 6.0,
            periodic: false,
            filling: 1.0,
        })
        .unwrap();
        let r = fci_ground_state(&model).unwrap();
        assert!(r.energy.abs() < 1e-10);
        for d in &r.double_occ {
            assert!(d.abs() < 1e-10);
        }
    }

    #[test]
    fn fci_rdm_is_representable() {
        let r = fci_ground_state(&dimer_model(4.0, 1.0)).unwrap();
        let class = classify(&r.one_rdm, TOL_BOUNDARY);
        assert_ne!(class.tag, DomainTag::Outside);
        assert!((r.one_rdm.trace(Spin::Up) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hellmann_feynman_double_occupation() {
        // sum_i <n_up n_dn> = dE/dU by finite difference
        let du = 1e-5;
        let e_plus = fci_ground_state(&dimer_model(4.0 + du, 1.0)).unwrap().energy;
        let e_minus = fci_ground_state(&dimer_model(4.0 - du, 1.0)).unwrap().energy;
        let slope = (e_plus - e_minus) / (2.0 * du);
        let d: f64 = fci_ground_state(&dimer_model(4.0, 1.0))
            .unwrap()
            .double_occ
            .iter()
            .sum();
        assert!((slope - d).abs() < 1e-4, "dE/dU = {slope}, sum D = {d}");
    }

    #[test]
    fn tight_binding_examples() {
        let dimer = LatticeSpec {
            n_sites: 2,
            hopping: 1.0,
            coulomb: 0.0,
            periodic: false,
            filling: 1.0,
        };
        assert!((tight_binding_energy(&dimer).unwrap() + 2.0).abs() < 1e-12);

        let ring = LatticeSpec {
            n_sites: 4,
            hopping: 1.0,
            coulomb: 0.0,
            periodic: true,
            filling: 1.0,
        };
        assert!((tight_binding_energy(&ring).unwrap() + 4.0).abs() < 1e-12);
    }

    #[test]
    fn tight_binding_converges_to_band_integral() {
        // filled band integral: E/site -> -4t/pi
        let spec = LatticeSpec {
            n_sites: 202,
            hopping: 1.0,
            coulomb: 0.0,
            periodic: true,
            filling: 1.0,
        };
        let e = tight_binding_energy(&spec).unwrap() / 202.0;
        assert!((e + 4.0 / std::f64::consts::PI).abs() < 1e-3, "e = {e}");
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let model = build_hubbard(&LatticeSpec {
            n_sites: 16,
            hopping: 1.0,
            coulomb: 1.0,
            periodic: true,
            filling: 1.0,
        })
        .unwrap();
        assert!(matches!(
            fci_ground_state(&model),
            Err(OracleError::Dimension { .. })
        ));
    }

    #[test]
    fn lieb_wu_limits() {
        let e0 = lieb_wu_half_filling(0.0).unwrap();
        assert!((e0 + 4.0 / std::f64::consts::PI).abs() < 1e-12);
        let e_large = lieb_wu_half_filling(200.0).unwrap();
        assert!(e_large < 0.0 && e_large > -0.03, "e(200) = {e_large}");
        // monotone increasing in U
        let mut prev = e0;
        for u in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let e = lieb_wu_half_filling(u).unwrap();
            assert!(e > prev, "e({u}) = {e} not above {prev}");
            prev = e;
        }
    }
}
