//! Many-body model construction: uniform Hubbard chains and molecular
//! Hamiltonians ingested from FCIDUMP files.

mod fcidump;
mod tensor;

pub use fcidump::{parse_fcidump, write_fcidump};
pub use tensor::TwoBodyTensor;

use crate::mat::Mat;
use crate::rdm::{DensityMatrix, Spin};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("filling {filling} on {sites} sites gives non-integer electrons per spin")]
    FillingError { filling: f64, sites: usize },
    #[error("FCIDUMP parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("FCIDUMP header error: {message}")]
    HeaderError { message: String },
    #[error("density matrix is not translation-invariant: max row deviation {deviation:.3e}")]
    NotUniform { deviation: f64 },
    #[error("lattice too small: {0} sites")]
    TooSmall(usize),
}

/// Two-body interaction of a model.
#[derive(Debug, Clone)]
pub enum Interaction {
    /// On-site Hubbard repulsion `U sum_i n_up n_down`.
    LocalU { u: f64 },
    /// Full two-electron tensor in chemists' notation `(ij|kl)`.
    FullTensor(TwoBodyTensor),
}

/// One-body integrals, interaction, and electron counts of a system.
#[derive(Debug, Clone)]
pub struct ManyBodyModel {
    pub n_spatial: usize,
    pub one_body: Mat,
    pub interaction: Interaction,
    /// Electrons per spin channel `(n_up, n_down)`.
    pub n_electrons: (usize, usize),
    /// Additive constant (nuclear repulsion for molecules).
    pub core_energy: f64,
}

impl ManyBodyModel {
    pub fn is_closed_shell(&self) -> bool {
        self.n_electrons.0 == self.n_electrons.1
    }

    pub fn hubbard_u(&self) -> Option<f64> {
        match self.interaction {
            Interaction::LocalU { u } => Some(u),
            Interaction::FullTensor(_) => None,
        }
    }
}

/// Uniform 1D Hubbard chain parameters.
#[derive(Debug, Clone)]
pub struct LatticeSpec {
    pub n_sites: usize,
    pub hopping: f64,
    pub coulomb: f64,
    pub periodic: bool,
    /// Electrons per site in `[0, 2]`.
    pub filling: f64,
}

impl LatticeSpec {
    /// Electrons per spin channel. Errors unless `filling * n_sites / 2`
    /// is an integer within 1e-9.
    pub fn electrons_per_spin(&self) -> Result<usize, ModelError> {
        let raw = self.filling * self.n_sites as f64 / 2.0;
        let rounded = raw.round();
        if (raw - rounded).abs() > 1e-9 || rounded < 0.0 || rounded > self.n_sites as f64 {
            return Err(ModelError::FillingError {
                filling: self.filling,
                sites: self.n_sites,
            });
        }
        Ok(rounded as usize)
    }
}

/// Build the nearest-neighbour Hubbard chain `t_ij = -t` for `|i-j| = 1`
/// (plus the wraparound bond when periodic) with on-site repulsion `U`.
pub fn build_hubbard(spec: &LatticeSpec) -> Result<ManyBodyModel, ModelError> {
    let l = spec.n_sites;
    if l < 2 {
        return Err(ModelError::TooSmall(l));
    }
    let per_spin = spec.electrons_per_spin()?;
    let mut t = Mat::zeros(l, l);
    for i in 0..l - 1 {
        t[(i, i + 1)] = -spec.hopping;
        t[(i + 1, i)] = -spec.hopping;
    }
    if spec.periodic && l > 2 {
        t[(0, l - 1)] = -spec.hopping;
        t[(l - 1, 0)] = -spec.hopping;
    }
    Ok(ManyBodyModel {
        n_spatial: l,
        one_body: t,
        interaction: Interaction::LocalU { u: spec.coulomb },
        n_electrons: (per_spin, per_spin),
        core_energy: 0.0,
    })
}

/// Momentum grid `k_m = 2 pi m / L - pi` shifted into `(-pi, pi]`, sorted
/// ascending.
pub fn momentum_grid(l: usize) -> Vec<f64> {
    let mut ks: Vec<f64> = (0..l)
        .map(|m| {
            let k = 2.0 * std::f64::consts::PI * m as f64 / l as f64 - std::f64::consts::PI;
            if k <= -std::f64::consts::PI + 1e-12 {
                k + 2.0 * std::f64::consts::PI
            } else {
                k
            }
        })
        .collect();
    ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ks
}

/// Natural occupations of a uniform periodic chain as a function of the
/// Bloch wave number: `eta(k) = sum_d cos(k d) gamma_{0,d}` per spin.
///
/// The spin-up block is used (runs are spin-restricted); the input must be
/// circulant within 1e-6 max row deviation.
pub fn bloch_occupations(
    gamma: &DensityMatrix,
    spec: &LatticeSpec,
) -> Result<Vec<(f64, f64)>, ModelError> {
    let l = spec.n_sites;
    let block = gamma.block(Spin::Up);
    // circulant check: every row must be the first row shifted
    let mut deviation: f64 = 0.0;
    for i in 0..l {
        for j in 0..l {
            let d = (j + l - i) % l;
            deviation = deviation.max((block[(i, j)] - block[(0, d)]).abs());
        }
    }
    if deviation > 1e-6 {
        return Err(ModelError::NotUniform { deviation });
    }
    let ks = momentum_grid(l);
    Ok(ks
        .into_iter()
        .map(|k| {
            let eta: f64 = (0..l).map(|d| (k * d as f64).cos() * block[(0, d)]).sum();
            (k, eta)
        })
        .collect())
}
