//! Types and geometry of the ensemble N-representable domain.
//!
//! A spin-resolved 1-RDM is stored as two real symmetric spatial blocks.
//! A block is ensemble representable when all of its natural occupations
//! `eta_k` lie in `[0, 1]`; the signed pseudo-distance from the domain
//! boundary is `d = min(eta_1, 1 - eta_N)` with occupations sorted
//! ascending. The domain is convex, its boundary carries at least one
//! integer occupation, and the idempotent matrices (`gamma^2 = gamma`) are
//! its extreme points — every representable matrix decomposes as a convex
//! combination of at most `2^F` idempotents, `F` counting the fractional
//! occupations.

mod decompose;
mod snapshot;

pub use decompose::{idempotent_decompose, ConvexDecomposition};
pub use snapshot::{read_snapshot, write_snapshot};

use crate::mat::{
    antisymmetry_norm, frob_inner, sorted_symmetric_eigen, symmetrize, Mat,
};
use std::sync::OnceLock;
use thiserror::Error;

/// Default half-width of the boundary band on the pseudo-distance.
pub const TOL_BOUNDARY: f64 = 1e-9;
/// Default band within which an occupation counts as integer (0 or 1).
pub const TOL_INTEGER: f64 = 1e-8;
/// Symmetry residual above which an input matrix is rejected outright.
pub const TOL_SYMMETRY: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum RdmError {
    #[error("matrix is not symmetric: antisymmetric part has norm {norm:.3e}")]
    NotSymmetric { norm: f64 },
    #[error("shape mismatch: {context}")]
    ShapeError { context: String },
    #[error("invalid convex weights: {reason}")]
    WeightError { reason: String },
    #[error("matrix is not ensemble representable (pseudo-distance {pseudo_distance:.3e})")]
    NotRepresentable { pseudo_distance: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("snapshot format error at line {line}: {message}")]
    SnapshotFormat { line: usize, message: String },
    #[error("snapshot io error: {0}")]
    SnapshotIo(#[from] std::io::Error),
}

/// Spin channel index for the two spatial blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Up = 0,
    Down = 1,
}

pub const SPINS: [Spin; 2] = [Spin::Up, Spin::Down];

/// Spin-blocked one-particle reduced density matrix.
///
/// Both blocks are kept exactly symmetric (inputs are symmetrized once the
/// residual passes the [`TOL_SYMMETRY`] gate). The spectral decomposition of
/// each block is computed lazily and cached; all mutation happens at
/// construction, so values are safe to share across threads.
#[derive(Debug)]
pub struct DensityMatrix {
    blocks: [Mat; 2],
    trace_target: [f64; 2],
    spectral: [OnceLock<SpectralDecomposition>; 2],
}

impl Clone for DensityMatrix {
    fn clone(&self) -> Self {
        let spectral = [OnceLock::new(), OnceLock::new()];
        for s in 0..2 {
            if let Some(v) = self.spectral[s].get() {
                let _ = spectral[s].set(v.clone());
            }
        }
        DensityMatrix {
            blocks: self.blocks.clone(),
            trace_target: self.trace_target,
            spectral,
        }
    }
}

impl DensityMatrix {
    /// Build from explicit spin-up and spin-down blocks.
    pub fn new(up: Mat, down: Mat) -> Result<Self, RdmError> {
        if up.nrows() != up.ncols() || down.nrows() != down.ncols() {
            return Err(RdmError::ShapeError {
                context: format!(
                    "blocks must be square, got {}x{} and {}x{}",
                    up.nrows(),
                    up.ncols(),
                    down.nrows(),
                    down.ncols()
                ),
            });
        }
        if up.nrows() != down.nrows() {
            return Err(RdmError::ShapeError {
                context: format!("spin blocks differ: {} vs {}", up.nrows(), down.nrows()),
            });
        }
        if up.nrows() == 0 {
            return Err(RdmError::ShapeError {
                context: "empty matrix".into(),
            });
        }
        let mut blocks = [up, down];
        for b in &mut blocks {
            if b.iter().any(|x| !x.is_finite()) {
                return Err(RdmError::NonFinite);
            }
            let res = antisymmetry_norm(b);
            if res > TOL_SYMMETRY {
                return Err(RdmError::NotSymmetric { norm: res });
            }
            symmetrize(b);
        }
        let trace_target = [blocks[0].trace(), blocks[1].trace()];
        Ok(DensityMatrix {
            blocks,
            trace_target,
            spectral: [OnceLock::new(), OnceLock::new()],
        })
    }

    /// Spin-restricted matrix: both blocks equal to `block`.
    pub fn restricted(block: Mat) -> Result<Self, RdmError> {
        let down = block.clone();
        Self::new(block, down)
    }

    /// Number of spatial orbitals / lattice sites per block.
    pub fn n_spatial(&self) -> usize {
        self.blocks[0].nrows()
    }

    pub fn block(&self, spin: Spin) -> &Mat {
        &self.blocks[spin as usize]
    }

    pub fn blocks(&self) -> &[Mat; 2] {
        &self.blocks
    }

    /// Electron count the block claims to hold.
    pub fn trace_target(&self, spin: Spin) -> f64 {
        self.trace_target[spin as usize]
    }

    pub fn trace(&self, spin: Spin) -> f64 {
        self.blocks[spin as usize].trace()
    }

    /// True when the two spin blocks agree entrywise within `tol`.
    pub fn is_restricted(&self, tol: f64) -> bool {
        self.blocks[0]
            .iter()
            .zip(self.blocks[1].iter())
            .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// Cached spectral decomposition of one spin block.
    pub fn spectral(&self, spin: Spin) -> &SpectralDecomposition {
        self.spectral[spin as usize].get_or_init(|| {
            let (occupations, orbitals) = sorted_symmetric_eigen(&self.blocks[spin as usize]);
            SpectralDecomposition {
                occupations: occupations.iter().copied().collect(),
                orbitals,
            }
        })
    }
}

/// Natural occupations and orbitals of one spin block.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Occupations sorted ascending.
    pub occupations: Vec<f64>,
    /// Orthogonal matrix whose columns are the natural orbitals, ordered
    /// like `occupations`.
    pub orbitals: Mat,
}

impl SpectralDecomposition {
    pub fn min_occupation(&self) -> f64 {
        self.occupations[0]
    }

    pub fn max_occupation(&self) -> f64 {
        *self.occupations.last().unwrap()
    }

    /// Rebuild the block as `u diag(eta) u^T`.
    pub fn reconstruct(&self) -> Mat {
        let eta = Mat::from_diagonal(&crate::mat::Vec64::from_vec(self.occupations.clone()));
        &self.orbitals * eta * self.orbitals.transpose()
    }
}

/// Position of a matrix relative to the representable domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainTag {
    Interior,
    Boundary,
    /// On the boundary with every occupation at 0 or 1 — an extreme point.
    BoundaryIdempotent,
    Outside,
}

#[derive(Debug, Clone, Copy)]
pub struct DomainClass {
    pub tag: DomainTag,
    /// `min(eta_1, 1 - eta_N)` over both spin blocks; negative outside.
    pub pseudo_distance: f64,
}

impl DomainClass {
    pub fn is_representable(&self) -> bool {
        self.tag != DomainTag::Outside
    }
}

/// Decompose one symmetric block into natural occupations and orbitals.
pub fn spectral_decompose(block: &Mat) -> Result<SpectralDecomposition, RdmError> {
    if block.nrows() != block.ncols() {
        return Err(RdmError::ShapeError {
            context: format!("expected square block, got {}x{}", block.nrows(), block.ncols()),
        });
    }
    let res = antisymmetry_norm(block);
    if res > TOL_SYMMETRY {
        return Err(RdmError::NotSymmetric { norm: res });
    }
    let mut b = block.clone();
    symmetrize(&mut b);
    let (occupations, orbitals) = sorted_symmetric_eigen(&b);
    Ok(SpectralDecomposition {
        occupations: occupations.iter().copied().collect(),
        orbitals,
    })
}

/// Pseudo-distance of one occupation spectrum from the domain boundary.
pub fn pseudo_distance(occupations: &[f64]) -> f64 {
    let lo = occupations[0];
    let hi = *occupations.last().unwrap();
    lo.min(1.0 - hi)
}

/// Classify a matrix against the representable domain.
///
/// The two blocks are combined conservatively: Outside dominates, then the
/// idempotent check (every occupation of both blocks within [`TOL_INTEGER`]
/// of 0 or 1), then the boundary band `|d| <= tol_boundary`.
pub fn classify(gamma: &DensityMatrix, tol_boundary: f64) -> DomainClass {
    let mut d = f64::INFINITY;
    let mut all_integer = true;
    for spin in SPINS {
        let spec = gamma.spectral(spin);
        d = d.min(pseudo_distance(&spec.occupations));
        all_integer &= spec
            .occupations
            .iter()
            .all(|&e| e.abs() <= TOL_INTEGER || (1.0 - e).abs() <= TOL_INTEGER);
    }
    let tag = if d < -tol_boundary {
        DomainTag::Outside
    } else if all_integer {
        DomainTag::BoundaryIdempotent
    } else if d <= tol_boundary {
        DomainTag::Boundary
    } else {
        DomainTag::Interior
    };
    DomainClass {
        tag,
        pseudo_distance: d,
    }
}

/// Convex combination `sum_s z_s gamma^(s)` of density matrices.
pub fn convex_combine(
    members: &[DensityMatrix],
    weights: &[f64],
) -> Result<DensityMatrix, RdmError> {
    if members.is_empty() || members.len() != weights.len() {
        return Err(RdmError::WeightError {
            reason: format!(
                "{} members vs {} weights",
                members.len(),
                weights.len()
            ),
        });
    }
    if let Some(&w) = weights.iter().find(|&&w| w < -1e-12 || !w.is_finite()) {
        return Err(RdmError::WeightError {
            reason: format!("negative or non-finite weight {w:.3e}"),
        });
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-10 {
        return Err(RdmError::WeightError {
            reason: format!("weights sum to {sum:.12} instead of 1"),
        });
    }
    let n = members[0].n_spatial();
    if members.iter().any(|m| m.n_spatial() != n) {
        return Err(RdmError::ShapeError {
            context: "members have mismatched dimensions".into(),
        });
    }
    let mut up = Mat::zeros(n, n);
    let mut down = Mat::zeros(n, n);
    for (m, &w) in members.iter().zip(weights) {
        up += m.block(Spin::Up) * w;
        down += m.block(Spin::Down) * w;
    }
    DensityMatrix::new(up, down)
}

/// Frobenius distance over the full spin-orbital matrix (both blocks).
pub fn frobenius_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, RdmError> {
    if a.n_spatial() != b.n_spatial() {
        return Err(RdmError::ShapeError {
            context: format!("{} vs {}", a.n_spatial(), b.n_spatial()),
        });
    }
    let mut acc = 0.0;
    for spin in SPINS {
        let d = a.block(spin) - b.block(spin);
        acc += frob_inner(&d, &d);
    }
    Ok(acc.sqrt())
}

/// Site (diagonal) occupations per spin: `n_i = gamma_ii`.
pub fn site_occupations(gamma: &DensityMatrix) -> [Vec<f64>; 2] {
    let n = gamma.n_spatial();
    let extract = |m: &Mat| (0..n).map(|i| m[(i, i)]).collect::<Vec<_>>();
    [
        extract(gamma.block(Spin::Up)),
        extract(gamma.block(Spin::Down)),
    ]
}

/// Frobenius norm of `gamma^2 - gamma` over both blocks.
pub fn idempotency_residual(gamma: &DensityMatrix) -> f64 {
    let mut acc = 0.0;
    for spin in SPINS {
        let b = gamma.block(spin);
        let d = b * b - b;
        acc += frob_inner(&d, &d);
    }
    acc.sqrt()
}
