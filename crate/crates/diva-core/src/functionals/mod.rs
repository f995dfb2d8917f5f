//! Energy functionals of the 1-RDM and their gradients.
//!
//! Three functionals are provided. Hartree–Fock contracts the mean-field
//! two-particle density built from `gamma` itself; Mueller keeps the Hartree
//! term but softens the exchange weight to `sqrt(eta_p eta_q)` over natural
//! occupations, which is equivalent to replacing `gamma` by its matrix
//! square root in the exchange contraction; Toews–Pastor models the on-site
//! double occupation of each lattice site from a two-level system with
//! renormalized couplings and is defined directly in the site basis.
//!
//! Gradients follow the convention of a symmetric perturbation: off-diagonal
//! elements `gamma_ij` and `gamma_ji` move together by `h/2` each, diagonal
//! elements by `h`, so `<grad, delta>` is the Frobenius-pairing directional
//! derivative for symmetric `delta`.

mod fd;
mod mueller;
mod tows_pastor;

pub use fd::{fd_gradient, fd_gradient_richardson};
pub use tows_pastor::{tows_pastor_double_occ, tows_pastor_site_data, SiteData};

use crate::mat::Mat;
use crate::models::{Interaction, ManyBodyModel};
use crate::rdm::{classify, DensityMatrix, RdmError, Spin, SPINS, TOL_BOUNDARY};
use serde::Serialize;
use thiserror::Error;

/// Pseudo-distance below which an input is rejected as non-representable.
/// Looser than the boundary band: finite-difference probes and line-search
/// endpoints sit within roundoff of the boundary and must still evaluate.
pub const REPRESENTABILITY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error("density matrix outside the representable domain (d = {pseudo_distance:.3e})")]
    Representability { pseudo_distance: f64 },
    #[error("occupation within {gap:.3e} of an integer: Mueller gradient is ill-defined")]
    BoundaryGradient { gap: f64 },
    #[error("model mismatch: {message}")]
    Model { message: String },
    #[error("restricted evaluation refused for open-shell model ({up} up, {down} down electrons)")]
    OpenShell { up: usize, down: usize },
    #[error("no double-occupation branch matches: {message}")]
    Case { message: String },
    #[error("shape mismatch: {context}")]
    Shape { context: String },
    #[error(transparent)]
    Rdm(#[from] RdmError),
}

/// Which energy functional to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    HartreeFock,
    Mueller,
    ToewsPastor,
}

impl std::fmt::Display for FunctionalKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FunctionalKind::HartreeFock => write!(f, "hartree-fock"),
            FunctionalKind::Mueller => write!(f, "mueller"),
            FunctionalKind::ToewsPastor => write!(f, "tows-pastor"),
        }
    }
}

/// Functional selection and gradient parameters.
#[derive(Debug, Clone, Copy)]
pub struct FunctionalSpec {
    pub kind: FunctionalKind,
    /// Central-difference step.
    pub fd_step: f64,
    /// Use the closed-form gradient (Hartree–Fock and Mueller only).
    pub analytic_gradient: bool,
}

impl FunctionalSpec {
    pub fn hartree_fock() -> Self {
        FunctionalSpec {
            kind: FunctionalKind::HartreeFock,
            fd_step: 1e-5,
            analytic_gradient: true,
        }
    }

    pub fn mueller() -> Self {
        FunctionalSpec {
            kind: FunctionalKind::Mueller,
            fd_step: 1e-5,
            analytic_gradient: true,
        }
    }

    pub fn tows_pastor() -> Self {
        FunctionalSpec {
            kind: FunctionalKind::ToewsPastor,
            fd_step: 1e-5,
            analytic_gradient: false,
        }
    }

    pub fn validate(&self) -> Result<(), FunctionalError> {
        if !(1e-8..=1e-2).contains(&self.fd_step) {
            return Err(FunctionalError::Model {
                message: format!("fd_step {:.3e} outside [1e-8, 1e-2]", self.fd_step),
            });
        }
        if self.analytic_gradient && self.kind == FunctionalKind::ToewsPastor {
            return Err(FunctionalError::Model {
                message: "analytic gradient is only available for Hartree-Fock and Mueller".into(),
            });
        }
        Ok(())
    }
}

/// Decomposed energy of one evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub total: f64,
    pub one_body: f64,
    pub interaction: f64,
    /// Chemical potential, set by the solver at convergence.
    pub mu: Option<f64>,
    /// Per-site `<n_up n_down>` (lattice models only).
    pub double_occupation: Option<Vec<f64>>,
}

impl EnergyReport {
    fn assemble(
        one_body: f64,
        interaction: f64,
        core: f64,
        double_occupation: Option<Vec<f64>>,
    ) -> Self {
        EnergyReport {
            total: one_body + interaction + core,
            one_body,
            interaction,
            mu: None,
            double_occupation,
        }
    }
}

fn check_shapes(gamma: &DensityMatrix, model: &ManyBodyModel) -> Result<(), FunctionalError> {
    if gamma.n_spatial() != model.n_spatial {
        return Err(FunctionalError::Shape {
            context: format!(
                "density matrix has {} orbitals, model has {}",
                gamma.n_spatial(),
                model.n_spatial
            ),
        });
    }
    Ok(())
}

fn check_representable(gamma: &DensityMatrix) -> Result<(), FunctionalError> {
    let class = classify(gamma, TOL_BOUNDARY);
    if class.pseudo_distance < -REPRESENTABILITY_TOL {
        return Err(FunctionalError::Representability {
            pseudo_distance: class.pseudo_distance,
        });
    }
    Ok(())
}

/// One-body energy `T = sum_sigma sum_ij t_ij gamma^sigma_ij`.
pub fn one_body_energy(gamma: &DensityMatrix, model: &ManyBodyModel) -> Result<f64, FunctionalError> {
    check_shapes(gamma, model)?;
    let mut acc = 0.0;
    for spin in SPINS {
        acc += crate::mat::frob_inner(&model.one_body, gamma.block(spin));
    }
    Ok(acc)
}

/// Mueller pair weight `sqrt(eta_i eta_j)` with inputs clamped to `[0, 1]`.
pub fn mueller_pair(eta_i: f64, eta_j: f64) -> f64 {
    let a = eta_i.clamp(0.0, 1.0);
    let b = eta_j.clamp(0.0, 1.0);
    (a * b).sqrt()
}

/// Evaluate the selected functional.
pub fn evaluate(
    gamma: &DensityMatrix,
    model: &ManyBodyModel,
    spec: &FunctionalSpec,
) -> Result<EnergyReport, FunctionalError> {
    match spec.kind {
        FunctionalKind::HartreeFock => hartree_fock_energy(gamma, model),
        FunctionalKind::Mueller => mueller_energy(gamma, model),
        FunctionalKind::ToewsPastor => tows_pastor_energy(gamma, model),
    }
}

/// Total energy only; convenience for the solvers.
pub fn energy_value(
    gamma: &DensityMatrix,
    model: &ManyBodyModel,
    spec: &FunctionalSpec,
) -> Result<f64, FunctionalError> {
    evaluate(gamma, model, spec).map(|r| r.total)
}

/// Hartree–Fock energy: Hartree plus exchange contracted with `gamma`
/// itself.
pub fn hartree_fock_energy(
    gamma: &DensityMatrix,
    model: &ManyBodyModel,
) -> Result<EnergyReport, FunctionalError> {
    check_shapes(gamma, model)?;
    let t = one_body_energy(gamma, model)?;
    match &model.interaction {
        Interaction::LocalU { u } => {
            let n = gamma.n_spatial();
            let mut doubles = Vec::with_capacity(n);
            let mut w = 0.0;
            for i in 0..n {
                let d = gamma.block(Spin::Up)[(i, i)] * gamma.block(Spin::Down)[(i, i)];
                doubles.push(d);
                w += u * d;
            }
            Ok(EnergyReport::assemble(t, w, model.core_energy, Some(doubles)))
        }
        Interaction::FullTensor(tensor) => {
            let total_density = gamma.block(Spin::Up) + gamma.block(Spin::Down);
            let hartree = 0.5 * mueller::coulomb_contraction(tensor, &total_density, &total_density);
            let mut exchange = 0.0;
            for spin in SPINS {
                exchange += 0.5 * mueller::exchange_contraction(tensor, gamma.block(spin));
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

/// Mueller energy: Hartree contraction with `eta_p eta_q`, exchange
/// contraction with `sqrt(eta_p eta_q)`, both over the natural orbitals of
/// each spin block.
pub fn mueller_energy(
    gamma: &DensityMatrix,
    model: &ManyBodyModel,
) -> Result<EnergyReport, FunctionalError> {
    check_shapes(gamma, model)?;
    check_representable(gamma)?;
    mueller::mueller_energy(gamma, model)
}

/// Toews–Pastor energy on a local-U lattice model.
pub fn tows_pastor_energy(
    gamma: &DensityMatrix,
    model: &ManyBodyModel,
) -> Result<EnergyReport, FunctionalError> {
    check_shapes(gamma, model)?;
    if !model.is_closed_shell() {
        return Err(FunctionalError::OpenShell {
            up: model.n_electrons.0,
            down: model.n_electrons.1,
        });
    }
    let u = match model.interaction {
        Interaction::LocalU { u } => u,
        Interaction::FullTensor(_) => {
            return Err(FunctionalError::Model {
                message: "Toews-Pastor requires a local-U lattice interaction".into(),
            })
        }
    };
    let t = one_body_energy(gamma, model)?;
    let n = gamma.n_spatial();
    let mut doubles = vec![0.0; n];
    for spin in SPINS {
        let site_data = tows_pastor_site_data(gamma.block(spin));
        for (i, data) in site_data.iter().enumerate() {
            doubles[i] += 0.5 * tows_pastor_double_occ(data)?;
        }
    }
    let w = u * doubles.iter().sum::<f64>();
    Ok(EnergyReport::assemble(t, w, model.core_energy, Some(doubles)))
}

/// Energy gradient per spin block.
///
/// Hartree–Fock and Mueller take the closed-form path when
/// `spec.analytic_gradient` is set, central differences otherwise;
/// Toews–Pastor always differentiates numerically (the branch structure has
/// no useful closed form). Mueller refuses occupations within `fd_step` of
/// an integer — the square-root derivative diverges there — and the caller
/// is expected to fall back to the off-diagonal masking rule.
pub fn gradient(
    gamma: &DensityMatrix,
    model: &ManyBodyModel,
    spec: &FunctionalSpec,
) -> Result<[Mat; 2], FunctionalError> {
    spec.validate()?;
    check_shapes(gamma, model)?;
    match spec.kind {
        FunctionalKind::HartreeFock => {
            if spec.analytic_gradient {
                mueller::hartree_fock_gradient(gamma, model)
            } else {
                fd_gradient(
                    |g| hartree_fock_energy(g, model).map(|r| r.total),
                    gamma,
                    spec.fd_step,
                )
            }
        }
        FunctionalKind::Mueller => {
            // the sqrt derivative diverges at eta = 0; the numeric stencil
            // additionally misbehaves when a probe crosses eta = 1
            let gap = SPINS
                .iter()
                .flat_map(|&s| gamma.spectral(s).occupations.iter())
                .map(|&e| {
                    if spec.analytic_gradient {
                        e.abs()
                    } else {
                        e.abs().min((1.0 - e).abs())
                    }
                })
                .fold(f64::INFINITY, f64::min);
            if gap < spec.fd_step {
                return Err(FunctionalError::BoundaryGradient { gap });
            }
            if spec.analytic_gradient {
                mueller::mueller_gradient(gamma, model)
            } else {
                fd_gradient(
                    |g| mueller_energy(g, model).map(|r| r.total),
                    gamma,
                    spec.fd_step,
                )
            }
        }
        FunctionalKind::ToewsPastor => tows_pastor::tp_fd_gradient(gamma, model, spec.fd_step),
    }
}

/// Diagonal of the energy gradient with a one-sided stencil,
/// `[E(gamma_ii + delta) - E(gamma_ii)] / delta` per site with
/// `delta = sign * spec.fd_step`, for the spin-up block (evaluation is
/// spin-restricted).
///
/// The self-consistent site-occupation loop needs this: the lattice
/// functional's chemical potential jumps across half filling, converged
/// states pin their branch point at the evaluation point, and a symmetric
/// stencil would report the mid-gap average instead of the physical
/// one-sided value.
pub fn diagonal_gradient_one_sided(
    gamma: &DensityMatrix,
    model: &ManyBodyModel,
    spec: &FunctionalSpec,
    forward: bool,
) -> Result<Vec<f64>, FunctionalError> {
    spec.validate()?;
    check_shapes(gamma, model)?;
    let n = gamma.n_spatial();
    let delta = if forward { spec.fd_step } else { -spec.fd_step };
    match (spec.kind, &model.interaction) {
        (FunctionalKind::ToewsPastor, Interaction::LocalU { u }) => {
            if !model.is_closed_shell() {
                return Err(FunctionalError::OpenShell {
                    up: model.n_electrons.0,
                    down: model.n_electrons.1,
                });
            }
            let mut diag =
                tows_pastor::block_diagonal_one_sided(gamma.block(Spin::Up), *u, delta);
            if !gamma.is_restricted(1e-12) {
                let other =
                    tows_pastor::block_diagonal_one_sided(gamma.block(Spin::Down), *u, delta);
                for (d, o) in diag.iter_mut().zip(other) {
                    *d = 0.5 * (*d + o);
                }
            }
            for (i, d) in diag.iter_mut().enumerate() {
                *d += model.one_body[(i, i)];
            }
            Ok(diag)
        }
        _ => {
            let energy = |g: &DensityMatrix| energy_value(g, model, spec);
            let base = energy(gamma)?;
            let mut diag = Vec::with_capacity(n);
            for i in 0..n {
                let mut blocks = gamma.blocks().clone();
                blocks[0][(i, i)] += delta;
                let [up, down] = blocks;
                let moved = energy(&DensityMatrix::new(up, down)?)?;
                diag.push((moved - base) / delta);
            }
            Ok(diag)
        }
    }
}

/// How the diagonal of a gradient is conditioned before use as a descent
/// direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalMode {
    /// Subtract the mean diagonal so the electron number is conserved along
    /// the direction; the mean is the chemical potential estimate.
    ConserveN,
    /// Zero the diagonal so site occupations stay fixed.
    FixDiagonal,
}

/// Apply the diagonal conditioning; returns the conditioned gradient and
/// the chemical potential `mu` (mean of the original diagonal over both
/// blocks).
pub fn gradient_postprocess(grad: &[Mat; 2], mode: DiagonalMode) -> ([Mat; 2], f64) {
    let n = grad[0].nrows();
    let mu = grad
        .iter()
        .map(|g| (0..n).map(|i| g[(i, i)]).sum::<f64>())
        .sum::<f64>()
        / (2 * n) as f64;
    let mut out = grad.clone();
    for g in &mut out {
        let block_mu = (0..n).map(|i| g[(i, i)]).sum::<f64>() / n as f64;
        for i in 0..n {
            g[(i, i)] = match mode {
                DiagonalMode::ConserveN => g[(i, i)] - block_mu,
                DiagonalMode::FixDiagonal => 0.0,
            };
        }
    }
    (out, mu)
}
