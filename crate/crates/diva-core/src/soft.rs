//! Pseudo-Kohn–Sham self-consistency over site occupations.
//!
//! The minimization splits into two nested problems: a non-interacting
//! eigenvalue problem `t + diag(v_hxc)` fixes the site occupations, and a
//! fixed-diagonal interpolation run optimizes the off-diagonal part of the
//! 1-RDM at those occupations. The diagonal of the resulting energy
//! gradient updates the potential,
//!
//! ```text
//! v_hxc <- v_hxc + diag(grad E[gamma]) - mu_pks * 1,
//! ```
//!
//! so at the fixed point the interacting chemical potential equals the
//! highest occupied orbital energy of the effective system.

use crate::functionals::{self, DiagonalMode, EnergyReport, FunctionalError, FunctionalSpec};
use crate::mat::Mat;
use crate::models::{build_hubbard, LatticeSpec, ManyBodyModel};
use crate::rdm::{DensityMatrix, Spin};
use crate::solver::{diva_run, DivaConfig, DivaTrace, SolverError, Termination};
use rayon::prelude::*;
use serde::Serialize;

/// State of the self-consistent loop.
#[derive(Debug, Clone, Serialize)]
pub struct SoftState {
    /// Diagonal Hartree-exchange-correlation potential per site.
    pub v_hxc: Vec<f64>,
    /// Highest occupied orbital energy of the effective system.
    pub mu_pks: f64,
    /// Site occupations per spin channel of the effective system.
    pub n_pks: Vec<f64>,
    pub iteration: usize,
}

#[derive(Debug)]
pub struct PksSolution {
    /// Idempotent 1-RDM of the effective non-interacting system.
    pub gamma: DensityMatrix,
    pub n_pks: Vec<f64>,
    pub mu_pks: f64,
    /// A degenerate frontier shell was split by a tiny diagonal
    /// perturbation to keep the filling idempotent.
    pub degenerate_frontier: bool,
}

/// Diagonalize `t + diag(v_hxc)` per spin and aufbau-fill.
pub fn pks_solve(model: &ManyBodyModel, v_hxc: &[f64]) -> Result<PksSolution, SolverError> {
    let n = model.n_spatial;
    if v_hxc.len() != n {
        return Err(SolverError::Config {
            reason: format!("v_hxc has length {}, expected {n}", v_hxc.len()),
        });
    }
    let mut h = model.one_body.clone();
    for i in 0..n {
        h[(i, i)] += v_hxc[i];
    }
    let (mut vals, mut vecs) = crate::mat::sorted_symmetric_eigen(&h);
    let counts = [model.n_electrons.0, model.n_electrons.1];
    let max_count = counts[0].max(counts[1]);

    let mut degenerate = false;
    if max_count > 0 && max_count < n && (vals[max_count] - vals[max_count - 1]).abs() < 1e-12 {
        // split the frontier shell deterministically; equal fractional
        // filling would break idempotency
        degenerate = true;
        let mut h2 = h.clone();
        for i in 0..n {
            h2[(i, i)] += 1e-8 * (i + 1) as f64 / n as f64;
        }
        let (v2, u2) = crate::mat::sorted_symmetric_eigen(&h2);
        vals = v2;
        vecs = u2;
    }

    let mut blocks = Vec::with_capacity(2);
    for &count in &counts {
        let mut block = Mat::zeros(n, n);
        for k in 0..count {
            let col = vecs.column(k);
            block += &col * col.transpose();
        }
        blocks.push(block);
    }
    let down = blocks.pop().unwrap();
    let up = blocks.pop().unwrap();
    let gamma = DensityMatrix::new(up, down)?;
    let n_pks = (0..n).map(|i| gamma.block(Spin::Up)[(i, i)]).collect();
    let mu_pks = if counts[0] > 0 {
        vals[counts[0] - 1]
    } else {
        vals[0]
    };
    Ok(PksSolution {
        gamma,
        n_pks,
        mu_pks,
        degenerate_frontier: degenerate,
    })
}

/// Outer-loop controls wrapped around the inner interpolation solver.
#[derive(Debug, Clone, Copy)]
pub struct SoftConfig {
    pub diva: DivaConfig,
    pub max_outer: usize,
    /// Linear mixing weight on the potential update (1 = no damping).
    pub mixing: f64,
    /// Stencil side for the diagonal gradient in the potential update:
    /// `Some(true)` forward, `Some(false)` backward, `None` symmetric.
    /// Lattice scans set this by filling side — the chemical potential of
    /// the functional jumps across half filling and converged states pin
    /// the branch point, so the symmetric stencil would land mid-gap.
    pub diagonal_side: Option<bool>,
}

impl Default for SoftConfig {
    fn default() -> Self {
        SoftConfig {
            diva: DivaConfig::default(),
            max_outer: 50,
            mixing: 1.0,
            diagonal_side: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SoftIterRecord {
    pub outer: usize,
    pub energy: f64,
    /// Sup-norm of the potential update.
    pub v_change: f64,
    pub mu_pks: f64,
    /// Mean diagonal of the interacting gradient.
    pub mu_interacting: Option<f64>,
    pub inner_iterations: usize,
    pub inner_converged: bool,
}

#[derive(Debug)]
pub struct SoftOutcome {
    pub gamma: DensityMatrix,
    pub report: EnergyReport,
    pub state: SoftState,
    pub trace: Vec<SoftIterRecord>,
    pub termination: Termination,
    /// Trace of the last inner fixed-diagonal run.
    pub inner_trace: DivaTrace,
}

impl SoftOutcome {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Alternate effective-system solves with fixed-diagonal interpolation runs
/// until the potential update drops below `sqrt(energy_tol)` in sup norm.
pub fn soft_diva_run(
    model: &ManyBodyModel,
    fspec: &FunctionalSpec,
    cfg: &SoftConfig,
    v_init: &[f64],
) -> Result<SoftOutcome, SolverError> {
    let n = model.n_spatial;
    let mut v = v_init.to_vec();
    if v.len() != n {
        return Err(SolverError::Config {
            reason: format!("v_init has length {}, expected {n}", v.len()),
        });
    }
    let v_tol = cfg.diva.energy_tol.sqrt();
    let inner_cfg = DivaConfig {
        diagonal_mode: DiagonalMode::FixDiagonal,
        ..cfg.diva
    };

    let mut trace = Vec::new();
    let mut best: Option<(DensityMatrix, EnergyReport, DivaTrace, PksSolution)> = None;
    let mut termination = Termination::MaxIterations;
    let mut iteration = 0;

    for outer in 1..=cfg.max_outer {
        iteration = outer;
        let pks = pks_solve(model, &v)?;
        let inner = diva_run(model, fspec, &inner_cfg, Some(pks.gamma.clone()))?;

        // diagonal of the raw interacting gradient; the masked fallback has
        // zero diagonal, which leaves a pure gauge update
        let raw_diag = match cfg.diagonal_side {
            Some(forward) => {
                functionals::diagonal_gradient_one_sided(&inner.gamma, model, fspec, forward)
                    .map(Some)
            }
            None => match functionals::gradient(&inner.gamma, model, fspec) {
                Ok(raw) => Ok(Some((0..n).map(|i| raw[0][(i, i)]).collect::<Vec<_>>())),
                Err(FunctionalError::BoundaryGradient { .. }) => Ok(None),
                Err(e) => Err(e),
            },
        };
        let (diag, mu_int) = match raw_diag {
            Ok(Some(d)) => {
                let mu = d.iter().sum::<f64>() / n as f64;
                (d, Some(mu))
            }
            Ok(None) => (vec![0.0; n], None),
            Err(e) => return Err(e.into()),
        };

        let v_new: Vec<f64> = (0..n).map(|i| v[i] + diag[i] - pks.mu_pks).collect();
        let v_change = v_new
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);

        trace.push(SoftIterRecord {
            outer,
            energy: inner.report.total,
            v_change,
            mu_pks: pks.mu_pks,
            mu_interacting: mu_int,
            inner_iterations: inner.iterations,
            inner_converged: inner.converged(),
        });
        best = Some((inner.gamma, inner.report, inner.trace, pks));

        if v_change < v_tol {
            termination = Termination::Converged;
            break;
        }
        for i in 0..n {
            v[i] += cfg.mixing * (v_new[i] - v[i]);
        }
    }

    let (gamma, report, inner_trace, pks) = best.expect("max_outer >= 1");
    Ok(SoftOutcome {
        gamma,
        report,
        state: SoftState {
            v_hxc: v,
            mu_pks: pks.mu_pks,
            n_pks: pks.n_pks,
            iteration,
        },
        trace,
        termination,
        inner_trace,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VxcRow {
    pub filling: f64,
    /// Exchange-correlation potential per site.
    pub v_xc: Vec<f64>,
    pub converged: bool,
    pub outer_iterations: usize,
    pub error: Option<String>,
}

/// Exchange-correlation potential on a filling grid.
#[derive(Debug, Clone, Serialize)]
pub struct VxcTable {
    pub coulomb: f64,
    pub functional: String,
    /// How the Hartree part was removed from the converged potential.
    pub hartree_convention: String,
    pub gauge: String,
    pub rows: Vec<VxcRow>,
}

impl VxcTable {
    /// Mean v_xc of a row (sites are equivalent on a uniform chain).
    pub fn mean_vxc(&self, row: usize) -> f64 {
        let r = &self.rows[row];
        r.v_xc.iter().sum::<f64>() / r.v_xc.len() as f64
    }
}

/// Run the self-consistent loop over a grid of fillings and strip the
/// Hartree part `U n / 2` (per spin) from the converged potential.
///
/// `U = 0` short-circuits to zero: the non-interacting functional is
/// linear, its minimizer sits on an extreme point where the diagonal
/// stationarity that defines the potential does not apply, and the
/// exchange-correlation potential is identically zero by definition.
/// Failed grid points are recorded, not fatal.
pub fn vxc_extract(
    fspec: &FunctionalSpec,
    base: &LatticeSpec,
    fillings: &[f64],
    cfg: &SoftConfig,
) -> VxcTable {
    let u = base.coulomb;
    let rows: Vec<VxcRow> = fillings
        .par_iter()
        .map(|&filling| {
            let spec = LatticeSpec {
                filling,
                ..base.clone()
            };
            let run = || -> Result<VxcRow, SolverError> {
                let model = build_hubbard(&spec)?;
                if u == 0.0 {
                    return Ok(VxcRow {
                        filling,
                        v_xc: vec![0.0; spec.n_sites],
                        converged: true,
                        outer_iterations: 0,
                        error: None,
                    });
                }
                // approach the chemical potential from the filling's own side
                let side_cfg = SoftConfig {
                    diagonal_side: Some(filling > 1.0),
                    ..*cfg
                };
                let out = soft_diva_run(&model, fspec, &side_cfg, &vec![0.0; spec.n_sites])?;
                let v_xc: Vec<f64> = out
                    .state
                    .v_hxc
                    .iter()
                    .zip(&out.state.n_pks)
                    .map(|(&v, &n_spin)| v - u * n_spin)
                    .collect();
                Ok(VxcRow {
                    filling,
                    v_xc,
                    converged: out.converged(),
                    outer_iterations: out.state.iteration,
                    error: None,
                })
            };
            run().unwrap_or_else(|e| VxcRow {
                filling,
                v_xc: vec![f64::NAN; spec.n_sites],
                converged: false,
                outer_iterations: 0,
                error: Some(e.to_string()),
            })
        })
        .collect();
    VxcTable {
        coulomb: u,
        functional: fspec.kind.to_string(),
        hartree_convention: "V_H = U * n_site / 2 per spin (U * n_pks subtracted)".into(),
        gauge: "mu_pks-aligned; shift so v_xc(n_min) = 0 for plotting".into(),
        rows,
    }
}
