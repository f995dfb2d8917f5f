//! One-dimensional interpolation minimizers.

use super::SolverError;
use crate::functionals::FunctionalError;
use crate::rdm::{convex_combine, DensityMatrix};

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimum of `f` on `[lo, hi]`.
pub(super) fn golden_section<F>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64, SolverError>
where
    F: Fn(f64) -> Result<f64, FunctionalError>,
{
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimize `z -> E[(1-z) a + z b]` over `[0, 1]`.
///
/// The stationary point is bracketed by the sign of the numerical
/// derivative and pinned down by bisection; when the derivative carries no
/// usable sign information (noise, multiple stationary points) a
/// golden-section pass takes over. The endpoints always stay in the
/// candidate set, so the result can never exceed `min(E[a], E[b])`.
pub fn line_minimize<F>(
    a: &DensityMatrix,
    b: &DensityMatrix,
    energy: F,
) -> Result<(f64, DensityMatrix), SolverError>
where
    F: Fn(&DensityMatrix) -> Result<f64, FunctionalError>,
{
    let combine = |z: f64| -> Result<DensityMatrix, FunctionalError> {
        Ok(convex_combine(&[a.clone(), b.clone()], &[1.0 - z, z])?)
    };
    let phi = |z: f64| -> Result<f64, FunctionalError> { energy(&combine(z)?) };

    let h = 1e-7;
    let dphi = |z: f64| -> Result<f64, FunctionalError> {
        let zp = (z + h).min(1.0);
        let zm = (z - h).max(0.0);
        Ok((phi(zp)? - phi(zm)?) / (zp - zm))
    };

    let mut candidates = vec![0.0, 1.0];
    let d0 = dphi(0.0)?;
    let d1 = dphi(1.0)?;
    if d0 < 0.0 && d1 > 0.0 {
        // single sign change bracketed on [0, 1]
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if dphi(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        candidates.push(0.5 * (lo + hi));
    } else if d0 < 0.0 || d1 > 0.0 {
        // derivative signs inconsistent with a monotone profile: scan
        let mut best = (phi(0.0)?, 0.0);
        for step in 1..=8 {
            let z = step as f64 / 8.0;
            let v = phi(z)?;
            if v < best.0 {
                best = (v, z);
            }
        }
        if best.1 > 0.0 && best.1 < 1.0 {
            let lo = (best.1 - 0.125).max(0.0);
            let hi = (best.1 + 0.125).min(1.0);
            candidates.push(golden_section(&phi, lo, hi, 1e-10)?);
        }
        candidates.push(best.1);
    }

    let mut z_star = 0.0;
    let mut e_star = f64::INFINITY;
    for &z in &candidates {
        let e = phi(z)?;
        if e < e_star - 0.0 || (e == e_star && z < z_star) {
            e_star = e;
            z_star = z;
        }
    }
    let gamma = combine(z_star)?;
    Ok((z_star, gamma))
}
