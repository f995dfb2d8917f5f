//! Central-difference gradients over density matrices.

use crate::mat::Mat;
use crate::rdm::{DensityMatrix, Spin, SPINS};
use rayon::prelude::*;

use super::FunctionalError;

fn perturbed(
    gamma: &DensityMatrix,
    spin: Spin,
    i: usize,
    j: usize,
    delta: f64,
) -> Result<DensityMatrix, FunctionalError> {
    let mut blocks = gamma.blocks().clone();
    let b = &mut blocks[spin as usize];
    if i == j {
        b[(i, i)] += delta;
    } else {
        // symmetric pair moves by delta/2 each
        b[(i, j)] += 0.5 * delta;
        b[(j, i)] += 0.5 * delta;
    }
    let [up, down] = blocks;
    Ok(DensityMatrix::new(up, down)?)
}

/// Central-difference gradient of an arbitrary energy functional.
///
/// For `i != j` the pair `(gamma_ij, gamma_ji)` moves together by `h/2`
/// each; diagonal entries move by `h`. Elements are evaluated in parallel
/// and written back by index, so the result does not depend on scheduling.
pub fn fd_gradient<F>(
    energy: F,
    gamma: &DensityMatrix,
    h: f64,
) -> Result<[Mat; 2], FunctionalError>
where
    F: Fn(&DensityMatrix) -> Result<f64, FunctionalError> + Sync,
{
    let n = gamma.n_spatial();
    let mut jobs = Vec::with_capacity(n * (n + 1));
    for spin in SPINS {
        for i in 0..n {
            for j in i..n {
                jobs.push((spin, i, j));
            }
        }
    }
    let entries: Vec<((Spin, usize, usize), f64)> = jobs
        .into_par_iter()
        .map(|(spin, i, j)| {
            let plus = energy(&perturbed(gamma, spin, i, j, h)?)?;
            let minus = energy(&perturbed(gamma, spin, i, j, -h)?)?;
            Ok(((spin, i, j), (plus - minus) / (2.0 * h)))
        })
        .collect::<Result<_, FunctionalError>>()?;

    let mut out = [Mat::zeros(n, n), Mat::zeros(n, n)];
    for ((spin, i, j), v) in entries {
        out[spin as usize][(i, j)] = v;
        out[spin as usize][(j, i)] = v;
    }
    Ok(out)
}

/// Richardson-extrapolated central difference: combines steps `h` and `h/2`
/// to cancel the leading `O(h^2)` truncation term.
pub fn fd_gradient_richardson<F>(
    energy: F,
    gamma: &DensityMatrix,
    h: f64,
) -> Result<[Mat; 2], FunctionalError>
where
    F: Fn(&DensityMatrix) -> Result<f64, FunctionalError> + Sync,
{
    let coarse = fd_gradient(&energy, gamma, h)?;
    let fine = fd_gradient(&energy, gamma, 0.5 * h)?;
    let mut out = coarse;
    for s in 0..2 {
        out[s] = (&fine[s] * 4.0 - &out[s]) / 3.0;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::frob_inner;

    fn frobenius_sq(g: &DensityMatrix) -> Result<f64, FunctionalError> {
        Ok(SPINS
            .iter()
            .map(|&s| frob_inner(g.block(s), g.block(s)))
            .sum())
    }

    #[test]
    fn quadratic_calibration_gives_two_gamma() {
        let up = Mat::from_row_slice(3, 3, &[0.5, 0.2, -0.1, 0.2, 0.4, 0.0, -0.1, 0.0, 0.3]);
        let dn = Mat::from_row_slice(3, 3, &[0.6, 0.1, 0.0, 0.1, 0.2, 0.05, 0.0, 0.05, 0.35]);
        let g = DensityMatrix::new(up, dn).unwrap();
        let grad = fd_gradient(frobenius_sq, &g, 1e-5).unwrap();
        for spin in SPINS {
            let expect = g.block(spin) * 2.0;
            let diff = &grad[spin as usize] - expect;
            assert!(crate::mat::frob_norm(&diff) < 1e-9);
        }
    }

    #[test]
    fn richardson_matches_quadratic_exactly() {
        let g = DensityMatrix::restricted(Mat::from_row_slice(
            2,
            2,
            &[0.7, 0.25, 0.25, 0.3],
        ))
        .unwrap();
        let grad = fd_gradient_richardson(frobenius_sq, &g, 1e-4).unwrap();
        let diff = &grad[0] - g.block(Spin::Up) * 2.0;
        assert!(crate::mat::frob_norm(&diff) < 1e-10);
    }
}
