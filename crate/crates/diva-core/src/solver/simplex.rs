//! Minimization over probability-simplex weights.

use super::SolverError;
use crate::functionals::FunctionalError;
use crate::mat::Mat;
use crate::rdm::{DensityMatrix, RdmError, SPINS};

/// Parameter counts below this use the derivative-free simplex search;
/// larger problems run projected gradient.
const DERIVATIVE_FREE_LIMIT: usize = 12;

/// Euclidean projection of `z` onto the probability simplex.
pub fn project_simplex(z: &mut [f64]) {
    let n = z.len();
    let mut u: Vec<f64> = z.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        css += uj;
        let t = (css - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    let mut sum = 0.0;
    for zi in z.iter_mut() {
        *zi = (*zi - theta).max(0.0);
        sum += *zi;
    }
    // renormalize away roundoff so downstream weight checks hold exactly
    if sum > 0.0 {
        for zi in z.iter_mut() {
            *zi /= sum;
        }
    } else {
        let w = 1.0 / n as f64;
        z.iter_mut().for_each(|zi| *zi = w);
    }
}

/// Linear combination without the convex-weight validation; used by
/// finite differences that probe just outside the simplex.
fn lincombine(members: &[&DensityMatrix], weights: &[f64]) -> Result<DensityMatrix, RdmError> {
    let n = members[0].n_spatial();
    let mut blocks = [Mat::zeros(n, n), Mat::zeros(n, n)];
    for (m, &w) in members.iter().zip(weights) {
        for spin in SPINS {
            blocks[spin as usize] += m.block(spin) * w;
        }
    }
    let [up, down] = blocks;
    DensityMatrix::new(up, down)
}

struct WeightProblem<'a, F> {
    members: Vec<&'a DensityMatrix>,
    energy: F,
}

impl<'a, F> WeightProblem<'a, F>
where
    F: Fn(&DensityMatrix) -> Result<f64, FunctionalError>,
{
    fn eval(&self, z: &[f64]) -> Result<f64, SolverError> {
        let gamma = lincombine(&self.members, z).map_err(FunctionalError::from)?;
        Ok((self.energy)(&gamma)?)
    }

    fn eval_projected(&self, z: &[f64]) -> Result<(Vec<f64>, f64), SolverError> {
        let mut p = z.to_vec();
        project_simplex(&mut p);
        let v = self.eval(&p)?;
        Ok((p, v))
    }

    /// Central difference in weight space; probes may leave the simplex by
    /// `h`, which the linear combination tolerates.
    fn grad(&self, z: &[f64], h: f64) -> Result<Vec<f64>, SolverError> {
        let mut g = vec![0.0; z.len()];
        let mut work = z.to_vec();
        for i in 0..z.len() {
            work[i] = z[i] + h;
            let plus = self.eval(&work)?;
            work[i] = z[i] - h;
            let minus = self.eval(&work)?;
            work[i] = z[i];
            g[i] = (plus - minus) / (2.0 * h);
        }
        Ok(g)
    }
}

/// Spectral projected gradient on the simplex: Barzilai-Borwein steps with
/// a non-monotone (memory 10) Armijo acceptance.
fn projected_gradient<F>(
    problem: &WeightProblem<'_, F>,
    z0: Vec<f64>,
    max_iter: usize,
) -> Result<(Vec<f64>, f64), SolverError>
where
    F: Fn(&DensityMatrix) -> Result<f64, FunctionalError>,
{
    let mut z = z0;
    let mut fz = problem.eval(&z)?;
    let mut best = (z.clone(), fz);
    let mut g = problem.grad(&z, 1e-7)?;
    let mut alpha: f64 = 1.0;
    let mut recent = std::collections::VecDeque::from(vec![fz]);

    for _ in 0..max_iter {
        // projected gradient residual: stop when the feasible descent
        // direction vanishes
        let mut probe: Vec<f64> = z.iter().zip(&g).map(|(&zi, &gi)| zi - gi).collect();
        project_simplex(&mut probe);
        let residual: f64 = probe
            .iter()
            .zip(&z)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if residual < 1e-12 {
            break;
        }

        let f_ref = recent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut step = alpha.clamp(1e-10, 1e10);
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = z.iter().zip(&g).map(|(&zi, &gi)| zi - step * gi).collect();
            let (trial, ft) = problem.eval_projected(&trial)?;
            let decrease: f64 = trial
                .iter()
                .zip(&z)
                .zip(&g)
                .map(|((&t, &zi), &gi)| gi * (t - zi))
                .sum();
            if ft <= f_ref + 1e-4 * decrease || ft < fz - 1e-15 {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((z_new, f_new)) = accepted else {
            break; // no simplex point along the gradient improves
        };
        let g_new = problem.grad(&z_new, 1e-7)?;
        // BB1 step from the last displacement
        let mut sy = 0.0;
        let mut ss = 0.0;
        for i in 0..z.len() {
            let s = z_new[i] - z[i];
            let y = g_new[i] - g[i];
            sy += s * y;
            ss += s * s;
        }
        alpha = if sy > 1e-16 { ss / sy } else { 1.0 };

        let stalled = (fz - f_new).abs() < 1e-14 && residual < 1e-8;
        z = z_new;
        fz = f_new;
        g = g_new;
        if fz < best.1 {
            best = (z.clone(), fz);
        }
        recent.push_back(fz);
        if recent.len() > 10 {
            recent.pop_front();
        }
        if stalled {
            break;
        }
    }
    if fz <= best.1 {
        Ok((z, fz))
    } else {
        Ok(best)
    }
}

/// Nelder–Mead over projected weights; keeps the best point ever seen so
/// the result can only improve on the start.
fn nelder_mead<F>(
    problem: &WeightProblem<'_, F>,
    z0: Vec<f64>,
    max_eval: usize,
) -> Result<(Vec<f64>, f64), SolverError>
where
    F: Fn(&DensityMatrix) -> Result<f64, FunctionalError>,
{
    let dim = z0.len();
    let evals = std::cell::Cell::new(0usize);
    let eval = |z: &[f64]| -> Result<(Vec<f64>, f64), SolverError> {
        evals.set(evals.get() + 1);
        problem.eval_projected(z)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let (p0, f0) = eval(&z0)?;
    let mut best = (p0.clone(), f0);
    simplex.push((p0, f0));
    for i in 0..dim {
        let mut zi = z0.clone();
        zi[i] += 0.15;
        let (p, f) = eval(&zi)?;
        if f < best.1 {
            best = (p.clone(), f);
        }
        simplex.push((p, f));
    }

    while evals.get() < max_eval {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        if simplex[0].1 < best.1 {
            best = simplex[0].clone();
        }
        let spread = simplex[dim].1 - simplex[0].1;
        if spread < 1e-13 {
            break;
        }
        // centroid of all but the worst
        let mut centroid = vec![0.0; dim];
        for (p, _) in &simplex[..dim] {
            for (c, &pi) in centroid.iter_mut().zip(p) {
                *c += pi / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&worst.0)
            .map(|(&c, &w)| c + (c - w))
            .collect();
        let (pr, fr) = eval(&reflect)?;
        if fr < simplex[0].1 {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(&c, &w)| c + 2.0 * (c - w))
                .collect();
            let (pe, fe) = eval(&expand)?;
            simplex[dim] = if fe < fr { (pe, fe) } else { (pr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (pr, fr);
        } else {
            let contract: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(&c, &w)| c + 0.5 * (w - c))
                .collect();
            let (pc, fc) = eval(&contract)?;
            if fc < worst.1 {
                simplex[dim] = (pc, fc);
            } else {
                // shrink toward the best vertex
                let anchor = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let z: Vec<f64> = anchor
                        .iter()
                        .zip(&entry.0)
                        .map(|(&a, &e)| a + 0.5 * (e - a))
                        .collect();
                    *entry = eval(&z)?;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    if simplex[0].1 < best.1 {
        best = simplex[0].clone();
    }
    Ok(best)
}

/// Minimize the energy over `gamma(z) = z_0 anchor + sum_r z_r member_r`
/// with `z` on the probability simplex.
///
/// `z_start` warm-starts the search (it is padded with zero weight for a
/// freshly added member), which guarantees the result is no worse than the
/// previous iterate. Small parameter counts use Nelder–Mead with a
/// projected-gradient polish, larger ones projected gradient alone.
pub fn multi_minimize<F>(
    anchor: &DensityMatrix,
    members: &[DensityMatrix],
    energy: F,
    z_start: Option<&[f64]>,
) -> Result<(Vec<f64>, DensityMatrix), SolverError>
where
    F: Fn(&DensityMatrix) -> Result<f64, FunctionalError>,
{
    if members.is_empty() {
        return Err(SolverError::Direction {
            reason: "multi-parameter minimization needs at least one boundary member".into(),
        });
    }
    let dim = members.len() + 1;
    let mut all: Vec<&DensityMatrix> = Vec::with_capacity(dim);
    all.push(anchor);
    all.extend(members.iter());
    let problem = WeightProblem {
        members: all,
        energy,
    };

    let mut z0 = match z_start {
        Some(z) => {
            let mut v = z.to_vec();
            v.resize(dim, 0.0);
            v
        }
        None => vec![1.0 / dim as f64; dim],
    };
    project_simplex(&mut z0);

    let (z, f) = if dim < DERIVATIVE_FREE_LIMIT {
        let (z_nm, f_nm) = nelder_mead(&problem, z0, 400 * dim)?;
        let (z_pg, f_pg) = projected_gradient(&problem, z_nm.clone(), 200)?;
        if f_pg <= f_nm {
            (z_pg, f_pg)
        } else {
            (z_nm, f_nm)
        }
    } else {
        projected_gradient(&problem, z0, 300)?
    };
    let _ = f;
    let gamma = crate::rdm::convex_combine(
        &std::iter::once(anchor.clone())
            .chain(members.iter().cloned())
            .collect::<Vec<_>>(),
        &z,
    )
    .map_err(FunctionalError::from)?;
    Ok((z, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdm::Spin;

    fn diag_rdm(entries: &[f64]) -> DensityMatrix {
        DensityMatrix::restricted(Mat::from_diagonal(&crate::mat::Vec64::from_vec(
            entries.to_vec(),
        )))
        .unwrap()
    }

    #[test]
    fn projection_hits_the_simplex() {
        let mut z = vec![0.9, 0.9, -0.3];
        project_simplex(&mut z);
        assert!((z.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(z.iter().all(|&v| v >= 0.0));

        let mut z = vec![0.2, 0.3, 0.5];
        project_simplex(&mut z);
        assert!((z[0] - 0.2).abs() < 1e-12 && (z[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_single_member_keeps_energy() {
        let anchor = diag_rdm(&[0.5, 0.5]);
        let member = anchor.clone();
        let (z, gamma) =
            multi_minimize(&anchor, &[member], |g| Ok(g.block(Spin::Up)[(0, 0)]), None).unwrap();
        assert!((z.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!((gamma.block(Spin::Up)[(0, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn linear_energy_concentrates_on_best_vertex() {
        let anchor = diag_rdm(&[1.0, 0.0]);
        let low = diag_rdm(&[0.0, 1.0]); // energy 0 under gamma_00
        let high = diag_rdm(&[1.0, 0.0]);
        let (z, gamma) = multi_minimize(
            &anchor,
            &[low, high],
            |g| Ok(g.block(Spin::Up)[(0, 0)]),
            None,
        )
        .unwrap();
        assert!(gamma.block(Spin::Up)[(0, 0)] < 1e-6, "weights {z:?}");
        assert!((z[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn warm_start_never_regresses() {
        let anchor = diag_rdm(&[0.3, 0.7]);
        let m1 = diag_rdm(&[1.0, 0.0]);
        let m2 = diag_rdm(&[0.0, 1.0]);
        let energy =
            |g: &DensityMatrix| Ok((g.block(Spin::Up)[(0, 0)] - 0.42) * (g.block(Spin::Up)[(0, 0)] - 0.42));
        let start = vec![0.0, 0.42, 0.58];
        let f_start = (0.42f64 - 0.42).powi(2);
        let (_, gamma) = multi_minimize(&anchor, &[m1, m2], energy, Some(&start)).unwrap();
        let f_end = (gamma.block(Spin::Up)[(0, 0)] - 0.42).powi(2);
        assert!(f_end <= f_start + 1e-12);
    }
}
