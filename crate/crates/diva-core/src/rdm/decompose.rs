//! Convex decomposition of a representable matrix into idempotent extreme
//! points.
//!
//! Working in the diagonal representation, a fractional occupation `eta_k`
//! splits the matrix into two pieces with `eta_k` snapped to 0 and 1 and
//! weights `1 - eta_k` and `eta_k`; each piece has one fewer fractional
//! occupation, so recursion terminates with at most `2^F` idempotents. The
//! eigenvectors never change, only the occupation patterns do.

use super::{classify, DensityMatrix, DomainTag, RdmError, Spin, TOL_BOUNDARY};
use crate::mat::{Mat, Vec64};

/// Weighted set of density matrices reconstructing a target.
#[derive(Debug, Clone)]
pub struct ConvexDecomposition {
    pub weights: Vec<f64>,
    pub members: Vec<DensityMatrix>,
}

impl ConvexDecomposition {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `sum_s z_s member_s`.
    pub fn reconstruct(&self) -> Result<DensityMatrix, RdmError> {
        super::convex_combine(&self.members, &self.weights)
    }
}

/// One binary occupation pattern with its accumulated weight.
fn split_occupations(eta: &[f64], tol_integer: f64) -> Vec<(f64, Vec<f64>)> {
    // Snap near-integer occupations first so numerical noise does not
    // double the recursion depth.
    let snapped: Vec<f64> = eta
        .iter()
        .map(|&e| {
            if e.abs() <= tol_integer {
                0.0
            } else if (1.0 - e).abs() <= tol_integer {
                1.0
            } else {
                e
            }
        })
        .collect();

    let mut leaves: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut stack = vec![(1.0, snapped)];
    while let Some((weight, current)) = stack.pop() {
        // Fractional occupation closest to 1/2; ties go to the lowest index.
        let pick = current
            .iter()
            .enumerate()
            .filter(|(_, &e)| e != 0.0 && e != 1.0)
            .min_by(|(i, a), (j, b)| {
                let da = (*a - 0.5).abs();
                let db = (*b - 0.5).abs();
                da.partial_cmp(&db).unwrap().then(i.cmp(j))
            })
            .map(|(i, &e)| (i, e));
        match pick {
            None => leaves.push((weight, current)),
            Some((k, eta_k)) => {
                let mut low = current.clone();
                low[k] = 0.0;
                let mut high = current;
                high[k] = 1.0;
                stack.push((weight * (1.0 - eta_k), low));
                stack.push((weight * eta_k, high));
            }
        }
    }
    leaves
}

fn build_block(pattern: &[f64], orbitals: &Mat) -> Mat {
    let eta = Mat::from_diagonal(&Vec64::from_vec(pattern.to_vec()));
    orbitals * eta * orbitals.transpose()
}

/// Decompose a representable matrix into `BoundaryIdempotent` members with
/// probability-simplex weights.
///
/// Spin-restricted inputs (equal blocks) are decomposed in lockstep so both
/// blocks of each member carry the same occupation pattern; unrestricted
/// inputs take the product of the per-block decompositions.
pub fn idempotent_decompose(
    gamma: &DensityMatrix,
    tol_integer: f64,
) -> Result<ConvexDecomposition, RdmError> {
    let class = classify(gamma, TOL_BOUNDARY);
    if class.tag == DomainTag::Outside {
        return Err(RdmError::NotRepresentable {
            pseudo_distance: class.pseudo_distance,
        });
    }

    if gamma.is_restricted(1e-12) {
        let spec = gamma.spectral(Spin::Up);
        let leaves = split_occupations(&spec.occupations, tol_integer);
        let mut weights = Vec::with_capacity(leaves.len());
        let mut members = Vec::with_capacity(leaves.len());
        for (w, pattern) in leaves {
            weights.push(w);
            members.push(DensityMatrix::restricted(build_block(
                &pattern,
                &spec.orbitals,
            ))?);
        }
        return Ok(ConvexDecomposition { weights, members });
    }

    let up_spec = gamma.spectral(Spin::Up);
    let dn_spec = gamma.spectral(Spin::Down);
    let up_leaves = split_occupations(&up_spec.occupations, tol_integer);
    let dn_leaves = split_occupations(&dn_spec.occupations, tol_integer);
    let mut weights = Vec::with_capacity(up_leaves.len() * dn_leaves.len());
    let mut members = Vec::with_capacity(up_leaves.len() * dn_leaves.len());
    for (wu, pu) in &up_leaves {
        let up_block = build_block(pu, &up_spec.orbitals);
        for (wd, pd) in &dn_leaves {
            weights.push(wu * wd);
            members.push(DensityMatrix::new(
                up_block.clone(),
                build_block(pd, &dn_spec.orbitals),
            )?);
        }
    }
    Ok(ConvexDecomposition { weights, members })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdm::{frobenius_distance, TOL_INTEGER};

    fn diag_rdm(entries: &[f64]) -> DensityMatrix {
        let block = Mat::from_diagonal(&Vec64::from_vec(entries.to_vec()));
        DensityMatrix::restricted(block).unwrap()
    }

    fn sorted_pairs(d: &ConvexDecomposition) -> Vec<(f64, Vec<f64>)> {
        let mut pairs: Vec<(f64, Vec<f64>)> = d
            .members
            .iter()
            .zip(&d.weights)
            .map(|(m, &w)| {
                let diag: Vec<f64> = (0..m.n_spatial())
                    .map(|i| m.block(Spin::Up)[(i, i)].round())
                    .collect();
                (w, diag)
            })
            .collect();
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        pairs
    }

    #[test]
    fn half_filled_two_level_splits_evenly() {
        let g = diag_rdm(&[0.5, 0.5]);
        let d = idempotent_decompose(&g, TOL_INTEGER).unwrap();
        assert_eq!(d.len(), 4); // 2^F with F = 2
        let total: f64 = d.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let rec = d.reconstruct().unwrap();
        assert!(frobenius_distance(&rec, &g).unwrap() < 1e-10);
    }

    #[test]
    fn hand_executed_three_level_case() {
        // diag(0.3, 0.7, 1.0): two fractional occupations give four members
        // with weights (1-0.3)(1-0.7), (1-0.3)(0.7), (0.3)(1-0.7), (0.3)(0.7).
        let g = diag_rdm(&[0.3, 0.7, 1.0]);
        let d = idempotent_decompose(&g, TOL_INTEGER).unwrap();
        assert_eq!(d.len(), 4);

        let pairs = sorted_pairs(&d);
        let expect = [
            (0.49, vec![0.0, 1.0, 1.0]),
            (0.21, vec![0.0, 0.0, 1.0]),
            (0.21, vec![1.0, 1.0, 1.0]),
            (0.09, vec![1.0, 0.0, 1.0]),
        ];
        // the two weight-0.21 members may come back in either order
        assert!((pairs[0].0 - 0.49).abs() < 1e-12 && pairs[0].1 == expect[0].1);
        assert!((pairs[3].0 - 0.09).abs() < 1e-12 && pairs[3].1 == expect[3].1);
        for p in &pairs[1..3] {
            assert!((p.0 - 0.21).abs() < 1e-12);
            assert!(p.1 == expect[1].1 || p.1 == expect[2].1);
        }

        let total: f64 = d.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mean_trace: f64 = d
            .members
            .iter()
            .zip(&d.weights)
            .map(|(m, &w)| w * m.trace(Spin::Up))
            .sum();
        assert!((mean_trace - 2.0).abs() < 1e-12);
        let rec = d.reconstruct().unwrap();
        assert!(frobenius_distance(&rec, &g).unwrap() < 1e-10);
    }

    #[test]
    fn idempotent_input_is_its_own_decomposition() {
        let g = diag_rdm(&[1.0, 0.0, 1.0]);
        let d = idempotent_decompose(&g, TOL_INTEGER).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d.weights[0] - 1.0).abs() < 1e-14);
        assert!(frobenius_distance(&d.members[0], &g).unwrap() < 1e-12);
    }

    #[test]
    fn near_integer_occupations_are_snapped() {
        let g = diag_rdm(&[1.0 - 1e-10, 1e-10, 0.4]);
        let d = idempotent_decompose(&g, TOL_INTEGER).unwrap();
        assert_eq!(d.len(), 2); // only the 0.4 splits
    }

    #[test]
    fn rejects_non_representable() {
        let g = diag_rdm(&[1.2, -0.2]);
        assert!(matches!(
            idempotent_decompose(&g, TOL_INTEGER),
            Err(RdmError::NotRepresentable { .. })
        ));
    }

    #[test]
    fn unrestricted_blocks_take_product_form() {
        let up = Mat::from_diagonal(&Vec64::from_vec(vec![0.5, 1.0]));
        let dn = Mat::from_diagonal(&Vec64::from_vec(vec![0.25, 0.0]));
        let g = DensityMatrix::new(up, dn).unwrap();
        let d = idempotent_decompose(&g, TOL_INTEGER).unwrap();
        assert_eq!(d.len(), 4); // 2^1 * 2^1
        let rec = d.reconstruct().unwrap();
        assert!(frobenius_distance(&rec, &g).unwrap() < 1e-10);
    }
}
