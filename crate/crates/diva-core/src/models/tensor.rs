//! Dense storage for the two-electron integral tensor.

/// Two-electron integrals `(ij|kl)` in chemists' notation with the 8-fold
/// permutation symmetry of real orbitals:
/// `(ij|kl) = (ji|kl) = (ij|lk) = (ji|lk) = (kl|ij) = ...`.
///
/// Stored dense; molecular systems here stay well below ~30 orbitals.
#[derive(Debug, Clone)]
pub struct TwoBodyTensor {
    n: usize,
    data: Vec<f64>,
}

impl TwoBodyTensor {
    pub fn zeros(n: usize) -> Self {
        TwoBodyTensor {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    pub fn n_orbitals(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.n + j) * self.n + k) * self.n + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[self.idx(i, j, k, l)]
    }

    /// Assign `(ij|kl)` together with all permutation-symmetric images.
    pub fn set_symmetric(&mut self, i: usize, j: usize, k: usize, l: usize, value: f64) {
        let images = [
            (i, j, k, l),
            (j, i, k, l),
            (i, j, l, k),
            (j, i, l, k),
            (k, l, i, j),
            (l, k, i, j),
            (k, l, j, i),
            (l, k, j, i),
        ];
        for (a, b, c, d) in images {
            let at = self.idx(a, b, c, d);
            self.data[at] = value;
        }
    }

    /// Maximum violation of the 8-fold symmetry over sampled quadruples.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        let stride = (n / 4).max(1);
        for i in (0..n).step_by(stride) {
            for j in (0..n).step_by(stride) {
                for k in (0..n).step_by(stride) {
                    for l in (0..n).step_by(stride) {
                        let v = self.get(i, j, k, l);
                        for w in [
                            self.get(j, i, k, l),
                            self.get(i, j, l, k),
                            self.get(k, l, i, j),
                        ] {
                            worst = worst.max((v - w).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    /// Unique canonical representatives `(i, j, k, l, value)` with
    /// `i >= j`, `k >= l`, `(i, j) >= (k, l)` and nonzero value.
    pub fn canonical_entries(&self) -> Vec<(usize, usize, usize, usize, f64)> {
        let n = self.n;
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..=i {
                for k in 0..=i {
                    for l in 0..=k {
                        if (k, l) > (i, j) {
                            continue;
                        }
                        let v = self.get(i, j, k, l);
                        if v != 0.0 {
                            out.push((i, j, k, l, v));
                        }
                    }
                }
            }
        }
        out
    }
}
