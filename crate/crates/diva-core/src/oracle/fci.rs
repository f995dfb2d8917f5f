//! Full configuration interaction on a bit-string occupation basis.
//!
//! Determinants are `(up_mask, dn_mask)` pairs with fixed electron counts
//! per spin; the fermionic sign of `c^+_p c_q` is the parity of the
//! occupied orbitals passed over. Local-U lattice models use precomputed
//! hopping connectivity; full-tensor models apply the two-electron operator
//! through per-sector single-excitation lists. Small problems are
//! diagonalized densely, larger ones with a Lanczos iteration started from
//! a fixed-seed vector so results are reproducible bit for bit.

use crate::mat::Mat;
use crate::models::{Interaction, ManyBodyModel, TwoBodyTensor};

/// All `n`-bit masks over `width` orbitals with exactly `n` bits set,
/// ascending.
pub fn combinations(width: usize, n: usize) -> Vec<u64> {
    let mut out = Vec::new();
    if n > width {
        return out;
    }
    if n == 0 {
        out.push(0);
        return out;
    }
    // Gosper's hack enumerates same-popcount masks in increasing order
    let mut v: u64 = (1 << n) - 1;
    let limit: u64 = 1 << width;
    while v < limit {
        out.push(v);
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
        if c == 0 {
            break;
        }
    }
    out
}

#[inline]
fn parity_below(mask: u64, orb: usize) -> f64 {
    if (mask & ((1u64 << orb) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Apply `c^+_p c_q` to a mask: `Some((new_mask, sign))` or `None`.
#[inline]
pub fn apply_single(mask: u64, p: usize, q: usize) -> Option<(u64, f64)> {
    if mask & (1 << q) == 0 {
        return None;
    }
    let mut sign = parity_below(mask, q);
    let m1 = mask & !(1u64 << q);
    if m1 & (1 << p) != 0 {
        return None;
    }
    sign *= parity_below(m1, p);
    Some((m1 | (1 << p), sign))
}

/// One spin sector: masks, index lookup, and every nonzero
/// `<target| c^+_p c_q |source>` element.
pub struct SpinSector {
    pub masks: Vec<u64>,
    /// singles[source] = (p, q, sign, target_index)
    pub singles: Vec<Vec<(usize, usize, f64, usize)>>,
}

impl SpinSector {
    pub fn build(width: usize, electrons: usize) -> SpinSector {
        let masks = combinations(width, electrons);
        let index = |m: u64| masks.binary_search(&m).expect("mask in sector");
        let singles = masks
            .iter()
            .map(|&mask| {
                let mut list = Vec::new();
                for q in 0..width {
                    for p in 0..width {
                        if let Some((m2, sign)) = apply_single(mask, p, q) {
                            list.push((p, q, sign, index(m2)));
                        }
                    }
                }
                list
            })
            .collect();
        SpinSector { masks, singles }
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }
}

/// Assembled many-body problem with a matrix-vector product.
pub struct FciProblem {
    pub up: SpinSector,
    pub dn: SpinSector,
    pub dimension: usize,
    kind: HamiltonianKind,
}

enum HamiltonianKind {
    /// diagonal one-body + hopping + U n_up n_dn
    LocalU {
        u: f64,
        t_diag: Vec<f64>,
        /// per up-source: (target, amplitude) including the sign and t
        hop_up: Vec<Vec<(usize, f64)>>,
        hop_dn: Vec<Vec<(usize, f64)>>,
    },
    FullTensor {
        t_eff: Mat,
        tensor: TwoBodyTensor,
    },
}

impl FciProblem {
    pub fn build(model: &ManyBodyModel) -> FciProblem {
        let n = model.n_spatial;
        let up = SpinSector::build(n, model.n_electrons.0);
        let dn = SpinSector::build(n, model.n_electrons.1);
        let dimension = up.len() * dn.len();
        let kind = match &model.interaction {
            Interaction::LocalU { u } => {
                let t_diag: Vec<f64> = (0..n).map(|i| model.one_body[(i, i)]).collect();
                let hop = |sector: &SpinSector| {
                    sector
                        .singles
                        .iter()
                        .map(|list| {
                            list.iter()
                                .filter(|(p, q, _, _)| p != q && model.one_body[(*p, *q)] != 0.0)
                                .map(|&(p, q, sign, target)| (target, model.one_body[(p, q)] * sign))
                                .collect::<Vec<_>>()
                        })
                        .collect::<Vec<_>>()
                };
                HamiltonianKind::LocalU {
                    u: *u,
                    t_diag,
                    hop_up: hop(&up),
                    hop_dn: hop(&dn),
                }
            }
            Interaction::FullTensor(tensor) => {
                // fold the normal-ordering correction -(1/2) sum_q (pq|qs)
                // into the one-body part
                let mut t_eff = model.one_body.clone();
                for p in 0..n {
                    for s in 0..n {
                        let mut corr = 0.0;
                        for q in 0..n {
                            corr += tensor.get(p, q, q, s);
                        }
                        t_eff[(p, s)] -= 0.5 * corr;
                    }
                }
                HamiltonianKind::FullTensor {
                    t_eff,
                    tensor: tensor.clone(),
                }
            }
        };
        FciProblem {
            up,
            dn,
            dimension,
            kind,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        let ndn = self.dn.len();
        match &self.kind {
            HamiltonianKind::LocalU {
                u,
                t_diag,
                hop_up,
                hop_dn,
            } => {
                for (iu, &um) in self.up.masks.iter().enumerate() {
                    let base = iu * ndn;
                    for (id, &dm) in self.dn.masks.iter().enumerate() {
                        let mut diag = *u * (um & dm).count_ones() as f64;
                        if t_diag.iter().any(|&t| t != 0.0) {
                            for (i, &t) in t_diag.iter().enumerate() {
                                let occ = ((um >> i) & 1) + ((dm >> i) & 1);
                                diag += t * occ as f64;
                            }
                        }
                        y[base + id] += diag * x[base + id];
                    }
                    for &(ju, amp) in &hop_up[iu] {
                        let tbase = ju * ndn;
                        for id in 0..ndn {
                            y[tbase + id] += amp * x[base + id];
                        }
                    }
                }
                for (id, list) in hop_dn.iter().enumerate() {
                    for &(jd, amp) in list {
                        for iu in 0..self.up.len() {
                            y[iu * ndn + jd] += amp * x[iu * ndn + id];
                        }
                    }
                }
            }
            HamiltonianKind::FullTensor { t_eff, tensor } => {
                for iu in 0..self.up.len() {
                    let base = iu * ndn;
                    // one-body and same-spin two-body in the up sector
                    for &(p, q, s1, ju) in &self.up.singles[iu] {
                        let tb = ju * ndn;
                        let tpq = t_eff[(p, q)];
                        if tpq != 0.0 {
                            for id in 0..ndn {
                                y[tb + id] += tpq * s1 * x[base + id];
                            }
                        }
                        for &(p2, q2, s2, ku) in &self.up.singles[ju] {
                            let w = 0.5 * tensor.get(p2, q2, p, q) * s1 * s2;
                            if w != 0.0 {
                                let kb = ku * ndn;
                                for id in 0..ndn {
                                    y[kb + id] += w * x[base + id];
                                }
                            }
                        }
                    }
                    // opposite-spin two-body
                    for id in 0..ndn {
                        let xv = x[base + id];
                        if xv == 0.0 {
                            continue;
                        }
                        for &(p, q, su, ju) in &self.up.singles[iu] {
                            for &(r, s, sd, jd) in &self.dn.singles[id] {
                                let w = tensor.get(p, q, r, s) * su * sd;
                                if w != 0.0 {
                                    y[ju * ndn + jd] += w * xv;
                                }
                            }
                        }
                    }
                }
                // one-body and same-spin two-body in the dn sector
                for id in 0..ndn {
                    for &(p, q, s1, jd) in &self.dn.singles[id] {
                        let tpq = t_eff[(p, q)];
                        if tpq != 0.0 {
                            for iu in 0..self.up.len() {
                                y[iu * ndn + jd] += tpq * s1 * x[iu * ndn + id];
                            }
                        }
                        for &(p2, q2, s2, kd) in &self.dn.singles[jd] {
                            let w = 0.5 * tensor.get(p2, q2, p, q) * s1 * s2;
                            if w != 0.0 {
                                for iu in 0..self.up.len() {
                                    y[iu * ndn + kd] += w * x[iu * ndn + id];
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// Spin-resolved 1-RDM of a normalized many-body vector.
    pub fn one_rdm(&self, x: &[f64], n_orb: usize) -> [Mat; 2] {
        let ndn = self.dn.len();
        let mut up = Mat::zeros(n_orb, n_orb);
        let mut dn = Mat::zeros(n_orb, n_orb);
        for iu in 0..self.up.len() {
            let base = iu * ndn;
            for &(p, q, sign, ju) in &self.up.singles[iu] {
                let tb = ju * ndn;
                let mut acc = 0.0;
                for id in 0..ndn {
                    acc += x[tb + id] * x[base + id];
                }
                up[(p, q)] += sign * acc;
            }
        }
        for id in 0..ndn {
            for &(p, q, sign, jd) in &self.dn.singles[id] {
                let mut acc = 0.0;
                for iu in 0..self.up.len() {
                    acc += x[iu * ndn + jd] * x[iu * ndn + id];
                }
                dn[(p, q)] += sign * acc;
            }
        }
        [up, dn]
    }

    /// Per-site `<n_up n_dn>` of a normalized vector.
    pub fn double_occupations(&self, x: &[f64], n_orb: usize) -> Vec<f64> {
        let ndn = self.dn.len();
        let mut d = vec![0.0; n_orb];
        for (iu, &um) in self.up.masks.iter().enumerate() {
            for (id, &dm) in self.dn.masks.iter().enumerate() {
                let w = x[iu * ndn + id];
                if w == 0.0 {
                    continue;
                }
                let mut both = um & dm;
                while both != 0 {
                    let i = both.trailing_zeros() as usize;
                    d[i] += w * w;
                    both &= both - 1;
                }
            }
        }
        d
    }
}

fn splitmix(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z = z ^ (z >> 31);
    (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

/// Lowest eigenpair by Lanczos with full reorthogonalization and a fixed
/// starting seed.
pub fn lowest_eigenpair(problem: &FciProblem, max_iter: usize) -> (f64, Vec<f64>) {
    let dim = problem.dimension;
    if dim <= 400 {
        // dense route for small problems
        let mut h = Mat::zeros(dim, dim);
        let mut x = vec![0.0; dim];
        let mut y = vec![0.0; dim];
        for j in 0..dim {
            x[j] = 1.0;
            problem.matvec(&x, &mut y);
            for i in 0..dim {
                h[(i, j)] = y[i];
            }
            x[j] = 0.0;
        }
        let (vals, vecs) = crate::mat::sorted_symmetric_eigen(&h);
        return (vals[0], vecs.column(0).iter().copied().collect());
    }

    let mut seed: u64 = 0x5eed;
    let mut q = vec![0.0; dim];
    for v in q.iter_mut() {
        *v = splitmix(&mut seed);
    }
    normalize(&mut q);

    let mut basis: Vec<Vec<f64>> = vec![q.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut last_theta = f64::INFINITY;
    let max_iter = max_iter.min(dim);

    for k in 0..max_iter {
        problem.matvec(&basis[k], &mut w);
        let alpha = dot(&w, &basis[k]);
        alphas.push(alpha);
        // full reorthogonalization, two passes
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                axpy(&mut w, -c, b);
            }
        }
        let beta = norm(&w);
        let theta = tridiag_lowest(&alphas, &betas).0;
        let done = beta < 1e-13 || (last_theta - theta).abs() < 1e-13 * theta.abs().max(1.0);
        last_theta = theta;
        if done || k + 1 == max_iter {
            break;
        }
        betas.push(beta);
        let mut next = w.clone();
        scale(&mut next, 1.0 / beta);
        basis.push(next);
    }

    let (theta, coeffs) = tridiag_lowest(&alphas, &betas);
    let mut x = vec![0.0; dim];
    for (c, b) in coeffs.iter().zip(&basis) {
        axpy(&mut x, *c, b);
    }
    normalize(&mut x);
    (theta, x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &mut [f64]) {
    let n = norm(a);
    if n > 0.0 {
        scale(a, 1.0 / n);
    }
}

fn scale(a: &mut [f64], c: f64) {
    a.iter_mut().for_each(|x| *x *= c);
}

fn axpy(y: &mut [f64], c: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

/// Ground eigenpair of the symmetric tridiagonal (alphas, betas).
fn tridiag_lowest(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>) {
    let k = alphas.len();
    let mut t = Mat::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let (vals, vecs) = crate::mat::sorted_symmetric_eigen(&t);
    (vals[0], vecs.column(0).iter().copied().collect())
}
