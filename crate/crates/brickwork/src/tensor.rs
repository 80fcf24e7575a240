//! Dense complex matrices and tensors for small-dimension circuit algebra.
//!
//! Everything is row-major over `Complex64`. Matrices up to a few thousand
//! rows show up (the folded two-cell channel at D = 6 is 1296 x 1296), so
//! matrix products are dispatched to faer while index shuffles stay naive.

use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        assert!(rows.iter().all(|row| row.len() == c));
        CMatrix { rows: r, cols: c, data: rows.iter().flat_map(|row| row.iter().copied()).collect() }
    }

    /// Diagonal matrix from its diagonal entries.
    pub fn diag(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn as_faer(&self) -> MatRef<'_, C64> {
        MatRef::from_row_major_slice(&self.data, self.rows, self.cols)
    }

    fn from_faer(m: Mat<C64>) -> Self {
        CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        CMatrix::from_faer(self.as_faer() * other.as_faer())
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        let rhs = MatRef::from_row_major_slice(v, v.len(), 1);
        let out = self.as_faer() * rhs;
        (0..self.rows).map(|i| out[(i, 0)]).collect()
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn dagger(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// max-entry residual of `self† self - I`.
    pub fn unitarity_residual(&self) -> f64 {
        self.dagger().matmul(self).max_abs_diff(&CMatrix::identity(self.cols))
    }

    /// Hilbert-Schmidt normalize: divide by the Frobenius norm so Tr(a† a) = 1.
    pub fn hs_normalize(&self) -> CMatrix {
        let n = self.frobenius_norm();
        assert!(n > 0.0, "cannot HS-normalize the zero matrix");
        self.scale(C64::new(1.0 / n, 0.0))
    }

    /// Row-major flatten into a column vector: vec(|m><n|) = |m> ⊗ |n>.
    pub fn vectorize(&self) -> Vec<C64> {
        self.data.clone()
    }

    /// Full eigendecomposition: (eigenvalues, eigenvectors as columns),
    /// sorted by decreasing eigenvalue modulus.
    pub fn eig(&self) -> (Vec<C64>, CMatrix) {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let m = Mat::<C64>::from_fn(n, n, |i, j| self[(i, j)]);
        let e = faer::linalg::solvers::Eigen::new(m.as_ref()).expect("eigendecomposition failed");
        let mut order: Vec<usize> = (0..n).collect();
        let s = e.S();
        order.sort_by(|&a, &b| s[b].norm().partial_cmp(&s[a].norm()).unwrap());
        let vals: Vec<C64> = order.iter().map(|&k| s[k]).collect();
        let vecs = CMatrix::from_fn(n, n, |i, j| e.U()[(i, order[j])]);
        (vals, vecs)
    }

    /// Eigenvalues sorted by decreasing modulus.
    pub fn spectrum(&self) -> Vec<C64> {
        assert_eq!(self.rows, self.cols);
        let m = Mat::<C64>::from_fn(self.rows, self.cols, |i, j| self[(i, j)]);
        let mut ev = m.eigenvalues().expect("eigenvalue computation failed");
        ev.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
        ev
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Reverse of [`CMatrix::vectorize`] for a square operator of dimension `d`.
pub fn unvectorize(v: &[C64], d: usize) -> CMatrix {
    assert_eq!(v.len(), d * d);
    CMatrix { rows: d, cols: d, data: v.to_vec() }
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// The space-time dual of a two-site gate: ũ[(j,l),(i,k)] = u[(k,l),(i,j)].
///
/// Legs follow the global convention: column index i·D+j puts the left site
/// first; the dual exchanges the roles of the left-in/left-out pair with the
/// time direction.
pub fn reshuffle_dual(u: &CMatrix, d: usize) -> CMatrix {
    assert_eq!(u.rows, d * d);
    assert_eq!(u.cols, d * d);
    CMatrix::from_fn(d * d, d * d, |r, c| {
        let (j, l) = (r / d, r % d);
        let (i, k) = (c / d, c % d);
        u[(k * d + l, i * d + j)]
    })
}

/// Fold a gate into the doubled (operator-space) picture: w = u ⊗ u*.
pub fn fold(u: &CMatrix) -> CMatrix {
    kron(u, &u.conj())
}

/// SWAP gate on two sites of local dimension `d`.
pub fn swap_gate(d: usize) -> CMatrix {
    CMatrix::from_fn(d * d, d * d, |r, c| {
        let (k, l) = (r / d, r % d);
        let (i, j) = (c / d, c % d);
        if k == j && l == i {
            ONE
        } else {
            ZERO
        }
    })
}

/// 180-degree rotation of the circuit diagram of a two-site gate: S uᵀ S.
pub fn rotate_gate(u: &CMatrix, d: usize) -> CMatrix {
    let s = swap_gate(d);
    s.matmul(&u.transpose()).matmul(&s)
}

/// Spatial mirror of a two-site gate: S u S.
pub fn mirror_gate(u: &CMatrix, d: usize) -> CMatrix {
    let s = swap_gate(d);
    s.matmul(u).matmul(&s)
}

/// Normalized identity vector |○> = vec(I_d)/√d in the folded single-site space.
pub fn bullet(d: usize) -> Vec<C64> {
    let s = 1.0 / (d as f64).sqrt();
    let mut v = vec![ZERO; d * d];
    for i in 0..d {
        v[i * d + i] = C64::new(s, 0.0);
    }
    v
}

/// vec(op) for a k-site operator, regrouped so each site's (ket, bra) pair of
/// indices is adjacent: (i_1, j_1, i_2, j_2, ...).
pub fn vec_site_grouped(op: &CMatrix, d: usize, k: usize) -> Vec<C64> {
    assert_eq!(op.rows, d.pow(k as u32));
    assert_eq!(op.cols, op.rows);
    let dims: Vec<usize> = vec![d; 2 * k];
    let t = Tensor::from_matrix(op, &dims);
    let perm: Vec<usize> = (0..k).flat_map(|s| [s, k + s]).collect();
    t.permute(&perm).into_vec()
}

/// Partial trace of an operator on dims `dims`, tracing out the sites flagged in `keep = false`.
pub fn partial_trace(op: &CMatrix, dims: &[usize], keep: &[bool]) -> CMatrix {
    assert_eq!(dims.len(), keep.len());
    let total: usize = dims.iter().product();
    assert_eq!(op.rows, total);
    assert_eq!(op.cols, total);
    let kept_dim: usize = dims.iter().zip(keep).filter(|(_, &k)| k).map(|(&d, _)| d).product();
    let traced_dim = total / kept_dim;

    // index arithmetic: decompose a full index into kept part and traced part
    let decompose = |mut idx: usize| -> (usize, usize) {
        let mut kept = 0usize;
        let mut traced = 0usize;
        for (pos, &d) in dims.iter().enumerate().rev() {
            let digit = idx % d;
            idx /= d;
            if keep[pos] {
                kept += digit * (dims[pos + 1..].iter().zip(&keep[pos + 1..]).filter(|(_, &k)| k).map(|(&d, _)| d).product::<usize>());
            } else {
                traced += digit * (dims[pos + 1..].iter().zip(&keep[pos + 1..]).filter(|(_, &k)| !k).map(|(&d, _)| d).product::<usize>());
            }
        }
        (kept, traced)
    };

    let mut out = CMatrix::zeros(kept_dim, kept_dim);
    for r in 0..total {
        let (kr, tr) = decompose(r);
        for c in 0..total {
            let (kc, tc) = decompose(c);
            if tr == tc {
                out[(kr, kc)] += op[(r, c)];
            }
        }
    }
    let _ = traced_dim;
    out
}

/// Haar-random unitary of dimension `n` from a seeded RNG (QR of a complex Gaussian).
pub fn haar_unitary(n: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_unitary_from_rng(n, &mut rng)
}

pub fn haar_unitary_from_rng(n: usize, rng: &mut impl Rng) -> CMatrix {
    // Box-Muller complex Gaussians, then QR with phase-fixed R diagonal.
    let mut g = Mat::<C64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            let r = (-2.0 * u1.ln()).sqrt();
            let th = 2.0 * std::f64::consts::PI * u2;
            g[(i, j)] = C64::new(r * th.cos(), r * th.sin());
        }
    }
    let qr = g.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    // multiply each column of Q by the phase of the matching diagonal of R
    CMatrix::from_fn(n, n, |i, j| {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        q[(i, j)] * phase
    })
}

/// Dense tensor with explicit leg dimensions, row-major strides.
#[derive(Clone, Debug)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<C64>,
}

impl Tensor {
    pub fn zeros(dims: &[usize]) -> Self {
        let n: usize = dims.iter().product();
        Tensor { dims: dims.to_vec(), data: vec![ZERO; n] }
    }

    pub fn from_matrix(m: &CMatrix, dims: &[usize]) -> Self {
        let n: usize = dims.iter().product();
        assert_eq!(n, m.rows * m.cols);
        Tensor { dims: dims.to_vec(), data: m.data.clone() }
    }

    pub fn from_vec(v: Vec<C64>, dims: &[usize]) -> Self {
        assert_eq!(v.len(), dims.iter().product::<usize>());
        Tensor { dims: dims.to_vec(), data: v }
    }

    pub fn scalar(&self) -> C64 {
        assert!(self.dims.is_empty() || self.dims.iter().product::<usize>() == 1);
        self.data[0]
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.dims[i + 1];
        }
        s
    }

    /// Reorder legs to the given permutation: leg k of the output is leg perm[k] of the input.
    pub fn permute(&self, perm: &[usize]) -> Tensor {
        assert_eq!(perm.len(), self.dims.len());
        let new_dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let mut out = Tensor::zeros(&new_dims);
        let in_strides = self.strides();
        let out_strides = out.strides();
        let n = self.data.len();
        for idx in 0..n {
            // decompose idx in the output's dims
            let mut rem = idx;
            let mut src = 0usize;
            for k in 0..new_dims.len() {
                let digit = rem / out_strides[k];
                rem %= out_strides[k];
                src += digit * in_strides[perm[k]];
            }
            out.data[idx] = self.data[src];
        }
        out
    }

    /// Contract legs `legs_a` of `a` with legs `legs_b` of `b` (pairwise, in order).
    /// Remaining legs of `a` then remaining legs of `b` form the output, in order.
    pub fn contract(a: &Tensor, legs_a: &[usize], b: &Tensor, legs_b: &[usize]) -> Tensor {
        assert_eq!(legs_a.len(), legs_b.len());
        for (&la, &lb) in legs_a.iter().zip(legs_b) {
            assert_eq!(a.dims[la], b.dims[lb], "contracted leg dims differ");
        }
        let free_a: Vec<usize> = (0..a.dims.len()).filter(|l| !legs_a.contains(l)).collect();
        let free_b: Vec<usize> = (0..b.dims.len()).filter(|l| !legs_b.contains(l)).collect();

        let perm_a: Vec<usize> = free_a.iter().chain(legs_a).copied().collect();
        let perm_b: Vec<usize> = legs_b.iter().chain(&free_b).copied().collect();
        let pa = a.permute(&perm_a);
        let pb = b.permute(&perm_b);

        let m: usize = free_a.iter().map(|&l| a.dims[l]).product();
        let k: usize = legs_a.iter().map(|&l| a.dims[l]).product();
        let n: usize = free_b.iter().map(|&l| b.dims[l]).product();

        let ma = CMatrix { rows: m, cols: k, data: pa.data };
        let mb = CMatrix { rows: k, cols: n, data: pb.data };
        let prod = ma.matmul(&mb);

        let mut dims: Vec<usize> = free_a.iter().map(|&l| a.dims[l]).collect();
        dims.extend(free_b.iter().map(|&l| b.dims[l]));
        Tensor { dims, data: prod.data }
    }

    /// Contract a single leg with a vector.
    pub fn cap(&self, leg: usize, v: &[C64]) -> Tensor {
        let vt = Tensor::from_vec(v.to_vec(), &[v.len()]);
        Tensor::contract(self, &[leg], &vt, &[0])
    }

    pub fn into_matrix(self, rows: usize, cols: usize) -> CMatrix {
        assert_eq!(rows * cols, self.data.len());
        CMatrix { rows, cols, data: self.data }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Interpret the tensor data as a plain vector.
    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        assert_eq!(self.dims, other.dims);
        Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn matmul_identity() {
        let a = CMatrix::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64, j as f64));
        assert_eq!(a.matmul(&CMatrix::identity(3)), a);
    }

    #[test]
    fn kron_dims_and_entries() {
        let a = CMatrix::from_fn(2, 2, |i, j| C64::new((i * 2 + j) as f64, 0.0));
        let b = CMatrix::identity(3);
        let k = kron(&a, &b);
        assert_eq!(k.rows, 6);
        assert!(close(k[(0, 0)], a[(0, 0)]));
        assert!(close(k[(3, 1)], ZERO));
        assert!(close(k[(4, 1)], a[(1, 0)]));
    }

    #[test]
    fn swap_is_self_inverse() {
        for d in 2..=4 {
            let s = swap_gate(d);
            assert!(s.matmul(&s).max_abs_diff(&CMatrix::identity(d * d)) < 1e-14);
        }
    }

    #[test]
    fn reshuffle_of_swap_dual_unitary() {
        // SWAP is dual-unitary: its dual must be unitary too.
        for d in 2..=3 {
            let s = swap_gate(d);
            let sd = reshuffle_dual(&s, d);
            assert!(sd.unitarity_residual() < 1e-14);
        }
    }

    #[test]
    fn reshuffle_is_involution() {
        let u = haar_unitary(9, 7);
        let back = reshuffle_dual(&reshuffle_dual(&u, 3), 3);
        assert!(back.max_abs_diff(&u) < 1e-14);
    }

    #[test]
    fn haar_is_unitary() {
        for seed in 0..5 {
            let u = haar_unitary(6, seed);
            assert!(u.unitarity_residual() < 1e-12);
        }
    }

    #[test]
    fn spectrum_matches_diagonal() {
        let m = CMatrix::diag(&[C64::new(3.0, 0.0), C64::new(0.0, 2.0), C64::new(-1.0, 0.0)]);
        let ev = m.spectrum();
        assert!(close(ev[0], C64::new(3.0, 0.0)));
        assert!(close(ev[1], C64::new(0.0, 2.0)));
        assert!(close(ev[2], C64::new(-1.0, 0.0)));
    }

    #[test]
    fn partial_trace_of_kron_factors() {
        let a = CMatrix::from_fn(2, 2, |i, j| C64::new((i + j) as f64, 1.0));
        let b = CMatrix::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64));
        let ab = kron(&a, &b);
        let ta = partial_trace(&ab, &[2, 3], &[true, false]);
        assert!(ta.max_abs_diff(&a.scale(b.trace())) < 1e-12);
        let tb = partial_trace(&ab, &[2, 3], &[false, true]);
        assert!(tb.max_abs_diff(&b.scale(a.trace())) < 1e-12);
    }

    #[test]
    fn contract_reproduces_matmul() {
        let a = CMatrix::from_fn(4, 5, |i, j| C64::new(i as f64, j as f64));
        let b = CMatrix::from_fn(5, 3, |i, j| C64::new(j as f64, i as f64));
        let ta = Tensor::from_matrix(&a, &[4, 5]);
        let tb = Tensor::from_matrix(&b, &[5, 3]);
        let c = Tensor::contract(&ta, &[1], &tb, &[0]).into_matrix(4, 3);
        assert!(c.max_abs_diff(&a.matmul(&b)) < 1e-12);
    }

    #[test]
    fn permute_roundtrip() {
        let t = Tensor::from_vec((0..24).map(|x| C64::new(x as f64, 0.0)).collect(), &[2, 3, 4]);
        let p = t.permute(&[2, 0, 1]);
        assert_eq!(p.dims, vec![4, 2, 3]);
        let back = p.permute(&[1, 2, 0]);
        assert_eq!(back.data, t.data);
    }

    #[test]
    fn bullet_normalized() {
        let b = bullet(3);
        let n: f64 = b.iter().map(|z| z.norm_sqr()).sum();
        assert!((n - 1.0).abs() < 1e-14);
    }
}
