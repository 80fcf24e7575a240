//! Brute-force ground truth: dense folded Floquet evolution on small rings
//! and the infinite-chain causal-diamond contraction.
//!
//! Conventions: ring sites 0..2L−1; cell m occupies sites (2m, 2m+1); the
//! paper's integer site m is ring site 2m and half-integer site m+1/2 is ring
//! site 2m+1. One Floquet period applies the even-brick layer (2m, 2m+1)
//! first, then the odd layer (2m+1, 2m+2 mod 2L). Times are counted in
//! half-steps (layers), so t = h/2.

use crate::conditions::folded_site_tensor;
use crate::tensor::{bullet, CMatrix, Tensor, ZERO};
use crate::{C64, Error};
use faer::MatRef;

/// Hard cap on folded-vector entries (D^{4L}).
pub const FOLDED_CAP: usize = 1 << 22;

#[derive(Clone, Copy, Debug)]
pub struct RingSpec {
    pub d: usize,
    /// number of two-site cells; the ring has 2L sites
    pub l: usize,
}

impl RingSpec {
    pub fn new(d: usize, l: usize) -> Result<Self, Error> {
        let ring = RingSpec { d, l };
        let dim = ring.folded_dim_checked().ok_or_else(|| {
            Error::InvalidParam(format!("folded dimension overflows for D={d}, L={l}"))
        })?;
        if dim > FOLDED_CAP {
            return Err(Error::InvalidParam(format!(
                "folded dimension {dim} exceeds cap {FOLDED_CAP} (D={d}, L={l})"
            )));
        }
        Ok(ring)
    }

    pub fn sites(&self) -> usize {
        2 * self.l
    }

    /// folded single-site dimension D²
    pub fn f(&self) -> usize {
        self.d * self.d
    }

    fn folded_dim_checked(&self) -> Option<usize> {
        let mut dim = 1usize;
        for _ in 0..self.sites() {
            dim = dim.checked_mul(self.f())?;
            if dim > FOLDED_CAP {
                return None;
            }
        }
        Some(dim)
    }

    pub fn folded_dim(&self) -> usize {
        self.folded_dim_checked().unwrap()
    }
}

/// An operator on `support` adjacent sites starting at ring site `site`.
#[derive(Clone, Debug)]
pub struct Observable {
    pub op: CMatrix,
    pub site: usize,
    pub support: usize,
}

impl Observable {
    pub fn single(op: CMatrix, site: usize) -> Self {
        let d = op.rows;
        assert_eq!(op.cols, d);
        Observable { op, site, support: 1 }
    }

    pub fn two_site(op: CMatrix, site: usize) -> Self {
        Observable { op, site, support: 2 }
    }

    /// vec(op) regrouped so each site's (ket, bra) indices are adjacent.
    fn site_grouped_vec(&self, d: usize) -> Vec<C64> {
        crate::tensor::vec_site_grouped(&self.op, d, self.support)
    }
}

/// The folded two-site gate in per-site grouping, as a D⁴ × D⁴ matrix mapping
/// the bottom pair of folded sites to the top pair.
pub fn folded_two_site_gate(u: &CMatrix, d: usize) -> CMatrix {
    let t = folded_site_tensor(u, d);
    let f = d * d;
    t.into_matrix(f * f, f * f)
}

/// Dense state in the folded picture: one complex amplitude per configuration
/// of 2L folded sites, row-major with site 0 slowest.
#[derive(Clone)]
pub struct FoldedState {
    pub ring: RingSpec,
    pub data: Vec<C64>,
}

impl FoldedState {
    /// Product vector: |○⟩ on every site except the observables' supports,
    /// which carry vec(op). Observables must not overlap and must not wrap.
    pub fn product(ring: RingSpec, obs: &[&Observable]) -> Self {
        let f = ring.f();
        let n = ring.sites();
        let o = bullet(ring.d);
        let mut site_vecs: Vec<Option<Vec<C64>>> = vec![None; n];
        let mut occupied = vec![false; n];
        for ob in obs {
            assert!(ob.site + ob.support <= n, "observable support must not wrap");
            let v = ob.site_grouped_vec(ring.d);
            for s in 0..ob.support {
                assert!(!occupied[ob.site + s], "overlapping observables");
                occupied[ob.site + s] = true;
            }
            // split the grouped vec across the support sites lazily: we store
            // the whole block on the first site and mark the rest as merged
            site_vecs[ob.site] = Some(v);
            for s in 1..ob.support {
                site_vecs[ob.site + s] = Some(Vec::new()); // merged marker
            }
        }
        // assemble by iterating sites, expanding either a bullet or a block
        let mut data = vec![C64::new(1.0, 0.0)];
        let mut site = 0;
        while site < n {
            let block: Vec<C64> = match &site_vecs[site] {
                None => {
                    site += 1;
                    o.clone()
                }
                Some(v) if !v.is_empty() => {
                    let ob = obs.iter().find(|ob| ob.site == site).unwrap();
                    site += ob.support;
                    v.clone()
                }
                Some(_) => unreachable!("merged marker visited directly"),
            };
            let mut next = Vec::with_capacity(data.len() * block.len());
            for &x in &data {
                for &y in &block {
                    next.push(x * y);
                }
            }
            data = next;
        }
        let _ = f;
        FoldedState { ring, data }
    }

    /// |○⟩^⊗2L — the vectorized infinite-temperature state times D^L.
    pub fn bullets(ring: RingSpec) -> Self {
        FoldedState::product(ring, &[])
    }

    pub fn inner(&self, other: &FoldedState) -> C64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    /// Apply a folded two-site gate to adjacent sites (p, p+1 mod 2L).
    pub fn apply_two_site(&mut self, g: &CMatrix, p: usize) {
        let n = self.ring.sites();
        assert!(p < n);
        if p == n - 1 {
            self.rotate_left();
            self.apply_two_site_contiguous(g, n - 2);
            self.rotate_right();
        } else {
            self.apply_two_site_contiguous(g, p);
        }
    }

    fn apply_two_site_contiguous(&mut self, g: &CMatrix, p: usize) {
        let f = self.ring.f();
        let n = self.ring.sites();
        let ff = f * f;
        assert_eq!(g.rows, ff);
        let outer: usize = f.pow(p as u32);
        let inner: usize = f.pow((n - p - 2) as u32);
        let chunk = ff * inner;
        let gref = g.as_faer();
        for a in 0..outer {
            let slice = &self.data[a * chunk..(a + 1) * chunk];
            let m = MatRef::from_row_major_slice(slice, ff, inner);
            let out = gref * m;
            let dst = &mut self.data[a * chunk..(a + 1) * chunk];
            for r in 0..ff {
                for c in 0..inner {
                    dst[r * inner + c] = out[(r, c)];
                }
            }
        }
    }

    /// Apply a single-site folded operator (f × f) at site p.
    pub fn apply_one_site(&mut self, g: &CMatrix, p: usize) {
        let f = self.ring.f();
        let n = self.ring.sites();
        assert_eq!(g.rows, f);
        let inner: usize = f.pow((n - p - 1) as u32);
        let chunk = f * inner;
        let outer = self.data.len() / chunk;
        let gref = g.as_faer();
        for a in 0..outer {
            let slice = &self.data[a * chunk..(a + 1) * chunk];
            let m = MatRef::from_row_major_slice(slice, f, inner);
            let out = gref * m;
            let dst = &mut self.data[a * chunk..(a + 1) * chunk];
            for r in 0..f {
                for c in 0..inner {
                    dst[r * inner + c] = out[(r, c)];
                }
            }
        }
    }

    /// Cyclic shift moving site 1 to position 0 (site k -> position k−1).
    fn rotate_left(&mut self) {
        let f = self.ring.f();
        let rest = self.data.len() / f;
        let mut out = vec![ZERO; self.data.len()];
        for i in 0..f {
            for j in 0..rest {
                out[j * f + i] = self.data[i * rest + j];
            }
        }
        self.data = out;
    }

    fn rotate_right(&mut self) {
        let f = self.ring.f();
        let rest = self.data.len() / f;
        let mut out = vec![ZERO; self.data.len()];
        for i in 0..f {
            for j in 0..rest {
                out[i * rest + j] = self.data[j * f + i];
            }
        }
        self.data = out;
    }

    /// Apply one brick layer. Parity 0 = bricks at (2m, 2m+1); parity 1 =
    /// bricks at (2m+1, 2m+2 mod 2L).
    pub fn apply_layer(&mut self, g: &CMatrix, parity: usize) {
        let n = self.ring.sites();
        if parity == 0 {
            for m in 0..self.ring.l {
                self.apply_two_site_contiguous(g, 2 * m);
            }
        } else {
            self.rotate_left();
            for m in 0..self.ring.l {
                self.apply_two_site_contiguous(g, 2 * m);
            }
            // after the left-rotation the wrap gate (2L−1, 0) sits at the end
            let _ = n;
            self.rotate_right();
        }
    }

    /// Forward evolution by `h` half-steps (layers), starting with parity 0.
    pub fn evolve(&mut self, w: &CMatrix, h: usize) {
        for k in 0..h {
            self.apply_layer(w, k % 2);
        }
    }

    /// Heisenberg evolution of an operator vector by `h` half-steps: the
    /// adjoint layers are applied in reverse order.
    pub fn evolve_heisenberg(&mut self, wdag: &CMatrix, h: usize) {
        for k in (0..h).rev() {
            self.apply_layer(wdag, k % 2);
        }
    }
}

/// Exact spatio-temporal correlator on the ring in `h` half-steps (t = h/2):
/// C = D^k · Tr((𝕌^t)† a_i 𝕌^t b_j) / D^{2L} with k the larger support size;
/// for HS-normalized operators the equal-point autocorrelation at t=0 is 1.
pub fn correlator_exact(
    ring: RingSpec,
    u: &CMatrix,
    a: &Observable,
    b: &Observable,
    h: usize,
) -> C64 {
    let w = folded_two_site_gate(u, ring.d);
    let mut beta = FoldedState::product(ring, &[b]);
    beta.evolve(&w, h);
    let alpha = FoldedState::product(ring, &[a]);
    alpha.inner(&beta)
}

/// Exact 3-point function C = D·Tr(a_i(t₁) b_j(t₂) c_k)/D^{2L} with times in
/// half-steps h₁ ≥ h₂. `a` must be Hermitian (its dagger enters the pairing).
pub fn correlator_3pt(
    ring: RingSpec,
    u: &CMatrix,
    a: &Observable,
    b: &Observable,
    c: &Observable,
    h1: usize,
    h2: usize,
) -> C64 {
    assert!(h1 >= h2, "3-point ordering requires t1 >= t2");
    let wdag = folded_two_site_gate(&u.dagger(), ring.d);
    let mut alpha = FoldedState::product(ring, &[a]);
    alpha.evolve_heisenberg(&wdag, h1);
    let mut beta = FoldedState::product(ring, &[b]);
    beta.evolve_heisenberg(&wdag, h2);
    // right-multiply the evolved b by c: acts as I ⊗ cᵀ on the bra leg
    assert_eq!(c.support, 1, "third operator must be single-site");
    let d = ring.d;
    let m = CMatrix::from_fn(d * d, d * d, |r, col| {
        let (i, j) = (r / d, r % d);
        let (ip, jp) = (col / d, col % d);
        if i == ip {
            c.op[(jp, j)]
        } else {
            ZERO
        }
    });
    beta.apply_one_site(&m, c.site);
    alpha.inner(&beta)
}

/// Quench series: expectation values Tr(O ρ(t)) of each observable after every
/// half-step up to `h_max`, for a vectorized density matrix `rho` (Tr ρ = 1).
pub fn quench_exact(
    ring: RingSpec,
    u: &CMatrix,
    rho: &FoldedState,
    observables: &[Observable],
    h_max: usize,
) -> Vec<Vec<C64>> {
    let w = folded_two_site_gate(u, ring.d);
    let d = ring.d;
    // ⟨O⟩ pairs against vec(O ⊗ I^rest): bullet vectors scaled back by √D
    let bras: Vec<FoldedState> = observables
        .iter()
        .map(|ob| {
            let mut v = FoldedState::product(ring, &[ob]);
            let scale = (d as f64).sqrt().powi((ring.sites() - ob.support) as i32);
            for z in v.data.iter_mut() {
                *z *= scale;
            }
            v
        })
        .collect();
    let mut state = rho.clone();
    let mut series = vec![Vec::with_capacity(h_max + 1); observables.len()];
    for h in 0..=h_max {
        if h > 0 {
            state.apply_layer(&w, (h - 1) % 2);
        }
        for (k, bra) in bras.iter().enumerate() {
            series[k].push(bra.inner(&state));
        }
    }
    series
}

/// Reinterpret a folded (site-grouped) vector as the underlying D^{2L} × D^{2L}
/// operator: split every site leg into (ket, bra) and gather kets before bras.
pub fn folded_to_matrix(st: &FoldedState) -> CMatrix {
    let d = st.ring.d;
    let n = st.ring.sites();
    let t = Tensor::from_vec(st.data.clone(), &vec![d; 2 * n]);
    let perm: Vec<usize> = (0..n).map(|s| 2 * s).chain((0..n).map(|s| 2 * s + 1)).collect();
    t.permute(&perm).into_matrix(d.pow(n as u32), d.pow(n as u32))
}

/// Exact two-point function on a quenched ring: Tr(ρ · a_i(t₁) · b_j(t₂)) with
/// times in half-steps, single-site operators, and `rho` a vectorized density
/// matrix (as produced by `state_from_cell_density`).
pub fn quench_two_point_exact(
    ring: RingSpec,
    u: &CMatrix,
    rho: &FoldedState,
    a: &CMatrix,
    b: &CMatrix,
    ia: usize,
    jb: usize,
    h1: usize,
    h2: usize,
) -> C64 {
    let d = ring.d;
    let wdag = folded_two_site_gate(&u.dagger(), d);
    let scale = (d as f64).sqrt().powi((ring.sites() - 1) as i32);
    let evolved = |op: &CMatrix, site: usize, h: usize| -> CMatrix {
        let ob = Observable::single(op.clone(), site);
        let mut v = FoldedState::product(ring, &[&ob]);
        v.evolve_heisenberg(&wdag, h);
        folded_to_matrix(&v).scale(C64::new(scale, 0.0))
    };
    let ma = evolved(a, ia, h1);
    let mb = evolved(b, jb, h2);
    let mrho = folded_to_matrix(rho);
    let ab = ma.matmul(&mb);
    let n = mrho.rows;
    (0..n).map(|i| (0..n).map(|k| mrho[(i, k)] * ab[(k, i)]).sum::<C64>()).sum()
}

/// Product of Bell pairs (|01⟩+|10⟩)/√2 on the cells (2k+1, 2k+2 mod 2L), so
/// the first brick layer straddles neighboring pairs. Returns vec of the
/// density matrix.
pub fn bell_pair_state(ring: RingSpec) -> FoldedState {
    let d = ring.d;
    assert_eq!(d, 2, "Bell pairs are a qubit construction");
    let mut psi = vec![ZERO; 4];
    let s = 1.0 / 2.0_f64.sqrt();
    psi[1] = C64::new(s, 0.0);
    psi[2] = C64::new(s, 0.0);
    let mut rho = CMatrix::zeros(4, 4);
    for r in 0..4 {
        for c in 0..4 {
            rho[(r, c)] = psi[r] * psi[c].conj();
        }
    }
    state_from_cell_density(ring, &rho)
}

/// Density-matrix product state with one 2-site density matrix per cell,
/// placed on sites (2k+1, 2k+2 mod 2L).
pub fn state_from_cell_density(ring: RingSpec, rho_cell: &CMatrix) -> FoldedState {
    let ob: Vec<Observable> = (0..ring.l).map(|k| Observable::two_site(rho_cell.clone(), 2 * k)).collect();
    let refs: Vec<&Observable> = ob.iter().collect();
    let mut st = FoldedState::product(ring, &refs);
    // undo the bullet normalization: there are no bullet sites here
    // (the product builder only placed the blocks), nothing to rescale
    // shift so cells sit on (2k+1, 2k+2)
    st.rotate_right();
    st
}

/// Infinite-chain correlator by contracting only the causal diamond: exact,
/// no ring needed. Operators sit at ring-convention sites i (for `a`) and j
/// (for `b`) of the infinite chain; time in half-steps.
pub fn correlator_lightcone(
    d: usize,
    u: &CMatrix,
    a: &Observable,
    b: &Observable,
    h: usize,
) -> Result<C64, Error> {
    let f = d * d;
    let w = folded_two_site_gate(u, d);
    let o = bullet(d);

    // window of absolute site indices [lo, hi] holding the evolving vector
    let mut lo = b.site as i64;
    let mut hi = (b.site + b.support - 1) as i64;
    let mut data = b.site_grouped_vec(d);

    let max_entries = FOLDED_CAP;
    let prepend = |data: &mut Vec<C64>, o: &[C64]| {
        let mut out = Vec::with_capacity(data.len() * o.len());
        for &x in o.iter() {
            for &y in data.iter() {
                out.push(x * y);
            }
        }
        *data = out;
    };
    let append = |data: &mut Vec<C64>, o: &[C64]| {
        let mut out = Vec::with_capacity(data.len() * o.len());
        for &x in data.iter() {
            for &y in o.iter() {
                out.push(x * y);
            }
        }
        *data = out;
    };

    for layer in 0..h {
        let parity = (layer % 2) as i64;
        // bricks occupy (s, s+1) with s ≡ parity (mod 2); extend the window so
        // every brick overlapping it lies fully inside
        if lo.rem_euclid(2) != parity {
            lo -= 1;
            prepend(&mut data, &o);
        }
        if hi.rem_euclid(2) == parity {
            hi += 1;
            append(&mut data, &o);
        }
        let width = (hi - lo + 1) as usize;
        if data.len() > max_entries {
            return Err(Error::InvalidParam(format!(
                "light-cone window of {width} sites exceeds the working-space cap"
            )));
        }
        // apply bricks fully inside the window
        let mut s = lo;
        while s + 1 <= hi {
            let p = (s - lo) as usize;
            apply_gate_window(&mut data, &w, p, width, f);
            s += 2;
        }
    }

    // close with ⟨a ⊗ bullets| over the window
    let width = (hi - lo + 1) as usize;
    let ai = a.site as i64;
    if ai < lo || ai + a.support as i64 - 1 > hi {
        // a lies outside the light cone: every site pairs a bullet against
        // bullet (giving 1) except a's sites, which pair against bullets too
        // via Tr(a†)/√D per site
        let mut tr = C64::new(1.0, 0.0);
        let t = Tensor::from_vec(a.site_grouped_vec(d), &vec![f; a.support]);
        let mut res = t;
        for _ in 0..a.support {
            res = res.cap(0, &o);
        }
        tr *= res.scalar().conj();
        let bra_rest: C64 = data
            .iter()
            .zip(bullets_product(width, &o))
            .map(|(x, b)| b.conj() * x)
            .sum();
        return Ok(tr * bra_rest);
    }
    let mut bra = vec![C64::new(1.0, 0.0)];
    let mut site = lo;
    while site <= hi {
        if site == ai {
            let block = a.site_grouped_vec(d);
            append(&mut bra, &block);
            site += a.support as i64;
        } else {
            append(&mut bra, &o);
            site += 1;
        }
    }
    Ok(bra.iter().zip(&data).map(|(x, y)| x.conj() * y).sum())
}

fn bullets_product(width: usize, o: &[C64]) -> Vec<C64> {
    let mut v = vec![C64::new(1.0, 0.0)];
    for _ in 0..width {
        let mut out = Vec::with_capacity(v.len() * o.len());
        for &x in &v {
            for &y in o {
                out.push(x * y);
            }
        }
        v = out;
    }
    v
}

/// Apply a folded two-site gate at window position (p, p+1) in a dense window
/// vector of `width` folded sites.
fn apply_gate_window(data: &mut Vec<C64>, g: &CMatrix, p: usize, width: usize, f: usize) {
    let ff = f * f;
    let outer: usize = f.pow(p as u32);
    let inner: usize = f.pow((width - p - 2) as u32);
    let chunk = ff * inner;
    let gref = g.as_faer();
    for a in 0..outer {
        let slice = &data[a * chunk..(a + 1) * chunk];
        let m = MatRef::from_row_major_slice(slice, ff, inner);
        let out = gref * m;
        let dst = &mut data[a * chunk..(a + 1) * chunk];
        for r in 0..ff {
            for c in 0..inner {
                dst[r * inner + c] = out[(r, c)];
            }
        }
    }
}
