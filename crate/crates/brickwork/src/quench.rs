//! Solvable initial states for level-2 circuits: locally purified MPS cells,
//! space transfer matrices, fixed points, solvability checks, and
//! thermodynamic-limit quench correlators.
//!
//! A state is stored as one purification tensor A^{(iL iR γ)} (a χ×χ matrix
//! per pair of physical indices and purification index γ) describing a 2-site
//! cell; the ring state is the translation-invariant matrix-product density
//! operator built from that cell on sites (2k+1, 2k+2), so the first (even)
//! brick layer straddles neighboring cells.
//!
//! Normalization: tensors are rescaled so the leading eigenvalue of the
//! folded single-cell space transfer matrix E(0) is exactly 1 (thermodynamic
//! normalization Tr ρ → 1). With that convention the Kraus-like operators
//! K_γ are built from A/√d, which reproduces Σ K†K = I/(2) for the reference
//! CNOT-compatible mixed state.

use crate::channels::{build_single_site_channels, trace_pair};
use crate::conditions::folded_site_tensor;
use crate::oracle::folded_two_site_gate;
use crate::tensor::{bullet, kron, vec_site_grouped, CMatrix, Tensor, ONE, ZERO};
use crate::{C64, Error};

/// Column dimension cap for depth-t transfer matrices (D^{4t}·χ²).
pub const COLUMN_CAP: usize = 1 << 20;

/// Locally purified translation-invariant MPS of 2-site cells.
#[derive(Clone, Debug)]
pub struct PurifiedMPS {
    /// Physical local dimension.
    pub d: usize,
    /// Bond dimension.
    pub chi: usize,
    /// Purification (Kraus) dimension.
    pub gamma_dim: usize,
    /// A[(iL·d + iR)·γ_dim + γ] is the χ×χ bond matrix for physical pair
    /// (iL, iR) and purification index γ.
    pub a: Vec<CMatrix>,
}

impl PurifiedMPS {
    fn idx(&self, i: usize, j: usize, g: usize) -> usize {
        (i * self.d + j) * self.gamma_dim + g
    }

    /// Build and normalize so E(0) has leading eigenvalue 1. Rejects tensors
    /// whose E(0) has a degenerate leading eigenvalue (gap below 1e−8).
    pub fn new(d: usize, chi: usize, gamma_dim: usize, a: Vec<CMatrix>) -> Result<Self, Error> {
        if d < 2 || chi == 0 || gamma_dim == 0 {
            return Err(Error::InvalidParam("d >= 2, chi >= 1, gamma_dim >= 1 required".into()));
        }
        if a.len() != d * d * gamma_dim {
            return Err(Error::InvalidParam(format!(
                "expected {} bond matrices, got {}",
                d * d * gamma_dim,
                a.len()
            )));
        }
        for m in &a {
            if m.rows != chi || m.cols != chi {
                return Err(Error::InvalidParam("bond matrices must be chi x chi".into()));
            }
        }
        let mut mps = PurifiedMPS { d, chi, gamma_dim, a };
        let ev = mps.e0().spectrum();
        let lead = ev[0];
        if lead.norm() < 1e-14 {
            return Err(Error::InvalidParam("E(0) vanishes; tensor is zero".into()));
        }
        if lead.im.abs() > 1e-8 * lead.norm() || lead.re <= 0.0 {
            return Err(Error::InvalidParam(
                "leading eigenvalue of E(0) is not positive; not a valid state".into(),
            ));
        }
        let s = C64::new(1.0 / lead.re.sqrt(), 0.0);
        for m in mps.a.iter_mut() {
            *m = m.scale(s);
        }
        let ev = mps.e0().spectrum();
        if ev.len() > 1 && ev[0].norm() - ev[1].norm() < 1e-8 {
            return Err(Error::InvalidParam(
                "leading eigenvalue of E(0) is degenerate; state out of scope".into(),
            ));
        }
        Ok(mps)
    }

    /// Folded cell tensor with legs [bond_left (χ²), top_left (d²),
    /// top_right (d²), bond_right (χ²)]; each doubled index groups the tensor
    /// copy first and its conjugate second.
    pub fn cell_tensor(&self) -> Tensor {
        let (d, chi) = (self.d, self.chi);
        let (f, c2) = (d * d, chi * chi);
        let mut t = Tensor::zeros(&[c2, f, f, c2]);
        for il in 0..d {
            for ir in 0..d {
                for jl in 0..d {
                    for jr in 0..d {
                        let tl = il * d + jl;
                        let tr = ir * d + jr;
                        for g in 0..self.gamma_dim {
                            let ma = &self.a[self.idx(il, ir, g)];
                            let mb = &self.a[self.idx(jl, jr, g)];
                            for l in 0..chi {
                                for lp in 0..chi {
                                    let bl = l * chi + lp;
                                    for r in 0..chi {
                                        for rp in 0..chi {
                                            let br = r * chi + rp;
                                            let off = ((bl * f + tl) * f + tr) * c2 + br;
                                            t.data[off] += ma[(l, r)] * mb[(lp, rp)].conj();
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        t
    }

    /// Single-cell space transfer matrix E(0): the cell tensor with both
    /// physical legs closed by normalized identity vectors.
    pub fn e0(&self) -> CMatrix {
        let o = bullet(self.d);
        let c2 = self.chi * self.chi;
        self.cell_tensor().cap(1, &o).cap(1, &o).into_matrix(c2, c2)
    }

    /// Reduced density matrix of one cell in the thermodynamic limit
    /// (bond legs closed with the fixed points): a d²×d² matrix with unit
    /// trace for a normalized state.
    pub fn cell_density(&self) -> Result<CMatrix, Error> {
        let (tri, sq) = fixed_points(&self.e0())?;
        let f = self.d * self.d;
        let base = self
            .cell_tensor()
            .cap(0, &tri)
            .cap(2, &sq)
            .into_vec()
            .iter()
            .map(|z| z / self.d as f64)
            .collect::<Vec<_>>();
        // base is the site-grouped vec of the 2-site density matrix
        let t = Tensor::from_vec(base, &[self.d, self.d, self.d, self.d]);
        Ok(t.permute(&[0, 2, 1, 3]).into_matrix(f, f))
    }

    /// Serialize as structured text: a header line `d chi gamma_dim` followed
    /// by one `iL iR gamma row col re im` tuple per nonzero entry.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{} {} {}\n", self.d, self.chi, self.gamma_dim));
        for i in 0..self.d {
            for j in 0..self.d {
                for g in 0..self.gamma_dim {
                    let m = &self.a[self.idx(i, j, g)];
                    for r in 0..self.chi {
                        for c in 0..self.chi {
                            let z = m[(r, c)];
                            if z.norm() > 0.0 {
                                out.push_str(&format!(
                                    "{} {} {} {} {} {:.17e} {:.17e}\n",
                                    i, j, g, r, c, z.re, z.im
                                ));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Parse the structured-text format produced by `to_text`. Lines starting
    /// with `#` and blank lines are skipped; the tensor is renormalized.
    pub fn from_text(s: &str) -> Result<Self, Error> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty MPS file".into()))?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| Error::Parse(format!("bad header field {x:?}"))))
            .collect::<Result<_, _>>()?;
        if h.len() != 3 {
            return Err(Error::Parse("header must be `d chi gamma_dim`".into()));
        }
        let (d, chi, gamma_dim) = (h[0], h[1], h[2]);
        let mut a = vec![CMatrix::zeros(chi, chi); d * d * gamma_dim];
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 7 {
                return Err(Error::Parse(format!("expected 7 fields, got {:?}", line)));
            }
            let iu: Vec<usize> = parts[..5]
                .iter()
                .map(|x| x.parse().map_err(|_| Error::Parse(format!("bad index {x:?}"))))
                .collect::<Result<_, _>>()?;
            let re: f64 = parts[5].parse().map_err(|_| Error::Parse("bad re".into()))?;
            let im: f64 = parts[6].parse().map_err(|_| Error::Parse("bad im".into()))?;
            let (i, j, g, r, c) = (iu[0], iu[1], iu[2], iu[3], iu[4]);
            if i >= d || j >= d || g >= gamma_dim || r >= chi || c >= chi {
                return Err(Error::Parse(format!("index out of range: {line}")));
            }
            a[(i * d + j) * gamma_dim + g][(r, c)] = C64::new(re, im);
        }
        PurifiedMPS::new(d, chi, gamma_dim, a)
    }
}

/// Left and right fixed points (⟨△|, |□⟩) of E(0), normalized to ⟨△|□⟩ = 1.
/// Full eigendecomposition is used for χ ≤ 8, power iteration above.
pub fn fixed_points(e0: &CMatrix) -> Result<(Vec<C64>, Vec<C64>), Error> {
    let n = e0.rows;
    let lead_vec = |m: &CMatrix| -> Result<Vec<C64>, Error> {
        if n <= 64 {
            let (vals, vecs) = m.eig();
            if (vals[0] - ONE).norm() > 1e-6 {
                return Err(Error::InvalidParam(format!(
                    "leading eigenvalue {} of E(0) is not 1; normalize the state first",
                    vals[0]
                )));
            }
            Ok((0..n).map(|i| vecs[(i, 0)]).collect())
        } else {
            let mut v: Vec<C64> = (0..n).map(|i| C64::new(1.0 + (i % 7) as f64, 0.3)).collect();
            for _ in 0..2000 {
                let w = m.apply(&v);
                let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                v = w.iter().map(|z| z / norm).collect();
            }
            Ok(v)
        }
    };
    let sq = lead_vec(e0)?;
    let tri = lead_vec(&e0.transpose())?;
    let overlap: C64 = tri.iter().zip(&sq).map(|(t, s)| t * s).sum();
    if overlap.norm() < 1e-10 {
        return Err(Error::InvalidParam("left/right fixed points are orthogonal; defective E(0)".into()));
    }
    let tri = tri.iter().map(|t| t / overlap).collect();
    Ok((tri, sq))
}

/// Gauge-transform the tensor so the right fixed point of E(0) becomes the
/// vectorized identity on the bond space. Errors out for non-injective
/// tensors (singular right fixed point).
pub fn right_canonicalize(mps: &PurifiedMPS) -> Result<PurifiedMPS, Error> {
    let chi = mps.chi;
    if chi == 1 {
        return Ok(mps.clone());
    }
    let (_, sq) = fixed_points(&mps.e0())?;
    // unvec to the bond-space matrix V[r, r'] and make it Hermitian positive
    let mut v = CMatrix::from_fn(chi, chi, |r, rp| sq[r * chi + rp]);
    let tr = v.trace();
    if tr.norm() < 1e-12 {
        return Err(Error::InvalidParam("right fixed point has zero trace".into()));
    }
    let phase = tr / tr.norm();
    v = v.scale(phase.conj());
    let v = v.add(&v.dagger()).scale(C64::new(0.5, 0.0));
    let (vals, u) = v.eig();
    let max = vals.iter().map(|z| z.re).fold(f64::MIN, f64::max);
    if vals.iter().any(|z| z.re < 1e-10 * max) {
        return Err(Error::InvalidParam(
            "right fixed point is singular: tensor is not injective".into(),
        ));
    }
    // Hermitian square root X = U √Λ U† and its inverse
    let sqrt = CMatrix::diag(&vals.iter().map(|z| C64::new(z.re.sqrt(), 0.0)).collect::<Vec<_>>());
    let isqrt =
        CMatrix::diag(&vals.iter().map(|z| C64::new(1.0 / z.re.sqrt(), 0.0)).collect::<Vec<_>>());
    let x = u.matmul(&sqrt).matmul(&u.dagger());
    let xinv = u.matmul(&isqrt).matmul(&u.dagger());
    let a = mps.a.iter().map(|m| xinv.matmul(m).matmul(&x)).collect();
    PurifiedMPS::new(mps.d, chi, mps.gamma_dim, a)
}

/// The right-moving single-site contraction map of a folded gate: the gate
/// with its top-right leg closed by ○ and its bottom-right leg fed ○; maps
/// an input on the bottom-left leg to the top-left leg. Appears on both sides
/// of each diagrammatic solvability condition.
fn epsilon_cap(u: &CMatrix, d: usize) -> Tensor {
    let o = bullet(d);
    // legs [tl, tr, bl, br] -> cap tr, feed br -> [tl, bl]
    folded_site_tensor(u, d).cap(1, &o).cap(2, &o)
}

/// Mirror map: top-left closed, bottom-left fed; maps bottom-right to
/// top-right. Legs [tr, br] after capping.
fn epsilon_cap_left(u: &CMatrix, d: usize) -> Tensor {
    let o = bullet(d);
    folded_site_tensor(u, d).cap(0, &o).cap(1, &o)
}

#[derive(Clone, Debug)]
pub struct SolvabilityReport {
    pub residual: f64,
    pub tol: f64,
    pub passed: bool,
}

/// 1-point solvability: the folded gate applied across the cell's left leg
/// with the right leg traced and |□⟩ on the right bond must reduce to the
/// gate's traced single-site map times |□⟩ on the left bond.
pub fn check_1pt_solvable(mps: &PurifiedMPS, u: &CMatrix, tol: f64) -> Result<SolvabilityReport, Error> {
    if u.rows != mps.d * mps.d {
        return Err(Error::InvalidParam("gate dimension does not match the state".into()));
    }
    let d = mps.d;
    let o = bullet(d);
    let (_, sq) = fixed_points(&mps.e0())?;
    let w = folded_site_tensor(u, d);
    let cell = mps.cell_tensor();

    // LHS: cell with tR traced and □ on the right bond, its tL fed into the
    // gate's bottom-right leg, gate top-right traced. Legs [BL, tl, bl].
    let fed = cell.cap(2, &o).cap(2, &sq); // [BL, tL]
    let lhs = Tensor::contract(&fed, &[1], &w, &[3]).cap(2, &o); // [BL, tl, bl]

    // RHS: the traced gate map ⊗ |□⟩ on the left bond. Legs [tl, bl, BL].
    let rhs = Tensor::contract(&epsilon_cap(u, d), &[], &Tensor::from_vec(sq.clone(), &[sq.len()]), &[]);
    let residual = lhs.permute(&[1, 2, 0]).sub(&rhs).max_abs();
    Ok(SolvabilityReport { residual, tol, passed: residual < tol })
}

/// The strong single-trace condition: tracing one physical leg of the cell
/// disconnects it into ○ on the other leg times the bond identity line
/// (checked on both legs). States satisfying it are 1-point solvable for any
/// gate.
pub fn check_strong_condition(mps: &PurifiedMPS, tol: f64) -> SolvabilityReport {
    let o = bullet(mps.d);
    let c2 = mps.chi * mps.chi;
    let cell = mps.cell_tensor();
    // trace tR: remaining [BL, tL, BR] must equal the straight bond line
    // δ(BL, BR) times ○ on the surviving physical leg
    let f = o.len();
    let mut line = Tensor::zeros(&[c2, f, c2]);
    for bl in 0..c2 {
        for tl in 0..f {
            line.data[(bl * f + tl) * c2 + bl] = o[tl];
        }
    }
    let r1 = cell.cap(2, &o).sub(&line).max_abs();
    let r2 = cell.cap(1, &o).sub(&line).max_abs();
    let residual = r1.max(r2);
    SolvabilityReport { residual, tol, passed: residual < tol }
}

#[derive(Clone, Debug)]
pub struct TwoPointReport {
    /// Residuals of the four diagrammatic identities
    /// [right-corner, right-gate, left-corner, left-gate].
    pub diagram_residuals: [f64; 4],
    /// Residuals of the two algebraic K_γ conditions.
    pub algebra_residuals: [f64; 2],
    pub tol: f64,
    pub diagram_passed: bool,
    pub algebra_passed: bool,
    pub passed: bool,
}

/// Kraus-like operators K_γ on the bond⊗physical space (dχ × dχ), built from
/// the paper-normalized tensor A/√d: K_γ† = Σ_{ij} (A^{(ijγ)}/√d) ⊗ |i⟩⟨j|.
#[derive(Clone, Debug)]
pub struct KOperator {
    pub d: usize,
    pub chi: usize,
    pub k: Vec<CMatrix>,
}

pub fn k_operators(mps: &PurifiedMPS) -> KOperator {
    let (d, chi) = (mps.d, mps.chi);
    let s = 1.0 / (d as f64).sqrt();
    let k = (0..mps.gamma_dim)
        .map(|g| {
            let mut kdag = CMatrix::zeros(d * chi, d * chi);
            for i in 0..d {
                for j in 0..d {
                    let a = &mps.a[mps.idx(i, j, g)];
                    for r in 0..chi {
                        for c in 0..chi {
                            kdag[(r * d + i, c * d + j)] = a[(r, c)] * s;
                        }
                    }
                }
            }
            kdag.dagger()
        })
        .collect();
    KOperator { d, chi, k }
}

/// 2-point solvability: the four diagrammatic corner/gate identities plus the
/// algebraic K_γ form; both verdicts are reported and must agree. The state
/// is brought to right canonical form first.
pub fn check_2pt_solvable(mps: &PurifiedMPS, u: &CMatrix, tol: f64) -> Result<TwoPointReport, Error> {
    let mps = right_canonicalize(mps)?;
    let d = mps.d;
    let o = bullet(d);
    let c2 = mps.chi * mps.chi;
    let (tri, sq) = fixed_points(&mps.e0())?;
    let cell = mps.cell_tensor();
    let trit = Tensor::from_vec(tri.clone(), &[c2]);
    let sqt = Tensor::from_vec(sq.clone(), &[c2]);
    let ovec = Tensor::from_vec(o.clone(), &[o.len()]);

    let outer = |xs: &[&Tensor]| -> Tensor {
        let mut acc = Tensor::from_vec(vec![ONE], &[]);
        for x in xs {
            acc = Tensor::contract(&acc, &[], x, &[]);
        }
        acc
    };

    // right corner: cell ∘ (○ on tR, □ on right bond) = ○(tL) ⊗ □(left bond)
    let lhs1 = cell.cap(2, &o).cap(2, &sq); // [BL, tL]
    let rhs1 = outer(&[&sqt, &ovec]);
    let r1 = lhs1.sub(&rhs1).max_abs();

    // right gate: additionally pass tR through the traced gate map
    let m = epsilon_cap(u, d); // [tl, bl]
    let lhs2 = Tensor::contract(&cell.cap(3, &sq), &[2], &m, &[1]); // [BL, tL, tl]
    let rhs2 = outer(&[&sqt, &ovec, &ovec]);
    let r2 = lhs2.sub(&rhs2).max_abs();

    // left corner: cell ∘ (○ on tL, △ on left bond) = ○(tR) ⊗ △(right bond)
    let lhs3 = cell.cap(1, &o).cap(0, &tri); // [tR, BR]
    let rhs3 = outer(&[&ovec, &trit]);
    let r3 = lhs3.sub(&rhs3).max_abs();

    // left gate: pass tL through the mirrored traced gate map
    let m2 = epsilon_cap_left(u, d); // [tr, br]
    let lhs4 = Tensor::contract(&cell.cap(0, &tri), &[0], &m2, &[1]); // [tR, BR, tr]
    let rhs4 = outer(&[&ovec, &trit, &ovec]);
    let r4 = lhs4.sub(&rhs4).max_abs();

    // algebraic form on the (bond ⊗ left-phys ⊗ right-phys) space
    let ko = k_operators(&mps);
    let (chi, f) = (mps.chi, d * d);
    let id_d = CMatrix::identity(d);
    let id_target = CMatrix::identity(chi * d).scale(C64::new(1.0 / d as f64, 0.0));
    let s1 = ko
        .k
        .iter()
        .fold(CMatrix::zeros(chi * d, chi * d), |acc, k| acc.add(&k.dagger().matmul(k)));
    let a1 = s1.max_abs_diff(&id_target);

    // second condition: Σ_γ (K_γ† ⊗ I)(I_χ ⊗ ũ†ũ)(K_γ ⊗ I) = I_{χd²}/d with
    // ũ the space-direction reshuffled gate acting on the two physical legs
    let ut = crate::tensor::reshuffle_dual(u, d);
    let utu = ut.dagger().matmul(&ut);
    let mid = kron(&CMatrix::identity(chi), &utu);
    let target2 = CMatrix::identity(chi * f).scale(C64::new(1.0 / d as f64, 0.0));
    let s2 = ko.k.iter().fold(CMatrix::zeros(chi * f, chi * f), |acc, k| {
        let kb = kron(k, &id_d);
        acc.add(&kb.dagger().matmul(&mid).matmul(&kb))
    });
    let a2 = s2.max_abs_diff(&target2);

    let diagram_residuals = [r1, r2, r3, r4];
    let algebra_residuals = [a1, a2];
    let diagram_passed = diagram_residuals.iter().all(|&r| r < tol);
    let algebra_passed = algebra_residuals.iter().all(|&r| r < tol);
    Ok(TwoPointReport {
        diagram_residuals,
        algebra_residuals,
        tol,
        diagram_passed,
        algebra_passed,
        passed: diagram_passed && algebra_passed,
    })
}

/// Thermodynamic-limit 1-point function ⟨O(t)⟩ of a cell-aligned 2-site
/// observable after a quench from the MPS state, with time in half-steps.
/// The network reduces to alternating traced-straddle and aligned-gate
/// channels applied to the fixed-point-contracted cell.
pub fn one_point_correlator(
    mps: &PurifiedMPS,
    u: &CMatrix,
    o: &CMatrix,
    h: u32,
    tol: f64,
) -> Result<C64, Error> {
    let rep = check_1pt_solvable(mps, u, tol)?;
    if !rep.passed {
        return Err(Error::InvalidParam(format!(
            "state is not 1-point solvable for this gate (residual {:.3e})",
            rep.residual
        )));
    }
    let d = mps.d;
    let (tri, sq) = fixed_points(&mps.e0())?;
    let mut v: Vec<C64> = mps
        .cell_tensor()
        .cap(0, &tri)
        .cap(2, &sq)
        .into_vec()
        .iter()
        .map(|z| z / d as f64)
        .collect();
    let (eps_l, eps_r, _, _) = build_single_site_channels(u, d);
    let straddle = kron(&eps_l.m, &eps_r.m);
    let aligned = folded_two_site_gate(u, d);
    for k in 0..h {
        v = if k % 2 == 0 { straddle.apply(&v) } else { aligned.apply(&v) };
    }
    Ok(trace_pair(o, d, 2, &v))
}

/// Thermodynamic-limit equal-style 2-point function Tr(ρ a_i(t₁) b_j(t₂)) for
/// single-site operators after a quench, with ring-convention sites i, j and
/// times in half-steps. Nonzero values require the backward rays to land on
/// cell legs: i + h₁ on a left (odd) leg when h₁ > 0 and j − h₂ on a right
/// (even) leg when h₂ > 0; other alignments are outside the reduced network.
/// Returns exact 0 when j − i < h₁ + h₂.
pub fn two_point_quench(
    mps: &PurifiedMPS,
    u: &CMatrix,
    a: &CMatrix,
    b: &CMatrix,
    i: i64,
    j: i64,
    h1: u32,
    h2: u32,
    tol: f64,
) -> Result<C64, Error> {
    let rep = check_2pt_solvable(mps, u, tol)?;
    if !rep.passed {
        return Err(Error::InvalidParam("state is not 2-point solvable for this gate".into()));
    }
    let mps = right_canonicalize(mps)?;
    let d = mps.d;
    if a.rows != d || b.rows != d {
        return Err(Error::InvalidParam("a and b must be single-site operators".into()));
    }
    if j - i < (h1 + h2) as i64 {
        return Ok(ZERO);
    }
    let p = i + h1 as i64;
    let q = j - h2 as i64;
    // rays land on either leg of the covering cell; touching rays (p = q
    // with nonzero times) share gates at the meeting point and are outside
    // the reduced two-ray network
    if p == q && h1 + h2 > 0 {
        return Err(Error::InvalidParam(
            "backward rays merge at a single site; the reduced network does not cover j - i = t1 + t2 with t1 + t2 > 0".into(),
        ));
    }

    let (_, _, m_l, m_r) = build_single_site_channels(u, d);
    let bra = |op: &CMatrix| -> Vec<C64> {
        vec_site_grouped(&op.dagger(), d, 1).iter().map(|z| z.conj()).collect()
    };
    let chain = |op: &CMatrix, m: &CMatrix, h: u32| -> Vec<C64> {
        let mt = m.transpose();
        let mut cap = bra(op);
        for _ in 0..h {
            cap = mt.apply(&cap);
        }
        cap
    };
    let cap_a = chain(a, &m_r.m, h1);
    let cap_b = chain(b, &m_l.m, h2);

    // cells covering the landing legs; cell start = odd ring site
    let cell_a = if p.rem_euclid(2) == 1 { p } else { p - 1 };
    let cell_b = if q.rem_euclid(2) == 0 { q - 1 } else { q };
    let o = bullet(d);
    let cell = mps.cell_tensor();
    let c2 = mps.chi * mps.chi;
    let (tri, sq) = fixed_points(&mps.e0())?;

    // assemble the row: per cell, caps on (tL, tR) default to ○
    let capped_cell = |cl: &[C64], cr: &[C64]| -> CMatrix {
        cell.cap(1, cl).cap(1, cr).into_matrix(c2, c2)
    };
    // each unnormalized operator cap (vs the √d-normalized ○ cap) costs 1/√d
    let inv_d = C64::new(1.0 / d as f64, 0.0);
    let inv_sqrt_d = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut row: CMatrix;
    if cell_a == cell_b {
        // both operators inside one cell
        let (scale, cl, cr): (C64, Vec<C64>, Vec<C64>) = if p == q {
            // equal-time same-site pair: one cap holding the operator product
            let prod = bra(&a.matmul(b));
            if p == cell_a {
                (inv_sqrt_d, prod, o.clone())
            } else {
                (inv_sqrt_d, o.clone(), prod)
            }
        } else {
            (inv_d, cap_a.clone(), cap_b.clone())
        };
        row = capped_cell(&cl, &cr).scale(scale);
    } else {
        let left = if p == cell_a {
            capped_cell(&cap_a, &o)
        } else {
            capped_cell(&o, &cap_a)
        };
        let right = if q == cell_b + 1 {
            capped_cell(&o, &cap_b)
        } else {
            capped_cell(&cap_b, &o)
        };
        row = left.scale(inv_sqrt_d);
        let e0 = mps.e0();
        let mut c = cell_a + 2;
        while c < cell_b {
            row = row.matmul(&e0);
            c += 2;
        }
        row = row.matmul(&right).scale(inv_sqrt_d);
    }
    let v = row.apply(&sq);
    Ok(tri.iter().zip(&v).map(|(t, x)| t * x).sum())
}

/// Space transfer matrix of the time-evolved network, truncated at depth
/// `h` half-steps, with ○ on the top open legs unless a 2-site observable
/// insertion caps them instead. Returned as a matrix from the left column
/// cut to the right column cut (bond doubled index first, then one
/// (incoming, outgoing) folded leg pair per layer).
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    pub e: CMatrix,
    pub half_steps: u32,
    pub inserted: bool,
}

pub fn transfer_matrix(
    mps: &PurifiedMPS,
    u: &CMatrix,
    h: u32,
    insertion: Option<&CMatrix>,
) -> Result<TransferMatrix, Error> {
    let d = mps.d;
    let f = d * d;
    let c2 = mps.chi * mps.chi;
    let pairs = h / 2 + h % 2;
    let cut = c2 * f.pow(2 * pairs);
    if cut * cut > COLUMN_CAP {
        return Err(Error::InvalidParam(format!(
            "transfer-matrix cut dimension {cut} exceeds the cap"
        )));
    }
    let o = bullet(d);
    let w = folded_site_tensor(u, d); // [tl, tr, bl, br]
    let periods = h / 2;
    let extra = h % 2 == 1;

    // leg tags tracked alongside the tensor's leg order
    #[derive(Clone, Copy, PartialEq, Debug)]
    enum Tag {
        BondL,
        BondR,
        X,
        Y,
        Lb(u32),
        Lt(u32),
        Out(u32),
        In(u32),
    }
    let mut t = mps.cell_tensor();
    let mut tags = vec![Tag::BondL, Tag::X, Tag::Y, Tag::BondR];
    let pos = |tags: &[Tag], tag: Tag| tags.iter().position(|&x| x == tag).unwrap();

    let contract_leg = |t: &Tensor, tags: &mut Vec<Tag>, tag: Tag, g: &Tensor, g_leg: usize, new: &[Tag]| -> Tensor {
        let p = pos(tags, tag);
        let out = Tensor::contract(t, &[p], g, &[g_leg]);
        tags.remove(p);
        tags.extend_from_slice(new);
        out
    };

    for p in 0..periods {
        // straddling gate to the left: bottom-right eats the x wire
        t = contract_leg(&t, &mut tags, Tag::X, &w, 3, &[Tag::Lt(p), Tag::X, Tag::Lb(p)]);
        // current y wire leaves through the right cut
        let ypos = pos(&tags, Tag::Y);
        tags[ypos] = Tag::Out(p);
        // aligned gate: bottom-left eats x, bottom-right is the wire coming
        // back from the right neighbor's straddling gate
        t = contract_leg(&t, &mut tags, Tag::X, &w, 2, &[Tag::X, Tag::Y, Tag::In(p)]);
    }
    if extra {
        let p = periods;
        t = contract_leg(&t, &mut tags, Tag::X, &w, 3, &[Tag::Lt(p), Tag::X, Tag::Lb(p)]);
        let ypos = pos(&tags, Tag::Y);
        tags[ypos] = Tag::Out(p);
        // the wire returned by the right neighbor runs straight to a top cap
        match insertion {
            None => {
                let cvec = Tensor::from_vec(o.clone(), &[f]);
                t = Tensor::contract(&t, &[], &cvec, &[]);
                tags.push(Tag::In(p));
                let xp = pos(&tags, Tag::X);
                t = t.cap(xp, &o);
                tags.remove(xp);
            }
            Some(obs) => {
                let cap: Vec<C64> =
                    vec_site_grouped(&obs.dagger(), d, 2).iter().map(|z| z.conj()).collect();
                let ct = Tensor::from_vec(cap, &[f, f]);
                let xp = pos(&tags, Tag::X);
                t = Tensor::contract(&t, &[xp], &ct, &[0]);
                tags.remove(xp);
                tags.push(Tag::In(p));
            }
        }
    } else {
        match insertion {
            None => {
                for tag in [Tag::X, Tag::Y] {
                    let p = pos(&tags, tag);
                    t = t.cap(p, &o);
                    tags.remove(p);
                }
            }
            Some(obs) => {
                let cap: Vec<C64> =
                    vec_site_grouped(&obs.dagger(), d, 2).iter().map(|z| z.conj()).collect();
                let ct = Tensor::from_vec(cap, &[f, f]);
                let xp = pos(&tags, Tag::X);
                let yp = pos(&tags, Tag::Y);
                t = Tensor::contract(&t, &[xp, yp], &ct, &[0, 1]);
                tags.remove(yp.max(xp));
                tags.remove(yp.min(xp));
            }
        }
    }

    // order: rows = [BondL, (Lb, Lt) per layer], cols = [BondR, (Out, In)]
    let mut order: Vec<Tag> = vec![Tag::BondL];
    for k in 0..pairs {
        order.push(Tag::Lb(k));
        order.push(Tag::Lt(k));
    }
    order.push(Tag::BondR);
    for k in 0..pairs {
        order.push(Tag::Out(k));
        order.push(Tag::In(k));
    }
    let perm: Vec<usize> = order.iter().map(|&tag| pos(&tags, tag)).collect();
    let e = t.permute(&perm).into_matrix(cut, cut);
    Ok(TransferMatrix { e, half_steps: h, inserted: insertion.is_some() })
}

/// The depth-h fixed column vector built from |□⟩ and one traced-gate map per
/// layer, indexed like the transfer matrix's column cut.
pub fn fixed_column(mps: &PurifiedMPS, u: &CMatrix, h: u32) -> Result<Vec<C64>, Error> {
    let d = mps.d;
    let f = d * d;
    let (_, sq) = fixed_points(&mps.e0())?;
    // per layer: the traced gate map ordered (bottom-left, top-left) to pair
    // with this column's (Out, In) legs
    let m = epsilon_cap(u, d).permute(&[1, 0]); // [bl, tl]
    let pairs = h / 2 + h % 2;
    let mut v = sq;
    for _ in 0..pairs {
        let mut next = Vec::with_capacity(v.len() * f * f);
        for &x in &v {
            for z in &m.data {
                next.push(x * z);
            }
        }
        v = next;
    }
    Ok(v)
}

/// Bell-pair product state (|01⟩ + |10⟩)/√2 per cell: χ = 1, γ_dim = 1.
pub fn bell_state() -> PurifiedMPS {
    let one = CMatrix::from_fn(1, 1, |_, _| ONE);
    let zero = CMatrix::zeros(1, 1);
    // A^{(01)} = A^{(10)} = 1 after normalization
    let a = vec![zero.clone(), one.clone(), one, zero];
    PurifiedMPS::new(2, 1, 1, a).expect("static tensor is valid")
}

/// The mixed χ = 1, γ_dim = 2 state solvable under the CNOT gate, with
/// K₀ ∝ I and K₁ ∝ σ_Y.
pub fn cnot_mixed_state() -> PurifiedMPS {
    let mut a = vec![CMatrix::zeros(1, 1); 8];
    let set = |a: &mut Vec<CMatrix>, i: usize, j: usize, g: usize, z: C64| {
        a[(i * 2 + j) * 2 + g] = CMatrix::from_fn(1, 1, |_, _| z);
    };
    // γ = 0: identity component; γ = 1: σ_Y component (normalized later)
    set(&mut a, 0, 0, 0, ONE);
    set(&mut a, 1, 1, 0, ONE);
    set(&mut a, 0, 1, 1, C64::new(0.0, -1.0));
    set(&mut a, 1, 0, 1, C64::new(0.0, 1.0));
    PurifiedMPS::new(2, 1, 2, a).expect("static tensor is valid")
}

/// Purification of the infinite-temperature state: cell density I/d².
pub fn infinite_temperature_state(d: usize) -> PurifiedMPS {
    let mut a = vec![CMatrix::zeros(1, 1); d * d * d * d];
    for i in 0..d {
        for j in 0..d {
            let g = i * d + j;
            a[(i * d + j) * (d * d) + g] = CMatrix::from_fn(1, 1, |_, _| ONE);
        }
    }
    PurifiedMPS::new(d, 1, d * d, a).expect("static tensor is valid")
}

/// Seeded random purified MPS (generically not solvable).
pub fn random_mps(d: usize, chi: usize, gamma_dim: usize, seed: u64) -> PurifiedMPS {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5851_f42d_4c95_7f2d);
    let a = (0..d * d * gamma_dim)
        .map(|_| {
            let entries: Vec<C64> = (0..chi * chi)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            CMatrix::from_fn(chi, chi, |r, c| entries[r * chi + c])
        })
        .collect();
    PurifiedMPS::new(d, chi, gamma_dim, a).expect("random tensor is generically valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::random_observable;
    use crate::gates::{
        build_named, build_qubit_gate, qubit_l2_params, QubitGateParams, SiteGate,
    };
    use crate::oracle::{
        quench_exact, quench_two_point_exact, state_from_cell_density, Observable, RingSpec,
    };
    use crate::tensor::haar_unitary;
    use std::f64::consts::PI;

    fn l2_gate() -> CMatrix {
        build_qubit_gate(&qubit_l2_params(1.1, 0.4, 0.9, -0.8).unwrap()).unwrap()
    }

    fn du_gate() -> CMatrix {
        let mut p = QubitGateParams::new(PI / 4.0, PI / 4.0, 0.3);
        p.v1 = SiteGate::Params { r: 0.4, theta: 1.1, phi: 0.7 };
        p.v4 = SiteGate::Params { r: -0.9, theta: 0.5, phi: 0.2 };
        build_qubit_gate(&p).unwrap()
    }

    fn herm(e00: f64, re: f64, im: f64, e11: f64) -> CMatrix {
        CMatrix::from_fn(2, 2, move |r, c| match (r, c) {
            (0, 0) => C64::new(e00, 0.0),
            (0, 1) => C64::new(re, -im),
            (1, 0) => C64::new(re, im),
            _ => C64::new(e11, 0.0),
        })
    }

    /// Dense ring density matrix of the purified state on `l` cells,
    /// site order (cell 0 left leg, cell 0 right leg, cell 1 left leg, ...).
    fn ring_density(mps: &PurifiedMPS, l: usize) -> CMatrix {
        let (d, g) = (mps.d, mps.gamma_dim);
        let phys = d.pow(2 * l as u32);
        let anc = g.pow(l as u32);
        let mut amp = vec![ZERO; phys * anc];
        for p in 0..phys {
            // cell digits of p in base d², most significant first
            let mut pairs = vec![0usize; l];
            let mut q = p;
            for k in (0..l).rev() {
                pairs[k] = q % (d * d);
                q /= d * d;
            }
            for an in 0..anc {
                let mut gs = vec![0usize; l];
                let mut q = an;
                for k in (0..l).rev() {
                    gs[k] = q % g;
                    q /= g;
                }
                let mut m = CMatrix::identity(mps.chi);
                for k in 0..l {
                    let (i, j) = (pairs[k] / d, pairs[k] % d);
                    m = m.matmul(&mps.a[(i * d + j) * g + gs[k]]);
                }
                amp[p * anc + an] = (0..mps.chi).map(|r| m[(r, r)]).sum();
            }
        }
        CMatrix::from_fn(phys, phys, |r, c| {
            (0..anc).map(|an| amp[r * anc + an] * amp[c * anc + an].conj()).sum()
        })
    }

    #[test]
    fn bell_cell_density_is_triplet_projector() {
        let rho = bell_state().cell_density().unwrap();
        let mut expect = CMatrix::zeros(4, 4);
        for r in [1usize, 2] {
            for c in [1usize, 2] {
                expect[(r, c)] = C64::new(0.5, 0.0);
            }
        }
        assert!(rho.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn cnot_state_kraus_operators_match_closed_form() {
        // K₀ ∝ I, K₁ ∝ σ_Y (phase-free); Σ K†K = I/2
        let ks = k_operators(&cnot_mixed_state());
        assert_eq!(ks.k.len(), 2);
        let k0 = CMatrix::identity(2).scale(C64::new(0.5, 0.0));
        let k1 = crate::gates::pauli_y().scale(C64::new(0.5, 0.0));
        assert!(ks.k[0].max_abs_diff(&k0) < 1e-12);
        let diff_plus = ks.k[1].max_abs_diff(&k1);
        let diff_minus = ks.k[1].max_abs_diff(&k1.scale(C64::new(-1.0, 0.0)));
        assert!(diff_plus.min(diff_minus) < 1e-12);
        let sum = ks.k.iter().fold(CMatrix::zeros(2, 2), |acc, k| {
            acc.sub(&k.dagger().matmul(k).scale(C64::new(-1.0, 0.0)))
        });
        assert!(sum.max_abs_diff(&CMatrix::identity(2).scale(C64::new(0.5, 0.0))) < 1e-12);
    }

    #[test]
    fn fixed_points_pair_to_one() {
        for seed in 0..4u64 {
            let mps = random_mps(2, 2, 2, 40 + seed);
            let (tri, sq) = fixed_points(&mps.e0()).unwrap();
            let pair: C64 = tri.iter().zip(&sq).map(|(t, s)| t * s).sum();
            assert!((pair - ONE).norm() < 1e-10, "seed {seed}: pairing {pair}");
        }
        // χ = 1: both fixed points are the scalar 1
        let (tri, sq) = fixed_points(&bell_state().e0()).unwrap();
        assert!((tri[0] - ONE).norm() < 1e-12 && (sq[0] - ONE).norm() < 1e-12);
    }

    #[test]
    fn right_canonical_form_has_identity_fixed_point() {
        for seed in [7u64, 13] {
            let mps = random_mps(2, 2, 2, seed);
            let rc = right_canonicalize(&mps).unwrap();
            // right fixed point of the canonicalized E(0) must be ∝ vec(I)
            let (_, sq) = fixed_points(&rc.e0()).unwrap();
            let scale = (sq[0] + sq[3]) / 2.0;
            let id = vec![scale, ZERO, ZERO, scale];
            let res: f64 =
                sq.iter().zip(&id).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(res < 1e-10, "seed {seed}: residual {res}");
            // the physical state is gauge invariant: ring density unchanged
            let before = ring_density(&mps, 3);
            let after = ring_density(&rc, 3);
            assert!(before.max_abs_diff(&after) < 1e-10);
        }
    }

    #[test]
    fn one_point_solvability_verdicts() {
        // Bell state passes for the second-level qubit family
        let rep = check_1pt_solvable(&bell_state(), &l2_gate(), 1e-10).unwrap();
        assert!(rep.passed, "bell residual {}", rep.residual);
        // the strong single-trace condition holds for the infinite-temperature
        // state and implies 1-point solvability for any gate
        let inf = infinite_temperature_state(2);
        assert!(check_strong_condition(&inf, 1e-10).passed);
        for seed in 0..4u64 {
            let u = haar_unitary(4, 900 + seed);
            assert!(check_1pt_solvable(&inf, &u, 1e-10).unwrap().passed);
        }
        // random states generically fail
        let bad = check_1pt_solvable(&random_mps(2, 2, 2, 3), &l2_gate(), 1e-10).unwrap();
        assert!(!bad.passed && bad.residual > 1e-3);
    }

    #[test]
    fn two_point_solvability_verdicts() {
        // CNOT with its mixed K-state passes
        let rep = check_2pt_solvable(&cnot_mixed_state(), &build_named("cnot", 2).unwrap(), 1e-9)
            .unwrap();
        assert!(rep.passed);
        // a pure (γ_dim = 1) state with a strictly second-level gate fails
        let rep = check_2pt_solvable(&bell_state(), &l2_gate(), 1e-9).unwrap();
        assert!(!rep.passed);
        // ... but passes with a dual-unitary gate
        let rep = check_2pt_solvable(&bell_state(), &du_gate(), 1e-9).unwrap();
        assert!(rep.passed);
    }

    #[test]
    fn two_point_diagram_and_algebra_verdicts_agree() {
        let gates = [l2_gate(), build_named("cnot", 2).unwrap(), du_gate()];
        let mut states: Vec<PurifiedMPS> =
            (0..5).map(|s| random_mps(2, 2, 2, 70 + s)).collect();
        states.push(bell_state());
        states.push(cnot_mixed_state());
        states.push(infinite_temperature_state(2));
        for (si, mps) in states.iter().enumerate() {
            for (gi, u) in gates.iter().enumerate() {
                let rep = check_2pt_solvable(mps, u, 1e-9).unwrap();
                assert_eq!(
                    rep.diagram_passed, rep.algebra_passed,
                    "state {si} gate {gi}: diag {:?} alg {:?}",
                    rep.diagram_residuals, rep.algebra_residuals
                );
            }
        }
    }

    #[test]
    fn transfer_matrix_depth_zero_is_cell_channel() {
        let mps = cnot_mixed_state();
        let u = build_named("cnot", 2).unwrap();
        let e = transfer_matrix(&mps, &u, 0, None).unwrap();
        assert!(e.e.max_abs_diff(&mps.e0()) < 1e-12);
    }

    #[test]
    fn fixed_column_is_transfer_matrix_eigenvector() {
        let mps = bell_state();
        let u = l2_gate();
        for h in 1..=4u32 {
            let e = transfer_matrix(&mps, &u, h, None).unwrap();
            let col = fixed_column(&mps, &u, h).unwrap();
            let out = e.e.apply(&col);
            let res: f64 =
                out.iter().zip(&col).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(res < 1e-12, "h={h}: residual {res}");
        }
    }

    #[test]
    fn one_point_matches_ring_oracle_until_wraparound() {
        // the ring agrees with the thermodynamic limit while the light cone
        // (support 2 + 2h) fits: h ≤ L − 1
        let obs = random_observable(4, 7);
        for (mps, u, l, hmax) in [
            (bell_state(), l2_gate(), 5usize, 4u32),
            (cnot_mixed_state(), build_named("cnot", 2).unwrap(), 4, 3),
        ] {
            let ring = RingSpec::new(2, l).unwrap();
            let rho = state_from_cell_density(ring, &mps.cell_density().unwrap());
            let series =
                quench_exact(ring, &u, &rho, &[Observable::two_site(obs.clone(), 1)], hmax as usize);
            for h in 0..=hmax {
                let val = one_point_correlator(&mps, &u, &obs, h, 1e-9).unwrap();
                let exact = series[0][h as usize];
                assert!(
                    (val - exact).norm() < 1e-8,
                    "L={l} h={h}: {val} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn one_point_traceless_at_infinite_temperature_is_zero() {
        let inf = infinite_temperature_state(2);
        let u = haar_unitary(4, 21);
        let mut o = random_observable(4, 9);
        let tr: C64 = (0..4).map(|i| o[(i, i)]).sum();
        for i in 0..4 {
            o[(i, i)] -= tr / 4.0;
        }
        for h in 0..=5u32 {
            let val = one_point_correlator(&inf, &u, &o, h, 1e-9).unwrap();
            assert!(val.norm() < 1e-10, "h={h}: {val}");
        }
    }

    #[test]
    fn two_point_matches_dense_oracle() {
        let a = herm(0.3, 0.7, -0.2, -1.1);
        let b = herm(-0.4, 0.1, 0.9, 0.8);
        let l = 5usize;
        let ring = RingSpec::new(2, l).unwrap();
        let configs: [(i64, i64, u32, u32); 7] =
            [(1, 1, 0, 0), (1, 2, 0, 0), (1, 4, 0, 0), (0, 3, 1, 0), (0, 3, 1, 1), (2, 5, 1, 1), (0, 6, 1, 2)];
        for (mps, u) in [
            (cnot_mixed_state(), build_named("cnot", 2).unwrap()),
            (bell_state(), du_gate()),
        ] {
            let rho = state_from_cell_density(ring, &mps.cell_density().unwrap());
            for &(i, j, h1, h2) in configs.iter() {
                let val = two_point_quench(&mps, &u, &a, &b, i, j, h1, h2, 1e-9).unwrap();
                let exact = quench_two_point_exact(
                    ring, &u, &rho, &a, &b, i as usize, j as usize, h1 as usize, h2 as usize,
                );
                assert!(
                    (val - exact).norm() < 1e-8,
                    "i={i} j={j} h1={h1} h2={h2}: {val} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn two_point_domain_boundaries() {
        let mps = cnot_mixed_state();
        let u = build_named("cnot", 2).unwrap();
        let a = herm(0.3, 0.7, -0.2, -1.1);
        let b = herm(-0.4, 0.1, 0.9, 0.8);
        // inside the double cone: exact zero
        let v = two_point_quench(&mps, &u, &a, &b, 1, 2, 1, 1, 1e-9).unwrap();
        assert_eq!(v, ZERO);
        // touching rays are outside the reduced network
        assert!(two_point_quench(&mps, &u, &a, &b, 1, 3, 1, 1, 1e-9).is_err());
        // solvability is a precondition
        assert!(two_point_quench(&bell_state(), &l2_gate(), &a, &b, 1, 4, 0, 0, 1e-9).is_err());
    }

    #[test]
    fn mps_text_round_trip() {
        let mps = random_mps(2, 2, 3, 99);
        let text = mps.to_text();
        let back = PurifiedMPS::from_text(&text).unwrap();
        assert_eq!((back.d, back.chi, back.gamma_dim), (2, 2, 3));
        for (x, y) in mps.a.iter().zip(&back.a) {
            assert!(x.max_abs_diff(y) < 1e-12);
        }
    }
}
