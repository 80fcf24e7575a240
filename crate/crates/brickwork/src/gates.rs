//! Gate constructors: Weyl-Heisenberg (Clifford) qudit families, the
//! exhaustive two-qubit parametrization, and a handful of named gates.

use crate::tensor::{kron, CMatrix, ONE, ZERO};
use crate::{C64, Error};
use std::f64::consts::PI;

pub fn omega(d: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI / d as f64)
}

/// ω raised to a real exponent (half-integer exponents appear for even D).
pub fn omega_pow(d: usize, e: f64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * e / d as f64)
}

/// Clock and shift: σ = Σ ω^j |j><j|, τ = Σ |j+1 mod D><j|.
pub fn build_sigma_tau(d: usize) -> Result<(CMatrix, CMatrix), Error> {
    if d < 2 {
        return Err(Error::InvalidParam(format!("local dimension must be >= 2, got {d}")));
    }
    let w = omega(d);
    let sigma = CMatrix::from_fn(d, d, |i, j| if i == j { w.powu(i as u32) } else { ZERO });
    let tau = CMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { ONE } else { ZERO });
    Ok((sigma, tau))
}

/// τ_{p,q} = τ^p σ^q with p, q reduced mod D.
pub fn tau_pq(d: usize, p: i64, q: i64) -> CMatrix {
    let p = p.rem_euclid(d as i64) as usize;
    let q = q.rem_euclid(d as i64) as usize;
    let w = omega(d);
    // (τ^p σ^q)|j> = ω^{qj} |j+p>
    CMatrix::from_fn(d, d, |i, j| if i == (j + p) % d { w.powu((q * j) as u32 % d as u32) } else { ZERO })
}

/// |ψ_{p,q}> = (1/√D) Σ_{ij} (τ_{p,q})*_{ij} |i>|j>, an orthonormal two-site basis.
pub fn build_psi_basis(d: usize) -> Result<Vec<Vec<C64>>, Error> {
    if d < 2 {
        return Err(Error::InvalidParam(format!("local dimension must be >= 2, got {d}")));
    }
    let s = 1.0 / (d as f64).sqrt();
    let mut basis = Vec::with_capacity(d * d);
    for p in 0..d {
        for q in 0..d {
            let t = tau_pq(d, p as i64, q as i64);
            basis.push(t.conj().scale(C64::new(s, 0.0)).vectorize());
        }
    }
    Ok(basis)
}

/// Table of U(1) phases θ_{p,q}, 0 ≤ p,q < D, stored row-major in p.
#[derive(Clone, Debug)]
pub struct ThetaTable {
    pub d: usize,
    pub theta: Vec<C64>,
}

impl ThetaTable {
    pub fn get(&self, p: usize, q: usize) -> C64 {
        self.theta[(p % self.d) * self.d + q % self.d]
    }

    pub fn all_ones(d: usize) -> Self {
        ThetaTable { d, theta: vec![ONE; d * d] }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.theta.len() != self.d * self.d {
            return Err(Error::InvalidParam("theta table has wrong length".into()));
        }
        for z in &self.theta {
            if (z.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidParam("theta entries must have unit modulus".into()));
            }
        }
        if (self.theta[0] - ONE).norm() > 1e-10 {
            return Err(Error::InvalidParam("theta_{0,0} must equal 1".into()));
        }
        Ok(())
    }
}

fn require_near_integer(x: f64, what: &str) -> Result<(), Error> {
    if (x - x.round()).abs() > 1e-9 {
        Err(Error::InvalidParam(format!("{what} must be an integer, got {x}")))
    } else {
        Ok(())
    }
}

/// Quadratic ansatz θ_{p,q} = ω^{λp² + μpq + νq²}.
///
/// μ must be an integer; λ and ν must be integers for odd D, half-integers
/// are allowed for even D (required for D-periodicity of the table).
pub fn theta_quadratic(d: usize, lambda: f64, mu: f64, nu: f64) -> Result<ThetaTable, Error> {
    require_near_integer(mu, "mu")?;
    if d % 2 == 1 {
        require_near_integer(lambda, "lambda (odd D)")?;
        require_near_integer(nu, "nu (odd D)")?;
    } else {
        require_near_integer(2.0 * lambda, "2*lambda (even D)")?;
        require_near_integer(2.0 * nu, "2*nu (even D)")?;
    }
    let mut theta = Vec::with_capacity(d * d);
    for p in 0..d {
        for q in 0..d {
            let e = lambda * (p * p) as f64 + mu * (p * q) as f64 + nu * (q * q) as f64;
            theta.push(omega_pow(d, e));
        }
    }
    Ok(ThetaTable { d, theta })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum L2Family {
    /// θ_{p,q} = ω^{Dpq/2}, defined for D = 4k+2 with k ≥ 1.
    DpqHalf,
    /// θ_{p,q} = ω^{p²/2} for even D, ω^{p²} for odd D.
    PSquared,
}

pub fn theta_l2_families(d: usize, which: L2Family) -> Result<ThetaTable, Error> {
    match which {
        L2Family::DpqHalf => {
            if d < 6 || d % 4 != 2 {
                return Err(Error::InvalidParam(format!(
                    "dpq-half family requires D = 4k+2 with k >= 1, got {d}"
                )));
            }
            theta_quadratic(d, 0.0, (d / 2) as f64, 0.0)
        }
        L2Family::PSquared => {
            let lambda = if d % 2 == 0 { 0.5 } else { 1.0 };
            theta_quadratic(d, lambda, 0.0, 0.0)
        }
    }
}

/// Quadratic tables ω^{p² + c q²} satisfying the third-level condition, known
/// for the residue families D = 12m+2, 8m+4, 12m+6 (m ≠ 1 mod 3), 12m+10.
pub fn theta_l3_families(d: usize) -> Result<ThetaTable, Error> {
    let three_halves = |d| theta_quadratic(d, 1.0, 0.0, 1.5);
    if d >= 2 && d % 12 == 2 {
        three_halves(d)
    } else if d >= 4 && d % 8 == 4 {
        theta_quadratic(d, 1.0, 0.0, 1.0)
    } else if d >= 6 && d % 12 == 6 {
        let m = (d - 6) / 12;
        if m % 3 == 1 {
            Err(Error::InvalidParam(format!(
                "D = 12m+6 with m = 1 mod 3 (D = {d}) is excluded from the third-level family"
            )))
        } else {
            three_halves(d)
        }
    } else if d >= 10 && d % 12 == 10 {
        three_halves(d)
    } else {
        Err(Error::InvalidParam(format!(
            "no known third-level quadratic family for D = {d}"
        )))
    }
}

#[derive(Clone, Debug)]
pub struct CliffordFamilyParams {
    pub d: usize,
    pub theta: ThetaTable,
    pub v1: CMatrix,
    pub v2: CMatrix,
    pub v3: CMatrix,
    pub v4: CMatrix,
}

impl CliffordFamilyParams {
    pub fn core(d: usize, theta: ThetaTable) -> Self {
        let i = CMatrix::identity(d);
        CliffordFamilyParams { d, theta, v1: i.clone(), v2: i.clone(), v3: i.clone(), v4: i }
    }
}

/// u = (v₁⊗v₂) u₀ (v₃⊗v₄), u₀ = Σ θ_{p,q} |ψ_{p,q}><ψ_{p,q}|.
pub fn build_clifford_gate(p: &CliffordFamilyParams) -> Result<CMatrix, Error> {
    let d = p.d;
    p.theta.validate()?;
    for (v, name) in [(&p.v1, "v1"), (&p.v2, "v2"), (&p.v3, "v3"), (&p.v4, "v4")] {
        if v.rows != d || v.cols != d {
            return Err(Error::InvalidParam(format!("{name} has wrong dimension")));
        }
        if v.unitarity_residual() > 1e-10 {
            return Err(Error::InvalidParam(format!("{name} is not unitary")));
        }
    }
    let basis = build_psi_basis(d)?;
    let mut u0 = CMatrix::zeros(d * d, d * d);
    for (idx, psi) in basis.iter().enumerate() {
        let th = p.theta.theta[idx];
        for r in 0..d * d {
            for c in 0..d * d {
                u0[(r, c)] += th * psi[r] * psi[c].conj();
            }
        }
    }
    Ok(kron(&p.v1, &p.v2).matmul(&u0).matmul(&kron(&p.v3, &p.v4)))
}

// ---------------------------------------------------------------------------
// two-qubit parametrization

pub fn pauli_x() -> CMatrix {
    CMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_rows(&[&[ZERO, C64::new(0.0, -1.0)], &[C64::new(0.0, 1.0), ZERO]])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]])
}

/// Single-qubit rotation U(r,θ,φ) = exp{i r (cosθ σ_z + sinθ cosφ σ_x + sinθ sinφ σ_y)}.
pub fn single_qubit_u(r: f64, theta: f64, phi: f64) -> CMatrix {
    let n = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
    let nsig = pauli_x()
        .scale(C64::new(n[0], 0.0))
        .add(&pauli_y().scale(C64::new(n[1], 0.0)))
        .add(&pauli_z().scale(C64::new(n[2], 0.0)));
    // exp(i r n·σ) = cos r · I + i sin r · n·σ
    CMatrix::identity(2)
        .scale(C64::new(r.cos(), 0.0))
        .add(&nsig.scale(C64::new(0.0, r.sin())))
}

/// exp{i (J_x σxσx + J_y σyσy + J_z σzσz)} in closed form (the two 2x2 blocks
/// of the XX/YY/ZZ sum exponentiate as aI + bX).
pub fn ising_kernel(jx: f64, jy: f64, jz: f64) -> CMatrix {
    let block = |a: f64, b: f64| -> (C64, C64) {
        // exp(i(aI + bX)) = e^{ia}(cos b I + i sin b X)
        let ph = C64::from_polar(1.0, a);
        (ph * C64::new(b.cos(), 0.0), ph * C64::new(0.0, b.sin()))
    };
    let (d_out, o_out) = block(jz, jx - jy); // span{|00>,|11>}
    let (d_in, o_in) = block(-jz, jx + jy); // span{|01>,|10>}
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = d_out;
    m[(3, 3)] = d_out;
    m[(0, 3)] = o_out;
    m[(3, 0)] = o_out;
    m[(1, 1)] = d_in;
    m[(2, 2)] = d_in;
    m[(1, 2)] = o_in;
    m[(2, 1)] = o_in;
    m
}

/// A single-site dressing gate: either (r,θ,φ) parameters or a raw unitary.
#[derive(Clone, Debug)]
pub enum SiteGate {
    Params { r: f64, theta: f64, phi: f64 },
    Matrix(CMatrix),
}

impl SiteGate {
    pub fn identity() -> Self {
        SiteGate::Params { r: 0.0, theta: 0.0, phi: 0.0 }
    }

    pub fn matrix(&self, d: usize) -> Result<CMatrix, Error> {
        match self {
            SiteGate::Params { r, theta, phi } => {
                if d != 2 {
                    return Err(Error::InvalidParam(
                        "(r,theta,phi) site gates are only defined for qubits".into(),
                    ));
                }
                Ok(single_qubit_u(*r, *theta, *phi))
            }
            SiteGate::Matrix(m) => {
                if m.rows != d || m.cols != d {
                    return Err(Error::InvalidParam("site gate has wrong dimension".into()));
                }
                if m.unitarity_residual() > 1e-10 {
                    return Err(Error::InvalidParam("site gate is not unitary".into()));
                }
                Ok(m.clone())
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct QubitGateParams {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub v1: SiteGate,
    pub v2: SiteGate,
    pub v3: SiteGate,
    pub v4: SiteGate,
    pub phase: f64,
    /// permutation applied to the coupling axes (x,y,z); [0,1,2] is canonical
    pub axis_perm: [usize; 3],
}

impl QubitGateParams {
    pub fn new(jx: f64, jy: f64, jz: f64) -> Self {
        QubitGateParams {
            jx,
            jy,
            jz,
            v1: SiteGate::identity(),
            v2: SiteGate::identity(),
            v3: SiteGate::identity(),
            v4: SiteGate::identity(),
            phase: 0.0,
            axis_perm: [0, 1, 2],
        }
    }
}

/// u = e^{i phase} (v₁⊗v₂) exp{i Σ J_a σ_a σ_a} (v₃⊗v₄).
pub fn build_qubit_gate(p: &QubitGateParams) -> Result<CMatrix, Error> {
    let j_in = [p.jx, p.jy, p.jz];
    let mut j = [0.0f64; 3];
    for (slot, &src) in p.axis_perm.iter().enumerate() {
        j[src] = j_in[slot];
    }
    let kernel = ising_kernel(j[0], j[1], j[2]);
    let left = kron(&p.v1.matrix(2)?, &p.v2.matrix(2)?);
    let right = kron(&p.v3.matrix(2)?, &p.v4.matrix(2)?);
    Ok(left.matmul(&kernel).matmul(&right).scale(C64::from_polar(1.0, p.phase)))
}

/// The second-level qubit family: J = (0,0,π/4), v₃ = v₄ = I, and
/// v_i = U(r_i, θ_i, φ_i) with the constraint sin θ_i = 1/(√2 sin r_i),
/// which requires r_i ∈ [π/4, 3π/4].
pub fn qubit_l2_params(r1: f64, phi1: f64, r2: f64, phi2: f64) -> Result<QubitGateParams, Error> {
    let mut p = QubitGateParams::new(0.0, 0.0, PI / 4.0);
    let angle = |r: f64| -> Result<f64, Error> {
        let s = 1.0 / (2.0_f64.sqrt() * r.sin());
        if !(s.is_finite() && s.abs() <= 1.0 + 1e-12) {
            return Err(Error::InvalidParam(format!(
                "r = {r} outside [π/4, 3π/4]: sin θ = 1/(√2 sin r) has no solution"
            )));
        }
        Ok(s.clamp(-1.0, 1.0).asin())
    };
    p.v1 = SiteGate::Params { r: r1, theta: angle(r1)?, phi: phi1 };
    p.v2 = SiteGate::Params { r: r2, theta: angle(r2)?, phi: phi2 };
    Ok(p)
}

/// The CNOT decomposition within the exhaustive parametrization:
/// J = (0,0,π/4), z-rotations v₁ = e^{iπ/4 σz} and (inside v₂) e^{−iπ/4 σz},
/// v₂ = Hσx e^{−iπ/4 σz}, v₃ = I, v₄ = σx H, global phase e^{−iπ/4}.
/// (The rotation signs are fixed by requiring the product to equal CNOT
/// entrywise; the opposite signs produce −(σx-on-|0⟩) ⊕ I instead.)
pub fn cnot_qubit_params() -> QubitGateParams {
    let h = hadamard_2();
    let exp_z = |a: f64| CMatrix::diag(&[C64::from_polar(1.0, a), C64::from_polar(1.0, -a)]);
    let mut p = QubitGateParams::new(0.0, 0.0, PI / 4.0);
    p.v1 = SiteGate::Matrix(exp_z(PI / 4.0));
    p.v2 = SiteGate::Matrix(h.matmul(&pauli_x()).matmul(&exp_z(-PI / 4.0)));
    p.v3 = SiteGate::Matrix(CMatrix::identity(2));
    p.v4 = SiteGate::Matrix(pauli_x().matmul(&h));
    p.phase = -PI / 4.0;
    p
}

fn hadamard_2() -> CMatrix {
    let s = C64::new(1.0 / 2.0_f64.sqrt(), 0.0);
    CMatrix::from_rows(&[&[s, s], &[s, -s]])
}

// ---------------------------------------------------------------------------
// named gates

/// Generalized Hadamard: the inverse-DFT matrix H_{jk} = ω^{−jk}/√D, which
/// maps σ to τ under conjugation (the plain DFT gives τ† instead).
pub fn generalized_hadamard(d: usize) -> CMatrix {
    let w = omega(d).conj();
    let s = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    CMatrix::from_fn(d, d, |j, k| s * w.powu(((j * k) % d) as u32))
}

/// C_τ = Σ_i |i><i| ⊗ τ^i — the generalized controlled-NOT; equals CNOT at D=2.
pub fn controlled_tau(d: usize) -> CMatrix {
    CMatrix::from_fn(d * d, d * d, |r, c| {
        let (i, k) = (r / d, r % d);
        let (ic, j) = (c / d, c % d);
        if i == ic && k == (j + i) % d {
            ONE
        } else {
            ZERO
        }
    })
}

pub fn build_named(name: &str, d: usize) -> Result<CMatrix, Error> {
    match name {
        "identity" => Ok(CMatrix::identity(d * d)),
        "swap" => Ok(crate::tensor::swap_gate(d)),
        "cnot" => {
            if d != 2 {
                return Err(Error::InvalidParam("cnot is a qubit gate; use controlled-tau for D > 2".into()));
            }
            Ok(controlled_tau(2))
        }
        "cz" => {
            if d != 2 {
                return Err(Error::InvalidParam("cz is defined here for qubits only".into()));
            }
            Ok(CMatrix::diag(&[ONE, ONE, ONE, -ONE]))
        }
        "controlled-tau" => Ok(controlled_tau(d)),
        // single-site D x D gate: the DFT matrix with HσH† = τ
        "generalized-hadamard-conjugate" => Ok(generalized_hadamard(d)),
        _ => Err(Error::InvalidParam(format!("unknown named gate {name:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::swap_gate;

    #[test]
    fn sigma_tau_relations() {
        for d in 2..=8 {
            let (s, t) = build_sigma_tau(d).unwrap();
            let lhs = s.matmul(&t);
            let rhs = t.matmul(&s).scale(omega(d));
            assert!(lhs.max_abs_diff(&rhs) < 1e-14, "sigma tau = omega tau sigma failed at D={d}");
        }
        let (s, t) = build_sigma_tau(5).unwrap();
        let mut sp = CMatrix::identity(5);
        let mut tp = CMatrix::identity(5);
        for _ in 0..5 {
            sp = sp.matmul(&s);
            tp = tp.matmul(&t);
        }
        assert!(sp.max_abs_diff(&CMatrix::identity(5)) < 1e-13);
        assert!(tp.max_abs_diff(&CMatrix::identity(5)) < 1e-13);
    }

    #[test]
    fn d2_is_pauli() {
        let (s, t) = build_sigma_tau(2).unwrap();
        assert!(s.max_abs_diff(&pauli_z()) < 1e-15);
        assert!(t.max_abs_diff(&pauli_x()) < 1e-15);
    }

    #[test]
    fn tau_pq_product_relation() {
        let d = 3;
        let w = omega(d);
        for p in 0..d as i64 {
            for q in 0..d as i64 {
                for r in 0..d as i64 {
                    for s in 0..d as i64 {
                        let lhs = tau_pq(d, p, q).matmul(&tau_pq(d, r, s));
                        let rhs = tau_pq(d, p + r, q + s).scale(w.powu((q * r) as u32));
                        assert!(lhs.max_abs_diff(&rhs) < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn tau_pq_conj_transpose_relations() {
        for d in 2..=6usize {
            let w = omega(d);
            for p in 0..d as i64 {
                for q in 0..d as i64 {
                    let conj = tau_pq(d, p, q).conj();
                    assert!(conj.max_abs_diff(&tau_pq(d, p, -q)) < 1e-13);
                    let tr = tau_pq(d, p, q).transpose();
                    let rhs = tau_pq(d, -p, q).scale(w.powf(-((p * q) as f64)));
                    assert!(tr.max_abs_diff(&rhs) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn tau_pq_trace_orthogonality() {
        let d = 4;
        for p in 0..d as i64 {
            for q in 0..d as i64 {
                for r in 0..d as i64 {
                    for s in 0..d as i64 {
                        let tr = tau_pq(d, p, q).dagger().matmul(&tau_pq(d, r, s)).trace();
                        let expect = if p == r && q == s { C64::new(d as f64, 0.0) } else { ZERO };
                        assert!((tr - expect).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn psi_basis_bell_gram_completeness() {
        let b2 = build_psi_basis(2).unwrap();
        // (p,q)=(0,0): (|00>+|11>)/sqrt2
        let s = 1.0 / 2.0_f64.sqrt();
        assert!((b2[0][0] - C64::new(s, 0.0)).norm() < 1e-15);
        assert!((b2[0][3] - C64::new(s, 0.0)).norm() < 1e-15);
        assert!(b2[0][1].norm() < 1e-15 && b2[0][2].norm() < 1e-15);

        let b3 = build_psi_basis(3).unwrap();
        for (i, x) in b3.iter().enumerate() {
            for (j, y) in b3.iter().enumerate() {
                let ip: C64 = x.iter().zip(y).map(|(a, b)| a.conj() * b).sum();
                let expect = if i == j { ONE } else { ZERO };
                assert!((ip - expect).norm() < 1e-12);
            }
        }

        let b4 = build_psi_basis(4).unwrap();
        let mut sum = CMatrix::zeros(16, 16);
        for psi in &b4 {
            for r in 0..16 {
                for c in 0..16 {
                    sum[(r, c)] += psi[r] * psi[c].conj();
                }
            }
        }
        assert!(sum.max_abs_diff(&CMatrix::identity(16)) < 1e-12);
    }

    #[test]
    fn all_ones_theta_gives_identity() {
        for d in 2..=4 {
            let p = CliffordFamilyParams::core(d, ThetaTable::all_ones(d));
            let u = build_clifford_gate(&p).unwrap();
            assert!(u.max_abs_diff(&CMatrix::identity(d * d)) < 1e-12);
        }
    }

    #[test]
    fn clifford_gate_is_unitary() {
        let th = theta_quadratic(3, 1.0, 1.0, -1.0).unwrap();
        let u = build_clifford_gate(&CliffordFamilyParams::core(3, th)).unwrap();
        assert!(u.unitarity_residual() < 1e-10);
    }

    #[test]
    fn quadratic_theta_half_integer_d2() {
        let t = theta_quadratic(2, 0.5, 0.0, 0.5).unwrap();
        let i = C64::new(0.0, 1.0);
        assert!((t.get(0, 0) - ONE).norm() < 1e-14);
        assert!((t.get(1, 0) - i).norm() < 1e-14);
        assert!((t.get(0, 1) - i).norm() < 1e-14);
        assert!((t.get(1, 1) - ONE).norm() < 1e-14 || (t.get(1, 1) + ONE).norm() < 1e-14);
        // parity rule: half-integer lambda rejected for odd D
        assert!(theta_quadratic(3, 0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn l2_family_preconditions() {
        assert!(theta_l2_families(2, L2Family::DpqHalf).is_err());
        assert!(theta_l2_families(6, L2Family::DpqHalf).is_ok());
        let t3 = theta_l2_families(3, L2Family::PSquared).unwrap();
        for p in 0..3 {
            for q in 0..3 {
                assert!((t3.get(p, q) - omega_pow(3, (p * p) as f64)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn l3_family_residues() {
        assert!(theta_l3_families(4).is_ok()); // 8m+4
        assert!(theta_l3_families(6).is_ok()); // 12m+6, m=0
        assert!(theta_l3_families(18).is_err()); // 12m+6, m=1 excluded
        assert!(theta_l3_families(5).is_err());
        let t4 = theta_l3_families(4).unwrap();
        for p in 0..4 {
            for q in 0..4 {
                assert!((t4.get(p, q) - omega_pow(4, (p * p + q * q) as f64)).norm() < 1e-14);
            }
        }
        let t6 = theta_l3_families(6).unwrap();
        assert!((t6.get(0, 1) - omega_pow(6, 1.5)).norm() < 1e-14);
    }

    #[test]
    fn qubit_gate_trivial_and_unitary() {
        let p = QubitGateParams::new(0.0, 0.0, 0.0);
        assert!(build_qubit_gate(&p).unwrap().max_abs_diff(&CMatrix::identity(4)) < 1e-14);
        let p = QubitGateParams::new(0.3, 0.7, 1.1);
        assert!(build_qubit_gate(&p).unwrap().unitarity_residual() < 1e-12);
    }

    #[test]
    fn ising_kernel_matches_series() {
        // compare against a brute-force Taylor exponential
        let (jx, jy, jz) = (0.4, -0.25, 0.9);
        let m = kron(&pauli_x(), &pauli_x())
            .scale(C64::new(jx, 0.0))
            .add(&kron(&pauli_y(), &pauli_y()).scale(C64::new(jy, 0.0)))
            .add(&kron(&pauli_z(), &pauli_z()).scale(C64::new(jz, 0.0)));
        let im = m.scale(C64::new(0.0, 1.0));
        let mut series = CMatrix::identity(4);
        let mut term = CMatrix::identity(4);
        for k in 1..40 {
            term = term.matmul(&im).scale(C64::new(1.0 / k as f64, 0.0));
            series = series.add(&term);
        }
        assert!(ising_kernel(jx, jy, jz).max_abs_diff(&series) < 1e-12);
    }

    #[test]
    fn axis_permutation_relabels_couplings() {
        let base = build_qubit_gate(&QubitGateParams::new(0.2, 0.5, 0.8)).unwrap();
        let mut p = QubitGateParams::new(0.5, 0.2, 0.8);
        p.axis_perm = [1, 0, 2];
        assert!(build_qubit_gate(&p).unwrap().max_abs_diff(&base) < 1e-13);
    }

    #[test]
    fn cnot_decomposition_entrywise() {
        let u = build_qubit_gate(&cnot_qubit_params()).unwrap();
        let cnot = build_named("cnot", 2).unwrap();
        assert!(u.max_abs_diff(&cnot) < 1e-12);
    }

    #[test]
    fn named_gates() {
        assert!(build_named("controlled-tau", 2).unwrap().max_abs_diff(&build_named("cnot", 2).unwrap()) < 1e-15);
        let cz = build_named("cz", 2).unwrap();
        assert!((cz[(3, 3)] + ONE).norm() < 1e-15);
        assert!(build_named("swap", 3).unwrap().max_abs_diff(&swap_gate(3)) < 1e-15);
        assert!(build_named("nope", 2).is_err());

        let h = build_named("generalized-hadamard-conjugate", 3).unwrap();
        let (s, t) = build_sigma_tau(3).unwrap();
        assert!(h.matmul(&s).matmul(&h.dagger()).max_abs_diff(&t) < 1e-12);
        assert!(h.unitarity_residual() < 1e-12);
    }

    #[test]
    fn controlled_tau_unitary_higher_d() {
        for d in 2..=5 {
            assert!(controlled_tau(d).unitarity_residual() < 1e-14);
        }
    }
}
