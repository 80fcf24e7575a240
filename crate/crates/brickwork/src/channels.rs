//! Correlation channels of hierarchical gates: the four single-site maps
//! ε_L, ε_R, M_L, M_R, the gate-aligned two-site channel Q, the three-site
//! channel R, closed-form second-level correlators, and ergodicity
//! classification from channel spectra.
//!
//! All channel matrices act on *site-grouped* vectorizations of k-site
//! operators (each site's ket and bra index adjacent); for k = 1 this is the
//! ordinary row-major vec.

use crate::conditions::{check_l2, Side};
use crate::oracle::folded_two_site_gate;
use crate::tensor::{kron, partial_trace, vec_site_grouped, CMatrix, ZERO};
use crate::{C64, Error};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A quantum channel on k adjacent sites of local dimension d, materialized
/// as a D^{2k} × D^{2k} superoperator on site-grouped vectorized operators.
#[derive(Clone, Debug)]
pub struct Channel {
    pub d: usize,
    pub k: usize,
    pub m: CMatrix,
}

impl Channel {
    fn vec_identity(&self) -> Vec<C64> {
        vec_site_grouped(&CMatrix::identity(self.d.pow(self.k as u32)), self.d, self.k)
    }

    /// max |m·vec(I) − vec(I)|
    pub fn unitality_residual(&self) -> f64 {
        let id = self.vec_identity();
        let out = self.m.apply(&id);
        out.iter().zip(&id).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// max |vec(I)†·m − vec(I)†|
    pub fn trace_preservation_residual(&self) -> f64 {
        let id = self.vec_identity();
        let n = self.m.rows;
        (0..n)
            .map(|c| {
                let s: C64 = (0..n).map(|r| id[r].conj() * self.m[(r, c)]).sum();
                (s - id[c].conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.unitality_residual() < tol && self.trace_preservation_residual() < tol
    }

    /// Eigenvalues sorted by decreasing modulus.
    pub fn spectrum(&self) -> Vec<C64> {
        self.m.spectrum()
    }
}

/// Ergodicity classification of a channel: λ is the largest-modulus eigenvalue
/// after removing one unit eigenvalue for the identity eigenvector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ergodicity {
    NonErgodic { lambda: C64 },
    Ergodic { lambda: C64 },
}

pub fn ergodicity(ch: &Channel) -> Ergodicity {
    let mut eigs = ch.spectrum();
    // drop the eigenvalue closest to 1 (the identity eigenvector)
    let one = C64::new(1.0, 0.0);
    let idx = eigs
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| (*a - one).norm().partial_cmp(&(*b - one).norm()).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    eigs.remove(idx);
    let lambda = eigs
        .into_iter()
        .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
        .unwrap_or(ZERO);
    if lambda.norm() >= 1.0 - 1e-8 {
        Ergodicity::NonErgodic { lambda }
    } else {
        Ergodicity::Ergodic { lambda }
    }
}

/// Build a superoperator column by column from a map on matrix units, in the
/// ordinary vec convention (k = 1 site of dimension n).
fn superoperator<F: FnMut(&CMatrix) -> CMatrix>(n: usize, mut map: F) -> CMatrix {
    let mut m = CMatrix::zeros(n * n, n * n);
    for r in 0..n {
        for s in 0..n {
            let mut unit = CMatrix::zeros(n, n);
            unit[(r, s)] = C64::new(1.0, 0.0);
            let out = map(&unit);
            let col = r * n + s;
            for i in 0..n {
                for j in 0..n {
                    m[(i * n + j, col)] = out[(i, j)];
                }
            }
        }
    }
    m
}

/// The four single-site channels of a two-site gate (site 1 = left):
/// ε_L(b) = Tr₁[u (I⊗b) u†]/D, ε_R(b) = Tr₂[u (b⊗I) u†]/D,
/// M_L(b) = Tr₁[u (b⊗I) u†]/D, M_R(b) = Tr₂[u (I⊗b) u†]/D.
pub fn build_single_site_channels(u: &CMatrix, d: usize) -> (Channel, Channel, Channel, Channel) {
    let id = CMatrix::identity(d);
    let inv_d = C64::new(1.0 / d as f64, 0.0);
    let dims = [d, d];
    let conj = |x: &CMatrix| u.matmul(x).matmul(&u.dagger());
    let mk = |left_input: bool, keep_left: bool| -> Channel {
        let m = superoperator(d, |b| {
            let emb = if left_input { kron(b, &id) } else { kron(&id, b) };
            let keep = [keep_left, !keep_left];
            partial_trace(&conj(&emb), &dims, &keep).scale(inv_d)
        });
        Channel { d, k: 1, m }
    };
    let eps_l = mk(false, false); // input right, trace left, output right
    let eps_r = mk(true, true); // input left, trace right, output left
    let m_l = mk(true, false); // input left, trace left, output right
    let m_r = mk(false, true); // input right, trace right, output left
    (eps_l, eps_r, m_l, m_r)
}

/// Gate-aligned two-site channel: one Floquet step on a brick-aligned 2-site
/// operator with the outer legs traced, Q(b) = (ε_L ⊗ ε_R)(u b u†).
pub fn build_q(u: &CMatrix, d: usize) -> Channel {
    let (eps_l, eps_r, _, _) = build_single_site_channels(u, d);
    let w = folded_two_site_gate(u, d);
    let m = kron(&eps_l.m, &eps_r.m).matmul(&w);
    Channel { d, k: 2, m }
}

/// Three-site channel: one Floquet step on a 3-site operator with the two
/// outermost legs traced against identity inserts. With the operator on sites
/// (1,2,3) of a 5-site window and even bricks at (0,1), (2,3):
/// R = [w₁₂ ⊗ ε_R] ∘ [ε_L ⊗ w₂₃].
pub fn build_r(u: &CMatrix, d: usize) -> Channel {
    let (eps_l, eps_r, _, _) = build_single_site_channels(u, d);
    let w = folded_two_site_gate(u, d);
    let step1 = kron(&eps_l.m, &w);
    let step2 = kron(&w, &eps_r.m);
    Channel { d, k: 3, m: step2.matmul(&step1) }
}

/// Pairing Tr(a · X) for site-grouped vec(X).
pub fn trace_pair(a: &CMatrix, d: usize, k: usize, v: &[C64]) -> C64 {
    let bra = vec_site_grouped(&a.dagger(), d, k);
    bra.iter().zip(v).map(|(x, y)| x.conj() * y).sum()
}

/// Closed-form second-level two-point correlator evaluator. Sites and times
/// are given in doubled units (i2 = 2i, t2 = 2t), so odd values are the
/// half-integer sites / half-integer times of the brickwork lattice.
pub struct L2Correlator {
    pub d: usize,
    eps_l: CMatrix,
    eps_r: CMatrix,
    m_l: CMatrix,
    m_r: CMatrix,
}

impl L2Correlator {
    pub fn new(u: &CMatrix, d: usize, tol: f64) -> Result<Self, Error> {
        let rep = check_l2(u, Side::Both);
        if rep.residual >= tol {
            return Err(Error::InvalidParam(
                "gate is not second-level on both sides; use the brute-force oracle instead".into(),
            ));
        }
        let (eps_l, eps_r, m_l, m_r) = build_single_site_channels(u, d);
        Ok(L2Correlator { d, eps_l: eps_l.m, eps_r: eps_r.m, m_l: m_l.m, m_r: m_r.m })
    }

    /// C_{ij}(t) for single-site observables a at site i2/2 and b at site
    /// j2/2, time t2/2 in Floquet periods. Nonzero only on the light rays and
    /// the time axis; an operator at an integer site first meets its brick in
    /// the left slot and emits only the right-moving ray (M_L per half-step),
    /// a half-integer site only the left-moving one (M_R).
    pub fn eval(&self, a: &CMatrix, b: &CMatrix, i2: i64, j2: i64, t2: u32) -> C64 {
        let t2 = t2 as i64;
        let vb = vec_site_grouped(b, self.d, 1);
        let pair = |v: &[C64]| trace_pair(a, self.d, 1, v);
        let pow_apply = |m: &CMatrix, n: i64, v: &[C64]| -> Vec<C64> {
            let mut v = v.to_vec();
            for _ in 0..n {
                v = m.apply(&v);
            }
            v
        };
        let j_integer = j2.rem_euclid(2) == 0;
        if i2 - j2 == t2 && t2 > 0 && j_integer {
            pair(&pow_apply(&self.m_l, t2, &vb))
        } else if j2 - i2 == t2 && t2 > 0 && !j_integer {
            pair(&pow_apply(&self.m_r, t2, &vb))
        } else if i2 == j2 {
            // time axis: t = n + k/2 applies (ε_L ε_R)^n then k extra ε
            let k = t2 % 2;
            let n = t2 / 2;
            let (first, second, extra) = if i2.rem_euclid(2) == 0 {
                (&self.eps_r, &self.eps_l, &self.eps_r)
            } else {
                // half-integer site: the first layer hits the operator from
                // the other slot, so the roles of the two ε's swap
                (&self.eps_l, &self.eps_r, &self.eps_l)
            };
            let mut v = vb;
            for _ in 0..n {
                v = second.apply(&first.apply(&v));
            }
            if k == 1 {
                v = extra.apply(&v);
            }
            pair(&v)
        } else {
            ZERO
        }
    }
}

/// Two-site time-axis correlator Tr(a Q^⌊t⌋ b) for gate-aligned two-site
/// observables, with one extra folded gate at half-integer times.
pub fn correlator_2site_time(u: &CMatrix, d: usize, a: &CMatrix, b: &CMatrix, t2: u32) -> C64 {
    let q = build_q(u, d);
    let w = folded_two_site_gate(u, d);
    let mut v = vec_site_grouped(b, d, 2);
    for _ in 0..(t2 / 2) {
        v = q.m.apply(&v);
    }
    if t2 % 2 == 1 {
        v = w.apply(&v);
    }
    trace_pair(a, d, 2, &v)
}

/// Closed-form nontrivial Q eigenvalue for the qubit second-level family
/// (J = (0,0,π/4), v₃ = v₄ = I, θᵢ = arcsin(1/(√2 sin rᵢ))).
pub fn qubit_lambda_closed_form(r1: f64, r2: f64, phi1: f64, phi2: f64) -> Result<f64, Error> {
    for r in [r1, r2] {
        if !(std::f64::consts::FRAC_PI_4 - 1e-12..=3.0 * std::f64::consts::FRAC_PI_4 + 1e-12)
            .contains(&r)
        {
            return Err(Error::InvalidParam(format!(
                "r = {r} outside [π/4, 3π/4]: √(−cos 2r) becomes imaginary"
            )));
        }
    }
    let s1 = (-(2.0 * r1).cos()).max(0.0).sqrt();
    let s2 = (-(2.0 * r2).cos()).max(0.0).sqrt();
    let c = (phi2 - phi1).cos();
    Ok(c * c - 2.0 * (s2 * r1.cos() + s1 * r2.cos()).powi(2))
}

/// Inner light-cone velocity ν_k = (k−2)/k of level k, as a reduced fraction.
pub fn inner_lightcone_velocity(k: u32) -> Result<(i64, i64), Error> {
    if k < 2 {
        return Err(Error::InvalidParam("level must be at least 2".into()));
    }
    let (mut num, mut den) = ((k - 2) as i64, k as i64);
    let g = gcd(num, den);
    if g > 0 {
        num /= g;
        den /= g;
    }
    Ok((num, den))
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Seeded random traceless Hilbert–Schmidt-normalized Hermitian operator.
pub fn random_observable(n: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut g = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
    }
    let mut h = g.add(&g.dagger()).scale(C64::new(0.5, 0.0));
    let tr = h.trace() / C64::new(n as f64, 0.0);
    for i in 0..n {
        h[(i, i)] -= tr;
    }
    h.hs_normalize()
}

/// One evaluated correlator grid point; sites and times in doubled units.
#[derive(Clone, Debug)]
pub struct GridPoint {
    pub i2: i64,
    pub j2: i64,
    pub t2: u32,
    pub value: C64,
    pub method: String,
}

#[derive(Clone, Debug, Default)]
pub struct CorrelatorGrid {
    pub points: Vec<GridPoint>,
}

impl CorrelatorGrid {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,t_numerator,t_denominator,re,im,method\n");
        for p in &self.points {
            let fmt_site = |x2: i64| {
                if x2 % 2 == 0 {
                    format!("{}", x2 / 2)
                } else {
                    format!("{}", x2 as f64 / 2.0)
                }
            };
            let (tn, td) = if p.t2 % 2 == 0 { (p.t2 / 2, 1) } else { (p.t2, 2) };
            s.push_str(&format!(
                "{},{},{},{},{:.16e},{:.16e},{}\n",
                fmt_site(p.i2),
                fmt_site(p.j2),
                tn,
                td,
                p.value.re,
                p.value.im,
                p.method
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{
        build_clifford_gate, theta_l2_families, CliffordFamilyParams, L2Family,
    };
    use crate::oracle::{correlator_exact, Observable, RingSpec};
    use crate::tensor::{haar_unitary, swap_gate};

    #[test]
    fn channels_unital_and_trace_preserving() {
        for d in [2usize, 3] {
            for seed in 0..8u64 {
                let u = haar_unitary(d * d, 100 + seed);
                let (a, b, c, e) = build_single_site_channels(&u, d);
                for ch in [&a, &b, &c, &e] {
                    assert!(ch.is_valid(1e-10));
                }
                assert!(build_q(&u, d).is_valid(1e-10));
                assert!(build_r(&u, d).is_valid(1e-10));
            }
        }
    }

    #[test]
    fn channel_spectra_bounded_with_unit_eigenvalue() {
        let u = haar_unitary(9, 4);
        let q = build_q(&u, 3);
        let eigs = q.spectrum();
        assert!(eigs.iter().any(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-8));
        assert!(eigs.iter().all(|z| z.norm() <= 1.0 + 1e-8));
    }

    #[test]
    fn swap_q_channel_spectrum() {
        // the SWAP circuit moves aligned 2-site operators off their bricks, so
        // its Q channel is the total depolarizer: spectrum {1, 0, ..., 0}
        let q = build_q(&swap_gate(2), 2);
        let eigs = q.spectrum();
        assert!((eigs[0] - C64::new(1.0, 0.0)).norm() < 1e-10);
        assert!(eigs[1..].iter().all(|z| z.norm() < 1e-10));
        assert!(matches!(ergodicity(&q), Ergodicity::Ergodic { .. }));
    }

    fn du_qubit_gate() -> CMatrix {
        use std::f64::consts::FRAC_PI_4;
        let mut qp = crate::gates::QubitGateParams::new(FRAC_PI_4, FRAC_PI_4, 0.3);
        use crate::gates::SiteGate;
        qp.v1 = SiteGate::Matrix(haar_unitary(2, 41));
        qp.v2 = SiteGate::Matrix(haar_unitary(2, 42));
        qp.v3 = SiteGate::Matrix(haar_unitary(2, 43));
        qp.v4 = SiteGate::Matrix(haar_unitary(2, 44));
        crate::gates::build_qubit_gate(&qp).unwrap()
    }

    #[test]
    fn du_gate_ray_matches_oracle() {
        // a dual-unitary gate propagates integer-site operators along the
        // right ray via M_L, one application per half-step
        let u = du_qubit_gate();
        let d = 2;
        assert!(crate::conditions::check_dual_unitarity(&u).residual < 1e-10);
        let ring = RingSpec::new(d, 4).unwrap();
        let a = random_observable(d, 1);
        let b = random_observable(d, 2);
        let (_, _, m_l, m_r) = build_single_site_channels(&u, d);
        for t2 in 1..=3usize {
            let mut vl = vec_site_grouped(&b, d, 1);
            let mut vr = vl.clone();
            for _ in 0..t2 {
                vl = m_l.m.apply(&vl);
                vr = m_r.m.apply(&vr);
            }
            // integer starting site: right ray only
            let exact = correlator_exact(
                ring,
                &u,
                &Observable::single(a.clone(), t2 % 8),
                &Observable::single(b.clone(), 0),
                t2,
            );
            let closed = trace_pair(&a, d, 1, &vl);
            assert!((closed - exact).norm() < 1e-10, "t2={t2}: {closed} vs {exact}");
            // half-integer starting site: left ray only
            let exact = correlator_exact(
                ring,
                &u,
                &Observable::single(a.clone(), (3 - t2 as i64).rem_euclid(8) as usize),
                &Observable::single(b.clone(), 3),
                t2,
            );
            let closed = trace_pair(&a, d, 1, &vr);
            assert!((closed - exact).norm() < 1e-10, "t2={t2} left: {closed} vs {exact}");
        }
    }

    #[test]
    fn qubit_l2_single_site_channels_depolarize() {
        // ε_L and ε_R of the generic qubit second-level family kill traceless
        // operators (CNOT is a special point where only the composite does)
        let p = crate::gates::qubit_l2_params(1.0, 0.7, 1.3, -0.4).unwrap();
        let g = crate::gates::build_qubit_gate(&p).unwrap();
        assert!(crate::conditions::check_l2(&g, crate::conditions::Side::Both).residual < 1e-10);
        let (eps_l, eps_r, _, _) = build_single_site_channels(&g, 2);
        let b = random_observable(2, 7);
        let v = vec_site_grouped(&b, 2, 1);
        // each ε alone is a dephasing in a rotated basis; the per-period
        // composites in either order are fully depolarizing
        for out in [
            eps_l.m.apply(&eps_r.m.apply(&v)),
            eps_r.m.apply(&eps_l.m.apply(&v)),
        ] {
            assert!(out.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-10);
        }
    }

    #[test]
    fn two_site_time_axis_matches_oracle() {
        let p = crate::gates::qubit_l2_params(1.0, 0.7, 1.3, -0.4).unwrap();
        let g = crate::gates::build_qubit_gate(&p).unwrap();
        let ring = RingSpec::new(2, 4).unwrap();
        let a = random_observable(4, 8);
        let b = random_observable(4, 9);
        for t2 in 0..=6u32 {
            let closed = correlator_2site_time(&g, 2, &a, &b, t2);
            let exact = correlator_exact(
                ring,
                &g,
                &Observable::two_site(a.clone(), 0),
                &Observable::two_site(b.clone(), 0),
                t2 as usize,
            );
            assert!((closed - exact).norm() < 1e-8, "t2={t2}: {closed} vs {exact}");
        }
    }

    #[test]
    fn three_site_channel_matches_oracle() {
        // R acts on operators whose first site is the right slot of an even
        // brick, i.e. starting on an odd ring site
        for (u, seed) in [
            (crate::gates::build_named("cnot", 2).unwrap(), 11u64),
            (crate::gates::build_qubit_gate(
                &crate::gates::qubit_l2_params(1.0, 0.7, 1.3, -0.4).unwrap(),
            )
            .unwrap(), 12),
        ] {
            let d = 2;
            let ring = RingSpec::new(d, 4).unwrap();
            let a = random_observable(d * d * d, seed);
            let b = random_observable(d * d * d, seed + 1);
            let r = build_r(&u, d);
            let mut v = vec_site_grouped(&b, d, 3);
            for t in 0..=2usize {
                let closed = trace_pair(&a, d, 3, &v);
                let exact = correlator_exact(
                    ring,
                    &u,
                    &Observable { op: a.clone(), site: 1, support: 3 },
                    &Observable { op: b.clone(), site: 1, support: 3 },
                    2 * t,
                );
                assert!((closed - exact).norm() < 1e-8, "t={t}: {closed} vs {exact}");
                v = r.m.apply(&v);
            }
        }
    }

    #[test]
    fn qubit_q_spectrum_is_one_and_lambda() {
        let (r1, p1, r2, p2) = (1.1, 0.4, 0.9, -0.8);
        let g = crate::gates::build_qubit_gate(
            &crate::gates::qubit_l2_params(r1, p1, r2, p2).unwrap(),
        )
        .unwrap();
        let q = build_q(&g, 2);
        let lam = qubit_lambda_closed_form(r1, r2, p1, p2).unwrap();
        let eigs = q.spectrum();
        assert!((eigs[0] - C64::new(1.0, 0.0)).norm() < 1e-8);
        assert!((eigs[1] - C64::new(lam, 0.0)).norm() < 1e-8, "{} vs {lam}", eigs[1]);
        assert!(eigs[2..].iter().all(|z| z.norm() < 1e-7));
    }

    #[test]
    fn lambda_closed_form_special_points() {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
        // φ₁=φ₂, r₁=π−r₂ → λ=1
        let l = qubit_lambda_closed_form(PI - 0.9, 0.9, 0.3, 0.3).unwrap();
        assert!((l - 1.0).abs() < 1e-12, "{l}");
        // r₁=π/2, r₂=π/4, φ₁−φ₂=π/2 → λ=−1
        let l = qubit_lambda_closed_form(FRAC_PI_2, FRAC_PI_4, FRAC_PI_2, 0.0).unwrap();
        assert!((l + 1.0).abs() < 1e-12, "{l}");
        assert!(qubit_lambda_closed_form(0.1, FRAC_PI_2, 0.0, 0.0).is_err());
    }

    #[test]
    fn lightcone_velocity_values() {
        assert_eq!(inner_lightcone_velocity(2).unwrap(), (0, 1));
        assert_eq!(inner_lightcone_velocity(3).unwrap(), (1, 3));
        assert_eq!(inner_lightcone_velocity(4).unwrap(), (1, 2));
        assert!(inner_lightcone_velocity(1).is_err());
    }

    #[test]
    fn observables_traceless_and_normalized() {
        for n in [2usize, 3, 4, 9] {
            let a = random_observable(n, n as u64);
            assert!(a.trace().norm() < 1e-12);
            let hs = a.dagger().matmul(&a).trace();
            assert!((hs - C64::new(1.0, 0.0)).norm() < 1e-12);
            assert!(a.max_abs_diff(&a.dagger()) < 1e-12);
        }
    }

    #[test]
    fn l2_correlator_refuses_generic_gate() {
        let u = haar_unitary(4, 12);
        assert!(L2Correlator::new(&u, 2, 1e-8).is_err());
    }

    fn d3_l2_gate(seed: u64) -> CMatrix {
        let d = 3;
        let theta = theta_l2_families(d, L2Family::PSquared).unwrap();
        let mut p = CliffordFamilyParams::core(d, theta);
        p.v1 = crate::gates::generalized_hadamard(d);
        p.v2 = crate::gates::generalized_hadamard(d);
        let _ = seed;
        build_clifford_gate(&p).unwrap()
    }

    #[test]
    fn l2_correlator_matches_oracle_on_grid() {
        let d = 3;
        let u = d3_l2_gate(0);
        let ring = RingSpec::new(d, 3).unwrap();
        let corr = L2Correlator::new(&u, d, 1e-8).unwrap();
        let a = random_observable(d, 5);
        let b = random_observable(d, 6);
        let mut nonzero = 0usize;
        for j2 in [0i64, 1] {
            for t2 in 0..=4u32 {
                for i2 in -(t2 as i64) + j2..=t2 as i64 + j2 {
                    let exact = correlator_exact(
                        ring,
                        &u,
                        &Observable::single(a.clone(), (i2.rem_euclid(6)) as usize),
                        &Observable::single(b.clone(), j2 as usize),
                        t2 as usize,
                    );
                    let closed = corr.eval(&a, &b, i2, j2, t2);
                    assert!(
                        (closed - exact).norm() < 1e-8,
                        "i2={i2} j2={j2} t2={t2}: closed {closed} vs oracle {exact}"
                    );
                    if exact.norm() > 1e-6 {
                        nonzero += 1;
                    }
                }
            }
        }
        assert!(nonzero >= 4, "grid should contain nontrivial correlations, got {nonzero}");
    }
}
