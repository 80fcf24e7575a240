//! Hierarchy-level checks: unitarity, dual unitarity (level 1), the two-gate
//! level-2 identities, the three-gate level-3 identity, and the theta-table
//! versions of each for the Clifford qudit families.

use crate::gates::{tau_pq, CliffordFamilyParams, ThetaTable};
use crate::tensor::{
    bullet, fold, kron, mirror_gate, reshuffle_dual, rotate_gate, CMatrix, Tensor,
};
use crate::{C64, TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Both,
}

#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub level_checked: u8,
    pub side: Side,
    pub residual: f64,
    pub passed: bool,
    pub tol: f64,
}

impl ConditionReport {
    fn new(level: u8, side: Side, residual: f64, tol: f64) -> Self {
        ConditionReport { level_checked: level, side, residual, passed: residual <= tol, tol }
    }

    pub fn record(&self) -> String {
        format!(
            "level={} side={:?} residual={:.3e} tol={:.1e} passed={}",
            self.level_checked, self.side, self.residual, self.tol, self.passed
        )
    }
}

fn local_dim(g: &CMatrix) -> usize {
    let d = (g.rows as f64).sqrt().round() as usize;
    assert_eq!(d * d, g.rows, "gate must be D^2 x D^2");
    assert_eq!(g.rows, g.cols, "gate must be square");
    d
}

pub fn check_unitarity(g: &CMatrix) -> ConditionReport {
    let n = g.rows;
    let i = CMatrix::identity(n);
    let r1 = g.matmul(&g.dagger()).max_abs_diff(&i);
    let r2 = g.dagger().matmul(g).max_abs_diff(&i);
    ConditionReport::new(0, Side::Both, r1.max(r2), TOL)
}

pub fn check_dual_unitarity(g: &CMatrix) -> ConditionReport {
    let d = local_dim(g);
    let gt = reshuffle_dual(g, d);
    let i = CMatrix::identity(d * d);
    let r1 = gt.matmul(&gt.dagger()).max_abs_diff(&i);
    let r2 = gt.dagger().matmul(&gt).max_abs_diff(&i);
    ConditionReport::new(1, Side::Both, r1.max(r2), TOL)
}

/// Two-gate level-2 identities on the space-time dual gate:
///   right: (I⊗ũ†)(ũ†ũ⊗I)(I⊗ũ) = I⊗ũ†ũ
///   left:  (I⊗ũ)(ũũ†⊗I)(I⊗ũ†) = I⊗ũũ†
pub fn check_l2(g: &CMatrix, side: Side) -> ConditionReport {
    let d = local_dim(g);
    let gt = reshuffle_dual(g, d);
    let id = CMatrix::identity(d);

    let right = || {
        let p = gt.dagger().matmul(&gt);
        let lhs = kron(&id, &gt.dagger())
            .matmul(&kron(&p, &id))
            .matmul(&kron(&id, &gt));
        lhs.max_abs_diff(&kron(&id, &p))
    };
    let left = || {
        let p = gt.matmul(&gt.dagger());
        let lhs = kron(&id, &gt)
            .matmul(&kron(&p, &id))
            .matmul(&kron(&id, &gt.dagger()));
        lhs.max_abs_diff(&kron(&id, &p))
    };
    let residual = match side {
        Side::Right => right(),
        Side::Left => left(),
        Side::Both => right().max(left()),
    };
    ConditionReport::new(2, side, residual, TOL)
}

/// Level-2 identities for the 180-degree rotated gate S uᵀ S.
pub fn check_l2_rotated(g: &CMatrix, side: Side) -> ConditionReport {
    let d = local_dim(g);
    check_l2(&rotate_gate(g, d), side)
}

/// Folded gate as a 4-leg tensor [tl, tr, bl, br], each leg of dimension D²
/// combining (ket, bra) of one site.
pub fn folded_site_tensor(u: &CMatrix, d: usize) -> Tensor {
    let w = fold(u);
    // kron(u, u*) index order: (i_l, i_r, j_l, j_r) x (k_l, k_r, m_l, m_r);
    // regroup per site so that tl = (i_l, j_l) etc.
    let t = Tensor::from_matrix(&w, &[d, d, d, d, d, d, d, d]);
    let p = t.permute(&[0, 2, 1, 3, 4, 6, 5, 7]);
    Tensor::from_vec(p.data, &[d * d, d * d, d * d, d * d])
}

/// The App.-D two-gate difference tensor with bullets on the right flank
/// (vanishes exactly on level-2 gates); legs ordered [low.tl, up.tl, low.bl].
fn l2_difference_tensor(u: &CMatrix, d: usize) -> Tensor {
    let w = folded_site_tensor(u, d);
    let o = bullet(d);
    // term 1: lower gate's tr feeds upper gate's bl; caps on up.tr, up.br, low.br
    let low = w.cap(3, &o); // [tl, tr, bl]
    let up = w.cap(1, &o).cap(2, &o); // [tl, br]
    let term1 = Tensor::contract(&low, &[1], &up, &[1]); // [low.tl, low.bl, up.tl]
    let term1 = term1.permute(&[0, 2, 1]); // [low.tl, up.tl, low.bl]

    // term 2: single gate with caps on tr and br, tensored with a bullet on up.tl
    let single = w.cap(1, &o).cap(2, &o); // [tl, bl] after capping tr, br
    let ot = Tensor::from_vec(o.clone(), &[d * d]);
    let term2 = Tensor::contract(&single, &[], &ot, &[]); // [tl, bl, bullet]
    let term2 = term2.permute(&[0, 2, 1]); // [low.tl, up.tl(bullet), low.bl]
    term1.sub(&term2)
}

/// Same two-gate chain with bullets on the left flank (the mirror condition);
/// legs ordered [up.tr, up.br, low.br].
fn l2_difference_tensor_left(u: &CMatrix, d: usize) -> Tensor {
    let w = folded_site_tensor(u, d);
    let o = bullet(d);
    let low = w.cap(2, &o).cap(0, &o); // caps bl then tl, leaving [tr, br]
    let up = w.cap(0, &o); // cap tl, leaving [tr, bl, br]
    let term1 = Tensor::contract(&low, &[0], &up, &[1]); // [low.br, up.tr, up.br]
    let term1 = term1.permute(&[1, 2, 0]);

    let single = w.cap(2, &o).cap(0, &o); // [tr, br]
    let ot = Tensor::from_vec(o, &[d * d]);
    // single gate's tr/br fill the upper boundary slots, bullet fills low.br
    let term2 = Tensor::contract(&single, &[], &ot, &[]); // [up.tr, up.br, low.br(bullet)]
    term1.sub(&term2)
}

/// Squared Frobenius norms (Tr A†A, Tr B†B) of the App.-D difference tensors;
/// the two values agree for every unitary, and both vanish iff the gate is
/// level-2.
pub fn check_trace_identity(g: &CMatrix) -> (f64, f64) {
    let d = local_dim(g);
    let a = l2_difference_tensor(g, d);
    let b = l2_difference_tensor_left(g, d);
    let f = |t: &Tensor| t.data.iter().map(|z| z.norm_sqr()).sum::<f64>();
    (f(&a), f(&b))
}

/// Three-gate level-3 staircase identity. The depicted orientation (bullets on
/// the upper-right flank) is `Side::Right`; the mirrored gate gives the left
/// version.
pub fn check_l3(g: &CMatrix, side: Side) -> ConditionReport {
    let d = local_dim(g);
    let right = |u: &CMatrix| -> f64 {
        let w = folded_site_tensor(u, d);
        let o = bullet(d);
        let ot = Tensor::from_vec(o.clone(), &[d * d]);

        // LHS staircase: top gate C, middle A, bottom B; each tr capped,
        // C.br -> A.tl, A.br -> B.tl, B.br capped.
        let c = w.cap(1, &o); // [tl, bl, br]
        let a = w.cap(1, &o); // [tl, bl, br]
        let b = w.cap(1, &o).cap(2, &o); // [tl, bl]
        let ca = Tensor::contract(&c, &[2], &a, &[0]); // [c.tl, c.bl, a.bl, a.br]
        let lhs = Tensor::contract(&ca, &[3], &b, &[0]); // [c.tl, c.bl, a.bl, b.bl]

        // RHS: two-gate chain with A.br capped, times a bullet on the b.bl slot
        let a2 = w.cap(1, &o).cap(2, &o); // caps tr then br, leaving [tl, bl]
        let ca2 = Tensor::contract(&c, &[2], &a2, &[0]); // [c.tl, c.bl, a.bl]
        let rhs = Tensor::contract(&ca2, &[], &ot, &[]); // [c.tl, c.bl, a.bl, b.bl]

        lhs.sub(&rhs).max_abs()
    };
    let residual = match side {
        Side::Right => right(g),
        Side::Left => right(&mirror_gate(g, d)),
        Side::Both => right(g).max(right(&mirror_gate(g, d))),
    };
    ConditionReport::new(3, side, residual, TOL)
}

/// Smallest passing hierarchy level per side (level 1 is side-symmetric).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LevelPair {
    pub left: Option<u8>,
    pub right: Option<u8>,
}

pub fn classify_level(g: &CMatrix) -> LevelPair {
    if check_dual_unitarity(g).passed {
        return LevelPair { left: Some(1), right: Some(1) };
    }
    let one_side = |side: Side| {
        if check_l2(g, side).passed {
            Some(2)
        } else if check_l3(g, side).passed {
            Some(3)
        } else {
            None
        }
    };
    LevelPair { left: one_side(Side::Left), right: one_side(Side::Right) }
}

// ---------------------------------------------------------------------------
// theta-table conditions for the Clifford families

/// Autocorrelation of the theta table: (1/D²) Σ_{p,q} θ*_{p,q} θ_{p+k,q+l}.
pub(crate) fn theta_autocorrelation(t: &ThetaTable, k: usize, l: usize) -> C64 {
    let d = t.d;
    let mut s = C64::new(0.0, 0.0);
    for p in 0..d {
        for q in 0..d {
            s += t.get(p, q).conj() * t.get(p + k, q + l);
        }
    }
    s / (d * d) as f64
}

/// Dual-unitarity condition on the table: all shifted autocorrelations with
/// (k,l) ≠ (0,0) must vanish. Returns the worst |sum|/D².
pub fn check_theta_du(t: &ThetaTable) -> f64 {
    let d = t.d;
    let mut worst: f64 = 0.0;
    for k in 0..d {
        for l in 0..d {
            if (k, l) != (0, 0) {
                worst = worst.max(theta_autocorrelation(t, k, l).norm());
            }
        }
    }
    worst
}

/// (1/D²) Σ_d θ*_{p,q} θ_{p+s,q+t} τ†_{p,q} M τ_{p,q} with M = v* τ_{k,−l} vᵀ
/// (the v₁ form; the v₂ form passes negated p arguments).
fn theta_dressed_sum(t: &ThetaTable, s: usize, tt: usize, m: &CMatrix, negate_p: bool) -> CMatrix {
    let d = t.d;
    let mut acc = CMatrix::zeros(d, d);
    for p in 0..d {
        for q in 0..d {
            let coeff = t.get(p, q).conj() * t.get(p + s, q + tt);
            let sp = if negate_p { -(p as i64) } else { p as i64 };
            let tau = tau_pq(d, sp, q as i64);
            acc = acc.add(&tau.dagger().matmul(m).matmul(&tau).scale(coeff));
        }
    }
    acc.scale(C64::new(1.0 / (d * d) as f64, 0.0))
}

/// Worst violation of the theta-level two-gate condition: for every
/// (k,l) ≠ (0,0) and (s,t) ≠ (0,0) the product of the table autocorrelation
/// and the v-dressed sum must vanish (for both v₁ and v₂).
pub fn check_theta_l2(p: &CliffordFamilyParams) -> ConditionReport {
    let d = p.d;
    let mut worst: f64 = 0.0;
    for k in 0..d {
        for l in 0..d {
            if (k, l) == (0, 0) {
                continue;
            }
            let f1 = theta_autocorrelation(&p.theta, k, l);
            if f1.norm() <= 1e-14 {
                continue;
            }
            let m1 = p.v1.conj().matmul(&tau_pq(d, k as i64, -(l as i64))).matmul(&p.v1.transpose());
            let m2 = p.v2.conj().matmul(&tau_pq(d, -(k as i64), -(l as i64))).matmul(&p.v2.transpose());
            for s in 0..d {
                for t in 0..d {
                    if (s, t) == (0, 0) {
                        continue;
                    }
                    let g1 = theta_dressed_sum(&p.theta, s, t, &m1, false);
                    let g2 = theta_dressed_sum(&p.theta, s, t, &m2, true);
                    worst = worst.max(f1.norm() * g1.max_abs().max(g2.max_abs()));
                }
            }
        }
    }
    ConditionReport::new(2, Side::Both, worst, TOL)
}

/// Worst violation of the theta-level three-gate condition (the triple-product
/// form with v₁ dressings): for every (s_a,t_a) ≠ (0,0) and all (s_c,t_c),
/// (s_e,t_e), the product of the autocorrelation and the two dressed sums
/// must vanish.
pub fn check_theta_l3(p: &CliffordFamilyParams) -> ConditionReport {
    let d = p.d;
    // dressed sums for every (shift, tau-argument) pair
    let dressed = |s: usize, t: usize, k: usize, l: usize| -> CMatrix {
        let m = p.v1.conj().matmul(&tau_pq(d, k as i64, -(l as i64))).matmul(&p.v1.transpose());
        theta_dressed_sum(&p.theta, s, t, &m, false)
    };
    let mut worst: f64 = 0.0;
    for sa in 0..d {
        for ta in 0..d {
            if (sa, ta) == (0, 0) {
                continue;
            }
            let f1 = theta_autocorrelation(&p.theta, sa, ta);
            if f1.norm() <= 1e-14 {
                continue;
            }
            for sc in 0..d {
                for tc in 0..d {
                    let g1 = dressed(sc, tc, sa, ta);
                    if g1.max_abs() <= 1e-14 {
                        continue;
                    }
                    for se in 0..d {
                        for te in 0..d {
                            let g2 = dressed(se, te, sc, tc);
                            let prod = g1.matmul(&g2).max_abs();
                            worst = worst.max(f1.norm() * prod);
                        }
                    }
                }
            }
        }
    }
    ConditionReport::new(3, Side::Both, worst, TOL)
}

/// The qubit level-2 dressing constraint |√2 sin r sin θ| = 1. Returns the
/// absolute deviation.
pub fn qubit_l2_constraint_residual(r: f64, theta: f64) -> f64 {
    ((2.0_f64.sqrt() * r.sin() * theta.sin()).abs() - 1.0).abs()
}

pub fn check_qubit_l2_constraint(r: f64, theta: f64) -> bool {
    qubit_l2_constraint_residual(r, theta) <= 1e-8
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::*;
    use crate::tensor::{haar_unitary, swap_gate};
    use std::f64::consts::PI;

    fn clifford(d: usize, t: ThetaTable) -> CMatrix {
        build_clifford_gate(&CliffordFamilyParams::core(d, t)).unwrap()
    }

    #[test]
    fn unitarity_reports() {
        assert!(check_unitarity(&CMatrix::identity(4)).passed);
        assert!(check_unitarity(&build_named("cnot", 2).unwrap()).passed);
        let bad = CMatrix::diag(&[
            C64::new(1.0, 0.0),
            C64::new(0.5, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
        ]);
        assert!(!check_unitarity(&bad).passed);
    }

    #[test]
    fn du_examples() {
        assert!(check_dual_unitarity(&swap_gate(2)).passed);
        assert!(check_dual_unitarity(&swap_gate(3)).passed);
        assert!(!check_dual_unitarity(&CMatrix::identity(4)).passed);
        let g = clifford(3, theta_quadratic(3, 1.0, 1.0, -1.0).unwrap());
        assert!(check_dual_unitarity(&g).passed);
    }

    #[test]
    fn l2_examples() {
        assert!(check_l2(&CMatrix::identity(4), Side::Both).passed);
        assert!(check_l2(&build_named("cnot", 2).unwrap(), Side::Both).passed);
        // any dual-unitary gate passes level 2
        assert!(check_l2(&swap_gate(3), Side::Both).passed);
        let g = clifford(3, theta_quadratic(3, 1.0, 1.0, -1.0).unwrap());
        assert!(check_l2(&g, Side::Both).passed);
        // a Haar-random gate generically fails
        assert!(!check_l2(&haar_unitary(4, 11), Side::Both).passed);
    }

    #[test]
    fn l2_rotated_follows_l2() {
        for g in [
            CMatrix::identity(4),
            build_named("cnot", 2).unwrap(),
            swap_gate(2),
            clifford(6, theta_l2_families(6, L2Family::DpqHalf).unwrap()),
        ] {
            if check_l2(&g, Side::Both).passed {
                assert!(check_l2_rotated(&g, Side::Both).passed);
            }
        }
        assert!(!check_l2_rotated(&haar_unitary(4, 3), Side::Both).passed);
    }

    #[test]
    fn l3_examples() {
        let cz = build_named("cz", 2).unwrap();
        assert!(check_l3(&cz, Side::Both).passed);
        assert!(!check_l2(&cz, Side::Both).passed);

        // J = (0,0,Jz) with v_i in the x-y plane of the Bloch sphere
        let v = |phi: f64| {
            pauli_x().scale(C64::new(phi.cos(), 0.0)).add(&pauli_y().scale(C64::new(phi.sin(), 0.0)))
        };
        let mut p = QubitGateParams::new(0.0, 0.0, 0.37);
        p.v1 = SiteGate::Matrix(v(0.3));
        p.v2 = SiteGate::Matrix(v(1.9));
        let g = build_qubit_gate(&p).unwrap();
        assert!(check_l3(&g, Side::Both).passed);

        // any level-2 gate passes level 3
        assert!(check_l3(&build_named("cnot", 2).unwrap(), Side::Both).passed);
        assert!(check_l3(&CMatrix::identity(4), Side::Both).passed);
        assert!(!check_l3(&haar_unitary(4, 5), Side::Both).passed);
    }

    #[test]
    fn classification_table() {
        let cl = |g: &CMatrix| classify_level(g);
        assert_eq!(cl(&swap_gate(2)), LevelPair { left: Some(1), right: Some(1) });
        assert_eq!(cl(&build_named("cnot", 2).unwrap()), LevelPair { left: Some(2), right: Some(2) });
        assert_eq!(cl(&build_named("cz", 2).unwrap()), LevelPair { left: Some(3), right: Some(3) });
        assert_eq!(cl(&haar_unitary(4, 17)), LevelPair { left: None, right: None });
    }

    #[test]
    fn theta_du_examples() {
        let t = theta_quadratic(3, 1.0, 1.0, -1.0).unwrap();
        assert!(check_theta_du(&t) < 1e-12);
        assert!(check_theta_du(&ThetaTable::all_ones(3)) > 0.5);
        let t6 = theta_l2_families(6, L2Family::DpqHalf).unwrap();
        assert!(check_theta_du(&t6) > 1e-3);
    }

    #[test]
    fn theta_l2_examples() {
        let t6 = theta_l2_families(6, L2Family::DpqHalf).unwrap();
        let p = CliffordFamilyParams::core(6, t6.clone());
        assert!(check_theta_l2(&p).passed);

        // a DU table passes through the vanishing first factor
        let p3 = CliffordFamilyParams::core(3, theta_quadratic(3, 1.0, 1.0, -1.0).unwrap());
        assert!(check_theta_l2(&p3).passed);

        // random v1 generically breaks it
        let mut pr = CliffordFamilyParams::core(6, t6);
        pr.v1 = haar_unitary(6, 23);
        assert!(!check_theta_l2(&pr).passed);
    }

    #[test]
    fn theta_gate_consistency_l2() {
        // gate-level and theta-level checks agree for the Clifford families
        let cases: Vec<(usize, ThetaTable)> = vec![
            (6, theta_l2_families(6, L2Family::DpqHalf).unwrap()),
            (3, theta_l2_families(3, L2Family::PSquared).unwrap()),
            (4, theta_l2_families(4, L2Family::PSquared).unwrap()),
            (3, theta_quadratic(3, 1.0, 1.0, -1.0).unwrap()),
            (3, theta_quadratic(3, 1.0, 0.0, 1.0).unwrap()),
        ];
        for (d, t) in cases {
            let p = CliffordFamilyParams::core(d, t);
            let g = build_clifford_gate(&p).unwrap();
            let gate_pass = check_l2(&g, Side::Both).passed;
            let theta_pass = check_theta_l2(&p).passed;
            assert_eq!(gate_pass, theta_pass, "mismatch at D={d}");
        }
    }

    #[test]
    fn theta_l3_examples() {
        let p4 = CliffordFamilyParams::core(4, theta_l3_families(4).unwrap());
        assert!(check_theta_l3(&p4).passed);
        // gate-level agreement
        let g4 = build_clifford_gate(&p4).unwrap();
        assert!(check_l3(&g4, Side::Both).passed);
        assert!(!check_l2(&g4, Side::Both).passed);

        // anything passing the L2 theta condition passes L3 as well
        let p6 = CliffordFamilyParams::core(6, theta_l2_families(6, L2Family::DpqHalf).unwrap());
        assert!(check_theta_l3(&p6).passed);
        // all-ones table gives the identity gate, which is level 2 hence level 3
        let pid = CliffordFamilyParams::core(3, ThetaTable::all_ones(3));
        assert!(check_theta_l3(&pid).passed);
    }

    #[test]
    fn qubit_l2_constraint_cases() {
        assert!(check_qubit_l2_constraint(PI / 2.0, PI / 4.0));
        assert!(check_qubit_l2_constraint(PI / 4.0, PI / 2.0));
        assert!(!check_qubit_l2_constraint(PI / 2.0, PI / 2.0));
    }

    #[test]
    fn trace_identity_haar() {
        for d in [2usize, 3] {
            for seed in 0..10 {
                let u = haar_unitary(d * d, 1000 + seed);
                let (a, b) = check_trace_identity(&u);
                assert!((a - b).abs() <= 1e-9 * a.max(b).max(1.0), "D={d} seed={seed}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn trace_identity_vanishes_on_l2() {
        for g in [CMatrix::identity(4), build_named("cnot", 2).unwrap()] {
            let (a, b) = check_trace_identity(&g);
            assert!(a < 1e-12 && b < 1e-12);
        }
    }

    #[test]
    fn diagrammatic_matches_algebraic_l2() {
        // the App.-D difference tensor vanishes exactly when the algebraic
        // two-gate identities hold
        for (seed, g) in [
            (0, build_named("cnot", 2).unwrap()),
            (1, haar_unitary(4, 41)),
            (2, swap_gate(2)),
            (3, build_named("cz", 2).unwrap()),
        ] {
            let (a, b) = check_trace_identity(&g);
            let alg = check_l2(&g, Side::Both).passed;
            assert_eq!(a.max(b) < 1e-12, alg, "case {seed}");
        }
    }

    #[test]
    fn l2bar_gates_have_singular_dual() {
        // gates in level 2 but not level 1 must have a singular dual
        for g in [
            CMatrix::identity(4),
            build_named("cnot", 2).unwrap(),
            clifford(6, theta_l2_families(6, L2Family::DpqHalf).unwrap()),
        ] {
            let d = (g.rows as f64).sqrt() as usize;
            if check_l2(&g, Side::Both).passed && !check_dual_unitarity(&g).passed {
                let gt = reshuffle_dual(&g, d);
                let evs = gt.dagger().matmul(&gt).spectrum();
                let smallest = evs.last().unwrap().norm();
                assert!(smallest < 1e-10, "dual should be singular, got {smallest}");
            }
        }
    }

    #[test]
    fn hierarchy_monotonicity_on_samples() {
        let gates = vec![
            swap_gate(2),
            clifford(3, theta_quadratic(3, 1.0, 1.0, -1.0).unwrap()),
            build_named("cnot", 2).unwrap(),
            build_named("cz", 2).unwrap(),
            clifford(4, theta_l3_families(4).unwrap()),
            haar_unitary(4, 99),
        ];
        for g in &gates {
            let l1 = check_dual_unitarity(g).passed;
            let l2 = check_l2(g, Side::Both).passed;
            let l3 = check_l3(g, Side::Both).passed;
            if l1 {
                assert!(l2);
            }
            if l2 {
                assert!(l3);
            }
        }
    }
}
