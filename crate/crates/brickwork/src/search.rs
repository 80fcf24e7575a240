//! Numerical discovery of hierarchy gates: derivative-free cost minimization
//! over gate parametrizations, and the derived overlap constraints on the
//! single-site dressings of Clifford-core families.

use crate::conditions::{
    check_dual_unitarity, check_l2, check_l3, theta_autocorrelation, Side,
};
use crate::gates::{
    build_clifford_gate, build_qubit_gate, omega, tau_pq, CliffordFamilyParams,
    QubitGateParams, SiteGate, ThetaTable,
};
use crate::tensor::CMatrix;
use crate::{C64, Error};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// cost specification

/// How the candidate gate is generated from the real coordinate vector.
#[derive(Clone, Debug)]
pub enum Parametrization {
    /// Two-qubit exhaustive form u = (v₁⊗v₂)·exp(iΣJσσ)·(I⊗I); coordinates
    /// are [J_x, J_y, J_z, r₁, θ₁, φ₁, r₂, θ₂, φ₂] with any J optionally
    /// frozen. Global phase and the redundant z-rotations are fixed at 0.
    QubitParams { fixed_j: [Option<f64>; 3] },
    /// Clifford-core family with a frozen θ table; coordinates are the 2·D²
    /// Hermitian generator entries of v₁ and v₂ (v₃ = v₄ = I).
    CliffordTheta { theta: ThetaTable },
    /// Unconstrained u = exp(iH) on D²; coordinates are the D⁴ real entries
    /// of the Hermitian generator H.
    RawUnitary { d: usize },
}

/// Additional penalty terms added to the squared defining-identity residual.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    /// Smooth penalty pushing the candidate away from the dual-unitary
    /// manifold (capped at 1, equal to 1 exactly on it).
    ExcludeDualUnitary,
    /// Smooth penalty keeping every coupling J_a away from nπ/2 (where the
    /// corresponding axis decouples).
    AllCouplingsNonvanishing,
}

#[derive(Clone, Debug)]
pub struct CostSpec {
    pub level: u8,
    pub side: Side,
    pub param: Parametrization,
    pub constraints: Vec<Constraint>,
}

impl CostSpec {
    pub fn qubit_l2() -> Self {
        CostSpec {
            level: 2,
            side: Side::Both,
            param: Parametrization::QubitParams { fixed_j: [None; 3] },
            constraints: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.param {
            Parametrization::QubitParams { fixed_j } => {
                6 + fixed_j.iter().filter(|j| j.is_none()).count()
            }
            Parametrization::CliffordTheta { theta } => 2 * theta.d * theta.d,
            Parametrization::RawUnitary { d } => (d * d) * (d * d),
        }
    }

    /// Build the candidate gate at a coordinate vector.
    pub fn build(&self, x: &[f64]) -> Result<CMatrix, Error> {
        if x.len() != self.dim() {
            return Err(Error::InvalidParam(format!(
                "expected {} coordinates, got {}",
                self.dim(),
                x.len()
            )));
        }
        match &self.param {
            Parametrization::QubitParams { fixed_j } => {
                let mut it = x.iter().copied();
                let mut j = [0.0f64; 3];
                for (a, fix) in j.iter_mut().zip(fixed_j) {
                    *a = fix.unwrap_or_else(|| it.next().unwrap());
                }
                let mut p = QubitGateParams::new(j[0], j[1], j[2]);
                let (r1, t1, f1) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
                let (r2, t2, f2) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
                p.v1 = SiteGate::Params { r: r1, theta: t1, phi: f1 };
                p.v2 = SiteGate::Params { r: r2, theta: t2, phi: f2 };
                build_qubit_gate(&p)
            }
            Parametrization::CliffordTheta { theta } => {
                let d = theta.d;
                let n = d * d;
                let mut p = CliffordFamilyParams::core(d, theta.clone());
                p.v1 = unitary_from_generator(&x[..n], d);
                p.v2 = unitary_from_generator(&x[n..], d);
                build_clifford_gate(&p)
            }
            Parametrization::RawUnitary { d } => Ok(unitary_from_generator(x, d * d)),
        }
    }

    /// The cost at a coordinate vector: squared worst-entry residual of the
    /// level's defining identity plus the active constraint penalties.
    pub fn cost(&self, x: &[f64]) -> f64 {
        let g = match self.build(x) {
            Ok(g) => g,
            Err(_) => return f64::INFINITY,
        };
        self.cost_of_gate(&g, x)
    }

    /// The cost of an already-built gate (coordinates are only consulted by
    /// coupling-constraint penalties; pass &[] when irrelevant).
    pub fn cost_of_gate(&self, g: &CMatrix, x: &[f64]) -> f64 {
        let residual = match self.level {
            2 => check_l2(g, self.side).residual,
            3 => check_l3(g, self.side).residual,
            _ => return f64::INFINITY,
        };
        let mut cost = residual * residual;
        for c in &self.constraints {
            match c {
                Constraint::ExcludeDualUnitary => {
                    let r = check_dual_unitarity(g).residual;
                    // capped smooth barrier: 1 on the DU manifold, ~ε/r² away
                    let eps = 1e-4;
                    cost += eps / (eps + r * r);
                }
                Constraint::AllCouplingsNonvanishing => {
                    if let Parametrization::QubitParams { fixed_j } = &self.param {
                        let mut it = x.iter().copied();
                        for fix in fixed_j {
                            let j = fix.unwrap_or_else(|| it.next().unwrap());
                            // |sin 2J| vanishes exactly at J = nπ/2
                            let m = (2.0 * j).sin().abs();
                            let eps = 1e-3;
                            cost += eps / (eps + m * m);
                        }
                    }
                }
            }
        }
        cost
    }
}

/// exp(iH) for the Hermitian H packed row-major in `x` (diagonal from the
/// diagonal slots, off-diagonal real/imag from the upper/lower slots).
fn unitary_from_generator(x: &[f64], n: usize) -> CMatrix {
    let mut h = CMatrix::zeros(n, n);
    for r in 0..n {
        h[(r, r)] = C64::new(x[r * n + r], 0.0);
        for c in r + 1..n {
            let z = C64::new(x[r * n + c], x[c * n + r]);
            h[(r, c)] = z;
            h[(c, r)] = z.conj();
        }
    }
    // Hermitian exponential through the (general) eigendecomposition
    let (vals, vecs) = h.eig();
    let mut out = CMatrix::zeros(n, n);
    for k in 0..n {
        let phase = C64::from_polar(1.0, vals[k].re);
        // eigenvectors of a Hermitian matrix are orthonormal up to rounding
        let col: Vec<C64> = (0..n).map(|r| vecs[(r, k)]).collect();
        let norm: f64 = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] += phase * col[r] * col[c].conj() / (norm * norm);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// minimization

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub best: Vec<f64>,
    pub best_cost: f64,
    pub found: bool,
    pub evaluations: usize,
    pub restarts_run: usize,
    /// Best cost reached in each restart.
    pub trace: Vec<f64>,
}

impl SearchResult {
    pub fn record(&self, spec_label: &str, seed: u64) -> String {
        let mut s = String::new();
        s.push_str(&format!("spec {spec_label}\n"));
        s.push_str(&format!("seed {seed}\n"));
        s.push_str(&format!("best_cost {:.16e}\n", self.best_cost));
        s.push_str(&format!("found {}\n", self.found));
        s.push_str(&format!("evaluations {}\n", self.evaluations));
        s.push_str(&format!(
            "params {}\n",
            self.best.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(" ")
        ));
        s
    }
}

/// Nelder–Mead simplex minimization of `spec.cost`, restarted from seeded
/// uniform draws in the angle box [−π, π]^dim. Deterministic in
/// (seed, restarts, budget). `budget` is the evaluation allowance per restart.
pub fn minimize(spec: &CostSpec, seed: u64, restarts: usize, budget: usize) -> SearchResult {
    let dim = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut best = vec![0.0; dim];
    let mut best_cost = f64::INFINITY;
    let mut evaluations = 0usize;
    let mut trace = Vec::with_capacity(restarts);
    for _ in 0..restarts {
        let x0: Vec<f64> = (0..dim).map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
        let (x, c, ev) = nelder_mead(|p| spec.cost(p), &x0, 0.5, budget);
        evaluations += ev;
        trace.push(c);
        if c < best_cost {
            best_cost = c;
            best = x;
        }
        if best_cost <= 1e-10 {
            break;
        }
    }
    SearchResult {
        found: best_cost <= 1e-8,
        best,
        best_cost,
        evaluations,
        restarts_run: trace.len(),
        trace,
    }
}

/// Standard Nelder–Mead with adaptive contraction; returns (best point,
/// best cost, evaluations used).
pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    budget: usize,
) -> (Vec<f64>, f64, usize) {
    let n = x0.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut evals = 0usize;
    let eval = |p: &[f64], evals: &mut usize| {
        *evals += 1;
        f(p)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let c0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), c0));
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        let c = eval(&p, &mut evals);
        simplex.push((p, c));
    }
    while evals < budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() < 1e-16 && simplex[0].1.is_finite() {
            break;
        }
        // centroid of all but the worst
        let mut centroid = vec![0.0; n];
        for (p, _) in simplex.iter().take(n) {
            for (ci, pi) in centroid.iter_mut().zip(p) {
                *ci += pi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflect: Vec<f64> =
            centroid.iter().zip(&worst.0).map(|(c, w)| c + alpha * (c - w)).collect();
        let fr = eval(&reflect, &mut evals);
        if fr < simplex[0].1 {
            let expand: Vec<f64> =
                centroid.iter().zip(&worst.0).map(|(c, w)| c + gamma * (c - w)).collect();
            let fe = eval(&expand, &mut evals);
            simplex[n] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflect, fr);
        } else {
            let contract: Vec<f64> = if fr < worst.1 {
                centroid.iter().zip(&reflect).map(|(c, r)| c + rho * (r - c)).collect()
            } else {
                centroid.iter().zip(&worst.0).map(|(c, w)| c + rho * (w - c)).collect()
            };
            let fc = eval(&contract, &mut evals);
            if fc < worst.1.min(fr) {
                simplex[n] = (contract, fc);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0.clone();
                for k in 1..=n {
                    let p: Vec<f64> = best
                        .iter()
                        .zip(&simplex[k].0)
                        .map(|(b, p)| b + sigma * (p - b))
                        .collect();
                    let c = eval(&p, &mut evals);
                    simplex[k] = (p, c);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0.clone(), simplex[0].1, evals)
}

// ---------------------------------------------------------------------------
// derived dressing constraints for Clifford-core families

/// The overlap constraints a dressing v must satisfy for a given θ table:
/// for every (k,l) in `active_kl` (nonvanishing table autocorrelation) the
/// conjugated generator v*τ_{k,−l}vᵀ must have zero overlap with τ_{r,m} for
/// every (r,m) in `forced_rm`.
#[derive(Clone, Debug)]
pub struct VConstraintSet {
    pub d: usize,
    pub active_kl: Vec<(usize, usize)>,
    pub forced_rm: Vec<(usize, usize)>,
}

const EXACT_TOL: f64 = 1e-9;

pub fn derive_v_constraints(theta: &ThetaTable) -> VConstraintSet {
    let d = theta.d;
    let mut active_kl = Vec::new();
    for k in 0..d {
        for l in 0..d {
            if (k, l) != (0, 0) && theta_autocorrelation(theta, k, l).norm() > EXACT_TOL {
                active_kl.push((k, l));
            }
        }
    }
    let mut forced_rm = Vec::new();
    if !active_kl.is_empty() {
        let w = omega(d);
        for r in 0..d {
            for m in 0..d {
                let forced = (0..d * d).skip(1).any(|st| {
                    let (s, t) = (st / d, st % d);
                    let mut sum = C64::new(0.0, 0.0);
                    for p in 0..d {
                        for q in 0..d {
                            let ph = w.powu((p * m % d) as u32) * w.powu((q * r % d) as u32).conj();
                            sum += theta.get(p, q).conj() * theta.get(p + s, q + t) * ph;
                        }
                    }
                    sum.norm() / (d * d) as f64 > EXACT_TOL
                });
                if forced {
                    forced_rm.push((r, m));
                }
            }
        }
    }
    VConstraintSet { d, active_kl, forced_rm }
}

#[derive(Clone, Debug)]
pub struct VReport {
    pub max_violation: f64,
    pub passed: bool,
}

/// Maximum violated overlap |Tr τ†_{r,m} v*τ_{k,−l}vᵀ|/D over the
/// constraint set.
pub fn check_v(v: &CMatrix, cs: &VConstraintSet) -> Result<VReport, Error> {
    if v.rows != cs.d || v.cols != cs.d {
        return Err(Error::InvalidParam("v has wrong dimension".into()));
    }
    if v.unitarity_residual() > 1e-10 {
        return Err(Error::InvalidParam("v is not unitary".into()));
    }
    let d = cs.d;
    let mut worst: f64 = 0.0;
    for &(k, l) in &cs.active_kl {
        let conj = v.conj().matmul(&tau_pq(d, k as i64, -(l as i64))).matmul(&v.transpose());
        for &(r, m) in &cs.forced_rm {
            let tau = tau_pq(d, r as i64, m as i64);
            let mut tr = C64::new(0.0, 0.0);
            for a in 0..d {
                for b in 0..d {
                    tr += tau[(b, a)].conj() * conj[(b, a)];
                }
            }
            worst = worst.max(tr.norm() / d as f64);
        }
    }
    Ok(VReport { max_violation: worst, passed: worst < 1e-8 })
}
