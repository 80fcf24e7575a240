use brickwork::conditions::*;
use brickwork::gates::*;
use brickwork::search::*;
use brickwork::tensor::{haar_unitary, kron, CMatrix};
use std::time::Instant;

fn main() {
    // v-constraint sets
    for d in [6usize] {
        let th = theta_l2_families(d, L2Family::DpqHalf).unwrap();
        let cs = derive_v_constraints(&th);
        println!("dpq-half D={d}: active {:?}", cs.active_kl);
        println!("           forced {:?}", cs.forced_rm);
        let id = CMatrix::identity(d);
        println!("v=I: {:?}", check_v(&id, &cs).unwrap());
        let sx = pauli_x();
        let kappa = haar_unitary(3, 5);
        let v = kron(&sx, &kappa);
        println!("sx⊗κ: {:?}", check_v(&v, &cs).unwrap());
        let hv = haar_unitary(6, 8);
        let rep = check_v(&hv, &cs).unwrap();
        let mut p = CliffordFamilyParams::core(d, th.clone());
        p.v1 = hv.clone();
        p.v2 = hv.clone();
        println!("random v: check_v {:?} theta_l2 {:.3e}", rep, check_theta_l2(&p).residual);
        // agreement sweep
        for (label, v) in [("I", id), ("sx⊗κ", v), ("H", generalized_hadamard(d)), ("rand", hv)] {
            let cv = check_v(&v, &cs).unwrap().passed;
            let mut p = CliffordFamilyParams::core(d, th.clone());
            p.v1 = v.clone();
            p.v2 = v.clone();
            let full = check_theta_l2(&p).residual < 1e-9;
            println!("  {label}: check_v={cv} full={full}");
        }
    }
    let thp = theta_l2_families(5, L2Family::PSquared).unwrap();
    let csp = derive_v_constraints(&thp);
    println!("psq D=5: active {:?} forced {:?}", csp.active_kl, csp.forced_rm);
    println!("H: {:?}", check_v(&generalized_hadamard(5), &csp).unwrap());
    println!("I: {:?}", check_v(&CMatrix::identity(5), &csp).unwrap());
    // DU table: no constraints
    let du = theta_quadratic(5, 0.0, 1.0, 0.0).unwrap();
    let csd = derive_v_constraints(&du);
    println!("DU table: active {:?}", csd.active_kl.len());

    // cost sanity
    let spec = CostSpec::qubit_l2();
    let cnot = build_named("cnot", 2).unwrap();
    println!("cnot cost {:.3e}", spec.cost_of_gate(&cnot, &[]));
    let mut specdu = CostSpec::qubit_l2();
    specdu.constraints.push(Constraint::ExcludeDualUnitary);
    let swap = build_named("swap", 2).unwrap();
    println!("swap cost w/ penalty {:.3e}", specdu.cost_of_gate(&swap, &[]));

    // positive search: J fixed (0,0,π/4)
    let t0 = Instant::now();
    let spec = CostSpec {
        level: 2,
        side: Side::Both,
        param: Parametrization::QubitParams {
            fixed_j: [Some(0.0), Some(0.0), Some(std::f64::consts::FRAC_PI_4)],
        },
        constraints: Vec::new(),
    };
    let res = minimize(&spec, 1, 20, 4000);
    println!(
        "positive search: cost {:.3e} found {} evals {} restarts {} in {:?}",
        res.best_cost, res.found, res.evaluations, res.restarts_run, t0.elapsed()
    );
    if res.found {
        // constraint |√2 sin r sin θ| = 1 on both dressings
        let r1 = qubit_l2_constraint_residual(res.best[0], res.best[1]);
        let r2 = qubit_l2_constraint_residual(res.best[3], res.best[4]);
        println!("constraint residuals {:.3e} {:.3e}", r1, r2);
    }

    // level-3 seeded at CZ + noise
    let spec3 = CostSpec {
        level: 3,
        side: Side::Both,
        param: Parametrization::QubitParams { fixed_j: [None; 3] },
        constraints: Vec::new(),
    };
    // CZ coordinates: J=(0,0,π/4), v1=v2=Rz(−π/4) (r=−π/4 about z ⇒ θ=0)
    let q = std::f64::consts::FRAC_PI_4;
    let mut x = vec![0.0, 0.0, q, -q, 0.0, 0.0, -q, 0.0, 0.0];
    println!("cz coords cost {:.3e}", spec3.cost(&x));
    for (k, xi) in x.iter_mut().enumerate() {
        *xi += 1e-2 * ((k * 37 % 11) as f64 / 11.0 - 0.5);
    }
    println!("cz+noise cost {:.3e}", spec3.cost(&x));
    let t0 = Instant::now();
    let (xb, cb, ev) = nelder_mead(|p| spec3.cost(p), &x, 0.02, 20000);
    println!("reconverged cost {:.3e} evals {ev} in {:?}", cb, t0.elapsed());
    let _ = xb;

    // negative search: all J free, nonvanishing + non-DU
    let t0 = Instant::now();
    let specn = CostSpec {
        level: 2,
        side: Side::Both,
        param: Parametrization::QubitParams { fixed_j: [None; 3] },
        constraints: vec![Constraint::ExcludeDualUnitary, Constraint::AllCouplingsNonvanishing],
    };
    let resn = minimize(&specn, 2, 10, 2000);
    println!(
        "negative search: best {:.3e} found {} in {:?}",
        resn.best_cost, resn.found, t0.elapsed()
    );
}
