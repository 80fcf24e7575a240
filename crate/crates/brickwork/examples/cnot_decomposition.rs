//! Rebuild CNOT from the exhaustive two-qubit parametrization
//! u = e^{i phase} (v1 x v2) exp{i sum_a J_a sigma_a sigma_a} (v3 x v4)
//! and compare it entrywise, global phase included, against the canonical
//! controlled-NOT matrix.
//!
//! Run: cargo run --release --example cnot_decomposition

use brickwork::gates::{build_named, build_qubit_gate, cnot_qubit_params};

fn main() {
    let params = cnot_qubit_params();
    let rebuilt = build_qubit_gate(&params).unwrap();
    let canonical = build_named("cnot", 2).unwrap();
    println!("couplings J = ({}, {}, {}) = (0, 0, pi/4)", params.jx, params.jy, params.jz);
    println!("global phase  = {} = -pi/4", params.phase);
    println!();
    println!("rebuilt gate (re parts):");
    for r in 0..4 {
        let row: Vec<String> = (0..4).map(|c| format!("{:+.4}", rebuilt[(r, c)].re)).collect();
        println!("  {}", row.join(" "));
    }
    let diff = rebuilt.max_abs_diff(&canonical);
    println!();
    println!("max |rebuilt - CNOT| = {diff:.3e}");
    assert!(diff < 1e-12, "decomposition should reproduce CNOT to 1e-12");
    println!("entrywise match within 1e-12: ok");
}
