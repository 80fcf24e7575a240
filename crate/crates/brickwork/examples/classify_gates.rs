//! Classify a table of standard gates and Clifford-family gates by their
//! hierarchy level (1 = dual-unitary, 2, 3) with the measured residuals.
//!
//! Run: cargo run --release --example classify_gates

use brickwork::conditions::{check_dual_unitarity, check_l2, check_l3, classify_level, Side};
use brickwork::gates::{
    build_clifford_gate, build_named, theta_l2_families, theta_l3_families, theta_quadratic,
    CliffordFamilyParams, L2Family,
};
use brickwork::tensor::CMatrix;

fn main() {
    let clifford = |d: usize, theta| {
        build_clifford_gate(&CliffordFamilyParams::core(d, theta)).unwrap()
    };
    let table: Vec<(&str, CMatrix)> = vec![
        ("swap (D=2)", build_named("swap", 2).unwrap()),
        ("identity (D=2)", build_named("identity", 2).unwrap()),
        ("cnot", build_named("cnot", 2).unwrap()),
        ("cz", build_named("cz", 2).unwrap()),
        ("controlled-tau (D=3)", build_named("controlled-tau", 3).unwrap()),
        (
            "clifford D=3 quadratic (1,1,-1)",
            clifford(3, theta_quadratic(3, 1.0, 1.0, -1.0).unwrap()),
        ),
        (
            "clifford D=6 theta = w^(Dpq/2)",
            clifford(6, theta_l2_families(6, L2Family::DpqHalf).unwrap()),
        ),
        (
            "clifford D=4 theta = w^(p^2+q^2)",
            clifford(4, theta_l3_families(4).unwrap()),
        ),
    ];
    println!(
        "{:<34} {:>6}  {:>9}  {:>9}  {:>9}",
        "gate", "level", "du-res", "l2-res", "l3-res"
    );
    for (name, u) in &table {
        let pair = classify_level(u);
        let level = match (pair.left, pair.right) {
            (Some(l), Some(r)) if l == r => format!("{l}"),
            (l, r) => format!("{l:?}/{r:?}"),
        };
        println!(
            "{:<34} {:>6}  {:>9.2e}  {:>9.2e}  {:>9.2e}",
            name,
            level,
            check_dual_unitarity(u).residual,
            check_l2(u, Side::Both).residual,
            check_l3(u, Side::Both).residual,
        );
    }
}
