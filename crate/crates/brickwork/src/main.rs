//! Command-line surface: gate verification, correlator grids, quench series,
//! channel spectra, and gate search.
//!
//! Exit codes: 0 success, 1 check failed (gate not at the requested level,
//! state not solvable, search not converged), 2 usage or parse error,
//! 3 resource cap exceeded.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use brickwork::channels::{
    build_q, build_r, build_single_site_channels, correlator_2site_time, ergodicity,
    random_observable, Channel, CorrelatorGrid, Ergodicity, GridPoint, L2Correlator,
};
use brickwork::conditions::{
    check_dual_unitarity, check_l2, check_l3, check_unitarity, classify_level, Side,
};
use brickwork::gates::{
    build_clifford_gate, build_named, build_qubit_gate, qubit_l2_params, theta_l2_families,
    theta_l3_families, theta_quadratic, CliffordFamilyParams, L2Family, QubitGateParams, SiteGate,
};
use brickwork::oracle::{
    correlator_exact, correlator_lightcone, quench_exact, state_from_cell_density, Observable,
    RingSpec,
};
use brickwork::quench::{
    bell_state, check_1pt_solvable, cnot_mixed_state, infinite_temperature_state,
    one_point_correlator, PurifiedMPS,
};
use brickwork::search::{minimize, Constraint, CostSpec, Parametrization};
use brickwork::tensor::{vec_site_grouped, CMatrix};
use brickwork::{C64, Error};

const EXIT_OK: i32 = 0;
const EXIT_CHECK_FAILED: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_RESOURCE: i32 = 3;

/// Error carrying the process exit code it should produce.
struct CliError {
    code: i32,
    msg: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, msg: msg.into() }
    }
    fn check(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_CHECK_FAILED, msg: msg.into() }
    }
    fn resource(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_RESOURCE, msg: msg.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        let code = match &e {
            Error::Parse(_) | Error::Io(_) => EXIT_USAGE,
            Error::InvalidParam(m) if m.contains("exceeds") || m.contains("cap") => EXIT_RESOURCE,
            Error::InvalidParam(_) => EXIT_CHECK_FAILED,
        };
        CliError { code, msg }
    }
}

#[derive(Parser)]
#[command(
    name = "brickwork",
    version,
    about = "Hierarchy-of-dual-unitarity toolkit: verify gates, evaluate exact correlators \
             and quenches, inspect channel spectra, and search for gates"
)]
struct Cli {
    /// Worker threads (accepted for config compatibility; evaluation is
    /// single-threaded at desk scale)
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify a gate's hierarchy level, or check one specific level
    Verify {
        /// Gate: a spec file path, named:NAME[:D], or family:... (see README)
        #[arg(long)]
        gate: String,
        /// Check only this level (2 or 3) instead of classifying
        #[arg(long)]
        level: Option<u8>,
        /// Side of the condition: left, right, both
        #[arg(long, default_value = "both")]
        side: String,
        /// Residual tolerance
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Evaluate a two-point correlator grid and emit CSV (optionally SVG)
    Correlate {
        #[arg(long)]
        gate: String,
        /// Operator support: 1 (single site), 2 (gate-aligned pair), 3 (triple)
        #[arg(long, default_value_t = 1)]
        support: usize,
        /// channel, oracle, lightcone, or both (channel + oracle cross-check)
        #[arg(long, default_value = "channel")]
        mode: String,
        /// Site of the t=0 operator, in half-site units (2 sites per gate)
        #[arg(long, default_value_t = 0)]
        i: i64,
        /// Restrict the t>0 operator to this single site (default: scan the cone)
        #[arg(long)]
        j: Option<i64>,
        /// Maximum time in Floquet periods
        #[arg(long, default_value_t = 5)]
        tmax: u32,
        /// Seed for the random normalized traceless Hermitian observables
        #[arg(long)]
        seed: u64,
        /// Ring size (number of gates per layer) for oracle evaluation
        #[arg(long = "L")]
        l: Option<usize>,
        /// Output directory (default: CSV to stdout)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also render an SVG plot next to the CSV
        #[arg(long)]
        svg: bool,
        /// Residual tolerance for the level-2 precheck in channel mode
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// One-point observable series after a quench from a solvable state
    Quench {
        #[arg(long)]
        gate: String,
        /// Initial state: bell, cnot-mixed, infinite:D, or an MPS file path
        #[arg(long)]
        state: String,
        /// Seed for the random cell observable
        #[arg(long)]
        seed: u64,
        /// Maximum time in Floquet periods
        #[arg(long, default_value_t = 8)]
        tmax: u32,
        /// Ring size for the dense fallback when the state is not solvable
        #[arg(long = "L")]
        l: Option<usize>,
        /// Fall back to dense ring evolution if the solvability check fails
        #[arg(long)]
        oracle_fallback: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: bool,
        /// Solvability tolerance
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Eigenvalues and ergodicity verdict of one of the gate's channels
    Spectrum {
        #[arg(long)]
        gate: String,
        /// eps-l, eps-r, m-l, m-r, q (2-site), or r (3-site)
        #[arg(long)]
        channel: String,
    },
    /// Nelder-Mead search for a gate minimizing a level condition
    Search {
        /// Search spec file (see README for the format)
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        /// Cost evaluations allowed per restart
        #[arg(long, default_value_t = 4000)]
        budget: usize,
        /// Directory receiving the result record and, when found, the gate file
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            e.code
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.cmd {
        Cmd::Verify { gate, level, side, tol } => cmd_verify(&gate, level, &side, tol),
        Cmd::Correlate { gate, support, mode, i, j, tmax, seed, l, out, svg, tol } => {
            cmd_correlate(&gate, support, &mode, i, j, tmax, seed, l, out.as_deref(), svg, tol)
        }
        Cmd::Quench { gate, state, seed, tmax, l, oracle_fallback, out, svg, tol } => {
            cmd_quench(&gate, &state, seed, tmax, l, oracle_fallback, out.as_deref(), svg, tol)
        }
        Cmd::Spectrum { gate, channel } => cmd_spectrum(&gate, &channel),
        Cmd::Search { spec, seed, restarts, budget, out } => {
            cmd_search(&spec, seed, restarts, budget, out.as_deref())
        }
    }
}

// ---------------------------------------------------------------------------
// gate specs

struct GateSpec {
    d: usize,
    u: CMatrix,
}

fn parse_gate(arg: &str) -> Result<GateSpec, CliError> {
    if let Some(rest) = arg.strip_prefix("named:") {
        let mut it = rest.split(':');
        let name = it.next().unwrap_or("");
        let d: usize = match it.next() {
            Some(s) => s.parse().map_err(|_| CliError::usage(format!("bad dimension {s:?}")))?,
            None => 2,
        };
        let u = build_named(name, d).map_err(|e| CliError::usage(e.to_string()))?;
        return Ok(GateSpec { d, u });
    }
    if let Some(rest) = arg.strip_prefix("family:") {
        return parse_family(rest);
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| CliError::usage(format!("cannot read gate file {arg:?}: {e}")))?;
    parse_gate_file(&text).map_err(|e| CliError::usage(format!("{arg}: {e}")))
}

fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split([',', ' '])
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("bad number {t:?}")))
        .collect()
}

fn parse_family(rest: &str) -> Result<GateSpec, CliError> {
    let parts: Vec<&str> = rest.split(':').collect();
    let usage = |m: String| CliError::usage(m);
    match parts.as_slice() {
        ["qubit-l2", args] => {
            let v = parse_floats(args).map_err(usage)?;
            if v.len() != 4 {
                return Err(CliError::usage("family:qubit-l2 takes r1,phi1,r2,phi2"));
            }
            let p = qubit_l2_params(v[0], v[1], v[2], v[3]).map_err(|e| usage(e.to_string()))?;
            Ok(GateSpec { d: 2, u: build_qubit_gate(&p).map_err(|e| usage(e.to_string()))? })
        }
        ["qubit", args] => {
            let v = parse_floats(args).map_err(usage)?;
            if v.len() != 3 {
                return Err(CliError::usage("family:qubit takes jx,jy,jz"));
            }
            let p = QubitGateParams::new(v[0], v[1], v[2]);
            Ok(GateSpec { d: 2, u: build_qubit_gate(&p).map_err(|e| usage(e.to_string()))? })
        }
        ["clifford-l2", d, which] => {
            let d: usize = d.parse().map_err(|_| CliError::usage("bad dimension"))?;
            let fam = match *which {
                "dpq-half" => L2Family::DpqHalf,
                "p-squared" => L2Family::PSquared,
                other => return Err(CliError::usage(format!("unknown family member {other:?}"))),
            };
            let theta = theta_l2_families(d, fam).map_err(|e| usage(e.to_string()))?;
            let p = CliffordFamilyParams::core(d, theta);
            Ok(GateSpec { d, u: build_clifford_gate(&p).map_err(|e| usage(e.to_string()))? })
        }
        ["clifford-l3", d] => {
            let d: usize = d.parse().map_err(|_| CliError::usage("bad dimension"))?;
            let theta = theta_l3_families(d).map_err(|e| usage(e.to_string()))?;
            let p = CliffordFamilyParams::core(d, theta);
            Ok(GateSpec { d, u: build_clifford_gate(&p).map_err(|e| usage(e.to_string()))? })
        }
        ["clifford-quadratic", d, args] => {
            let d: usize = d.parse().map_err(|_| CliError::usage("bad dimension"))?;
            let v = parse_floats(args).map_err(usage)?;
            if v.len() != 3 {
                return Err(CliError::usage("family:clifford-quadratic takes lambda,mu,nu"));
            }
            let theta = theta_quadratic(d, v[0], v[1], v[2]).map_err(|e| usage(e.to_string()))?;
            let p = CliffordFamilyParams::core(d, theta);
            Ok(GateSpec { d, u: build_clifford_gate(&p).map_err(|e| usage(e.to_string()))? })
        }
        _ => Err(CliError::usage(format!(
            "unknown gate family {rest:?}; expected qubit-l2:..., qubit:..., \
             clifford-l2:D:dpq-half|p-squared, clifford-l3:D, or clifford-quadratic:D:l,m,n"
        ))),
    }
}

/// Gate spec file: `#` comments, `key value...` lines. Keys: `dim`, `family`
/// (matrix | qubit-param | clifford-theta | named), then the family block.
fn parse_gate_file(text: &str) -> Result<GateSpec, String> {
    let mut dim: Option<usize> = None;
    let mut family: Option<String> = None;
    let mut kv: Vec<(String, String)> = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        match k {
            "dim" => dim = Some(v.trim().parse().map_err(|_| format!("bad dim {v:?}"))?),
            "family" => family = Some(v.trim().to_string()),
            _ => kv.push((k.to_string(), v.trim().to_string())),
        }
    }
    let d = dim.ok_or("missing `dim` line")?;
    let family = family.ok_or("missing `family` line")?;
    let get = |key: &str| kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    match family.as_str() {
        "matrix" => {
            let rows: Vec<&str> =
                kv.iter().filter(|(k, _)| k == "row").map(|(_, v)| v.as_str()).collect();
            let n = d * d;
            if rows.len() != n {
                return Err(format!("matrix family needs {n} `row` lines, got {}", rows.len()));
            }
            let mut u = CMatrix::zeros(n, n);
            for (r, row) in rows.iter().enumerate() {
                let vals = parse_floats(row)?;
                if vals.len() != 2 * n {
                    return Err(format!("row {r} needs {} re/im values", 2 * n));
                }
                for c in 0..n {
                    u[(r, c)] = C64::new(vals[2 * c], vals[2 * c + 1]);
                }
            }
            Ok(GateSpec { d, u })
        }
        "named" => {
            let name = get("name").ok_or("named family needs a `name` line")?;
            Ok(GateSpec { d, u: build_named(name, d).map_err(|e| e.to_string())? })
        }
        "qubit-param" => {
            if d != 2 {
                return Err("qubit-param family requires dim 2".into());
            }
            let j = parse_floats(get("j").ok_or("qubit-param needs a `j jx jy jz` line")?)?;
            if j.len() != 3 {
                return Err("`j` needs three couplings".into());
            }
            let mut p = QubitGateParams::new(j[0], j[1], j[2]);
            for (slot, tgt) in
                [("v1", 0usize), ("v2", 1), ("v3", 2), ("v4", 3)]
            {
                if let Some(v) = get(slot) {
                    let site = parse_site_gate(v, d)?;
                    match tgt {
                        0 => p.v1 = site,
                        1 => p.v2 = site,
                        2 => p.v3 = site,
                        _ => p.v4 = site,
                    }
                }
            }
            if let Some(ph) = get("phase") {
                p.phase = ph.parse().map_err(|_| format!("bad phase {ph:?}"))?;
            }
            Ok(GateSpec { d, u: build_qubit_gate(&p).map_err(|e| e.to_string())? })
        }
        "clifford-theta" => {
            let th = get("theta").ok_or("clifford-theta needs a `theta ...` line")?;
            let theta = parse_theta(th, d)?;
            let mut p = CliffordFamilyParams::core(d, theta);
            for slot in ["v1", "v2", "v3", "v4"] {
                if let Some(v) = get(slot) {
                    let m = match parse_site_gate(v, d)? {
                        SiteGate::Matrix(m) => m,
                        SiteGate::Params { r, theta, phi } => {
                            brickwork::gates::single_qubit_u(r, theta, phi)
                        }
                    };
                    match slot {
                        "v1" => p.v1 = m,
                        "v2" => p.v2 = m,
                        "v3" => p.v3 = m,
                        _ => p.v4 = m,
                    }
                }
            }
            Ok(GateSpec { d, u: build_clifford_gate(&p).map_err(|e| e.to_string())? })
        }
        other => Err(format!("unknown family {other:?}")),
    }
}

/// Site gate value: `identity`, `params r theta phi` (qubits), or
/// `matrix re im re im ...` (row-major, D² complex entries).
fn parse_site_gate(v: &str, d: usize) -> Result<SiteGate, String> {
    let (kind, rest) = v.split_once(char::is_whitespace).unwrap_or((v, ""));
    match kind {
        "identity" => Ok(SiteGate::Matrix(CMatrix::identity(d))),
        "params" => {
            let a = parse_floats(rest)?;
            if a.len() != 3 {
                return Err("`params` needs r theta phi".into());
            }
            Ok(SiteGate::Params { r: a[0], theta: a[1], phi: a[2] })
        }
        "matrix" => {
            let a = parse_floats(rest)?;
            if a.len() != 2 * d * d {
                return Err(format!("`matrix` needs {} re/im values", 2 * d * d));
            }
            Ok(SiteGate::Matrix(CMatrix::from_fn(d, d, |r, c| {
                C64::new(a[2 * (r * d + c)], a[2 * (r * d + c) + 1])
            })))
        }
        other => Err(format!("unknown site-gate form {other:?}")),
    }
}

fn parse_theta(v: &str, d: usize) -> Result<brickwork::gates::ThetaTable, String> {
    let parts: Vec<&str> = v.split_whitespace().collect();
    match parts.as_slice() {
        ["dpq-half"] => theta_l2_families(d, L2Family::DpqHalf).map_err(|e| e.to_string()),
        ["p-squared"] => theta_l2_families(d, L2Family::PSquared).map_err(|e| e.to_string()),
        ["l3"] => theta_l3_families(d).map_err(|e| e.to_string()),
        ["quadratic", l, m, n] => {
            let p = |s: &str| s.parse::<f64>().map_err(|_| format!("bad number {s:?}"));
            theta_quadratic(d, p(l)?, p(m)?, p(n)?).map_err(|e| e.to_string())
        }
        _ => Err(format!("unknown theta form {v:?}")),
    }
}

/// Serialize a gate as a matrix-family spec file (the export format of
/// `search`; re-importing reproduces the gate entrywise).
fn gate_to_matrix_file(d: usize, u: &CMatrix) -> String {
    let n = d * d;
    let mut s = String::new();
    let _ = writeln!(s, "dim {d}");
    let _ = writeln!(s, "family matrix");
    for r in 0..n {
        let row: Vec<String> = (0..n)
            .flat_map(|c| [format!("{:.17e}", u[(r, c)].re), format!("{:.17e}", u[(r, c)].im)])
            .collect();
        let _ = writeln!(s, "row {}", row.join(" "));
    }
    s
}

// ---------------------------------------------------------------------------
// verify

fn parse_side(s: &str) -> Result<Side, CliError> {
    match s {
        "left" => Ok(Side::Left),
        "right" => Ok(Side::Right),
        "both" => Ok(Side::Both),
        other => Err(CliError::usage(format!("unknown side {other:?}"))),
    }
}

fn cmd_verify(gate: &str, level: Option<u8>, side: &str, tol: f64) -> Result<i32, CliError> {
    let gs = parse_gate(gate)?;
    let side = parse_side(side)?;
    let unit = check_unitarity(&gs.u);
    println!("unitarity {}", unit.record());
    if !unit.passed {
        return Ok(EXIT_CHECK_FAILED);
    }
    if let Some(k) = level {
        let rep = match k {
            1 => check_dual_unitarity(&gs.u),
            2 => check_l2(&gs.u, side),
            3 => check_l3(&gs.u, side),
            other => return Err(CliError::usage(format!("level must be 1..3, got {other}"))),
        };
        println!("check {}", rep.record());
        let passed = rep.residual <= tol;
        println!("verdict level {k} {}", if passed { "passed" } else { "failed" });
        return Ok(if passed { EXIT_OK } else { EXIT_CHECK_FAILED });
    }
    println!("du {}", check_dual_unitarity(&gs.u).record());
    for s in [Side::Left, Side::Right] {
        println!("l2 {}", check_l2(&gs.u, s).record());
        println!("l3 {}", check_l3(&gs.u, s).record());
    }
    let pair = classify_level(&gs.u);
    let show = |v: Option<u8>| v.map_or("none".to_string(), |k| k.to_string());
    match (pair.left, pair.right) {
        (Some(l), Some(r)) if l == r => println!("level {l} (both sides)"),
        (l, r) => println!("level left={} right={}", show(l), show(r)),
    }
    Ok(if pair.left.is_some() || pair.right.is_some() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

// ---------------------------------------------------------------------------
// correlate

#[allow(clippy::too_many_arguments)]
fn cmd_correlate(
    gate: &str,
    support: usize,
    mode: &str,
    i: i64,
    j: Option<i64>,
    tmax: u32,
    seed: u64,
    l: Option<usize>,
    out: Option<&Path>,
    svg: bool,
    tol: f64,
) -> Result<i32, CliError> {
    let gs = parse_gate(gate)?;
    let d = gs.d;
    if !matches!(mode, "channel" | "oracle" | "lightcone" | "both") {
        return Err(CliError::usage(format!("unknown mode {mode:?}")));
    }
    let ring = |l: Option<usize>| -> Result<RingSpec, CliError> {
        let l = l.ok_or_else(|| CliError::usage("oracle mode needs --L"))?;
        RingSpec::new(d, l).map_err(|e| CliError::resource(e.to_string()))
    };
    let mut grid = CorrelatorGrid::default();
    match support {
        1 => {
            let a = random_observable(d, seed);
            let b = random_observable(d, seed + 1);
            let sites: Vec<i64> = match j {
                Some(j) => vec![j],
                None => (i - 2 * tmax as i64..=i + 2 * tmax as i64).collect(),
            };
            let want_channel = matches!(mode, "channel" | "both");
            let want_oracle = matches!(mode, "oracle" | "both");
            let corr = if want_channel {
                Some(
                    L2Correlator::new(&gs.u, d, tol)
                        .map_err(|e| CliError::check(e.to_string()))?,
                )
            } else {
                None
            };
            let rs = if want_oracle { Some(ring(l)?) } else { None };
            for t2 in 0..=2 * tmax {
                for &s in &sites {
                    if let Some(c) = &corr {
                        grid.points.push(GridPoint {
                            i2: s,
                            j2: i,
                            t2,
                            value: c.eval(&a, &b, s, i, t2),
                            method: "channel".into(),
                        });
                    }
                    if let Some(r) = rs {
                        let n = 2 * r.l as i64;
                        let value = correlator_exact(
                            r,
                            &gs.u,
                            &Observable::single(a.clone(), s.rem_euclid(n) as usize),
                            &Observable::single(b.clone(), i.rem_euclid(n) as usize),
                            t2 as usize,
                        );
                        grid.points.push(GridPoint {
                            i2: s,
                            j2: i,
                            t2,
                            value,
                            method: "oracle".into(),
                        });
                    }
                    if mode == "lightcone" {
                        let value = correlator_lightcone(
                            d,
                            &gs.u,
                            &Observable::single(a.clone(), s.rem_euclid(1 << 20) as usize),
                            &Observable::single(b.clone(), i.rem_euclid(1 << 20) as usize),
                            t2 as usize,
                        )
                        .map_err(|e| CliError::resource(e.to_string()))?;
                        grid.points.push(GridPoint {
                            i2: s,
                            j2: i,
                            t2,
                            value,
                            method: "lightcone".into(),
                        });
                    }
                }
            }
        }
        2 => {
            if matches!(mode, "channel" | "both") && i.rem_euclid(2) != 0 {
                return Err(CliError::usage(
                    "the 2-site time-axis channel is defined for gate-aligned operators; \
                     --i must be even",
                ));
            }
            let a = random_observable(d * d, seed);
            let b = random_observable(d * d, seed + 1);
            let rep = check_l2(&gs.u, Side::Both);
            if matches!(mode, "channel" | "both") && rep.residual > tol {
                return Err(CliError::check(format!(
                    "gate is not second-level (residual {:.3e}); use oracle mode",
                    rep.residual
                )));
            }
            let rs = if matches!(mode, "oracle" | "both") { Some(ring(l)?) } else { None };
            for t2 in 0..=2 * tmax {
                if matches!(mode, "channel" | "both") {
                    grid.points.push(GridPoint {
                        i2: i,
                        j2: i,
                        t2,
                        value: correlator_2site_time(&gs.u, d, &a, &b, t2),
                        method: "channel".into(),
                    });
                }
                if let Some(r) = rs {
                    let site = i.rem_euclid(2 * r.l as i64) as usize;
                    let value = correlator_exact(
                        r,
                        &gs.u,
                        &Observable::two_site(a.clone(), site),
                        &Observable::two_site(b.clone(), site),
                        t2 as usize,
                    );
                    grid.points.push(GridPoint { i2: i, j2: i, t2, value, method: "oracle".into() });
                }
            }
        }
        3 => {
            if matches!(mode, "channel" | "both") && i.rem_euclid(2) != 1 {
                return Err(CliError::usage(
                    "the 3-site channel straddles a brick: its first site is the right slot \
                     of an even brick; --i must be odd",
                ));
            }
            let f3 = d * d * d;
            if f3 * f3 > 1 << 13 {
                return Err(CliError::resource(format!(
                    "3-site channel dimension {} exceeds the dense cap",
                    f3 * f3
                )));
            }
            let a = random_observable(f3, seed);
            let b = random_observable(f3, seed + 1);
            let rs = if matches!(mode, "oracle" | "both") { Some(ring(l)?) } else { None };
            if matches!(mode, "channel" | "both") {
                let r = build_r(&gs.u, d);
                let mut v = vec_site_grouped(&b, d, 3);
                for t in 0..=tmax {
                    grid.points.push(GridPoint {
                        i2: i,
                        j2: i,
                        t2: 2 * t,
                        value: brickwork::channels::trace_pair(&a, d, 3, &v),
                        method: "channel".into(),
                    });
                    v = r.m.apply(&v);
                }
            }
            if let Some(r) = rs {
                let site = i.rem_euclid(2 * r.l as i64) as usize;
                for t in 0..=tmax {
                    let value = correlator_exact(
                        r,
                        &gs.u,
                        &Observable { op: a.clone(), site, support: 3 },
                        &Observable { op: b.clone(), site, support: 3 },
                        2 * t as usize,
                    );
                    grid.points.push(GridPoint {
                        i2: i,
                        j2: i,
                        t2: 2 * t,
                        value,
                        method: "oracle".into(),
                    });
                }
            }
        }
        other => return Err(CliError::usage(format!("support must be 1..3, got {other}"))),
    }
    if mode == "both" {
        let mut worst = 0.0f64;
        for p in grid.points.iter().filter(|p| p.method == "channel") {
            if let Some(q) = grid
                .points
                .iter()
                .find(|q| q.method == "oracle" && (q.i2, q.j2, q.t2) == (p.i2, p.j2, p.t2))
            {
                worst = worst.max((p.value - q.value).norm());
            }
        }
        println!("max_discrepancy {worst:.3e}");
    }
    emit_grid(&grid, out, svg, "correlator")?;
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// quench

#[allow(clippy::too_many_arguments)]
fn cmd_quench(
    gate: &str,
    state: &str,
    seed: u64,
    tmax: u32,
    l: Option<usize>,
    oracle_fallback: bool,
    out: Option<&Path>,
    svg: bool,
    tol: f64,
) -> Result<i32, CliError> {
    let gs = parse_gate(gate)?;
    let d = gs.d;
    let mps = parse_state(state, d)?;
    if mps.d != d {
        return Err(CliError::usage(format!(
            "state local dimension {} does not match gate dimension {d}",
            mps.d
        )));
    }
    let obs = random_observable(d * d, seed);
    let rep = check_1pt_solvable(&mps, &gs.u, tol).map_err(CliError::from)?;
    println!("solvability residual={:.3e} passed={}", rep.residual, rep.passed);
    let mut series: Vec<C64> = Vec::new();
    let method;
    if rep.passed {
        method = "analytic";
        for h in 0..=2 * tmax {
            series.push(one_point_correlator(&mps, &gs.u, &obs, h, tol).map_err(CliError::from)?);
        }
    } else if oracle_fallback {
        method = "oracle";
        let l = l.ok_or_else(|| CliError::usage("--oracle-fallback needs --L"))?;
        let ring = RingSpec::new(d, l).map_err(|e| CliError::resource(e.to_string()))?;
        let cell = mps.cell_density().map_err(CliError::from)?;
        let rho = state_from_cell_density(ring, &cell);
        let all = quench_exact(
            ring,
            &gs.u,
            &rho,
            &[Observable::two_site(obs.clone(), 1)],
            2 * tmax as usize,
        );
        series = all[0].clone();
    } else {
        return Err(CliError::check(
            "state is not one-point solvable for this gate; pass --oracle-fallback --L <l> \
             for dense evolution on a small ring",
        ));
    }
    let mut csv = String::from("t_num,t_den,re,im\n");
    for (h, v) in series.iter().enumerate() {
        let (tn, td) = if h % 2 == 0 { (h / 2, 1) } else { (h, 2) };
        let _ = writeln!(csv, "{tn},{td},{:.16e},{:.16e}", v.re, v.im);
    }
    println!("method {method}");
    write_output(&csv, out, "quench.csv")?;
    if svg {
        let pts: Vec<(f64, f64)> =
            series.iter().enumerate().map(|(h, v)| (h as f64 / 2.0, v.norm())).collect();
        write_output(&svg_decay(&pts, "t", "|<O(t)>|"), out, "quench.svg")?;
    }
    Ok(EXIT_OK)
}

fn parse_state(state: &str, d: usize) -> Result<PurifiedMPS, CliError> {
    match state {
        "bell" => Ok(bell_state()),
        "cnot-mixed" => Ok(cnot_mixed_state()),
        _ => {
            if let Some(ds) = state.strip_prefix("infinite:") {
                let dd: usize =
                    ds.parse().map_err(|_| CliError::usage(format!("bad dimension {ds:?}")))?;
                return Ok(infinite_temperature_state(dd));
            }
            if state == "infinite" {
                return Ok(infinite_temperature_state(d));
            }
            let text = std::fs::read_to_string(state)
                .map_err(|e| CliError::usage(format!("cannot read state file {state:?}: {e}")))?;
            PurifiedMPS::from_text(&text).map_err(|e| CliError::usage(e.to_string()))
        }
    }
}

// ---------------------------------------------------------------------------
// spectrum

fn cmd_spectrum(gate: &str, channel: &str) -> Result<i32, CliError> {
    let gs = parse_gate(gate)?;
    let d = gs.d;
    let ch: Channel = match channel {
        "eps-l" | "eps-r" | "m-l" | "m-r" => {
            let (el, er, ml, mr) = build_single_site_channels(&gs.u, d);
            match channel {
                "eps-l" => el,
                "eps-r" => er,
                "m-l" => ml,
                _ => mr,
            }
        }
        "q" => build_q(&gs.u, d),
        "r" => {
            let f3 = d * d * d;
            if f3 * f3 > 1 << 13 {
                return Err(CliError::resource(format!(
                    "3-site channel dimension {} exceeds the dense cap",
                    f3 * f3
                )));
            }
            build_r(&gs.u, d)
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown channel {other:?}; expected eps-l, eps-r, m-l, m-r, q, r"
            )))
        }
    };
    let mut eigs = ch.spectrum();
    eigs.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
    let one = C64::new(1.0, 0.0);
    let id_idx = eigs
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| (*a - one).norm().partial_cmp(&(*b - one).norm()).unwrap())
        .map(|(k, _)| k)
        .unwrap();
    for (k, z) in eigs.iter().enumerate() {
        let tag = if k == id_idx { " identity-sector" } else { "" };
        println!("eig {:.12e} {:.12e} modulus {:.12e}{tag}", z.re, z.im, z.norm());
    }
    match ergodicity(&ch) {
        Ergodicity::Ergodic { lambda } => {
            println!("verdict ergodic lambda {:.12e} {:.12e}", lambda.re, lambda.im)
        }
        Ergodicity::NonErgodic { lambda } => {
            println!("verdict non-ergodic lambda {:.12e} {:.12e}", lambda.re, lambda.im)
        }
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// search

/// Search spec file: `level 2|3`, `side left|right|both`, one `param` line
/// (`param qubit <jx|free> <jy|free> <jz|free>`, `param clifford-theta D
/// <theta form>`, or `param raw D`), and zero or more `constraint` lines
/// (`exclude-dual-unitary`, `all-couplings-nonvanishing`).
fn parse_search_spec(text: &str) -> Result<CostSpec, String> {
    let mut level: Option<u8> = None;
    let mut side = Side::Both;
    let mut param: Option<Parametrization> = None;
    let mut constraints = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["level", k] => level = Some(k.parse().map_err(|_| format!("bad level {k:?}"))?),
            ["side", s] => {
                side = match *s {
                    "left" => Side::Left,
                    "right" => Side::Right,
                    "both" => Side::Both,
                    other => return Err(format!("unknown side {other:?}")),
                }
            }
            ["param", "qubit", jx, jy, jz] => {
                let slot = |s: &str| -> Result<Option<f64>, String> {
                    if s == "free" {
                        Ok(None)
                    } else {
                        s.parse().map(Some).map_err(|_| format!("bad coupling {s:?}"))
                    }
                };
                param = Some(Parametrization::QubitParams {
                    fixed_j: [slot(jx)?, slot(jy)?, slot(jz)?],
                });
            }
            ["param", "clifford-theta", d, rest @ ..] => {
                let d: usize = d.parse().map_err(|_| format!("bad dimension {d:?}"))?;
                let theta = parse_theta(&rest.join(" "), d)?;
                param = Some(Parametrization::CliffordTheta { theta });
            }
            ["param", "raw", d] => {
                let d: usize = d.parse().map_err(|_| format!("bad dimension {d:?}"))?;
                param = Some(Parametrization::RawUnitary { d });
            }
            ["constraint", "exclude-dual-unitary"] => {
                constraints.push(Constraint::ExcludeDualUnitary)
            }
            ["constraint", "all-couplings-nonvanishing"] => {
                constraints.push(Constraint::AllCouplingsNonvanishing)
            }
            _ => return Err(format!("unrecognized spec line {line:?}")),
        }
    }
    Ok(CostSpec {
        level: level.ok_or("missing `level` line")?,
        side,
        param: param.ok_or("missing `param` line")?,
        constraints,
    })
}

fn cmd_search(
    spec_path: &Path,
    seed: u64,
    restarts: usize,
    budget: usize,
    out: Option<&Path>,
) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| CliError::usage(format!("cannot read spec {spec_path:?}: {e}")))?;
    let spec = parse_search_spec(&text).map_err(CliError::usage)?;
    let label = spec_path.file_name().and_then(|s| s.to_str()).unwrap_or("spec");
    let start = std::time::Instant::now();
    let result = minimize(&spec, seed, restarts, budget);
    let wall = start.elapsed().as_secs_f64();
    let mut record = result.record(label, seed);
    let _ = writeln!(record, "wall_time_s {wall:.3}");
    print!("{record}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::usage(e.to_string()))?;
        std::fs::write(dir.join("search_record.txt"), &record)
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    if result.found {
        let g = spec.build(&result.best).map_err(CliError::from)?;
        let d = (g.rows as f64).sqrt().round() as usize;
        let file = gate_to_matrix_file(d, &g);
        if let Some(dir) = out {
            let path = dir.join("found_gate.txt");
            std::fs::write(&path, &file).map_err(|e| CliError::usage(e.to_string()))?;
            // round-trip: re-import and re-verify the exported gate
            let re = parse_gate(path.to_str().unwrap())?;
            let rep = match spec.level {
                2 => check_l2(&re.u, spec.side),
                _ => check_l3(&re.u, spec.side),
            };
            println!("reverify {}", rep.record());
            if rep.residual > 1e-6 {
                return Err(CliError::check("re-imported gate failed re-verification"));
            }
        }
        Ok(EXIT_OK)
    } else {
        println!("not found: best cost {:.3e} after {} restarts", result.best_cost, result.restarts_run);
        Ok(EXIT_CHECK_FAILED)
    }
}

// ---------------------------------------------------------------------------
// output helpers

fn write_output(content: &str, out: Option<&Path>, name: &str) -> Result<(), CliError> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::usage(e.to_string()))?;
            std::fs::write(dir.join(name), content).map_err(|e| CliError::usage(e.to_string()))?;
            eprintln!("wrote {}", dir.join(name).display());
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn emit_grid(grid: &CorrelatorGrid, out: Option<&Path>, svg: bool, stem: &str) -> Result<(), CliError> {
    write_output(&grid.to_csv(), out, &format!("{stem}.csv"))?;
    if svg {
        let sites: Vec<i64> = grid.points.iter().map(|p| p.i2).collect();
        let distinct_sites = {
            let mut s = sites.clone();
            s.sort_unstable();
            s.dedup();
            s.len()
        };
        let content = if distinct_sites > 1 {
            svg_heatmap(grid)
        } else {
            let pts: Vec<(f64, f64)> = grid
                .points
                .iter()
                .filter(|p| p.method != "oracle")
                .map(|p| (p.t2 as f64 / 2.0, p.value.norm()))
                .collect();
            svg_decay(&pts, "t", "|C(t)|")
        };
        write_output(&content, out, &format!("{stem}.svg"))?;
    }
    Ok(())
}

/// Log-scale decay plot: |value| against time, as a polyline. Pure
/// post-processing — regenerated from the CSV columns alone.
fn svg_decay(pts: &[(f64, f64)], xlabel: &str, ylabel: &str) -> String {
    let (w, h, m) = (640.0, 420.0, 50.0);
    let floor = 1e-16f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.max(floor).ln()).collect();
    let (x0, x1) = (xs.iter().cloned().fold(f64::MAX, f64::min), xs.iter().cloned().fold(f64::MIN, f64::max));
    let (y0, y1) = (ys.iter().cloned().fold(f64::MAX, f64::min), ys.iter().cloned().fold(f64::MIN, f64::max));
    let sx = |x: f64| m + (x - x0) / (x1 - x0).max(1e-300) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0).max(1e-300) * (h - 2.0 * m);
    let mut path = String::new();
    for (k, (&x, &y)) in xs.iter().zip(&ys).enumerate() {
        let _ = write!(path, "{}{:.2},{:.2} ", if k == 0 { "M" } else { "L" }, sx(x), sy(y));
    }
    format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">
<rect width="{w}" height="{h}" fill="white"/>
<path d="{path}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>
<line x1="{m}" y1="{ym}" x2="{xm}" y2="{ym}" stroke="black"/>
<line x1="{m}" y1="{m}" x2="{m}" y2="{ym}" stroke="black"/>
<text x="{xc}" y="{yl}" text-anchor="middle" font-size="14">{xlabel}</text>
<text x="14" y="{yc}" text-anchor="middle" font-size="14" transform="rotate(-90 14 {yc})">ln {ylabel}</text>
</svg>
"##,
        ym = h - m,
        xm = w - m,
        xc = w / 2.0,
        yl = h - 10.0,
        yc = h / 2.0,
    )
}

/// Space-time heatmap of |value|; one cell per (site, time) grid point.
fn svg_heatmap(grid: &CorrelatorGrid) -> String {
    let pts: Vec<&GridPoint> = grid.points.iter().filter(|p| p.method != "oracle").collect();
    let mut sites: Vec<i64> = pts.iter().map(|p| p.i2).collect();
    sites.sort_unstable();
    sites.dedup();
    let mut times: Vec<u32> = pts.iter().map(|p| p.t2).collect();
    times.sort_unstable();
    times.dedup();
    let peak = pts.iter().map(|p| p.value.norm()).fold(1e-300, f64::max);
    let (cell, m) = (14.0, 50.0);
    let w = m * 2.0 + cell * sites.len() as f64;
    let h = m * 2.0 + cell * times.len() as f64;
    let mut body = String::new();
    for p in &pts {
        let cx = sites.iter().position(|&s| s == p.i2).unwrap();
        let cy = times.iter().position(|&t| t == p.t2).unwrap();
        // log intensity: full color at the peak, white 12 decades down
        let v = ((p.value.norm() / peak).max(1e-12).log10() / 12.0 + 1.0).clamp(0.0, 1.0);
        let shade = (255.0 * (1.0 - v)) as u8;
        let _ = write!(
            body,
            r#"<rect x="{:.1}" y="{:.1}" width="{cell}" height="{cell}" fill="rgb(255,{shade},{shade})"/>"#,
            m + cell * cx as f64,
            h - m - cell * (cy + 1) as f64,
        );
    }
    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">
<rect width="{w}" height="{h}" fill="white"/>
{body}
<text x="{xc}" y="{yl}" text-anchor="middle" font-size="14">site (half-site units)</text>
<text x="14" y="{yc}" text-anchor="middle" font-size="14" transform="rotate(-90 14 {yc})">t</text>
</svg>
"#,
        xc = w / 2.0,
        yl = h - 10.0,
        yc = h / 2.0,
    )
}
