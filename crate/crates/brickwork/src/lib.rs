//! Brickwork-circuit toolkit for the hierarchy of dual-unitary-like gates.
//!
//! The crate constructs two-qudit gates from parametrized families
//! ([`gates`]), decides which level of the hierarchy they satisfy
//! ([`conditions`]), evaluates exact correlators through channel and
//! transfer-matrix formulas ([`channels`], [`quench`]), and cross-checks
//! everything against dense Floquet evolution on small rings ([`oracle`]).

pub mod conditions;
pub mod channels;
pub mod gates;
pub mod oracle;
pub mod quench;
pub mod search;
pub mod tensor;

pub use num_complex::Complex64 as C64;

#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Default max-entry tolerance for algebraic identity checks.
pub const TOL: f64 = 1e-10;
