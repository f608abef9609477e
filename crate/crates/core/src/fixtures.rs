//! Frozen reference values bundled at compile time from `fixtures/`,
//! regenerated with the `oracle` binary.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use serde::Deserialize;

/// Per-dimension reference values: adaptive-quadrature ground-state integrals
/// (full line and truncated at r = 200) and the dense finite-volume ν.
#[derive(Clone, Copy, Debug, Deserialize)]
pub struct OracleDim {
    pub dim: usize,
    pub nu_dense: f64,
    pub grad_w_sq: f64,
    pub grad_w_sq_r200: f64,
    pub f_w_w: f64,
    pub f_w_w_r200: f64,
    pub big_f_w: f64,
    pub big_f_w_r200: f64,
    pub energy_w: f64,
    pub energy_w_r200: f64,
}

#[derive(Clone, Debug, Deserialize)]
pub struct OracleFixture {
    pub dims: Vec<OracleDim>,
}

const ORACLE_JSON: &str = include_str!("../fixtures/oracle.json");

/// Synthetic λ(t) = (1 − t)⁴ trace (columns `t,lambda`), for rate fitting.
pub const SYNTHETIC_QUARTIC_CSV: &str = include_str!("../fixtures/synthetic_quartic.csv");

pub fn oracle() -> &'static OracleFixture {
    static CACHE: OnceLock<OracleFixture> = OnceLock::new();
    CACHE.get_or_init(|| serde_json::from_str(ORACLE_JSON).expect("bundled oracle.json parses"))
}

pub fn oracle_dim(dim: usize) -> Result<&'static OracleDim> {
    oracle()
        .dims
        .iter()
        .find(|d| d.dim == dim)
        .ok_or(Error::UnsupportedDimension(dim))
}
