//! Regenerates the frozen reference fixtures.
//!
//! Two independent methods feed the test suite: adaptive Simpson quadrature
//! on the closed-form ground-state profile (full line via a 1/r tail
//! substitution, plus the same integrals truncated at the grid radius), and
//! the dense finite-volume eigenvalue of the linearized operator.  Values are
//! written together with every generation parameter so the fixtures can be
//! reproduced bit-for-bit.
//!
//! Usage: `cargo run --release -p blowup-lab --bin oracle [-- out_dir]`
//! (default out_dir: crates/core/fixtures).

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;

use blowup_lab::bubble::{ground_state, ground_state_dr};
use blowup_lab::grid::sphere_area;
use blowup_lab::nonlin;
use blowup_lab::spectral::dense_ground;

const SIMPSON_TOL: f64 = 1e-13;
const TRUNC_RADIUS: f64 = 200.0;
const DENSE_RMAX: f64 = 200.0;
const DENSE_H: f64 = 1e-3;
const QUARTIC_STEP: f64 = 0.005;
const QUARTIC_T_END: f64 = 0.9;

fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        left + right + err / 15.0
    } else {
        simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
}

fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(&f, a, fa, b, fb, m, fm, whole, tol, 48)
}

/// Tail ∫_R^∞ |W′|² r^{N−1} dr under r = 1/t: the integrand collapses to
/// (c^N/N²)·t^{N−3}/(1+ct²)^N with c = N(N−2), smooth at t = 0.
fn grad_tail(dim: usize) -> f64 {
    let nd = dim as f64;
    let c = nd * (nd - 2.0);
    adaptive_simpson(
        |t| c.powi(dim as i32) / (nd * nd) * t.powi(dim as i32 - 3)
            / (1.0 + c * t * t).powi(dim as i32),
        0.0,
        1.0 / TRUNC_RADIUS,
        SIMPSON_TOL,
    )
}

/// Tail ∫_R^∞ f(W)W r^{N−1} dr = ∫ W^{2N/(N−2)} r^{N−1} dr under r = 1/t:
/// c^N·t^{N−1}/(1+ct²)^N.
fn fww_tail(dim: usize) -> f64 {
    let nd = dim as f64;
    let c = nd * (nd - 2.0);
    adaptive_simpson(
        |t| c.powi(dim as i32) * t.powi(dim as i32 - 1) / (1.0 + c * t * t).powi(dim as i32),
        0.0,
        1.0 / TRUNC_RADIUS,
        SIMPSON_TOL,
    )
}

fn main() {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("crates/core/fixtures"));
    fs::create_dir_all(&out_dir).expect("create fixture directory");

    let mut dims = Vec::new();
    for dim in 3..=5usize {
        let area = sphere_area(dim);
        let pw = |r: f64| r.powi(dim as i32 - 1);
        let grad = |r: f64| ground_state_dr(dim, r).powi(2) * pw(r);
        let fww = |r: f64| {
            let w = ground_state(dim, r);
            nonlin::f(dim, w) * w * pw(r)
        };
        let bigf = |r: f64| nonlin::big_f(dim, ground_state(dim, r)) * pw(r);

        let nd = dim as f64;
        let grad_trunc = area * adaptive_simpson(grad, 0.0, TRUNC_RADIUS, SIMPSON_TOL);
        let fww_trunc = area * adaptive_simpson(fww, 0.0, TRUNC_RADIUS, SIMPSON_TOL);
        let bigf_trunc = area * adaptive_simpson(bigf, 0.0, TRUNC_RADIUS, SIMPSON_TOL);
        let grad_full = grad_trunc + area * grad_tail(dim);
        let fww_full = fww_trunc + area * fww_tail(dim);
        // F(W) = ((N−2)/2N)·f(W)W pointwise for W ≥ 0
        let bigf_full = bigf_trunc + area * (nd - 2.0) / (2.0 * nd) * fww_tail(dim);

        // stationarity self-checks before anything is frozen
        assert!(
            (grad_full - fww_full).abs() <= 1e-9 * grad_full,
            "dim {dim}: Pohozaev violated by quadrature: {grad_full} vs {fww_full}"
        );
        assert!(
            (bigf_full - (nd - 2.0) / (2.0 * nd) * fww_full).abs() <= 1e-9 * bigf_full,
            "dim {dim}: potential/kinetic ratio off: {bigf_full}"
        );

        let (nu, _) = dense_ground(dim, DENSE_RMAX, DENSE_H).expect("dense eigensolve");

        dims.push(serde_json::json!({
            "dim": dim,
            "nu_dense": nu,
            "grad_w_sq": grad_full,
            "grad_w_sq_r200": grad_trunc,
            "f_w_w": fww_full,
            "f_w_w_r200": fww_trunc,
            "big_f_w": bigf_full,
            "big_f_w_r200": bigf_trunc,
            "energy_w": 0.5 * grad_full - bigf_full,
            "energy_w_r200": 0.5 * grad_trunc - bigf_trunc,
        }));
        eprintln!("dim {dim}: nu = {nu:.12}, ∫|∇W|² = {grad_full:.12}");
    }

    let doc = serde_json::json!({
        "generated_by": "oracle",
        "parameters": {
            "adaptive_simpson_tol": SIMPSON_TOL,
            "truncation_radius": TRUNC_RADIUS,
            "tail_substitution": "r = 1/t on (truncation_radius, inf)",
            "dense_rmax": DENSE_RMAX,
            "dense_h": DENSE_H,
        },
        "dims": dims,
    });
    let json_path = out_dir.join("oracle.json");
    fs::write(&json_path, serde_json::to_string_pretty(&doc).unwrap()).expect("write oracle.json");
    eprintln!("wrote {}", json_path.display());

    // synthetic λ(t) = (1 − t)⁴ trace for rate-fitting consumers
    let csv_path = out_dir.join("synthetic_quartic.csv");
    let mut f = fs::File::create(&csv_path).expect("create synthetic_quartic.csv");
    write!(f, "t,lambda\r\n").unwrap();
    let steps = (QUARTIC_T_END / QUARTIC_STEP).round() as usize;
    for k in 0..=steps {
        let t = k as f64 * QUARTIC_STEP;
        write!(f, "{},{}\r\n", t, (1.0 - t).powi(4)).unwrap();
    }
    eprintln!("wrote {}", csv_path.display());
}
