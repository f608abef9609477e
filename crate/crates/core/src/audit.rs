//! Differential-inequality audit along modulation traces: the Lyapunov
//! quantity φ̃ = C_I c*λ^{(N−2)/2} − b₁, its tail envelope φ̃_M, the chain
//! |φ̃′_M| ≤ |φ̃′| ≲ c*λ^{(N−4)/2}‖g‖_ℰ ≲ (c*)^{2/(N−2)} φ̃_M^{(3N−10)/(2(N−2))},
//! and the envelope comparisons for φ_M against sup-tail n² and |a±|.

use crate::energy;
use crate::error::{Error, Result};
use crate::modulation::ModulationTrace;

/// Audit record at one trace sample; rates live on the trailing interval.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct AuditRow {
    pub t: f64,
    pub lambda: f64,
    /// φ̃ = C_I c*λ^{(N−2)/2} − b₁.
    pub phi_tilde: f64,
    /// φ = φ̃ + 2((a⁻)² + (a⁺)²).
    pub phi: f64,
    /// φ̃_M(t) = sup over the trace tail of φ̃.
    pub phi_tilde_sup: f64,
    /// Tail sup of φ.
    pub phi_sup: f64,
    /// Tail sup of n².
    pub n_sq_sup: f64,
    /// |φ̃| difference quotient on the trailing interval.
    pub phi_tilde_rate: f64,
    /// Same quotient for φ̃_M — never exceeds phi_tilde_rate.
    pub phi_tilde_sup_rate: f64,
    /// c*λ^{(N−4)/2}‖g‖_ℰ, the middle member of the chain.
    pub drive: f64,
    /// (c*)^{2/(N−2)} φ̃_M^{(3N−10)/(2(N−2))}, the outer member.
    pub cap: f64,
    /// phi_tilde_rate / drive.
    pub rate_ratio: f64,
    /// drive / cap.
    pub drive_ratio: f64,
    /// max(|a⁻|, |a⁺|) / n_sq_sup.
    pub amp_over_nsq: f64,
}

/// Whole-trace audit summary with the per-sample rows attached.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct AuditReport {
    pub dim: usize,
    pub c_i: f64,
    pub cstar: f64,
    /// Largest rate_ratio — the constant the middle bound is observed at.
    pub rate_ratio_max: f64,
    /// Largest drive_ratio — the constant the outer bound is observed at.
    pub drive_ratio_max: f64,
    /// (min, max) of φ_M / sup-tail n² — two-sided comparability span.
    pub phi_over_nsq: (f64, f64),
    /// Fitted amplitude constant: max of amp_over_nsq.
    pub c_a: f64,
    /// Log-log slope of the φ̃ rate against φ̃_M, when measurable.
    pub chain_slope: Option<f64>,
    /// (3N−10)/(2(N−2)), the exponent both ends of the chain share.
    pub target_chain_slope: f64,
    pub rows: Vec<AuditRow>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        num / den
    }
}

/// Evaluate every member of the rate chain along a trace and report the
/// observed constants and exponent. Pure measurement: questionable values
/// surface as non-finite entries, never as errors.
pub fn rate_inequality_audit(trace: &ModulationTrace, c_i: f64) -> Result<AuditReport> {
    let s = &trace.samples;
    if s.len() < 3 {
        return Err(Error::Config(format!(
            "audit needs at least 3 samples, got {}",
            s.len()
        )));
    }
    let cfg = &trace.cfg;
    let nd = cfg.dim as f64;
    let cstar = cfg.cstar;
    let target_chain_slope = (3.0 * nd - 10.0) / (2.0 * (nd - 2.0));

    let phi_tilde: Vec<f64> = s
        .iter()
        .map(|x| energy::lyapunov_phi_tilde(cfg, c_i, x.lambda, x.b1))
        .collect();
    let phi: Vec<f64> = s
        .iter()
        .map(|x| energy::lyapunov_phi(cfg, c_i, x.lambda, x.b1, x.a_minus, x.a_plus))
        .collect();
    let nsq: Vec<f64> = s.iter().map(|x| x.n * x.n).collect();
    let phi_tilde_m = energy::phi_sup_tail(&phi_tilde);
    let phi_m = energy::phi_sup_tail(&phi);
    let nsq_m = energy::phi_sup_tail(&nsq);

    let quot = |v: &[f64], i: usize| {
        let (a, b) = if i == 0 { (0, 1) } else { (i - 1, i) };
        (v[b] - v[a]).abs() / (s[b].t - s[a].t)
    };
    let mut rows = Vec::with_capacity(s.len());
    for i in 0..s.len() {
        let drive = cstar * s[i].lambda.powf((nd - 4.0) / 2.0) * s[i].gnorm;
        let cap = cstar.powf(2.0 / (nd - 2.0)) * phi_tilde_m[i].powf(target_chain_slope);
        let rate = quot(&phi_tilde, i);
        rows.push(AuditRow {
            t: s[i].t,
            lambda: s[i].lambda,
            phi_tilde: phi_tilde[i],
            phi: phi[i],
            phi_tilde_sup: phi_tilde_m[i],
            phi_sup: phi_m[i],
            n_sq_sup: nsq_m[i],
            phi_tilde_rate: rate,
            phi_tilde_sup_rate: quot(&phi_tilde_m, i),
            drive,
            cap,
            rate_ratio: ratio(rate, drive),
            drive_ratio: ratio(drive, cap),
            amp_over_nsq: ratio(s[i].a_minus.abs().max(s[i].a_plus.abs()), nsq_m[i]),
        });
    }

    // slope of ln|Δφ̃/Δt| against ln φ̃_M, each attributed to its interval
    // midpoint (geometric mean), where both are positive
    let mut xy = Vec::new();
    for k in 0..s.len() - 1 {
        let r = (phi_tilde[k + 1] - phi_tilde[k]).abs() / (s[k + 1].t - s[k].t);
        if r > 0.0 && phi_tilde_m[k] > 0.0 && phi_tilde_m[k + 1] > 0.0 {
            xy.push((
                0.5 * (phi_tilde_m[k].ln() + phi_tilde_m[k + 1].ln()),
                r.ln(),
            ));
        }
    }
    let chain_slope = if xy.len() >= 2 {
        let n = xy.len() as f64;
        let xm = xy.iter().map(|p| p.0).sum::<f64>() / n;
        let ym = xy.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = xy.iter().map(|p| (p.0 - xm) * (p.0 - xm)).sum();
        let sxy: f64 = xy.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    } else {
        None
    };

    let fold_max = |f: fn(&AuditRow) -> f64| rows.iter().map(f).fold(0.0f64, f64::max);
    Ok(AuditReport {
        dim: cfg.dim,
        c_i,
        cstar,
        rate_ratio_max: fold_max(|r| r.rate_ratio),
        drive_ratio_max: fold_max(|r| r.drive_ratio),
        phi_over_nsq: (
            rows.iter()
                .map(|r| ratio(r.phi_sup, r.n_sq_sup))
                .fold(f64::INFINITY, f64::min),
            rows.iter()
                .map(|r| ratio(r.phi_sup, r.n_sq_sup))
                .fold(0.0f64, f64::max),
        ),
        c_a: fold_max(|r| r.amp_over_nsq),
        chain_slope,
        target_chain_slope,
        rows,
    })
}
