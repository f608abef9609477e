//! Blow-up-rate measurement: least-squares fit of the tracked scale to
//! C(T₊ − t)^p with the blow-up time line-searched, and the average-rate
//! lower-bound ratio ∫dτ/√λ / (T₊−t)^{1/3} for N = 3 traces.

use crate::error::{Error, Result};
use crate::modulation::ModulationTrace;

/// Log-spaced candidates in the coarse T₊ scan.
const SCAN_POINTS: usize = 241;
/// Scan range for T₊ − t_last, as multiples of the window span.
const SCAN_LO: f64 = 1e-6;
const SCAN_HI: f64 = 1e4;
/// Golden-section stopping width on ln(T₊ − t_last).
const REFINE_TOL: f64 = 1e-12;

/// Fitted power law λ(t) ≈ C(T₊ − t)^p over a window of a trace.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct FitResult {
    pub dim: usize,
    /// Fitted exponent p.
    pub exponent: f64,
    /// Standard error of p from the log-log regression.
    pub exponent_stderr: f64,
    /// Fitted prefactor C.
    pub constant: f64,
    /// Fitted blow-up time T₊.
    pub t_plus: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    /// 4/(6 − N), the rate the measurement is compared against.
    pub target_exponent: f64,
    /// Time window the fit was restricted to.
    pub window: (f64, f64),
    /// Samples inside the window.
    pub points: usize,
}

/// Slope, intercept, SSE, and Σ(x−x̄)² of log λ against log(T₊ − t).
fn regress(pts: &[(f64, f64)], logy: &[f64], t_plus: f64) -> (f64, f64, f64, f64) {
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|&(t, _)| (t_plus - t).ln()).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = logy.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(logy) {
        sxx += (x - xm) * (x - xm);
        sxy += (x - xm) * (y - ym);
        syy += (y - ym) * (y - ym);
    }
    let slope = sxy / sxx;
    (slope, ym - slope * xm, (syy - slope * sxy).max(0.0), sxx)
}

/// Fit λ(t) ≈ C(T₊ − t)^p on `window` by least squares on log λ vs
/// log(T₊ − t), minimizing over T₊ by a coarse log scan plus golden-section
/// refinement. Refuses windows with fewer than 10 samples or any increase
/// in λ, and reports the fit as a measurement with its residual and the
/// standard error of the exponent.
pub fn fit_rate(trace: &ModulationTrace, window: (f64, f64)) -> Result<FitResult> {
    let pts: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .filter(|s| s.t >= window.0 && s.t <= window.1)
        .map(|s| (s.t, s.lambda))
        .collect();
    if pts.len() < 10 {
        return Err(Error::FitRefused(format!(
            "{} samples in window [{}, {}], need at least 10",
            pts.len(),
            window.0,
            window.1
        )));
    }
    for w in pts.windows(2) {
        if w[1].1 >= w[0].1 {
            return Err(Error::FitRefused(format!(
                "scale not decreasing at t = {}: {} -> {}",
                w[1].0, w[0].1, w[1].1
            )));
        }
    }
    let t_last = pts.last().unwrap().0;
    let span = t_last - pts[0].0;
    let logy: Vec<f64> = pts.iter().map(|&(_, l)| l.ln()).collect();
    let sse_at = |u: f64| regress(&pts, &logy, t_last + u.exp()).2;

    let (u_lo, u_hi) = ((SCAN_LO * span).ln(), (SCAN_HI * span).ln());
    let us: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| u_lo + (u_hi - u_lo) * i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let best = us
        .iter()
        .enumerate()
        .min_by(|a, b| sse_at(*a.1).total_cmp(&sse_at(*b.1)))
        .unwrap()
        .0;
    // SSE is smooth in ln(T₊ − t_last); refine inside the bracketing cells
    let (mut lo, mut hi) = (us[best.saturating_sub(1)], us[(best + 1).min(us.len() - 1)]);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
    let (mut fc, mut fd) = (sse_at(c), sse_at(d));
    while hi - lo > REFINE_TOL {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = sse_at(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = sse_at(d);
        }
    }
    let t_plus = t_last + (0.5 * (lo + hi)).exp();
    let (p, intercept, sse, sxx) = regress(&pts, &logy, t_plus);
    let n = pts.len() as f64;
    let dim = trace.cfg.dim;
    Ok(FitResult {
        dim,
        exponent: p,
        exponent_stderr: (sse / (n - 2.0) / sxx).sqrt(),
        constant: intercept.exp(),
        t_plus,
        residual: (sse / n).sqrt(),
        target_exponent: 4.0 / (6.0 - dim as f64),
        window,
        points: pts.len(),
    })
}

/// C₀ in C = C₀ (c*)^{2/(6−N)}: the part of the fitted rate constant not
/// carried by the background size.
pub fn constant_prefactor(fit: &FitResult, cstar: f64) -> f64 {
    fit.constant / cstar.powf(2.0 / (6.0 - fit.dim as f64))
}

/// Per-sample ratio [∫_t^{T₊} dτ/√λ(τ)] / (T₊ − t)^{1/3}, the quantity whose
/// lower bound 3/√C expresses the average blow-up rate for N = 3. The
/// integral uses the trapezoid rule over the samples and the fitted power
/// law past the last one; that tail converges only for p < 2.
pub fn n3_average_bound(trace: &ModulationTrace, fit: &FitResult) -> Result<Vec<(f64, f64)>> {
    if trace.cfg.dim != 3 {
        return Err(Error::Config(format!(
            "average-rate bound is the N = 3 statement, trace has N = {}",
            trace.cfg.dim
        )));
    }
    let pts: Vec<(f64, f64)> = trace.samples.iter().map(|s| (s.t, s.lambda)).collect();
    let Some(&(t_last, _)) = pts.last() else {
        return Err(Error::Config("average-rate bound needs a nonempty trace".into()));
    };
    if !(fit.t_plus > t_last && fit.t_plus.is_finite()) {
        return Err(Error::Config(format!(
            "blow-up time {} does not lie past the trace end {t_last}",
            fit.t_plus
        )));
    }
    if fit.exponent >= 2.0 {
        return Err(Error::Config(format!(
            "tail of ∫dτ/√λ diverges for fitted exponent {} ≥ 2",
            fit.exponent
        )));
    }
    // closed-form tail ∫_{t_last}^{T₊} dτ/√(C(T₊−τ)^p)
    let q = 1.0 - 0.5 * fit.exponent;
    let mut acc = (fit.t_plus - t_last).powf(q) / (fit.constant.sqrt() * q);
    let mut out = vec![(t_last, acc / (fit.t_plus - t_last).cbrt())];
    for w in pts.windows(2).rev() {
        let (t0, l0) = w[0];
        let (t1, l1) = w[1];
        acc += 0.5 * (t1 - t0) * (1.0 / l0.sqrt() + 1.0 / l1.sqrt());
        out.push((t0, acc / (fit.t_plus - t0).cbrt()));
    }
    out.reverse();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::BubbleConfig;
    use crate::fixtures;
    use crate::grid;
    use crate::modulation::ModulationSample;
    use proptest::prelude::*;

    fn flat(t: f64, lambda: f64) -> ModulationSample {
        ModulationSample {
            t,
            lambda,
            a_minus: 0.0,
            a_plus: 0.0,
            gnorm: 0.0,
            n: 0.0,
            orth_residual: 0.0,
            b1: 0.0,
            b2: 0.0,
            energy: 0.0,
        }
    }

    fn synth(dim: usize, t1: f64, n: usize, lam: impl Fn(f64) -> f64) -> ModulationTrace {
        let cfg = BubbleConfig::new(dim, 0.01, 0.05).unwrap();
        let dt = t1 / (n - 1) as f64;
        let mut tr = ModulationTrace::new(cfg, dt);
        for i in 0..n {
            let t = dt * i as f64;
            tr.push(flat(t, lam(t))).unwrap();
        }
        tr
    }

    #[test]
    fn bundled_quartic_trace_recovers_the_rate() {
        let (ts, lams) =
            grid::two_column_csv(fixtures::SYNTHETIC_QUARTIC_CSV.as_bytes()).unwrap();
        let cfg = BubbleConfig::new(5, 0.01, 0.05).unwrap();
        let mut tr = ModulationTrace::new(cfg, ts[1] - ts[0]);
        for (&t, &l) in ts.iter().zip(&lams) {
            tr.push(flat(t, l)).unwrap();
        }
        let fit = fit_rate(&tr, (0.0, 1.0)).unwrap();
        assert!((fit.exponent - 4.0).abs() < 0.02, "p = {}", fit.exponent);
        assert!((fit.t_plus - 1.0).abs() < 1e-3, "T+ = {}", fit.t_plus);
        assert!((fit.constant - 1.0).abs() < 1e-3, "C = {}", fit.constant);
        assert!(fit.residual < 1e-6);
        assert!(fit.exponent_stderr < 1e-6);
        assert_eq!(fit.target_exponent, 4.0);
        assert_eq!(fit.points, ts.len());
    }

    #[test]
    fn perturbed_power_law_fits_within_tolerance() {
        let tr = synth(4, 0.9, 181, |t| {
            (1.0 - t).powi(2) * (1.0 + 0.01 * (10.0 * t).sin())
        });
        let fit = fit_rate(&tr, (0.0, 1.0)).unwrap();
        assert!((fit.exponent - 2.0).abs() < 0.05, "p = {}", fit.exponent);
        assert!((fit.t_plus - 1.0).abs() < 0.01, "T+ = {}", fit.t_plus);
        assert_eq!(fit.target_exponent, 2.0);
        assert!(fit.exponent_stderr > 0.0 && fit.residual > 0.0);
    }

    #[test]
    fn refuses_flat_short_or_nonmonotone_windows() {
        let flat_tr = synth(3, 0.9, 40, |_| 0.25);
        assert!(matches!(
            fit_rate(&flat_tr, (0.0, 1.0)),
            Err(Error::FitRefused(_))
        ));
        let short = synth(3, 0.9, 8, |t| 1.0 - t);
        assert!(matches!(fit_rate(&short, (0.0, 1.0)), Err(Error::FitRefused(_))));
        let bump = synth(3, 0.9, 40, |t| {
            (1.0 - t).powi(2) * if (0.4..0.45).contains(&t) { 1.5 } else { 1.0 }
        });
        assert!(matches!(fit_rate(&bump, (0.0, 1.0)), Err(Error::FitRefused(_))));
        // ... but a window avoiding the bump is accepted
        let fit = fit_rate(&bump, (0.5, 0.9)).unwrap();
        assert!((fit.exponent - 2.0).abs() < 0.05);
    }

    #[test]
    fn window_restricts_the_samples_used() {
        let tr = synth(5, 0.9, 181, |t| (1.0 - t).powi(4));
        let fit = fit_rate(&tr, (0.3, 0.6)).unwrap();
        assert_eq!(fit.window, (0.3, 0.6));
        assert_eq!(fit.points, 61);
        // on exact data the SSE floor is a rounding plateau in T₊, so the
        // minimizer resolves the exponent to ~1e-6, not machine precision
        assert!((fit.exponent - 4.0).abs() < 1e-5);
        assert!((fit.t_plus - 1.0).abs() < 1e-5);
    }

    #[test]
    fn average_bound_ratio_is_three_on_the_target_law() {
        let tr = synth(3, 0.96, 481, |t| (1.0 - t).powf(4.0 / 3.0));
        let fit = fit_rate(&tr, (0.0, 1.0)).unwrap();
        assert!((fit.exponent - fit.target_exponent).abs() < 1e-6);
        let ratios = n3_average_bound(&tr, &fit).unwrap();
        assert_eq!(ratios.len(), tr.samples.len());
        for &(t, r) in &ratios {
            assert!((r - 3.0).abs() < 1e-3, "ratio {r} at t = {t}");
        }
    }

    #[test]
    fn average_bound_matches_the_constant_scale_closed_form() {
        let lam0 = 0.25;
        let tr = synth(3, 0.9, 61, |_| lam0);
        let fit = FitResult {
            dim: 3,
            exponent: 0.0,
            exponent_stderr: 0.0,
            constant: lam0,
            t_plus: 1.0,
            residual: 0.0,
            target_exponent: 4.0 / 3.0,
            window: (0.0, 0.9),
            points: 61,
        };
        let ratios = n3_average_bound(&tr, &fit).unwrap();
        // ratio = λ₀^{-1/2}(T₊ − t)^{2/3}, falling toward T₊
        for &(t, r) in &ratios {
            let exact = (1.0 - t).powf(2.0 / 3.0) / lam0.sqrt();
            assert!((r - exact).abs() < 1e-12 * exact, "{r} vs {exact}");
        }
        for w in ratios.windows(2) {
            assert!(w[1].1 < w[0].1, "ratio must fall toward T₊");
        }
    }

    #[test]
    fn prefactor_strips_the_background_size_from_the_constant() {
        let tr = synth(5, 0.9, 61, |t| 0.25 * (1.0 - t).powi(4));
        let fit = fit_rate(&tr, (0.0, 1.0)).unwrap();
        // C = C₀ (c*)² for N = 5
        let cstar = 0.05;
        assert!((constant_prefactor(&fit, cstar) - 0.25 / (cstar * cstar)).abs() < 1e-3);
    }

    #[test]
    fn average_bound_rejects_wrong_dimension_and_divergent_tail() {
        let lam0 = 0.25;
        let fit = FitResult {
            dim: 3,
            exponent: 0.0,
            exponent_stderr: 0.0,
            constant: lam0,
            t_plus: 1.0,
            residual: 0.0,
            target_exponent: 4.0 / 3.0,
            window: (0.0, 0.9),
            points: 61,
        };
        let five = synth(5, 0.9, 61, |_| lam0);
        assert!(n3_average_bound(&five, &fit).is_err());
        let three = synth(3, 0.9, 61, |_| lam0);
        let diverging = FitResult { exponent: 2.5, ..fit };
        assert!(n3_average_bound(&three, &diverging).is_err());
        let early = FitResult { t_plus: 0.5, ..fit };
        assert!(n3_average_bound(&three, &early).is_err());
    }

    proptest! {
        #[test]
        fn exact_power_laws_are_recovered(
            p in 0.3f64..5.0,
            t_plus in 1.0f64..3.0,
            c in 0.05f64..20.0,
        ) {
            let tr = synth(4, 0.85 * t_plus, 60, |t| c * (t_plus - t).powf(p));
            let fit = fit_rate(&tr, (0.0, t_plus)).unwrap();
            prop_assert!((fit.exponent - p).abs() <= 1e-3 * (1.0 + p));
            prop_assert!((fit.t_plus - t_plus).abs() <= 1e-4 * t_plus);
            prop_assert!((fit.constant - c).abs() <= 1e-3 * c);
        }
    }
}
