//! Extraction of the scale λ from a state via the gauge condition
//! ⟨𝒵_λ̲, g⟩ = 0, the decomposition u = V(λ) + u* + g with its a±
//! projections, and finite-difference audits of the modulation ODE
//! residuals along sampled trajectories.

use crate::bubble::{self, BubbleConfig};
use crate::energy;
use crate::error::{Error, Result};
use crate::grid::{RadialGrid, StatePair};
use crate::spectral::{self, SpectralData};

/// Scale-relative convergence tolerance for the gauge root.
const PHI_TOL: f64 = 1e-12;
/// Half-width of the root bracket in l = log λ (log 4).
const BRACKET_HALF: f64 = 1.3862943611198906;
/// |∂_lΦ| below this multiple of ⟨𝒵, ΛW⟩ at the root counts as degenerate.
const DEGENERATE_FRAC: f64 = 1e-3;
const MAX_ITER: usize = 80;

/// One decomposed state u = V(λ) + u* + g at a fixed time.
#[derive(Clone, Debug)]
pub struct ModulationState {
    pub t: f64,
    pub lambda: f64,
    pub g: StatePair,
    pub a_minus: f64,
    pub a_plus: f64,
    /// ‖g‖_ℰ.
    pub gnorm: f64,
    /// n(g, λ) = √(‖g‖²_ℰ + c*λ^{(N−2)/2}).
    pub n: f64,
    /// ⟨𝒵_λ̲, g⟩ — zero up to solver tolerance.
    pub orth_residual: f64,
}

impl ModulationState {
    /// Scalar view of the state, the record kept along traces.
    pub fn sample(&self) -> ModulationSample {
        ModulationSample {
            t: self.t,
            lambda: self.lambda,
            a_minus: self.a_minus,
            a_plus: self.a_plus,
            gnorm: self.gnorm,
            n: self.n,
            orth_residual: self.orth_residual,
            b1: 0.0,
            b2: 0.0,
            energy: 0.0,
        }
    }
}

/// Scalar record of one decomposition along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModulationSample {
    pub t: f64,
    pub lambda: f64,
    pub a_minus: f64,
    pub a_plus: f64,
    pub gnorm: f64,
    pub n: f64,
    pub orth_residual: f64,
    /// ⟨DE(u*), g⟩ at sample time (zero when not attached).
    #[serde(default)]
    pub b1: f64,
    /// Quadratic-and-higher energy remainder at sample time.
    #[serde(default)]
    pub b2: f64,
    /// Conserved total energy of the full field (zero when not attached).
    #[serde(default)]
    pub energy: f64,
}

/// Time-ordered modulation samples with the run's fixed parameters.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct ModulationTrace {
    pub cfg: BubbleConfig,
    pub dt: f64,
    /// Blow-up time estimate, when the run produced one.
    pub t_plus: Option<f64>,
    pub samples: Vec<ModulationSample>,
}

impl ModulationTrace {
    pub fn new(cfg: BubbleConfig, dt: f64) -> Self {
        ModulationTrace {
            cfg,
            dt,
            t_plus: None,
            samples: Vec::new(),
        }
    }

    /// Append a sample, keeping t strictly increasing and λ positive.
    pub fn push(&mut self, s: ModulationSample) -> Result<()> {
        if !(s.lambda > 0.0 && s.lambda.is_finite()) {
            return Err(Error::ScaleOutOfRange(
                s.lambda,
                "trace sample scale must be positive".into(),
            ));
        }
        if ![
            s.t,
            s.a_minus,
            s.a_plus,
            s.gnorm,
            s.n,
            s.orth_residual,
            s.b1,
            s.b2,
            s.energy,
        ]
        .iter()
        .all(|x| x.is_finite())
        {
            return Err(Error::NonFinite("modulation trace sample"));
        }
        if let Some(last) = self.samples.last() {
            if s.t <= last.t {
                return Err(Error::Config(format!(
                    "trace times must increase strictly: {} after {}",
                    s.t, last.t
                )));
            }
        }
        self.samples.push(s);
        Ok(())
    }

    /// Re-check all invariants (for traces read back from files).
    pub fn validate(&self) -> Result<()> {
        BubbleConfig::new(self.cfg.dim, self.cfg.c0, self.cfg.cstar)?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("trace dt must be positive, got {}", self.dt)));
        }
        let mut probe = ModulationTrace::new(self.cfg, self.dt);
        for &s in &self.samples {
            probe.push(s)?;
        }
        Ok(())
    }
}

// Φ and its Cauchy scale e^{−l}·‖𝒵_λ̲‖·‖v − V(λ)‖ in one pass.
fn phi_parts(
    grid: &RadialGrid,
    cfg: &BubbleConfig,
    spec: &SpectralData,
    v: &StatePair,
    l: f64,
) -> Result<(f64, f64)> {
    let lam = l.exp();
    let vl = bubble::cutoff_bubble(grid, cfg, lam)?;
    let zl = spec.z_l2_scaled(grid, lam);
    let mut d = v.u.clone();
    d.axpy(-1.0, &vl);
    let w = (-l).exp();
    Ok((
        w * grid.inner(&zl, &d),
        w * grid.l2_norm(&zl) * grid.l2_norm(&d),
    ))
}

/// Φ(v; l) = ⟨e^{−l}𝒵_{e^l}̲, v − V(e^l)⟩, the gauge functional whose zero
/// in l = log λ fixes the scale of the decomposition.
pub fn phi_functional(
    grid: &RadialGrid,
    cfg: &BubbleConfig,
    spec: &SpectralData,
    v: &StatePair,
    l: f64,
) -> Result<f64> {
    grid.check_field(&v.u)?;
    Ok(phi_parts(grid, cfg, spec, v, l)?.0)
}

/// ∂_lΦ = −⟨𝒵_λ̲, ∂_λV(λ)⟩ − ⟨e^{−l}(Λ₋₁𝒵)_λ̲, v − V(λ)⟩ at λ = e^l.
pub fn phi_dl(
    grid: &RadialGrid,
    cfg: &BubbleConfig,
    spec: &SpectralData,
    v: &StatePair,
    l: f64,
) -> Result<f64> {
    grid.check_field(&v.u)?;
    let lam = l.exp();
    let vl = bubble::cutoff_bubble(grid, cfg, lam)?;
    let dvl = bubble::cutoff_bubble_dlambda(grid, cfg, lam)?;
    let zl = spec.z_l2_scaled(grid, lam);
    let lzl = spec.lam_z_l2_scaled(grid, lam);
    let mut d = v.u.clone();
    d.axpy(-1.0, &vl);
    Ok(-grid.inner(&zl, &dvl) - (-l).exp() * grid.inner(&lzl, &d))
}

// The modulation root has ∂_lΦ ≈ ⟨𝒵, ΛW⟩ > 0; anything flat or descending
// is a spurious crossing of the gauge functional.
fn accept_root(spec: &SpectralData, l: f64, df: f64) -> Result<f64> {
    if df < DEGENERATE_FRAC * spec.zw.abs() {
        return Err(Error::DegenerateRoot(format!(
            "∂_lΦ = {df:.3e} at the root, below the healthy scale ⟨𝒵, ΛW⟩ = {:.3e}",
            spec.zw
        )));
    }
    Ok(l.exp())
}

/// Scale λ with ⟨𝒵_λ̲, v − V(λ)⟩ = 0.  Φ is monotone in l only near the
/// root, so the search scans [λ_guess/4, 4λ_guess] for the sign change
/// closest to the guess and then polishes with safeguarded Newton
/// (bisection fallback whenever the step escapes the local bracket).
pub fn solve_lambda(
    grid: &RadialGrid,
    cfg: &BubbleConfig,
    spec: &SpectralData,
    v: &StatePair,
    lambda_guess: f64,
) -> Result<f64> {
    grid.check_field(&v.u)?;
    if !(lambda_guess > 0.0 && lambda_guess.is_finite()) {
        return Err(Error::ScaleOutOfRange(
            lambda_guess,
            "lambda_guess must be positive".into(),
        ));
    }
    const SCAN: usize = 17;
    let lc = lambda_guess.ln();
    let left = lc - BRACKET_HALF;
    let step = 2.0 * BRACKET_HALF / (SCAN - 1) as f64;
    let mut vals = [0.0f64; SCAN];
    for (k, val) in vals.iter_mut().enumerate() {
        let l = left + k as f64 * step;
        let (f, _) = phi_parts(grid, cfg, spec, v, l)?;
        if f == 0.0 {
            return accept_root(spec, l, phi_dl(grid, cfg, spec, v, l)?);
        }
        *val = f;
    }
    // Only upward crossings qualify: Φ rises through the modulation root
    // (∂_lΦ ≈ ⟨𝒵, ΛW⟩ > 0), while the spurious crossing below it descends.
    let mut pair: Option<usize> = None;
    for k in 0..SCAN - 1 {
        if vals[k] < 0.0 && vals[k + 1] > 0.0 {
            let dist = |i: usize| (left + (i as f64 + 0.5) * step - lc).abs();
            let closer = pair.map_or(true, |p| dist(k) < dist(p));
            if closer {
                pair = Some(k);
            }
        }
    }
    let Some(k) = pair else {
        return Err(Error::NoBracket(format!(
            "no upward sign change of the gauge functional in [{:.6e}, {:.6e}]",
            (lc - BRACKET_HALF).exp(),
            (lc + BRACKET_HALF).exp()
        )));
    };
    let (mut lo, mut hi) = (left + k as f64 * step, left + (k + 1) as f64 * step);
    let mut flo = vals[k];
    let fhi = vals[k + 1];
    let mut l = lo - flo * (hi - lo) / (fhi - flo);
    let mut prev_abs = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let (f, scale) = phi_parts(grid, cfg, spec, v, l)?;
        let df = phi_dl(grid, cfg, spec, v, l)?;
        if f == 0.0 {
            return accept_root(spec, l, df);
        }
        if f.signum() == flo.signum() {
            lo = l;
            flo = f;
        } else {
            hi = l;
        }
        if f.abs() <= PHI_TOL * (scale + df.abs()) || hi - lo <= 1e-15 {
            return accept_root(spec, l, df);
        }
        let newton = l - f / df;
        l = if newton.is_finite() && newton > lo && newton < hi && 2.0 * f.abs() < prev_abs {
            newton
        } else {
            0.5 * (lo + hi)
        };
        prev_abs = f.abs();
    }
    Err(Error::DegenerateRoot(
        "gauge root iteration exhausted its budget without converging".into(),
    ))
}

/// u = (V(λ), 0) + u* + g.
pub fn compose(
    grid: &RadialGrid,
    cfg: &BubbleConfig,
    lam: f64,
    g: &StatePair,
    ustar: &StatePair,
) -> Result<StatePair> {
    grid.check_field(&g.u)?;
    grid.check_field(&g.ud)?;
    grid.check_field(&ustar.u)?;
    grid.check_field(&ustar.ud)?;
    let vl = bubble::cutoff_bubble(grid, cfg, lam)?;
    let mut u = StatePair {
        u: vl,
        ud: crate::grid::RadialField::zeros(grid.len()),
    };
    u.axpy(1.0, ustar);
    u.axpy(1.0, g);
    Ok(u)
}

/// Split u = V(λ) + u* + g, with λ from the gauge condition seeded at
/// `lambda_guess` (the guess itself is never stored), then package the a±
/// projections, norms and the orthogonality residual.
pub fn decompose(
    grid: &RadialGrid,
    cfg: &BubbleConfig,
    spec: &SpectralData,
    t: f64,
    u: &StatePair,
    ustar: &StatePair,
    lambda_guess: f64,
) -> Result<ModulationState> {
    grid.check_field(&u.u)?;
    grid.check_field(&u.ud)?;
    grid.check_field(&ustar.u)?;
    grid.check_field(&ustar.ud)?;
    let mut v = u.clone();
    v.axpy(-1.0, ustar);
    let lambda = solve_lambda(grid, cfg, spec, &v, lambda_guess)?;
    let vl = bubble::cutoff_bubble(grid, cfg, lambda)?;
    let mut g = v;
    g.u.axpy(-1.0, &vl);
    let (a_minus, a_plus) = spectral::alpha_project(grid, spec, lambda, &g)?;
    let sz = energy::n_size(grid, &g, lambda, cfg.cstar);
    let zl = spec.z_l2_scaled(grid, lambda);
    let orth_residual = grid.inner(&zl, &g.u);
    Ok(ModulationState {
        t,
        lambda,
        g,
        a_minus,
        a_plus,
        gnorm: sz.gnorm,
        n: sz.n,
        orth_residual,
    })
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn check_trace_len(trace: &ModulationTrace) -> Result<()> {
    trace.validate()?;
    if trace.samples.len() < 3 {
        return Err(Error::TooCoarse(format!(
            "residuals need at least 3 trace samples, got {}",
            trace.samples.len()
        )));
    }
    Ok(())
}

/// |λ′(t)| / ‖g(t)‖_ℰ at interior sample points, λ′ by centered differences.
/// Endpoints are excluded; the list is two shorter than the trace.
pub fn lambda_rate_residual(trace: &ModulationTrace) -> Result<Vec<f64>> {
    check_trace_len(trace)?;
    Ok(trace
        .samples
        .windows(3)
        .map(|w| {
            let lp = (w[2].lambda - w[0].lambda) / (w[2].t - w[0].t);
            ratio_or_zero(lp.abs(), w[1].gnorm)
        })
        .collect())
}

/// (λ|ȧ⁻ + (ν/λ)a⁻|, λ|ȧ⁺ − (ν/λ)a⁺|) / n² at interior sample points,
/// ȧ± by centered differences.
pub fn amp_ode_residual(
    trace: &ModulationTrace,
    spec: &SpectralData,
) -> Result<Vec<(f64, f64)>> {
    check_trace_len(trace)?;
    let nu = spec.nu;
    Ok(trace
        .samples
        .windows(3)
        .map(|w| {
            let dtw = w[2].t - w[0].t;
            let adm = (w[2].a_minus - w[0].a_minus) / dtw;
            let adp = (w[2].a_plus - w[0].a_plus) / dtw;
            let (lam, nsq) = (w[1].lambda, w[1].n * w[1].n);
            let rm = lam * (adm + nu / lam * w[1].a_minus).abs();
            let rp = lam * (adp - nu / lam * w[1].a_plus).abs();
            (ratio_or_zero(rm, nsq), ratio_or_zero(rp, nsq))
        })
        .collect())
}
