//! Linearized operator L = −Δ − f′(W): negative eigenpair (−ν², 𝒴) by
//! two-sided shooting, the orthogonality test function 𝒵, the projections
//! α± onto the stable/unstable directions, and coercivity certificates for
//! the constrained quadratic form.

use crate::bubble;
use crate::diff;
use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid, StatePair};
use crate::interp::{RadialInterpolant, Tail};
use crate::nonlin;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Potential f′(W)(r) of the linearized operator.
pub fn linearized_potential(dim: usize, r: f64) -> f64 {
    nonlin::fp(dim, bubble::ground_state(dim, r))
}

/// Spectral data of L on a fixed grid: eigenvalue −ν², normalized ground
/// eigenfunction 𝒴, test function 𝒵 and its pairing with ΛW.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub dim: usize,
    pub nu: f64,
    /// 𝒴 on the grid, positive, ‖𝒴‖_{L²} = 1.
    pub y: RadialField,
    /// 𝒵 = B − μ𝒴̃ on the grid, supported in [0, 4].
    pub z: RadialField,
    /// ⟨𝒵, ΛW⟩ > 0.
    pub zw: f64,
    y_interp: RadialInterpolant,
    z_interp: RadialInterpolant,
    lam_z_interp: RadialInterpolant,
}

impl SpectralData {
    /// 𝒴_λ̲ = λ^{−N/2} 𝒴(r/λ) sampled on an arbitrary grid.
    pub fn y_l2_scaled(&self, grid: &RadialGrid, lam: f64) -> RadialField {
        let c = lam.powf(-(self.dim as f64) / 2.0);
        RadialField::from_fn(grid, |r| c * self.y_interp.eval(r / lam))
    }

    /// 𝒵_λ̲ sampled on an arbitrary grid.
    pub fn z_l2_scaled(&self, grid: &RadialGrid, lam: f64) -> RadialField {
        let c = lam.powf(-(self.dim as f64) / 2.0);
        RadialField::from_fn(grid, |r| c * self.z_interp.eval(r / lam))
    }

    /// (Λ₋₁𝒵)_λ̲ sampled on an arbitrary grid (enters ∂_l of the gauge).
    pub fn lam_z_l2_scaled(&self, grid: &RadialGrid, lam: f64) -> RadialField {
        let c = lam.powf(-(self.dim as f64) / 2.0);
        RadialField::from_fn(grid, |r| c * self.lam_z_interp.eval(r / lam))
    }

    /// 𝒴±_λ = ((1/ν)𝒴_λ, ±𝒴_λ̲): the unstable (+) / stable (−) directions.
    pub fn y_pair(&self, grid: &RadialGrid, lam: f64, sign: f64) -> StatePair {
        let cu = lam.powf(-(self.dim as f64 - 2.0) / 2.0) / self.nu;
        let cv = sign * lam.powf(-(self.dim as f64) / 2.0);
        StatePair {
            u: RadialField::from_fn(grid, |r| cu * self.y_interp.eval(r / lam)),
            ud: RadialField::from_fn(grid, |r| cv * self.y_interp.eval(r / lam)),
        }
    }
}

/// a∓ = ½[(ν/λ)⟨𝒴_λ̲, u⟩ ∓ ⟨𝒴_λ̲, u̇⟩]; duality ⟨α±_λ, 𝒴±_λ⟩ = 1.
pub fn alpha_project(
    grid: &RadialGrid,
    spec: &SpectralData,
    lam: f64,
    g: &StatePair,
) -> Result<(f64, f64)> {
    if !(lam > 0.0 && lam.is_finite()) {
        return Err(Error::ScaleOutOfRange(lam, "alpha_project".into()));
    }
    let yl = spec.y_l2_scaled(grid, lam);
    let pu = grid.inner(&yl, &g.u);
    let pv = grid.inner(&yl, &g.ud);
    let s = spec.nu / lam * pu;
    Ok((0.5 * (s - pv), 0.5 * (s + pv)))
}

/// ½[∫|∇u|² − ∫f′(background)u² + ∫|u̇|²] — the second variation of the
/// energy at `background`, evaluated on the pair g.
pub fn quadratic_form(grid: &RadialGrid, background: &[f64], g: &StatePair) -> f64 {
    let dim = grid.dim();
    let gu = diff::gradient(grid, &g.u);
    let pot: Vec<f64> = background
        .iter()
        .zip(g.u.iter())
        .map(|(&b, &u)| nonlin::fp(dim, b) * u * u)
        .collect();
    0.5 * (grid.inner(&gu, &gu) - grid.integrate(&pot) + grid.inner(&g.ud, &g.ud))
}

// ---------------------------------------------------------------------------
// shooting eigensolver
// ---------------------------------------------------------------------------

// y'' = −(N−1)/r y' + (s − f'(W)) y, s = ν²
fn rhs(dim: usize, s: f64, r: f64, y: f64, p: f64) -> (f64, f64) {
    (
        p,
        -((dim - 1) as f64) / r * p + (s - linearized_potential(dim, r)) * y,
    )
}

fn rk4_step(dim: usize, s: f64, r: f64, y: f64, p: f64, h: f64) -> (f64, f64) {
    let (k1y, k1p) = rhs(dim, s, r, y, p);
    let (k2y, k2p) = rhs(dim, s, r + 0.5 * h, y + 0.5 * h * k1y, p + 0.5 * h * k1p);
    let (k3y, k3p) = rhs(dim, s, r + 0.5 * h, y + 0.5 * h * k2y, p + 0.5 * h * k2p);
    let (k4y, k4p) = rhs(dim, s, r + h, y + h * k3y, p + h * k3p);
    (
        y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
        p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
    )
}

fn rk4_span(dim: usize, s: f64, r0: f64, y0: f64, p0: f64, r1: f64, steps: usize) -> (f64, f64) {
    let h = (r1 - r0) / steps as f64;
    let (mut y, mut p) = (y0, p0);
    for k in 0..steps {
        let r = r0 + k as f64 * h;
        (y, p) = rk4_step(dim, s, r, y, p, h);
    }
    (y, p)
}

// regular series y = 1 + c₂r² + c₄r⁴ about the origin
fn series_coeffs(dim: usize, s: f64) -> (f64, f64) {
    let n = dim as f64;
    let kappa = nonlin::fp(dim, 1.0);
    let c2 = (s - kappa) / (2.0 * n);
    let c4 = ((s - kappa) * c2 + 2.0 * kappa / (n * (n - 2.0))) / (4.0 * n + 8.0);
    (c2, c4)
}

fn series_state(dim: usize, s: f64, r: f64) -> (f64, f64) {
    let (c2, c4) = series_coeffs(dim, s);
    (
        1.0 + c2 * r * r + c4 * r.powi(4),
        2.0 * c2 * r + 4.0 * c4 * r.powi(3),
    )
}

// decaying free solution r^{1−N/2}K_{N/2−1}(νr): exact for N = 3, 5;
// two-term asymptotic for N = 4
fn asym_coeffs(dim: usize) -> (f64, f64) {
    match dim {
        3 => (0.0, 0.0),
        4 => (3.0 / 8.0, -15.0 / 128.0),
        _ => (1.0, 0.0),
    }
}

fn asym_value(dim: usize, nu: f64, r: f64) -> f64 {
    let (c1, c2) = asym_coeffs(dim);
    let z = nu * r;
    (-z).exp() * z.powf(-((dim - 1) as f64) / 2.0) * (1.0 + c1 / z + c2 / (z * z))
}

fn asym_state(dim: usize, nu: f64, r: f64) -> (f64, f64) {
    let (c1, c2) = asym_coeffs(dim);
    let z = nu * r;
    let sv = 1.0 + c1 / z + c2 / (z * z);
    let sp = -c1 / (z * z) - 2.0 * c2 / (z * z * z);
    let y = asym_value(dim, nu, r);
    let logd = -nu - (dim - 1) as f64 / (2.0 * r) + nu * sp / sv;
    (y, y * logd)
}

// match in the classically forbidden region, where f'(W) ≤ s/100
fn match_radius(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    let kappa = nonlin::fp(dim, 1.0);
    (n * (n - 2.0) * ((100.0 * kappa / s).sqrt() - 1.0).max(1.0)).sqrt()
}

fn far_radius(s: f64, rm: f64) -> f64 {
    rm + (25.0 / s.sqrt()).min(140.0)
}

const SHOT_STEPS: usize = 3000;

fn wronskian_at_match(dim: usize, s: f64) -> f64 {
    let rm = match_radius(dim, s);
    let rr = far_radius(s, rm);
    let r0 = 1e-2;
    let (y0, p0) = series_state(dim, s, r0);
    let (yo, po) = rk4_span(dim, s, r0, y0, p0, rm, SHOT_STEPS);
    let nu = s.sqrt();
    let (yi0, pi0) = asym_state(dim, nu, rr);
    let (yi, pi) = rk4_span(dim, s, rr, yi0, pi0, rm, SHOT_STEPS);
    let no = yo.hypot(po).max(f64::MIN_POSITIVE);
    let ni = yi.hypot(pi).max(f64::MIN_POSITIVE);
    (yo / no) * (pi / ni) - (po / no) * (yi / ni)
}

fn bisect_nu_sq(dim: usize) -> Result<f64> {
    let kappa = nonlin::fp(dim, 1.0);
    let m = 400;
    let mut brackets = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..m {
        let s = kappa * (k as f64 + 0.5) / m as f64;
        let w = wronskian_at_match(dim, s);
        if let Some((ps, pw)) = prev {
            if (pw < 0.0) != (w < 0.0) {
                brackets.push((ps, s));
            }
        }
        prev = Some((s, w));
    }
    match brackets.len() {
        0 => Err(Error::Spectral(
            "no negative eigenvalue bracketed (grid under-resolves the potential)".into(),
        )),
        1 => {
            let (mut lo, mut hi) = brackets[0];
            let mut wlo = wronskian_at_match(dim, lo);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if hi - lo < 1e-14 * kappa {
                    break;
                }
                let wm = wronskian_at_match(dim, mid);
                if (wm < 0.0) == (wlo < 0.0) {
                    lo = mid;
                    wlo = wm;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        }
        _ => Err(Error::Spectral(format!(
            "{} sign changes in the matching condition; spectrum not numerically simple",
            brackets.len()
        ))),
    }
}

// integrate node-to-node so every grid sample lies on one smooth RK4
// trajectory (a formula switch between adjacent nodes would inject a
// kink that the 5-point Laplacian amplifies by 1/h²); returns the sampled
// field and the normalized branch Wronskian at the match node — a leftover
// derivative kink there pollutes pairings like ⟨𝒴, ΛW⟩ through a surface
// term ∝ r_m^{N−1}, so the caller drives the Wronskian to ~1e-12 in s
fn sample_eigenfunction(grid: &RadialGrid, s: f64) -> Result<(Vec<f64>, f64)> {
    let dim = grid.dim();
    let nu = s.sqrt();
    let r = grid.nodes();
    let n = r.len();
    let rm = match_radius(dim, s);
    let rr = far_radius(s, rm);
    let im = r.partition_point(|&v| v <= rm).saturating_sub(1).max(1);
    let ir = r.partition_point(|&v| v <= rr).saturating_sub(1).max(im);
    let cap = |rad: f64| if rad < 10.0 { 2e-3 } else { 5e-3 };

    let mut y = vec![0.0; n];
    // outward branch: series at the first positive node, then node-to-node
    let (mut yv, mut pv) = series_state(dim, s, r[1]);
    y[0] = 1.0;
    y[1] = yv;
    for i in 1..im {
        let (a, b) = (r[i], r[i + 1]);
        let sub = ((b - a) / cap(a)).ceil() as usize;
        let sub = sub.max(1);
        (yv, pv) = rk4_span(dim, s, a, yv, pv, b, sub);
        y[i + 1] = yv;
    }
    let (y_out_m, p_out_m) = (yv, pv);

    // inward branch from the asymptotic start down to the match node
    let (mut yw, mut pw) = asym_state(dim, nu, rr);
    let mut inner = vec![0.0; n];
    let mut prev_r = rr;
    for i in (im..=ir).rev() {
        let sub = ((prev_r - r[i]) / cap(r[i])).ceil() as usize;
        let sub = sub.max(1);
        (yw, pw) = rk4_span(dim, s, prev_r, yw, pw, r[i], sub);
        inner[i] = yw;
        prev_r = r[i];
    }
    let no = y_out_m.hypot(p_out_m).max(f64::MIN_POSITIVE);
    let ni = inner[im].hypot(pw).max(f64::MIN_POSITIVE);
    let wr = (y_out_m / no) * (pw / ni) - (p_out_m / no) * (inner[im] / ni);
    let rho = y_out_m / inner[im];
    if !(rho > 0.0) {
        // glue impossible at this trial s (outward branch flipped sign);
        // the Wronskian is still usable for the eigenvalue iteration
        return Ok((Vec::new(), wr));
    }
    for i in im + 1..=ir {
        y[i] = rho * inner[i];
    }
    // beyond the far radius the decaying free solution is exact to O(z⁻²)
    // at magnitudes ≤ e^{−ν r_R}; error there is far below quadrature level
    for i in ir + 1..n {
        y[i] = rho * asym_value(dim, nu, r[i]);
    }
    Ok((y, wr))
}

fn cached_nu_sq(dim: usize) -> Result<f64> {
    use std::sync::OnceLock;
    static CACHE: [OnceLock<f64>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let slot = &CACHE[dim - 3];
    if let Some(&s) = slot.get() {
        return Ok(s);
    }
    let s = bisect_nu_sq(dim)?;
    Ok(*slot.get_or_init(|| s))
}

/// Shoot for the unique negative eigenvalue −ν² of L and assemble the full
/// spectral data (𝒴, 𝒵, ⟨𝒵, ΛW⟩) on `grid`.
pub fn eigen_ground(grid: &RadialGrid) -> Result<SpectralData> {
    let dim = grid.dim();
    crate::grid::check_dim(dim)?;
    let coarse = cached_nu_sq(dim)?;
    // secant refinement of the coarse-shot eigenvalue against the sampler's
    // own Wronskian, removing the derivative kink at the match node
    let mut s_prev = coarse * (1.0 - 1e-7);
    let (_, mut w_prev) = sample_eigenfunction(grid, s_prev)?;
    let mut s = coarse;
    let (mut y, mut w) = sample_eigenfunction(grid, s)?;
    for _ in 0..8 {
        if w.abs() < 1e-12 || (w - w_prev).abs() < f64::MIN_POSITIVE {
            break;
        }
        let next = s - w * (s - s_prev) / (w - w_prev);
        if !next.is_finite() || next <= 0.0 || (next - coarse).abs() > 0.05 * coarse {
            return Err(Error::Spectral("eigenvalue refinement diverged".into()));
        }
        (s_prev, w_prev) = (s, w);
        s = next;
        (y, w) = sample_eigenfunction(grid, s)?;
    }
    if y.is_empty() {
        return Err(Error::Spectral(
            "no sign-definite glue at the refined eigenvalue".into(),
        ));
    }
    let nu = s.sqrt();
    let norm = grid.l2_norm(&y);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::NonFinite("eigenfunction normalization"));
    }
    for v in &mut y {
        *v /= norm;
    }
    let y = RadialField(y);
    let y_interp = RadialInterpolant::new(
        grid.nodes().to_vec(),
        y.0.clone(),
        Tail::Exp { rate: nu },
    );
    let (z, zw) = build_z(grid, &y)?;
    let lam_z = bubble::lambda_generator(grid, &z, -1.0);
    let z_interp = RadialInterpolant::new(grid.nodes().to_vec(), z.0.clone(), Tail::Zero);
    let lam_z_interp = RadialInterpolant::new(grid.nodes().to_vec(), lam_z.0, Tail::Zero);
    Ok(SpectralData {
        dim,
        nu,
        y,
        z,
        zw,
        y_interp,
        z_interp,
        lam_z_interp,
    })
}

/// 𝒵 = B − μ𝒴̃: fixed bump B minus a truncated multiple of 𝒴, with μ chosen
/// so ⟨𝒵, 𝒴⟩ = 0 exactly in the grid quadrature. Returns (𝒵, ⟨𝒵, ΛW⟩).
pub fn build_z(grid: &RadialGrid, y: &RadialField) -> Result<(RadialField, f64)> {
    let dim = grid.dim();
    let b = RadialField::from_fn(grid, |r| {
        if r < 2.0 {
            (-r * r / (4.0 - r * r)).exp()
        } else {
            0.0
        }
    });
    let ytr = RadialField::from_fn_indexed(grid, |i, r| y[i] * nonlin::chi(r / 2.0));
    let denom = grid.inner(&ytr, y);
    if denom.abs() < 1e-12 {
        return Err(Error::Spectral("degenerate 𝒴 truncation".into()));
    }
    let mu = grid.inner(&b, y) / denom;
    let mut z = b;
    z.axpy(-mu, &ytr);
    let lw = RadialField::from_fn(grid, |r| bubble::lambda_w(dim, r));
    let zw = grid.inner(&z, &lw);
    if zw <= 0.0 {
        return Err(Error::Spectral(format!(
            "⟨𝒵, ΛW⟩ = {zw} not positive; widen the bump"
        )));
    }
    Ok((z, zw))
}

// ---------------------------------------------------------------------------
// coercivity certificates
// ---------------------------------------------------------------------------

fn random_bump(rng: &mut ChaCha8Rng, grid: &RadialGrid, cmax: f64, wlo: f64, whi: f64) -> RadialField {
    let c = rng.gen_range(0.0..cmax);
    let w = rng.gen_range(wlo..whi);
    let a = rng.gen_range(0.5..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    RadialField::from_fn(grid, |r| a * (-((r - c) / w).powi(2)).exp())
}

// smallest eigenvalue of A x = θ B x on the span, dropping near-null B modes
fn min_generalized_eig(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<f64> {
    let eb = SymmetricEigen::new(b);
    let bmax = eb.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    if !(bmax > 0.0) {
        return Err(Error::Spectral("trial Gram matrix is null".into()));
    }
    let keep: Vec<usize> = (0..eb.eigenvalues.len())
        .filter(|&i| eb.eigenvalues[i] > 1e-10 * bmax)
        .collect();
    if keep.is_empty() {
        return Err(Error::Spectral("trial subspace collapsed".into()));
    }
    let n = a.nrows();
    let mut w = DMatrix::zeros(n, keep.len());
    for (jc, &j) in keep.iter().enumerate() {
        let s = eb.eigenvalues[j].sqrt().recip();
        for i in 0..n {
            w[(i, jc)] = eb.eigenvectors[(i, j)] * s;
        }
    }
    let m = w.transpose() * a * &w;
    let em = SymmetricEigen::new(m);
    Ok(em.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Minimum of [½⟨D²E(background)g, g⟩ + 2((a⁻)² + (a⁺)²)] / ‖g‖²_ℰ over the
/// span of `n_samples` random bump pairs with ⟨𝒵_λ̲, g_u⟩ = 0 enforced by
/// projection. Positive ⇒ coercivity certified on that subspace.
pub fn coercivity_certificate(
    grid: &RadialGrid,
    spec: &SpectralData,
    lam: f64,
    background: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(lam > 0.0 && lam.is_finite()) {
        return Err(Error::ScaleOutOfRange(lam, "coercivity_certificate".into()));
    }
    let dim = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zl = spec.z_l2_scaled(grid, lam);
    let zz = grid.inner(&zl, &zl);
    let yl = spec.y_l2_scaled(grid, lam);
    let pot: Vec<f64> = background.iter().map(|&b| nonlin::fp(dim, b)).collect();

    struct Trial {
        u: RadialField,
        du: Vec<f64>,
        ud: RadialField,
        am: f64,
        ap: f64,
    }
    let mut trials = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mut u = random_bump(&mut rng, grid, 8.0 * lam, 0.2 * lam, 2.0 * lam);
        let ud = random_bump(&mut rng, grid, 8.0 * lam, 0.2 * lam, 2.0 * lam);
        let proj = grid.inner(&zl, &u) / zz;
        u.axpy(-proj, &zl);
        let du = diff::gradient(grid, &u);
        let pu = grid.inner(&yl, &u);
        let pv = grid.inner(&yl, &ud);
        let s = spec.nu / lam * pu;
        trials.push(Trial {
            u,
            du,
            ud,
            am: 0.5 * (s - pv),
            ap: 0.5 * (s + pv),
        });
    }
    let k = trials.len();
    let mut a = DMatrix::zeros(k, k);
    let mut b = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let grad = grid.inner(&trials[i].du, &trials[j].du);
            let vel = grid.inner(&trials[i].ud, &trials[j].ud);
            let pterm: f64 = grid.integrate(
                &trials[i]
                    .u
                    .iter()
                    .zip(trials[j].u.iter())
                    .zip(pot.iter())
                    .map(|((&ui, &uj), &q)| q * ui * uj)
                    .collect::<Vec<_>>(),
            );
            let quad = 0.5 * (grad - pterm + vel)
                + 2.0 * (trials[i].am * trials[j].am + trials[i].ap * trials[j].ap);
            let gram = grad + vel;
            a[(i, j)] = quad;
            a[(j, i)] = quad;
            b[(i, j)] = gram;
            b[(j, i)] = gram;
        }
    }
    min_generalized_eig(a, b)
}

/// Minimum Rayleigh quotient ½⟨v, Lv⟩ / ‖v‖²_{Ḣ¹} over random fields with
/// ⟨𝒴, v⟩ = ⟨𝒵, v⟩ = 0 by projection (per-sample minimum, not the span).
pub fn prop21_constant(
    grid: &RadialGrid,
    spec: &SpectralData,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let dim = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zz = grid.inner(&spec.z, &spec.z);
    let w = RadialField::from_fn(grid, |r| bubble::ground_state(dim, r));
    let mut cl = f64::INFINITY;
    for _ in 0..n_samples {
        let mut v = random_bump(&mut rng, grid, 8.0, 0.2, 2.0);
        // ⟨𝒵, 𝒴⟩ = 0, so the two projections commute
        let py = grid.inner(&spec.y, &v);
        v.axpy(-py, &spec.y);
        let pz = grid.inner(&spec.z, &v) / zz;
        v.axpy(-pz, &spec.z);
        let g = StatePair {
            u: v,
            ud: RadialField::zeros(grid.len()),
        };
        let h1 = {
            let du = diff::gradient(grid, &g.u);
            grid.inner(&du, &du)
        };
        if h1 < 1e-14 {
            continue;
        }
        cl = cl.min(quadratic_form(grid, &w, &g) / h1);
    }
    if cl.is_finite() {
        Ok(cl)
    } else {
        Err(Error::Spectral("no usable trial fields".into()))
    }
}

// ---------------------------------------------------------------------------
// dense cross-validation oracle
// ---------------------------------------------------------------------------

/// Smallest eigenvalue and eigenvector of a symmetric tridiagonal matrix
/// (Sturm-count bisection + inverse iteration).
pub fn tridiag_smallest(diag: &[f64], off: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::GridMismatch("tridiagonal shape".into()));
    }
    let scale = diag
        .iter()
        .chain(off.iter())
        .fold(0.0_f64, |m, &v| m.max(v.abs()))
        .max(1.0);
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let b0 = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let b1 = if i < n - 1 { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - b0 - b1);
        hi = hi.max(diag[i] + b0 + b1);
    }
    // zero pivots (σ hitting a leading-minor eigenvalue) are clamped to
    // −pivmin BEFORE counting, else the Sturm count loses an entry and the
    // bisection predicate goes non-monotone
    let pivmin = 1e-20 * scale;
    let count_below = |sig: f64| -> usize {
        let mut cnt = 0;
        let mut d = 1.0;
        for i in 0..n {
            let b2 = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
            d = (diag[i] - sig) - b2 / d;
            if d.abs() < pivmin {
                d = -pivmin;
            }
            if d < 0.0 {
                cnt += 1;
            }
        }
        cnt
    };
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        if b - a < 1e-14 * scale {
            break;
        }
        let mid = 0.5 * (a + b);
        if count_below(mid) >= 1 {
            b = mid;
        } else {
            a = mid;
        }
    }
    let theta = 0.5 * (a + b);
    // shift from below keeps T − σI positive definite, so plain Thomas is stable
    let sig = theta - 1e-10 * scale;
    let mut x = vec![1.0; n];
    for _ in 0..4 {
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut den = diag[0] - sig;
        c[0] = if n > 1 { off[0] / den } else { 0.0 };
        d[0] = x[0] / den;
        for i in 1..n {
            den = (diag[i] - sig) - off[i - 1] * c[i - 1];
            if i < n - 1 {
                c[i] = off[i] / den;
            }
            d[i] = (x[i] - off[i - 1] * d[i - 1]) / den;
        }
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(nx > 0.0 && nx.is_finite()) {
            return Err(Error::Spectral("inverse iteration diverged".into()));
        }
        for v in &mut x {
            *v /= nx;
        }
    }
    if x.iter().sum::<f64>() < 0.0 {
        for v in &mut x {
            *v = -*v;
        }
    }
    // Rayleigh quotient of the iterated vector is quadratically more
    // accurate than the bisection bracket
    let mut rq = 0.0;
    for i in 0..n {
        rq += diag[i] * x[i] * x[i];
        if i + 1 < n {
            rq += 2.0 * off[i] * x[i] * x[i + 1];
        }
    }
    Ok((rq, x))
}

/// ν from a cell-centered finite-volume discretization of L with Dirichlet
/// data at rmax — an independent check on the shooting eigenvalue.
pub fn dense_ground(dim: usize, rmax: f64, h: f64) -> Result<(f64, Vec<f64>)> {
    crate::grid::check_dim(dim)?;
    let m = (rmax / h).round() as usize;
    if m < 16 {
        return Err(Error::TooCoarse("dense oracle needs more cells".into()));
    }
    let nd = dim as f64;
    let face = |i: usize| (i as f64 * h).powi(dim as i32 - 1) / h;
    let mass = |i: usize| ((i as f64 + 1.0) * h).powi(dim as i32) / nd
        - (i as f64 * h).powi(dim as i32) / nd;
    let mut diag = Vec::with_capacity(m);
    let mut off = Vec::with_capacity(m - 1);
    for i in 0..m {
        let r = (i as f64 + 0.5) * h;
        let mi = mass(i);
        diag.push((face(i) + face(i + 1)) / mi - linearized_potential(dim, r));
        if i + 1 < m {
            off.push(-face(i + 1) / (mi * mass(i + 1)).sqrt());
        }
    }
    let (theta, vec) = tridiag_smallest(&diag, &off)?;
    if theta >= 0.0 {
        return Err(Error::Spectral(
            "dense oracle found no negative eigenvalue".into(),
        ));
    }
    Ok(((-theta).sqrt(), vec))
}
