//! The ground state W, its rescalings, the scaling generators Λ_s, and the
//! truncated bubble V(λ) that vanishes at radius R√λ.

use crate::diff::gradient;
use crate::error::{Error, Result};
use crate::grid::{check_dim, RadialField, RadialGrid, StatePair};
use crate::interp::{RadialInterpolant, Tail};

/// W(r) = (1 + r²/(N(N−2)))^{−(N−2)/2}, the radial stationary profile with
/// ΔW + f(W) = 0.
pub fn ground_state(dim: usize, r: f64) -> f64 {
    let c = (dim * (dim - 2)) as f64;
    let base = 1.0 + r * r / c;
    match dim {
        3 => 1.0 / base.sqrt(),
        4 => 1.0 / base,
        5 => base.powf(-1.5),
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// W'(r) = −(r/N)(1 + r²/(N(N−2)))^{−N/2}.
pub fn ground_state_dr(dim: usize, r: f64) -> f64 {
    let nd = dim as f64;
    let c = (dim * (dim - 2)) as f64;
    let base = 1.0 + r * r / c;
    -(r / nd) * base.powf(-nd / 2.0)
}

/// ΛW = (N/2 − 1)W + rW', the generator of the Ḣ¹-invariant scaling at W.
pub fn lambda_w(dim: usize, r: f64) -> f64 {
    (dim as f64 / 2.0 - 1.0) * ground_state(dim, r) + r * ground_state_dr(dim, r)
}

/// Ḣ¹-critical rescaling of the ground state: W_λ(r) = λ^{−(N−2)/2} W(r/λ).
pub fn ground_state_scaled(dim: usize, lam: f64, r: f64) -> f64 {
    lam.powf(-((dim - 2) as f64) / 2.0) * ground_state(dim, r / lam)
}

/// d/dr W_λ(r).
pub fn ground_state_scaled_dr(dim: usize, lam: f64, r: f64) -> f64 {
    lam.powf(-(dim as f64) / 2.0) * ground_state_dr(dim, r / lam)
}

/// L²-critical rescaling of ΛW: (ΛW)_λ̲(r) = λ^{−N/2} (ΛW)(r/λ).
pub fn lambda_w_l2_scaled(dim: usize, lam: f64, r: f64) -> f64 {
    lam.powf(-(dim as f64) / 2.0) * lambda_w(dim, r / lam)
}

/// Λ_s f = (N/2 − s) f + r f' applied to grid samples.
pub fn lambda_generator(grid: &RadialGrid, f: &[f64], s: f64) -> RadialField {
    let df = gradient(grid, f);
    let c = grid.dim() as f64 / 2.0 - s;
    RadialField(
        grid.nodes()
            .iter()
            .zip(f.iter().zip(df))
            .map(|(&r, (&v, dv))| c * v + r * dv)
            .collect(),
    )
}

/// Bubble truncation parameters.  The cut radius factor R obeys
/// R^{−(N−2)} = c0·c*, so smaller interaction budgets c0·c* push the cut
/// farther out.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BubbleConfig {
    pub dim: usize,
    pub c0: f64,
    pub cstar: f64,
}

impl BubbleConfig {
    pub fn new(dim: usize, c0: f64, cstar: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(c0 > 0.0) || !(cstar > 0.0) || !(c0 * cstar < 1.0) {
            return Err(Error::Config(format!(
                "need c0 > 0, cstar > 0, c0·cstar < 1 (got c0 = {c0}, cstar = {cstar})"
            )));
        }
        Ok(BubbleConfig { dim, c0, cstar })
    }

    /// R = (c0·c*)^{−1/(N−2)} > 1.
    pub fn cut_factor(&self) -> f64 {
        (self.c0 * self.cstar).powf(-1.0 / (self.dim - 2) as f64)
    }

    /// Cut radius R√λ of the truncated bubble.
    pub fn cut_radius(&self, lam: f64) -> f64 {
        self.cut_factor() * lam.sqrt()
    }

    fn check_scale(&self, grid: &RadialGrid, lam: f64) -> Result<()> {
        if !(lam > 0.0) || !lam.is_finite() {
            return Err(Error::ScaleOutOfRange(lam, "scale must be positive".into()));
        }
        let rc = self.cut_radius(lam);
        if rc > grid.rmax() {
            return Err(Error::ScaleOutOfRange(
                lam,
                format!("cut radius {rc:.3} exceeds grid rmax {}", grid.rmax()),
            ));
        }
        Ok(())
    }
}

/// ζ(λ) = W_λ(R√λ) = (λ + R²/(N(N−2)))^{−(N−2)/2}, the vertical shift that
/// makes the truncated bubble vanish at the cut.
pub fn zeta(cfg: &BubbleConfig, lam: f64) -> f64 {
    let rr = cfg.cut_factor().powi(2) / (cfg.dim * (cfg.dim - 2)) as f64;
    (lam + rr).powf(-((cfg.dim - 2) as f64) / 2.0)
}

/// dζ/dλ = −((N−2)/2)(λ + R²/(N(N−2)))^{−N/2}.
pub fn zeta_dlam(cfg: &BubbleConfig, lam: f64) -> f64 {
    let rr = cfg.cut_factor().powi(2) / (cfg.dim * (cfg.dim - 2)) as f64;
    -((cfg.dim - 2) as f64 / 2.0) * (lam + rr).powf(-(cfg.dim as f64) / 2.0)
}

/// Index of the cut: largest node with r_i ≤ R√λ.
pub fn cut_index(grid: &RadialGrid, cfg: &BubbleConfig, lam: f64) -> usize {
    grid.index_at(cfg.cut_radius(lam))
}

/// V(λ) = (W_λ − ζ(λ))_+ sampled on the grid: equals W_λ − ζ inside the cut
/// sphere and 0 outside (continuous across the cut).
pub fn cutoff_bubble(grid: &RadialGrid, cfg: &BubbleConfig, lam: f64) -> Result<RadialField> {
    cfg.check_scale(grid, lam)?;
    let z = zeta(cfg, lam);
    Ok(RadialField(
        grid.nodes()
            .iter()
            .map(|&r| (ground_state_scaled(cfg.dim, lam, r) - z).max(0.0))
            .collect(),
    ))
}

/// ∂_λ V(λ) = −(ΛW)_λ̲ − ζ'(λ) inside the cut sphere, 0 outside.
pub fn cutoff_bubble_dlambda(
    grid: &RadialGrid,
    cfg: &BubbleConfig,
    lam: f64,
) -> Result<RadialField> {
    cfg.check_scale(grid, lam)?;
    let icut = cut_index(grid, cfg, lam);
    let zd = zeta_dlam(cfg, lam);
    Ok(RadialField(
        grid.nodes()
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                if i <= icut {
                    -lambda_w_l2_scaled(cfg.dim, lam, r) - zd
                } else {
                    0.0
                }
            })
            .collect(),
    ))
}

/// Rescale a state by λ: u ↦ λ^{−(N−2)/2} u(·/λ) (Ḣ¹-critical) and
/// u̇ ↦ λ^{−N/2} u̇(·/λ) (L²-critical), resampled onto the same grid.
/// Off-grid arguments r/λ > rmax use an anchored power-law tail, which keeps
/// the energy of slowly decaying profiles (W in particular) intact.
pub fn scale_state(grid: &RadialGrid, s: &StatePair, lam: f64) -> Result<StatePair> {
    if !(lam > 0.0) || !lam.is_finite() {
        return Err(Error::ScaleOutOfRange(lam, "scale must be positive".into()));
    }
    grid.check_field(&s.u)?;
    grid.check_field(&s.ud)?;
    let nd = grid.dim() as f64;
    let iu = RadialInterpolant::new(
        grid.nodes().to_vec(),
        s.u.0.clone(),
        Tail::Power { expo: nd - 2.0 },
    );
    let iv = RadialInterpolant::new(
        grid.nodes().to_vec(),
        s.ud.0.clone(),
        Tail::Power { expo: nd },
    );
    let cu = lam.powf(-(nd - 2.0) / 2.0);
    let cv = lam.powf(-nd / 2.0);
    Ok(StatePair {
        u: RadialField(grid.nodes().iter().map(|&r| cu * iu.eval(r / lam)).collect()),
        ud: RadialField(grid.nodes().iter().map(|&r| cv * iv.eval(r / lam)).collect()),
    })
}
