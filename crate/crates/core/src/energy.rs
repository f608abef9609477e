//! The conserved energy and its variations, the bubble–background interaction
//! expansion, the joint size functional n(g, λ), the b₁/b₂ pairing split, and
//! the Lyapunov quantities φ, φ_M.

use crate::bubble::{self, BubbleConfig};
use crate::diff::{energy_norm, gradient, radial_laplacian};
use crate::error::{Error, Result};
use crate::grid::{sphere_area, RadialField, RadialGrid, StatePair};
use crate::interp::{RadialInterpolant, Tail};
use crate::nonlin;

/// Labeled pieces of an energy evaluation.
#[derive(Clone, Debug, serde::Serialize)]
pub struct EnergyBreakdown {
    pub total: f64,
    pub kinetic: f64,
    pub dirichlet: f64,
    pub potential: f64,
    pub surface_term: f64,
    pub remainder_terms: Vec<(String, f64)>,
}

/// E(u, u̇) = ∫ ½|u̇|² + ½|∇u|² − F(u) dx with its three pieces.
pub fn energy(grid: &RadialGrid, s: &StatePair) -> EnergyBreakdown {
    let dim = grid.dim();
    let gu = gradient(grid, &s.u);
    let kinetic = 0.5 * grid.inner(&s.ud, &s.ud);
    let dirichlet = 0.5 * grid.inner(&gu, &gu);
    let fu: Vec<f64> = s.u.iter().map(|&v| nonlin::big_f(dim, v)).collect();
    let potential = grid.integrate(&fu);
    EnergyBreakdown {
        total: kinetic + dirichlet - potential,
        kinetic,
        dirichlet,
        potential,
        surface_term: 0.0,
        remainder_terms: Vec::new(),
    }
}

/// DE(u, u̇) = (−Δu − f(u), u̇), the L²×L² gradient of E.
pub fn de_residual(grid: &RadialGrid, s: &StatePair) -> StatePair {
    let dim = grid.dim();
    let lap = radial_laplacian(grid, &s.u);
    StatePair {
        u: RadialField(
            lap.iter()
                .zip(s.u.iter())
                .map(|(&l, &v)| -l - nonlin::f(dim, v))
                .collect(),
        ),
        ud: s.ud.clone(),
    }
}

/// ⟨(a, ȧ), (b, ḃ)⟩ = ∫ a·b + ȧ·ḃ dx, the pairing in which DE is the gradient.
pub fn pair_inner(grid: &RadialGrid, a: &StatePair, b: &StatePair) -> f64 {
    grid.inner(&a.u, &b.u) + grid.inner(&a.ud, &b.ud)
}

/// Stencil-consistent Dirichlet form −⟨u, Δu⟩.  Differs from ⟨∇u, ∇u⟩ by the
/// flux through the outer boundary, so the Pohozaev identity
/// dirichlet_form(W) = ∫f(W)W holds to stencil order on the truncated grid.
pub fn dirichlet_form(grid: &RadialGrid, u: &[f64]) -> f64 {
    let lap = radial_laplacian(grid, u);
    -grid.inner(u, &lap)
}

/// Joint size of the error and the interaction.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct SizePair {
    pub gnorm: f64,
    pub n: f64,
    pub lambda: f64,
    pub cstar: f64,
}

/// n(g, λ) = √(‖g‖²_ℰ + c*λ^{(N−2)/2}).
pub fn n_size(grid: &RadialGrid, g: &StatePair, lam: f64, cstar: f64) -> SizePair {
    let gnorm = energy_norm(grid, g);
    let nsq = gnorm * gnorm + cstar * lam.powf((grid.dim() as f64 - 2.0) / 2.0);
    SizePair {
        gnorm,
        n: nsq.max(0.0).sqrt(),
        lambda: lam,
        cstar,
    }
}

/// E(V(λ)+u*) − E(W_λ) − E(u*) with the term-by-term expansion: the
/// closed-form surface flux through the cut sphere, the Dirichlet excess of
/// the truncation, and the nonlinear potential mismatches.  The labeled
/// remainder terms sum back to `total` up to stencil error.
pub fn interaction_energy(
    grid: &RadialGrid,
    cfg: &BubbleConfig,
    lam: f64,
    ustar: &RadialField,
) -> Result<EnergyBreakdown> {
    grid.check_field(ustar)?;
    if grid.dim() != cfg.dim {
        return Err(Error::GridMismatch(format!(
            "grid dimension {} vs bubble dimension {}",
            grid.dim(),
            cfg.dim
        )));
    }
    let dim = grid.dim();
    let v = bubble::cutoff_bubble(grid, cfg, lam)?;
    let icut = bubble::cut_index(grid, cfg, lam);
    let sup_core = ustar[..=icut].iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    if sup_core > 2.0 * cfg.cstar {
        return Err(Error::ScaleOutOfRange(
            lam,
            format!(
                "|u*| reaches {sup_core:.3e} inside the cut sphere, above 2c* = {:.3e}",
                2.0 * cfg.cstar
            ),
        ));
    }

    let wl = RadialField::from_fn(grid, |r| bubble::ground_state_scaled(dim, lam, r));
    let gv = gradient(grid, &v);
    let gu = gradient(grid, ustar);
    let gwl = gradient(grid, &wl);

    // ½|∇(V+u*)|² − ½|∇W_λ|² − ½|∇u*|² expanded so the common bulk cancels
    let dirichlet_excess = 0.5 * (grid.inner(&gv, &gv) - grid.inner(&gwl, &gwl));
    let cross = grid.inner(&gv, &gu);
    let dirichlet = dirichlet_excess + cross;

    // F(V+u*) − F(W_λ) − F(u*), nodally zero outside the cut except −F(W_λ)
    let pot: Vec<f64> = (0..grid.len())
        .map(|i| {
            nonlin::big_f(dim, v[i] + ustar[i])
                - nonlin::big_f(dim, wl[i])
                - nonlin::big_f(dim, ustar[i])
        })
        .collect();
    let potential = grid.integrate(&pot);

    // ∫_{S(0,R√λ)} ∂_r(W_λ)·u* dσ collapses to one radius in radial symmetry
    let rc = cfg.cut_radius(lam);
    let iu = RadialInterpolant::new(grid.nodes().to_vec(), ustar.0.clone(), Tail::Zero);
    let surface = sphere_area(dim)
        * rc.powi(dim as i32 - 1)
        * bubble::ground_state_scaled_dr(dim, lam, rc)
        * iu.eval(rc);

    // −∫ F(V+u*) − F(W_λ) − F(u*) − f(V)u*  +  ∫_B (f(W_λ) − f(V))u*
    let pexc: Vec<f64> = (0..grid.len())
        .map(|i| pot[i] - nonlin::f(dim, v[i]) * ustar[i])
        .collect();
    let bulk: Vec<f64> = (0..grid.len())
        .map(|i| (nonlin::f(dim, wl[i]) - nonlin::f(dim, v[i])) * ustar[i])
        .collect();
    let potential_excess = -grid.integrate(&pexc) + grid.integrate_range(0, icut, &bulk);

    Ok(EnergyBreakdown {
        total: dirichlet - potential,
        kinetic: 0.0,
        dirichlet,
        potential,
        surface_term: surface,
        remainder_terms: vec![
            ("surface".into(), surface),
            ("dirichlet_excess".into(), dirichlet_excess),
            ("potential_excess".into(), potential_excess),
        ],
    })
}

/// b₁ = ⟨DE(u*), g⟩ and b₂ = ⟨DE(V(λ)+u*) − DE(u*), g⟩; the sum telescopes to
/// ⟨DE(V(λ)+u*), g⟩ by construction.
pub fn b_split(
    grid: &RadialGrid,
    ustar_state: &StatePair,
    g: &StatePair,
    lam: f64,
    cfg: &BubbleConfig,
) -> Result<(f64, f64)> {
    grid.check_field(&ustar_state.u)?;
    grid.check_field(&g.u)?;
    let dim = grid.dim();
    let b1 = pair_inner(grid, &de_residual(grid, ustar_state), g);
    let v = bubble::cutoff_bubble(grid, cfg, lam)?;
    let lv = radial_laplacian(grid, &v);
    // DE difference: velocity slots cancel, leaving −ΔV − f(V+u*) + f(u*)
    let diff: Vec<f64> = (0..grid.len())
        .map(|i| {
            -lv[i] - nonlin::f(dim, v[i] + ustar_state.u[i]) + nonlin::f(dim, ustar_state.u[i])
        })
        .collect();
    let b2 = grid.inner(&diff, &g.u);
    Ok((b1, b2))
}

/// φ̃ = C_I c*λ^{(N−2)/2} − b₁, the a±-free Lyapunov quantity used in audits.
pub fn lyapunov_phi_tilde(cfg: &BubbleConfig, c_i: f64, lam: f64, b1: f64) -> f64 {
    c_i * cfg.cstar * lam.powf((cfg.dim as f64 - 2.0) / 2.0) - b1
}

/// φ = C_I c*λ^{(N−2)/2} − b₁ + 2((a⁻)² + (a⁺)²).
pub fn lyapunov_phi(
    cfg: &BubbleConfig,
    c_i: f64,
    lam: f64,
    b1: f64,
    aminus: f64,
    aplus: f64,
) -> f64 {
    lyapunov_phi_tilde(cfg, c_i, lam, b1) + 2.0 * (aminus * aminus + aplus * aplus)
}

/// φ_M(tᵢ) = max_{j ≥ i} φ(tⱼ), the running tail supremum (nonincreasing).
pub fn phi_sup_tail(phi: &[f64]) -> Vec<f64> {
    let mut out = phi.to_vec();
    for i in (0..out.len().saturating_sub(1)).rev() {
        out[i] = out[i].max(out[i + 1]);
    }
    out
}

/// Smallest power of 2 making C_I c*λ^{(N−2)/2} + interaction ≥ ½c*λ^{(N−2)/2}
/// across the given scales.
pub fn select_c_i(
    grid: &RadialGrid,
    cfg: &BubbleConfig,
    ustar: &RadialField,
    lambdas: &[f64],
) -> Result<f64> {
    let p = (cfg.dim as f64 - 2.0) / 2.0;
    let mut need: f64 = 0.0;
    for &lam in lambdas {
        let ie = interaction_energy(grid, cfg, lam, ustar)?.total;
        need = need.max(0.5 - ie / (cfg.cstar * lam.powf(p)));
    }
    let mut ci = 1.0;
    while ci < need {
        ci *= 2.0;
    }
    Ok(ci)
}
