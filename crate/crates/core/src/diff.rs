//! Finite-difference stencils on arbitrary radial nodes.
//!
//! Derivatives come from a quartic fit through the five nearest nodes, with
//! even reflection across r = 0 (radial regularity) and one-sided windows at
//! the outer boundary.  On the smooth graded grid this is 4th-order accurate;
//! the radial Laplacian uses Δf(0) = N f''(0) at the origin.

use crate::grid::RadialGrid;

const STENCIL: usize = 5;

/// Solve the 5×5 Vandermonde system for derivative weights at `xc` from nodes
/// `xs`, in coordinates scaled by `hs` for conditioning.  Returns weights for
/// the first and second derivative.
fn derivative_weights(xs: &[f64; STENCIL], xc: f64, hs: f64) -> ([f64; STENCIL], [f64; STENCIL]) {
    // a[m][j] = ((xs[j]-xc)/hs)^m ; solve a · c = e_m with two right-hand sides
    let mut a = [[0.0f64; STENCIL]; STENCIL];
    for j in 0..STENCIL {
        let t = (xs[j] - xc) / hs;
        let mut p = 1.0;
        for row in a.iter_mut() {
            row[j] = p;
            p *= t;
        }
    }
    // rhs for d/dx: p_m'(xc) = δ_{m1}/hs ; for d²/dx²: 2 δ_{m2}/hs²
    let mut rhs = [[0.0f64; 2]; STENCIL];
    rhs[1][0] = 1.0 / hs;
    rhs[2][1] = 2.0 / (hs * hs);
    // gaussian elimination with partial pivoting
    for col in 0..STENCIL {
        let mut piv = col;
        for row in col + 1..STENCIL {
            if a[row][col].abs() > a[piv][col].abs() {
                piv = row;
            }
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        let d = a[col][col];
        for row in col + 1..STENCIL {
            let m = a[row][col] / d;
            if m == 0.0 {
                continue;
            }
            for k in col..STENCIL {
                a[row][k] -= m * a[col][k];
            }
            rhs[row][0] -= m * rhs[col][0];
            rhs[row][1] -= m * rhs[col][1];
        }
    }
    let mut c1 = [0.0f64; STENCIL];
    let mut c2 = [0.0f64; STENCIL];
    for row in (0..STENCIL).rev() {
        let (mut s1, mut s2) = (rhs[row][0], rhs[row][1]);
        for k in row + 1..STENCIL {
            s1 -= a[row][k] * c1[k];
            s2 -= a[row][k] * c2[k];
        }
        c1[row] = s1 / a[row][row];
        c2[row] = s2 / a[row][row];
    }
    (c1, c2)
}

/// Node of the even extension: e ≥ 0 is grid node e; e < 0 mirrors across 0.
fn ext(grid: &RadialGrid, e: isize) -> (f64, usize) {
    let r = grid.nodes();
    if e >= 0 {
        (r[e as usize], e as usize)
    } else if r[0] == 0.0 {
        let j = (-e) as usize;
        (-r[j], j)
    } else {
        let j = (-e - 1) as usize;
        (-r[j], j)
    }
}

fn window(grid: &RadialGrid, i: usize) -> [(f64, usize); STENCIL] {
    let n = grid.len() as isize;
    let i = i as isize;
    // centered window, shifted left at the outer boundary (mirroring covers the origin)
    let lo = (i - 2).min(n - STENCIL as isize);
    let mut out = [(0.0, 0usize); STENCIL];
    for (k, o) in out.iter_mut().enumerate() {
        *o = ext(grid, lo + k as isize);
    }
    out
}

/// Radial derivative f'(r) at every node.
pub fn gradient(grid: &RadialGrid, f: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let w = window(grid, i);
        let xs = [w[0].0, w[1].0, w[2].0, w[3].0, w[4].0];
        let hs = (xs[STENCIL - 1] - xs[0]).abs().max(f64::MIN_POSITIVE);
        let (c1, _) = derivative_weights(&xs, grid.nodes()[i], hs);
        out[i] = (0..STENCIL).map(|k| c1[k] * f[w[k].1]).sum();
    }
    // exact symmetry at the origin node
    if grid.nodes()[0] == 0.0 {
        out[0] = 0.0;
    }
    out
}

/// Radial Laplacian Δf = f'' + (N−1)/r f' at every node, with the regularity
/// value N f''(0) at r = 0.
pub fn radial_laplacian(grid: &RadialGrid, f: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let nd = grid.dim() as f64;
    let r = grid.nodes();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let w = window(grid, i);
        let xs = [w[0].0, w[1].0, w[2].0, w[3].0, w[4].0];
        let hs = (xs[STENCIL - 1] - xs[0]).abs().max(f64::MIN_POSITIVE);
        let (c1, c2) = derivative_weights(&xs, r[i], hs);
        let d1: f64 = (0..STENCIL).map(|k| c1[k] * f[w[k].1]).sum();
        let d2: f64 = (0..STENCIL).map(|k| c2[k] * f[w[k].1]).sum();
        out[i] = if r[i] == 0.0 {
            nd * d2
        } else {
            d2 + (nd - 1.0) / r[i] * d1
        };
    }
    out
}

/// ‖∇u‖²_{L²} + ‖u̇‖²_{L²} — the squared energy norm of a state pair.
pub fn energy_norm_sq(grid: &RadialGrid, s: &crate::grid::StatePair) -> f64 {
    let gu = gradient(grid, &s.u);
    grid.inner(&gu, &gu) + grid.inner(&s.ud, &s.ud)
}

/// ‖(u, u̇)‖_ℰ = √(∫|∇u|² + ∫|u̇|²).
pub fn energy_norm(grid: &RadialGrid, s: &crate::grid::StatePair) -> f64 {
    energy_norm_sq(grid, s).max(0.0).sqrt()
}
