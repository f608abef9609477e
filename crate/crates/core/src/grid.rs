//! Radial grids and quadrature for integrals ∫_{ℝ^N} φ(|x|) dx, N ∈ {3,4,5}.
//!
//! Two node layouts are used throughout:
//! * a graded grid r(s) = b(e^{as} − 1) (near-uniform at the origin, geometric
//!   toward `rmax`) for elliptic/spectral/energy work, with weights exact for
//!   piecewise-quadratic integrands against r^{N−1} dr;
//! * a uniform grid with exact cell masses for the conservative wave stepper.

use crate::error::{Error, Result};
use std::io::{BufRead, Write};
use std::ops::{Deref, DerefMut};

pub const DEFAULT_RMAX: f64 = 200.0;
pub const DEFAULT_NODES: usize = 8192;
pub const DEFAULT_STRETCH: f64 = 18.0;

/// Surface area of the unit sphere S^{N−1}.
pub fn sphere_area(dim: usize) -> f64 {
    use std::f64::consts::PI;
    match dim {
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        5 => 8.0 * PI * PI / 3.0,
        _ => panic!("unsupported dimension {dim}"),
    }
}

pub fn check_dim(dim: usize) -> Result<()> {
    if matches!(dim, 3..=5) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// Volume of the ball B(0, a) in ℝ^N.
pub fn ball_volume(dim: usize, a: f64) -> f64 {
    sphere_area(dim) * a.powi(dim as i32) / dim as f64
}

#[derive(Clone, Debug, PartialEq)]
pub enum GridKind {
    Uniform { h: f64 },
    Graded { stretch: f64 },
    Custom,
}

#[derive(Clone, Debug)]
pub struct RadialGrid {
    dim: usize,
    r: Vec<f64>,
    w: Vec<f64>,
    kind: GridKind,
}

/// Scalar samples at the nodes of a [`RadialGrid`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RadialField(pub Vec<f64>);

impl Deref for RadialField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for RadialField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl RadialField {
    pub fn zeros(n: usize) -> Self {
        RadialField(vec![0.0; n])
    }

    pub fn from_fn(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        RadialField(grid.nodes().iter().map(|&r| f(r)).collect())
    }

    pub fn from_fn_indexed(grid: &RadialGrid, f: impl Fn(usize, f64) -> f64) -> Self {
        RadialField(
            grid.nodes()
                .iter()
                .enumerate()
                .map(|(i, &r)| f(i, r))
                .collect(),
        )
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// self += c * other
    pub fn axpy(&mut self, c: f64, other: &RadialField) {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a += c * b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for a in &mut self.0 {
            *a *= c;
        }
    }
}

/// (position, velocity) pair: the Ḣ¹ × L² state of the wave equation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StatePair {
    pub u: RadialField,
    pub ud: RadialField,
}

impl StatePair {
    pub fn zeros(n: usize) -> Self {
        StatePair {
            u: RadialField::zeros(n),
            ud: RadialField::zeros(n),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.u.all_finite() && self.ud.all_finite()
    }

    pub fn axpy(&mut self, c: f64, other: &StatePair) {
        self.u.axpy(c, &other.u);
        self.ud.axpy(c, &other.ud);
    }
}

/// Weights of the quadratic Lagrange basis on nodes (x0,x1,x2) integrated over
/// [lo,hi] ⊆ [x0,x2] against r^{dim−1} dr.  Everything is expanded about the
/// middle node so large radii do not cancel catastrophically.
fn panel_weights(dim: usize, xs: [f64; 3], lo: f64, hi: f64) -> [f64; 3] {
    let [x0, x1, x2] = xs;
    let d = [x0 - x1, 0.0, x2 - x1];
    // binomial coefficients of (x1 + ρ)^{dim-1}
    let nm1 = dim - 1;
    let mut binom = [0.0f64; 5];
    for (k, b) in binom.iter_mut().enumerate().take(nm1 + 1) {
        let mut c = 1.0;
        for j in 0..k {
            c *= (nm1 - j) as f64 / (j + 1) as f64;
        }
        *b = c * x1.powi((nm1 - k) as i32);
    }
    // moments M_m = ∫ ρ^m dρ over [lo-x1, hi-x1] for m = 0..=nm1+2
    let (a, b) = (lo - x1, hi - x1);
    let mut mom = [0.0f64; 7];
    let (mut pa, mut pb) = (a, b);
    for (m, mm) in mom.iter_mut().enumerate().take(nm1 + 3) {
        *mm = (pb - pa) / (m + 1) as f64;
        pa *= a;
        pb *= b;
    }
    let mut out = [0.0; 3];
    for j in 0..3 {
        let (da, db) = match j {
            0 => (d[1], d[2]),
            1 => (d[0], d[2]),
            _ => (d[0], d[1]),
        };
        let denom = (d[j] - da) * (d[j] - db);
        // ℓ_j(ρ) = (ρ² − (da+db)ρ + da·db)/denom
        let (ca, cb, cc) = (1.0 / denom, -(da + db) / denom, da * db / denom);
        let mut s = 0.0;
        for (k, &bk) in binom.iter().enumerate().take(nm1 + 1) {
            s += bk * (ca * mom[k + 2] + cb * mom[k + 1] + cc * mom[k]);
        }
        out[j] = s;
    }
    out
}

/// Piecewise-quadratic quadrature weights against |S^{N−1}| r^{N−1} dr on
/// arbitrary ascending nodes; the trailing odd interval reuses the last triple.
fn quadratic_weights(dim: usize, r: &[f64]) -> Vec<f64> {
    let n = r.len();
    assert!(n >= 3, "need at least 3 nodes");
    let mut w = vec![0.0; n];
    let mut i = 0;
    while i + 2 < n {
        let xs = [r[i], r[i + 1], r[i + 2]];
        let pw = panel_weights(dim, xs, r[i], r[i + 2]);
        w[i] += pw[0];
        w[i + 1] += pw[1];
        w[i + 2] += pw[2];
        i += 2;
    }
    if i + 1 < n {
        // one interval left: integrate the quadratic on the last triple over it
        let xs = [r[n - 3], r[n - 2], r[n - 1]];
        let pw = panel_weights(dim, xs, r[n - 2], r[n - 1]);
        w[n - 3] += pw[0];
        w[n - 2] += pw[1];
        w[n - 1] += pw[2];
    }
    let area = sphere_area(dim);
    for wi in &mut w {
        *wi *= area;
    }
    w
}

impl RadialGrid {
    /// Graded grid r(s) = b(e^{a s} − 1), s uniform on [0,1], b = rmax/(e^a − 1).
    pub fn graded(dim: usize, rmax: f64, n: usize, stretch: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(rmax > 0.0) || n < 8 || !(stretch > 0.0) {
            return Err(Error::Config(format!(
                "graded grid needs rmax > 0, n >= 8, stretch > 0 (got {rmax}, {n}, {stretch})"
            )));
        }
        let b = rmax / (stretch.exp() - 1.0);
        let mut r: Vec<f64> = (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                b * ((stretch * s).exp() - 1.0)
            })
            .collect();
        r[0] = 0.0;
        *r.last_mut().unwrap() = rmax;
        let w = quadratic_weights(dim, &r);
        Ok(RadialGrid {
            dim,
            r,
            w,
            kind: GridKind::Graded { stretch },
        })
    }

    /// Default analysis grid.
    pub fn default_graded(dim: usize) -> Result<Self> {
        Self::graded(dim, DEFAULT_RMAX, DEFAULT_NODES, DEFAULT_STRETCH)
    }

    /// Uniform grid r_i = i·h with exact cell masses as weights
    /// (w_i = |S^{N−1}| ∫_cell r^{N−1} dr).  Matches the conservative stencil
    /// of the wave stepper.
    pub fn uniform(dim: usize, rmax: f64, n: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(rmax > 0.0) || n < 8 {
            return Err(Error::Config(format!(
                "uniform grid needs rmax > 0 and n >= 8 (got {rmax}, {n})"
            )));
        }
        let h = rmax / (n - 1) as f64;
        let r: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let area = sphere_area(dim);
        let p = dim as f64;
        let w: Vec<f64> = (0..n)
            .map(|i| {
                let lo = (i as f64 - 0.5).max(0.0) * h;
                let hi = ((i as f64 + 0.5) * h).min(rmax);
                area * (hi.powf(p) - lo.powf(p)) / p
            })
            .collect();
        Ok(RadialGrid {
            dim,
            r,
            w,
            kind: GridKind::Uniform { h },
        })
    }

    /// Grid on caller-supplied ascending nodes (e.g. loaded from CSV).
    pub fn from_nodes(dim: usize, nodes: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if nodes.len() < 3 {
            return Err(Error::TooCoarse("need at least 3 nodes".into()));
        }
        if nodes[0] < 0.0 || nodes.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Config("nodes must be ascending and >= 0".into()));
        }
        let w = quadratic_weights(dim, &nodes);
        if w.iter().any(|&wi| !(wi > 0.0)) {
            return Err(Error::Config(
                "node layout produces non-positive quadrature weights".into(),
            ));
        }
        Ok(RadialGrid {
            dim,
            r: nodes,
            w,
            kind: GridKind::Custom,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.r
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn rmax(&self) -> f64 {
        *self.r.last().unwrap()
    }

    pub fn kind(&self) -> &GridKind {
        &self.kind
    }

    /// Spacing of the innermost cell (the resolution floor near the origin).
    pub fn inner_spacing(&self) -> f64 {
        self.r[1] - self.r[0]
    }

    pub fn check_field(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::GridMismatch(format!(
                "field has {} values, grid has {} nodes",
                f.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// Largest index i with r_i ≤ radius.
    pub fn index_at(&self, radius: f64) -> usize {
        match self.r.partition_point(|&x| x <= radius) {
            0 => 0,
            k => k - 1,
        }
    }

    /// Σ w_i f_i ≈ ∫_{ℝ^N} f(|x|) dx.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        self.w.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// L²(ℝ^N) inner product of two node samplings.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.len());
        debug_assert_eq!(b.len(), self.len());
        self.w
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).max(0.0).sqrt()
    }

    /// ∫ over the radial range [r_{i0}, r_{i1}] (node-aligned, re-paneled so a
    /// cut at an odd node costs no accuracy).
    pub fn integrate_range(&self, i0: usize, i1: usize, f: &[f64]) -> f64 {
        debug_assert!(i0 <= i1 && i1 < self.len());
        if i1 - i0 < 2 {
            if i1 == i0 {
                return 0.0;
            }
            // single interval: quadratic on the closest triple
            let a = if i0 + 2 < self.len() { i0 } else { i0 - 1 };
            let xs = [self.r[a], self.r[a + 1], self.r[a + 2]];
            let pw = panel_weights(self.dim, xs, self.r[i0], self.r[i1]);
            return sphere_area(self.dim)
                * (pw[0] * f[a] + pw[1] * f[a + 1] + pw[2] * f[a + 2]);
        }
        let mut total = 0.0;
        let mut i = i0;
        while i + 2 <= i1 {
            let xs = [self.r[i], self.r[i + 1], self.r[i + 2]];
            let pw = panel_weights(self.dim, xs, self.r[i], self.r[i + 2]);
            total += pw[0] * f[i] + pw[1] * f[i + 1] + pw[2] * f[i + 2];
            i += 2;
        }
        if i < i1 {
            let xs = [self.r[i1 - 2], self.r[i1 - 1], self.r[i1]];
            let pw = panel_weights(self.dim, xs, self.r[i1 - 1], self.r[i1]);
            total += pw[0] * f[i1 - 2] + pw[1] * f[i1 - 1] + pw[2] * f[i1];
        }
        total * sphere_area(self.dim)
    }

    /// Partial mass Σ_{r_i ≤ a} w_i — approximates vol B(0,a).
    pub fn partial_ball_mass(&self, a: f64) -> f64 {
        self.r
            .iter()
            .zip(&self.w)
            .take_while(|(r, _)| **r <= a)
            .map(|(_, w)| w)
            .sum()
    }

    // ---- CSV ----

    /// Two-column CSV `r,weight` (RFC 4180 line endings).
    pub fn to_csv(&self, mut out: impl Write) -> Result<()> {
        write!(out, "r,weight\r\n")?;
        for (r, w) in self.r.iter().zip(&self.w) {
            write!(out, "{r},{w}\r\n")?;
        }
        Ok(())
    }

    /// Two-column CSV `r,value` for a field on this grid.
    pub fn field_to_csv(&self, f: &[f64], mut out: impl Write) -> Result<()> {
        self.check_field(f)?;
        write!(out, "r,value\r\n")?;
        for (r, v) in self.r.iter().zip(f) {
            write!(out, "{r},{v}\r\n")?;
        }
        Ok(())
    }
}

/// Parse a two-column CSV with a header into column vectors.
pub fn two_column_csv(reader: impl BufRead) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if lineno == 0 || line.is_empty() {
            continue; // header
        }
        let mut parts = line.split(',');
        let (x, y) = (parts.next(), parts.next());
        match (x, y) {
            (Some(x), Some(y)) => {
                let xv: f64 = x
                    .trim()
                    .parse()
                    .map_err(|_| Error::Csv(format!("line {}: bad number {x:?}", lineno + 1)))?;
                let yv: f64 = y
                    .trim()
                    .parse()
                    .map_err(|_| Error::Csv(format!("line {}: bad number {y:?}", lineno + 1)))?;
                a.push(xv);
                b.push(yv);
            }
            _ => return Err(Error::Csv(format!("line {}: expected two columns", lineno + 1))),
        }
    }
    if a.is_empty() {
        return Err(Error::Csv("no data rows".into()));
    }
    Ok((a, b))
}
