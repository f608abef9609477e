//! The focusing energy-critical nonlinearity f(u) = |u|^{4/(N−2)} u, its
//! antiderivative F, derivatives, and the smooth small-amplitude
//! regularization f_n(u) = (1 − χ(nu)) f(u).

/// f(u) = |u|^{4/(N−2)} u.
pub fn f(dim: usize, u: f64) -> f64 {
    match dim {
        3 => {
            let u2 = u * u;
            u2 * u2 * u
        }
        4 => u * u * u,
        5 => u.abs().powf(4.0 / 3.0) * u,
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// F(u) = ((N−2)/2N) |u|^{2N/(N−2)}, the antiderivative of f with F(0) = 0.
pub fn big_f(dim: usize, u: f64) -> f64 {
    match dim {
        3 => {
            let u2 = u * u;
            u2 * u2 * u2 / 6.0
        }
        4 => {
            let u2 = u * u;
            0.25 * u2 * u2
        }
        5 => 0.3 * u.abs().powf(10.0 / 3.0),
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// f'(u) = ((N+2)/(N−2)) |u|^{4/(N−2)}.
pub fn fp(dim: usize, u: f64) -> f64 {
    match dim {
        3 => {
            let u2 = u * u;
            5.0 * u2 * u2
        }
        4 => 3.0 * u * u,
        5 => 7.0 / 3.0 * u.abs().powf(4.0 / 3.0),
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// f''(u) (sign-safe for the fractional power at N = 5).
pub fn fpp(dim: usize, u: f64) -> f64 {
    match dim {
        3 => 20.0 * u * u * u,
        4 => 6.0 * u,
        5 => 28.0 / 9.0 * u.abs().powf(1.0 / 3.0) * u.signum(),
        _ => panic!("unsupported dimension {dim}"),
    }
}

fn bump_edge(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth even cutoff: χ = 1 on |x| ≤ 1, χ = 0 on |x| ≥ 2, C^∞ in between
/// and monotone on [1, 2].
pub fn chi(x: f64) -> f64 {
    let t = x.abs();
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        let a = bump_edge(2.0 - t);
        let b = bump_edge(t - 1.0);
        a / (a + b)
    }
}

/// dχ/dx.
pub fn chi_d(x: f64) -> f64 {
    let t = x.abs();
    if !(1.0..2.0).contains(&t) {
        return 0.0;
    }
    let a = bump_edge(2.0 - t);
    let b = bump_edge(t - 1.0);
    // a' = -a/(2-t)², b' = b/(t-1)² in the variable t
    let ap = -a / ((2.0 - t) * (2.0 - t));
    let bp = b / ((t - 1.0) * (t - 1.0));
    let dt = (ap * b - a * bp) / ((a + b) * (a + b));
    dt * x.signum()
}

/// Regularized nonlinearity f_n(u) = (1 − χ(n·u)) f(u): vanishes for
/// |u| ≤ 1/n, equals f for |u| ≥ 2/n, and increases to f pointwise in n.
pub fn f_reg(dim: usize, n: f64, u: f64) -> f64 {
    (1.0 - chi(n * u)) * f(dim, u)
}
