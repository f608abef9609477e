//! Cubic interpolation of radial samples with explicit tail models, used to
//! evaluate fields at off-node radii (rescalings v(r/λ) in particular).

/// Behavior for query radii beyond the last sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tail {
    Zero,
    /// y(r) = y_end · (r_end / r)^expo — anchored power-law decay.
    Power { expo: f64 },
    /// y(r) = y_end · e^{−rate (r − r_end)} — anchored exponential decay.
    Exp { rate: f64 },
}

#[derive(Clone, Debug)]
pub struct RadialInterpolant {
    x: Vec<f64>,
    y: Vec<f64>,
    tail: Tail,
}

impl RadialInterpolant {
    pub fn new(x: Vec<f64>, y: Vec<f64>, tail: Tail) -> Self {
        assert_eq!(x.len(), y.len());
        assert!(x.len() >= 4, "need at least 4 samples for cubic windows");
        debug_assert!(x.windows(2).all(|p| p[1] > p[0]));
        RadialInterpolant { x, y, tail }
    }

    pub fn from_fn(x: Vec<f64>, f: impl Fn(f64) -> f64, tail: Tail) -> Self {
        let y = x.iter().map(|&r| f(r)).collect();
        Self::new(x, y, tail)
    }

    pub fn x_end(&self) -> f64 {
        *self.x.last().unwrap()
    }

    /// Multiply all sample values (e.g. for normalization).
    pub fn scale(&mut self, c: f64) {
        for v in &mut self.y {
            *v *= c;
        }
    }

    /// Evaluate at r ≥ 0 (cubic Lagrange on the four nearest samples; tail
    /// model beyond the last one).
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        let n = self.x.len();
        let xe = self.x[n - 1];
        if r > xe {
            let ye = self.y[n - 1];
            return match self.tail {
                Tail::Zero => 0.0,
                Tail::Power { expo } => ye * (xe / r).powf(expo),
                Tail::Exp { rate } => ye * (-(rate) * (r - xe)).exp(),
            };
        }
        let j = self.x.partition_point(|&v| v <= r);
        if j < 2 && self.x[0] == 0.0 {
            // radial profiles are even in r, so mirror one sample across the
            // origin instead of using a lopsided edge window
            let xs = [-self.x[1], 0.0, self.x[1], self.x[2]];
            let ys = [self.y[1], self.y[0], self.y[1], self.y[2]];
            return lagrange4(&xs, &ys, r);
        }
        let lo = j.saturating_sub(2).min(n - 4);
        lagrange4(
            self.x[lo..lo + 4].try_into().unwrap(),
            self.y[lo..lo + 4].try_into().unwrap(),
            r,
        )
    }
}

fn lagrange4(xs: &[f64; 4], ys: &[f64; 4], r: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..4 {
        let mut l = ys[k];
        for m in 0..4 {
            if m != k {
                l *= (r - xs[m]) / (xs[k] - xs[m]);
            }
        }
        acc += l;
    }
    acc
}
