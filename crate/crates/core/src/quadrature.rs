//! Double-precision quadrature rules shared by the analytic modules.

use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

use num_complex::Complex64;

/// Values a quadrature rule can accumulate.
pub trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pm = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn integrate<T: Scalar>(&self, f: impl Fn(f64) -> T, a: f64, b: f64) -> T {
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(m + h * x) * *w;
        }
        acc * h
    }
}

/// Shared 20-point rule.
pub fn gl20() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(20))
}

/// Shared 64-point rule.
pub fn gl64() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(64))
}

/// Globally adaptive 20-point rule: repeatedly bisects the interval with the
/// largest error estimate until the total estimate drops below `tol` or the
/// subdivision limit is reached.
pub fn adaptive<T: Scalar>(f: &impl Fn(f64) -> T, a: f64, b: f64, tol: f64) -> T {
    const LIMIT: usize = 2000;
    let rule = gl20();
    let estimate = |a: f64, b: f64| {
        let m = 0.5 * (a + b);
        let whole = rule.integrate(f, a, b);
        let both = rule.integrate(f, a, m) + rule.integrate(f, m, b);
        (both, (both - whole).magnitude())
    };
    let (v, e) = estimate(a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total_err: f64 = parts.iter().map(|p| p.3).sum();
        let total = parts.iter().fold(T::zero(), |acc, p| acc + p.2);
        if total_err <= tol.max(4.0 * f64::EPSILON * total.magnitude()) || parts.len() >= LIMIT {
            return total;
        }
        let worst = (0..parts.len()).max_by(|&i, &j| parts[i].3.total_cmp(&parts[j].3)).unwrap();
        let (pa, pb, _, _) = parts.swap_remove(worst);
        let m = 0.5 * (pa + pb);
        if m <= pa || m >= pb {
            parts.push((pa, pb, rule.integrate(f, pa, pb), 0.0));
            continue;
        }
        for (x, y) in [(pa, m), (m, pb)] {
            let (v, e) = estimate(x, y);
            parts.push((x, y, v, e));
        }
    }
}

/// Tanh-sinh rule on [a, b], robust to integrable endpoint singularities.
/// The integrand receives (x, x - a, b - x) so that endpoint distances keep
/// full relative accuracy.
pub fn tanh_sinh<T: Scalar>(f: impl Fn(f64, f64, f64) -> T, a: f64, b: f64, tol: f64) -> T {
    use std::f64::consts::FRAC_PI_2;
    let half = 0.5 * (b - a);
    if half == 0.0 {
        return T::zero();
    }
    // Node pair at ±t: returns the weighted sum of both evaluations.
    let pair = |t: f64| -> T {
        let u = FRAC_PI_2 * t.sinh();
        let e = (-2.0 * u).exp();
        let d = 2.0 * e / (1.0 + e); // 1 - tanh(u)
        let w = FRAC_PI_2 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
        let off = half * d;
        if off <= 0.0 {
            return T::zero();
        }
        f(b - off, 2.0 * half - off, off) * w + f(a + off, off, 2.0 * half - off) * w
    };
    let tmax = 6.5;
    let mut h = 0.5;
    let mut sum = f(0.5 * (a + b), half, half) * FRAC_PI_2;
    let mut k = 1;
    while k as f64 * h <= tmax {
        sum = sum + pair(k as f64 * h);
        k += 1;
    }
    let mut prev = sum * h;
    for _ in 0..12 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= tmax {
            sum = sum + pair(k as f64 * h);
            k += 2;
        }
        let cur = sum * h;
        if (cur - prev).magnitude() <= tol * cur.magnitude().max(1.0) && h < 0.1 {
            return cur * half;
        }
        prev = cur;
    }
    prev * half
}
