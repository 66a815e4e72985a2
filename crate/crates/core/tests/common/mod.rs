//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use genuscount::asymptotics::Mat2;
use genuscount::equilibrium::EquilibriumMeasure;
use num_complex::Complex64 as C;

pub const I: C = C { re: 0.0, im: 1.0 };

pub fn simpson_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Composite Simpson on a square, for the two-eigenvalue integral.
pub fn simpson_2d(f: &dyn Fn(f64, f64) -> f64, l: f64, m: usize) -> f64 {
    let h = 2.0 * l / m as f64;
    let w = |i: usize| if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
    let mut s = 0.0;
    for i in 0..=m {
        let x = -l + i as f64 * h;
        for j in 0..=m {
            s += w(i) * w(j) * f(x, -l + j as f64 * h);
        }
    }
    s * h * h / 9.0
}

pub fn quartic_a(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        (-1.0 + (1.0 + 48.0 * t).sqrt()) / (24.0 * t)
    }
}

/// Planar and torus free energies of the quartic model in closed form.
pub fn quartic_e0(t: f64) -> f64 {
    let a = quartic_a(t);
    0.5 * a.ln() - (a - 1.0) * (9.0 - a) / 24.0
}

pub fn quartic_e1(t: f64) -> f64 {
    -(2.0 - quartic_a(t)).ln() / 12.0
}

pub fn norm(x: &Mat2) -> f64 {
    x.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn diff(x: &Mat2, y: &Mat2) -> f64 {
    let mut d = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            d = d.max((x[i][j] - y[i][j]).norm());
        }
    }
    d
}

pub fn combo(p: C, pm: Mat2, q: C, qm: Mat2) -> Mat2 {
    let mut out = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = p * pm[i][j] + q * qm[i][j];
        }
    }
    out
}

/// ∫_e^z R(s) h(s) ds along the segment, s = e + (z-e)u², with principal roots.
pub fn segment_integral(mu: &EquilibriumMeasure, e: f64, z: C) -> C {
    let n = 4000;
    let mut acc = C::new(0.0, 0.0);
    for k in 0..=n {
        let u = k as f64 / n as f64;
        let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        let s = e + (z - e) * u * u;
        let r = (s - mu.alpha).sqrt() * (s - mu.beta).sqrt();
        acc += w * r * mu.h_c(s) * 2.0 * (z - e) * u;
    }
    acc / (3.0 * n as f64)
}

pub fn quartic_outside(b: f64, z: C) -> Mat2 {
    let d = 8.0 - b * b;
    let tb = -7.0 * b / (96.0 * d * (b - z)) + b * (-56.0 * z - 136.0 * b + 15.0 * b * b * z + 25.0 * b.powi(3)) / (96.0 * d * d * (z + b) * (z + b));
    let ta = 7.0 * b / (96.0 * d * (z + b)) - b * (-136.0 * b + 56.0 * z + 25.0 * b.powi(3) - 15.0 * b * b * z) / (96.0 * d * d * (b - z) * (b - z));
    combo(tb, [[C::new(1.0, 0.0), I], [I, C::new(-1.0, 0.0)]], ta, [[C::new(-1.0, 0.0), I], [I, C::new(1.0, 0.0)]])
}

pub fn quartic_beta_disc(mu: &EquilibriumMeasure, z: C) -> Mat2 {
    let b = mu.beta;
    let d = 8.0 - b * b;
    let integral = segment_integral(mu, b, z);
    let g2 = ((z - b) / (z + b)).sqrt();
    let tb = 7.0 * b / (96.0 * d * (z - b)) + b * (-56.0 * z - 136.0 * b + 15.0 * b * b * z + 25.0 * b.powi(3)) / (96.0 * d * d * (z + b) * (z + b))
        - 7.0 * g2 / (72.0 * integral);
    let ta = 7.0 * b / (96.0 * d * (z + b)) - b * (-136.0 * b + 56.0 * z + 25.0 * b.powi(3) - 15.0 * b * b * z) / (96.0 * d * d * (b - z) * (b - z))
        - 5.0 / (72.0 * g2 * integral);
    combo(tb, [[C::new(1.0, 0.0), I], [I, C::new(-1.0, 0.0)]], ta, [[C::new(-1.0, 0.0), I], [I, C::new(1.0, 0.0)]])
}
