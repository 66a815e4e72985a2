//! Airy function Ai and its derivative on the real line.
//!
//! |x| <= 8 uses the Maclaurin series summed in double-double arithmetic,
//! which absorbs the e^{2ζ} cancellation on the positive side. Beyond that
//! the asymptotic expansions in ζ = (2/3)|x|^{3/2} are truncated at their
//! smallest term.

use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::OnceLock;

use rug::{Float, Integer, Rational};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

pub const X_MAX: f64 = 200.0;
const X_SWITCH_POS: f64 = 8.0;
const X_SWITCH_NEG: f64 = -8.0;

// Ai(0) and -Ai'(0) as unevaluated double-double sums.
const AI0: (f64, f64) = (0.3550280538878172, 2.05233632436212e-17);
const MAIP0: (f64, f64) = (0.2588194037928068, -2.522243111610832e-17);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AiryMethod {
    Maclaurin,
    AsymptoticNeg,
    AsymptoticPos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryValue {
    pub x: f64,
    pub ai: f64,
    pub aip: f64,
    pub method: AiryMethod,
}

pub fn airy_ai(x: f64) -> Result<AiryValue> {
    if !(x.abs() <= X_MAX) {
        return Err(Error::OverflowRange(x));
    }
    let (ai, aip, method) = if x > X_SWITCH_POS {
        let (a, b) = asymptotic_pos(x);
        (a, b, AiryMethod::AsymptoticPos)
    } else if x < X_SWITCH_NEG {
        let (a, b) = asymptotic_neg(-x);
        (a, b, AiryMethod::AsymptoticNeg)
    } else {
        let (a, b) = maclaurin(x);
        (a, b, AiryMethod::Maclaurin)
    };
    Ok(AiryValue { x, ai, aip, method })
}

/// Forces the series path, for continuity checks at the switch points.
pub fn airy_maclaurin(x: f64) -> (f64, f64) {
    maclaurin(x)
}

/// Forces the asymptotic path on the side given by the sign of x.
pub fn airy_asymptotic(x: f64) -> (f64, f64) {
    if x >= 0.0 {
        asymptotic_pos(x)
    } else {
        asymptotic_neg(-x)
    }
}

/// F_0(ζ) = Ai'(ζ)² - ζ Ai(ζ)².
pub fn f0(zeta: f64) -> Result<f64> {
    let a = airy_ai(zeta)?;
    Ok(a.aip * a.aip - zeta * a.ai * a.ai)
}

fn maclaurin(x: f64) -> (f64, f64) {
    let xd = TwoFloat::from(x);
    let x3 = xd * xd * xd;
    // f = Σ x^{3k} 3^k (1/3)_k/(3k)!, g = Σ x^{3k+1} 3^k (2/3)_k/(3k+1)!.
    let (mut f, mut g) = (TwoFloat::from(1.0), xd);
    let (mut tf, mut tg) = (TwoFloat::from(1.0), xd);
    let (mut df, mut dg) = (TwoFloat::from(0.0), TwoFloat::from(1.0));
    let (mut tdf, mut tdg) = (TwoFloat::from(0.0), TwoFloat::from(1.0));
    for k in 1..200 {
        let k3 = 3.0 * k as f64;
        tf = tf * x3 / ((k3 - 1.0) * k3);
        tg = tg * x3 / (k3 * (k3 + 1.0));
        tdf = if k == 1 { xd * xd / 2.0 } else { tdf * x3 / ((k3 - 1.0) * (k3 - 3.0)) };
        tdg = tdg * x3 / (k3 * (k3 - 2.0));
        f += tf;
        g += tg;
        df += tdf;
        dg += tdg;
        let small = |t: TwoFloat, s: TwoFloat| t.hi().abs() <= 1e-34 * s.hi().abs().max(1e-300);
        if k > 2 && small(tf, f) && small(tg, g) && small(tdf, df) && small(tdg, dg) {
            break;
        }
    }
    let c1 = TwoFloat::new_add(AI0.0, AI0.1);
    let c2 = TwoFloat::new_add(MAIP0.0, MAIP0.1);
    ((c1 * f - c2 * g).hi(), (c1 * df - c2 * dg).hi())
}

/// u_k and v_k as doubles, enough terms for optimal truncation down to ζ = 8^{3/2}·2/3.
fn uv_table() -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut u = vec![1.0];
        let mut v = vec![1.0];
        for k in 1..100 {
            let kf = k as f64;
            let next = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
            u.push(next);
            v.push(-(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * next);
        }
        (u, v)
    })
}

/// Sums c_k ζ^{-k} split into even and odd k, stopping before the terms grow.
/// Signs alternate term by term, or pairwise (the w-series) when
/// `alternate_pairs` is set.
fn truncated_sums(c: &[f64], zeta: f64, alternate_pairs: bool) -> (f64, f64) {
    let (mut even, mut odd) = (0.0, 0.0);
    let mut prev = f64::INFINITY;
    let mut p = 1.0;
    for (k, &ck) in c.iter().enumerate() {
        let term = ck * p;
        if term.abs() > prev {
            break;
        }
        let sign = if alternate_pairs {
            if (k / 2) % 2 == 0 { 1.0 } else { -1.0 }
        } else if k % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        if k % 2 == 0 {
            even += sign * term;
        } else {
            odd += sign * term;
        }
        prev = term.abs();
        if prev < 1e-18 * (even.abs() + odd.abs()) {
            break;
        }
        p /= zeta;
    }
    (even, odd)
}

fn asymptotic_pos(x: f64) -> (f64, f64) {
    let (u, v) = uv_table();
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let (ue, uo) = truncated_sums(u, zeta, false);
    let (ve, vo) = truncated_sums(v, zeta, false);
    let q = x.powf(0.25);
    let e = (-zeta).exp() / (2.0 * PI.sqrt());
    (e / q * (ue + uo), -e * q * (ve + vo))
}

/// (Ai(x), Ai'(x)) at x = -z.
fn asymptotic_neg(z: f64) -> (f64, f64) {
    let (u, v) = uv_table();
    let zeta = 2.0 / 3.0 * z * z.sqrt();
    let (w1, w2) = truncated_sums(u, zeta, true);
    let (w3, w4) = truncated_sums(v, zeta, true);
    let (s, c) = (zeta + FRAC_PI_4).sin_cos();
    let q = z.powf(0.25);
    let ai = (s * w1 - c * w2) / (PI.sqrt() * q);
    let aip = q / PI.sqrt() * (-c * w3 - s * w4);
    (ai, aip)
}

/// Exact (s_k, t_k) with s_k = (2k+1)(2k+3)...(6k-1)/(216^k k!) and
/// t_k = -(6k+1)/(6k-1) s_k; s_0 = t_0 = 1.
pub fn st_coefficients(k: u32) -> (Rational, Rational) {
    if k == 0 {
        return (Rational::from(1), Rational::from(1));
    }
    let mut num = Integer::from(1);
    let mut j = 2 * k + 1;
    while j < 6 * k {
        num *= j;
        j += 2;
    }
    let mut den = Integer::from(Integer::u_pow_u(216, k));
    den *= Integer::from(Integer::factorial(k));
    let s = Rational::from((num, den));
    let t = -Rational::from((6 * k + 1, 6 * k - 1)) * &s;
    (s, t)
}

/// Coefficients u_s, v_s and the four partial sums of the oscillatory expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorySeries {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl OscillatorySeries {
    pub fn new(order: u32) -> Self {
        let (u, v) = (0..=order).map(|k| {
            let (s, t) = st_coefficients(k);
            (s.to_f64(), t.to_f64())
        }).unzip();
        Self { u, v }
    }

    /// (w1, w2, w3, w4) at ζ summed through index `order`.
    pub fn partial_sums(&self, zeta: f64) -> [f64; 4] {
        let mut w = [0.0; 4];
        let mut p = 1.0;
        for k in 0..self.u.len() {
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let slot = k % 2;
            w[slot] += sign * self.u[k] * p;
            w[2 + slot] += sign * self.v[k] * p;
            p /= zeta;
        }
        w
    }
}

/// Ai and Ai' by the Maclaurin series in `digits`-digit arithmetic, with
/// guard bits covering the cancellation at positive x.
pub fn airy_mp(x: f64, digits: u32) -> (Float, Float) {
    let zeta = 2.0 / 3.0 * x.abs().powf(1.5);
    let bits = (digits as f64 * 3.33 + 2.0 * zeta / std::f64::consts::LN_2 + 64.0) as u32;
    let xf = Float::with_val(bits, x);
    let x3 = Float::with_val(bits, &xf * &xf) * &xf;
    let third = Float::with_val(bits, 1) / 3u32;
    let g13 = Float::with_val(bits, &third).gamma();
    let g23 = Float::with_val(bits, Float::with_val(bits, 2) / 3u32).gamma();
    let cube_root_3 = Float::with_val(bits, 3).cbrt();
    // Ai(0) = 1/(3^{2/3} Γ(2/3)), -Ai'(0) = 1/(3^{1/3} Γ(1/3)).
    let c1 = Float::with_val(bits, 1) / (Float::with_val(bits, &cube_root_3 * &cube_root_3) * &g23);
    let c2 = Float::with_val(bits, 1) / (Float::with_val(bits, &cube_root_3) * &g13);
    let one = Float::with_val(bits, 1);
    let (mut f, mut g, mut df, mut dg) = (one.clone(), xf.clone(), Float::with_val(bits, 0), one.clone());
    let (mut tf, mut tg, mut tdf, mut tdg) = (one.clone(), xf.clone(), Float::with_val(bits, 0), one);
    let eps = Float::with_val(bits, Float::i_exp(1, -(bits as i32)));
    for k in 1..100_000u64 {
        let k3 = 3 * k;
        tf = tf * &x3 / ((k3 - 1) * k3);
        tg = tg * &x3 / (k3 * (k3 + 1));
        tdf = if k == 1 { Float::with_val(bits, &xf * &xf) / 2u32 } else { tdf * &x3 / ((k3 - 1) * (k3 - 3)) };
        tdg = tdg * &x3 / (k3 * (k3 - 2));
        f += &tf;
        g += &tg;
        df += &tdf;
        dg += &tdg;
        let tiny = |t: &Float| Float::with_val(bits, t.abs_ref()) < eps;
        if k > 2 && tiny(&tf) && tiny(&tg) && tiny(&tdf) && tiny(&tdg) {
            break;
        }
    }
    let ai = Float::with_val(bits, &c1 * &f) - Float::with_val(bits, &c2 * &g);
    let aip = Float::with_val(bits, &c1 * &df) - Float::with_val(bits, &c2 * &dg);
    (ai, aip)
}
