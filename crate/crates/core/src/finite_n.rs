//! Exact finite-N quantities for the weight e^{-N V(λ)}: moments, the
//! Hankel-determinant partition function, orthonormal-polynomial
//! recurrences, the one-point density and t-derivatives of log Z_N.
//!
//! Moments and determinants are carried in MPFR floats because the Hankel
//! matrix loses roughly a factorial number of digits to conditioning.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::Float;

use crate::equilibrium::{horner, ExternalField};
use crate::error::{Error, Result};
use crate::quadrature::adaptive;

pub const PRECISION_ENV: &str = "GENUSCOUNT_PRECISION";

/// Extra recurrence levels beyond N, enough for p_N and Jacobi traces of λ^6.
pub const LEVEL_MARGIN: usize = 4;

/// Working precision in decimal digits: max(64, 12N), or the environment override.
pub fn default_digits(n: usize) -> u32 {
    std::env::var(PRECISION_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or_else(|| 64.max(12 * n as u32))
}

fn bits_for(digits: u32) -> u32 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 32
}

/// c_j = ∫ x^j e^{-N V(x)} dx for j < len.
#[derive(Debug, Clone)]
pub struct MomentTable {
    pub n: usize,
    pub field: ExternalField,
    pub c: Vec<Float>,
    pub digits: u32,
    /// Integration range outside which every integrand is negligible.
    pub range: (f64, f64),
}

/// Smallest L > 0 with j ln L - N V(±L) below its maximum by `drop` for all j ≤ jmax.
fn truncation_point(field: &ExternalField, n: usize, jmax: usize, drop: f64, sign: f64) -> f64 {
    let phi = |j: usize, x: f64| j as f64 * x.max(1e-300).ln() - n as f64 * field.v(sign * x);
    let peaks: Vec<f64> = (0..=jmax)
        .map(|j| (1..4000).map(|k| phi(j, k as f64 * 0.01)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut l: f64 = 1.0;
    loop {
        if (0..=jmax).all(|j| phi(j, l) < peaks[j] - drop && phi(j, l + 0.1) < phi(j, l)) {
            return l;
        }
        l += 0.1;
    }
}

pub fn compute_moments(field: &ExternalField, n: usize, count: usize, digits: u32) -> Result<MomentTable> {
    field.check_integrable()?;
    if n == 0 || count == 0 {
        return Err(Error::InvalidInput("N and the moment count must be positive".into()));
    }
    let prec = bits_for(digits);
    let drop = (digits as f64 + 10.0) * std::f64::consts::LN_10;
    let jmax = count - 1;
    let lo = -truncation_point(field, n, jmax, drop, -1.0);
    let hi = truncation_point(field, n, jmax, drop, 1.0);
    let even = field.ts().iter().enumerate().all(|(i, &t)| (i + 1) % 2 == 0 || t == 0.0);
    let coeffs = field.potential_coeffs();

    // Weighted node sums on the dyadic grid x_k = k h, so refinements only add odd k.
    let node_sums = |k_from: i64, k_to: i64, stride: i64, h: &Float| -> Vec<Float> {
        let ks: Vec<i64> = (k_from..=k_to).filter(|k| k.rem_euclid(stride) != 0 || stride == 1).collect();
        let rows: Vec<(Float, Float)> = ks
            .par_iter()
            .map(|&k| {
                let x = Float::with_val(prec, h * k);
                let mut v = Float::with_val(prec, 0);
                for &c in coeffs.iter().rev() {
                    v *= &x;
                    v += c;
                }
                let w = Float::with_val(prec, -(v * n as u32)).exp();
                (x, w)
            })
            .collect();
        (0..count)
            .into_par_iter()
            .map(|j| {
                let mut s = Float::with_val(prec, 0);
                for (x, w) in &rows {
                    s += Float::with_val(prec, x.pow(j as u32)) * w;
                }
                s
            })
            .collect()
    };

    let mut h = Float::with_val(prec, 0.25);
    let mut k_lo = (lo / 0.25).floor() as i64;
    let mut k_hi = (hi / 0.25).ceil() as i64;
    let mut sums = node_sums(k_lo, k_hi, 1, &h);
    let mut prev: Vec<Float> = sums.iter().map(|s| Float::with_val(prec, s * &h)).collect();
    let tol = Float::with_val(prec, Float::i_exp(1, -(digits as f64 * std::f64::consts::LOG2_10) as i32));
    for _ in 0..30 {
        h /= 2;
        k_lo *= 2;
        k_hi *= 2;
        let extra = node_sums(k_lo, k_hi, 2, &h);
        for (s, e) in sums.iter_mut().zip(extra) {
            *s += e;
        }
        let cur: Vec<Float> = sums.iter().map(|s| Float::with_val(prec, s * &h)).collect();
        let converged = cur.iter().zip(&prev).enumerate().all(|(j, (a, b))| {
            (even && j % 2 == 1) || Float::with_val(prec, a - b).abs() <= Float::with_val(prec, a.abs_ref()) * &tol
        });
        prev = cur;
        if converged {
            if even {
                for (j, c) in prev.iter_mut().enumerate() {
                    if j % 2 == 1 {
                        *c = Float::with_val(prec, 0);
                    }
                }
            }
            return Ok(MomentTable { n, field: field.clone(), c: prev, digits, range: (lo, hi) });
        }
    }
    Err(Error::PrecisionExhausted { digits })
}

/// log Z_N from the Hankel determinant.
#[derive(Debug, Clone)]
pub struct HankelValue {
    pub log_z: Float,
    pub log_det: Float,
    pub sign: i8,
}

fn ln_factorial(n: usize, prec: u32) -> Float {
    (2..=n as u32).fold(Float::with_val(prec, 0), |acc, k| acc + Float::with_val(prec, k).ln())
}

/// log Z_N = log N! + log det (c_{i+j})_{i,j<N}, by partial-pivoting elimination.
pub fn partition_hankel(m: &MomentTable) -> Result<HankelValue> {
    let n = m.n;
    if m.c.len() < 2 * n - 1 {
        return Err(Error::InvalidInput(format!("need {} moments, have {}", 2 * n - 1, m.c.len())));
    }
    let prec = m.c[0].prec();
    let mut a: Vec<Vec<Float>> = (0..n).map(|i| (0..n).map(|j| m.c[i + j].clone()).collect()).collect();
    let mut log_det = Float::with_val(prec, 0);
    let mut sign = 1i8;
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].cmp_abs(&a[j][col]).unwrap()).unwrap();
        if a[p][col].is_zero() {
            return Err(Error::NonPositiveDeterminant { digits: m.digits });
        }
        if p != col {
            a.swap(p, col);
            sign = -sign;
        }
        if a[col][col].is_sign_negative() {
            sign = -sign;
        }
        log_det += Float::with_val(prec, a[col][col].abs_ref()).ln();
        let pivot_row = a[col].clone();
        for row in a.iter_mut().skip(col + 1) {
            let f = Float::with_val(prec, &row[col] / &pivot_row[col]);
            for k in col..n {
                row[k] -= Float::with_val(prec, &f * &pivot_row[k]);
            }
        }
    }
    if sign < 0 {
        return Err(Error::NonPositiveDeterminant { digits: m.digits });
    }
    let log_z = ln_factorial(n, prec) + &log_det;
    Ok(HankelValue { log_z, log_det, sign })
}

/// Orthonormal polynomials p_j = γ_j x^j + ... and x p_j = b_j p_{j+1} + a_j p_j + b_{j-1} p_{j-1}.
#[derive(Debug, Clone)]
pub struct OPSystem {
    pub n: usize,
    pub field: ExternalField,
    pub gammas: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// h_j = ||π_j||² of the monic polynomials, h_j = γ_j^{-2}.
    pub norms: Vec<Float>,
    pub range: (f64, f64),
}

/// Recurrence coefficients by the Chebyshev (modified quotient-difference)
/// algorithm on the raw moments: σ_{k,l} = ∫ π_k x^l w, α_k and β_k from
/// ratios of neighbouring σ.
pub fn op_recurrence(m: &MomentTable) -> Result<OPSystem> {
    let levels = m.c.len() / 2;
    if levels < m.n + 1 {
        return Err(Error::InvalidInput(format!("need {} moments, have {}", 2 * (m.n + 1), m.c.len())));
    }
    let prec = m.c[0].prec();
    let zero = Float::with_val(prec, 0);
    let mut alpha = Vec::with_capacity(levels);
    let mut beta: Vec<Float> = Vec::with_capacity(levels);
    let mut norms = Vec::with_capacity(levels);
    let mut prev2: Vec<Float> = vec![zero.clone(); 2 * levels];
    let mut prev: Vec<Float> = m.c[..2 * levels].to_vec();
    alpha.push(Float::with_val(prec, &m.c[1] / &m.c[0]));
    beta.push(m.c[0].clone());
    norms.push(m.c[0].clone());
    for k in 1..levels {
        let mut cur = vec![zero.clone(); 2 * levels];
        for l in k..2 * levels - k {
            let mut v = prev[l + 1].clone();
            v -= Float::with_val(prec, &alpha[k - 1] * &prev[l]);
            if k >= 2 {
                v -= Float::with_val(prec, &beta[k - 1] * &prev2[l]);
            }
            cur[l] = v;
        }
        if !(cur[k] > 0) {
            return Err(Error::NonPositiveDeterminant { digits: m.digits });
        }
        let ak = Float::with_val(prec, &cur[k + 1] / &cur[k]) - Float::with_val(prec, &prev[k] / &prev[k - 1]);
        let bk = Float::with_val(prec, &cur[k] / &prev[k - 1]);
        alpha.push(ak);
        beta.push(bk);
        norms.push(cur[k].clone());
        prev2 = prev;
        prev = cur;
    }
    let gammas = norms.iter().map(|h| Float::with_val(prec, h.recip_sqrt_ref()).to_f64()).collect();
    let b = beta[1..].iter().map(|x| Float::with_val(prec, x.sqrt_ref()).to_f64()).collect();
    Ok(OPSystem {
        n: m.n,
        field: m.field.clone(),
        gammas,
        a: alpha.iter().map(Float::to_f64).collect(),
        b,
        norms,
        range: m.range,
    })
}

/// Both closed forms of ρ_N^{(1)} at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityForms {
    pub sum_of_squares: f64,
    pub christoffel_darboux: f64,
}

/// Sampled one-point density.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub n: usize,
    pub field: ExternalField,
    pub lambdas: Vec<f64>,
    pub rho: Vec<f64>,
}

impl DensityGrid {
    pub fn trapezoid_mass(&self) -> f64 {
        self.lambdas
            .windows(2)
            .zip(self.rho.windows(2))
            .map(|(x, r)| 0.5 * (x[1] - x[0]) * (r[0] + r[1]))
            .sum()
    }
}

/// A function to integrate against ρ_N.
pub enum Integrand<'a> {
    Monomial(u32),
    Function(&'a (dyn Fn(f64) -> f64 + Sync)),
}

impl OPSystem {
    pub fn levels(&self) -> usize {
        self.gammas.len()
    }

    /// log(N! Π_{j<N} h_j) = log(N! Π γ_j^{-2}).
    pub fn log_z(&self) -> Float {
        let prec = self.norms[0].prec();
        let mut s = ln_factorial(self.n, prec);
        for h in &self.norms[..self.n] {
            s += Float::with_val(prec, h.ln_ref());
        }
        s
    }

    /// e^{-NV/2} (p_k, p_k') for k ≤ N, scaled to stay in range.
    fn scaled_values(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let scale = (-0.5 * n as f64 * horner(&self.field.potential_coeffs(), x)).exp();
        let mut p = vec![0.0; n + 1];
        let mut dp = vec![0.0; n + 1];
        p[0] = self.gammas[0] * scale;
        for k in 0..n {
            let back = if k > 0 { self.b[k - 1] } else { 0.0 };
            let (pm, dpm) = if k > 0 { (p[k - 1], dp[k - 1]) } else { (0.0, 0.0) };
            p[k + 1] = ((x - self.a[k]) * p[k] - back * pm) / self.b[k];
            dp[k + 1] = (p[k] + (x - self.a[k]) * dp[k] - back * dpm) / self.b[k];
        }
        (p, dp)
    }

    pub fn density_forms(&self, x: f64) -> DensityForms {
        let n = self.n;
        let (p, dp) = self.scaled_values(x);
        let sum = p[..n].iter().map(|v| v * v).sum::<f64>() / n as f64;
        let cd = (dp[n] * p[n - 1] - p[n] * dp[n - 1]) * self.b[n - 1] / n as f64;
        DensityForms { sum_of_squares: sum, christoffel_darboux: cd }
    }

    /// ρ_N^{(1)}(λ) = e^{-NV} Σ_{k<N} p_k² / N, checked against Christoffel-Darboux.
    pub fn one_point_density(&self, x: f64) -> Result<f64> {
        let f = self.density_forms(x);
        let diff = (f.sum_of_squares - f.christoffel_darboux).abs();
        if diff > 1e-9 * f.sum_of_squares.max(1e-300) {
            return Err(Error::ConsistencyFault(format!(
                "density forms disagree at {x}: {} vs {}",
                f.sum_of_squares, f.christoffel_darboux
            )));
        }
        Ok(f.sum_of_squares)
    }

    pub fn density_grid(&self, a: f64, b: f64, points: usize) -> Result<DensityGrid> {
        let lambdas: Vec<f64> = (0..points).map(|k| a + (b - a) * k as f64 / (points - 1) as f64).collect();
        let rho = lambdas.iter().map(|&x| self.one_point_density(x)).collect::<Result<_>>()?;
        Ok(DensityGrid { n: self.n, field: self.field.clone(), lambdas, rho })
    }

    /// ∫ λ^k ρ_N = (1/N) Σ_{j<N} (J^k)_{jj} with the Jacobi matrix J.
    pub fn jacobi_moment(&self, k: u32) -> Result<f64> {
        let size = self.n + (k as usize).div_ceil(2);
        if size > self.levels() {
            return Err(Error::InvalidInput(format!("λ^{k} needs {size} recurrence levels")));
        }
        let apply = |v: &[f64]| -> Vec<f64> {
            (0..size)
                .map(|i| {
                    let mut s = self.a[i] * v[i];
                    if i > 0 {
                        s += self.b[i - 1] * v[i - 1];
                    }
                    if i + 1 < size {
                        s += self.b[i] * v[i + 1];
                    }
                    s
                })
                .collect()
        };
        let mut total = 0.0;
        for j in 0..self.n {
            let mut v = vec![0.0; size];
            v[j] = 1.0;
            for _ in 0..k / 2 {
                v = apply(&v);
            }
            total += if k.is_multiple_of(2) {
                v.iter().map(|x| x * x).sum::<f64>()
            } else {
                let w = apply(&v);
                v.iter().zip(&w).map(|(x, y)| x * y).sum::<f64>()
            };
        }
        Ok(total / self.n as f64)
    }

    /// ∫ f ρ_N by adaptive quadrature over the moment truncation range.
    pub fn quadrature_expectation(&self, f: &(dyn Fn(f64) -> f64 + Sync)) -> f64 {
        let (lo, hi) = self.range;
        let g = |x: f64| f(x) * self.density_forms(x).sum_of_squares;
        let pieces = 16;
        (0..pieces)
            .map(|i| {
                let a = lo + (hi - lo) * i as f64 / pieces as f64;
                let b = lo + (hi - lo) * (i + 1) as f64 / pieces as f64;
                adaptive(&g, a, b, 1e-15)
            })
            .sum()
    }

    /// ∫ f ρ_N. Monomials are computed both from the Jacobi matrix and by
    /// quadrature and must agree to 1e-9.
    pub fn expectation(&self, f: Integrand<'_>) -> Result<f64> {
        match f {
            Integrand::Function(g) => Ok(self.quadrature_expectation(g)),
            Integrand::Monomial(k) => {
                let exact = self.jacobi_moment(k)?;
                let quad = self.quadrature_expectation(&|x: f64| x.powi(k as i32));
                let scale = self.quadrature_expectation(&|x: f64| x.abs().powi(k as i32));
                if (exact - quad).abs() > 1e-9 * scale.max(1e-300) {
                    return Err(Error::ConsistencyFault(format!("∫λ^{k}ρ: Jacobi {exact} vs quadrature {quad}")));
                }
                Ok(exact)
            }
        }
    }
}

/// Partition function and recurrence computed together at one precision.
#[derive(Debug, Clone)]
pub struct FiniteN {
    pub moments: MomentTable,
    pub hankel: HankelValue,
    pub system: OPSystem,
}

impl FiniteN {
    /// Builds everything at `digits`, doubling the precision up to twice when
    /// positivity is lost or the Hankel and recurrence values of log Z differ
    /// by more than `AGREEMENT`.
    pub fn compute(field: &ExternalField, n: usize, digits: Option<u32>) -> Result<Self> {
        // Both log Z evaluations share the moments, so their agreement says
        // nothing about moment accuracy; keep that well below f64 resolution.
        let mut d = digits.unwrap_or_else(|| default_digits(n)).max(MIN_DIGITS);
        let count = 2 * (n + LEVEL_MARGIN);
        for _ in 0..3 {
            let moments = compute_moments(field, n, count, d)?;
            match (partition_hankel(&moments), op_recurrence(&moments)) {
                (Ok(hankel), Ok(system)) => {
                    let (a, b) = (hankel.log_z.to_f64(), system.log_z().to_f64());
                    if (a - b).abs() <= AGREEMENT * a.abs().max(1.0) {
                        return Ok(Self { moments, hankel, system });
                    }
                }
                (Err(Error::NonPositiveDeterminant { .. }), _) | (_, Err(Error::NonPositiveDeterminant { .. })) => {}
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
            d *= 2;
        }
        Err(Error::PrecisionExhausted { digits: d / 2 })
    }

    pub fn log_z(&self) -> f64 {
        self.hankel.log_z.to_f64()
    }
}

pub const MIN_DIGITS: u32 = 20;

/// Required agreement between the two evaluations of log Z_N.
pub const AGREEMENT: f64 = 1e-12;

/// log Z_N(t) at full working precision.
pub fn log_partition(field: &ExternalField, n: usize, digits: Option<u32>) -> Result<Float> {
    Ok(FiniteN::compute(field, n, digits)?.hankel.log_z)
}

/// log Ẑ_N(t) = log Z_N(t) - log Z_N(0).
pub fn log_z_hat(field: &ExternalField, n: usize, digits: Option<u32>) -> Result<f64> {
    let a = log_partition(field, n, digits)?;
    let b = log_partition(&ExternalField::gaussian(), n, digits)?;
    Ok((a - b).to_f64())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DifferenceScheme {
    Central,
    Forward,
    /// Neither t_ℓ ± h keeps the weight integrable; the value is -N² ∫λ^ℓ ρ.
    Expectation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogZDerivative {
    pub value: f64,
    pub scheme: DifferenceScheme,
    /// |last two Richardson levels|, relative.
    pub richardson_spread: f64,
    /// -N² ∫ λ^ℓ ρ_N at t.
    pub expectation: f64,
}

impl LogZDerivative {
    pub fn is_stable(&self) -> bool {
        self.richardson_spread < 1e-6
    }

    pub fn relative_mismatch(&self) -> f64 {
        (self.value - self.expectation).abs() / self.expectation.abs().max(1e-12)
    }
}

/// ∂ log Z_N / ∂t_ℓ by finite differences of the Hankel log Z with three
/// Richardson levels. One-sided differences are used when only t_ℓ + h keeps
/// e^{-NV} integrable.
pub fn log_z_t_derivative(field: &ExternalField, n: usize, ell: usize, step: f64) -> Result<LogZDerivative> {
    if ell == 0 {
        return Err(Error::InvalidInput("t-index starts at 1".into()));
    }
    let digits = default_digits(n);
    let base = FiniteN::compute(field, n, Some(digits))?;
    let expectation = -((n * n) as f64) * base.system.jacobi_moment(ell as u32)?;
    let t0 = field.t(ell);
    let shifted = |d: f64| field.with_t(ell, t0 + d);
    let lz = |d: f64| log_partition(&shifted(d), n, Some(digits));
    let central_ok = shifted(step).is_integrable() && shifted(-step).is_integrable();
    let forward_ok = shifted(step).is_integrable();
    let hs = [step, step / 2.0, step / 4.0];
    let (value, spread, scheme) = if central_ok {
        let d: Vec<Float> = hs
            .iter()
            .map(|&h| Ok((lz(h)? - lz(-h)?) / (2.0 * h)))
            .collect::<Result<_>>()?;
        let r1a = (Float::with_val(d[0].prec(), &d[1] * 4u32) - &d[0]) / 3u32;
        let r1b = (Float::with_val(d[0].prec(), &d[2] * 4u32) - &d[1]) / 3u32;
        let r2 = (Float::with_val(d[0].prec(), &r1b * 16u32) - &r1a) / 15u32;
        let spread = Float::with_val(d[0].prec(), &r2 - &r1b).abs().to_f64() / r2.to_f64().abs().max(1e-12);
        (r2.to_f64(), spread, DifferenceScheme::Central)
    } else if forward_ok {
        let l0 = base.hankel.log_z.clone();
        let d: Vec<Float> = hs.iter().map(|&h| Ok((lz(h)? - &l0) / h)).collect::<Result<_>>()?;
        let r1a = Float::with_val(d[0].prec(), &d[1] * 2u32) - &d[0];
        let r1b = Float::with_val(d[0].prec(), &d[2] * 2u32) - &d[1];
        let r2 = (Float::with_val(d[0].prec(), &r1b * 4u32) - &r1a) / 3u32;
        let spread = Float::with_val(d[0].prec(), &r2 - &r1b).abs().to_f64() / r2.to_f64().abs().max(1e-12);
        (r2.to_f64(), spread, DifferenceScheme::Forward)
    } else {
        (expectation, 0.0, DifferenceScheme::Expectation)
    };
    Ok(LogZDerivative { value, scheme, richardson_spread: spread, expectation })
}
