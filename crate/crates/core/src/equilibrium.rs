//! One-interval equilibrium measures for polynomial external fields
//! V(λ) = λ²/2 + Σ t_j λ^j.
//!
//! The density is ψ(λ) = (1/2π) √((λ-α)(β-λ)) h(λ) on [α, β]. Integrals
//! against ψ use s = c + r cos θ with c = (α+β)/2, r = (β-α)/2, which turns
//! the square-root endpoints into a smooth trigonometric weight.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive, gl64, tanh_sinh};

type C = Complex64;

const ENDPOINT_TOL: f64 = 1e-13;
const ELL_TOL: f64 = 1e-10;

/// Deformation parameters t_1..t_ν of V.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalField {
    t: Vec<f64>,
}

/// Membership test for the admissible parameter domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub t_max: f64,
    pub gamma: f64,
}

impl Default for Admissibility {
    fn default() -> Self {
        Self { t_max: 0.25, gamma: 0.0 }
    }
}

impl ExternalField {
    /// `t[j - 1]` holds t_j. Trailing zeros are dropped.
    pub fn new(mut t: Vec<f64>) -> Self {
        while t.last() == Some(&0.0) {
            t.pop();
        }
        Self { t }
    }

    pub fn gaussian() -> Self {
        Self { t: Vec::new() }
    }

    pub fn quartic(t4: f64) -> Self {
        Self::new(vec![0.0, 0.0, 0.0, t4])
    }

    pub fn t(&self, j: usize) -> f64 {
        if j == 0 {
            return 0.0;
        }
        self.t.get(j - 1).copied().unwrap_or(0.0)
    }

    pub fn ts(&self) -> &[f64] {
        &self.t
    }

    pub fn is_gaussian(&self) -> bool {
        self.t.is_empty()
    }

    pub fn with_t(&self, j: usize, value: f64) -> Self {
        let mut t = self.t.clone();
        if t.len() < j {
            t.resize(j, 0.0);
        }
        t[j - 1] = value;
        Self::new(t)
    }

    /// Parses "t4=0.01,t2=0"; absent entries are zero and "0" or "" is the
    /// Gaussian field.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let mut t = Vec::new();
        if text.is_empty() || text == "0" {
            return Ok(Self::gaussian());
        }
        for item in text.split(',') {
            let bad = || Error::InvalidInput(format!("bad field term '{item}', expected tJ=value"));
            let (key, value) = item.trim().split_once('=').ok_or_else(bad)?;
            let j: usize = key.trim().strip_prefix('t').ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let v: f64 = value.trim().parse().map_err(|_| bad())?;
            if j == 0 || !v.is_finite() {
                return Err(bad());
            }
            if t.len() < j {
                t.resize(j, 0.0);
            }
            t[j - 1] = v;
        }
        Ok(Self::new(t))
    }

    /// Coefficients of V in ascending powers of λ.
    pub fn potential_coeffs(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.t.len().max(2) + 1];
        v[2] = 0.5;
        for (i, &tj) in self.t.iter().enumerate() {
            v[i + 1] += tj;
        }
        while v.len() > 3 && *v.last().unwrap() == 0.0 {
            v.pop();
        }
        v
    }

    /// Degree ν of V.
    pub fn degree(&self) -> usize {
        self.potential_coeffs().len() - 1
    }

    /// e^{-NV} is integrable iff V has even degree and positive leading coefficient.
    pub fn is_integrable(&self) -> bool {
        let v = self.potential_coeffs();
        (v.len() - 1).is_multiple_of(2) && *v.last().unwrap() > 0.0
    }

    pub fn check_integrable(&self) -> Result<()> {
        if self.is_integrable() {
            Ok(())
        } else {
            Err(Error::DivergentWeight(format!("V = {self} is not bounded below at infinity")))
        }
    }

    /// ν even, t_ν > γ Σ_{j<ν} |t_j| and |t_j| ≤ T for all j.
    pub fn in_domain(&self, adm: &Admissibility) -> bool {
        if self.t.is_empty() {
            return true;
        }
        let nu = self.t.len();
        let lower: f64 = self.t[..nu - 1].iter().map(|x| x.abs()).sum();
        nu.is_multiple_of(2) && self.t[nu - 1] > adm.gamma * lower && self.t.iter().all(|x| x.abs() <= adm.t_max)
    }

    pub fn v(&self, x: f64) -> f64 {
        horner(&self.potential_coeffs(), x)
    }

    pub fn dv(&self, x: f64) -> f64 {
        horner(&derivative(&self.potential_coeffs()), x)
    }

    pub fn v_c(&self, z: C) -> C {
        horner_c(&self.potential_coeffs(), z)
    }
}

impl fmt::Display for ExternalField {
    /// Inverse of [`ExternalField::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .t
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, v)| format!("t{}={}", i + 1, v))
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(","))
        }
    }
}

pub(crate) fn horner(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub(crate) fn horner_c(p: &[f64], z: C) -> C {
    p.iter().rev().fold(C::new(0.0, 0.0), |acc, &c| acc * z + c)
}

pub(crate) fn derivative(p: &[f64]) -> Vec<f64> {
    p.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect()
}

/// Endpoint of the support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Edge {
    Alpha,
    Beta,
}

/// Side of the real axis for boundary values on a cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        }
    }
}

/// Value of Φ_α or Φ_β and its derivative at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalMapSample {
    pub side: Edge,
    pub n: usize,
    pub z: C,
    pub value: C,
    pub derivative: C,
}

/// Chebyshev-Gauss sums (π/M) Σ f(c + r x_k), exact for polynomial f of degree < 2M.
fn chebyshev_sum(m: usize, c: f64, r: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    (1..=m)
        .map(|k| {
            let x = ((2 * k - 1) as f64 * PI / (2 * m) as f64).cos();
            f(c + r * x, x)
        })
        .sum::<f64>()
        * PI
        / m as f64
}

/// Residuals of the two endpoint equations
/// ∫ V'(s)/√((s-α)(β-s)) ds = 0 and ∫ s V'(s)/√((s-α)(β-s)) ds = 2π.
pub fn endpoint_residuals(field: &ExternalField, alpha: f64, beta: f64) -> (f64, f64) {
    let dv = derivative(&field.potential_coeffs());
    let m = field.degree() + 2;
    let (c, r) = (0.5 * (alpha + beta), 0.5 * (beta - alpha));
    (
        chebyshev_sum(m, c, r, |s, _| horner(&dv, s)),
        chebyshev_sum(m, c, r, |s, _| s * horner(&dv, s)) - 2.0 * PI,
    )
}

/// Newton iteration on (c, r) seeded at (α, β) = (-2, 2).
pub fn solve_endpoints(field: &ExternalField) -> Result<(f64, f64)> {
    let v = field.potential_coeffs();
    let dv = derivative(&v);
    let d2v = derivative(&dv);
    let m = field.degree() + 2;
    let residual = |c: f64, r: f64| {
        (
            chebyshev_sum(m, c, r, |s, _| horner(&dv, s)),
            chebyshev_sum(m, c, r, |s, _| s * horner(&dv, s)) - 2.0 * PI,
        )
    };
    let (mut c, mut r) = (0.0, 2.0);
    let mut f = residual(c, r);
    for _ in 0..100 {
        if f.0.abs().max(f.1.abs()) < ENDPOINT_TOL {
            return Ok((c - r, c + r));
        }
        let j11 = chebyshev_sum(m, c, r, |s, _| horner(&d2v, s));
        let j12 = chebyshev_sum(m, c, r, |s, x| x * horner(&d2v, s));
        let j21 = chebyshev_sum(m, c, r, |s, _| horner(&dv, s) + s * horner(&d2v, s));
        let j22 = chebyshev_sum(m, c, r, |s, x| x * (horner(&dv, s) + s * horner(&d2v, s)));
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dc = (f.0 * j22 - f.1 * j12) / det;
        let dr = (j11 * f.1 - j21 * f.0) / det;
        let norm = |g: (f64, f64)| g.0.hypot(g.1);
        let mut step = 1.0;
        loop {
            let (nc, nr) = (c - step * dc, r - step * dr);
            let nf = residual(nc, nr);
            if nr > 0.0 && (norm(nf) < norm(f) || step < 1e-3) {
                c = nc;
                r = nr;
                f = nf;
                break;
            }
            step *= 0.5;
        }
        if (dc.abs() + dr.abs()) * step < 1e-16 * r {
            if f.0.abs().max(f.1.abs()) < 1e3 * ENDPOINT_TOL {
                return Ok((c - r, c + r));
            }
            break;
        }
    }
    Err(Error::NonConvergence { what: "endpoint Newton iteration", iterations: 100 })
}

/// Polynomial part at infinity of V'(s) / √((s-α)(s-β)), ascending coefficients.
pub fn compute_h(field: &ExternalField, alpha: f64, beta: f64) -> Vec<f64> {
    let dv = derivative(&field.potential_coeffs());
    let n = dv.len();
    // 1/√(1 - a/s) = Σ c_i (a/s)^i with c_i = binom(2i, i)/4^i.
    let mut ci = vec![1.0; n];
    for i in 1..n {
        ci[i] = ci[i - 1] * (2 * i - 1) as f64 / (2 * i) as f64;
    }
    let m: Vec<f64> = (0..n)
        .map(|k| (0..=k).map(|i| ci[i] * ci[k - i] * alpha.powi(i as i32) * beta.powi((k - i) as i32)).sum())
        .collect();
    (0..n.saturating_sub(1))
        .map(|p| (0..n - p - 1).map(|k| dv[p + k + 1] * m[k]).sum())
        .collect()
}

/// Equilibrium measure supported on a single interval.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumMeasure {
    pub field: ExternalField,
    pub alpha: f64,
    pub beta: f64,
    pub h: Vec<f64>,
    pub ell: f64,
}

/// JSON form of a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub alpha: f64,
    pub beta: f64,
    pub h_coeffs: Vec<f64>,
    pub ell: f64,
}

impl EquilibriumMeasure {
    pub fn solve(field: &ExternalField) -> Result<Self> {
        field.check_integrable()?;
        let (alpha, beta) = solve_endpoints(field)?;
        let h = compute_h(field, alpha, beta);
        let samples = 400;
        let min_h = (0..=samples)
            .map(|k| horner(&h, alpha + (beta - alpha) * k as f64 / samples as f64))
            .fold(f64::INFINITY, f64::min);
        if !(min_h > 0.0) {
            return Err(Error::SupportSplitSuspected);
        }
        let mut m = Self { field: field.clone(), alpha, beta, h, ell: 0.0 };
        let (c, r) = (m.center(), m.radius());
        let ells = [c, c - 0.5 * r, c + 0.5 * r].map(|x| m.ell_at(x));
        let spread = ells.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - ells.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        if spread > ELL_TOL {
            return Err(Error::InconsistentEll(spread));
        }
        m.ell = ells[0];
        Ok(m)
    }

    pub fn record(&self) -> MeasureRecord {
        MeasureRecord { alpha: self.alpha, beta: self.beta, h_coeffs: self.h.clone(), ell: self.ell }
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.alpha + self.beta)
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.beta - self.alpha)
    }

    pub fn h_at(&self, x: f64) -> f64 {
        horner(&self.h, x)
    }

    pub fn h_c(&self, z: C) -> C {
        horner_c(&self.h, z)
    }

    pub fn dh_c(&self, z: C) -> C {
        horner_c(&derivative(&self.h), z)
    }

    /// ψ(λ), zero off the support.
    pub fn psi(&self, x: f64) -> f64 {
        if x <= self.alpha || x >= self.beta {
            return 0.0;
        }
        ((x - self.alpha) * (self.beta - x)).sqrt() * self.h_at(x) / (2.0 * PI)
    }

    /// ψ(s) ds in the angle variable, s = c + r cos θ.
    fn psi_theta(&self, theta: f64) -> f64 {
        let (c, r) = (self.center(), self.radius());
        let sn = theta.sin();
        r * r * sn * sn * self.h_at(c + r * theta.cos()) / (2.0 * PI)
    }

    fn theta_of(&self, x: f64) -> f64 {
        ((x - self.center()) / self.radius()).clamp(-1.0, 1.0).acos()
    }

    /// ∫_x^β ψ.
    pub fn tail_mass(&self, x: f64) -> f64 {
        if x <= self.alpha {
            return 1.0;
        }
        if x >= self.beta {
            return 0.0;
        }
        gl64().integrate(|t| self.psi_theta(t), 0.0, self.theta_of(x))
    }

    /// ∫_a^b ψ.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        self.tail_mass(a) - self.tail_mass(b)
    }

    /// ∫ f dμ for smooth f.
    pub fn integrate_against(&self, f: impl Fn(f64) -> f64) -> f64 {
        let (c, r) = (self.center(), self.radius());
        adaptive(&|t: f64| self.psi_theta(t) * f(c + r * t.cos()), 0.0, PI, 1e-15)
    }

    /// ∫ log|x - s| ψ(s) ds for real x.
    pub fn log_potential(&self, x: f64) -> f64 {
        let (c, r) = (self.center(), self.radius());
        if x > self.alpha && x < self.beta {
            let tx = self.theta_of(x);
            // |x - s| = 2r |sin((θ+θx)/2)| |sin((θ-θx)/2)|, kept accurate near θ = θx.
            let left = tanh_sinh(
                |t, _, d| self.psi_theta(t) * (2.0 * r * (0.5 * (t + tx)).sin() * (0.5 * d).sin()).abs().ln(),
                0.0,
                tx,
                1e-15,
            );
            let right = tanh_sinh(
                |t, d, _| self.psi_theta(t) * (2.0 * r * (0.5 * (t + tx)).sin() * (0.5 * d).sin()).abs().ln(),
                tx,
                PI,
                1e-15,
            );
            left + right
        } else {
            tanh_sinh(|t, _, _| self.psi_theta(t) * (x - c - r * t.cos()).abs().ln(), 0.0, PI, 1e-15)
        }
    }

    /// 2∫ log|x - s| ψ ds - V(x), constant on the support.
    pub fn ell_at(&self, x: f64) -> f64 {
        2.0 * self.log_potential(x) - self.field.v(x)
    }

    pub fn lagrange_ell(&self) -> f64 {
        self.ell
    }

    /// g(z) = ∫ log(z - s) ψ(s) ds, analytic off (-∞, β]. On the cut a side
    /// selects the boundary value g_±.
    pub fn g_function(&self, z: C, side: Option<Side>) -> Result<C> {
        if z.im == 0.0 {
            let x = z.re;
            if x >= self.beta {
                return Ok(C::new(self.log_potential(x), 0.0));
            }
            let side = side.ok_or(Error::BranchCutEvaluation(x))?;
            return Ok(C::new(self.log_potential(x), side.sign() * PI * self.tail_mass(x)));
        }
        let (c, r) = (self.center(), self.radius());
        let f = |t: f64| (z - (c + r * t.cos())).ln() * self.psi_theta(t);
        let split = self.theta_of(z.re);
        Ok(adaptive(&f, 0.0, split, 1e-14) + adaptive(&f, split, PI, 1e-14))
    }

    /// The ψ-median, where the α- and β-edge descriptions are matched.
    pub fn z_star(&self) -> f64 {
        let (mut lo, mut hi) = (self.alpha, self.beta);
        while hi - lo > 4.0 * f64::EPSILON * self.beta.abs().max(self.alpha.abs()) {
            let mid = 0.5 * (lo + hi);
            if self.tail_mass(mid) > 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// (∫_α^{z*} R_+ h ds, ∫_{z*}^β R_+ h ds), both equal to πi.
    pub fn half_integrals(&self) -> (C, C) {
        let zs = self.z_star();
        let i2pi = C::new(0.0, 2.0 * PI);
        (i2pi * (1.0 - self.tail_mass(zs)), i2pi * self.tail_mass(zs))
    }

    /// Radius of the endpoint discs used by the local parametrices.
    pub fn disc_radius(&self) -> f64 {
        let zs = self.z_star();
        (0.5 * (self.beta - zs)).min(0.5 * (zs - self.alpha)).min(0.1 * (self.beta - self.alpha))
    }

    /// Radius within which the integral representation of Φ is analytic.
    pub fn phi_radius(&self) -> f64 {
        0.9 * (self.beta - self.alpha)
    }

    /// (G, G') with ∫_e^z R h ds = ±(z - e)^{3/2} G(z) for the endpoint e.
    /// At β: G(z) = ∫_0^1 τ^{1/2} (β-α+(z-β)τ)^{1/2} h(β+(z-β)τ) dτ.
    /// At α: G(z) = ∫_0^1 τ^{1/2} (β-α-(z-α)τ)^{1/2} h(α+(z-α)τ) dτ.
    pub fn edge_factor(&self, edge: Edge, z: C) -> (C, C) {
        let (e, sgn) = match edge {
            Edge::Beta => (self.beta, 1.0),
            Edge::Alpha => (self.alpha, -1.0),
        };
        let w = z - e;
        let width = self.beta - self.alpha;
        let dh = derivative(&self.h);
        let rule = gl64();
        let mut g = C::new(0.0, 0.0);
        let mut dg = C::new(0.0, 0.0);
        // τ = x² removes the τ^{1/2} endpoint behaviour.
        for (&xn, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let x = 0.5 * (xn + 1.0);
            let tau = x * x;
            let root = (width + sgn * w * tau).sqrt();
            let s = z * tau + e * (1.0 - tau);
            let hv = horner_c(&self.h, s);
            let dhv = horner_c(&dh, s);
            let jac = wt * x * x; // 0.5 dx * 2x τ^{1/2}
            g += root * hv * jac;
            dg += (hv * (0.5 * sgn) / root + root * dhv) * tau * jac;
        }
        (g, dg)
    }

    /// Φ_β(z) = (3N/4)^{2/3} (z-β) G_β^{2/3} and Φ_α(z) = -(3N/4)^{2/3} (z-α) G_α^{2/3}.
    pub fn phi_map(&self, edge: Edge, n: usize, z: C) -> Result<ConformalMapSample> {
        let e = match edge {
            Edge::Beta => self.beta,
            Edge::Alpha => self.alpha,
        };
        if (z - e).norm() >= self.phi_radius() {
            return Err(Error::OutsideDisc { radius: self.phi_radius() });
        }
        let k = (0.75 * n as f64).powf(2.0 / 3.0);
        let sgn = if edge == Edge::Beta { 1.0 } else { -1.0 };
        let (g, dg) = self.edge_factor(edge, z);
        let g23 = g.powf(2.0 / 3.0);
        let value = (z - e) * g23 * (k * sgn);
        let derivative = (g23 + (z - e) * (2.0 / 3.0) * dg / g.cbrt()) * (k * sgn);
        Ok(ConformalMapSample { side: edge, n, z, value, derivative })
    }
}

/// γ(z) = ((z-β)/(z-α))^{1/4} with its cut on [α, β].
pub fn gamma_factor(alpha: f64, beta: f64, z: C, side: Option<Side>) -> Result<C> {
    let ratio = (z - beta) / (z - alpha);
    if z.im == 0.0 && z.re > alpha.min(beta) && z.re < alpha.max(beta) {
        let side = side.ok_or(Error::BranchCutEvaluation(z.re))?;
        let turn = if alpha < beta { side.sign() } else { -side.sign() };
        return Ok(C::from_polar(ratio.re.abs().powf(0.25), turn * PI / 4.0));
    }
    Ok(ratio.powf(0.25))
}
