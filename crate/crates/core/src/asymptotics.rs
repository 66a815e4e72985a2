//! Large-N side: e_0 from the equilibrium measure, the census-built genus
//! series, bulk and Airy-edge models of ρ_N^{(1)}, the first correction S_1
//! of the error matrix, and the log Ẑ_N versus N² e_0 comparison.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::airy::airy_ai;
use crate::combinatorics::{map_census, VertexProfile, DEFAULT_CAP};
use crate::equilibrium::{Edge, EquilibriumMeasure, ExternalField};
use crate::error::{Error, Result};
use crate::finite_n::{log_z_hat, log_z_t_derivative};
use crate::laurent::LaurentPolynomial;

type C = Complex64;

/// 2×2 complex matrix, row-major.
pub type Mat2 = [[C; 2]; 2];

const I: C = C { re: 0.0, im: 1.0 };
const ONE: C = C { re: 1.0, im: 0.0 };

fn m(a: C, b: C, c: C, d: C) -> Mat2 {
    [[a, b], [c, d]]
}

fn scale(s: C, x: &Mat2) -> Mat2 {
    [[s * x[0][0], s * x[0][1]], [s * x[1][0], s * x[1][1]]]
}

fn add(x: &Mat2, y: &Mat2) -> Mat2 {
    [[x[0][0] + y[0][0], x[0][1] + y[0][1]], [x[1][0] + y[1][0], x[1][1] + y[1][1]]]
}

fn apply(x: &Mat2, v: [C; 2]) -> [C; 2] {
    [x[0][0] * v[0] + x[0][1] * v[1], x[1][0] * v[0] + x[1][1] * v[1]]
}

/// Matrix of the (z-β)^{-2} pole.
pub fn pole_beta() -> Mat2 {
    m(-ONE, I, I, ONE)
}

/// Matrix of the (z-β)^{-1} term in the 7/48 coefficient.
pub fn simple_beta() -> Mat2 {
    m(ONE, I, I, -ONE)
}

pub fn pole_alpha() -> Mat2 {
    m(-ONE, -I, -I, ONE)
}

pub fn simple_alpha() -> Mat2 {
    m(ONE, -I, -I, -ONE)
}

/// e_0(t) = F(0) - F(t), with F = ∫V dμ - ∬log|λ-η| dμ dμ = ½∫V dμ - ℓ/2.
pub fn e0(field: &ExternalField) -> Result<f64> {
    Ok(free_energy(&EquilibriumMeasure::solve(&ExternalField::gaussian())?)
        - free_energy(&EquilibriumMeasure::solve(field)?))
}

fn free_energy(mu: &EquilibriumMeasure) -> f64 {
    0.5 * mu.integrate_against(|x| mu.field.v(x)) - 0.5 * mu.ell
}

/// ∂e_0/∂t_ℓ by differences with two Richardson levels. Central where
/// t_ℓ - h keeps the weight integrable, one-sided otherwise.
pub fn e0_t_derivative(field: &ExternalField, ell: usize, step: f64) -> Result<f64> {
    let t0 = field.t(ell);
    let at = |d: f64| e0(&field.with_t(ell, t0 + d));
    if field.with_t(ell, t0 - step).is_integrable() {
        let d = |h: f64| -> Result<f64> { Ok((at(h)? - at(-h)?) / (2.0 * h)) };
        let (d1, d2) = (d(step)?, d(step / 2.0)?);
        Ok((4.0 * d2 - d1) / 3.0)
    } else {
        let base = at(0.0)?;
        let d = |h: f64| -> Result<f64> { Ok((at(h)? - base) / h) };
        let (d1, d2, d3) = (d(step)?, d(step / 2.0)?, d(step / 4.0)?);
        let (r1, r2) = (2.0 * d2 - d1, 2.0 * d3 - d2);
        Ok((4.0 * r2 - r1) / 3.0)
    }
}

/// Truncated genus series e_g(t) = Σ_n Π_j (-t_j)^{n_j}/n_j! · κ_g(n), over
/// vertex multi-indices with Σ n_j ≤ m.
#[derive(Debug, Clone)]
pub struct GenusExpansion {
    pub valences: Vec<u32>,
    pub truncation: u32,
    /// (genus, n_j per valence) → κ_g(n) / Π n_j!.
    pub coefficients: BTreeMap<(u32, Vec<u32>), Rational>,
}

fn multi_indices(len: usize, total: u32) -> Vec<Vec<u32>> {
    if len == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in multi_indices(len - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

impl GenusExpansion {
    /// Builds the coefficients from brute-force censuses. Profiles with more
    /// than `DEFAULT_CAP` half-edges are rejected.
    pub fn build(valences: &[u32], truncation: u32) -> Result<Self> {
        let mut coefficients = BTreeMap::new();
        for n in multi_indices(valences.len(), truncation) {
            let counts: Vec<(u32, u32)> = valences.iter().zip(&n).filter(|(_, &k)| k > 0).map(|(&v, &k)| (v, k)).collect();
            if counts.is_empty() {
                continue;
            }
            let profile = VertexProfile::new(counts)?;
            if profile.half_edges() % 2 == 1 {
                continue;
            }
            if profile.half_edges() > DEFAULT_CAP {
                return Err(Error::CapExceeded { half_edges: profile.half_edges(), cap: DEFAULT_CAP });
            }
            let census = map_census(&profile)?;
            let denom = n.iter().fold(Integer::from(1), |acc, &k| acc * Integer::from(Integer::factorial(k)));
            for (&g, &kappa) in &census.kappa {
                coefficients.insert((g, n.clone()), Rational::from((Integer::from(kappa), denom.clone())));
            }
        }
        Ok(Self { valences: valences.to_vec(), truncation, coefficients })
    }

    pub fn coefficient(&self, genus: u32, n: &[u32]) -> Rational {
        self.coefficients.get(&(genus, n.to_vec())).cloned().unwrap_or_default()
    }

    pub fn max_genus(&self) -> u32 {
        self.coefficients.keys().map(|(g, _)| *g).max().unwrap_or(0)
    }

    /// e_g at the field's couplings for the tracked valences.
    pub fn eval(&self, genus: u32, field: &ExternalField) -> f64 {
        self.coefficients
            .iter()
            .filter(|((g, _), _)| *g == genus)
            .map(|((_, n), c)| {
                let mono: f64 = self.valences.iter().zip(n).map(|(&v, &k)| (-field.t(v as usize)).powi(k as i32)).product();
                c.to_f64() * mono
            })
            .sum()
    }

    pub fn series(&self, field: &ExternalField) -> BTreeMap<u32, f64> {
        (0..=self.max_genus()).map(|g| (g, self.eval(g, field))).collect()
    }

    /// Σ_g N^{2-2g} κ_g(n), the n-th t-derivative of Σ_g N^{2-2g} e_g up to sign and Π n_j!.
    pub fn topological_polynomial(&self, n: &[u32]) -> LaurentPolynomial {
        let fact: Integer = n.iter().fold(Integer::from(1), |acc, &k| acc * Integer::from(Integer::factorial(k)));
        let mut p = LaurentPolynomial::zero();
        for ((g, idx), c) in &self.coefficients {
            if idx.as_slice() == n {
                let kappa = Integer::from(c.numer() * &fact) / c.denom();
                p.add_term(2 - 2 * *g as i32, kappa.to_i128().expect("census fits in i128"));
            }
        }
        p
    }
}

/// Two-term bulk expansion ψ(λ) + (1/4πN)(1/(λ-β) - 1/(λ-α)) cos(2πN ∫_λ^β ψ).
pub fn bulk_density(mu: &EquilibriumMeasure, n: usize, lambda: f64) -> Result<f64> {
    bulk_density_with_margin(mu, n, lambda, mu.disc_radius())
}

pub fn bulk_density_with_margin(mu: &EquilibriumMeasure, n: usize, lambda: f64, margin: f64) -> Result<f64> {
    if lambda <= mu.alpha + margin || lambda >= mu.beta - margin {
        return Err(Error::TooCloseToEdge { lambda, margin });
    }
    let phase = 2.0 * PI * n as f64 * mu.tail_mass(lambda);
    let poles = 1.0 / (lambda - mu.beta) - 1.0 / (lambda - mu.alpha);
    Ok(mu.psi(lambda) + poles * phase.cos() / (4.0 * PI * n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum S1Region {
    Outside,
    BetaDisc,
    AlphaDisc,
}

/// S_1 and its z-derivative at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct S1Correction {
    pub z: C,
    pub region: S1Region,
    pub value: Mat2,
    pub derivative: Mat2,
}

/// Region of z relative to the endpoint discs of radius `disc_radius`.
pub fn region_of(mu: &EquilibriumMeasure, z: C) -> S1Region {
    let d = mu.disc_radius();
    if (z - mu.beta).norm() < d {
        S1Region::BetaDisc
    } else if (z - mu.alpha).norm() < d {
        S1Region::AlphaDisc
    } else {
        S1Region::Outside
    }
}

/// Endpoint contribution outside its disc,
/// (5/144h){3w^{-2} + (3/5)[1/(e-e') - 3h'/h] w^{-1}} P + 7/(48(e-e')h) w^{-1} Q.
fn endpoint_outside(mu: &EquilibriumMeasure, z: C, edge: Edge) -> (Mat2, Mat2) {
    let (e, other, p, q) = match edge {
        Edge::Beta => (mu.beta, mu.alpha, pole_beta(), simple_beta()),
        Edge::Alpha => (mu.alpha, mu.beta, pole_alpha(), simple_alpha()),
    };
    let h = mu.h_at(e);
    let dh = mu.dh_c(C::new(e, 0.0)).re;
    let w = z - e;
    let lin = 0.6 * (1.0 / (e - other) - 3.0 * dh / h);
    let cp = 5.0 / (144.0 * h);
    let cq = 7.0 / (48.0 * (e - other) * h);
    let val = add(&scale(cp * (3.0 / (w * w) + lin / w), &p), &scale(cq / w, &q));
    let der = add(&scale(cp * (-6.0 / (w * w * w) - lin / (w * w)), &p), &scale(-cq / (w * w), &q));
    (val, der)
}

/// V_1 at the endpoint e, written with ∫_e^z R h ds = ±(z-e)^{3/2} G(z):
/// β: 5(z-α)^{1/2}/(72 (z-β)² G) P + 7/(72 (z-α)^{1/2} (z-β) G) Q,
/// α: 5(β-z)^{1/2}/(72 (z-α)² G) P - 7/(72 (β-z)^{1/2} (z-α) G) Q.
pub fn jump_matrix(mu: &EquilibriumMeasure, z: C, edge: Edge) -> (Mat2, Mat2) {
    let (g, dg) = mu.edge_factor(edge, z);
    let (w, root, droot, p, q, sgn) = match edge {
        Edge::Beta => {
            let r = (z - mu.alpha).sqrt();
            (z - mu.beta, r, 0.5 / r, pole_beta(), simple_beta(), 1.0)
        }
        // (z-β)^{1/2} and the root inside ∫_α^z R h both carry ±i, which cancel
        // in the first term and give a minus sign in the second.
        Edge::Alpha => {
            let r = (mu.beta - z).sqrt();
            (z - mu.alpha, r, -0.5 / r, pole_alpha(), simple_alpha(), -1.0)
        }
    };
    // f = root / (w² G), k = 1 / (root w G)
    let f = root / (w * w * g);
    let df = f * (droot / root - 2.0 / w - dg / g);
    let k = 1.0 / (root * w * g);
    let dk = -k * (droot / root + 1.0 / w + dg / g);
    let val = add(&scale(5.0 / 72.0 * f, &p), &scale(sgn * 7.0 / 72.0 * k, &q));
    let der = add(&scale(5.0 / 72.0 * df, &p), &scale(sgn * 7.0 / 72.0 * dk, &q));
    (val, der)
}

/// The closed form of S_1 for the requested region, without checking that z lies in it.
/// Close to an endpoint inside its disc the poles cancel analytically but not
/// in floating point, so there S_1 and S_1' come from Cauchy means over a circle.
pub fn s1_formula(mu: &EquilibriumMeasure, z: C, region: S1Region) -> S1Correction {
    let centre = match region {
        S1Region::Outside => None,
        S1Region::BetaDisc => Some(mu.beta),
        S1Region::AlphaDisc => Some(mu.alpha),
    };
    let d = mu.disc_radius();
    if let Some(e) = centre {
        if (z - e).norm() < 0.1 * d {
            let rho = 0.5 * d;
            let m = 48;
            let zero = [[C::new(0.0, 0.0); 2]; 2];
            let (mut value, mut derivative) = (zero, zero);
            for k in 0..m {
                let u = C::from_polar(1.0, 2.0 * PI * k as f64 / m as f64);
                let s = s1_closed(mu, z + rho * u, region).0;
                value = add(&value, &scale(C::new(1.0 / m as f64, 0.0), &s));
                derivative = add(&derivative, &scale(u.conj() / (rho * m as f64), &s));
            }
            return S1Correction { z, region, value, derivative };
        }
    }
    let (value, derivative) = s1_closed(mu, z, region);
    S1Correction { z, region, value, derivative }
}

fn s1_closed(mu: &EquilibriumMeasure, z: C, region: S1Region) -> (Mat2, Mat2) {
    let (bv, bd) = endpoint_outside(mu, z, Edge::Beta);
    let (av, ad) = endpoint_outside(mu, z, Edge::Alpha);
    let mut value = add(&bv, &av);
    let mut derivative = add(&bd, &ad);
    let inner = match region {
        S1Region::Outside => None,
        S1Region::BetaDisc => Some(Edge::Beta),
        S1Region::AlphaDisc => Some(Edge::Alpha),
    };
    if let Some(edge) = inner {
        let (jv, jd) = jump_matrix(mu, z, edge);
        value = add(&value, &scale(-ONE, &jv));
        derivative = add(&derivative, &scale(-ONE, &jd));
    }
    (value, derivative)
}

/// S_1(z) in the given region. Points on a disc boundary belong to both sides.
pub fn s1(mu: &EquilibriumMeasure, z: C, region: S1Region) -> Result<S1Correction> {
    let d = mu.disc_radius();
    let slack = 1e-9 * d;
    let (db, da) = ((z - mu.beta).norm(), (z - mu.alpha).norm());
    let ok = match region {
        S1Region::Outside => db >= d - slack && da >= d - slack,
        S1Region::BetaDisc => db <= d + slack,
        S1Region::AlphaDisc => da <= d + slack,
    };
    if !ok {
        return Err(Error::RegionMismatch);
    }
    Ok(s1_formula(mu, z, region))
}

/// Which representation of ρ_N^{(1)} to use.
#[derive(Debug, Clone)]
pub struct EdgeModel {
    pub measure: EquilibriumMeasure,
    pub n: usize,
    pub side: Edge,
    /// Include the S' bracket with S ≈ I + S_1/N. S_2 and beyond are dropped.
    pub with_s1: bool,
}

impl EdgeModel {
    pub fn new(measure: EquilibriumMeasure, n: usize, side: Edge, with_s1: bool) -> Self {
        Self { measure, n, side, with_s1 }
    }

    /// Real interval on which this side's representation is used.
    pub fn validity(&self) -> (f64, f64) {
        let mu = &self.measure;
        let (zs, d) = (mu.z_star(), mu.disc_radius());
        match self.side {
            Edge::Beta => (zs - d, mu.beta + d),
            Edge::Alpha => (mu.alpha - d, zs + d),
        }
    }

    /// N ρ_N^{(1)} from the Airy parametrix. The Φ'/4Φ - γ'/γ pole at the edge
    /// cancels exactly in the G-form, G'/6G + 1/(4(z-α)).
    pub fn density(&self, lambda: f64) -> Result<f64> {
        let (lo, hi) = self.validity();
        if !(lambda >= lo && lambda <= hi) {
            return Err(Error::OutsideValidity(lambda));
        }
        let mu = &self.measure;
        let nf = self.n as f64;
        let k = (0.75 * nf).powf(2.0 / 3.0);
        let z = C::new(lambda, 0.0);
        let (g, dg) = mu.edge_factor(self.side, z);
        let (g, dg) = (g.re, dg.re);
        let g23 = g.powf(2.0 / 3.0);
        let (sgn, e, coef, a) = match self.side {
            Edge::Beta => (
                1.0,
                mu.beta,
                dg / (6.0 * g) + 0.25 / (lambda - mu.alpha),
                (k * (lambda - mu.alpha)).powf(0.25) * g.powf(1.0 / 6.0),
            ),
            Edge::Alpha => (
                -1.0,
                mu.alpha,
                dg / (6.0 * g) + 0.25 / (lambda - mu.beta),
                (k * (mu.beta - lambda)).powf(0.25) * g.powf(1.0 / 6.0),
            ),
        };
        let phi = sgn * k * (lambda - e) * g23;
        let dphi = sgn * k * (g23 + (lambda - e) * (2.0 / 3.0) * dg / g.cbrt());
        let av = airy_ai(phi)?;
        let (ai, aip) = (av.ai, av.aip);
        let mut total = sgn * (coef * 2.0 * ai * aip + dphi * (aip * aip - phi * ai * ai));
        if self.with_s1 {
            let s = s1_formula(mu, z, region_of(mu, z));
            let v = [C::new(a * ai - aip / a, 0.0), sgn * -I * (a * ai + aip / a)];
            let sm = add(&[[ONE, C::new(0.0, 0.0)], [C::new(0.0, 0.0), ONE]], &scale(C::new(1.0 / nf, 0.0), &s.value));
            let sp = scale(C::new(1.0 / nf, 0.0), &s.derivative);
            let (w, wp) = (apply(&sm, v), apply(&sp, v));
            total += (0.5 * I * (wp[0] * w[1] - w[0] * wp[1])).re;
        }
        Ok(total / nf)
    }
}

/// Edge representation of ρ_N^{(1)}, β side at and above z*, α side below.
pub fn edge_density(mu: &EquilibriumMeasure, n: usize, lambda: f64, with_s1: bool) -> Result<f64> {
    let side = if lambda >= mu.z_star() { Edge::Beta } else { Edge::Alpha };
    EdgeModel::new(mu.clone(), n, side, with_s1).density(lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeCheck {
    #[serde(rename = "N")]
    pub n: usize,
    pub finite_difference: f64,
    pub expectation: f64,
    pub relative: f64,
}

/// Convergence report for log Ẑ_N(t) ≈ N² e_0(t) + e_1(t) + e_2(t)/N².
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub field: String,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    #[serde(rename = "logZhat")]
    pub log_z_hat: Vec<f64>,
    pub e0: f64,
    /// Least-squares fit of r(N) = e_1 + e_2/N² over all N.
    pub fitted_e1: f64,
    pub fitted_e2: f64,
    /// r(N) = log Ẑ_N - N² e_0.
    pub residuals: Vec<f64>,
    /// e_1 refitted on each run of three consecutive N.
    pub window_e1: Vec<f64>,
    pub derivative_checks: Vec<DerivativeCheck>,
}

fn fit_e1_e2(ns: &[usize], r: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = ns.iter().map(|&n| 1.0 / (n * n) as f64).collect();
    let k = xs.len() as f64;
    let (sx, sy) = (xs.iter().sum::<f64>(), r.iter().sum::<f64>());
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(r).map(|(x, y)| x * y).sum();
    let den = k * sxx - sx * sx;
    if den.abs() < 1e-300 {
        return (sy / k, 0.0);
    }
    let e2 = (k * sxy - sx * sy) / den;
    ((sy - e2 * sx) / k, e2)
}

impl ExpansionReport {
    /// max |r(N) - fit| over the N-list.
    pub fn fit_error(&self) -> f64 {
        self.n
            .iter()
            .zip(&self.residuals)
            .map(|(&n, r)| (r - self.fitted_e1 - self.fitted_e2 / (n * n) as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Relative spread of the windowed e_1 fits.
    pub fn window_spread(&self) -> f64 {
        let lo = self.window_e1.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.window_e1.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if self.window_e1.len() < 2 || hi == lo {
            return 0.0;
        }
        (hi - lo) / lo.abs().max(hi.abs())
    }

    /// Successive differences of r(N) shrink in magnitude.
    pub fn residual_differences_shrink(&self) -> bool {
        let d: Vec<f64> = self.residuals.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        d.windows(2).all(|w| w[1] <= w[0] + 1e-12)
    }
}

/// Runs the finite-N pipeline over `ns` and fits the genus-one term.
pub fn verify_expansion(field: &ExternalField, ell: usize, ns: &[usize]) -> Result<ExpansionReport> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("N-list must be non-empty and strictly ascending".into()));
    }
    field.check_integrable()?;
    let e0v = e0(field)?;
    let per_n: Vec<(f64, DerivativeCheck)> = ns
        .par_iter()
        .map(|&n| {
            let lz = log_z_hat(field, n, None)?;
            let d = log_z_t_derivative(field, n, ell, 1e-4)?;
            Ok((
                lz,
                DerivativeCheck { n, finite_difference: d.value, expectation: d.expectation, relative: d.relative_mismatch() },
            ))
        })
        .collect::<Result<_>>()?;
    let log_z_hat: Vec<f64> = per_n.iter().map(|p| p.0).collect();
    let residuals: Vec<f64> = ns.iter().zip(&log_z_hat).map(|(&n, l)| l - (n * n) as f64 * e0v).collect();
    let (fitted_e1, fitted_e2) = fit_e1_e2(ns, &residuals);
    let window_e1 = if ns.len() >= 3 {
        (0..=ns.len() - 3).map(|i| fit_e1_e2(&ns[i..i + 3], &residuals[i..i + 3]).0).collect()
    } else {
        vec![fitted_e1]
    };
    Ok(ExpansionReport {
        field: field.to_string(),
        n: ns.to_vec(),
        log_z_hat,
        e0: e0v,
        fitted_e1,
        fitted_e2,
        residuals,
        window_e1,
        derivative_checks: per_n.into_iter().map(|p| p.1).collect(),
    })
}
