use genuscount::asymptotics::*;
use genuscount::combinatorics::{connected_polynomial, VertexProfile};
use genuscount::equilibrium::{Edge, EquilibriumMeasure, ExternalField};
use genuscount::finite_n::FiniteN;
use genuscount::Error;
use num_complex::Complex64 as C;

mod common;
use common::*;

#[test]
fn e0_vanishes_at_zero_and_matches_quartic_closed_form() {
    assert!(e0(&ExternalField::gaussian()).unwrap().abs() < 1e-14);
    for t in [0.005, 0.02, 0.05] {
        let v = e0(&ExternalField::quartic(t)).unwrap();
        assert!((v - quartic_e0(t)).abs() < 1e-10, "t={t}: {v} vs {}", quartic_e0(t));
    }
    let v = e0(&ExternalField::new(vec![0.0, 0.2])).unwrap();
    assert!((v + 0.5 * 1.4f64.ln()).abs() < 1e-12);
}

#[test]
fn e0_slopes_count_planar_maps() {
    let d4 = e0_t_derivative(&ExternalField::gaussian(), 4, 1e-4).unwrap();
    assert!((d4 + 2.0).abs() < 1e-3 * 2.0, "{d4}");
    let d2 = e0_t_derivative(&ExternalField::gaussian(), 2, 1e-4).unwrap();
    assert!((d2 + 1.0).abs() < 1e-6, "{d2}");
}

#[test]
fn genus_series_coefficients() {
    let s = GenusExpansion::build(&[4], 2).unwrap();
    assert_eq!(s.coefficient(0, &[1]), 2);
    assert_eq!(s.coefficient(1, &[1]), 1);
    assert_eq!(s.coefficient(0, &[2]), 18);
    assert_eq!(s.coefficient(1, &[2]), 30);
    assert_eq!(s.coefficient(2, &[1]), 0);
    let f = ExternalField::quartic(1e-3);
    assert!((s.eval(0, &f) - (-2e-3 + 18e-6)).abs() < 1e-15);
    assert!((s.eval(1, &f) - (-1e-3 + 30e-6)).abs() < 1e-15);
    assert_eq!(s.eval(0, &ExternalField::gaussian()), 0.0);
}

#[test]
fn genus_series_reproduces_connected_polynomials() {
    let s = GenusExpansion::build(&[3, 4], 3).unwrap();
    for n in [[0u32, 1], [2, 0], [0, 2], [2, 1], [0, 3]] {
        let counts: Vec<(u32, u32)> = [3, 4].iter().zip(&n).filter(|(_, &k)| k > 0).map(|(&v, &k)| (v, k)).collect();
        let exact = connected_polynomial(&VertexProfile::new(counts).unwrap()).unwrap();
        assert_eq!(s.topological_polynomial(&n), exact, "n={n:?}");
    }
}

#[test]
fn e0_taylor_coefficients_match_census() {
    let s = GenusExpansion::build(&[4], 3).unwrap();
    let h = 2e-4;
    let v: Vec<f64> = (1..=3).map(|k| e0(&ExternalField::quartic(k as f64 * h)).unwrap()).collect();
    // cubic through the origin and three samples
    let c3 = (v[2] - 3.0 * v[1] + 3.0 * v[0]) / (6.0 * h.powi(3));
    let c2 = (v[1] - 2.0 * v[0]) / (2.0 * h * h) - 3.0 * c3 * h;
    let c1 = v[0] / h - c2 * h - c3 * h * h;
    let want1 = -s.coefficient(0, &[1]).to_f64();
    let want2 = s.coefficient(0, &[2]).to_f64();
    assert!((c1 / want1 - 1.0).abs() < 1e-3, "{c1}");
    assert!((c2 / want2 - 1.0).abs() < 1e-3, "{c2}");
    let f = ExternalField::quartic(1e-3);
    assert!((e0(&f).unwrap() - s.eval(0, &f)).abs() < 1e-8);
}

#[test]
fn bulk_correction_vanishes_at_centre_and_guards_edges() {
    let mu = EquilibriumMeasure::solve(&ExternalField::gaussian()).unwrap();
    // 1/(λ-β) - 1/(λ-α) = -1 at the centre and the phase is πN.
    for n in [3usize, 8, 13] {
        let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
        let want = 1.0 / std::f64::consts::PI + sign / (4.0 * std::f64::consts::PI * n as f64);
        assert!((bulk_density(&mu, n, 0.0).unwrap() - want).abs() < 1e-14);
    }
    let margin = mu.disc_radius();
    assert!(matches!(bulk_density(&mu, 8, 2.0 - margin / 2.0), Err(Error::TooCloseToEdge { .. })));
    assert!(bulk_density(&mu, 8, 2.0 - 2.0 * margin).is_ok());
}

#[test]
fn bulk_expansion_error_decays_quadratically() {
    let mu = EquilibriumMeasure::solve(&ExternalField::gaussian()).unwrap();
    let err = |n: usize| {
        let s = FiniteN::compute(&ExternalField::gaussian(), n, None).unwrap().system;
        (s.one_point_density(0.7).unwrap() - bulk_density(&mu, n, 0.7).unwrap()).abs()
    };
    let (e4, e8, e16) = (err(4), err(8), err(16));
    assert!(e8 < e4 && e16 < e8);
    let ratio = e8 / e16;
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    let sup_first = |n: usize| {
        let s = FiniteN::compute(&ExternalField::gaussian(), n, None).unwrap().system;
        (0..=40).map(|k| -1.0 + k as f64 / 20.0).map(|x| (s.one_point_density(x).unwrap() - mu.psi(x)).abs()).fold(0.0, f64::max)
    };
    let (s4, s8, s16) = (sup_first(4), sup_first(8), sup_first(16));
    assert!(s8 < s4 && s16 < s8 && 16.0 * s16 < 2.0 * 4.0 * s4);
}

fn edge_sup_error(n: usize, with_s1: bool) -> f64 {
    let field = ExternalField::gaussian();
    let mu = EquilibriumMeasure::solve(&field).unwrap();
    let s = FiniteN::compute(&field, n, None).unwrap().system;
    let model = EdgeModel::new(mu.clone(), n, Edge::Beta, with_s1);
    let w = (n as f64).powf(-2.0 / 3.0);
    let pts: Vec<f64> = (0..=40).map(|k| mu.beta - w * k as f64 / 40.0).collect();
    let finite: Vec<f64> = pts.iter().map(|&x| s.one_point_density(x).unwrap()).collect();
    let top = finite.iter().cloned().fold(0.0, f64::max);
    pts.iter().zip(&finite).map(|(&x, r)| (model.density(x).unwrap() - r).abs()).fold(0.0, f64::max) / top
}

#[test]
fn airy_edge_model_tracks_finite_density() {
    let (e8, e16) = (edge_sup_error(8, false), edge_sup_error(16, false));
    assert!(e8 < 0.15 && e16 < e8, "{e8} {e16}");
    let (c8, c16) = (edge_sup_error(8, true), edge_sup_error(16, true));
    assert!(c8 <= e8 && c16 <= e16, "{c8} {c16}");
}

#[test]
fn edge_model_is_regular_at_the_endpoint_and_mirrored() {
    let f = ExternalField::quartic(0.03);
    let mu = EquilibriumMeasure::solve(&f).unwrap();
    let b = EdgeModel::new(mu.clone(), 10, Edge::Beta, true);
    let a = EdgeModel::new(mu.clone(), 10, Edge::Alpha, true);
    let at = b.density(mu.beta).unwrap();
    let near = b.density(mu.beta - 1e-7).unwrap();
    assert!(at.is_finite() && (at - near).abs() < 1e-5 * at);
    for x in [0.3, 1.0, mu.beta - 0.05, mu.beta] {
        let (p, q) = (b.density(x).unwrap(), a.density(-x).unwrap());
        assert!((p - q).abs() < 1e-10 * p.abs().max(1e-300), "x={x}: {p} vs {q}");
    }
    assert!(matches!(b.density(mu.alpha), Err(Error::OutsideValidity(_))));
}

#[test]
fn edge_window_mass_matches_finite_density() {
    let field = ExternalField::gaussian();
    let mu = EquilibriumMeasure::solve(&field).unwrap();
    let (zs, hi) = (mu.z_star(), mu.beta + mu.disc_radius());
    let mut gaps = Vec::new();
    for n in [6usize, 12] {
        let s = FiniteN::compute(&field, n, None).unwrap().system;
        let model = EdgeModel::new(mu.clone(), n, Edge::Beta, false);
        let m = 2000;
        let h = (hi - zs) / m as f64;
        let (mut a, mut b) = (0.0, 0.0);
        for k in 0..=m {
            let x = zs + k as f64 * h;
            let w = if k == 0 || k == m { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            a += w * model.density(x).unwrap();
            b += w * s.one_point_density(x).unwrap();
        }
        gaps.push(((a - b) * h / 3.0).abs());
    }
    assert!(gaps[0] < 0.5 / 6.0 && gaps[1] < gaps[0], "{gaps:?}");
}

#[test]
fn s1_is_symmetric_traceless_and_decays() {
    let mu = EquilibriumMeasure::solve(&ExternalField::new(vec![0.05, 0.0, -0.03, 0.04])).unwrap();
    for z in [C::new(0.3, 0.9), C::new(-3.0, 0.2), C::new(mu.beta + 0.05, 0.01), C::new(mu.alpha - 0.02, -0.03)] {
        let s = s1_formula(&mu, z, region_of(&mu, z)).value;
        assert!((s[0][1] - s[1][0]).norm() < 1e-14 * norm(&s));
        assert!((s[0][0] + s[1][1]).norm() < 1e-14 * norm(&s));
    }
    let big = |r: f64| r * norm(&s1(&mu, C::new(r, 0.5 * r), S1Region::Outside).unwrap().value);
    let (a, b) = (big(1e3), big(1e6));
    assert!((a - b).abs() < 1e-2 * a, "{a} {b}");
}

#[test]
fn s1_regions_are_enforced() {
    let mu = EquilibriumMeasure::solve(&ExternalField::gaussian()).unwrap();
    let near = C::new(mu.beta + 0.5 * mu.disc_radius(), 0.0);
    assert!(matches!(s1(&mu, near, S1Region::Outside), Err(Error::RegionMismatch)));
    assert!(matches!(s1(&mu, near, S1Region::AlphaDisc), Err(Error::RegionMismatch)));
    assert!(s1(&mu, near, S1Region::BetaDisc).is_ok());
    assert!(matches!(s1(&mu, C::new(0.0, 1.0), S1Region::BetaDisc), Err(Error::RegionMismatch)));
}

#[test]
fn s1_general_matches_quartic_specialisation() {
    let mu = EquilibriumMeasure::solve(&ExternalField::quartic(0.05)).unwrap();
    let d = mu.disc_radius();
    let outside = [
        C::new(0.3, 0.7),
        C::new(-0.5, -1.2),
        C::new(2.5, 0.4),
        C::new(-4.0, 1.0),
        C::new(0.0, 0.1),
        C::new(1.1, -0.2),
        C::new(-1.3, 0.05),
        C::new(7.0, -3.0),
    ];
    for z in outside {
        let g = s1(&mu, z, S1Region::Outside).unwrap().value;
        let q = quartic_outside(mu.beta, z);
        assert!(diff(&g, &q) < 1e-10 * norm(&q).max(1.0), "z={z}");
    }
    for (r, th) in [(0.5, 0.4), (0.8, 2.5)] {
        let z = mu.beta + C::from_polar(r * d, th);
        let g = s1(&mu, z, S1Region::BetaDisc).unwrap().value;
        let q = quartic_beta_disc(&mu, z);
        assert!(diff(&g, &q) < 1e-10 * norm(&q).max(1.0), "z={z}: {}", diff(&g, &q));
    }
}

#[test]
fn s1_jump_on_disc_boundaries_is_v1() {
    let mu = EquilibriumMeasure::solve(&ExternalField::new(vec![0.0, 0.0, 0.02, 0.03])).unwrap();
    let d = mu.disc_radius();
    for th in [0.3, 1.7, 2.9, -1.1, -2.4] {
        let z = mu.beta + C::from_polar(d, th);
        let jump = {
            let o = s1(&mu, z, S1Region::Outside).unwrap().value;
            let i = s1(&mu, z, S1Region::BetaDisc).unwrap().value;
            combo(C::new(1.0, 0.0), o, C::new(-1.0, 0.0), i)
        };
        let integral = segment_integral(&mu, mu.beta, z);
        let ra = (z - mu.alpha).sqrt();
        let rb = (z - mu.beta).sqrt();
        let v1 = combo(
            5.0 * ra / (72.0 * rb * integral),
            [[C::new(-1.0, 0.0), I], [I, C::new(1.0, 0.0)]],
            7.0 * rb / (72.0 * ra * integral),
            [[C::new(1.0, 0.0), I], [I, C::new(-1.0, 0.0)]],
        );
        assert!(diff(&jump, &v1) < 1e-8 * norm(&v1), "θ={th}: {}", diff(&jump, &v1));

        let za = mu.alpha + C::from_polar(d, th);
        let o = s1(&mu, za, S1Region::Outside).unwrap().value;
        let i = s1(&mu, za, S1Region::AlphaDisc).unwrap().value;
        let jump_a = combo(C::new(1.0, 0.0), o, C::new(-1.0, 0.0), i);
        let ia = segment_integral(&mu, mu.alpha, za);
        let (rb, ra) = ((za - mu.beta).sqrt(), (za - mu.alpha).sqrt());
        let v1a = combo(
            5.0 * rb / (72.0 * ra * ia),
            [[C::new(-1.0, 0.0), -I], [-I, C::new(1.0, 0.0)]],
            7.0 * ra / (72.0 * rb * ia),
            [[C::new(1.0, 0.0), -I], [-I, C::new(-1.0, 0.0)]],
        );
        assert!(diff(&jump_a, &v1a) < 1e-8 * norm(&v1a), "α θ={th}: {}", diff(&jump_a, &v1a));
    }
}

#[test]
fn s1_inside_discs_has_no_endpoint_pole() {
    let mu = EquilibriumMeasure::solve(&ExternalField::quartic(0.02)).unwrap();
    for eps in [1e-2, 1e-4] {
        let zb = C::new(mu.beta + eps, eps);
        let za = C::new(mu.alpha - eps, eps);
        assert!(norm(&s1(&mu, zb, S1Region::BetaDisc).unwrap().value) < 1.0);
        assert!(norm(&s1(&mu, za, S1Region::AlphaDisc).unwrap().value) < 1.0);
    }
}

#[test]
fn s1_derivative_matches_difference_quotient() {
    let mu = EquilibriumMeasure::solve(&ExternalField::quartic(0.02)).unwrap();
    let h = 1e-5;
    for (z, r) in [
        (C::new(0.4, 0.8), S1Region::Outside),
        (C::new(mu.beta - 0.1, 0.0), S1Region::BetaDisc),
        (C::new(mu.alpha + 0.05, 0.02), S1Region::AlphaDisc),
    ] {
        let s = s1(&mu, z, r).unwrap();
        let p = s1_formula(&mu, z + h, r).value;
        let q = s1_formula(&mu, z - h, r).value;
        let fd = combo(C::new(0.5 / h, 0.0), p, C::new(-0.5 / h, 0.0), q);
        assert!(diff(&fd, &s.derivative) < 1e-6 * norm(&s.derivative).max(1.0), "{z}");
    }
}

#[test]
fn verify_expansion_at_zero_field_is_trivial() {
    let r = verify_expansion(&ExternalField::gaussian(), 4, &[2, 4]).unwrap();
    assert!(r.residuals.iter().all(|x| x.abs() < 1e-12));
    assert!(r.e0 == 0.0 || r.e0.abs() < 1e-14);
    assert!(matches!(verify_expansion(&ExternalField::quartic(-0.1), 4, &[2]), Err(Error::DivergentWeight(_))));
    assert!(verify_expansion(&ExternalField::gaussian(), 4, &[4, 2]).is_err());
}

#[test]
fn fitted_genus_one_term_for_quartic() {
    let t = 0.02;
    let r = verify_expansion(&ExternalField::quartic(t), 4, &[4, 6, 8, 10]).unwrap();
    assert!(r.residual_differences_shrink());
    assert!(r.window_spread() < 0.05, "{:?}", r.window_e1);
    assert!((r.fitted_e1 / quartic_e1(t) - 1.0).abs() < 0.05, "{} vs {}", r.fitted_e1, quartic_e1(t));
    assert!(r.derivative_checks.iter().all(|c| c.relative < 1e-6));
}

#[test]
fn truncation_error_shrinks_by_four_when_n_doubles() {
    let t = 0.01;
    let f = ExternalField::quartic(t);
    let (a, b) = (quartic_e0(t), quartic_e1(t));
    let err = |n: usize| {
        let lz = genuscount::finite_n::log_z_hat(&f, n, None).unwrap();
        (lz - (n * n) as f64 * a - b).abs()
    };
    let ratio = err(4) / err(8);
    assert!((3.0..6.0).contains(&ratio), "ratio {ratio}");
}
