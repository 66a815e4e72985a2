use genuscount::combinatorics::*;
use genuscount::LaurentPolynomial;
use proptest::prelude::*;

fn poly(terms: &[(i32, i128)]) -> LaurentPolynomial {
    LaurentPolynomial::from_terms(terms.iter().copied())
}

/// Harer-Zagier: (k+1) e_g(k) = 2(2k-1) e_g(k-1) + (k-1)(2k-1)(2k-3) e_{g-1}(k-2).
fn harer_zagier(k: usize) -> Vec<i128> {
    let mut e = vec![vec![0i128; k / 2 + 2]; k + 1];
    e[0][0] = 1;
    for m in 1..=k {
        for g in 0..=m / 2 {
            let mut v = 2 * (2 * m as i128 - 1) * e[m - 1][g];
            if g > 0 && m >= 2 {
                v += (m as i128 - 1) * (2 * m as i128 - 1) * (2 * m as i128 - 3) * e[m - 2][g - 1];
            }
            e[m][g] = v / (m as i128 + 1);
        }
    }
    e[k].clone()
}

/// Counts index assignments compatible with every contraction <M_ij M_kl> = δ_il δ_jk,
/// summed over couplings, by looping over all N^H index vectors.
fn index_count_moment(valences: &[usize], n: usize) -> u64 {
    let h: usize = valences.iter().sum();
    let mut next = Vec::new();
    for &j in valences {
        let base = next.len();
        for k in 0..j {
            next.push(base + (k + 1) % j);
        }
    }
    let mut matchings = Vec::new();
    fn rec(p: &mut Vec<Option<usize>>, out: &mut Vec<Vec<(usize, usize)>>) {
        match p.iter().position(Option::is_none) {
            None => out.push(p.iter().enumerate().filter(|&(a, b)| a < b.unwrap()).map(|(a, b)| (a, b.unwrap())).collect()),
            Some(a) => {
                for b in a + 1..p.len() {
                    if p[b].is_none() {
                        p[a] = Some(b);
                        p[b] = Some(a);
                        rec(p, out);
                        p[a] = None;
                        p[b] = None;
                    }
                }
            }
        }
    }
    rec(&mut vec![None; h], &mut matchings);
    let mut total = 0;
    let mut idx = vec![0usize; h];
    loop {
        for m in &matchings {
            if m.iter().all(|&(a, b)| idx[a] == idx[next[b]] && idx[next[a]] == idx[b]) {
                total += 1;
            }
        }
        let mut d = 0;
        loop {
            if d == h {
                return total;
            }
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

#[test]
fn coupling_counts_are_double_factorials() {
    let cases = [(VertexProfile::uniform(4, 1).unwrap(), 3), (VertexProfile::uniform(2, 1).unwrap(), 1), (VertexProfile::uniform(4, 2).unwrap(), 105)];
    for (p, n) in cases {
        assert_eq!(enumerate_couplings(&p).unwrap().count(), n);
        assert_eq!(summarize(&p).unwrap().total(), n as u64);
    }
    let p = VertexProfile::new(vec![(3, 2), (4, 1), (2, 2)]).unwrap();
    assert_eq!(summarize(&p).unwrap().total(), 135135);
}

#[test]
fn small_profile_polynomials() {
    let q4 = VertexProfile::uniform(4, 1).unwrap();
    assert_eq!(diagram_polynomial(&q4).unwrap(), poly(&[(2, 2), (0, 1)]));
    assert_eq!(moment_polynomial(&q4).unwrap(), poly(&[(3, 2), (1, 1)]));
    assert_eq!(connected_polynomial(&q4).unwrap(), poly(&[(2, 2), (0, 1)]));

    let q2 = VertexProfile::uniform(2, 1).unwrap();
    assert_eq!(diagram_polynomial(&q2).unwrap(), poly(&[(2, 1)]));
    assert_eq!(moment_polynomial(&q2).unwrap(), poly(&[(2, 1)]));

    let q22 = VertexProfile::uniform(2, 2).unwrap();
    assert_eq!(moment_polynomial(&q22).unwrap(), poly(&[(4, 1), (2, 2)]));

    let q44 = VertexProfile::uniform(4, 2).unwrap();
    assert_eq!(connected_polynomial(&q44).unwrap(), poly(&[(2, 36), (0, 60)]));
    let summary = summarize(&q44).unwrap();
    let disconnected: u64 = summary.tally.iter().filter(|(k, _)| !k.2).map(|(_, v)| v).sum();
    assert_eq!(disconnected, 9);
}

#[test]
fn censuses() {
    let c = map_census(&VertexProfile::uniform(4, 1).unwrap()).unwrap();
    assert_eq!((c.count(0), c.count(1)), (2, 1));
    let c = map_census(&VertexProfile::uniform(4, 2).unwrap()).unwrap();
    assert_eq!((c.count(0), c.count(1), c.count(2)), (36, 60, 0));
    let c = map_census(&VertexProfile::uniform(2, 1).unwrap()).unwrap();
    assert_eq!(c.kappa.len(), 1);
    assert_eq!(c.count(0), 1);
}

#[test]
fn census_matches_connected_polynomial() {
    for p in [VertexProfile::uniform(4, 2).unwrap(), VertexProfile::uniform(3, 4).unwrap(), VertexProfile::uniform(6, 2).unwrap()] {
        let c = map_census(&p).unwrap();
        let rebuilt = LaurentPolynomial::from_terms(c.kappa.iter().map(|(&g, &k)| (2 - 2 * g as i32, k as i128)));
        assert_eq!(rebuilt, connected_polynomial(&p).unwrap());
    }
}

#[test]
fn one_vertex_moments_match_harer_zagier() {
    for k in 1..=5u32 {
        let m = moment_polynomial(&VertexProfile::uniform(2 * k, 1).unwrap()).unwrap();
        let eps = harer_zagier(k as usize);
        let expect = LaurentPolynomial::from_terms(eps.iter().enumerate().map(|(g, &e)| (k as i32 + 1 - 2 * g as i32, e)));
        assert_eq!(m, expect, "k={k}");
        assert_eq!(m.at_one(), double_factorial_odd(2 * k as usize) as i128);
    }
}

#[test]
fn moments_match_literal_index_sums() {
    for (valences, counts) in [(vec![4usize], vec![(4u32, 1u32)]), (vec![2, 2], vec![(2, 2)]), (vec![3, 3], vec![(3, 2)]), (vec![4, 2], vec![(4, 1), (2, 1)])] {
        let m = moment_polynomial(&VertexProfile::new(counts).unwrap()).unwrap();
        for n in 1..=3usize {
            assert_eq!(m.eval(n as f64), index_count_moment(&valences, n) as f64, "{valences:?} N={n}");
        }
    }
}

#[test]
fn cumulant_relation() {
    let r = check_cumulant_relation(2, 4).unwrap();
    assert_eq!(r.rows[1].1, poly(&[(4, 4), (2, 40), (0, 61)]));
    assert!(r.holds());
    assert!(check_cumulant_relation(3, 4).unwrap().holds());
    assert!(check_cumulant_relation(4, 2).unwrap().holds());
    assert!(check_cumulant_relation(4, 3).unwrap().holds());
    let r = check_cumulant_relation(1, 6).unwrap();
    assert_eq!(r.rows[0].1, r.rows[0].2);
}

#[test]
fn euler_characteristic_and_genus_are_consistent() {
    let p = VertexProfile::new(vec![(4, 1), (2, 2)]).unwrap();
    for c in enumerate_couplings(&p).unwrap() {
        let d = analyze_diagram(&p, &c).unwrap();
        let chi = p.vertex_count() as i32 - p.edge_count() as i32 + d.faces as i32;
        assert_eq!(d.euler_characteristic, chi);
        let from_components: i32 = d.component_genera.iter().map(|&g| 2 - 2 * g as i32).sum();
        assert_eq!(from_components, chi);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Reordering the valence groups relabels vertices and must not change any statistic.
    #[test]
    fn census_invariant_under_relabeling(a in 1u32..5, b in 1u32..5, na in 1u32..3, nb in 1u32..3) {
        prop_assume!(a != b && (a * na + b * nb) % 2 == 0 && a * na + b * nb <= 12);
        let p = VertexProfile::new(vec![(a, na), (b, nb)]).unwrap();
        let q = VertexProfile::new(vec![(b, nb), (a, na)]).unwrap();
        prop_assert_eq!(summarize(&p).unwrap(), summarize(&q).unwrap());
    }
}
