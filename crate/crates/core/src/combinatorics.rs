//! Wick couplings, ribbon-graph statistics and genus-stratified map counts.
//!
//! Vertices are numbered in profile order and the half-edges of a vertex get
//! consecutive labels in their cyclic order. A coupling pairs the labels; the
//! faces of the resulting ribbon graph are the orbits of
//! `h -> next_at_vertex(partner(h))`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laurent::LaurentPolynomial;

pub const DEFAULT_CAP: usize = 20;

/// Multiset of vertex valences, stored as (valence, count) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexProfile {
    counts: Vec<(u32, u32)>,
}

impl VertexProfile {
    pub fn new(counts: Vec<(u32, u32)>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidInput("empty vertex profile".into()));
        }
        for &(j, n) in &counts {
            if j == 0 || n == 0 {
                return Err(Error::InvalidInput(format!(
                    "valence and count must be positive, got ({j}, {n})"
                )));
            }
        }
        Ok(Self { counts })
    }

    /// `n` vertices all of valence `j`.
    pub fn uniform(valence: u32, vertices: u32) -> Result<Self> {
        Self::new(vec![(valence, vertices)])
    }

    pub fn counts(&self) -> &[(u32, u32)] {
        &self.counts
    }

    pub fn half_edges(&self) -> usize {
        self.counts.iter().map(|&(j, n)| (j * n) as usize).sum()
    }

    pub fn vertex_count(&self) -> usize {
        self.counts.iter().map(|&(_, n)| n as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.half_edges() / 2
    }

    /// Valence of each vertex in label order.
    pub fn valences(&self) -> Vec<u32> {
        self.counts
            .iter()
            .flat_map(|&(j, n)| std::iter::repeat_n(j, n as usize))
            .collect()
    }
}

impl Serialize for VertexProfile {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.counts.len()))?;
        for (j, n) in &self.counts {
            map.serialize_entry(&j.to_string(), n)?;
        }
        map.end()
    }
}

/// Perfect matching of the labels 1..=H in canonical form: first entries
/// increase and each pair is ordered.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WickCoupling {
    pub pairs: Vec<(usize, usize)>,
}

impl WickCoupling {
    /// Zero-based partner table.
    fn partners(&self) -> Vec<usize> {
        let mut p = vec![usize::MAX; 2 * self.pairs.len()];
        for &(a, b) in &self.pairs {
            p[a - 1] = b - 1;
            p[b - 1] = a - 1;
        }
        p
    }

    fn from_partners(partner: &[usize]) -> Self {
        let pairs = (0..partner.len())
            .filter(|&h| h < partner[h])
            .map(|h| (h + 1, partner[h] + 1))
            .collect();
        Self { pairs }
    }
}

/// A coupling together with its face, component and genus statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDiagram {
    pub profile: VertexProfile,
    pub coupling: WickCoupling,
    pub faces: usize,
    pub components: usize,
    pub euler_characteristic: i32,
    pub component_genera: Vec<u32>,
}

impl LabeledDiagram {
    pub fn is_connected(&self) -> bool {
        self.components == 1
    }

    /// Genus of a connected diagram.
    pub fn genus(&self) -> Option<u32> {
        self.is_connected().then(|| self.component_genera[0])
    }
}

/// Counts of connected diagrams by genus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MapCensus {
    pub profile: VertexProfile,
    pub kappa: BTreeMap<u32, u64>,
}

impl MapCensus {
    pub fn count(&self, genus: u32) -> u64 {
        self.kappa.get(&genus).copied().unwrap_or(0)
    }

    pub fn connected_total(&self) -> u64 {
        self.kappa.values().sum()
    }
}

/// Tally of every coupling of a profile by (F, χ, connected).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DiagramSummary {
    pub tally: BTreeMap<(usize, i32, bool), u64>,
}

impl DiagramSummary {
    pub fn total(&self) -> u64 {
        self.tally.values().sum()
    }

    fn merge(mut self, other: Self) -> Self {
        for (k, v) in other.tally {
            *self.tally.entry(k).or_insert(0) += v;
        }
        self
    }

    /// Σ N^χ over all couplings.
    pub fn diagram_polynomial(&self) -> LaurentPolynomial {
        LaurentPolynomial::from_terms(self.tally.iter().map(|(&(_, chi, _), &c)| (chi, c as i128)))
    }

    /// Σ N^F over all couplings, the Gaussian moment of the trace product.
    pub fn moment_polynomial(&self) -> LaurentPolynomial {
        LaurentPolynomial::from_terms(
            self.tally.iter().map(|(&(f, _, _), &c)| (f as i32, c as i128)),
        )
    }

    /// Σ N^χ over connected couplings.
    pub fn connected_polynomial(&self) -> LaurentPolynomial {
        LaurentPolynomial::from_terms(
            self.tally
                .iter()
                .filter(|(&(_, _, conn), _)| conn)
                .map(|(&(_, chi, _), &c)| (chi, c as i128)),
        )
    }

    pub fn census(&self, profile: &VertexProfile) -> MapCensus {
        let mut kappa = BTreeMap::new();
        for (&(_, chi, conn), &c) in &self.tally {
            if conn {
                *kappa.entry(((2 - chi) / 2) as u32).or_insert(0) += c;
            }
        }
        MapCensus { profile: profile.clone(), kappa }
    }
}

struct Layout {
    vertex_of: Vec<usize>,
    next_at_vertex: Vec<usize>,
    vertices: usize,
}

impl Layout {
    fn new(profile: &VertexProfile) -> Self {
        let mut vertex_of = Vec::new();
        let mut next_at_vertex = Vec::new();
        for (v, j) in profile.valences().into_iter().enumerate() {
            let base = vertex_of.len();
            for k in 0..j as usize {
                vertex_of.push(v);
                next_at_vertex.push(base + (k + 1) % j as usize);
            }
        }
        Self { vertex_of, next_at_vertex, vertices: profile.vertex_count() }
    }

    /// Returns (faces, component root of each vertex, faces per root).
    fn trace(&self, partner: &[usize]) -> (usize, Vec<usize>, Vec<usize>) {
        let h = partner.len();
        let mut parent: Vec<usize> = (0..self.vertices).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for a in 0..h {
            let (ra, rb) = (find(&mut parent, self.vertex_of[a]), find(&mut parent, self.vertex_of[partner[a]]));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        let roots: Vec<usize> = (0..self.vertices).map(|v| find(&mut parent, v)).collect();

        let mut seen = vec![false; h];
        let mut faces = 0;
        let mut faces_at = vec![0; self.vertices];
        for start in 0..h {
            if seen[start] {
                continue;
            }
            faces += 1;
            faces_at[roots[self.vertex_of[start]]] += 1;
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                x = self.next_at_vertex[partner[x]];
            }
        }
        (faces, roots, faces_at)
    }

    fn summarize_one(&self, partner: &[usize]) -> (usize, i32, bool) {
        let (faces, roots, _) = self.trace(partner);
        let chi = self.vertices as i32 - (partner.len() / 2) as i32 + faces as i32;
        let connected = roots.iter().all(|&r| r == roots[0]);
        (faces, chi, connected)
    }
}

fn check_profile(profile: &VertexProfile, cap: usize) -> Result<usize> {
    let h = profile.half_edges();
    if h > cap {
        return Err(Error::CapExceeded { half_edges: h, cap });
    }
    if h % 2 == 1 {
        return Err(Error::EmptyEnumeration(h));
    }
    Ok(h)
}

/// Number of couplings of `h` labels, (h-1)!!.
pub fn double_factorial_odd(h: usize) -> u64 {
    (1..h as u64).step_by(2).product()
}

/// Iterator over all couplings in lexicographic order of the partner choices.
pub struct CouplingIter {
    h: usize,
    index: u64,
    total: u64,
}

impl Iterator for CouplingIter {
    type Item = WickCoupling;

    fn next(&mut self) -> Option<WickCoupling> {
        if self.index >= self.total {
            return None;
        }
        let partner = decode(self.h, self.index, self.total);
        self.index += 1;
        Some(WickCoupling::from_partners(&partner))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.total - self.index) as usize;
        (n, Some(n))
    }
}

/// Mixed-radix decoding of a coupling index: the most significant digit picks
/// the partner of the smallest free label.
fn decode(h: usize, mut index: u64, total: u64) -> Vec<usize> {
    let mut partner = vec![usize::MAX; h];
    let mut free: Vec<usize> = (0..h).collect();
    let mut block = total;
    while !free.is_empty() {
        let radix = (free.len() - 1) as u64;
        block /= radix;
        let choice = (index / block) as usize;
        index %= block;
        let a = free.remove(0);
        let b = free.remove(choice);
        partner[a] = b;
        partner[b] = a;
    }
    partner
}

pub fn enumerate_couplings(profile: &VertexProfile) -> Result<CouplingIter> {
    enumerate_couplings_with_cap(profile, DEFAULT_CAP)
}

pub fn enumerate_couplings_with_cap(profile: &VertexProfile, cap: usize) -> Result<CouplingIter> {
    let h = check_profile(profile, cap)?;
    Ok(CouplingIter { h, index: 0, total: double_factorial_odd(h) })
}

pub fn analyze_diagram(profile: &VertexProfile, coupling: &WickCoupling) -> Result<LabeledDiagram> {
    let h = profile.half_edges();
    let partner = coupling.partners();
    if partner.len() != h || partner.iter().enumerate().any(|(a, &b)| b >= h || partner[b] != a || a == b) {
        return Err(Error::InvalidInput("coupling is not a pairing of the profile's half-edges".into()));
    }
    let layout = Layout::new(profile);
    let (faces, roots, faces_at) = layout.trace(&partner);
    let mut comps: BTreeMap<usize, (i32, i32)> = BTreeMap::new();
    for v in 0..layout.vertices {
        comps.entry(roots[v]).or_insert((0, 0)).0 += 1;
    }
    for a in 0..h {
        comps.get_mut(&roots[layout.vertex_of[a]]).unwrap().1 += 1;
    }
    let component_genera = comps
        .iter()
        .map(|(&r, &(v, half))| {
            let chi = v - half / 2 + faces_at[r] as i32;
            ((2 - chi) / 2) as u32
        })
        .collect();
    Ok(LabeledDiagram {
        profile: profile.clone(),
        coupling: coupling.clone(),
        faces,
        components: comps.len(),
        euler_characteristic: layout.vertices as i32 - (h / 2) as i32 + faces as i32,
        component_genera,
    })
}

/// Depth-first walk over all completions of a partial matching.
fn walk(layout: &Layout, partner: &mut [usize], out: &mut DiagramSummary) {
    let Some(a) = partner.iter().position(|&p| p == usize::MAX) else {
        *out.tally.entry(layout.summarize_one(partner)).or_insert(0) += 1;
        return;
    };
    for b in a + 1..partner.len() {
        if partner[b] == usize::MAX {
            partner[a] = b;
            partner[b] = a;
            walk(layout, partner, out);
            partner[a] = usize::MAX;
            partner[b] = usize::MAX;
        }
    }
}

/// Fixes the first `depth` pairs of the canonical matching; one prefix per task.
fn prefixes(h: usize, depth: usize) -> Vec<Vec<usize>> {
    let mut level = vec![vec![usize::MAX; h]];
    for _ in 0..depth.min(h / 2) {
        let mut next = Vec::new();
        for p in level {
            let a = p.iter().position(|&x| x == usize::MAX).unwrap();
            for b in a + 1..h {
                if p[b] == usize::MAX {
                    let mut q = p.clone();
                    q[a] = b;
                    q[b] = a;
                    next.push(q);
                }
            }
        }
        level = next;
    }
    level
}

/// Enumerates every coupling once and tallies its statistics.
pub fn summarize(profile: &VertexProfile) -> Result<DiagramSummary> {
    summarize_with_cap(profile, DEFAULT_CAP)
}

pub fn summarize_with_cap(profile: &VertexProfile, cap: usize) -> Result<DiagramSummary> {
    let h = check_profile(profile, cap)?;
    let layout = Layout::new(profile);
    let depth = if h >= 12 { 2 } else { 0 };
    let summary = prefixes(h, depth)
        .into_par_iter()
        .map(|mut p| {
            let mut s = DiagramSummary::default();
            walk(&layout, &mut p, &mut s);
            s
        })
        .reduce(DiagramSummary::default, DiagramSummary::merge);
    Ok(summary)
}

/// Summary for a profile, with odd half-edge totals mapped to the empty tally.
fn summary_or_empty(profile: &VertexProfile) -> Result<DiagramSummary> {
    match summarize(profile) {
        Err(Error::EmptyEnumeration(_)) => Ok(DiagramSummary::default()),
        other => other,
    }
}

/// Σ N^χ over all couplings; zero for odd half-edge totals.
pub fn diagram_polynomial(profile: &VertexProfile) -> Result<LaurentPolynomial> {
    Ok(summary_or_empty(profile)?.diagram_polynomial())
}

/// Σ N^F over all couplings, i.e. the Gaussian moment of ∏ (Tr M^j)^{n_j}.
pub fn moment_polynomial(profile: &VertexProfile) -> Result<LaurentPolynomial> {
    Ok(summary_or_empty(profile)?.moment_polynomial())
}

pub fn connected_polynomial(profile: &VertexProfile) -> Result<LaurentPolynomial> {
    Ok(summary_or_empty(profile)?.connected_polynomial())
}

pub fn map_census(profile: &VertexProfile) -> Result<MapCensus> {
    Ok(summary_or_empty(profile)?.census(profile))
}

/// Result of comparing Q_n with the exponential-formula reconstruction from P_k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CumulantReport {
    pub max_vertices: u32,
    pub valence: u32,
    /// (n, Q_n, Σ over set partitions of products of P).
    pub rows: Vec<(u32, LaurentPolynomial, LaurentPolynomial)>,
}

impl CumulantReport {
    pub fn first_mismatch(&self) -> Option<u32> {
        self.rows.iter().find(|(_, q, r)| q != r).map(|(n, _, _)| *n)
    }

    pub fn holds(&self) -> bool {
        self.first_mismatch().is_none()
    }
}

fn binomial(n: u32, k: u32) -> i128 {
    (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128)
}

/// Checks G = exp(C) - 1 through order m, where G and C are the exponential
/// generating functions of Q_n and P_n for n vertices of valence j.
pub fn check_cumulant_relation(max_vertices: u32, valence: u32) -> Result<CumulantReport> {
    let mut p = vec![LaurentPolynomial::zero()];
    let mut a = vec![LaurentPolynomial::one()];
    let mut rows = Vec::new();
    for n in 1..=max_vertices {
        let summary = summary_or_empty(&VertexProfile::uniform(valence, n)?)?;
        p.push(summary.connected_polynomial());
        let mut rebuilt = LaurentPolynomial::zero();
        for k in 1..=n as usize {
            let term = (&p[k] * &a[n as usize - k]).scale(binomial(n - 1, k as u32 - 1));
            rebuilt = &rebuilt + &term;
        }
        rows.push((n, summary.diagram_polynomial(), rebuilt.clone()));
        a.push(rebuilt);
    }
    Ok(CumulantReport { max_vertices, valence, rows })
}
