//! Verification references: quadratic agglomerative clustering with its
//! dendrogram/ultrametric bijection, metric and ultrametric axiom checkers,
//! and the lattice-valued dissimilarity demo.
//!
//! Everything here favors being obviously correct over being fast; these are
//! the oracles the linear-time structures are checked against at test scale.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::madic::{baire_distance, DigitKey};

/// Dense symmetric dissimilarity matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
        self.data[j * self.n + i] = value;
    }
}

/// Pairwise Baire distance matrix of a key set (zero diagonal).
pub fn pairwise_baire_matrix(keys: &[DigitKey]) -> Result<DistanceMatrix> {
    let mut m = DistanceMatrix::zeros(keys.len());
    for i in 0..keys.len() {
        for j in (i + 1)..keys.len() {
            m.set(i, j, baire_distance(&keys[i], &keys[j])?.value());
        }
    }
    Ok(m)
}

/// `n` random keys drawn digit-by-digit, reproducible from the seed.
pub fn random_keys(
    n: usize,
    base: u32,
    precision: usize,
    includes_integer_digit: bool,
    seed: u64,
) -> Result<Vec<DigitKey>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let digits = (0..precision)
                .map(|_| rng.gen_range(0..base) as u8)
                .collect();
            DigitKey::from_digits(digits, base, includes_integer_digit)
        })
        .collect()
}

/// One agglomeration step; cluster ids follow the usual stepwise convention
/// (leaves are `0..n`, merge `s` creates cluster `n + s`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    /// Agglomeration level: the inter-cluster dissimilarity at this step.
    pub level: f64,
}

/// Ranked merge tree produced by agglomerative clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    leaf_count: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    /// Exactly `leaf_count - 1` merges, levels non-decreasing.
    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// One merge per line: `left right level`.
    pub fn to_merge_list(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        for m in &self.merges {
            writeln!(out, "{} {} {}", m.left, m.right, m.level).expect("write to string");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Linkage {
    Single,
    Complete,
}

/// Single-linkage agglomeration over a full dissimilarity matrix.
///
/// Deliberately naive (quadratic memory, cubic worst-case time): this is the
/// reference the linear-time tree is validated against, at test scale. Ties
/// merge the lexicographically smallest eligible cluster-id pair.
pub fn hac_single_linkage(dissimilarity: &DistanceMatrix) -> Result<Dendrogram> {
    hac(dissimilarity, Linkage::Single)
}

/// Complete-linkage variant, for cross-checking; on already-ultrametric
/// input it agrees with single linkage.
pub fn hac_complete_linkage(dissimilarity: &DistanceMatrix) -> Result<Dendrogram> {
    hac(dissimilarity, Linkage::Complete)
}

fn hac(dissimilarity: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let n = dissimilarity.size();
    for i in 0..n {
        if dissimilarity.get(i, i) != 0.0 {
            return Err(Error::Domain(format!("nonzero diagonal at ({i}, {i})")));
        }
        for j in (i + 1)..n {
            if dissimilarity.get(i, j) != dissimilarity.get(j, i) {
                return Err(Error::Domain(format!("asymmetric entries at ({i}, {j})")));
            }
            // NaN entries fail this check as well.
            let positive = dissimilarity.get(i, j) > 0.0;
            if !positive {
                return Err(Error::Domain(format!(
                    "off-diagonal entry at ({i}, {j}) must be positive, got {}",
                    dissimilarity.get(i, j)
                )));
            }
        }
    }
    if n == 0 {
        return Ok(Dendrogram {
            leaf_count: 0,
            merges: Vec::new(),
        });
    }

    // Growing cluster-distance matrix indexed by cluster id (0..2n-1).
    let total = 2 * n - 1;
    let mut dist = vec![f64::INFINITY; total * total];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                dist[i * total + j] = dissimilarity.get(i, j);
            }
        }
    }
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(usize, usize, f64)> = None;
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let d = dist[a * total + b];
                let better = match best {
                    None => true,
                    Some((bi, bj, bd)) => d < bd || (d == bd && (a, b) < (bi, bj)),
                };
                if better {
                    best = Some((a, b, d));
                }
            }
        }
        let (a, b, level) = best.expect("at least two active clusters");
        let created = n + step;
        for &other in &active {
            if other == a || other == b {
                continue;
            }
            let (da, db) = (dist[a * total + other], dist[b * total + other]);
            let d = match linkage {
                Linkage::Single => da.min(db),
                Linkage::Complete => da.max(db),
            };
            dist[created * total + other] = d;
            dist[other * total + created] = d;
        }
        active.retain(|&c| c != a && c != b);
        active.push(created);
        merges.push(Merge {
            left: a,
            right: b,
            level,
        });
    }
    Ok(Dendrogram {
        leaf_count: n,
        merges,
    })
}

/// The ultrametric induced by a dendrogram: `D(i, j)` is the level of the
/// lowest merge uniting leaves `i` and `j`.
pub fn cophenetic_matrix(dendrogram: &Dendrogram) -> DistanceMatrix {
    let n = dendrogram.leaf_count();
    let mut out = DistanceMatrix::zeros(n);
    let mut members: Vec<Option<Vec<usize>>> = (0..n).map(|i| Some(vec![i])).collect();
    members.resize(2 * n.saturating_sub(1).max(n), None);
    for (step, merge) in dendrogram.merges().iter().enumerate() {
        let left = members[merge.left].take().expect("left cluster alive");
        let right = members[merge.right].take().expect("right cluster alive");
        for &i in &left {
            for &j in &right {
                out.set(i, j, merge.level);
            }
        }
        let mut union = left;
        union.extend(right);
        members[n + step] = Some(union);
    }
    out
}

/// Metric / ultrametric axioms checked by the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axiom {
    /// d(x, y) >= 0
    Positivity,
    /// d(x, y) = 0 iff x = y
    Reflexivity,
    /// d(x, y) = d(y, x)
    Symmetry,
    /// d(x, z) <= d(x, y) + d(y, z)
    Triangle,
    /// d(x, z) <= max(d(x, y), d(y, z))
    StrongTriangle,
}

impl std::fmt::Display for Axiom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Axiom::Positivity => "positivity",
            Axiom::Reflexivity => "reflexivity",
            Axiom::Symmetry => "symmetry",
            Axiom::Triangle => "triangle inequality",
            Axiom::StrongTriangle => "strong triangle inequality",
        };
        f.write_str(name)
    }
}

/// One recorded axiom failure.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    /// The one, two, or three indices involved.
    pub items: Vec<usize>,
    /// The distance values witnessing the failure.
    pub values: Vec<f64>,
}

/// Outcome of an axiom check. Violations are findings, not errors.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub violations: Vec<AxiomViolation>,
    pub triples_checked: u64,
    /// True when triples were sampled rather than enumerated.
    pub sampled: bool,
    /// True when the violation list was capped.
    pub truncated: bool,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Above this size, triple checks sample instead of enumerating.
const EXHAUSTIVE_TRIPLE_LIMIT: usize = 300;
/// Number of sampled triples for large matrices.
const SAMPLED_TRIPLES: u64 = 1_000_000;
/// At most this many violations are recorded.
const VIOLATION_CAP: usize = 1_000;
/// Fixed seed for the triple sampler, so reports are reproducible.
const SAMPLER_SEED: u64 = 0x6261_6972_6531;

/// Checks the metric axioms (positivity, reflexivity, symmetry, triangle
/// inequality) over a matrix, exhaustively below 300 items and on a seeded
/// sample of a million triples above.
pub fn check_metric(matrix: &DistanceMatrix) -> AxiomReport {
    check_axioms(matrix, Axiom::Triangle)
}

/// Checks positivity, reflexivity, symmetry, and the *strong* triangle
/// inequality, the ultrametric variant of [`check_metric`].
pub fn check_ultrametric(matrix: &DistanceMatrix) -> AxiomReport {
    check_axioms(matrix, Axiom::StrongTriangle)
}

fn check_axioms(matrix: &DistanceMatrix, triple_axiom: Axiom) -> AxiomReport {
    let n = matrix.size();
    let mut report = AxiomReport {
        violations: Vec::new(),
        triples_checked: 0,
        sampled: n > EXHAUSTIVE_TRIPLE_LIMIT,
        truncated: false,
    };
    let push = |report: &mut AxiomReport, v: AxiomViolation| {
        if report.violations.len() < VIOLATION_CAP {
            report.violations.push(v);
        } else {
            report.truncated = true;
        }
    };

    for i in 0..n {
        let dii = matrix.get(i, i);
        if dii != 0.0 {
            push(
                &mut report,
                AxiomViolation {
                    axiom: Axiom::Reflexivity,
                    items: vec![i],
                    values: vec![dii],
                },
            );
        }
        for j in (i + 1)..n {
            let dij = matrix.get(i, j);
            if dij < 0.0 {
                push(
                    &mut report,
                    AxiomViolation {
                        axiom: Axiom::Positivity,
                        items: vec![i, j],
                        values: vec![dij],
                    },
                );
            }
            if dij == 0.0 {
                push(
                    &mut report,
                    AxiomViolation {
                        axiom: Axiom::Reflexivity,
                        items: vec![i, j],
                        values: vec![dij],
                    },
                );
            }
            if dij != matrix.get(j, i) {
                push(
                    &mut report,
                    AxiomViolation {
                        axiom: Axiom::Symmetry,
                        items: vec![i, j],
                        values: vec![dij, matrix.get(j, i)],
                    },
                );
            }
        }
    }

    let check_triple = |report: &mut AxiomReport, i: usize, j: usize, k: usize| {
        report.triples_checked += 1;
        // Each of the three items takes a turn as the midpoint.
        for (x, y, z) in [(i, j, k), (j, i, k), (i, k, j)] {
            let dxz = matrix.get(x, z);
            let dxy = matrix.get(x, y);
            let dyz = matrix.get(y, z);
            let bound = match triple_axiom {
                Axiom::StrongTriangle => dxy.max(dyz),
                _ => dxy + dyz,
            };
            if dxz > bound {
                push(
                    report,
                    AxiomViolation {
                        axiom: triple_axiom,
                        items: vec![x, y, z],
                        values: vec![dxz, dxy, dyz],
                    },
                );
            }
        }
    };

    if n > EXHAUSTIVE_TRIPLE_LIMIT {
        let mut rng = ChaCha20Rng::seed_from_u64(SAMPLER_SEED);
        for _ in 0..SAMPLED_TRIPLES {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let mut k = rng.gen_range(0..n);
            while k == i || k == j {
                k = rng.gen_range(0..n);
            }
            check_triple(&mut report, i, j, k);
        }
    } else {
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    check_triple(&mut report, i, j, k);
                }
            }
        }
    }
    report
}

/// A pairwise dissimilarity valued in the power set of the attribute set:
/// the subset of attributes on which two objects fail to jointly score 1.
/// Its level is the subset cardinality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DissimilaritySet {
    bits: u64,
    width: usize,
}

impl DissimilaritySet {
    /// Cardinality of the subset; 0 is the least element (generalized zero
    /// distance).
    pub fn level(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn contains(&self, attribute: usize) -> bool {
        attribute < self.width && self.bits & (1 << attribute) != 0
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.bits & !other.bits == 0
    }

    /// 0-based indices of the attributes present.
    pub fn attributes(&self) -> Vec<usize> {
        (0..self.width).filter(|&a| self.contains(a)).collect()
    }

    /// Conventional label, e.g. `d1,d2` (attributes 1-based), `∅` when empty.
    pub fn label(&self) -> String {
        if self.bits == 0 {
            return "∅".into();
        }
        self.attributes()
            .iter()
            .map(|a| format!("d{}", a + 1))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Componentwise boolean dissimilarity: attribute `j` is in the result
/// unless both vectors score 1 there (joint presence contributes nothing;
/// every other combination contributes).
pub fn fca_dissimilarity(a: &[bool], b: &[bool]) -> Result<DissimilaritySet> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "attribute vectors differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() > 64 {
        return Err(Error::Scale("at most 64 attributes are supported".into()));
    }
    let mut bits = 0u64;
    for (j, (&x, &y)) in a.iter().zip(b).enumerate() {
        if !(x && y) {
            bits |= 1 << j;
        }
    }
    Ok(DissimilaritySet {
        bits,
        width: a.len(),
    })
}

/// The lattice spanned by all pairwise dissimilarity sets of a dataset:
/// distinct sets as vertices, covering relations under inclusion as edges,
/// and the complete map from object pairs to vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct FcaLattice {
    /// Distinct sets, sorted by (level, bits).
    pub vertices: Vec<DissimilaritySet>,
    /// Hasse edges as vertex indices `(lower, upper)`, covering only.
    pub edges: Vec<(usize, usize)>,
    /// Unordered object pair -> vertex index.
    pub pair_map: std::collections::BTreeMap<(usize, usize), usize>,
}

/// Builds the dissimilarity lattice of a boolean objects-by-attributes table.
pub fn fca_lattice(data: &[Vec<bool>]) -> Result<FcaLattice> {
    if data.len() < 2 {
        return Err(Error::Domain("need at least two objects".into()));
    }
    let mut sets = std::collections::BTreeSet::new();
    let mut pairs = Vec::new();
    for i in 0..data.len() {
        for j in (i + 1)..data.len() {
            let d = fca_dissimilarity(&data[i], &data[j])?;
            sets.insert(d);
            pairs.push(((i, j), d));
        }
    }
    let mut vertices: Vec<DissimilaritySet> = sets.into_iter().collect();
    vertices.sort_by_key(|v| (v.level(), v.bits));
    let index_of = |set: &DissimilaritySet| {
        vertices
            .iter()
            .position(|v| v == set)
            .expect("vertex present")
    };
    let pair_map = pairs
        .into_iter()
        .map(|(pair, set)| (pair, index_of(&set)))
        .collect();

    let mut edges = Vec::new();
    for (lo, lower) in vertices.iter().enumerate() {
        for (hi, upper) in vertices.iter().enumerate() {
            if lo == hi || !lower.is_subset_of(upper) {
                continue;
            }
            let covered = vertices.iter().enumerate().any(|(mid, m)| {
                mid != lo && mid != hi && lower.is_subset_of(m) && m.is_subset_of(upper)
            });
            if !covered {
                edges.push((lo, hi));
            }
        }
    }
    Ok(FcaLattice {
        vertices,
        edges,
        pair_map,
    })
}

/// Objects the clique enumeration will handle; beyond this it refuses.
const FCA_MAX_OBJECTS: usize = 20;

/// Maximal object subsets whose members are *all pairwise* within
/// `max_level`: maximal cliques of the thresholded pair graph.
///
/// Exponential-time demo enumeration; inputs above 20 objects are refused.
/// Cliques are sorted internally and lexicographically overall.
pub fn fca_clusters(data: &[Vec<bool>], max_level: usize) -> Result<Vec<Vec<usize>>> {
    let n = data.len();
    if n > FCA_MAX_OBJECTS {
        return Err(Error::Scale(format!(
            "clique enumeration is limited to {FCA_MAX_OBJECTS} objects, got {n}"
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let width = data[0].len();
    if max_level > width {
        return Err(Error::Range(format!(
            "max_level {max_level} exceeds the attribute count {width}"
        )));
    }
    let mut adjacency = vec![0u32; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if fca_dissimilarity(&data[i], &data[j])?.level() <= max_level {
                adjacency[i] |= 1 << j;
                adjacency[j] |= 1 << i;
            }
        }
    }

    // Bron-Kerbosch over bitmasks; candidates visited in ascending order so
    // the output is deterministic.
    fn expand(
        adjacency: &[u32],
        clique: u32,
        mut candidates: u32,
        mut excluded: u32,
        out: &mut Vec<u32>,
    ) {
        if candidates == 0 && excluded == 0 {
            out.push(clique);
            return;
        }
        while candidates != 0 {
            let v = candidates.trailing_zeros() as usize;
            let bit = 1u32 << v;
            expand(
                adjacency,
                clique | bit,
                candidates & adjacency[v],
                excluded & adjacency[v],
                out,
            );
            candidates &= !bit;
            excluded |= bit;
        }
    }

    let mut masks = Vec::new();
    expand(&adjacency, 0, (1u32 << n) - 1, 0, &mut masks);
    let mut cliques: Vec<Vec<usize>> = masks
        .into_iter()
        .map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect())
        .collect();
    cliques.sort();
    Ok(cliques)
}

/// The five-object, three-attribute demo table used by the lattice demo.
pub fn fca_demo_dataset() -> (Vec<&'static str>, Vec<Vec<bool>>) {
    let names = vec!["a", "b", "c", "e", "f"];
    let data = vec![
        vec![true, false, true],
        vec![false, true, true],
        vec![true, false, true],
        vec![true, false, false],
        vec![false, false, true],
    ];
    (names, data)
}
