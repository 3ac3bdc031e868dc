//! k-means partitioning and the machinery for comparing a flat partition
//! against prefix-tree level clusters: contingency tables, the
//! complete/overlapping/empty row taxonomy, and display permutation.
//!
//! Lloyd iterations with k-means++ (or random-partition) initialization,
//! fully deterministic under the configured seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::bairetree::{ItemId, LevelClustering};
use crate::error::{Error, Result};
use crate::madic::digit_string;

/// Centroid initialization strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InitMethod {
    /// Each point assigned to a uniform random cluster; centroids are the
    /// partition means.
    RandomPartition,
    /// Distance-squared weighted seeding.
    PlusPlus,
}

/// k-means run parameters. Identical config and input always produce an
/// identical result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iterations: usize,
    pub seed: u64,
    pub init: InitMethod,
    /// Stop once no centroid moves at least this far (Euclidean). Zero means
    /// run all `max_iterations`.
    pub convergence_epsilon: f64,
}

impl KMeansConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_iterations: 100,
            seed: 0,
            init: InitMethod::PlusPlus,
            convergence_epsilon: 1e-9,
        }
    }
}

/// Outcome of one k-means fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KMeansResult {
    /// Item ids, parallel to `assignments`.
    pub item_ids: Vec<ItemId>,
    /// Cluster index in `[0, k)` per item.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub iterations_run: usize,
    /// Final within-cluster sum of squared Euclidean distances.
    pub sse: f64,
    /// SSE measured after the assignment step of each iteration;
    /// non-increasing.
    pub per_iteration_sse: Vec<f64>,
    /// Cluster indices left without members.
    pub empty_clusters: Vec<usize>,
}

impl KMeansResult {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Runs Lloyd iterations on `points`; item ids default to positions.
pub fn kmeans_fit(points: &[Vec<f64>], config: &KMeansConfig) -> Result<KMeansResult> {
    let ids: Vec<ItemId> = (0..points.len()).collect();
    kmeans_fit_labeled(&ids, points, config)
}

/// Like [`kmeans_fit`] with caller-supplied item ids (one per point).
pub fn kmeans_fit_labeled(
    ids: &[ItemId],
    points: &[Vec<f64>],
    config: &KMeansConfig,
) -> Result<KMeansResult> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Domain(
            "cannot fit k-means on an empty point set".into(),
        ));
    }
    if config.k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if config.k > n {
        return Err(Error::Domain(format!("k = {} exceeds n = {n}", config.k)));
    }
    if ids.len() != n {
        return Err(Error::Shape(format!("{} ids for {n} points", ids.len())));
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::Shape(
            "all points must share one non-zero dimension".into(),
        ));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut centroids = match config.init {
        InitMethod::PlusPlus => init_plus_plus(points, config.k, &mut rng),
        InitMethod::RandomPartition => init_random_partition(points, config.k, dim, &mut rng),
    };

    let mut assignments = vec![0usize; n];
    let mut per_iteration_sse = Vec::new();
    let mut iterations_run = 0;
    for _ in 0..config.max_iterations {
        iterations_run += 1;
        let sse = assign(points, &centroids, &mut assignments);
        per_iteration_sse.push(sse);

        // Mean update; empty clusters keep their position until repaired.
        let mut sums = vec![vec![0.0; dim]; config.k];
        let mut sizes = vec![0usize; config.k];
        for (point, &cluster) in points.iter().zip(&assignments) {
            sizes[cluster] += 1;
            for (s, v) in sums[cluster].iter_mut().zip(point) {
                *s += v;
            }
        }
        let mut new_centroids: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&sizes)
            .zip(&centroids)
            .map(|((sum, &size), old)| {
                if size == 0 {
                    old.clone()
                } else {
                    sum.into_iter().map(|s| s / size as f64).collect()
                }
            })
            .collect();
        repair_empty_clusters(points, &assignments, &sizes, &mut new_centroids);

        let movement = centroids
            .iter()
            .zip(&new_centroids)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0f64, f64::max);
        centroids = new_centroids;
        if movement < config.convergence_epsilon {
            break;
        }
    }

    // Final assignment against the final centroids.
    let sse = assign(points, &centroids, &mut assignments);
    let mut seen = vec![false; config.k];
    for &a in &assignments {
        seen[a] = true;
    }
    let empty_clusters = (0..config.k).filter(|&c| !seen[c]).collect();
    Ok(KMeansResult {
        item_ids: ids.to_vec(),
        assignments,
        centroids,
        iterations_run,
        sse,
        per_iteration_sse,
        empty_clusters,
    })
}

/// Nearest-centroid assignment; ties go to the lowest cluster index.
/// Returns the summed squared distance.
fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &mut [usize]) -> f64 {
    let mut total = 0.0;
    for (point, slot) in points.iter().zip(assignments.iter_mut()) {
        let mut best = 0usize;
        let mut best_d = squared_distance(point, &centroids[0]);
        for (c, centroid) in centroids.iter().enumerate().skip(1) {
            let d = squared_distance(point, centroid);
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        *slot = best;
        total += best_d;
    }
    total
}

/// Moves each empty centroid onto the point currently farthest from its own
/// centroid (distinct points for successive empties, ties to the lower point
/// index). Assignments are untouched; the next assignment step adopts the
/// moved centroid, so the per-iteration SSE stays non-increasing.
fn repair_empty_clusters(
    points: &[Vec<f64>],
    assignments: &[usize],
    sizes: &[usize],
    centroids: &mut [Vec<f64>],
) {
    let empties: Vec<usize> = (0..centroids.len()).filter(|&c| sizes[c] == 0).collect();
    if empties.is_empty() {
        return;
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let da = squared_distance(&points[a], &centroids[assignments[a]]);
        let db = squared_distance(&points[b], &centroids[assignments[b]]);
        db.partial_cmp(&da)
            .expect("finite distances")
            .then(a.cmp(&b))
    });
    for (empty, &point_idx) in empties.into_iter().zip(order.iter()) {
        centroids[empty] = points[point_idx].clone();
    }
}

fn init_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha20Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..n)].clone());
    let mut best_d: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = best_d.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &d) in best_d.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            // All remaining mass is on already-chosen positions (duplicate
            // points); take the lowest index not yet used as a centroid.
            (0..n)
                .find(|&i| !centroids.iter().any(|c| c == &points[i]))
                .unwrap_or(0)
        };
        centroids.push(points[next].clone());
        for (d, p) in best_d.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, centroids.last().expect("just pushed")));
        }
    }
    centroids
}

fn init_random_partition(
    points: &[Vec<f64>],
    k: usize,
    dim: usize,
    rng: &mut ChaCha20Rng,
) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut sizes = vec![0usize; k];
    for point in points {
        let cluster = rng.gen_range(0..k);
        sizes[cluster] += 1;
        for (s, v) in sums[cluster].iter_mut().zip(point) {
            *s += v;
        }
    }
    // A uniform draw can leave clusters empty; seed those from the data so
    // every centroid starts finite.
    sums.into_iter()
        .zip(&sizes)
        .enumerate()
        .map(|(c, (sum, &size))| {
            if size == 0 {
                points[c % points.len()].clone()
            } else {
                sum.into_iter().map(|s| s / size as f64).collect()
            }
        })
        .collect()
}

/// Row classification of a contingency table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowClass {
    /// Exactly one non-zero cell: the prefix cluster sits inside one
    /// partition cluster.
    Complete,
    /// Non-zero cells in several columns.
    Overlapping,
    /// All-zero row (an unoccupied potential prefix).
    Empty,
}

/// Cross-tabulation of prefix clusters (rows) against partition clusters
/// (columns). Rows cover every *potential* prefix at the level, so
/// unoccupied prefixes appear as empty rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContingencyTable {
    pub row_prefixes: Vec<Vec<u8>>,
    pub row_labels: Vec<String>,
    pub col_clusters: Vec<usize>,
    /// Co-membership counts, rows outermost.
    pub cells: Vec<Vec<u64>>,
    pub row_classes: Vec<RowClass>,
}

impl ContingencyTable {
    pub fn cell(&self, row: usize, col: usize) -> u64 {
        self.cells[row][col]
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.cells.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.col_clusters.len()];
        for row in &self.cells {
            for (s, &v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }
}

/// Builds the contingency table of a level clustering against a k-means
/// result. Both must cover exactly the same item set.
pub fn contingency(baire: &LevelClustering, km: &KMeansResult) -> Result<ContingencyTable> {
    let mut id_to_cluster = std::collections::HashMap::with_capacity(km.item_ids.len());
    for (&id, &cluster) in km.item_ids.iter().zip(&km.assignments) {
        if id_to_cluster.insert(id, cluster).is_some() {
            return Err(Error::Domain(format!(
                "duplicate item id {id} in k-means result"
            )));
        }
    }
    let baire_items: usize = baire.item_count();
    if baire_items != id_to_cluster.len() {
        return Err(Error::Domain(format!(
            "clusterings cover different item sets: {baire_items} vs {}",
            id_to_cluster.len()
        )));
    }

    let k = km.k();
    let occupied = baire.clusters();
    let mut all_prefixes: Vec<Vec<u8>> = baire.potential_prefixes();
    all_prefixes.sort();
    let mut cells = Vec::with_capacity(all_prefixes.len());
    let mut row_classes = Vec::with_capacity(all_prefixes.len());
    for prefix in &all_prefixes {
        let mut row = vec![0u64; k];
        if let Some(members) = occupied.get(prefix) {
            for id in members {
                let cluster = *id_to_cluster.get(id).ok_or_else(|| {
                    Error::Domain(format!("item {id} missing from the k-means result"))
                })?;
                row[cluster] += 1;
            }
        }
        let non_zero = row.iter().filter(|&&v| v > 0).count();
        row_classes.push(match non_zero {
            0 => RowClass::Empty,
            1 => RowClass::Complete,
            _ => RowClass::Overlapping,
        });
        cells.push(row);
    }
    Ok(ContingencyTable {
        row_labels: all_prefixes.iter().map(|p| digit_string(p)).collect(),
        row_prefixes: all_prefixes,
        col_clusters: (0..k).collect(),
        cells,
        row_classes,
    })
}

/// Row classification tallies; the three counts sum to the number of rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MatchSummary {
    pub complete: usize,
    pub overlapping: usize,
    pub empty: usize,
}

/// Tallies the row classes of a table.
pub fn match_summary(table: &ContingencyTable) -> MatchSummary {
    let mut summary = MatchSummary {
        complete: 0,
        overlapping: 0,
        empty: 0,
    };
    for class in &table.row_classes {
        match class {
            RowClass::Complete => summary.complete += 1,
            RowClass::Overlapping => summary.overlapping += 1,
            RowClass::Empty => summary.empty += 1,
        }
    }
    summary
}

/// Row and column orderings that bring complete matches onto a leading block
/// diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DisplayOrder {
    pub row_order: Vec<usize>,
    pub col_order: Vec<usize>,
}

/// Greedy display permutation: complete rows first, each followed by its
/// matching column, with rows sharing a column kept adjacent. Ties break by
/// descending cell count, then label. Remaining rows follow in label order
/// (overlapping before empty); remaining columns in index order.
pub fn permute_for_display(table: &ContingencyTable) -> DisplayOrder {
    let rows = table.cells.len();
    let cols = table.col_clusters.len();
    let complete_col = |r: usize| -> Option<usize> { table.cells[r].iter().position(|&v| v > 0) };
    let mut complete: Vec<usize> = (0..rows)
        .filter(|&r| table.row_classes[r] == RowClass::Complete)
        .collect();
    complete.sort_by(|&a, &b| {
        let ca = *table.cells[a].iter().max().expect("non-empty row");
        let cb = *table.cells[b].iter().max().expect("non-empty row");
        cb.cmp(&ca)
            .then_with(|| table.row_labels[a].cmp(&table.row_labels[b]))
    });

    let mut row_order = Vec::with_capacity(rows);
    let mut col_order = Vec::with_capacity(cols);
    let mut row_placed = vec![false; rows];
    let mut col_placed = vec![false; cols];
    for (i, &r) in complete.iter().enumerate() {
        if row_placed[r] {
            continue;
        }
        row_placed[r] = true;
        row_order.push(r);
        let col = complete_col(r).expect("complete row has a cell");
        if !col_placed[col] {
            col_placed[col] = true;
            col_order.push(col);
        }
        // Keep later complete rows matching this column adjacent.
        for &r2 in &complete[i + 1..] {
            if !row_placed[r2] && complete_col(r2) == Some(col) {
                row_placed[r2] = true;
                row_order.push(r2);
            }
        }
    }
    let mut rest: Vec<usize> = (0..rows).filter(|&r| !row_placed[r]).collect();
    rest.sort_by(|&a, &b| {
        let class_rank = |r: usize| match table.row_classes[r] {
            RowClass::Overlapping => 0,
            RowClass::Complete => 1,
            RowClass::Empty => 2,
        };
        class_rank(a)
            .cmp(&class_rank(b))
            .then_with(|| table.row_labels[a].cmp(&table.row_labels[b]))
    });
    row_order.extend(rest);
    col_order.extend((0..cols).filter(|&c| !col_placed[c]));
    DisplayOrder {
        row_order,
        col_order,
    }
}
