//! Pairwise prefix-coincidence analysis between two key columns.
//!
//! For each observation the spectroscopic and photometric keys are compared
//! by longest common prefix (integer digit counted as level 1). The census
//! tallies how many observations agree to each exact level, and confidence
//! figures report the share agreeing to *at least* a given number of leading
//! digits. Digit histograms count, per position, how often each digit value
//! occurs in one column; comparing the two columns' histograms (and their
//! peaks) makes distribution differences machine-detectable.

use serde::Serialize;

use crate::bairetree::ItemId;
use crate::error::{Error, Result};
use crate::madic::{lcp_length, DigitKey};

/// Shared-prefix result for one observation's key pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoincidenceRecord {
    pub item: ItemId,
    /// Shared prefix length; with the pipeline convention the integer digit
    /// counts as level 1.
    pub lcp: usize,
    pub shared_prefix: Vec<u8>,
}

/// Compares one observation's two keys.
pub fn coincide(
    item: ItemId,
    spec_key: &DigitKey,
    phot_key: &DigitKey,
) -> Result<CoincidenceRecord> {
    let lcp = lcp_length(spec_key, phot_key)?;
    Ok(CoincidenceRecord {
        item,
        lcp,
        shared_prefix: spec_key.digits()[..lcp].to_vec(),
    })
}

/// Exact-level counts of shared-prefix lengths, including a level-0 bin for
/// pairs that disagree on their very first digit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrecisionCensus {
    counts: Vec<u64>,
    total: u64,
}

impl PrecisionCensus {
    /// Tallies records by exact shared-prefix level.
    pub fn from_records<'a, I>(records: I) -> Self
    where
        I: IntoIterator<Item = &'a CoincidenceRecord>,
    {
        let mut counts: Vec<u64> = Vec::new();
        let mut total = 0;
        for record in records {
            if record.lcp >= counts.len() {
                counts.resize(record.lcp + 1, 0);
            }
            counts[record.lcp] += 1;
            total += 1;
        }
        Self { counts, total }
    }

    /// Builds a census from already-tallied `(level, count)` pairs, for
    /// replaying published tables without the underlying records.
    pub fn from_level_counts(level_counts: &[(usize, u64)]) -> Self {
        let mut counts: Vec<u64> = Vec::new();
        let mut total = 0;
        for &(level, count) in level_counts {
            if level >= counts.len() {
                counts.resize(level + 1, 0);
            }
            counts[level] += count;
            total += count;
        }
        Self { counts, total }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Deepest level with a recorded count.
    pub fn max_level(&self) -> usize {
        self.counts.len().saturating_sub(1)
    }

    /// Records whose shared prefix is exactly `level` digits long.
    pub fn count_at(&self, level: usize) -> u64 {
        self.counts.get(level).copied().unwrap_or(0)
    }

    /// Records whose shared prefix is at least `level` digits long.
    pub fn count_at_least(&self, level: usize) -> u64 {
        self.counts.iter().skip(level).sum()
    }

    /// Share of records at exactly `level`, in percent of the total.
    pub fn percentage(&self, level: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        100.0 * self.count_at(level) as f64 / self.total as f64
    }

    /// [`PrecisionCensus::percentage`] truncated to two decimal places, the
    /// rendering used in the census table.
    pub fn truncated_percentage(&self, level: usize) -> f64 {
        truncate_2dp(self.percentage(level))
    }
}

/// Truncates (never rounds) to two decimal places.
pub fn truncate_2dp(pct: f64) -> f64 {
    (pct * 100.0).trunc() / 100.0
}

/// The census operation: exact-level counts over a record set.
pub fn census<'a, I>(records: I) -> PrecisionCensus
where
    I: IntoIterator<Item = &'a CoincidenceRecord>,
{
    PrecisionCensus::from_records(records)
}

/// Percentage of records whose keys share at least `digits` leading digits
/// (the integer digit counted as the first).
///
/// Non-increasing in `digits`; errors on an empty census.
pub fn confidence_at_least(census: &PrecisionCensus, digits: usize) -> Result<f64> {
    if census.total() == 0 {
        return Err(Error::Domain(
            "confidence undefined for an empty census".into(),
        ));
    }
    if digits == 0 {
        return Err(Error::Range("digit count must be at least 1".into()));
    }
    Ok(100.0 * census.count_at_least(digits) as f64 / census.total() as f64)
}

/// Per-position digit frequency grid for one key column.
///
/// `counts[position][digit]` is the number of keys whose digit at 1-based
/// `position` equals `digit`; every position row sums to the number of keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitHistogram {
    base: u32,
    positions: usize,
    total: u64,
    counts: Vec<u64>,
}

impl DigitHistogram {
    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    /// Number of keys counted.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Frequency row for a 1-based digit position.
    pub fn row(&self, position: usize) -> &[u64] {
        let width = self.base as usize;
        &self.counts[(position - 1) * width..position * width]
    }

    pub fn count(&self, position: usize, digit: u8) -> u64 {
        self.row(position)[digit as usize]
    }

    fn cell(&self, pos: usize, digit: usize) -> u64 {
        self.counts[pos * self.base as usize + digit]
    }

    /// Grid of rows, positions outermost; plot-ready.
    pub fn grid(&self) -> Vec<Vec<u64>> {
        (1..=self.positions).map(|p| self.row(p).to_vec()).collect()
    }

    /// Default peak threshold: one percent of the column size.
    pub fn default_peak_threshold(&self) -> f64 {
        0.01 * self.total as f64
    }

    /// Gaussian-smoothed copy of the grid (kernel truncated at three sigma).
    pub fn smoothed(&self, sigma: f64) -> Vec<Vec<f64>> {
        let radius = (3.0 * sigma).ceil() as isize;
        let positions = self.positions as isize;
        let width = self.base as isize;
        let mut out = vec![vec![0.0; width as usize]; positions as usize];
        for p in 0..positions {
            for d in 0..width {
                let mut acc = 0.0;
                let mut norm = 0.0;
                for dp in -radius..=radius {
                    for dd in -radius..=radius {
                        let (np, nd) = (p + dp, d + dd);
                        if np < 0 || np >= positions || nd < 0 || nd >= width {
                            continue;
                        }
                        let w = (-((dp * dp + dd * dd) as f64) / (2.0 * sigma * sigma)).exp();
                        acc += w * self.cell(np as usize, nd as usize) as f64;
                        norm += w;
                    }
                }
                out[p as usize][d as usize] = acc / norm;
            }
        }
        out
    }

    /// Local maxima of the grid: cells strictly greater than all of their
    /// (up to) eight neighbors and above the threshold.
    pub fn peaks(&self, config: &PeakConfig) -> Vec<Peak> {
        let values: Vec<Vec<f64>> = match config.smoothing_sigma {
            Some(sigma) => self.smoothed(sigma),
            None => self
                .grid()
                .into_iter()
                .map(|row| row.into_iter().map(|c| c as f64).collect())
                .collect(),
        };
        let threshold = config
            .threshold
            .unwrap_or_else(|| self.default_peak_threshold());
        find_peaks(&values, threshold)
    }
}

/// One grid local maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    /// 1-based digit position.
    pub position: usize,
    pub digit: u8,
    pub value: f64,
}

/// Peak detection settings. `threshold` defaults to one percent of the
/// column size; smoothing is off unless a kernel width is given.
#[derive(Debug, Clone, Copy, Default)]
pub struct PeakConfig {
    pub threshold: Option<f64>,
    pub smoothing_sigma: Option<f64>,
}

fn find_peaks(values: &[Vec<f64>], threshold: f64) -> Vec<Peak> {
    let positions = values.len() as isize;
    if positions == 0 {
        return Vec::new();
    }
    let width = values[0].len() as isize;
    let mut peaks = Vec::new();
    for p in 0..positions {
        for d in 0..width {
            let v = values[p as usize][d as usize];
            if v <= threshold {
                continue;
            }
            let mut is_peak = true;
            'neighbors: for dp in -1..=1 {
                for dd in -1..=1 {
                    if dp == 0 && dd == 0 {
                        continue;
                    }
                    let (np, nd) = (p + dp, d + dd);
                    if np < 0 || np >= positions || nd < 0 || nd >= width {
                        continue;
                    }
                    if values[np as usize][nd as usize] >= v {
                        is_peak = false;
                        break 'neighbors;
                    }
                }
            }
            if is_peak {
                peaks.push(Peak {
                    position: p as usize + 1,
                    digit: d as u8,
                    value: v,
                });
            }
        }
    }
    peaks
}

/// Builds the per-position digit frequency grid for one key column.
///
/// All keys must share base, precision, and convention. An empty input yields
/// an empty grid.
pub fn digit_histogram<'a, I>(keys: I) -> Result<DigitHistogram>
where
    I: IntoIterator<Item = &'a DigitKey>,
{
    let mut iter = keys.into_iter();
    let Some(first) = iter.next() else {
        return Ok(DigitHistogram {
            base: 10,
            positions: 0,
            total: 0,
            counts: Vec::new(),
        });
    };
    let base = first.base();
    let positions = first.precision();
    let convention = first.includes_integer_digit();
    let mut counts = vec![0u64; positions * base as usize];
    let mut total = 0u64;
    for key in std::iter::once(first).chain(iter) {
        if key.base() != base
            || key.precision() != positions
            || key.includes_integer_digit() != convention
        {
            return Err(Error::Convention(
                "all keys in one histogram must share base, precision, and convention".into(),
            ));
        }
        for (pos, &digit) in key.digits().iter().enumerate() {
            counts[pos * base as usize + digit as usize] += 1;
        }
        total += 1;
    }
    Ok(DigitHistogram {
        base,
        positions,
        total,
        counts,
    })
}

/// Signed cellwise difference of two histograms plus both peak sets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramDiff {
    /// `a - b`, positions outermost.
    pub diff: Vec<Vec<i64>>,
    pub peaks_a: Vec<Peak>,
    pub peaks_b: Vec<Peak>,
}

/// Cellwise `a - b` with each histogram's local maxima, so a peak present in
/// one column but missing from the other is machine-detectable.
pub fn histogram_diff(
    a: &DigitHistogram,
    b: &DigitHistogram,
    config: &PeakConfig,
) -> Result<HistogramDiff> {
    if a.positions != b.positions || a.base != b.base {
        return Err(Error::Shape(format!(
            "histogram shapes differ: {}x{} vs {}x{}",
            a.positions, a.base, b.positions, b.base
        )));
    }
    let diff = (1..=a.positions)
        .map(|p| {
            a.row(p)
                .iter()
                .zip(b.row(p))
                .map(|(&x, &y)| x as i64 - y as i64)
                .collect()
        })
        .collect();
    Ok(HistogramDiff {
        diff,
        peaks_a: a.peaks(config),
        peaks_b: b.peaks(config),
    })
}
