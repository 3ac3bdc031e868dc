//! Data ingestion, synthetic catalog generation, and the timing harness.
//!
//! Input rows carry a position pair and two redshift estimates; the decimal
//! source text of each estimate is kept verbatim and is the ground truth for
//! digit keys. Values outside the configured half-open range are dropped and
//! counted, never silently.

use std::io::Read;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::bairetree::{BaireTree, ItemId};
use crate::error::{Error, Result};
use crate::madic::{digit_string, encode, DigitKey};
use crate::partition::{kmeans_fit_labeled, InitMethod, KMeansConfig};

/// One catalog row: sky position, the two redshift estimates as preserved
/// source text plus parsed value, and their digit keys.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub id: ItemId,
    pub ra: f64,
    pub dec: f64,
    pub z_spec_text: String,
    pub z_phot_text: String,
    pub z_spec: f64,
    pub z_phot: f64,
    pub z_spec_key: DigitKey,
    pub z_phot_key: DigitKey,
}

impl Observation {
    /// The point handed to k-means: `[z_spec, z_phot]` in 2D, `[z_phot]` in 1D.
    pub fn point(&self, dims: usize) -> Vec<f64> {
        match dims {
            1 => vec![self.z_phot],
            _ => vec![self.z_spec, self.z_phot],
        }
    }
}

/// What to do with a row that fails to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BadRowPolicy {
    /// Skip the row and count it in the load outcome.
    SkipWithCount,
    /// Fail the whole load on the first bad row.
    Abort,
}

/// CSV ingestion settings.
#[derive(Debug, Clone)]
pub struct CsvConfig {
    pub delimiter: u8,
    /// Header names, matched case-insensitively.
    pub ra_column: String,
    pub dec_column: String,
    pub spec_column: String,
    pub phot_column: String,
    /// Half-open upper bound: rows with either redshift outside
    /// `[0, range_max)` are dropped and counted.
    pub range_max: f64,
    pub base: u32,
    pub precision: usize,
    pub includes_integer_digit: bool,
    pub bad_row: BadRowPolicy,
}

impl Default for CsvConfig {
    fn default() -> Self {
        Self {
            delimiter: b',',
            ra_column: "RA".into(),
            dec_column: "DEC".into(),
            spec_column: "Spec".into(),
            phot_column: "Phot".into(),
            range_max: 0.6,
            base: 10,
            precision: 6,
            includes_integer_digit: true,
            bad_row: BadRowPolicy::SkipWithCount,
        }
    }
}

/// Result of a CSV load: surviving rows plus drop/skip tallies.
#[derive(Debug, Clone)]
pub struct LoadOutcome {
    pub observations: Vec<Observation>,
    pub dropped_out_of_range: usize,
    pub skipped_rows: usize,
}

/// Loads a catalog CSV from disk. See [`read_csv`].
pub fn load_csv(path: &Path, config: &CsvConfig) -> Result<LoadOutcome> {
    let file = std::fs::File::open(path)?;
    read_csv(file, config)
}

/// Reads a catalog from any CSV reader: a header row naming the four columns
/// (any order, extra columns ignored), then one row per observation.
///
/// Row order is preserved; the item id is the 0-based data row index, so ids
/// stay stable when rows are dropped.
pub fn read_csv<R: Read>(reader: R, config: &CsvConfig) -> Result<LoadOutcome> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .delimiter(config.delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| Error::Format(format!("unreadable header: {e}")))?
        .clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Format(format!("missing column {name:?} in header")))
    };
    let ra_idx = find(&config.ra_column)?;
    let dec_idx = find(&config.dec_column)?;
    let spec_idx = find(&config.spec_column)?;
    let phot_idx = find(&config.phot_column)?;

    let mut outcome = LoadOutcome {
        observations: Vec::new(),
        dropped_out_of_range: 0,
        skipped_rows: 0,
    };
    for (row_index, record) in csv_reader.records().enumerate() {
        let parsed = record
            .map_err(|e| format!("unreadable row: {e}"))
            .and_then(|record| {
                parse_row(
                    &record, row_index, ra_idx, dec_idx, spec_idx, phot_idx, config,
                )
            });
        match parsed {
            Ok(Some(observation)) => outcome.observations.push(observation),
            Ok(None) => outcome.dropped_out_of_range += 1,
            Err(message) => match config.bad_row {
                BadRowPolicy::SkipWithCount => outcome.skipped_rows += 1,
                BadRowPolicy::Abort => {
                    return Err(Error::Row(format!("row {row_index}: {message}")))
                }
            },
        }
    }
    Ok(outcome)
}

/// Ok(None) marks an out-of-range row; Err carries a skip/abort reason.
fn parse_row(
    record: &csv::StringRecord,
    row_index: usize,
    ra_idx: usize,
    dec_idx: usize,
    spec_idx: usize,
    phot_idx: usize,
    config: &CsvConfig,
) -> std::result::Result<Option<Observation>, String> {
    let field = |idx: usize, name: &str| -> std::result::Result<&str, String> {
        record
            .get(idx)
            .ok_or_else(|| format!("missing {name} cell"))
    };
    let numeric = |idx: usize, name: &str| -> std::result::Result<f64, String> {
        let text = field(idx, name)?;
        text.parse::<f64>()
            .map_err(|_| format!("unparsable {name} cell {text:?}"))
    };
    let ra = numeric(ra_idx, "RA")?;
    let dec = numeric(dec_idx, "DEC")?;
    let z_spec_text = field(spec_idx, "Spec")?.to_string();
    let z_phot_text = field(phot_idx, "Phot")?.to_string();
    let z_spec: f64 = z_spec_text
        .parse()
        .map_err(|_| format!("unparsable Spec cell {z_spec_text:?}"))?;
    let z_phot: f64 = z_phot_text
        .parse()
        .map_err(|_| format!("unparsable Phot cell {z_phot_text:?}"))?;
    let in_range = |v: f64| (0.0..config.range_max).contains(&v);
    if !in_range(z_spec) || !in_range(z_phot) {
        return Ok(None);
    }
    let key = |text: &str| {
        encode(
            text,
            config.base,
            config.precision,
            config.includes_integer_digit,
        )
        .map_err(|e| format!("{e}"))
    };
    Ok(Some(Observation {
        id: row_index,
        ra,
        dec,
        z_spec_key: key(&z_spec_text)?,
        z_phot_key: key(&z_phot_text)?,
        z_spec_text,
        z_phot_text,
        z_spec,
        z_phot,
    }))
}

/// One component of the synthetic prefix mixture: values start with `prefix`
/// and the rest of their digits is uniform noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthBin {
    /// Leading digits, under the model's digit convention.
    pub prefix: Vec<u8>,
    pub weight: f64,
}

/// Weight of one exact agreement level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelWeight {
    /// Exact shared-prefix length planted between the two key columns.
    pub level: usize,
    pub weight: f64,
}

/// Generative model for synthetic catalogs: a prefix mixture for the
/// spectroscopic value, uniform within-bin digit noise, and a distribution
/// of exact spec/phot agreement levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthModel {
    pub base: u32,
    pub precision: usize,
    pub includes_integer_digit: bool,
    pub bins: Vec<SynthBin>,
    pub agreement_levels: Vec<LevelWeight>,
    /// Cap on the first fractional digit of generated or mutated values, so
    /// every output stays inside the analysis range.
    pub max_first_decimal: u8,
}

impl SynthModel {
    /// Default model: mass concentrated at low values the way the survey
    /// data is, agreement levels shaped like the published census.
    pub fn survey_like(base: u32, precision: usize) -> Self {
        Self {
            base,
            precision,
            includes_integer_digit: true,
            bins: vec![
                SynthBin {
                    prefix: vec![0, 0],
                    weight: 0.42,
                },
                SynthBin {
                    prefix: vec![0, 1],
                    weight: 0.28,
                },
                SynthBin {
                    prefix: vec![0, 2],
                    weight: 0.10,
                },
                SynthBin {
                    prefix: vec![0, 3],
                    weight: 0.08,
                },
                SynthBin {
                    prefix: vec![0, 4],
                    weight: 0.07,
                },
                SynthBin {
                    prefix: vec![0, 5],
                    weight: 0.05,
                },
            ],
            agreement_levels: vec![
                LevelWeight {
                    level: 1,
                    weight: 0.1719,
                },
                LevelWeight {
                    level: 2,
                    weight: 0.6114,
                },
                LevelWeight {
                    level: 3,
                    weight: 0.1941,
                },
                LevelWeight {
                    level: 4,
                    weight: 0.0203,
                },
                LevelWeight {
                    level: 5,
                    weight: 0.0021,
                },
                LevelWeight {
                    level: 6,
                    weight: 0.0002,
                },
            ],
            max_first_decimal: 5,
        }
    }

    fn first_decimal_position(&self) -> usize {
        usize::from(self.includes_integer_digit)
    }

    fn allowed_digits(&self, position: usize) -> std::ops::RangeInclusive<u8> {
        if self.includes_integer_digit && position == 0 {
            0..=0
        } else if position == self.first_decimal_position() {
            0..=self.max_first_decimal
        } else {
            0..=(self.base - 1) as u8
        }
    }

    fn validate(&self) -> Result<()> {
        if !(2..=16).contains(&self.base) {
            return Err(Error::Config(format!("base {} outside 2..=16", self.base)));
        }
        if self.precision == 0 {
            return Err(Error::Config("precision must be at least 1".into()));
        }
        if u32::from(self.max_first_decimal) >= self.base {
            return Err(Error::Config(
                "max_first_decimal must be below the base".into(),
            ));
        }
        let weight_ok = |w: f64| w.is_finite() && w >= 0.0;
        if self.bins.is_empty()
            || self.bins.iter().any(|b| !weight_ok(b.weight))
            || self.bins.iter().map(|b| b.weight).sum::<f64>() <= 0.0
        {
            return Err(Error::Config(
                "bin weights must be non-negative with a positive sum".into(),
            ));
        }
        if self.agreement_levels.is_empty()
            || self.agreement_levels.iter().any(|l| !weight_ok(l.weight))
            || self.agreement_levels.iter().map(|l| l.weight).sum::<f64>() <= 0.0
        {
            return Err(Error::Config(
                "agreement weights must be non-negative with a positive sum".into(),
            ));
        }
        for bin in &self.bins {
            if bin.prefix.is_empty() || bin.prefix.len() > self.precision {
                return Err(Error::Config(format!(
                    "bin prefix {} must have 1..={} digits",
                    digit_string(&bin.prefix),
                    self.precision
                )));
            }
            for (pos, &digit) in bin.prefix.iter().enumerate() {
                if !self.allowed_digits(pos).contains(&digit) {
                    return Err(Error::Config(format!(
                        "bin prefix {} has digit {digit} outside the range allowed \
                         at position {pos}",
                        digit_string(&bin.prefix)
                    )));
                }
            }
        }
        for lw in &self.agreement_levels {
            if lw.level == 0 && self.includes_integer_digit {
                return Err(Error::Config(
                    "agreement level 0 is impossible when every value shares the \
                     integer digit"
                        .into(),
                ));
            }
            if lw.level > self.precision {
                return Err(Error::Config(format!(
                    "agreement level {} exceeds precision {}",
                    lw.level, self.precision
                )));
            }
            if lw.level < self.precision && lw.weight > 0.0 {
                let allowed = self.allowed_digits(lw.level);
                if allowed.end() == allowed.start() {
                    return Err(Error::Config(format!(
                        "cannot plant a digit mismatch at position {}: only one \
                         digit value is allowed there",
                        lw.level
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Planted ground truth for one synthetic observation, written to the
/// sidecar as one JSON object per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub id: ItemId,
    /// The mixture bin the spectroscopic value was drawn from.
    pub bin: String,
    /// The exact planted shared-prefix length.
    pub lcp: usize,
}

fn pick_weighted<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut target = rng.gen_range(0.0..total);
    for (i, &w) in weights.iter().enumerate() {
        if target < w {
            return i;
        }
        target -= w;
    }
    weights.len() - 1
}

/// Renders digits as decimal text under the model's convention.
fn digits_to_text(digits: &[u8], includes_integer_digit: bool) -> String {
    if includes_integer_digit {
        let mut text = String::with_capacity(digits.len() + 2);
        text.push(char::from_digit(u32::from(digits[0]), 16).expect("digit"));
        text.push('.');
        for &d in &digits[1..] {
            text.push(char::from_digit(u32::from(d), 16).expect("digit"));
        }
        text
    } else {
        let mut text = String::with_capacity(digits.len() + 2);
        text.push_str("0.");
        for &d in digits {
            text.push(char::from_digit(u32::from(d), 16).expect("digit"));
        }
        text
    }
}

/// Generates `n` synthetic observations, byte-identical for identical
/// `(n, seed, model)`, together with the planted ground truth.
pub fn synth(
    n: usize,
    seed: u64,
    model: &SynthModel,
) -> Result<(Vec<Observation>, Vec<SynthTruth>)> {
    model.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let bin_weights: Vec<f64> = model.bins.iter().map(|b| b.weight).collect();
    let level_weights: Vec<f64> = model.agreement_levels.iter().map(|l| l.weight).collect();

    let mut observations = Vec::with_capacity(n);
    let mut truths = Vec::with_capacity(n);
    for id in 0..n {
        let bin = &model.bins[pick_weighted(&mut rng, &bin_weights)];
        let mut spec_digits = Vec::with_capacity(model.precision);
        spec_digits.extend_from_slice(&bin.prefix);
        for position in bin.prefix.len()..model.precision {
            spec_digits.push(rng.gen_range(model.allowed_digits(position)));
        }

        let level = model.agreement_levels[pick_weighted(&mut rng, &level_weights)].level;
        let mut phot_digits = spec_digits[..level].to_vec();
        if level < model.precision {
            let allowed = model.allowed_digits(level);
            let mut digit = rng.gen_range(allowed.clone());
            while digit == spec_digits[level] {
                digit = rng.gen_range(allowed.clone());
            }
            phot_digits.push(digit);
            for position in level + 1..model.precision {
                phot_digits.push(rng.gen_range(model.allowed_digits(position)));
            }
        }

        let z_spec_text = digits_to_text(&spec_digits, model.includes_integer_digit);
        let z_phot_text = digits_to_text(&phot_digits, model.includes_integer_digit);
        let ra = rng.gen_range(0.0..360.0);
        let dec = rng.gen_range(-90.0..90.0);
        observations.push(Observation {
            id,
            ra,
            dec,
            z_spec: z_spec_text.parse().expect("rendered numeral"),
            z_phot: z_phot_text.parse().expect("rendered numeral"),
            z_spec_key: encode(
                &z_spec_text,
                model.base,
                model.precision,
                model.includes_integer_digit,
            )?,
            z_phot_key: encode(
                &z_phot_text,
                model.base,
                model.precision,
                model.includes_integer_digit,
            )?,
            z_spec_text,
            z_phot_text,
        });
        truths.push(SynthTruth {
            id,
            bin: digit_string(&bin.prefix),
            lcp: level,
        });
    }
    Ok((observations, truths))
}

/// Writes observations in the catalog CSV format (`RA,DEC,Spec,Phot`).
pub fn write_csv<W: std::io::Write>(writer: W, observations: &[Observation]) -> Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    csv_writer
        .write_record(["RA", "DEC", "Spec", "Phot"])
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for o in observations {
        csv_writer
            .write_record([
                format!("{:.6}", o.ra),
                format!("{:.6}", o.dec),
                o.z_spec_text.clone(),
                o.z_phot_text.clone(),
            ])
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    csv_writer.flush()?;
    Ok(())
}

/// Writes the ground-truth sidecar, one JSON object per line.
pub fn write_truth<W: std::io::Write>(mut writer: W, truths: &[SynthTruth]) -> Result<()> {
    for truth in truths {
        serde_json::to_writer(&mut writer, truth)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// One timed method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMethod {
    /// Prefix-tree build over the spectroscopic keys at the given depth.
    BaireBuild { depth: usize },
    /// k-means forced to run exactly `iterations` Lloyd iterations.
    KMeans { k: usize, iterations: usize },
}

impl BenchMethod {
    fn label(&self) -> String {
        match self {
            BenchMethod::BaireBuild { depth } => format!("baire(depth={depth})"),
            BenchMethod::KMeans { k, iterations } => {
                format!("kmeans(k={k},iterations={iterations})")
            }
        }
    }
}

/// Timing plan: each method is run `runs` times (after `warmup` unrecorded
/// runs) over the same in-memory dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub methods: Vec<BenchMethod>,
    pub runs: usize,
    pub warmup: usize,
    pub seed: u64,
    /// Dimensionality of the k-means points (1 or 2).
    pub dims: usize,
}

impl Default for BenchPlan {
    fn default() -> Self {
        Self {
            methods: Vec::new(),
            runs: 50,
            warmup: 1,
            seed: 0,
            dims: 2,
        }
    }
}

/// Wall-clock samples and summary statistics for one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub label: String,
    pub n: usize,
    pub depth: Option<usize>,
    pub k: Option<usize>,
    pub iterations: Option<usize>,
    pub samples_ms: Vec<f64>,
    pub median_ms: f64,
    pub mean_ms: f64,
    pub stddev_ms: f64,
}

fn summarize(label: String, n: usize, method: &BenchMethod, samples_ms: Vec<f64>) -> BenchReport {
    let mut sorted = samples_ms.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
    let mid = sorted.len() / 2;
    let median_ms = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    };
    let mean_ms = samples_ms.iter().sum::<f64>() / samples_ms.len() as f64;
    let variance = samples_ms
        .iter()
        .map(|s| (s - mean_ms) * (s - mean_ms))
        .sum::<f64>()
        / samples_ms.len() as f64;
    let (depth, k, iterations) = match *method {
        BenchMethod::BaireBuild { depth } => (Some(depth), None, None),
        BenchMethod::KMeans { k, iterations } => (None, Some(k), Some(iterations)),
    };
    BenchReport {
        label,
        n,
        depth,
        k,
        iterations,
        samples_ms,
        median_ms,
        mean_ms,
        stddev_ms: variance.sqrt(),
    }
}

/// Times every method in the plan over one shared dataset.
pub fn bench(observations: &[Observation], plan: &BenchPlan) -> Result<Vec<BenchReport>> {
    if plan.methods.is_empty() {
        return Err(Error::Config("bench plan has no methods".into()));
    }
    if plan.runs == 0 {
        return Err(Error::Config("bench plan needs at least one run".into()));
    }
    if !(1..=2).contains(&plan.dims) {
        return Err(Error::Config("bench dims must be 1 or 2".into()));
    }
    let keys: Vec<(ItemId, &DigitKey)> =
        observations.iter().map(|o| (o.id, &o.z_spec_key)).collect();
    let needs_points = plan
        .methods
        .iter()
        .any(|m| matches!(m, BenchMethod::KMeans { .. }));
    let points: Vec<Vec<f64>> = if needs_points {
        observations.iter().map(|o| o.point(plan.dims)).collect()
    } else {
        Vec::new()
    };

    let mut reports = Vec::with_capacity(plan.methods.len());
    for method in &plan.methods {
        let mut samples = Vec::with_capacity(plan.runs);
        for run in 0..plan.warmup + plan.runs {
            let elapsed_ms = match *method {
                BenchMethod::BaireBuild { depth } => {
                    let start = Instant::now();
                    let tree = BaireTree::build(keys.iter().copied(), depth)?;
                    let elapsed = start.elapsed();
                    drop(tree);
                    elapsed.as_secs_f64() * 1e3
                }
                BenchMethod::KMeans { k, iterations } => {
                    let ids: Vec<ItemId> = observations.iter().map(|o| o.id).collect();
                    let config = KMeansConfig {
                        k,
                        max_iterations: iterations,
                        seed: plan.seed.wrapping_add(run as u64),
                        init: InitMethod::PlusPlus,
                        // Zero epsilon: run every iteration so timings scale
                        // with the iteration count.
                        convergence_epsilon: 0.0,
                    };
                    let start = Instant::now();
                    let result = kmeans_fit_labeled(&ids, &points, &config)?;
                    let elapsed = start.elapsed();
                    drop(result);
                    elapsed.as_secs_f64() * 1e3
                }
            };
            if run >= plan.warmup {
                samples.push(elapsed_ms);
            }
        }
        reports.push(summarize(
            method.label(),
            observations.len(),
            method,
            samples,
        ));
    }
    Ok(reports)
}

/// Least-squares line fit with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits `y = slope * x + intercept` by least squares.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::Shape(format!(
            "{} x values against {} y values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Domain("line fit needs at least two points".into()));
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        syy += (y - mean_y) * (y - mean_y);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::Domain("all x values are identical".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok(LineFit {
        slope,
        intercept: mean_y - slope * mean_x,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coincidence::{census, coincide};

    const TABLE_SNIPPET: &str = "\
RA,DEC,Spec,Phot
145.4339,0.56416792,0.14611299,0.15175095
145.42139,0.53370196,0.145909,0.17476539
145.6607,0.63385916,0.46691701,0.41157582
145.64568,0.50961215,0.15610801,0.18679948
";

    #[test]
    fn loads_the_documented_four_row_snippet() {
        let outcome = read_csv(TABLE_SNIPPET.as_bytes(), &CsvConfig::default()).unwrap();
        assert_eq!(outcome.observations.len(), 4);
        assert_eq!(outcome.dropped_out_of_range, 0);
        assert_eq!(outcome.skipped_rows, 0);
        let first = &outcome.observations[0];
        assert_eq!(first.id, 0);
        assert_eq!(first.z_spec_text, "0.14611299");
        assert_eq!(first.z_spec_key.digits(), &[0, 1, 4, 6, 1, 1]);
        assert_eq!(first.z_phot_key.digits(), &[0, 1, 5, 1, 7, 5]);
    }

    #[test]
    fn drops_out_of_range_rows_with_a_count() {
        let data = "RA,DEC,Spec,Phot\n1,2,0.61,0.1\n1,2,0.59,0.599\n1,2,0.3,0.6\n";
        let outcome = read_csv(data.as_bytes(), &CsvConfig::default()).unwrap();
        assert_eq!(outcome.observations.len(), 1);
        assert_eq!(outcome.dropped_out_of_range, 2);
        assert_eq!(outcome.observations[0].id, 1);
    }

    #[test]
    fn header_matching_is_case_insensitive_and_order_free() {
        let data = "phot,ra,SPEC,dec\n0.2,145.0,0.1,0.5\n";
        let outcome = read_csv(data.as_bytes(), &CsvConfig::default()).unwrap();
        assert_eq!(outcome.observations.len(), 1);
        assert_eq!(outcome.observations[0].z_spec, 0.1);
        assert_eq!(outcome.observations[0].z_phot, 0.2);
    }

    #[test]
    fn missing_column_is_a_format_error() {
        let data = "RA,DEC,Spec\n1,2,0.3\n";
        assert!(matches!(
            read_csv(data.as_bytes(), &CsvConfig::default()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn bad_rows_skip_or_abort_per_policy() {
        let data = "RA,DEC,Spec,Phot\n1,2,junk,0.1\n1,2,0.2,0.3\n";
        let outcome = read_csv(data.as_bytes(), &CsvConfig::default()).unwrap();
        assert_eq!(outcome.observations.len(), 1);
        assert_eq!(outcome.skipped_rows, 1);

        let abort = CsvConfig {
            bad_row: BadRowPolicy::Abort,
            ..CsvConfig::default()
        };
        assert!(matches!(
            read_csv(data.as_bytes(), &abort),
            Err(Error::Row(_))
        ));
    }

    #[test]
    fn empty_file_with_header_is_an_empty_sequence() {
        let outcome = read_csv("RA,DEC,Spec,Phot\n".as_bytes(), &CsvConfig::default()).unwrap();
        assert!(outcome.observations.is_empty());
        assert_eq!(outcome.dropped_out_of_range, 0);
    }

    #[test]
    fn csv_round_trip_preserves_redshift_text() {
        let outcome = read_csv(TABLE_SNIPPET.as_bytes(), &CsvConfig::default()).unwrap();
        let mut buffer = Vec::new();
        write_csv(&mut buffer, &outcome.observations).unwrap();
        let again = read_csv(buffer.as_slice(), &CsvConfig::default()).unwrap();
        for (a, b) in outcome.observations.iter().zip(&again.observations) {
            assert_eq!(a.z_spec_text, b.z_spec_text);
            assert_eq!(a.z_phot_text, b.z_phot_text);
            assert_eq!(a.z_spec_key, b.z_spec_key);
        }
    }

    #[test]
    fn synth_is_deterministic_and_respects_the_planted_model() {
        let model = SynthModel::survey_like(10, 6);
        let (a, truth_a) = synth(500, 42, &model).unwrap();
        let (b, truth_b) = synth(500, 42, &model).unwrap();
        assert_eq!(a, b);
        assert_eq!(truth_a, truth_b);
        let (c, _) = synth(500, 43, &model).unwrap();
        assert_ne!(a, c);

        // Every planted lcp is reproduced exactly by the coincidence check.
        for (obs, truth) in a.iter().zip(&truth_a) {
            let record = coincide(obs.id, &obs.z_spec_key, &obs.z_phot_key).unwrap();
            assert_eq!(record.lcp, truth.lcp, "observation {}", obs.id);
            assert!(digit_string(obs.z_spec_key.digits()).starts_with(&truth.bin));
        }
    }

    #[test]
    fn synth_single_bin_concentrates_the_census() {
        let model = SynthModel {
            bins: vec![SynthBin {
                prefix: vec![0, 4],
                weight: 1.0,
            }],
            agreement_levels: vec![LevelWeight {
                level: 3,
                weight: 1.0,
            }],
            ..SynthModel::survey_like(10, 6)
        };
        let (observations, _) = synth(1000, 7, &model).unwrap();
        let records: Vec<_> = observations
            .iter()
            .map(|o| coincide(o.id, &o.z_spec_key, &o.z_phot_key).unwrap())
            .collect();
        let census = census(&records);
        assert_eq!(census.count_at(3), 1000);
        assert_eq!(census.count_at_least(3), 1000);
        for o in &observations {
            assert!(o.z_spec_text.starts_with("0.4"));
        }
    }

    #[test]
    fn synth_census_matches_a_published_shape_within_sampling_error() {
        // Seven levels need one integer digit plus six decimals.
        let mut model = SynthModel::survey_like(10, 7);
        model.agreement_levels = vec![
            LevelWeight {
                level: 1,
                weight: 76_187.0,
            },
            LevelWeight {
                level: 2,
                weight: 270_920.0,
            },
            LevelWeight {
                level: 3,
                weight: 85_999.0,
            },
            LevelWeight {
                level: 4,
                weight: 8_982.0,
            },
            LevelWeight {
                level: 5,
                weight: 912.0,
            },
            LevelWeight {
                level: 6,
                weight: 90.0,
            },
            LevelWeight {
                level: 7,
                weight: 4.0,
            },
        ];
        let n = 443_094;
        let (observations, _) = synth(n, 99, &model).unwrap();
        let records: Vec<_> = observations
            .iter()
            .map(|o| coincide(o.id, &o.z_spec_key, &o.z_phot_key).unwrap())
            .collect();
        let census = census(&records);
        assert_eq!(census.total(), n as u64);
        let expected = [17.19, 61.14, 19.40, 2.02, 0.20, 0.02];
        for (level, want) in expected.iter().enumerate() {
            let got = census.percentage(level + 1);
            assert!(
                (got - want).abs() <= 0.3,
                "level {}: {got} vs {want}",
                level + 1
            );
        }
    }

    #[test]
    fn synth_rejects_invalid_models() {
        let mut model = SynthModel::survey_like(10, 6);
        model.bins.clear();
        assert!(matches!(synth(10, 0, &model), Err(Error::Config(_))));

        let mut model = SynthModel::survey_like(10, 6);
        model.bins[0].weight = -1.0;
        assert!(matches!(synth(10, 0, &model), Err(Error::Config(_))));

        let mut model = SynthModel::survey_like(10, 6);
        model.agreement_levels = vec![LevelWeight {
            level: 0,
            weight: 1.0,
        }];
        assert!(matches!(synth(10, 0, &model), Err(Error::Config(_))));

        let mut model = SynthModel::survey_like(10, 6);
        model.agreement_levels = vec![LevelWeight {
            level: 7,
            weight: 1.0,
        }];
        assert!(matches!(synth(10, 0, &model), Err(Error::Config(_))));
    }

    #[test]
    fn synth_zero_returns_empty_output() {
        let model = SynthModel::survey_like(10, 6);
        let (observations, truths) = synth(0, 0, &model).unwrap();
        assert!(observations.is_empty());
        assert!(truths.is_empty());
    }

    #[test]
    fn bench_single_run_median_equals_mean() {
        let model = SynthModel::survey_like(10, 6);
        let (observations, _) = synth(200, 5, &model).unwrap();
        let plan = BenchPlan {
            methods: vec![BenchMethod::BaireBuild { depth: 3 }],
            runs: 1,
            warmup: 0,
            ..BenchPlan::default()
        };
        let reports = bench(&observations, &plan).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].samples_ms.len(), 1);
        assert_eq!(reports[0].median_ms, reports[0].mean_ms);
        assert_eq!(reports[0].stddev_ms, 0.0);
        assert_eq!(reports[0].depth, Some(3));
    }

    #[test]
    fn bench_rejects_empty_plans() {
        let model = SynthModel::survey_like(10, 6);
        let (observations, _) = synth(10, 5, &model).unwrap();
        assert!(matches!(
            bench(&observations, &BenchPlan::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn line_fit_recovers_exact_lines() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(matches!(linear_fit(&[1.0], &[2.0]), Err(Error::Domain(_))));
        assert!(matches!(
            linear_fit(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn truth_sidecar_is_one_json_object_per_line() {
        let truths = vec![
            SynthTruth {
                id: 0,
                bin: "04".into(),
                lcp: 3,
            },
            SynthTruth {
                id: 1,
                bin: "01".into(),
                lcp: 2,
            },
        ];
        let mut buffer = Vec::new();
        write_truth(&mut buffer, &truths).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let parsed: SynthTruth = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(parsed, truths[0]);
    }
}
