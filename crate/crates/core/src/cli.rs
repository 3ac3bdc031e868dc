//! Command-line front end over the library: clustering, coincidence census,
//! digit distributions, k-means comparison, benches, synthetic data, the
//! lattice demo, and the self-verification suite.
//!
//! Exit codes: 0 success, 1 user error (bad flags, bad input), 2 internal
//! error (a self-check failed or the process panicked).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bairetree::{BaireTree, ItemId, LevelClustering};
use crate::coincidence::{
    census, coincide, confidence_at_least, digit_histogram, histogram_diff, CoincidenceRecord,
    DigitHistogram, PeakConfig,
};
use crate::error::{Error, Result};
use crate::madic::digit_string;
use crate::oracle::{
    check_metric, check_ultrametric, cophenetic_matrix, fca_clusters, fca_demo_dataset,
    fca_dissimilarity, fca_lattice, hac_complete_linkage, hac_single_linkage,
    pairwise_baire_matrix, random_keys,
};
use crate::partition::{
    contingency, kmeans_fit_labeled, match_summary, permute_for_display, InitMethod, KMeansConfig,
};
use crate::pipeline::{
    bench, linear_fit, load_csv, synth, write_csv, write_truth, BadRowPolicy, BenchMethod,
    BenchPlan, CsvConfig, Observation, SynthModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ColumnChoice {
    Spec,
    Phot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InitChoice {
    PlusPlus,
    RandomPartition,
}

impl From<InitChoice> for InitMethod {
    fn from(choice: InitChoice) -> Self {
        match choice {
            InitChoice::PlusPlus => InitMethod::PlusPlus,
            InitChoice::RandomPartition => InitMethod::RandomPartition,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "baire",
    version,
    about = "Longest-common-prefix clustering toolkit for paired decimal catalogs"
)]
struct Cli {
    /// Digit base for keys.
    #[arg(long, global = true, default_value_t = 10)]
    base: u32,
    /// Digits kept per value (|K|).
    #[arg(long, global = true, default_value_t = 6)]
    precision: usize,
    /// Prefix-tree depth.
    #[arg(long, global = true, default_value_t = 4)]
    depth: usize,
    /// Half-open upper bound of the accepted value range.
    #[arg(long, global = true, default_value_t = 0.6)]
    range_max: f64,
    /// Seed for anything randomized.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output rendering.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Catalog CSV (header RA,DEC,Spec,Phot unless --columns overrides).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Generate this many synthetic rows instead of reading a file.
    #[arg(long)]
    synth: Option<usize>,
    /// Generative model JSON for --synth.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Column header names as RA,DEC,SPEC,PHOT.
    #[arg(long)]
    columns: Option<String>,
    /// CSV field delimiter.
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Abort the load on the first bad row instead of skip-counting.
    #[arg(long)]
    abort_on_bad_row: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the prefix tree and print per-level cluster summaries.
    Cluster {
        #[command(flatten)]
        input: InputArgs,
        /// Which key column to cluster.
        #[arg(long, value_enum, default_value_t = ColumnChoice::Spec)]
        column: ColumnChoice,
        /// Write the tree as nested JSON to this path.
        #[arg(long)]
        dump_tree: Option<PathBuf>,
        /// Largest member list included in the tree dump.
        #[arg(long, default_value_t = 100)]
        dump_members_max: usize,
    },
    /// Census of spec/phot shared-prefix lengths with confidence levels.
    Coincidence {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Per-position digit distributions, their peaks, and the spec-phot diff.
    Digits {
        #[command(flatten)]
        input: InputArgs,
        /// Gaussian smoothing width applied before peak detection.
        #[arg(long)]
        smooth_sigma: Option<f64>,
        /// Absolute peak threshold (default: 1% of the column size).
        #[arg(long)]
        peak_threshold: Option<f64>,
    },
    /// Compare prefix clusters at one level against a k-means partition.
    Compare {
        #[command(flatten)]
        input: InputArgs,
        /// Prefix length of the compared clusters.
        #[arg(long, default_value_t = 2)]
        level: usize,
        /// Number of centroids (default: the occupied cluster count).
        #[arg(long)]
        k: Option<usize>,
        /// Lloyd iteration cap.
        #[arg(long, default_value_t = 100)]
        iterations: usize,
        /// Convergence threshold on centroid movement.
        #[arg(long, default_value_t = 1e-9)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = InitChoice::PlusPlus)]
        init: InitChoice,
        /// Cluster the 2D (spec, phot) pairs or the 1D phot values.
        #[arg(long, default_value_t = 2)]
        dims: usize,
    },
    /// Time tree builds against k-means runs on one shared dataset.
    Bench {
        #[command(flatten)]
        input: InputArgs,
        /// Tree build at this depth (repeatable).
        #[arg(long = "baire-depth")]
        baire_depth: Vec<usize>,
        /// k-means method as K:ITERATIONS (repeatable).
        #[arg(long = "kmeans", value_name = "K:ITERS")]
        kmeans: Vec<String>,
        /// Timed runs per method.
        #[arg(long, default_value_t = 50)]
        runs: usize,
        /// Unrecorded warmup runs per method.
        #[arg(long, default_value_t = 1)]
        warmup: usize,
        #[arg(long, default_value_t = 2)]
        dims: usize,
    },
    /// Write a synthetic catalog CSV plus its ground-truth sidecar.
    Synth {
        /// Number of rows.
        #[arg(long)]
        n: usize,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth JSON-lines path.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Generative model JSON (default: survey-like mixture).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Print the lattice-dissimilarity demo on the five-object table.
    FcaDemo,
    /// Run the oracle suite on seeded random keys.
    Verify {
        /// Number of random keys.
        #[arg(long, default_value_t = 200)]
        n: usize,
        /// Write the single-linkage merge list (`left right level` per line).
        #[arg(long)]
        dump_dendrogram: Option<PathBuf>,
    },
}

/// Parses arguments and runs one subcommand, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match &cli.command {
        Command::Cluster {
            input,
            column,
            dump_tree,
            dump_members_max,
        } => {
            let observations = load_input(&cli, input)?;
            cmd_cluster(
                &cli,
                &observations,
                *column,
                dump_tree.as_deref(),
                *dump_members_max,
            )?;
            Ok(0)
        }
        Command::Coincidence { input } => {
            let observations = load_input(&cli, input)?;
            cmd_coincidence(&cli, &observations)?;
            Ok(0)
        }
        Command::Digits {
            input,
            smooth_sigma,
            peak_threshold,
        } => {
            let observations = load_input(&cli, input)?;
            cmd_digits(&cli, &observations, *smooth_sigma, *peak_threshold)?;
            Ok(0)
        }
        Command::Compare {
            input,
            level,
            k,
            iterations,
            epsilon,
            init,
            dims,
        } => {
            let observations = load_input(&cli, input)?;
            cmd_compare(
                &cli,
                &observations,
                *level,
                *k,
                *iterations,
                *epsilon,
                (*init).into(),
                *dims,
            )?;
            Ok(0)
        }
        Command::Bench {
            input,
            baire_depth,
            kmeans,
            runs,
            warmup,
            dims,
        } => {
            let observations = load_input(&cli, input)?;
            cmd_bench(
                &cli,
                &observations,
                baire_depth,
                kmeans,
                *runs,
                *warmup,
                *dims,
            )?;
            Ok(0)
        }
        Command::Synth {
            n,
            out,
            truth,
            model,
        } => {
            let model = load_model(&cli, model.as_deref())?;
            let (observations, truths) = synth(*n, cli.seed, &model)?;
            let file = std::fs::File::create(out)?;
            write_csv(std::io::BufWriter::new(file), &observations)?;
            if let Some(truth_path) = truth {
                let file = std::fs::File::create(truth_path)?;
                write_truth(std::io::BufWriter::new(file), &truths)?;
            }
            println!(
                "wrote {} observations to {}{}",
                observations.len(),
                out.display(),
                truth
                    .as_ref()
                    .map(|t| format!(" (ground truth in {})", t.display()))
                    .unwrap_or_default()
            );
            Ok(0)
        }
        Command::FcaDemo => {
            cmd_fca_demo();
            Ok(0)
        }
        Command::Verify { n, dump_dendrogram } => cmd_verify(&cli, *n, dump_dendrogram.as_deref()),
    }
}

fn parse_columns(spec: &str) -> Result<(String, String, String, String)> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 4 || parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!(
            "--columns expects four comma-separated names, got {spec:?}"
        )));
    }
    Ok((
        parts[0].into(),
        parts[1].into(),
        parts[2].into(),
        parts[3].into(),
    ))
}

fn load_model(cli: &Cli, path: Option<&std::path::Path>) -> Result<SynthModel> {
    match path {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("bad model file {}: {e}", path.display())))
        }
        None => Ok(SynthModel::survey_like(cli.base, cli.precision)),
    }
}

fn load_input(cli: &Cli, input: &InputArgs) -> Result<Vec<Observation>> {
    match (&input.input, input.synth) {
        (Some(_), Some(_)) => Err(Error::Config(
            "--input and --synth are mutually exclusive".into(),
        )),
        (Some(path), None) => {
            let mut config = CsvConfig {
                delimiter: u8::try_from(input.delimiter)
                    .map_err(|_| Error::Config("delimiter must be a single ASCII char".into()))?,
                range_max: cli.range_max,
                base: cli.base,
                precision: cli.precision,
                includes_integer_digit: true,
                bad_row: if input.abort_on_bad_row {
                    BadRowPolicy::Abort
                } else {
                    BadRowPolicy::SkipWithCount
                },
                ..CsvConfig::default()
            };
            if let Some(columns) = &input.columns {
                let (ra, dec, spec, phot) = parse_columns(columns)?;
                config.ra_column = ra;
                config.dec_column = dec;
                config.spec_column = spec;
                config.phot_column = phot;
            }
            let outcome = load_csv(path, &config)?;
            eprintln!(
                "loaded {} observations from {} ({} out of range, {} skipped)",
                outcome.observations.len(),
                path.display(),
                outcome.dropped_out_of_range,
                outcome.skipped_rows
            );
            Ok(outcome.observations)
        }
        (None, Some(n)) => {
            let model = load_model(cli, input.model.as_deref())?;
            let (observations, _) = synth(n, cli.seed, &model)?;
            Ok(observations)
        }
        (None, None) => Err(Error::Config("provide --input FILE or --synth N".into())),
    }
}

fn records_of(observations: &[Observation]) -> Result<Vec<CoincidenceRecord>> {
    observations
        .iter()
        .map(|o| coincide(o.id, &o.z_spec_key, &o.z_phot_key))
        .collect()
}

fn cmd_cluster(
    cli: &Cli,
    observations: &[Observation],
    column: ColumnChoice,
    dump_tree: Option<&std::path::Path>,
    dump_members_max: usize,
) -> Result<()> {
    let keys = observations.iter().map(|o| {
        let key = match column {
            ColumnChoice::Spec => &o.z_spec_key,
            ColumnChoice::Phot => &o.z_phot_key,
        };
        (o.id, key)
    });
    let tree = BaireTree::build(keys, cli.depth)?;
    if let Some(path) = dump_tree {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(
            std::io::BufWriter::new(file),
            &tree.to_json(dump_members_max),
        )
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        eprintln!("tree dumped to {}", path.display());
    }

    let levels: Vec<LevelClustering> = (1..=cli.depth)
        .map(|level| tree.clusters_at_level(level))
        .collect::<Result<_>>()?;
    match cli.format {
        Format::Table => {
            println!(
                "items: {}   base: {}   depth: {}   nodes: {}",
                tree.item_count(),
                tree.base(),
                tree.max_depth(),
                tree.node_count()
            );
            for lc in &levels {
                println!("level {}: {} clusters", lc.level(), lc.cluster_count());
            }
            if let Some(last) = levels.last() {
                println!("clusters at level {}:", last.level());
                println!("{:<12} {:>10}", "prefix", "count");
                for (prefix, members) in last.clusters() {
                    println!("{:<12} {:>10}", digit_string(prefix), members.len());
                }
            }
        }
        Format::Csv => {
            println!("level,prefix,count");
            for lc in &levels {
                for (prefix, members) in lc.clusters() {
                    println!("{},{},{}", lc.level(), digit_string(prefix), members.len());
                }
            }
        }
        Format::Json => {
            let levels_json: Vec<_> = levels
                .iter()
                .map(|lc| {
                    json!({
                        "level": lc.level(),
                        "clusters": lc
                            .clusters()
                            .iter()
                            .map(|(p, m)| json!({"prefix": digit_string(p), "count": m.len()}))
                            .collect::<Vec<_>>(),
                    })
                })
                .collect();
            let out = json!({
                "base": tree.base(),
                "depth": tree.max_depth(),
                "item_count": tree.item_count(),
                "node_count": tree.node_count(),
                "levels": levels_json,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&out).expect("serializable")
            );
        }
    }
    Ok(())
}

fn cmd_coincidence(cli: &Cli, observations: &[Observation]) -> Result<()> {
    let records = records_of(observations)?;
    let census = census(&records);
    let levels: Vec<usize> = (0..=cli.precision).collect();
    let confidences: Vec<(usize, f64)> = if census.total() > 0 {
        (2..=cli.precision)
            .map(|d| confidence_at_least(&census, d).map(|c| (d, c)))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    match cli.format {
        Format::Table => {
            println!("{:<8} {:>12} {:>8}", "Digit", "No.", "%");
            for &level in &levels {
                if level == 0 && census.count_at(0) == 0 {
                    continue;
                }
                println!(
                    "{:<8} {:>12} {:>8.2}",
                    level,
                    census.count_at(level),
                    census.truncated_percentage(level)
                );
            }
            println!("{:<8} {:>12} {:>8}", "total", census.total(), 100);
            for (digits, pct) in &confidences {
                println!("at least {digits} shared digits: {pct:.2}%");
            }
        }
        Format::Csv => {
            println!("level,count,percent");
            for &level in &levels {
                println!(
                    "{},{},{:.2}",
                    level,
                    census.count_at(level),
                    census.truncated_percentage(level)
                );
            }
        }
        Format::Json => {
            let out = json!({
                "total": census.total(),
                "levels": levels
                    .iter()
                    .map(|&l| json!({
                        "level": l,
                        "count": census.count_at(l),
                        "percent": census.truncated_percentage(l),
                    }))
                    .collect::<Vec<_>>(),
                "confidence_at_least": confidences
                    .iter()
                    .map(|(d, c)| json!({"digits": d, "percent": c}))
                    .collect::<Vec<_>>(),
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&out).expect("serializable")
            );
        }
    }
    Ok(())
}

fn histogram_json(h: &DigitHistogram, config: &PeakConfig) -> serde_json::Value {
    json!({
        "positions": h.positions(),
        "base": h.base(),
        "grid": h.grid(),
        "peaks": h.peaks(config),
    })
}

fn cmd_digits(
    cli: &Cli,
    observations: &[Observation],
    smooth_sigma: Option<f64>,
    peak_threshold: Option<f64>,
) -> Result<()> {
    let spec = digit_histogram(observations.iter().map(|o| &o.z_spec_key))?;
    let phot = digit_histogram(observations.iter().map(|o| &o.z_phot_key))?;
    let config = PeakConfig {
        threshold: peak_threshold,
        smoothing_sigma: smooth_sigma,
    };
    let diff = histogram_diff(&spec, &phot, &config)?;

    match cli.format {
        Format::Table => {
            for (name, histogram) in [("spec", &spec), ("phot", &phot)] {
                println!(
                    "{name} digit distribution (rows = positions 1..{}):",
                    histogram.positions()
                );
                for position in 1..=histogram.positions() {
                    let cells: Vec<String> = histogram
                        .row(position)
                        .iter()
                        .map(|c| format!("{c:>8}"))
                        .collect();
                    println!("  {:>2}  {}", position, cells.join(""));
                }
            }
            for (name, peaks) in [("spec", &diff.peaks_a), ("phot", &diff.peaks_b)] {
                if peaks.is_empty() {
                    println!("{name} peaks: none");
                } else {
                    let cells: Vec<String> = peaks
                        .iter()
                        .map(|p| {
                            format!(
                                "(position {}, digit {}, {:.1})",
                                p.position, p.digit, p.value
                            )
                        })
                        .collect();

                    println!("{name} peaks: {}", cells.join(" "));
                }
            }
        }
        Format::Csv => {
            println!("column,position,digit,count");
            for (name, histogram) in [("spec", &spec), ("phot", &phot)] {
                for position in 1..=histogram.positions() {
                    for (digit, &count) in histogram.row(position).iter().enumerate() {
                        println!("{name},{position},{digit},{count}");
                    }
                }
            }
            for (position, row) in diff.diff.iter().enumerate() {
                for (digit, &value) in row.iter().enumerate() {
                    println!("diff,{},{digit},{value}", position + 1);
                }
            }
        }
        Format::Json => {
            let out = json!({
                "spec": histogram_json(&spec, &config),
                "phot": histogram_json(&phot, &config),
                "diff": diff.diff,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&out).expect("serializable")
            );
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    cli: &Cli,
    observations: &[Observation],
    level: usize,
    k: Option<usize>,
    iterations: usize,
    epsilon: f64,
    init: InitMethod,
    dims: usize,
) -> Result<()> {
    if !(1..=2).contains(&dims) {
        return Err(Error::Config("--dims must be 1 or 2".into()));
    }
    if level == 0 || level > cli.precision {
        return Err(Error::Range(format!(
            "--level must be within 1..={}",
            cli.precision
        )));
    }
    let records = records_of(observations)?;
    let mut groups: BTreeMap<Vec<u8>, Vec<ItemId>> = BTreeMap::new();
    let mut ids = Vec::new();
    let mut points = Vec::new();
    for (observation, record) in observations.iter().zip(&records) {
        if record.lcp >= level {
            groups
                .entry(record.shared_prefix[..level].to_vec())
                .or_default()
                .push(observation.id);
            ids.push(observation.id);
            points.push(observation.point(dims));
        }
    }
    if ids.is_empty() {
        return Err(Error::Config(format!(
            "no observations share at least {level} leading digits"
        )));
    }
    let clustering = LevelClustering::from_groups(level, cli.base, groups)?;
    let k = k.unwrap_or_else(|| clustering.cluster_count());
    let config = KMeansConfig {
        k,
        max_iterations: iterations,
        seed: cli.seed,
        init,
        convergence_epsilon: epsilon,
    };
    let km = kmeans_fit_labeled(&ids, &points, &config)?;
    let table = contingency(&clustering, &km)?;
    let summary = match_summary(&table);
    let order = permute_for_display(&table);

    match cli.format {
        Format::Table => {
            println!(
                "co-clustered items: {}   level: {level}   k: {k}   iterations run: {}",
                ids.len(),
                km.iterations_run
            );
            println!(
                "rows: {} complete, {} overlapping, {} empty",
                summary.complete, summary.overlapping, summary.empty
            );
            let header: Vec<String> = order
                .col_order
                .iter()
                .map(|&c| format!("{:>8}", table.col_clusters[c]))
                .collect();
            println!("{:<10} {:<12} {}", "prefix", "class", header.join(""));
            for &r in &order.row_order {
                let class = format!("{:?}", table.row_classes[r]).to_lowercase();
                let cells: Vec<String> = order
                    .col_order
                    .iter()
                    .map(|&c| format!("{:>8}", table.cells[r][c]))
                    .collect();
                println!(
                    "{:<10} {:<12} {}",
                    table.row_labels[r],
                    class,
                    cells.join("")
                );
            }
        }
        Format::Csv => {
            let header: Vec<String> = order
                .col_order
                .iter()
                .map(|&c| format!("k{}", table.col_clusters[c]))
                .collect();
            println!("prefix,class,{}", header.join(","));
            for &r in &order.row_order {
                let class = format!("{:?}", table.row_classes[r]).to_lowercase();
                let cells: Vec<String> = order
                    .col_order
                    .iter()
                    .map(|&c| table.cells[r][c].to_string())
                    .collect();
                println!("{},{},{}", table.row_labels[r], class, cells.join(","));
            }
        }
        Format::Json => {
            let rows: Vec<_> = order
                .row_order
                .iter()
                .map(|&r| {
                    json!({
                        "prefix": table.row_labels[r],
                        "class": table.row_classes[r],
                        "cells": order
                            .col_order
                            .iter()
                            .map(|&c| table.cells[r][c])
                            .collect::<Vec<_>>(),
                    })
                })
                .collect();
            let out = json!({
                "level": level,
                "k": k,
                "iterations_run": km.iterations_run,
                "item_count": ids.len(),
                "summary": summary,
                "columns": order
                    .col_order
                    .iter()
                    .map(|&c| table.col_clusters[c])
                    .collect::<Vec<_>>(),
                "rows": rows,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&out).expect("serializable")
            );
        }
    }
    Ok(())
}

fn parse_kmeans_spec(spec: &str) -> Result<BenchMethod> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Config(format!("bad --kmeans spec {spec:?}, expected K:ITERS")))
    };
    match parts.as_slice() {
        [k, iterations] => Ok(BenchMethod::KMeans {
            k: parse(k)?,
            iterations: parse(iterations)?,
        }),
        _ => Err(Error::Config(format!(
            "bad --kmeans spec {spec:?}, expected K:ITERS"
        ))),
    }
}

fn cmd_bench(
    cli: &Cli,
    observations: &[Observation],
    baire_depths: &[usize],
    kmeans_specs: &[String],
    runs: usize,
    warmup: usize,
    dims: usize,
) -> Result<()> {
    let mut methods: Vec<BenchMethod> = baire_depths
        .iter()
        .map(|&depth| BenchMethod::BaireBuild { depth })
        .collect();
    for spec in kmeans_specs {
        methods.push(parse_kmeans_spec(spec)?);
    }
    let plan = BenchPlan {
        methods,
        runs,
        warmup,
        seed: cli.seed,
        dims,
    };
    let reports = bench(observations, &plan)?;

    // Iteration-count scaling of the k-means timings, when measurable.
    let kmeans_points: Vec<(f64, f64)> = reports
        .iter()
        .filter_map(|r| Some((r.iterations? as f64, r.median_ms)))
        .collect();
    let fit = if kmeans_points.len() >= 3 {
        let xs: Vec<f64> = kmeans_points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = kmeans_points.iter().map(|p| p.1).collect();
        linear_fit(&xs, &ys).ok()
    } else {
        None
    };

    match cli.format {
        Format::Table => {
            println!(
                "{:<32} {:>8} {:>12} {:>12} {:>12}",
                "method", "n", "median ms", "mean ms", "stddev ms"
            );
            for r in &reports {
                println!(
                    "{:<32} {:>8} {:>12.3} {:>12.3} {:>12.3}",
                    r.label, r.n, r.median_ms, r.mean_ms, r.stddev_ms
                );
            }
            if let Some(fit) = fit {
                println!(
                    "kmeans time vs iterations: slope {:.4} ms/iter, r^2 {:.4}",
                    fit.slope, fit.r_squared
                );
            }
        }
        Format::Csv => {
            println!("label,n,depth,k,iterations,median_ms,mean_ms,stddev_ms");
            for r in &reports {
                let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
                println!(
                    "{},{},{},{},{},{:.6},{:.6},{:.6}",
                    r.label,
                    r.n,
                    opt(r.depth),
                    opt(r.k),
                    opt(r.iterations),
                    r.median_ms,
                    r.mean_ms,
                    r.stddev_ms
                );
            }
        }
        Format::Json => {
            let out = json!({
                "reports": reports,
                "kmeans_time_fit": fit,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&out).expect("serializable")
            );
        }
    }
    Ok(())
}

fn cmd_fca_demo() {
    let (names, data) = fca_demo_dataset();
    println!("objects x attributes:");
    println!("      v1  v2  v3");
    for (name, row) in names.iter().zip(&data) {
        let cells: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        println!("  {name}    {}", cells.join("   "));
    }
    println!();
    let lattice = fca_lattice(&data).expect("demo data is well-formed");

    println!("pairwise dissimilarity sets:");
    let mut by_vertex: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (&(i, j), &vertex) in &lattice.pair_map {
        by_vertex
            .entry(vertex)
            .or_default()
            .push(format!("d({},{})", names[i], names[j]));
    }
    for (vertex, pairs) in by_vertex.iter().rev() {
        println!(
            "  {}  <-  {}",
            lattice.vertices[*vertex].label(),
            pairs.join(", ")
        );
    }
    println!();
    println!("lattice vertices found (level = set size):");
    for vertex in lattice.vertices.iter().rev() {
        println!("  level {}: {}", vertex.level(), vertex.label());
    }
    println!("hasse edges:");
    for &(lo, hi) in &lattice.edges {
        println!(
            "  {} < {}",
            lattice.vertices[lo].label(),
            lattice.vertices[hi].label()
        );
    }
    for max_level in [2usize, 3] {
        println!();
        println!("clusters defined by all pairwise linkage at level <= {max_level}:");
        let clusters = fca_clusters(&data, max_level).expect("demo scale");
        for cluster in clusters {
            let member_names: Vec<&str> = cluster.iter().map(|&i| names[i]).collect();
            println!("  {}", member_names.join(", "));
        }
    }
}

fn cmd_verify(cli: &Cli, n: usize, dump_dendrogram: Option<&std::path::Path>) -> Result<i32> {
    // Fractional-digit convention: this exercises the bare metric.
    let keys = random_keys(n, cli.base, cli.precision, false, cli.seed)?;
    let matrix = pairwise_baire_matrix(&keys)?;
    let mut all_passed = true;
    let mut check = |name: &str, passed: bool| {
        println!("{}  {name}", if passed { "PASS" } else { "FAIL" });
        all_passed &= passed;
    };

    let metric = check_metric(&matrix);
    check(
        "metric axioms (positivity, reflexivity, symmetry, triangle)",
        metric.passed(),
    );
    let ultra = check_ultrametric(&matrix);
    check("ultrametric axiom (strong triangle)", ultra.passed());

    let single = hac_single_linkage(&matrix)?;
    if let Some(path) = dump_dendrogram {
        std::fs::write(path, single.to_merge_list())?;
        eprintln!("merge list dumped to {}", path.display());
    }
    check(
        "single-linkage cophenetic matrix reproduces the input",
        cophenetic_matrix(&single) == matrix,
    );
    let complete = hac_complete_linkage(&matrix)?;
    check(
        "complete-linkage cophenetic matrix agrees",
        cophenetic_matrix(&complete) == matrix,
    );

    let pairs: Vec<(ItemId, &crate::madic::DigitKey)> = keys.iter().enumerate().collect();
    let tree = BaireTree::build(pairs.iter().copied(), cli.precision)?;
    let mut tree_matches = true;
    'outer: for i in 0..keys.len() {
        for j in (i + 1)..keys.len() {
            let direct = crate::madic::baire_distance(&keys[i], &keys[j])?;
            let via_tree = tree.cophenetic_distance(i, j)?;
            if direct != via_tree {
                tree_matches = false;
                break 'outer;
            }
        }
    }
    check(
        "tree cophenetic distance equals the direct metric",
        tree_matches,
    );

    let parallel = BaireTree::build_parallel(&pairs, cli.precision)?;
    check(
        "parallel build is identical to the sequential build",
        parallel.to_json(usize::MAX) == tree.to_json(usize::MAX),
    );

    let (_, demo) = fca_demo_dataset();
    let at2 = fca_clusters(&demo, 2)?;
    check(
        "demo lattice clusters match the published linkage",
        at2 == vec![vec![0, 1, 2, 4], vec![0, 2, 3]]
            && fca_dissimilarity(&demo[0], &demo[1])?.label() == "d1,d2",
    );

    std::io::stdout().flush().ok();
    Ok(if all_passed { 0 } else { 2 })
}
