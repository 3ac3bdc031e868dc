//! End-to-end tests of the `baire` binary: subcommand output, exit codes,
//! and run-to-run stability of the JSON format.

use std::path::Path;
use std::process::{Command, Output};

fn baire(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_baire"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn write_catalog(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("catalog.csv");
    std::fs::write(
        &path,
        "RA,DEC,Spec,Phot\n\
         145.4339,0.56416792,0.14611299,0.15175095\n\
         145.42139,0.53370196,0.145909,0.17476539\n\
         145.6607,0.63385916,0.46691701,0.41157582\n\
         145.64568,0.50961215,0.15610801,0.18679948\n\
         10.0,1.0,0.61,0.2\n",
    )
    .expect("write catalog");
    path
}

#[test]
fn cluster_prints_level_summaries_and_dumps_the_tree() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = write_catalog(dir.path());
    let dump = dir.path().join("tree.json");
    let output = baire(&[
        "cluster",
        "--input",
        catalog.to_str().unwrap(),
        "--dump-tree",
        dump.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let text = stdout_of(&output);
    assert!(text.contains("items: 4"), "{text}");
    assert!(text.contains("level 1: 1 clusters"), "{text}");
    // Three of the four in-range rows share prefix 01; one sits in 04.
    assert!(text.contains("level 2: 2 clusters"), "{text}");
    let tree: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    assert_eq!(tree["item_count"], 4);
    // The out-of-range row was dropped and counted on stderr.
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("1 out of range"), "{stderr}");
}

#[test]
fn cluster_depth_beyond_precision_is_a_user_error() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = write_catalog(dir.path());
    let output = baire(&[
        "cluster",
        "--input",
        catalog.to_str().unwrap(),
        "--depth",
        "9",
        "--precision",
        "6",
    ]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("range error"), "{stderr}");
}

#[test]
fn unknown_flags_and_subcommands_exit_one_with_usage() {
    let output = baire(&["cluster", "--no-such-flag"]);
    assert_eq!(output.status.code(), Some(1));
    let output = baire(&["no-such-subcommand"]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.to_lowercase().contains("usage"), "{stderr}");
    let output = baire(&["--help"]);
    assert_eq!(output.status.code(), Some(0));
}

#[test]
fn missing_input_source_is_a_user_error() {
    let output = baire(&["coincidence"]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("--input") && stderr.contains("--synth"),
        "{stderr}"
    );
}

#[test]
fn coincidence_prints_the_census_table() {
    let output = baire(&["coincidence", "--synth", "2000", "--seed", "9"]);
    assert!(output.status.success());
    let text = stdout_of(&output);
    assert!(text.contains("Digit"), "{text}");
    assert!(text.contains("No."), "{text}");
    assert!(text.contains('%'), "{text}");
    assert!(text.contains("total"), "{text}");
    assert!(text.contains("at least 2 shared digits"), "{text}");
}

#[test]
fn json_output_is_stable_across_runs() {
    let args = [
        "coincidence",
        "--synth",
        "500",
        "--seed",
        "4",
        "--format",
        "json",
    ];
    let first = stdout_of(&baire(&args));
    let second = stdout_of(&baire(&args));
    assert_eq!(first, second);
    let parsed: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(parsed["total"], 500);
    assert!(parsed["levels"].as_array().unwrap().len() == 7);
}

#[test]
fn digits_emits_plot_ready_grids() {
    let output = baire(&["digits", "--synth", "300", "--seed", "3", "--format", "csv"]);
    assert!(output.status.success());
    let text = stdout_of(&output);
    assert!(text.starts_with("column,position,digit,count"), "{text}");
    // spec + phot + diff, 6 positions x 10 digits each.
    assert_eq!(text.lines().count(), 1 + 3 * 60);
    assert!(text.lines().any(|l| l.starts_with("diff,")));
}

#[test]
fn compare_reports_the_match_taxonomy() {
    let output = baire(&[
        "compare", "--synth", "3000", "--seed", "5", "--level", "2", "--format", "json",
    ]);
    assert!(output.status.success());
    let parsed: serde_json::Value = serde_json::from_str(&stdout_of(&output)).unwrap();
    let summary = &parsed["summary"];
    let rows = parsed["rows"].as_array().unwrap();
    // Ten potential level-2 rows under the single parent "0".
    assert_eq!(rows.len(), 10);
    let total = summary["complete"].as_u64().unwrap()
        + summary["overlapping"].as_u64().unwrap()
        + summary["empty"].as_u64().unwrap();
    assert_eq!(total, 10);
    // Row cell counts must sum to the co-clustered item count.
    let cell_sum: u64 = rows
        .iter()
        .flat_map(|r| r["cells"].as_array().unwrap())
        .map(|c| c.as_u64().unwrap())
        .sum();
    assert_eq!(cell_sum, parsed["item_count"].as_u64().unwrap());
}

#[test]
fn synth_writes_deterministic_catalog_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    let truth = dir.path().join("truth.jsonl");
    for out in [&out_a, &out_b] {
        let output = baire(&[
            "synth",
            "--n",
            "200",
            "--seed",
            "11",
            "--out",
            out.to_str().unwrap(),
            "--truth",
            truth.to_str().unwrap(),
        ]);
        assert!(output.status.success());
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert_eq!(a, b, "same seed must produce identical bytes");

    let truth_text = std::fs::read_to_string(&truth).unwrap();
    assert_eq!(truth_text.lines().count(), 200);
    let first: serde_json::Value =
        serde_json::from_str(truth_text.lines().next().unwrap()).unwrap();
    assert!(first["lcp"].as_u64().unwrap() >= 1);

    // The written catalog loads back through the normal path.
    let output = baire(&["coincidence", "--input", out_a.to_str().unwrap()]);
    assert!(output.status.success());
}

#[test]
fn bench_reports_every_method_once() {
    let output = baire(&[
        "bench",
        "--synth",
        "500",
        "--baire-depth",
        "3",
        "--kmeans",
        "4:2",
        "--runs",
        "3",
        "--warmup",
        "1",
        "--format",
        "csv",
    ]);
    assert!(output.status.success());
    let text = stdout_of(&output);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("baire(depth=3),500,3"), "{text}");
    assert!(
        lines[2].starts_with("kmeans(k=4,iterations=2),500,,4,2"),
        "{text}"
    );
}

#[test]
fn fca_demo_prints_the_expected_clusters() {
    let output = baire(&["fca-demo"]);
    assert!(output.status.success());
    let text = stdout_of(&output);
    assert!(text.contains("a, b, c, f"), "{text}");
    assert!(text.contains("a, c, e"), "{text}");
    assert!(text.contains("a, b, c, e, f"), "{text}");
    assert!(text.contains("d1,d2,d3"), "{text}");
}

#[test]
fn verify_passes_and_dumps_the_merge_list() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("merges.txt");
    let output = baire(&[
        "verify",
        "--n",
        "120",
        "--seed",
        "21",
        "--dump-dendrogram",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_of(&output);
    assert!(
        text.lines().all(|l| l.is_empty() || l.starts_with("PASS")),
        "{text}"
    );
    // One merge per line, n - 1 merges, each `left right level`.
    let merges = std::fs::read_to_string(&dump).unwrap();
    assert_eq!(merges.lines().count(), 119);
    for line in merges.lines() {
        let fields: Vec<&str> = line.split(' ').collect();
        assert_eq!(fields.len(), 3, "{line}");
        fields[0].parse::<usize>().unwrap();
        fields[1].parse::<usize>().unwrap();
        fields[2].parse::<f64>().unwrap();
    }
}
