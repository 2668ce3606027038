//! Command-level behavior of the `trtk` binary: exit codes, flag handling,
//! report shape, and error texts. Every test spawns the real executable.

use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .canonicalize()
        .expect("fixture path")
        .to_string_lossy()
        .into_owned()
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> (i32, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_trtk"));
    cmd.args(args).env_remove("TRTK_BUDGET");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("spawn trtk");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn run(args: &[&str]) -> (i32, String) {
    run_env(args, &[])
}

fn report(args: &[&str]) -> (i32, Value) {
    let mut with_json: Vec<&str> = args.to_vec();
    with_json.push("--json");
    let (code, out) = run(&with_json);
    (code, serde_json::from_str(&out).expect("json report"))
}

fn temp_doc(stem: &str, contents: &str) -> String {
    let path = std::env::temp_dir().join(format!("trtk-{stem}-{}.json", std::process::id()));
    std::fs::write(&path, contents).expect("write temp doc");
    path.to_string_lossy().into_owned()
}

#[test]
fn validate_accepts_a_well_formed_document() {
    let (code, out) = run(&["struct", "validate", &fixture("k3.json")]);
    assert_eq!(code, 0);
    assert!(out.contains("HOLDS"), "output: {out}");
}

#[test]
fn validate_names_the_offending_tuple() {
    let path = temp_doc(
        "bad-entry",
        r#"{"version":1,"language":[{"name":"E","arity":2}],"size":2,"relations":{"E":[[0,9]]}}"#,
    );
    let (code, out) = run(&["struct", "validate", &path]);
    assert_eq!(code, 64);
    assert!(out.contains('9'), "error should name the entry: {out}");
}

#[test]
fn unknown_relation_symbols_are_input_errors() {
    let path = temp_doc(
        "bad-symbol",
        r#"{"version":1,"language":[{"name":"E","arity":2}],"size":2,"relations":{"X":[[0,1]]}}"#,
    );
    let (code, out) = run(&["struct", "validate", &path]);
    assert_eq!(code, 64);
    assert!(out.contains("X"), "error should name the symbol: {out}");
}

#[test]
fn unknown_flags_exit_with_usage() {
    let (code, out) = run(&["weaktypes", "enum", &fixture("empty.json"), "--frobnicate"]);
    assert_eq!(code, 64);
    assert!(out.contains("Usage"), "output: {out}");
}

#[test]
fn unknown_subcommands_exit_with_usage() {
    let (code, out) = run(&["transmogrify"]);
    assert_eq!(code, 64);
    assert!(out.contains("Usage") || out.contains("unrecognized"), "output: {out}");
}

#[test]
fn help_and_version_exit_cleanly() {
    let (code, out) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("trtk"));
    let (code, _) = run(&["--version"]);
    assert_eq!(code, 0);
}

#[test]
fn missing_files_are_input_errors() {
    let (code, out) = run(&["struct", "validate", "no-such-file.json"]);
    assert_eq!(code, 64);
    assert!(out.contains("no-such-file.json"), "output: {out}");
}

#[test]
fn role_prefixes_on_arrows_paths_are_accepted() {
    let c = format!("C={}", fixture("k6.json"));
    let b = format!("B={}", fixture("k3.json"));
    let a = format!("A={}", fixture("k2.json"));
    let (code, _) = run(&["arrows", &c, &b, &a, "-k", "2", "-l", "1"]);
    assert_eq!(code, 0);
    let (plain_code, _) = run(&[
        "arrows",
        &fixture("k6.json"),
        &fixture("k3.json"),
        &fixture("k2.json"),
        "-k",
        "2",
        "-l",
        "1",
    ]);
    assert_eq!(plain_code, 0);
}

#[test]
fn failing_searches_exit_one_with_a_witness() {
    let (code, report) = report(&[
        "arrows",
        &fixture("k5.json"),
        &fixture("k3.json"),
        &fixture("k2.json"),
        "-k",
        "2",
        "-l",
        "1",
    ]);
    assert_eq!(code, 1);
    assert_eq!(report["verdict"], "FAILS");
    assert_eq!(report["witness"]["colors"].as_array().unwrap().len(), 10);
}

#[test]
fn budget_env_var_sets_the_search_budget() {
    let args =
        ["arrows", &fixture("k6.json"), &fixture("k3.json"), &fixture("k2.json"), "-k", "2", "-l", "1", "--json"];
    let (code, out) = run_env(&args, &[("TRTK_BUDGET", "10")]);
    assert_eq!(code, 2);
    let report: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["verdict"], "INCONCLUSIVE");
    assert_eq!(report["configuration"]["budget"], 10);
}

#[test]
fn budget_flag_overrides_the_env_var() {
    let args = [
        "arrows",
        &fixture("k6.json"),
        &fixture("k3.json"),
        &fixture("k2.json"),
        "-k",
        "2",
        "-l",
        "1",
        "--budget",
        "1000000",
        "--json",
    ];
    let (code, out) = run_env(&args, &[("TRTK_BUDGET", "10")]);
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["configuration"]["budget"], 1_000_000);
}

#[test]
fn malformed_budget_env_var_is_rejected() {
    let (code, out) =
        run_env(&["struct", "validate", &fixture("k2.json")], &[("TRTK_BUDGET", "lots")]);
    assert_eq!(code, 64);
    assert!(out.contains("TRTK_BUDGET"), "output: {out}");
}

#[test]
fn json_reports_echo_command_and_configuration() {
    let (code, report) = report(&["weaktypes", "enum", &fixture("empty.json")]);
    assert_eq!(code, 0);
    assert_eq!(report["command"][0], "weaktypes");
    assert_eq!(report["command"][1], "enum");
    assert!(report["configuration"]["depth"].is_u64());
    assert!(report["configuration"]["budget"].is_u64());
    assert_eq!(report["verdict"], "HOLDS");
    assert_eq!(report["details"]["count"], 1);
    assert!(report["elapsed_ms"].is_u64());
}

#[test]
fn depth_flag_is_echoed_and_used() {
    let (code, report) = report(&[
        "respect",
        "family-check",
        &fixture("edge-into-path.json"),
        &fixture("no-triangles.json"),
        "--depth",
        "2",
    ]);
    assert_eq!(code, 0);
    assert_eq!(report["configuration"]["depth"], 2);
    assert_eq!(report["details"]["depth"], 2);
}

#[test]
fn respect_check_requires_pin_free_maps() {
    let pinned = temp_doc(
        "pinned-map",
        r#"{
  "version": 1,
  "source": {"version":1,"language":[{"name":"E","arity":2}],"size":0,"relations":{"E":[]}},
  "target": {"version":1,"language":[{"name":"E","arity":2}],"size":2,"relations":{"E":[]}},
  "map": {
    "base_map": [],
    "pins": [
      {
        "node": {"depth": 1, "patterns": {"E": []}},
        "image": {"depth": 1, "patterns": {"E": [[1, "t0"]]}}
      }
    ]
  }
}"#,
    );
    let (code, out) = run(&["respect", "check", &pinned]);
    assert_eq!(code, 64);
    assert!(out.contains("pin"), "output: {out}");
}

#[test]
fn respect_check_accepts_an_inclusion_into_a_clique() {
    let (code, out) = run(&["respect", "check", &fixture("edge-into-triangle.json")]);
    assert_eq!(code, 0);
    assert!(out.contains("HOLDS"));
}

#[test]
fn family_check_rejects_targets_outside_the_family() {
    let (code, out) = run(&[
        "respect",
        "family-check",
        &fixture("edge-into-triangle.json"),
        &fixture("no-triangles.json"),
    ]);
    assert_eq!(code, 64);
    assert!(out.contains("member"), "output: {out}");
}

#[test]
fn dot_export_prints_raw_graphviz() {
    let (code, out) = run(&["export", "dot", "type-tree", &fixture("path3.json")]);
    assert_eq!(code, 0);
    assert!(out.starts_with("digraph"), "output: {out}");
    let (code, out) = run(&["export", "dot", "plus", &fixture("vertex.json")]);
    assert_eq!(code, 0);
    assert!(out.starts_with("digraph"), "output: {out}");
    let (code, report) = report(&["export", "dot", "weak-type-tree", &fixture("edge2.json")]);
    assert_eq!(code, 0);
    assert!(report["details"]["dot"].as_str().unwrap().starts_with("digraph"));
}

#[test]
fn amalg_check_verdicts_follow_the_instance() {
    let (code, good) = report(&["amalg", "check", &fixture("triangle-free-instance.json")]);
    assert_eq!(code, 0);
    assert_eq!(good["verdict"], "HOLDS");
    assert_eq!(good["certificate"]["map"]["base_map"], serde_json::json!([0, 1]));

    let (code, bad) = report(&["amalg", "check", &fixture("mixed-instance.json")]);
    assert_eq!(code, 1);
    assert_eq!(bad["verdict"], "FAILS");
    assert_eq!(bad["witness"]["added_part"]["relations"]["H"], serde_json::json!([[0, 1, 2]]));
}

#[test]
fn jobs_and_seed_flags_are_accepted() {
    let (code, _) =
        run(&["weaktypes", "enum", &fixture("empty.json"), "--jobs", "1", "--seed", "7"]);
    assert_eq!(code, 0);
}

#[test]
fn of_tuple_rejects_entries_below_the_level() {
    let (code, out) =
        run(&["weaktypes", "of-tuple", &fixture("path3.json"), "--level", "1", "--tuple", "0,2"]);
    assert_eq!(code, 64);
    assert!(out.contains("0"), "output: {out}");
}

#[test]
fn types_meets_reports_a_code_for_the_copy() {
    let (code, report) = report(&["types", "meets", &fixture("path3.json"), "--copy", "0,2"]);
    assert_eq!(code, 0);
    assert_eq!(report["details"]["copy"], serde_json::json!([0, 2]));
    assert!(report["details"]["code"]["nodes"].as_array().unwrap().len() >= 2);
}

#[test]
fn emb_list_counts_strictly_increasing_embeddings() {
    let (code, report) = report(&["emb", "list", &fixture("k2.json"), &fixture("k3.json")]);
    assert_eq!(code, 0);
    assert_eq!(report["details"]["count"], 3);
}

#[test]
fn degree_reports_the_forced_color_count() {
    let (code, report) =
        report(&["degree", &fixture("k4.json"), &fixture("k2.json"), "-k", "3"]);
    assert_eq!(code, 0);
    assert_eq!(report["details"]["degree"], 3);
}

#[test]
fn shipped_fixtures_conform_to_the_schema_document() {
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/trtk.schema.json");
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
    for def in ["structure", "family", "plusEmbedding", "instance", "runReport"] {
        assert!(
            schema["definitions"][def].is_object(),
            "schema is missing the {def} definition"
        );
    }
}
