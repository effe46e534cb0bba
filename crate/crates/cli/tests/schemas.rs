mod common;

use common::{assert_valid, code, run, stdout_json, validator};
use serde_json::json;

#[test]
fn every_schema_compiles() {
    for entry in std::fs::read_dir(common::schema_dir()).unwrap() {
        let name = entry.unwrap().file_name().to_string_lossy().into_owned();
        validator(&name);
    }
}

#[test]
fn esf_report_matches_schema() {
    for (n, theta) in [("1", "5/2"), ("5", "1/2"), ("8", "7/3")] {
        let out = run(&["esf", "--n", n, "--theta", theta]);
        assert_eq!(code(&out), 0);
        assert_valid("esf.schema.json", &stdout_json(&out));
    }
}

#[test]
fn sample_report_matches_schema() {
    for (n, count) in [("1", "5"), ("5", "2000")] {
        let out = run(&[
            "sample", "--n", n, "--theta", "2", "--count", count, "--seed", "3",
        ]);
        assert_eq!(code(&out), 0);
        assert_valid("sample.schema.json", &stdout_json(&out));
    }
}

#[test]
fn summability_reports_match_schema() {
    for args in [
        ["--theta", "1", "--bound", "100", "--n-max", "200"],
        ["--theta", "1", "--bound", "0.0001", "--n-max", "1"],
        ["--theta", "1/3", "--bound", "5", "--n-max", "0"],
    ] {
        let mut full = vec!["summability"];
        full.extend(args);
        let out = run(&full);
        assert!(code(&out) <= 1);
        assert_valid("summability.schema.json", &stdout_json(&out));
    }
}

#[test]
fn consistency_reports_match_schema() {
    for extra in [
        vec!["--beta", "-1"],
        vec!["--beta", "0"],
        vec!["--beta", "0.5"],
        vec!["--beta", "-1", "--solve"],
        vec!["--beta", "1", "--placement", "inner-boundary"],
    ] {
        let mut args = vec![
            "consistency",
            "--region",
            "ball:2,1",
            "--vertex",
            "0,0",
            "--theta",
            "2",
            "--q",
            "2",
        ];
        args.extend(extra);
        let out = run(&args);
        assert!(code(&out) <= 1, "{}", common::stderr(&out));
        let report = stdout_json(&out);
        assert_valid("consistency.schema.json", &report);
        assert_valid("fields.schema.json", &report["fields"]);
    }
}

#[test]
fn input_files_match_schema() {
    assert_valid(
        "region.schema.json",
        &json!({"k": 2, "vertices": [[], [0], [0, 1]]}),
    );
    assert_valid(
        "fields.schema.json",
        &json!({
            "mode": "explicit_tail",
            "default": "1",
            "entries": [{"spin": 0, "vertex": [0], "g": "3/2"}],
            "tail": [{"vertex": [0], "mass": "5"}]
        }),
    );
}

#[test]
fn schemas_reject_malformed_reports() {
    let v = validator("esf.schema.json");
    assert!(!v.is_valid(&json!({"n": 3, "theta": "1", "rows": []})));
    assert!(!v.is_valid(&json!({
        "n": 1, "theta": "1",
        "rows": [{"partition": [1], "exact": "0.5", "decimal": "5e-1"}]
    })));
    let f = validator("fields.schema.json");
    assert!(!f.is_valid(&json!({"entries": [{"spin": 0, "vertex": [0], "g": "-1"}]})));
    assert!(!f.is_valid(&json!({"mode": "infinite"})));
}
