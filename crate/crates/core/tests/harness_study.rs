use std::path::PathBuf;

use approx::assert_abs_diff_eq;
use meanfield::harness::report::write_csv;
use meanfield::harness::{
    emit_report, parse_config, run_convergence_study, ExperimentConfig, ReportPaths,
};
use meanfield::Execution;

fn config(body: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(body).unwrap()
}

fn curie_weiss(lambda: f64, volumes: &str) -> ExperimentConfig {
    config(&format!(
        r#"
schema_version = 1
name = "cw"
[model]
x = [{{ pauli = "z" }}]
g = [["xx", {lambda}]]
[study]
volumes = {volumes}
pressure_volumes = [1]
[tolerances]
gap = 5e-3
[oracles]
curie_weiss = {{ lambda = {lambda}, h = 0.0 }}
"#
    ))
}

fn csv_of(cfg: &ExperimentConfig) -> String {
    let report = run_convergence_study(cfg).unwrap();
    let mut buf = Vec::new();
    write_csv(&report, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn curie_weiss_gap_closes_away_from_criticality() {
    let report = run_convergence_study(&curie_weiss(0.25, "[10, 50, 200]")).unwrap();
    let last = report.rows.last().unwrap();
    assert_eq!(last.sites, 200);
    assert!(last.gap < 5e-3, "gap {}", last.gap);
    assert!(report.passed(), "{:?}", report.checks);
}

#[test]
fn zero_polynomial_reduces_to_plain_pressure() {
    let cfg = config(
        r#"
schema_version = 1
name = "free"
[model]
interaction = [{ pauli = "zz", coeff = -0.4 }, { pauli = "x", coeff = -0.3 }]
x = [{ pauli = "z" }]
g = []
[study]
volumes = [2, 4, 6]
"#,
    );
    let report = run_convergence_study(&cfg).unwrap();
    for row in &report.rows {
        assert_abs_diff_eq!(row.direct, row.pressure_origin, epsilon = 1e-12);
    }
}

#[test]
fn malformed_config_names_the_field() {
    let err = ExperimentConfig::from_toml_str(
        r#"
schema_version = 1
name = "bad"
[model]
x = [{ pauli = "z" }]
g = [["xx", 1.0]]
[study]
volumes = [50, 10]
"#,
    )
    .unwrap_err();
    assert!(err.to_string().contains("study.volumes"), "{err}");
}

#[test]
fn serial_and_parallel_reports_agree() {
    let mut cfg = config(
        r#"
schema_version = 1
name = "tcw"
[model]
interaction = [{ pauli = "x", coeff = -0.5 }]
x = [{ pauli = "z" }]
g = [["xx", 0.8]]
[study]
volumes = [4, 8, 16]
pressure_volumes = [1]
[grid]
tilt_points = 17
xy_points = 33
"#,
    );
    cfg.run.execution = Execution::Parallel;
    let parallel = csv_of(&cfg);
    assert_eq!(parallel, csv_of(&cfg), "repeated runs differ");
    cfg.run.execution = Execution::Serial;
    assert_eq!(parallel, csv_of(&cfg));
}

#[test]
fn shipped_configs_parse() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.model.build().unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 5, "found {seen} configs");
}

#[test]
fn emitted_files_have_expected_columns() {
    let cfg = curie_weiss(0.5, "[4, 8, 16]");
    let report = run_convergence_study(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = ReportPaths::resolve(&cfg.output, Some(dir.path()), &cfg.name);
    emit_report(&report, &paths).unwrap();

    let csv = std::fs::read_to_string(paths.csv.unwrap()).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("sites,direct,pressure_origin,variational,gap,oracle")
    );
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.split(',').count() == 6));

    let plot = std::fs::read_to_string(paths.plotdata.unwrap()).unwrap();
    assert!(plot.starts_with("sites,direct,variational,lower_bound"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(paths.json.unwrap()).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn classical_sector_oracle_matches_dense_trace() {
    let cfg = config(
        r#"
schema_version = 1
name = "sector"
[model]
interaction = [{ pauli = "z", coeff = 0.3 }]
x = [{ pauli = "z" }]
g = [["xx", 0.7], ["x", 0.2]]
[study]
volumes = [10]
pressure_volumes = [1]
path = "dense"
[oracles]
classical_sector = true
"#,
    );
    let report = run_convergence_study(&cfg).unwrap();
    let oracle = report
        .oracles
        .iter()
        .find(|o| o.name == "classical_sector:10")
        .unwrap();
    assert_abs_diff_eq!(oracle.reference, report.rows[0].direct, epsilon = 1e-12);
}
