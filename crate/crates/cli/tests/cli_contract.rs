//! Exit-code and file-format contract of the `esb` binary:
//! 0 success, 2 input error, 3 numerical error, 4 guard error.

use esb_core::rng::stream_rng;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::path::Path;
use std::process::Output;

fn esb(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_esb"))
        .args(args)
        .output()
        .expect("spawn esb")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_csv(path: &Path, n: usize, p: usize, seed: u64, signal: &[(usize, f64)]) {
    let mut rng = stream_rng(seed, 0);
    let x = DMatrix::<f64>::from_fn(n, p, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    let mut y = DVector::<f64>::from_fn(n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    for &(j, b) in signal {
        y.axpy(b, &x.column(j).clone_owned(), 1.0);
    }
    let mut text = String::from("y");
    for j in 0..p {
        text.push_str(&format!(",x{j}"));
    }
    text.push('\n');
    for i in 0..n {
        text.push_str(&format!("{:.12}", y[i]));
        for j in 0..p {
            text.push_str(&format!(",{:.12}", x[(i, j)]));
        }
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn ragged_csv_exits_2_and_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "y,x0,x1\n1.0,2.0,3.0\n4.0,5.0\n").unwrap();
    let out = esb(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("row 3"), "stderr: {}", stderr(&out));
}

#[test]
fn invalid_hyperparameters_exit_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_csv(&data, 15, 3, 1, &[]);
    let hyper = dir.path().join("h.json");
    std::fs::write(
        &hyper,
        r#"{"alpha":1.2,"gamma":0.1,"a0":1.0,"b0":1.0,"c":1.0,"a":1.0,"R":2}"#,
    )
    .unwrap();
    let out = esb(&[
        "enumerate",
        "--data",
        data.to_str().unwrap(),
        "--hyper",
        hyper.to_str().unwrap(),
        "--out",
        dir.path().join("t.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("alpha"), "stderr: {}", stderr(&out));
}

#[test]
fn enumeration_guard_exits_4_with_the_count() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("wide.csv");
    write_csv(&data, 50, 40, 2, &[]);
    let hyper = dir.path().join("h.json");
    std::fs::write(
        &hyper,
        r#"{"alpha":0.99,"gamma":0.005,"a0":0.01,"b0":0.01,"c":1.0,"a":1.0,"R":10}"#,
    )
    .unwrap();
    let out = esb(&[
        "enumerate",
        "--data",
        data.to_str().unwrap(),
        "--hyper",
        hyper.to_str().unwrap(),
        "--out",
        dir.path().join("t.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4, "stderr: {}", stderr(&out));
    assert!(
        stderr(&out).contains("guard limit"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn singular_initial_model_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // duplicate columns make the support {0,1} singular
    let mut text = String::from("y,x0,x1\n");
    let mut rng = stream_rng(3, 0);
    for _ in 0..12 {
        let v: f64 = rng.sample(rand_distr::StandardNormal);
        let y: f64 = rng.sample(rand_distr::StandardNormal);
        text.push_str(&format!("{y:.10},{v:.10},{v:.10}\n"));
    }
    let data = dir.path().join("dup.csv");
    std::fs::write(&data, text).unwrap();
    let chain = dir.path().join("chain.json");
    std::fs::write(
        &chain,
        r#"{"n_iter":1000,"burn_in":100,"seed":1,"init_model":[0,1]}"#,
    )
    .unwrap();
    let out = esb(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--chain",
        chain.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "stderr: {}", stderr(&out));
}

#[test]
fn fit_inclusion_probabilities_match_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("tiny.csv");
    write_csv(&data, 20, 5, 4, &[(1, 2.0)]);
    let fit_out = dir.path().join("fit");
    let out = esb(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        fit_out.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let table_path = dir.path().join("table.json");
    let out = esb(&[
        "enumerate",
        "--data",
        data.to_str().unwrap(),
        "--out",
        table_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fit_out.join("summary.json")).unwrap())
            .unwrap();
    let table: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&table_path).unwrap()).unwrap();
    let mcmc: Vec<f64> = summary["inclusion_probabilities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let mut exact = vec![0.0f64; 5];
    for e in table["entries"].as_array().unwrap() {
        let prob = e["prob"].as_f64().unwrap();
        for j in e["model"].as_array().unwrap() {
            exact[j.as_u64().unwrap() as usize] += prob;
        }
    }
    for j in 0..5 {
        assert!(
            (mcmc[j] - exact[j]).abs() < 0.02,
            "column {j}: {} vs {}",
            mcmc[j],
            exact[j]
        );
    }
    // both files carry the schema stamp and the materialized config
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(table["schema_version"], 1);
    assert!(summary["config"]["hyper"]["alpha"].is_number());
    assert!(table["config"]["hyper"]["R"].is_number());
}

#[test]
fn predict_on_training_rows_is_well_posed() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_csv(&data, 20, 4, 5, &[(0, 1.5)]);
    // reuse the first two training rows as prediction rows
    let lines: Vec<String> = std::fs::read_to_string(&data)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    let strip_y = |line: &str| line.splitn(2, ',').nth(1).unwrap().to_string();
    let xt = dir.path().join("xt.csv");
    std::fs::write(
        &xt,
        format!(
            "{}\n{}\n{}\n",
            strip_y(&lines[0]),
            strip_y(&lines[1]),
            strip_y(&lines[2])
        ),
    )
    .unwrap();
    let out_path = dir.path().join("pred.json");
    let out = esb(&[
        "predict",
        "--data",
        data.to_str().unwrap(),
        "--xtilde",
        xt.to_str().unwrap(),
        "--draws",
        "4000",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        for k in ["mean", "variance", "lower", "upper"] {
            assert!(r[k].as_f64().unwrap().is_finite(), "non-finite {k}");
        }
        assert!(r["lower"].as_f64().unwrap() <= r["upper"].as_f64().unwrap());
    }
}

#[test]
fn check_theory_default_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("theory.json");
    let out = esb(&[
        "check-theory",
        "--seed",
        "11",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(doc["all_tail_bounds_passed"], true);
    // every non-vacuous tail check passes
    for c in doc["checks"].as_array().unwrap() {
        if c["kind"] == "tail_bound" && c["report"]["vacuous"] == false {
            assert_eq!(c["report"]["passed"], true, "failed: {}", c["name"]);
        }
    }
}

#[test]
fn simulate_report_files_exist_with_schema() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    std::fs::write(
        &grid,
        r#"{"configs":[{"n":30,"p":6,"s_star":1,
            "design":{"kind":"ar1","rho":0.4},
            "signal":{"mode":"fixed","values":[2.5]},
            "sigma0_sq":1.0,"replications":2,"seed":5,
            "hyper":{"alpha":0.99,"gamma":0.005,"a0":0.01,"b0":0.01,"c":1.0,"a":1.0,"R":3},
            "chain":{"n_iter":1500,"burn_in":300,"seed":0}}]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("sim");
    let out = esb(&[
        "simulate",
        "--config",
        grid.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["schema_version"], 1);
    assert!(report["configs"][0]["chain"]["n_iter"].is_number());
    assert!(report["version"].is_string());
    let csv_text = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert!(csv_text.starts_with("config_id,"));
    assert_eq!(csv_text.lines().count(), 2);
    let trials = std::fs::read_to_string(out_dir.join("trials.jsonl")).unwrap();
    assert_eq!(trials.lines().count(), 2);
    // trial lines are valid JSON carrying the replication id
    for line in trials.lines() {
        let t: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(t["replication"].is_number());
        assert!(t["result"]["selected_map"].is_array());
    }
}

#[test]
fn malformed_grid_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    std::fs::write(&grid, r#"{"configs": "nope"}"#).unwrap();
    let out = esb(&[
        "simulate",
        "--config",
        grid.to_str().unwrap(),
        "--out",
        dir.path().join("sim").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn help_documents_subcommands() {
    let out = esb(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["fit", "enumerate", "predict", "check-theory", "simulate"] {
        assert!(text.contains(sub), "help missing {sub}");
    }
}

#[test]
fn binary_dataset_roundtrip_through_fit() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("d.csv");
    write_csv(&csv_path, 18, 3, 9, &[(2, 1.8)]);
    let d = esb_core::Dataset::from_csv(&csv_path).unwrap();
    let bin_path = dir.path().join("d.esb");
    d.to_binary(&bin_path).unwrap();
    let out_csv = dir.path().join("out_csv");
    let out_bin = dir.path().join("out_bin");
    for (data, fmt, out_dir) in [
        (&csv_path, "csv", &out_csv),
        (&bin_path, "bin", &out_bin),
    ] {
        let out = esb(&[
            "fit",
            "--data",
            data.to_str().unwrap(),
            "--format",
            fmt,
            "--seed",
            "3",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    }
    // identical data through either format gives identical draws
    let a = std::fs::read(out_csv.join("samples.jsonl")).unwrap();
    let b = std::fs::read(out_bin.join("samples.jsonl")).unwrap();
    assert_eq!(a, b);
}
