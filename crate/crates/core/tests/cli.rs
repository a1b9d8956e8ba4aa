use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_survbenim")
}

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write_small_generator(dir: &Path) {
    // A shrunken two-cluster linear-Cox setup to keep the pipeline fast.
    let generator = r#"{
        "format_version": 1,
        "generator": {
            "clusters": [
                {"center": [0.25, 0.25, 0.25], "radius": 0.2,
                 "b_true": [0.5, 0.25, 0.0], "n_points": 40},
                {"center": [0.75, 0.75, 0.75], "radius": 0.2,
                 "b_true": [0.0, 0.25, 0.5], "n_points": 40}
            ],
            "weibull_scale": 1e-5,
            "weibull_shape": 2.0,
            "risk_mode": "linear_cox",
            "feature_distribution": "cluster_ball",
            "censoring_fraction": 0.2,
            "seed": 0
        },
        "seed": 3
    }"#;
    fs::write(dir.join("gen.json"), generator).unwrap();
}

#[test]
fn end_to_end_pipeline_produces_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_small_generator(dir);

    let out = run(&["generate", "--config", "gen.json", "--out", "run"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("run/dataset.csv").exists());
    assert!(dir.join("run/ground_truth.json").exists());

    fs::write(
        dir.join("train.json"),
        r#"{"format_version":1,"dataset":"run/dataset.csv",
            "forest":{"n_trees":10,"max_depth":5,"features_per_split":null,
                      "min_leaf_events":3,"bootstrap":true,"seed":1}}"#,
    )
    .unwrap();
    let out = run(&["train-blackbox", "--config", "train.json", "--out", "run"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("training_cindex "), "{stdout}");
    assert!(dir.join("run/forest.json").exists());

    fs::write(
        dir.join("explain.json"),
        r#"{"format_version":1,"dataset":"run/dataset.csv",
            "blackbox":"run/forest.json","method":"survbenim-local",
            "anchor_indices":[0],
            "explain":{"neighborhood":{"n_samples":20,"sigma_sample":0.2,"sigma_weight":0.4},
                       "train":{"method":"adam","learning_rate":0.01,
                                "epochs_local":15,"epochs_global":15},
                       "hidden_layers":[8],"seed":4}}"#,
    )
    .unwrap();
    let out = run(&["explain", "--config", "explain.json", "--out", "run"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let result = fs::read_to_string(dir.join("run/result_0.json")).unwrap();
    assert!(result.contains("\"format_version\": 1"));
    assert!(result.contains("\"survbenim-local\""));

    fs::write(
        dir.join("curves.json"),
        r#"{"format_version":1,"result":"run/result_0.json"}"#,
    )
    .unwrap();
    let out = run(&["export-curves", "--config", "curves.json", "--out", "run"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let curves = fs::read_to_string(dir.join("run/curves.csv")).unwrap();
    assert!(curves.starts_with("feature,grid_value,function_value\n"));
    assert!(curves.lines().count() > 3 * 64);
}

#[test]
fn unknown_method_exits_with_code_two_and_lists_methods() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_small_generator(dir);
    run(&["generate", "--config", "gen.json", "--out", "run"], dir);
    fs::write(
        dir.join("train.json"),
        r#"{"format_version":1,"dataset":"run/dataset.csv",
            "forest":{"n_trees":5,"max_depth":4,"features_per_split":null,
                      "min_leaf_events":3,"bootstrap":true,"seed":1}}"#,
    )
    .unwrap();
    run(&["train-blackbox", "--config", "train.json", "--out", "run"], dir);
    fs::write(
        dir.join("explain.json"),
        r#"{"format_version":1,"dataset":"run/dataset.csv",
            "blackbox":"run/forest.json","method":"shap","anchor_indices":[0]}"#,
    )
    .unwrap();
    let out = run(&["explain", "--config", "explain.json", "--out", "run"], dir);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    for name in ["survbenim-local", "survbenim-global", "survbex", "survlime", "survnam"] {
        assert!(stderr.contains(name), "{stderr}");
    }
}

#[test]
fn same_seed_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_small_generator(dir);

    for run_dir in ["a", "b"] {
        let out = run(&["generate", "--config", "gen.json", "--out", run_dir], dir);
        assert!(out.status.success());
        fs::write(
            dir.join("train.json"),
            format!(
                r#"{{"format_version":1,"dataset":"{run_dir}/dataset.csv",
                "forest":{{"n_trees":8,"max_depth":5,"features_per_split":null,
                          "min_leaf_events":3,"bootstrap":true,"seed":1}}}}"#
            ),
        )
        .unwrap();
        let out = run(&["train-blackbox", "--config", "train.json", "--out", run_dir], dir);
        assert!(out.status.success());
        fs::write(
            dir.join("explain.json"),
            format!(
                r#"{{"format_version":1,"dataset":"{run_dir}/dataset.csv",
                "blackbox":"{run_dir}/forest.json","method":"survlime",
                "anchor_indices":[3]}}"#
            ),
        )
        .unwrap();
        let out = run(&["explain", "--config", "explain.json", "--out", run_dir], dir);
        assert!(out.status.success());
    }
    for file in ["dataset.csv", "ground_truth.json", "forest.json", "result_0.json"] {
        let a = fs::read(dir.join("a").join(file)).unwrap();
        let b = fs::read(dir.join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn failed_runs_leave_no_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("gen.json"),
        r#"{"format_version":1,"preset":"no-such-preset","seed":1}"#,
    )
    .unwrap();
    let out = run(&["generate", "--config", "gen.json", "--out", "run"], dir);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.join("run/dataset.csv").exists());
    assert!(!dir.join("run/ground_truth.json").exists());
}
