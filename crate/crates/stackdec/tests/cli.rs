use std::fs;
use std::path::Path;

use stackdec::cli::main_with_args;
use stackdec::output::{read_decomposition, DecompositionFile};

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["stackdec".to_owned()];
    full.extend(args.iter().map(|s| s.to_string()));
    main_with_args(full.into_iter().map(Into::into))
}

fn tiny_config(dir: &Path) -> String {
    let path = dir.join("tiny.json");
    fs::write(
        &path,
        r#"{"subnet": {"hidden_widths": [6, 3], "dropout": [0.0, 0.0]},
            "train": {"max_epochs": 5, "batch_size": 32}}"#,
    )
    .unwrap();
    path.display().to_string()
}

/// `y = 2 a - b + a c` on a deterministic pseudo-random design.
fn write_data(path: &Path, n: usize, d: usize) {
    let mut s = String::new();
    let names: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    s.push_str(&names.join(","));
    s.push_str(",y\n");
    let mut state = 0x2545_F491_4F6C_DD1Du64;
    for _ in 0..n {
        let row: Vec<f64> = (0..d)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            })
            .collect();
        let y = 2.0 * row[0] - row[1 % d] + row[0] * row[2 % d];
        for v in &row {
            s.push_str(&format!("{v},"));
        }
        s.push_str(&format!("{y}\n"));
    }
    fs::write(path, s).unwrap();
}

#[test]
fn missing_prediction_column_flag_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_data(&data, 20, 2);
    let out = dir.path().join("out");
    assert_eq!(
        run(&[
            "decompose",
            "--input",
            data.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        1
    );
}

#[test]
fn unknown_prediction_column_and_bad_numbers_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_data(&data, 20, 2);
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();
    assert_eq!(
        run(&[
            "decompose",
            "--input",
            data.to_str().unwrap(),
            "--pred-col",
            "nope",
            "--out",
            o
        ]),
        1
    );
    fs::write(&data, "a,y\n1,2\nx,3\n").unwrap();
    assert_eq!(
        run(&[
            "decompose",
            "--input",
            data.to_str().unwrap(),
            "--pred-col",
            "y",
            "--out",
            o
        ]),
        1
    );
    fs::write(&data, "y\n1\n2\n").unwrap();
    assert_eq!(
        run(&[
            "decompose",
            "--input",
            data.to_str().unwrap(),
            "--pred-col",
            "y",
            "--out",
            o
        ]),
        1
    );
}

#[test]
fn constant_predictions_are_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let mut s = String::from("a,b,y\n");
    for i in 0..40 {
        s.push_str(&format!("{},{},1.5\n", i as f64 / 40.0, (i * 7 % 40) as f64 / 40.0));
    }
    fs::write(&data, s).unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("out");
    let code = run(&[
        "decompose",
        "--input",
        data.to_str().unwrap(),
        "--pred-col",
        "y",
        "--out",
        out.to_str().unwrap(),
        "--ensemble",
        "1",
        "--config",
        &cfg,
        "--threads",
        "1",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn decompose_writes_all_outputs_and_metrics_recompute_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_data(&data, 150, 3);
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("out");
    let code = run(&[
        "decompose",
        "--input",
        data.to_str().unwrap(),
        "--pred-col",
        "y",
        "--max-order",
        "2",
        "--ensemble",
        "2",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
        "--config",
        &cfg,
        "--threads",
        "1",
        "--checkpoints",
    ]);
    assert_eq!(code, 0);
    for f in [
        "decomposition.json",
        "metrics.csv",
        "manifest.json",
        "terms/1.csv",
        "terms/1_2.csv",
        "terms/1_2_3.csv",
        "checkpoints/member_000.json",
        "checkpoints/member_001.json",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let file: DecompositionFile = read_decomposition(&out).unwrap();
    assert_eq!(file.effect_set.len(), 7);
    assert_eq!(file.feature_names, vec!["x0", "x1", "x2"]);
    let term_csv = fs::read_to_string(out.join("terms/1_2.csv")).unwrap();
    assert_eq!(term_csv.lines().next().unwrap(), "row,x0,x1,effect");
    assert_eq!(term_csv.lines().count(), 151);

    assert_eq!(run(&["metrics", "--dir", out.to_str().unwrap()]), 0);

    // A tampered table is detected.
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let mut lines: Vec<String> = metrics.lines().map(str::to_owned).collect();
    let fields: Vec<&str> = lines[1].split(',').collect();
    lines[1] = format!("{},{},0.123,{}", fields[0], fields[1], fields[3]);
    fs::write(out.join("metrics.csv"), lines.join("\n") + "\n").unwrap();
    assert_eq!(run(&["metrics", "--dir", out.to_str().unwrap()]), 1);
}

#[test]
fn max_order_two_on_ten_features_gives_fifty_six_terms() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_data(&data, 60, 10);
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"subnet": {"hidden_widths": [3, 1], "dropout": [0.0, 0.0]}, "train": {"max_epochs": 1}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let code = run(&[
        "decompose",
        "--input",
        data.to_str().unwrap(),
        "--pred-col",
        "y",
        "--max-order",
        "2",
        "--ensemble",
        "1",
        "--out",
        out.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert_eq!(code, 0);
    let file = read_decomposition(&out).unwrap();
    assert_eq!(file.effect_set.len(), 56);
    assert_eq!(file.terms.last().unwrap().label, "1_2_3_4_5_6_7_8_9_10");
}

#[test]
fn explicit_effects_are_restricted_and_absorbed() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_data(&data, 80, 3);
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("out");
    let code = run(&[
        "decompose",
        "--input",
        data.to_str().unwrap(),
        "--pred-col",
        "y",
        "--effects",
        "[[1],[2],[1,3]]",
        "--ensemble",
        "1",
        "--out",
        out.to_str().unwrap(),
        "--config",
        &cfg,
        "--threads",
        "1",
    ]);
    assert_eq!(code, 0);
    let labels: Vec<String> = read_decomposition(&out)
        .unwrap()
        .terms
        .into_iter()
        .map(|t| t.label)
        .collect();
    assert_eq!(labels, vec!["1", "2", "1_3", "1_2_3"]);
    let bad = run(&[
        "decompose",
        "--input",
        data.to_str().unwrap(),
        "--pred-col",
        "y",
        "--effects",
        "[[1],[4]]",
        "--out",
        out.to_str().unwrap(),
        "--config",
        &cfg,
    ]);
    assert_eq!(bad, 1);
}

#[test]
fn reruns_and_thread_counts_give_identical_decomposition_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_data(&data, 100, 2);
    let cfg = tiny_config(dir.path());
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let code = run(&[
            "decompose",
            "--input",
            data.to_str().unwrap(),
            "--pred-col",
            "y",
            "--ensemble",
            "3",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
            "--config",
            &cfg,
            "--threads",
            threads,
        ]);
        assert_eq!(code, 0);
        outputs.push(fs::read(out.join("decomposition.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn oracle_then_experiment_reuses_the_reference() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    let o = out.to_str().unwrap();
    assert_eq!(
        run(&[
            "oracle",
            "--scenario",
            "3",
            "--out",
            o,
            "--n-ref",
            "3000",
            "--seed",
            "4"
        ]),
        0
    );
    let reference_before = fs::read(out.join("reference_s3.json")).unwrap();
    let cfg = tiny_config(dir.path());
    let code = run(&[
        "experiment",
        "--scenario",
        "3",
        "--n",
        "300",
        "--replicates",
        "1",
        "--ensemble",
        "1",
        "--seed",
        "7",
        "--out",
        o,
        "--n-ref",
        "3000",
        "--reference-seed",
        "4",
        "--config",
        &cfg,
        "--threads",
        "1",
    ]);
    assert_eq!(code, 0);
    assert_eq!(fs::read(out.join("reference_s3.json")).unwrap(), reference_before);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["extra"]["reference_cached"], serde_json::Value::Bool(true));

    let table = fs::read_to_string(out.join("replicates.csv")).unwrap();
    assert_eq!(table.lines().count(), 2);
    let rep = out.join("replicate_000");
    assert!(rep.join("decomposition.json").exists());
    assert!(rep.join("manifest.json").exists());
    let main = fs::read_to_string(rep.join("plots/main_1.csv")).unwrap();
    assert_eq!(main.lines().count(), 301);
    let xs: Vec<f64> = main
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(xs.windows(2).all(|w| w[0] <= w[1]));
    let grid = fs::read_to_string(rep.join("plots/interaction_1_2.csv")).unwrap();
    assert_eq!(grid.lines().count(), 2501);
}

#[test]
fn invalid_scenario_and_zero_replicates_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    assert_eq!(run(&["oracle", "--scenario", "4", "--out", o]), 1);
    assert_eq!(
        run(&["experiment", "--scenario", "1", "--replicates", "0", "--out", o]),
        1
    );
}
