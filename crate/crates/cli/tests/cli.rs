use std::fs;
use std::path::Path;
use std::process::Command;

fn gfl(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gfl"))
        .args(args)
        .output()
        .unwrap()
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn synth_then_train_then_bench() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.txt");
    write(
        &spec,
        "families = tree, cycles:2\nn_per_class = 12\nseed = 3\n",
    );
    let data = tmp.path().join("TOY");
    let out = gfl(&[
        "synth",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(data.join("TOY_A.txt").exists());
    assert!(data.join("TOY_graph_labels.txt").exists());

    let config = tmp.path().join("train.cfg");
    write(
        &config,
        "dataset = TOY\nepochs = 2\nfolds = 3\nhidden = 8\nclassifier_hidden = 8\nelements = 5\n",
    );
    let metrics = tmp.path().join("metrics.json");
    let dumps = tmp.path().join("barcodes");
    let out = gfl(&[
        "train",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "4",
        "--deterministic",
        "--dump-barcodes",
        dumps.to_str().unwrap(),
        "--out",
        metrics.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&metrics).unwrap()).unwrap();
    assert_eq!(m["fold_accuracies"].as_array().unwrap().len(), 3);
    assert_eq!(m["seed"], 4);
    assert_eq!(m["loss_curves"][0].as_array().unwrap().len(), 2);
    // every graph is a test graph in exactly one fold
    assert_eq!(fs::read_dir(&dumps).unwrap().count(), 24);

    let timings = tmp.path().join("timings.csv");
    let out = gfl(&[
        "bench",
        "--dataset",
        data.to_str().unwrap(),
        "--repeats",
        "2",
        "--out",
        timings.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(&timings).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("m,seconds"));
    assert_eq!(lines.count(), 24);
}

#[test]
fn bad_inputs_fail_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.cfg");
    write(&config, "dataset = missing\nfolds = 1\n");
    let out = gfl(&["train", "--config", config.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("folds"));

    let spec = tmp.path().join("empty.txt");
    write(&spec, "n_per_class = 3\n");
    let out = gfl(&[
        "synth",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        tmp.path().join("X").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no graph families"));
}
