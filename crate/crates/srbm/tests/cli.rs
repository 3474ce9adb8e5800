mod common;

use std::fs;
use std::time::Instant;

use common::{small_config, srbm, stderr, stdout, synthetic_mnist};
use srbm::commands::train_into;
use srbm::config::ExperimentConfig;
use srbm::mnist::load_splits;
use srbm::model_file::{encode_subspace, read_model, SavedModel};
use srbm_core::{ModelParams, Shape};

fn p(path: &std::path::Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn train_writes_loadable_model_log_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synthetic_mnist(&data);
    let cfg = small_config(tmp.path(), &data, "");
    let out = tmp.path().join("run");
    let o = srbm(&["train", "--config", p(&cfg), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));

    match read_model(&out.join("model.bin")).unwrap() {
        SavedModel::Subspace(m) => {
            let s = m.shape();
            assert_eq!((s.visible(), s.gates(), s.subspace()), (784, 4, 2));
        }
        other => panic!("wrong kind {}", other.kind()),
    }
    let log = fs::read_to_string(out.join("train_log.csv")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines[0], "epoch,train_recon,valid_recon,epoch_seconds");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("2,"));

    // The manifest is itself a valid config describing the run.
    let manifest = out.join("manifest.txt");
    let text = fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("# status = ok") && text.contains("# wall_seconds = "));
    let echoed = ExperimentConfig::load(&manifest).unwrap();
    assert_eq!((echoed.gates, echoed.subspace, echoed.train.max_epochs), (4, 2, 2));
    assert_eq!(echoed.out_dir, out);
}

#[test]
fn training_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synthetic_mnist(&data);
    let cfg = small_config(tmp.path(), &data, "");
    let mut models = Vec::new();
    for (run, seed) in [("a", "5"), ("b", "5"), ("c", "6")] {
        let out = tmp.path().join(run);
        let o = srbm(&["train", "--config", p(&cfg), "--seed", seed, "--out", p(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        models.push(fs::read(out.join("model.bin")).unwrap());
    }
    assert_eq!(models[0], models[1]);
    assert_ne!(models[0], models[2]);
}

#[test]
fn rbm_warns_when_k_is_given() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synthetic_mnist(&data);
    let cfg = small_config(tmp.path(), &data, "");
    let out = tmp.path().join("run");
    let o = srbm(&["train", "--config", p(&cfg), "--model-kind", "rbm", "--K", "5", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("K is ignored"));
    assert!(matches!(read_model(&out.join("model.bin")).unwrap(), SavedModel::Rbm(_)));
}

#[test]
fn eval_of_zero_model() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synthetic_mnist(&data);
    let cfg = small_config(tmp.path(), &data, "");
    let model = tmp.path().join("zero.bin");
    fs::write(&model, encode_subspace(&ModelParams::zeros(Shape::new(784, 4, 2).unwrap()))).unwrap();
    let out = tmp.path().join("eval");
    let o = srbm(&["eval", "--model", p(&model), "--config", p(&cfg), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let recon: f64 = row[6].parse().unwrap();
    assert!((recon - 196.0).abs() < 1e-9, "{recon}");
    assert_eq!(row[8], "0");
    assert!(stdout(&o).contains("reconstruction error"));
}

#[test]
fn eval_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synthetic_mnist(&data);
    let cfg = small_config(tmp.path(), &data, "");
    let missing = tmp.path().join("nope.bin");
    let o = srbm(&["eval", "--model", p(&missing), "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(p(&missing)));

    let corrupt = tmp.path().join("corrupt.bin");
    let bytes = encode_subspace(&ModelParams::zeros(Shape::new(784, 4, 2).unwrap()));
    fs::write(&corrupt, &bytes[..bytes.len() / 2]).unwrap();
    let o = srbm(&["eval", "--model", p(&corrupt), "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("truncated while reading W"), "{}", stderr(&o));

    let no_data = tmp.path().join("empty");
    fs::create_dir_all(&no_data).unwrap();
    let o = srbm(&[
        "train",
        "--config",
        p(&cfg),
        "--data-dir",
        p(&no_data),
        "--out",
        p(&tmp.path().join("x")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(srbm(&["train", "--per-digit", "50"]).status.code(), Some(1));
    assert_eq!(srbm(&["frobnicate"]).status.code(), Some(1));
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "learning_rate = -1\n").unwrap();
    let o = srbm(&["train", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(srbm(&["--help"]).status.success());
}

#[test]
fn numerical_failure_keeps_log_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synthetic_mnist(&data);
    let mut cfg = ExperimentConfig::load(&small_config(tmp.path(), &data, "")).unwrap();
    cfg.out_dir = tmp.path().join("run");
    let splits = load_splits(&cfg.data_dir, &cfg.split).unwrap();
    let mut p0 = ModelParams::zeros(Shape::new(784, 4, 2).unwrap());
    p0.c_mut()[1] = f64::NAN;
    let err = train_into(&cfg, &splits, SavedModel::Subspace(p0), Instant::now()).unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
    let out = &cfg.out_dir;
    assert_eq!(
        fs::read_to_string(out.join("train_log.csv")).unwrap(),
        "epoch,train_recon,valid_recon,epoch_seconds\n"
    );
    assert!(fs::read_to_string(out.join("manifest.txt")).unwrap().contains("# status = failed"));
    assert!(!out.join("model.bin").exists());
}

#[test]
fn export_filters_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let model = tmp.path().join("m.bin");
    fs::write(&model, encode_subspace(&ModelParams::zeros(Shape::new(784, 2, 3).unwrap()))).unwrap();
    let image = tmp.path().join("f.pgm");
    let o = srbm(&["export-filters", "--model", p(&model), "--out", p(&image)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bytes = fs::read(&image).unwrap();
    let header = b"P5\n88 58\n255\n";
    assert_eq!(&bytes[..header.len()], header);
    assert_eq!(bytes.len(), header.len() + 88 * 58);
    // Constant tiles are mid-gray.
    assert_eq!(bytes[header.len()], 128);

    let small = tmp.path().join("small.bin");
    fs::write(&small, encode_subspace(&ModelParams::zeros(Shape::new(10, 2, 3).unwrap()))).unwrap();
    let o = srbm(&["export-filters", "--model", p(&small), "--out", p(&image)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("784"));
}

#[test]
fn oracle_check_exit_codes() {
    let o = srbm(&["oracle-check", "--trials", "0"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("0 models checked, 0 failures"));
    let o = srbm(&["oracle-check", "--trials", "20", "--seed", "3"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let o = srbm(&["oracle-check", "--trials", "20", "--seed", "3", "--mutate", "drop-gate-penalty"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("FAIL seed 3 trial"));
}

#[test]
fn prepare_data_writes_disjoint_splits() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synthetic_mnist(&data);
    let cfg = small_config(tmp.path(), &data, "");
    let out = tmp.path().join("prep");
    let o = srbm(&["prepare-data", "--config", p(&cfg), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("splits.csv")).unwrap();
    let mut train = std::collections::BTreeSet::new();
    let mut valid = std::collections::BTreeSet::new();
    let mut test = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        match f[0] {
            "train" => assert!(train.insert(f[1].to_string())),
            "validation" => assert!(valid.insert(f[1].to_string())),
            "test" => test += 1,
            other => panic!("{other}"),
        }
    }
    assert_eq!((train.len(), valid.len(), test), (100, 100, 60));
    assert!(train.is_disjoint(&valid));
    assert!(stdout(&o).contains("[10, 10, 10, 10, 10, 10, 10, 10, 10, 10]"));
}
