use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use skysnn_core::io::mnist::{write_idx, PIXELS};
use skysnn_core::{Checkpoint, Dataset};

fn skysnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skysnn"))
        .args(args)
        .env_remove("SKY_SEED")
        .env_remove("SKY_DATA_DIR")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(skysnn(&[]).status.code(), Some(2));
    assert_eq!(skysnn(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(skysnn(&["eval", "--bogus"]).status.code(), Some(2));
    assert_eq!(skysnn(&["eval", "--mode", "quantum"]).status.code(), Some(2));
    assert_eq!(skysnn(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[stdp]\nwhatever = 1\n").unwrap();
    let o = skysnn(&["--config", cfg.to_str().unwrap(), "energy-report"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("whatever"), "{}", stderr(&o));

    std::fs::write(&cfg, "mode = \"skyrmion\"\n[device.drive]\ncurrent_density = 1e7\n").unwrap();
    let o = skysnn(&["--config", cfg.to_str().unwrap(), "energy-report"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("device.drive.current_density"), "{}", stderr(&o));
}

#[test]
fn device_sim_writes_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.csv");
    let o = skysnn(&[
        "device-sim",
        scenario("neuron_threshold4.scn").to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&log).unwrap();
    assert_eq!(text.lines().filter(|l| l.split(',').nth(2) == Some("fire")).count(), 1);
    assert!(stderr(&o).contains("fire n0"));

    let o = skysnn(&["device-sim", "/no/such/file.scn"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn energy_report_at_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = skysnn(&["--out-dir", dir.path().to_str().unwrap(), "energy-report"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("energy_report.json")).unwrap()).unwrap();
    let per_spike = json["per_spike_fj"].as_f64().unwrap();
    assert!((0.2..=2.0).contains(&per_spike), "{per_spike}");
    assert!(json["ratio_vs_baseline"].as_f64().unwrap() >= 1e3);
    assert!(dir.path().join("energy_entries.csv").exists());
}

fn tiny_mnist(dir: &Path) {
    let n = 40;
    let mut images = vec![0u8; n * PIXELS];
    let labels: Vec<u8> = (0..n).map(|k| (k % 10) as u8).collect();
    for (k, &c) in labels.iter().enumerate() {
        for r in (c as usize * 2)..(c as usize * 2 + 4) {
            for col in 4..24 {
                images[k * PIXELS + r * 28 + col] = 255;
            }
        }
    }
    let data = Dataset::new(images, labels).unwrap();
    let (img, lab) = write_idx(&data);
    for prefix in ["train", "t10k"] {
        std::fs::write(dir.join(format!("{prefix}-images-idx3-ubyte")), &img).unwrap();
        std::fs::write(dir.join(format!("{prefix}-labels-idx1-ubyte")), &lab).unwrap();
    }
}

#[test]
fn full_pipeline_on_tiny_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("mnist");
    std::fs::create_dir(&data).unwrap();
    tiny_mnist(&data);
    let out = dir.path().join("out");
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "n_exc = 6\nn_train = 30\nn_label = 40\nn_test = 20\npresentation_ms = 100.0\nrest_ms = 50.0\ndata_dir = {:?}\n[train]\ncheckpoint_every = 10\n",
            data.to_str().unwrap()
        ),
    )
    .unwrap();
    let base = ["--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()];
    let step = |extra: &[&str]| {
        let mut args = base.to_vec();
        args.extend_from_slice(extra);
        let o = skysnn(&args);
        assert!(o.status.success(), "{extra:?}: {}", stderr(&o));
        o
    };

    step(&["train"]);
    for f in ["config.resolved.toml", "checkpoint.skyckpt", "checkpoint_000030.skyckpt", "train_summary.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let o = skysnn(&[&base[..], &["eval"]].concat());
    assert_eq!(o.status.code(), Some(1), "eval before label must fail");

    step(&["label"]);
    let ck = Checkpoint::load(&out.join("checkpoint.skyckpt"), 1.0).unwrap();
    assert_eq!(ck.labels.as_ref().map(Vec::len), Some(6));

    let analog = step(&["eval"]);
    assert!(String::from_utf8_lossy(&analog.stdout).starts_with("accuracy"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("eval_reference_analog.json")).unwrap()).unwrap();
    assert_eq!(report["n_images"], 20);
    let csv = std::fs::read_to_string(out.join("eval_reference_analog_confusion.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);

    step(&["binarize", "--threshold", "0.4"]);
    let bin = Checkpoint::load(&out.join("checkpoint_binary.skyckpt"), 1.0).unwrap();
    assert!(bin.weights.as_slice().iter().all(|&w| w == 0.0 || w == 1.0));
    step(&["label", "--weights", "binary"]);
    step(&["eval", "--weights", "binary"]);
    step(&["eval", "--weights", "binary", "--mode", "skyrmion"]);
    assert!(out.join("eval_skyrmion_binary.json").exists());
    step(&["sweep-threshold", "--thresholds", "0.3,0.6"]);
    let sweep = std::fs::read_to_string(out.join("sweep_threshold.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 3);

    let resolved = std::fs::read_to_string(out.join("config.resolved.toml")).unwrap();
    assert!(resolved.contains("n_exc = 6"));
}

#[test]
fn seed_env_must_be_non_negative() {
    let o = Command::new(env!("CARGO_BIN_EXE_skysnn"))
        .args(["energy-report"])
        .env("SKY_SEED", "-4")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("SKY_SEED"));
}
