use std::path::Path;
use std::process::{Command, Output};

use graddiv::experiments::{write_idx_images, write_idx_labels, SWEEP_CSV_HEADER};
use graddiv::numerics::Matrix;

fn graddiv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graddiv"))
        .args(args)
        .env_remove("GRADDIV_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn solve_width_prints_the_width() {
    let o = graddiv(&["solve-width", "--params", "16000", "--din", "784", "--dout", "10", "--depth", "10"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "17");
}

#[test]
fn theory_prints_json() {
    let o = graddiv(&["theory", "--widths", "2,2", "--n", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["e_n_sum_sq"], 1728.0);
    assert!((v["e_norm_of_sum"].as_f64().unwrap() - 888.0).abs() < 1e-9);
    assert!((v["rho"].as_f64().unwrap() - 1728.0 / 888.0).abs() < 1e-12);
    assert!((v["rho_lower_bound"].as_f64().unwrap() - 0.4).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_two() {
    let o = graddiv(&["theory", "--widths", "2,2", "--n", "3", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(graddiv(&["sweep"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_one_and_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no-such-images");
    let labels = dir.path().join("labels");
    let o = graddiv(&[
        "sweep",
        "--dataset",
        "idx",
        "--idx-images",
        missing.to_str().unwrap(),
        "--idx-labels",
        labels.to_str().unwrap(),
        "--params",
        "100",
        "--depths",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(missing.to_str().unwrap()), "{}", stderr(&o));

    let o = graddiv(&["solve-width", "--params", "5", "--din", "4", "--dout", "2", "--depth", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"params": 16000, "din": 784, "dout": 10, "depth": 1}"#);
    let o = graddiv(&["solve-width", "--config", &cfg]);
    assert_eq!(stdout(&o).trim(), "20");
    let o = graddiv(&["--config", &cfg, "solve-width", "--depth", "10"]);
    assert_eq!(stdout(&o).trim(), "17", "{}", stderr(&o));
    let bad = write_config(dir.path(), "[1, 2]");
    assert_eq!(graddiv(&["solve-width", "--config", &bad]).status.code(), Some(2));
}

fn tiny_idx(dir: &Path) -> (String, String) {
    let (images, labels) = (dir.join("images.idx"), dir.join("labels.idx"));
    let n = 64;
    let pixels: Vec<f64> = (0..n * 4)
        .map(|i| {
            let (example, pixel) = (i / 4, i % 4);
            if pixel == example % 2 { 1.0 } else { ((i * 37) % 11) as f64 / 40.0 }
        })
        .collect();
    write_idx_images(&images, &Matrix::new(n, 4, pixels).unwrap(), 2, 2).unwrap();
    write_idx_labels(&labels, &(0..n).map(|i| (i % 2) as u32).collect::<Vec<_>>()).unwrap();
    (images.to_str().unwrap().to_string(), labels.to_str().unwrap().to_string())
}

#[test]
fn sweep_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let (images, labels) = tiny_idx(dir.path());
    let out = dir.path().join("out");
    let args = [
        "sweep",
        "--dataset",
        "idx",
        "--idx-images",
        &images,
        "--idx-labels",
        &labels,
        "--params",
        "200",
        "--depths",
        "1,2",
        "--batches",
        "8..32x2",
        "--target-acc",
        "0.9",
        "--epoch-cap",
        "20",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ];
    let o = graddiv(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv_text = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(!csv_text.contains('\r'));
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, SWEEP_CSV_HEADER);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2 * 3);
    assert!(rows.iter().all(|r| &r[0] == "idx" && &r[4] == "relu" && &r[11] == "7"));

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(meta["threshold_slack"], 1.5);
    assert_eq!(meta["tuning_epochs_counted"], false);
    assert_eq!(meta["threshold_batches"].as_array().unwrap().len(), 2);

    let again = graddiv(&args);
    assert!(again.status.success());
    assert_eq!(std::fs::read_to_string(out.join("sweep.csv")).unwrap(), csv_text);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |env_seed: Option<&str>| {
        let out = dir.path().join(env_seed.unwrap_or("none"));
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_graddiv"));
        cmd.args(["verify", "--widths", "2,2", "--n", "3", "--trials", "500", "--rel-tol", "1", "--z-tol", "100"])
            .args(["--out", out.to_str().unwrap()])
            .env_remove("GRADDIV_SEED");
        if let Some(s) = env_seed {
            cmd.env("GRADDIV_SEED", s);
        }
        let o = cmd.output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read_to_string(out.join("verify.csv")).unwrap()
    };
    let (a, b, c) = (run(Some("5")), run(Some("5")), run(None));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.starts_with("quantity,layer,closed_form,empirical,stderr,trials,z_score,rel_error,status,note\n"));
    assert_eq!(a.lines().count(), 1 + 3 + 4);
}

#[test]
fn verify_reports_failures_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = graddiv(&[
        "verify", "--widths", "2,2", "--n", "3", "--trials", "200", "--rel-tol", "0", "--z-tol", "0", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(dir.path().join("verify.csv").exists());
}

#[test]
fn diversity_scan_writes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = graddiv(&[
        "diversity", "--synthetic", "--params", "300", "--depths", "1,2", "--n", "200", "--din", "8",
        "--epoch-cap", "5", "--lr-grid", "1e-3,1e-2", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("diversity.csv")).unwrap();
    assert!(text.starts_with("L,K,params,B,tuned_lr,epochs,avg_diversity,snapshots\n"), "{text}");
    assert_eq!(text.lines().count(), 3);
}
