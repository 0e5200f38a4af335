use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn loadtune(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loadtune"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn unknown_benchmark_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = loadtune(tmp.path(), &["bench", "--fn", "ackley", "--out-dir", "r"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("ackley"));
}

#[test]
fn bad_flags_and_conflicts_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&loadtune(tmp.path(), &["bench", "--dims", "many"])), 2);
    let both = loadtune(
        tmp.path(),
        &["train", "--data", "x.csv", "--synthetic", "500"],
    );
    assert_eq!(code(&both), 2);
    assert_eq!(code(&loadtune(tmp.path(), &["--help"])), 0);
}

#[test]
fn unknown_config_key_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("run.toml"),
        "seed = 1\n[optimizer]\nmutation = 0.5\n",
    )
    .unwrap();
    let out = loadtune(tmp.path(), &["--config", "run.toml", "tune"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn missing_data_file_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = loadtune(
        tmp.path(),
        &["train", "--data", "absent.csv", "--out-dir", "r"],
    );
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

#[test]
fn zero_generations_records_only_the_initial_population() {
    let tmp = tempfile::tempdir().unwrap();
    for opt in ["de", "ga", "pso"] {
        let dir = format!("r-{opt}");
        let out = loadtune(
            tmp.path(),
            &[
                "bench",
                "--opt",
                opt,
                "--gens",
                "0",
                "--tol",
                "1e9",
                "--out-dir",
                &dir,
            ],
        );
        assert_eq!(code(&out), 0, "{opt}: {}", stderr(&out));
        let history = fs::read_to_string(tmp.path().join(&dir).join("history.csv")).unwrap();
        let rows: Vec<&str> = history.lines().skip(1).collect();
        assert_eq!(rows.len(), 1, "{opt}: {history}");
        assert!(rows[0].starts_with("0,"));
        assert!(
            rows[0].ends_with(",20"),
            "{opt}: 20 evaluations expected, got {}",
            rows[0]
        );
    }
}

#[test]
fn bench_reports_missed_tolerance_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &str| {
        let out = loadtune(
            tmp.path(),
            &["--seed", "3", "bench", "--gens", "5", "--out-dir", dir],
        );
        (
            code(&out),
            fs::read(tmp.path().join(dir).join("history.csv")).unwrap(),
        )
    };
    let (c1, h1) = run("a");
    let (c2, h2) = run("b");
    assert_eq!((c1, c2), (1, 1), "5 generations cannot reach 1e-6");
    assert_eq!(h1, h2);
}

#[test]
fn train_then_forecast() {
    let tmp = tempfile::tempdir().unwrap();
    let out = loadtune(
        tmp.path(),
        &[
            "--synthetic",
            "400",
            "train",
            "--epochs",
            "2",
            "--batch-size",
            "32",
            "--lr",
            "0.01",
            "--out-dir",
            "t",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let run = tmp.path().join("t");
    for f in [
        "model.txt",
        "scaler.txt",
        "train_report.csv",
        "evaluation.csv",
        "config.toml",
        "manifest.toml",
    ] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let manifest = fs::read_to_string(run.join("manifest.toml")).unwrap();
    assert!(manifest.contains("model.txt"));
    // header, the untrained epoch 0, then epochs 1 and 2
    assert_eq!(
        fs::read_to_string(run.join("train_report.csv"))
            .unwrap()
            .lines()
            .count(),
        4
    );

    let out = loadtune(
        tmp.path(),
        &[
            "--synthetic",
            "400",
            "forecast",
            "--model",
            "t/model.txt",
            "--at",
            "2017-01-10T00:00",
            "--out-dir",
            "f",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(tmp.path().join("f/forecast.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "timestamp,actual_kw,predicted_kw");
    assert_eq!(lines.len(), 25);

    let early = loadtune(
        tmp.path(),
        &[
            "--synthetic",
            "400",
            "forecast",
            "--model",
            "t/model.txt",
            "--at",
            "2017-01-01T01:00",
            "--out-dir",
            "g",
        ],
    );
    assert_eq!(code(&early), 1);
    assert!(
        stderr(&early).contains("2017-01-01 03:00"),
        "{}",
        stderr(&early)
    );
}

#[test]
fn compare_keeps_going_after_a_diverging_method() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("run.toml"),
        "[data]\nsynthetic_hours = 400\n[manual]\nbatch_size = 32\nepochs = 3\nlearning_rate = 1e300\n",
    )
    .unwrap();
    let out = loadtune(
        tmp.path(),
        &[
            "--config",
            "run.toml",
            "compare",
            "--methods",
            "manual",
            "--out-dir",
            "c",
        ],
    );
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    let csv = fs::read_to_string(tmp.path().join("c/comparison.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("manual,failed")), "{csv}");
    assert!(tmp.path().join("c/manifest.toml").is_file());
}
