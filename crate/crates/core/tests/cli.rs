use std::path::Path;
use std::process::{Command, Output};

fn tempocast(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempocast"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const QUICK: [&str; 8] = [
    "--set",
    "synth.length=500",
    "--set",
    "max_epochs=4",
    "--set",
    "patience=2",
    "--lookback",
    "4",
];

fn synth(dir: &Path) {
    let o = tempocast(
        dir,
        &[
            "synth",
            "--seed",
            "8",
            "--set",
            "synth.length=500",
            "--out",
            "data.csv",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn stats_prints_one_row_per_statistic() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let o = tempocast(dir.path(), &["stats", "data.csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let first: Vec<&str> = text.lines().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        first,
        ["stat", "count", "mean", "std", "min", "25%", "50%", "75%", "max"]
    );
    assert!(text.lines().nth(1).unwrap().ends_with(",500"));
}

#[test]
fn features_emit_the_selected_descriptors() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    for (kind, width) in [("rp", 40), ("fft", 16), ("both", 56)] {
        let o = tempocast(
            dir.path(),
            &["features", "data.csv", "--kind", kind, "--lookback", "4"],
        );
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        let header = text.lines().next().unwrap();
        assert_eq!(header.split(',').count(), width + 1, "{kind}");
        assert_eq!(text.lines().count(), 1 + 500 - 24 - 6 + 1);
    }
}

#[test]
fn train_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let mut args = vec![
        "train",
        "data.csv",
        "--variant",
        "LR-FFT-RP-MLP",
        "--seed",
        "3",
        "--out",
        "m.tpcm",
    ];
    args.extend(QUICK);
    let o = tempocast(dir.path(), &args);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).starts_with("step,variant,MAE_4,RMSE_4,R_4\n"));

    let o = tempocast(dir.path(), &["predict", "--model", "m.tpcm", "data.csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("origin_time,step_1,step_2,step_3,step_4,step_5,step_6\n"));
    assert_eq!(text.lines().count(), 1 + 500 - 24 - 6 + 1);
}

#[test]
fn trained_model_matches_the_grid_cell() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "train",
        "--variant",
        "RP-MLP",
        "--seed",
        "5",
        "--out",
        "cell.tpcm",
    ];
    args.extend(QUICK);
    assert_eq!(tempocast(dir.path(), &args).status.code(), Some(0));

    let mut args = vec![
        "grid",
        "--seed",
        "5",
        "--variants",
        "MLP,RP-MLP",
        "--out",
        "run",
        "--save-models",
    ];
    args.extend(QUICK);
    let o = tempocast(dir.path(), &args);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let a = std::fs::read(dir.path().join("cell.tpcm")).unwrap();
    let b = std::fs::read(dir.path().join("run/models/RP-MLP_L4.tpcm")).unwrap();
    assert_eq!(a, b);

    let table = std::fs::read_to_string(dir.path().join("run/table.csv")).unwrap();
    assert_eq!(stdout(&o), table);
    let o = tempocast(dir.path(), &["report", "run", "--out", "again"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(dir.path().join("again/table.csv")).unwrap(),
        table
    );
    assert!(dir.path().join("again/improvement_mae.csv").exists());
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.cfg"),
        "# quick run\nvariants = MLP\nlookbacks = 4\nmax_epochs = 3\npatience = 1\nsynth.length = 400\n",
    )
    .unwrap();
    let o = tempocast(
        dir.path(),
        &["--config", "exp.cfg", "grid", "--seed", "2", "--out", "run"],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let manifest = std::fs::read_to_string(dir.path().join("run/run_manifest")).unwrap();
    assert!(manifest.contains("seed = 2"));
    assert!(manifest.contains("max_epochs = 3"));
    assert_eq!(stdout(&o).lines().count(), 7);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let code = |args: &[&str]| tempocast(dir.path(), args).status.code();

    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["grid", "--out", "x"]), Some(1));
    assert_eq!(code(&["frobnicate"]), Some(1));
    assert_eq!(
        code(&["stats", "data.csv", "--set", "no_such_key=1"]),
        Some(1)
    );
    assert_eq!(
        code(&["train", "--variant", "NOPE", "--out", "m", "--seed", "1"]),
        Some(1)
    );
    assert_eq!(code(&["stats", "missing.csv"]), Some(2));
    std::fs::write(
        dir.path().join("bad.csv"),
        "timestamp,WS10mi\n2020-01-01T00:00,1\n",
    )
    .unwrap();
    assert_eq!(code(&["stats", "bad.csv"]), Some(2));
    assert_eq!(
        code(&["predict", "--model", "data.csv", "data.csv"]),
        Some(2)
    );

    let mut args = vec![
        "grid",
        "--seed",
        "1",
        "--variants",
        "MLP,MIXER",
        "--set",
        "lr=1e300",
        "--out",
        "run",
    ];
    args.extend(QUICK);
    assert_eq!(code(&args), Some(3));
    let table = std::fs::read_to_string(dir.path().join("run/table.csv")).unwrap();
    assert!(table
        .lines()
        .any(|l| l.contains("MIXER") && l.contains("failed")));
}
