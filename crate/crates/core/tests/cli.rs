use std::path::Path;
use std::process::{Command, Output};

use ills::harness::read_aggregates_csv;
use ills::MlpParams;

fn ills(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ills"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_data_writes_csv_and_params() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("data.csv");
    let params = dir.path().join("truth.json");
    let res = ills(&[
        "gen-data",
        "--preset",
        "set2-one-layer",
        "--seed",
        "4",
        "--out",
        path(&out),
        "--params-out",
        path(&params),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x1,x2,x3,y"));
    assert_eq!(lines.count(), 100);
    let truth = MlpParams::from_json(&std::fs::read_to_string(&params).unwrap()).unwrap();
    assert_eq!(truth.topology(), vec![3, 2, 1]);
}

#[test]
fn gen_data_airline_has_no_params() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("air.csv");
    let res = ills(&["gen-data", "--preset", "airline", "--out", path(&out)]);
    assert!(res.status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 142);
    let res = ills(&[
        "gen-data",
        "--preset",
        "airline",
        "--out",
        path(&out),
        "--params-out",
        path(&dir.path().join("p.json")),
    ]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn train_roundtrips_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let saved = dir.path().join("net.json");
    let res = ills(&[
        "train",
        "--preset",
        "set3-one-layer",
        "--algo",
        "ills",
        "--lr",
        "0.1",
        "--epochs",
        "20",
        "--seed",
        "2",
        "--out",
        path(&trace),
        "--save-params",
        path(&saved),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let rows = std::fs::read_to_string(&trace).unwrap();
    assert!(rows.starts_with("preset,algo,init,lr,seed,epoch,loss,param_abs_error\n"));
    assert_eq!(rows.lines().count(), 22);

    // Continue from the saved parameters with Adam.
    let trace2 = dir.path().join("trace2.csv");
    let res = ills(&[
        "train",
        "--preset",
        "set3-one-layer",
        "--algo",
        "adam",
        "--lr",
        "0.001",
        "--epochs",
        "5",
        "--init-params",
        path(&saved),
        "--out",
        path(&trace2),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let last_first_run: f64 = rows
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(6)
        .unwrap()
        .parse()
        .unwrap();
    let second = std::fs::read_to_string(&trace2).unwrap();
    let first_second_run: f64 = second
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(6)
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(last_first_run, first_second_run);
}

#[test]
fn experiment_then_plot() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("grid.toml");
    std::fs::write(
        &config,
        "preset = \"set2-one-layer\"\nepochs = 30\nseeds = [0, 1]\ninits = [\"custom\"]\n\
         [rates]\nills = [0.1]\nadam = [0.001]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let res = ills(&[
        "experiment",
        "--config",
        path(&config),
        "--out-dir",
        path(&out),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let aggs =
        read_aggregates_csv(std::fs::File::open(out.join("aggregates.csv")).unwrap()).unwrap();
    assert_eq!(aggs.len(), 2);
    assert!(aggs.iter().all(|a| a.n_seeds == 2 && a.mean.len() == 31));
    assert!(out.join("losses.svg").exists());

    let svg = dir.path().join("again.svg");
    let res = ills(&[
        "plot",
        "--in",
        path(&out.join("aggregates.csv")),
        "--out",
        path(&svg),
    ]);
    assert!(res.status.success());
    assert_eq!(
        std::fs::read(&svg).unwrap(),
        std::fs::read(out.join("losses.svg")).unwrap()
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");

    // Unknown preset and bad learning rate are configuration errors.
    let res = ills(&["gen-data", "--preset", "nope", "--out", path(&out)]);
    assert_eq!(res.status.code(), Some(1));
    let res = ills(&[
        "train",
        "--preset",
        "set2-one-layer",
        "--algo",
        "ills",
        "--lr",
        "2",
        "--out",
        path(&out),
    ]);
    assert_eq!(res.status.code(), Some(1));
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "preset = \"set2-one-layer\"\nbogus = 1\n").unwrap();
    let res = ills(&[
        "experiment",
        "--config",
        path(&bad),
        "--out-dir",
        path(dir.path()),
    ]);
    assert_eq!(res.status.code(), Some(1));

    // Missing inputs and unwritable outputs are IO errors.
    let res = ills(&[
        "experiment",
        "--config",
        path(&dir.path().join("missing.toml")),
        "--out-dir",
        path(dir.path()),
    ]);
    assert_eq!(res.status.code(), Some(2));
    let res = ills(&[
        "gen-data",
        "--preset",
        "set1-two-layer",
        "--out",
        path(&dir.path().join("no/such/dir/x.csv")),
    ]);
    assert_eq!(res.status.code(), Some(2));

    // An absurd step size overflows the parameters: numerical failure, but
    // the partial trace is still written.
    let res = ills(&[
        "train",
        "--preset",
        "set2-one-layer",
        "--algo",
        "adam",
        "--lr",
        "1e308",
        "--epochs",
        "5",
        "--out",
        path(&out),
    ]);
    assert_eq!(res.status.code(), Some(3));
    assert!(std::fs::read_to_string(&out).unwrap().contains("NaN"));

    assert_eq!(ills(&["--help"]).status.code(), Some(0));
    assert_eq!(ills(&["frobnicate"]).status.code(), Some(1));
}
