use std::fs;

use exdiff::io::{read_chain, read_dataset};
use exdiff::{cli_main, EXIT_CONFIG, EXIT_OK};

fn call(args: &[&str]) -> i32 {
    cli_main(std::iter::once("exdiff").chain(args.iter().copied()))
}

#[test]
fn simulate_run_diagnose_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let chain = dir.path().join("c.csv");
    let (d, c) = (data.to_str().unwrap(), chain.to_str().unwrap());
    assert_eq!(
        call(&["simulate", "--model", "dwell", "--n", "20", "--seed", "3", "--out", d]),
        EXIT_OK
    );
    let obs = read_dataset(&data).unwrap();
    assert_eq!(obs.len(), 21);
    assert!(dir.path().join("d.csv.meta").exists());

    assert_eq!(
        call(&[
            "run",
            "--model",
            "dwell",
            "--data",
            d,
            "--iterations",
            "200",
            "--set",
            "burnin=50",
            "--out",
            c
        ]),
        EXIT_OK
    );
    let table = read_chain(&chain).unwrap();
    assert_eq!(table.names, ["rho", "mu", "sigma"]);
    assert_eq!(table.draws.len(), 150);
    assert!(dir.path().join("c.csv.timing").exists());

    assert_eq!(call(&["diagnose", "--input", c, "--max-lag", "10"]), EXIT_OK);
    let diag = fs::read_to_string(dir.path().join("c.csv.diag.csv")).unwrap();
    assert_eq!(diag.lines().count(), 4);
}

#[test]
fn bad_inputs_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.csv");
    assert_eq!(call(&["run", "--data", missing.to_str().unwrap()]), EXIT_CONFIG);
    assert_eq!(call(&["run", "--model", "lorenz"]), EXIT_CONFIG);
    assert_eq!(
        call(&[
            "run",
            "--set",
            "sampler=amcmc",
            "--set",
            "error_model=gaussian",
            "--n",
            "5"
        ]),
        EXIT_CONFIG
    );
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "iterations = lots\n").unwrap();
    assert_eq!(call(&["compare", "--config", cfg.to_str().unwrap()]), EXIT_CONFIG);
}
