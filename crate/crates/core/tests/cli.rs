//! End-to-end tests of the `modsum` binary: exit codes, CSV shape, byte
//! determinism, and the spec-file path.

#![allow(clippy::excessive_precision)] // frozen oracle values keep 17 digits

use std::process::{Command, Output};

fn modsum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modsum"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn field(csv: &str, row: usize, col: usize) -> String {
    csv.lines()
        .nth(row + 1)
        .unwrap_or_else(|| panic!("row {row} missing in:\n{csv}"))
        .split(',')
        .nth(col)
        .unwrap()
        .to_string()
}

#[test]
fn capacity_examples_and_exit_codes() {
    let out = modsum(&["capacity", "--p", "0.5", "--delta", "0", "--r0", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let cap: f64 = field(&stdout(&out), 0, 4).parse().unwrap();
    assert!((cap - 1.0).abs() < 1e-9);

    let out = modsum(&["capacity", "--p", "0.5", "--delta", "0.5", "--r0", "0.9"]);
    let cap: f64 = field(&stdout(&out), 0, 4).parse().unwrap();
    assert!(cap.abs() < 1e-9);

    let out = modsum(&["capacity", "--p", "0.5", "--delta", "0.1", "--r0", "0.5"]);
    let cap: f64 = field(&stdout(&out), 0, 4).parse().unwrap();
    assert!((cap - 0.30268413473047202).abs() < 1e-4);

    // Summary goes to stderr, CSV to stdout.
    assert!(String::from_utf8(out.stderr).unwrap().contains("capacity"));

    // Grid-oracle path via --resolution.
    let out = modsum(&[
        "capacity",
        "--p",
        "0.5",
        "--delta",
        "0.1",
        "--r0",
        "0.5",
        "--resolution",
        "64",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    let cap: f64 = field(&csv, 0, 4).parse().unwrap();
    assert!((cap - 0.30268413473047202).abs() < 5e-3);
    assert_eq!(field(&csv, 0, 8), "grid");
}

#[test]
fn input_errors_exit_one() {
    assert_eq!(modsum(&["capacity"]).status.code(), Some(1));
    assert_eq!(
        modsum(&["capacity", "--epsilon", "0.1", "--r0", "0.2"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        modsum(&["capacity", "--spec", "/no/such/file.json"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(modsum(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        modsum(&["capacity", "--p", "1.7", "--r0", "0.5"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn r0_prints_twelve_significant_digits() {
    let out = modsum(&["r0", "--epsilon", "0.11"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let value: f64 = text.trim().parse().unwrap();
    assert!((value - 0.50008404183547200).abs() < 1e-9);
    // 12 significant digits in scientific notation.
    assert!(text.trim().contains('e'), "{text}");
    let mantissa = text.trim().split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 12);
}

#[test]
fn sweep_examples_and_determinism() {
    let args = [
        "sweep",
        "--r0",
        "0.3:0.8:0.5",
        "--delta",
        "0.1",
        "--p",
        "0.5",
        "--seed",
        "0",
    ];
    let a = modsum(&args);
    let b = modsum(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(
        a.stdout, b.stdout,
        "sweep output must be byte-deterministic"
    );

    let csv = stdout(&a);
    assert_eq!(
        csv.lines().next().unwrap(),
        "r0,delta,p,epsilon,capacity_numeric,capacity_closed_form,cutset_bound,direct_link,gap"
    );
    // Row (0.3, 0.1): cutset = 0.3, gap = 0.3 - capacity > 0.
    let gap: f64 = field(&csv, 0, 8).parse().unwrap();
    assert!((gap - 0.11354961387711613).abs() < 1e-4, "gap {gap}");
    // Row (0.8, 0.1): gap ~ 0.0743.
    let gap: f64 = field(&csv, 1, 8).parse().unwrap();
    assert!((gap - 0.07428683548752317).abs() < 1e-4, "gap {gap}");

    // Epsilon axis fills the epsilon column and computes R0 from the link.
    let out = modsum(&["sweep", "--epsilon", "0.11", "--delta", "0.1", "--p", "0.5"]);
    let csv = stdout(&out);
    let r0: f64 = field(&csv, 0, 0).parse().unwrap();
    assert!((r0 - 0.50008404183547200).abs() < 1e-9);
    let eps: f64 = field(&csv, 0, 3).parse().unwrap();
    assert!((eps - 0.11).abs() < 1e-12);
}

#[test]
fn verify_converse_passes_on_degenerate_specs() {
    let out = modsum(&[
        "verify-converse",
        "--p",
        "0.5",
        "--delta",
        "0.5",
        "--epsilon",
        "0.11",
        "--n",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    assert_eq!(field(&csv, 0, 1), "256");
    assert_eq!(field(&csv, 0, 4), "true");

    let out = modsum(&[
        "verify-converse",
        "--p",
        "0.5",
        "--delta",
        "0.1",
        "--epsilon",
        "0.5",
        "--n",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));

    // Explicit-rate links cannot be enumerated: input error.
    let out = modsum(&["verify-converse", "--r0", "0.5", "--n", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_examples_and_determinism() {
    // Noiseless direct channel: zero block errors at rate <= 1.
    let out = modsum(&[
        "simulate",
        "--p",
        "0",
        "--delta",
        "0.1",
        "--r0",
        "0.5",
        "--n",
        "8",
        "--rate",
        "0.5",
        "--trials",
        "300",
        "--constant-u",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    let err: f64 = field(&csv, 0, 5).parse().unwrap();
    assert_eq!(err, 0.0);

    let args = [
        "simulate",
        "--r0",
        "0.5",
        "--n",
        "12",
        "--rate",
        "0.2",
        "--trials",
        "500",
        "--seed",
        "11",
        "--typ-tol",
        "0.1",
        "--u-margin",
        "0.2",
    ];
    let a = modsum(&args);
    let b = modsum(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(
        a.stdout, b.stdout,
        "simulate output must be byte-deterministic"
    );
    let csv = stdout(&a);
    assert_eq!(
        csv.lines().next().unwrap(),
        "n,rate,trials,seed,decoder,block_error,ci_low,ci_high,e_quant_fail,e_decode"
    );
}

#[test]
fn spec_files_round_trip_through_the_cli() {
    let dir = std::env::temp_dir().join("modsum-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let spec_path = dir.join("binary.json");
    let spec = modsum::bsc_relay(0.5, 0.1, 0.11).unwrap();
    std::fs::write(&spec_path, modsum::canonical_spec_json(&spec)).unwrap();

    let from_file = modsum(&["r0", "--spec", spec_path.to_str().unwrap()]);
    assert_eq!(from_file.status.code(), Some(0));
    let shorthand = modsum(&["r0", "--epsilon", "0.11"]);
    assert_eq!(from_file.stdout, shorthand.stdout);

    // --out writes the CSV to the file and keeps stdout empty.
    let out_path = dir.join("row.csv");
    let out = modsum(&[
        "capacity",
        "--spec",
        spec_path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&out_path).unwrap();
    assert!(written.starts_with("r0,delta,p,epsilon,capacity"));
}

#[test]
fn help_exits_zero() {
    assert_eq!(modsum(&["--help"]).status.code(), Some(0));
    assert_eq!(modsum(&["sweep", "--help"]).status.code(), Some(0));
}
