use std::path::Path;
use std::process::{Command, Output};

use splitfeas_bench::report::{read_csv, CSV_COLUMNS};

fn splitfeas(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_splitfeas"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("SPLITFEAS_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&splitfeas(&["--help"], None)), 0);
    assert_eq!(code(&splitfeas(&["frobnicate"], None)), 1);
    assert_eq!(code(&splitfeas(&["cpfact", "--init", "sideways"], None)), 1);
    assert_eq!(code(&splitfeas(&["cpfact", "--n", "5", "--algs", "cq"], None)), 1);
    assert_eq!(code(&splitfeas(&["sparsefact", "--algs", "altproj"], None)), 1);
    assert_eq!(code(&splitfeas(&["cpfact", "--lambda", "1.5"], None)), 1);
    assert_eq!(code(&splitfeas(&["projtest", "--trials", "0"], None)), 1);
}

#[test]
fn projtest_passes_quietly() {
    let out = splitfeas(&["projtest", "--trials", "50", "-q"], None);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let out = splitfeas(&["projtest", "--trials", "20"], None);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}

fn cp_csv(dir: &Path, name: &str, threads: &str) -> Vec<u8> {
    let path = dir.join(name);
    let out = splitfeas(
        &[
            "cpfact", "--n", "5,6", "--trials", "4", "--seed", "3", "--no-timing", "-q", "--max-iter", "300",
            "--out", path.to_str().unwrap(),
        ],
        Some(threads),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::read(path).unwrap()
}

#[test]
fn csv_output_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let one = cp_csv(dir.path(), "one.csv", "1");
    let three = cp_csv(dir.path(), "three.csv", "3");
    assert_eq!(one, three);

    let text = String::from_utf8(one.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
    let rows = read_csv(one.as_slice()).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].algorithm, "dcls");
    assert_eq!((rows[0].n, rows[0].r), (5, 8));
    assert!(rows.iter().all(|r| r.trials == 4 && r.cpu_s.unwrap_or(0.0) == 0.0));
}

#[test]
fn table_goes_to_stdout() {
    let out = splitfeas(&["cpfact", "--lambda", "0", "--trials", "2", "--algs", "dcls", "--no-timing"], None);
    assert_eq!(code(&out), 0);
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("dcls"));
    assert!(String::from_utf8(out.stderr).unwrap().contains("success 100%"));
}

#[test]
fn matrix_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    std::fs::write(&path, "3 3\n2 1 1\n1 2 1\n1 1 2\n").unwrap();
    let csv = dir.path().join("out.csv");
    let out = splitfeas(
        &[
            "cpfact", "--matrix", path.to_str().unwrap(), "--r", "5", "--trials", "1", "--algs", "dcls", "-q",
            "--out", csv.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!((rows[0].n, rows[0].r, rows[0].success_pct), (3, 5, 100.0));

    std::fs::write(&path, "2 2\n1 x\n").unwrap();
    assert_eq!(code(&splitfeas(&["cpfact", "--matrix", path.to_str().unwrap()], None)), 1);
}

#[test]
fn verify_exit_codes() {
    let ok = splitfeas(&["verify", "--skip-stationarity", "-q"], None);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    let bad = splitfeas(&["verify", "--skip-stationarity", "-q", "--inject-c-excess", "100"], None);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8(bad.stdout).unwrap().contains("FAIL"));
}
