use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use failfreq_cli::{read_rows, Method, Quantity};

fn failfreq(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_failfreq")).args(args).current_dir(dir).output().expect("spawn failfreq")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn grid(dir: &Path, name: &str, rows: &str, cols: &str, p: &str) -> PathBuf {
    ok(&failfreq(&["gen-grid", rows, cols, p, "1", "--out", name], dir));
    dir.join(name)
}

fn rows_of(dir: &Path, csv: &str) -> Vec<failfreq_cli::RunReportRow> {
    let path = dir.join("rows.csv");
    std::fs::write(&path, csv).unwrap();
    read_rows(&path).unwrap()
}

#[test]
fn gen_grid_round_trips_through_loader() {
    let dir = tempfile::tempdir().unwrap();
    let path = grid(dir.path(), "g.json", "3", "3", "1e-3");
    let sys: failfreq::SystemF64 = failfreq::load_system_file(&path).unwrap();
    assert_eq!((sys.n(), sys.m()), (9, 12));
    assert!(sys.is_all_terminal());
    assert!(sys.unavailabilities().iter().all(|&p| (p - 1e-3).abs() < 1e-15));
}

#[test]
fn degenerate_grid_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = failfreq(&["gen-grid", "1", "3", "0.1", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_system_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = failfreq(&["estimate", "nope.json", "--method", "exact"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exact_single_edge() {
    let dir = tempfile::tempdir().unwrap();
    let doc = r#"{"version":1,"nodes":["a","b"],"edges":[{"from":"a","to":"b","lambda":1.0,"mu":9.0}]}"#;
    std::fs::write(dir.path().join("edge.json"), doc).unwrap();
    let rows = rows_of(dir.path(), &ok(&failfreq(&["estimate", "edge.json", "--method", "exact"], dir.path())));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].system, "edge");
    assert!((rows[0].value.unwrap() - 0.1).abs() < 1e-15);
    assert!((rows[1].value.unwrap() - 0.9).abs() < 1e-15);
}

#[test]
fn bounds_match_published_grid_values() {
    let dir = tempfile::tempdir().unwrap();
    grid(dir.path(), "g.json", "3", "3", "1e-3");
    let out = ok(&failfreq(&["estimate", "g.json", "--method", "bounds", "--quantity", "ff"], dir.path()));
    let rows = rows_of(dir.path(), &out);
    assert_eq!(rows.len(), 1);
    let r = &rows[0];
    assert_eq!(r.quantity, Quantity::Ff);
    assert_eq!(format!("{:.5e}", r.lower.unwrap()), "8.04785e-6");
    assert_eq!(format!("{:.5e}", r.upper.unwrap()), "8.04807e-6");
    assert_eq!(r.n_alpha, Some(53));
}

#[test]
fn all_terminal_auto_epsilon_reports_plan_fields() {
    let dir = tempfile::tempdir().unwrap();
    grid(dir.path(), "g.json", "2", "3", "1e-3");
    let out = ok(&failfreq(
        &["estimate", "g.json", "--method", "all_terminal", "--epsilon-auto", "--with-bounds", "--cutsets-out", "c.jsonl"],
        dir.path(),
    ));
    let rows = rows_of(dir.path(), &out);
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r.method, Method::AllTerminal);
        assert!(r.theoretical_epsilon.unwrap() > 0.0);
        assert!((r.p_star.unwrap() - 1e-6).abs() < 1e-18);
        assert!(r.alpha.unwrap() >= 1.0);
        assert!(r.samples.unwrap() > 0);
        let err = r.actual_error.unwrap();
        assert!(err < r.theoretical_epsilon.unwrap(), "error {err}");
    }
    let lines = std::fs::read_to_string(dir.path().join("c.jsonl")).unwrap().lines().count();
    assert_eq!(Some(lines), rows[0].n_alpha);
}

#[test]
fn csv_output_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    grid(dir.path(), "a.json", "2", "2", "1e-2");
    grid(dir.path(), "b.json", "2", "3", "1e-2");
    let args = ["estimate", "a.json", "b.json", "--method", "polyN", "--epsilon", "0.3", "--seed", "7", "--jobs", "2"];
    let strip = |s: String| -> Vec<String> {
        // runtime is the only non-deterministic column
        s.lines().map(|l| l.split(',').enumerate().filter(|(i, _)| *i != 5).map(|(_, f)| f).collect::<Vec<_>>().join(",")).collect()
    };
    let first = strip(ok(&failfreq(&args, dir.path())));
    let second = strip(ok(&failfreq(&args, dir.path())));
    assert_eq!(first, second);
    assert_eq!(first.len(), 5);
    assert!(first[1].starts_with("grid-2x2,") && first[3].starts_with("grid-2x3,"));
}

#[test]
fn report_merges_rows_and_marks_failure_free_monte_carlo() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    grid(d, "g.json", "2", "2", "1e-4");
    let bounds = ok(&failfreq(&["estimate", "g.json", "--method", "bounds"], d));
    let proposed = ok(&failfreq(&["estimate", "g.json", "--method", "polyN", "--epsilon", "0.2", "--format", "json"], d));
    let mcs = ok(&failfreq(&["estimate", "g.json", "--method", "mcs", "--additive", "--epsilon", "1", "--delta", "0.5"], d));
    std::fs::write(d.join("b.csv"), bounds).unwrap();
    std::fs::write(d.join("p.json"), proposed).unwrap();
    std::fs::write(d.join("m.csv"), &mcs).unwrap();
    let table = ok(&failfreq(&["report", "b.csv", "p.json", "m.csv"], d));
    let lines: Vec<_> = table.lines().collect();
    assert_eq!(lines.len(), 2, "{table}");
    assert!(lines[0].starts_with("system,p,F_lower,F_upper,proposed,mcs"));
    let mcs_rows = rows_of(d, &mcs);
    if mcs_rows.iter().any(|r| r.no_failure) {
        assert!(lines[1].ends_with(",--"), "{}", lines[1]);
    }
    let fields: Vec<_> = lines[1].split(',').collect();
    assert!(!fields[10].is_empty() && fields[10] != "--");
}

#[test]
fn report_of_nothing_is_an_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.csv"), "").unwrap();
    let table = ok(&failfreq(&["report", "empty.csv"], dir.path()));
    assert_eq!(table.lines().count(), 1);
    let none = ok(&failfreq(&["report"], dir.path()));
    assert_eq!(none.lines().count(), 1);
}

#[test]
fn report_rejects_foreign_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.csv"), "a,b\n1,2\n").unwrap();
    let out = failfreq(&["report", "x.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
