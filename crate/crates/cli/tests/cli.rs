use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use errexp::distributions::io::{format_pmf, parse_pmf, write_pmf};
use errexp::hypothesis::format_samples;
use errexp::simulator::sample_iid;
use errexp::FinitePmf;

fn errexp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_errexp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn example1_file() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/example1.pmf")
}

fn ex1() -> String {
    example1_file().to_string_lossy().into_owned()
}

fn two_by_two(dir: &Path) -> String {
    let path = dir.join("p.pmf");
    std::fs::write(
        &path,
        r#"{"shape": [2, 2], "backing": "rational", "mass": ["2/5", "1/10", "1/10", "2/5"]}"#,
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn example_file_round_trips_byte_for_byte() {
    let text = std::fs::read_to_string(example1_file()).unwrap();
    let pmf = parse_pmf(&text).unwrap();
    assert_eq!(pmf, errexp::example1::pmf());
    assert_eq!(format_pmf(&pmf), text);
}

#[test]
fn divergence_report() {
    let o = errexp(&["divergence", "--p", &ex1(), "--alpha", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().any(|l| l.starts_with("J_0.5(P)\t")));

    let o = errexp(&[
        "divergence",
        "--p",
        &ex1(),
        "--q",
        &ex1(),
        "--alpha",
        "0.5,2",
    ]);
    let out = stdout(&o);
    for l in out.lines().filter(|l| l.starts_with("D")) {
        let v: f64 = l.split('\t').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 0.0, "{l}");
    }
}

#[test]
fn malformed_file_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.pmf");
    std::fs::write(
        &path,
        r#"{"shape": [2, 2], "backing": "rational", "mass": ["1/2", "x", "0", "1/2"]}"#,
    )
    .unwrap();
    let o = errexp(&["divergence", "--p", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mass[1]"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(errexp(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(errexp(&["exponent", "--p", &ex1()]).status.code(), Some(64));
    assert_eq!(errexp(&["--help"]).status.code(), Some(0));
}

#[test]
fn exponent_edges() {
    let o = errexp(&["exponent", "--p", &ex1(), "--ep-of-eq=-0.1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("+inf (infeasible)"));

    let o = errexp(&[
        "exponent",
        "--p",
        &ex1(),
        "--ep-of-eq",
        "0.5",
        "--starts",
        "2",
    ]);
    assert!(o.status.success());
    let primal: f64 = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("primal\t"))
        .unwrap()
        .parse()
        .unwrap();
    assert!(primal.abs() <= 1e-9);
}

#[test]
fn test_on_null_data_accepts_the_null() {
    let dir = tempfile::tempdir().unwrap();
    let p = errexp::example1::pmf().to_float();
    let samples = sample_iid(&p, 4000, 7).unwrap();
    let path = dir.path().join("s.txt");
    std::fs::write(&path, format_samples(&samples)).unwrap();
    let o = errexp(&[
        "test",
        "--p",
        &ex1(),
        "--samples",
        path.to_str().unwrap(),
        "--ep",
        "0.1",
        "--eq",
        "0.1",
        "--eps",
        "0.01",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        stdout(&o).lines().next().unwrap(),
        "emi=0 hoeffding=0 glrt=0"
    );
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate",
        "--p",
        &ex1(),
        "--ep",
        "0.05",
        "--eq",
        "0.05",
        "--eps",
        "0.01",
        "--n",
        "20,40",
        "--trials",
        "300",
        "--seed",
        "11",
    ];
    let a = errexp(&args);
    let b = errexp(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("test\tn\talternative\ttype"));
}

#[test]
fn upper_certificate_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("u.cert");
    let o = errexp(&[
        "certify",
        "upper",
        "--p",
        &ex1(),
        "--eq",
        "3898/131072",
        "--claim",
        "58593464420737815/72057594037927936",
        "--output",
        cert.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = errexp(&["certify", "check", cert.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    // A claim below the true value cannot be certified.
    let o = errexp(&[
        "certify",
        "upper",
        "--p",
        &ex1(),
        "--eq",
        "3898/131072",
        "--claim",
        "0.8",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn lower_budget_then_resume() {
    let dir = tempfile::tempdir().unwrap();
    let p = two_by_two(dir.path());
    let cert = dir.path().join("l.cert");
    let cert_s = cert.to_str().unwrap();
    let o = errexp(&[
        "certify", "lower", "--p", &p, "--eq", "1/100", "--target", "1/10", "--budget", "3",
        "--output", cert_s,
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert_eq!(errexp(&["certify", "check", cert_s]).status.code(), Some(3));
    let o = errexp(&["certify", "lower", "--resume", cert_s, "--output", cert_s]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(errexp(&["certify", "check", cert_s]).status.success());
}

#[test]
fn witness_file_is_a_pmf() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.pmf");
    let o = errexp(&[
        "exponent",
        "--p",
        &ex1(),
        "--ep-of-eq",
        "0.03",
        "--starts",
        "2",
        "--witness",
        w.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let r: FinitePmf = errexp::distributions::io::read_pmf(&w).unwrap();
    assert!(errexp::mutual_information(&r).unwrap() <= 0.03 + 1e-10);
    write_pmf(dir.path().join("again.pmf"), &r).unwrap();
}
