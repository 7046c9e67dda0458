use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use enr_elm_bench::plot::{x_coordinate, PANEL_X};

fn enrelm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enrelm"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = enrelm(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const FAST: [&str; 6] = ["--samples", "80", "--realizations", "3", "--repeats", "1"];

#[test]
fn gen_writes_expected_shape_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["gen", "--spec", "1", "--seed", "3", "--outdir", p(&a)]);
    ok(&["gen", "--spec", "1", "--seed", "3", "--outdir", p(&b)]);
    let text = fs::read_to_string(a.join("synthetic_01.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 301);
    assert!(lines.iter().all(|l| l.split(',').count() == 21));
    assert_eq!(fs::read(a.join("synthetic_01.csv")).unwrap(), fs::read(b.join("synthetic_01.csv")).unwrap());
}

#[test]
fn gen_all_writes_every_spec() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(&["gen", "--samples", "20", "--outdir", p(tmp.path())]);
    assert_eq!(out.lines().count(), 48);
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 48);
}

#[test]
fn exit_codes_follow_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(enrelm(&["gen", "--spec", "49", "--outdir", p(tmp.path())]).status.code(), Some(2));
    assert_eq!(enrelm(&["run", "--spec", "1", "--eps", "0", "--outdir", p(tmp.path())]).status.code(), Some(2));
    let missing = tmp.path().join("missing.csv");
    assert_eq!(
        enrelm(&["run", "--csv", p(&missing), "--target", "y", "--outdir", p(tmp.path())]).status.code(),
        Some(3)
    );
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "a,b,y\n1,2,3\n4,x,6\n").unwrap();
    assert_eq!(
        enrelm(&["run", "--csv", p(&bad), "--target", "y", "--outdir", p(tmp.path())]).status.code(),
        Some(3)
    );
    // clap's own usage errors
    assert_eq!(enrelm(&["run"]).status.code(), Some(2));
}

#[test]
fn run_is_reproducible_and_writes_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--spec", "2", "--outdir", p(tmp.path())];
    args.extend(FAST);
    let first = ok(&args);
    let second = ok(&args);
    assert_eq!(first, second);
    let rows: Vec<&str> = first.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    let dir = tmp.path().join("synthetic_02");
    for f in ["a_enr.csv", "a_enr_raw.csv", "i_enr.csv", "i_enr_raw.csv", "elm.csv", "elm_train_band.csv", "summary.csv", "timings.csv"] {
        assert!(dir.join(f).is_file(), "{f} missing");
    }
}

#[test]
fn compare_reports_each_method_and_elm_spread() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["compare", "--spec", "1-2", "--outdir", p(tmp.path())];
    args.extend(FAST);
    ok(&args);
    let cmp = fs::read_to_string(tmp.path().join("compare.csv")).unwrap();
    let rows: Vec<Vec<&str>> = cmp.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    for name in ["synthetic_01", "synthetic_02"] {
        let methods: Vec<&str> = rows.iter().filter(|r| r[0] == name).map(|r| r[1]).collect();
        assert_eq!(methods, ["a_enr", "i_enr", "elm"]);
    }
    for r in rows.iter().filter(|r| r[1] == "elm") {
        let std: f64 = r[5].parse().unwrap();
        assert!(std >= 0.0);
    }

    let timings = fs::read_to_string(tmp.path().join("timings.csv")).unwrap();
    for l in timings.lines().skip(1).filter(|l| l.contains(",elm,")) {
        let f: Vec<&str> = l.split(',').collect();
        let (total, per_run): (f64, f64) = (f[6].parse().unwrap(), f[7].parse().unwrap());
        assert!((per_run * 3.0 - total).abs() <= 1e-9 * total.max(1.0));
    }
}

#[test]
fn plot_of_nothing_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("plots");
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out = ok(&["plot", p(&empty), "--outdir", p(&out_dir)]);
    assert!(out.is_empty());
    assert!(!out_dir.exists());
}

fn attr<'a>(tag: &'a str, name: &str) -> Option<&'a str> {
    let key = format!(" {name}=\"");
    let start = tag.find(&key)? + key.len();
    Some(&tag[start..start + tag[start..].find('"')?])
}

#[test]
fn plot_marks_the_stopping_point() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--spec", "1", "--outdir", p(tmp.path()), "--emit-svg"];
    args.extend(FAST);
    ok(&args);
    let svg = fs::read_to_string(tmp.path().join("synthetic_01.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));

    let run = tmp.path().join("synthetic_01");
    let i_enr = fs::read_to_string(run.join("i_enr.csv")).unwrap();
    let stop: usize = i_enr
        .lines()
        .find_map(|l| l.strip_prefix("#! stop_index,"))
        .unwrap()
        .parse()
        .unwrap();
    let n_max = i_enr.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert!(stop >= 1 && stop < n_max);

    let polylines: Vec<&str> = svg.lines().filter(|l| l.starts_with("<polyline")).collect();
    for l in &polylines {
        let pts = attr(l, "points").unwrap();
        assert!(pts.split(' ').count() >= 1);
        assert!(pts.split(' ').all(|p| p.split(',').all(|v| v.parse::<f64>().is_ok())));
    }
    let tails: Vec<&&str> = polylines.iter().filter(|l| attr(l, "class") == Some("i_enr-tail")).collect();
    assert_eq!(tails.len(), 2);
    for (k, tail) in tails.iter().enumerate() {
        assert_eq!(attr(tail, "stroke-dasharray"), Some("6,4"));
        let first_x: f64 = attr(tail, "points").unwrap().split(',').next().unwrap().parse().unwrap();
        assert!((first_x - x_coordinate(PANEL_X[k], n_max, stop)).abs() < 0.01);
    }
    let solid = polylines.iter().filter(|l| attr(l, "class") == Some("i_enr")).count();
    assert_eq!(solid, 2);
    assert_eq!(svg.matches("class=\"elm-band\"").count(), 2);
}
