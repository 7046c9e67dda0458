//! Files written by the CLI.
//!
//! Wall-clock measurements only ever appear in `timings.csv` and in the
//! `# phase,ms` comment lines of curve files; every other byte depends on the
//! configuration and seed alone.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use enr_elm::dataset::{write_error_curve_csv, CurveFile};
use enr_elm::{Error, Result};

use crate::protocol::{EnrRun, RunReport, Summary};

pub const SUMMARY_HEADER: &str = "dataset,method,n_max,selected_n,min_test_err,test_std,curvature_n,stop_index";
pub const TIMINGS_HEADER: &str = "dataset,method,kernel_ms,eigen_ms,fit_ms,curves_ms,total_ms,per_run_ms";

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn summary_row(s: &Summary) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        s.dataset,
        s.method,
        s.n_max,
        s.selected_n,
        s.min_test_err,
        opt(s.test_std),
        opt(s.curvature_n),
        opt(s.stop_index)
    )
}

pub fn timing_rows(r: &RunReport) -> Vec<String> {
    let mut rows = Vec::new();
    for (m, run) in [("a_enr", &r.a_enr), ("i_enr", &r.i_enr)] {
        let t = run.timings;
        rows.push(format!(
            "{},{m},{},{},{},{},{},{}",
            r.name,
            t.kernel,
            t.eigen,
            t.fit,
            t.curves,
            t.total(),
            t.total()
        ));
    }
    rows.push(format!(
        "{},elm,,,,,{},{}",
        r.name,
        r.elm.total_ms,
        r.elm.total_ms / r.realizations as f64
    ));
    rows
}

pub fn summary_table(reports: &[RunReport]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in reports {
        for s in r.summaries() {
            let _ = writeln!(out, "{}", summary_row(&s));
        }
    }
    out
}

pub fn timings_table(reports: &[RunReport]) -> String {
    let mut out = String::from(TIMINGS_HEADER);
    out.push('\n');
    for r in reports {
        for row in timing_rows(r) {
            let _ = writeln!(out, "{row}");
        }
    }
    out
}

fn enr_file(run: &EnrRun, raw: bool, stop: bool) -> CurveFile {
    let (train, test) = if raw {
        (run.train_raw.clone(), run.test_raw.clone())
    } else {
        (run.train.clone(), run.test.clone())
    };
    let mut c = CurveFile::new(train, test);
    if stop {
        c.meta.push(("stop_index".into(), run.fitted.to_string()));
    }
    c.timings = run.timings.phases().iter().map(|&(k, v)| (k.to_string(), v)).collect();
    c
}

/// Writes the curve files of one dataset into `dir`; returns their paths.
pub fn write_run(dir: &Path, r: &RunReport) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, c: &CurveFile| -> Result<()> {
        let p = dir.join(name);
        write_error_curve_csv(&p, c)?;
        written.push(p);
        Ok(())
    };
    put("a_enr.csv", &enr_file(&r.a_enr, false, false))?;
    put("a_enr_raw.csv", &enr_file(&r.a_enr, true, false))?;
    put("i_enr.csv", &enr_file(&r.i_enr, false, true))?;
    put("i_enr_raw.csv", &enr_file(&r.i_enr, true, true))?;

    let sw = &r.elm.sweep;
    let elm_timings = vec![
        ("sweep".to_string(), r.elm.total_ms),
        ("per_run".to_string(), r.elm.total_ms / r.realizations as f64),
    ];
    let test_band = CurveFile {
        band: Some([sw.test.mean.clone(), sw.test.min.clone(), sw.test.max.clone()]),
        meta: vec![
            ("band".into(), "test".into()),
            ("realizations".into(), r.realizations.to_string()),
        ],
        timings: elm_timings,
        ..CurveFile::new(sw.train.mean.clone(), sw.test.mean.clone())
    };
    put("elm.csv", &test_band)?;
    let train_band = CurveFile {
        band: Some([sw.train.mean.clone(), sw.train.min.clone(), sw.train.max.clone()]),
        meta: vec![("band".into(), "train".into())],
        ..CurveFile::new(sw.train.mean.clone(), sw.test.mean.clone())
    };
    put("elm_train_band.csv", &train_band)?;

    let summary = dir.join("summary.csv");
    write_text(&summary, &summary_table(std::slice::from_ref(r)))?;
    written.push(summary);
    let timings = dir.join("timings.csv");
    write_text(&timings, &timings_table(std::slice::from_ref(r)))?;
    written.push(timings);
    Ok(written)
}
