//! Benchmark harness around `enr-elm`: dataset generation, the train/test
//! protocol for ENR-ELM and the random ELM baseline, result files and plots.

pub mod output;
pub mod plot;
pub mod protocol;

use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;

use enr_elm::datagen::{generate, SyntheticSpec, N_SPECS};
use enr_elm::dataset::{write_dataset_csv, Dataset};
use enr_elm::Error;

pub use protocol::{run_dataset, RunConfig, RunReport, Source, Summary};

/// Process exit status for an error: 2 configuration, 3 data, 4 numerical.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_) => 2,
        Error::Dimension { .. }
        | Error::ZeroVariance { .. }
        | Error::ConstantSignal
        | Error::Data(_)
        | Error::Io { .. }
        | Error::Csv { .. } => 3,
        Error::Domain(_)
        | Error::NonFinite(_)
        | Error::NoConvergence { .. }
        | Error::NotPositiveDefinite { .. }
        | Error::IllConditioned { .. } => 4,
    }
}

/// Parses `all`, `7` or lists such as `1-12,15`.
pub fn parse_spec_list(s: &str) -> Result<Vec<usize>, Error> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok((1..=N_SPECS).collect());
    }
    let bad = || Error::InvalidParameter(format!("bad spec list {s:?}; use ids 1-48, ranges a-b, or all"));
    let mut ids = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (lo, hi): (usize, usize) = match part.split_once('-') {
            Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
            None => {
                let v: usize = part.parse().map_err(|_| bad())?;
                (v, v)
            }
        };
        if lo == 0 || hi > N_SPECS || lo > hi {
            return Err(bad());
        }
        ids.extend(lo..=hi);
    }
    if ids.is_empty() {
        return Err(bad());
    }
    Ok(ids)
}

/// Writes one CSV per synthetic spec; returns the paths in spec order.
pub fn cmd_gen(ids: &[usize], seed: u64, snr: Option<f64>, samples: Option<usize>, outdir: &Path) -> Result<Vec<PathBuf>, Error> {
    output::create_dir(outdir)?;
    let sets: Vec<Dataset<f64>> = ids
        .par_iter()
        .map(|&id| {
            let mut spec = SyntheticSpec::from_id(id, seed)?;
            if let Some(s) = snr {
                spec.snr = s;
            }
            if let Some(t) = samples {
                spec.t = t;
            }
            let d = generate::<f64>(&spec)?;
            Dataset::new(spec.name(), d.x, d.y)
        })
        .collect::<Result<_, Error>>()?;
    let mut paths = Vec::with_capacity(sets.len());
    for d in &sets {
        let p = outdir.join(format!("{}.csv", d.name));
        write_dataset_csv(&p, d)?;
        paths.push(p);
    }
    info!("wrote {} datasets to {}", paths.len(), outdir.display());
    Ok(paths)
}

/// Runs the protocol on one dataset and writes its curve files under `outdir/<name>/`.
pub fn cmd_run(source: &Source, cfg: &RunConfig, outdir: &Path, emit_svg: bool) -> Result<RunReport, Error> {
    let data = source.load(cfg.seed)?;
    let report = run_dataset(&data, cfg)?;
    let dir = outdir.join(&report.name);
    output::write_run(&dir, &report)?;
    if emit_svg {
        plot::plot_dirs(&[dir], outdir)?;
    }
    Ok(report)
}

/// Runs every source and writes `compare.csv` (selection and errors) and
/// `timings.csv` (wall-clock) into `outdir`.
pub fn cmd_compare(sources: &[Source], cfg: &RunConfig, outdir: &Path) -> Result<Vec<RunReport>, Error> {
    let reports: Vec<RunReport> = sources
        .par_iter()
        .map(|s| {
            let data = s.load(cfg.seed)?;
            run_dataset(&data, cfg)
        })
        .collect::<Result<_, Error>>()?;
    output::create_dir(outdir)?;
    output::write_text(&outdir.join("compare.csv"), &output::summary_table(&reports))?;
    output::write_text(&outdir.join("timings.csv"), &output::timings_table(&reports))?;
    Ok(reports)
}

pub fn cmd_plot(dirs: &[PathBuf], outdir: &Path) -> Result<Vec<PathBuf>, Error> {
    plot::plot_dirs(dirs, outdir)
}
