//! The experimental protocol: split, standardize, fit all three methods and
//! evaluate their train and test error curves.

use std::path::PathBuf;
use std::time::Instant;

use log::info;

use enr_elm::datagen::{generate, SyntheticSpec};
use enr_elm::dataset::{load_csv, split_indices, Dataset, LoadOptions, DEFAULT_TRAIN_FRACTION};
use enr_elm::elm::{elm_error_sweep, ElmSweep, SweepConfig};
use enr_elm::enr::{
    argmin_curve, compute_hidden_weights, curvature_select, default_n_max, error_curve, fit_approximated,
    fit_incremental, fit_preprocess, EnrModel, FeatureCentering, NeuronBank, Preprocess, Split, StagewiseConfig,
    StagewiseStop,
};
use enr_elm::kernel::nngp_gram;
use enr_elm::{derive_seed, Dataset64, Matrix64, Result};

const SPLIT_STREAM: u64 = 0x51;
const ELM_STREAM: u64 = 0xE1;

/// Where a dataset comes from.
#[derive(Clone, Debug)]
pub enum Source {
    Synthetic {
        id: usize,
        /// Overrides the configured SNR; infinity removes the noise.
        snr: Option<f64>,
        /// Overrides the sample size.
        samples: Option<usize>,
    },
    Csv {
        path: PathBuf,
        target: String,
        options: LoadOptions,
    },
}

impl Source {
    pub fn synthetic(id: usize) -> Self {
        Source::Synthetic {
            id,
            snr: None,
            samples: None,
        }
    }

    pub fn load(&self, seed: u64) -> Result<Dataset64> {
        match self {
            Source::Synthetic { id, snr, samples } => {
                let mut spec = SyntheticSpec::from_id(*id, seed)?;
                if let Some(s) = snr {
                    spec.snr = *s;
                }
                if let Some(t) = samples {
                    spec.t = *t;
                }
                let d = generate::<f64>(&spec)?;
                Dataset::new(spec.name(), d.x, d.y)
            }
            Source::Csv { path, target, options } => load_csv(path, target, options),
        }
    }
}

/// Parameters shared by `run` and `compare`.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub n_max: Option<usize>,
    pub eps: f64,
    pub toll: f64,
    /// ELM ridge penalty; 0 uses least squares with ridge fallback.
    pub lambda: f64,
    pub realizations: usize,
    pub seed: u64,
    pub literal_s_centering: bool,
    pub fresh_w_per_n: bool,
    pub standardize: bool,
    /// Timing repeats; the median per phase is reported.
    pub repeats: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_max: None,
            eps: StagewiseConfig::<f64>::DEFAULT_EPS,
            toll: StagewiseConfig::<f64>::DEFAULT_TOLL,
            lambda: 0.0,
            realizations: SweepConfig::<f64>::DEFAULT_REALIZATIONS,
            seed: 0,
            literal_s_centering: false,
            fresh_w_per_n: false,
            standardize: true,
            repeats: 3,
        }
    }
}

/// Wall-clock milliseconds per phase.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    pub kernel: f64,
    pub eigen: f64,
    pub fit: f64,
    pub curves: f64,
}

impl Timings {
    pub fn total(&self) -> f64 {
        self.kernel + self.eigen + self.fit + self.curves
    }

    pub fn phases(&self) -> [(&'static str, f64); 4] {
        [
            ("kernel", self.kernel),
            ("eigen", self.eigen),
            ("fit", self.fit),
            ("curves", self.curves),
        ]
    }

    fn median(all: &[Timings]) -> Timings {
        let med = |f: fn(&Timings) -> f64| {
            let mut v: Vec<f64> = all.iter().map(f).collect();
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        };
        Timings {
            kernel: med(|t| t.kernel),
            eigen: med(|t| t.eigen),
            fit: med(|t| t.fit),
            curves: med(|t| t.curves),
        }
    }
}

/// Train and test curves of one ENR variant, index `i` is `n = i + 1`.
#[derive(Clone, Debug)]
pub struct EnrRun {
    pub train: Vec<f64>,
    pub test: Vec<f64>,
    pub train_raw: Vec<f64>,
    pub test_raw: Vec<f64>,
    /// Neurons actually fitted; the curves are padded beyond this point.
    pub fitted: usize,
    pub stop: Option<StagewiseStop>,
    pub model: EnrModel<f64>,
    pub timings: Timings,
}

#[derive(Clone, Debug)]
pub struct ElmRun {
    pub sweep: ElmSweep<f64>,
    /// Median sum of per-realization wall times.
    pub total_ms: f64,
}

/// Everything produced for one dataset.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub name: String,
    pub n0: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_max: usize,
    pub realizations: usize,
    pub a_enr: EnrRun,
    pub i_enr: EnrRun,
    pub elm: ElmRun,
}

/// Per-method summary of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub dataset: String,
    pub method: &'static str,
    pub n_max: usize,
    pub selected_n: usize,
    pub min_test_err: f64,
    pub curvature_n: Option<usize>,
    /// Standard deviation of the test error at `selected_n` across ELM realizations.
    pub test_std: Option<f64>,
    pub stop_index: Option<usize>,
    pub total_ms: f64,
    pub per_run_ms: f64,
}

impl RunReport {
    pub fn summaries(&self) -> Vec<Summary> {
        let enr = |method, r: &EnrRun| {
            let curve = &r.test[..r.fitted.max(1).min(r.test.len())];
            let (n, e) = argmin_curve(curve).unwrap_or((0, f64::NAN));
            Summary {
                dataset: self.name.clone(),
                method,
                n_max: self.n_max,
                selected_n: n,
                min_test_err: e,
                curvature_n: curvature_select(curve),
                test_std: None,
                stop_index: (method == "i_enr").then_some(r.fitted),
                total_ms: r.timings.total(),
                per_run_ms: r.timings.total(),
            }
        };
        let sw = &self.elm.sweep;
        let (n, e) = argmin_curve(&sw.test.mean).unwrap_or((0, f64::NAN));
        let elm = Summary {
            dataset: self.name.clone(),
            method: "elm",
            n_max: self.n_max,
            selected_n: n,
            min_test_err: e,
            curvature_n: curvature_select(&sw.test.mean),
            test_std: Some(sw.test_std_at(n.max(1))),
            stop_index: None,
            total_ms: self.elm.total_ms,
            per_run_ms: self.elm.total_ms / self.realizations as f64,
        };
        vec![enr("a_enr", &self.a_enr), enr("i_enr", &self.i_enr), elm]
    }
}

/// Standardized train/test split of a dataset.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub train: Dataset64,
    pub test: Dataset64,
    pub prep: Preprocess<f64>,
    pub xs_train: Matrix64,
    pub xs_test: Matrix64,
    pub yc_train: Vec<f64>,
}

pub fn prepare(data: &Dataset64, cfg: &RunConfig) -> Result<Prepared> {
    let s = split_indices(data.n_samples(), DEFAULT_TRAIN_FRACTION, derive_seed(cfg.seed, SPLIT_STREAM))?;
    let train = data.select(&s.train);
    let test = data.select(&s.test);
    let prep = if cfg.standardize {
        fit_preprocess(&train.x, &train.y)?
    } else {
        Preprocess {
            target_mean: train.y.iter().sum::<f64>() / train.y.len() as f64,
            ..Preprocess::identity(train.n_features())
        }
    };
    let xs_train = prep.transform_inputs(&train.x)?;
    let xs_test = prep.transform_inputs(&test.x)?;
    let yc_train = prep.center_targets(&train.y);
    Ok(Prepared {
        train,
        test,
        prep,
        xs_train,
        xs_test,
        yc_train,
    })
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn pad(mut v: Vec<f64>, n: usize, fill: f64) -> Vec<f64> {
    let last = v.last().copied().unwrap_or(fill);
    v.resize(n, last);
    v
}

struct EnrPass {
    a: EnrRun,
    i: EnrRun,
}

fn enr_pass(p: &Prepared, n_max: usize, cfg: &RunConfig) -> Result<EnrPass> {
    let t0 = Instant::now();
    let gram = nngp_gram(&p.xs_train);
    let kernel = ms(t0);

    let t0 = Instant::now();
    let eigen = gram.into_eigen()?;
    let eig_ms = ms(t0);

    let t0 = Instant::now();
    let hidden = compute_hidden_weights(&p.xs_train, &eigen.vectors)?;
    let bank = NeuronBank::new(hidden.weights, &p.xs_train)?;
    let shared = ms(t0);

    let centering = if cfg.literal_s_centering {
        FeatureCentering::Raw
    } else {
        FeatureCentering::Training
    };

    let t0 = Instant::now();
    let a_model = fit_approximated(&p.yc_train, &eigen.vectors, n_max, &bank)?
        .with_target_mean(p.prep.target_mean)
        .with_centering(centering);
    let a_fit = shared + ms(t0);

    let t0 = Instant::now();
    let scfg = StagewiseConfig {
        toll: cfg.toll,
        eps: cfg.eps,
        ..StagewiseConfig::new(n_max)
    };
    let (i_model, path) = fit_incremental(&p.yc_train, &bank, &scfg)?;
    let i_model = i_model.with_target_mean(p.prep.target_mean).with_centering(centering);
    let i_fit = shared + ms(t0);

    let curves = |m: &EnrModel<f64>| -> Result<(EnrRun, f64)> {
        let t0 = Instant::now();
        let tr = error_curve(&p.train.x, &p.train.y, m, &p.prep, Split::Train)?;
        let te = error_curve(&p.test.x, &p.test.y, m, &p.prep, Split::Test)?;
        let elapsed = ms(t0);
        let fitted = m.len();
        Ok((
            EnrRun {
                train: pad(tr.errs, n_max, tr.baseline),
                test: pad(te.errs, n_max, te.baseline),
                train_raw: pad(tr.errs_raw, n_max, tr.baseline_raw),
                test_raw: pad(te.errs_raw, n_max, te.baseline_raw),
                fitted,
                stop: m.stop,
                model: m.clone(),
                timings: Timings::default(),
            },
            elapsed,
        ))
    };
    let (mut a, a_curves) = curves(&a_model)?;
    let (mut i, i_curves) = curves(&i_model)?;
    a.timings = Timings {
        kernel,
        eigen: eig_ms,
        fit: a_fit,
        curves: a_curves,
    };
    i.timings = Timings {
        kernel,
        eigen: eig_ms,
        fit: i_fit,
        curves: i_curves,
    };
    info!(
        "I-ENR-ELM stopped after {} iterations with {} neurons ({:?})",
        path.steps.len(),
        i.fitted,
        path.stop
    );
    Ok(EnrPass { a, i })
}

/// Runs the full protocol on a dataset.
pub fn run_dataset(data: &Dataset64, cfg: &RunConfig) -> Result<RunReport> {
    let p = prepare(data, cfg)?;
    let n_train = p.train.n_samples();
    let n_max = cfg.n_max.unwrap_or_else(|| default_n_max(data.n_features(), n_train));
    if n_max == 0 || n_max > n_train {
        return Err(enr_elm::Error::InvalidParameter(format!(
            "n_max must lie in 1..={n_train}, got {n_max}"
        )));
    }
    info!(
        "{}: n0={}, train={}, test={}, n_max={}",
        data.name,
        data.n_features(),
        n_train,
        p.test.n_samples(),
        n_max
    );
    let repeats = cfg.repeats.max(1);

    let mut passes = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        passes.push(enr_pass(&p, n_max, cfg)?);
    }
    let a_t = Timings::median(&passes.iter().map(|e| e.a.timings).collect::<Vec<_>>());
    let i_t = Timings::median(&passes.iter().map(|e| e.i.timings).collect::<Vec<_>>());
    let EnrPass { mut a, mut i } = passes.swap_remove(0);
    a.timings = a_t;
    i.timings = i_t;

    let scfg = SweepConfig {
        n_max,
        realizations: cfg.realizations,
        seed: derive_seed(cfg.seed, ELM_STREAM),
        lambda: cfg.lambda,
        nested: !cfg.fresh_w_per_n,
    };
    let mut totals = Vec::with_capacity(repeats);
    let mut sweep = None;
    for _ in 0..repeats {
        let s = elm_error_sweep(&p.xs_train, &p.train.y, &p.xs_test, &p.test.y, &scfg)?;
        totals.push(s.total_millis());
        sweep.get_or_insert(s);
    }
    totals.sort_by(f64::total_cmp);

    Ok(RunReport {
        name: data.name.clone(),
        n0: data.n_features(),
        n_train,
        n_test: p.test.n_samples(),
        n_max,
        realizations: cfg.realizations,
        a_enr: a,
        i_enr: i,
        elm: ElmRun {
            sweep: sweep.expect("at least one repeat"),
            total_ms: totals[totals.len() / 2],
        },
    })
}
