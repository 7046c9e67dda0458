use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use enr_elm::dataset::LoadOptions;
use enr_elm::Error;
use enr_elm_bench::output::summary_row;
use enr_elm_bench::{cmd_compare, cmd_gen, cmd_plot, cmd_run, exit_code, parse_spec_list, RunConfig, Source};

#[derive(Parser)]
#[command(name = "enrelm", version, about = "ENR-ELM vs random ELM benchmark harness")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "ENRELM_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic datasets as CSV.
    Gen {
        /// Spec id (1-48), list such as 1-12,15, or `all`.
        #[arg(long, default_value = "all")]
        spec: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "data")]
        outdir: PathBuf,
        /// Override the signal-to-noise ratio (`inf` for noiseless).
        #[arg(long)]
        snr: Option<f64>,
        /// Override the number of samples.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Fit all methods on one dataset and write error curves.
    Run {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long, default_value = "results")]
        outdir: PathBuf,
        /// Also render the curves as SVG.
        #[arg(long)]
        emit_svg: bool,
    },
    /// Fit all methods on several datasets and tabulate selection, errors and timings.
    Compare {
        /// Synthetic spec ids, e.g. 1-12 or all.
        #[arg(long, conflicts_with = "csv")]
        spec: Option<String>,
        /// CSV datasets (all must share --target and --categoricals).
        #[arg(long, num_args = 1..)]
        csv: Vec<PathBuf>,
        #[arg(long)]
        target: Option<String>,
        #[arg(long, value_delimiter = ',')]
        categoricals: Vec<String>,
        #[arg(long)]
        drop_first: bool,
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long, default_value = "results")]
        outdir: PathBuf,
    },
    /// Render run directories (as written by `run`) to SVG.
    Plot {
        dirs: Vec<PathBuf>,
        #[arg(long, default_value = "plots")]
        outdir: PathBuf,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Synthetic spec id (1-48).
    #[arg(long, conflicts_with = "csv", required_unless_present = "csv")]
    spec: Option<usize>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Target column of the CSV.
    #[arg(long, requires = "csv")]
    target: Option<String>,
    /// Comma-separated categorical columns to one-hot encode.
    #[arg(long, value_delimiter = ',')]
    categoricals: Vec<String>,
    /// Drop the first level of each categorical column.
    #[arg(long)]
    drop_first: bool,
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    /// Largest number of neurons (default min(50 n0, T_train/2)).
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 1e-4)]
    toll: f64,
    /// ELM ridge penalty; 0 means least squares with ridge fallback.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 20)]
    realizations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Evaluate curves on uncentered hidden activations.
    #[arg(long)]
    literal_s_centering: bool,
    /// Sample new ELM weights for every neuron count.
    #[arg(long)]
    fresh_w_per_n: bool,
    /// Skip input standardization.
    #[arg(long)]
    no_standardize: bool,
    /// Timing repeats (median reported).
    #[arg(long, default_value_t = 3)]
    repeats: usize,
}

impl FitArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            n_max: self.n_max,
            eps: self.eps,
            toll: self.toll,
            lambda: self.lambda,
            realizations: self.realizations,
            seed: self.seed,
            literal_s_centering: self.literal_s_centering,
            fresh_w_per_n: self.fresh_w_per_n,
            standardize: !self.no_standardize,
            repeats: self.repeats,
        }
    }
}

fn csv_source(path: PathBuf, target: Option<String>, categoricals: Vec<String>, drop_first: bool) -> Result<Source, Error> {
    let target = target.ok_or_else(|| Error::InvalidParameter("--csv needs --target".into()))?;
    Ok(Source::Csv {
        path,
        target,
        options: LoadOptions {
            categoricals,
            drop_first,
        },
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Gen {
            spec,
            seed,
            outdir,
            snr,
            samples,
        } => {
            let ids = parse_spec_list(&spec)?;
            for p in cmd_gen(&ids, seed, snr, samples, &outdir)? {
                println!("{}", p.display());
            }
        }
        Command::Run {
            data,
            fit,
            outdir,
            emit_svg,
        } => {
            let source = match data.csv {
                Some(path) => csv_source(path, data.target, data.categoricals, data.drop_first)?,
                None => Source::Synthetic {
                    id: data.spec.expect("clap requires --spec or --csv"),
                    snr: data.snr,
                    samples: data.samples,
                },
            };
            let report = cmd_run(&source, &fit.config(), &outdir, emit_svg)?;
            println!("{}", enr_elm_bench::output::SUMMARY_HEADER);
            for s in report.summaries() {
                println!("{}", summary_row(&s));
            }
        }
        Command::Compare {
            spec,
            csv,
            target,
            categoricals,
            drop_first,
            snr,
            samples,
            fit,
            outdir,
        } => {
            let sources: Vec<Source> = if !csv.is_empty() {
                csv.into_iter()
                    .map(|p| csv_source(p, target.clone(), categoricals.clone(), drop_first))
                    .collect::<Result<_, _>>()?
            } else {
                parse_spec_list(spec.as_deref().unwrap_or("all"))?
                    .into_iter()
                    .map(|id| Source::Synthetic { id, snr, samples })
                    .collect()
            };
            let reports = cmd_compare(&sources, &fit.config(), &outdir)?;
            print!("{}", enr_elm_bench::output::summary_table(&reports));
        }
        Command::Plot { dirs, outdir } => {
            for p in cmd_plot(&dirs, &outdir)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
