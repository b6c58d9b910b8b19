use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use varpro_trend::analysis::SyntheticSpec;
use varpro_trend::basis::SplineSpec;
use varpro_trend_cli::commands::{
    read_synthetic_spec, run_fit, run_interaction, run_spectra, run_synth, SpectraSource,
    PAPER_PRESET,
};
use varpro_trend_cli::config::{Breakpoints, RunConfig};
use varpro_trend_cli::dataset::{ingest_csv, ColumnRef, IngestOptions};
use varpro_trend_cli::{CliError, Result};

const EXIT_ERROR: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;

#[derive(Parser)]
#[command(
    name = "varpro-trend",
    version,
    about = "Separate a periodic component from a spline trend"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one or more CSV files.
    Fit(FitArgs),
    /// Write a synthetic dataset and its ground truth.
    Synth(SynthArgs),
    /// Normalized DFT magnitudes of a basis family or a signal.
    Spectra(SpectraArgs),
    /// Compare B-spline and monomial spectra around a probe frequency.
    Interaction(InteractionArgs),
}

#[derive(Args)]
struct InputArgs {
    /// x column, by zero-based index or header name.
    #[arg(long, default_value = "0")]
    x_column: ColumnRef,
    /// y column, by zero-based index or header name.
    #[arg(long, default_value = "1")]
    y_column: ColumnRef,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV. With several inputs each is fitted into `<out-dir>/<stem>/`.
    #[arg(long = "input", short, required = true)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    columns: InputArgs,
    /// Key-value configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Configuration override, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, short, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Built-in preset.
    #[arg(long, conflicts_with = "spec")]
    preset: Option<String>,
    /// Key-value synthetic specification file.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Noise standard deviation override.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Monomial,
    Bspline,
}

#[derive(Args)]
struct SpectraArgs {
    #[arg(long, conflicts_with = "input")]
    family: Option<Family>,
    /// Signal CSV instead of a basis family.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    columns: InputArgs,
    /// Spectrum of the spline pre-fit residual rather than the raw signal.
    #[arg(long, requires = "input")]
    prefit_residual: bool,
    #[arg(long, default_value_t = 1024)]
    samples: usize,
    /// Highest monomial degree.
    #[arg(long, default_value_t = 5)]
    max_degree: usize,
    #[arg(long, default_value_t = 2)]
    degree: usize,
    /// Comma-separated breakpoints or `uniform:N`.
    #[arg(long, default_value = "0,0.25,0.5,0.75,1")]
    breakpoints: String,
    #[arg(long)]
    rescale: Option<f64>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct InteractionArgs {
    #[arg(long, default_value_t = 2)]
    degree: usize,
    /// Number of uniform breakpoints on [0, 1].
    #[arg(long, default_value_t = 5)]
    knots: usize,
    #[arg(long, default_value_t = 5)]
    max_degree: usize,
    /// Probe angular frequency for a unit window.
    #[arg(long, default_value_t = 36.96)]
    omega: f64,
    #[arg(long, default_value_t = 1024)]
    samples: usize,
    /// Cutoff in cycles per window for the high-frequency energy.
    #[arg(long, default_value_t = 20.0)]
    cutoff: f64,
    #[arg(long, short)]
    out: PathBuf,
}

fn ingest_options(args: &InputArgs, rescale: Option<f64>) -> Result<IngestOptions> {
    if !args.delimiter.is_ascii() {
        return Err(CliError::Config(format!(
            "delimiter must be ASCII, got {:?}",
            args.delimiter
        )));
    }
    Ok(IngestOptions {
        x_column: args.x_column.clone(),
        y_column: args.y_column.clone(),
        delimiter: args.delimiter as u8,
        rescale,
    })
}

fn fit_command(args: &FitArgs) -> Result<bool> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for pair in &args.overrides {
        config.set_pair(pair)?;
    }
    let options = ingest_options(&args.columns, config.rescale)?;

    let fit_one = |input: &Path, out_dir: &Path| -> Result<bool> {
        let dataset = ingest_csv(input, &options)?;
        let outcome = run_fit(&dataset, &config, out_dir)?;
        let r = &outcome.report;
        if !r.converged {
            eprintln!(
                "{}: minimization did not converge after {} iterations; outputs are best effort",
                input.display(),
                r.iterations
            );
        }
        if !r.periodic_significant() {
            eprintln!(
                "{}: largest harmonic amplitude is {:.2} standard errors, no significant periodic component",
                input.display(),
                r.significance
            );
        }
        println!(
            "{}: omega_hat={:.6} period={:.6} sigma2={:.4e} -> {}",
            input.display(),
            r.omega_hat,
            r.period,
            r.sigma2,
            out_dir.display()
        );
        Ok(r.converged)
    };

    if let [input] = args.inputs.as_slice() {
        return fit_one(input, &args.out_dir);
    }
    let results: Vec<(PathBuf, Result<bool>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = args
            .inputs
            .iter()
            .map(|input| {
                let stem = input.file_stem().unwrap_or(input.as_os_str());
                let dir = args.out_dir.join(stem);
                let fit_one = &fit_one;
                scope.spawn(move || (input.clone(), fit_one(input, &dir)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fit thread panicked"))
            .collect()
    });
    let mut all_converged = true;
    let mut first_error = None;
    for (input, result) in results {
        match result {
            Ok(converged) => all_converged &= converged,
            Err(e) => {
                eprintln!("error: {}: {e}", input.display());
                first_error.get_or_insert(e);
            }
        }
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(all_converged),
    }
}

fn synth_command(args: &SynthArgs) -> Result<()> {
    let mut spec = match (&args.preset, &args.spec) {
        (Some(p), _) if p == PAPER_PRESET => SyntheticSpec::paper_preset(0),
        (Some(p), _) => {
            return Err(CliError::Config(format!(
                "unknown preset {p:?} (available: {PAPER_PRESET})"
            )))
        }
        (None, Some(path)) => read_synthetic_spec(path)?,
        (None, None) => {
            return Err(CliError::Config(
                "one of --preset or --spec is required".into(),
            ))
        }
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(sigma) = args.sigma {
        spec.noise_sigma = sigma;
    }
    let out = run_synth(&spec, args.preset.as_deref(), &args.out)?;
    println!(
        "wrote {}, {}, {}",
        out.data.display(),
        out.truth.display(),
        out.params.display()
    );
    Ok(())
}

fn parse_breakpoints(text: &str) -> Result<Breakpoints> {
    let mut config = RunConfig::default();
    config.set("breakpoints", text)?;
    Ok(config.breakpoints)
}

fn spectra_command(args: &SpectraArgs) -> Result<()> {
    let breakpoints = parse_breakpoints(&args.breakpoints)?;
    let source = match (&args.input, args.family) {
        (Some(input), _) => {
            let dataset = ingest_csv(input, &ingest_options(&args.columns, args.rescale)?)?;
            if args.prefit_residual {
                SpectraSource::PrefitResidual {
                    dataset,
                    degree: args.degree,
                    breakpoints,
                }
            } else {
                SpectraSource::Signal(dataset)
            }
        }
        (None, Some(Family::Monomial)) => SpectraSource::Monomials {
            samples: args.samples,
            max_degree: args.max_degree,
        },
        (None, Some(Family::Bspline)) => {
            let spline = match breakpoints {
                Breakpoints::Explicit(bp) => SplineSpec::new(args.degree, bp)?,
                Breakpoints::Uniform(n) => SplineSpec::uniform(args.degree, n, 0.0, 1.0)?,
            };
            SpectraSource::Splines {
                spline,
                samples: args.samples,
            }
        }
        (None, None) => {
            return Err(CliError::Config(
                "one of --family or --input is required".into(),
            ))
        }
    };
    let out = run_spectra(&source, &args.out)?;
    if let Some(omega) = out.omega_init {
        println!("omega_init={omega:.6}");
    }
    println!("wrote {}, {}", out.data.display(), out.meta.display());
    Ok(())
}

fn interaction_command(args: &InteractionArgs) -> Result<()> {
    let spline = SplineSpec::uniform(args.degree, args.knots, 0.0, 1.0)?;
    let report = run_interaction(
        &spline,
        args.max_degree,
        args.omega,
        args.samples,
        args.cutoff,
        &args.out,
    )?;
    println!(
        "probe bin {}: at-probe winner {:?}, high-frequency winner {:?} (first = bspline)",
        report.probe_bin, report.at_probe_winner, report.high_frequency_winner
    );
    Ok(())
}

fn main() -> ExitCode {
    // usage errors share exit code 1 with other input errors
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                ExitCode::from(EXIT_ERROR)
            } else {
                ExitCode::SUCCESS
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Fit(args) => fit_command(args).map(|converged| {
            if converged {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_NOT_CONVERGED)
            }
        }),
        Command::Synth(args) => synth_command(args).map(|_| ExitCode::SUCCESS),
        Command::Spectra(args) => spectra_command(args).map(|_| ExitCode::SUCCESS),
        Command::Interaction(args) => interaction_command(args).map(|_| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_ERROR)
    })
}
