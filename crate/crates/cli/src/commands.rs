//! Subcommand drivers. Each writes its artifacts and returns what it wrote.

use std::path::{Path, PathBuf};

use varpro_trend::analysis::{
    basis_spectra, generate_synthetic, interaction_report, monomial_vandermonde, signal_spectrum,
    spline_window_grid, FamilyComparison, SpectrumReport, SyntheticSpec, Winner,
    SPECTRUM_NORMALIZATION,
};
use varpro_trend::basis::{bspline_basis, SplineSpec};
use varpro_trend::optimizer::{fit, initial_frequency};

use crate::config::{split_key_value, Breakpoints, RunConfig};
use crate::dataset::{fmt_num, write_columns, write_key_values, Dataset};
use crate::error::{CliError, Result};
use crate::report::RunReport;

pub const COMPONENTS_FILE: &str = "components.csv";
pub const COVARIANCE_FILE: &str = "covariance.csv";
pub const REPORT_FILE: &str = "report.txt";

pub const PAPER_PRESET: &str = "paper-6a";

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub report: RunReport,
    pub components: PathBuf,
    pub covariance: PathBuf,
    pub report_path: PathBuf,
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Fits `dataset` and writes the components, covariance and report files
/// into `out_dir`. Non-convergence is reported through
/// `outcome.report.converged`, with all files still written.
pub fn run_fit(dataset: &Dataset, config: &RunConfig, out_dir: &Path) -> Result<FitOutcome> {
    let fit_config = config.fit_config(&dataset.x)?;
    let result = fit(&dataset.x, &dataset.y, &fit_config)?;
    create_dir(out_dir)?;

    let components = out_dir.join(COMPONENTS_FILE);
    write_columns(
        &components,
        &["x", "y", "y_model", "y_periodic", "y_spline", "residual"],
        &[
            &dataset.x,
            &dataset.y,
            result.y_model.as_slice(),
            result.y_periodic.as_slice(),
            result.y_spline.as_slice(),
            result.residual.as_slice(),
        ],
    )?;

    let covariance = out_dir.join(COVARIANCE_FILE);
    let names: Vec<String> = (1..=result.alpha.len())
        .map(|i| format!("alpha{i}"))
        .chain((1..=result.beta.len()).map(|j| format!("beta{j}")))
        .collect();
    let mut text = format!(",{}\n", names.join(","));
    let cov = &result.covariance.covariance;
    for (i, name) in names.iter().enumerate() {
        let row: Vec<String> = (0..cov.ncols()).map(|j| fmt_num(cov[(i, j)])).collect();
        text.push_str(&format!("{name},{}\n", row.join(",")));
    }
    std::fs::write(&covariance, text).map_err(|e| CliError::io(&covariance, e))?;

    let report = RunReport::new(dataset, config, &result);
    let report_path = out_dir.join(REPORT_FILE);
    write_key_values(&report_path, &report.to_key_values())?;
    Ok(FitOutcome {
        report,
        components,
        covariance,
        report_path,
    })
}

/// Synthetic spec from a `key = value` file with keys `n-samples`,
/// `degree`, `breakpoints`, `beta`, `omega`, `amplitudes` (flattened
/// `sin,cos` pairs), `sigma` and `seed`.
pub fn read_synthetic_spec(path: &Path) -> Result<SyntheticSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut spec = SyntheticSpec::paper_preset(0);
    let mut degree = spec.spline.degree();
    let mut breakpoints = spec.spline.breakpoints().to_vec();
    for (i, line) in text.lines().enumerate() {
        let parse_err = |message: String| CliError::Parse {
            path: path.to_path_buf(),
            line: i as u64 + 1,
            message,
        };
        let (key, value) = match split_key_value(line) {
            None => continue,
            Some(kv) => kv.map_err(parse_err)?,
        };
        let list = || -> Result<Vec<f64>> {
            value
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| parse_err(format!("{key}: bad number {s:?}")))
                })
                .collect()
        };
        let scalar = || -> Result<f64> {
            value
                .parse()
                .map_err(|_| parse_err(format!("{key}: bad number {value:?}")))
        };
        let count = || -> Result<usize> {
            value
                .parse()
                .map_err(|_| parse_err(format!("{key}: bad integer {value:?}")))
        };
        match key.as_str() {
            "n-samples" => spec.n_samples = count()?,
            "degree" => degree = count()?,
            "breakpoints" => breakpoints = list()?,
            "beta" => spec.beta_true = list()?,
            "omega" => spec.omega_true = scalar()?,
            "amplitudes" => {
                let flat = list()?;
                if flat.len() % 2 != 0 {
                    return Err(parse_err("amplitudes must be sin,cos pairs".into()));
                }
                spec.harmonic_amplitudes = flat.chunks(2).map(|p| (p[0], p[1])).collect();
            }
            "sigma" => spec.noise_sigma = scalar()?,
            "seed" => {
                spec.seed = value
                    .parse()
                    .map_err(|_| parse_err(format!("seed: bad integer {value:?}")))?
            }
            other => return Err(parse_err(format!("unknown key {other:?}"))),
        }
    }
    spec.spline = SplineSpec::new(degree, breakpoints)?;
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone)]
pub struct SynthOutputs {
    pub data: PathBuf,
    pub truth: PathBuf,
    pub params: PathBuf,
}

/// `data.csv` → `data.truth.csv` / `data.truth.txt`.
pub fn sidecar_paths(out: &Path) -> (PathBuf, PathBuf) {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into());
    (
        out.with_file_name(format!("{stem}.truth.csv")),
        out.with_file_name(format!("{stem}.truth.txt")),
    )
}

pub fn run_synth(spec: &SyntheticSpec, preset: Option<&str>, out: &Path) -> Result<SynthOutputs> {
    let data = generate_synthetic(spec)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_columns(out, &["x", "y"], &[&data.x, &data.y])?;
    let (truth, params) = sidecar_paths(out);
    write_columns(
        &truth,
        &["x", "trend", "periodic", "noise"],
        &[&data.x, &data.trend, &data.periodic, &data.noise],
    )?;

    let join = |v: &[f64]| v.iter().map(|b| fmt_num(*b)).collect::<Vec<_>>().join(",");
    let amplitudes: Vec<f64> = spec
        .harmonic_amplitudes
        .iter()
        .flat_map(|&(s, c)| [s, c])
        .collect();
    let entries = vec![
        ("preset".to_string(), preset.unwrap_or("custom").to_string()),
        ("seed".into(), spec.seed.to_string()),
        ("n_samples".into(), spec.n_samples.to_string()),
        ("degree".into(), spec.spline.degree().to_string()),
        ("breakpoints".into(), join(spec.spline.breakpoints())),
        ("beta_true".into(), join(&spec.beta_true)),
        ("omega_true".into(), fmt_num(spec.omega_true)),
        (
            "harmonics".into(),
            spec.harmonic_amplitudes.len().to_string(),
        ),
        ("amplitudes".into(), join(&amplitudes)),
        ("noise_sigma".into(), fmt_num(spec.noise_sigma)),
        (
            "noise_generator".into(),
            "ChaCha8Rng::seed_from_u64 + rand_distr::Normal (ziggurat)".into(),
        ),
    ];
    write_key_values(&params, &entries)?;
    Ok(SynthOutputs {
        data: out.to_path_buf(),
        truth,
        params,
    })
}

#[derive(Debug, Clone)]
pub enum SpectraSource {
    Monomials {
        samples: usize,
        max_degree: usize,
    },
    Splines {
        spline: SplineSpec,
        samples: usize,
    },
    Signal(Dataset),
    /// Residual of the spline-only least-squares fit of the signal.
    PrefitResidual {
        dataset: Dataset,
        degree: usize,
        breakpoints: Breakpoints,
    },
}

#[derive(Debug, Clone)]
pub struct SpectraOutputs {
    pub spectrum: SpectrumReport,
    pub data: PathBuf,
    pub meta: PathBuf,
    /// Peak of the pre-fit residual spectrum, when computed.
    pub omega_init: Option<f64>,
}

fn sample_rate(x: &[f64]) -> f64 {
    (x.len() - 1) as f64 / (x[x.len() - 1] - x[0])
}

pub fn run_spectra(source: &SpectraSource, out: &Path) -> Result<SpectraOutputs> {
    let mut meta: Vec<(String, String)> = Vec::new();
    let mut omega_init = None;
    let spectrum = match source {
        SpectraSource::Monomials {
            samples,
            max_degree,
        } => {
            meta.push((
                "source".into(),
                format!("monomials x^0..x^{max_degree} on [-1, 1]"),
            ));
            meta.push(("frequency_unit".into(), "cycles per window".into()));
            basis_spectra(
                &monomial_vandermonde(*samples, *max_degree)?,
                *samples as f64,
            )?
        }
        SpectraSource::Splines { spline, samples } => {
            let x = spline_window_grid(spline, *samples);
            meta.push(("source".into(), "clamped B-spline basis".into()));
            meta.push(("frequency_unit".into(), "cycles per unit x".into()));
            let rate = *samples as f64 / (spline.upper() - spline.lower());
            basis_spectra(&bspline_basis(&x, spline)?, rate)?
        }
        SpectraSource::Signal(d) => {
            meta.push(("source".into(), d.meta.source.display().to_string()));
            meta.push(("frequency_unit".into(), "cycles per unit x".into()));
            signal_spectrum("y", &d.y, sample_rate(&d.x))?
        }
        SpectraSource::PrefitResidual {
            dataset,
            degree,
            breakpoints,
        } => {
            let config = RunConfig {
                degree: *degree,
                breakpoints: breakpoints.clone(),
                ..RunConfig::default()
            };
            let spline = config.fit_config(&dataset.x)?.spline;
            let guess = initial_frequency(&dataset.x, &dataset.y, &spline)?;
            meta.push(("source".into(), dataset.meta.source.display().to_string()));
            meta.push(("mode".into(), "spline pre-fit residual".into()));
            meta.push(("frequency_unit".into(), "cycles per unit x".into()));
            meta.push(("peak_bin".into(), guess.peak_bin.to_string()));
            meta.push((
                "peak_frequency".into(),
                fmt_num(guess.frequencies[guess.peak_bin]),
            ));
            meta.push(("omega_init".into(), fmt_num(guess.omega_init)));
            omega_init = Some(guess.omega_init);
            signal_spectrum("residual", &guess.residual, sample_rate(&dataset.x))?
        }
    };
    meta.push(("n_samples".into(), spectrum.n_samples.to_string()));
    meta.push(("normalization".into(), SPECTRUM_NORMALIZATION.into()));
    meta.push(("bins".into(), "k = 0..=n/2, DC included".into()));

    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let mut names = vec!["frequency"];
    names.extend(spectrum.labels.iter().map(String::as_str));
    let columns: Vec<Vec<f64>> = (0..spectrum.labels.len())
        .map(|j| spectrum.magnitudes.column(j).iter().copied().collect())
        .collect();
    let mut refs: Vec<&[f64]> = vec![&spectrum.frequencies];
    refs.extend(columns.iter().map(Vec::as_slice));
    write_columns(out, &names, &refs)?;

    let meta_path = out.with_extension("meta.txt");
    write_key_values(&meta_path, &meta)?;
    Ok(SpectraOutputs {
        spectrum,
        data: out.to_path_buf(),
        meta: meta_path,
        omega_init,
    })
}

/// Writes the per-column comparison of B-splines against monomials.
pub fn run_interaction(
    spline: &SplineSpec,
    max_degree: usize,
    omega_probe: f64,
    samples: usize,
    cutoff: f64,
    out: &Path,
) -> Result<FamilyComparison> {
    let report = interaction_report(spline, max_degree, omega_probe, samples, cutoff)?;
    let mut text = String::from("family,column,at_probe,high_frequency_energy\n");
    for (family, rows) in [("bspline", &report.first), ("monomial", &report.second)] {
        for r in rows.iter() {
            text.push_str(&format!(
                "{family},{},{},{}\n",
                r.label,
                fmt_num(r.at_probe),
                fmt_num(r.high_frequency_energy)
            ));
        }
    }
    std::fs::write(out, text).map_err(|e| CliError::io(out, e))?;
    let winner = |w: Winner| match w {
        Winner::First => "bspline",
        Winner::Second => "monomial",
        Winner::Tie => "tie",
    };
    write_key_values(
        &out.with_extension("meta.txt"),
        &[
            ("probe_frequency".into(), fmt_num(report.probe_frequency)),
            ("probe_bin".into(), report.probe_bin.to_string()),
            ("cutoff".into(), fmt_num(report.cutoff)),
            (
                "at_probe_winner".into(),
                winner(report.at_probe_winner).into(),
            ),
            (
                "high_frequency_winner".into(),
                winner(report.high_frequency_winner).into(),
            ),
            ("normalization".into(), SPECTRUM_NORMALIZATION.into()),
        ],
    )?;
    Ok(report)
}
