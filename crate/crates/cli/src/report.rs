use varpro_trend::optimizer::{FitResult, HarmonicAmplitude};

use crate::config::RunConfig;
use crate::dataset::{fmt_num, Dataset};

/// Amplitudes at or above this many standard errors count as a detected
/// periodic component.
pub const SIGNIFICANCE_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSummary {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    pub rms: f64,
    pub min: f64,
    pub max: f64,
}

impl ResidualSummary {
    pub fn of(residual: &[f64]) -> Self {
        let n = residual.len() as f64;
        let mean = residual.iter().sum::<f64>() / n;
        let ss: f64 = residual.iter().map(|r| (r - mean).powi(2)).sum();
        Self {
            mean,
            std: (ss / (n - 1.0).max(1.0)).sqrt(),
            rms: (residual.iter().map(|r| r * r).sum::<f64>() / n).sqrt(),
            min: residual.iter().copied().fold(f64::INFINITY, f64::min),
            max: residual.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub source: String,
    pub rows: usize,
    pub config: Vec<(String, String)>,
    pub omega_init: f64,
    pub omega_hat: f64,
    pub period: f64,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub sigma2: f64,
    pub n_df: usize,
    /// `(value, standard error)` per coefficient.
    pub alpha: Vec<(f64, f64)>,
    pub beta: Vec<(f64, f64)>,
    pub harmonics: Vec<HarmonicAmplitude>,
    pub significance: f64,
    pub residual: ResidualSummary,
}

impl RunReport {
    pub fn new(dataset: &Dataset, config: &RunConfig, fit: &FitResult) -> Self {
        let se = fit.covariance.standard_errors();
        let n_alpha = fit.alpha.len();
        Self {
            source: dataset.meta.source.display().to_string(),
            rows: dataset.meta.rows,
            config: config.echo(),
            omega_init: fit.omega_init,
            omega_hat: fit.omega_hat,
            period: fit.period(),
            cost: fit.cost,
            iterations: fit.iterations,
            converged: fit.converged,
            sigma2: fit.covariance.sigma2,
            n_df: fit.covariance.n_df,
            alpha: fit
                .alpha
                .iter()
                .copied()
                .zip(se[..n_alpha].iter().copied())
                .collect(),
            beta: fit
                .beta
                .iter()
                .copied()
                .zip(se[n_alpha..].iter().copied())
                .collect(),
            harmonics: fit.harmonic_amplitudes(),
            significance: fit.max_amplitude_significance(),
            residual: ResidualSummary::of(fit.residual.as_slice()),
        }
    }

    pub fn periodic_significant(&self) -> bool {
        self.significance >= SIGNIFICANCE_THRESHOLD
    }

    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut kv: Vec<(String, String)> = vec![
            ("source".into(), self.source.clone()),
            ("rows".into(), self.rows.to_string()),
        ];
        kv.extend(self.config.iter().cloned());
        let mut put = |k: String, v: String| kv.push((k, v));
        put("omega_init".into(), fmt_num(self.omega_init));
        put("omega_hat".into(), fmt_num(self.omega_hat));
        put("period".into(), fmt_num(self.period));
        put("cost".into(), fmt_num(self.cost));
        put("iterations".into(), self.iterations.to_string());
        put("converged".into(), self.converged.to_string());
        put("sigma2".into(), fmt_num(self.sigma2));
        put("n_df".into(), self.n_df.to_string());
        for (i, (v, se)) in self.alpha.iter().enumerate() {
            put(format!("alpha{}", i + 1), fmt_num(*v));
            put(format!("alpha{}_se", i + 1), fmt_num(*se));
        }
        for (j, (v, se)) in self.beta.iter().enumerate() {
            put(format!("beta{}", j + 1), fmt_num(*v));
            put(format!("beta{}_se", j + 1), fmt_num(*se));
        }
        for h in &self.harmonics {
            put(format!("amplitude{}", h.k), fmt_num(h.amplitude));
            put(format!("amplitude{}_se", h.k), fmt_num(h.amplitude_se));
            put(format!("phase{}", h.k), fmt_num(h.phase));
        }
        put("periodic_significance".into(), fmt_num(self.significance));
        put(
            "periodic_significant".into(),
            self.periodic_significant().to_string(),
        );
        put("residual_mean".into(), fmt_num(self.residual.mean));
        put("residual_std".into(), fmt_num(self.residual.std));
        put("residual_rms".into(), fmt_num(self.residual.rms));
        put("residual_min".into(), fmt_num(self.residual.min));
        put("residual_max".into(), fmt_num(self.residual.max));
        kv
    }
}

/// Parses `key=value` lines as written by the report.
pub fn parse_key_values(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
