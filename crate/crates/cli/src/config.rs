//! Flat `key = value` run configuration.
//!
//! Recognised keys: `degree`, `breakpoints` (comma list or `uniform:N`),
//! `harmonics`, `omega-init`, `omega-bounds` (`lower,upper`), `tolerance`,
//! `max-iterations`, `rescale`, `seed`. Blank lines and `#` comments are
//! ignored.

use std::path::Path;

use varpro_trend::basis::SplineSpec;
use varpro_trend::optimizer::{FitConfig, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};

use crate::dataset::fmt_num;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Breakpoints {
    Explicit(Vec<f64>),
    /// Equally spaced over the data span.
    Uniform(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub degree: usize,
    pub breakpoints: Breakpoints,
    pub harmonics: usize,
    pub omega_init: Option<f64>,
    pub omega_bounds: Option<(f64, f64)>,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub rescale: Option<f64>,
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            degree: 2,
            breakpoints: Breakpoints::Uniform(2),
            harmonics: 1,
            omega_init: None,
            omega_bounds: None,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            rescale: None,
            seed: None,
        }
    }
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {value:?}")))
}

fn number_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| number(key, s))
        .collect()
}

/// Splits `key=value`, returning `None` for blank and comment lines.
pub fn split_key_value(line: &str) -> Option<std::result::Result<(String, String), String>> {
    let line = line.split('#').next().unwrap_or("").trim();
    if line.is_empty() {
        return None;
    }
    Some(match line.split_once('=') {
        Some((k, v)) => Ok((
            k.trim().replace('_', "-").to_lowercase(),
            v.trim().to_string(),
        )),
        None => Err(format!("expected key=value, got {line:?}")),
    })
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = Self::default();
        for (i, line) in text.lines().enumerate() {
            match split_key_value(line) {
                None => {}
                Some(Ok((k, v))) => config.set(&k, &v).map_err(|e| CliError::Parse {
                    path: path.to_path_buf(),
                    line: i as u64 + 1,
                    message: e.to_string(),
                })?,
                Some(Err(message)) => {
                    return Err(CliError::Parse {
                        path: path.to_path_buf(),
                        line: i as u64 + 1,
                        message,
                    })
                }
            }
        }
        Ok(config)
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        match split_key_value(pair) {
            Some(Ok((k, v))) => self.set(&k, &v),
            Some(Err(m)) => Err(CliError::Config(m)),
            None => Err(CliError::Config(format!("empty override {pair:?}"))),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "degree" => self.degree = number(key, value)?,
            "breakpoints" => {
                self.breakpoints = match value.strip_prefix("uniform:") {
                    Some(count) => Breakpoints::Uniform(number(key, count)?),
                    None => Breakpoints::Explicit(number_list(key, value)?),
                }
            }
            "harmonics" => self.harmonics = number(key, value)?,
            "omega-init" => {
                self.omega_init = match value {
                    "auto" | "" => None,
                    v => Some(number(key, v)?),
                }
            }
            "omega-bounds" => {
                self.omega_bounds = match value {
                    "auto" | "" => None,
                    v => match number_list(key, v)?.as_slice() {
                        [lo, hi] => Some((*lo, *hi)),
                        _ => return Err(CliError::Config(format!("{key}: expected lower,upper"))),
                    },
                }
            }
            "tolerance" => self.tolerance = number(key, value)?,
            "max-iterations" => self.max_iterations = number(key, value)?,
            "rescale" => self.rescale = Some(number(key, value)?),
            "seed" => self.seed = Some(number(key, value)?),
            other => return Err(CliError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn spline(&self, x: &[f64]) -> Result<SplineSpec> {
        let spec = match &self.breakpoints {
            Breakpoints::Explicit(bp) => SplineSpec::new(self.degree, bp.clone())?,
            Breakpoints::Uniform(count) => {
                let (lo, hi) = match (x.first(), x.last()) {
                    (Some(&lo), Some(&hi)) => (lo, hi),
                    _ => return Err(CliError::Config("no data to place breakpoints on".into())),
                };
                SplineSpec::uniform(self.degree, *count, lo, hi)?
            }
        };
        Ok(spec)
    }

    /// Fit configuration for `x`, checking that the breakpoints cover the data,
    /// end within one sample step of it and leave no knot interval empty.
    pub fn fit_config(&self, x: &[f64]) -> Result<FitConfig> {
        let spline = self.spline(x)?;
        let (first, last) = (x[0], x[x.len() - 1]);
        if first < spline.lower() || last > spline.upper() {
            return Err(CliError::Config(format!(
                "breakpoints span [{}, {}] does not cover the data span [{first}, {last}]",
                spline.lower(),
                spline.upper()
            )));
        }
        // outer breakpoints may sit at most one sample step beyond the data
        let step = (last - first) / (x.len() - 1).max(1) as f64;
        let slack = step * (1.0 + 1e-9);
        if spline.lower() < first - slack || spline.upper() > last + slack {
            return Err(CliError::Config(format!(
                "breakpoints span [{}, {}] extends beyond the data span [{first}, {last}]",
                spline.lower(),
                spline.upper()
            )));
        }
        for w in spline.breakpoints().windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if !x.iter().any(|&v| v >= lo && v <= hi) {
                return Err(CliError::Config(format!(
                    "knot interval [{lo}, {hi}] lies outside the data span [{first}, {last}]"
                )));
            }
        }
        let config = FitConfig {
            spline,
            harmonics: self.harmonics,
            omega_bounds: self.omega_bounds,
            omega_init: self.omega_init,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
        };
        config.validate()?;
        Ok(config)
    }

    /// Configuration as `key=value` pairs, prefixed `config.`.
    pub fn echo(&self) -> Vec<(String, String)> {
        let join = |v: &[f64]| v.iter().map(|b| fmt_num(*b)).collect::<Vec<_>>().join(",");
        let opt = |v: Option<f64>| v.map_or("auto".to_string(), fmt_num);
        vec![
            ("config.degree".into(), self.degree.to_string()),
            (
                "config.breakpoints".into(),
                match &self.breakpoints {
                    Breakpoints::Explicit(bp) => join(bp),
                    Breakpoints::Uniform(n) => format!("uniform:{n}"),
                },
            ),
            ("config.harmonics".into(), self.harmonics.to_string()),
            ("config.omega-init".into(), opt(self.omega_init)),
            (
                "config.omega-bounds".into(),
                self.omega_bounds
                    .map_or("auto".to_string(), |(lo, hi)| join(&[lo, hi])),
            ),
            ("config.tolerance".into(), fmt_num(self.tolerance)),
            (
                "config.max-iterations".into(),
                self.max_iterations.to_string(),
            ),
            ("config.rescale".into(), opt(self.rescale)),
        ]
    }
}
