//! Synthetic test signals and spectral interaction of trend bases with a
//! periodic component.
//!
//! Noise is drawn from `ChaCha8Rng::seed_from_u64(seed)` through the
//! ziggurat sampler of `rand_distr::Normal`, so a seed identifies a dataset
//! across builds.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::basis::{
    bspline_basis, harmonic_basis, BasisMatrix, ColumnLabel, HarmonicSpec, SplineSpec,
};
use crate::dft::{one_sided_magnitudes, parseval_weight};
use crate::{Error, Result};

/// How spectra are scaled before comparison; echoed into output metadata.
pub const SPECTRUM_NORMALIZATION: &str =
    "unnormalized DFT magnitude |sum_j c_j exp(-2 pi i j k / n)| divided by the column 2-norm";

/// Parameters of a synthetic trend-plus-periodic signal on `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub spline: SplineSpec,
    pub beta_true: Vec<f64>,
    pub omega_true: f64,
    /// `(sin, cos)` coefficient of each harmonic `k = 1..`.
    pub harmonic_amplitudes: Vec<(f64, f64)>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Quadratic spline on five uniform breakpoints plus a 36.96 rad/unit
    /// fundamental with two harmonics and σ = 0.05 noise.
    ///
    /// The trend and harmonic coefficients are shipped defaults chosen to
    /// give a trend within [-1.5, 2] and a unit-scale periodic part with
    /// decaying harmonics.
    pub fn paper_preset(seed: u64) -> Self {
        Self {
            n_samples: 1024,
            spline: SplineSpec::new(2, vec![0.0, 0.25, 0.5, 0.75, 1.0]).expect("valid preset"),
            beta_true: vec![0.2, 1.6, -0.9, -1.4, 1.1, 1.9],
            omega_true: 36.96,
            harmonic_amplitudes: vec![(1.0, 0.3), (0.45, -0.2), (0.2, 0.1)],
            noise_sigma: 0.05,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::InvalidInput("need at least 2 samples".into()));
        }
        if self.beta_true.len() != self.spline.dim() {
            return Err(Error::DimensionMismatch(format!(
                "spline has {} basis functions but {} coefficients were given",
                self.spline.dim(),
                self.beta_true.len()
            )));
        }
        if self.harmonic_amplitudes.is_empty() {
            return Err(Error::InvalidHarmonic("need at least one harmonic".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "noise sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        HarmonicSpec::new(self.omega_true, self.harmonic_amplitudes.len())?;
        Ok(())
    }
}

/// Generated samples with their ground-truth parts; `y = trend + periodic + noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub trend: Vec<f64>,
    pub periodic: Vec<f64>,
    pub noise: Vec<f64>,
}

/// Samples at `x_i = i / n`, `i = 0..n`, so the sample window has unit length.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let n = spec.n_samples;
    let x: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();

    let bs = bspline_basis(&x, &spec.spline)?;
    let trend = bs.values() * DVector::from_column_slice(&spec.beta_true);

    let hspec = HarmonicSpec::new(spec.omega_true, spec.harmonic_amplitudes.len())?;
    let alpha: Vec<f64> = spec
        .harmonic_amplitudes
        .iter()
        .flat_map(|&(s, c)| [s, c])
        .collect();
    let periodic = harmonic_basis(&x, &hspec).values() * DVector::from_vec(alpha);

    let noise: Vec<f64> = if spec.noise_sigma > 0.0 {
        let dist =
            Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        (0..n).map(|_| dist.sample(&mut rng)).collect()
    } else {
        vec![0.0; n]
    };
    let y = (0..n).map(|i| trend[i] + periodic[i] + noise[i]).collect();
    Ok(SyntheticData {
        x,
        y,
        trend: trend.iter().copied().collect(),
        periodic: periodic.iter().copied().collect(),
        noise,
    })
}

/// Columns `x^0..x^max_degree` at `n_samples` uniform points spanning `[-1, 1]`.
pub fn monomial_vandermonde(n_samples: usize, max_degree: usize) -> Result<BasisMatrix> {
    if n_samples < max_degree + 1 || n_samples < 2 {
        return Err(Error::InsufficientData {
            n: n_samples,
            n_df: (max_degree + 1).max(2),
        });
    }
    let values = DMatrix::from_fn(n_samples, max_degree + 1, |i, j| {
        let x = -1.0 + 2.0 * i as f64 / (n_samples - 1) as f64;
        x.powi(j as i32)
    });
    BasisMatrix::new(
        values,
        (0..=max_degree).map(ColumnLabel::Monomial).collect(),
    )
}

/// One-sided spectra of a set of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// Bin frequencies `k · sample_rate / n` for `k = 0..=n/2`.
    pub frequencies: Vec<f64>,
    /// One row per bin, one column per analysed column; see
    /// [`SPECTRUM_NORMALIZATION`].
    pub magnitudes: DMatrix<f64>,
    pub labels: Vec<String>,
    pub column_norms: Vec<f64>,
    pub n_samples: usize,
}

impl SpectrumReport {
    pub fn bin_nearest(&self, frequency: f64) -> usize {
        let spacing = self.frequencies.get(1).copied().unwrap_or(1.0);
        ((frequency / spacing).round().max(0.0) as usize).min(self.frequencies.len() - 1)
    }

    pub fn nyquist(&self) -> f64 {
        let spacing = self.frequencies.get(1).copied().unwrap_or(0.0);
        spacing * self.n_samples as f64 / 2.0
    }

    /// Share of a column's energy in bins strictly above `cutoff`.
    pub fn energy_above(&self, column: usize, cutoff: f64) -> f64 {
        let n = self.n_samples;
        self.frequencies
            .iter()
            .enumerate()
            .filter(|(_, &f)| f > cutoff)
            .map(|(k, _)| parseval_weight(k, n) * self.magnitudes[(k, column)].powi(2))
            .sum::<f64>()
            / n as f64
    }
}

fn spectra_of(
    columns: &DMatrix<f64>,
    labels: Vec<String>,
    sample_rate: f64,
) -> Result<SpectrumReport> {
    let n = columns.nrows();
    if n == 0 || columns.ncols() == 0 {
        return Err(Error::InvalidInput(
            "cannot take the spectrum of an empty matrix".into(),
        ));
    }
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "sample rate must be positive, got {sample_rate}"
        )));
    }
    if columns.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("columns must be finite".into()));
    }
    let bins = n / 2 + 1;
    let mut magnitudes = DMatrix::zeros(bins, columns.ncols());
    let mut column_norms = Vec::with_capacity(columns.ncols());
    for (j, col) in columns.column_iter().enumerate() {
        let norm = col.norm();
        column_norms.push(norm);
        if norm == 0.0 {
            continue;
        }
        let signal: Vec<f64> = col.iter().copied().collect();
        for (k, m) in one_sided_magnitudes(&signal).into_iter().enumerate() {
            magnitudes[(k, j)] = m / norm;
        }
    }
    Ok(SpectrumReport {
        frequencies: (0..bins)
            .map(|k| k as f64 * sample_rate / n as f64)
            .collect(),
        magnitudes,
        labels,
        column_norms,
        n_samples: n,
    })
}

/// Per-column DFT magnitude, normalized by the column 2-norm, DC included.
pub fn basis_spectra(basis: &BasisMatrix, sample_rate: f64) -> Result<SpectrumReport> {
    let labels = basis.labels().iter().map(ToString::to_string).collect();
    spectra_of(basis.values(), labels, sample_rate)
}

/// Spectrum of a single signal, normalized like [`basis_spectra`].
pub fn signal_spectrum(label: &str, signal: &[f64], sample_rate: f64) -> Result<SpectrumReport> {
    let column = DMatrix::from_column_slice(signal.len(), 1, signal);
    spectra_of(&column, vec![label.to_string()], sample_rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    First,
    Second,
    Tie,
}

impl Winner {
    fn lower_wins(first: f64, second: f64) -> Self {
        if first < second {
            Winner::First
        } else if second < first {
            Winner::Second
        } else {
            Winner::Tie
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnInteraction {
    pub label: String,
    /// Normalized magnitude at the probe bin.
    pub at_probe: f64,
    /// Share of column energy above the cutoff frequency.
    pub high_frequency_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyComparison {
    pub probe_frequency: f64,
    pub probe_bin: usize,
    pub cutoff: f64,
    pub first: Vec<ColumnInteraction>,
    pub second: Vec<ColumnInteraction>,
    /// Family with the smaller worst-case magnitude at the probe bin.
    pub at_probe_winner: Winner,
    /// Family with the smaller worst-case energy above the cutoff.
    pub high_frequency_winner: Winner,
}

fn column_interactions(report: &SpectrumReport, bin: usize, cutoff: f64) -> Vec<ColumnInteraction> {
    (0..report.labels.len())
        .map(|j| ColumnInteraction {
            label: report.labels[j].clone(),
            at_probe: report.magnitudes[(bin, j)],
            high_frequency_energy: report.energy_above(j, cutoff),
        })
        .collect()
}

/// Compares two spectra sampled on the same frequency grid.
pub fn compare_families(
    first: &SpectrumReport,
    second: &SpectrumReport,
    probe_frequency: f64,
    cutoff: f64,
) -> Result<FamilyComparison> {
    if first.frequencies != second.frequencies {
        return Err(Error::DimensionMismatch(
            "spectra must share one frequency grid".into(),
        ));
    }
    if !(probe_frequency >= 0.0 && probe_frequency <= first.nyquist()) {
        return Err(Error::InvalidInput(format!(
            "probe frequency {probe_frequency} is outside [0, {}]",
            first.nyquist()
        )));
    }
    let bin = first.bin_nearest(probe_frequency);
    let a = column_interactions(first, bin, cutoff);
    let b = column_interactions(second, bin, cutoff);
    let worst = |rows: &[ColumnInteraction], f: fn(&ColumnInteraction) -> f64| {
        rows.iter().map(f).fold(0.0, f64::max)
    };
    Ok(FamilyComparison {
        probe_frequency,
        probe_bin: bin,
        cutoff,
        at_probe_winner: Winner::lower_wins(worst(&a, |c| c.at_probe), worst(&b, |c| c.at_probe)),
        high_frequency_winner: Winner::lower_wins(
            worst(&a, |c| c.high_frequency_energy),
            worst(&b, |c| c.high_frequency_energy),
        ),
        first: a,
        second: b,
    })
}

/// Uniform samples `lower + (upper − lower)·i/n` of the spline span; the
/// window has length `upper − lower`.
pub fn spline_window_grid(spline: &SplineSpec, n_samples: usize) -> Vec<f64> {
    let (lo, hi) = (spline.lower(), spline.upper());
    (0..n_samples)
        .map(|i| lo + (hi - lo) * i as f64 / n_samples as f64)
        .collect()
}

/// B-spline columns (first family) against monomials `x^0..x^max_degree`
/// (second family), both sampled with `n_samples` points over one analysis
/// window and expressed in cycles per window. `omega_probe` is in radians per
/// window.
pub fn interaction_report(
    spline: &SplineSpec,
    max_degree: usize,
    omega_probe: f64,
    n_samples: usize,
    cutoff: f64,
) -> Result<FamilyComparison> {
    let probe = omega_probe / (2.0 * PI);
    if !(probe >= 0.0) || probe > n_samples as f64 / 2.0 {
        return Err(Error::InvalidInput(format!(
            "probe {omega_probe} rad is above the Nyquist frequency of {n_samples} samples"
        )));
    }
    let x = spline_window_grid(spline, n_samples);
    let splines = basis_spectra(&bspline_basis(&x, spline)?, n_samples as f64)?;
    let monomials = basis_spectra(
        &monomial_vandermonde(n_samples, max_degree)?,
        n_samples as f64,
    )?;
    compare_families(&splines, &monomials, probe, cutoff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // direct O(n²) transform
    fn dft_magnitude(signal: &[f64], k: usize) -> f64 {
        let n = signal.len() as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (j, &v) in signal.iter().enumerate() {
            let angle = -2.0 * PI * (j * k) as f64 / n;
            re += v * angle.cos();
            im += v * angle.sin();
        }
        re.hypot(im)
    }

    #[test]
    fn preset_shape() {
        let spec = SyntheticSpec::paper_preset(1);
        spec.validate().unwrap();
        assert_eq!(spec.spline.dim(), 6);
        assert_eq!(spec.harmonic_amplitudes.len(), 3);
        let data = generate_synthetic(&spec).unwrap();
        assert_eq!(data.x.len(), 1024);
        assert!(data.trend.iter().all(|&t| (-1.5..=2.0).contains(&t)));
    }

    #[test]
    fn noiseless_is_sum_of_parts() {
        let mut spec = SyntheticSpec::paper_preset(9);
        spec.noise_sigma = 0.0;
        let data = generate_synthetic(&spec).unwrap();
        for i in 0..data.y.len() {
            assert_eq!(data.y[i], data.trend[i] + data.periodic[i]);
        }
    }

    #[test]
    fn seeded_determinism() {
        let a = generate_synthetic(&SyntheticSpec::paper_preset(5)).unwrap();
        let b = generate_synthetic(&SyntheticSpec::paper_preset(5)).unwrap();
        let c = generate_synthetic(&SyntheticSpec::paper_preset(6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.y, c.y);
    }

    #[test]
    fn noise_has_requested_scale() {
        let data = generate_synthetic(&SyntheticSpec::paper_preset(3)).unwrap();
        let n = data.noise.len() as f64;
        let sd = (data.noise.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
        assert!((sd - 0.05).abs() < 0.005, "{sd}");
    }

    #[test]
    fn rejects_inconsistent_spec() {
        let mut spec = SyntheticSpec::paper_preset(0);
        spec.beta_true.pop();
        assert!(matches!(
            generate_synthetic(&spec),
            Err(Error::DimensionMismatch(_))
        ));
        let mut spec = SyntheticSpec::paper_preset(0);
        spec.harmonic_amplitudes.clear();
        assert!(generate_synthetic(&spec).is_err());
    }

    #[test]
    fn vandermonde_columns() {
        let v = monomial_vandermonde(7, 0).unwrap();
        assert_eq!(v.values(), &DMatrix::from_element(7, 1, 1.0));
        let v = monomial_vandermonde(11, 5).unwrap();
        assert_eq!(v.ncols(), 6);
        for j in 0..=5 {
            assert_eq!(v.values()[(0, j)], (-1f64).powi(j as i32));
            assert_eq!(v.values()[(10, j)], 1.0);
        }
        assert!(monomial_vandermonde(3, 5).is_err());
    }

    #[test]
    fn spectrum_matches_direct_dft() {
        let v = monomial_vandermonde(50, 3).unwrap();
        let report = basis_spectra(&v, 50.0).unwrap();
        assert_eq!(report.frequencies.len(), 26);
        for j in 0..4 {
            let col: Vec<f64> = v.values().column(j).iter().copied().collect();
            for k in 0..26 {
                assert_relative_eq!(
                    report.magnitudes[(k, j)] * report.column_norms[j],
                    dft_magnitude(&col, k),
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn constant_and_pure_tone() {
        let n = 128;
        let constant = signal_spectrum("c", &vec![3.0; n], n as f64).unwrap();
        let dc = constant.magnitudes[(0, 0)];
        assert!(dc > 0.0);
        assert!((1..=n / 2).all(|k| constant.magnitudes[(k, 0)] <= 1e-10 * dc));

        let tone: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * 5.0 * i as f64 / n as f64).sin())
            .collect();
        let s = signal_spectrum("s", &tone, n as f64).unwrap();
        let peak = (0..=n / 2)
            .max_by(|&a, &b| s.magnitudes[(a, 0)].total_cmp(&s.magnitudes[(b, 0)]))
            .unwrap();
        assert_eq!(s.frequencies[peak], 5.0);
        assert!((0..=n / 2)
            .filter(|&k| k != 5)
            .all(|k| s.magnitudes[(k, 0)] < 1e-10));
    }

    #[test]
    fn zero_column_has_zero_spectrum() {
        let s = signal_spectrum("z", &[0.0; 16], 16.0).unwrap();
        assert!(s.magnitudes.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn probe_above_nyquist_is_rejected() {
        let spline = SplineSpec::uniform(2, 5, 0.0, 1.0).unwrap();
        let err = interaction_report(&spline, 5, 2.0 * PI * 600.0, 1024, 100.0).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn family_against_itself_ties() {
        let v = basis_spectra(&monomial_vandermonde(256, 4).unwrap(), 256.0).unwrap();
        let cmp = compare_families(&v, &v, 5.88, 20.0).unwrap();
        assert_eq!(cmp.at_probe_winner, Winner::Tie);
        assert_eq!(cmp.high_frequency_winner, Winner::Tie);
        assert_eq!(cmp.first, cmp.second);
    }

    #[test]
    fn interior_splines_interact_less_than_odd_monomials() {
        let spline = SplineSpec::uniform(2, 5, 0.0, 1.0).unwrap();
        let report = interaction_report(&spline, 5, 36.96, 1024, 50.0).unwrap();
        assert_eq!(report.probe_bin, 6);
        let interior = &report.first[1..report.first.len() - 1];
        for odd in [1, 3, 5] {
            let m = report.second[odd].at_probe;
            assert!(interior.iter().all(|c| c.at_probe < m));
        }
    }

    proptest! {
        #[test]
        fn parseval(values in prop::collection::vec(-5.0f64..5.0, 2..200)) {
            let s = signal_spectrum("p", &values, 1.0).unwrap();
            let n = values.len();
            let energy: f64 = values.iter().map(|v| v * v).sum();
            prop_assume!(energy > 1e-6);
            let total: f64 = (0..s.frequencies.len())
                .map(|k| parseval_weight(k, n) * (s.magnitudes[(k, 0)] * s.column_norms[0]).powi(2))
                .sum();
            prop_assert!((total - n as f64 * energy).abs() <= 1e-8 * n as f64 * energy);
            prop_assert!((s.energy_above(0, -1.0) - 1.0).abs() < 1e-8);
        }
    }
}
