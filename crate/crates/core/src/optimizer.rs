//! End-to-end fitting: spectral initial guess, scalar minimization of the
//! variable projection functional and recovery of all linear quantities.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::basis::{bspline_basis, SplineSpec};
use crate::dft::one_sided_magnitudes;
use crate::varpro::{covariance, estimate_sigma2, solve_linear, CovarianceReport, VpfProblem};
use crate::{Error, Result, Stage};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;

/// Uniform probes per bracket before refinement.
const SCAN_INTERVALS: usize = 16;
/// Relative spacing deviation accepted as uniform sampling.
const UNIFORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub spline: SplineSpec,
    pub harmonics: usize,
    /// Search interval for ω; defaults to one DFT bin either side of the
    /// initial guess.
    pub omega_bounds: Option<(f64, f64)>,
    pub omega_init: Option<f64>,
    pub max_iterations: usize,
    /// Relative convergence threshold on ω.
    pub tolerance: f64,
}

impl FitConfig {
    pub fn new(spline: SplineSpec, harmonics: usize) -> Self {
        Self {
            spline,
            harmonics,
            omega_bounds: None,
            omega_init: None,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.harmonics == 0 {
            return Err(Error::InvalidConfig("harmonics must be at least 1".into()));
        }
        if let Some((lo, hi)) = self.omega_bounds {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "omega bounds must satisfy 0 < lower < upper, got ({lo}, {hi})"
                )));
            }
        }
        if let Some(w) = self.omega_init {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "initial omega must be positive, got {w}"
                )));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Peak of the spline pre-fit residual spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialGuess {
    pub omega_init: f64,
    pub peak_bin: usize,
    /// Width of one DFT bin in radians per unit x, `2π / T`.
    pub bin_width: f64,
    /// Cycles per unit x for bins `0..=n/2`.
    pub frequencies: Vec<f64>,
    /// Unnormalized DFT magnitude of the residual per bin.
    pub magnitudes: Vec<f64>,
    pub residual: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub omega: f64,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub lower: f64,
    pub upper: f64,
}

/// Harmonic `k` written as `a·sin(kωx + φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicAmplitude {
    pub k: usize,
    pub amplitude: f64,
    pub phase: f64,
    /// Delta-method standard error of `amplitude`.
    pub amplitude_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub omega_hat: f64,
    pub omega_init: f64,
    pub gamma: DVector<f64>,
    pub alpha: DVector<f64>,
    pub beta: DVector<f64>,
    pub y_model: DVector<f64>,
    pub y_periodic: DVector<f64>,
    pub y_spline: DVector<f64>,
    pub residual: DVector<f64>,
    pub covariance: CovarianceReport,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega_hat
    }

    pub fn harmonic_amplitudes(&self) -> Vec<HarmonicAmplitude> {
        let cov = &self.covariance.covariance;
        (0..self.alpha.len() / 2)
            .map(|i| {
                let (s, c) = (self.alpha[2 * i], self.alpha[2 * i + 1]);
                let amplitude = s.hypot(c);
                let amplitude_se = if amplitude > 0.0 {
                    let (gs, gc) = (s / amplitude, c / amplitude);
                    let (i0, i1) = (2 * i, 2 * i + 1);
                    let var = gs * gs * cov[(i0, i0)]
                        + 2.0 * gs * gc * cov[(i0, i1)]
                        + gc * gc * cov[(i1, i1)];
                    var.max(0.0).sqrt()
                } else {
                    cov[(2 * i, 2 * i)]
                        .max(cov[(2 * i + 1, 2 * i + 1)])
                        .max(0.0)
                        .sqrt()
                };
                HarmonicAmplitude {
                    k: i + 1,
                    amplitude,
                    phase: c.atan2(s),
                    amplitude_se,
                }
            })
            .collect()
    }

    /// Largest harmonic amplitude in units of its standard error.
    pub fn max_amplitude_significance(&self) -> f64 {
        self.harmonic_amplitudes()
            .iter()
            .map(|h| {
                if h.amplitude_se > 0.0 {
                    h.amplitude / h.amplitude_se
                } else if h.amplitude > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Window length `T = n·Δx` of uniformly sampled `x`.
fn sample_window(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData { n, n_df: 2 });
    }
    let step = (x[n - 1] - x[0]) / (n - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::InvalidInput("x must be increasing".into()));
    }
    let deviation = x
        .windows(2)
        .map(|w| ((w[1] - w[0]) - step).abs() / step)
        .fold(0.0, f64::max);
    if deviation > UNIFORM_TOLERANCE {
        return Err(Error::NonUniformSampling { deviation });
    }
    Ok(step * n as f64)
}

/// Initial ω from the largest non-DC bin of the spline pre-fit residual.
pub fn initial_frequency(x: &[f64], y: &[f64], spline: &SplineSpec) -> Result<InitialGuess> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "x has {} samples but y has {}",
            x.len(),
            y.len()
        )));
    }
    if y.len() < 2 * spline.dim() {
        return Err(Error::InsufficientData {
            n: y.len(),
            n_df: 2 * spline.dim(),
        });
    }
    let window = sample_window(x)?;
    let bs = bspline_basis(x, spline)?;
    let residual: Vec<f64> = solve_linear(&bs, y)?.residual.iter().copied().collect();
    let magnitudes = one_sided_magnitudes(&residual);
    let frequencies: Vec<f64> = (0..magnitudes.len()).map(|k| k as f64 / window).collect();

    let (peak_bin, peak) =
        magnitudes
            .iter()
            .enumerate()
            .skip(1)
            .fold((0, f64::NEG_INFINITY), |best, (k, &m)| {
                if m > best.1 {
                    (k, m)
                } else {
                    best
                }
            });
    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if peak_bin == 0 || !(peak > 1e-12 * y_norm) {
        return Err(Error::NoPeriodicity);
    }
    Ok(InitialGuess {
        omega_init: 2.0 * PI * frequencies[peak_bin],
        peak_bin,
        bin_width: 2.0 * PI / window,
        frequencies,
        magnitudes,
        residual,
    })
}

/// Search interval around `omega_init`: the configured bounds or one DFT bin
/// either side, kept positive.
fn default_bracket(x: &[f64], config: &FitConfig, omega_init: f64) -> Result<(f64, f64)> {
    if let Some(bounds) = config.omega_bounds {
        return Ok(bounds);
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData { n, n_df: 2 });
    }
    let window = (x[n - 1] - x[0]) * n as f64 / (n - 1) as f64;
    let half = 2.0 * PI / window;
    Ok(((omega_init - half).max(0.5 * half), omega_init + half))
}

/// Local minimizer of the variable projection functional near `omega_init`.
///
/// The bracket is scanned at uniform probes; the best interior probe and its
/// neighbours are refined by Brent's golden-section/parabolic search until
/// the interval shrinks below `tolerance · |ω|`. A minimum at a bracket end
/// widens that end by one bracket width once before failing.
pub fn minimize_vpf(x: &[f64], y: &[f64], config: &FitConfig, omega_init: f64) -> Result<Minimum> {
    config.validate()?;
    if !(omega_init > 0.0 && omega_init.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "initial omega must be positive, got {omega_init}"
        )));
    }
    let problem = VpfProblem::new(x, y, config.harmonics, &config.spline)?;
    let (mut lower, mut upper) = default_bracket(x, config, omega_init)?;
    let y_energy = problem.y().norm_squared();

    let mut expanded = false;
    loop {
        let step = (upper - lower) / SCAN_INTERVALS as f64;
        let probes: Vec<f64> = (0..=SCAN_INTERVALS)
            .map(|i| lower + step * i as f64)
            .collect();
        let costs = probes
            .iter()
            .map(|&w| problem.cost(w))
            .collect::<Result<Vec<f64>>>()?;
        let (best, &best_cost) = costs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty scan");
        let worst_cost = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        // A cost flat to rounding has no minimizer worth refining.
        if worst_cost - best_cost <= 1e-12 * y_energy.max(f64::MIN_POSITIVE) {
            return Ok(Minimum {
                omega: probes[best],
                cost: best_cost,
                iterations: 0,
                converged: true,
                lower,
                upper,
            });
        }
        if best == 0 || best == SCAN_INTERVALS {
            if expanded {
                return Err(Error::NoInteriorMinimum { lower, upper });
            }
            expanded = true;
            let width = upper - lower;
            if best == 0 {
                lower = (lower - width).max(0.5 * lower);
            } else {
                upper += width;
            }
            continue;
        }

        let refined = brent_minimize(
            |w| problem.cost(w),
            probes[best - 1],
            probes[best + 1],
            probes[best],
            best_cost,
            config.tolerance,
            config.max_iterations,
        )?;
        return Ok(Minimum {
            omega: refined.x,
            cost: refined.fx,
            iterations: refined.iterations,
            converged: refined.converged,
            lower,
            upper,
        });
    }
}

struct BrentOutcome {
    x: f64,
    fx: f64,
    iterations: usize,
    converged: bool,
}

const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Brent's method on `[a, b]` starting from an interior point `x0`.
fn brent_minimize<F>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    x0: f64,
    f0: f64,
    rel_tol: f64,
    max_iterations: usize,
) -> Result<BrentOutcome>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut x, mut w, mut v) = (x0, x0, x0);
    let (mut fx, mut fw, mut fv) = (f0, f0, f0);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for iteration in 0..max_iterations {
        let mid = 0.5 * (a + b);
        let tol1 = rel_tol * x.abs() + 1e-15;
        let tol2 = 2.0 * tol1;
        if (x - mid).abs() <= tol2 - 0.5 * (b - a) {
            return Ok(BrentOutcome {
                x,
                fx,
                iterations: iteration,
                converged: true,
            });
        }

        let mut golden = true;
        if e.abs() > tol1 {
            // parabola through x, w, v
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if mid >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= mid { a - x } else { b - x };
            d = GOLDEN * e;
        }

        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = f(u)?;

        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            (v, fv) = (w, fw);
            (w, fw) = (x, fx);
            (x, fx) = (u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv) = (w, fw);
                (w, fw) = (u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    Ok(BrentOutcome {
        x,
        fx,
        iterations: max_iterations,
        converged: false,
    })
}

/// Full pipeline: initial frequency, minimization, linear solve, covariance.
pub fn fit(x: &[f64], y: &[f64], config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let omega_init = match config.omega_init {
        Some(w) => w,
        None => {
            initial_frequency(x, y, &config.spline)
                .map_err(|e| e.in_stage(Stage::InitialFrequency))?
                .omega_init
        }
    };
    let minimum =
        minimize_vpf(x, y, config, omega_init).map_err(|e| e.in_stage(Stage::Minimization))?;

    let problem = VpfProblem::new(x, y, config.harmonics, &config.spline)
        .map_err(|e| e.in_stage(Stage::LinearSolve))?;
    let basis = problem
        .basis(minimum.omega)
        .map_err(|e| e.in_stage(Stage::LinearSolve))?;
    let solution = solve_linear(&basis, y).map_err(|e| e.in_stage(Stage::LinearSolve))?;

    let n_alpha = 2 * config.harmonics;
    let alpha = solution.gamma.rows(0, n_alpha).into_owned();
    let beta = solution
        .gamma
        .rows(n_alpha, solution.gamma.len() - n_alpha)
        .into_owned();
    let y_periodic = basis.harmonic_part().values() * &alpha;
    let y_spline = basis.spline_part().values() * &beta;

    let noise = estimate_sigma2(solution.residual.as_slice(), solution.gamma.len())
        .map_err(|e| e.in_stage(Stage::Covariance))?;
    let covariance = covariance(&basis, noise).map_err(|e| e.in_stage(Stage::Covariance))?;

    Ok(FitResult {
        omega_hat: minimum.omega,
        omega_init,
        cost: solution.cost(),
        y_model: &y_periodic + &y_spline,
        gamma: solution.gamma,
        alpha,
        beta,
        y_periodic,
        y_spline,
        residual: solution.residual,
        covariance,
        iterations: minimum.iterations,
        converged: minimum.converged,
    })
}
