use std::f64::consts::PI;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use varpro_trend::analysis::{generate_synthetic, SyntheticSpec};
use varpro_trend::basis::{assemble_basis, HarmonicSpec, SplineSpec};
use varpro_trend::optimizer::{fit, initial_frequency, FitConfig};
use varpro_trend::varpro::{covariance, estimate_sigma2, solve_linear};

fn preset_config() -> FitConfig {
    let spec = SyntheticSpec::paper_preset(0);
    FitConfig::new(spec.spline.clone(), spec.harmonic_amplitudes.len())
}

#[test]
fn initial_guess_within_one_bin_across_frequencies() {
    for (i, cycles) in [4.2, 6.0, 9.5, 13.7, 21.1, 40.4].into_iter().enumerate() {
        let mut spec = SyntheticSpec::paper_preset(100 + i as u64);
        spec.omega_true = 2.0 * PI * cycles;
        let data = generate_synthetic(&spec).unwrap();
        let guess = initial_frequency(&data.x, &data.y, &spec.spline).unwrap();
        assert!(
            (guess.omega_init - spec.omega_true).abs() <= guess.bin_width,
            "{cycles} cycles: init {}",
            guess.omega_init
        );
    }
}

#[test]
fn recovered_components_track_truth() {
    let spec = SyntheticSpec::paper_preset(11);
    let data = generate_synthetic(&spec).unwrap();
    let f = fit(&data.x, &data.y, &preset_config()).unwrap();
    let rms = |a: &[f64], b: &[f64]| {
        (a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
    };
    // a fraction of the noise level
    assert!(rms(f.y_spline.as_slice(), &data.trend) < 0.5 * spec.noise_sigma);
    assert!(rms(f.y_periodic.as_slice(), &data.periodic) < 0.5 * spec.noise_sigma);
    for (k, &(s, c)) in spec.harmonic_amplitudes.iter().enumerate() {
        assert!((f.alpha[2 * k] - s).abs() < 0.05, "sin{}", k + 1);
        assert!((f.alpha[2 * k + 1] - c).abs() < 0.05, "cos{}", k + 1);
    }
}

// Over repeated noise draws at a fixed basis the estimator is unbiased and
// the noise variance estimate averages to the truth.
#[test]
fn linear_estimates_are_unbiased() {
    let x: Vec<f64> = (0..128).map(|i| i as f64 / 128.0).collect();
    let spline = SplineSpec::new(1, vec![0.0, 0.5, 1.0]).unwrap();
    let basis =
        assemble_basis(&x, &HarmonicSpec::new(2.0 * PI * 5.4, 2).unwrap(), &spline).unwrap();
    let gamma = DVector::from_vec(vec![1.0, 0.5, -0.3, 0.2, 0.4, -1.0, 0.7]);
    let clean = basis.values() * &gamma;
    let sigma = 0.2;
    let dist = Normal::new(0.0, sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let draws = 2000;
    let mut mean = DVector::zeros(gamma.len());
    let mut sigma2_mean = 0.0;
    for _ in 0..draws {
        let y: Vec<f64> = clean.iter().map(|v| v + dist.sample(&mut rng)).collect();
        let sol = solve_linear(&basis, &y).unwrap();
        mean += &sol.gamma / draws as f64;
        // frequency held fixed here, so no extra parameter
        let n_df = gamma.len();
        let rss = sol.residual.norm_squared();
        sigma2_mean += rss / (x.len() - n_df) as f64 / draws as f64;
    }
    let cov = covariance(
        &basis,
        varpro_trend::varpro::NoiseEstimate {
            sigma2: sigma * sigma,
            n_df: gamma.len() + 1,
        },
    )
    .unwrap();
    for (i, se) in cov.standard_errors().iter().enumerate() {
        let se_mean = se / (draws as f64).sqrt();
        assert!(
            (mean[i] - gamma[i]).abs() < 4.0 * se_mean,
            "coefficient {i}"
        );
    }
    assert!((sigma2_mean / (sigma * sigma) - 1.0).abs() < 0.03);
}

#[test]
fn noise_estimate_tracks_generator_sigma() {
    for sigma in [0.01, 0.05, 0.2] {
        let mut spec = SyntheticSpec::paper_preset(31);
        spec.noise_sigma = sigma;
        let data = generate_synthetic(&spec).unwrap();
        let f = fit(&data.x, &data.y, &preset_config()).unwrap();
        let est = estimate_sigma2(f.residual.as_slice(), f.gamma.len()).unwrap();
        assert_eq!(
            est,
            varpro_trend::varpro::NoiseEstimate {
                sigma2: f.covariance.sigma2,
                n_df: f.covariance.n_df
            }
        );
        let ratio = est.sigma2.sqrt() / sigma;
        assert!((0.9..1.1).contains(&ratio), "sigma {sigma}: ratio {ratio}");
    }
}

#[test]
fn fit_is_deterministic() {
    let data = generate_synthetic(&SyntheticSpec::paper_preset(4)).unwrap();
    let a = fit(&data.x, &data.y, &preset_config()).unwrap();
    let b = fit(&data.x, &data.y, &preset_config()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn concurrent_fits_match_sequential() {
    let datasets: Vec<_> = (0..4)
        .map(|s| generate_synthetic(&SyntheticSpec::paper_preset(s)).unwrap())
        .collect();
    let config = preset_config();
    let sequential: Vec<_> = datasets
        .iter()
        .map(|d| fit(&d.x, &d.y, &config).unwrap())
        .collect();
    let parallel: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = datasets
            .iter()
            .map(|d| scope.spawn(|| fit(&d.x, &d.y, &config).unwrap()))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(sequential, parallel);
}
