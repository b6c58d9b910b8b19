use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Magnitudes of the unnormalized DFT `X_k = Σ x_j e^{-2πi jk/n}` for the
/// one-sided bins `k = 0..=n/2`.
pub(crate) fn one_sided_magnitudes(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buffer: Vec<Complex<f64>> = signal.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);
    buffer.truncate(n / 2 + 1);
    buffer.into_iter().map(|c| c.norm()).collect()
}

/// Weight of one-sided bin `k` in Parseval's sum over all `n` bins.
pub(crate) fn parseval_weight(k: usize, n: usize) -> f64 {
    if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
        1.0
    } else {
        2.0
    }
}
