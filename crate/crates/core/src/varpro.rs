//! Least-squares solve, projection, the variable projection functional and
//! covariance propagation for the linear coefficients.

use nalgebra::{DMatrix, DVector, SVD};

use crate::basis::{
    assemble_basis, bspline_basis, harmonic_basis, BasisMatrix, HarmonicSpec, SplineSpec,
};
use crate::{Error, Result};

/// Linear coefficients of a fixed basis together with model and residual.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    pub gamma: DVector<f64>,
    pub model: DVector<f64>,
    pub residual: DVector<f64>,
}

impl LinearSolution {
    /// Squared residual norm.
    pub fn cost(&self) -> f64 {
        self.residual.norm_squared()
    }
}

/// Noise variance estimated from a residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEstimate {
    pub sigma2: f64,
    /// Parameter count: linear coefficients plus one for the frequency.
    pub n_df: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceReport {
    pub sigma2: f64,
    pub n_df: usize,
    pub covariance: DMatrix<f64>,
}

impl CovarianceReport {
    /// Square roots of the diagonal.
    pub fn standard_errors(&self) -> Vec<f64> {
        self.covariance
            .diagonal()
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .collect()
    }
}

// Singular values below max_sv * rows * eps count as zero.
fn checked_svd(basis: &DMatrix<f64>) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let (rows, cols) = basis.shape();
    if cols == 0 {
        return Err(Error::DimensionMismatch("basis has no columns".into()));
    }
    if rows < cols {
        return Err(Error::DimensionMismatch(format!(
            "underdetermined system: {rows} rows for {cols} columns"
        )));
    }
    let svd = SVD::new(basis.clone(), true, true);
    let max_sv = svd.singular_values.max();
    let min_sv = svd.singular_values.min();
    let threshold = max_sv * rows as f64 * f64::EPSILON;
    if !(min_sv > threshold) {
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > threshold)
            .count();
        return Err(Error::RankDeficient {
            rows,
            cols,
            rank,
            smallest: min_sv,
            threshold,
        });
    }
    Ok(svd)
}

fn check_rhs(basis: &BasisMatrix, y: &[f64]) -> Result<()> {
    if basis.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} rows but y has {} samples",
            basis.nrows(),
            y.len()
        )));
    }
    Ok(())
}

fn solve_values(values: &DMatrix<f64>, y: &DVector<f64>) -> Result<LinearSolution> {
    let svd = checked_svd(values)?;
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let coords = u.tr_mul(y);
    // U·Uᵀy keeps the projection accurate when B is ill-conditioned
    let model = u * &coords;
    let gamma = v_t.tr_mul(&coords.component_div(&svd.singular_values));
    let residual = y - &model;
    Ok(LinearSolution {
        gamma,
        model,
        residual,
    })
}

/// Least-squares coefficients of `y` in the column space of `basis`.
pub fn solve_linear(basis: &BasisMatrix, y: &[f64]) -> Result<LinearSolution> {
    check_rhs(basis, y)?;
    solve_values(basis.values(), &DVector::from_column_slice(y))
}

/// Orthogonal projection of `y` onto the column space of `basis`.
pub fn project(basis: &BasisMatrix, y: &[f64]) -> Result<DVector<f64>> {
    Ok(solve_linear(basis, y)?.model)
}

/// Cost `‖y − B(ω)B⁺(ω)y‖²` with the spline part of `B` fixed.
///
/// Holds the spline basis so repeated evaluations only rebuild the harmonic
/// columns.
#[derive(Debug, Clone)]
pub struct VpfProblem<'a> {
    x: &'a [f64],
    y: DVector<f64>,
    harmonics: usize,
    spline: BasisMatrix,
}

impl<'a> VpfProblem<'a> {
    pub fn new(x: &'a [f64], y: &[f64], harmonics: usize, spline: &SplineSpec) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "x has {} samples but y has {}",
                x.len(),
                y.len()
            )));
        }
        if harmonics == 0 {
            return Err(Error::InvalidHarmonic("need at least one harmonic".into()));
        }
        Ok(Self {
            x,
            y: DVector::from_column_slice(y),
            harmonics,
            spline: bspline_basis(x, spline)?,
        })
    }

    pub fn x(&self) -> &[f64] {
        self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn harmonics(&self) -> usize {
        self.harmonics
    }

    pub fn basis(&self, omega: f64) -> Result<BasisMatrix> {
        let h = HarmonicSpec::new(omega, self.harmonics)?;
        harmonic_basis(self.x, &h).hstack(&self.spline)
    }

    pub fn solve(&self, omega: f64) -> Result<LinearSolution> {
        self.basis(omega)
            .and_then(|b| solve_values(b.values(), &self.y))
            .map_err(|e| e.at_omega(omega))
    }

    pub fn cost(&self, omega: f64) -> Result<f64> {
        Ok(self.solve(omega)?.cost())
    }
}

/// Variable projection functional at `omega`.
pub fn vpf_cost(
    omega: f64,
    x: &[f64],
    y: &[f64],
    harmonics: usize,
    spline: &SplineSpec,
) -> Result<f64> {
    let h = HarmonicSpec::new(omega, harmonics).map_err(|e| e.at_omega(omega))?;
    let basis = assemble_basis(x, &h, spline).map_err(|e| e.at_omega(omega))?;
    check_rhs(&basis, y)?;
    solve_values(basis.values(), &DVector::from_column_slice(y))
        .map(|s| s.cost())
        .map_err(|e| e.at_omega(omega))
}

/// Noise variance `‖r‖² / (n − n_df)` with `n_df = n_linear + 1`.
pub fn estimate_sigma2(residual: &[f64], n_linear: usize) -> Result<NoiseEstimate> {
    let n_df = n_linear + 1;
    let n = residual.len();
    if n <= n_df {
        return Err(Error::InsufficientData { n, n_df });
    }
    let ss: f64 = residual.iter().map(|r| r * r).sum();
    Ok(NoiseEstimate {
        sigma2: ss / (n - n_df) as f64,
        n_df,
    })
}

/// `σ² B⁺ (B⁺)ᵀ` for a full-column-rank basis.
pub fn covariance(basis: &BasisMatrix, noise: NoiseEstimate) -> Result<CovarianceReport> {
    let svd = checked_svd(basis.values())?;
    let pinv = svd
        .pseudo_inverse(0.0)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut cov = &pinv * pinv.transpose() * noise.sigma2;
    // the product is symmetric up to rounding; mirror the upper triangle
    cov.fill_lower_triangle_with_upper_triangle();
    Ok(CovarianceReport {
        sigma2: noise.sigma2,
        n_df: noise.n_df,
        covariance: cov,
    })
}
