//! Evaluation matrices for the clamped B-spline trend basis and the harmonic
//! periodic basis.

use std::fmt;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Degree and breakpoints of the trend subspace.
///
/// The breakpoints include both interval endpoints. The clamped basis built
/// from them has `breakpoints.len() + degree - 1` functions.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineSpec {
    degree: usize,
    breakpoints: Vec<f64>,
}

impl SplineSpec {
    pub fn new(degree: usize, breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidSpline(format!(
                "need at least 2 breakpoints, got {}",
                breakpoints.len()
            )));
        }
        if let Some(bad) = breakpoints.iter().find(|b| !b.is_finite()) {
            return Err(Error::InvalidSpline(format!("non-finite breakpoint {bad}")));
        }
        if let Some(i) = breakpoints.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpline(format!(
                "breakpoints must be strictly increasing: {} at index {} is followed by {}",
                breakpoints[i],
                i,
                breakpoints[i + 1]
            )));
        }
        Ok(Self {
            degree,
            breakpoints,
        })
    }

    /// `count` equally spaced breakpoints spanning `[lower, upper]`.
    pub fn uniform(degree: usize, count: usize, lower: f64, upper: f64) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidSpline(format!(
                "need at least 2 breakpoints, got {count}"
            )));
        }
        let step = (upper - lower) / (count - 1) as f64;
        let mut breakpoints: Vec<f64> = (0..count).map(|i| lower + step * i as f64).collect();
        breakpoints[count - 1] = upper;
        Self::new(degree, breakpoints)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn lower(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn upper(&self) -> f64 {
        self.breakpoints[self.breakpoints.len() - 1]
    }

    /// Number of basis functions, `len(breakpoints) + degree - 1`.
    pub fn dim(&self) -> usize {
        self.breakpoints.len() + self.degree - 1
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower() && x <= self.upper()
    }
}

/// Base frequency and number of harmonics of the periodic subspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicSpec {
    omega: f64,
    harmonics: usize,
}

impl HarmonicSpec {
    pub fn new(omega: f64, harmonics: usize) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidHarmonic(format!(
                "omega must be positive and finite, got {omega}"
            )));
        }
        if harmonics == 0 {
            return Err(Error::InvalidHarmonic("need at least one harmonic".into()));
        }
        Ok(Self { omega, harmonics })
    }

    /// Radians per unit of x.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn harmonics(&self) -> usize {
        self.harmonics
    }

    pub fn dim(&self) -> usize {
        2 * self.harmonics
    }
}

/// Origin of a basis column. Indices are 1-based, as in the coefficient
/// names `α₁..α₂ᵥ` and `β₁..βₙ`; monomials carry their exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnLabel {
    Sin(usize),
    Cos(usize),
    Spline(usize),
    Monomial(usize),
}

impl ColumnLabel {
    pub fn is_harmonic(&self) -> bool {
        matches!(self, ColumnLabel::Sin(_) | ColumnLabel::Cos(_))
    }

    pub fn is_spline(&self) -> bool {
        matches!(self, ColumnLabel::Spline(_))
    }
}

impl fmt::Display for ColumnLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnLabel::Sin(k) => write!(f, "sin{k}"),
            ColumnLabel::Cos(k) => write!(f, "cos{k}"),
            ColumnLabel::Spline(j) => write!(f, "b{j}"),
            ColumnLabel::Monomial(p) => write!(f, "x^{p}"),
        }
    }
}

/// Dense column-stacked evaluation of basis functions at sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrix {
    values: DMatrix<f64>,
    labels: Vec<ColumnLabel>,
}

impl BasisMatrix {
    pub fn new(values: DMatrix<f64>, labels: Vec<ColumnLabel>) -> Result<Self> {
        if values.ncols() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} columns but {} labels",
                values.ncols(),
                labels.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "basis matrix has non-finite entries".into(),
            ));
        }
        Ok(Self { values, labels })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn labels(&self) -> &[ColumnLabel] {
        &self.labels
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &BasisMatrix) -> Result<BasisMatrix> {
        if self.nrows() != other.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "cannot concatenate {} rows with {} rows",
                self.nrows(),
                other.nrows()
            )));
        }
        let mut values = DMatrix::zeros(self.nrows(), self.ncols() + other.ncols());
        values.columns_mut(0, self.ncols()).copy_from(&self.values);
        values
            .columns_mut(self.ncols(), other.ncols())
            .copy_from(&other.values);
        let labels = self.labels.iter().chain(&other.labels).copied().collect();
        Ok(BasisMatrix { values, labels })
    }

    /// Columns whose label satisfies `keep`, in their original order.
    pub fn select(&self, keep: impl Fn(&ColumnLabel) -> bool) -> BasisMatrix {
        let idx: Vec<usize> = (0..self.ncols())
            .filter(|&j| keep(&self.labels[j]))
            .collect();
        BasisMatrix {
            values: self.values.select_columns(&idx),
            labels: idx.iter().map(|&j| self.labels[j]).collect(),
        }
    }

    pub fn harmonic_part(&self) -> BasisMatrix {
        self.select(ColumnLabel::is_harmonic)
    }

    pub fn spline_part(&self) -> BasisMatrix {
        self.select(ColumnLabel::is_spline)
    }
}

/// Breakpoints with the first and last repeated `degree + 1` times.
pub fn clamped_knot_vector(spec: &SplineSpec) -> Vec<f64> {
    let bp = spec.breakpoints();
    let p = spec.degree();
    let mut knots = Vec::with_capacity(bp.len() + 2 * p);
    knots.extend(std::iter::repeat_n(bp[0], p));
    knots.extend_from_slice(bp);
    knots.extend(std::iter::repeat_n(bp[bp.len() - 1], p));
    knots
}

/// Clamped B-spline basis of `spec` evaluated at every `x`.
///
/// The last knot interval is closed on the right, so the final basis function
/// is 1 at the last breakpoint.
pub fn bspline_basis(x: &[f64], spec: &SplineSpec) -> Result<BasisMatrix> {
    if let Some(&bad) = x.iter().find(|&&xi| !spec.contains(xi)) {
        return Err(Error::OutOfDomain {
            x: bad,
            lower: spec.lower(),
            upper: spec.upper(),
        });
    }
    let knots = clamped_knot_vector(spec);
    let p = spec.degree();
    let dim = spec.dim();
    let bp = spec.breakpoints();
    let last_segment = bp.len() - 2;

    let mut values = DMatrix::zeros(x.len(), dim);
    let mut local = vec![0.0; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    for (row, &xi) in x.iter().enumerate() {
        // segment s with bp[s] <= xi < bp[s+1]; the last one is right-closed
        let segment = bp
            .partition_point(|&b| b <= xi)
            .saturating_sub(1)
            .min(last_segment);
        let span = segment + p;
        basis_funs(&knots, span, p, xi, &mut local, &mut left, &mut right);
        for (r, &v) in local.iter().enumerate() {
            values[(row, span - p + r)] = v;
        }
    }
    let labels = (1..=dim).map(ColumnLabel::Spline).collect();
    Ok(BasisMatrix { values, labels })
}

// Triangular Cox-de Boor evaluation of the p+1 functions nonzero on `span`.
fn basis_funs(
    knots: &[f64],
    span: usize,
    p: usize,
    x: f64,
    out: &mut [f64],
    left: &mut [f64],
    right: &mut [f64],
) {
    out[0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = out[r] / (right[r + 1] + left[j - r]);
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
}

/// Columns `[sin(kωx), cos(kωx)]` for `k = 1..=harmonics`.
pub fn harmonic_basis(x: &[f64], spec: &HarmonicSpec) -> BasisMatrix {
    let nu = spec.harmonics();
    let mut values = DMatrix::zeros(x.len(), 2 * nu);
    for (row, &xi) in x.iter().enumerate() {
        for k in 1..=nu {
            let (s, c) = (k as f64 * spec.omega() * xi).sin_cos();
            values[(row, 2 * (k - 1))] = s;
            values[(row, 2 * (k - 1) + 1)] = c;
        }
    }
    let labels = (1..=nu)
        .flat_map(|k| [ColumnLabel::Sin(k), ColumnLabel::Cos(k)])
        .collect();
    BasisMatrix { values, labels }
}

/// The full model basis `[B_p | B_s]`.
pub fn assemble_basis(x: &[f64], hspec: &HarmonicSpec, sspec: &SplineSpec) -> Result<BasisMatrix> {
    let spline = bspline_basis(x, sspec)?;
    harmonic_basis(x, hspec).hstack(&spline)
}
