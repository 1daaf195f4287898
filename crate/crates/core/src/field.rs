//! Sampled transverse plane and the fields that live on it.
//!
//! A [`TransverseGrid`] with `n` intervals per axis carries `n + 1` samples
//! per axis at `x_j = (j - n/2)·h`, `h = 2L/n`, so the grid spans `[-L, L]`
//! inclusively. Because `n` is even the origin is a sample and every sample
//! has its point reflection on the grid, which keeps parity operations exact.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid intervals per axis must be even and >= 8 (got {0})")]
    BadSize(usize),
    #[error("grid extent must be positive and finite (got {0})")]
    BadExtent(f64),
    #[error("grid spacing {spacing:e} m does not resolve feature scale {feature:e} m")]
    Unresolved { spacing: f64, feature: f64 },
    #[error("field has {got} samples, grid expects {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("non-finite sample at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("fields live on different grids")]
    Mismatch,
}

/// Square, uniform sampling of the transverse plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseGrid {
    n: usize,
    extent: f64,
}

impl TransverseGrid {
    /// `n` intervals per axis (even, >= 8) over the half-width `extent` in meters.
    pub fn new(n: usize, extent: f64) -> Result<Self, GridError> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(GridError::BadSize(n));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(GridError::BadExtent(extent));
        }
        Ok(Self { n, extent })
    }

    /// Intervals per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Samples per axis (`n + 1`).
    pub fn side(&self) -> usize {
        self.n + 1
    }

    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.n as f64
    }

    /// Index of the on-axis sample along either axis.
    pub fn center(&self) -> usize {
        self.n / 2
    }

    /// Coordinate of sample `j` along an axis.
    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.spacing()
    }

    /// `(x, y)` of the sample at `(row, col)`; rows run along y, columns along x.
    pub fn position(&self, row: usize, col: usize) -> (f64, f64) {
        (self.coord(col), self.coord(row))
    }

    pub fn radius(&self, row: usize, col: usize) -> f64 {
        let (x, y) = self.position(row, col);
        x.hypot(y)
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.side() + col
    }

    /// Flat index of the point reflection `ρ → −ρ` of flat index `idx`.
    pub fn reflect(&self, idx: usize) -> usize {
        self.len() - 1 - idx
    }

    /// Checks that the spacing resolves a feature of the given scale.
    pub fn check_resolves(&self, feature: f64) -> Result<(), GridError> {
        if self.spacing() < feature {
            Ok(())
        } else {
            Err(GridError::Unresolved {
                spacing: self.spacing(),
                feature,
            })
        }
    }
}

/// Values sampled on a [`TransverseGrid`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: TransverseGrid,
    values: Vec<T>,
}

pub type RealField = Field<f64>;
pub type ComplexField = Field<Complex64>;

/// Finiteness check for sample types.
pub trait Sample: Copy {
    fn is_finite_sample(&self) -> bool;
}

impl Sample for f64 {
    fn is_finite_sample(&self) -> bool {
        self.is_finite()
    }
}

impl Sample for Complex64 {
    fn is_finite_sample(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl<T> Field<T> {
    /// Wraps values without the finiteness check. Used for masks and counts.
    pub fn from_raw(grid: TransverseGrid, values: Vec<T>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::WrongLength {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn at(&self, row: usize, col: usize) -> &T {
        &self.values[self.grid.index(row, col)]
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Field<U> {
        Field {
            grid: self.grid,
            values: self.values.iter().map(f).collect(),
        }
    }

    pub fn same_grid<U>(&self, other: &Field<U>) -> Result<(), GridError> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(GridError::Mismatch)
        }
    }
}

impl<T: Sample> Field<T> {
    pub fn new(grid: TransverseGrid, values: Vec<T>) -> Result<Self, GridError> {
        let field = Self::from_raw(grid, values)?;
        if let Some(i) = field.values.iter().position(|v| !v.is_finite_sample()) {
            let side = grid.side();
            return Err(GridError::NonFinite {
                row: i / side,
                col: i % side,
            });
        }
        Ok(field)
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn(grid: TransverseGrid, f: impl Fn(f64, f64) -> T) -> Result<Self, GridError> {
        let side = grid.side();
        let values = (0..grid.len())
            .map(|i| {
                let (x, y) = grid.position(i / side, i % side);
                f(x, y)
            })
            .collect();
        Self::new(grid, values)
    }

    /// The field evaluated at `−ρ`.
    pub fn reflected(&self) -> Self {
        let values = (0..self.values.len())
            .map(|i| self.values[self.grid.reflect(i)])
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }
}

impl Field<f64> {
    pub fn filled(grid: TransverseGrid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn to_complex(&self) -> ComplexField {
        self.map(|&v| Complex64::new(v, 0.0))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Flat index of the smallest sample (first one on ties).
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v < self.values[best] {
                best = i;
            }
        }
        best
    }
}

impl Field<Complex64> {
    pub fn zeros(grid: TransverseGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// `true` when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn real_part(&self) -> RealField {
        self.map(|v| v.re)
    }

    /// Grid quadrature of `|f|²`.
    pub fn norm_sqr(&self) -> f64 {
        let h = self.grid.spacing();
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * h * h
    }

    /// Relative L² distance `‖self − other‖ / ‖other‖`.
    pub fn relative_l2(&self, other: &Self) -> f64 {
        let num: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = other.values.iter().map(|v| v.norm_sqr()).sum();
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }

    /// `‖f_odd‖² / ‖f‖²`, or 0 for the zero field.
    pub fn odd_fraction(&self) -> f64 {
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let odd: f64 = (0..self.values.len())
            .map(|i| ((self.values[i] - self.values[self.grid.reflect(i)]) * 0.5).norm_sqr())
            .sum();
        odd / total
    }
}
