//! Object-to-image field maps through the amplifier and the 4f telescope.
//!
//! Both geometries produce an image of the form
//!
//! ```text
//! e(ρ) = (1/λf) ∫ dρ' ℘(ρ − ρ') [U·s(ρ') + V·s*(ρ')]
//! ```
//!
//! where ℘ is the Fourier transform of the pupil. For the planar cavity U and
//! V vary with position; for the confocal cavity they are scalars acting on
//! the even part of the object only.
//!
//! The convolution is linear (zero padded to `2N − 1` samples per axis and
//! cropped back), evaluated by FFT. [`direct_convolution_oracle`] computes
//! the same sum by brute force for verification.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::field::{ComplexField, GridError, TransverseGrid};
use crate::params::{
    CavityParams, Geometry, OpticalTrain, PupilSpec, ValidityCheck, DEFAULT_VALIDITY_THRESHOLD,
};
use crate::transfer::{self, Mismatch, TransferError, TransferPair};

/// Largest grid (intervals per axis) the O(n⁴) oracle accepts.
pub const ORACLE_MAX_N: usize = 64;

/// Odd-component weight above which confocal amplification reports a discard.
pub const ODD_WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagationError {
    #[error("grid spacing {spacing:e} m under-resolves the pupil kernel (need <= {required:e} m)")]
    UnderResolvedKernel { spacing: f64, required: f64 },
    #[error("oracle grid n = {0} exceeds the limit of {ORACLE_MAX_N}")]
    GridTooLargeForOracle(usize),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Sampled or analytic impulse response of the imaging pupil.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// Infinite pupil: ℘ = λf·δ(ρ), applied analytically.
    Delta,
    Sampled(ComplexField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    pub pupil: PupilSpec,
    pub lambda_f: f64,
    pub kernel: Kernel,
}

impl ImpulseResponse {
    /// `(1/λf)·(℘ ⊛ source)` on the source grid.
    pub fn apply(&self, source: &ComplexField) -> Result<ComplexField, PropagationError> {
        match &self.kernel {
            Kernel::Delta => Ok(source.clone()),
            Kernel::Sampled(k) => {
                let conv = fft_convolve(k, source)?;
                let scale = 1.0 / self.lambda_f;
                Ok(conv.map(|v| v * scale))
            }
        }
    }
}

/// sin(πu)/(πu).
fn sinc(u: f64) -> f64 {
    if u == 0.0 {
        1.0
    } else {
        let a = PI * u;
        a.sin() / a
    }
}

/// Closed-form ℘(x, y) = (1/λf) ∫ dξ 𝒫(ξ) exp(−i2π ρ·ξ/(λf)) for a finite pupil.
pub fn pupil_kernel_value(pupil: &PupilSpec, lambda_f: f64, x: f64, y: f64) -> Option<f64> {
    match *pupil {
        PupilSpec::InfiniteIdeal => None,
        PupilSpec::Square { side } => {
            Some(side * side * sinc(side * x / lambda_f) * sinc(side * y / lambda_f) / lambda_f)
        }
        PupilSpec::Circular { radius } => {
            let ka = 2.0 * PI * x.hypot(y) * radius / lambda_f;
            let airy = if ka == 0.0 { 0.5 } else { libm::j1(ka) / ka };
            Some(2.0 * PI * radius * radius * airy / lambda_f)
        }
    }
}

/// Samples the pupil's impulse response on `grid`.
pub fn impulse_response(
    pupil: &PupilSpec,
    train: &OpticalTrain,
    grid: &TransverseGrid,
) -> Result<ImpulseResponse, PropagationError> {
    let lambda_f = train.lambda_f();
    let kernel = match pupil.width() {
        None => Kernel::Delta,
        Some(width) => {
            let required = lambda_f / width / 4.0;
            let spacing = grid.spacing();
            if spacing > required * (1.0 + 1e-12) {
                return Err(PropagationError::UnderResolvedKernel { spacing, required });
            }
            let field = ComplexField::from_fn(*grid, |x, y| {
                let v = pupil_kernel_value(pupil, lambda_f, x, y).expect("finite pupil");
                Complex64::new(v, 0.0)
            })?;
            Kernel::Sampled(field)
        }
    };
    Ok(ImpulseResponse {
        pupil: *pupil,
        lambda_f,
        kernel,
    })
}

fn fft_2d(data: &mut [Complex64], size: usize, planner: &mut FftPlanner<f64>, inverse: bool) {
    let fft = if inverse {
        planner.plan_fft_inverse(size)
    } else {
        planner.plan_fft_forward(size)
    };
    for row in data.chunks_exact_mut(size) {
        fft.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); size];
    for c in 0..size {
        for r in 0..size {
            column[r] = data[r * size + c];
        }
        fft.process(&mut column);
        for r in 0..size {
            data[r * size + c] = column[r];
        }
    }
}

/// Linear convolution `h²·Σ_j K(ρ_i − ρ_j)·g(ρ_j)` cropped to the field's grid.
///
/// The kernel is sampled on the same grid, centered on the origin sample.
pub fn fft_convolve(kernel: &ComplexField, field: &ComplexField) -> Result<ComplexField, PropagationError> {
    kernel.same_grid(field)?;
    let grid = *field.grid();
    let side = grid.side();
    let padded = 2 * side - 1;
    let mut planner = FftPlanner::new();

    let pad = |src: &ComplexField| {
        let mut buf = vec![Complex64::new(0.0, 0.0); padded * padded];
        for (r, row) in src.values().chunks_exact(side).enumerate() {
            buf[r * padded..r * padded + side].copy_from_slice(row);
        }
        buf
    };
    let mut k = pad(kernel);
    let mut g = pad(field);
    fft_2d(&mut k, padded, &mut planner, false);
    fft_2d(&mut g, padded, &mut planner, false);
    for (a, b) in g.iter_mut().zip(&k) {
        *a *= b;
    }
    fft_2d(&mut g, padded, &mut planner, true);

    let h = grid.spacing();
    let scale = h * h / (padded * padded) as f64;
    let c = grid.center();
    let mut out = Vec::with_capacity(grid.len());
    for r in 0..side {
        let start = (r + c) * padded + c;
        out.extend(g[start..start + side].iter().map(|v| v * scale));
    }
    Ok(ComplexField::from_raw(grid, out)?)
}

/// Brute-force evaluation of the same sum as [`fft_convolve`].
pub fn direct_convolution_oracle(kernel: &ComplexField, field: &ComplexField) -> Result<ComplexField, PropagationError> {
    kernel.same_grid(field)?;
    let grid = *field.grid();
    if grid.n() > ORACLE_MAX_N {
        return Err(PropagationError::GridTooLargeForOracle(grid.n()));
    }
    let side = grid.side() as isize;
    let c = grid.center() as isize;
    let h = grid.spacing();
    let kv = kernel.values();
    let gv = field.values();
    let out: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|o| {
            let (or, oc) = (o as isize / side, o as isize % side);
            let mut acc = Complex64::new(0.0, 0.0);
            for jr in 0..side {
                let kr = or - jr + c;
                if !(0..side).contains(&kr) {
                    continue;
                }
                for jc in 0..side {
                    let kc = oc - jc + c;
                    if !(0..side).contains(&kc) {
                        continue;
                    }
                    acc += kv[(kr * side + kc) as usize] * gv[(jr * side + jc) as usize];
                }
            }
            acc * (h * h)
        })
        .collect();
    Ok(ComplexField::from_raw(grid, out)?)
}

/// Even part `[s(ρ) + s(−ρ)]/2`.
pub fn even_projection(field: &ComplexField) -> ComplexField {
    let reflected = field.reflected();
    let values = field
        .values()
        .iter()
        .zip(reflected.values())
        .map(|(a, b)| (a + b) * 0.5)
        .collect();
    ComplexField::from_raw(*field.grid(), values).expect("same grid")
}

/// Transfer coefficients used for an amplification.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    Pointwise { u: ComplexField, v: ComplexField },
    Scalar(TransferPair),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    /// Image-plane field e(ρ, Ω = 0) on the object grid.
    pub image: ComplexField,
    pub geometry: Geometry,
    pub coefficients: Coefficients,
    /// Validity of neglecting the residual noise terms, at the default threshold.
    pub validity: ValidityCheck,
    /// `false` when the object had nonzero imaginary parts; the closed-form
    /// detection statistics assume a real amplitude.
    pub mean_field_exact: bool,
    /// Relative L² weight of the odd object component dropped by the
    /// confocal amplifier, when above [`ODD_WEIGHT_TOLERANCE`].
    pub odd_discarded: Option<f64>,
}

fn mix(u: Complex64, v: Complex64, s: Complex64) -> Complex64 {
    u * s + v * s.conj()
}

fn validity_for(object: &ComplexField, cavity: &CavityParams, train: &OpticalTrain) -> ValidityCheck {
    let peak = object.values().iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    ValidityCheck::evaluate(peak, train, cavity, DEFAULT_VALIDITY_THRESHOLD).expect("valid peak flux")
}

/// Planar cavity: position-dependent U(ρ, 0), V(ρ, 0) followed by the pupil blur.
pub fn amplify_planar(
    object: &ComplexField,
    cavity: &CavityParams,
    train: &OpticalTrain,
) -> Result<PropagationResult, PropagationError> {
    let grid = *object.grid();
    let ir = impulse_response(&train.pupil(), train, &grid)?;
    let side = grid.side();
    let pairs = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (x, y) = grid.position(i / side, i % side);
            let rho = x.hypot(y);
            let m = Mismatch::planar(cavity.detuning(), rho, train.rho0(), 0.0);
            transfer::transfer_pair(&m, &m, cavity.pump()).map_err(|e| TransferError::SingularAt {
                x,
                y,
                source: Box::new(e),
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let u = ComplexField::from_raw(grid, pairs.iter().map(|p| p.u).collect())?;
    let v = ComplexField::from_raw(grid, pairs.iter().map(|p| p.v).collect())?;
    let source = ComplexField::from_raw(
        grid,
        object
            .values()
            .iter()
            .zip(&pairs)
            .map(|(s, p)| mix(p.u, p.v, *s))
            .collect(),
    )?;
    Ok(PropagationResult {
        image: ir.apply(&source)?,
        geometry: Geometry::Planar,
        coefficients: Coefficients::Pointwise { u, v },
        validity: validity_for(object, cavity, train),
        mean_field_exact: object.is_real(),
        odd_discarded: None,
    })
}

/// Confocal cavity: scalar U(0), V(0) acting on the even part of the object.
pub fn amplify_confocal(
    object: &ComplexField,
    cavity: &CavityParams,
    train: &OpticalTrain,
) -> Result<PropagationResult, PropagationError> {
    let grid = *object.grid();
    let ir = impulse_response(&train.pupil(), train, &grid)?;
    let m = Mismatch::confocal(cavity.detuning(), 0.0);
    let pair = transfer::transfer_pair(&m, &m, cavity.pump())?;
    let odd = object.odd_fraction();
    let even = even_projection(object);
    let source = even.map(|s| mix(pair.u, pair.v, *s));
    Ok(PropagationResult {
        image: ir.apply(&source)?,
        geometry: Geometry::Confocal,
        coefficients: Coefficients::Scalar(pair),
        validity: validity_for(object, cavity, train),
        mean_field_exact: object.is_real(),
        odd_discarded: (odd > ODD_WEIGHT_TOLERANCE).then_some(odd),
    })
}

/// Dispatches on the cavity geometry.
pub fn amplify(
    object: &ComplexField,
    cavity: &CavityParams,
    train: &OpticalTrain,
) -> Result<PropagationResult, PropagationError> {
    match cavity.geometry() {
        Geometry::Planar => amplify_planar(object, cavity, train),
        Geometry::Confocal => amplify_confocal(object, cavity, train),
    }
}
