//! Physical parameters, derived optical scales and regime checks.
//!
//! Detunings and analysis frequencies are dimensionless, in units of the
//! cavity decay rate γ. Transverse lengths are in meters.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default cutoff for the validity figure.
pub const DEFAULT_VALIDITY_THRESHOLD: f64 = 10.0;

/// `T_d·γ` at or above which the detection window counts as long.
pub const LONG_WINDOW_PRODUCT: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("{name} must be positive (got {value})")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("{name} must be finite (got {value})")]
    NonFinite { name: &'static str, value: f64 },
    #[error("pump must be < 1 (got {0})")]
    AboveThreshold(f64),
    #[error("pump must be >= 0 (got {0})")]
    NegativePump(f64),
    #[error("eta must lie in (0, 1] (got {0})")]
    EfficiencyOutOfRange(f64),
    #[error("validity figure is undefined for an infinite pupil")]
    InfinitePupil,
}

fn finite(name: &'static str, value: f64) -> Result<f64, ParamsError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ParamsError::NonFinite { name, value })
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, ParamsError> {
    finite(name, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(ParamsError::NonPositiveParameter { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    Planar,
    Confocal,
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Geometry::Planar => "planar",
            Geometry::Confocal => "confocal",
        })
    }
}

/// Decay rate, detuning and pump of a degenerate parametric cavity.
///
/// For the planar geometry `detuning` is Δ; for the confocal geometry it is
/// the common detuning Δ₊ of the even-l mode family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    gamma: f64,
    detuning: f64,
    pump: f64,
    geometry: Geometry,
}

impl CavityParams {
    pub fn new(gamma: f64, detuning: f64, pump: f64, geometry: Geometry) -> Result<Self, ParamsError> {
        positive("gamma", gamma)?;
        finite("detuning", detuning)?;
        finite("pump", pump)?;
        if pump < 0.0 {
            return Err(ParamsError::NegativePump(pump));
        }
        if pump >= 1.0 {
            return Err(ParamsError::AboveThreshold(pump));
        }
        Ok(Self {
            gamma,
            detuning,
            pump,
            geometry,
        })
    }

    /// Decay rate γ (s⁻¹).
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    /// Parametric coupling A_p.
    pub fn pump(&self) -> f64 {
        self.pump
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Same cavity with the other geometry tag.
    pub fn with_geometry(self, geometry: Geometry) -> Self {
        Self { geometry, ..self }
    }
}

/// Aperture in the Fourier plane of the imaging telescope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PupilSpec {
    InfiniteIdeal,
    Square { side: f64 },
    Circular { radius: f64 },
}

impl PupilSpec {
    pub fn square(side: f64) -> Result<Self, ParamsError> {
        Ok(Self::Square {
            side: positive("pupil side", side)?,
        })
    }

    pub fn circular(radius: f64) -> Result<Self, ParamsError> {
        Ok(Self::Circular {
            radius: positive("pupil radius", radius)?,
        })
    }

    /// Pupil area S_p, `None` for the infinite pupil.
    pub fn area(&self) -> Option<f64> {
        match *self {
            PupilSpec::InfiniteIdeal => None,
            PupilSpec::Square { side } => Some(side * side),
            PupilSpec::Circular { radius } => Some(PI * radius * radius),
        }
    }

    /// Full width of the aperture (side or diameter).
    pub fn width(&self) -> Option<f64> {
        match *self {
            PupilSpec::InfiniteIdeal => None,
            PupilSpec::Square { side } => Some(side),
            PupilSpec::Circular { radius } => Some(2.0 * radius),
        }
    }

    /// Pupil transmission at Fourier-plane point `(x, y)`.
    pub fn transmission(&self, x: f64, y: f64) -> f64 {
        let inside = match *self {
            PupilSpec::InfiniteIdeal => true,
            PupilSpec::Square { side } => x.abs() <= side / 2.0 && y.abs() <= side / 2.0,
            PupilSpec::Circular { radius } => x.hypot(y) <= radius,
        };
        if inside {
            1.0
        } else {
            0.0
        }
    }
}

/// Wavelength, lens focal length and pupil, with the derived scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalTrain {
    lambda: f64,
    focal: f64,
    gamma: f64,
    pupil: PupilSpec,
    wavenumber: f64,
    rho0: f64,
}

impl OpticalTrain {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn focal(&self) -> f64 {
        self.focal
    }

    pub fn pupil(&self) -> PupilSpec {
        self.pupil
    }

    /// k = 2π/λ.
    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    /// Characteristic transverse length ρ₀ = f·√(λγ/(πc)).
    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    /// λf, the scale of the lens Fourier transforms.
    pub fn lambda_f(&self) -> f64 {
        self.lambda * self.focal
    }

    /// Decay rate the train's ρ₀ was derived with.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_pupil(self, pupil: PupilSpec) -> Self {
        Self { pupil, ..self }
    }
}

fn rho0_of(focal: f64, lambda: f64, gamma: f64) -> f64 {
    focal * (lambda * gamma / (PI * SPEED_OF_LIGHT)).sqrt()
}

/// Builds the optical train (infinite pupil) for a cavity.
pub fn derive_scales(cavity: &CavityParams, lambda: f64, focal: f64) -> Result<OpticalTrain, ParamsError> {
    positive("wavelength", lambda)?;
    positive("focal", focal)?;
    // re-run the cavity checks for values built by struct update elsewhere
    CavityParams::new(cavity.gamma, cavity.detuning, cavity.pump, cavity.geometry)?;
    Ok(OpticalTrain {
        lambda,
        focal,
        gamma: cavity.gamma,
        pupil: PupilSpec::InfiniteIdeal,
        wavenumber: 2.0 * PI / lambda,
        rho0: rho0_of(focal, lambda, cavity.gamma),
    })
}

/// Efficiency, pixel area and integration window of the image-plane detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    eta: f64,
    pixel_area: f64,
    window: f64,
}

impl DetectorParams {
    pub fn new(eta: f64, pixel_area: f64, window: f64) -> Result<Self, ParamsError> {
        finite("eta", eta)?;
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(ParamsError::EfficiencyOutOfRange(eta));
        }
        positive("pixel_area", pixel_area)?;
        positive("window", window)?;
        Ok(Self {
            eta,
            pixel_area,
            window,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn pixel_area(&self) -> f64 {
        self.pixel_area
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    /// `η·S_d·T_d`, the counts per unit photon flux density.
    pub fn exposure(&self) -> f64 {
        self.eta * self.pixel_area * self.window
    }

    /// Whether `T_d·γ >= 100`, i.e. the window is long against the cavity lifetime.
    pub fn long_window(&self, gamma: f64) -> bool {
        self.window * gamma >= LONG_WINDOW_PRODUCT
    }

    pub fn with_pixel_area(self, pixel_area: f64) -> Result<Self, ParamsError> {
        Self::new(self.eta, pixel_area, self.window)
    }

    pub fn with_eta(self, eta: f64) -> Result<Self, ParamsError> {
        Self::new(eta, self.pixel_area, self.window)
    }
}

/// `s²·(λ²f²/S_p)·(2π/γ)`: photons per resolution cell per cavity lifetime.
///
/// Must be well above 1 for the residual vacuum-noise terms to be negligible.
pub fn validity_figure(s_peak_sq: f64, train: &OpticalTrain, cavity: &CavityParams) -> Result<f64, ParamsError> {
    finite("s_peak_sq", s_peak_sq)?;
    if s_peak_sq < 0.0 {
        return Err(ParamsError::NonPositiveParameter {
            name: "s_peak_sq",
            value: s_peak_sq,
        });
    }
    let area = train.pupil.area().ok_or(ParamsError::InfinitePupil)?;
    let lf = train.lambda_f();
    Ok(s_peak_sq * (lf * lf / area) * (2.0 * PI / cavity.gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidityStatus {
    Pass,
    Fail,
    /// Infinite pupil; the figure is reported as +∞.
    Undefined,
}

impl fmt::Display for ValidityStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValidityStatus::Pass => "PASS",
            ValidityStatus::Fail => "FAIL",
            ValidityStatus::Undefined => "UNDEFINED",
        })
    }
}

/// Validity figure together with the cutoff it was judged against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityCheck {
    pub figure: f64,
    pub threshold: f64,
    pub status: ValidityStatus,
}

impl ValidityCheck {
    pub fn evaluate(
        s_peak_sq: f64,
        train: &OpticalTrain,
        cavity: &CavityParams,
        threshold: f64,
    ) -> Result<Self, ParamsError> {
        positive("threshold", threshold)?;
        match validity_figure(s_peak_sq, train, cavity) {
            Ok(figure) => Ok(Self {
                figure,
                threshold,
                status: if figure >= threshold {
                    ValidityStatus::Pass
                } else {
                    ValidityStatus::Fail
                },
            }),
            Err(ParamsError::InfinitePupil) => Ok(Self {
                figure: f64::INFINITY,
                threshold,
                status: ValidityStatus::Undefined,
            }),
            Err(e) => Err(e),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == ValidityStatus::Pass
    }
}
