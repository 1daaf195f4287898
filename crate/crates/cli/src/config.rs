//! Scenario files.
//!
//! ```toml
//! [cavity]
//! geometry = "confocal"      # or "planar"
//! gamma = 1e8                # decay rate, 1/s
//! detuning = 0.0             # units of gamma
//! pump = 0.5                 # A_p, below 1
//!
//! [optics]
//! wavelength = 1e-6
//! focal = 0.1
//! pupil = { shape = "square", side = 1e-2 }   # or circular/radius, or infinite
//!
//! [detector]
//! eta = 1.0
//! pixel_area = 1e-10
//! window = 1e-6
//!
//! [grid]
//! n = 64
//! extent_rho0 = 4.0          # or extent = <meters>
//!
//! [object]
//! kind = "uniform"           # gaussian, two-gaussian, file
//! peak_flux = 1e19           # s0², photons/(m² s)
//!
//! [modes]
//! waist_rho0 = 1.0
//! pmax = 2
//! lmax = 2
//!
//! [run]
//! seed = 1
//! shots = 1000
//! threshold = 10
//! emit = ["gain-map", "noise-map"]
//! ```
//!
//! Lengths that scale with the cavity come either in meters (`waist`) or in
//! units of ρ₀ (`waist_rho0`). Relative object paths resolve against the
//! scenario file's directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use paramp_core::field::{RealField, TransverseGrid};
use paramp_core::params::{
    derive_scales, CavityParams, DetectorParams, Geometry, OpticalTrain, PupilSpec, DEFAULT_VALIDITY_THRESHOLD,
};
use serde::Deserialize;

use crate::{io, CliError};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    cavity: RawCavity,
    optics: RawOptics,
    detector: RawDetector,
    grid: RawGrid,
    object: RawObject,
    #[serde(default)]
    modes: RawModes,
    #[serde(default)]
    run: RawRun,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCavity {
    geometry: RawGeometry,
    gamma: f64,
    #[serde(default)]
    detuning: f64,
    pump: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawGeometry {
    Planar,
    Confocal,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptics {
    wavelength: f64,
    focal: f64,
    #[serde(default)]
    pupil: RawPupil,
}

#[derive(Debug, Default, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
enum RawPupil {
    #[default]
    Infinite,
    Square {
        side: f64,
    },
    Circular {
        radius: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetector {
    #[serde(default = "one")]
    eta: f64,
    pixel_area: f64,
    window: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n: usize,
    extent: Option<f64>,
    extent_rho0: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum RawObject {
    Uniform {
        peak_flux: f64,
    },
    Gaussian {
        peak_flux: f64,
        waist: Option<f64>,
        waist_rho0: Option<f64>,
    },
    TwoGaussian {
        peak_flux: f64,
        waist: Option<f64>,
        waist_rho0: Option<f64>,
        offset: Option<f64>,
        offset_rho0: Option<f64>,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModes {
    waist: Option<f64>,
    waist_rho0: Option<f64>,
    #[serde(default = "four")]
    pmax: u32,
    #[serde(default = "four")]
    lmax: u32,
}

impl Default for RawModes {
    fn default() -> Self {
        Self {
            waist: None,
            waist_rho0: None,
            pmax: 4,
            lmax: 4,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_shots")]
    shots: usize,
    #[serde(default = "default_threshold")]
    threshold: f64,
    #[serde(default)]
    emit: Vec<String>,
    #[serde(default)]
    pgm: bool,
}

impl Default for RawRun {
    fn default() -> Self {
        Self {
            seed: 0,
            shots: default_shots(),
            threshold: default_threshold(),
            emit: Vec::new(),
            pgm: false,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn four() -> u32 {
    4
}

fn default_shots() -> usize {
    1000
}

fn default_threshold() -> f64 {
    DEFAULT_VALIDITY_THRESHOLD
}

/// Field files a scenario can write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Artifact {
    GainMap,
    NoiseMap,
    Image,
    Counts,
}

impl Artifact {
    pub const ALL: [Artifact; 4] = [Artifact::GainMap, Artifact::NoiseMap, Artifact::Image, Artifact::Counts];

    pub fn name(self) -> &'static str {
        match self {
            Artifact::GainMap => "gain-map",
            Artifact::NoiseMap => "noise-map",
            Artifact::Image => "image",
            Artifact::Counts => "counts",
        }
    }
}

impl fmt::Display for Artifact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Artifact {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Artifact::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| {
                let known: Vec<_> = Artifact::ALL.iter().map(|a| a.name()).collect();
                CliError::Config(format!("unknown artifact {s:?} (expected one of {})", known.join(", ")))
            })
    }
}

/// Parses a comma-separated artifact list, dropping duplicates.
pub fn parse_artifacts<S: AsRef<str>>(items: &[S]) -> Result<Vec<Artifact>, CliError> {
    let mut out = Vec::new();
    for item in items {
        for part in item.as_ref().split(',').filter(|p| !p.trim().is_empty()) {
            let a: Artifact = part.parse()?;
            if !out.contains(&a) {
                out.push(a);
            }
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectSpec {
    Uniform,
    Gaussian { waist: f64 },
    TwoGaussian { waist: f64, offset: f64 },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModesSpec {
    pub waist: f64,
    pub pmax: u32,
    pub lmax: u32,
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub cavity: CavityParams,
    pub train: OpticalTrain,
    pub detector: DetectorParams,
    pub grid: TransverseGrid,
    pub object_spec: ObjectSpec,
    /// Real object amplitude s(x, y), in √(photons/(m² s)).
    pub object: RealField,
    pub modes: ModesSpec,
    pub seed: u64,
    pub shots: usize,
    pub threshold: f64,
    pub emit: Vec<Artifact>,
    pub pgm: bool,
}

fn length(
    section: &str,
    name: &str,
    meters: Option<f64>,
    in_rho0: Option<f64>,
    rho0: f64,
) -> Result<f64, CliError> {
    let value = match (meters, in_rho0) {
        (Some(m), None) => m,
        (None, Some(r)) => r * rho0,
        (Some(_), Some(_)) => {
            return Err(CliError::Config(format!(
                "[{section}] give either {name} or {name}_rho0, not both"
            )))
        }
        (None, None) => return Err(CliError::Config(format!("[{section}] missing {name} or {name}_rho0"))),
    };
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(CliError::Config(format!("[{section}] {name} must be positive (got {value})")))
    }
}

fn peak_amplitude(peak_flux: f64) -> Result<f64, CliError> {
    if peak_flux.is_finite() && peak_flux >= 0.0 {
        Ok(peak_flux.sqrt())
    } else {
        Err(CliError::Config(format!(
            "[object] peak_flux must be finite and >= 0 (got {peak_flux})"
        )))
    }
}

fn gaussian(x: f64, y: f64, w: f64) -> f64 {
    (-(x * x + y * y) / (w * w)).exp()
}

/// Reads and validates a scenario file.
pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse(&text, base)
}

/// Validates scenario text; `base` anchors relative object paths.
pub fn parse(text: &str, base: &Path) -> Result<Scenario, CliError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_owned()))?;

    let geometry = match raw.cavity.geometry {
        RawGeometry::Planar => Geometry::Planar,
        RawGeometry::Confocal => Geometry::Confocal,
    };
    let cavity = CavityParams::new(raw.cavity.gamma, raw.cavity.detuning, raw.cavity.pump, geometry)
        .map_err(|e| CliError::invalid("cavity", e))?;

    let pupil = match raw.optics.pupil {
        RawPupil::Infinite => Ok(PupilSpec::InfiniteIdeal),
        RawPupil::Square { side } => PupilSpec::square(side),
        RawPupil::Circular { radius } => PupilSpec::circular(radius),
    }
    .map_err(|e| CliError::invalid("optics", e))?;
    let train = derive_scales(&cavity, raw.optics.wavelength, raw.optics.focal)
        .map_err(|e| CliError::invalid("optics", e))?
        .with_pupil(pupil);
    let rho0 = train.rho0();

    let detector = DetectorParams::new(raw.detector.eta, raw.detector.pixel_area, raw.detector.window)
        .map_err(|e| CliError::invalid("detector", e))?;

    let extent = length("grid", "extent", raw.grid.extent, raw.grid.extent_rho0, rho0)?;
    let grid = TransverseGrid::new(raw.grid.n, extent).map_err(|e| CliError::invalid("grid", e))?;

    let (object_spec, object) = match raw.object {
        RawObject::Uniform { peak_flux } => (ObjectSpec::Uniform, RealField::filled(grid, peak_amplitude(peak_flux)?)),
        RawObject::Gaussian {
            peak_flux,
            waist,
            waist_rho0,
        } => {
            let s0 = peak_amplitude(peak_flux)?;
            let w = length("object", "waist", waist, waist_rho0, rho0)?;
            let field = RealField::from_fn(grid, |x, y| s0 * gaussian(x, y, w));
            (ObjectSpec::Gaussian { waist: w }, field.map_err(|e| CliError::invalid("object", e))?)
        }
        RawObject::TwoGaussian {
            peak_flux,
            waist,
            waist_rho0,
            offset,
            offset_rho0,
        } => {
            let s0 = peak_amplitude(peak_flux)?;
            let w = length("object", "waist", waist, waist_rho0, rho0)?;
            let a = length("object", "offset", offset, offset_rho0, rho0)?;
            let field = RealField::from_fn(grid, |x, y| s0 * (gaussian(x - a, y, w) + gaussian(x + a, y, w)));
            (
                ObjectSpec::TwoGaussian { waist: w, offset: a },
                field.map_err(|e| CliError::invalid("object", e))?,
            )
        }
        RawObject::File { path } => {
            let full = base.join(&path);
            let csv = io::read_csv(&full).map_err(|e| match e {
                CliError::Io { path, source } => {
                    CliError::Config(format!("[object] cannot read {}: {source}", path.display()))
                }
                other => other,
            })?;
            if csv.grid != grid {
                return Err(CliError::Config(format!(
                    "[object] {} is sampled with n={} extent={:e}, scenario grid has n={} extent={:e}",
                    full.display(),
                    csv.grid.n(),
                    csv.grid.extent(),
                    grid.n(),
                    grid.extent()
                )));
            }
            let field = RealField::new(grid, csv.values).map_err(|e| CliError::invalid("object", e))?;
            (ObjectSpec::File(full), field)
        }
    };

    let waist = match (raw.modes.waist, raw.modes.waist_rho0) {
        (None, None) => rho0,
        (m, r) => length("modes", "waist", m, r, rho0)?,
    };

    if !(raw.run.threshold.is_finite() && raw.run.threshold > 0.0) {
        return Err(CliError::Config(format!(
            "[run] threshold must be positive (got {})",
            raw.run.threshold
        )));
    }
    if raw.run.shots == 0 {
        return Err(CliError::Config("[run] shots must be at least 1".into()));
    }

    Ok(Scenario {
        cavity,
        train,
        detector,
        grid,
        object_spec,
        object,
        modes: ModesSpec {
            waist,
            pmax: raw.modes.pmax,
            lmax: raw.modes.lmax,
        },
        seed: raw.run.seed,
        shots: raw.run.shots,
        threshold: raw.run.threshold,
        emit: parse_artifacts(&raw.run.emit)?,
        pgm: raw.run.pgm,
    })
}
