//! Pixel photocount statistics in the object and image planes.
//!
//! In the long-window, small-pixel limit a pixel at ρ registers
//!
//! ```text
//! ⟨N_I⟩    = η S_d T_d s²(ρ) G(ρ)
//! ⟨ΔN_I²⟩  = ⟨N_I⟩ {1 − η + η[cos²θ e^{2R} + sin²θ e^{−2R}]}
//! ```
//!
//! The coherent object field gives Poissonian counts, `⟨ΔN_O²⟩ = ⟨N_O⟩`.
//! Signal-to-noise ratios are `⟨N⟩²/⟨ΔN²⟩` and the noise figure is `R_O/R_I`,
//! with `R_O` taken for ideal detection of the input so that detector loss
//! shows up in F.
//! Residual vacuum-noise terms are not modeled; every report carries the
//! validity figure that says whether dropping them is justified.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::field::{Field, GridError, RealField, TransverseGrid};
use crate::params::{CavityParams, DetectorParams, Geometry, OpticalTrain, ParamsError, ValidityCheck};
use crate::transfer::{self, SqueezeParams, TransferError};

/// Mean count below which the Gaussian count model is flagged.
pub const GAUSSIAN_MIN_MEAN: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectionError {
    #[error("noise figure undefined at pixel ({row}, {col}): zero object amplitude")]
    MaskedPixel { row: usize, col: usize },
    #[error("at least one shot is required")]
    NoShots,
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelStats {
    pub mean: f64,
    pub variance: f64,
    /// `mean²/variance`; `None` when the variance vanishes.
    pub snr: Option<f64>,
    /// Pixel center (x, y) in meters.
    pub location: (f64, f64),
}

impl PixelStats {
    fn new(mean: f64, variance: f64, location: (f64, f64)) -> Self {
        Self {
            mean,
            variance,
            snr: (variance > 0.0).then(|| mean * mean / variance),
            location,
        }
    }
}

pub fn image_pixel_mean(s: f64, g: f64, det: &DetectorParams) -> f64 {
    det.exposure() * s * s * g
}

pub fn image_pixel_variance(s: f64, g: f64, sq: &SqueezeParams, det: &DetectorParams) -> f64 {
    let eta = det.eta();
    image_pixel_mean(s, g, det) * (1.0 - eta + eta * sq.noise_factor())
}

pub fn image_pixel_stats(
    s: f64,
    g: f64,
    sq: &SqueezeParams,
    det: &DetectorParams,
    location: (f64, f64),
) -> PixelStats {
    PixelStats::new(image_pixel_mean(s, g, det), image_pixel_variance(s, g, sq, det), location)
}

/// Shot-noise-limited statistics of the coherent object field.
pub fn object_pixel_stats(s: f64, det: &DetectorParams, location: (f64, f64)) -> PixelStats {
    let mean = det.exposure() * s * s;
    PixelStats::new(mean, mean, location)
}

/// Object- and image-plane statistics for every pixel of a grid.
#[derive(Debug, Clone)]
pub struct DetectionReport {
    pub geometry: Geometry,
    pub detector: DetectorParams,
    pub image: Field<PixelStats>,
    /// Object-plane reference, counted by an ideal (η = 1) detector of the
    /// same pixel area and window.
    pub object: Field<PixelStats>,
    pub gain: RealField,
    pub squeeze: Field<SqueezeParams>,
    /// Closed-form noise figure; `None` where the object amplitude is zero.
    pub noise_figure: Field<Option<f64>>,
    pub validity: ValidityCheck,
    /// `T_d·γ >= 100`.
    pub long_window: bool,
}

impl DetectionReport {
    pub fn grid(&self) -> &TransverseGrid {
        self.image.grid()
    }

    /// `R_O/R_I` at one pixel.
    pub fn noise_figure_at(&self, row: usize, col: usize) -> Result<f64, DetectionError> {
        let (o, i) = (self.object.at(row, col), self.image.at(row, col));
        match (o.snr, i.snr) {
            (Some(ro), Some(ri)) if o.mean > 0.0 => Ok(ro / ri),
            _ => Err(DetectionError::MaskedPixel { row, col }),
        }
    }

    pub fn mean_field(&self) -> RealField {
        self.image.map(|p| p.mean)
    }

    pub fn variance_field(&self) -> RealField {
        self.image.map(|p| p.variance)
    }
}

/// Builds the report for a real object amplitude `s(ρ)`.
pub fn detection_report(
    object: &RealField,
    cavity: &CavityParams,
    train: &OpticalTrain,
    det: &DetectorParams,
    threshold: f64,
) -> Result<DetectionReport, DetectionError> {
    let grid = *object.grid();
    let side = grid.side();
    let peak = object.values().iter().map(|s| s * s).fold(0.0, f64::max);
    let validity = ValidityCheck::evaluate(peak, train, cavity, threshold)?;
    let reference = det.with_eta(1.0)?;

    let per_pixel = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let location = grid.position(i / side, i % side);
            let pair = transfer::pair_at(cavity, train, location.0.hypot(location.1), 0.0).map_err(|e| {
                TransferError::SingularAt {
                    x: location.0,
                    y: location.1,
                    source: Box::new(e),
                }
            })?;
            let g = transfer::gain(&pair);
            let sq = transfer::squeeze(&pair);
            let s = object.values()[i];
            let f = (s != 0.0).then(|| transfer::noise_figure(g, &sq, det.eta()));
            Ok((
                image_pixel_stats(s, g, &sq, det, location),
                object_pixel_stats(s, &reference, location),
                g,
                sq,
                f,
            ))
        })
        .collect::<Vec<Result<_, TransferError>>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let mut image = Vec::with_capacity(grid.len());
    let mut obj = Vec::with_capacity(grid.len());
    let mut gain = Vec::with_capacity(grid.len());
    let mut squeeze = Vec::with_capacity(grid.len());
    let mut nf = Vec::with_capacity(grid.len());
    for (i, o, g, sq, f) in per_pixel {
        image.push(i);
        obj.push(o);
        gain.push(g);
        squeeze.push(sq);
        nf.push(f);
    }
    Ok(DetectionReport {
        geometry: cavity.geometry(),
        detector: *det,
        image: Field::from_raw(grid, image)?,
        object: Field::from_raw(grid, obj)?,
        gain: Field::from_raw(grid, gain)?,
        squeeze: Field::from_raw(grid, squeeze)?,
        noise_figure: Field::from_raw(grid, nf)?,
        validity,
        long_window: det.long_window(cavity.gamma()),
    })
}

/// `R_O/R_I` from the report's pixel statistics; masked where `s = 0`.
pub fn noise_figure_empirical(report: &DetectionReport) -> Field<Option<f64>> {
    let side = report.grid().side();
    let values = (0..report.grid().len())
        .map(|i| report.noise_figure_at(i / side, i % side).ok())
        .collect();
    Field::from_raw(*report.grid(), values).expect("report grid")
}

/// Sampled photocounts and their empirical statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub shots: usize,
    /// Counts of the last shot.
    pub last_shot: Field<u64>,
    pub mean: RealField,
    /// Unbiased sample variance (0 for a single shot).
    pub variance: RealField,
    pub mean_stderr: RealField,
    pub variance_stderr: RealField,
    /// Pixels whose analytic mean is below [`GAUSSIAN_MIN_MEAN`].
    pub low_mean_pixels: usize,
}

impl MonteCarloResult {
    /// Fraction of pixels whose empirical mean and variance both lie within
    /// `k` standard errors of the analytic values.
    pub fn fraction_within(&self, mean: &RealField, variance: &RealField, k: f64) -> f64 {
        let n = self.mean.values().len();
        let ok = (0..n)
            .filter(|&i| {
                let dm = (self.mean.values()[i] - mean.values()[i]).abs();
                let dv = (self.variance.values()[i] - variance.values()[i]).abs();
                dm <= k * self.mean_stderr.values()[i] && dv <= k * self.variance_stderr.values()[i]
            })
            .count();
        ok as f64 / n as f64
    }
}

/// Draws `shots` independent Gaussian photocount images.
///
/// Each pixel draws from its own ChaCha stream keyed by `(seed, pixel index)`,
/// so the result does not depend on thread scheduling. Samples are clamped
/// at zero and rounded to whole counts.
pub fn monte_carlo_image(
    mean: &RealField,
    variance: &RealField,
    seed: u64,
    shots: usize,
) -> Result<MonteCarloResult, DetectionError> {
    if shots == 0 {
        return Err(DetectionError::NoShots);
    }
    mean.same_grid(variance)?;
    let grid = *mean.grid();
    let per_pixel: Vec<(u64, f64, f64)> = mean
        .values()
        .par_iter()
        .zip(variance.values().par_iter())
        .enumerate()
        .map(|(i, (&mu, &var))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let sigma = var.max(0.0).sqrt();
            let (mut m, mut m2) = (0.0, 0.0);
            let mut last = 0;
            for k in 0..shots {
                let z: f64 = StandardNormal.sample(&mut rng);
                let count = (mu + sigma * z).max(0.0).round();
                last = count as u64;
                // Welford
                let delta = count - m;
                m += delta / (k + 1) as f64;
                m2 += delta * (count - m);
            }
            let var_hat = if shots > 1 { m2 / (shots - 1) as f64 } else { 0.0 };
            (last, m, var_hat)
        })
        .collect();

    let n = shots as f64;
    let mean_f = RealField::from_raw(grid, per_pixel.iter().map(|p| p.1).collect())?;
    let var_f = RealField::from_raw(grid, per_pixel.iter().map(|p| p.2).collect())?;
    let var_se = (2.0 / (n - 1.0)).sqrt();
    Ok(MonteCarloResult {
        shots,
        last_shot: Field::from_raw(grid, per_pixel.iter().map(|p| p.0).collect())?,
        mean_stderr: var_f.map(|v| (v / n).sqrt()),
        variance_stderr: var_f.map(|v| if shots > 1 { v * var_se } else { f64::INFINITY }),
        mean: mean_f,
        variance: var_f,
        low_mean_pixels: mean.values().iter().filter(|&&m| m < GAUSSIAN_MIN_MEAN).count(),
    })
}
