//! Frequency-domain input-output coefficients of the parametric cavity.
//!
//! Below threshold the intracavity Langevin equation is linear, so the output
//! at analysis frequency Ω mixes the input at +Ω with the conjugate input at
//! −Ω through a Bogoliubov pair (U, V):
//!
//! ```text
//! D = (1 + iδ₊)(1 − iδ₋) − A²
//! U = [(1 − iδ₊)(1 − iδ₋) + A²] / D
//! V = 2A / D
//! ```
//!
//! with δ± the mismatch at ±Ω. The planar cavity has a local mismatch
//! `Δ − Ω + (ρ/ρ₀)²`; in the confocal cavity every even-l mode shares the
//! detuning Δ₊, so the mismatch `Δ₊ − Ω` carries no position dependence.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::field::{RealField, TransverseGrid};
use crate::params::{CavityParams, Geometry, OpticalTrain};

/// Default lower bound on |D|.
pub const DEFAULT_SINGULARITY_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransferError {
    #[error("transfer denominator |D| = {magnitude:e} below guard {guard:e} (delta+ = {delta_plus}, delta- = {delta_minus}, pump = {pump})")]
    NearSingularDenominator {
        magnitude: f64,
        guard: f64,
        delta_plus: f64,
        delta_minus: f64,
        pump: f64,
    },
    #[error("near-singular transfer at sample ({x:e} m, {y:e} m): {source}")]
    SingularAt {
        x: f64,
        y: f64,
        #[source]
        source: Box<TransferError>,
    },
}

/// Value of the mismatch function and where it was evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mismatch {
    pub value: f64,
    /// Radius in meters; `None` for the confocal geometry.
    pub rho: Option<f64>,
    /// Analysis frequency in units of γ.
    pub omega: f64,
    pub geometry: Geometry,
}

impl Mismatch {
    /// Planar mismatch `Δ − Ω + (ρ/ρ₀)²`.
    pub fn planar(detuning: f64, rho: f64, rho0: f64, omega: f64) -> Self {
        let r = rho / rho0;
        Self {
            value: detuning - omega + r * r,
            rho: Some(rho),
            omega,
            geometry: Geometry::Planar,
        }
    }

    /// Confocal mismatch `Δ₊ − Ω`.
    pub fn confocal(detuning: f64, omega: f64) -> Self {
        Self {
            value: detuning - omega,
            rho: None,
            omega,
            geometry: Geometry::Confocal,
        }
    }
}

/// Mismatch for the cavity's geometry; `rho` is ignored for the confocal cavity.
pub fn mismatch(cavity: &CavityParams, train: &OpticalTrain, rho: f64, omega: f64) -> Mismatch {
    match cavity.geometry() {
        Geometry::Planar => Mismatch::planar(cavity.detuning(), rho, train.rho0(), omega),
        Geometry::Confocal => Mismatch::confocal(cavity.detuning(), omega),
    }
}

/// Bogoliubov coefficients at one (ρ, Ω).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferPair {
    pub u: Complex64,
    pub v: Complex64,
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub pump: f64,
}

impl TransferPair {
    /// The common denominator D.
    pub fn denominator(&self) -> Complex64 {
        denominator(self.delta_plus, self.delta_minus, self.pump)
    }
}

fn denominator(delta_plus: f64, delta_minus: f64, pump: f64) -> Complex64 {
    Complex64::new(1.0, delta_plus) * Complex64::new(1.0, -delta_minus) - pump * pump
}

pub fn transfer_pair(delta_plus: &Mismatch, delta_minus: &Mismatch, pump: f64) -> Result<TransferPair, TransferError> {
    transfer_pair_guarded(delta_plus.value, delta_minus.value, pump, DEFAULT_SINGULARITY_GUARD)
}

/// U and V from raw mismatch values with an explicit singularity guard.
pub fn transfer_pair_guarded(
    delta_plus: f64,
    delta_minus: f64,
    pump: f64,
    guard: f64,
) -> Result<TransferPair, TransferError> {
    let d = denominator(delta_plus, delta_minus, pump);
    if d.norm().is_nan() || d.norm() <= guard {
        return Err(TransferError::NearSingularDenominator {
            magnitude: d.norm(),
            guard,
            delta_plus,
            delta_minus,
            pump,
        });
    }
    let num = Complex64::new(1.0, -delta_plus) * Complex64::new(1.0, -delta_minus) + pump * pump;
    Ok(TransferPair {
        u: num / d,
        v: Complex64::new(2.0 * pump, 0.0) / d,
        delta_plus,
        delta_minus,
        pump,
    })
}

/// Pair for the cavity at radius `rho` and frequency `omega`.
pub fn pair_at(cavity: &CavityParams, train: &OpticalTrain, rho: f64, omega: f64) -> Result<TransferPair, TransferError> {
    let plus = mismatch(cavity, train, rho, omega);
    let minus = mismatch(cavity, train, rho, -omega);
    transfer_pair(&plus, &minus, cavity.pump())
}

/// Intensity gain `|U + V|²` for a real input amplitude.
pub fn gain(pair: &TransferPair) -> f64 {
    (pair.u + pair.v).norm_sqr()
}

/// Closed-form gain at Ω = 0 for mismatch δ.
pub fn gain_closed_form(delta: f64, pump: f64) -> f64 {
    let d2 = delta * delta;
    let a = (1.0 + pump) * (1.0 + pump) - d2;
    let den = 1.0 + d2 - pump * pump;
    (a * a + 4.0 * d2) / (den * den)
}

/// Squeezing parameter and orientation of the output quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeParams {
    /// R >= 0 with e^{±R} = |U| ± |V|.
    pub r: f64,
    /// Orientation θ in [−π/2, π/2].
    pub theta: f64,
}

impl SqueezeParams {
    /// `cos²θ·e^{2R} + sin²θ·e^{−2R}`: output noise of the signal quadrature
    /// relative to shot noise.
    pub fn noise_factor(&self) -> f64 {
        let (s, c) = self.theta.sin_cos();
        c * c * (2.0 * self.r).exp() + s * s * (-2.0 * self.r).exp()
    }
}

pub fn squeeze(pair: &TransferPair) -> SqueezeParams {
    if pair.v == Complex64::new(0.0, 0.0) {
        return SqueezeParams { r: 0.0, theta: 0.0 };
    }
    let r = (pair.u.norm() + pair.v.norm()).ln();
    let two_theta = (pair.u + pair.v).arg() - pair.u.arg() - pair.v.arg();
    SqueezeParams {
        r,
        theta: canonical_angle(0.5 * two_theta),
    }
}

/// Reduces θ modulo π into [−π/2, π/2].
fn canonical_angle(theta: f64) -> f64 {
    let t = theta - PI * (theta / PI).round();
    t.clamp(-PI / 2.0, PI / 2.0)
}

/// `{1 − η + η[cos²θ e^{2R} + sin²θ e^{−2R}]} / (ηG)`.
pub fn noise_figure(g: f64, sq: &SqueezeParams, eta: f64) -> f64 {
    (1.0 - eta + eta * sq.noise_factor()) / (eta * g)
}

fn sample_map(
    cavity: &CavityParams,
    train: &OpticalTrain,
    grid: &TransverseGrid,
    value: impl Fn(&TransferPair) -> f64 + Sync,
) -> Result<RealField, TransferError> {
    let values = match cavity.geometry() {
        Geometry::Confocal => {
            let pair = transfer_pair(
                &Mismatch::confocal(cavity.detuning(), 0.0),
                &Mismatch::confocal(cavity.detuning(), 0.0),
                cavity.pump(),
            )?;
            vec![value(&pair); grid.len()]
        }
        Geometry::Planar => {
            let side = grid.side();
            (0..grid.len())
                .into_par_iter()
                .map(|i| {
                    let (x, y) = grid.position(i / side, i % side);
                    pair_at(cavity, train, x.hypot(y), 0.0)
                        .map(|p| value(&p))
                        .map_err(|e| TransferError::SingularAt {
                            x,
                            y,
                            source: Box::new(e),
                        })
                })
                .collect::<Vec<_>>()
                // sequential so the reported sample is the first in row-major order
                .into_iter()
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    Ok(RealField::from_raw(*grid, values).expect("length matches grid"))
}

/// Gain G(ρ) at Ω = 0 on every grid sample.
pub fn gain_map(cavity: &CavityParams, train: &OpticalTrain, grid: &TransverseGrid) -> Result<RealField, TransferError> {
    sample_map(cavity, train, grid, gain)
}

/// Noise figure F(ρ) at Ω = 0 on every grid sample.
pub fn noise_figure_map(
    cavity: &CavityParams,
    train: &OpticalTrain,
    grid: &TransverseGrid,
    eta: f64,
) -> Result<RealField, TransferError> {
    sample_map(cavity, train, grid, |p| noise_figure(gain(p), &squeeze(p), eta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_scales;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn raw(dp: f64, dm: f64, pump: f64) -> TransferPair {
        transfer_pair_guarded(dp, dm, pump, DEFAULT_SINGULARITY_GUARD).unwrap()
    }

    fn setup(geometry: Geometry, detuning: f64, pump: f64) -> (CavityParams, OpticalTrain) {
        let c = CavityParams::new(1e8, detuning, pump, geometry).unwrap();
        let t = derive_scales(&c, 1e-6, 0.1).unwrap();
        (c, t)
    }

    #[test]
    fn mismatch_examples() {
        let (c, t) = setup(Geometry::Planar, -1.0, 0.5);
        assert_eq!(mismatch(&c, &t, t.rho0(), 0.0).value, 0.0);
        let (c, t) = setup(Geometry::Planar, 0.5, 0.5);
        assert!(close(mismatch(&c, &t, 2.0 * t.rho0(), 1.0).value, 3.5, 1e-14));
        let (c, t) = setup(Geometry::Confocal, 0.0, 0.5);
        for rho in [0.0, 1e-5, 3.0 * t.rho0()] {
            let m = mismatch(&c, &t, rho, 0.0);
            assert_eq!(m, Mismatch::confocal(0.0, 0.0));
        }
    }

    #[test]
    fn resonant_pair() {
        let p = raw(0.0, 0.0, 0.5);
        assert!(close(p.u.re, 5.0 / 3.0, 1e-15) && p.u.im == 0.0);
        assert!(close(p.v.re, 4.0 / 3.0, 1e-15) && p.v.im == 0.0);
        let off = raw(0.0, 0.0, 0.0);
        assert_eq!(off.u, Complex64::new(1.0, 0.0));
        assert_eq!(off.v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn asymmetric_mismatch_pair() {
        let p = raw(-1.0, 1.0, 0.5);
        assert_eq!(p.denominator(), Complex64::new(-0.25, -2.0));
        // 5.0625/4.0625 and 1/4.0625
        assert!(close(p.u.norm_sqr(), 5.0625 / 4.0625, 1e-14));
        assert!(close(p.v.norm_sqr(), 1.0 / 4.0625, 1e-14));
        assert!(close(p.u.norm_sqr() - p.v.norm_sqr(), 1.0, 1e-14));
    }

    #[test]
    fn v_phase_follows_denominator() {
        let p = raw(0.3, -1.7, 0.8);
        let expected = -p.denominator().arg();
        assert!(close(p.v.arg(), expected, 1e-14));
    }

    #[test]
    fn singular_denominator_is_reported() {
        // δ = 0, A → 1 gives D → 0
        let err = transfer_pair_guarded(0.0, 0.0, 1.0, DEFAULT_SINGULARITY_GUARD).unwrap_err();
        assert!(matches!(err, TransferError::NearSingularDenominator { .. }));
        assert!(transfer_pair_guarded(0.0, 0.0, 0.9, 0.5).is_err());
    }

    #[test]
    fn gain_examples() {
        assert!(close(gain(&raw(0.0, 0.0, 0.5)), 9.0, 1e-13));
        assert!(close(gain(&raw(0.0, 0.0, 0.5)), (1.5f64 / 0.5).powi(2), 1e-13));
        for d in [-2.0, 0.0, 0.7, 5.0] {
            assert!(close(gain(&raw(d, d, 0.0)), 1.0, 1e-14));
        }
        // ((1.5² − 1)² + 4)/(1 + 1 − 0.25)²
        let ring_edge = (1.5625 + 4.0) / 3.0625;
        assert!(close(gain(&raw(1.0, 1.0, 0.5)), ring_edge, 1e-14));
        assert!(close(gain_closed_form(1.0, 0.5), ring_edge, 1e-14));
    }

    #[test]
    fn squeeze_examples() {
        let sq = squeeze(&raw(0.0, 0.0, 0.5));
        assert!(close(sq.r, 3f64.ln(), 1e-14));
        assert_eq!(sq.theta, 0.0);

        let none = squeeze(&raw(0.4, 0.4, 0.0));
        assert_eq!(none, SqueezeParams { r: 0.0, theta: 0.0 });
        assert_eq!(none.noise_factor(), 1.0);

        let p = raw(1.0, 1.0, 0.5);
        let sq = squeeze(&p);
        assert!(close(sq.r.exp() * (-sq.r).exp(), 1.0, 1e-15));
        let (mu, mv) = (p.u.norm(), p.v.norm());
        assert!(close((mu + mv) * (mu - mv), 1.0, 1e-12));
        assert!(close((-sq.r).exp(), mu - mv, 1e-12));
        assert!(sq.theta.abs() <= PI / 2.0);
    }

    #[test]
    fn noise_figure_examples() {
        let sq = SqueezeParams { r: 3f64.ln(), theta: 0.0 };
        assert!(close(noise_figure(9.0, &sq, 1.0), 1.0, 1e-14));
        assert!(close(noise_figure(9.0, &sq, 0.5), 10.0 / 9.0, 1e-14));
        let none = SqueezeParams { r: 0.0, theta: 0.0 };
        assert!(close(noise_figure(1.0, &none, 0.5), 2.0, 1e-15));
    }

    #[test]
    fn canonical_angle_range() {
        for t in [-4.0, -1.6, -0.2, 0.0, 1.5, 1.6, 3.2, 4.6] {
            let c = canonical_angle(t);
            assert!((-PI / 2.0..=PI / 2.0).contains(&c));
            // same cos², sin²
            assert!(close(c.cos().powi(2), f64::cos(t).powi(2), 1e-12));
        }
    }

    #[test]
    fn confocal_maps_are_constant() {
        let (c, t) = setup(Geometry::Confocal, 0.0, 0.5);
        let grid = TransverseGrid::new(16, 3.0 * t.rho0()).unwrap();
        let g = gain_map(&c, &t, &grid).unwrap();
        let f = noise_figure_map(&c, &t, &grid, 1.0).unwrap();
        assert_eq!(g.max() - g.min(), 0.0);
        assert_eq!(f.max() - f.min(), 0.0);
        assert!(close(g.max(), 9.0, 1e-13));
        assert!(close(f.max(), 1.0, 1e-14));
    }

    #[test]
    fn planar_gain_peaks_on_axis() {
        let (c, t) = setup(Geometry::Planar, 0.0, 0.5);
        let grid = TransverseGrid::new(32, 2.0 * t.rho0()).unwrap();
        let g = gain_map(&c, &t, &grid).unwrap();
        let mid = grid.center();
        assert!(close(*g.at(mid, mid), 9.0, 1e-13));
        assert_eq!(g.max(), *g.at(mid, mid));
        // monotone decrease along the +x axis near the axis
        for col in mid..mid + 6 {
            assert!(g.at(mid, col + 1) < g.at(mid, col));
        }
    }

    #[test]
    fn planar_noise_ring() {
        let (c, t) = setup(Geometry::Planar, -1.0, 0.5);
        let grid = TransverseGrid::new(32, 2.0 * t.rho0()).unwrap();
        let f = noise_figure_map(&c, &t, &grid, 1.0).unwrap();
        let side = grid.side();
        let best = f.argmin();
        let r = grid.radius(best / side, best % side);
        assert!((r - t.rho0()).abs() <= grid.spacing());
        assert!(f.min() < 1.0 + 1e-9);
        assert!(f.min() >= 1.0 - 1e-12);
    }

    #[test]
    fn singular_sample_names_coordinate() {
        // pump close to 1 on resonance: |D| = 1 − A² tiny at the ring
        let c = CavityParams::new(1e8, -1.0, 1.0 - 1e-12, Geometry::Planar).unwrap();
        let t = derive_scales(&c, 1e-6, 0.1).unwrap();
        let grid = TransverseGrid::new(16, 2.0 * t.rho0()).unwrap();
        let err = gain_map(&c, &t, &grid).unwrap_err();
        match err {
            TransferError::SingularAt { x, y, .. } => {
                assert!((x.hypot(y) - t.rho0()).abs() < 1e-3 * t.rho0())
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
