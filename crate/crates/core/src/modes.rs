//! Gauss-Laguerre transverse mode basis.
//!
//! Modes are the real degenerate pair for each (p, l):
//!
//! ```text
//! f(ρ, φ) = C·(√2ρ/w)^l·L_p^l(2ρ²/w²)·exp(−ρ²/w²)·{cos lφ, sin lφ}
//! ```
//!
//! normalized to unit L². In the confocal cavity all even-l modes share one
//! resonance frequency and all odd-l modes another, half a free spectral
//! range away, so the field splits into an even-l part that is amplified and
//! an odd-l part that is not.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::field::{ComplexField, RealField, TransverseGrid};
use crate::transfer::TransferPair;

/// Modes must satisfy `w·√(2p + l + 1) <= EXTENT_FRACTION·L`.
pub const EXTENT_FRACTION: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModesError {
    #[error("mode {index} has effective radius {radius:e} m, beyond {limit:e} m on this grid")]
    GridTooSmallForMode { index: ModeIndex, radius: f64, limit: f64 },
    #[error("sine parity is undefined for l = 0 (p = {0})")]
    InvalidIndex(u32),
    #[error("waist must be positive (got {0})")]
    BadWaist(f64),
    #[error("field and basis are sampled on different grids")]
    GridMismatch,
    #[error("mode {0} is not part of the basis")]
    UnknownMode(ModeIndex),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Azimuth {
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    p: u32,
    l: u32,
    azimuth: Azimuth,
}

impl ModeIndex {
    pub fn new(p: u32, l: u32, azimuth: Azimuth) -> Result<Self, ModesError> {
        if l == 0 && azimuth == Azimuth::Sin {
            return Err(ModesError::InvalidIndex(p));
        }
        Ok(Self { p, l, azimuth })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn azimuth(&self) -> Azimuth {
        self.azimuth
    }

    /// Even-l modes belong to the resonant (amplified) frequency family.
    pub fn is_even(&self) -> bool {
        self.l.is_multiple_of(2)
    }

    pub fn effective_radius(&self, waist: f64) -> f64 {
        waist * f64::from(2 * self.p + self.l + 1).sqrt()
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let az = match self.azimuth {
            Azimuth::Cos => "cos",
            Azimuth::Sin => "sin",
        };
        write!(f, "(p={}, l={}, {})", self.p, self.l, az)
    }
}

/// Generalized Laguerre polynomial L_p^l(x) by the three-term recurrence.
fn laguerre(p: u32, l: u32, x: f64) -> f64 {
    let a = f64::from(l);
    let mut prev = 1.0;
    if p == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for k in 1..p {
        let k = f64::from(k);
        let next = ((2.0 * k + 1.0 + a - x) * cur - (k + a) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

fn normalization(idx: &ModeIndex, waist: f64) -> f64 {
    // p!/(p+l)!
    let ratio: f64 = (idx.p + 1..=idx.p + idx.l).map(|k| 1.0 / f64::from(k)).product();
    let azimuthal = if idx.l == 0 { 1.0 } else { 2f64.sqrt() };
    azimuthal * (2.0 * ratio / PI).sqrt() / waist
}

/// Mode value at `(x, y)`. The azimuthal factor comes from `(x + iy)^l`
/// by repeated multiplication, so `f(−x, −y) = (−1)^l f(x, y)` holds exactly.
fn mode_value(idx: &ModeIndex, waist: f64, norm: f64, x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    let s = r2 / (waist * waist);
    let mut z = Complex64::new(1.0, 0.0);
    for _ in 0..idx.l {
        z *= Complex64::new(x, y);
    }
    let angular = match idx.azimuth {
        Azimuth::Cos => z.re,
        Azimuth::Sin => z.im,
    };
    let radial_scale = (2f64.sqrt() / waist).powi(idx.l as i32);
    norm * radial_scale * angular * laguerre(idx.p, idx.l, 2.0 * s) * (-s).exp()
}

fn check_fits(idx: &ModeIndex, waist: f64, grid: &TransverseGrid) -> Result<(), ModesError> {
    let radius = idx.effective_radius(waist);
    let limit = EXTENT_FRACTION * grid.extent();
    if radius > limit {
        return Err(ModesError::GridTooSmallForMode {
            index: *idx,
            radius,
            limit,
        });
    }
    Ok(())
}

/// Samples one unit-norm mode on `grid`.
pub fn mode_function(idx: &ModeIndex, waist: f64, grid: &TransverseGrid) -> Result<RealField, ModesError> {
    if !(waist.is_finite() && waist > 0.0) {
        return Err(ModesError::BadWaist(waist));
    }
    check_fits(idx, waist, grid)?;
    let norm = normalization(idx, waist);
    Ok(RealField::from_fn(*grid, |x, y| mode_value(idx, waist, norm, x, y)).expect("finite mode samples"))
}

/// Every (p, l, azimuth) with p <= pmax and l <= lmax.
pub fn indices_up_to(pmax: u32, lmax: u32) -> Vec<ModeIndex> {
    let mut out = Vec::new();
    for l in 0..=lmax {
        for p in 0..=pmax {
            out.push(ModeIndex { p, l, azimuth: Azimuth::Cos });
            if l > 0 {
                out.push(ModeIndex { p, l, azimuth: Azimuth::Sin });
            }
        }
    }
    out
}

/// Deviation of a Gram matrix from the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramDeviation {
    pub max_offdiag: f64,
    pub max_diag: f64,
}

impl GramDeviation {
    pub fn max_entry(&self) -> f64 {
        self.max_offdiag.max(self.max_diag)
    }
}

/// Finite set of sampled modes sharing a waist and grid.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    waist: f64,
    grid: TransverseGrid,
    indices: Vec<ModeIndex>,
    modes: Vec<RealField>,
    lookup: HashMap<ModeIndex, usize>,
}

impl ModeBasis {
    pub fn new(waist: f64, pmax: u32, lmax: u32, grid: &TransverseGrid) -> Result<Self, ModesError> {
        Self::with_indices(waist, indices_up_to(pmax, lmax), grid)
    }

    pub fn with_indices(waist: f64, indices: Vec<ModeIndex>, grid: &TransverseGrid) -> Result<Self, ModesError> {
        for idx in &indices {
            if !(waist.is_finite() && waist > 0.0) {
                return Err(ModesError::BadWaist(waist));
            }
            check_fits(idx, waist, grid)?;
        }
        let modes = indices
            .par_iter()
            .map(|idx| mode_function(idx, waist, grid))
            .collect::<Result<Vec<_>, _>>()?;
        let lookup = indices.iter().enumerate().map(|(i, idx)| (*idx, i)).collect();
        Ok(Self {
            waist,
            grid: *grid,
            indices,
            modes,
            lookup,
        })
    }

    pub fn waist(&self) -> f64 {
        self.waist
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn indices(&self) -> &[ModeIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn mode(&self, idx: &ModeIndex) -> Option<&RealField> {
        self.lookup.get(idx).map(|&i| &self.modes[i])
    }

    /// Row-major Gram matrix of grid inner products.
    pub fn gram(&self) -> Vec<f64> {
        let m = self.modes.len();
        let h2 = self.grid.spacing().powi(2);
        (0..m * m)
            .into_par_iter()
            .map(|k| {
                let (a, b) = (&self.modes[k / m], &self.modes[k % m]);
                a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>() * h2
            })
            .collect()
    }

    pub fn gram_deviation(&self) -> GramDeviation {
        let m = self.modes.len();
        let gram = self.gram();
        let mut dev = GramDeviation {
            max_offdiag: 0.0,
            max_diag: 0.0,
        };
        for i in 0..m {
            for j in 0..m {
                let g = gram[i * m + j];
                if i == j {
                    dev.max_diag = dev.max_diag.max((g - 1.0).abs());
                } else {
                    dev.max_offdiag = dev.max_offdiag.max(g.abs());
                }
            }
        }
        dev
    }
}

/// Expansion coefficients b_{p,l,i} of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoefficients {
    pub entries: Vec<(ModeIndex, Complex64)>,
    /// Relative L² residual of the reconstruction, when known.
    pub residual: Option<f64>,
}

impl ModeCoefficients {
    pub fn from_entries(entries: Vec<(ModeIndex, Complex64)>) -> Self {
        Self {
            entries,
            residual: None,
        }
    }

    pub fn get(&self, idx: &ModeIndex) -> Option<Complex64> {
        self.entries.iter().find(|(i, _)| i == idx).map(|(_, c)| *c)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest coefficient magnitude, 0 when empty.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }

    /// Applies `c → U·c + V·c*`, the action of the amplifier on a real mode.
    pub fn amplified(&self, pair: &TransferPair) -> Self {
        Self::from_entries(
            self.entries
                .iter()
                .map(|(i, c)| (*i, pair.u * c + pair.v * c.conj()))
                .collect(),
        )
    }
}

/// Projects `field` onto every basis mode and records the reconstruction residual.
pub fn decompose(field: &ComplexField, basis: &ModeBasis) -> Result<ModeCoefficients, ModesError> {
    if *field.grid() != basis.grid {
        return Err(ModesError::GridMismatch);
    }
    let h2 = basis.grid.spacing().powi(2);
    let entries: Vec<(ModeIndex, Complex64)> = basis
        .indices
        .par_iter()
        .zip(basis.modes.par_iter())
        .map(|(idx, mode)| {
            let c: Complex64 = mode
                .values()
                .iter()
                .zip(field.values())
                .map(|(m, f)| f * m)
                .sum();
            (*idx, c * h2)
        })
        .collect();
    let mut coeffs = ModeCoefficients::from_entries(entries);
    let rebuilt = reconstruct(&coeffs, basis)?;
    coeffs.residual = Some(rebuilt.relative_l2(field));
    Ok(coeffs)
}

/// `Σ b_m·f_m` on the basis grid.
pub fn reconstruct(coeffs: &ModeCoefficients, basis: &ModeBasis) -> Result<ComplexField, ModesError> {
    let mut out = vec![Complex64::new(0.0, 0.0); basis.grid.len()];
    for (idx, c) in &coeffs.entries {
        let mode = basis.mode(idx).ok_or(ModesError::UnknownMode(*idx))?;
        for (o, m) in out.iter_mut().zip(mode.values()) {
            *o += c * m;
        }
    }
    Ok(ComplexField::from_raw(basis.grid, out).expect("basis grid length"))
}

/// Partitions coefficients by the parity of l: `(even, odd)`.
pub fn split_even_odd(coeffs: &ModeCoefficients) -> (ModeCoefficients, ModeCoefficients) {
    let (even, odd): (Vec<_>, Vec<_>) = coeffs.entries.iter().partition(|(i, _)| i.is_even());
    (ModeCoefficients::from_entries(even), ModeCoefficients::from_entries(odd))
}

/// Confocal amplification in mode space with an ideal pupil: decompose,
/// keep the resonant even-l family, apply (U, V), reconstruct.
pub fn amplify_in_mode_space(
    field: &ComplexField,
    basis: &ModeBasis,
    pair: &TransferPair,
) -> Result<ComplexField, ModesError> {
    let coeffs = decompose(field, basis)?;
    let (even, _) = split_even_odd(&coeffs);
    reconstruct(&even.amplified(pair), basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::even_projection;

    fn grid(n: usize, extent: f64) -> TransverseGrid {
        TransverseGrid::new(n, extent).unwrap()
    }

    fn idx(p: u32, l: u32, az: Azimuth) -> ModeIndex {
        ModeIndex::new(p, l, az).unwrap()
    }

    #[test]
    fn laguerre_low_orders() {
        let x = 0.73;
        assert_eq!(laguerre(0, 3, x), 1.0);
        assert!((laguerre(1, 2, x) - (3.0 - x)).abs() < 1e-15);
        // L_2^1(x) = (x² − 6x + 6)/2
        assert!((laguerre(2, 1, x) - (x * x - 6.0 * x + 6.0) / 2.0).abs() < 1e-14);
        // L_3^0(x) = (−x³ + 9x² − 18x + 6)/6
        let l3 = (-x * x * x + 9.0 * x * x - 18.0 * x + 6.0) / 6.0;
        assert!((laguerre(3, 0, x) - l3).abs() < 1e-14);
    }

    #[test]
    fn fundamental_mode_closed_form_and_norm() {
        let w = 1.0;
        let g = grid(128, 6.0);
        let f = mode_function(&idx(0, 0, Azimuth::Cos), w, &g).unwrap();
        let (x, y) = g.position(70, 61);
        let expected = (2.0 / PI).sqrt() / w * (-(x * x + y * y) / (w * w)).exp();
        assert!((f.at(70, 61) - expected).abs() < 1e-15);
        let norm = f.to_complex().norm_sqr();
        assert!((norm - 1.0).abs() < 1e-8, "{norm}");
    }

    #[test]
    fn sine_parity_needs_nonzero_l() {
        assert_eq!(ModeIndex::new(2, 0, Azimuth::Sin), Err(ModesError::InvalidIndex(2)));
        assert_eq!(indices_up_to(1, 1).len(), 2 + 4);
    }

    #[test]
    fn parity_is_exact() {
        let g = grid(32, 6.0);
        for index in indices_up_to(2, 3) {
            let f = mode_function(&index, 1.0, &g).unwrap();
            let sign = if index.is_even() { 1.0 } else { -1.0 };
            assert_eq!(f.reflected(), f.map(|v| sign * v), "{index}");
        }
    }

    #[test]
    fn radial_node_orthogonal() {
        let g = grid(128, 6.0);
        let f00 = mode_function(&idx(0, 0, Azimuth::Cos), 1.0, &g).unwrap();
        let f10 = mode_function(&idx(1, 0, Azimuth::Cos), 1.0, &g).unwrap();
        let h2 = g.spacing().powi(2);
        let dot: f64 = f00.values().iter().zip(f10.values()).map(|(a, b)| a * b).sum::<f64>() * h2;
        assert!(dot.abs() < 1e-6);
        // one sign change along the radius
        let mid = g.center();
        let signs: Vec<bool> = (mid..g.side()).map(|c| *f10.at(mid, c) > 0.0).collect();
        assert_eq!(signs.windows(2).filter(|w| w[0] != w[1]).count(), 1);
    }

    #[test]
    fn mode_too_wide_for_grid() {
        let g = grid(32, 2.0);
        // w√(2·2 + 1 + 1) ≈ 2.45 > 1.4
        assert!(matches!(
            mode_function(&idx(2, 1, Azimuth::Cos), 1.0, &g),
            Err(ModesError::GridTooSmallForMode { .. })
        ));
        assert!(ModeBasis::new(1.0, 2, 1, &g).is_err());
    }

    #[test]
    fn decompose_single_and_pair() {
        let g = grid(96, 6.0);
        let basis = ModeBasis::new(1.0, 3, 2, &g).unwrap();
        let f00 = basis.mode(&idx(0, 0, Azimuth::Cos)).unwrap().to_complex();
        let f10 = basis.mode(&idx(1, 0, Azimuth::Cos)).unwrap().to_complex();

        let c = decompose(&f00, &basis).unwrap();
        for (i, v) in &c.entries {
            let expect = if *i == idx(0, 0, Azimuth::Cos) { 1.0 } else { 0.0 };
            assert!((v - expect).norm() < 1e-8, "{i}: {v}");
        }

        let mix = ComplexField::from_raw(
            g,
            f00.values().iter().zip(f10.values()).map(|(a, b)| a * 2.0 + b * 3.0).collect(),
        )
        .unwrap();
        let c = decompose(&mix, &basis).unwrap();
        assert!((c.get(&idx(0, 0, Azimuth::Cos)).unwrap() - 2.0).norm() < 1e-8);
        assert!((c.get(&idx(1, 0, Azimuth::Cos)).unwrap() - 3.0).norm() < 1e-8);
        assert!(c.residual.unwrap() < 1e-8);
    }

    #[test]
    fn grid_mismatch() {
        let basis = ModeBasis::new(1.0, 1, 1, &grid(32, 6.0)).unwrap();
        let f = ComplexField::zeros(grid(32, 5.0));
        assert_eq!(decompose(&f, &basis), Err(ModesError::GridMismatch));
    }

    #[test]
    fn completeness_trend_for_wider_gaussian() {
        let w = 1.0;
        let g = grid(128, 8.0);
        let wide = 1.3 * w;
        let field = ComplexField::from_fn(g, |x, y| Complex64::new((-(x * x + y * y) / (wide * wide)).exp(), 0.0)).unwrap();
        let residuals: Vec<f64> = [2, 4, 8]
            .iter()
            .map(|&p| {
                let basis = ModeBasis::new(w, p, 0, &g).unwrap();
                decompose(&field, &basis).unwrap().residual.unwrap()
            })
            .collect();
        assert!(residuals[0] > residuals[1] && residuals[1] > residuals[2], "{residuals:?}");
    }

    #[test]
    fn split_examples() {
        let all_even = ModeCoefficients::from_entries(vec![
            (idx(0, 0, Azimuth::Cos), Complex64::new(1.0, 0.0)),
            (idx(1, 2, Azimuth::Sin), Complex64::new(0.5, 0.0)),
        ]);
        let (even, odd) = split_even_odd(&all_even);
        assert!(odd.is_empty());
        assert_eq!(even.entries.len(), 2);

        let g = grid(64, 6.0);
        let basis = ModeBasis::new(1.0, 2, 2, &g).unwrap();
        let lone = ModeCoefficients::from_entries(vec![(idx(0, 1, Azimuth::Cos), Complex64::new(1.0, 0.0))]);
        let (even, _) = split_even_odd(&lone);
        assert_eq!(reconstruct(&even, &basis).unwrap(), ComplexField::zeros(g));
    }

    #[test]
    fn even_split_matches_even_projection() {
        let g = grid(96, 7.0);
        let basis = ModeBasis::new(1.0, 4, 4, &g).unwrap();
        let weights = [(0, 0, 1.0), (1, 1, 0.7), (0, 2, -0.4), (2, 3, 0.25), (1, 4, 0.3)];
        let mut coeffs = Vec::new();
        for (p, l, w) in weights {
            coeffs.push((idx(p, l, Azimuth::Cos), Complex64::new(w, 0.1 * w)));
        }
        coeffs.push((idx(3, 1, Azimuth::Sin), Complex64::new(0.2, 0.0)));
        let field = reconstruct(&ModeCoefficients::from_entries(coeffs), &basis).unwrap();
        let c = decompose(&field, &basis).unwrap();
        let (even, _) = split_even_odd(&c);
        let via_modes = reconstruct(&even, &basis).unwrap();
        let via_reflection = even_projection(&field);
        assert!(via_modes.relative_l2(&via_reflection) < 1e-8);
    }

    #[test]
    fn gram_close_to_identity() {
        let g = grid(96, 6.0);
        let basis = ModeBasis::new(1.0, 2, 2, &g).unwrap();
        assert!(basis.gram_deviation().max_entry() < 1e-6);
    }
}
