//! Property tests for the transfer coefficients and the imaging maps.

use num_complex::Complex64;
use paramp_core::field::{ComplexField, TransverseGrid};
use paramp_core::params::{derive_scales, CavityParams, Geometry, OpticalTrain, PupilSpec};
use paramp_core::propagation::{self, amplify_confocal, amplify_planar, direct_convolution_oracle, fft_convolve};
use paramp_core::transfer::{self, gain, gain_closed_form, noise_figure, squeeze, transfer_pair_guarded};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GUARD: f64 = 1e-6;

fn setup(geometry: Geometry, detuning: f64, pump: f64) -> (CavityParams, OpticalTrain) {
    let c = CavityParams::new(1e8, detuning, pump, geometry).unwrap();
    let t = derive_scales(&c, 1e-6, 0.1).unwrap();
    (c, t)
}

fn random_field(grid: TransverseGrid, rng: &mut ChaCha8Rng) -> ComplexField {
    let values = (0..grid.len())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    ComplexField::new(grid, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn bogoliubov_identity(dp in -10.0..10.0_f64, dm in -10.0..10.0_f64, pump in 0.0..0.95_f64) {
        if let Ok(p) = transfer_pair_guarded(dp, dm, pump, GUARD) {
            prop_assert!((p.u.norm_sqr() - p.v.norm_sqr() - 1.0).abs() < 1e-10);
            let (mu, mv) = (p.u.norm(), p.v.norm());
            prop_assert!(((mu + mv) * (mu - mv) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn denominator_reciprocity(
        detuning in -3.0..3.0_f64,
        omega in -3.0..3.0_f64,
        r in 0.0..2.0_f64,
        pump in 0.0..0.95_f64,
    ) {
        let (c, t) = setup(Geometry::Planar, detuning, pump);
        let rho = r * t.rho0();
        let fwd = transfer::pair_at(&c, &t, rho, omega);
        let back = transfer::pair_at(&c, &t, rho, -omega);
        if let (Ok(f), Ok(b)) = (fwd, back) {
            let d = f.denominator().conj() - b.denominator();
            prop_assert!(d.norm() <= 1e-14 * f.denominator().norm().max(1.0));
        }
    }

    #[test]
    fn gain_matches_squared_mismatch_form(delta in -5.0..5.0_f64, pump in 0.0..0.95_f64) {
        let p = transfer_pair_guarded(delta, delta, pump, GUARD).unwrap();
        let g = gain(&p);
        prop_assert!((g - gain_closed_form(delta, pump)).abs() <= 1e-12 * g.max(1.0));
    }

    #[test]
    fn noise_figure_at_least_one_at_unit_efficiency(delta in -5.0..5.0_f64, pump in 0.0..0.95_f64) {
        let p = transfer_pair_guarded(delta, delta, pump, GUARD).unwrap();
        let f = noise_figure(gain(&p), &squeeze(&p), 1.0);
        prop_assert!(f >= 1.0 - 1e-12, "F = {f}");
        // strictly above 1 away from δ = 0 whenever the amplifier is on
        if pump > 0.05 && delta.abs() > 1e-2 {
            prop_assert!(f > 1.0 + 1e-9, "F = {f} at δ = {delta}");
        }
    }

    #[test]
    fn confocal_mismatch_ignores_radius(detuning in -3.0..3.0_f64, omega in -3.0..3.0_f64, r in 0.0..10.0_f64) {
        let (c, t) = setup(Geometry::Confocal, detuning, 0.5);
        let with = transfer::mismatch(&c, &t, r * t.rho0(), omega);
        prop_assert_eq!(with, transfer::Mismatch::confocal(detuning, omega));
    }

    #[test]
    fn planar_on_axis_equals_confocal(detuning in -3.0..3.0_f64, omega in -3.0..3.0_f64, pump in 0.0..0.95_f64) {
        let (p, t) = setup(Geometry::Planar, detuning, pump);
        let c = p.with_geometry(Geometry::Confocal);
        if let (Ok(a), Ok(b)) = (transfer::pair_at(&p, &t, 0.0, omega), transfer::pair_at(&c, &t, 0.0, omega)) {
            prop_assert_eq!(a.u, b.u);
            prop_assert_eq!(a.v, b.v);
        }
    }
}

#[test]
fn noise_figure_equals_one_only_on_resonance() {
    for pump in [0.2, 0.5, 0.9] {
        let p = transfer_pair_guarded(0.0, 0.0, pump, GUARD).unwrap();
        let f = noise_figure(gain(&p), &squeeze(&p), 1.0);
        assert!((f - 1.0).abs() < 1e-12);
    }
}

#[test]
fn fft_matches_direct_sum_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [8, 16, 32] {
        let grid = TransverseGrid::new(n, 1.3).unwrap();
        for _ in 0..5 {
            let k = random_field(grid, &mut rng);
            let s = random_field(grid, &mut rng);
            let fast = fft_convolve(&k, &s).unwrap();
            let slow = direct_convolution_oracle(&k, &s).unwrap();
            assert!(fast.relative_l2(&slow) < 1e-10, "n = {n}");
        }
    }
}

#[test]
fn amplification_is_real_linear() {
    let (c, t) = setup(Geometry::Planar, -0.5, 0.6);
    let t = t.with_pupil(PupilSpec::square(1e-2).unwrap());
    let grid = TransverseGrid::new(64, 1.5 * t.rho0()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s1 = random_field(grid, &mut rng).real_part().to_complex();
    let s2 = random_field(grid, &mut rng).real_part().to_complex();
    let (alpha, beta) = (1.7, -0.4);
    let combo = ComplexField::new(
        grid,
        s1.values().iter().zip(s2.values()).map(|(a, b)| a * alpha + b * beta).collect(),
    )
    .unwrap();
    for cavity in [c, c.with_geometry(Geometry::Confocal)] {
        let run = |s: &ComplexField| propagation::amplify(s, &cavity, &t).unwrap().image;
        let (e1, e2, e12) = (run(&s1), run(&s2), run(&combo));
        let expected = ComplexField::new(
            grid,
            e1.values().iter().zip(e2.values()).map(|(a, b)| a * alpha + b * beta).collect(),
        )
        .unwrap();
        assert!(e12.relative_l2(&expected) < 1e-12, "{:?}", cavity.geometry());
    }
}

#[test]
fn even_object_gives_even_image() {
    let (c, t) = setup(Geometry::Planar, -1.0, 0.5);
    let grid = TransverseGrid::new(64, 2.0 * t.rho0()).unwrap();
    let w = 0.4 * t.rho0();
    let off = 0.6 * t.rho0();
    let object = ComplexField::from_fn(grid, |x, y| {
        let a = (-((x - off).powi(2) + y * y) / (w * w)).exp();
        let b = (-((x + off).powi(2) + y * y) / (w * w)).exp();
        Complex64::new(a + b, 0.0)
    })
    .unwrap();
    for pupil in [PupilSpec::square(1e-2).unwrap(), PupilSpec::circular(5e-3).unwrap()] {
        let t = t.with_pupil(pupil);
        for cavity in [c, c.with_geometry(Geometry::Confocal)] {
            let image = propagation::amplify(&object, &cavity, &t).unwrap().image;
            assert!(image.odd_fraction() < 1e-12);
        }
    }
}

#[test]
fn wider_pupil_converges_to_pointwise_map() {
    let (c, t) = setup(Geometry::Planar, 0.0, 0.5);
    let extent = 2.0 * t.rho0();
    let grid = TransverseGrid::new(128, extent).unwrap();
    let w = 0.5 * t.rho0();
    let object = ComplexField::from_fn(grid, |x, y| Complex64::new((-(x * x + y * y) / (w * w)).exp(), 0.0)).unwrap();
    let pointwise = amplify_planar(&object, &c, &t).unwrap().image;
    let errors: Vec<f64> = [4.0, 8.0, 16.0]
        .iter()
        .map(|k| {
            let side = k * t.lambda_f() / extent;
            let t = t.with_pupil(PupilSpec::square(side).unwrap());
            amplify_planar(&object, &c, &t).unwrap().image.relative_l2(&pointwise)
        })
        .collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

#[test]
fn confocal_image_ignores_odd_part_of_object() {
    let (c, t) = setup(Geometry::Confocal, 0.0, 0.5);
    let grid = TransverseGrid::new(32, 2.0 * t.rho0()).unwrap();
    let w = 0.5 * t.rho0();
    let even = ComplexField::from_fn(grid, |x, y| Complex64::new((-(x * x + y * y) / (w * w)).exp(), 0.0)).unwrap();
    let mixed = ComplexField::from_fn(grid, |x, y| {
        let g = (-(x * x + y * y) / (w * w)).exp();
        Complex64::new(g * (1.0 + x / w), 0.0)
    })
    .unwrap();
    let a = amplify_confocal(&even, &c, &t).unwrap();
    let b = amplify_confocal(&mixed, &c, &t).unwrap();
    assert!(a.image.relative_l2(&b.image) < 1e-14);
    let discarded = b.odd_discarded.unwrap();
    assert!(discarded > 0.0 && discarded < 1.0);
}

#[test]
fn geometries_agree_on_axis() {
    let (p, t) = setup(Geometry::Planar, 0.3, 0.7);
    let c = p.with_geometry(Geometry::Confocal);
    let grid = TransverseGrid::new(32, 2.0 * t.rho0()).unwrap();
    let w = t.rho0();
    let object = ComplexField::from_fn(grid, |x, y| Complex64::new((-(x * x + y * y) / (w * w)).exp(), 0.0)).unwrap();
    let a = amplify_planar(&object, &p, &t).unwrap().image;
    let b = amplify_confocal(&object, &c, &t).unwrap().image;
    let mid = grid.center();
    assert_eq!(a.at(mid, mid), b.at(mid, mid));
}
