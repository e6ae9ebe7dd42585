//! Property tests for the spectral machinery: transform round-trips,
//! Parseval, derivative exactness, parity bookkeeping, dealias behavior
//! and the vertical-velocity closure, over randomized fields.

use std::sync::Arc;

use proptest::prelude::*;

use hydrolim_core::diagnostics::{ladyzhenskaya_ratio, random_band_limited, LadyVariant};
use hydrolim_core::field::{Parity, PhysicalField};
use hydrolim_core::symmetry::{diagnostic_w, divergence_h, make_initial_data, InitialDataRecipe};
use hydrolim_core::{Axis, Grid};

fn grid(n: usize) -> Arc<Grid> {
    let two_pi = 2.0 * std::f64::consts::PI;
    Grid::new(n, n, n, two_pi, two_pi).unwrap()
}

/// Deterministic full-spectrum noise from a seed.
fn noise_field(g: &Arc<Grid>, seed: u64) -> PhysicalField {
    let mut state = seed | 1;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let values: Vec<f64> = (0..g.size()).map(|_| next()).collect();
    PhysicalField::new(g, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip_reproduces_any_collocation_field(seed in any::<u64>()) {
        let g = grid(8);
        let f = noise_field(&g, seed);
        let back = f.to_spectral().to_physical();
        let scale = f.max_abs().max(1e-6);
        let worst = f.values().iter().zip(back.values())
            .map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
        prop_assert!(worst / scale < 1e-12, "round-trip error {}", worst / scale);
    }

    #[test]
    fn parseval_holds_for_band_limited_fields(seed in any::<u64>()) {
        let g = grid(16);
        let f = random_band_limited(&g, 4, seed).dealias();
        let parseval = f.l2();
        let quad = f.to_physical().quadrature_l2();
        if parseval > 1e-12 {
            prop_assert!((parseval - quad).abs() / parseval < 1e-10);
        }
    }

    #[test]
    fn derivative_of_in_mask_harmonic_is_exact(
        k1 in -2i64..=2, k2 in -2i64..=2, k3 in -2i64..=2, phase in 0.0..std::f64::consts::TAU
    ) {
        let g = grid(8);
        let (kx, ky, kz) = (k1 as f64, k2 as f64, std::f64::consts::PI * k3 as f64);
        let f = PhysicalField::from_fn(&g, |x, y, z| (kx * x + ky * y + kz * z + phase).cos());
        let spec = f.to_spectral();
        for (axis, k) in [(Axis::X, kx), (Axis::Y, ky), (Axis::Z, kz)] {
            let d = spec.derivative(axis).to_physical();
            let expect = PhysicalField::from_fn(&g, |x, y, z| -k * (kx * x + ky * y + kz * z + phase).sin());
            let worst = d.values().iter().zip(expect.values())
                .map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
            prop_assert!(worst < 1e-11, "axis {axis:?}: error {worst:e}");
        }
    }

    #[test]
    fn parity_decomposition_and_z_derivative_bookkeeping(seed in any::<u64>()) {
        let g = grid(8);
        let f = random_band_limited(&g, 3, seed);
        let even = f.parity_project(Parity::Even);
        let odd = f.parity_project(Parity::Odd);
        let mut sum = even.clone();
        sum.axpy(1.0, &odd);
        let norm = f.l2().max(1e-12);
        prop_assert!(sum.sub(&f).l2() / norm < 1e-14);
        // dz maps the even part to a field whose even part is round-off.
        let dz = even.derivative(Axis::Z);
        prop_assert!(dz.parity_deviation(Parity::Odd) < 1e-12);
    }

    #[test]
    fn dealias_is_idempotent_and_contractive(seed in any::<u64>()) {
        let g = grid(8);
        let f = noise_field(&g, seed).to_spectral();
        let d = f.dealias();
        prop_assert!(d.l2() <= f.l2());
        let dd = d.dealias();
        let same = d.coeffs().iter().zip(dd.coeffs())
            .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits());
        prop_assert!(same, "dealias touched in-mask modes");
    }

    #[test]
    fn vertical_velocity_closes_divergence_for_any_recipe(seed in any::<u64>()) {
        let g = grid(16);
        let v0 = make_initial_data(&InitialDataRecipe::random(1.0, seed), &g).unwrap();
        let w = diagnostic_w(&v0.v).unwrap();
        let mut resid = w.derivative(Axis::Z);
        resid.axpy(1.0, &divergence_h(&v0.v));
        prop_assert!(resid.l2() < 1e-12, "closure residual {:e}", resid.l2());
    }

    #[test]
    fn ladyzhenskaya_ratio_is_scale_covariant(seed in any::<u64>(), alpha in 0.01..100.0f64) {
        let g = grid(8);
        let f = random_band_limited(&g, 2, seed);
        let gg = random_band_limited(&g, 2, seed.wrapping_add(1));
        let h = random_band_limited(&g, 2, seed.wrapping_add(2));
        let r1 = ladyzhenskaya_ratio(&f, &gg, &h, LadyVariant::A).unwrap();
        let mut fs = f.clone();
        fs.scale(alpha);
        let r2 = ladyzhenskaya_ratio(&fs, &gg, &h, LadyVariant::A).unwrap();
        prop_assert!((r1 - r2).abs() <= 1e-12 * r1.max(1.0), "ratio moved: {r1} -> {r2}");
    }
}
