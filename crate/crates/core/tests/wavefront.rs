use cosmon_core::wavefront::{phase_energy, WindowSpec};
use cosmon_core::{Complex64, RadialGrid, SpacetimeField, TimeGrid};
use proptest::prelude::*;

fn packet(t0: f64, r0: f64, l0: f64, x0: f64) -> SpacetimeField {
    let (tg, rg) = (TimeGrid::new(8.0, 64).unwrap(), RadialGrid::staggered(8.0, 64).unwrap());
    SpacetimeField::from_fn(tg, rg, |t, r| {
        let d = t - t0 - 8.0 * ((t - t0) / 8.0).round();
        Complex64::from_polar((-(d * d + (r - r0).powi(2)) / 0.98).exp(), l0 * t + x0 * r)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn phase_energy_preserves_the_norm(t0 in 0.0f64..8.0, r0 in 2.5f64..5.5, l in -10.0f64..10.0, x in -10.0f64..10.0) {
        let u = packet(t0, r0, l, x);
        let w = WindowSpec { keep_rel: 1e-3, ..WindowSpec::isotropic(&u, 0.5) };
        let m = phase_energy(&u, w).unwrap();
        prop_assert!((m.total / u.norm_sq() - 1.0).abs() < 0.02);
        prop_assert!(m.cells.iter().all(|c| c.energy >= 0.0));
    }

    #[test]
    fn phase_energy_is_quadratic(c in 0.1f64..10.0) {
        let u = packet(4.0, 4.0, 5.0, -3.0);
        let w = WindowSpec::isotropic(&u, 0.5);
        let a = phase_energy(&u, w).unwrap();
        let b = phase_energy(&u.scale(Complex64::new(0.0, c)), w).unwrap();
        prop_assert!((b.total / (c * c * a.total) - 1.0).abs() < 1e-10);
    }
}
