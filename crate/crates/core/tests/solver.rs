use cosmon_core::solver::{absorber_symbol, apply_w, solve_forward, AbsorberSpec, GridSpec};
use cosmon_core::{BackgroundParams, Complex64, ModeParams, SpacetimeField};
use proptest::prelude::*;

fn setup(n_t: usize, n_r: usize) -> (AbsorberSpec, GridSpec) {
    let bg = BackgroundParams::new(1.0).unwrap();
    let mode = ModeParams::new(1, 0.5).unwrap();
    let spec = AbsorberSpec::new(&bg, 3.5, 3.0).unwrap();
    (spec, GridSpec { period: 12.0, n_t, r_max: 8.0, n_r, bg, mode })
}

fn bump(grid: &GridSpec, t0: f64, r0: f64) -> SpacetimeField {
    SpacetimeField::from_fn(grid.time(), grid.radial(), |t, r| {
        let d = t - t0 - 12.0 * ((t - t0) / 12.0).round();
        Complex64::new((-(d * d + (r - r0).powi(2)) / (2.0 * 0.1f64.powi(2))).exp(), 0.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn absorber_sign(r in 0.0f64..10.0, l in -100.0f64..100.0, x in -100.0f64..100.0, e in -20.0f64..20.0) {
        let (spec, _) = setup(8, 8);
        let w = absorber_symbol(&spec, r, l, x, e);
        prop_assert!(w == 0.0 || w.signum() == -l.signum());
        if r < spec.r_abs {
            prop_assert_eq!(w, 0.0);
        }
    }
}

#[test]
fn forward_solve_commutes_with_time_shifts() {
    let (spec, grid) = setup(64, 128);
    let f = bump(&grid, 3.0, 2.0);
    let u = solve_forward(&spec, &grid, &f).unwrap().u;
    let us = solve_forward(&spec, &grid, &f.shift_time(16)).unwrap().u;
    let diff = us.sub(&u.shift_time(16)).unwrap().norm_sq().sqrt();
    assert!(diff <= 1e-10 * u.norm_sq().sqrt(), "{diff}");
}

#[test]
fn forward_solve_is_linear() {
    let (spec, grid) = setup(32, 96);
    let (f, g) = (bump(&grid, 3.0, 1.5), bump(&grid, 7.0, 2.2));
    let c = Complex64::new(0.3, -1.7);
    let uf = solve_forward(&spec, &grid, &f).unwrap().u;
    let ug = solve_forward(&spec, &grid, &g).unwrap().u;
    let sum = solve_forward(&spec, &grid, &f.add(&g.scale(c)).unwrap()).unwrap().u;
    let diff = sum.sub(&uf.add(&ug.scale(c)).unwrap()).unwrap().norm_sq().sqrt();
    assert!(diff <= 1e-9 * sum.norm_sq().sqrt(), "{diff}");
}

#[test]
fn w_vanishes_inside_the_absorber_radius() {
    let (spec, grid) = setup(32, 128);
    let f = bump(&grid, 3.0, 3.0).map(|_, r, z| if r < spec.r_abs { z } else { Complex64::new(0.0, 0.0) });
    assert!(f.max_abs() > 0.0);
    assert_eq!(apply_w(&spec, &grid.mode, &f).max_abs(), 0.0);
}

#[test]
fn sources_outside_r0_are_rejected() {
    let (spec, grid) = setup(16, 64);
    assert!(solve_forward(&spec, &grid, &bump(&grid, 3.0, 4.0)).is_err());
}
