use cosmon_core::background::principal_symbol;
use cosmon_core::rays::{forward_flowout, hamilton_field, integrate_ray};
use cosmon_core::{BackgroundParams, PhasePoint};
use proptest::prelude::*;

fn null_seed(a: f64, t: f64, r: f64, lam: f64, outgoing: bool) -> PhasePoint {
    let xi = lam.abs() * (1.0 - a * a / (r * r)).sqrt() * if outgoing { 1.0 } else { -1.0 };
    PhasePoint { t, ..PhasePoint::radial(r, lam, xi) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rays_follow_the_closed_form_and_conserve_lambda(
        a in 0.3f64..3.0, rr in 1.0f64..6.0, lam in prop_oneof![-4.0f64..-0.2, 0.2f64..4.0], out in any::<bool>(),
    ) {
        let bg = BackgroundParams::new(a).unwrap();
        let q0 = null_seed(a, 0.0, a * rr, lam, out);
        let tol = 1e-10;
        let p = integrate_ray(&bg, &q0, (-5.0, 5.0), tol).unwrap();
        let dev = p.closed_form_deviation().unwrap();
        prop_assert!(dev <= 10.0 * tol, "{dev:e}");
        for x in &p.samples {
            prop_assert_eq!(x.q.lambda, lam);
            prop_assert_eq!(x.q.eta, 0.0);
            prop_assert!(principal_symbol(&bg, &x.q).unwrap().abs() <= 1e2 * tol * lam * lam);
        }
    }

    #[test]
    fn time_speed_is_at_least_lambda_far_out(a in 0.3f64..3.0, rr in 2.0f64..20.0, lam in 0.2f64..4.0, sgn in any::<bool>()) {
        let bg = BackgroundParams::new(a).unwrap();
        let lam = if sgn { lam } else { -lam };
        let q = null_seed(a, 0.0, a * rr, lam, true);
        let v = hamilton_field(&bg, &q).unwrap();
        prop_assert!(v[0].abs() >= lam.abs());
    }

    #[test]
    fn xi_grows_through_the_interface(a in 0.3f64..3.0, lam in prop_oneof![-4.0f64..-0.2, 0.2f64..4.0]) {
        let bg = BackgroundParams::new(a).unwrap();
        let v = hamilton_field(&bg, &PhasePoint::radial(a, lam, 0.0)).unwrap();
        prop_assert!((v[4] - 2.0 * lam * lam / a).abs() <= 1e-12 * v[4]);
    }

    #[test]
    fn flowouts_only_move_forward_in_time(
        t in -3.0f64..3.0, rr in 1.0f64..5.0, lam in prop_oneof![-3.0f64..-0.3, 0.3f64..3.0], out in any::<bool>(),
    ) {
        let bg = BackgroundParams::new(1.0).unwrap();
        let q0 = null_seed(1.0, t, rr, lam, out);
        let rays = forward_flowout(&bg, &[q0], 4.0).unwrap();
        prop_assert_eq!(rays.len(), 1);
        prop_assert!(rays[0].samples.iter().all(|x| x.q.t >= t));
        prop_assert!(rays[0].samples.iter().any(|x| x.q.t >= t + 4.0 - 1e-9));
    }
}

#[test]
fn flowout_of_nothing_is_empty() {
    let bg = BackgroundParams::new(1.0).unwrap();
    assert!(forward_flowout(&bg, &[], 1.0).unwrap().is_empty());
}

#[test]
fn rays_are_identical_across_thread_counts() {
    let bg = BackgroundParams::new(1.0).unwrap();
    let seeds: Vec<PhasePoint> = (0..16).map(|i| null_seed(1.0, 0.1 * i as f64, 1.0 + 0.2 * i as f64, 1.0, i % 2 == 0)).collect();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| forward_flowout(&bg, &seeds, 3.0).unwrap());
    let b = many.install(|| forward_flowout(&bg, &seeds, 3.0).unwrap());
    assert_eq!(a, b);
}
