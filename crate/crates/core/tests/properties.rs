use gyroball::bodyframe::InertiaData;
use gyroball::classify;
use gyroball::elliptic::{self, Lattice, QuarticBinomial};
use gyroball::neumann::{self, NeumannState, NeumannSystem};
use gyroball::params::{Configuration, SystemParams};
use gyroball::voronec;
use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn zhukovsky(r1: f64, r2: f64, m: f64, a1: f64, a2: f64, c2: f64, k: f64, config: Configuration) -> SystemParams {
    SystemParams { r1, r2, m, a1, c1: a1 + a2, a2, c2, k, config }
}

prop_compose! {
    fn outer_params()(r1 in 0.5..5.0, r2 in 0.2..2.0, m in 0.2..4.0, a1 in 0.05..2.0, a2 in 0.02..1.0,
                      c2 in 0.02..1.0, k in -3.0..3.0) -> SystemParams {
        zhukovsky(r1, r2, m, a1, a2, c2, k, Configuration::Outer)
    }
}

prop_compose! {
    fn any_config()(p in outer_params(), which in 0..3usize, ratio in 1.05..6.0) -> SystemParams {
        match which {
            0 => p,
            1 => SystemParams { r1: p.r2 * ratio, config: Configuration::Inner, ..p },
            _ => SystemParams { r2: p.r1 * ratio, config: Configuration::Enveloping, ..p },
        }
    }
}

prop_compose! {
    fn state()(u in 0.3..2.8, v in 0.0..6.28, theta in 0.0..6.28, u1 in 0.3..2.8, v1 in 0.0..6.28,
               s in -2.0..2.0, tau in -2.0..2.0, n in -2.0..2.0) -> NeumannState {
        NeumannState { u, v, theta, u1, v1, s, tau, n }
    }
}

proptest! {
    #[test]
    fn derived_constants_are_pure_and_satisfy_identities(p in any_config(), h in 0.0..3.0, x0 in -1.0..1.0) {
        let dc = p.derive_constants().unwrap();
        let again = p.derive_constants().unwrap();
        prop_assert_eq!(format!("{dc:?}"), format!("{again:?}"));
        prop_assert!(dc.mu > 1.0 && dc.p > dc.a && dc.a > 0.0);
        match p.config {
            Configuration::Outer => prop_assert!(dc.epsilon > 0.0 && dc.epsilon < 1.0),
            Configuration::Inner => prop_assert!(dc.epsilon > 1.0),
            Configuration::Enveloping => prop_assert!(dc.epsilon < 0.0),
        }
        prop_assume!(p.k.abs() > 0.05);
        let rc = p.reduced_constants(h, p.k.abs() + 0.5, x0).unwrap();
        let scale = rc.b0.abs();
        prop_assert!((rc.b0 - rc.b1 - dc.a).abs() < 1e-12 * scale);
        prop_assert!((rc.b1 - dc.p - dc.i * (dc.mu - 1.0)).abs() < 1e-12 * scale);
        prop_assert!(rc.b0 > rc.b1 && rc.b1 > dc.p);
    }

    #[test]
    fn wp_is_even_and_solves_its_equation(g2 in -5.0..5.0f64, g3 in -5.0..5.0f64, re in -3.0..3.0f64, im in -3.0..3.0f64) {
        prop_assume!((g2 * g2 * g2 - 27.0 * g3 * g3).abs() > 1e-2);
        let lat = Lattice::new(g2, g3).unwrap();
        let z = C64::new(re, im);
        let (wp, wpp) = match lat.wp_pair(z) {
            Ok(v) => v,
            Err(_) => return Ok(()),
        };
        prop_assume!(wp.norm() < 1e4);
        let wm = lat.wp(-z).unwrap();
        prop_assert!((wp - wm).norm() < 1e-10 * (1.0 + wp.norm()));
        let rhs = 4.0 * wp * wp * wp - g2 * wp - g3;
        let scale = 1.0 + wpp.norm_sqr() + rhs.norm();
        prop_assert!((wpp * wpp - rhs).norm() < 1e-10 * scale);
    }

    #[test]
    fn quartic_point_lies_on_the_cubic(c in prop::array::uniform5(-3.0..3.0f64), shift in -2.0..2.0f64) {
        prop_assume!(c[4].abs() > 0.1);
        let q = QuarticBinomial::from_ascending(c);
        let w = elliptic::weierstrass_from_quartic(&q);
        let cubic = 4.0 * w.wp_zeta.powi(3) - w.g2 * w.wp_zeta - w.g3;
        let scale = 1.0 + w.wp_prime_zeta.powi(2) + cubic.abs();
        prop_assert!((w.wp_prime_zeta.powi(2) - cubic).abs() < 1e-10 * scale);

        // X(x + shift) has the same invariants.
        let p = q.to_poly();
        let shifted: Vec<f64> = (0..5)
            .map(|j| {
                // Taylor coefficient of order j at `shift`.
                let mut d = p.clone();
                for _ in 0..j {
                    d = d.derivative();
                }
                d.eval(shift) / (1..=j).product::<usize>() as f64
            })
            .collect();
        let ws = elliptic::weierstrass_from_quartic(&QuarticBinomial::from_ascending(shifted.try_into().unwrap()));
        prop_assert!((ws.g2 - w.g2).abs() < 1e-8 * (1.0 + w.g2.abs()));
        prop_assert!((ws.g3 - w.g3).abs() < 1e-8 * (1.0 + w.g3.abs()));
    }

    #[test]
    fn rolling_preserves_arc_length(p in outer_params(), st in state()) {
        let dc = p.derive_constants().unwrap();
        let (ud, vd) = neumann::contact_rates(&st, &dc).unwrap();
        let (u1d, v1d) = neumann::constraint_rhs(&st, &dc).unwrap();
        let lhs = p.r1 * p.r1 * (u1d * u1d + st.u1.sin().powi(2) * v1d * v1d);
        let rhs = p.r2 * p.r2 * (ud * ud + st.u.sin().powi(2) * vd * vd);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (rhs + 1e-300));
    }

    #[test]
    fn alignment_is_exact_and_idempotent(p in outer_params(), st in state()) {
        let dc = p.derive_constants().unwrap();
        let a = neumann::align_axis(&st, &p, &dc);
        prop_assume!(a.u1.sin().abs() > 1e-3);
        let g = neumann::integrals(&a, &p, &dc).gamma2.sqrt();
        let r = neumann::alignment_residual(&a, &p, &dc);
        prop_assert!(r.iter().all(|x| x.abs() < 1e-10 * (1.0 + g)), "{:?}", r);
        let b = neumann::align_axis(&a, &p, &dc);
        for (x, y) in a.to_array().iter().zip(b.to_array()) {
            prop_assert!((x - y).abs() < 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn classification_ignores_time_reversal_and_rescaling(p in outer_params(), st in state(), lambda in 0.3..3.0f64) {
        prop_assume!(p.k.abs() > 0.1);
        let sys = NeumannSystem::new(p).unwrap();
        let st = sys.align_axis(&st);
        let Ok(base) = classify::classify_state(&sys, &st) else { return Ok(()) };

        // Reversing time flips every rate, the rotor momentum included.
        let rev_sys = NeumannSystem::new(SystemParams { k: -p.k, ..p }).unwrap();
        let rev = NeumannState { s: -st.s, tau: -st.tau, n: -st.n, ..st };
        let r = classify::classify_state(&rev_sys, &rev).unwrap();
        prop_assert_eq!(r.family_moving, base.family_moving);
        prop_assert_eq!(&r.special, &base.special);

        // Scaling all rates, and k with them, changes the energy level but
        // leaves the quartic unchanged.
        let fast_sys = NeumannSystem::new(SystemParams { k: lambda * p.k, ..p }).unwrap();
        let fast = NeumannState { s: lambda * st.s, tau: lambda * st.tau, n: lambda * st.n, ..st };
        let f = classify::classify_state(&fast_sys, &fast).unwrap();
        prop_assert_eq!(f.family_moving, base.family_moving);
        prop_assert_eq!(f.diagnostics.get("phi_roots_in_interval"), base.diagnostics.get("phi_roots_in_interval"));
    }

    #[test]
    fn constraint_coefficients_are_antisymmetric(p in any_config(), q in prop::array::uniform5(0.3..2.8f64)) {
        let dc = p.derive_constants().unwrap();
        let data = voronec::constraint_coeffs(&q, &dc).unwrap();
        prop_assert!(data.antisymmetry_residual() < 1e-10);
    }

    #[test]
    fn omega_round_trip(c in prop::array::uniform3(0.1..3.0f64), d in 0.0..3.0, w in prop::array::uniform3(-3.0..3.0f64),
                        g in prop::array::uniform3(-1.0..1.0f64)) {
        let gamma = Vector3::from(g);
        prop_assume!(gamma.norm() > 0.1);
        let gamma = gamma.normalize();
        let inr = InertiaData::new(Vector3::from(c), d, Vector3::zeros(), 1.0);
        let omega = Vector3::from(w);
        let back = inr.omega_from_g(&inr.g_from_omega(&omega, &gamma), &gamma);
        prop_assert!((back - omega).norm() < 1e-10 * (1.0 + omega.norm()) * (1.0 + d / c.iter().cloned().fold(f64::INFINITY, f64::min)));
    }
}
