use gyroball::battery;
use gyroball::bodyframe::{self, BodyState, BodyVariant, InertiaData};
use gyroball::neumann::{self, NeumannState, NeumannSystem};
use gyroball::ode::IntegratorConfig;
use gyroball::params::{Configuration, SystemParams};
use nalgebra::Vector3;

fn params(k: f64) -> SystemParams {
    SystemParams { r1: 2.0, r2: 1.0, m: 1.5, a1: 0.6, c1: 0.9, a2: 0.3, c2: 0.2, k, config: Configuration::Outer }
}

fn initial(sys: &NeumannSystem) -> NeumannState {
    sys.align_axis(&NeumannState { u: 1.1, v: 0.4, theta: 0.3, u1: 1.3, v1: -0.2, s: 0.5, tau: -0.3, n: 0.7 })
}

fn tight() -> IntegratorConfig {
    IntegratorConfig { rel_tol: 1e-11, abs_tol: 1e-13, ..Default::default() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn neumann_integrals_over_ten_units() {
    let sys = NeumannSystem::new(params(1.3)).unwrap();
    let st = initial(&sys);
    let tr = sys.simulate(&st, 10.0, &tight()).unwrap();
    let iv0 = sys.integrals(&st);
    for i in 0..=200 {
        let s = tr.state(0.05 * i as f64);
        let iv = sys.integrals(&s);
        assert!(rel(iv.h, iv0.h) < 1e-9);
        assert!(rel(iv.gamma2, iv0.gamma2) < 1e-9);
        assert!(rel(iv.x0.unwrap(), iv0.x0.unwrap()) < 1e-9);
        // A n + k mu cos u stays put.
        let c = sys.dc.a * s.n + sys.k() * sys.dc.mu * s.u.cos();
        let c0 = sys.dc.a * st.n + sys.k() * sys.dc.mu * st.u.cos();
        assert!((c - c0).abs() < 1e-9);
        let r = neumann::alignment_residual(&s, &sys.params, &sys.dc);
        assert!(r.iter().all(|x| x.abs() < 1e-8), "{r:?}");
    }
}

/// Starts from the end state with all rates negated and checks that the
/// forward run retraces the original path.
fn retrace(k_back: f64, sys: &NeumannSystem, st: &NeumannState) -> f64 {
    let t_end = 5.0;
    let tr = sys.simulate(st, t_end, &tight()).unwrap();
    let end = tr.state(t_end);
    let back_sys = NeumannSystem::new(SystemParams { k: k_back, ..sys.params }).unwrap();
    let rev = NeumannState { s: -end.s, tau: -end.tau, n: -end.n, ..end };
    let back = back_sys.simulate(&rev, t_end, &tight()).unwrap();
    (0..=100)
        .map(|i| {
            let t = t_end * i as f64 / 100.0;
            let a = tr.state(t_end - t);
            let b = back.state(t);
            let b = NeumannState { s: -b.s, tau: -b.tau, n: -b.n, ..b };
            a.to_array().iter().zip(b.to_array()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[test]
fn time_reversal() {
    let sys = NeumannSystem::new(params(0.0)).unwrap();
    assert!(retrace(0.0, &sys, &initial(&sys)) < 1e-7);
    // With the rotor spinning, its momentum is reversed too.
    let sys = NeumannSystem::new(params(1.3)).unwrap();
    assert!(retrace(-1.3, &sys, &initial(&sys)) < 1e-7);
}

#[test]
fn neumann_matches_body_frame_gyrostat() {
    for k in [1.3, -0.7, 0.0] {
        let sys = NeumannSystem::new(params(k)).unwrap();
        let st = initial(&sys);
        let tr = sys.simulate(&st, 10.0, &tight()).unwrap();
        let bt = bodyframe::simulate(&sys.to_bodyframe(&st).unwrap(), &sys.inertia(), BodyVariant::Gyrostat, 10.0, &tight())
            .unwrap();
        let mut dev: f64 = 0.0;
        for i in 0..=100 {
            let t = 0.1 * i as f64;
            let a = sys.to_bodyframe(&tr.state(t)).unwrap();
            let b = bt.state(t);
            dev = dev.max((a.g - b.g).norm()).max((a.gamma - b.gamma).norm());
        }
        assert!(dev < 1e-6, "k = {k}: {dev:e}");
    }
}

fn body_inertia(epsilon: f64) -> InertiaData {
    InertiaData::new(Vector3::new(0.9, 1.1, 1.4), 0.6, Vector3::new(0.2, -0.1, 0.5), epsilon)
}

fn body_start() -> BodyState {
    BodyState { g: Vector3::new(0.4, -0.2, 0.7), gamma: Vector3::new(0.0, 0.6, 0.8) }
}

#[test]
fn unit_normal_and_energy_preserved() {
    let inr = body_inertia(0.7);
    let tr = bodyframe::simulate(&body_start(), &inr, BodyVariant::Gyrostat, 100.0, &tight()).unwrap();
    for i in 0..=1000 {
        let g = tr.state(0.1 * i as f64).gamma.norm();
        assert!((g - 1.0).abs() < 1e-10, "{g}");
    }
    for variant in [BodyVariant::Plain, BodyVariant::Gyrostat, BodyVariant::Rubber] {
        let start = if variant == BodyVariant::Rubber {
            // omega = I^-1 G orthogonal to gamma.
            let omega = Vector3::new(0.5, 0.4, -0.3);
            BodyState { g: inr.ibb.component_mul(&omega), ..body_start() }
        } else {
            body_start()
        };
        let tr = bodyframe::simulate(&start, &inr, variant, 10.0, &tight()).unwrap();
        let e0 = bodyframe::integral_suite(&tr.state(0.0), &inr, variant)[1].1;
        for i in 0..=100 {
            let e = bodyframe::integral_suite(&tr.state(0.1 * i as f64), &inr, variant)[1].1;
            assert!(rel(e, e0) < 1e-9, "{variant:?}");
        }
    }
}

#[test]
fn large_sphere_approaches_plane_rolling() {
    let horizon = 5.0;
    let plane = bodyframe::simulate(&body_start(), &body_inertia(1.0), BodyVariant::Gyrostat, horizon, &tight()).unwrap();
    let r2 = 1.0;
    let devs: Vec<f64> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&r1| {
            let p = SystemParams { r1, r2, ..params(0.0) };
            let eps = p.derive_constants().unwrap().epsilon;
            let tr = bodyframe::simulate(&body_start(), &body_inertia(eps), BodyVariant::Gyrostat, horizon, &tight()).unwrap();
            (0..=100)
                .map(|i| {
                    let t = horizon * i as f64 / 100.0;
                    let (a, b) = (tr.state(t), plane.state(t));
                    (a.g - b.g).norm().max((a.gamma - b.gamma).norm())
                })
                .fold(0.0, f64::max)
        })
        .collect();
    for w in devs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 10.0).abs() < 2.0, "{devs:?}");
    }
}

#[test]
fn f4_is_not_an_integral_away_from_the_plane() {
    let tight = tight();
    let drift = |eps: f64| {
        let inr = body_inertia(eps);
        let tr = bodyframe::simulate(&body_start(), &inr, BodyVariant::Gyrostat, 10.0, &tight).unwrap();
        let f0 = bodyframe::f4(&body_start(), &inr);
        (0..=100).map(|i| (bodyframe::f4(&tr.state(0.1 * i as f64), &inr) - f0).abs()).fold(0.0, f64::max)
    };
    assert!(drift(1.0) < 1e-9);
    assert!(drift(0.6) > 1e-3);
}

#[test]
fn tighter_tolerance_reduces_drift() {
    let max_drift = |rel_tol: f64| {
        battery::standard(11, 6)
            .iter()
            .map(|case| {
                let cfg = IntegratorConfig { rel_tol, abs_tol: rel_tol * 1e-2, ..Default::default() };
                let tr = case.sys.simulate(&case.state, 20.0 * case.time_scale, &cfg).unwrap();
                let h0 = case.sys.integrals(&case.state).h;
                let h1 = case.sys.integrals(&tr.state(tr.horizon())).h;
                rel(h1, h0)
            })
            .fold(0.0, f64::max)
    };
    let loose = max_drift(1e-6);
    let tight = max_drift(1e-6 / 16.0);
    assert!(tight * 4.0 <= loose, "{loose:e} -> {tight:e}");
}
