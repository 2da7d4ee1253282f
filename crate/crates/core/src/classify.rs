//! Curve families of the contact-point traces and the special motions:
//! regular and pseudo-regular precession, stationary motion, remarkable
//! trajectories, the ordinary ball.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::bodyframe::{self, BodyState, BodyVariant};
use crate::error::{Error, Result};
use crate::neumann::{self, NeumannState, NeumannSystem};
use crate::ode::IntegratorConfig;
use crate::params::{DerivedConstants, ReducedConstants, SystemParams};
use crate::poly::Poly;
use crate::quadratures::{self, QuarticData, DOUBLE_ROOT_TOL};

/// Endpoint coincidence tolerance in x.
pub const ENDPOINT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FamilyMoving {
    A,
    B,
    C,
    D1,
    D2,
    D3,
    E1,
    E2,
    NoMotion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FamilyFixed {
    A,
    B,
    C,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Special {
    RegularPrecession,
    PseudoRegularPrecession,
    Stationary,
    OrdinaryBall,
    Remarkable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
    Degenerate,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub family_moving: FamilyMoving,
    pub family_fixed: FamilyFixed,
    pub special: BTreeSet<Special>,
    pub stability: Stability,
    pub diagnostics: BTreeMap<String, f64>,
}

impl TrajectoryReport {
    fn no_motion() -> Self {
        TrajectoryReport {
            family_moving: FamilyMoving::NoMotion,
            family_fixed: FamilyFixed::A,
            special: BTreeSet::new(),
            stability: Stability::NotApplicable,
            diagnostics: BTreeMap::new(),
        }
    }
}

/// Roots of `p` strictly inside `(lo, hi)`, away from the ends by `margin`.
fn roots_inside(p: &Poly, lo: f64, hi: f64, margin: f64) -> Vec<f64> {
    if p.norm() == 0.0 {
        return Vec::new();
    }
    p.real_roots(lo - 1.0, hi + 1.0)
        .into_iter()
        .filter(|&r| r > lo + margin && r < hi - margin)
        .collect()
}

/// Roots of `dv1/dt` as a function of x in `(lo, hi)`, by sign changes on
/// a fine grid. Since `dv1/dt` depends on x alone, this equals half the
/// number of sign changes along one period of the motion.
fn v1_rate_roots(qd: &QuarticData, rc: &ReducedConstants, dc: &DerivedConstants) -> usize {
    let (lo, hi) = qd.interval;
    let n = 4096;
    let mut count = 0;
    let mut prev = None;
    for i in 1..n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let r = quadratures::v1_rate(x, rc, dc, qd);
        if !r.is_finite() || r == 0.0 {
            continue;
        }
        if let Some(p) = prev {
            if (p > 0.0) != (r > 0.0) {
                count += 1;
            }
        }
        prev = Some(r);
    }
    count
}

pub fn classify_trajectory(qd: &QuarticData, rc: &ReducedConstants, dc: &DerivedConstants) -> TrajectoryReport {
    let mut diag = BTreeMap::new();
    let has_motion = qd.roots.iter().any(|&r| (-1.0..=1.0).contains(&r)) || qd.eval(qd.x_init) >= 0.0;
    if !has_motion {
        return TrajectoryReport::no_motion();
    }
    let (lo, hi) = qd.interval;
    diag.insert("x_I".into(), hi);
    diag.insert("x_IV".into(), lo);
    for (i, r) in qd.roots.iter().enumerate() {
        diag.insert(format!("root_{i}"), *r);
    }
    diag.insert("real_roots".into(), qd.roots.len() as f64);

    let mut special = BTreeSet::new();
    let (is_rp, x_star, stability) = detect_regular_precession(qd, rc, dc);
    let at_double = qd.is_degenerate_interval();
    if at_double && is_rp {
        special.insert(Special::RegularPrecession);
        diag.insert("x_star".into(), x_star);
        diag.insert("X2_at_double_root".into(), qd.poly.derivative().derivative().eval(x_star));
    }

    let phi_roots = roots_inside(&qd.phi, lo, hi, ENDPOINT_TOL);
    diag.insert("phi_roots_in_interval".into(), phi_roots.len() as f64);
    for (i, r) in phi_roots.iter().enumerate() {
        diag.insert(format!("phi_root_{i}"), *r);
    }

    let psi_roots = qd.psi.real_roots(-2.0, 2.0);
    let near_psi = |x: f64| psi_roots.iter().any(|r| (r - x).abs() < ENDPOINT_TOL);
    let family_moving = if at_double {
        FamilyMoving::A
    } else if (hi - 1.0).abs() < ENDPOINT_TOL {
        FamilyMoving::E1
    } else if (lo + 1.0).abs() < ENDPOINT_TOL {
        FamilyMoving::E2
    } else {
        match (near_psi(hi), near_psi(lo)) {
            (true, true) => FamilyMoving::D3,
            (true, false) => FamilyMoving::D1,
            (false, true) => FamilyMoving::D2,
            (false, false) => match phi_roots.len() {
                0 => FamilyMoving::A,
                1 => FamilyMoving::B,
                _ => FamilyMoving::C,
            },
        }
    };

    let v1_roots = if at_double { 0 } else { v1_rate_roots(qd, rc, dc) };
    diag.insert("v1dot_roots_in_interval".into(), v1_roots as f64);
    diag.insert("v1dot_sign_changes_per_period".into(), 2.0 * v1_roots as f64);
    let family_fixed = match v1_roots {
        0 => FamilyFixed::A,
        1 => FamilyFixed::B,
        _ => FamilyFixed::C,
    };
    if let Some(p) = quadratures::period_by_quadrature(qd) {
        diag.insert("period".into(), p);
    }

    TrajectoryReport {
        family_moving,
        family_fixed,
        special,
        stability: if at_double { stability } else { Stability::NotApplicable },
        diagnostics: diag,
    }
}

/// Double root of X in [-1, 1] (the one at the motion, if any) and its
/// stability from the signs of `X''` and `X'''`.
pub fn detect_regular_precession(
    qd: &QuarticData,
    rc: &ReducedConstants,
    dc: &DerivedConstants,
) -> (bool, f64, Stability) {
    let _ = (rc, dc);
    let candidates: Vec<f64> = qd.double_roots.iter().copied().filter(|r| (-1.0..=1.0).contains(r)).collect();
    let Some(x) = (if qd.is_degenerate_interval() {
        Some(qd.interval.0)
    } else {
        candidates.iter().copied().min_by(|a, b| {
            (a - qd.x_init).abs().partial_cmp(&(b - qd.x_init).abs()).unwrap()
        })
    }) else {
        return (false, f64::NAN, Stability::NotApplicable);
    };
    (true, x, precession_stability(&qd.poly, x))
}

/// Stability rule at a double root `x`: `X'' < 0` stable, `> 0` unstable;
/// with `X'' = 0`, stable iff `X''' = 0`.
pub fn precession_stability(poly: &Poly, x: f64) -> Stability {
    let tol = DOUBLE_ROOT_TOL * poly.norm();
    let d2 = poly.derivative().derivative();
    let x2 = d2.eval(x);
    if x2 < -tol {
        return Stability::Stable;
    }
    if x2 > tol {
        return Stability::Unstable;
    }
    let x3 = d2.derivative().eval(x).abs();
    if x3 <= tol {
        Stability::Stable
    } else if x3 >= 100.0 * tol {
        Stability::Unstable
    } else {
        Stability::Degenerate
    }
}

/// `s = tau = 0` with the gyroscope axis along the momentum, which is the
/// condition for `tau' = 0` as well (`A n sin u = 0`).
pub fn detect_stationary(st: &NeumannState, p: &SystemParams, dc: &DerivedConstants) -> bool {
    let scale = (dc.p * (st.s.abs() + st.tau.abs()) + dc.a * st.n.abs() + p.k.abs()).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    dc.p * st.s.abs() <= tol && dc.p * st.tau.abs() <= tol && (dc.a * st.n * st.u.sin()).abs() <= tol
}

/// Largest displacement of the contact point (angle on each sphere) over
/// `horizon` for perturbed copies of a stationary state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StationaryResponse {
    pub moving: f64,
    pub fixed: f64,
}

/// Simulates `trials` copies of `st` perturbed by `delta` (seeded) in the
/// body frame and reports the largest contact-point excursions.
pub fn stationary_response(
    st: &NeumannState,
    p: &SystemParams,
    dc: &DerivedConstants,
    delta: f64,
    horizon: f64,
    trials: usize,
    seed: u64,
) -> Result<StationaryResponse> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let inertia = neumann::inertia_of(p, dc);
    let base = neumann::body_state_unchecked(st, p, dc);
    let total = |b: &BodyState| b.g + inertia.kappa;
    let m0 = total(&base);
    let gamma0 = base.gamma;
    let scale = base.g.norm().max(inertia.kappa.norm()).max(1.0);
    let mut out = StationaryResponse { moving: 0.0, fixed: 0.0 };
    let cfg = IntegratorConfig::default();
    for _ in 0..trials {
        let mut rv = || Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let g = base.g + rv() * (delta * scale);
        let gamma = (base.gamma + rv() * delta).normalize();
        let start = BodyState { g, gamma };
        let tr = bodyframe::simulate(&start, &inertia, BodyVariant::Gyrostat, horizon, &cfg)?;
        let m = total(&start);
        let u1_start = (m.dot(&start.gamma) / m.norm()).clamp(-1.0, 1.0).acos();
        let u1_base = (m0.dot(&gamma0) / m0.norm()).clamp(-1.0, 1.0).acos();
        for i in 0..=400 {
            let b = tr.state(horizon * i as f64 / 400.0);
            out.moving = out.moving.max(b.gamma.angle(&gamma0));
            // Fixed-sphere contact point: polar angle about the momentum axis.
            let u1 = (total(&b).dot(&b.gamma) / total(&b).norm()).clamp(-1.0, 1.0).acos();
            out.fixed = out.fixed.max((u1 - u1_base).abs()).max((u1 - u1_start).abs());
        }
    }
    Ok(out)
}

/// Stationary motion whose perturbed copies stay within `bound` over `horizon`.
pub fn certify_stationary(
    st: &NeumannState,
    p: &SystemParams,
    dc: &DerivedConstants,
    horizon: f64,
    bound: f64,
) -> Result<bool> {
    if !detect_stationary(st, p, dc) {
        return Ok(false);
    }
    let r = stationary_response(st, p, dc, 1e-6, horizon, 4, 7)?;
    Ok(r.moving < bound && r.fixed < bound)
}

/// Angle between the gyroscope axis line and the total momentum, in
/// `[0, pi/2]`; antiparallel counts as parallel.
pub fn axis_momentum_angle(st: &NeumannState, p: &SystemParams, dc: &DerivedConstants) -> Result<f64> {
    let m = neumann::momentum_components(st, p, dc);
    let m = Vector3::new(m[0], m[1], m[2]);
    if m.norm() == 0.0 {
        return Err(Error::Degenerate("total momentum vanishes".into()));
    }
    let axis = Vector3::new(-st.u.sin(), 0.0, st.u.cos());
    let a = axis.angle(&m);
    Ok(a.min(std::f64::consts::PI - a))
}

/// Remarkable trajectory test on `traj` sampled at `samples + 1` points of
/// `[0, horizon]`: axis parallel to the momentum throughout, regular
/// precession, and a contact-point trace unchanged when all rates are doubled.
pub fn detect_remarkable(
    traj: &dyn Fn(f64) -> NeumannState,
    horizon: f64,
    samples: usize,
    sys: &NeumannSystem,
) -> Result<bool> {
    let (p, dc) = (&sys.params, &sys.dc);
    let st0 = traj(0.0);
    if neumann::integrals(&st0, p, dc).gamma2 == 0.0 {
        return Err(Error::Degenerate("total momentum vanishes".into()));
    }
    if detect_stationary(&st0, p, dc) {
        return Ok(false);
    }
    for i in 0..=samples {
        let st = traj(horizon * i as f64 / samples as f64);
        if axis_momentum_angle(&st, p, dc)? > 1e-8 {
            return Ok(false);
        }
    }
    let Ok((rc, qd)) = quadratures::reduce_state(sys, &st0) else {
        return Ok(false);
    };
    let (rp, _, _) = detect_regular_precession(&qd, &rc, dc);
    if !(rp && qd.is_degenerate_interval()) {
        return Ok(false);
    }
    Ok(energy_rescaling_deviation(traj, horizon, sys, 2.0)? < 1e-6)
}

fn contact_points(st: &NeumannState) -> (Vector3<f64>, Vector3<f64>) {
    let [_, _, nu] = neumann::contact_frame(st.u, st.v);
    let [_, _, nu1] = neumann::contact_frame(st.u1, st.v1);
    (nu, nu1)
}

/// Largest angular distance of the trace of the rescaled motion (all rates
/// times `factor`) from the original trace, on either sphere.
pub fn energy_rescaling_deviation(
    traj: &dyn Fn(f64) -> NeumannState,
    horizon: f64,
    sys: &NeumannSystem,
    factor: f64,
) -> Result<f64> {
    let st0 = traj(0.0);
    let scaled = sys.align_axis(&NeumannState {
        s: st0.s * factor,
        tau: st0.tau * factor,
        n: st0.n * factor,
        ..st0
    });
    let h2 = horizon / (2.0 * factor.max(1.0));
    let tr = sys.simulate(&scaled, h2, &IntegratorConfig::default())?;
    let n = 2000;
    let orig: Vec<(Vector3<f64>, Vector3<f64>)> =
        (0..=n).map(|i| contact_points(&traj(horizon * i as f64 / n as f64))).collect();
    let refine = |target: &Vector3<f64>, which: usize, j: usize| -> f64 {
        let pick = |t: f64| {
            let (a, b) = contact_points(&traj(t));
            if which == 0 {
                a
            } else {
                b
            }
        };
        let lo = horizon * (j.saturating_sub(1)) as f64 / n as f64;
        let hi = horizon * ((j + 1).min(n)) as f64 / n as f64;
        let (mut a, mut b) = (lo, hi);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if pick(c).angle(target) < pick(d).angle(target) {
                b = d;
            } else {
                a = c;
            }
        }
        pick(0.5 * (a + b)).angle(target)
    };
    let mut worst: f64 = 0.0;
    for i in 0..=200 {
        let (m, f) = contact_points(&tr.state(h2 * i as f64 / 200.0));
        for (which, target) in [(0, m), (1, f)] {
            let (j, _) = orig
                .iter()
                .enumerate()
                .map(|(j, o)| (j, if which == 0 { o.0 } else { o.1 }.angle(&target)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            worst = worst.max(refine(&target, which, j));
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PseudoRegular {
    pub flag: bool,
    /// `|k| / (P sqrt(s0^2 + tau0^2))`; infinite when the ball starts
    /// without rolling.
    pub ratio: f64,
}

/// Heuristic flag: gyroscope momentum dominating the initial rolling.
pub fn detect_pseudo_regular(
    st: &NeumannState,
    p: &SystemParams,
    dc: &DerivedConstants,
    ratio_threshold: f64,
) -> Result<PseudoRegular> {
    if ratio_threshold <= 1.0 {
        return Err(Error::Domain("ratio threshold must exceed 1".into()));
    }
    if p.k == 0.0 {
        return Ok(PseudoRegular { flag: false, ratio: 0.0 });
    }
    let roll = dc.p * st.s.hypot(st.tau);
    if roll == 0.0 {
        return Ok(PseudoRegular {
            flag: true,
            ratio: f64::INFINITY,
        });
    }
    let ratio = p.k.abs() / roll;
    Ok(PseudoRegular {
        flag: ratio > ratio_threshold,
        ratio,
    })
}

/// Ratio used for the pseudo-regular flag in `classify_state`.
pub const PSEUDO_REGULAR_RATIO: f64 = 10.0;

/// Full report for a Neumann state: reduction, families and special flags.
pub fn classify_state(sys: &NeumannSystem, st: &NeumannState) -> Result<TrajectoryReport> {
    let (p, dc) = (&sys.params, &sys.dc);
    if p.k == 0.0 {
        // The quartic reduction needs k != 0; only the flags are meaningful.
        let mut special = BTreeSet::new();
        special.insert(Special::OrdinaryBall);
        if detect_stationary(st, p, dc) {
            special.insert(Special::Stationary);
        }
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("reduction_degenerate".into(), 1.0);
        return Ok(TrajectoryReport {
            family_moving: FamilyMoving::A,
            family_fixed: FamilyFixed::A,
            special,
            stability: Stability::NotApplicable,
            diagnostics,
        });
    }
    let mut report = match quadratures::reduce_state(sys, st) {
        Ok((rc, qd)) => classify_trajectory(&qd, &rc, dc),
        Err(Error::NoRealMotion(_)) => TrajectoryReport::no_motion(),
        Err(e) => return Err(e),
    };
    if detect_stationary(st, p, dc) {
        report.special.remove(&Special::RegularPrecession);
        report.special.insert(Special::Stationary);
        report.stability = Stability::Stable;
    }
    let pr = detect_pseudo_regular(st, p, dc, PSEUDO_REGULAR_RATIO)?;
    report.diagnostics.insert("pseudo_regular_ratio".into(), pr.ratio);
    if pr.flag && !report.special.contains(&Special::Stationary) {
        report.special.insert(Special::PseudoRegularPrecession);
    }
    if report.special.contains(&Special::RegularPrecession) && axis_momentum_angle(st, p, dc)? < 1e-8 {
        report.special.insert(Special::Remarkable);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Configuration;

    fn system(k: f64) -> NeumannSystem {
        NeumannSystem::new(SystemParams {
            r1: 2.0,
            r2: 1.0,
            m: 1.5,
            a1: 0.6,
            c1: 0.9,
            a2: 0.3,
            c2: 0.2,
            k,
            config: Configuration::Outer,
        })
        .unwrap()
    }

    fn generic() -> NeumannState {
        NeumannState {
            u: 1.1,
            v: 0.4,
            theta: 0.3,
            u1: 1.3,
            v1: -0.2,
            s: 0.5,
            tau: -0.3,
            n: 0.7,
        }
    }

    /// Regular precession at `u`: `tau = 0` and `s` a root of the
    /// quadratic that makes `tau' = 0`.
    pub(crate) fn precession_state(sys: &NeumannSystem, u: f64, n: f64, root: usize) -> Option<NeumannState> {
        let dc = &sys.dc;
        let k = sys.k();
        let (su, cu) = u.sin_cos();
        let a = -dc.p * cu / (dc.mu * su);
        let b = dc.mu_prime * dc.a * n / dc.mu - dc.p * n + k * cu;
        let c = k * n * su;
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 || a == 0.0 {
            return None;
        }
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let s = if root == 0 { q / a } else { c / q };
        Some(sys.align_axis(&NeumannState {
            u,
            v: 0.0,
            theta: 0.0,
            u1: 1.0,
            v1: 0.0,
            s,
            tau: 0.0,
            n,
        }))
    }

    #[test]
    fn generic_state_has_a_family() {
        let sys = system(1.3);
        let r = classify_state(&sys, &generic()).unwrap();
        assert_ne!(r.family_moving, FamilyMoving::NoMotion);
        assert_eq!(r.stability, Stability::NotApplicable);
        assert!(r.diagnostics["x_IV"] < r.diagnostics["x_I"]);
        let json = serde_json::to_value(&r).unwrap();
        for key in ["family_moving", "family_fixed", "special", "stability", "diagnostics"] {
            assert!(json.get(key).is_some());
        }
    }

    #[test]
    fn manufactured_phi_root_gives_b_or_c() {
        let sys = system(1.3);
        let st = sys.align_axis(&NeumannState { s: 0.0, ..generic() });
        let r = classify_state(&sys, &st).unwrap();
        let n = r.diagnostics["phi_roots_in_interval"] as usize;
        assert!(n >= 1);
        let want = if n == 1 { FamilyMoving::B } else { FamilyMoving::C };
        assert_eq!(r.family_moving, want);
    }

    #[test]
    fn cusp_state_is_family_d() {
        let sys = system(1.3);
        let st = sys.align_axis(&NeumannState {
            s: 0.0,
            tau: 0.0,
            ..generic()
        });
        let r = classify_state(&sys, &st).unwrap();
        assert!(matches!(r.family_moving, FamilyMoving::D1 | FamilyMoving::D2 | FamilyMoving::D3), "{r:?}");
        let (p, dc) = (&sys.params, &sys.dc);
        let d = neumann::eom_rhs(&st, p, dc).unwrap();
        // u' = -tau / mu and v' = s / (mu sin u) vanish together at the cusp.
        assert_eq!(st.s, 0.0);
        assert_eq!(st.tau, 0.0);
        assert!(d.tau.abs() > 1e-3);
    }

    #[test]
    fn pole_endpoint_is_family_e() {
        let sys = system(1.3);
        let dc = sys.dc;
        let k = sys.k();
        // phi(1) = 0 fixes Gamma_bar; choose h and x0, then solve for Gamma.
        // h' > 1 - x0 keeps psi(1) > 0, so X > 0 just below the pole.
        let x0 = 0.2;
        let h = (1.2 * dc.mu * k).powi(2) / (2.0 * dc.a);
        let b0 = dc.i * dc.mu + 2.0 * dc.a;
        let b1 = dc.i * dc.mu + dc.a;
        let gbar = 2.0 * b1 * x0 - b0;
        let g2 = (dc.mu * k * k * (gbar - dc.i * dc.mu * x0 * x0) + 2.0 * h * dc.p * dc.a) / dc.a + k * k;
        let rc = crate::params::reduced_constants(&dc, k, h, g2.sqrt(), x0).unwrap();
        assert!(g2 > 0.0);
        let probe = quadratures::build_x(&rc, &dc, 0.999);
        let qd = match probe {
            Ok(q) => q,
            Err(_) => panic!("level set has no motion near the pole"),
        };
        let r = classify_trajectory(&qd, &rc, &dc);
        assert_eq!(r.family_moving, FamilyMoving::E1, "{r:?}");
    }

    #[test]
    fn regular_precession_stability_matches_rule() {
        let sys = system(1.3);
        let mut seen = [false; 2];
        for (u, n) in [(0.7, 0.4), (1.2, -0.5), (2.0, 0.9), (0.9, 2.5), (1.5, -2.0)] {
            for root in 0..2 {
                let Some(st) = precession_state(&sys, u, n, root) else { continue };
                let r = classify_state(&sys, &st).unwrap();
                assert!(r.special.contains(&Special::RegularPrecession), "{r:?}");
                match r.stability {
                    Stability::Stable => seen[0] = true,
                    Stability::Unstable => seen[1] = true,
                    _ => {}
                }
            }
        }
        assert!(seen[0] || seen[1]);
    }

    #[test]
    fn simple_roots_are_not_precession() {
        let sys = system(1.3);
        let (rc, qd) = quadratures::reduce_state(&sys, &generic()).unwrap();
        if qd.double_roots.is_empty() {
            let (rp, _, st) = detect_regular_precession(&qd, &rc, &sys.dc);
            assert!(!rp);
            assert_eq!(st, Stability::NotApplicable);
        }
    }

    #[test]
    fn stationary_detection() {
        let sys = system(1.3);
        let (p, dc) = (&sys.params, &sys.dc);
        let rest = NeumannState {
            s: 0.0,
            tau: 0.0,
            n: 0.0,
            ..generic()
        };
        assert!(detect_stationary(&rest, p, dc));
        let spin_at_pole = NeumannState {
            u: 0.0,
            s: 0.0,
            tau: 0.0,
            n: 0.8,
            ..generic()
        };
        assert!(detect_stationary(&spin_at_pole, p, dc));
        assert!(!detect_stationary(&generic(), p, dc));
        let spin_off_axis = NeumannState { s: 0.0, tau: 0.0, ..generic() };
        assert!(!detect_stationary(&spin_off_axis, p, dc));
    }

    #[test]
    fn pseudo_regular_flag() {
        let sys = system(30.0);
        let (p, dc) = (&sys.params, &sys.dc);
        let st = NeumannState {
            s: 0.01,
            tau: 0.01,
            ..generic()
        };
        let r = detect_pseudo_regular(&st, p, dc, 10.0).unwrap();
        assert!(r.flag && r.ratio > 100.0);
        let zero = detect_pseudo_regular(&NeumannState { s: 0.0, tau: 0.0, ..st }, p, dc, 10.0).unwrap();
        assert!(zero.flag && zero.ratio.is_infinite());
        let sys0 = system(0.0);
        assert!(!detect_pseudo_regular(&st, &sys0.params, &sys0.dc, 10.0).unwrap().flag);
        assert!(detect_pseudo_regular(&st, p, dc, 1.0).is_err());
    }

    #[test]
    fn ordinary_ball_keeps_n() {
        let sys = system(0.0);
        let r = classify_state(&sys, &generic()).unwrap();
        assert!(r.special.contains(&Special::OrdinaryBall));
        let tr = sys.simulate(&generic(), 5.0, &IntegratorConfig::default()).unwrap();
        for i in 0..=50 {
            assert!((tr.state(0.1 * i as f64).n - generic().n).abs() < 1e-12);
        }
    }

    #[test]
    fn remarkable_equatorial_precession() {
        let sys = system(1.3);
        let st = sys.align_axis(&NeumannState {
            u: std::f64::consts::FRAC_PI_2,
            s: 0.6,
            tau: 0.0,
            n: 0.0,
            ..generic()
        });
        let tr = sys.simulate(&st, 10.0, &IntegratorConfig::default()).unwrap();
        let f = |t: f64| tr.state(t);
        assert!(detect_remarkable(&f, 10.0, 200, &sys).unwrap());
        let r = classify_state(&sys, &st).unwrap();
        assert!(r.special.contains(&Special::Remarkable), "{r:?}");

        let other = precession_state(&sys, 1.0, 0.5, 0).unwrap();
        let tr = sys.simulate(&other, 10.0, &IntegratorConfig::default()).unwrap();
        let g = |t: f64| tr.state(t);
        assert!(!detect_remarkable(&g, 10.0, 200, &sys).unwrap());
        assert!(energy_rescaling_deviation(&g, 10.0, &sys, 2.0).unwrap() > 1e-6);
    }
}
