//! Equations of motion of the gyroscopic ball in Neumann coordinates.
//!
//! The contact point is `(u, v)` on the ball (colatitude and longitude about
//! the gyroscope axis) and `(u1, v1)` on the fixed sphere; `theta` is the
//! angle between the `v1`- and `u`-coordinate lines. `(s, tau, n)` are the
//! projections of the ball's angular velocity on the unit tangents of the
//! `u`- and `v`-lines and on the outward normal of the ball at the contact
//! point. Only the outer configuration is supported here.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::bodyframe::{BodyState, InertiaData};
use crate::error::{Error, Result};
use crate::ode::{self, Event, IntegratorConfig, Solution};
use crate::params::{Configuration, DerivedConstants, SystemParams};

/// Minimum |sin u| and |sin u1| accepted by the right-hand side.
pub const POLE_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeumannState {
    pub u: f64,
    pub v: f64,
    pub theta: f64,
    pub u1: f64,
    pub v1: f64,
    pub s: f64,
    pub tau: f64,
    pub n: f64,
}

impl NeumannState {
    pub fn to_array(&self) -> [f64; 8] {
        [self.u, self.v, self.theta, self.u1, self.v1, self.s, self.tau, self.n]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        NeumannState {
            u: y[0],
            v: y[1],
            theta: y[2],
            u1: y[3],
            v1: y[4],
            s: y[5],
            tau: y[6],
            n: y[7],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegralValues {
    /// Energy with 2h = P(s^2 + tau^2) + A n^2.
    pub h: f64,
    /// Squared magnitude of the total angular momentum.
    pub gamma2: f64,
    /// Constant of A n = -k mu (cos u - x0); `None` when k = 0.
    pub x0: Option<f64>,
}

/// Parameters checked for the Neumann pathway: Zhukovsky condition and
/// outer rolling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeumannSystem {
    pub params: SystemParams,
    pub dc: DerivedConstants,
}

impl NeumannSystem {
    pub fn new(params: SystemParams) -> Result<Self> {
        let dc = params.derive_constants()?;
        params.require_zhukovsky()?;
        if params.config != Configuration::Outer {
            return Err(Error::ConfigMismatch(format!(
                "the Neumann equations are implemented for outer rolling only, got {:?}",
                params.config
            )));
        }
        Ok(NeumannSystem { params, dc })
    }

    pub fn k(&self) -> f64 {
        self.params.k
    }

    pub fn constraint_rhs(&self, st: &NeumannState) -> Result<(f64, f64)> {
        constraint_rhs(st, &self.dc)
    }

    pub fn eom_rhs(&self, st: &NeumannState) -> Result<NeumannState> {
        eom_rhs(st, &self.params, &self.dc)
    }

    pub fn integrals(&self, st: &NeumannState) -> IntegralValues {
        integrals(st, &self.params, &self.dc)
    }

    pub fn align_axis(&self, st: &NeumannState) -> NeumannState {
        align_axis(st, &self.params, &self.dc)
    }

    pub fn to_bodyframe(&self, st: &NeumannState) -> Result<BodyState> {
        to_bodyframe(st, &self.params, &self.dc)
    }

    pub fn inertia(&self) -> InertiaData {
        inertia_of(&self.params, &self.dc)
    }

    pub fn simulate(&self, st: &NeumannState, horizon: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
        self.simulate_with_events(st, horizon, cfg, &[])
    }

    pub fn simulate_with_events(
        &self,
        st: &NeumannState,
        horizon: f64,
        cfg: &IntegratorConfig,
        events: &[Event<'_>],
    ) -> Result<Trajectory> {
        let sys = *self;
        let sol = ode::integrate(
            |_, y, dy| {
                let d = sys.eom_rhs(&NeumannState::from_slice(y))?;
                dy.copy_from_slice(&d.to_array());
                Ok(())
            },
            0.0,
            &st.to_array(),
            horizon,
            cfg,
            events,
        )?;
        Ok(Trajectory { sol })
    }
}

/// Dense Neumann trajectory.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub sol: Solution,
}

impl Trajectory {
    pub fn state(&self, t: f64) -> NeumannState {
        NeumannState::from_slice(&self.sol.eval(t))
    }

    pub fn horizon(&self) -> f64 {
        self.sol.t_final
    }

    /// States at `n + 1` uniform times.
    pub fn sample(&self, n: usize) -> (Vec<f64>, Vec<NeumannState>) {
        let (ts, ys) = self.sol.sample(n);
        (ts, ys.iter().map(|y| NeumannState::from_slice(y)).collect())
    }
}

fn check_pole(value: f64, what: &str) -> Result<()> {
    if value.abs() < POLE_THRESHOLD {
        Err(Error::PoleProximity(format!("|sin {what}| = {:e}", value.abs())))
    } else {
        Ok(())
    }
}

/// Rates of the contact point on the ball: `(u_dot, v_dot)`.
pub fn contact_rates(st: &NeumannState, dc: &DerivedConstants) -> Result<(f64, f64)> {
    let su = st.u.sin();
    check_pole(su, "u")?;
    Ok((-st.tau / dc.mu, st.s / (dc.mu * su)))
}

/// Rates of the contact point on the fixed sphere: `(u1_dot, v1_dot)`.
pub fn constraint_rhs(st: &NeumannState, dc: &DerivedConstants) -> Result<(f64, f64)> {
    let su1 = st.u1.sin();
    check_pole(su1, "u1")?;
    let (ud, vd) = contact_rates(st, dc)?;
    let (sth, cth) = st.theta.sin_cos();
    let su = st.u.sin();
    let mp = dc.mu_prime;
    let u1d = -mp * ud * sth + mp * vd * cth * su;
    let v1d = (mp * ud * cth + mp * vd * sth * su) / su1;
    Ok((u1d, v1d))
}

pub fn eom_rhs(st: &NeumannState, p: &SystemParams, dc: &DerivedConstants) -> Result<NeumannState> {
    let (ud, vd) = contact_rates(st, dc)?;
    let (u1d, v1d) = constraint_rhs(st, dc)?;
    let (su, cu) = st.u.sin_cos();
    let DerivedConstants { mu, mu_prime, a, p: pp, .. } = *dc;
    let k = p.k;
    let NeumannState { s, tau, n, .. } = *st;
    let spin = n + cu * vd;
    let sd = (mu_prime * a * n * ud + pp * tau * spin + k * mu * ud * cu) / pp;
    let taud = (mu_prime * a * n * su * vd - pp * s * spin + k * (n * su + mu * vd * su * cu)) / pp;
    let nd = k * mu * su * ud / a;
    Ok(NeumannState {
        u: ud,
        v: vd,
        theta: -n - cu * vd - st.u1.cos() * v1d,
        u1: u1d,
        v1: v1d,
        s: sd,
        tau: taud,
        n: nd,
    })
}

/// Total angular momentum about the contact point in the frame
/// `(e_u, e_v, normal)`.
pub fn momentum_components(st: &NeumannState, p: &SystemParams, dc: &DerivedConstants) -> [f64; 3] {
    let (su, cu) = st.u.sin_cos();
    [dc.p * st.s - p.k * su, dc.p * st.tau, dc.a * st.n + p.k * cu]
}

pub fn integrals(st: &NeumannState, p: &SystemParams, dc: &DerivedConstants) -> IntegralValues {
    let [g1, g2, g3] = momentum_components(st, p, dc);
    let h = 0.5 * (dc.p * (st.s * st.s + st.tau * st.tau) + dc.a * st.n * st.n);
    let x0 = (p.k != 0.0).then(|| st.u.cos() + dc.a * st.n / (p.k * dc.mu));
    IntegralValues {
        h,
        gamma2: g1 * g1 + g2 * g2 + g3 * g3,
        x0,
    }
}

/// Residuals of the three projections of the conserved momentum on the
/// moving frame, with the fixed axis `z1` along it.
pub fn alignment_residual(st: &NeumannState, p: &SystemParams, dc: &DerivedConstants) -> [f64; 3] {
    let [g1, g2, g3] = momentum_components(st, p, dc);
    let gamma = (g1 * g1 + g2 * g2 + g3 * g3).sqrt();
    let (sth, cth) = st.theta.sin_cos();
    let (su1, cu1) = st.u1.sin_cos();
    [
        gamma * su1 * sth - g1,
        -gamma * su1 * cth - g2,
        -gamma * cu1 - g3,
    ]
}

/// Chooses `u1` and `theta` so that the fixed axis `z1` points along the
/// conserved momentum; `v1` is kept. Returns the input when the momentum
/// vanishes.
pub fn align_axis(st: &NeumannState, p: &SystemParams, dc: &DerivedConstants) -> NeumannState {
    let [g1, g2, g3] = momentum_components(st, p, dc);
    let gamma = (g1 * g1 + g2 * g2 + g3 * g3).sqrt();
    if gamma == 0.0 {
        return *st;
    }
    let u1 = (-g3 / gamma).clamp(-1.0, 1.0).acos();
    let tangential = (g1 * g1 + g2 * g2).sqrt();
    let theta = if tangential == 0.0 {
        st.theta
    } else {
        let th = g1.atan2(-g2);
        // Keep the branch nearest the input angle.
        th + (2.0 * std::f64::consts::PI) * ((st.theta - th) / (2.0 * std::f64::consts::PI)).round()
    };
    NeumannState { u1, theta, ..*st }
}

/// Unit vectors `(e_u, e_v, normal)` of the ball's coordinate lines in the
/// body frame.
pub fn contact_frame(u: f64, v: f64) -> [Vector3<f64>; 3] {
    let (su, cu) = u.sin_cos();
    let (sv, cv) = v.sin_cos();
    [
        Vector3::new(cu * cv, cu * sv, -su),
        Vector3::new(-sv, cv, 0.0),
        Vector3::new(su * cv, su * sv, cu),
    ]
}

/// Body-frame inertia data of the gyroscopic ball: `I = diag(A, A, C1)`,
/// `D = M R2^2`, `kappa = k e_z`.
pub fn inertia_of(p: &SystemParams, dc: &DerivedConstants) -> InertiaData {
    InertiaData::new(Vector3::new(dc.a, dc.a, dc.c), dc.d, Vector3::new(0.0, 0.0, p.k), dc.epsilon)
}

/// Angular velocity of the ball in the body frame.
pub fn body_omega(st: &NeumannState) -> Vector3<f64> {
    let [eu, ev, nn] = contact_frame(st.u, st.v);
    eu * st.s + ev * st.tau + nn * st.n
}

pub fn to_bodyframe(st: &NeumannState, p: &SystemParams, dc: &DerivedConstants) -> Result<BodyState> {
    check_pole(st.u.sin(), "u")?;
    Ok(body_state_unchecked(st, p, dc))
}

/// Same as `to_bodyframe` without the coordinate-pole check; the frame is
/// well defined at the poles for a given `v`.
pub fn body_state_unchecked(st: &NeumannState, p: &SystemParams, dc: &DerivedConstants) -> BodyState {
    let inertia = inertia_of(p, dc);
    let [_, _, gamma] = contact_frame(st.u, st.v);
    let omega = body_omega(st);
    BodyState {
        g: inertia.g_from_omega(&omega, &gamma),
        gamma,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(k: f64) -> SystemParams {
        SystemParams {
            r1: 2.0,
            r2: 1.0,
            m: 1.5,
            a1: 0.6,
            c1: 0.9,
            a2: 0.3,
            c2: 0.2,
            k,
            config: Configuration::Outer,
        }
    }

    fn state() -> NeumannState {
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

    #[test]
    fn no_contact_motion_no_sphere_motion() {
        let sys = NeumannSystem::new(params(1.0)).unwrap();
        let st = NeumannState { s: 0.0, tau: 0.0, ..state() };
        assert_eq!(sys.constraint_rhs(&st).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn constraint_unit_case() {
        let sys = NeumannSystem::new(params(1.0)).unwrap();
        let mu = sys.dc.mu;
        // u_dot = 1 means tau = -mu; v_dot = 0 means s = 0.
        let st = NeumannState { theta: 0.0, s: 0.0, tau: -mu, ..state() };
        let (u1d, v1d) = sys.constraint_rhs(&st).unwrap();
        assert!(u1d.abs() < 1e-15);
        assert!((v1d * st.u1.sin() - sys.dc.mu_prime).abs() < 1e-15);
    }

    #[test]
    fn rolling_isometry() {
        let p = params(1.0);
        let sys = NeumannSystem::new(p).unwrap();
        let st = state();
        let (ud, vd) = contact_rates(&st, &sys.dc).unwrap();
        let (u1d, v1d) = sys.constraint_rhs(&st).unwrap();
        let lhs = p.r1 * p.r1 * (u1d * u1d + st.u1.sin().powi(2) * v1d * v1d);
        let rhs = p.r2 * p.r2 * (ud * ud + st.u.sin().powi(2) * vd * vd);
        assert!((lhs - rhs).abs() < 1e-14 * rhs);
    }

    #[test]
    fn rest_is_equilibrium_without_gyro() {
        let sys = NeumannSystem::new(params(0.0)).unwrap();
        let st = NeumannState { s: 0.0, tau: 0.0, n: 0.0, ..state() };
        let d = sys.eom_rhs(&st).unwrap();
        assert!(d.to_array().iter().all(|&x| x == 0.0));
        let d = sys.eom_rhs(&state()).unwrap();
        assert_eq!(d.n, 0.0);
    }

    #[test]
    fn zero_velocity_momentum_is_k() {
        let sys = NeumannSystem::new(params(1.7)).unwrap();
        let st = NeumannState { s: 0.0, tau: 0.0, n: 0.0, ..state() };
        let iv = sys.integrals(&st);
        assert_eq!(iv.h, 0.0);
        assert!((iv.gamma2 - 1.7 * 1.7).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_zhukovsky_and_other_configs() {
        let bad = SystemParams { c1: 1.0, ..params(1.0) };
        assert!(matches!(NeumannSystem::new(bad), Err(Error::ZhukovskyViolated { .. })));
        let inner = SystemParams {
            r1: 3.0,
            config: Configuration::Inner,
            ..params(1.0)
        };
        assert!(matches!(NeumannSystem::new(inner), Err(Error::ConfigMismatch(_))));
    }

    #[test]
    fn pole_detected() {
        let sys = NeumannSystem::new(params(1.0)).unwrap();
        let st = NeumannState { u: 0.0, ..state() };
        assert!(matches!(sys.eom_rhs(&st), Err(Error::PoleProximity(_))));
        let st = NeumannState { u1: std::f64::consts::PI, ..state() };
        assert!(matches!(sys.eom_rhs(&st), Err(Error::PoleProximity(_))));
    }

    #[test]
    fn alignment_idempotent_and_exact() {
        let sys = NeumannSystem::new(params(1.3)).unwrap();
        let a = sys.align_axis(&state());
        let r = alignment_residual(&a, &sys.params, &sys.dc);
        assert!(r.iter().all(|x| x.abs() < 1e-12), "{r:?}");
        let b = sys.align_axis(&a);
        assert!((a.u1 - b.u1).abs() < 1e-12 && (a.theta - b.theta).abs() < 1e-12);
        let zero = SystemParams { k: 0.0, ..params(0.0) };
        let sys0 = NeumannSystem::new(zero).unwrap();
        let st = NeumannState { s: 0.0, tau: 0.0, n: 0.0, ..state() };
        assert_eq!(sys0.align_axis(&st), st);
    }

    #[test]
    fn body_normal() {
        let sys = NeumannSystem::new(params(1.0)).unwrap();
        let st = NeumannState { u: std::f64::consts::FRAC_PI_2, v: 0.0, ..state() };
        let b = sys.to_bodyframe(&st).unwrap();
        assert!((b.gamma - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        assert!((sys.to_bodyframe(&state()).unwrap().gamma.norm() - 1.0).abs() < 1e-15);
    }
}
