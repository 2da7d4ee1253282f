//! Body-frame `(G, gamma)` formulation: Chaplygin ball on a sphere, its
//! gyrostat extension and the rubber (no-twist) variant.
//!
//! `G = I omega - D (omega, gamma) gamma` is the angular momentum about the
//! contact point, `I = II + D E`, and `gamma` the unit normal at contact.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, IntegratorConfig, Solution};

pub type Vec3 = Vector3<f64>;

/// Rubber states whose constraint violation exceeds this are rejected
/// rather than projected.
pub const RUBBER_PROJECTION_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyState {
    #[serde(rename = "G")]
    pub g: Vec3,
    pub gamma: Vec3,
}

impl BodyState {
    pub fn to_array(&self) -> [f64; 6] {
        [self.g.x, self.g.y, self.g.z, self.gamma.x, self.gamma.y, self.gamma.z]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        BodyState {
            g: Vec3::new(y[0], y[1], y[2]),
            gamma: Vec3::new(y[3], y[4], y[5]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BodyVariant {
    /// Chaplygin ball, no rotor.
    Plain,
    /// Ball with a rotor of constant momentum `kappa`.
    Gyrostat,
    /// No-twist rolling, `(omega, gamma) = 0`.
    Rubber,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InertiaData {
    /// Diagonal of the central inertia tensor `II`.
    pub central: Vec3,
    /// Diagonal of `I = II + D E`.
    pub ibb: Vec3,
    pub d: f64,
    pub kappa: Vec3,
    pub epsilon: f64,
}

impl InertiaData {
    pub fn new(central: Vec3, d: f64, kappa: Vec3, epsilon: f64) -> Self {
        assert!(d >= 0.0, "D must be non-negative");
        assert!(central.iter().all(|&c| c > 0.0), "inertia moments must be positive");
        InertiaData {
            central,
            ibb: central.add_scalar(d),
            d,
            kappa,
            epsilon,
        }
    }

    fn inv(&self, x: &Vec3) -> Vec3 {
        x.component_div(&self.ibb)
    }

    pub fn g_from_omega(&self, omega: &Vec3, gamma: &Vec3) -> Vec3 {
        self.ibb.component_mul(omega) - gamma * (self.d * omega.dot(gamma))
    }

    /// Inverse of `g_from_omega` by the rank-one update formula.
    pub fn omega_from_g(&self, g: &Vec3, gamma: &Vec3) -> Vec3 {
        let a = self.inv(g);
        let b = self.inv(gamma);
        let den = 1.0 - self.d * b.dot(gamma);
        assert!(den > 0.0, "1 - D (I^-1 gamma, gamma) must be positive");
        a + b * (self.d * a.dot(gamma) / den)
    }
}

pub fn omega_from_g(g: &Vec3, gamma: &Vec3, inertia: &InertiaData) -> Vec3 {
    inertia.omega_from_g(g, gamma)
}

/// `G' = (G + kappa) x omega`, `gamma' = eps gamma x omega`.
pub fn gyrostat_rhs(st: &BodyState, inertia: &InertiaData) -> BodyState {
    let w = inertia.omega_from_g(&st.g, &st.gamma);
    BodyState {
        g: (st.g + inertia.kappa).cross(&w),
        gamma: st.gamma.cross(&w) * inertia.epsilon,
    }
}

/// Gyrostat equations with `kappa` ignored.
pub fn chaplygin_rhs(st: &BodyState, inertia: &InertiaData) -> BodyState {
    let plain = InertiaData {
        kappa: Vec3::zeros(),
        ..*inertia
    };
    gyrostat_rhs(st, &plain)
}

/// Rubber multiplier making `(omega, gamma)` stationary.
fn rubber_lambda(g: &Vec3, w: &Vec3, gamma: &Vec3, inertia: &InertiaData) -> f64 {
    -gamma.dot(&inertia.inv(&g.cross(w))) / gamma.dot(&inertia.inv(gamma))
}

/// `G' = G x omega + lambda gamma`, `gamma' = eps gamma x omega`, with
/// `omega = I^-1 G`.
pub fn rubber_rhs(st: &BodyState, inertia: &InertiaData) -> BodyState {
    let w = inertia.inv(&st.g);
    let lam = rubber_lambda(&st.g, &w, &st.gamma, inertia);
    BodyState {
        g: st.g.cross(&w) + st.gamma * lam,
        gamma: st.gamma.cross(&w) * inertia.epsilon,
    }
}

pub fn rhs(st: &BodyState, inertia: &InertiaData, variant: BodyVariant) -> BodyState {
    match variant {
        BodyVariant::Plain => chaplygin_rhs(st, inertia),
        BodyVariant::Gyrostat => gyrostat_rhs(st, inertia),
        BodyVariant::Rubber => rubber_rhs(st, inertia),
    }
}

/// Angular velocity for the variant: the rank-one inverse, or `I^-1 G` for
/// rubber rolling.
pub fn omega_of(st: &BodyState, inertia: &InertiaData, variant: BodyVariant) -> Vec3 {
    match variant {
        BodyVariant::Rubber => inertia.inv(&st.g),
        _ => inertia.omega_from_g(&st.g, &st.gamma),
    }
}

/// Relative no-twist violation `(omega, gamma) / |omega|`.
pub fn rubber_violation(st: &BodyState, inertia: &InertiaData) -> f64 {
    let w = inertia.inv(&st.g);
    let n = w.norm();
    if n == 0.0 {
        0.0
    } else {
        w.dot(&st.gamma).abs() / n
    }
}

/// Leaves a state with violation up to 1e-12 unchanged, projects `G` along
/// `gamma` up to `RUBBER_PROJECTION_LIMIT`, and rejects anything larger.
pub fn project_rubber(st: &BodyState, inertia: &InertiaData) -> Result<BodyState> {
    let v = rubber_violation(st, inertia);
    if v <= 1e-12 {
        return Ok(*st);
    }
    if v > RUBBER_PROJECTION_LIMIT {
        return Err(Error::ConstraintViolation { violation: v });
    }
    let alpha = inertia.inv(&st.g).dot(&st.gamma) / inertia.inv(&st.gamma).dot(&st.gamma);
    Ok(BodyState {
        g: st.g - st.gamma * alpha,
        gamma: st.gamma,
    })
}

/// `(G + kappa, gamma)`; with `kappa = 0` this is `(G, gamma)`.
pub fn f4(st: &BodyState, inertia: &InertiaData) -> f64 {
    (st.g + inertia.kappa).dot(&st.gamma)
}

/// `sum_i (I_j + I_l - I_i + D) G_i gamma_i` over cyclic `(i, j, l)`, with
/// `I` the central moments.
pub fn f4_tilde(st: &BodyState, inertia: &InertiaData) -> f64 {
    let c = inertia.central;
    let w = [c.y + c.z - c.x, c.z + c.x - c.y, c.x + c.y - c.z];
    (0..3).map(|i| (w[i] + inertia.d) * st.g[i] * st.gamma[i]).sum()
}

/// First integrals of the variant. F4 is included only when it is an
/// integral (`eps = 1`), and the alternative fourth integral only for
/// `eps = -1` without rotor.
pub fn integral_suite(st: &BodyState, inertia: &InertiaData, variant: BodyVariant) -> Vec<(String, f64)> {
    let w = omega_of(st, inertia, variant);
    let mut out = vec![
        ("F1".to_string(), st.gamma.dot(&st.gamma)),
        ("F2".to_string(), 0.5 * st.g.dot(&w)),
    ];
    if variant == BodyVariant::Rubber {
        return out;
    }
    let kappa = if variant == BodyVariant::Gyrostat { inertia.kappa } else { Vec3::zeros() };
    let gk = st.g + kappa;
    out.push(("F3".to_string(), gk.dot(&gk)));
    if (inertia.epsilon - 1.0).abs() <= 1e-12 {
        out.push(("F4".to_string(), gk.dot(&st.gamma)));
    }
    if (inertia.epsilon + 1.0).abs() <= 1e-12 && kappa.norm() == 0.0 {
        out.push(("F4~".to_string(), f4_tilde(st, inertia)));
    }
    out
}

/// Invariant-measure density in `(omega, gamma)` coordinates.
pub fn density(gamma: &Vec3, inertia: &InertiaData, variant: BodyVariant) -> f64 {
    match variant {
        BodyVariant::Rubber => inertia.inv(gamma).dot(gamma).powf(0.5 / inertia.epsilon),
        _ => (gamma.dot(gamma) - inertia.d * inertia.inv(gamma).dot(gamma)).sqrt(),
    }
}

/// The vector field in `(omega, gamma)` coordinates.
pub fn omega_gamma_field(y: &[f64; 6], inertia: &InertiaData, variant: BodyVariant) -> [f64; 6] {
    let w = Vec3::new(y[0], y[1], y[2]);
    let gamma = Vec3::new(y[3], y[4], y[5]);
    let (wd, gd) = match variant {
        BodyVariant::Rubber => {
            let g = inertia.ibb.component_mul(&w);
            let lam = rubber_lambda(&g, &w, &gamma, inertia);
            let gdot = g.cross(&w) + gamma * lam;
            (inertia.inv(&gdot), gamma.cross(&w) * inertia.epsilon)
        }
        _ => {
            let kappa = if variant == BodyVariant::Gyrostat { inertia.kappa } else { Vec3::zeros() };
            let g = inertia.g_from_omega(&w, &gamma);
            let gdot = (g + kappa).cross(&w);
            let gd = gamma.cross(&w) * inertia.epsilon;
            let d = inertia.d;
            let r = gdot + gamma * (d * w.dot(&gd)) + gd * (d * w.dot(&gamma));
            (inertia.omega_from_g(&r, &gamma), gd)
        }
    };
    [wd.x, wd.y, wd.z, gd.x, gd.y, gd.z]
}

/// `|div(mu f)|` at `point` by centered differences with step
/// `1e-5 (1 + |x_i|)` in `(omega, gamma)` coordinates, divided by
/// `mu |Df|_F + |grad mu| |f|`.
pub fn measure_residual(point: &BodyState, inertia: &InertiaData, variant: BodyVariant) -> Result<f64> {
    let w = omega_of(point, inertia, variant);
    let y = [w.x, w.y, w.z, point.gamma.x, point.gamma.y, point.gamma.z];
    let mu = |y: &[f64; 6]| density(&Vec3::new(y[3], y[4], y[5]), inertia, variant);
    let f0 = omega_gamma_field(&y, inertia, variant);
    let mu0 = mu(&y);
    let mut div = 0.0;
    let mut jac_f2 = 0.0;
    let mut grad_mu2 = 0.0;
    for i in 0..6 {
        let h = 1e-5 * (1.0 + y[i].abs());
        let (mut yp, mut ym) = (y, y);
        yp[i] += h;
        ym[i] -= h;
        if yp[i] == ym[i] {
            return Err(Error::Domain("finite-difference step underflow".into()));
        }
        let (fp, fm) = (omega_gamma_field(&yp, inertia, variant), omega_gamma_field(&ym, inertia, variant));
        let (mp, mm) = (mu(&yp), mu(&ym));
        div += (mp * fp[i] - mm * fm[i]) / (2.0 * h);
        for j in 0..6 {
            let dfj = (fp[j] - fm[j]) / (2.0 * h);
            jac_f2 += dfj * dfj;
        }
        let dmu = (mp - mm) / (2.0 * h);
        grad_mu2 += dmu * dmu;
    }
    let fnorm = f0.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = mu0 * jac_f2.sqrt() + grad_mu2.sqrt() * fnorm;
    if scale == 0.0 {
        return Ok(div.abs());
    }
    Ok(div.abs() / scale)
}

/// Dense body-frame trajectory.
#[derive(Clone, Debug)]
pub struct BodyTrajectory {
    pub sol: Solution,
}

impl BodyTrajectory {
    pub fn state(&self, t: f64) -> BodyState {
        BodyState::from_slice(&self.sol.eval(t))
    }
}

pub fn simulate(
    st: &BodyState,
    inertia: &InertiaData,
    variant: BodyVariant,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<BodyTrajectory> {
    let start = if variant == BodyVariant::Rubber {
        project_rubber(st, inertia)?
    } else {
        *st
    };
    let sol = ode::integrate(
        |_, y, dy| {
            let d = rhs(&BodyState::from_slice(y), inertia, variant);
            dy.copy_from_slice(&d.to_array());
            Ok(())
        },
        0.0,
        &start.to_array(),
        horizon,
        cfg,
        &[],
    )?;
    Ok(BodyTrajectory { sol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    fn inertia(eps: f64, kappa: Vec3) -> InertiaData {
        InertiaData::new(Vec3::new(1.0, 1.7, 2.3), 0.6, kappa, eps)
    }

    fn state() -> BodyState {
        BodyState {
            g: Vec3::new(0.3, -1.1, 0.8),
            gamma: Vec3::new(0.2, 0.5, -0.7).normalize(),
        }
    }

    #[test]
    fn omega_round_trip_and_direct_solve() {
        let inr = inertia(1.0, Vec3::zeros());
        let st = state();
        let w = inr.omega_from_g(&st.g, &st.gamma);
        assert!((inr.g_from_omega(&w, &st.gamma) - st.g).norm() < 1e-13);
        let m = Matrix3::from_diagonal(&inr.ibb) - st.gamma * st.gamma.transpose() * inr.d;
        let direct = m.lu().solve(&st.g).unwrap();
        assert!((direct - w).norm() < 1e-13);
        let free = InertiaData::new(inr.central, 0.0, Vec3::zeros(), 1.0);
        assert_eq!(free.omega_from_g(&st.g, &st.gamma), st.g.component_div(&free.ibb));
    }

    #[test]
    fn relative_equilibrium() {
        let inr = InertiaData::new(Vec3::new(2.0, 2.0, 2.0), 0.5, Vec3::new(0.0, 0.0, 0.3), 0.7);
        let gamma = Vec3::new(0.0, 0.0, 1.0);
        let st = BodyState { g: Vec3::new(0.0, 0.0, 1.2), gamma };
        let d = gyrostat_rhs(&st, &inr);
        assert!(d.g.norm() < 1e-15 && d.gamma.norm() < 1e-15);
    }

    #[test]
    fn rubber_rest_and_projection() {
        let inr = inertia(1.0, Vec3::zeros());
        let rest = BodyState { g: Vec3::zeros(), gamma: state().gamma };
        let d = rubber_rhs(&rest, &inr);
        assert_eq!(d.g.norm() + d.gamma.norm(), 0.0);
        let st = state();
        assert!(matches!(project_rubber(&st, &inr), Err(Error::ConstraintViolation { .. })));
        let w = inr.inv(&st.g);
        let w = w - st.gamma * w.dot(&st.gamma);
        let on = BodyState { g: inr.ibb.component_mul(&(w + st.gamma * 1e-8)), gamma: st.gamma };
        let p = project_rubber(&on, &inr).unwrap();
        assert!(rubber_violation(&p, &inr) < 1e-15);
    }

    #[test]
    fn integral_lists() {
        let st = state();
        let names = |eps: f64, k: Vec3, v| {
            integral_suite(&st, &inertia(eps, k), v)
                .into_iter()
                .map(|(n, _)| n)
                .collect::<Vec<_>>()
        };
        assert_eq!(names(1.0, Vec3::zeros(), BodyVariant::Plain), ["F1", "F2", "F3", "F4"]);
        assert_eq!(names(-1.0, Vec3::zeros(), BodyVariant::Plain), ["F1", "F2", "F3", "F4~"]);
        assert_eq!(names(0.6, Vec3::zeros(), BodyVariant::Plain), ["F1", "F2", "F3"]);
        assert_eq!(names(1.0, Vec3::z(), BodyVariant::Gyrostat), ["F1", "F2", "F3", "F4"]);
        assert_eq!(names(1.0, Vec3::zeros(), BodyVariant::Rubber), ["F1", "F2"]);
        let f1 = integral_suite(&st, &inertia(0.6, Vec3::zeros()), BodyVariant::Plain)[0].1;
        assert!((f1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_density_without_d() {
        let inr = InertiaData::new(Vec3::new(1.0, 1.7, 2.3), 0.0, Vec3::zeros(), 0.8);
        let r = measure_residual(&state(), &inr, BodyVariant::Plain).unwrap();
        assert!(r < 1e-6, "{r}");
        assert!((density(&state().gamma, &inr, BodyVariant::Plain) - 1.0).abs() < 1e-15);
    }
}
