//! Multiplier-free (Voronec) form of the rolling equations, used as an
//! independent consistency check on simulated trajectories.
//!
//! Coordinates `q = (u, v, theta, u1, v1)`; `u1, v1` are dependent, with
//! `dq_{3+nu}/dt = sum_i a[nu][i] dq_i/dt`. The kinetic energy is built from
//! scratch in Neumann variables (gyroscope eliminated by its Routhian, which
//! leaves the linear term `k omega_z`), and every partial derivative is
//! numerical.

use crate::error::{Error, Result};
use crate::neumann::NeumannState;
use crate::params::{DerivedConstants, SystemParams};

pub const N_INDEP: usize = 3;
pub const N_DEP: usize = 2;

pub type Coords = [f64; 5];

/// Relative step for coefficient partials.
pub const COEFF_STEP: f64 = 1e-6;
/// Step for the fourth-order stencils used by the residual.
const STENCIL_STEP: f64 = 1e-3;

/// Sampling is rejected when the differentiation error alone exceeds this.
pub const NOISE_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstraintData {
    /// `a[nu][i]`.
    pub a: [[f64; N_INDEP]; N_DEP],
    /// `A^(nu)_{ij}`.
    pub a_coeffs: [[[f64; N_INDEP]; N_INDEP]; N_DEP],
    /// `A^(nu)_i`; zero for these time-independent homogeneous constraints.
    pub a_free: [[f64; N_INDEP]; N_DEP],
}

impl ConstraintData {
    pub fn antisymmetry_residual(&self) -> f64 {
        let mut m: f64 = 0.0;
        for nu in 0..N_DEP {
            for i in 0..N_INDEP {
                for j in 0..N_INDEP {
                    m = m.max((self.a_coeffs[nu][i][j] + self.a_coeffs[nu][j][i]).abs());
                }
            }
        }
        m
    }
}

/// Kinetic model of ball plus gyroscope in Neumann variables.
#[derive(Clone, Copy, Debug)]
pub struct Kinetic {
    pub mu_prime: f64,
    pub a: f64,
    pub c: f64,
    pub k: f64,
    /// `M (R1 + R2)^2`.
    pub center: f64,
}

impl Kinetic {
    pub fn new(p: &SystemParams, dc: &DerivedConstants) -> Self {
        Kinetic {
            mu_prime: dc.mu_prime,
            a: dc.a,
            c: dc.c,
            k: p.k,
            center: p.m * (p.r1 + p.r2).powi(2),
        }
    }

    /// `(s, tau, n)` for arbitrary (unconstrained) Neumann velocities.
    pub fn omega(&self, q: &Coords, qd: &Coords) -> [f64; 3] {
        let [u, v_, th, u1, _] = *q;
        let _ = v_;
        let [ud, vd, thd, u1d, v1d] = *qd;
        let (st, ct) = th.sin_cos();
        let s = u.sin() * vd + u1.sin() * v1d * st + u1d * ct;
        let tau = -ud + u1d * st - u1.sin() * v1d * ct;
        let n = -thd - u1.cos() * v1d - u.cos() * vd;
        [s, tau, n]
    }

    /// Full kinetic energy `T(q, qd)` (Routhian; constant term dropped).
    pub fn energy(&self, q: &Coords, qd: &Coords) -> f64 {
        let [s, tau, n] = self.omega(q, qd);
        let u = q[0];
        let wz = -s * u.sin() + n * u.cos();
        let w2 = s * s + tau * tau + n * n;
        let rot = 0.5 * (self.a * (w2 - wz * wz) + self.c * wz * wz) + self.k * wz;
        let u1 = q[3];
        let trans = 0.5 * self.center * (qd[3] * qd[3] + (u1.sin() * qd[4]).powi(2));
        rot + trans
    }

    pub fn constraint_matrix(&self, q: &Coords) -> [[f64; N_INDEP]; N_DEP] {
        constraint_matrix(q, self.mu_prime)
    }

    /// All five velocities from the independent ones.
    pub fn lift(&self, q: &Coords, qi: &[f64; N_INDEP]) -> Coords {
        let a = self.constraint_matrix(q);
        let mut out = [qi[0], qi[1], qi[2], 0.0, 0.0];
        for nu in 0..N_DEP {
            out[3 + nu] = (0..N_INDEP).map(|i| a[nu][i] * qi[i]).sum();
        }
        out
    }

    /// Constrained kinetic energy `Theta(q, qd_indep)`.
    pub fn theta(&self, q: &Coords, qi: &[f64; N_INDEP]) -> f64 {
        self.energy(q, &self.lift(q, qi))
    }

    /// `dTheta/dqd_i`. Theta is quadratic in the velocities, so the
    /// centered difference with a unit-scale step is exact up to rounding.
    pub fn theta_dv(&self, q: &Coords, qi: &[f64; N_INDEP]) -> [f64; N_INDEP] {
        let h = qi.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        std::array::from_fn(|i| {
            let mut p = *qi;
            let mut m = *qi;
            p[i] += h;
            m[i] -= h;
            (self.theta(q, &p) - self.theta(q, &m)) / (2.0 * h)
        })
    }

    /// `dTheta/dq_s` for all five coordinates.
    pub fn theta_dq(&self, q: &Coords, qi: &[f64; N_INDEP]) -> Coords {
        std::array::from_fn(|s| stencil(|e| {
            let mut x = *q;
            x[s] += e;
            self.theta(&x, qi)
        }, STENCIL_STEP))
    }

    /// `K_nu = dT/dqd_{3+nu}` taken before the constraints, then constrained.
    pub fn k_nu(&self, q: &Coords, qi: &[f64; N_INDEP]) -> [f64; N_DEP] {
        let full = self.lift(q, qi);
        let h = full.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        std::array::from_fn(|nu| {
            let mut p = full;
            let mut m = full;
            p[3 + nu] += h;
            m[3 + nu] -= h;
            (self.energy(q, &p) - self.energy(q, &m)) / (2.0 * h)
        })
    }
}

/// Fourth-order centered derivative at zero.
fn stencil(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h)
}

/// Rolling constraints solved for `u1', v1'`.
pub fn constraint_matrix(q: &Coords, mu_prime: f64) -> [[f64; N_INDEP]; N_DEP] {
    let [u, _, th, u1, _] = *q;
    let (st, ct) = th.sin_cos();
    let su = u.sin();
    let su1 = u1.sin();
    [
        [-mu_prime * st, mu_prime * ct * su, 0.0],
        [mu_prime * ct / su1, mu_prime * st * su / su1, 0.0],
    ]
}

fn check_pole(q: &Coords) -> Result<()> {
    if q[3].sin().abs() < 1e-6 {
        return Err(Error::PoleProximity(format!("sin u1 = {:e}", q[3].sin())));
    }
    Ok(())
}

/// Constraint coefficients and `A^(nu)_{ij}` from partial derivatives.
pub fn constraint_coeffs(q: &Coords, dc: &DerivedConstants) -> Result<ConstraintData> {
    check_pole(q)?;
    let mp = dc.mu_prime;
    let a = constraint_matrix(q, mp);
    // da[nu][i] / dq_s
    let mut da = [[[0.0; 5]; N_INDEP]; N_DEP];
    for s in 0..5 {
        let h = COEFF_STEP * q[s].abs().max(1.0);
        let mut p = *q;
        let mut m = *q;
        p[s] += h;
        m[s] -= h;
        let (ap, am) = (constraint_matrix(&p, mp), constraint_matrix(&m, mp));
        for nu in 0..N_DEP {
            for i in 0..N_INDEP {
                da[nu][i][s] = (ap[nu][i] - am[nu][i]) / (2.0 * h);
            }
        }
    }
    let mut a_coeffs = [[[0.0; N_INDEP]; N_INDEP]; N_DEP];
    for nu in 0..N_DEP {
        for i in 0..N_INDEP {
            for j in 0..N_INDEP {
                let lhs = da[nu][i][j] + (0..N_DEP).map(|m| a[m][j] * da[nu][i][3 + m]).sum::<f64>();
                let rhs = da[nu][j][i] + (0..N_DEP).map(|m| a[m][i] * da[nu][j][3 + m]).sum::<f64>();
                a_coeffs[nu][i][j] = lhs - rhs;
            }
        }
    }
    Ok(ConstraintData {
        a,
        a_coeffs,
        a_free: [[0.0; N_INDEP]; N_DEP],
    })
}

/// Horizontal lift of `d/dq_i`.
fn horizontal(q: &Coords, i: usize, mu_prime: f64) -> Coords {
    let a = constraint_matrix(q, mu_prime);
    let mut x = [0.0; 5];
    x[i] = 1.0;
    x[3] = a[0][i];
    x[4] = a[1][i];
    x
}

/// Curvature of the constraint connection, `B^nu_{ij} = X_i^h(a_nu j) -
/// X_j^h(a_nu i)`, from derivatives along the horizontal lifts.
pub fn curvature(q: &Coords, dc: &DerivedConstants) -> Result<[[[f64; N_INDEP]; N_INDEP]; N_DEP]> {
    check_pole(q)?;
    let mp = dc.mu_prime;
    // D[i][nu][j] = X_i^h(a[nu][j])
    let mut d = [[[0.0; N_INDEP]; N_DEP]; N_INDEP];
    for (i, di) in d.iter_mut().enumerate() {
        let x = horizontal(q, i, mp);
        let h = COEFF_STEP;
        let shift = |e: f64| -> Coords { std::array::from_fn(|s| q[s] + e * x[s]) };
        let (ap, am) = (constraint_matrix(&shift(h), mp), constraint_matrix(&shift(-h), mp));
        for nu in 0..N_DEP {
            for j in 0..N_INDEP {
                di[nu][j] = (ap[nu][j] - am[nu][j]) / (2.0 * h);
            }
        }
    }
    let mut b = [[[0.0; N_INDEP]; N_INDEP]; N_DEP];
    for nu in 0..N_DEP {
        for i in 0..N_INDEP {
            for j in 0..N_INDEP {
                b[nu][i][j] = d[i][nu][j] - d[j][nu][i];
            }
        }
    }
    Ok(b)
}

/// Coordinates and independent velocities of a Neumann state.
pub fn coords_of(st: &NeumannState, dc: &DerivedConstants) -> (Coords, [f64; N_INDEP]) {
    let q = [st.u, st.v, st.theta, st.u1, st.v1];
    let ud = -st.tau / dc.mu;
    let vd = st.s / (dc.mu * st.u.sin());
    let a = constraint_matrix(&q, dc.mu_prime);
    let v1d = a[1][0] * ud + a[1][1] * vd;
    let thd = -st.n - st.u.cos() * vd - st.u1.cos() * v1d;
    (q, [ud, vd, thd])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VoronecReport {
    /// Max over samples and equations of |residual| divided by the largest
    /// term of that equation at that sample (floored at `SCALE_FLOOR` times
    /// the overall largest term).
    pub residual: f64,
    /// Max |residual| divided by the largest term over the whole sample.
    pub global_residual: f64,
    /// Differentiation error estimate on the same scale as `residual`.
    pub noise_floor: f64,
    pub max_term: f64,
    pub samples: usize,
}

/// Relative floor for the per-sample scale.
pub const SCALE_FLOOR: f64 = 1e-3;

/// Per-sample `(|residual|, |noise|, largest term)`.
#[derive(Clone, Copy, Default)]
struct Row {
    res: [f64; N_INDEP],
    noise: [f64; N_INDEP],
    term: [f64; N_INDEP],
}

fn summarize(rows: &[Row], samples: usize) -> VoronecReport {
    let max_term = rows.iter().flat_map(|r| r.term).fold(0.0_f64, f64::max);
    let floor = (SCALE_FLOOR * max_term).max(f64::MIN_POSITIVE);
    let mut residual: f64 = 0.0;
    let mut noise: f64 = 0.0;
    let mut global: f64 = 0.0;
    for r in rows {
        for i in 0..N_INDEP {
            let sc = r.term[i].max(floor);
            residual = residual.max(r.res[i] / sc);
            noise = noise.max(r.noise[i] / sc);
            global = global.max(r.res[i]);
        }
    }
    VoronecReport {
        residual,
        global_residual: global / max_term.max(f64::MIN_POSITIVE),
        noise_floor: noise,
        max_term,
        samples,
    }
}

#[derive(Clone, Copy)]
struct Sample {
    q: Coords,
    qi: [f64; N_INDEP],
    p: [f64; N_INDEP],
}

/// Residual of the multiplier-free equations along `traj` on `[t0, t1]`,
/// sampled at spacing `dt`. Time derivatives use a fourth-order stencil.
pub fn voronec_residual(
    traj: &dyn Fn(f64) -> NeumannState,
    t0: f64,
    t1: f64,
    dt: f64,
    p: &SystemParams,
    dc: &DerivedConstants,
) -> Result<VoronecReport> {
    let kin = Kinetic::new(p, dc);
    let n = ((t1 - t0) / dt).floor() as usize;
    if n < 9 {
        return Err(Error::Domain("need at least 9 samples".into()));
    }
    let samples: Vec<Sample> = (0..=n)
        .map(|j| {
            let (q, qi) = coords_of(&traj(t0 + j as f64 * dt), dc);
            Sample { q, qi, p: kin.theta_dv(&q, &qi) }
        })
        .collect();
    let mut rows = Vec::with_capacity(n);
    for j in 4..=n - 4 {
        let mut row = Row::default();
        let Sample { q, qi, .. } = samples[j];
        check_pole(&q)?;
        let cd = constraint_coeffs(&q, dc)?;
        let dq = kin.theta_dq(&q, &qi);
        let kn = kin.k_nu(&q, &qi);
        for i in 0..N_INDEP {
            let d1 = (8.0 * (samples[j + 1].p[i] - samples[j - 1].p[i]) - (samples[j + 2].p[i] - samples[j - 2].p[i]))
                / (12.0 * dt);
            let d2 = (8.0 * (samples[j + 2].p[i] - samples[j - 2].p[i]) - (samples[j + 4].p[i] - samples[j - 4].p[i]))
                / (24.0 * dt);
            let terms = [
                d1,
                -dq[i],
                -(0..N_DEP).map(|nu| cd.a[nu][i] * dq[3 + nu]).sum::<f64>(),
                -(0..N_DEP)
                    .map(|nu| kn[nu] * (0..N_INDEP).map(|jj| cd.a_coeffs[nu][i][jj] * qi[jj]).sum::<f64>())
                    .sum::<f64>(),
            ];
            let r: f64 = terms.iter().sum();
            row.res[i] = r.abs();
            row.term[i] = terms.iter().fold(0.0, |m, t| m.max(t.abs()));
            row.noise[i] = (d1 - d2).abs();
        }
        rows.push(row);
    }
    let report = summarize(&rows, n + 1);
    if report.noise_floor > NOISE_LIMIT {
        return Err(Error::InsufficientSampling {
            residual: report.residual,
            noise_floor: report.noise_floor,
        });
    }
    Ok(report)
}

/// Residual of the sphere-specialized equations written with the first
/// fundamental forms (`E = R2^2`, `G = R2^2 sin^2 u`, same for the fixed
/// sphere) and the combined multipliers `K'_1, K'_2`.
pub fn sphere_form_residual(
    traj: &dyn Fn(f64) -> NeumannState,
    t0: f64,
    t1: f64,
    dt: f64,
    p: &SystemParams,
    dc: &DerivedConstants,
) -> Result<VoronecReport> {
    let kin = Kinetic::new(p, dc);
    let n = ((t1 - t0) / dt).floor() as usize;
    if n < 9 {
        return Err(Error::Domain("need at least 9 samples".into()));
    }
    let samples: Vec<Sample> = (0..=n)
        .map(|j| {
            let (q, qi) = coords_of(&traj(t0 + j as f64 * dt), dc);
            Sample { q, qi, p: kin.theta_dv(&q, &qi) }
        })
        .collect();
    let (r1, r2) = (p.r1, p.r2);
    let mut rows = Vec::with_capacity(n);
    for j in 4..=n - 4 {
        let mut row = Row::default();
        let Sample { q, qi, .. } = samples[j];
        check_pole(&q)?;
        let [u, _, th, u1, _] = q;
        let [ud, vd, thd] = qi;
        let (st, ct) = th.sin_cos();
        let se = r2;
        let sg = r2 * u.sin();
        let se1 = r1;
        let sg1 = r1 * u1.sin();
        let dq = kin.theta_dq(&q, &qi);
        let [k1, k2] = kin.k_nu(&q, &qi);
        let k1p = k1 / se1 * ct + k2 / sg1 * st;
        let k2p = k1 / se1 * st - k2 / sg1 * ct;
        let delta1 = -ct * u1.cos() / (u1.sin() * r1);
        // Sign of the fixed-sphere term as required by the curvature coefficients.
        let delta2 = u.cos() / (u.sin() * r2) + st * u1.cos() / (u1.sin() * r1);
        let twist = (delta2 * k1p + delta1 * k2p) * se * sg;
        let rhs = [
            dq[0] + se * (-dq[3] * st / se1 + dq[4] * ct / sg1 - k1p * thd) - twist * vd,
            dq[1] + sg * (dq[3] * ct / se1 + dq[4] * st / sg1 - k2p * thd) + twist * ud,
            dq[2] + k1p * se * ud + k2p * sg * vd,
        ];
        for i in 0..N_INDEP {
            let d1 = (8.0 * (samples[j + 1].p[i] - samples[j - 1].p[i]) - (samples[j + 2].p[i] - samples[j - 2].p[i]))
                / (12.0 * dt);
            let d2 = (8.0 * (samples[j + 2].p[i] - samples[j - 2].p[i]) - (samples[j + 4].p[i] - samples[j - 4].p[i]))
                / (24.0 * dt);
            row.res[i] = (d1 - rhs[i]).abs();
            row.term[i] = d1.abs().max(rhs[i].abs()).max(dq[i].abs());
            row.noise[i] = (d1 - d2).abs();
        }
        rows.push(row);
    }
    Ok(summarize(&rows, n + 1))
}

/// Smooth admissible variation: independent components are sine series
/// vanishing at both ends, dependent ones follow the constraints.
pub struct Variation<'a> {
    traj: &'a dyn Fn(f64) -> NeumannState,
    t0: f64,
    t1: f64,
    /// `amps[m][i]` multiplies `sin((m + 1) pi (t - t0) / (t1 - t0))`.
    amps: Vec<[f64; N_INDEP]>,
    mu_prime: f64,
}

impl<'a> Variation<'a> {
    pub fn new(
        traj: &'a dyn Fn(f64) -> NeumannState,
        t0: f64,
        t1: f64,
        amps: Vec<[f64; N_INDEP]>,
        dc: &DerivedConstants,
    ) -> Self {
        Variation {
            traj,
            t0,
            t1,
            amps,
            mu_prime: dc.mu_prime,
        }
    }

    fn indep(&self, t: f64) -> ([f64; N_INDEP], [f64; N_INDEP]) {
        let w = std::f64::consts::PI / (self.t1 - self.t0);
        let mut dq = [0.0; N_INDEP];
        let mut dqd = [0.0; N_INDEP];
        for (m, a) in self.amps.iter().enumerate() {
            let f = (m + 1) as f64 * w;
            let (s, c) = (f * (t - self.t0)).sin_cos();
            for i in 0..N_INDEP {
                dq[i] += a[i] * s;
                dqd[i] += a[i] * f * c;
            }
        }
        (dq, dqd)
    }

    /// Full variation `delta q` at `t`.
    pub fn at(&self, t: f64) -> Coords {
        let st = (self.traj)(t);
        let q = [st.u, st.v, st.theta, st.u1, st.v1];
        let a = constraint_matrix(&q, self.mu_prime);
        let (d, _) = self.indep(t);
        let mut out = [d[0], d[1], d[2], 0.0, 0.0];
        for nu in 0..N_DEP {
            out[3 + nu] = (0..N_INDEP).map(|i| a[nu][i] * d[i]).sum();
        }
        out
    }
}

/// Scaled value of the variational integral
/// `int [dTheta + sum K_nu (d/dt dq_dep - d(qd_dep))] dt` over `[t0, t1]`
/// (composite Simpson on spacing `dt`), divided by the integral of the
/// absolute terms of its integrated-by-parts form
/// `sum_i (equation_i) dq_i`. Near zero on true trajectories.
pub fn variational_check(
    traj: &dyn Fn(f64) -> NeumannState,
    var: &Variation<'_>,
    dt: f64,
    p: &SystemParams,
    dc: &DerivedConstants,
) -> Result<f64> {
    let kin = Kinetic::new(p, dc);
    let (t0, t1) = (var.t0, var.t1);
    let scale_end = var.amps.iter().flatten().fold(0.0_f64, |m, a| m.max(a.abs()));
    for t in [t0, t1] {
        let (d, _) = var.indep(t);
        if d.iter().any(|x| x.abs() > 1e-12 * scale_end.max(1e-300)) {
            return Err(Error::InadmissibleVariation("variation does not vanish at the endpoints".into()));
        }
    }
    let mut n = ((t1 - t0) / dt).ceil() as usize;
    if n % 2 == 1 {
        n += 1;
    }
    if n < 4 {
        return Err(Error::Domain("need at least 4 intervals".into()));
    }
    let h = (t1 - t0) / n as f64;
    let mut total = 0.0;
    let mut total_abs = 0.0;
    for j in 0..=n {
        let t = t0 + j as f64 * h;
        let (q, qi) = coords_of(&traj(t), dc);
        check_pole(&q)?;
        let (dind, dind_dot) = var.indep(t);
        let dq = var.at(t);
        let a = constraint_matrix(&q, dc.mu_prime);
        for nu in 0..N_DEP {
            let want: f64 = (0..N_INDEP).map(|i| a[nu][i] * dind[i]).sum();
            if (want - dq[3 + nu]).abs() > 1e-9 * (1.0 + want.abs()) {
                return Err(Error::InadmissibleVariation("dependent variation violates the constraints".into()));
            }
        }
        let th_q = kin.theta_dq(&q, &qi);
        let th_v = kin.theta_dv(&q, &qi);
        let kn = kin.k_nu(&q, &qi);
        // d a / dt along the path and the variation of a along dq.
        let a_dot = {
            let ap = constraint_matrix(&coords_of(&traj(t + STENCIL_STEP * h), dc).0, dc.mu_prime);
            let am = constraint_matrix(&coords_of(&traj(t - STENCIL_STEP * h), dc).0, dc.mu_prime);
            let mut o = [[0.0; N_INDEP]; N_DEP];
            for nu in 0..N_DEP {
                for i in 0..N_INDEP {
                    o[nu][i] = (ap[nu][i] - am[nu][i]) / (2.0 * STENCIL_STEP * h);
                }
            }
            o
        };
        let da = {
            let e = COEFF_STEP;
            let shift = |s: f64| -> Coords { std::array::from_fn(|k| q[k] + s * e * dq[k]) };
            let (ap, am) = (constraint_matrix(&shift(1.0), dc.mu_prime), constraint_matrix(&shift(-1.0), dc.mu_prime));
            let mut o = [[0.0; N_INDEP]; N_DEP];
            for nu in 0..N_DEP {
                for i in 0..N_INDEP {
                    o[nu][i] = (ap[nu][i] - am[nu][i]) / (2.0 * e);
                }
            }
            o
        };
        // Momentum rates for the scale only (the integrated-by-parts form).
        let p_dot: [f64; N_INDEP] = {
            let e = STENCIL_STEP * h;
            let pp = {
                let (q, qi) = coords_of(&traj(t + e), dc);
                kin.theta_dv(&q, &qi)
            };
            let pm = {
                let (q, qi) = coords_of(&traj(t - e), dc);
                kin.theta_dv(&q, &qi)
            };
            std::array::from_fn(|i| (pp[i] - pm[i]) / (2.0 * e))
        };
        let mut terms = Vec::with_capacity(10);
        let mut scale_terms = Vec::with_capacity(10);
        for s in 0..5 {
            terms.push(th_q[s] * dq[s]);
            scale_terms.push(th_q[s] * dq[s]);
        }
        for i in 0..N_INDEP {
            terms.push(th_v[i] * dind_dot[i]);
            scale_terms.push(p_dot[i] * dind[i]);
        }
        for nu in 0..N_DEP {
            let transp: f64 = (0..N_INDEP).map(|i| a_dot[nu][i] * dind[i] - da[nu][i] * qi[i]).sum();
            terms.push(kn[nu] * transp);
            scale_terms.push(kn[nu] * transp);
        }
        let w = if j == 0 || j == n {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        total += w * terms.iter().sum::<f64>();
        total_abs += w * scale_terms.iter().map(|x| x.abs()).sum::<f64>();
    }
    if total_abs == 0.0 {
        return Ok(0.0);
    }
    Ok(total / total_abs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neumann::NeumannSystem;
    use crate::ode::IntegratorConfig;
    use crate::params::Configuration;

    fn system() -> NeumannSystem {
        NeumannSystem::new(SystemParams {
            r1: 2.0,
            r2: 1.0,
            m: 1.5,
            a1: 0.6,
            c1: 0.9,
            a2: 0.3,
            c2: 0.2,
            k: 1.3,
            config: Configuration::Outer,
        })
        .unwrap()
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
    fn omega_matches_rolling_kinematics() {
        let sys = system();
        let st = state();
        let kin = Kinetic::new(&sys.params, &sys.dc);
        let (q, qi) = coords_of(&st, &sys.dc);
        let w = kin.omega(&q, &kin.lift(&q, &qi));
        assert!((w[0] - st.s).abs() < 1e-14);
        assert!((w[1] - st.tau).abs() < 1e-14);
        assert!((w[2] - st.n).abs() < 1e-14);
        let energy = 0.5 * (sys.dc.p * (st.s * st.s + st.tau * st.tau) + sys.dc.a * st.n * st.n);
        let wz = -st.s * q[0].sin() + st.n * q[0].cos();
        assert!((kin.theta(&q, &qi) - energy - sys.params.k * wz).abs() < 1e-13);
    }

    #[test]
    fn coefficient_structure() {
        let sys = system();
        let q = [1.1, 0.4, 0.3, 1.3, -0.2];
        let cd = constraint_coeffs(&q, &sys.dc).unwrap();
        assert!(cd.antisymmetry_residual() < 1e-8);
        assert_eq!(cd.a_free, [[0.0; 3]; 2]);
        let b = curvature(&q, &sys.dc).unwrap();
        for nu in 0..2 {
            for i in 0..3 {
                for j in 0..3 {
                    assert!((b[nu][i][j] + cd.a_coeffs[nu][i][j]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn residual_small_on_solution_large_on_corruption() {
        let sys = system();
        let init = sys.align_axis(&state());
        let tr = sys.simulate(&init, 2.0, &IntegratorConfig::default()).unwrap();
        let f = |t: f64| tr.state(t);
        let rep = voronec_residual(&f, 0.0, 2.0, 1e-3, &sys.params, &sys.dc).unwrap();
        assert!(rep.residual < 1e-5, "{rep:?}");
        let g = |t: f64| {
            let mut s = tr.state(t);
            s.s *= 1.01;
            s
        };
        let bad = voronec_residual(&g, 0.0, 2.0, 1e-3, &sys.params, &sys.dc).unwrap();
        assert!(bad.residual > 1e-2, "{bad:?}");
        let sph = sphere_form_residual(&f, 0.0, 2.0, 1e-3, &sys.params, &sys.dc).unwrap();
        assert!(sph.residual < 1e-5, "{sph:?}");
    }

    #[test]
    fn variational_integral() {
        let sys = system();
        let init = sys.align_axis(&state());
        let tr = sys.simulate(&init, 2.0, &IntegratorConfig::default()).unwrap();
        let f = |t: f64| tr.state(t);
        let var = Variation::new(&f, 0.0, 2.0, vec![[0.3, -0.2, 0.5], [0.1, 0.4, -0.3]], &sys.dc);
        let v = variational_check(&f, &var, 1e-3, &sys.params, &sys.dc).unwrap();
        assert!(v.abs() < 1e-5, "{v}");
        let zero = Variation::new(&f, 0.0, 2.0, vec![[0.0; 3]], &sys.dc);
        assert_eq!(variational_check(&f, &zero, 1e-3, &sys.params, &sys.dc).unwrap(), 0.0);
        // Non-solution path: u displaced by a bump, velocities kept consistent.
        let dc = sys.dc;
        let g = |t: f64| {
            let st = tr.state(t);
            let (q, qi) = coords_of(&st, &dc);
            let w = std::f64::consts::PI / 2.0;
            let (eta, eta_d) = (0.05 * (w * t).sin(), 0.05 * w * (w * t).cos());
            let up = q[0] + eta;
            let qp = [up, q[1], q[2], q[3], q[4]];
            let ud = qi[0] + eta_d;
            let a = constraint_matrix(&qp, dc.mu_prime);
            let v1d = a[1][0] * ud + a[1][1] * qi[1];
            NeumannState {
                u: up,
                tau: -dc.mu * ud,
                s: dc.mu * up.sin() * qi[1],
                n: -qi[2] - up.cos() * qi[1] - q[3].cos() * v1d,
                ..st
            }
        };
        let var = Variation::new(&g, 0.0, 2.0, vec![[0.3, -0.2, 0.5], [0.1, 0.4, -0.3]], &sys.dc);
        let bad = variational_check(&g, &var, 1e-3, &sys.params, &sys.dc).unwrap();
        assert!(bad.abs() > 1e-2, "{bad}");
    }
}
