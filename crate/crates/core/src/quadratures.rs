//! Reduction of the Neumann system to the quartic `X(x)`, `x = cos u`.
//!
//! With `phi(x) = -b0 x^2 + 2 b1 x0 x - Gamma_bar` and
//! `psi(x) = 2 b2 (h'^2 - (x - x0)^2)`:
//!
//! ```text
//! X = psi (1 - x^2) - phi^2
//! b2 s sin u   = k mu phi(x)
//! A n          = -k mu (x - x0)
//! b2 tau sin u = mu k sqrt(X)        (up to sign)
//! (dx/dt)^2    = (k / b2)^2 X
//! ```

use crate::elliptic::{self, QuarticBinomial, QuarticInversion};
use crate::error::{Error, Result};
use crate::neumann::{self, NeumannState, NeumannSystem, Trajectory};
use crate::ode::IntegratorConfig;
use crate::params::{self, DerivedConstants, ReducedConstants};
use crate::poly::Poly;
use crate::quad;

/// Double roots: `|X'(r)| < DOUBLE_ROOT_TOL * |X|`.
pub const DOUBLE_ROOT_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct QuarticData {
    pub coeffs: QuarticBinomial,
    pub poly: Poly,
    /// Distinct real roots, descending. Double roots appear once.
    pub roots: Vec<f64>,
    /// Roots of even multiplicity (subset of `roots`).
    pub double_roots: Vec<f64>,
    /// Motion interval `(x_IV, x_I)` containing the initial x; both ends
    /// coincide for a motion at a double root.
    pub interval: (f64, f64),
    pub phi: Poly,
    pub psi: Poly,
    pub x_init: f64,
    /// `k / b2`: `dx/dt = +-(k / b2) sqrt(X)`.
    pub time_scale: f64,
}

impl QuarticData {
    pub fn eval(&self, x: f64) -> f64 {
        self.poly.eval(x)
    }

    /// Largest absolute power-basis coefficient of X.
    pub fn scale(&self) -> f64 {
        self.poly.norm()
    }

    pub fn is_degenerate_interval(&self) -> bool {
        self.interval.0 == self.interval.1
    }

    /// The quartic of `(dx/dt)^2`, i.e. `(k / b2)^2 X`.
    pub fn time_quartic(&self) -> QuarticBinomial {
        self.coeffs.scaled(self.time_scale * self.time_scale)
    }

    /// Max |X| over the motion interval, sampled.
    pub fn max_on_interval(&self) -> f64 {
        let (a, b) = self.interval;
        (0..=256)
            .map(|i| self.eval(a + (b - a) * i as f64 / 256.0).abs())
            .fold(0.0, f64::max)
    }

    /// `phi(x) / (1 - x^2)`, finite at `x = +-1` when `phi` vanishes there.
    pub fn phi_over_sin2(&self, x: f64) -> f64 {
        let d = 1.0 - x * x;
        let scale = self.phi.norm();
        if d.abs() > 1e-6 {
            return self.phi.eval(x) / d;
        }
        let pole = if x > 0.0 { 1.0 } else { -1.0 };
        if self.phi.eval(pole).abs() > 1e-10 * scale {
            return self.phi.eval(x) / d;
        }
        // phi = (x - pole) q(x) + r, and 1 - x^2 = -(x - pole)(x + pole)
        let (q, _) = self.phi.div_rem(&Poly::new(vec![-pole, 1.0]));
        -q.eval(x) / (x + pole)
    }
}

/// Expands `X` and isolates its roots. `x_init` selects the motion interval.
pub fn build_x(rc: &ReducedConstants, dc: &DerivedConstants, x_init: f64) -> Result<QuarticData> {
    let _ = dc;
    let ReducedConstants { b0, b1, b2, gamma_bar, h_prime, x0, k, .. } = *rc;
    let phi = Poly::new(vec![-gamma_bar, 2.0 * b1 * x0, -b0]);
    let psi = Poly::new(vec![2.0 * b2 * (h_prime * h_prime - x0 * x0), 4.0 * b2 * x0, -2.0 * b2]);
    let one_minus_x2 = Poly::new(vec![1.0, 0.0, -1.0]);
    let poly = &(&psi * &one_minus_x2) - &(&phi * &phi);
    let c: [f64; 5] = std::array::from_fn(|i| poly.coeff(i));
    let coeffs = QuarticBinomial::from_ascending(c);
    let (roots, double_roots) = real_roots_with_multiplicity(&poly);
    let interval = select_interval(&poly, &roots, &double_roots, x_init)?;
    Ok(QuarticData {
        coeffs,
        poly,
        roots,
        double_roots,
        interval,
        phi,
        psi,
        x_init,
        time_scale: k / b2,
    })
}

/// Distinct real roots (descending) and the subset that are double.
pub fn real_roots_with_multiplicity(poly: &Poly) -> (Vec<f64>, Vec<f64>) {
    let scale = poly.norm();
    let bound = poly.root_bound();
    let d = poly.derivative();
    let mut roots = poly.real_roots(-bound, bound);
    // Local extrema touching zero are double roots even if rounding hid them.
    for c in d.real_roots(-bound, bound) {
        if poly.eval(c).abs() <= 1e-12 * scale && !roots.iter().any(|r| (r - c).abs() < 1e-6) {
            roots.push(c);
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Merge pairs of close roots that straddle a flat extremum.
    let mut merged: Vec<f64> = Vec::new();
    let mut doubles = Vec::new();
    let mut i = 0;
    while i < roots.len() {
        let r = roots[i];
        if i + 1 < roots.len() {
            let m = 0.5 * (r + roots[i + 1]);
            if roots[i + 1] - r < 1e-6 && d.eval(m).abs() < DOUBLE_ROOT_TOL * scale {
                merged.push(m);
                doubles.push(m);
                i += 2;
                continue;
            }
        }
        if d.eval(r).abs() < DOUBLE_ROOT_TOL * scale {
            doubles.push(r);
        }
        merged.push(r);
        i += 1;
    }
    merged.reverse();
    doubles.reverse();
    (merged, doubles)
}

fn select_interval(poly: &Poly, roots: &[f64], doubles: &[f64], x: f64) -> Result<(f64, f64)> {
    let scale = poly.norm();
    if roots.is_empty() {
        return Err(Error::NoRealMotion("X has no real roots".into()));
    }
    for &d in doubles {
        if (d - x).abs() < 1e-6 && poly.eval(x).abs() <= 1e-9 * scale {
            return Ok((d, d));
        }
    }
    if poly.eval(x) < -1e-10 * scale {
        return Err(Error::NoRealMotion(format!("X({x}) = {:e} < 0", poly.eval(x))));
    }
    // roots are descending; find the adjacent pair bracketing x with X > 0 inside.
    let asc: Vec<f64> = roots.iter().rev().copied().collect();
    let mut best: Option<(f64, f64)> = None;
    for w in asc.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = 0.5 * (lo + hi);
        if poly.eval(mid) > 0.0 && x >= lo - 1e-9 && x <= hi + 1e-9 {
            // At a shared root prefer the side the motion moves into; both are
            // valid, pick the one whose interior contains x if any.
            if best.is_none() || (x > lo && x < hi) {
                best = Some((lo, hi));
            }
        }
    }
    best.ok_or_else(|| Error::NoRealMotion(format!("initial x = {x} is not inside a motion interval")))
}

/// `(s, tau, n)` at `x` on the branch `sign` (the sign of tau; 0 at a
/// turning point).
pub fn velocities_of_x(
    x: f64,
    rc: &ReducedConstants,
    dc: &DerivedConstants,
    qd: &QuarticData,
    sign: f64,
) -> Result<(f64, f64, f64)> {
    let su2 = 1.0 - x * x;
    if su2 <= 0.0 || su2.sqrt() < neumann::POLE_THRESHOLD {
        return Err(Error::PoleProximity(format!("x = {x}")));
    }
    let su = su2.sqrt();
    let k = rc.k;
    let s = k * dc.mu * qd.phi.eval(x) / (rc.b2 * su);
    let n = -k * dc.mu * (x - rc.x0) / dc.a;
    let xv = qd.eval(x).max(0.0);
    let tau = if sign == 0.0 {
        0.0
    } else {
        sign.signum() * dc.mu * (k * xv.sqrt()).abs() / (rc.b2 * su)
    };
    Ok((s, tau, n))
}

/// Closed-form `x(t)` for `(dx/dt)^2 = (k / b2)^2 X`.
pub fn solve_xt(qd: &QuarticData, x_init: f64, branch: f64) -> Result<QuarticInversion> {
    if qd.is_degenerate_interval() {
        let q = qd.time_quartic();
        return elliptic::invert_quartic(&q, qd.interval.0, branch);
    }
    elliptic::invert_quartic(&qd.time_quartic(), x_init, branch)
}

/// Period of `x(t)` by quadrature over the motion interval.
pub fn period_by_quadrature(qd: &QuarticData) -> Option<f64> {
    if qd.is_degenerate_interval() {
        return None;
    }
    Some(elliptic::period_by_quadrature(&qd.time_quartic(), qd.interval.0, qd.interval.1))
}

/// Integral constants and quartic of a Neumann state.
pub fn reduce_state(sys: &NeumannSystem, st: &NeumannState) -> Result<(ReducedConstants, QuarticData)> {
    let iv = sys.integrals(st);
    let x0 = iv.x0.ok_or(Error::ZeroGyroMomentum)?;
    let rc = params::reduced_constants(&sys.dc, sys.k(), iv.h, iv.gamma2.sqrt(), x0)?;
    let qd = build_x(&rc, &sys.dc, st.u.cos())?;
    Ok((rc, qd))
}

/// Aligned state on the level set `(h, Gamma, x0)` at `x = cos u`, moving
/// with `sign(tau) = tau_sign` (0 for a turning point).
pub fn state_from_integrals(
    sys: &NeumannSystem,
    h: f64,
    gamma: f64,
    x0: f64,
    x: f64,
    tau_sign: f64,
    v: f64,
    v1: f64,
) -> Result<NeumannState> {
    let rc = params::reduced_constants(&sys.dc, sys.k(), h, gamma, x0)?;
    let qd = build_x(&rc, &sys.dc, x)?;
    let (s, tau, n) = velocities_of_x(x, &rc, &sys.dc, &qd, tau_sign)?;
    let st = NeumannState {
        u: x.acos(),
        v,
        theta: 0.0,
        u1: std::f64::consts::FRAC_PI_2,
        v1,
        s,
        tau,
        n,
    };
    Ok(sys.align_axis(&st))
}

/// `dv1/dt` as a function of x (the fixed-sphere longitude rate), with the
/// fixed axis along the conserved momentum.
pub fn v1_rate(x: f64, rc: &ReducedConstants, dc: &DerivedConstants, qd: &QuarticData) -> f64 {
    let k = rc.k;
    let su2 = 1.0 - x * x;
    let an = -k * dc.mu * (x - rc.x0);
    let kin = 2.0 * rc.h - an * an / dc.a;
    // s sin u = k mu phi / b2
    let s_sin_u = k * dc.mu * qd.phi.eval(x) / rc.b2;
    let theta = rc.gamma * rc.gamma - (an + k * x).powi(2);
    let _ = su2;
    dc.mu_prime * rc.gamma * (kin - k * s_sin_u) / (dc.mu * theta)
}

/// `dv/dt` as a function of x.
pub fn v_rate(x: f64, rc: &ReducedConstants, qd: &QuarticData) -> f64 {
    rc.k * qd.phi_over_sin2(x) / rc.b2
}

/// Full Neumann state reconstructed from the reduction.
#[derive(Clone, Debug)]
pub struct AngularSolution {
    sys: NeumannSystem,
    rc: ReducedConstants,
    qd: QuarticData,
    init: NeumannState,
    route: Route,
}

#[derive(Clone, Debug)]
enum Route {
    Reduced {
        x: QuarticInversion,
        dt: f64,
        /// `(v, v1, theta by quadrature)` at `t = j dt`.
        nodes: Vec<[f64; 3]>,
        max_theta_mismatch: f64,
    },
    /// Momentum vanishes: the fixed-sphere angles come from the ODE.
    Ode(Box<Trajectory>),
}

impl AngularSolution {
    pub fn initial_state(&self) -> &NeumannState {
        &self.init
    }

    pub fn quartic(&self) -> &QuarticData {
        &self.qd
    }

    pub fn reduced_constants(&self) -> &ReducedConstants {
        &self.rc
    }

    /// `x(t)` and `dx/dt`.
    pub fn x_state(&self, t: f64) -> Result<(f64, f64)> {
        match &self.route {
            Route::Reduced { x, .. } => x.state_checked(t),
            Route::Ode(tr) => {
                let st = tr.state(t);
                Ok((st.u.cos(), st.u.sin() * st.tau / self.sys.dc.mu))
            }
        }
    }

    /// Largest gap between quadrature and algebraic theta at the nodes.
    pub fn theta_consistency(&self) -> f64 {
        match &self.route {
            Route::Reduced { max_theta_mismatch, .. } => *max_theta_mismatch,
            Route::Ode(_) => 0.0,
        }
    }

    pub fn period(&self) -> Option<f64> {
        match &self.route {
            Route::Reduced { x, .. } => x.period(),
            Route::Ode(_) => None,
        }
    }

    fn local(&self, x: f64, xd: f64) -> Result<Local> {
        local_state(x, xd, &self.rc, &self.sys.dc, &self.qd)
    }

    pub fn state_at(&self, t: f64) -> Result<NeumannState> {
        match &self.route {
            Route::Ode(tr) => Ok(tr.state(t)),
            Route::Reduced { x, dt, nodes, .. } => {
                let (xv, xd) = x.state_checked(t)?;
                let loc = self.local(xv, xd)?;
                let j = ((t / dt).floor().max(0.0) as usize).min(nodes.len() - 1);
                let tj = j as f64 * dt;
                let [vj, v1j, thj] = nodes[j];
                let inc = self.increments(x, tj, t)?;
                let th_q = thj + inc[2];
                let th = unwrap_near(loc.theta_alg, th_q);
                Ok(NeumannState {
                    u: xv.clamp(-1.0, 1.0).acos(),
                    v: vj + inc[0],
                    theta: th,
                    u1: loc.u1,
                    v1: v1j + inc[1],
                    s: loc.s,
                    tau: loc.tau,
                    n: loc.n,
                })
            }
        }
    }

    fn increments(&self, x: &QuarticInversion, a: f64, b: f64) -> Result<[f64; 3]> {
        increments(x, &self.rc, &self.sys.dc, &self.qd, a, b)
    }
}

/// Integrals of `(dv/dt, dv1/dt, dtheta/dt)` over `[a, b]`.
fn increments(
    x: &QuarticInversion,
    rc: &ReducedConstants,
    dc: &DerivedConstants,
    qd: &QuarticData,
    a: f64,
    b: f64,
) -> Result<[f64; 3]> {
    if a == b {
        return Ok([0.0; 3]);
    }
    let mut out = [0.0; 3];
    let mut err = None;
    for (i, slot) in out.iter_mut().enumerate() {
        let (val, _) = quad::integrate(
            |t| match x.state_checked(t).and_then(|(xv, xd)| local_state(xv, xd, rc, dc, qd)) {
                Ok(l) => [l.v_dot, l.v1_dot, l.theta_dot][i],
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            },
            a,
            b,
            1e-13,
            1e-12,
        );
        *slot = val;
    }
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

#[derive(Clone, Copy, Debug)]
struct Local {
    s: f64,
    tau: f64,
    n: f64,
    u1: f64,
    theta_alg: f64,
    v_dot: f64,
    v1_dot: f64,
    theta_dot: f64,
}

fn local_state(x: f64, xd: f64, rc: &ReducedConstants, dc: &DerivedConstants, qd: &QuarticData) -> Result<Local> {
    let k = rc.k;
    let x = x.clamp(-1.0, 1.0);
    let su = (1.0 - x * x).sqrt();
    let r = qd.phi_over_sin2(x);
    let s = k * dc.mu * r * su / rc.b2;
    let tau = if su > 1e-6 {
        dc.mu * xd / su
    } else {
        let inner = (qd.psi.eval(x) - qd.phi.eval(x) * r).max(0.0);
        xd.signum() * dc.mu * (k / rc.b2).abs() * inner.sqrt()
    };
    let n = -k * dc.mu * (x - rc.x0) / dc.a;
    let g1 = dc.p * s - k * su;
    let g2 = dc.p * tau;
    let g3 = dc.a * n + k * x;
    let gamma = rc.gamma;
    let u1 = (-g3 / gamma).clamp(-1.0, 1.0).acos();
    let theta_alg = g1.atan2(-g2);
    let v_dot = k * r / rc.b2;
    let v1_dot = v1_rate(x, rc, dc, qd);
    let theta_dot = -n - x * v_dot - u1.cos() * v1_dot;
    Ok(Local {
        s,
        tau,
        n,
        u1,
        theta_alg,
        v_dot,
        v1_dot,
        theta_dot,
    })
}

fn unwrap_near(angle: f64, reference: f64) -> f64 {
    let tp = 2.0 * std::f64::consts::PI;
    angle + tp * ((reference - angle) / tp).round()
}

/// Builds `t -> (v, v1, theta)` (and the rest of the state) on `[0, horizon]`
/// from an aligned initial state.
pub fn angular_quadratures(
    sys: &NeumannSystem,
    init: &NeumannState,
    horizon: f64,
) -> Result<AngularSolution> {
    let (rc, qd) = reduce_state(sys, init)?;
    if rc.gamma <= 1e-300 {
        let tr = sys.simulate(init, horizon, &IntegratorConfig::default())?;
        return Ok(AngularSolution {
            sys: *sys,
            rc,
            qd,
            init: *init,
            route: Route::Ode(Box::new(tr)),
        });
    }
    let branch = if init.tau == 0.0 { 1.0 } else { init.tau.signum() };
    let x = solve_xt(&qd, init.u.cos(), branch)?;
    let dt = match x.period() {
        Some(p) => (p / 32.0).min(horizon.max(1e-12)),
        None => horizon.max(1e-12),
    };
    let count = (horizon / dt).ceil() as usize + 1;
    let mut nodes = Vec::with_capacity(count + 1);
    nodes.push([init.v, init.v1, init.theta]);
    let mut mismatch: f64 = 0.0;
    for j in 0..count {
        let a = j as f64 * dt;
        let inc = increments(&x, &rc, &sys.dc, &qd, a, a + dt)?;
        let prev = nodes[j];
        let next = [prev[0] + inc[0], prev[1] + inc[1], prev[2] + inc[2]];
        let (xv, xd) = x.state_checked(a + dt)?;
        let loc = local_state(xv, xd, &rc, &sys.dc, &qd)?;
        let alg = unwrap_near(loc.theta_alg, next[2]);
        mismatch = mismatch.max((alg - next[2]).abs());
        nodes.push(next);
    }
    Ok(AngularSolution {
        sys: *sys,
        rc,
        qd,
        init: *init,
        route: Route::Reduced {
            x,
            dt,
            nodes,
            max_theta_mismatch: mismatch,
        },
    })
}
