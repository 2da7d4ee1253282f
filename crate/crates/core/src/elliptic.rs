//! Weierstrass elliptic functions for real invariants and inversion of
//! `dt = dx / sqrt(X(x))` for a real quartic `X`.
//!
//! Evaluation uses the Laurent series at the origin together with argument
//! duplication. Arguments of `wp` and `wp'` are first reduced modulo the
//! lattice; `zeta` and `sigma` are reduced with their quasi-periodicity.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::quad;

const LAURENT_TERMS: usize = 40;
/// Arguments closer than this to a lattice point (in units of the shortest
/// period) are rejected as poles.
pub const POLE_THRESHOLD: f64 = 1e-8;

/// Quartic in the binomial convention
/// `X(x) = a0 x^4 + 4 a1 x^3 + 6 a2 x^2 + 4 a3 x + a4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuarticBinomial {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl QuarticBinomial {
    /// From power-basis coefficients in ascending order.
    pub fn from_ascending(c: [f64; 5]) -> Self {
        QuarticBinomial {
            a0: c[4],
            a1: c[3] / 4.0,
            a2: c[2] / 6.0,
            a3: c[1] / 4.0,
            a4: c[0],
        }
    }

    pub fn ascending(&self) -> [f64; 5] {
        [self.a4, 4.0 * self.a3, 6.0 * self.a2, 4.0 * self.a1, self.a0]
    }

    pub fn to_poly(&self) -> Poly {
        Poly::new(self.ascending().to_vec())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let c = self.ascending();
        (((c[4] * x + c[3]) * x + c[2]) * x + c[1]) * x + c[0]
    }

    pub fn scaled(&self, s: f64) -> Self {
        QuarticBinomial {
            a0: self.a0 * s,
            a1: self.a1 * s,
            a2: self.a2 * s,
            a3: self.a3 * s,
            a4: self.a4 * s,
        }
    }

    /// Largest absolute power-basis coefficient.
    pub fn norm(&self) -> f64 {
        self.ascending().iter().fold(0.0, |m, a| m.max(a.abs()))
    }
}

/// Lattice invariants of the quartic and the point on the cubic attached to
/// it by the shift `y = x + a1 / a0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeierstrassData {
    pub g2: f64,
    pub g3: f64,
    pub wp_zeta: f64,
    pub wp_prime_zeta: f64,
    pub discriminant: f64,
}

/// Invariants of the monic quartic `X / a0`, so that
/// `wp'(zeta)^2 = 4 wp(zeta)^3 - g2 wp(zeta) - g3` holds.
pub fn weierstrass_from_quartic(q: &QuarticBinomial) -> WeierstrassData {
    let QuarticBinomial { a0, a1, a2, a3, a4 } = *q;
    assert!(a0 != 0.0, "quartic leading coefficient must be nonzero");
    let g2 = (a0 * a4 - 4.0 * a1 * a3 + 3.0 * a2 * a2) / (a0 * a0);
    let g3 = (a0 * a2 * a4 + 2.0 * a1 * a2 * a3 - a2 * a2 * a2 - a0 * a3 * a3 - a1 * a1 * a4)
        / (a0 * a0 * a0);
    let wp_zeta = (a1 * a1 - a0 * a2) / (a0 * a0);
    let wp_prime_zeta = (a0 * a0 * a3 - 3.0 * a0 * a1 * a2 + 2.0 * a1 * a1 * a1) / (a0 * a0 * a0);
    WeierstrassData {
        g2,
        g3,
        wp_zeta,
        wp_prime_zeta,
        discriminant: g2 * g2 * g2 - 27.0 * g3 * g3,
    }
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        if (an - bn).abs() <= 1e-16 * an {
            return an;
        }
        a = an;
        b = bn;
    }
    a
}

/// Complete elliptic integral of the first kind, parameter `m`.
fn ellk(m: f64) -> f64 {
    std::f64::consts::PI / (2.0 * agm(1.0, (1.0 - m).sqrt()))
}

/// A period lattice with real invariants `g2`, `g3` and the function values
/// that depend on it.
#[derive(Clone, Debug)]
pub struct Lattice {
    g2: f64,
    g3: f64,
    roots: [C64; 3],
    /// Reduced basis, `|p1| <= |p2| <= |p2 +- p1|`.
    p1: C64,
    p2: C64,
    /// Length unit: the shortest period.
    scale: f64,
    /// Laurent coefficients of the lattice rescaled to unit shortest period.
    c: [f64; LAURENT_TERMS + 1],
    g2n: f64,
    /// zeta(p1 / 2), zeta(p2 / 2).
    eta: (C64, C64),
}

/// Values of wp, wp', zeta, sigma at one argument.
#[derive(Clone, Copy, Debug)]
struct AllValues {
    wp: C64,
    wpp: C64,
    zeta: C64,
    sigma: C64,
}

impl Lattice {
    pub fn new(g2: f64, g3: f64) -> Result<Self> {
        if !(g2.is_finite() && g3.is_finite()) {
            return Err(Error::Domain(format!("non-finite invariants g2 = {g2}, g3 = {g3}")));
        }
        let disc = g2 * g2 * g2 - 27.0 * g3 * g3;
        let size = (g2 * g2 * g2).abs().max(27.0 * g3 * g3);
        if size == 0.0 || disc.abs() <= 1e-12 * size {
            return Err(Error::Degenerate(format!(
                "lattice discriminant vanishes (g2 = {g2}, g3 = {g3})"
            )));
        }
        let pi = std::f64::consts::PI;
        let (roots, p1, p2);
        if disc > 0.0 {
            // Three real roots of 4t^3 - g2 t - g3.
            let r = (g2 / 12.0).sqrt();
            let arg = (g3 / (4.0 * r * r * r * 2.0)).clamp(-1.0, 1.0);
            let phi = arg.acos() / 3.0;
            let mut e: Vec<f64> = (0..3)
                .map(|j| polish_cubic_root(2.0 * r * (phi - 2.0 * pi * j as f64 / 3.0).cos(), g2, g3))
                .collect();
            e.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let (e1, e2, e3) = (e[0], e[1], e[2]);
            let w1 = pi / (2.0 * agm((e1 - e3).sqrt(), (e1 - e2).sqrt()));
            let w3 = pi / (2.0 * agm((e1 - e3).sqrt(), (e2 - e3).sqrt()));
            roots = [C64::new(e1, 0.0), C64::new(e2, 0.0), C64::new(e3, 0.0)];
            p1 = C64::new(2.0 * w1, 0.0);
            p2 = C64::new(0.0, 2.0 * w3);
        } else {
            // One real root; Cardano for t^3 + p t + q with p = -g2/4, q = -g3/4.
            let p = -g2 / 4.0;
            let q = -g3 / 4.0;
            let s = (q * q / 4.0 + p * p * p / 27.0).sqrt();
            let e2 = polish_cubic_root((-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt(), g2, g3);
            let im = (3.0 * e2 * e2 + 4.0 * p).max(0.0).sqrt() / 2.0;
            roots = [C64::new(-e2 / 2.0, im), C64::new(e2, 0.0), C64::new(-e2 / 2.0, -im)];
            let h2 = ((e2 - roots[0]) * (e2 - roots[2])).re.sqrt();
            let m = 0.5 - 3.0 * e2 / (4.0 * h2);
            let w2 = ellk(m) / h2.sqrt();
            let w2i = ellk(1.0 - m) / h2.sqrt();
            p1 = C64::new(w2, -w2i);
            p2 = C64::new(w2, w2i);
        }
        let (p1, p2) = gauss_reduce(p1, p2);
        let scale = p1.norm();
        let g2n = g2 * scale.powi(4);
        let g3n = g3 * scale.powi(6);
        let mut c = [0.0; LAURENT_TERMS + 1];
        c[2] = g2n / 20.0;
        c[3] = g3n / 28.0;
        for k in 4..=LAURENT_TERMS {
            let s: f64 = (2..=k - 2).map(|m| c[m] * c[k - m]).sum();
            c[k] = 3.0 * s / (((2 * k + 1) * (k - 3)) as f64);
        }
        let mut lat = Lattice {
            g2,
            g3,
            roots,
            p1,
            p2,
            scale,
            c,
            g2n,
            eta: (C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
        };
        let e1 = lat.doubled(p1 / (2.0 * scale)).zeta / scale;
        let e2 = lat.doubled(p2 / (2.0 * scale)).zeta / scale;
        lat.eta = (e1, e2);
        Ok(lat)
    }

    pub fn invariants(&self) -> (f64, f64) {
        (self.g2, self.g3)
    }

    /// Roots of `4 t^3 - g2 t - g3`.
    pub fn roots(&self) -> [C64; 3] {
        self.roots
    }

    /// Reduced lattice basis.
    pub fn periods(&self) -> (C64, C64) {
        (self.p1, self.p2)
    }

    /// `(zeta(p1/2), zeta(p2/2))` for the basis returned by `periods`.
    pub fn quasi_periods(&self) -> (C64, C64) {
        self.eta
    }

    pub fn shortest_period(&self) -> f64 {
        self.scale
    }

    /// Smallest nonzero lattice vector parallel to `dir`.
    pub fn period_along(&self, dir: C64) -> Option<C64> {
        let mut best: Option<C64> = None;
        for i in -6i32..=6 {
            for j in -6i32..=6 {
                if i == 0 && j == 0 {
                    continue;
                }
                let w = self.p1 * i as f64 + self.p2 * j as f64;
                let r = w / dir;
                if r.im.abs() <= 1e-9 * r.norm() && r.re > 0.0 && best.map_or(true, |b| w.norm() < b.norm()) {
                    best = Some(w);
                }
            }
        }
        best
    }

    /// Splits `z = w + m p1 + n p2` with `w` the representative closest to 0.
    pub fn reduce(&self, z: C64) -> (C64, i64, i64) {
        let det = self.p1.re * self.p2.im - self.p2.re * self.p1.im;
        let a = (z.re * self.p2.im - self.p2.re * z.im) / det;
        let b = (self.p1.re * z.im - z.re * self.p1.im) / det;
        let (mut m, mut n) = (a.round() as i64, b.round() as i64);
        let mut w = z - self.p1 * m as f64 - self.p2 * n as f64;
        loop {
            let mut improved = false;
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)] {
                let cand = w - self.p1 * di as f64 - self.p2 * dj as f64;
                if cand.norm() < w.norm() * (1.0 - 1e-15) {
                    w = cand;
                    m += di;
                    n += dj;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        (w, m, n)
    }

    /// Series plus duplication at a normalized argument (unit shortest
    /// period); no lattice reduction.
    fn doubled(&self, w: C64) -> AllValues {
        let mut doublings = 0;
        let mut z = w;
        while z.norm() >= 0.5 {
            z *= 0.5;
            doublings += 1;
        }
        let z2 = z * z;
        let mut wp = z2.inv();
        let mut wpp = -2.0 * (z2 * z).inv();
        let mut zeta = z.inv();
        let mut log_sig = C64::new(0.0, 0.0);
        let mut pw = C64::new(1.0, 0.0);
        for k in 2..=LAURENT_TERMS {
            let ck = self.c[k];
            // pw = z^(2k-4) on entry
            let t = ck * pw;
            wp += t * z2;
            wpp += t * z * (2 * k - 2) as f64;
            zeta -= t * z2 * z / (2 * k - 1) as f64;
            log_sig -= t * z2 * z2 / ((2 * k - 1) * 2 * k) as f64;
            pw *= z2;
            if pw.norm() * ck.abs() < 1e-40 {
                break;
            }
        }
        let mut sigma = z * log_sig.exp();
        for _ in 0..doublings {
            let wpp2 = 6.0 * wp * wp - 0.5 * self.g2n;
            let m = wpp2 / wpp;
            let wp_new = 0.25 * m * m - 2.0 * wp;
            let wpp_new = m * (wp - wp_new) - wpp;
            zeta = 2.0 * zeta + 0.5 * m;
            let s2 = sigma * sigma;
            sigma = -wpp * s2 * s2;
            wp = wp_new;
            wpp = wpp_new;
        }
        AllValues { wp, wpp, zeta, sigma }
    }

    fn check_pole(&self, w: C64) -> Result<()> {
        let d = w.norm() / self.scale;
        if d < POLE_THRESHOLD {
            Err(Error::LatticePole { distance: d })
        } else {
            Ok(())
        }
    }

    /// `(wp(z), wp'(z))`.
    pub fn wp_pair(&self, z: C64) -> Result<(C64, C64)> {
        let (w, _, _) = self.reduce(z);
        self.check_pole(w)?;
        let v = self.doubled(w / self.scale);
        let s2 = self.scale * self.scale;
        Ok((v.wp / s2, v.wpp / (s2 * self.scale)))
    }

    pub fn wp(&self, z: C64) -> Result<C64> {
        Ok(self.wp_pair(z)?.0)
    }

    pub fn wp_prime(&self, z: C64) -> Result<C64> {
        Ok(self.wp_pair(z)?.1)
    }

    pub fn zeta(&self, z: C64) -> Result<C64> {
        let (w, m, n) = self.reduce(z);
        self.check_pole(w)?;
        let v = self.doubled(w / self.scale);
        Ok(v.zeta / self.scale + 2.0 * (self.eta.0 * m as f64 + self.eta.1 * n as f64))
    }

    pub fn sigma(&self, z: C64) -> C64 {
        let (w, m, n) = self.reduce(z);
        let v = self.doubled(w / self.scale);
        let lam = self.p1 * m as f64 + self.p2 * n as f64;
        let eta = self.eta.0 * m as f64 + self.eta.1 * n as f64;
        let sign = if (m + n + m * n).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        sign * (2.0 * eta * (w + 0.5 * lam)).exp() * v.sigma * self.scale
    }

    /// A point `c` with `wp(c) = p` and `wp'(c) = pp`, where `(p, pp)` lies on
    /// the curve `pp^2 = 4 p^3 - g2 p - g3`.
    pub fn invert(&self, p: C64, pp: C64) -> Result<C64> {
        let curve = 4.0 * p * p * p - self.g2 * p - self.g3;
        let mag = 1.0 + p.norm().powf(1.5) + self.g2.abs().sqrt() * p.norm().sqrt() + self.g3.abs().sqrt();
        if (pp * pp - curve).norm() > 1e-6 * mag * mag {
            return Err(Error::Domain(format!("point ({p}, {pp}) is not on the cubic")));
        }
        let accept = |c: C64| -> Option<C64> {
            let (w, wd) = self.wp_pair(c).ok()?;
            if (w - p).norm() > 1e-9 * (1.0 + p.norm()) {
                return None;
            }
            let tol = 1e-6 * mag;
            if (wd - pp).norm() <= tol {
                Some(c)
            } else if (wd + pp).norm() <= tol {
                Some(-c)
            } else {
                None
            }
        };
        let mut seeds = Vec::new();
        if p.norm() > 0.0 {
            seeds.push(p.sqrt().inv());
        }
        let ng = 8;
        for i in 0..ng {
            for j in 0..ng {
                let a = (i as f64 + 0.37) / ng as f64 - 0.5;
                let b = (j as f64 + 0.61) / ng as f64 - 0.5;
                seeds.push(self.p1 * a + self.p2 * b);
            }
        }
        for seed in seeds {
            if let Some(c) = self.newton_on_curve(seed, p, pp) {
                if let Some(c) = accept(c) {
                    return Ok(self.reduce(c).0);
                }
            }
        }
        Err(Error::Degenerate(format!("could not invert wp at ({p}, {pp})")))
    }

    fn newton_on_curve(&self, mut c: C64, p: C64, pp: C64) -> Option<C64> {
        for _ in 0..80 {
            let (w, wd) = self.wp_pair(c).ok()?;
            let wdd = 6.0 * w * w - 0.5 * self.g2;
            let s1 = (w - p) / wd;
            let s2 = (wd - pp) / wdd;
            let step = if s1.is_finite() && (s1.norm() <= s2.norm() || !s2.is_finite()) {
                s1
            } else {
                s2
            };
            if !step.is_finite() {
                return None;
            }
            c -= step;
            c = self.reduce(c).0;
            if step.norm() <= 1e-15 * self.scale {
                return Some(c);
            }
        }
        Some(c)
    }
}

fn polish_cubic_root(mut t: f64, g2: f64, g3: f64) -> f64 {
    for _ in 0..3 {
        let f = 4.0 * t * t * t - g2 * t - g3;
        let d = 12.0 * t * t - g2;
        if d == 0.0 {
            break;
        }
        let nt = t - f / d;
        if (4.0 * nt * nt * nt - g2 * nt - g3).abs() >= f.abs() {
            break;
        }
        t = nt;
    }
    t
}

/// Lagrange-Gauss reduction of a lattice basis.
fn gauss_reduce(mut a: C64, mut b: C64) -> (C64, C64) {
    if a.norm() > b.norm() {
        std::mem::swap(&mut a, &mut b);
    }
    for _ in 0..100 {
        let mu = ((b * a.conj()).re / a.norm_sqr()).round();
        b -= a * mu;
        if b.norm() >= a.norm() {
            break;
        }
        std::mem::swap(&mut a, &mut b);
    }
    // Orient so that Im(b / a) > 0.
    if (b / a).im < 0.0 {
        b = -b;
    }
    (a, b)
}

pub fn wp(z: C64, g2: f64, g3: f64) -> Result<C64> {
    Lattice::new(g2, g3)?.wp(z)
}

pub fn wp_prime(z: C64, g2: f64, g3: f64) -> Result<C64> {
    Lattice::new(g2, g3)?.wp_prime(z)
}

pub fn zeta_fn(z: C64, g2: f64, g3: f64) -> Result<C64> {
    Lattice::new(g2, g3)?.zeta(z)
}

pub fn sigma_fn(z: C64, g2: f64, g3: f64) -> Result<C64> {
    Ok(Lattice::new(g2, g3)?.sigma(z))
}

/// Residuals of the addition theorem and the identities that accompany it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdditionResiduals {
    /// `wp(u+v) + wp(u) + wp(v) - (1/4) ((wp'(u) - wp'(v)) / (wp(u) - wp(v)))^2`.
    pub addition: f64,
    /// `wp'(v) (wp'(u) - wp'(v)) / (wp(u) - wp(v)) - wp''(v)
    ///  + 2 (wp(u) - wp(v)) (wp(u+v) - wp(v))`.
    pub tangent: f64,
    /// `wp(u) - wp(v) + sigma(u-v) sigma(u+v) / (sigma(u)^2 sigma(v)^2)`.
    pub sigma: f64,
    /// `wp'(u) / (wp(u) - wp(v)) - zeta(u-v) - zeta(u+v) + 2 zeta(u)`.
    pub zeta: f64,
}

impl AdditionResiduals {
    pub fn max(&self) -> f64 {
        self.addition.max(self.tangent).max(self.sigma).max(self.zeta)
    }
}

/// Each residual is divided by the magnitude of the largest term in its
/// identity.
pub fn addition_check(u: C64, v: C64, g2: f64, g3: f64) -> Result<AdditionResiduals> {
    let lat = Lattice::new(g2, g3)?;
    addition_check_on(&lat, u, v)
}

pub fn addition_check_on(lat: &Lattice, u: C64, v: C64) -> Result<AdditionResiduals> {
    let (pu, dpu) = lat.wp_pair(u)?;
    let (pv, dpv) = lat.wp_pair(v)?;
    let diff = pu - pv;
    if diff.norm() <= 1e-10 * (1.0 + pu.norm().max(pv.norm())) {
        return Err(Error::Degenerate("wp(u) = wp(v): u is congruent to +-v".into()));
    }
    let (pw, _) = lat.wp_pair(u + v)?;
    let slope = (dpu - dpv) / diff;
    let rhs = 0.25 * slope * slope;
    let addition = (pw + pu + pv - rhs).norm() / pw.norm().max(pu.norm()).max(pv.norm()).max(rhs.norm());

    let ddpv = 6.0 * pv * pv - 0.5 * lat.g2;
    let lhs2 = dpv * slope;
    let rhs2 = ddpv - 2.0 * diff * (pw - pv);
    let tangent = (lhs2 - rhs2).norm() / lhs2.norm().max(ddpv.norm()).max((2.0 * diff * (pw - pv)).norm());

    let su = lat.sigma(u);
    let sv = lat.sigma(v);
    let sq = lat.sigma(u - v) * lat.sigma(u + v) / (su * su * sv * sv);
    let sigma = (diff + sq).norm() / diff.norm().max(sq.norm());

    let zl = dpu / diff;
    let zr = lat.zeta(u - v)? + lat.zeta(u + v)? - 2.0 * lat.zeta(u)?;
    let zeta = (zl - zr).norm() / zl.norm().max(zr.norm());

    Ok(AdditionResiduals {
        addition,
        tangent,
        sigma,
        zeta,
    })
}

/// Real solution `x(t)` of `(dx/dt)^2 = X(x)`.
#[derive(Clone, Debug)]
pub struct QuarticInversion {
    kind: InversionKind,
}

#[derive(Clone, Debug)]
enum InversionKind {
    Equilibrium(f64),
    Elliptic(Box<EllipticSolution>),
}

#[derive(Clone, Debug)]
struct EllipticSolution {
    lattice: Lattice,
    shift: f64,
    sqrt_a0: C64,
    c: C64,
    zeta_point: C64,
    wp_zeta: f64,
    wp_prime_zeta: f64,
    period: Option<f64>,
}

impl EllipticSolution {
    fn y_and_dy(&self, u: C64) -> Result<(C64, C64)> {
        let (p, dp) = self.lattice.wp_pair(u)?;
        let (pz, _) = self.lattice.wp_pair(u + self.zeta_point)?;
        let den = p - self.wp_zeta;
        let y = if den.norm() > 1e-3 * (1.0 + self.wp_zeta.abs()) {
            0.5 * (dp - self.wp_prime_zeta) / den
        } else {
            // Near u = zeta the quotient is 0/0; use the zeta-function form.
            self.lattice.zeta(u + self.zeta_point)?
                - self.lattice.zeta(u)?
                - self.lattice.zeta(self.zeta_point)?
        };
        Ok((y, p - pz))
    }
}

impl QuarticInversion {
    pub fn is_equilibrium(&self) -> bool {
        matches!(self.kind, InversionKind::Equilibrium(_))
    }

    /// `(x(t), dx/dt(t))`, failing if the closed form leaves the real axis.
    pub fn state_checked(&self, t: f64) -> Result<(f64, f64)> {
        match &self.kind {
            InversionKind::Equilibrium(x) => Ok((*x, 0.0)),
            InversionKind::Elliptic(s) => {
                let u = s.c + s.sqrt_a0 * t;
                let (y, dy) = s.y_and_dy(u)?;
                let x = y - s.shift;
                let xd = s.sqrt_a0 * dy;
                if x.im.abs() >= 1e-10 * (1.0 + x.re.abs()) {
                    return Err(Error::Domain(format!(
                        "closed form left the real axis at t = {t}: Im x = {:e}",
                        x.im
                    )));
                }
                Ok((x.re, xd.re))
            }
        }
    }

    pub fn state(&self, t: f64) -> (f64, f64) {
        self.state_checked(t).expect("elliptic closed form evaluation")
    }

    pub fn x(&self, t: f64) -> f64 {
        self.state(t).0
    }

    pub fn x_checked(&self, t: f64) -> Result<f64> {
        Ok(self.state_checked(t)?.0)
    }

    pub fn xdot(&self, t: f64) -> f64 {
        self.state(t).1
    }

    /// Time period of `x(t)` from the lattice; `None` for an equilibrium.
    pub fn period(&self) -> Option<f64> {
        match &self.kind {
            InversionKind::Equilibrium(_) => None,
            InversionKind::Elliptic(s) => s.period,
        }
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        match &self.kind {
            InversionKind::Equilibrium(_) => None,
            InversionKind::Elliptic(s) => Some(&s.lattice),
        }
    }
}

/// Builds the evaluator for `(dx/dt)^2 = X(x)` with `x(0) = x_start` and
/// `sign(dx/dt)(0) = branch`.
pub fn invert_quartic(q: &QuarticBinomial, x_start: f64, branch: f64) -> Result<QuarticInversion> {
    if q.a0 == 0.0 {
        return Err(Error::Domain("quartic leading coefficient vanishes".into()));
    }
    let scale = q.norm();
    let poly = q.to_poly();
    let xv = q.eval(x_start);
    let dxv = poly.derivative().eval(x_start);
    let tol = 1e-12 * scale * (1.0 + x_start.abs()).powi(4);
    if xv < -tol {
        return Err(Error::NoRealMotion(format!("X({x_start}) = {xv:e} < 0")));
    }
    if xv.abs() <= tol && dxv.abs() < 1e-8 * scale {
        return Ok(QuarticInversion {
            kind: InversionKind::Equilibrium(x_start),
        });
    }
    let wd = weierstrass_from_quartic(q);
    let lattice = Lattice::new(wd.g2, wd.g3)?;
    let sqrt_a0 = C64::new(q.a0, 0.0).sqrt();
    let shift = q.a1 / q.a0;
    let ys = C64::new(x_start + shift, 0.0);
    let d = C64::new(branch.signum() * xv.max(0.0).sqrt(), 0.0) / sqrt_a0;
    let p1 = 0.5 * (ys * ys - 3.0 * wd.wp_zeta + d);
    let p = wd.wp_zeta + p1;
    let pp = wd.wp_prime_zeta + 2.0 * ys * p1;
    let c = lattice.invert(p, pp)?;
    let zeta_point = lattice.invert(C64::new(wd.wp_zeta, 0.0), C64::new(wd.wp_prime_zeta, 0.0))?;
    let period = lattice.period_along(sqrt_a0).map(|w| w.norm() / sqrt_a0.norm());
    let sol = EllipticSolution {
        lattice,
        shift,
        sqrt_a0,
        c,
        zeta_point,
        wp_zeta: wd.wp_zeta,
        wp_prime_zeta: wd.wp_prime_zeta,
        period,
    };
    let inv = QuarticInversion {
        kind: InversionKind::Elliptic(Box::new(sol)),
    };
    let (x0, _) = inv.state_checked(0.0)?;
    if (x0 - x_start).abs() > 1e-7 * (1.0 + x_start.abs()) {
        return Err(Error::Degenerate(format!(
            "closed form starts at {x0}, expected {x_start}"
        )));
    }
    Ok(inv)
}

/// `2 * integral of dx / sqrt(X)` between adjacent simple roots `r1 < r2`,
/// with `x = r1 + (r2 - r1) sin^2(xi)` removing the endpoint singularities.
pub fn period_by_quadrature(q: &QuarticBinomial, r1: f64, r2: f64) -> f64 {
    let poly = q.to_poly();
    let fac = Poly::new(vec![r1 * r2, -(r1 + r2), 1.0]);
    let (rest, _) = poly.div_rem(&fac);
    let f = |xi: f64| {
        let s = xi.sin();
        let x = r1 + (r2 - r1) * s * s;
        2.0 / (-rest.eval(x)).sqrt()
    };
    let (v, _) = quad::integrate(f, 0.0, std::f64::consts::FRAC_PI_2, 0.0, 1e-14);
    2.0 * v
}
