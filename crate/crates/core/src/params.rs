//! Physical parameters of the ball, gyroscope and fixed sphere, and the
//! constants derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for parameter checks.
pub const DEFAULT_TOL: f64 = 1e-12;

/// How the ball touches the fixed sphere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Configuration {
    /// Ball rolls on the outside of the fixed sphere.
    Outer,
    /// Ball rolls on the inside of a larger fixed sphere.
    Inner,
    /// Ball encloses the (smaller) fixed sphere.
    Enveloping,
}

/// Physical constants of the system. JSON keys match the field names
/// (`R1`, `R2`, `M`, `A1`, `C1`, `A2`, `C2`, `k`, `config`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Radius of the fixed sphere.
    #[serde(rename = "R1")]
    pub r1: f64,
    /// Radius of the rolling ball.
    #[serde(rename = "R2")]
    pub r2: f64,
    /// Total mass of ball and gyroscope.
    #[serde(rename = "M")]
    pub m: f64,
    /// Equatorial moment of the ball.
    #[serde(rename = "A1")]
    pub a1: f64,
    /// Axial moment of the ball.
    #[serde(rename = "C1")]
    pub c1: f64,
    /// Equatorial moment of the gyroscope.
    #[serde(rename = "A2")]
    pub a2: f64,
    /// Axial moment of the gyroscope.
    #[serde(rename = "C2")]
    pub c2: f64,
    /// Constant axial angular momentum of the gyroscope.
    pub k: f64,
    pub config: Configuration,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedConstants {
    /// R2 / R1.
    pub mu_prime: f64,
    /// 1 + R2 / R1.
    pub mu: f64,
    /// M R2^2.
    pub i: f64,
    /// A1 + A2.
    pub a: f64,
    /// C1.
    pub c: f64,
    /// I + A.
    pub p: f64,
    /// R1 / (R1 + R2) for outer rolling, R1 / (R1 - R2) otherwise.
    pub epsilon: f64,
    /// M R2^2, the name used by the body-frame formulation.
    pub d: f64,
}

/// Constants of the reduction to a single quadrature in x = cos u.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedConstants {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub gamma_bar: f64,
    pub h_prime: f64,
    /// Energy level h (with 2h = P(s^2 + tau^2) + A n^2).
    pub h: f64,
    /// Magnitude of the conserved total angular momentum.
    pub gamma: f64,
    /// Constant of the normal-spin integral A n = -k mu (x - x0).
    pub x0: f64,
    pub k: f64,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("R1", self.r1),
            ("R2", self.r2),
            ("M", self.m),
            ("A1", self.a1),
            ("C1", self.c1),
            ("A2", self.a2),
            ("C2", self.c2),
        ];
        for (name, value) in named {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and positive, got {value}"
                )));
            }
        }
        if !self.k.is_finite() {
            return Err(Error::InvalidParams(format!("k must be finite, got {}", self.k)));
        }
        match self.config {
            Configuration::Inner if self.r1 <= self.r2 => Err(Error::ConfigMismatch(format!(
                "Inner rolling needs R1 > R2 (R1 = {}, R2 = {})",
                self.r1, self.r2
            ))),
            Configuration::Enveloping if self.r1 >= self.r2 => Err(Error::ConfigMismatch(
                format!(
                    "Enveloping rolling needs R1 < R2 (R1 = {}, R2 = {})",
                    self.r1, self.r2
                ),
            )),
            _ => Ok(()),
        }
    }

    /// True iff |C1 - (A1 + A2)| <= tol * max(C1, A1 + A2).
    pub fn check_zhukovsky(&self, tol: f64) -> bool {
        let sum = self.a1 + self.a2;
        (self.c1 - sum).abs() <= tol * self.c1.max(sum)
    }

    pub fn require_zhukovsky(&self) -> Result<()> {
        if self.check_zhukovsky(DEFAULT_TOL) {
            Ok(())
        } else {
            Err(Error::ZhukovskyViolated {
                c1: self.c1,
                sum: self.a1 + self.a2,
            })
        }
    }

    pub fn derive_constants(&self) -> Result<DerivedConstants> {
        self.validate()?;
        let mu_prime = self.r2 / self.r1;
        let i = self.m * self.r2 * self.r2;
        let a = self.a1 + self.a2;
        let epsilon = match self.config {
            Configuration::Outer => self.r1 / (self.r1 + self.r2),
            Configuration::Inner | Configuration::Enveloping => self.r1 / (self.r1 - self.r2),
        };
        Ok(DerivedConstants {
            mu_prime,
            mu: 1.0 + mu_prime,
            i,
            a,
            c: self.c1,
            p: i + a,
            epsilon,
            d: i,
        })
    }

    /// Constants b0, b1, b2, Gamma_bar, h' for the energy level `h`, momentum
    /// magnitude `gamma` and normal-spin constant `x0`.
    pub fn reduced_constants(&self, h: f64, gamma: f64, x0: f64) -> Result<ReducedConstants> {
        let dc = self.derive_constants()?;
        reduced_constants(&dc, self.k, h, gamma, x0)
    }
}

pub fn reduced_constants(
    dc: &DerivedConstants,
    k: f64,
    h: f64,
    gamma: f64,
    x0: f64,
) -> Result<ReducedConstants> {
    if k == 0.0 {
        return Err(Error::ZeroGyroMomentum);
    }
    if h < 0.0 || !h.is_finite() {
        return Err(Error::Domain(format!("energy must be non-negative, got {h}")));
    }
    let DerivedConstants { mu, i, a, p, .. } = *dc;
    let b0 = i * mu + 2.0 * a;
    let b1 = i * mu + a;
    let b2 = 2.0 * p * a;
    assert!(b0 > b1 && b1 > p, "b0 > b1 > P must hold for positive inertias");
    let c5 = k * mu * x0;
    let gamma_bar = (i * c5 * c5 + a * (gamma * gamma - k * k) - 2.0 * h * p * a) / (mu * k * k);
    let h_prime = (2.0 * h * a).sqrt() / (mu * k);
    Ok(ReducedConstants {
        b0,
        b1,
        b2,
        gamma_bar,
        h_prime,
        h,
        gamma,
        x0,
        k,
    })
}
