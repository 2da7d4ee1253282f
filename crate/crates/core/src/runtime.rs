//! Run configurations, sampled output and the invariant check suite shared
//! by the command-line tool and the tests.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::bodyframe::{self, BodyState, BodyVariant, InertiaData};
use crate::error::{Error, Result};
use crate::neumann::{self, NeumannState, NeumannSystem, Trajectory};
use crate::ode::IntegratorConfig;
use crate::params::SystemParams;
use crate::quadratures;
use crate::voronec;

pub const DEFAULT_SAMPLES: usize = 2048;

/// Column names of the Neumann trajectory table.
pub const NEUMANN_COLUMNS: [&str; 12] =
    ["t", "u", "v", "theta", "u1", "v1", "s", "tau", "n", "h", "Gamma2", "x0"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    NeumannDemchenko,
    ChaplyginPlain,
    Gyrostat,
    Rubber,
}

impl Variant {
    pub fn body_variant(self) -> Option<BodyVariant> {
        match self {
            Variant::NeumannDemchenko => None,
            Variant::ChaplyginPlain => Some(BodyVariant::Plain),
            Variant::Gyrostat => Some(BodyVariant::Gyrostat),
            Variant::Rubber => Some(BodyVariant::Rubber),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum InitialState {
    Neumann(NeumannState),
    Body(BodyState),
}

/// Overrides of the body-frame inertia derived from `params`
/// (`diag(A, A, C1)`, `D = M R2^2`, `kappa = k e_z`, configuration epsilon).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BodyInertia {
    pub central: Option<[f64; 3]>,
    #[serde(rename = "D")]
    pub d: Option<f64>,
    pub kappa: Option<[f64; 3]>,
    pub epsilon: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputControls {
    /// Output rows are taken at `horizon / samples` spacing.
    pub samples: usize,
}

impl Default for OutputControls {
    fn default() -> Self {
        OutputControls { samples: DEFAULT_SAMPLES }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: SystemParams,
    pub initial: InitialState,
    pub variant: Variant,
    pub horizon: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub body_inertia: Option<BodyInertia>,
    #[serde(default)]
    pub output: OutputControls,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.integrator.validate()?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.output.samples == 0 {
            return Err(Error::Config("output.samples must be positive".into()));
        }
        match (self.variant, &self.initial) {
            (Variant::NeumannDemchenko, InitialState::Neumann(_)) => {
                if self.body_inertia.is_some() {
                    return Err(Error::Config("body_inertia applies to body-frame variants only".into()));
                }
                NeumannSystem::new(self.params)?;
            }
            (Variant::NeumannDemchenko, InitialState::Body(_)) => {
                return Err(Error::Config("the NeumannDemchenko variant needs a Neumann initial state".into()));
            }
            _ => {
                self.inertia()?;
            }
        }
        Ok(())
    }

    /// Body-frame inertia for the configured variant.
    pub fn inertia(&self) -> Result<InertiaData> {
        let dc = self.params.derive_constants()?;
        let base = neumann::inertia_of(&self.params, &dc);
        let o = self.body_inertia.unwrap_or_default();
        let central = o.central.map(Vector3::from).unwrap_or(base.central);
        let d = o.d.unwrap_or(base.d);
        if central.iter().any(|&c| !(c > 0.0)) || !(d >= 0.0) {
            return Err(Error::Config("body inertia must be positive and D non-negative".into()));
        }
        let kappa = match self.variant {
            Variant::Gyrostat => o.kappa.map(Vector3::from).unwrap_or(base.kappa),
            _ => Vector3::zeros(),
        };
        Ok(InertiaData::new(central, d, kappa, o.epsilon.unwrap_or(base.epsilon)))
    }

    /// Initial body-frame state; Neumann states are mapped.
    pub fn body_initial(&self) -> Result<BodyState> {
        match self.initial {
            InitialState::Body(b) => Ok(b),
            InitialState::Neumann(st) => {
                let dc = self.params.derive_constants()?;
                neumann::to_bodyframe(&st, &self.params, &dc)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum Simulation {
    Neumann { sys: NeumannSystem, traj: Trajectory },
    Body { inertia: InertiaData, variant: BodyVariant, traj: bodyframe::BodyTrajectory },
}

/// Maximum deviation of one first integral from its initial value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub name: String,
    pub initial: f64,
    pub max_abs: f64,
    /// `max_abs / max(|initial|, 1e-300)`.
    pub max_rel: f64,
}

#[derive(Clone, Debug)]
pub struct SampledRun {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub drift: Vec<Drift>,
}

pub fn simulate(cfg: &RunConfig) -> Result<Simulation> {
    cfg.validate()?;
    match cfg.variant.body_variant() {
        None => {
            let InitialState::Neumann(st) = cfg.initial else { unreachable!() };
            let sys = NeumannSystem::new(cfg.params)?;
            let traj = sys.simulate(&st, cfg.horizon, &cfg.integrator)?;
            Ok(Simulation::Neumann { sys, traj })
        }
        Some(variant) => {
            let inertia = cfg.inertia()?;
            let st = cfg.body_initial()?;
            let traj = bodyframe::simulate(&st, &inertia, variant, cfg.horizon, &cfg.integrator)?;
            Ok(Simulation::Body { inertia, variant, traj })
        }
    }
}

fn drifts(names: &[String], rows: &[Vec<f64>], first_col: usize) -> Vec<Drift> {
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let c = first_col + j;
            let initial = rows[0][c];
            let max_abs = rows.iter().map(|r| (r[c] - initial).abs()).fold(0.0, f64::max);
            Drift {
                name: name.clone(),
                initial,
                max_abs,
                max_rel: max_abs / initial.abs().max(1e-300),
            }
        })
        .collect()
}

impl Simulation {
    pub fn horizon(&self) -> f64 {
        match self {
            Simulation::Neumann { traj, .. } => traj.horizon(),
            Simulation::Body { traj, .. } => traj.sol.t_final,
        }
    }

    /// Table at `samples + 1` uniform times from the dense output, with the
    /// first integrals appended to each row.
    pub fn sample(&self, samples: usize) -> SampledRun {
        let t_end = self.horizon();
        let times: Vec<f64> = (0..=samples).map(|i| t_end * i as f64 / samples as f64).collect();
        match self {
            Simulation::Neumann { sys, traj } => {
                let rows: Vec<Vec<f64>> = times
                    .iter()
                    .map(|&t| {
                        let st = traj.state(t);
                        let iv = sys.integrals(&st);
                        let mut r = vec![t];
                        r.extend(st.to_array());
                        r.extend([iv.h, iv.gamma2, iv.x0.unwrap_or(f64::NAN)]);
                        r
                    })
                    .collect();
                let mut names = vec!["h".to_string(), "Gamma2".to_string()];
                if sys.k() != 0.0 {
                    names.push("x0".to_string());
                }
                let drift = drifts(&names, &rows, 9);
                SampledRun {
                    columns: NEUMANN_COLUMNS.iter().map(|s| s.to_string()).collect(),
                    rows,
                    drift,
                }
            }
            Simulation::Body { inertia, variant, traj } => {
                let names: Vec<String> = bodyframe::integral_suite(&traj.state(0.0), inertia, *variant)
                    .into_iter()
                    .map(|(n, _)| n)
                    .collect();
                let rows: Vec<Vec<f64>> = times
                    .iter()
                    .map(|&t| {
                        let st = traj.state(t);
                        let mut r = vec![t];
                        r.extend(st.to_array());
                        r.extend(bodyframe::integral_suite(&st, inertia, *variant).into_iter().map(|(_, v)| v));
                        r
                    })
                    .collect();
                let mut columns: Vec<String> =
                    ["t", "G1", "G2", "G3", "gamma1", "gamma2", "gamma3"].iter().map(|s| s.to_string()).collect();
                columns.extend(names.iter().cloned());
                let drift = drifts(&names, &rows, 7);
                SampledRun { columns, rows, drift }
            }
        }
    }

    /// `(colatitude, longitude)` traces of the contact point on the ball and,
    /// for Neumann runs, on the fixed sphere.
    pub fn traces(&self, samples: usize) -> (Vec<(f64, f64)>, Option<Vec<(f64, f64)>>) {
        let t_end = self.horizon();
        let ts = (0..=samples).map(|i| t_end * i as f64 / samples as f64);
        match self {
            Simulation::Neumann { traj, .. } => {
                let (ball, sphere) = ts
                    .map(|t| {
                        let st = traj.state(t);
                        ((st.u, st.v), (st.u1, st.v1))
                    })
                    .unzip();
                (ball, Some(sphere))
            }
            Simulation::Body { traj, .. } => {
                let ball = ts
                    .map(|t| {
                        let g = traj.state(t).gamma;
                        let n = g.norm();
                        ((g.z / n).clamp(-1.0, 1.0).acos(), g.y.atan2(g.x))
                    })
                    .collect();
                (ball, None)
            }
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<SampledRun> {
    Ok(simulate(cfg)?.sample(cfg.output.samples))
}

/// Closed-form `x(t)` against `cos u(t)` from the ODE.
#[derive(Clone, Debug, Serialize)]
pub struct QuadratureComparison {
    pub roots: Vec<f64>,
    pub interval: (f64, f64),
    pub period: Option<f64>,
    pub period_quadrature: Option<f64>,
    pub max_deviation: f64,
    /// Rows `(t, x_closed_form, x_ode, difference)`.
    #[serde(skip)]
    pub rows: Vec<[f64; 4]>,
}

/// Compares over one period when the motion is periodic in x, otherwise
/// over the configured horizon.
pub fn quadrature_comparison(cfg: &RunConfig) -> Result<QuadratureComparison> {
    cfg.validate()?;
    let InitialState::Neumann(st0) = cfg.initial else {
        return Err(Error::Config("the quadrature pathway needs a Neumann initial state".into()));
    };
    if cfg.variant != Variant::NeumannDemchenko {
        return Err(Error::Config("the quadrature pathway needs the NeumannDemchenko variant".into()));
    }
    let sys = NeumannSystem::new(cfg.params)?;
    let st = sys.align_axis(&st0);
    let (_, qd) = quadratures::reduce_state(&sys, &st)?;
    let branch = if st.tau == 0.0 { 1.0 } else { st.tau.signum() };
    let xt = quadratures::solve_xt(&qd, st.u.cos(), branch)?;
    let period = xt.period();
    let span = period.unwrap_or(cfg.horizon);
    let traj = sys.simulate(&st, span, &cfg.integrator)?;
    let n = cfg.output.samples;
    let mut rows = Vec::with_capacity(n + 1);
    let mut max_deviation: f64 = 0.0;
    for i in 0..=n {
        let t = span * i as f64 / n as f64;
        let xe = xt.x_checked(t)?;
        let xo = traj.state(t).u.cos();
        max_deviation = max_deviation.max((xe - xo).abs());
        rows.push([t, xe, xo, xe - xo]);
    }
    Ok(QuadratureComparison {
        roots: qd.roots.clone(),
        interval: qd.interval,
        period,
        period_quadrature: quadratures::period_by_quadrature(&qd),
        max_deviation,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    fn push(&mut self, name: impl Into<String>, value: f64, tolerance: f64) {
        self.entries.push(CheckEntry {
            name: name.into(),
            value,
            tolerance,
            pass: value.is_finite() && value < tolerance,
        });
    }
}

/// Tolerances of the check suite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckTolerances {
    pub drift: f64,
    pub measure: f64,
    pub voronec: f64,
}

impl Default for CheckTolerances {
    fn default() -> Self {
        CheckTolerances { drift: 1e-8, measure: 1e-5, voronec: 1e-5 }
    }
}

/// Conservation, invariant-measure and (for Neumann runs) multiplier-free
/// residual checks on one configuration.
pub fn check(cfg: &RunConfig, tol: &CheckTolerances) -> Result<CheckReport> {
    let sim = simulate(cfg)?;
    let sampled = sim.sample(cfg.output.samples);
    let mut report = CheckReport { entries: Vec::new() };
    for d in &sampled.drift {
        report.push(format!("drift {}", d.name), d.max_rel, tol.drift);
    }
    let points = 64;
    let t_end = sim.horizon();
    match &sim {
        Simulation::Neumann { sys, traj } => {
            let inertia = sys.inertia();
            let mut worst: f64 = 0.0;
            for i in 0..=points {
                let st = traj.state(t_end * i as f64 / points as f64);
                let b = neumann::body_state_unchecked(&st, &sys.params, &sys.dc);
                worst = worst.max(bodyframe::measure_residual(&b, &inertia, BodyVariant::Gyrostat)?);
            }
            report.push("measure residual", worst, tol.measure);
            let span = t_end.min(2.0);
            let f = |t: f64| traj.state(t);
            let v = voronec::voronec_residual(&f, 0.0, span, 1e-3, &sys.params, &sys.dc)?;
            report.push("voronec residual", v.residual, tol.voronec);
        }
        Simulation::Body { inertia, variant, traj } => {
            let mut worst: f64 = 0.0;
            for i in 0..=points {
                let st = traj.state(t_end * i as f64 / points as f64);
                worst = worst.max(bodyframe::measure_residual(&st, inertia, *variant)?);
            }
            report.push("measure residual", worst, tol.measure);
            if *variant == BodyVariant::Rubber {
                let w = (0..=points)
                    .map(|i| bodyframe::rubber_violation(&traj.state(t_end * i as f64 / points as f64), inertia))
                    .fold(0.0, f64::max);
                report.push("no-twist violation", w, 1e-8);
            }
        }
    }
    Ok(report)
}
