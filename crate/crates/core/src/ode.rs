//! Dormand-Prince 5(4) integrator with dense output and event location.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the step size; non-finite means unbounded (`null` in
    /// JSON).
    #[serde(with = "unbounded")]
    pub max_step: f64,
    /// Events are located to `event_tol * max(1, |t|)`.
    pub event_tol: f64,
    pub max_steps: usize,
}

mod unbounded {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-11,
            abs_tol: 1e-13,
            max_step: f64::INFINITY,
            event_tol: 1e-10,
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tol(rel_tol: f64) -> Self {
        IntegratorConfig {
            rel_tol,
            abs_tol: rel_tol * 1e-2,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1e-3) {
            return Err(Error::Config(format!(
                "rel_tol must lie in (0, 1e-3), got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_tol > 0.0) || !(self.event_tol > 0.0) || !(self.max_step > 0.0) {
            return Err(Error::Config("abs_tol, event_tol and max_step must be positive".into()));
        }
        Ok(())
    }
}

/// A scalar function whose sign changes are recorded.
pub struct Event<'a> {
    pub name: String,
    pub g: Box<dyn Fn(f64, &[f64]) -> f64 + 'a>,
    /// Stop the integration at the first occurrence.
    pub terminal: bool,
}

impl<'a> Event<'a> {
    pub fn new(name: impl Into<String>, g: impl Fn(f64, &[f64]) -> f64 + 'a) -> Self {
        Event {
            name: name.into(),
            g: Box::new(g),
            terminal: false,
        }
    }

    pub fn terminal(mut self) -> Self {
        self.terminal = true;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventRecord {
    /// Index into the event list passed to `integrate`.
    pub index: usize,
    pub t: f64,
    pub y: Vec<f64>,
    /// True when `g` goes from negative to positive.
    pub rising: bool,
}

#[derive(Clone, Debug)]
struct Segment {
    t0: f64,
    h: f64,
    /// Five interpolation coefficients per component.
    r: Vec<[f64; 5]>,
}

impl Segment {
    fn eval_into(&self, t: f64, out: &mut [f64]) {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        for (o, r) in out.iter_mut().zip(&self.r) {
            *o = r[0] + th * (r[1] + th1 * (r[2] + th * (r[3] + th1 * r[4])));
        }
    }
}

/// Dense solution produced by `integrate`.
#[derive(Clone, Debug)]
pub struct Solution {
    pub dim: usize,
    pub t0: f64,
    pub y0: Vec<f64>,
    pub t_final: f64,
    pub y_final: Vec<f64>,
    pub events: Vec<EventRecord>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evals: usize,
    segments: Vec<Segment>,
}

impl Solution {
    /// Interpolated state at `t`, clamped to the integrated range.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        if self.segments.is_empty() {
            out.copy_from_slice(&self.y0);
            return;
        }
        let forward = self.t_final >= self.t0;
        let key = |s: &Segment| if forward { s.t0 } else { -s.t0 };
        let tk = if forward { t } else { -t };
        let idx = self.segments.partition_point(|s| key(s) <= tk).saturating_sub(1);
        let seg = &self.segments[idx];
        let tc = if forward {
            t.clamp(self.t0, self.t_final)
        } else {
            t.clamp(self.t_final, self.t0)
        };
        seg.eval_into(tc, out);
    }

    /// Start times of the accepted steps, plus the final time.
    pub fn step_times(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.segments.iter().map(|s| s.t0).collect();
        v.push(self.t_final);
        v
    }

    /// Samples at `n + 1` uniformly spaced times from `t0` to `t_final`.
    pub fn sample(&self, n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
        let ts: Vec<f64> = (0..=n)
            .map(|i| self.t0 + (self.t_final - self.t0) * i as f64 / n as f64)
            .collect();
        let ys = ts.iter().map(|&t| self.eval(t)).collect();
        (ts, ys)
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
    events: &[Event<'_>],
) -> Result<Solution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    cfg.validate()?;
    let n = y0.len();
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    let mut sol = Solution {
        dim: n,
        t0,
        y0: y0.to_vec(),
        t_final: t0,
        y_final: y0.to_vec(),
        events: Vec::new(),
        accepted_steps: 0,
        rejected_steps: 0,
        rhs_evals: 0,
        segments: Vec::new(),
    };
    if span == 0.0 {
        return Ok(sol);
    }
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    f(t, &y, &mut k[0])?;
    sol.rhs_evals += 1;

    let max_step = cfg.max_step.min(span);
    let mut h = initial_step(&mut f, t, &y, &k[0], dir, max_step, cfg, &mut sol.rhs_evals)?;
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(t, &y)).collect();
    let mut err_prev: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        if sol.accepted_steps + sol.rejected_steps >= cfg.max_steps {
            return Err(Error::MaxSteps(cfg.max_steps));
        }
        let remaining = (t_end - t) * dir;
        let mut last = false;
        if h.abs() >= remaining {
            h = remaining * dir;
            last = true;
        }
        if h.abs() <= 10.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }

        // Stages
        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k[0][i];
        }
        f(t + C2 * h, &ytmp, &mut k[1])?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
        }
        f(t + C3 * h, &ytmp, &mut k[2])?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        f(t + C4 * h, &ytmp, &mut k[3])?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        f(t + C5 * h, &ytmp, &mut k[4])?;
        for i in 0..n {
            ytmp[i] = y[i]
                + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
        }
        f(t + h, &ytmp, &mut k[5])?;
        for i in 0..n {
            ynew[i] = y[i]
                + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
        }
        f(t + h, &ynew, &mut k[6])?;
        sol.rhs_evals += 6;

        let mut err = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(ynew[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            h *= 0.25;
            sol.rejected_steps += 1;
            last_rejected = true;
            continue;
        }

        if err <= 1.0 {
            // PI step-size control.
            let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            let mut fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            err_prev = err.max(1e-4);

            let mut r = Vec::with_capacity(n);
            for i in 0..n {
                let dy = ynew[i] - y[i];
                let bspl = h * k[0][i] - dy;
                r.push([
                    y[i],
                    dy,
                    bspl,
                    dy - h * k[6][i] - bspl,
                    h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i]
                        + D7 * k[6][i]),
                ]);
            }
            let seg = Segment { t0: t, h, r };
            let t_new = if last { t_end } else { t + h };

            let mut stop_at: Option<f64> = None;
            if !events.is_empty() {
                let g_new: Vec<f64> = events.iter().map(|e| (e.g)(t_new, &ynew)).collect();
                let mut found = locate_events(events, &seg, t, t_new, &g_prev, &g_new, cfg.event_tol);
                found.sort_by(|a, b| ((a.t - t) * dir).partial_cmp(&((b.t - t) * dir)).unwrap());
                for rec in found {
                    if stop_at.is_some() {
                        break;
                    }
                    if events[rec.index].terminal {
                        stop_at = Some(rec.t);
                    }
                    sol.events.push(rec);
                }
                g_prev = g_new;
            }

            sol.segments.push(seg);
            sol.accepted_steps += 1;
            if let Some(ts) = stop_at {
                let yv = sol.eval(ts);
                sol.t_final = ts;
                sol.y_final = yv;
                return Ok(sol);
            }
            t = t_new;
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6);
            if last {
                sol.t_final = t;
                sol.y_final = y.clone();
                return Ok(sol);
            }
            h = (h * fac).abs().min(max_step) * dir;
            last_rejected = false;
        } else {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
            sol.rejected_steps += 1;
            last_rejected = true;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn initial_step<F>(
    f: &mut F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    dir: f64,
    max_step: f64,
    cfg: &IntegratorConfig,
    evals: &mut usize,
) -> Result<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|v| cfg.abs_tol + cfg.rel_tol * v.abs()).collect();
    let norm = |v: &[f64]| -> f64 {
        (v.iter().zip(&sc).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / n as f64).sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(max_step);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + dir * h0 * b).collect();
    let mut f1 = vec![0.0; n];
    f(t + dir * h0, &y1, &mut f1)?;
    *evals += 1;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(max_step) * dir)
}

fn locate_events(
    events: &[Event<'_>],
    seg: &Segment,
    ta: f64,
    tb: f64,
    g_a: &[f64],
    g_b: &[f64],
    tol: f64,
) -> Vec<EventRecord> {
    const SUB: usize = 4;
    let n = seg.r.len();
    let mut buf = vec![0.0; n];
    let mut out = Vec::new();
    for (idx, ev) in events.iter().enumerate() {
        let mut t_lo = ta;
        let mut g_lo = g_a[idx];
        for j in 1..=SUB {
            let t_hi = if j == SUB { tb } else { ta + (tb - ta) * j as f64 / SUB as f64 };
            let g_hi = if j == SUB {
                g_b[idx]
            } else {
                seg.eval_into(t_hi, &mut buf);
                (ev.g)(t_hi, &buf)
            };
            let crosses = (g_lo < 0.0 && g_hi >= 0.0) || (g_lo > 0.0 && g_hi <= 0.0);
            if crosses && !(g_hi == 0.0 && j < SUB) {
                let rising = g_lo < 0.0;
                let (mut a, mut b) = (t_lo, t_hi);
                let ga = g_lo;
                let eps = tol * a.abs().max(b.abs()).max(1.0);
                while (b - a).abs() > eps {
                    let m = 0.5 * (a + b);
                    seg.eval_into(m, &mut buf);
                    let gm = (ev.g)(m, &buf);
                    if gm == 0.0 {
                        a = m;
                        b = m;
                        break;
                    }
                    if gm.signum() == ga.signum() {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                let te = 0.5 * (a + b);
                seg.eval_into(te, &mut buf);
                out.push(EventRecord {
                    index: idx,
                    t: te,
                    y: buf.clone(),
                    rising,
                });
            }
            t_lo = t_hi;
            g_lo = g_hi;
        }
    }
    out
}
