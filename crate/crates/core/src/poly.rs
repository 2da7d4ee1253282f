//! Real polynomials in ascending coefficient order and Sturm-sequence root
//! isolation.

use std::ops::{Add, Mul, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    /// `c[i]` multiplies `x^i`.
    pub c: Vec<f64>,
}

impl Poly {
    pub fn new(c: Vec<f64>) -> Self {
        let mut p = Poly { c };
        p.trim(0.0);
        p
    }

    pub fn degree(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&a| a == 0.0)
    }

    /// Largest absolute coefficient.
    pub fn norm(&self) -> f64 {
        self.c.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn coeff(&self, i: usize) -> f64 {
        self.c.get(i).copied().unwrap_or(0.0)
    }

    /// Drops leading coefficients with magnitude `<= tol`.
    fn trim(&mut self, tol: f64) {
        while self.c.len() > 1 && self.c.last().map_or(false, |a| a.abs() <= tol) {
            self.c.pop();
        }
        if self.c.is_empty() {
            self.c.push(0.0);
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    pub fn derivative(&self) -> Poly {
        if self.c.len() <= 1 {
            return Poly::new(vec![0.0]);
        }
        Poly::new(
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &a)| a * i as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.c.iter().map(|a| a * s).collect())
    }

    /// Quotient and remainder of division by `d`.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let dd = d.degree();
        let lead = d.c[dd];
        assert!(lead != 0.0, "division by the zero polynomial");
        if self.degree() < dd {
            return (Poly::new(vec![0.0]), self.clone());
        }
        let mut r = self.c.clone();
        let mut q = vec![0.0; self.degree() - dd + 1];
        for i in (0..q.len()).rev() {
            let f = r[i + dd] / lead;
            q[i] = f;
            for j in 0..=dd {
                r[i + j] -= f * d.c[j];
            }
        }
        r.truncate(dd.max(1));
        (Poly::new(q), Poly::new(r))
    }

    /// Sturm sequence p, p', -rem(p, p'), ... with remainders below
    /// `rel_tol * norm` treated as zero.
    pub fn sturm_sequence(&self, rel_tol: f64) -> Vec<Poly> {
        let scale = self.norm();
        let mut seq = vec![self.clone(), self.derivative()];
        loop {
            let n = seq.len();
            if seq[n - 1].degree() == 0 {
                break;
            }
            let (_, mut r) = seq[n - 2].div_rem(&seq[n - 1]);
            let tol = rel_tol * scale.max(seq[n - 2].norm());
            r.trim(tol);
            if r.norm() <= tol {
                break;
            }
            seq.push(r.scale(-1.0));
        }
        seq
    }

    /// Real roots in `[lo, hi]`, ascending, each refined to about machine
    /// precision. Multiple roots are reported once.
    pub fn real_roots(&self, lo: f64, hi: f64) -> Vec<f64> {
        if self.degree() == 0 {
            return Vec::new();
        }
        let seq = self.sturm_sequence(1e-13);
        let changes = |x: f64| sign_changes(&seq, x);
        let mut out = Vec::new();
        let mut work = vec![(lo, hi, changes(lo), changes(hi), 0u32)];
        while let Some((a, b, va, vb, depth)) = work.pop() {
            let count = va.saturating_sub(vb);
            if count == 0 {
                continue;
            }
            if count == 1 || depth > 200 || b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
                if let Some(r) = self.refine(a, b) {
                    out.push(r);
                }
                continue;
            }
            let m = 0.5 * (a + b);
            let vm = changes(m);
            work.push((a, m, va, vm, depth + 1));
            work.push((m, b, vm, vb, depth + 1));
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + a.abs()));
        out
    }

    /// Refines the unique root in `(a, b]`: bisection on a sign change,
    /// otherwise a minimum of |p| (even multiplicity), then Newton polish.
    fn refine(&self, a: f64, b: f64) -> Option<f64> {
        let (mut lo, mut hi) = (a, b);
        let (flo, fhi) = (self.eval(lo), self.eval(hi));
        let mut x;
        if fhi == 0.0 {
            return Some(hi);
        }
        if flo.signum() != fhi.signum() {
            let slo = flo.signum();
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if m <= lo || m >= hi {
                    break;
                }
                let fm = self.eval(m);
                if fm == 0.0 {
                    return Some(m);
                }
                if fm.signum() == slo {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            x = 0.5 * (lo + hi);
        } else {
            // No sign change: the root has even multiplicity; locate the
            // extremum of p with a sign change of p'.
            let d = self.derivative();
            let (dlo, dhi) = (d.eval(lo), d.eval(hi));
            if dlo.signum() == dhi.signum() {
                return None;
            }
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if m <= lo || m >= hi {
                    break;
                }
                if d.eval(m).signum() == dlo.signum() {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            x = 0.5 * (lo + hi);
        }
        let d = self.derivative();
        for _ in 0..3 {
            let fx = self.eval(x);
            let dfx = d.eval(x);
            if dfx == 0.0 {
                break;
            }
            let nx = x - fx / dfx;
            if !(nx > a - (b - a) && nx < b + (b - a)) || self.eval(nx).abs() >= fx.abs() {
                break;
            }
            x = nx;
        }
        Some(x)
    }

    /// Cauchy bound: all roots satisfy |x| <= bound.
    pub fn root_bound(&self) -> f64 {
        let n = self.degree();
        let lead = self.c[n].abs();
        1.0 + self.c[..n].iter().fold(0.0f64, |m, a| m.max(a.abs() / lead))
    }
}

fn sign_changes(seq: &[Poly], x: f64) -> usize {
    let mut count = 0;
    let mut last = 0.0f64;
    for p in seq {
        let v = p.eval(x);
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        last = v;
    }
    count
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::new((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::new((0..n).map(|i| self.coeff(i) - o.coeff(i)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        let mut c = vec![0.0; self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_roots(roots: &[f64], lead: f64) -> Poly {
        roots
            .iter()
            .fold(Poly::new(vec![lead]), |acc, &r| &acc * &Poly::new(vec![-r, 1.0]))
    }

    #[test]
    fn four_simple_roots() {
        let p = from_roots(&[-0.9, -0.2, 0.3, 0.75], -3.0);
        let r = p.real_roots(-2.0, 2.0);
        assert_eq!(r.len(), 4);
        for (a, b) in r.iter().zip([-0.9, -0.2, 0.3, 0.75]) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn complex_pair_is_skipped() {
        // (x^2 + 1)(x - 0.5)(x + 0.25)
        let p = &Poly::new(vec![1.0, 0.0, 1.0]) * &from_roots(&[0.5, -0.25], 1.0);
        let r = p.real_roots(-p.root_bound(), p.root_bound());
        assert_eq!(r.len(), 2);
        assert!((r[0] + 0.25).abs() < 1e-14 && (r[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn double_root_found_once() {
        let p = from_roots(&[0.4, 0.4, -0.7, 0.9], 1.0);
        let r = p.real_roots(-2.0, 2.0);
        assert_eq!(r.len(), 3, "{r:?}");
        assert!((r[1] - 0.4).abs() < 1e-7);
    }

    #[test]
    fn division_round_trip() {
        let p = Poly::new(vec![1.0, -2.0, 0.5, 3.0, -1.0]);
        let d = Poly::new(vec![1.0, 0.0, -1.0]);
        let (q, r) = p.div_rem(&d);
        let back = &(&q * &d) + &r;
        for i in 0..5 {
            assert!((back.coeff(i) - p.coeff(i)).abs() < 1e-14);
        }
    }
}
