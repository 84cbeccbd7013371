use rand::RngCore;

use super::{QueryLedger, Support};
use crate::error::{Error, Result};

/// An inverse-transform sampler: a proposal uniform mapped to an integer, then
/// optionally accepted or rejected.
pub trait InverseTransform {
    /// Range of the proposal uniform.
    fn proposal_range(&self) -> (f64, f64);
    /// The hat inverse: proposal uniform to integer.
    fn transform(&self, u: f64) -> i64;
    /// Proposal values mapped into `[a, b]`, as disjoint sorted intervals.
    fn hat_preimage(&self, a: i64, b: i64) -> Vec<(f64, f64)>;
    /// The acceptance step for proposal `u` that mapped to `k`.
    fn accept(&self, k: i64, u: f64, rng: &mut dyn RngCore, ledger: &mut QueryLedger) -> bool;
    fn output_support(&self) -> Support;

    /// CDF of the hat (proposal) law at `k`.
    fn hat_cdf(&self, k: i64) -> f64 {
        let (lo, hi) = self.proposal_range();
        let measure: f64 = self.hat_preimage(i64::MIN / 4, k).iter().map(|(l, h)| h - l).sum();
        measure / (hi - lo)
    }
}

/// Conditioned draw: proposals restricted to the preimage of `[a, b]`, then the
/// sampler's own acceptance step, repeated until acceptance or `cap` proposals.
pub fn icond_inverse_transform<S: InverseTransform + ?Sized>(
    sampler: &S,
    a: i64,
    b: i64,
    rng: &mut dyn RngCore,
    ledger: &mut QueryLedger,
    cap: u64,
) -> Result<i64> {
    if a > b {
        return Err(Error::Domain(format!("icond on [{a}, {b}] with a > b")));
    }
    let pieces = sampler.hat_preimage(a, b);
    let total: f64 = pieces.iter().map(|(l, h)| h - l).sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateInterval { lo: a, hi: b });
    }
    for _ in 0..cap {
        let u = uniform_on(&pieces, total, ledger.uniform(rng));
        let k = sampler.transform(u);
        if k < a || k > b {
            // floating-point edge of the preimage
            continue;
        }
        if sampler.accept(k, u, rng, ledger) {
            return Ok(k);
        }
    }
    Err(Error::Runaway { cap })
}

fn uniform_on(pieces: &[(f64, f64)], total: f64, w: f64) -> f64 {
    let mut rest = w * total;
    for &(l, h) in pieces {
        let len = h - l;
        if rest < len {
            return l + rest;
        }
        rest -= len;
    }
    let (l, h) = pieces[pieces.len() - 1];
    l + (h - l) * 0.5
}

/// The transformed-rejection proposal map `u -> (2a/us + b) u + c`, `us = 1/2 - |u|`,
/// on `u` in (-1/2, 1/2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HatMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HatMap {
    pub fn eval(&self, u: f64) -> f64 {
        let us = 0.5 - u.abs();
        (2.0 * self.a / us + self.b) * u + self.c
    }

    /// Points splitting (-1/2, 1/2) into pieces on which the map is monotone.
    fn monotone_breaks(&self) -> Vec<f64> {
        let mut breaks = vec![-0.5, 0.0, 0.5];
        // slope a/us^2 + b vanishes at us = sqrt(-a/b)
        if self.b > 0.0 && self.a < 0.0 {
            let us = (-self.a / self.b).sqrt();
            if us < 0.5 {
                breaks.push(-(0.5 - us));
                breaks.push(0.5 - us);
            }
        }
        breaks
    }

    /// Solutions of `eval(u) = y` on both sign branches.
    fn level_roots(&self, y: f64, out: &mut Vec<f64>) {
        if !y.is_finite() {
            return;
        }
        let d = y - self.c;
        let (a, b) = (self.a, self.b);
        // u >= 0: -b u^2 + (2a + b/2 + d) u - d/2 = 0
        for r in quadratic_roots(-b, 2.0 * a + 0.5 * b + d, -0.5 * d) {
            if (0.0..0.5).contains(&r) {
                out.push(r);
            }
        }
        // u < 0: b u^2 + (2a + b/2 - d) u - d/2 = 0
        for r in quadratic_roots(b, 2.0 * a + 0.5 * b - d, -0.5 * d) {
            if r > -0.5 && r < 0.0 {
                out.push(r);
            }
        }
    }

    /// The set `{u : lo <= eval(u) < hi}` as disjoint sorted intervals.
    pub fn preimage(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let mut pts = self.monotone_breaks();
        self.level_roots(lo, &mut pts);
        self.level_roots(hi, &mut pts);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let mut out: Vec<(f64, f64)> = Vec::new();
        for w in pts.windows(2) {
            let (l, r) = (w[0], w[1]);
            if r <= l {
                continue;
            }
            let y = self.eval(0.5 * (l + r));
            if y >= lo && y < hi {
                match out.last_mut() {
                    Some(last) if last.1 == l => last.1 = r,
                    _ => out.push((l, r)),
                }
            }
        }
        out
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b != 0.0 { vec![-c / b] } else { vec![] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = vec![q / a];
    if q != 0.0 {
        roots.push(c / q);
    }
    roots
}

/// Preimage of `[lo, hi)` under `f` on `(-1/2, 1/2)` found by a grid scan plus bisection.
///
/// Slow; kept as an independent check of the closed-form preimage.
pub fn preimage_bisection(f: impl Fn(f64) -> f64, lo: f64, hi: f64, grid: usize, tol: f64) -> Vec<(f64, f64)> {
    let inside = |u: f64| {
        let y = f(u);
        y >= lo && y < hi
    };
    let edge = 1e-15;
    let pts: Vec<f64> = (0..=grid).map(|i| -0.5 + edge + (1.0 - 2.0 * edge) * i as f64 / grid as f64).collect();
    let refine = |mut l: f64, mut r: f64| {
        // invariant: inside(l) != inside(r)
        let left_in = inside(l);
        while r - l > tol {
            let m = 0.5 * (l + r);
            if inside(m) == left_in {
                l = m;
            } else {
                r = m;
            }
        }
        0.5 * (l + r)
    };
    let mut out = Vec::new();
    let mut start = if inside(pts[0]) { Some(-0.5) } else { None };
    for w in pts.windows(2) {
        let (a, b) = (inside(w[0]), inside(w[1]));
        if a != b {
            let x = refine(w[0], w[1]);
            if b {
                start = Some(x);
            } else if let Some(s) = start.take() {
                out.push((s, x));
            }
        }
    }
    if let Some(s) = start {
        out.push((s, 0.5));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[(f64, f64)], b: &[(f64, f64)], tol: f64) -> bool {
        let a: Vec<_> = a.iter().filter(|(l, h)| h - l > tol).collect();
        let b: Vec<_> = b.iter().filter(|(l, h)| h - l > tol).collect();
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| (x.0 - y.0).abs() < tol && (x.1 - y.1).abs() < tol)
    }

    #[test]
    fn quadratic_solver() {
        let mut r = quadratic_roots(1.0, -3.0, 2.0);
        r.sort_by(f64::total_cmp);
        assert_eq!(r, vec![1.0, 2.0]);
        assert!(quadratic_roots(1.0, 0.0, 1.0).is_empty());
    }

    #[test]
    fn closed_form_matches_bisection_on_monotone_map() {
        let h = HatMap { a: 1.2, b: 30.0, c: 100.5 };
        for (lo, hi) in [(90.0, 95.0), (100.0, 101.0), (120.0, 200.0), (0.0, 100.0), (300.0, 1e9)] {
            let fast = h.preimage(lo, hi);
            let slow = preimage_bisection(|u| h.eval(u), lo, hi, 4096, 1e-13);
            assert!(close(&fast, &slow, 1e-10), "[{lo},{hi}): {fast:?} vs {slow:?}");
        }
    }

    #[test]
    fn closed_form_matches_bisection_with_turning_points() {
        // a < 0: the map turns back near both ends
        let h = HatMap { a: -0.155, b: 16.26, c: 10.445 };
        for (lo, hi) in [(5.0, 6.0), (-3.0, 0.0), (10.0, 11.0), (14.0, 15.0), (-1e9, 1e9)] {
            let fast = h.preimage(lo, hi);
            let slow = preimage_bisection(|u| h.eval(u), lo, hi, 1 << 16, 1e-13);
            assert!(close(&fast, &slow, 1e-9), "[{lo},{hi}): {fast:?} vs {slow:?}");
        }
    }

    proptest! {
        #[test]
        fn preimage_round_trip(a in 0.05f64..5.0, b in 5.0f64..200.0, c in 0.0f64..1000.0,
                               lo in -50.0f64..50.0, w in 1.0f64..30.0, t in 0.0f64..1.0) {
            let h = HatMap { a, b, c };
            let lo = (c + lo).floor();
            let hi = lo + w.floor();
            let pieces = h.preimage(lo, hi);
            let total: f64 = pieces.iter().map(|(l, r)| r - l).sum();
            if total > 1e-12 {
                let u = uniform_on(&pieces, total, t);
                let y = h.eval(u);
                prop_assert!(y >= lo - 1e-7 && y < hi + 1e-7, "u={u} y={y} [{lo},{hi})");
            }
        }
    }
}
