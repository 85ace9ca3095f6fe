//! Inversion of monotone maps of a positive rate.
//!
//! The search runs in `u = ln x`, so a bracket spanning many decades costs a few dozen
//! evaluations. The bracket is widened geometrically until the residual changes sign,
//! then Brent's method (bisection safeguarding inverse quadratic/secant steps) closes it.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Growth of the bracket per widening step.
const EXPAND_FACTOR: f64 = 10.0;
const MAX_EXPANSIONS: usize = 24;
const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root<T> {
    pub x: T,
    /// Residual `f(x) - target` at the returned point.
    pub residual: T,
    pub iterations: usize,
    /// Sign-changing bracket the refinement started from.
    pub bracket: (T, T),
}

/// Solves `f(x) = target` for `x > 0`, with `f` continuous and monotone.
///
/// Stops once `|f(x) - target| ≤ f_tol` or the bracket has shrunk to rounding level.
/// When no sign change appears within the widening budget the error reports the
/// values of `f` at the widest bracket tried.
pub fn solve_monotone<T, F>(
    mut f: F,
    target: T,
    initial: (T, T),
    f_tol: T,
) -> Result<Root<T>>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    let (mut lo, mut hi) = initial;
    assert!(lo > T::zero() && hi > lo, "bracket must be positive and ordered");
    let mut r_lo = f(lo)? - target;
    let mut r_hi = f(hi)? - target;
    let widen = T::lit(EXPAND_FACTOR);
    let out_of_range = |r_lo: T, r_hi: T| {
        let (a, b) = (r_lo + target, r_hi + target);
        let as_f64 = |v: T| v.to_f64().unwrap_or(f64::NAN);
        Error::OutOfRange {
            target: as_f64(target),
            low: as_f64(a.min(b)),
            high: as_f64(a.max(b)),
        }
    };
    let mut expansions = 0;
    while r_lo.signum() == r_hi.signum() && r_lo != T::zero() && r_hi != T::zero() {
        if expansions == MAX_EXPANSIONS || !r_lo.is_finite() || !r_hi.is_finite() {
            return Err(out_of_range(r_lo, r_hi));
        }
        expansions += 1;
        // for a monotone map the root lies beyond the end with the smaller residual
        if r_lo.abs() < r_hi.abs() {
            let next = lo / widen;
            let r = f(next)? - target;
            if r.is_nan() {
                return Err(out_of_range(r_lo, r_hi));
            }
            lo = next;
            r_lo = r;
        } else {
            let next = hi * widen;
            let r = f(next)? - target;
            if r.is_nan() {
                return Err(out_of_range(r_lo, r_hi));
            }
            hi = next;
            r_hi = r;
        }
    }
    let bracket = (lo, hi);
    if r_lo == T::zero() {
        return Ok(Root { x: lo, residual: r_lo, iterations: 0, bracket });
    }
    if r_hi == T::zero() {
        return Ok(Root { x: hi, residual: r_hi, iterations: 0, bracket });
    }

    let mut g = |u: T| -> Result<T> { Ok(f(u.exp())? - target) };
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let (mut fa, mut fb) = (r_lo, r_hi);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    for iteration in 1..=MAX_ITERATIONS {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = two * T::epsilon() * b.abs() + T::min_positive_value();
        let m = half * (c - b);
        if fb.abs() <= f_tol || m.abs() <= tol {
            return Ok(Root {
                x: b.exp(),
                residual: fb,
                iterations: iteration,
                bracket,
            });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = T::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            if two * p < (T::lit(3.0) * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol { b + d } else { b + tol * m.signum() };
        fb = g(b)?;
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
    })
}
