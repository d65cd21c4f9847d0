//! Bracketed scalar root finding.

use super::NumericsError;
use crate::Scalar;

pub const DEFAULT_MAX_ITERATIONS: usize = 200;

/// A root together with the final bracket that contains it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketedRoot<T> {
    pub lo: T,
    pub hi: T,
    pub root: T,
    pub residual: T,
    pub iterations: usize,
}

/// Finds a zero of `f` on `[lo, hi]` to `|f(root)| <= tol`.
///
/// Secant steps are taken while they stay inside the bracket and keep
/// shrinking it; otherwise the step falls back to bisection.
pub fn solve_scalar<T, F>(f: F, lo: T, hi: T, tol: T) -> Result<BracketedRoot<T>, NumericsError>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    solve_scalar_with_limit(f, lo, hi, tol, DEFAULT_MAX_ITERATIONS)
}

pub fn solve_scalar_with_limit<T, F>(
    mut f: F,
    lo: T,
    hi: T,
    tol: T,
    max_iterations: usize,
) -> Result<BracketedRoot<T>, NumericsError>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    if !fa.is_finite() {
        return Err(NumericsError::NonFinite { at: a.as_f64() });
    }
    let mut fb = f(b);
    if !fb.is_finite() {
        return Err(NumericsError::NonFinite { at: b.as_f64() });
    }
    let done =
        |root: T, residual: T, a: T, b: T, iterations| BracketedRoot { lo: a, hi: b, root, residual, iterations };
    if fa.abs() <= tol {
        return Ok(done(a, fa, a, a, 0));
    }
    if fb.abs() <= tol {
        return Ok(done(b, fb, b, b, 0));
    }
    if (fa < T::zero()) == (fb < T::zero()) {
        return Err(NumericsError::NoSignChange {
            lo: a.as_f64(),
            hi: b.as_f64(),
            f_lo: fa.as_f64(),
            f_hi: fb.as_f64(),
        });
    }

    let half = T::lit(0.5);
    let mut last_width = b - a;
    let mut force_bisect = false;
    for it in 1..=max_iterations {
        let width = b - a;
        let mid = a + half * width;
        let secant = b - fb * (b - a) / (fb - fa);
        let inside = secant > a && secant < b && secant.is_finite();
        let x = if force_bisect || !inside { mid } else { secant };
        let fx = f(x);
        if !fx.is_finite() {
            return Err(NumericsError::NonFinite { at: x.as_f64() });
        }
        if (fx < T::zero()) == (fa < T::zero()) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if fx.abs() <= tol {
            return Ok(done(x, fx, a, b, it));
        }
        let new_width = b - a;
        // A secant step that fails to halve the bracket is followed by a
        // bisection, which bounds the iteration count by that of bisection.
        force_bisect = !force_bisect && new_width > half * last_width;
        last_width = new_width;
        if new_width <= T::lit(2.0) * T::epsilon() * a.abs().max(b.abs()) {
            let (root, residual) = if fa.abs() <= fb.abs() { (a, fa) } else { (b, fb) };
            if residual.abs() <= tol {
                return Ok(done(root, residual, a, b, it));
            }
            break;
        }
    }
    Err(NumericsError::NonConvergence { routine: "solve_scalar", limit: max_iterations })
}
