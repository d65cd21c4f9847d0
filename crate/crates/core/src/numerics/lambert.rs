//! Real branches of the Lambert W function, the inverse of `w -> w e^w`.

use super::{domain, NumericsError};
use crate::Scalar;

const MAX_HALLEY: usize = 64;

/// Below this distance from the branch point the series alone is accurate
/// and Halley's derivative term degenerates.
const SERIES_ONLY: f64 = 1e-3;

/// Series about the branch point in `p = sqrt(2 (1 + e x))`; `sign` picks
/// the branch (+1 for W0, -1 for W-1).
fn branch_series<T: Scalar>(p: T, sign: T) -> T {
    const C: [f64; 7] = [-1.0, 1.0, -1.0 / 3.0, 11.0 / 72.0, -43.0 / 540.0, 769.0 / 17280.0, -221.0 / 8505.0];
    let q = sign * p;
    let mut acc = T::zero();
    for &c in C.iter().rev() {
        acc = acc * q + T::lit(c);
    }
    acc
}

fn branch_distance<T: Scalar>(x: T) -> T {
    let t = T::lit(2.0) * (T::one() + T::E() * x);
    if t > T::zero() {
        t.sqrt()
    } else {
        T::zero()
    }
}

/// `x e^{-w}` with the sign of `x`, evaluated in log space so that very
/// negative `w` does not overflow.
fn x_exp_neg<T: Scalar>(x: T, w: T) -> T {
    let mag = (x.abs().ln() - w).exp();
    if x < T::zero() {
        -mag
    } else {
        mag
    }
}

fn halley<T: Scalar>(x: T, mut w: T, routine: &'static str) -> Result<T, NumericsError> {
    let two = T::lit(2.0);
    let tol = T::lit(4.0) * T::epsilon();
    for _ in 0..MAX_HALLEY {
        // f(w) / e^w for f(w) = w e^w - x.
        let g = w - x_exp_neg(x, w);
        let wp1 = w + T::one();
        let denom = wp1 - (w + two) * g / (two * wp1);
        if denom == T::zero() || !denom.is_finite() {
            break;
        }
        let step = g / denom;
        w = w - step;
        if !w.is_finite() {
            return Err(NumericsError::NonFinite { at: x.as_f64() });
        }
        if step.abs() <= tol * w.abs().max(T::one()) {
            return Ok(w);
        }
    }
    let resid = (w * w.exp() - x).abs();
    if resid <= T::LAMBERT_TOL * x.abs().max(T::one()) {
        Ok(w)
    } else {
        Err(NumericsError::NonConvergence { routine, limit: MAX_HALLEY })
    }
}

/// Principal branch `W0` on `[-1/e, inf)`.
pub fn lambert_w0<T: Scalar>(x: T) -> Result<T, NumericsError> {
    let branch = -T::one() / T::E();
    if x.is_nan() || x < branch - T::LAMBERT_TOL {
        return Err(domain("lambert_w0", x));
    }
    if x <= branch {
        return Ok(-T::one());
    }
    if x == T::zero() {
        return Ok(T::zero());
    }
    if x.is_infinite() {
        return Ok(x);
    }
    let p = branch_distance(x);
    if p < T::lit(SERIES_ONLY) {
        return Ok(branch_series(p, T::one()));
    }
    let guess = if x < T::lit(-0.25) {
        branch_series(p, T::one())
    } else if x < T::one() {
        let half = T::lit(0.5);
        x * (T::one() + half * x) / (T::one() + T::lit(1.5) * x)
    } else if x <= T::E() {
        x.ln_1p() * T::lit(0.7)
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    halley(x, guess, "lambert_w0")
}

/// Lower branch `W-1` on `[-1/e, 0)`.
pub fn lambert_w_minus1<T: Scalar>(x: T) -> Result<T, NumericsError> {
    let branch = -T::one() / T::E();
    if x.is_nan() || x >= T::zero() || x < branch - T::LAMBERT_TOL {
        return Err(domain("lambert_w_minus1", x));
    }
    if x <= branch {
        return Ok(-T::one());
    }
    let p = branch_distance(x);
    if p < T::lit(SERIES_ONLY) {
        return Ok(branch_series(p, -T::one()));
    }
    let guess = if p < T::one() {
        branch_series(p, -T::one())
    } else {
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    };
    halley(x, guess, "lambert_w_minus1")
}
