//! Beta function and the regularized incomplete beta function.

use super::gamma::ln_gamma;
use super::{domain, NumericsError};
use crate::Scalar;

const MAX_TERMS: usize = 10_000;

/// `ln B(a, b)` for `a, b > 0`.
pub fn ln_beta<T: Scalar>(a: T, b: T) -> Result<T, NumericsError> {
    if !(a > T::zero()) || a.is_infinite() {
        return Err(domain("ln_beta", a));
    }
    if !(b > T::zero()) || b.is_infinite() {
        return Err(domain("ln_beta", b));
    }
    Ok(ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))
}

fn continued_fraction<T: Scalar>(a: T, b: T, x: T) -> Result<T, NumericsError> {
    let tiny = T::min_positive_value() / T::epsilon();
    let clamp = |v: T| if v.abs() < tiny { tiny } else { v };
    let one = T::one();
    let two = T::lit(2.0);
    let qab = a + b;
    let qap = a + one;
    let qam = a - one;
    let mut c = one;
    let mut d = one / clamp(one - qab * x / qap);
    let mut h = d;
    for m in 1..=MAX_TERMS {
        let m = T::from_usize(m).unwrap();
        let m2 = two * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = one / clamp(one + aa * d);
        c = clamp(one + aa / c);
        h = h * d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = one / clamp(one + aa * d);
        c = clamp(one + aa / c);
        let del = d * c;
        h = h * del;
        if (del - one).abs() <= T::epsilon() {
            return Ok(h);
        }
    }
    Err(NumericsError::NonConvergence { routine: "incomplete beta continued fraction", limit: MAX_TERMS })
}

/// `ln I_x(a, b)` from the continued fraction; accurate when
/// `x < (a + 1) / (a + b + 2)`.
fn ln_direct<T: Scalar>(a: T, b: T, x: T) -> Result<T, NumericsError> {
    let cf = continued_fraction(a, b, x)?;
    Ok(a * x.ln() + b * (-x).ln_1p() - ln_gamma(a) - ln_gamma(b) + ln_gamma(a + b) - a.ln() + cf.ln())
}

fn check<T: Scalar>(name: &'static str, a: T, b: T, x: T) -> Result<(), NumericsError> {
    ln_beta(a, b).map_err(|_| domain(name, if a > T::zero() { b } else { a }))?;
    if !(x >= T::zero() && x <= T::one()) {
        return Err(domain(name, x));
    }
    Ok(())
}

fn use_direct<T: Scalar>(a: T, b: T, x: T) -> bool {
    x < (a + T::one()) / (a + b + T::lit(2.0))
}

/// Regularized incomplete beta `I_x(a, b) = P(Beta(a, b) <= x)`.
pub fn incomplete_beta_regularized<T: Scalar>(a: T, b: T, x: T) -> Result<T, NumericsError> {
    check("incomplete_beta_regularized", a, b, x)?;
    if x == T::zero() {
        return Ok(T::zero());
    }
    if x == T::one() {
        return Ok(T::one());
    }
    if use_direct(a, b, x) {
        Ok(ln_direct(a, b, x)?.exp())
    } else {
        Ok(T::one() - ln_direct(b, a, T::one() - x)?.exp())
    }
}

/// `ln I_x(a, b)`.
pub fn ln_incomplete_beta_regularized<T: Scalar>(a: T, b: T, x: T) -> Result<T, NumericsError> {
    check("ln_incomplete_beta_regularized", a, b, x)?;
    if x == T::zero() {
        return Ok(T::neg_infinity());
    }
    if x == T::one() {
        return Ok(T::zero());
    }
    if use_direct(a, b, x) {
        ln_direct(a, b, x)
    } else {
        Ok((-ln_direct(b, a, T::one() - x)?.exp()).ln_1p())
    }
}
