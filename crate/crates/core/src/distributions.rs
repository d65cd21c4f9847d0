//! Vertex-weight laws and their truncated moments.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{
    adaptive_quadrature, erfc, incomplete_beta_regularized, ln_beta, ln_erfcx, ln_gamma,
    ln_incomplete_beta_regularized, ln_lower_incomplete_gamma_regularized, ln_normal_cdf,
    upper_incomplete_gamma_regularized,
};
use crate::Scalar;

/// The law of a vertex weight `W >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightDistribution<T> {
    /// Point mass at `value`.
    Degenerate {
        value: T,
    },
    /// `P(W = 1) = p`, `P(W = 0) = 1 - p`.
    Bernoulli {
        p: T,
    },
    Uniform01,
    Beta {
        alpha: T,
        beta: T,
    },
    /// Shape-rate parameterization, mean `shape / rate`.
    Gamma {
        shape: T,
        rate: T,
    },
    /// `|N(0, sigma^2)|`.
    HalfNormal {
        sigma: T,
    },
    /// `exp(N(0, 1))`.
    LogNormal,
    /// Density proportional to `x^-exponent` on `[x_min, inf)`.
    ParetoPowerLaw {
        exponent: T,
        x_min: T,
    },
}

/// `m` and `ln m` for a relative moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeMoment<T> {
    pub value: T,
    pub ln: T,
}

/// Truncated against untruncated relative moment of the same order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationComparison<T> {
    pub ln_truncated: T,
    /// `+inf` when the untruncated moment diverges.
    pub ln_untruncated: T,
    /// `truncated / untruncated`.
    pub ratio: T,
}

fn positive<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {v}")))
    }
}

impl<T: Scalar> WeightDistribution<T> {
    pub fn validate(&self) -> Result<()> {
        use WeightDistribution::*;
        match *self {
            Degenerate { value } => {
                if value >= T::zero() && value.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("value", format!("must be non-negative and finite, got {value}")))
                }
            }
            Bernoulli { p } => {
                if p > T::zero() && p <= T::one() {
                    Ok(())
                } else {
                    Err(invalid("p", format!("must lie in (0, 1], got {p}")))
                }
            }
            Uniform01 | LogNormal => Ok(()),
            Beta { alpha, beta } => positive("alpha", alpha).and(positive("beta", beta)),
            Gamma { shape, rate } => positive("shape", shape).and(positive("rate", rate)),
            HalfNormal { sigma } => positive("sigma", sigma),
            ParetoPowerLaw { exponent, x_min } => {
                positive("x_min", x_min)?;
                if exponent > T::one() && exponent.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("exponent", format!("must exceed 1, got {exponent}")))
                }
            }
        }
    }

    /// Largest point of the support, or `None` if unbounded.
    pub fn support_max(&self) -> Option<T> {
        use WeightDistribution::*;
        match *self {
            Degenerate { value } => Some(value),
            Bernoulli { .. } | Uniform01 | Beta { .. } => Some(T::one()),
            _ => None,
        }
    }

    fn support_min(&self) -> T {
        match *self {
            WeightDistribution::Degenerate { value } => value,
            WeightDistribution::ParetoPowerLaw { x_min, .. } => x_min,
            _ => T::zero(),
        }
    }

    /// `E[W]`; infinite for Pareto laws with exponent at most 2.
    pub fn mean(&self) -> T {
        use WeightDistribution::*;
        let two = T::lit(2.0);
        match *self {
            Degenerate { value } => value,
            Bernoulli { p } => p,
            Uniform01 => T::lit(0.5),
            Beta { alpha, beta } => alpha / (alpha + beta),
            Gamma { shape, rate } => shape / rate,
            HalfNormal { sigma } => sigma * (two / T::PI()).sqrt(),
            LogNormal => T::lit(0.5).exp(),
            ParetoPowerLaw { exponent, x_min } => {
                if exponent > two {
                    x_min * (exponent - T::one()) / (exponent - two)
                } else {
                    T::infinity()
                }
            }
        }
    }

    /// `P(W > x)`.
    pub fn tail(&self, x: T) -> T {
        use WeightDistribution::*;
        let one = T::one();
        if x < T::zero() {
            return one;
        }
        match *self {
            Degenerate { value } => {
                if x < value {
                    one
                } else {
                    T::zero()
                }
            }
            Bernoulli { p } => {
                if x < one {
                    p
                } else {
                    T::zero()
                }
            }
            Uniform01 => one - x.min(one),
            Beta { alpha, beta } => {
                if x >= one {
                    T::zero()
                } else {
                    incomplete_beta_regularized(beta, alpha, one - x).unwrap_or_else(|_| T::nan())
                }
            }
            Gamma { shape, rate } => upper_incomplete_gamma_regularized(shape, rate * x).unwrap_or_else(|_| T::nan()),
            HalfNormal { sigma } => erfc(x / (sigma * T::SQRT_2())),
            LogNormal => {
                if x == T::zero() {
                    one
                } else {
                    T::lit(0.5) * erfc(x.ln() / T::SQRT_2())
                }
            }
            ParetoPowerLaw { exponent, x_min } => {
                if x <= x_min {
                    one
                } else {
                    ((one - exponent) * (x / x_min).ln()).exp()
                }
            }
        }
    }

    /// `P(W >= x)`; differs from `tail` only at atoms.
    pub fn prob_at_least(&self, x: T) -> T {
        match *self {
            WeightDistribution::Degenerate { value } => {
                if x <= value {
                    T::one()
                } else {
                    T::zero()
                }
            }
            WeightDistribution::Bernoulli { p } => {
                if x <= T::zero() {
                    T::one()
                } else if x <= T::one() {
                    p
                } else {
                    T::zero()
                }
            }
            _ => self.tail(x),
        }
    }

    /// `P(W <= x)`.
    pub fn cdf(&self, x: T) -> T {
        T::one() - self.tail(x)
    }

    /// `ln P(W <= c)`, accurate when the mass is tiny or close to one.
    pub fn ln_mass(&self, c: T) -> T {
        use WeightDistribution::*;
        if c < self.support_min() {
            return T::neg_infinity();
        }
        if c.is_infinite() {
            return T::zero();
        }
        match *self {
            Uniform01 => c.min(T::one()).ln(),
            Beta { alpha, beta } => {
                if c >= T::one() {
                    T::zero()
                } else {
                    ln_incomplete_beta_regularized(alpha, beta, c).unwrap_or_else(|_| T::nan())
                }
            }
            Gamma { shape, rate } => {
                ln_lower_incomplete_gamma_regularized(shape, rate * c).unwrap_or_else(|_| T::nan())
            }
            LogNormal => {
                if c == T::zero() {
                    T::neg_infinity()
                } else {
                    ln_normal_cdf(c.ln())
                }
            }
            ParetoPowerLaw { exponent, x_min } => (-(((T::one() - exponent) * (c / x_min).ln()).exp_m1())).ln(),
            _ => {
                let t = self.tail(c);
                if t < T::lit(0.5) {
                    (-t).ln_1p()
                } else {
                    (T::one() - t).ln()
                }
            }
        }
    }

    /// Density of the continuous families; `None` for laws with atoms.
    pub fn density(&self, x: T) -> Option<T> {
        use WeightDistribution::*;
        let one = T::one();
        let zero = T::zero();
        let d = match *self {
            Degenerate { .. } | Bernoulli { .. } => return None,
            Uniform01 => {
                if x >= zero && x <= one {
                    one
                } else {
                    zero
                }
            }
            Beta { alpha, beta } => {
                if x <= zero || x >= one {
                    zero
                } else {
                    let lb = ln_beta(alpha, beta).ok()?;
                    ((alpha - one) * x.ln() + (beta - one) * (-x).ln_1p() - lb).exp()
                }
            }
            Gamma { shape, rate } => {
                if x <= zero {
                    zero
                } else {
                    (shape * rate.ln() + (shape - one) * x.ln() - rate * x - ln_gamma(shape)).exp()
                }
            }
            HalfNormal { sigma } => {
                if x < zero {
                    zero
                } else {
                    let z = x / sigma;
                    (T::lit(2.0) / T::PI()).sqrt() / sigma * (-(z * z) / T::lit(2.0)).exp()
                }
            }
            LogNormal => {
                if x <= zero {
                    zero
                } else {
                    let l = x.ln();
                    (-(l * l) / T::lit(2.0)).exp() / (x * (T::lit(2.0) * T::PI()).sqrt())
                }
            }
            ParetoPowerLaw { exponent, x_min } => {
                if x < x_min {
                    zero
                } else {
                    (exponent - one) / x_min * (-exponent * (x / x_min).ln()).exp()
                }
            }
        };
        Some(d)
    }

    /// `ln E[W^k 1{W <= c}]` in closed form, for real `k >= 0`.
    pub fn ln_partial_moment(&self, k: T, c: T) -> T {
        use WeightDistribution::*;
        let one = T::one();
        let zero = T::zero();
        let half = T::lit(0.5);
        if c < self.support_min() {
            return T::neg_infinity();
        }
        match *self {
            Degenerate { value } => {
                if k == zero {
                    zero
                } else {
                    k * value.ln()
                }
            }
            Bernoulli { p } => {
                if k == zero {
                    if c >= one {
                        zero
                    } else {
                        (-p).ln_1p()
                    }
                } else if c >= one {
                    p.ln()
                } else {
                    T::neg_infinity()
                }
            }
            Uniform01 => (k + one) * c.min(one).ln() - (k + one).ln(),
            Beta { alpha, beta } => {
                let head = ln_beta(alpha + k, beta).unwrap_or_else(|_| T::nan())
                    - ln_beta(alpha, beta).unwrap_or_else(|_| T::nan());
                if c >= one {
                    head
                } else {
                    head + ln_incomplete_beta_regularized(alpha + k, beta, c).unwrap_or_else(|_| T::nan())
                }
            }
            Gamma { shape, rate } => {
                let a = shape + k;
                ln_gamma(a) - ln_gamma(shape) - k * rate.ln()
                    + ln_lower_incomplete_gamma_regularized(a, rate * c).unwrap_or_else(|_| T::nan())
            }
            HalfNormal { sigma } => {
                let a = half * (k + one);
                let z = c / sigma;
                k * sigma.ln() + half * k * T::LN_2() + ln_gamma(a) - half * T::PI().ln()
                    + ln_lower_incomplete_gamma_regularized(a, half * z * z).unwrap_or_else(|_| T::nan())
            }
            LogNormal => {
                if c == zero {
                    T::neg_infinity()
                } else {
                    let l = c.ln();
                    let u = (k - l) / T::SQRT_2();
                    if u > T::lit(3.0) {
                        // k^2/2 cancels against the Gaussian tail exponent.
                        k * l - half * l * l + half.ln() + ln_erfcx(u)
                    } else {
                        half * k * k + ln_normal_cdf(l - k)
                    }
                }
            }
            ParetoPowerLaw { exponent, x_min } => {
                let lead = k * x_min.ln() + (exponent - one).ln();
                let e = k + one - exponent;
                let l = (c / x_min).ln();
                if l.is_infinite() {
                    return if e < zero { lead - (-e).ln() } else { T::infinity() };
                }
                let el = e * l;
                if el.abs() < T::lit(1e-6) {
                    // int_1^{c/x_min} y^{e-1} dy -> ln(c/x_min) as e -> 0.
                    lead + l.ln() + (half * el + el * el / T::lit(6.0)).ln_1p()
                } else if e < zero {
                    lead - (-e).ln() + (-el.exp_m1()).ln()
                } else if el > one {
                    // ln(e^el - 1) without overflow at large orders.
                    lead - e.ln() + el + (-(-el).exp()).ln_1p()
                } else {
                    lead - e.ln() + el.exp_m1().ln()
                }
            }
        }
    }

    /// `ln E[W^k 1{W <= c}]` by adaptive quadrature of the density. Falls
    /// back to the closed form for laws with atoms.
    pub fn ln_partial_moment_quadrature(&self, k: T, c: T) -> Result<T> {
        if self.density(T::one()).is_none() {
            return Ok(self.ln_partial_moment(k, c));
        }
        let lo = self.support_min();
        let hi = match self.support_max() {
            Some(m) => m.min(c),
            None => c,
        };
        if hi <= lo {
            return Ok(T::neg_infinity());
        }
        let dist = *self;
        let v = adaptive_quadrature(
            |x: T| {
                let d = dist.density(x).unwrap_or(T::zero());
                if d == T::zero() {
                    d
                } else {
                    x.powf(k) * d
                }
            },
            lo,
            hi,
            T::QUAD_TOL,
        )?;
        Ok(v.ln())
    }

    /// Inverse CDF: smallest `x` with `P(W <= x) >= u`, for `u` in `[0, 1)`.
    pub fn quantile(&self, u: T) -> T {
        use WeightDistribution::*;
        let one = T::one();
        match *self {
            Degenerate { value } => value,
            Bernoulli { p } => {
                if u < one - p {
                    T::zero()
                } else {
                    one
                }
            }
            Uniform01 => u,
            ParetoPowerLaw { exponent, x_min } => x_min * ((-u).ln_1p() / (one - exponent)).exp(),
            _ => self.numeric_quantile(u),
        }
    }

    /// Safeguarded Newton on the CDF (or on the tail, above the median).
    fn numeric_quantile(&self, u: T) -> T {
        let zero = T::zero();
        let one = T::one();
        let two = T::lit(2.0);
        if u <= zero {
            return self.support_min();
        }
        let upper = u > T::lit(0.5);
        let target = if upper { one - u } else { u };
        // g is increasing in x in both forms.
        let g = |x: T| {
            if upper {
                target - self.tail(x)
            } else {
                self.cdf(x) - target
            }
        };
        let mut lo = self.support_min();
        let mut hi = match self.support_max() {
            Some(m) => m,
            None => {
                let mut h = self.mean().max(one);
                while g(h) < zero && h < T::max_value() / two {
                    lo = h;
                    h = h * two;
                }
                h
            }
        };
        let mut x = lo + (hi - lo) / two;
        for _ in 0..200 {
            let gx = g(x);
            if gx == zero {
                return x;
            }
            if gx < zero {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.density(x).unwrap_or(zero);
            let newton = x - gx / d;
            let next = if d > zero && newton > lo && newton < hi { newton } else { lo + (hi - lo) / two };
            let tol = T::lit(4.0) * T::epsilon() * next.abs().max(T::min_positive_value());
            if (next - x).abs() <= tol || hi - lo <= tol {
                return next;
            }
            x = next;
        }
        x
    }

    /// `count` i.i.d. draws by inversion of one uniform per draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<T> {
        (0..count).map(|_| self.quantile(T::lit(rng.gen::<f64>()))).collect()
    }
}

impl<T: Scalar> fmt::Display for WeightDistribution<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use WeightDistribution::*;
        match self {
            Degenerate { value } => write!(f, "degenerate({value})"),
            Bernoulli { p } => write!(f, "bernoulli({p})"),
            Uniform01 => write!(f, "uniform01"),
            Beta { alpha, beta } => write!(f, "beta({alpha},{beta})"),
            Gamma { shape, rate } => write!(f, "gamma({shape},{rate})"),
            HalfNormal { sigma } => write!(f, "half_normal({sigma})"),
            LogNormal => write!(f, "log_normal"),
            ParetoPowerLaw { exponent, x_min } => write!(f, "pareto_power_law({exponent},{x_min})"),
        }
    }
}

/// `W` conditioned on `W <= cutoff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedWeight<T> {
    pub base: WeightDistribution<T>,
    pub cutoff: T,
    ln_mass: T,
}

impl<T: Scalar> TruncatedWeight<T> {
    pub fn new(base: WeightDistribution<T>, cutoff: T) -> Result<Self> {
        base.validate()?;
        if !(cutoff > T::zero()) {
            return Err(invalid("cutoff", format!("must be positive, got {cutoff}")));
        }
        let ln_mass = base.ln_mass(cutoff);
        if ln_mass.is_nan() || ln_mass == T::neg_infinity() {
            return Err(Error::ZeroMass { cutoff: cutoff.as_f64() });
        }
        Ok(Self { base, cutoff, ln_mass })
    }

    /// `ln P(W <= cutoff)`.
    pub fn ln_mass(&self) -> T {
        self.ln_mass
    }

    pub fn mass(&self) -> T {
        self.ln_mass.exp()
    }

    /// Whether the cutoff lies above the support, making truncation a no-op.
    pub fn is_inactive(&self) -> bool {
        matches!(self.base.support_max(), Some(m) if self.cutoff >= m)
    }

    fn check_order(order: T) -> Result<()> {
        if order >= T::zero() && order.is_finite() {
            Ok(())
        } else {
            Err(invalid("order", format!("must be non-negative, got {order}")))
        }
    }

    /// `ln E[W~^order]`.
    pub fn ln_moment(&self, order: T) -> Result<T> {
        Self::check_order(order)?;
        if order == T::zero() {
            return Ok(T::zero());
        }
        Ok(self.base.ln_partial_moment(order, self.cutoff) - self.ln_mass)
    }

    pub fn moment(&self, order: T) -> Result<T> {
        self.ln_moment(order).map(T::exp)
    }

    /// `ln E[W~^order]` from quadrature, independent of the closed forms
    /// for every continuous family.
    pub fn ln_moment_quadrature(&self, order: T) -> Result<T> {
        Self::check_order(order)?;
        let num = self.base.ln_partial_moment_quadrature(order, self.cutoff)?;
        let den = self.base.ln_partial_moment_quadrature(T::zero(), self.cutoff)?;
        Ok(num - den)
    }

    /// `E[W~]`.
    pub fn mean(&self) -> Result<T> {
        self.moment(T::one())
    }

    /// `m_{r-1} = E[W~^{r-1}] / E[W~]^{r-1}` for real `r >= 1`.
    pub fn relative_moment(&self, r: T) -> Result<RelativeMoment<T>> {
        let ln = self.ln_relative_moment_with(r, |k| self.ln_moment(k))?;
        Ok(RelativeMoment { value: ln.exp(), ln })
    }

    /// Same as [`relative_moment`](Self::relative_moment) but via quadrature moments.
    pub fn relative_moment_quadrature(&self, r: T) -> Result<RelativeMoment<T>> {
        let ln = self.ln_relative_moment_with(r, |k| self.ln_moment_quadrature(k))?;
        Ok(RelativeMoment { value: ln.exp(), ln })
    }

    fn ln_relative_moment_with<F: Fn(T) -> Result<T>>(&self, r: T, ln_moment: F) -> Result<T> {
        if !(r >= T::one()) || r.is_infinite() {
            return Err(invalid("r", format!("must be at least 1, got {r}")));
        }
        let k = r - T::one();
        // Orders 0 and 1 are identically 1; a point mass has no spread.
        if k == T::zero() || k == T::one() || matches!(self.base, WeightDistribution::Degenerate { .. }) {
            return Ok(T::zero());
        }
        let ln_mean = ln_moment(T::one())?;
        if ln_mean == T::neg_infinity() {
            // W~ is the point mass at 0.
            return Ok(T::zero());
        }
        Ok(ln_moment(k)? - k * ln_mean)
    }

    /// Relative moment of order `r - 1` with and without truncation.
    pub fn compare_untruncated(&self, r: T) -> Result<TruncationComparison<T>> {
        let ln_truncated = self.relative_moment(r)?.ln;
        let k = r - T::one();
        let ln_untruncated =
            if k == T::zero() || k == T::one() || matches!(self.base, WeightDistribution::Degenerate { .. }) {
                T::zero()
            } else {
                let inf = T::infinity();
                self.base.ln_partial_moment(k, inf) - k * self.base.ln_partial_moment(T::one(), inf)
            };
        let ln_untruncated = if ln_untruncated.is_nan() { T::infinity() } else { ln_untruncated };
        Ok(TruncationComparison { ln_truncated, ln_untruncated, ratio: (ln_truncated - ln_untruncated).exp() })
    }

    /// Quantile of the truncated law.
    pub fn quantile(&self, u: T) -> T {
        if self.is_inactive() {
            return self.base.quantile(u);
        }
        let x = self.base.quantile(u * self.mass());
        x.min(self.cutoff)
    }

    /// `count` i.i.d. draws of `W~` by inversion; no rejection step.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<T> {
        (0..count).map(|_| self.quantile(T::lit(rng.gen::<f64>()))).collect()
    }
}
