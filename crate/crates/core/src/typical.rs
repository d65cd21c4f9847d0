//! The typical clique number: the fixed point `r = f_n(r)` and the
//! quantities derived from it.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::distributions::{TruncatedWeight, WeightDistribution};
use crate::error::{invalid, Error, Result};
use crate::model::ScalingSchedule;
use crate::numerics::{ln_gamma, solve_scalar, NumericsError};
use crate::Scalar;

pub const DEFAULT_DELTA: f64 = 0.1;
pub const ALTERNATIVE_MAX_ITERATIONS: usize = 100;
pub const ALTERNATIVE_TOL: f64 = 1e-9;

/// One `(W, s_n, n, delta)` configuration with its truncation resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalProblem<T> {
    pub n: u64,
    pub delta: T,
    pub scaling: T,
    pub truncated: TruncatedWeight<T>,
    /// `E[W~]`.
    pub mean: T,
    /// `ln b = ln(s_n / E[W~])`; `+inf` when `W~ = 0`.
    pub ln_base: T,
}

impl<T: Scalar> TypicalProblem<T> {
    pub fn new(dist: &WeightDistribution<T>, sched: &ScalingSchedule<T>, n: u64, delta: T) -> Result<Self> {
        if !(delta > T::zero()) || delta.is_infinite() {
            return Err(invalid("delta", format!("must be positive, got {delta}")));
        }
        let scaling = sched.value(n)?;
        Self::with_scaling(dist, scaling, n, delta)
    }

    /// Same, with `s_n` given directly.
    pub fn with_scaling(dist: &WeightDistribution<T>, scaling: T, n: u64, delta: T) -> Result<Self> {
        if n < 1 {
            return Err(invalid("n", "must be at least 1"));
        }
        if !(scaling > T::zero()) {
            return Err(invalid("scaling", format!("must be positive, got {scaling}")));
        }
        let truncated = TruncatedWeight::new(*dist, scaling / (T::one() + delta))?;
        let ln_mean = truncated.ln_moment(T::one())?;
        let ln_base = scaling.ln() - ln_mean;
        if !(ln_base > T::zero()) {
            return Err(Error::DegenerateBase { base: ln_base.exp().as_f64() });
        }
        Ok(TypicalProblem { n, delta, scaling, truncated, mean: ln_mean.exp(), ln_base })
    }

    pub fn ln_n(&self) -> T {
        T::from_u64_lossy(self.n).ln()
    }

    /// `beta_n = ln(cutoff / E[W~]) / ln(s_n / E[W~])`, taken as 1 when `W~ = 0`.
    pub fn beta_n(&self) -> T {
        if self.ln_base.is_infinite() {
            return T::one();
        }
        (self.ln_base - (T::one() + self.delta).ln()) / self.ln_base
    }

    /// `ln m_{r-1}`.
    pub fn ln_relative_moment(&self, r: T) -> Result<T> {
        Ok(self.truncated.relative_moment(r)?.ln)
    }

    /// `f_n(r) = (ln n - ln r + ln m_{r-1} + 1) / ln b + 1`.
    pub fn f_n(&self, r: T) -> Result<T> {
        let ln_m = self.ln_relative_moment(r)?;
        Ok((self.ln_n() - r.ln() + ln_m + T::one()) / self.ln_base + T::one())
    }

    /// The unique root of `r - f_n(r)`.
    pub fn solve(&self, tol: T) -> Result<TypicalCliqueResult<T>> {
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let g = |r: T| match self.f_n(r) {
            Ok(f) => r - f,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                T::nan()
            }
        };
        let nf = T::from_u64_lossy(self.n);
        let two = T::lit(2.0);
        // g(1) < 0 always; double the upper end until g turns positive.
        let mut lo = T::one();
        let mut hi = two.min(nf);
        loop {
            let v = g(hi);
            if let Some(e) = failure.borrow_mut().take() {
                return Err(e);
            }
            if v >= -tol {
                break;
            }
            if hi >= nf {
                return Err(Error::BracketFailure(format!("r - f_n(r) = {v} < 0 at r = n = {}", self.n)));
            }
            lo = hi;
            hi = (hi * two).min(nf);
        }
        let root = solve_scalar(g, lo, hi, tol).map_err(|e| {
            failure.borrow_mut().take().unwrap_or(match e {
                NumericsError::NoSignChange { .. } => Error::BracketFailure(e.to_string()),
                other => other.into(),
            })
        })?;
        Ok(TypicalCliqueResult {
            omega_bar: root.root,
            residual: root.residual,
            beta_n: self.beta_n(),
            b: self.ln_base.exp(),
            delta_used: self.delta,
            iterations: root.iterations,
            scaling: self.scaling,
            truncated_mean: self.mean,
        })
    }

    /// The asymptotic form `log_b(n m) - log_b log_b(n m) + log_b e + 1`
    /// with `m = m_{r-1}`, iterated from `m = 1`.
    pub fn solve_alternative(&self) -> Result<AlternativeForm<T>> {
        if self.ln_base.is_infinite() {
            return Ok(AlternativeForm { value: T::one(), iterations: 0, last_change: T::zero() });
        }
        let ln_b = self.ln_base;
        let h = |ln_m: T| -> Result<T> {
            let lb = (self.ln_n() + ln_m) / ln_b;
            if !(lb > T::one()) {
                return Err(Error::OutsideRegime(format!("log_b(n m) = {lb} must exceed 1")));
            }
            Ok(lb - lb.ln() / ln_b + T::one() / ln_b + T::one())
        };
        let tol = T::lit(ALTERNATIVE_TOL);
        let mut r = h(T::zero())?;
        let mut change = T::infinity();
        for it in 1..=ALTERNATIVE_MAX_ITERATIONS {
            if r < T::one() {
                return Err(Error::OutsideRegime(format!("iterate r = {r} fell below 1")));
            }
            let next = h(self.ln_relative_moment(r)?)?;
            change = (next - r).abs();
            r = next;
            if change <= tol {
                return Ok(AlternativeForm { value: r, iterations: it, last_change: change });
            }
        }
        Err(Error::IterationDivergence { iterations: ALTERNATIVE_MAX_ITERATIONS, last_change: change.as_f64() })
    }

    /// `b^{beta_n (r - omega) + (omega - 1)} r / (n e)`, in log form, tagged
    /// by which side of `m_{r-1}` it bounds.
    pub fn relative_moment_bound_at(&self, omega_bar: T, r: T) -> Result<MomentBound<T>> {
        let nf = T::from_u64_lossy(self.n);
        if !(r >= T::one() && r <= nf) {
            return Err(invalid("r", format!("must lie in [1, n], got {r}")));
        }
        let exponent = self.beta_n() * (r - omega_bar) + (omega_bar - T::one());
        let ln_value = exponent * self.ln_base + r.ln() - self.ln_n() - T::one();
        let side = if r <= omega_bar { BoundSide::Lower } else { BoundSide::Upper };
        Ok(MomentBound { ln_value, value: ln_value.exp(), side })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypicalCliqueResult<T> {
    pub omega_bar: T,
    /// `omega_bar - f_n(omega_bar)`.
    pub residual: T,
    pub beta_n: T,
    /// `s_n / E[W~]`.
    pub b: T,
    pub delta_used: T,
    pub iterations: usize,
    pub scaling: T,
    pub truncated_mean: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlternativeForm<T> {
    pub value: T,
    pub iterations: usize,
    pub last_change: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    /// Bound is at most `m_{r-1}` (`r <= omega_bar`).
    Lower,
    /// Bound is at least `m_{r-1}` (`r >= omega_bar`).
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentBound<T> {
    pub value: T,
    pub ln_value: T,
    pub side: BoundSide,
}

pub fn f_n<T: Scalar>(r: T, dist: &WeightDistribution<T>, sched: &ScalingSchedule<T>, n: u64, delta: T) -> Result<T> {
    if !(r >= T::one()) {
        return Err(invalid("r", format!("must be at least 1, got {r}")));
    }
    TypicalProblem::new(dist, sched, n, delta)?.f_n(r)
}

pub fn typical_clique_number<T: Scalar>(
    dist: &WeightDistribution<T>,
    sched: &ScalingSchedule<T>,
    n: u64,
    delta: T,
    tol: T,
) -> Result<TypicalCliqueResult<T>> {
    TypicalProblem::new(dist, sched, n, delta)?.solve(tol)
}

pub fn typical_clique_number_alternative<T: Scalar>(
    dist: &WeightDistribution<T>,
    sched: &ScalingSchedule<T>,
    n: u64,
    delta: T,
) -> Result<T> {
    Ok(TypicalProblem::new(dist, sched, n, delta)?.solve_alternative()?.value)
}

pub fn relative_moment_bound<T: Scalar>(
    dist: &WeightDistribution<T>,
    sched: &ScalingSchedule<T>,
    n: u64,
    delta: T,
    r: T,
) -> Result<MomentBound<T>> {
    let problem = TypicalProblem::new(dist, sched, n, delta)?;
    let omega = problem.solve(T::ROOT_TOL)?.omega_bar;
    problem.relative_moment_bound_at(omega, r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicBounds<T> {
    pub lower: T,
    /// `+inf` for unbounded support.
    pub upper: T,
    pub t_star: T,
}

/// Max-weight heuristics: `upper = ln n / ln(s_n / w_max)` and
/// `lower = max_t (ln n + ln P(W >= t)) / ln(s_n / t)` over the grid.
pub fn heuristic_bounds<T: Scalar>(
    dist: &WeightDistribution<T>,
    sched: &ScalingSchedule<T>,
    n: u64,
    t_grid: &[T],
) -> Result<HeuristicBounds<T>> {
    dist.validate()?;
    let s = sched.value(n)?;
    let ln_n = T::from_u64_lossy(n).ln();
    let upper = match dist.support_max() {
        Some(w) if w < s => ln_n / (s / w).ln(),
        Some(_) => T::infinity(),
        None => T::infinity(),
    };
    let mut best: Option<(T, T)> = None;
    for &t in t_grid {
        if !(t > T::zero() && t < s) {
            continue;
        }
        let p = dist.prob_at_least(t);
        if !(p > T::zero()) {
            continue;
        }
        let v = (ln_n + p.ln()) / (s / t).ln();
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, t));
        }
    }
    let (lower, t_star) =
        best.ok_or_else(|| invalid("t_grid", "no grid point in (0, s_n) with positive tail probability"))?;
    Ok(HeuristicBounds { lower, upper, t_star })
}

/// `count` log-spaced points between `lo` and `hi`, inclusive.
pub fn log_grid<T: Scalar>(lo: T, hi: T, count: usize) -> Vec<T> {
    if count < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / T::from_usize(count - 1).unwrap();
    (0..count).map(|i| (a + step * T::from_usize(i).unwrap()).exp()).collect()
}

/// `ln[(2 pi r)^{-1/2} (n e / r)^r]`.
pub fn stirling_binomial<T: Scalar>(n: u64, r: u64) -> Result<T> {
    if r < 1 || r > n {
        return Err(invalid("r", format!("must lie in [1, n = {n}], got {r}")));
    }
    let nf = T::from_u64_lossy(n);
    let rf = T::from_u64_lossy(r);
    Ok(-T::lit(0.5) * (T::lit(2.0) * T::PI() * rf).ln() + rf * (nf.ln() + T::one() - rf.ln()))
}

/// Exact `ln C(n, r)` through `ln Gamma`.
pub fn ln_binomial<T: Scalar>(n: u64, r: u64) -> Result<T> {
    if r > n {
        return Err(invalid("r", format!("must not exceed n = {n}, got {r}")));
    }
    let f = |k: u64| ln_gamma(T::from_u64_lossy(k) + T::one());
    Ok(f(n) - f(r) - f(n - r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::lambert_w0;
    use approx::assert_relative_eq;

    type D = WeightDistribution<f64>;
    type S = ScalingSchedule<f64>;

    #[test]
    fn f_n_at_one() {
        let v = f_n(1.0, &D::Degenerate { value: 1.0 }, &S::Constant { value: 10.0 }, 1000, 0.1).unwrap();
        assert_relative_eq!(v, (1000f64.ln() + 1.0) / 10f64.ln() + 1.0, max_relative = 1e-15);
    }

    #[test]
    fn er_root() {
        let r = typical_clique_number(&D::Degenerate { value: 1.0 }, &S::Constant { value: 10.0 }, 1000, 0.1, 1e-12)
            .unwrap();
        assert_relative_eq!(r.omega_bar, 3.848_95, max_relative = 1e-5);
        assert!(r.residual.abs() <= 1e-12);
        assert!(r.beta_n > 0.0 && r.beta_n < 1.0);
        assert_relative_eq!(r.b, 10.0, max_relative = 1e-15);
    }

    #[test]
    fn bernoulli_closed_form() {
        let (n, p, s) = (5000u64, 0.3, 3.0);
        let r = typical_clique_number(&D::Bernoulli { p }, &S::Constant { value: s }, n, 0.1, 1e-13).unwrap();
        let closed = lambert_w0(n as f64 * p * std::f64::consts::E * s * s.ln()).unwrap() / s.ln();
        assert!((r.omega_bar - closed).abs() < 1e-9);
    }

    #[test]
    fn zero_weights_give_one() {
        let r =
            typical_clique_number(&D::Degenerate { value: 0.0 }, &S::Constant { value: 2.0 }, 64, 0.1, 1e-10).unwrap();
        assert_eq!(r.omega_bar, 1.0);
        assert_eq!(r.beta_n, 1.0);
    }

    #[test]
    fn truncation_keeps_base_above_one_plus_delta() {
        // E[W~] <= s / (1 + delta), so b >= 1 + delta and the base check
        // cannot fire once the truncation is well defined.
        let p = TypicalProblem::with_scaling(&D::Degenerate { value: 5.0 }, 5.2, 100, 0.01).unwrap();
        assert!(p.ln_base.exp() >= 1.01);
        assert!(TypicalProblem::with_scaling(&D::Degenerate { value: 5.0 }, 5.0, 100, 0.01).is_err());
    }

    #[test]
    fn alternative_reduces_to_er_formula() {
        let p =
            TypicalProblem::new(&D::Degenerate { value: 1.0 }, &S::Constant { value: 2.0 }, 1_000_000, 0.1).unwrap();
        let alt = p.solve_alternative().unwrap();
        let l = 1e6f64.ln() / 2f64.ln();
        assert_relative_eq!(alt.value, l - l.log2() + std::f64::consts::LOG2_E + 1.0, max_relative = 1e-14);
        assert_eq!(alt.iterations, 1);
        let exact = p.solve(1e-10).unwrap().omega_bar;
        assert!((exact - alt.value).abs() <= 0.2, "{exact} vs {}", alt.value);
    }

    #[test]
    fn bound_meets_moment_at_root() {
        let p = TypicalProblem::new(&D::Gamma { shape: 2.0, rate: 1.0 }, &S::Constant { value: 12.0 }, 100_000, 0.1)
            .unwrap();
        let w = p.solve(1e-12).unwrap().omega_bar;
        let b = p.relative_moment_bound_at(w, w).unwrap();
        assert_relative_eq!(b.ln_value, p.ln_relative_moment(w).unwrap(), epsilon = 1e-9);
        let below = p.relative_moment_bound_at(w, w / 2.0).unwrap();
        assert_eq!(below.side, BoundSide::Lower);
        assert!(below.ln_value <= p.ln_relative_moment(w / 2.0).unwrap());
        let above = p.relative_moment_bound_at(w, 2.0 * w).unwrap();
        assert_eq!(above.side, BoundSide::Upper);
        assert!(above.ln_value >= p.ln_relative_moment(2.0 * w).unwrap());
    }

    #[test]
    fn heuristic_degenerate_is_tight() {
        let grid = log_grid(0.01, 1.0, 50);
        let h = heuristic_bounds(&D::Degenerate { value: 1.0 }, &S::Constant { value: 4.0 }, 10_000, &grid).unwrap();
        assert_relative_eq!(h.lower, h.upper, max_relative = 1e-14);
        assert_relative_eq!(h.upper, 10_000f64.ln() / 4f64.ln(), max_relative = 1e-14);
        assert!(heuristic_bounds(&D::Uniform01, &S::Constant { value: 2.0 }, 100, &[5.0]).is_err());
    }

    #[test]
    fn stirling_values() {
        assert_relative_eq!(
            stirling_binomial::<f64>(100, 1).unwrap(),
            (100.0 * std::f64::consts::E / (2.0 * std::f64::consts::PI).sqrt()).ln(),
            max_relative = 1e-14
        );
        let s: f64 = stirling_binomial(1_000_000, 10).unwrap();
        let e: f64 = ln_binomial(1_000_000, 10).unwrap();
        assert!((s / e - 1.0).abs() < 0.01);
        assert_relative_eq!(ln_binomial::<f64>(10, 3).unwrap(), 120f64.ln(), max_relative = 1e-13);
        assert!(stirling_binomial::<f64>(5, 0).is_err());
    }
}
