//! Closed-form asymptotic predictions of the typical clique number.
//!
//! Every formula drops its `o(1)` terms. A [`Prediction`] carries the value,
//! the first-order term it is built on and a note naming the formula.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distributions::WeightDistribution;
use crate::error::{invalid, Error, Result};
use crate::model::ScalingSchedule;
use crate::numerics::{domain, lambert_w_minus1, ln_gamma};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorFamily {
    Degenerate,
    Bernoulli,
    Uniform,
    Beta,
    Gamma,
    HalfNormal,
    LogNormalLower,
    LogNormalUpper,
}

impl fmt::Display for PredictorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PredictorFamily::Degenerate => "degenerate",
            PredictorFamily::Bernoulli => "bernoulli",
            PredictorFamily::Uniform => "uniform",
            PredictorFamily::Beta => "beta",
            PredictorFamily::Gamma => "gamma",
            PredictorFamily::HalfNormal => "half_normal",
            PredictorFamily::LogNormalLower => "log_normal_lower",
            PredictorFamily::LogNormalUpper => "log_normal_upper",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction<T> {
    pub family: PredictorFamily,
    pub value: T,
    pub leading_term: T,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogNormalBounds<T> {
    pub lower: Prediction<T>,
    pub upper: Prediction<T>,
}

fn check_scaling<T: Scalar>(s: T) -> Result<()> {
    if s > T::one() && s.is_finite() {
        Ok(())
    } else {
        Err(invalid("s", format!("must exceed 1, got {s}")))
    }
}

/// `(L, ln L)` with `L = log_s x`.
fn log_log<T: Scalar>(x: T, s: T) -> Result<(T, T)> {
    let l = x.ln() / s.ln();
    if !(l > T::zero()) {
        return Err(domain("log_s log_s", x).into());
    }
    Ok((l, l.ln()))
}

/// `-W_{-1}(x)`, with branch violations reported as a regime error.
fn neg_w_minus1<T: Scalar>(x: T, what: &str) -> Result<T> {
    let branch = -(-T::one()).exp();
    if !(x < T::zero() && x >= branch) {
        return Err(Error::OutsideRegime(format!("{what}: W_-1 argument {x} is outside [-1/e, 0)")));
    }
    Ok(-lambert_w_minus1(x)?)
}

/// `log_s n - log_s log_s n + log_s e + 1`.
pub fn predict_degenerate<T: Scalar>(n: u64, s: T) -> Result<Prediction<T>> {
    check_scaling(s)?;
    let (l, ln_l) = log_log(T::from_u64_lossy(n), s)?;
    let ln_s = s.ln();
    Ok(Prediction {
        family: PredictorFamily::Degenerate,
        value: l - ln_l / ln_s + T::one() / ln_s + T::one(),
        leading_term: l,
        note: "log_s n - log_s log_s n + log_s e + 1".into(),
    })
}

/// The degenerate formula at `n p`.
pub fn predict_bernoulli<T: Scalar>(n: u64, p: T, s: T) -> Result<Prediction<T>> {
    check_scaling(s)?;
    if !(p > T::zero() && p <= T::one()) {
        return Err(invalid("p", format!("must lie in (0, 1], got {p}")));
    }
    let (l, ln_l) = log_log(T::from_u64_lossy(n) * p, s)?;
    let ln_s = s.ln();
    Ok(Prediction {
        family: PredictorFamily::Bernoulli,
        value: l - ln_l / ln_s + T::one() / ln_s + T::one(),
        leading_term: l,
        note: "log_s(np) - log_s log_s(np) + log_s e + 1".into(),
    })
}

/// `log_s n - 2 log_s log_s n + log_s e + 1`.
pub fn predict_uniform<T: Scalar>(n: u64, s: T) -> Result<Prediction<T>> {
    check_scaling(s)?;
    let (l, ln_l) = log_log(T::from_u64_lossy(n), s)?;
    let ln_s = s.ln();
    Ok(Prediction {
        family: PredictorFamily::Uniform,
        value: l - T::lit(2.0) * ln_l / ln_s + T::one() / ln_s + T::one(),
        leading_term: l,
        note: "log_s n - 2 log_s log_s n + log_s e + 1".into(),
    })
}

/// `log_s n - (1+beta) log_s log_s n + log_s e + log_s(Gamma(a+b)/Gamma(a)) + 1`.
pub fn predict_beta<T: Scalar>(n: u64, s: T, alpha: T, beta: T) -> Result<Prediction<T>> {
    check_scaling(s)?;
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(invalid(name, format!("must be positive, got {v}")));
        }
    }
    let (l, ln_l) = log_log(T::from_u64_lossy(n), s)?;
    let ln_s = s.ln();
    let gamma_ratio = ln_gamma(alpha + beta) - ln_gamma(alpha);
    Ok(Prediction {
        family: PredictorFamily::Beta,
        value: l - (T::one() + beta) * ln_l / ln_s + T::one() / ln_s + gamma_ratio / ln_s + T::one(),
        leading_term: l,
        note: "log_s n - (1+beta) log_s log_s n + log_s e + log_s(Gamma(alpha+beta)/Gamma(alpha)) + 1".into(),
    })
}

/// `xi_k(phi) = -k / W_{-1}(-1 / (e (1+phi)^k))`.
pub fn xi<T: Scalar>(k: u32, phi: T) -> Result<T> {
    if !(k == 1 || k == 2) {
        return Err(invalid("k", format!("must be 1 or 2, got {k}")));
    }
    if !(phi > T::zero()) || phi.is_nan() {
        return Err(domain("xi", phi).into());
    }
    let kf = T::from_u32(k).unwrap();
    let arg = -(-T::one() - kf * phi.ln_1p()).exp();
    Ok(kf / -lambert_w_minus1(arg)?)
}

/// `(N/2) / (-W_{-1}(-N / (2 e beta s))) + 5/2 - alpha` with
/// `N = 2 ln n - (3 - 2 alpha) ln(beta s) + 4 - 2 ln Gamma(alpha)`.
pub fn predict_gamma_general<T: Scalar>(n: u64, alpha: T, beta: T, s: T) -> Result<Prediction<T>> {
    check_scaling(s)?;
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(invalid(name, format!("must be positive, got {v}")));
        }
    }
    let two = T::lit(2.0);
    let bs = beta * s;
    let big_n =
        two * T::from_u64_lossy(n).ln() - (T::lit(3.0) - two * alpha) * bs.ln() + T::lit(4.0) - two * ln_gamma(alpha);
    let w = neg_w_minus1(-big_n / (two * T::E() * bs), "gamma")?;
    let leading = big_n / two / w;
    Ok(Prediction {
        family: PredictorFamily::Gamma,
        value: leading + T::lit(2.5) - alpha,
        leading_term: leading,
        note: "(N/2) / -W_-1(-N / (2 e beta s)) + 5/2 - alpha".into(),
    })
}

/// `N / (-W_{-1}(-N / (e s'^2))) + 3` with `s' = s / sigma` and
/// `N = 2 ln n - 4 ln s' + 4 - ln pi`.
pub fn predict_halfnormal_general<T: Scalar>(n: u64, sigma: T, s: T) -> Result<Prediction<T>> {
    check_scaling(s)?;
    if !(sigma > T::zero() && sigma.is_finite()) {
        return Err(invalid("sigma", format!("must be positive, got {sigma}")));
    }
    let s = s / sigma;
    let big_n = T::lit(2.0) * T::from_u64_lossy(n).ln() - T::lit(4.0) * s.ln() + T::lit(4.0) - T::PI().ln();
    let w = neg_w_minus1(-big_n / (T::E() * s * s), "half-normal")?;
    let leading = big_n / w;
    Ok(Prediction {
        family: PredictorFamily::HalfNormal,
        value: leading + T::lit(3.0),
        leading_term: leading,
        note: "N / -W_-1(-N / (e (s/sigma)^2)) + 3".into(),
    })
}

/// `upper = ln s - sqrt(ln^2 s - 2(ln n + 1)) + 1`,
/// `lower = ln s - sqrt((1 + ln s)^2 - 2 ln n) + 2`.
pub fn predict_lognormal_bounds<T: Scalar>(n: u64, s: T) -> Result<LogNormalBounds<T>> {
    check_scaling(s)?;
    let ln_s = s.ln();
    let ln_n = T::from_u64_lossy(n).ln();
    let two = T::lit(2.0);
    let disc_upper = ln_s * ln_s - two * (ln_n + T::one());
    let disc_lower = (T::one() + ln_s).powi(2) - two * ln_n;
    for disc in [disc_upper, disc_lower] {
        if !(disc >= T::zero()) {
            return Err(Error::OutsideRegime(format!(
                "log-normal bound: negative discriminant {disc} (s = {s}, n = {n})"
            )));
        }
    }
    let up = ln_s - disc_upper.sqrt();
    let lo = ln_s - disc_lower.sqrt();
    Ok(LogNormalBounds {
        lower: Prediction {
            family: PredictorFamily::LogNormalLower,
            value: lo + two,
            leading_term: lo,
            note: "ln s - sqrt((1 + ln s)^2 - 2 ln n) + 2".into(),
        },
        upper: Prediction {
            family: PredictorFamily::LogNormalUpper,
            value: up + T::one(),
            leading_term: up,
            note: "ln s - sqrt(ln^2 s - 2(ln n + 1)) + 1".into(),
        },
    })
}

/// The classical `G(n, p)` clique-number formula `2 log_q n - 2 log_q log_q n + 2 log_q(e/2) + 1` with
/// `q = 1/p` and `p = (E[W] / s_n)^2`.
pub fn er_comparison<T: Scalar>(n: u64, dist: &WeightDistribution<T>, sched: &ScalingSchedule<T>) -> Result<T> {
    dist.validate()?;
    let mean = dist.mean();
    if !(mean.is_finite() && mean > T::zero()) {
        return Err(invalid("dist", format!("needs a finite positive mean, got {mean}")));
    }
    let s = sched.value(n)?;
    let ln_q = T::lit(2.0) * (s.ln() - mean.ln());
    if !(ln_q > T::zero()) {
        return Err(Error::OutsideRegime(format!("edge density (E[W]/s_n)^2 = {} is not below 1", (-ln_q).exp())));
    }
    let l = T::from_u64_lossy(n).ln() / ln_q;
    if !(l > T::zero()) {
        return Err(domain("log_q log_q", T::from_u64_lossy(n)).into());
    }
    let two = T::lit(2.0);
    Ok(two * l - two * l.ln() / ln_q + two * (T::one() - two.ln()) / ln_q + T::one())
}

/// One row of the prediction tables: a weight law, a scaling schedule and
/// the first-order term the table lists for it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct TableRow<T> {
    pub table: u8,
    pub dist: WeightDistribution<T>,
    pub sched: ScalingSchedule<T>,
    /// `phi` for the growing schedules; unused in table 1.
    pub phi: T,
}

impl<T: Scalar> TableRow<T> {
    /// Table 1 rows at constant `s`.
    pub fn table1(s: T) -> Vec<Self> {
        let sched = ScalingSchedule::Constant { value: s };
        let two = T::lit(2.0);
        [
            WeightDistribution::Degenerate { value: T::one() },
            WeightDistribution::Bernoulli { p: T::lit(0.5) },
            WeightDistribution::Uniform01,
            WeightDistribution::Beta { alpha: two, beta: T::lit(3.0) },
        ]
        .into_iter()
        .map(|dist| TableRow { table: 1, dist, sched, phi: T::zero() })
        .collect()
    }

    /// Tables 2 (`k = 2`) and 3 (`k = 3`) for Gamma, half-normal and log-normal.
    pub fn growing(table: u8, phi: T, gamma_shape: T, gamma_rate: T, sigma: T) -> Result<Vec<Self>> {
        if !(phi > T::zero()) {
            return Err(invalid("phi", format!("must be positive, got {phi}")));
        }
        let one_phi = T::one() + phi;
        let (gamma, half, log_normal) = match table {
            2 => (
                ScalingSchedule::LogPower { coefficient: one_phi / gamma_rate, exponent: T::one() },
                ScalingSchedule::SqrtLog { coefficient: one_phi, exponent: T::one(), sigma },
                ScalingSchedule::ExpSqrtLog { coefficient: one_phi, exponent: T::one() },
            ),
            3 => (
                ScalingSchedule::LogPower { coefficient: T::one() / gamma_rate, exponent: one_phi },
                ScalingSchedule::SqrtLog { coefficient: T::one(), exponent: one_phi, sigma },
                ScalingSchedule::ExpSqrtLog { coefficient: T::one(), exponent: one_phi },
            ),
            _ => return Err(invalid("table", format!("growing schedules live in tables 2 and 3, got {table}"))),
        };
        Ok(vec![
            TableRow {
                table,
                dist: WeightDistribution::Gamma { shape: gamma_shape, rate: gamma_rate },
                sched: gamma,
                phi,
            },
            TableRow { table, dist: WeightDistribution::HalfNormal { sigma }, sched: half, phi },
            TableRow { table, dist: WeightDistribution::LogNormal, sched: log_normal, phi },
        ])
    }

    /// The default rows: table 1 at `s = 2`, tables 2 and 3 at `phi = 1`
    /// with Gamma(2,1), HalfNormal(1) and LogNormal(0,1).
    pub fn defaults() -> Vec<Self> {
        let mut rows = Self::table1(T::lit(2.0));
        for table in [2, 3] {
            rows.extend(Self::growing(table, T::one(), T::lit(2.0), T::one(), T::one()).expect("valid defaults"));
        }
        rows
    }

    /// Short family name used for filtering (`gamma`, `half_normal`, ...).
    pub fn family_name(&self) -> &'static str {
        match self.dist {
            WeightDistribution::Degenerate { .. } => "degenerate",
            WeightDistribution::Bernoulli { .. } => "bernoulli",
            WeightDistribution::Uniform01 => "uniform",
            WeightDistribution::Beta { .. } => "beta",
            WeightDistribution::Gamma { .. } => "gamma",
            WeightDistribution::HalfNormal { .. } => "half_normal",
            WeightDistribution::LogNormal => "log_normal",
            WeightDistribution::ParetoPowerLaw { .. } => "pareto",
        }
    }

    /// The row's first-order term at `n`.
    fn table_leading(&self, n: u64, s: T) -> Result<T> {
        let ln_n = T::from_u64_lossy(n).ln();
        let ln_ln_n = ln_n.ln();
        let phi = self.phi;
        let two = T::lit(2.0);
        Ok(match (self.table, self.dist) {
            (1, WeightDistribution::Bernoulli { p }) => (T::from_u64_lossy(n) * p).ln() / s.ln(),
            (1, _) => ln_n / s.ln(),
            (2, WeightDistribution::Gamma { .. }) => xi(1, phi)? * ln_n,
            (2, WeightDistribution::HalfNormal { .. }) => xi(2, phi)? * ln_n,
            (2, _) => (two * ln_n).sqrt(),
            (3, WeightDistribution::Gamma { .. }) => ln_n / ln_ln_n / phi,
            (3, WeightDistribution::HalfNormal { .. }) => two / phi * ln_n / ln_ln_n,
            (_, _) => ((T::one() + phi) - (phi * (two + phi)).sqrt()) * (two * ln_n).sqrt(),
        })
    }

    /// Predictions at `n`: one per row, two (lower, upper) for log-normal.
    pub fn predict(&self, n: u64) -> Result<Vec<Prediction<T>>> {
        let s = self.sched.value(n)?;
        let mut out = match self.dist {
            WeightDistribution::Degenerate { value } => {
                if value <= T::zero() {
                    return Err(invalid("dist", "degenerate prediction needs a positive weight"));
                }
                vec![predict_degenerate(n, s / value)?]
            }
            WeightDistribution::Bernoulli { p } => vec![predict_bernoulli(n, p, s)?],
            WeightDistribution::Uniform01 => vec![predict_uniform(n, s)?],
            WeightDistribution::Beta { alpha, beta } => vec![predict_beta(n, s, alpha, beta)?],
            WeightDistribution::Gamma { shape, rate } => {
                vec![predict_gamma_general(n, shape, rate, s)?]
            }
            WeightDistribution::HalfNormal { sigma } => {
                vec![predict_halfnormal_general(n, sigma, s)?]
            }
            WeightDistribution::LogNormal => {
                let b = predict_lognormal_bounds(n, s)?;
                vec![b.lower, b.upper]
            }
            WeightDistribution::ParetoPowerLaw { .. } => {
                return Err(invalid("dist", "no closed-form prediction for the power law"))
            }
        };
        let leading = self.table_leading(n, s)?;
        for p in &mut out {
            p.leading_term = leading;
            p.note = format!("table {}: {}", self.table, p.note);
        }
        Ok(out)
    }
}
