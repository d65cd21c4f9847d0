//! Globally adaptive Gauss-Kronrod (7/15) integration.

use super::{domain, NumericsError};
use crate::Scalar;

pub const DEFAULT_MAX_SUBDIVISIONS: usize = 2000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
    abs_value: T,
}

fn gk15<T: Scalar, G: FnMut(T) -> T>(g: &mut G, a: T, b: T) -> Result<Panel<T>, NumericsError> {
    let half = T::lit(0.5);
    let centre = half * (a + b);
    let radius = half * (b - a);
    let mut eval = |x: T| {
        let y = g(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(NumericsError::NonFinite { at: x.as_f64() })
        }
    };
    let fc = eval(centre)?;
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    let mut abs_value = fc.abs() * T::lit(WGK[7]);
    for j in 0..7 {
        let dx = radius * T::lit(XGK[j]);
        let f1 = eval(centre - dx)?;
        let f2 = eval(centre + dx)?;
        let w = T::lit(WGK[j]);
        kronrod = kronrod + w * (f1 + f2);
        abs_value = abs_value + w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let r = radius.abs();
    Ok(Panel { a, b, value: kronrod * radius, error: ((kronrod - gauss) * radius).abs(), abs_value: abs_value * r })
}

/// Integrates `g` over `[lo, hi]` to relative accuracy `tol`. `hi` may be
/// `+inf`, handled by the substitution `x = lo + t / (1 - t)`.
pub fn adaptive_quadrature<T, G>(g: G, lo: T, hi: T, tol: T) -> Result<T, NumericsError>
where
    T: Scalar,
    G: FnMut(T) -> T,
{
    adaptive_quadrature_with_limit(g, lo, hi, tol, DEFAULT_MAX_SUBDIVISIONS)
}

pub fn adaptive_quadrature_with_limit<T, G>(
    mut g: G,
    lo: T,
    hi: T,
    tol: T,
    max_subdivisions: usize,
) -> Result<T, NumericsError>
where
    T: Scalar,
    G: FnMut(T) -> T,
{
    if lo.is_nan() || lo.is_infinite() {
        return Err(domain("adaptive_quadrature", lo));
    }
    if hi.is_nan() || hi == T::neg_infinity() {
        return Err(domain("adaptive_quadrature", hi));
    }
    if !(tol > T::zero()) {
        return Err(domain("adaptive_quadrature", tol));
    }
    if hi.is_infinite() {
        let mapped = move |t: T| {
            let u = T::one() - t;
            let x = lo + t / u;
            let y = g(x);
            // Tails that underflow leave a harmless 0 * inf here.
            if y == T::zero() {
                T::zero()
            } else {
                y / (u * u)
            }
        };
        return integrate(mapped, T::zero(), T::one(), tol, max_subdivisions);
    }
    if hi < lo {
        return integrate(g, hi, lo, tol, max_subdivisions).map(|v| -v);
    }
    if hi == lo {
        return Ok(T::zero());
    }
    integrate(g, lo, hi, tol, max_subdivisions)
}

fn integrate<T, G>(mut g: G, lo: T, hi: T, tol: T, max_subdivisions: usize) -> Result<T, NumericsError>
where
    T: Scalar,
    G: FnMut(T) -> T,
{
    let mut panels = vec![gk15(&mut g, lo, hi)?];
    let roundoff = T::lit(50.0) * T::epsilon();
    loop {
        let total: T = panels.iter().fold(T::zero(), |s, p| s + p.value);
        let error: T = panels.iter().fold(T::zero(), |s, p| s + p.error);
        let scale: T = panels.iter().fold(T::zero(), |s, p| s + p.abs_value);
        if error <= tol * total.abs() || error <= roundoff * scale {
            return Ok(total);
        }
        if panels.len() >= max_subdivisions {
            return Err(NumericsError::NonConvergence { routine: "adaptive_quadrature", limit: max_subdivisions });
        }
        let (worst, _) =
            panels.iter().enumerate().fold(
                (0, T::neg_infinity()),
                |best, (i, p)| {
                    if p.error > best.1 {
                        (i, p.error)
                    } else {
                        best
                    }
                },
            );
        let p = panels.swap_remove(worst);
        let mid = T::lit(0.5) * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            // The panel cannot be split further in this precision.
            return Err(NumericsError::NonConvergence { routine: "adaptive_quadrature", limit: panels.len() + 1 });
        }
        panels.push(gk15(&mut g, p.a, mid)?);
        panels.push(gk15(&mut g, mid, p.b)?);
    }
}
