//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Used by the confluent hypergeometric function and by nothing on the
//! estimator hot paths.

use crate::error::{Result, SblError};
use crate::scalar::Real;

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

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_err: T,
    pub intervals: usize,
}

/// One 15-point Kronrod panel with the embedded 7-point Gauss error estimate.
fn kronrod<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let fc = f(c);
    let mut rk = fc * T::lit(WGK[7]);
    let mut rg = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let pair = f(c - dx) + f(c + dx);
        rk = rk + pair * T::lit(WGK[j]);
        if j % 2 == 1 {
            rg = rg + pair * T::lit(WG[j / 2]);
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

/// Integrates `f` over the finite interval `[a, b]`.
///
/// Subdivides the panel with the largest error estimate until the total
/// estimate is below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    abs_tol: T,
    rel_tol: T,
) -> Result<QuadResult<T>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(SblError::Domain("integration limits must be finite".into()));
    }
    if a == b {
        return Ok(QuadResult {
            value: T::zero(),
            abs_err: T::zero(),
            intervals: 0,
        });
    }
    let (v, e) = kronrod(&mut f, a, b);
    let mut panels = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    let floor = T::epsilon() * T::lit(50.0);
    loop {
        if !total.is_finite() {
            return Err(SblError::Numerical("non-finite integrand".into()));
        }
        let target = abs_tol.max(rel_tol * total.abs());
        if err <= target || panels.len() >= MAX_INTERVALS {
            break;
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, p)| {
                if p.3 > acc.1 {
                    (i, p.3)
                } else {
                    acc
                }
            });
        let (pa, pb, pv, pe) = panels.swap_remove(worst);
        let mid = (pa + pb) * T::lit(0.5);
        if (pb - pa).abs() <= floor * (pa.abs() + pb.abs()) {
            // cannot split further; keep the panel and stop refining it
            panels.push((pa, pb, pv, T::zero()));
            err = err - pe;
            continue;
        }
        let (lv, le) = kronrod(&mut f, pa, mid);
        let (rv, re) = kronrod(&mut f, mid, pb);
        total = total - pv + lv + rv;
        err = err - pe + le + re;
        panels.push((pa, mid, lv, le));
        panels.push((mid, pb, rv, re));
    }
    // resum to shed accumulated cancellation in the running totals
    let value = panels.iter().fold(T::zero(), |s, p| s + p.2);
    let abs_err = panels.iter().fold(T::zero(), |s, p| s + p.3);
    Ok(QuadResult {
        value,
        abs_err,
        intervals: panels.len(),
    })
}

/// Integrates `f` over `[a, ∞)` through the map `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    abs_tol: T,
    rel_tol: T,
) -> Result<QuadResult<T>> {
    let one = T::one();
    integrate(
        |t: T| {
            let w = one - t;
            let y = f(a + t / w);
            if y == T::zero() {
                y
            } else {
                y / (w * w)
            }
        },
        T::zero(),
        one,
        abs_tol,
        rel_tol,
    )
}
