//! Per-component stationary-point analysis.
//!
//! With all other components fixed, the log-objective as a function of one
//! variance `γ ≥ 0` is
//!
//! `ℓ(γ) = -ρ ln(1 + γs) + ρ|q|² γ / (1 + γs) + (ε - 1) ln γ - ηγ`,
//!
//! and `γ (1 + γs)² ℓ'(γ)` is the cubic `f(γ) = c3 γ³ + c2 γ² + c1 γ + c0`.
//! For `ε < 1`, `f` has zero or two positive roots and the larger one is the
//! only local maximum; for `1 < ε ≤ 1 + ρ` there is exactly one positive root.


use crate::error::{domain, Result, SblError};
use crate::scalar::{FieldKind, Real};

/// `s = h^H C_{-l}^{-1} h` and `|q|²` with `q = h^H C_{-l}^{-1} y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityFactors<T> {
    pub s: T,
    pub q2: T,
}

/// Geometry of the stationarity cubic.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicAnalysis<T> {
    /// `[c0, c1, c2, c3]`
    pub coeffs: [T; 4],
    /// Roots of `f'`, the points where the parabola `f'` crosses zero.
    pub parabola_roots: Option<(T, T)>,
    /// Discriminant `c2² - 3 c3 c1` of `f'`.
    pub d: T,
    /// `(ρs + 2η)² + 4η(ρ|q|² - ρs - η)`, the discriminant of the `ε = 1` quadratic.
    pub delta: T,
    /// Positive simple (odd-multiplicity) roots, ascending.
    pub positive_roots: Vec<T>,
    /// A positive tangent (double) root, if `f` touches zero there.
    pub double_root: Option<T>,
}

impl<T: Real> CubicAnalysis<T> {
    /// Number of positive roots counted with multiplicity two for tangencies.
    pub fn multiplicity_count(&self) -> usize {
        self.positive_roots.len() + 2 * usize::from(self.double_root.is_some())
    }

    /// Largest positive root where `f` goes from positive to negative.
    pub fn local_max(&self) -> Option<T> {
        self.positive_roots
            .iter()
            .rev()
            .copied()
            .find(|&r| {
                let dr = r * T::lit(1e-7);
                eval(&self.coeffs, r - dr) > T::zero() || eval(&self.coeffs, r + dr) < T::zero()
            })
            .or_else(|| self.positive_roots.last().copied())
    }

    /// `1e-8 (1 + ‖c‖_∞ γ³)`, the certificate a returned root must meet.
    pub fn residual_scale(&self, gamma: T) -> T {
        let cmax = self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.abs()));
        T::lit(1e-8) * (T::one() + cmax * gamma * gamma * gamma)
    }

    /// [`residual_scale`](Self::residual_scale) widened to the rounding
    /// error of evaluating `f`, which dominates in single precision.
    pub fn residual_tolerance(&self, gamma: T) -> T {
        self.residual_scale(gamma)
            .max(T::lit(256.0) * T::epsilon() * magnitude(&self.coeffs, gamma))
    }

    pub fn residual(&self, gamma: T) -> T {
        eval(&self.coeffs, gamma)
    }
}

fn eval<T: Real>(c: &[T; 4], x: T) -> T {
    ((c[3] * x + c[2]) * x + c[1]) * x + c[0]
}

fn eval_deriv<T: Real>(c: &[T; 4], x: T) -> T {
    (T::lit(3.0) * c[3] * x + T::lit(2.0) * c[2]) * x + c[1]
}

/// Sum of absolute term magnitudes, the rounding scale of `f(x)`.
fn magnitude<T: Real>(c: &[T; 4], x: T) -> T {
    ((c[3].abs() * x + c[2].abs()) * x + c[1].abs()) * x + c[0].abs()
}

pub fn cubic_coefficients<T: Real>(sf: SparsityFactors<T>, eta: T, epsilon: T, rho: T) -> [T; 4] {
    let (s, q2) = (sf.s, sf.q2);
    let one = T::one();
    let two = T::lit(2.0);
    [
        epsilon - one,
        two * (epsilon - one) * s - s * rho + rho * q2 - eta,
        -((one - epsilon + rho) * s * s + two * eta * s),
        -eta * s * s,
    ]
}

/// Real roots of `c2 x² + c1 x + c0` (`c2 ≠ 0`), ascending.
fn quadratic_roots<T: Real>(c0: T, c1: T, c2: T) -> Vec<T> {
    let disc = c1 * c1 - T::lit(4.0) * c2 * c0;
    if disc < T::zero() {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let t = -(c1 + c1.signum() * sq) / T::lit(2.0);
    let mut r = if t == T::zero() {
        vec![T::zero(), T::zero()]
    } else {
        vec![t / c2, c0 / t]
    };
    r.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    r
}

/// Real roots of the cubic in closed form (trigonometric or Cardano branch).
fn closed_form_roots<T: Real>(c: &[T; 4]) -> Vec<T> {
    if c[3] == T::zero() {
        if c[2] == T::zero() {
            return if c[1] == T::zero() { Vec::new() } else { vec![-c[0] / c[1]] };
        }
        return quadratic_roots(c[0], c[1], c[2]);
    }
    let three = T::lit(3.0);
    let two = T::lit(2.0);
    let a = c[2] / c[3];
    let b = c[1] / c[3];
    let cc = c[0] / c[3];
    let shift = a / three;
    let p = b - a * a / three;
    let q = two * a * a * a / T::lit(27.0) - a * b / three + cc;
    let disc = (q / two).powi(2) + (p / three).powi(3);
    if disc > T::zero() {
        let sq = disc.sqrt();
        let u = (-q / two + sq).cbrt();
        let v = (-q / two - sq).cbrt();
        vec![u + v - shift]
    } else {
        let r = (-p / three).sqrt();
        if r == T::zero() {
            return vec![-shift];
        }
        let cos_phi = ((-q / two) / (r * r * r)).max(-T::one()).min(T::one());
        let phi = cos_phi.acos();
        let mut roots: Vec<T> = (0..3)
            .map(|k| {
                two * r * (phi / three - two * T::PI() * T::lit(k as f64) / three).cos() - shift
            })
            .collect();
        roots.sort_by(|x, y| x.partial_cmp(y).expect("finite roots"));
        roots
    }
}

/// Root of `f` on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs.
///
/// Newton from `seed`, falling back to bisection (geometric when the bracket
/// spans orders of magnitude) whenever a step leaves the bracket.
fn bracketed_root<T: Real>(c: &[T; 4], mut lo: T, mut hi: T, seed: Option<T>) -> T {
    let mut flo = eval(c, lo);
    let two = T::lit(2.0);
    let mid = |lo: T, hi: T| {
        if lo > T::zero() && hi > T::lit(4.0) * lo {
            (lo * hi).sqrt()
        } else {
            (lo + hi) / two
        }
    };
    let mut x = match seed {
        Some(s) if s > lo && s < hi => s,
        _ => mid(lo, hi),
    };
    for _ in 0..400 {
        let fx = eval(c, x);
        if fx == T::zero() {
            return x;
        }
        if (fx > T::zero()) == (flo > T::zero()) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let d = eval_deriv(c, x);
        let newton = x - fx / d;
        let next = if d != T::zero() && newton > lo && newton < hi {
            newton
        } else {
            mid(lo, hi)
        };
        if (next - x).abs() <= T::lit(4.0) * T::epsilon() * x.abs() || hi - lo <= T::epsilon() * hi
        {
            return next;
        }
        x = next;
    }
    x
}

/// Locates all positive roots of the cubic for the given statistics.
pub fn analyze<T: Real>(
    sf: SparsityFactors<T>,
    eta: T,
    epsilon: T,
    field: FieldKind,
) -> Result<CubicAnalysis<T>> {
    check(sf, eta, epsilon)?;
    let rho = T::lit(field.rho());
    let c = cubic_coefficients(sf, eta, epsilon, rho);
    let three = T::lit(3.0);
    let zero = T::zero();

    let d = c[2] * c[2] - three * c[3] * c[1];
    let parabola_roots = if c[3] != zero {
        if d >= zero {
            let sq = d.sqrt();
            let t = -(c[2] + c[2].signum() * sq);
            let (r1, r2) = if t == zero {
                (zero, zero)
            } else {
                (t / (three * c[3]), c[1] / t)
            };
            Some((r1.min(r2), r1.max(r2)))
        } else {
            None
        }
    } else if c[2] != zero {
        let r = -c[1] / (T::lit(2.0) * c[2]);
        Some((r, r))
    } else {
        None
    };

    let two = T::lit(2.0);
    let ps = rho * sf.s + two * eta;
    let delta = ps * ps + T::lit(4.0) * eta * (rho * sf.q2 - rho * sf.s - eta);

    // Cauchy bound on root magnitudes
    let lead = c.iter().rposition(|v| *v != zero);
    let mut positive_roots = Vec::new();
    let mut double_root = None;
    if let Some(n) = lead.filter(|&n| n > 0) {
        let bound = T::one() + c[..n].iter().fold(zero, |m, v| m.max((*v / c[n]).abs()));
        let mut breaks = vec![zero];
        if let Some((r1, r2)) = parabola_roots {
            for r in [r1, r2] {
                if r > zero && r < bound && breaks.last().is_none_or(|&b| r > b) {
                    breaks.push(r);
                }
            }
        }
        breaks.push(bound);
        let seeds = closed_form_roots(&c);
        let mut values: Vec<T> = breaks.iter().map(|&x| eval(&c, x)).collect();
        for k in 1..breaks.len() - 1 {
            let x = breaks[k];
            if values[k].abs() <= T::lit(64.0) * T::epsilon() * magnitude(&c, x) {
                values[k] = zero;
                double_root = Some(x);
            }
        }
        for k in 0..breaks.len() - 1 {
            let (a, b) = (breaks[k], breaks[k + 1]);
            let (fa, fb) = (values[k], values[k + 1]);
            if fa != zero && fb != zero && (fa > zero) != (fb > zero) {
                let seed = seeds.iter().copied().find(|&r| r > a && r < b);
                positive_roots.push(bracketed_root(&c, a, b, seed));
            }
        }
    }
    Ok(CubicAnalysis {
        coeffs: c,
        parabola_roots,
        d,
        delta,
        positive_roots,
        double_root,
    })
}

fn check<T: Real>(sf: SparsityFactors<T>, eta: T, epsilon: T) -> Result<()> {
    if !(sf.s > T::zero() && sf.s.is_finite()) {
        return Err(domain(format!("sparsity factor must be positive, got {}", sf.s)));
    }
    if !(sf.q2 >= T::zero() && sf.q2.is_finite()) {
        return Err(domain(format!("quality factor must be finite and >= 0, got {}", sf.q2)));
    }
    if !(eta >= T::zero() && eta.is_finite() && epsilon >= T::zero() && epsilon.is_finite()) {
        return Err(domain("eta and epsilon must be finite and >= 0"));
    }
    Ok(())
}

/// Maximizer of `ℓ` for `ε = 1`: `2(ρ|q|² - ρs - η) / (s(ρs + 2η + √Δ))`,
/// or 0 when `|q|² - s ≤ η/ρ`.
pub fn gamma_fastlaplace<T: Real>(sf: SparsityFactors<T>, eta: T, field: FieldKind) -> T {
    let rho = T::lit(field.rho());
    let two = T::lit(2.0);
    let num = rho * sf.q2 - rho * sf.s - eta;
    if num <= T::zero() {
        return T::zero();
    }
    let b = rho * sf.s + two * eta;
    let delta = b * b + T::lit(4.0) * eta * num;
    two * num / (sf.s * (b + delta.sqrt()))
}

/// Maximizer of the marginal likelihood in `γ`: `(|q|² - s) / s²`, or 0.
pub fn gamma_fastrvm<T: Real>(sf: SparsityFactors<T>) -> T {
    if sf.q2 > sf.s {
        (sf.q2 - sf.s) / (sf.s * sf.s)
    } else {
        T::zero()
    }
}

/// Value of `γ` that the fast scheme assigns to a component: the local
/// maximizer of `ℓ`, or 0 (prune) when there is none or it does not beat
/// the pruned score `ℓ = 0`.
pub fn gamma_stationary<T: Real>(
    sf: SparsityFactors<T>,
    eta: T,
    epsilon: T,
    field: FieldKind,
) -> Result<T> {
    let rho = T::lit(field.rho());
    if epsilon > T::one() + rho {
        return Err(SblError::UnsupportedRegime {
            epsilon: epsilon.to_f64_lossy(),
            limit: (T::one() + rho).to_f64_lossy(),
        });
    }
    check(sf, eta, epsilon)?;
    if epsilon == T::one() {
        return Ok(gamma_fastlaplace(sf, eta, field));
    }
    let an = analyze(sf, eta, epsilon, field)?;
    let Some(root) = an.local_max() else {
        if epsilon > T::one() {
            return Err(SblError::Numerical(format!(
                "objective is unbounded in gamma (epsilon = {epsilon}, eta = {eta})"
            )));
        }
        return Ok(T::zero());
    };
    let res = an.residual(root);
    if !(res.abs() <= an.residual_tolerance(root)) {
        return Err(SblError::Numerical(format!(
            "stationary point failed its residual check: f({root}) = {res}"
        )));
    }
    if epsilon < T::one() && objective_l(root, sf, eta, epsilon, field)? <= T::zero() {
        return Ok(T::zero());
    }
    Ok(root)
}

/// `ℓ(γ)`; `γ = 0` returns 0, the score of a pruned component.
pub fn objective_l<T: Real>(
    gamma: T,
    sf: SparsityFactors<T>,
    eta: T,
    epsilon: T,
    field: FieldKind,
) -> Result<T> {
    if !(gamma >= T::zero() && gamma.is_finite()) {
        return Err(domain(format!("gamma must be finite and >= 0, got {gamma}")));
    }
    if gamma == T::zero() {
        return Ok(T::zero());
    }
    let rho = T::lit(field.rho());
    let gs = gamma * sf.s;
    let v = -rho * gs.ln_1p() + rho * sf.q2 * gamma / (T::one() + gs)
        + (epsilon - T::one()) * gamma.ln()
        - eta * gamma;
    if !v.is_finite() {
        return Err(domain(format!("objective is not finite at gamma = {gamma}")));
    }
    Ok(v)
}

/// `dℓ/dγ` for `γ > 0`.
pub fn objective_l_derivative<T: Real>(
    gamma: T,
    sf: SparsityFactors<T>,
    eta: T,
    epsilon: T,
    field: FieldKind,
) -> T {
    let rho = T::lit(field.rho());
    let w = T::one() + gamma * sf.s;
    -rho * sf.s / w + rho * sf.q2 / (w * w) + (epsilon - T::one()) / gamma - eta
}

/// `ℓ(γ_new) - ℓ(γ_old)`, with the pruned score 0 at `γ = 0`.
pub fn delta_objective<T: Real>(
    gamma_old: T,
    gamma_new: T,
    sf: SparsityFactors<T>,
    eta: T,
    epsilon: T,
    field: FieldKind,
) -> Result<T> {
    if gamma_old == gamma_new {
        return Ok(T::zero());
    }
    Ok(objective_l(gamma_new, sf, eta, epsilon, field)?
        - objective_l(gamma_old, sf, eta, epsilon, field)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf(s: f64, q2: f64) -> SparsityFactors<f64> {
        SparsityFactors { s, q2 }
    }

    #[test]
    fn closed_forms() {
        let g = gamma_stationary(sf(1.0, 4.0), 0.0, 1.0, FieldKind::Complex).unwrap();
        assert!((g - 3.0).abs() < 1e-15);
        let g = gamma_stationary(sf(1.0, 4.0), 0.5, 1.0, FieldKind::Real).unwrap();
        assert!((g - 0.561_552_812_808_830_3).abs() < 1e-12, "{g}");
        assert_eq!(gamma_stationary(sf(1.0, 1.2), 1.0, 1.0, FieldKind::Complex).unwrap(), 0.0);
    }

    #[test]
    fn objective_examples() {
        let v = objective_l(3.0, sf(1.0, 4.0), 0.0, 1.0, FieldKind::Complex).unwrap();
        assert!((v - (3.0 - 4f64.ln())).abs() < 1e-14);
        assert_eq!(objective_l(0.0, sf(1.0, 4.0), 0.0, 1.0, FieldKind::Complex).unwrap(), 0.0);
        let d = delta_objective(0.0, 3.0, sf(1.0, 4.0), 0.0, 1.0, FieldKind::Complex).unwrap();
        let back = delta_objective(3.0, 0.0, sf(1.0, 4.0), 0.0, 1.0, FieldKind::Complex).unwrap();
        assert!((d - 1.613_705_638_880_109_4).abs() < 1e-12);
        assert_eq!(d, -back);
    }

    #[test]
    fn closed_form_cubic_roots() {
        // (x - 1)(x - 2)(x + 3) = x³ - 7x + 6
        let r = closed_form_roots(&[6.0f64, -7.0, 0.0, 1.0]);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([-3.0, 1.0, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        // x³ + x + 1: one real root
        let r = closed_form_roots(&[1.0f64, 1.0, 0.0, 1.0]);
        assert_eq!(r.len(), 1);
        assert!(eval(&[1.0f64, 1.0, 0.0, 1.0], r[0]).abs() < 1e-12);
    }

    #[test]
    fn small_epsilon_example_is_a_local_max() {
        let (s, q2, eta, eps) = (0.8, 20.0, 1.0, 0.25);
        let g = gamma_stationary(sf(s, q2), eta, eps, FieldKind::Complex).unwrap();
        assert!((g - 3.418_948_6).abs() < 1e-6, "{g}");
        let l = |x: f64| objective_l(x, sf(s, q2), eta, eps, FieldKind::Complex).unwrap();
        assert!(l(g * 1.0001) < l(g) && l(g * 0.9999) < l(g));
        let an = analyze(sf(s, q2), eta, eps, FieldKind::Complex).unwrap();
        assert_eq!(an.multiplicity_count(), 2);
    }

    #[test]
    fn regime_limits() {
        assert!(matches!(
            gamma_stationary(sf(1.0, 2.0), 1.0, 2.5, FieldKind::Complex),
            Err(SblError::UnsupportedRegime { .. })
        ));
        assert!(gamma_stationary(sf(1.0, 2.0), 0.0, 2.0, FieldKind::Complex).is_err());
        assert!(gamma_stationary(sf(0.0, 2.0), 1.0, 0.5, FieldKind::Complex).is_err());
    }
}
