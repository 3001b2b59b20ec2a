//! Sufficient statistics of the sequential scheme with rank-one updates.

use num_traits::{Float, FloatConst, One, Zero};

use crate::error::{domain, Result, SblError};
use crate::estimator::{gaussian_posterior, log_evidence, Precomputed};
use crate::fast::cubic::SparsityFactors;
use crate::linalg::Mat;
use crate::model::Observation;
use crate::scalar::{Field, Real};

/// Structural changes (adds and deletes) between full recomputations.
pub const REFRESH_INTERVAL: usize = 50;

/// Posterior of the active weights plus `S_l = h_l^H C^{-1} h_l` and
/// `Q_l = h_l^H C^{-1} y` for every column, kept current by rank-one updates.
#[derive(Debug, Clone)]
pub struct FastState<S: Field> {
    pre: Precomputed<S>,
    lambda: S::Real,
    active: Vec<usize>,
    gamma: Vec<S::Real>,
    position: Vec<Option<usize>>,
    sigma: Mat<S>,
    mu: Vec<S>,
    big_s: Vec<S::Real>,
    big_q: Vec<S>,
    since_refresh: usize,
}

impl<S: Field> FastState<S> {
    /// Empty model: `C = λ^{-1} I`.
    pub fn new(obs: &Observation<S>, lambda: S::Real) -> Result<Self> {
        check_lambda(lambda)?;
        let pre = Precomputed::new(obs);
        let l = obs.l();
        let mut st = FastState {
            pre,
            lambda,
            active: Vec::new(),
            gamma: Vec::new(),
            position: vec![None; l],
            sigma: Mat::zeros(0, 0),
            mu: Vec::new(),
            big_s: vec![S::Real::zero(); l],
            big_q: vec![S::zero(); l],
            since_refresh: 0,
        };
        st.recompute()?;
        Ok(st)
    }

    /// State for a given active set, computed densely.
    pub fn with_active(
        obs: &Observation<S>,
        lambda: S::Real,
        active: &[usize],
        gamma: &[S::Real],
    ) -> Result<Self> {
        if active.len() != gamma.len() {
            return Err(SblError::Dimension("active set and gamma lengths differ".into()));
        }
        let mut st = Self::new(obs, lambda)?;
        for (&i, &g) in active.iter().zip(gamma) {
            st.check_new(i, g)?;
            st.position[i] = Some(st.active.len());
            st.active.push(i);
            st.gamma.push(g);
        }
        st.recompute()?;
        Ok(st)
    }

    pub fn lambda(&self) -> S::Real {
        self.lambda
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Variances aligned with [`active`](Self::active).
    pub fn gamma(&self) -> &[S::Real] {
        &self.gamma
    }

    pub fn gamma_of(&self, l: usize) -> Option<S::Real> {
        self.position[l].map(|k| self.gamma[k])
    }

    pub fn sigma(&self) -> &Mat<S> {
        &self.sigma
    }

    pub fn mu(&self) -> &[S] {
        &self.mu
    }

    pub fn big_s(&self) -> &[S::Real] {
        &self.big_s
    }

    pub fn big_q(&self) -> &[S] {
        &self.big_q
    }

    pub fn num_columns(&self) -> usize {
        self.position.len()
    }

    /// Statistics of column `l` with its own contribution removed from `C`.
    pub fn factors(&self, l: usize) -> SparsityFactors<S::Real> {
        let (s, q) = (self.big_s[l], self.big_q[l]);
        match self.position[l] {
            None => SparsityFactors { s, q2: q.abs_sq() },
            Some(k) => {
                let w = S::Real::one() - self.gamma[k] * s;
                SparsityFactors {
                    s: s / w,
                    q2: q.abs_sq() / (w * w),
                }
            }
        }
    }

    /// Replaces the noise precision and recomputes everything.
    pub fn set_lambda(&mut self, lambda: S::Real) -> Result<()> {
        check_lambda(lambda)?;
        self.lambda = lambda;
        self.recompute()
    }

    /// Dense recomputation of `Σ`, `μ`, `S` and `Q` from the active set.
    pub fn recompute(&mut self) -> Result<()> {
        let inv: Vec<S::Real> = self.gamma.iter().map(|g| g.recip()).collect();
        let post = gaussian_posterior(&self.pre, &self.active, &inv, self.lambda)?;
        self.sigma = post.sigma;
        self.mu = post.mu;
        let lam = self.lambda;
        let n = self.active.len();
        let mut v = vec![S::zero(); n];
        for l in 0..self.num_columns() {
            for (k, &a) in self.active.iter().enumerate() {
                v[k] = self.pre.gram[(a, l)];
            }
            let sv = self.sigma.mul_vec(&v);
            let vsv: S::Real = v.iter().zip(&sv).map(|(x, y)| (x.conj() * *y).re()).sum();
            let vmu: S = v.iter().zip(&self.mu).map(|(x, m)| x.conj() * *m).sum();
            self.big_s[l] = lam * self.pre.gram[(l, l)].re() - lam * lam * vsv;
            self.big_q[l] = (self.pre.hty[l] - vmu).scale(lam);
        }
        self.since_refresh = 0;
        Ok(())
    }

    fn check_new(&self, i: usize, gamma: S::Real) -> Result<()> {
        if i >= self.num_columns() {
            return Err(SblError::Dimension(format!("column {i} out of range")));
        }
        if self.position[i].is_some() {
            return Err(domain(format!("column {i} is already active")));
        }
        check_gamma(gamma)
    }

    /// `λ Σ_k G[m, a_k] x_k` for every column `m`.
    fn project(&self, x: &[S]) -> Vec<S> {
        let lam = self.lambda;
        (0..self.num_columns())
            .map(|m| {
                self.active
                    .iter()
                    .zip(x)
                    .map(|(&a, &xk)| self.pre.gram[(m, a)] * xk)
                    .sum::<S>()
                    .scale(lam)
            })
            .collect()
    }

    /// Adds column `i` with variance `gamma`.
    pub fn add(&mut self, i: usize, gamma: S::Real) -> Result<()> {
        self.check_new(i, gamma)?;
        let lam = self.lambda;
        let n = self.active.len();
        let gcol: Vec<S> = self.active.iter().map(|&a| self.pre.gram[(a, i)]).collect();
        let u: Vec<S> = self.sigma.mul_vec(&gcol).into_iter().map(|x| x.scale(lam)).collect();
        let sii = (gamma.recip() + self.big_s[i]).recip();
        let mui = self.big_q[i].scale(sii);
        let hu = self.project(&u);
        let e: Vec<S> = (0..self.num_columns())
            .map(|m| self.pre.gram[(m, i)].scale(lam) - hu[m])
            .collect();

        let mut sigma = Mat::zeros(n + 1, n + 1);
        for c in 0..n {
            for r in 0..n {
                sigma[(r, c)] = self.sigma[(r, c)] + (u[r] * u[c].conj()).scale(sii);
            }
            sigma[(c, n)] = -u[c].scale(sii);
            sigma[(n, c)] = -u[c].conj().scale(sii);
        }
        sigma[(n, n)] = S::from_real(sii);
        self.sigma = sigma;
        for (m, &uk) in self.mu.iter_mut().zip(&u) {
            *m -= mui * uk;
        }
        self.mu.push(mui);
        for m in 0..self.num_columns() {
            self.big_s[m] -= sii * e[m].abs_sq();
            self.big_q[m] -= mui * e[m];
        }
        self.position[i] = Some(n);
        self.active.push(i);
        self.gamma.push(gamma);
        self.after_structural_change()
    }

    /// Changes the variance of active column `i`.
    pub fn reestimate(&mut self, i: usize, gamma: S::Real) -> Result<()> {
        check_gamma(gamma)?;
        let k = self.position_of(i)?;
        let delta = gamma.recip() - self.gamma[k].recip();
        if delta != S::Real::zero() {
            let denom = self.sigma[(k, k)].re() + delta.recip();
            if denom == S::Real::zero() {
                return Err(SblError::Numerical("singular re-estimation update".into()));
            }
            self.downdate(k, denom.recip());
        }
        self.gamma[k] = gamma;
        self.check_health()
    }

    /// Removes active column `i`.
    pub fn delete(&mut self, i: usize) -> Result<()> {
        let k = self.position_of(i)?;
        let kappa = self.sigma[(k, k)].re().recip();
        self.downdate(k, kappa);
        let n = self.active.len();
        let keep: Vec<usize> = (0..n).filter(|&j| j != k).collect();
        self.sigma = self.sigma.select_square(&keep);
        self.mu.remove(k);
        self.gamma.remove(k);
        self.active.remove(k);
        self.position[i] = None;
        for (j, &a) in self.active.iter().enumerate().skip(k) {
            self.position[a] = Some(j);
        }
        self.after_structural_change()
    }

    fn position_of(&self, i: usize) -> Result<usize> {
        self.position
            .get(i)
            .copied()
            .flatten()
            .ok_or_else(|| domain(format!("column {i} is not active")))
    }

    /// `Σ -= κ Σ_k Σ_k^H` with the matching updates of `μ`, `S` and `Q`.
    fn downdate(&mut self, k: usize, kappa: S::Real) {
        let n = self.active.len();
        let sk: Vec<S> = self.sigma.col(k).to_vec();
        let muk = self.mu[k];
        let e = self.project(&sk);
        for c in 0..n {
            for r in 0..n {
                let v = self.sigma[(r, c)] - (sk[r] * sk[c].conj()).scale(kappa);
                self.sigma[(r, c)] = v;
            }
        }
        for (m, &s) in self.mu.iter_mut().zip(&sk) {
            *m -= (muk * s).scale(kappa);
        }
        for m in 0..self.num_columns() {
            self.big_s[m] += kappa * e[m].abs_sq();
            self.big_q[m] += (muk * e[m]).scale(kappa);
        }
    }

    fn after_structural_change(&mut self) -> Result<()> {
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_INTERVAL {
            return self.recompute();
        }
        self.check_health()
    }

    /// Falls back to a dense recomputation if the updates lost definiteness.
    fn check_health(&mut self) -> Result<()> {
        let ok = (0..self.active.len()).all(|k| {
            let d = self.sigma[(k, k)].re();
            d > S::Real::zero() && d.is_finite()
        }) && self.big_s.iter().all(|s| s.is_finite());
        if ok {
            Ok(())
        } else {
            self.recompute()
        }
    }

    /// `log N(y; 0, C)` computed densely.
    pub fn log_evidence(&self) -> Result<S::Real> {
        let inv: Vec<S::Real> = self.gamma.iter().map(|g| g.recip()).collect();
        let post = gaussian_posterior(&self.pre, &self.active, &inv, self.lambda)?;
        Ok(log_evidence(&self.pre, &self.active, &self.gamma, self.lambda, &post))
    }

    /// `‖y - H_a μ‖² + tr(H_a Σ H_a^H)`.
    pub fn expected_residual(&self) -> S::Real {
        self.pre.expected_residual(&self.active, &self.mu, &self.sigma)
    }

    pub(crate) fn m(&self) -> usize {
        self.pre.m
    }

    /// `log N(y; 0, λ^{-1} I)` for the empty model.
    pub fn empty_log_evidence(&self) -> S::Real {
        let rho = S::rho();
        let m = S::Real::lit(self.pre.m as f64);
        -rho * m * (S::Real::PI() / rho).ln() + rho * m * self.lambda.ln()
            - rho * self.lambda * self.pre.yy
    }
}

fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if lambda > T::zero() && lambda.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("noise precision must be positive, got {lambda}")))
    }
}

fn check_gamma<T: Real>(gamma: T) -> Result<()> {
    if gamma > T::zero() && gamma.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("active variances must be positive, got {gamma}")))
    }
}
