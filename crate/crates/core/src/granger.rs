//! Pairwise Granger causality with one lag.
//!
//! Restricted model: `y_{n+1} = c + α·y_n + ε`.
//! Full model:       `y_{n+1} = γ + α·y_n + β·x_n + η`.
//! Both include an intercept, so the models differ only by β and the F-test
//! has (1, N - 3) degrees of freedom.
//!
//! The regressions are solved on centered cross-products of the sample
//! (intercept eliminated exactly by centering, the remaining 1- or 2-column
//! systems solved through the Frisch-Waugh partialling). This keeps the
//! all-pairs sweeps single-pass; [`crate::ols`] provides the QR route used to
//! cross-check it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asset::AssetId;
use crate::moments::SampleMoments;
use crate::scalar::Real;
use crate::scenario::{PairedSample, ScenarioId};
use crate::special::f_upper_tail;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrangerError {
    #[error("insufficient sample: n = {n}, need {required}")]
    Insufficient { n: usize, required: usize },
    #[error("design is rank deficient (condition estimate {condition:e})")]
    RankDeficient { condition: f64 },
    #[error("F-test needs N > p2 (N = {n}, p2 = {p2})")]
    DegreesOfFreedom { n: usize, p2: usize },
    #[error("F-test needs S1 >= S2 >= 0 (S1 = {s1}, S2 = {s2})")]
    NotNested { s1: f64, s2: f64 },
    #[error("Granger sweeps run on s3 or s4 samples, not {0}")]
    Scenario(ScenarioId),
    #[error("regression depth {0} is not supported (only 1)")]
    Depth(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrangerOptions {
    pub min_samples: usize,
    /// Largest acceptable condition estimate of the standardized design.
    pub max_condition: f64,
    /// Number of past steps of each variable. Only 1 is implemented.
    pub depth: usize,
}

impl Default for GrangerOptions {
    fn default() -> Self {
        GrangerOptions { min_samples: 100, max_condition: crate::ols::DEFAULT_MAX_CONDITION, depth: 1 }
    }
}

impl GrangerOptions {
    fn check(&self, n: usize) -> Result<(), GrangerError> {
        if self.depth != 1 {
            return Err(GrangerError::Depth(self.depth));
        }
        let required = self.min_samples.max(4);
        if n < required {
            return Err(GrangerError::Insufficient { n, required });
        }
        Ok(())
    }
}

/// Restricted-model fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestrictedFit<T> {
    pub intercept: T,
    pub alpha: T,
    /// Residual sum of squares S₁.
    pub rss: T,
    pub params: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrangerResult<T> {
    pub leader: AssetId,
    pub lagger: AssetId,
    pub scenario: ScenarioId,
    pub n: usize,
    /// Self coefficient α̂ on the lagger's own past return.
    pub alpha_hat: T,
    /// Cross coefficient β̂ on the leader's past return.
    pub beta_hat: T,
    /// Intercept γ̂.
    pub gamma_hat: T,
    pub se_beta: T,
    /// S₀: variance of the dependent variable.
    pub s0: T,
    /// S: mean squared residual of the full model.
    pub s: T,
    /// Residual sums of squares S₁ (restricted) and S₂ (full).
    pub rss_restricted: T,
    pub rss_full: T,
    pub r2: T,
    pub f_stat: T,
    pub p_value: T,
    pub perfect_fit: bool,
}

impl<T: Real> GrangerResult<T> {
    pub fn t_beta(&self) -> T {
        self.beta_hat / self.se_beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FTest<T> {
    pub f_stat: T,
    pub p_value: T,
    pub perfect_fit: bool,
}

/// Nested-model F-test: `((S1-S2)/(p2-p1)) / (S2/(N-p2))` against F(p2-p1, N-p2).
pub fn f_test<T: Real>(s1: T, s2: T, p1: usize, p2: usize, n: usize) -> Result<FTest<T>, GrangerError> {
    if n <= p2 || p2 <= p1 {
        return Err(GrangerError::DegreesOfFreedom { n, p2 });
    }
    if !(s2 >= T::zero() && s1 >= s2) {
        return Err(GrangerError::NotNested { s1: s1.to_f64_lossy(), s2: s2.to_f64_lossy() });
    }
    if s2 == T::zero() {
        let f_stat = if s1 > T::zero() { T::infinity() } else { T::zero() };
        return Ok(FTest { f_stat, p_value: T::zero(), perfect_fit: true });
    }
    let d1 = T::from_usize_lossy(p2 - p1);
    let d2 = T::from_usize_lossy(n - p2);
    let f_stat = ((s1 - s2) / d1) / (s2 / d2);
    let p_value = f_upper_tail(f_stat, d1, d2).unwrap_or(T::nan());
    Ok(FTest { f_stat, p_value, perfect_fit: false })
}

fn restricted_from_moments<T: Real>(m: &SampleMoments<T>) -> Result<RestrictedFit<T>, GrangerError> {
    if m.constant_y || !(m.syy > T::zero()) {
        return Err(GrangerError::RankDeficient { condition: f64::INFINITY });
    }
    let alpha = m.syn / m.syy;
    let rss = (m.snn - alpha * m.syn).max(T::zero());
    Ok(RestrictedFit { intercept: m.mean_yn - alpha * m.mean_y, alpha, rss, params: 2, n: m.n })
}

/// OLS of `y_next` on `(1, y)`.
pub fn fit_restricted<T: Real>(sample: &PairedSample<T>, options: &GrangerOptions) -> Result<RestrictedFit<T>, GrangerError> {
    options.check(sample.n())?;
    restricted_from_moments(&SampleMoments::from_triples(&sample.triples))
}

/// OLS of `y_next` on `(1, y, x)` plus the F-test against the restricted fit.
pub fn fit_full<T: Real>(sample: &PairedSample<T>, options: &GrangerOptions) -> Result<GrangerResult<T>, GrangerError> {
    options.check(sample.n())?;
    full_from_moments(sample, &SampleMoments::from_triples(&sample.triples), options)
}

pub(crate) fn full_from_moments<T: Real>(
    sample: &PairedSample<T>,
    m: &SampleMoments<T>,
    options: &GrangerOptions,
) -> Result<GrangerResult<T>, GrangerError> {
    let restricted = restricted_from_moments(m)?;
    if m.constant_x || !(m.sxx > T::zero()) {
        return Err(GrangerError::RankDeficient { condition: f64::INFINITY });
    }
    let r0 = m.rho_contemporaneous().abs();
    let condition = (T::one() + r0) / (T::one() - r0);
    if !(condition <= T::lit(options.max_condition)) {
        return Err(GrangerError::RankDeficient { condition: condition.to_f64_lossy() });
    }
    // x partialled on y
    let sxx_y = m.sxx - m.sxy * m.sxy / m.syy;
    let sxn_y = m.sxn - m.sxy * m.syn / m.syy;
    let beta = sxn_y / sxx_y;
    let alpha = (m.syn - beta * m.sxy) / m.syy;
    let gamma = m.mean_yn - alpha * m.mean_y - beta * m.mean_x;
    let explained = sxn_y * sxn_y / sxx_y;
    let rss_full = (restricted.rss - explained).max(T::zero());
    let ft = f_test(restricted.rss, rss_full, 2, 3, m.n)?;
    let nf = T::from_usize_lossy(m.n);
    let s0 = m.snn / nf;
    let s = rss_full / nf;
    let sigma2 = rss_full / T::from_usize_lossy(m.n - 3);
    Ok(GrangerResult {
        leader: sample.leader,
        lagger: sample.lagger,
        scenario: sample.scenario,
        n: m.n,
        alpha_hat: alpha,
        beta_hat: beta,
        gamma_hat: gamma,
        se_beta: (sigma2 / sxx_y).sqrt(),
        s0,
        s,
        rss_restricted: restricted.rss,
        rss_full,
        r2: T::one() - s / s0,
        f_stat: ft.f_stat,
        p_value: ft.p_value,
        perfect_fit: ft.perfect_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::{Grid, Month};
    use crate::scenario::Triple;

    fn sample(triples: Vec<Triple<f64>>) -> PairedSample<f64> {
        let g = Grid::month(Month::new(2016, 1).unwrap());
        PairedSample::from_triples("EUR/USD".parse().unwrap(), "USD/JPY".parse().unwrap(), ScenarioId::S3, g, triples)
    }

    fn wiggle(k: usize, a: f64) -> f64 {
        ((k as f64) * a).sin() + 0.01
    }

    fn opts() -> GrangerOptions {
        GrangerOptions { min_samples: 4, ..GrangerOptions::default() }
    }

    #[test]
    fn perfect_restricted_fit() {
        let t = (0..200).map(|k| Triple { x: wiggle(k, 1.1), y: wiggle(k, 0.3), y_next: 0.7 * wiggle(k, 0.3) }).collect();
        let r = fit_restricted(&sample(t), &opts()).unwrap();
        assert!(r.rss < 1e-24);
        assert!((r.alpha - 0.7).abs() < 1e-13);
        assert_eq!(r.params, 2);
    }

    #[test]
    fn constant_lagger_is_rank_deficient() {
        let t = (0..200).map(|k| Triple { x: wiggle(k, 1.1), y: 0.5, y_next: wiggle(k, 0.3) }).collect();
        assert!(matches!(fit_restricted(&sample(t), &opts()), Err(GrangerError::RankDeficient { .. })));
    }

    #[test]
    fn collinear_regressors_are_rank_deficient() {
        let t = (0..200).map(|k| Triple { x: wiggle(k, 0.3), y: wiggle(k, 0.3), y_next: wiggle(k, 1.7) }).collect();
        assert!(matches!(fit_full(&sample(t), &opts()), Err(GrangerError::RankDeficient { .. })));
    }

    #[test]
    fn f_test_edges() {
        let eq = f_test(2.0f64, 2.0, 2, 3, 50).unwrap();
        assert_eq!(eq.f_stat, 0.0);
        assert_eq!(eq.p_value, 1.0);
        let a = f_test(3.0f64, 2.0, 2, 3, 50).unwrap();
        let b = f_test(6.0f64, 4.0, 2, 3, 50).unwrap();
        assert_eq!(a.f_stat, b.f_stat);
        let perfect = f_test(3.0f64, 0.0, 2, 3, 50).unwrap();
        assert!(perfect.perfect_fit);
        assert_eq!(perfect.p_value, 0.0);
        assert!(matches!(f_test(3.0f64, 2.0, 2, 3, 3), Err(GrangerError::DegreesOfFreedom { .. })));
        assert!(matches!(f_test(1.0f64, 2.0, 2, 3, 30), Err(GrangerError::NotNested { .. })));
    }

    #[test]
    fn depth_other_than_one_rejected() {
        let t = (0..200).map(|k| Triple { x: wiggle(k, 1.1), y: wiggle(k, 0.3), y_next: wiggle(k, 2.3) }).collect();
        let o = GrangerOptions { depth: 2, ..opts() };
        assert_eq!(fit_full(&sample(t), &o), Err(GrangerError::Depth(2)));
    }

    #[test]
    fn r2_reproducible_from_fields() {
        let t = (0..300)
            .map(|k| Triple { x: wiggle(k, 1.1), y: wiggle(k, 0.3), y_next: 0.2 * wiggle(k, 1.1) + wiggle(k, 2.9) })
            .collect();
        let g = fit_full(&sample(t), &opts()).unwrap();
        assert_eq!(g.r2, 1.0 - g.s / g.s0);
        assert!(g.rss_full <= g.rss_restricted);
        assert!(g.f_stat >= 0.0);
        assert!((g.t_beta().powi(2) - g.f_stat).abs() <= 1e-8 * g.f_stat.max(1.0));
    }
}
