//! Lagged correlation and lagged partial correlation.
//!
//! For leader `i` and lagger `j` the lagged correlation is the Pearson
//! correlation of `(r_i(t_n), r_j(t_n + τ))` over a filtered sample, with the
//! means taken inside that sample. The partial version removes the lagger's
//! contemporaneous return `r_j(t_n)`; it is computed either from the three
//! pairwise correlations (closed form) or as the correlation of regression
//! residuals. On one sample the two agree up to rounding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asset::AssetId;
use crate::moments::SampleMoments;
use crate::ols::{self, OlsError};
use crate::returns::ReturnSeries;
use crate::scalar::Real;
use crate::scenario::{self, PairedSample, ScenarioError, ScenarioId};
use crate::special::{normal_two_sided, t_two_sided};

/// Residual (or column) sum of squares below this fraction of the total is
/// treated as exactly zero.
const DEGENERATE_RELATIVE: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrError {
    #[error("insufficient sample: n = {n}, need {required}")]
    Insufficient { n: usize, required: usize },
    #[error("degenerate sample: {0}")]
    Degenerate(&'static str),
    #[error("partial correlation is singular: |ρ| = 1 in the conditioning term")]
    Singular,
    #[error("correlations ({0}, {1}, {2}) are mutually inconsistent")]
    Inconsistent(f64, f64, f64),
    #[error("{0} samples are not valid for this estimator")]
    Scenario(ScenarioId),
    #[error(transparent)]
    Extract(#[from] ScenarioError),
    #[error(transparent)]
    Regression(#[from] OlsError),
}

/// How a correlation coefficient is turned into a two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrTest {
    /// `t = ρ√(df/(1-ρ²))` against Student's t with `df = n - 2 - k`.
    #[default]
    Student,
    /// `z = atanh(ρ)√(n - 3 - k)` against the standard normal.
    Fisher,
}

impl CorrTest {
    /// p-value for a correlation estimated from `n` points with `controls`
    /// conditioning variables.
    pub fn p_value<T: Real>(self, rho: T, n: usize, controls: usize) -> T {
        let one = T::one();
        if rho.abs() >= one {
            return T::zero();
        }
        let p = match self {
            CorrTest::Student => {
                let df = T::from_usize_lossy(n.saturating_sub(2 + controls).max(1));
                let t = rho * (df / (one - rho * rho)).sqrt();
                t_two_sided(t, df)
            }
            CorrTest::Fisher => {
                let m = T::from_usize_lossy(n.saturating_sub(3 + controls).max(1));
                normal_two_sided(rho.atanh() * m.sqrt())
            }
        };
        p.unwrap_or(T::nan())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrOptions {
    pub min_samples: usize,
    pub test: CorrTest,
}

impl Default for CorrOptions {
    fn default() -> Self {
        CorrOptions { min_samples: 100, test: CorrTest::Student }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaggedCorr<T> {
    pub leader: AssetId,
    pub lagger: AssetId,
    pub tau: usize,
    pub rho: T,
    pub n: usize,
    pub p_value: T,
}

fn require_n(n: usize, options: &CorrOptions, floor: usize) -> Result<(), CorrError> {
    let required = options.min_samples.max(floor);
    if n < required {
        return Err(CorrError::Insufficient { n, required });
    }
    Ok(())
}

/// Lagged correlation of a paired sample; the sample carries its own lag.
pub fn lagged_correlation<T: Real>(sample: &PairedSample<T>, options: &CorrOptions) -> Result<LaggedCorr<T>, CorrError> {
    require_n(sample.n(), options, 3)?;
    let m = SampleMoments::from_triples(&sample.triples);
    lagged_from_moments(sample, &m, options)
}

pub(crate) fn lagged_from_moments<T: Real>(
    sample: &PairedSample<T>,
    m: &SampleMoments<T>,
    options: &CorrOptions,
) -> Result<LaggedCorr<T>, CorrError> {
    if m.constant_x || m.constant_yn || m.sxx <= T::zero() || m.snn <= T::zero() {
        return Err(CorrError::Degenerate("zero variance"));
    }
    let rho = m.rho_lagged();
    Ok(LaggedCorr {
        leader: sample.leader,
        lagger: sample.lagger,
        tau: sample.tau,
        rho,
        n: m.n,
        p_value: options.test.p_value(rho, m.n, 0),
    })
}

/// ρ_{j,j}(τ) of one series under a scenario filter.
pub fn lagged_autocorrelation<T: Real>(
    series: &ReturnSeries<T>,
    tau: usize,
    scenario: ScenarioId,
    options: &CorrOptions,
) -> Result<LaggedCorr<T>, CorrError> {
    let sample = scenario::extract_lagged(series, series, scenario, tau)?;
    lagged_correlation(&sample, options)
}

/// Partial correlation from the three ordinary correlations:
/// `(ρ_ij(τ) - ρ_ij(0)·ρ_jj(τ)) / √((1 - ρ_ij(0)²)(1 - ρ_jj(τ)²))`.
pub fn partial_correlation_closed<T: Real>(rho_lag: T, rho_zero: T, rho_auto: T) -> Result<T, CorrError> {
    let one = T::one();
    let floor = T::lit(4.0) * T::epsilon();
    let a = one - rho_zero * rho_zero;
    let b = one - rho_auto * rho_auto;
    if !(a > floor && b > floor) {
        return Err(CorrError::Singular);
    }
    let value = (rho_lag - rho_zero * rho_auto) / (a * b).sqrt();
    if !(value.abs() <= one + floor) {
        return Err(CorrError::Inconsistent(rho_lag.to_f64_lossy(), rho_zero.to_f64_lossy(), rho_auto.to_f64_lossy()));
    }
    Ok(value.max(-one).min(one))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialCorr<T> {
    pub leader: AssetId,
    pub lagger: AssetId,
    pub tau: usize,
    pub rho_p: T,
    pub n: usize,
    pub p_value: T,
    /// Ordinary correlations on the same sample.
    pub rho_lagged: T,
    pub rho_contemporaneous: T,
    pub rho_auto: T,
    /// `(r_X, r_Y)`: residuals of leader and future lagger after regressing
    /// each on the current lagger. Present only for the residual route.
    #[serde(skip)]
    pub residuals: Option<(Vec<T>, Vec<T>)>,
}

fn require_s3<T>(sample: &PairedSample<T>) -> Result<(), CorrError> {
    if sample.scenario != ScenarioId::S3 {
        return Err(CorrError::Scenario(sample.scenario));
    }
    Ok(())
}

/// Closed-form partial correlation with all three inputs estimated on the S3 sample.
pub fn partial_correlation<T: Real>(sample: &PairedSample<T>, options: &CorrOptions) -> Result<PartialCorr<T>, CorrError> {
    require_s3(sample)?;
    require_n(sample.n(), options, 4)?;
    let m = SampleMoments::from_triples(&sample.triples);
    partial_from_moments(sample, &m, options)
}

pub(crate) fn partial_from_moments<T: Real>(
    sample: &PairedSample<T>,
    m: &SampleMoments<T>,
    options: &CorrOptions,
) -> Result<PartialCorr<T>, CorrError> {
    if m.constant_x || m.constant_y || m.constant_yn {
        return Err(CorrError::Degenerate("zero variance"));
    }
    let (rl, r0, ra) = (m.rho_lagged(), m.rho_contemporaneous(), m.rho_auto());
    let rho_p = partial_correlation_closed(rl, r0, ra).map_err(|e| match e {
        CorrError::Singular => CorrError::Degenerate("zero residual variance"),
        other => other,
    })?;
    Ok(PartialCorr {
        leader: sample.leader,
        lagger: sample.lagger,
        tau: sample.tau,
        rho_p,
        n: m.n,
        p_value: options.test.p_value(rho_p, m.n, 1),
        rho_lagged: rl,
        rho_contemporaneous: r0,
        rho_auto: ra,
        residuals: None,
    })
}

fn centered_pearson<T: Real>(a: &[T], b: &[T]) -> Option<T> {
    let n = T::from_usize_lossy(a.len());
    let ma = a.iter().copied().sum::<T>() / n;
    let mb = b.iter().copied().sum::<T>() / n;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        sab = sab + dx * dy;
        saa = saa + dx * dx;
        sbb = sbb + dy * dy;
    }
    (saa > T::zero() && sbb > T::zero()).then(|| SampleMoments::pearson(sab, saa, sbb))
}

fn total_ss<T: Real>(v: &[T]) -> T {
    let m = v.iter().copied().sum::<T>() / T::from_usize_lossy(v.len());
    v.iter().map(|&x| (x - m) * (x - m)).sum()
}

/// Partial correlation as the correlation of QR regression residuals.
pub fn partial_correlation_residual<T: Real>(sample: &PairedSample<T>, options: &CorrOptions) -> Result<PartialCorr<T>, CorrError> {
    require_s3(sample)?;
    require_n(sample.n(), options, 4)?;
    let x = sample.xs();
    let y = sample.ys();
    let yn = sample.y_nexts();
    let ones = vec![T::one(); x.len()];
    let regress = |target: &[T]| -> Result<Vec<T>, CorrError> {
        let fit = ols::fit(&[&ones, &y], target).map_err(|e| match e {
            OlsError::RankDeficient { .. } => CorrError::Degenerate("constant conditioning variable"),
            other => other.into(),
        })?;
        let tss = total_ss(target);
        if !(fit.rss > tss * T::lit(DEGENERATE_RELATIVE)) {
            return Err(CorrError::Degenerate("zero residual variance"));
        }
        Ok(fit.residuals)
    };
    let rx = regress(&x)?;
    let ry = regress(&yn)?;
    let rho_p = centered_pearson(&rx, &ry).ok_or(CorrError::Degenerate("zero residual variance"))?;
    let rho_lagged = centered_pearson(&x, &yn).unwrap_or(T::nan());
    let rho_contemporaneous = centered_pearson(&x, &y).unwrap_or(T::nan());
    let rho_auto = centered_pearson(&y, &yn).unwrap_or(T::nan());
    Ok(PartialCorr {
        leader: sample.leader,
        lagger: sample.lagger,
        tau: sample.tau,
        rho_p,
        n: sample.n(),
        p_value: options.test.p_value(rho_p, sample.n(), 1),
        rho_lagged,
        rho_contemporaneous,
        rho_auto,
        residuals: Some((rx, ry)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::{Grid, Month};
    use crate::scenario::Triple;

    fn grid() -> Grid {
        Grid::month(Month::new(2016, 1).unwrap())
    }

    fn sample(triples: Vec<Triple<f64>>, scenario: ScenarioId) -> PairedSample<f64> {
        PairedSample::from_triples("EUR/USD".parse().unwrap(), "USD/JPY".parse().unwrap(), scenario, grid(), triples)
    }

    fn small() -> CorrOptions {
        CorrOptions { min_samples: 3, ..CorrOptions::default() }
    }

    #[test]
    fn affine_copy_is_perfect() {
        let t = (1..=5).map(|k| Triple { x: k as f64, y: 0.0, y_next: 2.0 * k as f64 }).collect();
        let c = lagged_correlation(&sample(t, ScenarioId::S1), &small()).unwrap();
        assert!((c.rho - 1.0).abs() < 1e-15);
        assert_eq!(c.p_value, 0.0);
    }

    #[test]
    fn insufficient_and_degenerate() {
        let t: Vec<_> = (1..=5).map(|k| Triple { x: k as f64, y: 0.0, y_next: 1.0 }).collect();
        assert!(matches!(
            lagged_correlation(&sample(t.clone(), ScenarioId::S1), &CorrOptions::default()),
            Err(CorrError::Insufficient { n: 5, required: 100 })
        ));
        assert!(matches!(lagged_correlation(&sample(t, ScenarioId::S1), &small()), Err(CorrError::Degenerate(_))));
    }

    #[test]
    fn closed_form_examples() {
        assert!((partial_correlation_closed(0.3f64, 0.0, 0.0).unwrap() - 0.3).abs() < 1e-15);
        let v = partial_correlation_closed(0.4f64, 0.2, 0.3).unwrap();
        assert!((v - 0.34 / (0.96f64 * 0.91).sqrt()).abs() < 1e-15);
        assert!((v - 0.363_766_419).abs() < 1e-9);
        assert_eq!(partial_correlation_closed(0.5f64, 0.5, 1.0), Err(CorrError::Singular));
        assert_eq!(partial_correlation_closed(0.5f64, 1.0, 0.2), Err(CorrError::Singular));
        assert!(partial_correlation_closed(0.5f64, 0.5, 1.0 - 1e-16).is_err());
    }

    #[test]
    fn residual_route_rejects_perfect_autoregression() {
        let t = (0..50)
            .map(|k| {
                let y = ((k * 37 % 11) as f64 - 5.0) * 0.1 + 0.01;
                Triple { x: (k as f64).sin(), y, y_next: y }
            })
            .collect();
        let s = sample(t, ScenarioId::S3);
        assert!(matches!(partial_correlation_residual(&s, &small()), Err(CorrError::Degenerate(_))));
        assert!(matches!(partial_correlation(&s, &small()), Err(CorrError::Degenerate(_))));
    }

    #[test]
    fn partial_requires_s3() {
        let t = (0..10).map(|k| Triple { x: k as f64, y: (k * k) as f64, y_next: 1.0 / (k as f64 + 1.0) }).collect();
        assert_eq!(partial_correlation(&sample(t, ScenarioId::S2), &small()), Err(CorrError::Scenario(ScenarioId::S2)));
    }

    #[test]
    fn routes_agree_on_small_sample() {
        let t: Vec<_> = (0..40)
            .map(|k| {
                let k = k as f64;
                Triple { x: (0.7 * k).sin(), y: (1.3 * k).cos(), y_next: (0.7 * k).sin() * 0.3 + (2.1 * k).sin() }
            })
            .collect();
        let s = sample(t, ScenarioId::S3);
        let a = partial_correlation(&s, &small()).unwrap();
        let b = partial_correlation_residual(&s, &small()).unwrap();
        assert!((a.rho_p - b.rho_p).abs() < 1e-12);
        assert!((a.p_value - b.p_value).abs() < 1e-12);
    }

    #[test]
    fn fisher_and_student_close_for_large_n() {
        let a = CorrTest::Student.p_value(0.03f64, 20_000, 0);
        let b = CorrTest::Fisher.p_value(0.03f64, 20_000, 0);
        assert!((a - b).abs() / a < 0.01);
    }
}
