//! All-pairs estimation and significance flags.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asset::AssetId;
use crate::calendar::{Grid, Span};
use crate::corr::{lagged_from_moments, partial_from_moments, CorrError, CorrOptions};
use crate::granger::{full_from_moments, GrangerError, GrangerOptions};
use crate::moments::SampleMoments;
use crate::returns::{ReturnCell, ReturnSeries};
use crate::scalar::Real;
use crate::scenario::{PairedSample, ScenarioError, ScenarioId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("estimator {0} does not accept scenario {1}")]
    Scenario(&'static str, ScenarioId),
    #[error("unknown estimator `{0}` (expected corr, pcorr or granger)")]
    Unknown(String),
    #[error(transparent)]
    Extract(#[from] ScenarioError),
    #[error("series are not on a common grid")]
    MixedGrids,
    #[error("need at least one series")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Corr,
    Pcorr,
    Granger,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Corr => "corr",
            EstimatorKind::Pcorr => "pcorr",
            EstimatorKind::Granger => "granger",
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = SweepError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "corr" => Ok(EstimatorKind::Corr),
            "pcorr" => Ok(EstimatorKind::Pcorr),
            "granger" => Ok(EstimatorKind::Granger),
            _ => Err(SweepError::Unknown(s.to_string())),
        }
    }
}

/// Estimator plus the scenario filter it runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Estimator {
    pub kind: EstimatorKind,
    pub scenario: ScenarioId,
}

impl Estimator {
    pub fn new(kind: EstimatorKind, scenario: ScenarioId) -> Result<Self, SweepError> {
        let ok = match kind {
            EstimatorKind::Corr => true,
            EstimatorKind::Pcorr => scenario == ScenarioId::S3,
            EstimatorKind::Granger => matches!(scenario, ScenarioId::S3 | ScenarioId::S4),
        };
        if !ok {
            return Err(SweepError::Scenario(kind.label(), scenario));
        }
        Ok(Estimator { kind, scenario })
    }

    /// Tag such as `corr_s2`.
    pub fn tag(&self) -> String {
        format!("{}_{}", self.kind.label(), self.scenario)
    }

    /// Networks from this estimator carry |statistic| weights.
    pub fn weighted(&self) -> bool {
        self.kind != EstimatorKind::Granger
    }

    /// Every supported estimator/scenario combination.
    pub fn all() -> Vec<Estimator> {
        let mut out: Vec<Estimator> = ScenarioId::ALL.iter().map(|&s| Estimator { kind: EstimatorKind::Corr, scenario: s }).collect();
        out.push(Estimator { kind: EstimatorKind::Pcorr, scenario: ScenarioId::S3 });
        out.push(Estimator { kind: EstimatorKind::Granger, scenario: ScenarioId::S3 });
        out.push(Estimator { kind: EstimatorKind::Granger, scenario: ScenarioId::S4 });
        out
    }
}

impl FromStr for Estimator {
    type Err = SweepError;
    /// Parses a tag such as `pcorr_s3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, scenario) = s.split_once('_').ok_or_else(|| SweepError::Unknown(s.to_string()))?;
        Estimator::new(kind.parse()?, scenario.parse()?)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryStatus {
    Ok,
    Insufficient,
    Degenerate,
}

impl EntryStatus {
    pub fn label(self) -> &'static str {
        match self {
            EntryStatus::Ok => "ok",
            EntryStatus::Insufficient => "insufficient",
            EntryStatus::Degenerate => "degenerate",
        }
    }
}

/// Regression detail kept for Granger entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrangerDetail<T> {
    pub alpha_hat: T,
    pub beta_hat: T,
    pub gamma_hat: T,
    pub r2: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigEntry<T> {
    pub n: usize,
    /// ρ for correlations, F for Granger; NaN unless status is `Ok`.
    pub statistic: T,
    /// Sign of the relationship: ρ, or β̂ for Granger.
    pub signed: T,
    pub p_value: T,
    pub status: EntryStatus,
    pub pass_bonferroni: bool,
    pub pass_nominal: bool,
    pub granger: Option<GrangerDetail<T>>,
}

impl<T: Real> SigEntry<T> {
    fn unavailable(n: usize, status: EntryStatus) -> Self {
        SigEntry {
            n,
            statistic: T::nan(),
            signed: T::nan(),
            p_value: T::nan(),
            status,
            pass_bonferroni: false,
            pass_nominal: false,
            granger: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Significance {
    pub alpha: f64,
    /// Number of simultaneous tests for the Bonferroni divisor; `None` means N·N.
    pub tests: Option<usize>,
}

impl Default for Significance {
    fn default() -> Self {
        Significance { alpha: 0.01, tests: None }
    }
}

impl Significance {
    pub fn bonferroni_threshold(&self, n_assets: usize) -> f64 {
        self.alpha / self.tests.unwrap_or(n_assets * n_assets) as f64
    }
}

/// N×N significance table for one estimator over one window.
/// `entries[i][j]` is leader `i`, lagger `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigMatrix<T> {
    pub estimator: Estimator,
    pub span: Span,
    pub tau: usize,
    pub assets: Vec<AssetId>,
    pub entries: Vec<Vec<SigEntry<T>>>,
    pub alpha: f64,
    pub bonferroni_threshold: f64,
}

impl<T: Real> SigMatrix<T> {
    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    pub fn entry(&self, leader: usize, lagger: usize) -> &SigEntry<T> {
        &self.entries[leader][lagger]
    }

    /// Off-diagonal (leader, lagger) pairs passing the Bonferroni threshold.
    pub fn bonferroni_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs_where(|e| e.pass_bonferroni)
    }

    pub fn nominal_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs_where(|e| e.pass_nominal)
    }

    fn pairs_where(&self, f: impl Fn(&SigEntry<T>) -> bool) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                if i != j && f(e) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Applies pass flags from p-values; the diagonal never passes.
    pub fn flag(&mut self) {
        let (alpha, thr) = (T::lit(self.alpha), T::lit(self.bonferroni_threshold));
        for (i, row) in self.entries.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                let usable = i != j && e.status == EntryStatus::Ok && !e.p_value.is_nan();
                e.pass_nominal = usable && e.p_value < alpha;
                e.pass_bonferroni = usable && e.p_value < thr;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    pub tau: usize,
    pub corr: CorrOptions,
    pub granger: GrangerOptions,
    pub significance: Significance,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self::lag_one()
    }
}

impl SweepOptions {
    pub fn lag_one() -> Self {
        SweepOptions { tau: 1, corr: CorrOptions::default(), granger: GrangerOptions::default(), significance: Significance::default() }
    }
}

const OBSERVED: u8 = 1;
const NONZERO: u8 = 2;

/// Series laid out for the pair kernel: cell classes, values (0 unless
/// nonzero) and the positions of nonzero cells.
struct Prepared<T> {
    asset: AssetId,
    class: Vec<u8>,
    values: Vec<T>,
    nonzero: Vec<usize>,
}

impl<T: Real> Prepared<T> {
    fn new(series: &ReturnSeries<T>) -> Self {
        let mut class = Vec::with_capacity(series.cells.len());
        let mut values = Vec::with_capacity(series.cells.len());
        let mut nonzero = Vec::new();
        for (k, c) in series.cells.iter().enumerate() {
            match *c {
                ReturnCell::Value(v) => {
                    class.push(OBSERVED | NONZERO);
                    values.push(v);
                    nonzero.push(k);
                }
                ReturnCell::Zero => {
                    class.push(OBSERVED);
                    values.push(T::zero());
                }
                ReturnCell::Missing => {
                    class.push(0);
                    values.push(T::zero());
                }
            }
        }
        Prepared { asset: series.asset, class, values, nonzero }
    }
}

/// Required class bits of the lagger at t_n and t_{n+τ}.
fn requirement(scenario: ScenarioId) -> (u8, u8) {
    let both = OBSERVED | NONZERO;
    match scenario {
        ScenarioId::S1 => (OBSERVED, OBSERVED),
        ScenarioId::S2 => (OBSERVED, both),
        ScenarioId::S3 => (both, both),
        ScenarioId::S4 => (both, OBSERVED),
    }
}

/// Single-pass moments of the scenario sample, without materializing triples.
/// Sums are taken about the first admitted triple, so a constant column sums
/// to exactly zero and the centering cancellation stays small.
fn pair_moments<T: Real>(leader: &Prepared<T>, lagger: &Prepared<T>, scenario: ScenarioId, tau: usize) -> SampleMoments<T> {
    let (ry, rn) = requirement(scenario);
    let len = lagger.class.len();
    let admitted = |t: usize| lagger.class[t] & ry == ry && lagger.class[t + tau] & rn == rn;
    let usable = leader.nonzero.partition_point(|&t| t + tau < len);
    let candidates = &leader.nonzero[..usable];
    let zero = T::zero();
    let Some(start) = candidates.iter().position(|&t| admitted(t)) else {
        return SampleMoments::from_triples(&[]);
    };
    let first = candidates[start];
    let (x0, y0, n0) = (leader.values[first], lagger.values[first], lagger.values[first + tau]);
    let mut n = 1usize;
    let (mut sx, mut sy, mut sn) = (zero, zero, zero);
    let (mut sxx, mut syy, mut snn, mut sxy, mut sxn, mut syn) = (zero, zero, zero, zero, zero, zero);
    // Branch-free: rejected cells enter with weight zero.
    for &t in &candidates[start + 1..] {
        let keep = admitted(t);
        let w = if keep { T::one() } else { zero };
        let dx = (leader.values[t] - x0) * w;
        let dy = (lagger.values[t] - y0) * w;
        let dn = (lagger.values[t + tau] - n0) * w;
        n += keep as usize;
        sx = sx + dx;
        sy = sy + dy;
        sn = sn + dn;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
        snn = snn + dn * dn;
        sxy = sxy + dx * dy;
        sxn = sxn + dx * dn;
        syn = syn + dy * dn;
    }
    let nf = T::from_usize_lossy(n);
    let (mx, my, mn) = (sx / nf, sy / nf, sn / nf);
    let centered = |s: T, a: T, b: T| s - a * b * nf;
    let (cx, cy, cn) = (sxx == zero, syy == zero, snn == zero);
    SampleMoments {
        n,
        mean_x: x0 + mx,
        mean_y: y0 + my,
        mean_yn: n0 + mn,
        sxx: if cx { zero } else { centered(sxx, mx, mx).max(zero) },
        syy: if cy { zero } else { centered(syy, my, my).max(zero) },
        snn: if cn { zero } else { centered(snn, mn, mn).max(zero) },
        sxy: centered(sxy, mx, my),
        sxn: centered(sxn, mx, mn),
        syn: centered(syn, my, mn),
        constant_x: cx,
        constant_y: cy,
        constant_yn: cn,
    }
}

fn cell<T: Real>(leader: &Prepared<T>, lagger: &Prepared<T>, grid: Grid, estimator: Estimator, options: &SweepOptions) -> SigEntry<T> {
    let m = pair_moments(leader, lagger, estimator.scenario, options.tau);
    let n = m.n;
    let min = match estimator.kind {
        EstimatorKind::Corr => options.corr.min_samples.max(3),
        EstimatorKind::Pcorr => options.corr.min_samples.max(4),
        EstimatorKind::Granger => options.granger.min_samples.max(4),
    };
    if n < min {
        return SigEntry::unavailable(n, EntryStatus::Insufficient);
    }
    let sample = PairedSample {
        leader: leader.asset,
        lagger: lagger.asset,
        scenario: estimator.scenario,
        tau: options.tau,
        grid,
        positions: Vec::new(),
        triples: Vec::new(),
    };
    let ok = |statistic: T, signed: T, p_value: T, granger| SigEntry {
        n,
        statistic,
        signed,
        p_value,
        status: EntryStatus::Ok,
        pass_bonferroni: false,
        pass_nominal: false,
        granger,
    };
    match estimator.kind {
        EstimatorKind::Corr => match lagged_from_moments(&sample, &m, &options.corr) {
            Ok(c) => ok(c.rho, c.rho, c.p_value, None),
            Err(CorrError::Insufficient { .. }) => SigEntry::unavailable(n, EntryStatus::Insufficient),
            Err(_) => SigEntry::unavailable(n, EntryStatus::Degenerate),
        },
        EstimatorKind::Pcorr => match partial_from_moments(&sample, &m, &options.corr) {
            Ok(c) => ok(c.rho_p, c.rho_p, c.p_value, None),
            Err(CorrError::Insufficient { .. }) => SigEntry::unavailable(n, EntryStatus::Insufficient),
            Err(_) => SigEntry::unavailable(n, EntryStatus::Degenerate),
        },
        EstimatorKind::Granger => match full_from_moments(&sample, &m, &options.granger) {
            Ok(g) => ok(
                g.f_stat,
                g.beta_hat,
                g.p_value,
                Some(GrangerDetail { alpha_hat: g.alpha_hat, beta_hat: g.beta_hat, gamma_hat: g.gamma_hat, r2: g.r2 }),
            ),
            Err(GrangerError::Insufficient { .. }) => SigEntry::unavailable(n, EntryStatus::Insufficient),
            Err(_) => SigEntry::unavailable(n, EntryStatus::Degenerate),
        },
    }
}

/// Runs `estimator` on every ordered pair (diagonal included) and flags significance.
pub fn significance_sweep<T: Real>(
    series: &[ReturnSeries<T>],
    estimator: Estimator,
    options: &SweepOptions,
) -> Result<SigMatrix<T>, SweepError> {
    let first = series.first().ok_or(SweepError::Empty)?;
    if series.iter().any(|s| s.grid != first.grid || s.cells.len() != first.cells.len()) {
        return Err(SweepError::MixedGrids);
    }
    let prepared: Vec<Prepared<T>> = series.par_iter().map(Prepared::new).collect();
    let n = series.len();
    let grid = first.grid;
    let entries = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| cell(&prepared[i], &prepared[j], grid, estimator, options)).collect::<Vec<_>>())
        .collect::<Vec<_>>();
    let mut sig = SigMatrix {
        estimator,
        span: first.grid.span,
        tau: options.tau,
        assets: series.iter().map(|s| s.asset).collect(),
        entries,
        alpha: options.significance.alpha,
        bonferroni_threshold: options.significance.bonferroni_threshold(n),
    };
    sig.flag();
    Ok(sig)
}

/// Granger variant of [`significance_sweep`].
pub fn causality_sweep<T: Real>(
    series: &[ReturnSeries<T>],
    scenario: ScenarioId,
    options: &SweepOptions,
) -> Result<SigMatrix<T>, SweepError> {
    significance_sweep(series, Estimator::new(EstimatorKind::Granger, scenario)?, options)
}
