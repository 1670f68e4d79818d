//! Synthetic markets with planted lead-lag structure.
//!
//! Returns follow a stationary VAR(1), `r(t+1) = A·r(t) + ε`, with Gaussian
//! innovations. Zero returns and gaps are injected after simulation, so the
//! population moments of the process stay available in closed form through
//! [`oracle_lagged_corr`].

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, Schur};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asset::{AssetId, STUDIED_RATES};
use crate::calendar::{from_minute_index, Grid, Month};
use crate::ingest::{write_bars, BarFormat, BarSeries, IngestError, MinuteBar};
use crate::returns::{log_returns_from_prices, ReturnSeries, ReturnsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("coefficient matrix is not stable (spectral radius {0:.6} >= 1)")]
    Unstable(f64),
    #[error("invalid synthetic spec: {0}")]
    Invalid(String),
    #[error("Lyapunov iteration did not converge (change {0:e})")]
    NoConvergence(f64),
    #[error(transparent)]
    Returns(#[from] ReturnsError),
}

/// Asset given by index into the universe or by rate symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AssetRef {
    Index(usize),
    Code(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedEdge {
    pub leader: AssetRef,
    pub lagger: AssetRef,
    /// Coefficient of the leader's return in the lagger's next return.
    pub beta: f64,
}

/// Scalar applied to every asset, or one value per asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAsset {
    All(f64),
    Each(Vec<f64>),
}

impl PerAsset {
    fn get(&self, k: usize) -> f64 {
        match self {
            PerAsset::All(v) => *v,
            PerAsset::Each(v) => v[k],
        }
    }

    fn check_len(&self, n: usize, what: &str) -> Result<(), SynthError> {
        match self {
            PerAsset::Each(v) if v.len() != n => Err(SynthError::Invalid(format!("{what} has {} entries for {n} assets", v.len()))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_assets: usize,
    /// Simulated returns per month; prices occupy the first `minutes + 1` grid minutes.
    pub minutes: usize,
    pub start_month: Month,
    pub months: usize,
    pub edges: Vec<PlantedEdge>,
    /// Own-lag coefficient per asset (diagonal of A).
    pub alpha: PerAsset,
    /// Innovation standard deviation per asset.
    pub sigma: PerAsset,
    /// Probability a return is replaced by an exact zero.
    pub zero_prob: f64,
    /// Probability a minute's bar is deleted.
    pub gap_prob: f64,
    pub seed: u64,
    pub start_price: f64,
    /// Discarded warm-up steps at the start of each month.
    pub burn_in: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_assets: 66,
            minutes: 20_000,
            start_month: Month { year: 2016, month: 1 },
            months: 1,
            edges: Vec::new(),
            alpha: PerAsset::All(0.0),
            sigma: PerAsset::All(1e-4),
            zero_prob: 0.0,
            gap_prob: 0.0,
            seed: 0,
            start_price: 1.0,
            burn_in: 200,
        }
    }
}

impl SynthSpec {
    pub fn assets(&self) -> Vec<AssetId> {
        AssetId::studied(self.n_assets)
    }

    fn resolve(&self, r: &AssetRef) -> Result<usize, SynthError> {
        match r {
            AssetRef::Index(k) if *k < self.n_assets => Ok(*k),
            AssetRef::Index(k) => Err(SynthError::Invalid(format!("asset index {k} out of range"))),
            AssetRef::Code(c) => {
                let id: AssetId = c.parse().map_err(|e| SynthError::Invalid(format!("{e}")))?;
                self.assets().iter().position(|a| *a == id).ok_or_else(|| SynthError::Invalid(format!("{c} not in universe")))
            }
        }
    }

    /// `(leader, lagger, beta)` with indices resolved.
    pub fn planted(&self) -> Result<Vec<(usize, usize, f64)>, SynthError> {
        self.edges.iter().map(|e| Ok((self.resolve(&e.leader)?, self.resolve(&e.lagger)?, e.beta))).collect()
    }

    /// Dense coefficient matrix: `A[j][i]` drives lagger `j` from leader `i`.
    pub fn coefficient_matrix(&self) -> Result<DMatrix<f64>, SynthError> {
        let n = self.n_assets;
        let mut a = DMatrix::zeros(n, n);
        for k in 0..n {
            a[(k, k)] = self.alpha.get(k);
        }
        for (i, j, beta) in self.planted()? {
            a[(j, i)] += beta;
        }
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Invalid(m));
        if self.n_assets == 0 || self.n_assets > STUDIED_RATES.len() {
            return bad(format!("n_assets must be in 1..={}", STUDIED_RATES.len()));
        }
        if self.months == 0 {
            return bad("months must be positive".into());
        }
        let shortest = (0..self.months)
            .scan(self.start_month, |m, _| {
                let cur = *m;
                *m = m.next();
                Some(cur.minutes())
            })
            .min()
            .unwrap_or(0);
        if self.minutes < 2 || self.minutes + 1 > shortest {
            return bad(format!("minutes must be in 2..{shortest}"));
        }
        for (p, name) in [(self.zero_prob, "zero_prob"), (self.gap_prob, "gap_prob")] {
            if !(0.0..1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1)"));
            }
        }
        if !(self.start_price > 0.0 && self.start_price.is_finite()) {
            return bad("start_price must be positive".into());
        }
        self.alpha.check_len(self.n_assets, "alpha")?;
        self.sigma.check_len(self.n_assets, "sigma")?;
        if (0..self.n_assets).any(|k| !(self.sigma.get(k) > 0.0)) {
            return bad("sigma must be positive".into());
        }
        for (i, j, _) in self.planted()? {
            if i == j {
                return bad("planted edge from an asset to itself; use alpha".into());
            }
        }
        let radius = spectral_radius(&self.coefficient_matrix()?);
        if !(radius < 1.0) {
            return Err(SynthError::Unstable(radius));
        }
        Ok(())
    }

    pub fn month_list(&self) -> Vec<Month> {
        let mut out = Vec::with_capacity(self.months);
        let mut m = self.start_month;
        for _ in 0..self.months {
            out.push(m);
            m = m.next();
        }
        out
    }
}

pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    match Schur::try_new(a.clone(), f64::EPSILON, 10_000) {
        Some(schur) => schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max),
        None => {
            // Gelfand's formula: ‖A^k‖^(1/k) for k = 2^10.
            let mut m = a.clone();
            let mut log_scale = 0.0;
            for _ in 0..10 {
                m = &m * &m;
                let norm = m.norm();
                if norm == 0.0 {
                    return 0.0;
                }
                log_scale = 2.0 * log_scale + norm.ln();
                m /= norm;
            }
            (log_scale / 1024.0).exp()
        }
    }
}

/// One month of a synthetic universe.
#[derive(Debug, Clone)]
pub struct SynthMonth {
    pub month: Month,
    /// UTC bars; deleted minutes are absent.
    pub bars: Vec<BarSeries>,
    /// Returns on the month grid, derived from `bars`.
    pub returns: Vec<ReturnSeries<f64>>,
}

#[derive(Debug, Clone)]
pub struct SynthUniverse {
    pub assets: Vec<AssetId>,
    pub months: Vec<SynthMonth>,
}

/// Raw VAR(1) path: `steps` return vectors after `burn_in` warm-up steps.
/// Layout is `[asset][step]`.
pub fn simulate_var(spec: &SynthSpec, steps: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>, SynthError> {
    let n = spec.n_assets;
    let mut drivers: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, j, beta) in spec.planted()? {
        drivers[j].push((i, beta));
    }
    let alpha: Vec<f64> = (0..n).map(|k| spec.alpha.get(k)).collect();
    let sigma: Vec<f64> = (0..n).map(|k| spec.sigma.get(k)).collect();
    let mut out = vec![Vec::with_capacity(steps); n];
    let mut cur = vec![0.0; n];
    let mut next = vec![0.0; n];
    for step in 0..spec.burn_in + steps {
        for j in 0..n {
            let eps: f64 = rng.sample(StandardNormal);
            let mut v = alpha[j] * cur[j] + sigma[j] * eps;
            for &(i, beta) in &drivers[j] {
                v += beta * cur[i];
            }
            next[j] = v;
        }
        std::mem::swap(&mut cur, &mut next);
        if step >= spec.burn_in {
            for j in 0..n {
                out[j].push(cur[j]);
            }
        }
    }
    Ok(out)
}

/// Simulates every month of `spec`. Deterministic in `spec.seed`.
pub fn generate(spec: &SynthSpec) -> Result<SynthUniverse, SynthError> {
    spec.validate()?;
    let assets = spec.assets();
    let mut sim_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut mask_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    mask_rng.set_stream(1);
    let mut months = Vec::with_capacity(spec.months);
    for month in spec.month_list() {
        let grid = Grid::month(month);
        let raw = simulate_var(spec, spec.minutes, &mut sim_rng)?;
        let mut bars = Vec::with_capacity(assets.len());
        let mut returns = Vec::with_capacity(assets.len());
        for (k, path) in raw.iter().enumerate() {
            let mut prices: Vec<Option<f64>> = vec![None; grid.len];
            let mut p = spec.start_price;
            prices[0] = Some(p);
            for (t, &r) in path.iter().enumerate() {
                let zero = spec.zero_prob > 0.0 && mask_rng.gen::<f64>() < spec.zero_prob;
                if !zero {
                    p *= r.exp();
                }
                prices[t + 1] = Some(p);
            }
            if spec.gap_prob > 0.0 {
                for slot in prices.iter_mut().take(spec.minutes + 1) {
                    if mask_rng.gen::<f64>() < spec.gap_prob {
                        *slot = None;
                    }
                }
            }
            let series = BarSeries {
                asset: assets[k],
                bars: prices
                    .iter()
                    .enumerate()
                    .filter_map(|(pos, p)| p.map(|p| MinuteBar::flat(from_minute_index(grid.origin + pos as i64), p)))
                    .collect(),
                tz_offset_minutes: 0,
            };
            returns.push(log_returns_from_prices(assets[k], grid, &prices)?);
            bars.push(series);
        }
        months.push(SynthMonth { month, bars, returns });
    }
    Ok(SynthUniverse { assets, months })
}

/// Writes every asset's bars as `<RATE>_<YYYYMM>.csv`, one file per
/// simulated month, with timestamps rendered in `format`'s clock. A file may
/// therefore begin or end in a neighbouring month of that clock; the dataset
/// loader reads neighbouring files for this reason. Returns the paths written.
pub fn write_bar_files(universe: &SynthUniverse, dir: &Path, format: &BarFormat) -> Result<Vec<PathBuf>, IngestError> {
    fs::create_dir_all(dir).map_err(|source| IngestError::Io { path: dir.to_path_buf(), source })?;
    let mut paths = Vec::new();
    for (k, &asset) in universe.assets.iter().enumerate() {
        for m in &universe.months {
            let path = dir.join(format!("{}_{}.csv", asset.compact(), m.month.compact()));
            let mut buf = Vec::new();
            write_bars(&m.bars[k], format, &mut buf)?;
            fs::write(&path, buf).map_err(|source| IngestError::Io { path: path.clone(), source })?;
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

/// Population lag-one correlations `ρ_ij(1) = Cov(r_i(t), r_j(t+1)) / (σ_i σ_j)`
/// of the VAR(1); `[i][j]` is leader `i`, lagger `j`.
pub fn oracle_lagged_corr(spec: &SynthSpec) -> Result<Vec<Vec<f64>>, SynthError> {
    let a = spec.coefficient_matrix()?;
    let radius = spectral_radius(&a);
    if !(radius < 1.0) {
        return Err(SynthError::Unstable(radius));
    }
    let n = spec.n_assets;
    let sigma = DMatrix::from_fn(n, n, |i, j| if i == j { spec.sigma.get(i).powi(2) } else { 0.0 });
    // Γ₀ = A Γ₀ Aᵀ + Σ
    let mut gamma0 = sigma.clone();
    let scale = sigma.amax();
    let mut change = f64::INFINITY;
    for _ in 0..1_000_000 {
        let next = &a * &gamma0 * a.transpose() + &sigma;
        change = (&next - &gamma0).amax();
        gamma0 = next;
        if change <= 1e-15 * scale {
            break;
        }
    }
    if !(change <= 1e-15 * scale) {
        return Err(SynthError::NoConvergence(change));
    }
    // E[r(t) r(t+1)ᵀ] = Γ₀ Aᵀ
    let gamma1 = &gamma0 * a.transpose();
    Ok((0..n).map(|i| (0..n).map(|j| gamma1[(i, j)] / (gamma0[(i, i)] * gamma0[(j, j)]).sqrt()).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SynthSpec {
        SynthSpec { n_assets: 3, minutes: 500, ..SynthSpec::default() }
    }

    #[test]
    fn deterministic() {
        let s = SynthSpec { zero_prob: 0.1, gap_prob: 0.05, ..spec() };
        let a = generate(&s).unwrap();
        let b = generate(&s).unwrap();
        assert_eq!(a.months[0].bars, b.months[0].bars);
        assert_eq!(a.months[0].returns, b.months[0].returns);
    }

    #[test]
    fn unstable_rejected() {
        let s = SynthSpec { alpha: PerAsset::All(1.0), ..spec() };
        assert!(matches!(s.validate(), Err(SynthError::Unstable(_))));
        assert!(matches!(oracle_lagged_corr(&s), Err(SynthError::Unstable(_))));
    }

    #[test]
    fn oracle_single_edge() {
        let s = SynthSpec {
            sigma: PerAsset::All(1.0),
            edges: vec![PlantedEdge { leader: AssetRef::Index(0), lagger: AssetRef::Index(1), beta: 0.3 }],
            ..spec()
        };
        let rho = oracle_lagged_corr(&s).unwrap();
        assert!((rho[0][1] - 0.3 / 1.09f64.sqrt()).abs() < 1e-12);
        assert!(rho[1][0].abs() < 1e-15);
        assert!(rho[0][2].abs() < 1e-15);
    }

    #[test]
    fn oracle_ar1_diagonal() {
        let s = SynthSpec { alpha: PerAsset::All(0.5), ..spec() };
        let rho = oracle_lagged_corr(&s).unwrap();
        for k in 0..3 {
            assert!((rho[k][k] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn edges_by_code() {
        let s = SynthSpec {
            edges: vec![PlantedEdge { leader: AssetRef::Code("AUD/JPY".into()), lagger: AssetRef::Index(0), beta: 0.1 }],
            ..spec()
        };
        assert_eq!(s.planted().unwrap(), vec![(2, 0, 0.1)]);
        let bad = SynthSpec { edges: vec![PlantedEdge { leader: AssetRef::Index(9), lagger: AssetRef::Index(0), beta: 0.1 }], ..spec() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn files_named_by_simulated_month() {
        let dir = tempfile::tempdir().unwrap();
        let s = SynthSpec { n_assets: 2, minutes: 600, ..SynthSpec::default() };
        let u = generate(&s).unwrap();
        let paths = write_bar_files(&u, dir.path(), &BarFormat::histdata()).unwrap();
        let names: Vec<String> = paths.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        assert_eq!(names, ["AUDCAD_201601.csv", "AUDCHF_201601.csv"]);
        let first = fs::read_to_string(&paths[0]).unwrap();
        assert!(first.starts_with("20151231 190000;"), "{}", &first[..40]);
    }

    #[test]
    fn zero_and_gap_injection() {
        let s = SynthSpec { zero_prob: 0.2, gap_prob: 0.1, ..spec() };
        let u = generate(&s).unwrap();
        let r = &u.months[0].returns[0];
        let zeros = r.cells[..500].iter().filter(|c| matches!(c, crate::returns::ReturnCell::Zero)).count();
        let missing = r.cells[..500].iter().filter(|c| matches!(c, crate::returns::ReturnCell::Missing)).count();
        assert!(zeros > 40 && zeros < 130, "{zeros}");
        assert!(missing > 50 && missing < 160, "{missing}");
        assert!(u.months[0].bars[0].len() < 501);
    }
}
