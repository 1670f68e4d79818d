//! One-minute log returns and the augmented Dickey-Fuller regression.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asset::AssetId;
use crate::calendar::{minute_index, Grid};
use crate::ingest::BarSeries;
use crate::ols::{self, OlsError};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReturnsError {
    #[error("{asset}: non-positive price {price} at grid position {position}")]
    NonPositivePrice { asset: AssetId, price: f64, position: usize },
    #[error("{asset}: bar at minute {minute} lies outside the grid")]
    OffGrid { asset: AssetId, minute: i64 },
    #[error("{asset}: bars are not strictly increasing")]
    Unordered { asset: AssetId },
}

/// Return between two consecutive grid minutes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ReturnCell<T> {
    /// Nonzero finite log return.
    Value(T),
    /// Both prices present and equal.
    Zero,
    /// At least one of the two prices absent.
    Missing,
}

impl<T: Real> ReturnCell<T> {
    /// Numeric value for observed cells (`Zero` reads as 0).
    #[inline]
    pub fn observed(self) -> Option<T> {
        match self {
            ReturnCell::Value(v) => Some(v),
            ReturnCell::Zero => Some(T::zero()),
            ReturnCell::Missing => None,
        }
    }

    #[inline]
    pub fn value(self) -> Option<T> {
        match self {
            ReturnCell::Value(v) => Some(v),
            _ => None,
        }
    }

    #[inline]
    pub fn is_value(self) -> bool {
        matches!(self, ReturnCell::Value(_))
    }

    /// Classifies a raw number: exact zero becomes `Zero`, non-finite `Missing`.
    pub fn from_number(v: T) -> Self {
        if !v.is_finite() {
            ReturnCell::Missing
        } else if v == T::zero() {
            ReturnCell::Zero
        } else {
            ReturnCell::Value(v)
        }
    }
}

/// Grid-indexed returns: cell `n` is `ln p(t_{n+1}) - ln p(t_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries<T> {
    pub asset: AssetId,
    pub grid: Grid,
    /// `grid.len - 1` cells.
    pub cells: Vec<ReturnCell<T>>,
}

impl<T: Real> ReturnSeries<T> {
    pub fn new(asset: AssetId, grid: Grid, cells: Vec<ReturnCell<T>>) -> Self {
        debug_assert_eq!(cells.len() + 1, grid.len.max(1));
        ReturnSeries { asset, grid, cells }
    }

    /// Series whose every cell is `Missing`.
    pub fn missing(asset: AssetId, grid: Grid) -> Self {
        ReturnSeries { asset, grid, cells: vec![ReturnCell::Missing; grid.len.saturating_sub(1)] }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn count_values(&self) -> usize {
        self.cells.iter().filter(|c| c.is_value()).count()
    }

    /// Multiplies every value by `factor` (used by invariance checks).
    pub fn scaled(&self, factor: T) -> Self {
        let cells = self
            .cells
            .iter()
            .map(|c| match *c {
                ReturnCell::Value(v) => ReturnCell::Value(v * factor),
                other => other,
            })
            .collect();
        ReturnSeries { cells, ..self.clone() }
    }
}

/// Close prices placed on grid positions; `None` where no bar exists.
pub fn grid_prices(series: &BarSeries, grid: &Grid) -> Result<Vec<Option<f64>>, ReturnsError> {
    let mut prices = vec![None; grid.len];
    let mut last = None;
    for bar in &series.bars {
        let minute = minute_index(&bar.timestamp) - series.tz_offset_minutes as i64;
        if last.is_some_and(|l| minute <= l) {
            return Err(ReturnsError::Unordered { asset: series.asset });
        }
        last = Some(minute);
        let pos = grid.position(minute).ok_or(ReturnsError::OffGrid { asset: series.asset, minute })?;
        prices[pos] = Some(bar.close);
    }
    Ok(prices)
}

/// Log returns of close prices on `grid`.
pub fn log_returns<T: Real>(series: &BarSeries, grid: &Grid) -> Result<ReturnSeries<T>, ReturnsError> {
    let prices = grid_prices(series, grid)?;
    log_returns_from_prices(series.asset, *grid, &prices)
}

pub fn log_returns_from_prices<T: Real>(
    asset: AssetId,
    grid: Grid,
    prices: &[Option<f64>],
) -> Result<ReturnSeries<T>, ReturnsError> {
    for (position, p) in prices.iter().enumerate() {
        if let Some(price) = *p {
            if !(price > 0.0) || !price.is_finite() {
                return Err(ReturnsError::NonPositivePrice { asset, price, position });
            }
        }
    }
    let cells = prices
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) if a == b => ReturnCell::Zero,
            (Some(a), Some(b)) => {
                let r = T::lit(b).ln() - T::lit(a).ln();
                // distinct f64 prices can collapse in a narrower scalar type
                if r == T::zero() {
                    ReturnCell::Zero
                } else {
                    ReturnCell::Value(r)
                }
            }
            _ => ReturnCell::Missing,
        })
        .collect();
    Ok(ReturnSeries { asset, grid, cells })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdfOptions {
    /// Reject the unit root when the t-ratio falls below this value.
    pub critical_value: f64,
    pub min_obs: usize,
}

impl Default for AdfOptions {
    fn default() -> Self {
        AdfOptions { critical_value: -3.96, min_obs: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdfError {
    #[error("insufficient data: {chains} usable chains, need {required}")]
    Insufficient { chains: usize, required: usize },
    #[error(transparent)]
    Regression(#[from] OlsError),
}

/// Fit of `Δr_n = α + δ·n + θ·r_{n-1} + γ₁·Δr_{n-1} + ε_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdfResult<T> {
    /// t-ratio of θ.
    pub statistic: T,
    pub alpha: T,
    pub delta: T,
    pub theta: T,
    pub gamma1: T,
    pub n_obs: usize,
    pub critical_value: f64,
    pub reject_unit_root: bool,
}

/// Augmented Dickey-Fuller test with trend and one lagged difference.
///
/// Every run of three consecutive observed cells (values or zeros) yields one
/// observation; a missing cell breaks the chain. The trend regressor is the
/// 0-based cell index within the series' grid.
pub fn adf_test<T: Real>(series: &ReturnSeries<T>, options: &AdfOptions) -> Result<AdfResult<T>, AdfError> {
    let mut ones = Vec::new();
    let mut trend = Vec::new();
    let mut lagged = Vec::new();
    let mut lagged_diff = Vec::new();
    let mut response = Vec::new();
    for (n, w) in series.cells.windows(3).enumerate() {
        let (Some(r0), Some(r1), Some(r2)) = (w[0].observed(), w[1].observed(), w[2].observed()) else {
            continue;
        };
        ones.push(T::one());
        trend.push(T::from_usize_lossy(n + 2));
        lagged.push(r1);
        lagged_diff.push(r1 - r0);
        response.push(r2 - r1);
    }
    let chains = response.len();
    let required = options.min_obs.max(5);
    if chains < required {
        return Err(AdfError::Insufficient { chains, required });
    }
    let fit = ols::fit(&[&ones, &trend, &lagged, &lagged_diff], &response)?;
    let statistic = fit.t_ratio(2);
    Ok(AdfResult {
        statistic,
        alpha: fit.coefficients[0],
        delta: fit.coefficients[1],
        theta: fit.coefficients[2],
        gamma1: fit.coefficients[3],
        n_obs: chains,
        critical_value: options.critical_value,
        reject_unit_root: statistic < T::lit(options.critical_value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::{from_minute_index, Month};
    use crate::ingest::MinuteBar;

    fn grid() -> Grid {
        Grid::month(Month::new(2016, 3).unwrap())
    }

    fn bars(prices: &[Option<f64>]) -> BarSeries {
        let g = grid();
        let bars = prices
            .iter()
            .enumerate()
            .filter_map(|(k, p)| p.map(|p| MinuteBar::flat(from_minute_index(g.origin + k as i64), p)))
            .collect();
        BarSeries { asset: "EUR/USD".parse().unwrap(), bars, tz_offset_minutes: 0 }
    }

    #[test]
    fn unit_log_return() {
        let e = std::f64::consts::E;
        let r: ReturnSeries<f64> = log_returns(&bars(&[Some(100.0), Some(100.0 * e)]), &grid()).unwrap();
        assert_eq!(r.len(), grid().len - 1);
        match r.cells[0] {
            ReturnCell::Value(v) => assert!((v - 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert_eq!(r.cells[1], ReturnCell::Missing);
    }

    #[test]
    fn equal_prices_are_zero() {
        let r: ReturnSeries<f64> = log_returns(&bars(&[Some(1.1), Some(1.1)]), &grid()).unwrap();
        assert_eq!(r.cells[0], ReturnCell::Zero);
    }

    #[test]
    fn gap_makes_both_neighbours_missing() {
        let r: ReturnSeries<f64> = log_returns(&bars(&[Some(1.1), None, Some(1.2)]), &grid()).unwrap();
        assert_eq!(&r.cells[..2], &[ReturnCell::Missing, ReturnCell::Missing]);
    }

    #[test]
    fn reversed_pair_negates() {
        let a: ReturnSeries<f64> = log_returns(&bars(&[Some(1.3), Some(1.7)]), &grid()).unwrap();
        let b: ReturnSeries<f64> = log_returns(&bars(&[Some(1.7), Some(1.3)]), &grid()).unwrap();
        assert_eq!(a.cells[0].value().unwrap(), -b.cells[0].value().unwrap());
    }

    #[test]
    fn non_positive_price_rejected() {
        let err = log_returns_from_prices::<f64>("EUR/USD".parse().unwrap(), grid(), &[Some(1.0), Some(-2.0)]).unwrap_err();
        assert!(matches!(err, ReturnsError::NonPositivePrice { position: 1, .. }));
    }

    #[test]
    fn off_grid_bar_rejected() {
        let mut s = bars(&[Some(1.0)]);
        s.bars[0].timestamp = from_minute_index(grid().origin - 1);
        assert!(matches!(log_returns::<f64>(&s, &grid()), Err(ReturnsError::OffGrid { .. })));
    }

    #[test]
    fn adf_insufficient_chains() {
        let mut prices = vec![None; 40];
        for p in prices.iter_mut().step_by(3) {
            *p = Some(1.0);
        }
        let r: ReturnSeries<f64> = log_returns(&bars(&prices), &grid()).unwrap();
        assert!(matches!(adf_test(&r, &AdfOptions::default()), Err(AdfError::Insufficient { chains: 0, .. })));
    }
}
