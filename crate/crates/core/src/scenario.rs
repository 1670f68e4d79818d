//! Paired-observation extraction under the four restriction scenarios.
//!
//! For a leader `i` and lagger `j`, position `n` contributes the triple
//! `(r_i(t_n), r_j(t_n), r_j(t_{n+τ}))` when the scenario predicate holds:
//!
//! | scenario | leader at t_n | lagger at t_n | lagger at t_{n+τ} |
//! |----------|---------------|---------------|-------------------|
//! | S1       | nonzero       | observed      | observed          |
//! | S2       | nonzero       | observed      | nonzero           |
//! | S3       | nonzero       | nonzero       | nonzero           |
//! | S4       | nonzero       | nonzero       | observed          |
//!
//! "Observed" admits zero returns but never missing data, so every triple
//! is fully numeric.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asset::AssetId;
use crate::calendar::Grid;
use crate::returns::{ReturnCell, ReturnSeries};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("{leader} and {lagger} are on different grids")]
    GridMismatch { leader: AssetId, lagger: AssetId },
    #[error("unknown scenario `{0}` (expected s1..s4)")]
    Unknown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioId {
    S1,
    S2,
    S3,
    S4,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 4] = [ScenarioId::S1, ScenarioId::S2, ScenarioId::S3, ScenarioId::S4];

    /// Lagger value at t_n used, or `None` when the cell fails the predicate.
    #[inline]
    fn admits<T: Real>(self, leader: ReturnCell<T>, lag_now: ReturnCell<T>, lag_next: ReturnCell<T>) -> Option<(T, T, T)> {
        let x = leader.value()?;
        let (y, yn) = match self {
            ScenarioId::S1 => (lag_now.observed()?, lag_next.observed()?),
            ScenarioId::S2 => (lag_now.observed()?, lag_next.value()?),
            ScenarioId::S3 => (lag_now.value()?, lag_next.value()?),
            ScenarioId::S4 => (lag_now.value()?, lag_next.observed()?),
        };
        Some((x, y, yn))
    }

    pub fn label(self) -> &'static str {
        match self {
            ScenarioId::S1 => "s1",
            ScenarioId::S2 => "s2",
            ScenarioId::S3 => "s3",
            ScenarioId::S4 => "s4",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ScenarioId {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "s1" | "1" => Ok(ScenarioId::S1),
            "s2" | "2" => Ok(ScenarioId::S2),
            "s3" | "3" => Ok(ScenarioId::S3),
            "s4" | "4" => Ok(ScenarioId::S4),
            _ => Err(ScenarioError::Unknown(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triple<T> {
    /// Leader return at t_n.
    pub x: T,
    /// Lagger return at t_n.
    pub y: T,
    /// Lagger return at t_{n+τ}.
    pub y_next: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample<T> {
    pub leader: AssetId,
    pub lagger: AssetId,
    pub scenario: ScenarioId,
    pub tau: usize,
    pub grid: Grid,
    /// Grid positions `n` the triples come from, ascending.
    pub positions: Vec<usize>,
    pub triples: Vec<Triple<T>>,
}

impl<T: Real> PairedSample<T> {
    pub fn n(&self) -> usize {
        self.triples.len()
    }

    /// Sample built directly from triples (no grid provenance).
    pub fn from_triples(leader: AssetId, lagger: AssetId, scenario: ScenarioId, grid: Grid, triples: Vec<Triple<T>>) -> Self {
        let positions = (0..triples.len()).collect();
        PairedSample { leader, lagger, scenario, tau: 1, grid, positions, triples }
    }

    pub fn xs(&self) -> Vec<T> {
        self.triples.iter().map(|t| t.x).collect()
    }

    pub fn ys(&self) -> Vec<T> {
        self.triples.iter().map(|t| t.y).collect()
    }

    pub fn y_nexts(&self) -> Vec<T> {
        self.triples.iter().map(|t| t.y_next).collect()
    }
}

fn check_grids<T>(leader: &ReturnSeries<T>, lagger: &ReturnSeries<T>) -> Result<(), ScenarioError> {
    if leader.grid != lagger.grid || leader.cells.len() != lagger.cells.len() {
        return Err(ScenarioError::GridMismatch { leader: leader.asset, lagger: lagger.asset });
    }
    Ok(())
}

/// Extracts the lag-one sample for `leader → lagger`.
pub fn extract<T: Real>(leader: &ReturnSeries<T>, lagger: &ReturnSeries<T>, scenario: ScenarioId) -> Result<PairedSample<T>, ScenarioError> {
    extract_lagged(leader, lagger, scenario, 1)
}

/// As [`extract`] with an arbitrary lag `tau` (in minutes).
pub fn extract_lagged<T: Real>(
    leader: &ReturnSeries<T>,
    lagger: &ReturnSeries<T>,
    scenario: ScenarioId,
    tau: usize,
) -> Result<PairedSample<T>, ScenarioError> {
    check_grids(leader, lagger)?;
    let len = leader.cells.len().saturating_sub(tau);
    let mut positions = Vec::new();
    let mut triples = Vec::new();
    for n in 0..len {
        if let Some((x, y, y_next)) = scenario.admits(leader.cells[n], lagger.cells[n], lagger.cells[n + tau]) {
            positions.push(n);
            triples.push(Triple { x, y, y_next });
        }
    }
    Ok(PairedSample { leader: leader.asset, lagger: lagger.asset, scenario, tau, grid: leader.grid, positions, triples })
}

/// Number of triples [`extract_lagged`] would produce, without materializing them.
pub fn count<T: Real>(leader: &ReturnSeries<T>, lagger: &ReturnSeries<T>, scenario: ScenarioId, tau: usize) -> Result<usize, ScenarioError> {
    check_grids(leader, lagger)?;
    let len = leader.cells.len().saturating_sub(tau);
    Ok((0..len)
        .filter(|&n| scenario.admits(leader.cells[n], lagger.cells[n], lagger.cells[n + tau]).is_some())
        .count())
}

/// N×N table of sample sizes; row = leader, column = lagger.
#[derive(Debug, Clone, PartialEq)]
pub struct Census {
    pub assets: Vec<AssetId>,
    pub scenario: ScenarioId,
    pub counts: Vec<Vec<usize>>,
}

pub fn sample_census<T: Real>(series: &[ReturnSeries<T>], scenario: ScenarioId, tau: usize) -> Result<Census, ScenarioError> {
    let n = series.len();
    let counts = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| count(&series[i], &series[j], scenario, tau)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Census { assets: series.iter().map(|s| s.asset).collect(), scenario, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::Month;
    use ReturnCell::{Missing, Value, Zero};

    fn series(code: &str, cells: Vec<ReturnCell<f64>>) -> ReturnSeries<f64> {
        let grid = Grid { len: cells.len() + 1, ..Grid::month(Month::new(2016, 1).unwrap()) };
        ReturnSeries::new(code.parse().unwrap(), grid, cells)
    }

    #[test]
    fn single_triple_example() {
        let leader = series("EUR/USD", vec![Value(1.0), Zero]);
        let lagger = series("USD/JPY", vec![Zero, Value(2.0)]);
        let s1 = extract(&leader, &lagger, ScenarioId::S1).unwrap();
        assert_eq!(s1.triples, vec![Triple { x: 1.0, y: 0.0, y_next: 2.0 }]);
        assert_eq!(s1.positions, vec![0]);
        let s2 = extract(&leader, &lagger, ScenarioId::S2).unwrap();
        assert_eq!(s2.triples, s1.triples);
        assert_eq!(extract(&leader, &lagger, ScenarioId::S3).unwrap().n(), 0);
        assert_eq!(extract(&leader, &lagger, ScenarioId::S4).unwrap().n(), 0);
    }

    #[test]
    fn missing_never_enters() {
        let leader = series("EUR/USD", vec![Value(1.0), Value(2.0), Value(3.0)]);
        let lagger = series("USD/JPY", vec![Missing, Value(1.0), Missing]);
        for s in ScenarioId::ALL {
            assert_eq!(extract(&leader, &lagger, s).unwrap().n(), 0, "{s}");
        }
    }

    #[test]
    fn grid_mismatch() {
        let a = series("EUR/USD", vec![Value(1.0), Zero]);
        let mut b = series("USD/JPY", vec![Value(1.0), Zero]);
        b.grid = Grid::month(Month::new(2016, 2).unwrap());
        assert!(matches!(extract(&a, &b, ScenarioId::S1), Err(ScenarioError::GridMismatch { .. })));
    }

    #[test]
    fn disjoint_series_have_zero_counts() {
        let a = series("EUR/USD", vec![Value(1.0), Missing, Value(1.0), Missing]);
        let b = series("USD/JPY", vec![Missing, Value(1.0), Missing, Value(1.0)]);
        let census = sample_census(&[a, b], ScenarioId::S1, 1).unwrap();
        assert_eq!(census.counts[0][1], 0);
        assert_eq!(census.counts[1][0], 0);
    }

    #[test]
    fn self_census_matches_brute_force() {
        let cells = vec![Value(1.0), Value(-1.0), Zero, Value(2.0), Value(0.5), Missing, Value(1.0), Value(3.0)];
        let brute = cells.windows(2).filter(|w| w[0].is_value() && w[1].is_value()).count();
        let a = series("EUR/USD", cells);
        let census = sample_census(&[a], ScenarioId::S3, 1).unwrap();
        assert_eq!(census.counts[0][0], brute);
    }

    #[test]
    fn parse_labels() {
        assert_eq!("S3".parse::<ScenarioId>().unwrap(), ScenarioId::S3);
        assert!("s5".parse::<ScenarioId>().is_err());
    }
}
