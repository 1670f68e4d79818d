//! Lead-lag networks, PageRank leader ranking, monthly aggregation and
//! cross-month persistence.
//!
//! An edge points from the lagger to its leader, so a random walk drifts
//! towards the rates that move first and PageRank mass piles up on leaders.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asset::AssetId;
use crate::calendar::Span;
use crate::scalar::Real;
use crate::sweep::SigMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RankError {
    #[error("network has no nodes")]
    Empty,
    #[error("PageRank did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("damping must lie in [0, 1), got {0}")]
    Damping(f64),
    #[error("no months to aggregate")]
    NoMonths,
    #[error("months cover different asset universes")]
    UniverseMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge<T> {
    /// Lagger node index.
    pub from: usize,
    /// Leader node index.
    pub to: usize,
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeadLagNetwork<T> {
    pub nodes: Vec<AssetId>,
    pub edges: Vec<Edge<T>>,
    pub weighted: bool,
    pub span: Option<Span>,
}

impl<T: Real> LeadLagNetwork<T> {
    pub fn new(nodes: Vec<AssetId>, edges: Vec<Edge<T>>, weighted: bool) -> Self {
        LeadLagNetwork { nodes, edges, weighted, span: None }
    }

    pub fn scaled(&self, factor: T) -> Self {
        let edges = self.edges.iter().map(|e| Edge { weight: e.weight * factor, ..*e }).collect();
        LeadLagNetwork { edges, ..self.clone() }
    }
}

/// One edge `lagger → leader` per Bonferroni-passing pair.
pub fn build_network<T: Real>(sig: &SigMatrix<T>, weighted: bool) -> LeadLagNetwork<T> {
    let edges = sig
        .bonferroni_pairs()
        .into_iter()
        .map(|(leader, lagger)| Edge {
            from: lagger,
            to: leader,
            weight: if weighted { sig.entry(leader, lagger).statistic.abs() } else { T::one() },
        })
        .filter(|e| e.weight > T::zero())
        .collect();
    LeadLagNetwork { nodes: sig.assets.clone(), edges, weighted, span: Some(sig.span) }
}

/// Sparse row-stochastic transition structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<T> {
    /// `rows[j]` lists `(i, a_ji)` with `Σ_i a_ji = 1`.
    pub rows: Vec<Vec<(usize, T)>>,
    /// Nodes without outgoing weight.
    pub dangling: Vec<bool>,
}

/// `a_ji = w_ji / Σ_k w_jk`; rows without out-edges are flagged dangling.
pub fn row_stochastic<T: Real>(net: &LeadLagNetwork<T>) -> Transition<T> {
    let n = net.nodes.len();
    let mut acc: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); n];
    for e in &net.edges {
        if e.from == e.to {
            continue;
        }
        let w = acc[e.from].entry(e.to).or_insert(T::zero());
        *w = *w + e.weight;
    }
    let mut rows = Vec::with_capacity(n);
    let mut dangling = Vec::with_capacity(n);
    for row in acc {
        let total: T = row.values().copied().sum();
        if total > T::zero() {
            rows.push(row.into_iter().map(|(i, w)| (i, w / total)).collect());
            dangling.push(false);
        } else {
            rows.push(Vec::new());
            dangling.push(true);
        }
    }
    Transition { rows, dangling }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PageRankOptions {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankOptions {
    fn default() -> Self {
        PageRankOptions { damping: 0.85, tol: 1e-12, max_iter: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankVector<T> {
    pub nodes: Vec<AssetId>,
    pub scores: Vec<T>,
    pub damping: f64,
    pub iterations: usize,
    /// L1 change of the final iteration.
    pub residual: T,
}

impl<T: Real> RankVector<T> {
    /// Node indices by descending score; ties broken by asset code.
    pub fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| {
            self.scores[b].partial_cmp(&self.scores[a]).unwrap_or(Ordering::Equal).then(self.nodes[a].cmp(&self.nodes[b]))
        });
        idx
    }
}

/// One step `s' = d·(Aᵀs + dangling/N) + (1-d)/N`.
pub fn pagerank_step<T: Real>(t: &Transition<T>, scores: &[T], damping: T) -> Vec<T> {
    let n = scores.len();
    let nf = T::from_usize_lossy(n);
    let dangling_mass: T = scores.iter().zip(&t.dangling).filter(|(_, &d)| d).map(|(&s, _)| s).sum();
    let base = (T::one() - damping) / nf + damping * dangling_mass / nf;
    let mut next = vec![base; n];
    for (j, row) in t.rows.iter().enumerate() {
        let mass = damping * scores[j];
        for &(i, a) in row {
            next[i] = next[i] + mass * a;
        }
    }
    next
}

/// Power iteration with uniform teleportation and uniform dangling redistribution.
pub fn pagerank<T: Real>(net: &LeadLagNetwork<T>, options: &PageRankOptions) -> Result<RankVector<T>, RankError> {
    let n = net.nodes.len();
    if n == 0 {
        return Err(RankError::Empty);
    }
    if !(0.0..1.0).contains(&options.damping) {
        return Err(RankError::Damping(options.damping));
    }
    let t = row_stochastic(net);
    let d = T::lit(options.damping);
    let mut scores = vec![T::one() / T::from_usize_lossy(n); n];
    let mut residual = T::infinity();
    for iter in 1..=options.max_iter {
        let mut next = pagerank_step(&t, &scores, d);
        let total: T = next.iter().copied().sum();
        for s in next.iter_mut() {
            *s = *s / total;
        }
        residual = next.iter().zip(&scores).map(|(&a, &b)| (a - b).abs()).sum();
        scores = next;
        if residual < T::lit(options.tol) {
            return Ok(RankVector { nodes: net.nodes.clone(), scores, damping: options.damping, iterations: iter, residual });
        }
    }
    Err(RankError::NoConvergence { iterations: options.max_iter, residual: residual.to_f64_lossy() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    /// Mean PageRank score; an absent node-month counts as 0.
    #[default]
    Score,
    /// Mean 1-based rank position; an absent node-month counts as last + 1.
    Position,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingRow {
    pub rank: usize,
    pub asset: AssetId,
    pub value: f64,
    pub months: usize,
}

/// Averages monthly rank vectors into one ranking (best first).
pub fn aggregate_months<T: Real>(months: &[RankVector<T>], how: Aggregate) -> Result<Vec<RankingRow>, RankError> {
    if months.is_empty() {
        return Err(RankError::NoMonths);
    }
    let mut sums: BTreeMap<AssetId, (f64, usize)> = BTreeMap::new();
    for rv in months {
        for a in &rv.nodes {
            sums.entry(*a).or_insert((0.0, 0));
        }
    }
    let count = months.len() as f64;
    for rv in months {
        match how {
            Aggregate::Score => {
                for (a, s) in rv.nodes.iter().zip(&rv.scores) {
                    let e = sums.get_mut(a).expect("seeded");
                    e.0 += s.to_f64_lossy();
                    e.1 += 1;
                }
            }
            Aggregate::Position => {
                let order = rv.order();
                for (pos, &k) in order.iter().enumerate() {
                    let e = sums.get_mut(&rv.nodes[k]).expect("seeded");
                    e.0 += (pos + 1) as f64;
                    e.1 += 1;
                }
                let absent_position = (rv.nodes.len() + 1) as f64;
                for (a, e) in sums.iter_mut() {
                    if !rv.nodes.contains(a) {
                        e.0 += absent_position;
                    }
                }
            }
        }
    }
    let mut rows: Vec<RankingRow> =
        sums.into_iter().map(|(asset, (total, present))| RankingRow { rank: 0, asset, value: total / count, months: present }).collect();
    rows.sort_by(|a, b| {
        let primary = match how {
            Aggregate::Score => b.value.partial_cmp(&a.value),
            Aggregate::Position => a.value.partial_cmp(&b.value),
        };
        primary.unwrap_or(Ordering::Equal).then(a.asset.cmp(&b.asset))
    });
    for (k, r) in rows.iter_mut().enumerate() {
        r.rank = k + 1;
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Sign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersistentPair {
    pub leader: AssetId,
    pub lagger: AssetId,
    pub sign: Sign,
    pub months: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Persistence {
    pub pairs: Vec<PersistentPair>,
    /// Pairs significant every month but with a sign change.
    pub sign_flips: Vec<(AssetId, AssetId)>,
}

/// Pairs significant at level `level` (no multiple-test correction) in every
/// month, with a constant sign.
pub fn persistence<T: Real>(months: &[SigMatrix<T>], level: f64) -> Result<Persistence, RankError> {
    let first = months.first().ok_or(RankError::NoMonths)?;
    if months.iter().any(|m| m.assets != first.assets) {
        return Err(RankError::UniverseMismatch);
    }
    let level = T::lit(level);
    let n = first.assets.len();
    let mut out = Persistence::default();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut signs = Vec::with_capacity(months.len());
            let all = months.iter().all(|m| {
                let e = m.entry(i, j);
                let pass = e.status == crate::sweep::EntryStatus::Ok && e.p_value < level;
                if pass {
                    signs.push(e.signed > T::zero());
                }
                pass
            });
            if !all {
                continue;
            }
            let (leader, lagger) = (first.assets[i], first.assets[j]);
            if signs.iter().all(|&s| s) {
                out.pairs.push(PersistentPair { leader, lagger, sign: Sign::Positive, months: months.len() });
            } else if signs.iter().all(|&s| !s) {
                out.pairs.push(PersistentPair { leader, lagger, sign: Sign::Negative, months: months.len() });
            } else {
                out.sign_flips.push((leader, lagger));
            }
        }
    }
    Ok(out)
}
