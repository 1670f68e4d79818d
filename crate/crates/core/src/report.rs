//! CSV renderings of results. Numbers use the shortest representation that
//! reads back to the same value, so output is byte-stable.

use std::fmt::Write;

use crate::netrank::{LeadLagNetwork, Persistence, RankVector, RankingRow, Sign};
use crate::returns::{AdfError, AdfResult};
use crate::scalar::Real;
use crate::scenario::Census;
use crate::sweep::{EstimatorKind, SigMatrix};

/// Plain decimal for moderate magnitudes, scientific notation otherwise.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn numt<T: Real>(x: T) -> String {
    num(x.to_f64_lossy())
}

pub fn sig_matrix_csv<T: Real>(sig: &SigMatrix<T>) -> String {
    let granger = sig.estimator.kind == EstimatorKind::Granger;
    let mut out = String::new();
    if granger {
        out.push_str("leader,lagger,n,alpha_hat,beta_hat,gamma_hat,R2,F,p,pass_bonf,pass_nominal,status\n");
    } else {
        out.push_str("leader,lagger,tau,n,rho,p,pass_bonf,pass_nominal,status\n");
    }
    for (i, row) in sig.entries.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            let (leader, lagger) = (sig.assets[i], sig.assets[j]);
            if granger {
                let nan = T::nan();
                let (a, b, g, r2) = e.granger.map_or((nan, nan, nan, nan), |d| (d.alpha_hat, d.beta_hat, d.gamma_hat, d.r2));
                let _ = writeln!(
                    out,
                    "{leader},{lagger},{},{},{},{},{},{},{},{},{},{}",
                    e.n,
                    numt(a),
                    numt(b),
                    numt(g),
                    numt(r2),
                    numt(e.statistic),
                    numt(e.p_value),
                    e.pass_bonferroni,
                    e.pass_nominal,
                    e.status.label()
                );
            } else {
                let _ = writeln!(
                    out,
                    "{leader},{lagger},{},{},{},{},{},{},{}",
                    sig.tau,
                    e.n,
                    numt(e.statistic),
                    numt(e.p_value),
                    e.pass_bonferroni,
                    e.pass_nominal,
                    e.status.label()
                );
            }
        }
    }
    out
}

pub fn edges_csv<T: Real>(net: &LeadLagNetwork<T>) -> String {
    let mut out = String::from("from,to,weight\n");
    for e in &net.edges {
        let _ = writeln!(out, "{},{},{}", net.nodes[e.from], net.nodes[e.to], numt(e.weight));
    }
    out
}

pub fn pagerank_csv<T: Real>(rv: &RankVector<T>) -> String {
    let mut out = String::from("rank,asset,score\n");
    for (k, &i) in rv.order().iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", k + 1, rv.nodes[i], numt(rv.scores[i]));
    }
    out
}

pub fn ranking_csv(rows: &[RankingRow]) -> String {
    let mut out = String::from("rank,asset,value,months\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.rank, r.asset, num(r.value), r.months);
    }
    out
}

/// Top-`k` leaders side by side, one column per ranking.
pub fn top_table_csv(rankings: &[(String, Vec<RankingRow>)], k: usize) -> String {
    let mut out = String::from("rank");
    for (tag, _) in rankings {
        let _ = write!(out, ",{tag}");
    }
    out.push('\n');
    for pos in 0..k {
        let _ = write!(out, "{}", pos + 1);
        for (_, rows) in rankings {
            match rows.get(pos) {
                Some(r) => {
                    let _ = write!(out, ",{}", r.asset);
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

pub fn persistence_csv(p: &Persistence) -> String {
    let mut out = String::from("leader,lagger,sign,months\n");
    for pair in &p.pairs {
        let sign = match pair.sign {
            Sign::Positive => "+",
            Sign::Negative => "-",
        };
        let _ = writeln!(out, "{},{},{sign},{}", pair.leader, pair.lagger, pair.months);
    }
    out
}

pub fn sign_flips_csv(p: &Persistence) -> String {
    let mut out = String::from("leader,lagger\n");
    for (a, b) in &p.sign_flips {
        let _ = writeln!(out, "{a},{b}");
    }
    out
}

pub fn census_csv(c: &Census) -> String {
    let mut out = String::from("leader");
    for a in &c.assets {
        let _ = write!(out, ",{a}");
    }
    out.push('\n');
    for (a, row) in c.assets.iter().zip(&c.counts) {
        let _ = write!(out, "{a}");
        for n in row {
            let _ = write!(out, ",{n}");
        }
        out.push('\n');
    }
    out
}

/// One ADF outcome; a failed test is reported with a status instead of a statistic.
pub struct AdfRow<T> {
    pub asset: crate::asset::AssetId,
    pub window: String,
    pub result: Result<AdfResult<T>, AdfError>,
}

pub fn adf_csv<T: Real>(rows: &[AdfRow<T>]) -> String {
    let mut out = String::from("asset,window,statistic,n_obs,reject\n");
    for r in rows {
        match &r.result {
            Ok(a) => {
                let _ = writeln!(out, "{},{},{},{},{}", r.asset, r.window, numt(a.statistic), a.n_obs, a.reject_unit_root);
            }
            Err(AdfError::Insufficient { chains, .. }) => {
                let _ = writeln!(out, "{},{},NaN,{chains},insufficient", r.asset, r.window);
            }
            Err(_) => {
                let _ = writeln!(out, "{},{},NaN,0,degenerate", r.asset, r.window);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.0, 1.0, -0.25, 1e-300, 2.2957e-6, 0.1 + 0.2, 123456.789, f64::MIN_POSITIVE] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(num(1e-300), "1e-300");
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(f64::NAN), "NaN");
    }
}
