//! End-to-end run: bar files in, a self-describing result bundle out.
//!
//! Bundle layout under the output directory:
//!
//! ```text
//! adf.csv
//! months/YYYY-MM/{tag}.csv           significance table per estimator
//! months/YYYY-MM/edges_{tag}.csv     lead-lag network
//! months/YYYY-MM/pagerank_{tag}.csv  monthly scores
//! rank_{tag}.csv                     ranking aggregated over months
//! top.csv                            top leaders per estimator
//! persistence_{tag}.csv, sign_flips_{tag}.csv
//! manifest.json                      inputs, config, output hashes
//! timings.json                       wall-clock per stage (not hashed)
//! ```
//!
//! Everything except `timings.json` is a pure function of the inputs and the
//! config, so repeated runs give byte-identical bundles. Files are written to
//! `<out>.partial` and renamed into place once complete.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use crate::asset::AssetId;
use crate::calendar::{Grid, Month, Span};
use crate::config::{AdfWindow, Config};
use crate::dataset::{load_panel, load_series, scan, sha256_hex, Catalog, FileRecord};
use crate::error::{Error, Result};
use crate::netrank::{aggregate_months, build_network, pagerank, persistence, RankVector, RankingRow};
use crate::report::{self, AdfRow};
use crate::returns::adf_test;
use crate::sweep::{significance_sweep, Estimator, SigMatrix};

/// Catalog, asset universe and months selected by a config.
pub struct Selection {
    pub catalog: Catalog,
    pub assets: Vec<AssetId>,
    pub months: Vec<Month>,
}

pub fn select(config: &Config) -> Result<Selection> {
    let catalog = scan(&config.data.dir, &config.data.pattern)?;
    let assets = match &config.data.assets {
        Some(list) => {
            let set: BTreeSet<AssetId> = list.iter().copied().collect();
            set.into_iter().collect()
        }
        None => catalog.assets(),
    };
    let months = match config.months()? {
        Some(m) => m,
        None => catalog.months(),
    };
    Ok(Selection { catalog, assets, months })
}

/// ADF rows for every asset over each window.
pub fn adf_table(sel: &Selection, config: &Config) -> Result<(Vec<AdfRow<f64>>, Vec<FileRecord>)> {
    let spans: Vec<Span> = match config.analysis.adf_window {
        AdfWindow::Month => sel.months.iter().map(|&m| Span::Month(m)).collect(),
        AdfWindow::Year => {
            let years: BTreeSet<i32> = sel.months.iter().map(|m| m.year).collect();
            years.into_iter().map(Span::Year).collect()
        }
    };
    let mut rows = Vec::new();
    let mut files = Vec::new();
    for span in spans {
        let grid = match span {
            Span::Month(m) => Grid::month(m),
            Span::Year(y) => Grid::year(y),
        };
        let results = sel
            .assets
            .par_iter()
            .map(|&a| {
                let (series, records) = load_series(&sel.catalog, a, &grid, &config.data.format)?;
                let row = AdfRow { asset: a, window: span.to_string(), result: adf_test(&series, &config.analysis.adf) };
                Ok::<_, Error>((row, records))
            })
            .collect::<Result<Vec<_>>>()?;
        for (row, records) in results {
            rows.push(row);
            files.extend(records);
        }
    }
    Ok((rows, files))
}

/// Output of one estimator over the selected months.
pub struct EstimatorRun {
    pub estimator: Estimator,
    pub months: Vec<SigMatrix<f64>>,
    pub ranks: Vec<RankVector<f64>>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub bundle_hash: String,
    pub months: Vec<Month>,
    pub assets: Vec<AssetId>,
    pub estimators: Vec<Estimator>,
    /// Top of the aggregated ranking per estimator tag.
    pub leaders: BTreeMap<String, Vec<RankingRow>>,
}

struct Bundle {
    root: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl Bundle {
    fn write(&mut self, rel: &str, body: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| Error::Output { path: parent.to_path_buf(), source })?;
        }
        fs::write(&path, body).map_err(|source| Error::Output { path: path.clone(), source })?;
        self.hashes.insert(rel.to_string(), sha256_hex(body));
        Ok(())
    }

    fn digest(&self) -> String {
        let mut listing = String::new();
        for (rel, sha) in &self.hashes {
            listing.push_str(&format!("{sha}  {rel}\n"));
        }
        sha256_hex(listing.as_bytes())
    }
}

fn partial_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".partial");
    out.with_file_name(name)
}

/// Runs every stage and writes the bundle to `out_dir`, replacing any previous one.
pub fn run_pipeline(config: &Config, out_dir: &Path) -> Result<RunSummary> {
    config.validate()?;
    let partial = partial_path(out_dir);
    if partial.exists() {
        fs::remove_dir_all(&partial).map_err(|source| Error::Output { path: partial.clone(), source })?;
    }
    fs::create_dir_all(&partial).map_err(|source| Error::Output { path: partial.clone(), source })?;
    let result = run_into(config, &partial);
    match result {
        Ok(mut summary) => {
            if out_dir.exists() {
                fs::remove_dir_all(out_dir).map_err(|source| Error::Output { path: out_dir.to_path_buf(), source })?;
            }
            fs::rename(&partial, out_dir).map_err(|source| Error::Output { path: out_dir.to_path_buf(), source })?;
            summary.out_dir = out_dir.to_path_buf();
            Ok(summary)
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&partial);
            Err(e)
        }
    }
}

fn run_into(config: &Config, root: &Path) -> Result<RunSummary> {
    let mut timings: BTreeMap<String, f64> = BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut BTreeMap<String, f64>| {
        timings.insert(name.to_string(), clock.elapsed().as_secs_f64());
        clock = Instant::now();
    };
    let sel = select(config).map_err(|e| e.at("ingest"))?;
    let estimators = config.estimators()?;
    let mut bundle = Bundle { root: root.to_path_buf(), hashes: BTreeMap::new() };
    lap("ingest", &mut timings);

    let (adf_rows, mut inputs) = adf_table(&sel, config).map_err(|e| e.at("adf"))?;
    bundle.write("adf.csv", report::adf_csv(&adf_rows).as_bytes())?;
    lap("adf", &mut timings);

    let mut runs: Vec<EstimatorRun> = estimators.iter().map(|&e| EstimatorRun { estimator: e, months: Vec::new(), ranks: Vec::new() }).collect();
    let mut absent = Vec::new();
    for &month in &sel.months {
        let panel = load_panel(&sel.catalog, &sel.assets, Span::Month(month), &config.data.format).map_err(|e| Error::from(e).at(format!("returns {month}")))?;
        inputs.extend(panel.files.iter().cloned());
        absent.extend(panel.absent.iter().map(|a| json!({ "month": month.to_string(), "asset": a.to_string() })));
        for run in runs.iter_mut() {
            let tag = run.estimator.tag();
            let stage = format!("{tag} {month}");
            let sig = significance_sweep(&panel.series, run.estimator, &config.sweep).map_err(|e| Error::from(e).at(stage.clone()))?;
            let net = build_network(&sig, run.estimator.weighted());
            let rv = pagerank(&net, &config.pagerank).map_err(|e| Error::from(e).at(format!("pagerank {stage}")))?;
            let dir = format!("months/{month}");
            bundle.write(&format!("{dir}/{tag}.csv"), report::sig_matrix_csv(&sig).as_bytes())?;
            bundle.write(&format!("{dir}/edges_{tag}.csv"), report::edges_csv(&net).as_bytes())?;
            bundle.write(&format!("{dir}/pagerank_{tag}.csv"), report::pagerank_csv(&rv).as_bytes())?;
            run.months.push(sig);
            run.ranks.push(rv);
        }
        lap(&format!("month {month}"), &mut timings);
    }

    let mut leaders = BTreeMap::new();
    let mut tables = Vec::new();
    for run in &runs {
        let tag = run.estimator.tag();
        if run.months.is_empty() {
            continue;
        }
        let rows = aggregate_months(&run.ranks, config.analysis.aggregate).map_err(|e| Error::from(e).at(format!("rank {tag}")))?;
        bundle.write(&format!("rank_{tag}.csv"), report::ranking_csv(&rows).as_bytes())?;
        let p = persistence(&run.months, config.analysis.persistence_level).map_err(|e| Error::from(e).at(format!("persist {tag}")))?;
        bundle.write(&format!("persistence_{tag}.csv"), report::persistence_csv(&p).as_bytes())?;
        bundle.write(&format!("sign_flips_{tag}.csv"), report::sign_flips_csv(&p).as_bytes())?;
        let top: Vec<RankingRow> = rows.iter().take(config.analysis.top).cloned().collect();
        tables.push((tag.clone(), top.clone()));
        leaders.insert(tag, top);
    }
    bundle.write("top.csv", report::top_table_csv(&tables, config.analysis.top).as_bytes())?;
    lap("aggregate", &mut timings);

    let bundle_hash = bundle.digest();
    inputs.sort_by(|a, b| a.path.cmp(&b.path));
    inputs.dedup();
    let data_dir = &config.data.dir;
    let input_list: Vec<_> = inputs
        .iter()
        .map(|f| {
            let rel = f.path.strip_prefix(data_dir).unwrap_or(&f.path);
            json!({ "path": rel.to_string_lossy(), "sha256": f.sha256, "rows": f.rows, "malformed": f.malformed })
        })
        .collect();
    let outputs: Vec<_> = bundle.hashes.iter().map(|(p, h)| json!({ "path": p, "sha256": h })).collect();
    let mut recorded = config.clone();
    recorded.output = None;
    let manifest = json!({
        "tool": "leadlag",
        "version": env!("CARGO_PKG_VERSION"),
        "config": recorded,
        "assets": sel.assets.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
        "months": sel.months.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
        "estimators": estimators.iter().map(|e| e.tag()).collect::<Vec<_>>(),
        "inputs": input_list,
        "absent": absent,
        "outputs": outputs,
        "bundle_hash": bundle_hash,
    });
    let body = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_plain(root, "manifest.json", &body)?;
    let body = serde_json::to_vec_pretty(&timings).expect("timings serialize");
    write_plain(root, "timings.json", &body)?;

    Ok(RunSummary { out_dir: root.to_path_buf(), bundle_hash, months: sel.months, assets: sel.assets, estimators, leaders })
}

fn write_plain(root: &Path, rel: &str, body: &[u8]) -> Result<()> {
    let path = root.join(rel);
    fs::write(&path, body).map_err(|source| Error::Output { path, source })
}
