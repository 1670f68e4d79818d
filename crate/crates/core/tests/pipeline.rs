//! End-to-end runs over small synthetic universes.

use std::fs;
use std::path::Path;

use leadlag::config::Config;
use leadlag::dataset::sha256_hex;
use leadlag::ingest::BarFormat;
use leadlag::synth::{generate, write_bar_files, AssetRef, PlantedEdge, SynthSpec};
use leadlag::ErrorKind;

fn universe(dir: &Path) -> SynthSpec {
    let spec = SynthSpec {
        n_assets: 6,
        minutes: 8000,
        months: 2,
        edges: (1..4).map(|k| PlantedEdge { leader: AssetRef::Index(0), lagger: AssetRef::Index(k), beta: 0.3 }).collect(),
        zero_prob: 0.05,
        gap_prob: 0.001,
        seed: 99,
        ..SynthSpec::default()
    };
    write_bar_files(&generate(&spec).unwrap(), dir, &BarFormat::histdata()).unwrap();
    spec
}

fn config(dir: &Path) -> Config {
    let mut config = Config::default();
    config.data.dir = dir.to_path_buf();
    config.analysis.months = Some("2016-01..2016-02".into());
    config.sweep.corr.min_samples = 50;
    config.sweep.granger.min_samples = 50;
    config
}

#[test]
fn planted_leader_tops_every_ranking() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let spec = universe(&data);
    let leader = spec.assets()[0];
    let out = tmp.path().join("out");

    let summary = leadlag::run_pipeline(&config(&data), &out).unwrap();
    assert_eq!(summary.months.len(), 2);
    assert_eq!(summary.assets.len(), 6);
    assert_eq!(summary.leaders.len(), 7);
    for (tag, rows) in &summary.leaders {
        assert_eq!(rows[0].asset, leader, "{tag}");
    }
    assert!(!tmp.path().join("out.partial").exists());

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["bundle_hash"], summary.bundle_hash.as_str());
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 12);
    assert!(manifest["config"]["output"].is_null());
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(outputs.iter().any(|o| o["path"] == "top.csv"));
    assert!(outputs.iter().any(|o| o["path"] == "months/2016-02/granger_s4.csv"));
    for o in outputs {
        let body = fs::read(out.join(o["path"].as_str().unwrap())).unwrap();
        assert_eq!(o["sha256"].as_str().unwrap(), sha256_hex(&body));
    }
    assert!(!outputs.iter().any(|o| o["path"] == "timings.json"));

    let persistent = fs::read_to_string(out.join("persistence_corr_s1.csv")).unwrap();
    assert_eq!(persistent.lines().next().unwrap(), "leader,lagger,sign,months");
    assert_eq!(persistent.lines().count(), 4, "{persistent}");

    // A rerun over an existing bundle replaces it.
    let again = leadlag::run_pipeline(&config(&data), &out).unwrap();
    assert_eq!(again.bundle_hash, summary.bundle_hash);
}

#[test]
fn empty_directory_fails_at_ingest() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    fs::create_dir(&data).unwrap();
    let out = tmp.path().join("out");
    let err = leadlag::run_pipeline(&config(&data), &out).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Data);
    assert_eq!(err.stage(), Some("ingest"));
    assert!(!out.exists());
    assert!(!tmp.path().join("out.partial").exists());
}

#[test]
fn corrupt_file_is_a_data_error_naming_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    universe(&data);
    fs::write(data.join("AUDCAD_201601.csv"), "not;a;bar\nnor;is;this\n").unwrap();
    let err = leadlag::run_pipeline(&config(&data), &tmp.path().join("out")).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Data, "{err}");
    assert!(err.to_string().contains("AUDCAD_201601.csv"), "{err}");
}

#[test]
fn invalid_config_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut bad = config(tmp.path());
    bad.pagerank.damping = 1.5;
    let err = leadlag::run_pipeline(&bad, &tmp.path().join("out")).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Config);

    bad = config(tmp.path());
    bad.analysis.estimators = vec!["corr_s9".into()];
    assert_eq!(leadlag::run_pipeline(&bad, &tmp.path().join("out")).unwrap_err().kind(), ErrorKind::Config);
}

#[test]
fn pagerank_budget_exhaustion_is_numeric() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    universe(&data);
    let mut config = config(&data);
    config.pagerank.max_iter = 1;
    config.analysis.estimators = vec!["corr_s1".into()];
    let err = leadlag::run_pipeline(&config, &tmp.path().join("out")).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Numeric, "{err}");
    assert!(err.stage().unwrap().starts_with("pagerank corr_s1"), "{err}");
}
