use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SPEC: &str = r#"
n_assets = 5
minutes = 6000
months = 2
seed = 17
zero_prob = 0.05

[[edges]]
leader = 0
lagger = 1
beta = 0.35

[[edges]]
leader = "AUD/CAD"
lagger = 2
beta = 0.35
"#;

const CONFIG: &str = r#"
[data]
dir = "data"

[analysis]
months = "2016-01..2016-02"
estimators = ["corr_s1", "granger_s3"]

[sweep.corr]
min_samples = 50

[sweep.granger]
min_samples = 50
"#;

fn leadlag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leadlag")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    _tmp: tempfile::TempDir,
    root: PathBuf,
    config: PathBuf,
}

fn fixture() -> Fixture {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().to_path_buf();
    fs::write(root.join("spec.toml"), SPEC).unwrap();
    let config = root.join("leadlag.toml");
    fs::write(&config, CONFIG).unwrap();
    let listed = stdout(&leadlag(&["synth", s(&root.join("spec.toml")), "--out", s(&root.join("data"))]));
    assert_eq!(listed.lines().count(), 10);
    assert!(listed.lines().all(|l| l.len() > 66 && l.as_bytes()[64] == b' '));
    Fixture { _tmp: tmp, root, config }
}

#[test]
fn analysis_commands_share_one_dataset() {
    let f = fixture();
    let cfg = s(&f.config);

    let run = stdout(&leadlag(&["--config", cfg, "run", "--out", s(&f.root.join("bundle"))]));
    assert!(run.starts_with("bundle "));
    assert!(run.lines().any(|l| l.starts_with("corr_s1: AUD/CAD ")), "{run}");
    assert!(f.root.join("bundle/manifest.json").exists());

    let corr = stdout(&leadlag(&["--config", cfg, "corr", "--month", "2016-01"]));
    let mut lines = corr.lines();
    assert_eq!(lines.next().unwrap(), "leader,lagger,tau,n,rho,p,pass_bonf,pass_nominal,status");
    // Full N×N, self-pairs included.
    assert_eq!(lines.count(), 25);

    let granger = stdout(&leadlag(&["--config", cfg, "granger", "--month", "2016-02", "--scenario", "s4"]));
    assert_eq!(granger.lines().next().unwrap(), "leader,lagger,n,alpha_hat,beta_hat,gamma_hat,R2,F,p,pass_bonf,pass_nominal,status");

    let pcorr = stdout(&leadlag(&["--config", cfg, "pcorr", "--month", "2016-01", "--tau", "2"]));
    assert!(pcorr.lines().nth(1).unwrap().contains(",2,"), "{pcorr}");

    let census = stdout(&leadlag(&["--config", cfg, "census", "--month", "2016-01", "--scenario", "s3"]));
    assert_eq!(census.lines().count(), 6);

    let nets = f.root.join("nets");
    let rank = stdout(&leadlag(&["--config", cfg, "rank", "--estimator", "corr", "--scenario", "s1", "--top", "2", "--emit-network", s(&nets)]));
    let rows: Vec<&str> = rank.lines().collect();
    assert_eq!(rows[0], "rank,asset,value,months");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("1,AUD/CAD,"), "{rank}");
    assert!(nets.join("edges_corr_s1_2016-02.csv").exists());

    let by_position = stdout(&leadlag(&["--config", cfg, "rank", "--estimator", "granger", "--scenario", "s3", "--aggregate", "position"]));
    assert!(by_position.lines().nth(1).unwrap().starts_with("1,AUD/CAD,1,"), "{by_position}");

    let persist = stdout(&leadlag(&["--config", cfg, "persist", "--estimator", "corr", "--scenario", "s1", "--level", "0.001"]));
    assert!(persist.lines().any(|l| l.starts_with("AUD/CAD,")), "{persist}");

    let adf = stdout(&leadlag(&["--config", cfg, "adf"]));
    assert_eq!(adf.lines().next().unwrap(), "asset,window,statistic,n_obs,reject");
    assert_eq!(adf.lines().count(), 6);
}

#[test]
fn ingest_normalizes_one_file() {
    let f = fixture();
    let file = f.root.join("data/AUDJPY_201601.csv");
    let out = f.root.join("norm/usdjpy.csv");
    stdout(&leadlag(&["ingest", s(&file), "--month", "2016-01", "--out", s(&out)]));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.lines().count() > 5000);
    assert!(text.starts_with("timestamp,open,high,low,close,volume\n"), "{}", &text[..80]);
}

#[test]
fn exit_codes_follow_error_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();

    let code = |out: Output| out.status.code().unwrap();
    assert_eq!(code(leadlag(&["--data", s(&empty), "adf"])), 3);
    assert_eq!(code(leadlag(&["--data", s(&tmp.path().join("nowhere")), "adf"])), 3);
    assert_eq!(code(leadlag(&["--config", s(&tmp.path().join("missing.toml")), "adf"])), 2);

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "[pagerank]\ndamping = 2.0\n").unwrap();
    assert_eq!(code(leadlag(&["--config", s(&bad), "--data", s(&empty), "run", "--out", s(&tmp.path().join("o"))])), 2);
    assert_eq!(code(leadlag(&["run"])), 2);
    assert_eq!(code(leadlag(&["--jobs", "0", "adf"])), 2);

    let f = fixture();
    let slow = f.root.join("slow.toml");
    fs::write(&slow, format!("{CONFIG}\n[pagerank]\nmax_iter = 1\n")).unwrap();
    let out = leadlag(&["--config", s(&slow), "rank", "--estimator", "corr", "--scenario", "s1"]);
    assert_eq!(code(out), 4);
}
