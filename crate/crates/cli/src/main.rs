//! `leadlag` command-line interface.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use leadlag::config::{Config, ConfigError};
use leadlag::dataset::{load_panel, sha256_hex};
use leadlag::ingest::{parse_bar_file, snap_to_grid, write_normalized};
use leadlag::netrank::{aggregate_months, build_network, pagerank, persistence, Aggregate};
use leadlag::pipeline::{adf_table, select, Selection};
use leadlag::report;
use leadlag::scenario::sample_census;
use leadlag::sweep::{significance_sweep, Estimator, EstimatorKind};
use leadlag::synth::{generate, write_bar_files, SynthSpec};
use leadlag::{AssetId, Error, ErrorKind, Month, ScenarioId, Span};

#[derive(Parser)]
#[command(name = "leadlag", version, about = "Lead-lag networks from one-minute exchange-rate bars")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory of bar files; overrides the config.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for synthetic data; overrides the spec.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory (default: stdout where it makes sense).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse one bar file and write it in the normalized UTC layout.
    Ingest {
        file: PathBuf,
        /// Rate, e.g. EUR/USD; inferred from a `EURUSD_201601.csv` name.
        #[arg(long)]
        asset: Option<AssetId>,
        /// Keep only bars of this UTC month (YYYY-MM).
        #[arg(long)]
        month: Option<Month>,
    },
    /// Augmented Dickey-Fuller test per asset and window.
    Adf,
    /// Sample sizes of every ordered pair under one scenario.
    Census {
        #[arg(long)]
        month: Month,
        #[arg(long, default_value = "s1")]
        scenario: ScenarioId,
    },
    /// Lagged correlation table.
    Corr(PairArgs),
    /// Partial correlation table (scenario s3).
    Pcorr(PairArgs),
    /// Granger causality table (scenario s3 or s4).
    Granger(PairArgs),
    /// PageRank leader ranking aggregated over months.
    Rank {
        #[command(flatten)]
        est: EstArgs,
        /// YYYY-MM..YYYY-MM (default: config or every month with data).
        #[arg(long)]
        months: Option<String>,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long, value_enum)]
        aggregate: Option<AggregateArg>,
        /// Write monthly edge lists into this directory.
        #[arg(long)]
        emit_network: Option<PathBuf>,
    },
    /// Pairs nominally significant with constant sign in every month.
    Persist {
        #[command(flatten)]
        est: EstArgs,
        #[arg(long)]
        months: Option<String>,
        #[arg(long)]
        level: Option<f64>,
    },
    /// Generate synthetic bar files from a TOML spec.
    Synth {
        spec: PathBuf,
        /// Write normalized UTC files instead of the configured format.
        #[arg(long)]
        normalized: bool,
    },
    /// Full pipeline into a result bundle.
    Run,
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    month: Month,
    #[arg(long)]
    scenario: Option<ScenarioId>,
    #[arg(long)]
    tau: Option<usize>,
}

#[derive(Args)]
struct EstArgs {
    #[arg(long)]
    estimator: EstimatorKind,
    #[arg(long)]
    scenario: ScenarioId,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregateArg {
    Score,
    Position,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numeric => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 || rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().is_err() {
            eprintln!("error: invalid --jobs {jobs}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, Error> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(dir) = &cli.data {
        config.data.dir = dir.clone();
    }
    Ok(config)
}

fn emit(out: Option<&Path>, body: &str) -> Result<(), Error> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|source| Error::Output { path: parent.to_path_buf(), source })?;
            }
            fs::write(path, body).map_err(|source| Error::Output { path: path.to_path_buf(), source })
        }
        None => std::io::stdout().write_all(body.as_bytes()).map_err(|source| Error::Output { path: "<stdout>".into(), source }),
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    ConfigError::Invalid(msg.into()).into()
}

fn month_selection(config: &mut Config, months: &Option<String>) -> Result<Selection, Error> {
    if let Some(m) = months {
        config.analysis.months = Some(m.clone());
    }
    config.validate()?;
    select(config)
}

fn monthly_matrices(config: &Config, sel: &Selection, est: Estimator) -> Result<Vec<leadlag::SigMatrixF64>, Error> {
    sel.months
        .iter()
        .map(|&m| {
            let panel = load_panel(&sel.catalog, &sel.assets, Span::Month(m), &config.data.format).map_err(|e| Error::from(e).at(format!("returns {m}")))?;
            significance_sweep(&panel.series, est, &config.sweep).map_err(|e| Error::from(e).at(format!("{} {m}", est.tag())))
        })
        .collect()
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Ingest { file, asset, month } => {
            let config = load_config(cli)?;
            let asset = match asset {
                Some(a) => *a,
                None => file
                    .file_name()
                    .and_then(|n| n.to_str())
                    .and_then(|n| n.get(..6))
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| invalid("cannot infer the asset from the file name; pass --asset"))?,
            };
            let report = parse_bar_file(file, asset, &config.data.format)?;
            for m in &report.malformed {
                eprintln!("{}:{}: {}", file.display(), m.line, m.reason);
            }
            let series = match month {
                Some(m) => {
                    let snap = snap_to_grid(&report.series, *m)?;
                    if !snap.dropped.is_empty() {
                        eprintln!("dropped {} bars outside {m}", snap.dropped.len());
                    }
                    snap.series
                }
                None => report.series,
            };
            let mut buf = Vec::new();
            write_normalized(&series, &mut buf)?;
            emit(out, &String::from_utf8_lossy(&buf))
        }
        Command::Adf => {
            let config = load_config(cli)?;
            let sel = select(&config)?;
            let (rows, _) = adf_table(&sel, &config)?;
            emit(out, &report::adf_csv(&rows))
        }
        Command::Census { month, scenario } => {
            let config = load_config(cli)?;
            let sel = select(&config)?;
            let panel = load_panel(&sel.catalog, &sel.assets, Span::Month(*month), &config.data.format)?;
            let census = sample_census(&panel.series, *scenario, config.sweep.tau)?;
            emit(out, &report::census_csv(&census))
        }
        Command::Corr(args) | Command::Pcorr(args) | Command::Granger(args) => {
            let mut config = load_config(cli)?;
            let (kind, default_scenario) = match &cli.command {
                Command::Corr(_) => (EstimatorKind::Corr, ScenarioId::S1),
                Command::Pcorr(_) => (EstimatorKind::Pcorr, ScenarioId::S3),
                _ => (EstimatorKind::Granger, ScenarioId::S3),
            };
            if let Some(tau) = args.tau {
                config.sweep.tau = tau;
            }
            config.validate()?;
            let est = Estimator::new(kind, args.scenario.unwrap_or(default_scenario))?;
            let sel = select(&config)?;
            let panel = load_panel(&sel.catalog, &sel.assets, Span::Month(args.month), &config.data.format)?;
            let sig = significance_sweep(&panel.series, est, &config.sweep)?;
            emit(out, &report::sig_matrix_csv(&sig))
        }
        Command::Rank { est, months, top, aggregate, emit_network } => {
            let mut config = load_config(cli)?;
            let est = Estimator::new(est.estimator, est.scenario)?;
            let sel = month_selection(&mut config, months)?;
            let sigs = monthly_matrices(&config, &sel, est)?;
            let mut ranks = Vec::with_capacity(sigs.len());
            for (sig, month) in sigs.iter().zip(&sel.months) {
                let net = build_network(sig, est.weighted());
                if let Some(dir) = emit_network {
                    emit(Some(&dir.join(format!("edges_{}_{month}.csv", est.tag()))), &report::edges_csv(&net))?;
                }
                ranks.push(pagerank(&net, &config.pagerank).map_err(|e| Error::from(e).at(format!("pagerank {month}")))?);
            }
            let how = match aggregate {
                Some(AggregateArg::Position) => Aggregate::Position,
                Some(AggregateArg::Score) => Aggregate::Score,
                None => config.analysis.aggregate,
            };
            let rows = aggregate_months(&ranks, how)?;
            let top = top.unwrap_or(config.analysis.top);
            emit(out, &report::ranking_csv(&rows[..top.min(rows.len())]))
        }
        Command::Persist { est, months, level } => {
            let mut config = load_config(cli)?;
            if let Some(l) = level {
                config.analysis.persistence_level = *l;
            }
            let est = Estimator::new(est.estimator, est.scenario)?;
            let sel = month_selection(&mut config, months)?;
            let sigs = monthly_matrices(&config, &sel, est)?;
            let p = persistence(&sigs, config.analysis.persistence_level)?;
            for (a, b) in &p.sign_flips {
                eprintln!("sign flip: {a} -> {b}");
            }
            emit(out, &report::persistence_csv(&p))
        }
        Command::Synth { spec, normalized } => {
            let config = load_config(cli)?;
            let text = fs::read_to_string(spec).map_err(|source| ConfigError::Io { path: spec.clone(), source })?;
            let mut spec: SynthSpec = toml::from_str(&text).map_err(|e| ConfigError::Parse { path: spec.clone(), message: e.to_string() })?;
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            let dir = out.ok_or_else(|| invalid("synth needs --out DIR"))?;
            let universe = generate(&spec)?;
            let format = if *normalized { leadlag::ingest::BarFormat::normalized() } else { config.data.format.clone() };
            let paths = write_bar_files(&universe, dir, &format)?;
            let mut stdout = std::io::stdout().lock();
            for p in paths {
                let body = fs::read(&p).map_err(|source| Error::Output { path: p.clone(), source })?;
                if writeln!(stdout, "{}  {}", sha256_hex(&body), p.display()).is_err() {
                    break;
                }
            }
            Ok(())
        }
        Command::Run => {
            let config = load_config(cli)?;
            let dir = out.map(Path::to_path_buf).or_else(|| config.output.clone()).ok_or_else(|| invalid("run needs --out DIR or `output` in the config"))?;
            let summary = leadlag::run_pipeline(&config, &dir)?;
            println!("bundle {} in {}", summary.bundle_hash, summary.out_dir.display());
            for (tag, rows) in &summary.leaders {
                let names: Vec<String> = rows.iter().take(5).map(|r| r.asset.to_string()).collect();
                println!("{tag}: {}", names.join(" "));
            }
            Ok(())
        }
    }
}
