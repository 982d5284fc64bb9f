use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pseudobalance::data::write_csv;
use pseudobalance::harness::{
    build_bundle, compare_runs, emit_plot_data, parse_config, rerun_from_manifest, run_experiment,
    CsvSource, DataSource, ExperimentConfig, Scenario, SeedPlan,
};
use pseudobalance::Error;

/// Fairness-aware self-training with pseudo-balancing.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset as CSV files plus a config that runs on them.
    Generate {
        /// Experiment config supplying the generator (default: scenario1 preset).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run experiments. With several configs and --out, each run goes to
    /// DIR/<config name>.
    Run {
        #[arg(
            long,
            required_unless_present = "manifest",
            conflicts_with = "manifest"
        )]
        config: Vec<PathBuf>,
        /// Repeat the run recorded in a manifest.json.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, conflicts_with = "manifest")]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate final metrics of finished runs against the first one.
    Compare {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
    /// Regenerate series.dat for a run directory.
    PlotData { dir: PathBuf },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    parse_config(path).map_err(|e| Failure::Config(e.to_string()))
}

fn generate(config: Option<PathBuf>, seed: Option<u64>, out: PathBuf) -> Result<(), Failure> {
    let mut cfg = match config {
        Some(p) => load(&p)?,
        None => ExperimentConfig::preset(Scenario::Scenario1),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let cfg = cfg.resolve();
    let feature_dim = match &cfg.data {
        Some(DataSource::Synthetic(spec)) => spec.feature_dim,
        _ => {
            return Err(Failure::Config(
                "generate needs a synthetic data source".into(),
            ))
        }
    };
    let seeds = SeedPlan::new(cfg.seed, cfg.selftrain.iterations);
    let (bundle, _) = build_bundle(&cfg, &seeds)?;
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    for (name, samples) in bundle.partitions() {
        write_csv(&out.join(format!("{name}.csv")), samples, feature_dim)?;
    }
    // The written pool is already skewed, so the companion config omits skew.
    let companion = ExperimentConfig {
        scenario: Scenario::Custom,
        output_dir: Some(PathBuf::from("runs").join(format!("csv-{}", cfg.scenario))),
        data: Some(DataSource::Csv(CsvSource {
            feature_dim,
            labeled: out.join("labeled.csv"),
            unlabeled: out.join("unlabeled.csv"),
            validation: (!bundle.validation.is_empty()).then(|| out.join("validation.csv")),
            test: out.join("test.csv"),
            curate_test: false,
        })),
        skew: None,
        ..cfg.clone()
    };
    let path = out.join("config.toml");
    std::fs::write(&path, companion.to_toml()?).map_err(|e| Error::io(&path, e))?;
    for (name, samples) in bundle.partitions() {
        println!("{name:<10} {:>6} samples", samples.len());
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn run(
    config: Vec<PathBuf>,
    manifest: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    if let Some(m) = manifest {
        let summary = rerun_from_manifest(&m, out.as_deref())?;
        print!("{}", summary.report.to_text());
        println!("run directory {}", summary.dir.display());
        return Ok(());
    }
    // Parse everything first so a bad config fails before any run starts.
    let mut configs = Vec::new();
    for path in &config {
        let mut cfg = load(path)?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if let Some(dir) = &out {
            cfg.output_dir = Some(if config.len() == 1 {
                dir.clone()
            } else {
                let stem = path.file_stem().unwrap_or_default();
                dir.join(stem)
            });
        }
        configs.push(cfg);
    }
    for cfg in &configs {
        let summary = run_experiment(cfg)?;
        print!("{}", summary.report.to_text());
        println!("run directory {}", summary.dir.display());
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Generate { config, seed, out } => generate(config, seed, out),
        Command::Run {
            config,
            manifest,
            seed,
            out,
        } => run(config, manifest, seed, out),
        Command::Compare { dirs } => {
            print!("{}", compare_runs(&dirs)?);
            Ok(())
        }
        Command::PlotData { dir } => {
            let p = emit_plot_data(&dir)?;
            println!("wrote {}", p.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
