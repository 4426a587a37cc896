use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use ramie::config::{fixture_config_toml, PipelineConfig};
use ramie::dataset::{load_corpus, read_records, save_records, split_records, validate_splits, Split};
use ramie::fixtures::{generate_fixtures, write_fixtures, DEFAULT_PER_TASK, DEFAULT_SEED};
use ramie::model::TaskKind;
use ramie::pipeline::{Pipeline, PipelineError, Stage};

/// Retrieval-augmented multi-task extraction over dietary-supplement clinical text.
///
/// Exit codes: 0 success, 1 pipeline error, 2 configuration or input-schema error.
#[derive(Parser)]
#[command(name = "ramie", version)]
struct Cli {
    /// Log more (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic fixture corpora and a matching ramie.toml.
    Fixtures {
        /// Target directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Records per task before the 8:1:1 split.
        #[arg(long, default_value_t = DEFAULT_PER_TASK)]
        per_task: usize,
        /// Endpoint kind written into the config (mock-oracle or mock-copy).
        #[arg(long, default_value = "mock-oracle")]
        endpoint: String,
    },
    /// Check every configured corpus and report split sizes and leakage.
    Validate {
        #[arg(long, short)]
        config: PathBuf,
    },
    /// Run pipeline stages (all by default) and print the score table.
    Run {
        #[arg(long, short)]
        config: PathBuf,
        /// Comma-separated subset of: blend,index,prompts,generate,parse,score,report.
        #[arg(long, value_delimiter = ',')]
        stages: Vec<Stage>,
    },
    /// Write the blended training set as instruction examples for an external trainer.
    ExportTraining {
        #[arg(long, short)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shuffle one task's records and split them 8:1:1 into train/dev/test files.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        task: TaskKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

/// Error carrying the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure {
            code: e.exit_code() as u8,
            error: e.into(),
        }
    }
}

fn schema(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

fn pipeline_err(error: anyhow::Error) -> Failure {
    Failure { code: 1, error }
}

fn load_config(path: &Path) -> Result<PipelineConfig, Failure> {
    PipelineConfig::load(path).map_err(|e| schema(e.into()))
}

fn cmd_fixtures(out: &Path, seed: u64, per_task: usize, endpoint: &str) -> Result<(), Failure> {
    if !matches!(endpoint, "mock-oracle" | "mock-copy") {
        return Err(schema(anyhow::anyhow!("--endpoint must be mock-oracle or mock-copy")));
    }
    if per_task < 10 {
        return Err(schema(anyhow::anyhow!("--per-task must be at least 10")));
    }
    let set = generate_fixtures(seed, per_task);
    let written = write_fixtures(out, &set).map_err(|e| pipeline_err(e.into()))?;
    let cfg = out.join("ramie.toml");
    std::fs::write(&cfg, fixture_config_toml(seed, endpoint))
        .with_context(|| format!("writing {}", cfg.display()))
        .map_err(pipeline_err)?;
    println!("wrote {} corpus files and {}", written.len(), cfg.display());
    Ok(())
}

fn cmd_validate(config: &Path) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let mut clean = true;
    for task in TaskKind::ALL {
        let mut corpora = Vec::with_capacity(3);
        for split in Split::ALL {
            let path = cfg.corpus_path(task, split);
            let corpus = load_corpus(&path, task, split)
                .with_context(|| format!("{task} {split} corpus {}", path.display()))
                .map_err(schema)?;
            corpora.push(corpus);
        }
        let report = validate_splits(&corpora[0], &corpora[1], &corpora[2]).map_err(|e| schema(e.into()))?;
        println!("{report}");
        for w in report.warnings() {
            println!("  warning: {w}");
        }
        clean &= report.is_clean();
    }
    println!("{}", if clean { "ok" } else { "ok (with warnings)" });
    Ok(())
}

fn cmd_run(config: &Path, stages: &[Stage]) -> Result<(), Failure> {
    let pipeline = Pipeline::new(load_config(config)?)?;
    let stages = if stages.is_empty() { &Stage::ALL[..] } else { stages };
    for outcome in pipeline.run(stages)? {
        println!(
            "{:<9} {} {}",
            outcome.stage.as_str(),
            if outcome.skipped { "up-to-date" } else { "written   " },
            outcome.artifact.display()
        );
    }
    let table = pipeline.artifact_path(Stage::Report);
    if stages.contains(&Stage::Report) {
        let text = std::fs::read_to_string(&table)
            .with_context(|| format!("reading {}", table.display()))
            .map_err(pipeline_err)?;
        print!("\n{text}");
    }
    Ok(())
}

fn cmd_export(config: &Path, out: &Path) -> Result<(), Failure> {
    let pipeline = Pipeline::new(load_config(config)?)?;
    let (path, n) = pipeline.export_training(out)?;
    println!("wrote {n} training examples to {}", path.display());
    Ok(())
}

fn cmd_split(input: &Path, task: TaskKind, out: &Path, seed: u64) -> Result<(), Failure> {
    let records = read_records(input, Some(task))
        .with_context(|| format!("reading {}", input.display()))
        .map_err(schema)?;
    let corpora = split_records(task, records, seed).map_err(|e| schema(e.into()))?;
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(pipeline_err)?;
    for c in &corpora {
        let path = out.join(format!("{}.jsonl", c.split));
        save_records(&path, &c.records).map_err(|e| pipeline_err(e.into()))?;
        println!("{}: {} records", path.display(), c.len());
    }
    Ok(())
}

/// Error chain joined with `: `, skipping causes already quoted by their parent.
fn describe(error: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in error.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Fixtures {
            out,
            seed,
            per_task,
            endpoint,
        } => cmd_fixtures(out, *seed, *per_task, endpoint),
        Command::Validate { config } => cmd_validate(config),
        Command::Run { config, stages } => cmd_run(config, stages),
        Command::ExportTraining { config, out } => cmd_export(config, out),
        Command::Split { input, task, out, seed } => cmd_split(input, *task, out, *seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", describe(&f.error));
            ExitCode::from(f.code)
        }
    }
}
