use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uie_codegen::dataset::{load_split, Example};
use uie_codegen::metrics::score;
use uie_codegen::runner::{Pipeline, RunConfig, RunMode};
use uie_codegen::schema::{load_schema, Family, TaskKind};

#[derive(Parser)]
#[command(
    name = "uie",
    version,
    about = "Information extraction through code-style prompts"
)]
struct Cli {
    /// Print errors (and results, where available) as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Schema utilities.
    Schema {
        #[command(subcommand)]
        action: SchemaAction,
    },
    /// Prompt utilities.
    Prompt {
        #[command(subcommand)]
        action: PromptAction,
    },
    /// Example index utilities.
    Index {
        #[command(subcommand)]
        action: IndexAction,
    },
    /// Run an experiment and write its run directory.
    Run(RunArgs),
    /// Score prediction JSONL against gold JSONL.
    Score(ScoreArgs),
}

#[derive(Subcommand)]
enum SchemaAction {
    /// Load and validate a schema file.
    Validate { file: PathBuf },
}

#[derive(Subcommand)]
enum PromptAction {
    /// Print the exact prompts sent for one example.
    Render {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        example: String,
        /// Only this stage of a two-stage prompt.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        stage: Option<u8>,
        /// Comma-separated stage-one types for stage two (defaults to gold).
        #[arg(long, value_delimiter = ',')]
        stage1_types: Option<Vec<String>>,
    },
}

#[derive(Subcommand)]
enum IndexAction {
    /// Build and persist the example index named by a run config.
    Build {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<RunMode>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    output_root: Option<String>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    task: TaskKind,
    /// Match event arguments by head word (eae only).
    #[arg(long)]
    head: bool,
    /// Validate both files against this schema.
    #[arg(long)]
    schema: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<RunMode, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown mode {s}; expected one_stage or two_stage"))
}

struct Failure {
    kind: &'static str,
    message: String,
}

impl Failure {
    fn new(kind: &'static str, message: impl ToString) -> Self {
        Failure {
            kind,
            message: message.to_string(),
        }
    }
}

impl From<uie_codegen::runner::RunError> for Failure {
    fn from(e: uie_codegen::runner::RunError) -> Self {
        Failure::new(e.kind(), e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if json {
                eprintln!(
                    "{}",
                    serde_json::json!({ "error": f.kind, "message": f.message })
                );
            } else {
                eprintln!("error: {}", f.message);
            }
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let mut stdout = std::io::stdout().lock();
    let mut out = |text: &str| -> Result<(), Failure> {
        stdout
            .write_all(text.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|e| Failure::new("io", e))
    };
    match cli.command {
        Command::Schema {
            action: SchemaAction::Validate { file },
        } => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| Failure::new("io", format!("{}: {e}", file.display())))?;
            let schema = load_schema(&text).map_err(|e| Failure::new("schema", e))?;
            let counts = [Family::Entity, Family::Relation, Family::Event]
                .map(|f| schema.family_type_names(f).len());
            if cli.json {
                out(&format!(
                    "{}\n",
                    serde_json::json!({"valid": true, "entities": counts[0], "relations": counts[1], "events": counts[2]})
                ))
            } else {
                out(&format!(
                    "{}: valid ({} entity, {} relation, {} event types)\n",
                    file.display(),
                    counts[0],
                    counts[1],
                    counts[2]
                ))
            }
        }
        Command::Prompt {
            action:
                PromptAction::Render {
                    config,
                    example,
                    stage,
                    stage1_types,
                },
        } => {
            let pipeline = Pipeline::from_path(&config)?;
            for (label, prompt) in pipeline.render_example(&example, stage, stage1_types)? {
                out(&format!("### {label}\n{}\n", prompt.text))?;
            }
            Ok(())
        }
        Command::Index {
            action: IndexAction::Build { config },
        } => {
            let pipeline = Pipeline::from_path(&config)?;
            if !pipeline.config.strategy.needs_index() {
                return Err(Failure::new(
                    "config",
                    "the configured strategy does not use an index",
                ));
            }
            let (index, path) = pipeline.build_index()?;
            out(&format!(
                "{}: {} entries, dimension {}, anonymized {}\n",
                path.display(),
                index.len(),
                index.dimension,
                index.anonymized
            ))
        }
        Command::Run(args) => {
            let (mut config, base) = RunConfig::load(&args.config)?;
            if let Some(k) = args.k {
                config.k = Some(k);
            }
            if let Some(mode) = args.mode {
                config.mode = mode;
            }
            if let Some(w) = args.workers {
                config.workers = w;
            }
            if let Some(root) = args.output_root {
                config.output_root = root;
            }
            let pipeline = Pipeline::load(config, &base)?;
            let outcome = pipeline.run()?;
            let s = &outcome.stats;
            eprintln!(
                "{} examples, {} prompts, {} cache hits, {} provider calls, {} failed",
                s.examples, s.prompts, s.cache_hits, s.provider_calls, s.failed_examples
            );
            if cli.json {
                out(&format!(
                    "{}\n",
                    serde_json::json!({"run_dir": outcome.run_dir, "metrics": outcome.manifest.metrics})
                ))
            } else {
                out(&outcome.manifest.metrics.to_table())?;
                out(&format!("run directory: {}\n", outcome.run_dir.display()))
            }
        }
        Command::Score(args) => {
            let schema = match &args.schema {
                Some(p) => {
                    let text = std::fs::read_to_string(p)
                        .map_err(|e| Failure::new("io", format!("{}: {e}", p.display())))?;
                    Some(load_schema(&text).map_err(|e| Failure::new("schema", e))?)
                }
                None => None,
            };
            let read = |path: &Path| -> Result<Vec<(String, uie_codegen::ExtractionSet)>, Failure> {
                let examples = match &schema {
                    Some(s) => load_split(path, s)
                        .map_err(|e| Failure::new("dataset", format!("{}: {e}", path.display())))?,
                    None => read_jsonl(path)?,
                };
                Ok(examples.into_iter().map(|e| (e.id, e.gold)).collect())
            };
            let pred = read(&args.pred)?;
            let gold = read(&args.gold)?;
            let report = score(&pred, &gold, args.task, args.head)
                .map_err(|e| Failure::new("metrics", e))?;
            if cli.json {
                out(&format!(
                    "{}\n",
                    serde_json::to_string(&report).expect("report serializes")
                ))
            } else {
                out(&report.to_table())
            }
        }
    }
}

/// Reads JSONL examples without schema validation; `text` may be omitted.
fn read_jsonl(path: &Path) -> Result<Vec<Example>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| Failure::new("dataset", format!("{}:{}: {e}", path.display(), n + 1)))?;
        if let Some(obj) = value.as_object_mut() {
            obj.entry("text")
                .or_insert_with(|| serde_json::Value::String(String::new()));
        }
        out.push(
            serde_json::from_value(value).map_err(|e| {
                Failure::new("dataset", format!("{}:{}: {e}", path.display(), n + 1))
            })?,
        );
    }
    Ok(out)
}
