use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cultalign::config::{extract_overrides, PipelineConfig};
use cultalign::stages::{build_backend, pipeline, HarvestTarget, Stages};
use cultalign_core::plan::RunShape;
use toml::Value;

#[derive(Parser)]
#[command(name = "cultalign", version, about = "Culture-aware survey data synthesis and alignment scoring")]
#[command(after_help = "Any config value can also be set by its dotted name, e.g. --harvest.concurrency 8")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["mock", "http"])]
    backend: Option<String>,
    #[arg(long = "mock-seed", global = true)]
    mock_seed: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated culture codes.
    #[arg(long, global = true)]
    cultures: Option<String>,
    #[arg(long = "per-topic", global = true)]
    per_topic: Option<usize>,
    /// Culture-aware strategy of the training harvest.
    #[arg(long, global = true, value_parser = ["p1", "p2"])]
    strategy: Option<String>,
    #[arg(long, global = true, value_parser = ["crqpc", "cds", "rds"])]
    selector: Option<String>,
    #[arg(long, global = true, value_parser = ["joint", "specific", "both"])]
    variant: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate questions per topic from the seed corpus.
    Generate,
    /// Collect culture-unaware and culture-aware answers.
    Harvest {
        /// Harvest the seed questions for scoring instead of the generated ones.
        #[arg(long)]
        eval: bool,
    },
    /// Select question/answer pairs from the harvest.
    Select,
    /// Write training datasets from the selected pairs.
    Compose,
    /// Score the evaluation harvest against survey references.
    Score,
    /// Run every stage in order.
    Pipeline,
    /// Print a rendered prompt.
    DumpPrompt {
        /// unaware, p1, p2, p3, p1p3, p2p3 or generate
        what: String,
        /// Question id, or topic id for `generate`.
        target: String,
        /// Culture code for culture-aware strategies.
        culture: Option<String>,
    },
    /// Print the request counts implied by the configuration.
    Plan,
}

fn quoted(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

impl Cli {
    fn named_overrides(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        push("backend.kind", self.backend.as_deref().map(quoted));
        push("backend.mock_seed", self.mock_seed.map(|v| v.to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        push("out_dir", self.out.as_ref().map(|p| quoted(&p.to_string_lossy())));
        push("harvest.cultures", self.cultures.clone());
        push("generate.per_topic", self.per_topic.map(|v| v.to_string()));
        push("harvest.strategy", self.strategy.as_deref().map(quoted));
        push("select.selector", self.selector.as_deref().map(quoted));
        push("compose.variant", self.variant.as_deref().map(quoted));
        out
    }
}

fn main() -> ExitCode {
    let (rest, mut overrides) = match extract_overrides(std::env::args().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::try_parse_from(rest).unwrap_or_else(|e| e.exit());
    overrides.extend(cli.named_overrides());
    let config = match PipelineConfig::load(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let needs_backend = matches!(cli.command, Command::Generate | Command::Harvest { .. } | Command::Pipeline);
    let backend = if needs_backend {
        match build_backend(&config) {
            Ok(b) => Some(b),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    } else {
        None
    };
    let stages = Stages::new(&config);
    let result = match cli.command {
        Command::Generate => stages.generate(backend.as_deref().expect("built above")).map(|m| vec![m]),
        Command::Harvest { eval } => {
            let target = if eval { HarvestTarget::Seeds } else { HarvestTarget::Generated };
            stages.harvest(backend.as_deref().expect("built above"), target).map(|m| vec![m])
        }
        Command::Select => stages.select().map(|m| vec![m]),
        Command::Compose => stages.compose().map(|m| vec![m]),
        Command::Score => stages.score().map(|m| vec![m]),
        Command::Pipeline => pipeline(&config, backend.as_deref().expect("built above")),
        Command::DumpPrompt { what, target, culture } => {
            stages.dump_prompt(&what, &target, culture.as_deref()).map(|p| {
                print!("{}", p.to_sectioned());
                Vec::new()
            })
        }
        Command::Plan => {
            let cultures = cultalign::corpus::load_registry(config.corpus.cultures.as_deref())
                .map_err(anyhow::Error::from)
                .and_then(|r| Ok(config.cultures(&r)?.len()));
            cultures.map(|n| {
                let s = RunShape::new(config.generate.per_topic, n);
                vec![format!(
                    "generation slots: {}\nharvest output sets: {}\nharvest calls: {}\nmax generation calls: {}",
                    s.generation_slots(),
                    s.harvest_output_sets(),
                    s.harvest_calls(),
                    s.max_generation_calls()
                )]
            })
        }
    };
    match result {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            eprintln!(
                "partial artifacts are kept under {}; rerun the same command to resume",
                config.out_dir.display()
            );
            ExitCode::from(1)
        }
    }
}
