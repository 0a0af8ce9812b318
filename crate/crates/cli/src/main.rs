use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rafts_core::pipeline::{self, PipelineError, RunConfig, StageReport};

#[derive(Parser)]
#[command(
    name = "rafts",
    version,
    about = "Retrieval-augmented fact verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BM25 index over the documents file
    Index {
        #[command(subcommand)]
        action: IndexAction,
    },
    /// Dense re-ranker
    Rerank {
        #[command(subcommand)]
        action: RerankAction,
    },
    /// Retrieval evaluation
    Eval {
        #[command(subcommand)]
        action: EvalAction,
    },
    /// Demonstration arguments
    Demos {
        #[command(subcommand)]
        action: DemosAction,
    },
    /// Claim verification
    Verify {
        #[command(subcommand)]
        action: VerifyAction,
    },
}

#[derive(Subcommand)]
enum IndexAction {
    Build(Common),
}

#[derive(Subcommand)]
enum RerankAction {
    Train(Common),
}

#[derive(Subcommand)]
enum EvalAction {
    Retrieval(Common),
}

#[derive(Subcommand)]
enum DemosAction {
    Prepare(Common),
}

#[derive(Subcommand)]
enum VerifyAction {
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overwrite existing artifacts
    #[arg(long)]
    force: bool,
}

type Stage = fn(&RunConfig, bool) -> Result<StageReport, PipelineError>;

fn run(common: &Common, stage: Stage) -> Result<StageReport, PipelineError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    stage(&cfg, common.force)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, stage): (&Common, Stage) = match &cli.command {
        Command::Index {
            action: IndexAction::Build(c),
        } => (c, pipeline::index_build),
        Command::Rerank {
            action: RerankAction::Train(c),
        } => (c, pipeline::rerank_train),
        Command::Eval {
            action: EvalAction::Retrieval(c),
        } => (c, pipeline::eval_retrieval),
        Command::Demos {
            action: DemosAction::Prepare(c),
        } => (c, pipeline::demos_prepare),
        Command::Verify {
            action: VerifyAction::Run(c),
        } => (c, pipeline::verify_run),
    };
    match run(common, stage) {
        Ok(report) => {
            for a in &report.artifacts {
                println!("wrote {}", a.display());
            }
            println!("manifest {}", report.manifest.display());
            println!("{}", report.details);
            ExitCode::SUCCESS
        }
        Err(e) => {
            // One line, easy to grep: `error kind=<Kind> msg=<json string>`.
            let msg = serde_json::to_string(&e.to_string()).unwrap_or_default();
            eprintln!("error kind={} msg={msg}", e.code());
            ExitCode::FAILURE
        }
    }
}
