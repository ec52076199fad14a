use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use p2g::pipeline::{ExperimentConfig, Run, Stage};
use p2g::P2gError;

#[derive(Parser)]
#[command(name = "p2g", version, about = "Person-specific decoder graphs for apparent personality regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the synthetic subjects and their splits.
    Synth(Args),
    /// Pre-train the shared encoder on trait labels.
    Pretrain(Args),
    /// Fit per-subject decoders.
    Fit(Args),
    /// Fit PCA banks and write weight graphs.
    Encode(Args),
    /// Train the GNNs and the vector baseline.
    Traingnn(Args),
    /// Score every system on the test split and write the report.
    Eval(Args),
    /// Run every stage after `synth`.
    Ablate(Args),
    /// Run every stage.
    All(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Experiment configuration (JSON); omitted fields take their defaults.
    #[arg(long)]
    config: PathBuf,
    /// Output root, overriding `out_dir` from the file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed, overriding `seed` from the file.
    #[arg(long)]
    seed: Option<u64>,
}

impl Args {
    fn run(&self) -> Result<Run, P2gError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Run::new(cfg)
    }
}

fn exit_code(e: &P2gError) -> u8 {
    match e {
        P2gError::Config(_) | P2gError::Mismatch(_) => 2,
        P2gError::MissingPrerequisite(_) => 3,
        P2gError::Divergence(_) => 4,
        _ => 1,
    }
}

fn execute(cmd: &Command) -> Result<(), P2gError> {
    let (args, stage) = match cmd {
        Command::Synth(a) => (a, Some(Stage::Synth)),
        Command::Pretrain(a) => (a, Some(Stage::Pretrain)),
        Command::Fit(a) => (a, Some(Stage::Fit)),
        Command::Encode(a) => (a, Some(Stage::Encode)),
        Command::Traingnn(a) => (a, Some(Stage::TrainGnn)),
        Command::Eval(a) => (a, Some(Stage::Eval)),
        Command::Ablate(a) | Command::All(a) => (a, None),
    };
    let run = args.run()?;
    eprintln!("run directory: {}", run.root.display());
    match (cmd, stage) {
        (_, Some(stage)) => run.run_stage(stage)?,
        (Command::Ablate(_), None) => print!("{}", run.ablate()?.to_csv()),
        _ => print!("{}", run.all()?.to_csv()),
    }
    if stage == Some(Stage::Eval) {
        print!("{}", std::fs::read_to_string(run.root.join("report.csv")).unwrap_or_default());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
