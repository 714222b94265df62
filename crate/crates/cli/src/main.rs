mod config;
mod error;
mod manifest;
mod run;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_decoder_list, parse_snr_list, Command, Experiment, Overrides};
use crate::error::CliError;
use crate::manifest::{sha256_hex, Manifest};

#[derive(Parser)]
#[command(name = "pilattice", version, about = "Multilevel CRT lattice experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a lattice and dump it with its coset representatives.
    Construct(RunArgs),
    /// Word-error rates of the MSD/SMD/PMD decoders.
    DecodeSim(RunArgs),
    /// Achievable-rate curves of the three decoders.
    RateCurve(RunArgs),
    /// Nested lattice code transmission trials.
    NestedSim(RunArgs),
    /// Normalized second moments of random multilevel lattices.
    Gquant(RunArgs),
    /// Decoding cost model table.
    Complexity(RunArgs),
    /// Re-run the experiment recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Comma-separated SNR grid in dB; `inf` means noiseless.
    #[arg(long)]
    snr: Option<String>,
    /// Comma-separated subset of msd,smd,pmd.
    #[arg(long)]
    decoders: Option<String>,
    #[arg(long)]
    wraps: Option<u32>,
    #[command(flatten)]
    threads: Threads,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    threads: Threads,
}

#[derive(Args)]
struct Threads {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

impl Threads {
    fn install(&self) -> Result<(), CliError> {
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Config(format!("cannot set thread count: {e}")))?;
        }
        Ok(())
    }
}

fn write_outputs(out: &Path, exp: &Experiment, artifacts: &[(String, Vec<u8>)]) -> Result<Manifest, CliError> {
    fs::create_dir_all(out)?;
    for (name, bytes) in artifacts {
        fs::write(out.join(name), bytes)?;
    }
    let manifest = Manifest::new(exp, artifacts)?;
    fs::write(out.join("manifest.json"), manifest.to_json())?;
    Ok(manifest)
}

fn execute(exp: &Experiment, out: &Path) -> Result<Manifest, CliError> {
    let outcome = run::run(exp)?;
    let manifest = write_outputs(out, exp, &outcome.artifacts)?;
    for a in &manifest.artifacts {
        println!("wrote {}", out.join(&a.file).display());
    }
    if outcome.violations.is_empty() {
        Ok(manifest)
    } else {
        Err(CliError::Violations(outcome.violations))
    }
}

fn run_command(command: Command, args: RunArgs) -> Result<(), CliError> {
    args.threads.install()?;
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut exp = Experiment::parse(command, &text)?;
    exp.apply(&Overrides {
        seed: args.seed,
        trials: args.trials,
        snr: args
            .snr
            .as_deref()
            .map(parse_snr_list)
            .transpose()
            .map_err(CliError::Config)?,
        decoders: args
            .decoders
            .as_deref()
            .map(parse_decoder_list)
            .transpose()
            .map_err(CliError::Config)?,
        wraps: args.wraps,
    })?;
    execute(&exp, &args.out).map(|_| ())
}

fn replay(args: ReplayArgs) -> Result<(), CliError> {
    args.threads.install()?;
    let text = fs::read_to_string(&args.manifest)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.manifest.display())))?;
    let recorded: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid manifest: {e}")))?;
    if recorded.version != pilattice::VERSION {
        eprintln!(
            "warning: manifest was written by version {}, running {}",
            recorded.version,
            pilattice::VERSION
        );
    }
    let exp = recorded.experiment()?;
    let outcome = run::run(&exp)?;
    let manifest = write_outputs(&args.out, &exp, &outcome.artifacts)?;
    let mut mismatches = Vec::new();
    for want in &recorded.artifacts {
        match outcome.artifacts.iter().find(|(name, _)| *name == want.file) {
            Some((_, bytes)) if sha256_hex(bytes) == want.sha256 => {}
            Some(_) => mismatches.push(format!("{} differs from the recorded artifact", want.file)),
            None => mismatches.push(format!("{} was not regenerated", want.file)),
        }
    }
    if !mismatches.is_empty() {
        return Err(CliError::Violations(mismatches));
    }
    println!(
        "reproduced {} artifact(s) in {}",
        manifest.artifacts.len(),
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Construct(a) => run_command(Command::Construct, a),
        Cmd::DecodeSim(a) => run_command(Command::DecodeSim, a),
        Cmd::RateCurve(a) => run_command(Command::RateCurve, a),
        Cmd::NestedSim(a) => run_command(Command::NestedSim, a),
        Cmd::Gquant(a) => run_command(Command::Gquant, a),
        Cmd::Complexity(a) => run_command(Command::Complexity, a),
        Cmd::Replay(a) => replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
