use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use genealab_cli::{exit_code, run, Kind, Overrides, WORKERS_ENV};

#[derive(Parser)]
#[command(
    name = "genealab",
    version,
    about = "Tree-valued population genetics experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forward simulation; writes one genealogy per replicate.
    Simulate(Common),
    /// Moran model against its coalescent dual.
    DualityCheck(Common),
    /// Critical branching against the Feynman-Kac weighted dual.
    FkDuality(Common),
    /// Conditioned dual on shared branching mass paths.
    ConditionedDuality(Common),
    /// Long-run Moran statistics against the stationary laws.
    Equilibrium(Common),
    /// Forward samples against the grafted entrance-law tree.
    StrongDuality(Common),
    /// Neutral paths reweighted into selective ones.
    GirsanovCheck(Common),
    /// Poisson concatenation and its Laplace functional.
    InfdivCheck(Common),
    /// Exactness of the core representation and the spatial dual.
    Diagnostics(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed, replacing the file's.
    #[arg(long)]
    seed: Option<u64>,
    /// Replicate count, replacing the file's.
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory, replacing the file's.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 means one per core.
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
}

impl Command {
    fn split(self) -> (Kind, Common) {
        match self {
            Command::Simulate(c) => (Kind::Simulate, c),
            Command::DualityCheck(c) => (Kind::DualityCheck, c),
            Command::FkDuality(c) => (Kind::FkDuality, c),
            Command::ConditionedDuality(c) => (Kind::ConditionedDuality, c),
            Command::Equilibrium(c) => (Kind::Equilibrium, c),
            Command::StrongDuality(c) => (Kind::StrongDuality, c),
            Command::GirsanovCheck(c) => (Kind::GirsanovCheck, c),
            Command::InfdivCheck(c) => (Kind::InfdivCheck, c),
            Command::Diagnostics(c) => (Kind::Diagnostics, c),
        }
    }
}

fn main() -> ExitCode {
    let (kind, args) = Cli::parse().command.split();
    let overrides = Overrides {
        seed: args.seed,
        reps: args.reps,
        out: args.out,
        workers: args.workers,
    };
    let result = run(kind, &args.config, &overrides);
    match &result {
        Ok(r) => {
            for line in r.report.summary() {
                println!("{line}");
            }
            let verdict = if r.report.passed() { "PASS" } else { "FAIL" };
            println!(
                "{kind}: {verdict} ({} checks, {:.1} s on {} worker{}) -> {}",
                r.report.checks.len(),
                r.wall_time,
                r.workers,
                if r.workers == 1 { "" } else { "s" },
                r.out_dir.display()
            );
        }
        Err(e) => {
            if let Some(partial) = e.partial_report() {
                for line in partial.summary() {
                    println!("{line}");
                }
            }
            eprintln!("error[{}]: {e}", e.code());
        }
    }
    ExitCode::from(exit_code(&result) as u8)
}
