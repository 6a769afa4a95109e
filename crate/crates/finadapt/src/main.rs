use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use finadapt::config::BranchPoint;
use finadapt::engine::{self, BranchRequest, RunOutcome};
use finadapt::report::{self, ExportKind};
use finadapt::{HarnessError, RunConfig, Store};

#[derive(Parser)]
#[command(name = "finadapt", version, about = "Fin damage-recovery optimization experiments")]
struct Cli {
    /// Directory holding run folders.
    #[arg(long, global = true, default_value = "runs")]
    runs_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run (or resume) the optimization a config describes, then its scheduled branches.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Resume copies of a run's optimizer state on a damaged fin.
    Branch {
        #[arg(long)]
        run: String,
        /// Generation whose snapshot is copied. Defaults to ten before the run's end.
        #[arg(long)]
        at_gen: Option<u64>,
        #[arg(long, default_value_t = finadapt_core::plant::DEFAULT_AREA_LOSS)]
        damage_fraction: f64,
        /// Number of branches; seeds default to 1..=n.
        #[arg(long)]
        branches: Option<usize>,
        /// Plant-noise seed of each branch.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Give every branch its own sampling stream too.
        #[arg(long)]
        reseed_sampler: bool,
    },
    /// Write the full report bundle for a set of runs.
    Analyze {
        #[arg(long, value_delimiter = ',', required = true)]
        runs: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print one table for one run.
    Export {
        #[arg(long)]
        run: String,
        #[arg(long, value_enum)]
        what: What,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Paths,
    Optimum,
    Fourier,
    Sensitivity,
    Classification,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

fn print_outcome(o: &RunOutcome) {
    let f = &o.optimum;
    let force = f
        .fitness
        .map_or_else(|| "n/a".to_string(), |v| format!("{:.4}", v.force_used));
    println!(
        "{}: {} at generation {}, fitness {:.4}, force {} N",
        o.run_id,
        o.reason.as_str(),
        o.final_generation,
        f.ranked_fitness,
        force
    );
    for b in &o.branches {
        print_outcome(b);
    }
}

fn branch_seeds(branches: Option<usize>, seeds: Vec<u64>) -> Result<Vec<u64>, HarnessError> {
    match (branches, seeds.is_empty()) {
        (None, true) => Err(HarnessError::Config("give --branches, --seeds or both".into())),
        (Some(n), true) => Ok((1..=n as u64).collect()),
        (Some(n), false) if n != seeds.len() => Err(HarnessError::Config(format!(
            "--branches {n} does not match the {} seeds given",
            seeds.len()
        ))),
        (_, false) => Ok(seeds),
    }
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    let store = Store::new(&cli.runs_dir);
    match cli.command {
        Command::Run { config } => {
            let config = RunConfig::load(&config)?;
            print_outcome(&engine::run(&store, &config)?);
        }
        Command::Branch {
            run,
            at_gen,
            damage_fraction,
            branches,
            seeds,
            reseed_sampler,
        } => {
            let request = BranchRequest {
                parent: run,
                at: at_gen.map_or_else(BranchPoint::default, BranchPoint::Generation),
                damage_fraction,
                seeds: branch_seeds(branches, seeds)?,
                reseed_sampler,
            };
            for outcome in engine::branch(&store, &request)? {
                print_outcome(&outcome);
            }
        }
        Command::Analyze { runs, out } => {
            std::fs::create_dir_all(&out).map_err(|source| HarnessError::Io {
                path: out.clone(),
                source,
            })?;
            let summary = report::analyze(&store, &runs, &out)?;
            println!("wrote report for {} runs to {}", summary.runs.len(), out.display());
        }
        Command::Export {
            run,
            what,
            format: Format::Csv,
        } => {
            let kind = match what {
                What::Paths => ExportKind::Paths,
                What::Optimum => ExportKind::Optimum,
                What::Fourier => ExportKind::Fourier,
                What::Sensitivity => ExportKind::Sensitivity,
                What::Classification => ExportKind::Classification,
            };
            let table = report::export(&store, &run, kind)?;
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(table.as_bytes()).and_then(|()| stdout.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    return Err(HarnessError::Io {
                        path: PathBuf::from("<stdout>"),
                        source: e,
                    })
                }
                _ => {}
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
