use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use nvalue::bench::{check_against_oracle, run_bench, Level, Model, RunReport};
use nvalue::fuzz::run_fuzz;
use nvalue::instance::{load_instance, queens_instance};
use nvalue::lp::{export_direct, export_linear};
use nvalue::{Limits, Value};

#[derive(Parser)]
#[command(name = "nvalue", version, about = "Decomposition-based NValue solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct LimitArgs {
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long)]
    time_limit_ms: Option<u64>,
}

impl LimitArgs {
    fn limits(&self) -> Limits {
        Limits {
            node_limit: self.node_limit,
            time_limit: self.time_limit_ms.map(Duration::from_millis),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance file with one model.
    Solve {
        #[arg(long, value_parser = parse_model)]
        model: Model,
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        limits: LimitArgs,
        #[arg(long)]
        json: bool,
    },
    /// Compare a model's root fixpoint with the oracle closure.
    Check {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        kind: CheckLevel,
        #[arg(long, value_parser = parse_model)]
        model: Model,
    },
    /// Run a generated benchmark.
    Bench {
        #[command(subcommand)]
        family: BenchFamily,
    },
    /// Random oracle-equivalence suite.
    Fuzz {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 6)]
        max_n: usize,
        #[arg(long, default_value_t = 6)]
        max_d: Value,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write an integer-programming encoding in LP format.
    ExportLp {
        #[arg(long)]
        encoding: Encoding,
        #[arg(long)]
        lazy_pyramid: bool,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum BenchFamily {
    /// Dominating queens on an n×n board.
    Queens {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        nvalues: Value,
        #[arg(long, value_parser = parse_model)]
        model: Model,
        #[command(flatten)]
        limits: LimitArgs,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckLevel {
    Bc,
    Rc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Encoding {
    Direct,
    Linear,
}

fn parse_model(s: &str) -> Result<Model, String> {
    s.parse()
        .map_err(|e: nvalue::bench::BenchError| e.to_string())
}

type CliResult = Result<u8, Box<dyn std::error::Error>>;

fn report(r: &RunReport, json: bool) -> u8 {
    if json {
        println!("{}", r.to_json());
    } else {
        println!("{}", r.summary());
    }
    r.outcome.exit_code() as u8
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Solve {
            model,
            instance,
            limits,
            json,
        } => {
            let inst = load_instance(&instance)?;
            Ok(report(&run_bench(model, &inst, limits.limits())?, json))
        }
        Command::Check {
            instance,
            kind,
            model,
        } => {
            let inst = load_instance(&instance)?;
            let level = match kind {
                CheckLevel::Bc => Level::Bound,
                CheckLevel::Rc => Level::Range,
            };
            let diffs = check_against_oracle(model, &inst, level)?;
            if diffs.is_empty() {
                println!("MATCH model={model}");
                Ok(0)
            } else {
                println!("MISMATCH model={model}");
                for d in diffs {
                    println!("  {d}");
                }
                Ok(3)
            }
        }
        Command::Bench {
            family:
                BenchFamily::Queens {
                    n,
                    nvalues,
                    model,
                    limits,
                    json,
                },
        } => {
            let inst = queens_instance(n, nvalues);
            Ok(report(&run_bench(model, &inst, limits.limits())?, json))
        }
        Command::Fuzz {
            count,
            max_n,
            max_d,
            seed,
        } => {
            let r = run_fuzz(count, max_n, max_d, seed)?;
            for m in &r.mismatches {
                println!("{m}");
            }
            println!(
                "{} instances, {} checks, {} mismatches",
                r.instances,
                r.checks,
                r.mismatches.len()
            );
            Ok(if r.passed() { 0 } else { 3 })
        }
        Command::ExportLp {
            encoding,
            lazy_pyramid,
            instance,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let model = match encoding {
                Encoding::Direct => export_direct(&inst)?,
                Encoding::Linear => export_linear(&inst, lazy_pyramid)?,
            };
            std::fs::write(&out, model.to_lp())?;
            if !model.lazy_rows.is_empty() {
                let mut sidecar = out.clone().into_os_string();
                sidecar.push(".lazy");
                std::fs::write(&sidecar, model.lazy_sidecar())?;
            }
            println!(
                "wrote {} columns, {} rows ({} lazy) to {}",
                model.columns.len(),
                model.rows.len() + model.lazy_rows.len(),
                model.lazy_rows.len(),
                out.display()
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
