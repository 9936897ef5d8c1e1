use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use heatgrid::center::Variant;
use heatgrid::cli::{self, Format, Outcome};
use heatgrid::scenario::{Month, Scenario};
use heatgrid::{Error, Result};

#[derive(Parser)]
#[command(name = "heatgrid", version, about = "District-heating network and heating-center simulator")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print annual and specific heat demand per building and check the band.
    ValidateDemand { scenario: PathBuf },
    /// Simulate one variant over one month.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        variant: Variant,
        #[arg(long)]
        month: Month,
        #[command(flatten)]
        common: RunOpts,
    },
    /// Simulate January, April and August for several variants and score them.
    Compare {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "v1,v2,v3,v4")]
        variants: Vec<Variant>,
        #[command(flatten)]
        common: RunOpts,
    },
    /// Re-render the KPI report and plot series of an artifact directory.
    Report {
        dir: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Table)]
        format: FormatArg,
    },
    /// Write the fitted emission factors.
    DeriveFactors {
        #[arg(long, default_value = "factors/paper2021.cfg")]
        output: PathBuf,
    },
}

#[derive(clap::Args)]
struct RunOpts {
    /// Override the load-synthesis seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Root directory for artifacts.
    #[arg(long, env = "HEATGRID_OUT", default_value = "runs")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Structured,
}

fn load(path: &Path, seed: Option<u64>) -> Result<Scenario> {
    let mut sc = Scenario::load(path)?;
    if let Some(seed) = seed {
        sc.loads.seed = seed;
    }
    Ok(sc)
}

fn finish(outcome: Outcome) -> Result<ExitCode> {
    print!("{}", outcome.report.to_table());
    println!("artifacts in {}", outcome.dir.display());
    match outcome.error {
        Some(e) => Err(e),
        None => Ok(ExitCode::SUCCESS),
    }
}

fn execute(args: Args) -> Result<ExitCode> {
    match args.command {
        Command::ValidateDemand { scenario } => {
            let report = cli::validate_demand(&Scenario::load(&scenario)?)?;
            print!("{}", report.to_text());
            if report.all_in_band() {
                Ok(ExitCode::SUCCESS)
            } else {
                Err(Error::Validation(format!(
                    "specific demand outside {}-{} kWh/m2a",
                    report.band[0], report.band[1]
                )))
            }
        }
        Command::Run {
            scenario,
            variant,
            month,
            common,
        } => {
            let sc = load(&scenario, common.seed)?;
            let dir = common.out.join(format!("{}-{}-{}", sc.name, variant.label(), month.label()));
            let outcome = cli::run(&sc, variant, month, &dir)?;
            if let Some(m) = outcome.report.monthly.first() {
                println!(
                    "{} {}: heat {:.2} MWh, elec gen {:.2} MWh, elec cons {:.2} MWh, emissions {:.3} t",
                    m.variant, m.month, m.heat_mwh, m.elec_gen_mwh, m.elec_cons_mwh, m.emissions_t
                );
            }
            finish(outcome)
        }
        Command::Compare {
            scenario,
            variants,
            common,
        } => {
            let sc = load(&scenario, common.seed)?;
            let dir = common.out.join(format!("{}-compare", sc.name));
            finish(cli::compare(&sc, &variants, &dir)?)
        }
        Command::Report { dir, format } => {
            let format = match format {
                FormatArg::Table => Format::Table,
                FormatArg::Structured => Format::Structured,
            };
            print!("{}", cli::report(&dir, format)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::DeriveFactors { output } => {
            let f = cli::derive_factors(&output)?;
            println!(
                "ng {:.3} bm {:.3} h2 {:.3} kg/MWh -> {}",
                f.ng,
                f.bm,
                f.h2,
                output.display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
