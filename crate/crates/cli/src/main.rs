use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use cohabitat::comfort::{comfort_table, ComfortEnv};
use cohabitat::experiments::{scenario, scenario_description, SCENARIO_NAMES};
use cohabitat::sim::Scenario;
use cohabitat::store;
use cohabitat::thermo::ThermalGrid;
use cohabitat::Error;

#[derive(Parser)]
#[command(name = "cohabitat", version, about = "Humans and a smart home sharing a thermal zone")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate a scenario, writing logs, tables and metrics.
    Run {
        /// Registered scenario name or path to a TOML scenario file.
        target: String,
        /// Number of repetitions.
        #[arg(long)]
        seeds: Option<u32>,
        /// Base seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "COHABITAT_OUT", default_value = "out")]
        out: PathBuf,
        /// Skip the smart-home phase.
        #[arg(long)]
        no_shs: bool,
        /// Worker threads; repetitions are spread over them.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Recompute and print the metrics of a finished run.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Grid cells whose PMV lies inside the band, as CSV.
    ComfortTable {
        #[arg(long, allow_negative_numbers = true)]
        met: f64,
        #[arg(long, allow_negative_numbers = true)]
        clo: f64,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        band: f64,
    },
    /// List registered scenarios, or print one as a TOML config.
    ListScenarios {
        name: Option<String>,
    },
}

fn resolve(target: &str) -> Result<Scenario> {
    if SCENARIO_NAMES.contains(&target) {
        return Ok(scenario(target)?);
    }
    let path = Path::new(target);
    if path.extension().is_some_and(|e| e == "toml") || path.exists() {
        return store::load_scenario(path).with_context(|| format!("loading {}", path.display()));
    }
    Err(Error::UnknownScenario(target.into()).into())
}

fn run(target: &str, seeds: Option<u32>, seed: Option<u64>, out: &Path, no_shs: bool, jobs: Option<usize>) -> Result<()> {
    let mut s = resolve(target)?;
    if let Some(n) = seeds {
        s.repetitions = n;
    }
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if no_shs {
        s.shs_enabled = false;
    }
    s.validate()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build()?;
    let (manifest, metrics) = pool.install(|| store::run_to_dir(&s, out))?;
    print!("{}", store::render_metrics(&metrics));
    eprintln!(
        "{}: {} repetitions in {:.1}s, {} files under {}",
        manifest.scenario_name,
        manifest.repetitions.len(),
        manifest.wall_clock_secs,
        manifest.artifacts.len(),
        out.display()
    );
    Ok(())
}

fn report(dir: &Path) -> Result<()> {
    let (manifest, metrics) = store::recompute(dir)?;
    let stored = store::load_metrics(dir)?;
    if stored != metrics {
        return Err(Error::Corrupt {
            path: dir.join(store::METRICS_CSV),
            line: 0,
            detail: "stored metrics differ from those recomputed from episodes.csv".into(),
        }
        .into());
    }
    println!("{} ({} repetitions, seed {})", manifest.scenario_name, manifest.repetitions.len(), manifest.seed);
    print!("{}", store::render_metrics(&metrics));
    Ok(())
}

fn comfort(met: f64, clo: f64, band: f64) -> Result<()> {
    let env = ComfortEnv {
        clo_per_activity: [clo; 3],
        ..ComfortEnv::default()
    };
    let profile = env.profile([met; 3], band);
    profile.validate()?;
    let cells = comfort_table(&profile, met, clo, &ThermalGrid::default())?;
    println!("temp_c,rh_pct,pmv");
    for c in cells {
        println!("{},{},{:.4}", c.temp, c.rh, c.pmv);
    }
    Ok(())
}

fn list(name: Option<&str>) -> Result<()> {
    match name {
        Some(n) => print!("{}", store::scenario_to_toml(&scenario(n)?)?),
        None => {
            for n in SCENARIO_NAMES {
                println!("{n:<11} {}", scenario_description(n).unwrap_or(""));
            }
        }
    }
    Ok(())
}

/// 2 for configuration, 3 for numerical failures, 4 for I/O and corrupt
/// artifacts.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Config(_) | Error::UnknownScenario(_)) => 2,
        Some(Error::Io { .. } | Error::Corrupt { .. } | Error::EmptyInput) => 4,
        Some(_) => 3,
        None if err.chain().any(|e| e.is::<std::io::Error>()) => 4,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            target,
            seeds,
            seed,
            out,
            no_shs,
            jobs,
        } => run(target, *seeds, *seed, out, *no_shs, *jobs),
        Command::Report { input } => report(input),
        Command::ComfortTable { met, clo, band } => comfort(*met, *clo, *band),
        Command::ListScenarios { name } => list(name.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
