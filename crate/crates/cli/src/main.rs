//! `grnn-qos`: run closed-loop QoS experiments from scenario files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use grnn_qos::harness::config::Variant;
use grnn_qos::harness::run::{write_comparison, write_run};
use grnn_qos::harness::{compare_predictors, run_scenario, scenarios, seed_profile_generate, Scenario, SeedSpec};
use grnn_qos::verify;

#[derive(Parser)]
#[command(name = "grnn-qos", version, about = "GRNN-based QoS bandwidth allocation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its log, metrics, plot data and final profiles.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        /// Override the scenario's rng seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the scenario once per predictor variant on identical traces and seeds.
    Compare {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate a seed profile from the scenario's grid and thresholds.
    Seed {
        #[arg(short, long)]
        config: PathBuf,
        /// Output profile file.
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        records: Option<usize>,
        #[arg(long)]
        nominal_rate: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the randomized property suite and print one line per check.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Divide every instance count by this factor for a quick pass.
        #[arg(long, default_value_t = 1)]
        scale_down: usize,
    },
}

fn load(config: &Path, seed: Option<u64>) -> Result<Scenario> {
    let mut scenario = Scenario::load(config).with_context(|| format!("loading {}", config.display()))?;
    if let Some(s) = seed {
        scenario.rng_seed = s;
    }
    Ok(scenario)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, out, seed } => {
            let scenario = load(&config, seed)?;
            let result = run_scenario(&scenario)?;
            write_run(&out, &result)?;
            for (i, svc) in result.services.iter().enumerate() {
                let m = &svc.metrics;
                println!(
                    "service {i} (q={}): avg RAB {:.2} Mbps, avg DLR {:.2} Mbps, avg BW variation {:.2} Mbps, final search {:.3} ms",
                    svc.qos_level, m.avg_rab, m.avg_dlr, m.avg_bw_variation, m.final_search_time_ms
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Compare { config, out, seed } => {
            let scenario = load(&config, seed)?;
            let variants: Vec<Variant> = if scenario.variants.is_empty() {
                scenarios::table_variants()
            } else {
                scenario.variants.clone()
            };
            let runs = compare_predictors(&scenario, &variants)?;
            write_comparison(&out, &runs)?;
            println!("{:<16} {:>10} {:>10} {:>12} {:>12}", "variant", "RAB", "DLR", "search ms", "BW var");
            for r in &runs {
                let m = &r.services[0].metrics;
                println!(
                    "{:<16} {:>10.2} {:>10.2} {:>12.3} {:>12.2}",
                    r.label, m.avg_rab, m.avg_dlr, m.final_search_time_ms, m.avg_bw_variation
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Seed {
            config,
            out,
            records,
            nominal_rate,
            seed,
        } => {
            let scenario = load(&config, seed)?;
            let (default_records, default_rate) = match scenario.seed {
                SeedSpec::Generate { records, nominal_rate } => (Some(records), Some(nominal_rate)),
                SeedSpec::Profile(_) => (None, None),
            };
            let (Some(records), Some(rate)) = (records.or(default_records), nominal_rate.or(default_rate)) else {
                bail!("--records and --nominal-rate are required when the scenario seeds from a file");
            };
            let profile = seed_profile_generate(
                &scenario.qos.grid,
                &scenario.qos.thresholds,
                records,
                rate,
                scenario.rng_seed,
            )?
            .with_capacity(Some(scenario.qos.capacity.max(records)))?;
            fs::write(&out, profile.save()).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {records} records to {}", out.display());
        }
        Command::Verify { seed, scale_down } => {
            let k = scale_down.max(1);
            let reports = vec![
                verify::monotonicity(1000 / k, seed)?,
                verify::membership_forms(100 / k, seed.wrapping_add(1))?,
                verify::variation_bound_check(1000 / k, seed.wrapping_add(2))?,
                verify::profile_laws(10_000 / k, seed.wrapping_add(3))?,
                verify::qos_awareness(50 / k, 40, seed.wrapping_add(4))?,
            ];
            let mut ok = true;
            for r in &reports {
                println!("{r}");
                ok &= r.passed();
            }
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
    }
    Ok(ExitCode::SUCCESS)
}
