use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use uav_irs::channel::{diagnose_links, Placement};
use uav_irs::experiment::{emit_outputs, ga_stream, parse_schemes, run_experiment, trace_for_seed};
use uav_irs::mobility::MobilityTrace;
use uav_irs::noma::Scheme;
use uav_irs::optimizer::{optimize_trajectory, GaRunRecord};
use uav_irs::scenario::{load_config_file, stream_rng, ScenarioConfig, SEED_ENV_VAR};

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "uav-irs",
    version,
    about = "UAV base station with a vehicle-mounted IRS: NOMA rates and GA placement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario document (TOML). Defaults apply to every missing key.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides the environment variable and the config.
    #[arg(long, env = SEED_ENV_VAR)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scheme comparison averaged over several seeds.
    Run {
        #[command(flatten)]
        common: Common,
        /// Number of consecutive seeds, starting at the master seed.
        #[arg(long)]
        seeds: Option<usize>,
        /// Comma-separated schemes.
        #[arg(long, default_value = "M-IRS-NOMA,S-IRS-NOMA,No-IRS-NOMA,M-IRS-OMA")]
        scenarios: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Use this slot,user_id,x,y table instead of generating mobility.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
    },
    /// Generate a Random Waypoint trace (trace.csv in --out, or stdout).
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump per-user distances, LoS probability, pathloss and gains.
    InspectChannel {
        #[command(flatten)]
        common: Common,
        /// Slot of the generated trace, from 1.
        #[arg(long, default_value_t = 1)]
        slot: usize,
        /// UAV position x,y,z (default: region center at minimum altitude).
        #[arg(long, value_name = "X,Y,Z")]
        uav: Option<String>,
        /// IRS vehicle position x,y (default: region center).
        #[arg(long, value_name = "X,Y")]
        irs: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// GA convergence (generation, best, mean) for one scheme on one slot.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        slot: usize,
        #[arg(long, default_value = "M-IRS-NOMA")]
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(common: &Common) -> uav_irs::Result<ScenarioConfig> {
    let mut config = match &common.config {
        Some(path) => load_config_file(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
        config.validate()?;
    }
    Ok(config)
}

fn parse_coords<const N: usize>(text: &str) -> anyhow::Result<[f64; N]> {
    let vals: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad coordinate list {text:?}"))?;
    vals.try_into()
        .map_err(|_| anyhow::anyhow!("expected {N} comma-separated numbers, got {text:?}"))
}

/// Writes to `dir/name` when a directory is given, else to stdout.
fn output(dir: Option<&Path>, name: &str) -> anyhow::Result<Box<dyn Write>> {
    Ok(match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
            let path = dir.join(name);
            let f = std::fs::File::create(&path).with_context(|| path.display().to_string())?;
            Box::new(std::io::BufWriter::new(f))
        }
        None => Box::new(std::io::stdout().lock()),
    })
}

fn slot_trace(config: &ScenarioConfig, slot: usize) -> anyhow::Result<MobilityTrace> {
    if slot == 0 || slot > config.mobility.num_slots {
        bail!("slot must lie in 1..={}", config.mobility.num_slots);
    }
    Ok(trace_for_seed(config, config.seed)?)
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Run {
            common,
            seeds,
            scenarios,
            out,
            trace,
        } => {
            let config = load(&common)?;
            let schemes = parse_schemes(&scenarios)?;
            let count = seeds.unwrap_or(config.experiment.seed_count);
            if count == 0 {
                bail!("--seeds must be at least 1");
            }
            let seed_list: Vec<u64> = (0..count as u64).map(|k| config.seed + k).collect();
            let trace = trace.map(|p| MobilityTrace::load(&p)).transpose()?;
            let report = run_experiment(&config, &schemes, &seed_list, trace.as_ref())?;
            emit_outputs(&report, &out)?;

            for r in &report.rates {
                let cells: Vec<String> = r.per_slot.iter().map(|v| format!("{v:.3}")).collect();
                println!("{:<12} {}", r.scheme.label(), cells.join("  "));
            }
            for i in &report.improvements {
                println!(
                    "{} vs {}: {:+.1}% on average",
                    i.scheme, i.baseline, i.mean_pct
                );
            }
            println!("outputs written to {}", out.display());
            if !report.infeasible.is_empty() {
                eprintln!(
                    "{} (seed, scheme, slot) cells have no user at the SINR threshold; see results.json",
                    report.infeasible.len()
                );
                return Ok(EXIT_INFEASIBLE);
            }
        }
        Command::Trace { common, out } => {
            let config = load(&common)?;
            let trace = trace_for_seed(&config, config.seed)?;
            trace.write_csv(output(out.as_deref(), "trace.csv")?)?;
        }
        Command::InspectChannel {
            common,
            slot,
            uav,
            irs,
            out,
        } => {
            let config = load(&common)?;
            let trace = slot_trace(&config, slot)?;
            let r = &config.region;
            let (cx, cy) = ((r.x_min + r.x_max) / 2.0, (r.y_min + r.y_max) / 2.0);
            let placement = Placement {
                uav: uav
                    .as_deref()
                    .map(parse_coords::<3>)
                    .transpose()?
                    .unwrap_or([cx, cy, config.ga.uav_alt_min]),
                irs: irs
                    .as_deref()
                    .map(parse_coords::<2>)
                    .transpose()?
                    .unwrap_or([cx, cy]),
            };
            let rows = diagnose_links(&placement, trace.slot(slot - 1), &config)?;
            let mut w = output(out.as_deref(), "channel.csv")?;
            writeln!(w, "user,d,q,p_los,pathloss_db,uav_gain,irs_gain")?;
            for d in rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    d.user, d.d, d.q, d.p_los, d.pathloss_db, d.uav_gain, d.irs_gain
                )?;
            }
        }
        Command::Converge {
            common,
            slot,
            scenario,
            out,
        } => {
            let mut config = load(&common)?;
            let scheme: Scheme = scenario.parse()?;
            let trace = slot_trace(&config, slot)?;
            config.mobility.num_slots = slot;
            let run = optimize_trajectory(
                &trace,
                &config,
                scheme,
                &mut stream_rng(config.seed, ga_stream(scheme)),
            )?;
            let record: &GaRunRecord = &run.records[slot - 1];
            record.write_csv(output(out.as_deref(), "convergence.csv")?)?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let config_error = err.downcast_ref::<uav_irs::Error>().is_some_and(|e| {
                e.is_config_error() || matches!(e, uav_irs::Error::UnknownScheme(_))
            });
            ExitCode::from(if config_error { EXIT_CONFIG } else { 1 })
        }
    }
}
