use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use vivlab::config::{resolve, ScenarioConfig};
use vivlab::controllability::controllability_report;
use vivlab::metrics::{cost_report, dominant_frequency, max_abs};
use vivlab::model::PlantParams;
use vivlab::runner::{parse_range, run_comparison, run_scenario, run_ur_sweep, SweepSpec, SweepVariable};
use vivlab::sim::TimeSeries;
use vivlab::uncertainty::UncertaintySpec;
use vivlab::wake::{WakeParams, WakeState};
use vivlab::{Error, Result};

#[derive(Parser)]
#[command(name = "vivlab", version, about = "Active VIV suppression simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Network initialisation seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Switch the model uncertainty on or off.
    #[arg(long, global = true, value_enum)]
    uncertainty: Option<Toggle>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario (preset name or JSON config/manifest).
    Run { scenario: String },
    /// Run several scenarios against a free-vibration baseline.
    Compare {
        #[arg(required = true)]
        scenarios: Vec<String>,
    },
    /// Free-vibration amplitude over reduced velocity.
    Sweep {
        /// `start:stop:step` or a comma-separated list.
        #[arg(long)]
        ur: String,
        /// Base scenario.
        #[arg(long, default_value = "paper-free")]
        base: String,
    },
    /// Lie-bracket controllability check of the transverse channel.
    Controllability {
        #[arg(long, default_value_t = 0.0)]
        k2: f64,
        /// Evaluation state `y,ydot`.
        #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
        state: String,
        /// Frozen wake variable; omit to drop the fluid force.
        #[arg(long, allow_hyphen_values = true)]
        q: Option<f64>,
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
        #[arg(long)]
        json: bool,
    },
    /// Summary metrics of a time-series CSV.
    Metrics {
        csv: PathBuf,
        /// Window start, s.
        #[arg(long)]
        from: Option<f64>,
        /// Window end, s.
        #[arg(long)]
        to: Option<f64>,
    },
}

fn prepare(cli: &Cli, spec: &str) -> Result<ScenarioConfig> {
    let mut cfg = resolve(spec, cli.uncertainty.map(|t| matches!(t, Toggle::On)))?;
    if let Some(seed) = cli.seed {
        cfg.network.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.outputs.dir = out.clone();
    }
    Ok(cfg)
}

fn parse_state(text: &str) -> Result<[f64; 2]> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Validation { field: "state".into(), reason: format!("expected y,ydot, got `{text}`") })?;
    match v.as_slice() {
        [y, yd] => Ok([*y, *yd]),
        _ => Err(Error::Validation { field: "state".into(), reason: format!("expected two values, got {}", v.len()) }),
    }
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run { scenario } => {
            let cfg = prepare(cli, scenario)?;
            let art = run_scenario(&cfg, true)?;
            println!("{}", serde_json::to_string_pretty(&art.metrics)?);
            if let Some(dir) = art.dir {
                log::info!("outputs written to {}", dir.display());
            }
        }
        Command::Compare { scenarios } => {
            let cfgs = scenarios.iter().map(|s| prepare(cli, s)).collect::<Result<Vec<_>>>()?;
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out/compare"));
            let report = run_comparison(&cfgs, Some(&out))?;
            print!("{}", report.to_text());
        }
        Command::Sweep { ur, base } => {
            let base = prepare(cli, base)?;
            let points = run_ur_sweep(&SweepSpec { variable: SweepVariable::Ur, values: parse_range(ur)?, base })?;
            println!("{:>6} {:>10} {:>10}", "Ur", "y_max/D", "f_y/f_n");
            for p in &points {
                match (&p.error, p.y_max_over_d) {
                    (Some(e), _) => println!("{:>6.2} failed: {e}", p.ur),
                    (None, Some(a)) => println!(
                        "{:>6.2} {:>10.4} {:>10}",
                        p.ur,
                        a,
                        p.f_y_over_f_n.map_or("-".into(), |r| format!("{r:.4}"))
                    ),
                    _ => {}
                }
            }
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("sweep.json"), serde_json::to_string_pretty(&points)? + "\n")?;
            }
        }
        Command::Controllability { k2, state, q, h, json } => {
            let params = PlantParams::reference();
            let unc = UncertaintySpec { k2: *k2, ..UncertaintySpec::default() };
            unc.validate()?;
            let t = unc.t_on;
            let wake = q.map(|q| (WakeParams::default(), WakeState { q, q_dot: 0.0 }));
            let report = controllability_report(&params, &unc, wake, parse_state(state)?, t, *h, None)?;
            if *json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.to_text());
            }
        }
        Command::Metrics { csv, from, to } => {
            let series = TimeSeries::read_csv(File::open(csv)?)?;
            let t0 = from.unwrap_or(f64::NEG_INFINITY);
            let t1 = to.unwrap_or(f64::INFINITY);
            let win = series.window(t0, t1);
            let y: Vec<f64> = win.iter().map(|s| s.y).collect();
            let cost = cost_report(&y, 0.0)?;
            let dt = series.sample_interval().unwrap_or(0.0);
            let out = json!({
                "y_max": max_abs(&y)?,
                "cost": cost,
                "f_y": dominant_frequency(&y, dt).ok(),
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
