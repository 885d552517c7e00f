use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use objnav::harness::scenegen::{generate_scenarios, GenError, GenParams};
use objnav::harness::{evaluate, Config, EpisodeSpec, EvalOptions, HarnessError, Policy, Runner};
use objnav::planner::{fmm_field, TraversalMask};
use objnav::world::{Scenario, ScenarioError};
use objnav::{Cell, ConfigError};

#[derive(Parser)]
#[command(name = "objnav", version, about = "Grid-world object-goal navigation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate floorplan scenarios.
    Gen {
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Grid size, `N` or `WxH`, in cells.
        #[arg(long, default_value = "40")]
        size: String,
        #[arg(long, default_value_t = 4)]
        rooms: usize,
        #[arg(long, default_value_t = 0.03)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run one episode.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario's target label.
        #[arg(long)]
        target: Option<String>,
        #[arg(long, default_value = "consensus")]
        policy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Evaluate policies over a directory of scenarios.
    Eval {
        #[arg(long)]
        scenario_dir: PathBuf,
        /// Comma-separated policies.
        #[arg(long, default_value = "consensus,majority:3,closest")]
        policies: String,
        #[arg(long, default_value_t = 1)]
        episodes_per_scenario: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Per-policy summary CSV.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Per-episode CSV.
        #[arg(long)]
        episodes: Option<PathBuf>,
        /// Decision audit JSONL.
        #[arg(long)]
        audit: Option<PathBuf>,
        /// Run episodes on one thread.
        #[arg(long)]
        serial: bool,
    },
    /// Ground-truth distance field to a goal cell, as CSV.
    Field {
        #[arg(long)]
        scenario: PathBuf,
        /// Goal cell `x,y`.
        #[arg(long)]
        goal: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<Config, ConfigError> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn write_out(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_size(s: &str) -> Result<(usize, usize), ConfigError> {
    let bad = || ConfigError::new("size", format!("{s:?}: expected N or WxH"));
    match s.split_once('x') {
        Some((w, h)) => Ok((w.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?)),
        None => {
            let n = s.parse().map_err(|_| bad())?;
            Ok((n, n))
        }
    }
}

fn parse_goal(s: &str) -> Result<Cell, ConfigError> {
    let bad = || ConfigError::new("goal", format!("{s:?}: expected x,y"));
    let (x, y) = s.split_once(',').ok_or_else(bad)?;
    Ok(Cell::new(
        x.trim().parse().map_err(|_| bad())?,
        y.trim().parse().map_err(|_| bad())?,
    ))
}

fn scenario_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.cmd {
        Cmd::Gen {
            n,
            size,
            rooms,
            density,
            seed,
            out_dir,
        } => {
            let (width, height) = parse_size(&size)?;
            let params = GenParams {
                width,
                height,
                rooms,
                object_density: density,
                ..GenParams::default()
            };
            params
                .validate()
                .map_err(|e| ConfigError::new("gen", e.to_string()))?;
            let docs = generate_scenarios(&params, seed, n)?;
            fs::create_dir_all(&out_dir)?;
            for (i, doc) in docs.iter().enumerate() {
                let path = out_dir.join(format!("scenario_{i:04}.json"));
                fs::write(&path, serde_json::to_string_pretty(doc)? + "\n")?;
            }
            log::info!("wrote {n} scenarios to {}", out_dir.display());
        }
        Cmd::Run {
            scenario,
            target,
            policy,
            seed,
            config,
            trace_out,
        } => {
            let cfg = load_config(config.as_deref())?;
            let policy: Policy = policy.parse()?;
            let sc = Scenario::load(&scenario)?;
            let mut spec = EpisodeSpec::for_scenario(&sc, &cfg, seed);
            if let Some(t) = target {
                if sc.env.target_cells(&t).is_empty() {
                    return Err(ScenarioError::Field {
                        field: "target".into(),
                        message: format!("{t:?} is not in the scenario"),
                    }
                    .into());
                }
                spec.target = t;
            }
            let runner = Runner::new(cfg)?;
            let out = runner.run_episode(&sc, &spec, policy)?;
            if let Some(p) = trace_out {
                fs::write(&p, out.trace_jsonl())
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            println!("{}", serde_json::to_string_pretty(&out.result)?);
        }
        Cmd::Eval {
            scenario_dir,
            policies,
            episodes_per_scenario,
            seed,
            config,
            report,
            episodes,
            audit,
            serial,
        } => {
            let cfg = load_config(config.as_deref())?;
            let policies: Vec<Policy> = policies
                .split(',')
                .map(|p| p.trim().parse())
                .collect::<Result<_, _>>()?;
            let mut scenarios = Vec::new();
            for f in scenario_files(&scenario_dir)? {
                let name = f.file_stem().unwrap().to_string_lossy().into_owned();
                let sc = Scenario::load(&f).map_err(|e| ScenarioError::Field {
                    field: name.clone(),
                    message: e.to_string(),
                })?;
                scenarios.push((name, sc));
            }
            if scenarios.is_empty() {
                return Err(ScenarioError::Field {
                    field: "scenario_dir".into(),
                    message: "no .json scenarios found".into(),
                }
                .into());
            }
            let runner = Runner::new(cfg)?;
            let out = evaluate(
                &runner,
                &scenarios,
                &policies,
                episodes_per_scenario,
                seed,
                EvalOptions {
                    parallel: !serial,
                    keep_traces: false,
                },
            )?;
            write_out(report.as_deref(), &out.report_csv())?;
            if let Some(p) = episodes {
                write_out(Some(&p), &out.episodes_csv())?;
            }
            if let Some(p) = audit {
                write_out(Some(&p), &out.audit_jsonl())?;
            }
        }
        Cmd::Field {
            scenario,
            goal,
            out,
        } => {
            let goal = parse_goal(&goal)?;
            let sc = Scenario::load(&scenario)?;
            if !sc.env.is_free(goal) {
                return Err(ScenarioError::Field {
                    field: "goal".into(),
                    message: format!("cell {goal} is not free space"),
                }
                .into());
            }
            let mask = TraversalMask::from_environment(&sc.env, false);
            let field = fmm_field(&mask, &[goal])?;
            write_out(out.as_deref(), &field.to_csv())?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if cause.is::<ScenarioError>() {
            return 3;
        }
        if let Some(GenError::Param(..)) = cause.downcast_ref::<GenError>() {
            return 2;
        }
        match cause.downcast_ref::<HarnessError>() {
            Some(HarnessError::Config(_)) => return 2,
            Some(HarnessError::Spec(_)) => return 3,
            _ => {}
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
