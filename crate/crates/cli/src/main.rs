//! Experiment runner for the switchpoint learners: grid-search oracle,
//! training, evaluation, event-vs-fixed comparison, and plain simulation.
//!
//! Every run writes a manifest plus a canonical config snapshot to the
//! output directory, so any result can be re-executed bit-identically.
//! Exit codes: 0 success, 2 configuration error, 3 runtime error.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use switchpoint_cli::config::{RunConfig, WeatherConfig};
use switchpoint::{
    grid_search, limit_cycle_average_reward, run_policy, run_policy_fixed, train_deterministic,
    train_fixed_interval, train_log_to_csv, train_stochastic, Env, Error, FixedControlMode,
    FixedThresholds, GridEvaluator, PolicyParams, RewardWeights, TrainResult,
};

/// Worker-pool size override; defaults to the number of logical CPUs.
const WORKERS_ENV: &str = "SWITCHPOINT_WORKERS";

#[derive(Parser)]
#[command(name = "switchpoint", version, about = "Event-triggered thermostat learning experiments")]
struct Cli {
    /// Run configuration file.
    #[arg(long, global = true, default_value = "configs/linear.cfg")]
    config: PathBuf,
    /// Output directory for CSVs, parameters, and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override the config's RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the config's simulated duration in days.
    #[arg(long, global = true)]
    days: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Brute-force the average-reward surface over constant threshold pairs.
    GridSearch,
    /// Train a policy and persist the learned parameters.
    Train {
        #[arg(long, value_enum)]
        algo: Algo,
        /// Control sub-mode for the fixed-interval baseline.
        #[arg(long, value_enum, default_value_t = Control::Fixed)]
        control: Control,
    },
    /// Evaluate persisted parameters on-policy.
    Evaluate {
        /// Parameters file written by `train`.
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_enum, default_value_t = Control::Event)]
        control: Control,
    },
    /// Event-triggered vs fixed-interval training across seeds.
    Compare {
        #[arg(long, default_value_t = 5)]
        seeds: u64,
    },
    /// Roll out fixed thresholds and write the event trace.
    Simulate {
        /// Switch-ON threshold; defaults to the config's init_on_c.
        #[arg(long)]
        t_on_c: Option<f64>,
        /// Switch-OFF threshold; defaults to the config's init_off_c.
        #[arg(long)]
        t_off_c: Option<f64>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Stochastic,
    Deterministic,
    FixedInterval,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Control {
    Event,
    Fixed,
}

/// Failure split matching the exit-code contract.
enum CliError {
    Config(String),
    Runtime(String),
}

type CliResult<T> = Result<T, CliError>;

fn config_err(e: Error) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn main() {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var(WORKERS_ENV) {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: {WORKERS_ENV} must be a positive integer, got `{n}`");
                std::process::exit(2);
            }
        }
    }
    match run(cli) {
        Ok(()) => {}
        Err(CliError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("runtime error: {msg}");
            std::process::exit(3);
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = RunConfig::from_file(&cli.config).map_err(config_err)?;
    if let Some(seed) = cli.seed {
        cfg.train.seed = seed;
    }
    if let Some(days) = cli.days {
        if !(days > 0.0) {
            return Err(CliError::Config("--days must be positive".into()));
        }
        cfg.train.duration_days = days;
        cfg.eval_days = days;
    }
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", cli.out.display())))?;
    write_file(&cli.out.join("config_snapshot.cfg"), &cfg.to_text())?;

    match cli.cmd {
        Cmd::GridSearch => cmd_grid_search(&cfg, &cli.out),
        Cmd::Train { algo, control } => cmd_train(&cfg, &cli.out, algo, control),
        Cmd::Evaluate { params, control } => cmd_evaluate(&cfg, &cli.out, &params, control),
        Cmd::Compare { seeds } => cmd_compare(&cfg, &cli.out, seeds),
        Cmd::Simulate { t_on_c, t_off_c } => cmd_simulate(&cfg, &cli.out, t_on_c, t_off_c),
    }
}

fn build_env(cfg: &RunConfig) -> CliResult<Env> {
    Ok(Env::new(
        cfg.building,
        cfg.weather_model().map_err(config_err)?,
        cfg.rewards().map_err(config_err)?,
        cfg.sim,
    ))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_manifest(out: &Path, lines: &[String]) -> CliResult<()> {
    write_file(&out.join("manifest.txt"), &(lines.join("\n") + "\n"))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Externally reported optimum used as a soft target for the grid search.
const SOFT_TARGET_J_PER_HR: f64 = -3.70;

fn cmd_grid_search(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let start = Instant::now();
    let env = build_env(cfg)?;
    let evaluator = match env.weather.constant_value() {
        Some(t_out_c) if !cfg.sim.force_numeric => GridEvaluator::Analytic {
            building: cfg.building,
            rewards: env.rewards,
            t_out_c,
        },
        _ => GridEvaluator::Simulated {
            env: env.clone(),
            eval_days: cfg.grid_eval_days,
        },
    };
    let surface = grid_search(&evaluator, &cfg.grid).map_err(runtime_err)?;
    write_file(&out.join("surface.csv"), &surface.to_csv())?;

    let am = surface.argmax;
    let mut manifest = vec![
        "command=grid-search".to_string(),
        format!("cells={}", surface.cells.len()),
        format!("argmax_t_on_c={}", am.t_on_c),
        format!("argmax_t_off_c={}", am.t_off_c),
        format!("argmax_j_per_hr={}", am.j_per_hr),
        format!("soft_target_j_per_hr={SOFT_TARGET_J_PER_HR}"),
    ];
    let rel = (am.j_per_hr - SOFT_TARGET_J_PER_HR).abs() / SOFT_TARGET_J_PER_HR.abs();
    manifest.push(format!("soft_target_rel_error={rel}"));
    if rel > 0.10 {
        // The absolute J level depends on the desired-temperature choice,
        // which the reference result never states. Record how the optimum
        // moves with T_d so the discrepancy is traceable.
        manifest.push("soft_target_met=false".to_string());
        manifest.push(
            "note=absolute J depends on the desired temperature T_d, which is a configured \
             inference (t_desired_c); sensitivity sweep below"
                .to_string(),
        );
        if let Some(t_out_c) = env.weather.constant_value() {
            for t_d in [14.0, 15.0, 16.0] {
                let rewards = RewardWeights {
                    t_desired_c: t_d,
                    ..env.rewards
                };
                let swept = grid_search(
                    &GridEvaluator::Analytic {
                        building: cfg.building,
                        rewards,
                        t_out_c,
                    },
                    &cfg.grid,
                )
                .map_err(runtime_err)?;
                manifest.push(format!(
                    "t_d_sweep_{t_d}=argmax ({}, {}) j_per_hr {}",
                    swept.argmax.t_on_c, swept.argmax.t_off_c, swept.argmax.j_per_hr
                ));
            }
        }
    } else {
        manifest.push("soft_target_met=true".to_string());
    }
    manifest.push(format!("wall_clock_s={}", start.elapsed().as_secs_f64()));
    manifest.push("artifact=surface.csv".to_string());
    manifest.push("artifact=config_snapshot.cfg".to_string());
    write_manifest(out, &manifest)?;
    println!(
        "argmax ({}, {}) C, J = {:.4} unit/hr over {} cells",
        am.t_on_c,
        am.t_off_c,
        am.j_per_hr,
        surface.cells.len()
    );
    Ok(())
}

fn train_one(env: &Env, cfg: &RunConfig, algo: Algo, control: Control) -> Result<TrainResult, Error> {
    match algo {
        Algo::Stochastic => train_stochastic(env, &cfg.train),
        Algo::Deterministic => train_deterministic(env, &cfg.train),
        Algo::FixedInterval => {
            let mode = match control {
                Control::Fixed => FixedControlMode::FixedControl,
                Control::Event => FixedControlMode::EventControl,
            };
            train_fixed_interval(env, &cfg.train, cfg.train.tick_s, mode)
        }
    }
}

/// Greedy on-policy evaluation of learned thresholds under event control.
fn evaluate_thresholds(env: &Env, t_on_c: f64, t_off_c: f64, days: f64, seed: u64) -> Result<f64, Error> {
    let mut pol = FixedThresholds { t_on_c, t_off_c };
    run_policy(env, &mut pol, days * 86_400.0, seed).map(|(_, j)| j)
}

fn cmd_train(cfg: &RunConfig, out: &Path, algo: Algo, control: Control) -> CliResult<()> {
    let start = Instant::now();
    let env = build_env(cfg)?;
    let res = train_one(&env, cfg, algo, control).map_err(runtime_err)?;
    write_file(&out.join("train_log.csv"), &train_log_to_csv(&res.records))?;
    write_file(&out.join("trace.csv"), &res.trace.to_csv())?;
    write_file(&out.join("params.txt"), &res.params.to_text())?;

    let eval_j = evaluate_thresholds(
        &env,
        res.params.theta_on_c,
        res.params.theta_off_c,
        cfg.eval_days,
        cfg.train.seed,
    )
    .map_err(runtime_err)?;
    let algo_name = match algo {
        Algo::Stochastic => "stochastic",
        Algo::Deterministic => "deterministic",
        Algo::FixedInterval => "fixed-interval",
    };
    let from_s = (cfg.train.duration_days - 5.0).max(0.0) * 86_400.0;
    let mut manifest = vec![
        format!("command=train --algo {algo_name}"),
        format!("seed={}", cfg.train.seed),
        format!("duration_days={}", cfg.train.duration_days),
        format!("events={}", res.records.len()),
        format!("theta_on_c={}", res.params.theta_on_c),
        format!("theta_off_c={}", res.params.theta_off_c),
        format!("jbar_per_hr={}", res.params.j_bar_per_hr()),
        format!("eval_j_per_hr={eval_j}"),
        format!("jbar_trace_std_last5d={}", res.j_bar_trace_std(from_s)),
        format!("wall_clock_s={}", start.elapsed().as_secs_f64()),
    ];
    if let Some(sigma) = res.params.sigma_c {
        manifest.insert(6, format!("sigma_c={sigma}"));
    }
    for artifact in ["train_log.csv", "trace.csv", "params.txt", "config_snapshot.cfg"] {
        manifest.push(format!("artifact={artifact}"));
    }
    write_manifest(out, &manifest)?;
    match res.params.sigma_c {
        Some(sigma) => println!(
            "{algo_name}: thresholds ({:.2}, {:.2}) C, sigma {:.3} C, evaluated J = {:.4} unit/hr",
            res.params.theta_on_c, res.params.theta_off_c, sigma, eval_j
        ),
        None => println!(
            "{algo_name}: thresholds ({:.2}, {:.2}) C, evaluated J = {:.4} unit/hr",
            res.params.theta_on_c, res.params.theta_off_c, eval_j
        ),
    }
    Ok(())
}

fn cmd_evaluate(cfg: &RunConfig, out: &Path, params_path: &Path, control: Control) -> CliResult<()> {
    let text = std::fs::read_to_string(params_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", params_path.display())))?;
    let params =
        PolicyParams::from_text(&text, &params_path.display().to_string()).map_err(config_err)?;
    let env = build_env(cfg)?;
    let mut pol = FixedThresholds {
        t_on_c: params.theta_on_c,
        t_off_c: params.theta_off_c,
    };
    let duration_s = cfg.eval_days * 86_400.0;
    let (trace, j) = match control {
        Control::Event => run_policy(&env, &mut pol, duration_s, cfg.train.seed),
        Control::Fixed => run_policy_fixed(&env, &mut pol, cfg.train.tick_s, duration_s, cfg.train.seed),
    }
    .map_err(runtime_err)?;
    write_file(&out.join("trace.csv"), &trace.to_csv())?;
    let control_name = match control {
        Control::Event => "event",
        Control::Fixed => "fixed",
    };
    write_manifest(
        out,
        &[
            format!("command=evaluate --control {control_name}"),
            format!("params={}", params_path.display()),
            format!("t_on_c={}", params.theta_on_c),
            format!("t_off_c={}", params.theta_off_c),
            format!("eval_days={}", cfg.eval_days),
            format!("j_per_hr={j}"),
            "artifact=trace.csv".to_string(),
            "artifact=config_snapshot.cfg".to_string(),
        ],
    )?;
    println!(
        "({:.2}, {:.2}) C under {control_name} control: J = {:.4} unit/hr",
        params.theta_on_c, params.theta_off_c, j
    );
    Ok(())
}

struct SeedOutcome {
    seed: u64,
    event_on: f64,
    event_off: f64,
    event_j: f64,
    event_std: f64,
    fixed_on: f64,
    fixed_off: f64,
    fixed_j_fixed_control: f64,
    fixed_j_event_control: f64,
    fixed_std: f64,
}

fn cmd_compare(cfg: &RunConfig, out: &Path, seeds: u64) -> CliResult<()> {
    if seeds < 3 {
        return Err(CliError::Config(format!("compare needs at least 3 seeds, got {seeds}")));
    }
    let start = Instant::now();
    let env = build_env(cfg)?;
    let from_s = (cfg.train.duration_days - 5.0).max(0.0) * 86_400.0;
    let base = cfg.train.seed;

    let outcomes: Vec<Result<SeedOutcome, Error>> = (0..seeds)
        .into_par_iter()
        .map(|k| {
            let seed = base + k;
            let train = switchpoint::TrainConfig { seed, ..cfg.train };
            let event = train_deterministic(&env, &train)?;
            let fixed = train_fixed_interval(&env, &train, train.tick_s, FixedControlMode::FixedControl)?;
            let event_j = evaluate_thresholds(
                &env,
                event.params.theta_on_c,
                event.params.theta_off_c,
                cfg.eval_days,
                seed,
            )?;
            let mut pol = FixedThresholds {
                t_on_c: fixed.params.theta_on_c,
                t_off_c: fixed.params.theta_off_c,
            };
            let (_, fixed_j_fixed_control) =
                run_policy_fixed(&env, &mut pol, train.tick_s, cfg.eval_days * 86_400.0, seed)?;
            let (_, fixed_j_event_control) = run_policy(&env, &mut pol, cfg.eval_days * 86_400.0, seed)?;
            Ok(SeedOutcome {
                seed,
                event_on: event.params.theta_on_c,
                event_off: event.params.theta_off_c,
                event_j,
                event_std: event.j_bar_trace_std(from_s),
                fixed_on: fixed.params.theta_on_c,
                fixed_off: fixed.params.theta_off_c,
                fixed_j_fixed_control,
                fixed_j_event_control,
                fixed_std: fixed.j_bar_trace_std(from_s),
            })
        })
        .collect();
    let outcomes: Vec<SeedOutcome> = outcomes
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(runtime_err)?;

    // Oracle argmax reference: analytic under constant weather, otherwise a
    // simulated grid search under the configured weather.
    let evaluator = match env.weather.constant_value() {
        Some(t_out_c) => GridEvaluator::Analytic {
            building: cfg.building,
            rewards: env.rewards,
            t_out_c,
        },
        None => GridEvaluator::Simulated {
            env: env.clone(),
            eval_days: cfg.grid_eval_days,
        },
    };
    let surface = grid_search(&evaluator, &cfg.grid).map_err(runtime_err)?;
    let am = surface.argmax;
    let threshold_err = |on: f64, off: f64| (on - am.t_on_c).abs().max((off - am.t_off_c).abs());

    let report = vec![
        format!("seeds={seeds}"),
        format!("base_seed={base}"),
        format!("oracle_argmax_t_on_c={}", am.t_on_c),
        format!("oracle_argmax_t_off_c={}", am.t_off_c),
        format!("oracle_argmax_j_per_hr={}", am.j_per_hr),
        format!(
            "event_median_eval_j_per_hr={}",
            median(outcomes.iter().map(|o| o.event_j).collect())
        ),
        format!(
            "event_median_threshold_err_c={}",
            median(outcomes.iter().map(|o| threshold_err(o.event_on, o.event_off)).collect())
        ),
        format!(
            "event_median_jbar_std_last5d={}",
            median(outcomes.iter().map(|o| o.event_std).collect())
        ),
        format!(
            "fixed_median_eval_j_per_hr={}",
            median(outcomes.iter().map(|o| o.fixed_j_fixed_control).collect())
        ),
        format!(
            "fixed_event_control_median_eval_j_per_hr={}",
            median(outcomes.iter().map(|o| o.fixed_j_event_control).collect())
        ),
        format!(
            "fixed_median_threshold_err_c={}",
            median(outcomes.iter().map(|o| threshold_err(o.fixed_on, o.fixed_off)).collect())
        ),
        format!(
            "fixed_median_jbar_std_last5d={}",
            median(outcomes.iter().map(|o| o.fixed_std).collect())
        ),
    ];
    write_file(&out.join("report.txt"), &(report.join("\n") + "\n"))?;

    let mut per_seed = vec![
        "seed,event_t_on_c,event_t_off_c,event_j_per_hr,event_jbar_std,fixed_t_on_c,fixed_t_off_c,\
         fixed_control_j_per_hr,event_control_j_per_hr,fixed_jbar_std"
            .to_string(),
    ];
    for o in &outcomes {
        per_seed.push(format!(
            "{},{:.6},{:.6},{:.9},{:.9},{:.6},{:.6},{:.9},{:.9},{:.9}",
            o.seed,
            o.event_on,
            o.event_off,
            o.event_j,
            o.event_std,
            o.fixed_on,
            o.fixed_off,
            o.fixed_j_fixed_control,
            o.fixed_j_event_control,
            o.fixed_std,
        ));
    }
    write_file(&out.join("per_seed.csv"), &(per_seed.join("\n") + "\n"))?;

    let mut manifest = vec!["command=compare".to_string()];
    manifest.extend(report.iter().cloned());
    manifest.push(format!("wall_clock_s={}", start.elapsed().as_secs_f64()));
    for artifact in ["report.txt", "per_seed.csv", "config_snapshot.cfg"] {
        manifest.push(format!("artifact={artifact}"));
    }
    write_manifest(out, &manifest)?;
    for line in &report {
        println!("{line}");
    }
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig, out: &Path, t_on_c: Option<f64>, t_off_c: Option<f64>) -> CliResult<()> {
    let env = build_env(cfg)?;
    let t_on_c = t_on_c.unwrap_or(cfg.train.init_on_c);
    let t_off_c = t_off_c.unwrap_or(cfg.train.init_off_c);
    if !(t_on_c < t_off_c) {
        return Err(CliError::Config(format!(
            "thresholds must satisfy t_on < t_off, got ({t_on_c}, {t_off_c})"
        )));
    }
    let mut pol = FixedThresholds { t_on_c, t_off_c };
    let (trace, j) =
        run_policy(&env, &mut pol, cfg.eval_days * 86_400.0, cfg.train.seed).map_err(runtime_err)?;
    write_file(&out.join("trace.csv"), &trace.to_csv())?;
    let mut manifest = vec![
        "command=simulate".to_string(),
        format!("t_on_c={t_on_c}"),
        format!("t_off_c={t_off_c}"),
        format!("days={}", cfg.eval_days),
        format!("j_per_hr={j}"),
        "artifact=trace.csv".to_string(),
        "artifact=config_snapshot.cfg".to_string(),
    ];
    // Cross-check against the closed-form cycle when it applies.
    if let (Some(t_out), WeatherConfig::Constant { .. }) = (env.weather.constant_value(), &cfg.weather) {
        if let Ok(exact) = limit_cycle_average_reward(&cfg.building, &env.rewards, t_out, t_on_c, t_off_c) {
            manifest.push(format!("limit_cycle_j_per_hr={exact}"));
        }
    }
    write_manifest(out, &manifest)?;
    println!("({t_on_c:.2}, {t_off_c:.2}) C over {} days: J = {j:.4} unit/hr", cfg.eval_days);
    Ok(())
}
