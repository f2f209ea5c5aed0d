//! `train-rl`: one agent per seed in parallel worker slots, learning-curve
//! CSVs, greedy evaluation with full episode logs, and a cross-seed summary
//! table. Also home to the summary types shared by `evaluate` and `report`.

use crate::error::{CliError, CliResult};
use crate::flowcmd::{provide_flow_model, FlowProvision};
use crate::manifest::{write_json_pretty, write_manifest};
use crate::profile::{apply_profile, hull_for_mode, rl_budget, Profile};
use hydrorl::env::{
    per_auv_success_rates, write_episode_log, AuvEnv, EnvConfig, EpisodeMetrics, Mode,
    ScenarioConfig, StepRecord, TargetPattern, TaskKind,
};
use hydrorl::flowfield::FlowModel;
use hydrorl::hull::HullShape;
use hydrorl::rl::{
    make_agent, train, write_curve_csv, Agent, AuvEnvAdapter, EnvInterface, RlAlgo, TrainConfig,
};
use hydrorl::structopt::CurveSummary;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

// ---------------------------------------------------------------- statistics

/// Mean and sample standard deviation across seeds (std 0 for fewer than
/// two values; zeroes for an empty slice, which callers avoid).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

pub fn mean_std(xs: &[f64]) -> MeanStd {
    if xs.is_empty() {
        return MeanStd { mean: 0.0, std: 0.0 };
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    MeanStd { mean, std }
}

/// Mean plus/minus std for the four episode metrics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricTable {
    pub cr: MeanStd,
    pub sdr: MeanStd,
    pub ec: MeanStd,
    pub success_rate: MeanStd,
}

fn metric_table(rows: &[EpisodeMetrics]) -> MetricTable {
    let col = |f: fn(&EpisodeMetrics) -> f64| mean_std(&rows.iter().map(f).collect::<Vec<_>>());
    MetricTable {
        cr: col(|m| m.cumulative_reward),
        sdr: col(|m| m.sum_data_rate),
        ec: col(|m| m.energy_consumption),
        success_rate: col(|m| m.success_rate),
    }
}

// ----------------------------------------------------------- summary types

/// Greedy evaluation digest for one seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalSummary {
    pub episodes: usize,
    /// Metric means across evaluation episodes.
    pub mean: EpisodeMetrics,
    /// Sample standard deviations across evaluation episodes.
    pub std: EpisodeMetrics,
    /// Per-vehicle in-range ratio, averaged across episodes (tracking).
    pub per_auv_success: Vec<f64>,
    /// Fraction of steps with every vehicle in range at once, averaged
    /// across episodes (tracking).
    pub simultaneous_success: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    /// Final-window means of the training curve.
    pub final_window: CurveSummary,
    pub eval: EvalSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub error: String,
}

/// Cross-seed digest written as `summary.json` (plus a CSV mirror).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: String,
    pub scenario: String,
    pub algo: RlAlgo,
    pub mode: Mode,
    pub profile: Profile,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub failures: Vec<SeedFailure>,
    /// Final-window training metrics, mean over seeds.
    pub train_table: MetricTable,
    /// Greedy evaluation metrics, mean over seeds.
    pub eval_table: MetricTable,
    pub per_auv_success: Vec<MeanStd>,
    pub simultaneous_success: MeanStd,
    pub per_seed: Vec<SeedSummary>,
}

/// Recompute the aggregate tables from per-seed summaries. Used both when a
/// run finishes and when `report` re-derives statistics from stored files.
pub fn tables_from_seeds(
    per_seed: &[SeedSummary],
) -> (MetricTable, MetricTable, Vec<MeanStd>, MeanStd) {
    let train_rows: Vec<EpisodeMetrics> =
        per_seed.iter().map(|s| s.final_window.as_metrics()).collect();
    let eval_rows: Vec<EpisodeMetrics> = per_seed.iter().map(|s| s.eval.mean).collect();
    let n_auvs = per_seed
        .first()
        .map(|s| s.eval.per_auv_success.len())
        .unwrap_or(0);
    let per_auv = (0..n_auvs)
        .map(|i| {
            mean_std(
                &per_seed
                    .iter()
                    .map(|s| s.eval.per_auv_success.get(i).copied().unwrap_or(0.0))
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let simultaneous = mean_std(
        &per_seed
            .iter()
            .map(|s| s.eval.simultaneous_success)
            .collect::<Vec<_>>(),
    );
    (
        metric_table(&train_rows),
        metric_table(&eval_rows),
        per_auv,
        simultaneous,
    )
}

// ------------------------------------------------------- resolved config

/// Seed-independent description of the task the run trains on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedScenario {
    pub name: String,
    pub n_auvs: usize,
    pub horizon: usize,
    pub dt: f64,
    /// Present for tracking tasks (the pattern does not depend on the seed).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracking_pattern: Option<TargetPattern>,
}

/// Validate the scenario name and resolve the profile's adjustments.
pub fn resolve_scenario(name: &str, profile: Profile) -> CliResult<ResolvedScenario> {
    let mut probe =
        ScenarioConfig::by_name(name, 0).map_err(|e| CliError::Usage(e.to_string()))?;
    apply_profile(&mut probe, profile);
    let tracking_pattern = match &probe.task.kind {
        TaskKind::TargetTracking { pattern } => Some(*pattern),
        TaskKind::DataCollection { .. } => None,
    };
    Ok(ResolvedScenario {
        name: name.to_string(),
        n_auvs: probe.task.n_auvs,
        horizon: probe.task.horizon,
        dt: probe.task.dt,
        tracking_pattern,
    })
}

/// Resolved configuration hashed into the train-rl manifest; `evaluate`
/// reconstructs environments from this record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainRlConfig {
    pub scenario: ResolvedScenario,
    pub algo: RlAlgo,
    pub mode: Mode,
    pub profile: Profile,
    pub hull: HullShape,
    pub train: TrainConfig,
    pub hidden: Vec<usize>,
    pub eval_episodes: usize,
    pub summary_window: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowProvision>,
}

// -------------------------------------------------------------- execution

pub struct TrainRlArgs {
    pub scenario: String,
    pub algo: RlAlgo,
    pub mode: Mode,
    pub seeds: Vec<u64>,
    pub profile: Profile,
    pub out: PathBuf,
    pub flow_model: Option<PathBuf>,
    pub workers: Option<usize>,
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

pub fn validate_seeds(seeds: &[u64]) -> CliResult<()> {
    if seeds.is_empty() {
        return Err(CliError::Usage("at least one seed is required".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &s in seeds {
        if !seen.insert(s) {
            return Err(CliError::Usage(format!(
                "seed {s} appears more than once; per-seed outputs would collide"
            )));
        }
    }
    Ok(())
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed-{seed}"))
}

/// Run `f` once per seed on a bounded worker pool. Failures are captured as
/// strings so the run continues across the remaining seeds.
pub fn run_seeds_parallel<T, F>(
    seeds: &[u64],
    workers: Option<usize>,
    f: F,
) -> CliResult<Vec<(u64, Result<T, String>)>>
where
    T: Send,
    F: Fn(u64) -> CliResult<T> + Sync,
{
    let n = workers.unwrap_or_else(default_workers).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| (s, f(s).map_err(|e| e.to_string())))
            .collect()
    }))
}

pub fn run_train_rl(args: &TrainRlArgs) -> CliResult<RunSummary> {
    validate_seeds(&args.seeds)?;
    let scenario = resolve_scenario(&args.scenario, args.profile)?;
    let budget = rl_budget(args.profile, scenario.tracking_pattern.is_some());
    let provisioned =
        provide_flow_model(args.mode, args.flow_model.as_deref(), args.profile, &args.out)?;
    let (flow_model, provision) = match provisioned {
        Some((m, p)) => (Some(m), Some(p)),
        None => (None, None),
    };
    let config = TrainRlConfig {
        scenario,
        algo: args.algo,
        mode: args.mode,
        profile: args.profile,
        hull: hull_for_mode(args.mode),
        train: budget.train.clone(),
        hidden: budget.hidden.clone(),
        eval_episodes: budget.eval_episodes,
        summary_window: budget.summary_window,
        flow: provision,
    };
    let manifest = write_manifest(&args.out, "train-rl", &config, &args.seeds)?;

    let results = run_seeds_parallel(&args.seeds, args.workers, |seed| {
        train_one_seed(&config, flow_model.clone(), seed, &seed_dir(&args.out, seed))
    })?;
    let summary = assemble_run_summary("train-rl", &config, &manifest.config_hash, &args.seeds, results);
    finish_run(&args.out, summary)
}

/// Write per-seed failure records, the cross-seed summary (JSON + CSV), and
/// turn an all-seeds wipeout into an error after the artifacts exist.
pub fn finish_run(out: &Path, summary: RunSummary) -> CliResult<RunSummary> {
    for f in &summary.failures {
        write_json_pretty(&seed_dir(out, f.seed).join("error.json"), f)?;
    }
    write_json_pretty(&out.join("summary.json"), &summary)?;
    write_summary_csv(&out.join("summary.csv"), &summary)?;
    if summary.per_seed.is_empty() {
        return Err(CliError::AllSeedsFailed(
            summary
                .failures
                .iter()
                .map(|f| (f.seed, f.error.clone()))
                .collect(),
        ));
    }
    Ok(summary)
}

pub fn assemble_run_summary(
    command: &str,
    config: &TrainRlConfig,
    config_hash: &str,
    seeds: &[u64],
    results: Vec<(u64, Result<SeedSummary, String>)>,
) -> RunSummary {
    let mut per_seed = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(s) => per_seed.push(s),
            Err(error) => failures.push(SeedFailure { seed, error }),
        }
    }
    let (train_table, eval_table, per_auv_success, simultaneous_success) =
        tables_from_seeds(&per_seed);
    RunSummary {
        command: command.to_string(),
        scenario: config.scenario.name.clone(),
        algo: config.algo,
        mode: config.mode,
        profile: config.profile,
        config_hash: config_hash.to_string(),
        seeds: seeds.to_vec(),
        failures,
        train_table,
        eval_table,
        per_auv_success,
        simultaneous_success,
        per_seed,
    }
}

fn train_one_seed(
    cfg: &TrainRlConfig,
    flow: Option<Arc<FlowModel>>,
    seed: u64,
    dir: &Path,
) -> CliResult<SeedSummary> {
    std::fs::create_dir_all(dir)?;
    let mut adapter = build_env(cfg, flow, seed)?;
    let mut agent = make_agent(
        cfg.algo,
        adapter.obs_dim(),
        adapter.action_dim(),
        &cfg.hidden,
        seed,
    )?;
    let mut tcfg = cfg.train.clone();
    tcfg.seed = seed;
    let curve = train(agent.as_mut(), &mut adapter, &tcfg)?;
    write_curve_csv(&dir.join("curve.csv"), &curve)?;
    agent.save(&dir.join("checkpoint"))?;
    let final_window = CurveSummary::from_records(&curve, cfg.summary_window)?;
    let eval = greedy_eval(
        agent.as_mut(),
        &mut adapter,
        cfg.eval_episodes,
        &dir.join("episodes"),
    )?;
    let summary = SeedSummary {
        seed,
        final_window,
        eval,
    };
    write_json_pretty(&dir.join("summary.json"), &summary)?;
    println!(
        "[{} {} seed {seed}] final-window cr {:.1}, sdr {:.1}, ec {:.1}; eval success {:.3}",
        cfg.algo.name(),
        match cfg.mode {
            Mode::EnvAware => "env-aware",
            Mode::Traditional => "traditional",
        },
        summary.final_window.mean_cr,
        summary.final_window.mean_sdr,
        summary.final_window.mean_ec,
        summary.eval.mean.success_rate,
    );
    Ok(summary)
}

/// Build the per-seed environment behind the trainer interface.
pub fn build_env(
    cfg: &TrainRlConfig,
    flow: Option<Arc<FlowModel>>,
    seed: u64,
) -> CliResult<AuvEnvAdapter> {
    let mut scenario = ScenarioConfig::by_name(&cfg.scenario.name, seed)?;
    apply_profile(&mut scenario, cfg.profile);
    let env_cfg = match cfg.mode {
        Mode::EnvAware => EnvConfig::env_aware(scenario, cfg.hull.clone()),
        Mode::Traditional => EnvConfig::traditional(scenario),
    };
    Ok(AuvEnvAdapter::new(AuvEnv::new(env_cfg, flow)?))
}

/// Fraction of logged steps at which every vehicle holds the target in
/// detection range simultaneously.
pub fn simultaneous_success_rate(log: &[StepRecord]) -> f64 {
    if log.is_empty() {
        return 0.0;
    }
    let hits = log
        .iter()
        .filter(|s| !s.auvs.is_empty() && s.auvs.iter().all(|a| a.target_in_range))
        .count();
    hits as f64 / log.len() as f64
}

/// Run greedy episodes, writing one JSONL trajectory per episode into `dir`.
pub fn greedy_eval(
    agent: &mut dyn Agent,
    adapter: &mut AuvEnvAdapter,
    episodes: usize,
    dir: &Path,
) -> CliResult<EvalSummary> {
    std::fs::create_dir_all(dir)?;
    let n_auvs = adapter.inner().n_auvs();
    let mut rows = Vec::with_capacity(episodes);
    let mut per_auv_sum = vec![0.0; n_auvs];
    let mut sim_sum = 0.0;
    for e in 0..episodes {
        let mut states = adapter.reset()?;
        loop {
            let actions: Vec<Vec<f64>> = states
                .iter()
                .map(|s| agent.act(s, false))
                .collect::<hydrorl::Result<_>>()?;
            let outcome = adapter.step(&actions)?;
            states = outcome.states;
            if outcome.done {
                break;
            }
        }
        rows.push(adapter.metrics());
        let log = adapter.inner().log();
        write_episode_log(&dir.join(format!("ep-{e:03}.jsonl")), log)?;
        let per = per_auv_success_rates(log)?;
        for (acc, p) in per_auv_sum.iter_mut().zip(&per) {
            *acc += p;
        }
        sim_sum += simultaneous_success_rate(log);
    }
    let n = episodes.max(1) as f64;
    let col = |f: fn(&EpisodeMetrics) -> f64| mean_std(&rows.iter().map(f).collect::<Vec<_>>());
    let cr = col(|m| m.cumulative_reward);
    let sdr = col(|m| m.sum_data_rate);
    let ec = col(|m| m.energy_consumption);
    let sr = col(|m| m.success_rate);
    Ok(EvalSummary {
        episodes,
        mean: EpisodeMetrics {
            cumulative_reward: cr.mean,
            sum_data_rate: sdr.mean,
            energy_consumption: ec.mean,
            success_rate: sr.mean,
        },
        std: EpisodeMetrics {
            cumulative_reward: cr.std,
            sum_data_rate: sdr.std,
            energy_consumption: ec.std,
            success_rate: sr.std,
        },
        per_auv_success: per_auv_sum.iter().map(|s| s / n).collect(),
        simultaneous_success: sim_sum / n,
    })
}

/// CSV mirror of the summary tables: one row per metric and section.
fn write_summary_csv(path: &Path, s: &RunSummary) -> CliResult<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "section,metric,mean,std")?;
    let mut row = |section: &str, metric: &str, v: MeanStd| {
        writeln!(f, "{section},{metric},{},{}", v.mean, v.std)
    };
    for (section, t) in [("train_final_window", &s.train_table), ("eval", &s.eval_table)] {
        row(section, "cr", t.cr)?;
        row(section, "sdr", t.sdr)?;
        row(section, "ec", t.ec)?;
        row(section, "success_rate", t.success_rate)?;
    }
    for (i, v) in s.per_auv_success.iter().enumerate() {
        row("eval", &format!("per_auv_success_{i}"), *v)?;
    }
    row("eval", "simultaneous_success", s.simultaneous_success)?;
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use hydrorl::env::{Action, AuvStepRecord, RewardTerms};

    fn step(flags: &[bool]) -> StepRecord {
        StepRecord {
            t: 0.0,
            auvs: flags
                .iter()
                .map(|&in_range| AuvStepRecord {
                    position: [0.0; 3],
                    action: Action {
                        speed: 1.2,
                        yaw: 0.0,
                        pitch: 0.0,
                    },
                    reward: 0.0,
                    reward_terms: RewardTerms {
                        task: 0.0,
                        energy: 0.0,
                        collision: 0.0,
                        cooperation: 0.0,
                    },
                    data_rate: 0.0,
                    energy: 0.0,
                    target_in_range: in_range,
                })
                .collect(),
            done: false,
            collision: false,
            target_position: Some([0.0; 3]),
        }
    }

    #[test]
    fn simultaneous_rate_requires_every_vehicle_in_range_at_once() {
        // Both in range at one of four steps; each individually at two.
        let log = vec![
            step(&[true, false]),
            step(&[false, true]),
            step(&[true, true]),
            step(&[false, false]),
        ];
        assert_eq!(simultaneous_success_rate(&log), 0.25);
        assert_eq!(simultaneous_success_rate(&[]), 0.0);
        let never = vec![step(&[true, false]); 5];
        assert_eq!(simultaneous_success_rate(&never), 0.0);
        let always = vec![step(&[true, true]); 5];
        assert_eq!(simultaneous_success_rate(&always), 1.0);
    }

    #[test]
    fn mean_std_matches_hand_computation() {
        let v = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert!((v.mean - 2.5).abs() < 1e-12);
        // Sample variance of 1..4 is 5/3.
        assert!((v.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        let single = mean_std(&[7.0]);
        assert_eq!(single.mean, 7.0);
        assert_eq!(single.std, 0.0);
    }

    #[test]
    fn seed_validation_rejects_empty_and_duplicates() {
        assert!(validate_seeds(&[]).is_err());
        assert!(validate_seeds(&[1, 2, 1]).is_err());
        assert!(validate_seeds(&[0, 1, 2]).is_ok());
    }

    #[test]
    fn aggregate_tables_are_seed_means() {
        // Two seeds with known final-window metrics: the aggregate must be
        // their arithmetic mean.
        let mk = |seed: u64, cr: f64| SeedSummary {
            seed,
            final_window: CurveSummary {
                window: 1,
                mean_cr: cr,
                mean_sdr: 2.0 * cr,
                mean_ec: 100.0 - cr,
                mean_success: 0.5,
            },
            eval: EvalSummary {
                episodes: 1,
                mean: EpisodeMetrics {
                    cumulative_reward: cr,
                    sum_data_rate: 0.0,
                    energy_consumption: 0.0,
                    success_rate: 0.25,
                },
                std: EpisodeMetrics::zero(),
                per_auv_success: vec![0.2, 0.8],
                simultaneous_success: 0.1,
            },
        };
        let seeds = vec![mk(0, 10.0), mk(1, 30.0)];
        let (train, eval, per_auv, sim) = tables_from_seeds(&seeds);
        assert!((train.cr.mean - 20.0).abs() < 1e-12);
        assert!((train.sdr.mean - 40.0).abs() < 1e-12);
        assert!((train.ec.mean - 80.0).abs() < 1e-12);
        assert!((eval.success_rate.mean - 0.25).abs() < 1e-12);
        assert_eq!(per_auv.len(), 2);
        assert!((per_auv[1].mean - 0.8).abs() < 1e-12);
        assert!((sim.mean - 0.1).abs() < 1e-12);
    }

    #[test]
    fn parallel_map_preserves_seed_order_and_captures_failures() {
        let out = run_seeds_parallel(&[5, 6, 7], Some(2), |s| {
            if s == 6 {
                Err(CliError::Runtime("boom".into()))
            } else {
                Ok(s * 10)
            }
        })
        .unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].0, 5);
        assert_eq!(out[1].0, 6);
        assert_eq!(out[2].0, 7);
        assert_eq!(out[0].1.as_ref().unwrap(), &50);
        assert!(out[1].1.as_ref().unwrap_err().contains("boom"));
        assert_eq!(out[2].1.as_ref().unwrap(), &70);
    }
}
