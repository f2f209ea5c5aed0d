//! `evolve`: run the three-agent design pipeline for N generations per
//! seed, archiving every round in an append-only knowledge repository and
//! summarizing per-generation metrics across seeds.

use crate::error::{CliError, CliResult};
use crate::flowcmd::{BoundaryDump, VELOCITY_SCALE};
use crate::manifest::{write_json_pretty, write_manifest};
use crate::profile::{apply_profile, flow_budget, rl_budget, Profile};
use crate::runs::{
    mean_std, resolve_scenario, run_seeds_parallel, seed_dir, validate_seeds, MeanStd,
    ResolvedScenario, SeedFailure,
};
use hydrorl::env::{EpisodeMetrics, ScenarioConfig};
use hydrorl::flowfield::FlowTrainConfig;
use hydrorl::hull::{HullFamily, HullShape};
use hydrorl::rl::{RlAlgo, TrainConfig};
use hydrorl::structopt::{joint_optimize, JointSettings, KnowledgeRepo, Pipeline};
use serde::{Deserialize, Serialize};
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub struct EvolveArgs {
    pub scenario: String,
    pub algo: RlAlgo,
    pub generations: u32,
    pub seeds: Vec<u64>,
    pub profile: Profile,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

/// Resolved configuration hashed into the evolve manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub scenario: ResolvedScenario,
    pub algo: RlAlgo,
    pub generations: u32,
    pub profile: Profile,
    pub initial_hull: HullShape,
    pub rl: TrainConfig,
    pub hidden: Vec<usize>,
    pub flow_cfg: FlowTrainConfig,
    pub n_interior: usize,
    pub boundary: BoundaryDump,
    pub summary_window: usize,
    pub flow_ring_samples: usize,
    pub velocity_scale: f64,
}

/// One archived round, flattened for the summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundDigest {
    pub generation: u32,
    /// Family of the design evaluated this round.
    pub family: String,
    pub drag_coefficient: f64,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection: Option<String>,
    pub metrics: EpisodeMetrics,
    /// Family the pipeline proposed for the next round.
    pub proposal_family: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedEvolution {
    pub seed: u64,
    pub best_generation: u32,
    pub final_hull: HullShape,
    pub final_family: String,
    pub final_drag: f64,
    pub rounds: Vec<RoundDigest>,
}

/// Per-generation statistics across seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationRow {
    pub generation: u32,
    /// Families evaluated this round, one per successful seed.
    pub families: Vec<String>,
    pub accepted: usize,
    pub cr: MeanStd,
    pub sdr: MeanStd,
    pub ec: MeanStd,
    pub success_rate: MeanStd,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveSummary {
    pub command: String,
    pub scenario: String,
    pub algo: RlAlgo,
    pub generations: u32,
    pub profile: Profile,
    pub config_hash: String,
    /// Which pipeline backend handled the rounds (None = offline fallback).
    pub backend: Option<String>,
    pub seeds: Vec<u64>,
    pub failures: Vec<SeedFailure>,
    pub per_generation: Vec<GenerationRow>,
    /// Mean energy consumption strictly decreases across generations.
    pub strictly_decreasing_ec: bool,
    pub per_seed: Vec<SeedEvolution>,
}

fn family_name(f: HullFamily) -> String {
    format!("{f:?}")
}

pub fn run_evolve(args: &EvolveArgs) -> CliResult<EvolveSummary> {
    validate_seeds(&args.seeds)?;
    if args.generations == 0 {
        return Err(CliError::Usage("generations must be positive".into()));
    }
    let resolved = resolve_scenario(&args.scenario, args.profile)?;
    let rlb = rl_budget(args.profile, resolved.tracking_pattern.is_some());
    let flowb = flow_budget(args.profile);
    let initial_hull = HullShape::standard(HullFamily::Capsule);
    let config = EvolveConfig {
        scenario: resolved,
        algo: args.algo,
        generations: args.generations,
        profile: args.profile,
        initial_hull: initial_hull.clone(),
        rl: rlb.train.clone(),
        hidden: rlb.hidden.clone(),
        flow_cfg: flowb.cfg.clone(),
        n_interior: flowb.n_interior,
        boundary: BoundaryDump::from(&flowb.boundary),
        summary_window: rlb.summary_window,
        flow_ring_samples: 64,
        velocity_scale: VELOCITY_SCALE,
    };
    let manifest = write_manifest(&args.out, "evolve", &config, &args.seeds)?;
    let backend = Pipeline::from_env().backend_name().map(str::to_string);

    let results = run_seeds_parallel(&args.seeds, args.workers, |seed| {
        evolve_one_seed(&config, seed, &seed_dir(&args.out, seed))
    })?;
    let mut per_seed = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(s) => per_seed.push(s),
            Err(error) => failures.push(SeedFailure { seed, error }),
        }
    }
    for f in &failures {
        write_json_pretty(&seed_dir(&args.out, f.seed).join("error.json"), f)?;
    }

    let per_generation = generation_rows(args.generations, &per_seed);
    let strictly_decreasing_ec = per_generation.len() > 1
        && per_generation
            .windows(2)
            .all(|w| w[1].ec.mean < w[0].ec.mean);
    let summary = EvolveSummary {
        command: "evolve".into(),
        scenario: config.scenario.name.clone(),
        algo: args.algo,
        generations: args.generations,
        profile: args.profile,
        config_hash: manifest.config_hash.clone(),
        backend,
        seeds: args.seeds.clone(),
        failures,
        per_generation,
        strictly_decreasing_ec,
        per_seed,
    };
    write_json_pretty(&args.out.join("summary.json"), &summary)?;
    write_evolve_csv(&args.out.join("summary.csv"), &summary)?;
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

fn evolve_one_seed(config: &EvolveConfig, seed: u64, dir: &Path) -> CliResult<SeedEvolution> {
    std::fs::create_dir_all(dir)?;
    let repo_path = dir.join("repo.jsonl");
    let mut repo = KnowledgeRepo::open(&repo_path)?;
    if !repo.is_empty() {
        return Err(CliError::Usage(format!(
            "knowledge repository '{}' already holds {} records; evolve starts from an empty repository (it is append-only)",
            repo_path.display(),
            repo.len()
        )));
    }
    let mut scenario = ScenarioConfig::by_name(&config.scenario.name, seed)?;
    apply_profile(&mut scenario, config.profile);
    let mut rl = config.rl.clone();
    rl.seed = seed;
    let settings = JointSettings {
        algo: config.algo,
        scenario,
        hidden: config.hidden.clone(),
        rl,
        flow: config.flow_cfg.clone(),
        n_interior: config.n_interior,
        boundary: (&config.boundary).into(),
        summary_window: config.summary_window,
        flow_ring_samples: config.flow_ring_samples,
        velocity_scale: config.velocity_scale,
        seed,
    };
    let pipeline = Pipeline::from_env();
    let outcome = joint_optimize(
        config.initial_hull.clone(),
        config.generations,
        &pipeline,
        &settings,
        &mut repo,
    )?;
    let rounds: Vec<RoundDigest> = outcome
        .records
        .iter()
        .map(|r| RoundDigest {
            generation: r.generation,
            family: family_name(r.dossier.hull.family),
            drag_coefficient: r.dossier.hull.drag_coefficient(),
            accepted: r.accepted,
            rejection: r.rejection.clone(),
            metrics: r.metrics,
            proposal_family: family_name(r.proposal.family),
        })
        .collect();
    let evolution = SeedEvolution {
        seed,
        best_generation: outcome.best_generation,
        final_family: family_name(outcome.final_shape.family),
        final_drag: outcome.final_shape.drag_coefficient(),
        final_hull: outcome.final_shape,
        rounds,
    };
    write_json_pretty(&dir.join("generations.json"), &evolution)?;
    println!(
        "[evolve seed {seed}] {} -> best generation {}",
        evolution
            .rounds
            .iter()
            .map(|r| r.family.as_str())
            .collect::<Vec<_>>()
            .join(" -> "),
        evolution.best_generation
    );
    Ok(evolution)
}

fn generation_rows(generations: u32, per_seed: &[SeedEvolution]) -> Vec<GenerationRow> {
    (1..=generations)
        .map(|g| {
            let rounds: Vec<&RoundDigest> = per_seed
                .iter()
                .filter_map(|s| s.rounds.iter().find(|r| r.generation == g))
                .collect();
            let col = |f: fn(&EpisodeMetrics) -> f64| {
                mean_std(&rounds.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>())
            };
            GenerationRow {
                generation: g,
                families: rounds.iter().map(|r| r.family.clone()).collect(),
                accepted: rounds.iter().filter(|r| r.accepted).count(),
                cr: col(|m| m.cumulative_reward),
                sdr: col(|m| m.sum_data_rate),
                ec: col(|m| m.energy_consumption),
                success_rate: col(|m| m.success_rate),
            }
        })
        .collect()
}

fn write_evolve_csv(path: &Path, s: &EvolveSummary) -> CliResult<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        f,
        "generation,families,accepted,cr_mean,cr_std,sdr_mean,sdr_std,ec_mean,ec_std,success_mean,success_std"
    )?;
    for r in &s.per_generation {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.generation,
            r.families.join(";"),
            r.accepted,
            r.cr.mean,
            r.cr.std,
            r.sdr.mean,
            r.sdr.std,
            r.ec.mean,
            r.ec.std,
            r.success_rate.mean,
            r.success_rate.std,
        )?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn digest(generation: u32, ec: f64, accepted: bool) -> RoundDigest {
        RoundDigest {
            generation,
            family: "Capsule".into(),
            drag_coefficient: 0.55,
            accepted,
            rejection: None,
            metrics: EpisodeMetrics {
                cumulative_reward: 1.0,
                sum_data_rate: 2.0,
                energy_consumption: ec,
                success_rate: 0.0,
            },
            proposal_family: "IceCreamCone".into(),
        }
    }

    #[test]
    fn generation_rows_average_across_seeds() {
        let seeds = vec![
            SeedEvolution {
                seed: 0,
                best_generation: 1,
                final_hull: HullShape::standard(HullFamily::Capsule),
                final_family: "Capsule".into(),
                final_drag: 0.55,
                rounds: vec![digest(1, 100.0, true), digest(2, 60.0, true)],
            },
            SeedEvolution {
                seed: 1,
                best_generation: 2,
                final_hull: HullShape::standard(HullFamily::Capsule),
                final_family: "Capsule".into(),
                final_drag: 0.55,
                rounds: vec![digest(1, 120.0, true), digest(2, 80.0, false)],
            },
        ];
        let rows = generation_rows(2, &seeds);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].families.len(), 2);
        assert_eq!(rows[0].accepted, 2);
        assert_eq!(rows[1].accepted, 1);
        assert!((rows[0].ec.mean - 110.0).abs() < 1e-12);
        assert!((rows[1].ec.mean - 70.0).abs() < 1e-12);
    }
}
