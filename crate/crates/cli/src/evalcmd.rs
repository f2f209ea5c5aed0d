//! `evaluate`: rerun greedy evaluation for a finished train-rl run, reusing
//! its manifest, flow model and per-seed checkpoints.

use crate::error::{CliError, CliResult};
use crate::flowcmd::{META_FILE, NET_FILE};
use crate::manifest::{read_json, read_manifest, write_manifest};
use crate::manifest::write_json_pretty;
use crate::runs::{
    assemble_run_summary, build_env, finish_run, greedy_eval, run_seeds_parallel, seed_dir,
    RunSummary, SeedSummary, TrainRlConfig,
};
use hydrorl::env::Mode;
use hydrorl::flowfield::FlowModel;
use hydrorl::rl::{Agent, RlAlgo, SacAgent, Td3Agent};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub struct EvaluateArgs {
    pub from: PathBuf,
    pub episodes: Option<usize>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl EvaluateArgs {
    /// Where this evaluation writes its artifacts.
    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| self.from.join("eval"))
    }
}

/// Configuration hashed into the evaluate manifest.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EvaluateConfig {
    /// Hash of the training run this evaluation replays.
    pub source_hash: String,
    pub episodes: usize,
    pub run: TrainRlConfig,
}

fn load_agent(algo: RlAlgo, dir: &Path) -> CliResult<Box<dyn Agent>> {
    Ok(match algo {
        RlAlgo::Sac => Box::new(SacAgent::load(dir)?),
        RlAlgo::Td3 => Box::new(Td3Agent::load(dir)?),
    })
}

pub fn run_evaluate(args: &EvaluateArgs) -> CliResult<RunSummary> {
    let from = &args.from;
    let manifest = read_manifest(from)?;
    if manifest.command != "train-rl" {
        return Err(CliError::Usage(format!(
            "evaluate expects a train-rl run directory; '{}' was produced by '{}'",
            from.display(),
            manifest.command
        )));
    }
    let cfg: TrainRlConfig = serde_json::from_value(manifest.config.clone())?;
    let prior: RunSummary = read_json(&from.join("summary.json"))?;
    // Only seeds that finished training have checkpoints to evaluate.
    let seeds: Vec<u64> = prior.per_seed.iter().map(|s| s.seed).collect();
    if seeds.is_empty() {
        return Err(CliError::Usage(format!(
            "'{}' contains no successfully trained seeds",
            from.display()
        )));
    }

    let mut missing = Vec::new();
    if cfg.mode == Mode::EnvAware {
        let model_dir = from.join("flow").join("model");
        for file in [NET_FILE, META_FILE] {
            let p = model_dir.join(file);
            if !p.is_file() {
                missing.push(p);
            }
        }
    }
    for &seed in &seeds {
        let ckpt = seed_dir(from, seed).join("checkpoint");
        if !ckpt.is_dir() {
            missing.push(ckpt);
        }
    }
    if !missing.is_empty() {
        return Err(CliError::MissingArtifacts(missing));
    }

    let flow = if cfg.mode == Mode::EnvAware {
        Some(Arc::new(FlowModel::load(&from.join("flow").join("model"))?))
    } else {
        None
    };
    let episodes = args.episodes.unwrap_or(cfg.eval_episodes);
    if episodes == 0 {
        return Err(CliError::Usage("episodes must be positive".into()));
    }
    let out = args.out_dir();
    let eval_config = EvaluateConfig {
        source_hash: manifest.config_hash.clone(),
        episodes,
        run: cfg.clone(),
    };
    let eval_manifest = write_manifest(&out, "evaluate", &eval_config, &seeds)?;

    let prior_windows: BTreeMap<u64, &SeedSummary> =
        prior.per_seed.iter().map(|s| (s.seed, s)).collect();
    let results = run_seeds_parallel(&seeds, args.workers, |seed| {
        let dir = seed_dir(&out, seed);
        std::fs::create_dir_all(&dir)?;
        let mut adapter = build_env(&cfg, flow.clone(), seed)?;
        let mut agent = load_agent(cfg.algo, &seed_dir(from, seed).join("checkpoint"))?;
        let eval = greedy_eval(agent.as_mut(), &mut adapter, episodes, &dir.join("episodes"))?;
        let summary = SeedSummary {
            seed,
            // Training statistics are not recomputed here; carry the stored
            // final-window digest alongside the fresh evaluation.
            final_window: prior_windows[&seed].final_window,
            eval,
        };
        write_json_pretty(&dir.join("summary.json"), &summary)?;
        println!(
            "[evaluate seed {seed}] success {:.3} over {episodes} episodes",
            summary.eval.mean.success_rate
        );
        Ok(summary)
    })?;
    let summary = assemble_run_summary(
        "evaluate",
        &cfg,
        &eval_manifest.config_hash,
        &seeds,
        results,
    );
    finish_run(&out, summary)
}
