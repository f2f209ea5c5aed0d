//! `train-flow`: train the channel PINN for one hull generation, persist the
//! model with its loss history and a convergence report, and provision
//! ambient flow models for environment-aware training runs.

use crate::error::{CliError, CliResult};
use crate::manifest::{sha256_file, write_json_pretty, write_manifest};
use crate::profile::{flow_budget, FlowBudget, Profile};
use hydrorl::env::Mode;
use hydrorl::flowfield::{
    continuity_rms, train_flow_net, BoundaryCounts, ChannelScenario, FinalLosses, FlowMeta,
    FlowModel, FlowTrainConfig, FlowTrainReport, LossBreakdown, LossRecord, TrainOutcome,
};
use hydrorl::hull::{HullFamily, HullShape};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Default seed for flow training data, fixed so every run that trains its
/// own ambient model reconstructs the same field.
pub const DEFAULT_FLOW_DATA_SEED: u64 = 0x666c_6f77;
/// Salt for the held-out continuity points.
const HOLDOUT_SALT: u64 = 0x484f_4c44;
/// Meters per second carried by one unit of dimensionless PINN velocity
/// when the model drives the environment's ambient field. Half a metre per
/// second free-stream, roughly a one-knot coastal current.
pub const VELOCITY_SCALE: f64 = 0.5;
/// File the network checkpoint is saved under inside a model directory.
pub const NET_FILE: &str = "flow_net.json";
pub const META_FILE: &str = "flow_meta.json";

/// A trained flow model plus its training diagnostics.
pub struct FlowArtifacts {
    pub model: FlowModel,
    pub report: FlowTrainReport,
    pub holdout_continuity_rms: f64,
    /// The optimizer configuration actually used (groups resolved).
    pub cfg: FlowTrainConfig,
}

/// Train the standard channel scenario for `family` under `budget`.
pub fn train_flow_artifacts(
    family: HullFamily,
    budget: &FlowBudget,
    data_seed: u64,
) -> CliResult<FlowArtifacts> {
    let channel = ChannelScenario::standard(family);
    let mut cfg = budget.cfg.clone();
    cfg.groups = channel.groups;
    let (coll, bc, ic) = channel.training_data(budget.n_interior, &budget.boundary, data_seed)?;
    let (net, report) = train_flow_net(&cfg, &coll, &bc, &ic)?;
    let holdout = channel.collocation(budget.holdout, data_seed ^ HOLDOUT_SALT)?;
    let holdout_continuity_rms = continuity_rms(&net, holdout.interior.view())?;
    let meta = FlowMeta {
        domain: channel.domain,
        groups: channel.groups,
        weights: cfg.weights,
        final_losses: Some(FinalLosses {
            navier_stokes: report.final_losses.navier_stokes,
            continuity: report.final_losses.continuity,
            boundary: report.final_losses.boundary,
            initial: report.final_losses.initial,
            total: report.final_total,
        }),
        length_scale: HullShape::standard(family).length,
        velocity_scale: VELOCITY_SCALE,
    };
    Ok(FlowArtifacts {
        model: FlowModel::new(net, meta)?,
        report,
        holdout_continuity_rms,
        cfg,
    })
}

/// Contents of `report.json` for a flow training run.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FlowReportFile {
    pub outcome: TrainOutcome,
    pub initial_total: f64,
    pub final_losses: LossBreakdown,
    pub final_total: f64,
    pub holdout_continuity_rms: f64,
}

impl FlowReportFile {
    fn new(art: &FlowArtifacts) -> Self {
        FlowReportFile {
            outcome: art.report.outcome,
            initial_total: art.report.initial_total,
            final_losses: art.report.final_losses,
            final_total: art.report.final_total,
            holdout_continuity_rms: art.holdout_continuity_rms,
        }
    }
}

/// Serializable mirror of the boundary sample counts.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct BoundaryDump {
    pub inlet: usize,
    pub outlet: usize,
    pub wall: usize,
    pub hull: usize,
}

impl From<&BoundaryCounts> for BoundaryDump {
    fn from(b: &BoundaryCounts) -> Self {
        BoundaryDump {
            inlet: b.inlet,
            outlet: b.outlet,
            wall: b.wall,
            hull: b.hull,
        }
    }
}

impl From<&BoundaryDump> for BoundaryCounts {
    fn from(b: &BoundaryDump) -> Self {
        BoundaryCounts {
            inlet: b.inlet,
            outlet: b.outlet,
            wall: b.wall,
            hull: b.hull,
        }
    }
}

/// Resolved configuration hashed into the train-flow manifest.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FlowRunConfig {
    pub generation: u32,
    pub family: String,
    pub profile: Profile,
    pub data_seed: u64,
    pub cfg: FlowTrainConfig,
    pub n_interior: usize,
    pub boundary: BoundaryDump,
    pub holdout: usize,
    pub length_scale: f64,
    pub velocity_scale: f64,
}

pub struct TrainFlowArgs {
    pub generation: u32,
    pub profile: Profile,
    pub out: PathBuf,
    pub data_seed: u64,
}

pub fn run_train_flow(args: &TrainFlowArgs) -> CliResult<FlowReportFile> {
    let family = HullFamily::from_generation(args.generation)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let budget = flow_budget(args.profile);
    let channel = ChannelScenario::standard(family);
    let mut resolved_cfg = budget.cfg.clone();
    resolved_cfg.groups = channel.groups;
    let config = FlowRunConfig {
        generation: args.generation,
        family: format!("{family:?}"),
        profile: args.profile,
        data_seed: args.data_seed,
        cfg: resolved_cfg,
        n_interior: budget.n_interior,
        boundary: BoundaryDump::from(&budget.boundary),
        holdout: budget.holdout,
        length_scale: HullShape::standard(family).length,
        velocity_scale: VELOCITY_SCALE,
    };
    write_manifest(&args.out, "train-flow", &config, &[args.data_seed])?;

    let art = train_flow_artifacts(family, &budget, args.data_seed)?;
    art.model.save(&args.out.join("model"))?;
    write_history_csv(&args.out.join("history.csv"), &art.report.history)?;
    let file = FlowReportFile::new(&art);
    write_json_pretty(&args.out.join("report.json"), &file)?;
    println!(
        "trained flow net for generation {} ({}): total loss {:.3e} -> {:.3e}, held-out continuity RMS {:.3e} ({:?})",
        args.generation,
        config.family,
        file.initial_total,
        file.final_total,
        file.holdout_continuity_rms,
        file.outcome,
    );
    Ok(file)
}

/// Full-batch loss history as CSV.
fn write_history_csv(path: &Path, history: &[LossRecord]) -> CliResult<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "step,phase,navier_stokes,continuity,boundary,initial,total")?;
    for r in history {
        writeln!(
            f,
            "{},{:?},{},{},{},{},{}",
            r.step,
            r.phase,
            r.losses.navier_stokes,
            r.losses.continuity,
            r.losses.boundary,
            r.losses.initial,
            r.total
        )?;
    }
    f.flush()?;
    Ok(())
}

/// Where a run's ambient flow model came from.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum FlowProvision {
    /// Trained in place with the run's own budget.
    Trained {
        family: String,
        data_seed: u64,
        cfg: Box<FlowTrainConfig>,
        n_interior: usize,
        boundary: BoundaryDump,
        net_sha256: String,
    },
    /// Loaded from an external directory and rematerialized into the run.
    Loaded { net_sha256: String },
}

/// Materialize the ambient flow model for an environment-aware run into
/// `<out>/flow/model`. Traditional runs get no flow model.
pub fn provide_flow_model(
    mode: Mode,
    flow_model: Option<&Path>,
    profile: Profile,
    out: &Path,
) -> CliResult<Option<(Arc<FlowModel>, FlowProvision)>> {
    if mode == Mode::Traditional {
        return Ok(None);
    }
    let model_dir = out.join("flow").join("model");
    if let Some(src) = flow_model {
        let model = FlowModel::load(src)?;
        model.save(&model_dir)?;
        let net_sha256 = sha256_file(&model_dir.join(NET_FILE))?;
        return Ok(Some((Arc::new(model), FlowProvision::Loaded { net_sha256 })));
    }
    // Environment-aware vehicles carry the latest design generation, so the
    // ambient field is the wake of that hull.
    let family = HullFamily::ParabolicTail;
    let budget = flow_budget(profile);
    let art = train_flow_artifacts(family, &budget, DEFAULT_FLOW_DATA_SEED)?;
    art.model.save(&model_dir)?;
    write_json_pretty(
        &out.join("flow").join("report.json"),
        &FlowReportFile::new(&art),
    )?;
    let net_sha256 = sha256_file(&model_dir.join(NET_FILE))?;
    let provision = FlowProvision::Trained {
        family: format!("{family:?}"),
        data_seed: DEFAULT_FLOW_DATA_SEED,
        cfg: Box::new(art.cfg.clone()),
        n_interior: budget.n_interior,
        boundary: BoundaryDump::from(&budget.boundary),
        net_sha256,
    };
    Ok(Some((Arc::new(art.model), provision)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_budget() -> FlowBudget {
        FlowBudget {
            cfg: FlowTrainConfig {
                hidden: vec![8],
                adam_steps: 20,
                minibatch: 0,
                lbfgs_steps: 0,
                record_every: 10,
                ..FlowTrainConfig::default()
            },
            n_interior: 60,
            boundary: BoundaryCounts {
                inlet: 8,
                outlet: 8,
                wall: 12,
                hull: 16,
            },
            holdout: 40,
        }
    }

    #[test]
    fn artifacts_are_deterministic_for_a_fixed_data_seed() {
        let a = train_flow_artifacts(HullFamily::Capsule, &tiny_budget(), 11).unwrap();
        let b = train_flow_artifacts(HullFamily::Capsule, &tiny_budget(), 11).unwrap();
        assert_eq!(a.report.final_total, b.report.final_total);
        assert_eq!(a.holdout_continuity_rms, b.holdout_continuity_rms);
        assert_eq!(a.model.net().params(), b.model.net().params());
        // The meta must advertise the steady channel groups, not defaults.
        assert_eq!(a.model.meta().groups.strouhal, 0.0);
        assert_eq!(a.model.meta().velocity_scale, VELOCITY_SCALE);
    }

    #[test]
    fn provisioned_model_roundtrips_through_the_run_directory() {
        let dir = tempfile::tempdir().unwrap();
        // Use the tiny budget by training directly; provisioning at CI scale
        // is exercised by the integration tests.
        let art = train_flow_artifacts(HullFamily::ParabolicTail, &tiny_budget(), 3).unwrap();
        let model_dir = dir.path().join("flow").join("model");
        art.model.save(&model_dir).unwrap();
        let loaded = FlowModel::load(&model_dir).unwrap();
        assert_eq!(loaded.net().params(), art.model.net().params());
        let sha1 = sha256_file(&model_dir.join(NET_FILE)).unwrap();
        loaded.save(&model_dir).unwrap();
        let sha2 = sha256_file(&model_dir.join(NET_FILE)).unwrap();
        assert_eq!(sha1, sha2, "save/load must be byte-stable");
    }

    #[test]
    fn traditional_mode_gets_no_flow_model() {
        let dir = tempfile::tempdir().unwrap();
        let got = provide_flow_model(Mode::Traditional, None, Profile::Ci, dir.path()).unwrap();
        assert!(got.is_none());
        assert!(!dir.path().join("flow").exists());
    }
}
