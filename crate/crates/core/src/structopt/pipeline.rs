//! Three-agent design pipeline.
//!
//! A design round runs three collaborating roles in a fixed order:
//!
//! 1. **Task analysis** reads the design dossier and emits *directives*: how
//!    much drag to shed, which curvature class the next profile should have,
//!    and which dimensions are frozen.
//! 2. **Task implementation** turns the directives into a concrete hull
//!    proposal, preserving the frozen dimensions.
//! 3. **Code generation** renders an accepted proposal into an executable
//!    simulation configuration bundle.
//!
//! Each stage may be served by a remote backend; every reply is parsed and
//! validated against hard manual constraints, with a bounded number of
//! retries. When no backend is configured, a reply cannot be obtained, or
//! every reply fails validation, a deterministic fallback produces the stage
//! output instead, so the pipeline always completes offline with
//! reproducible results.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::env::Mode;
use crate::error::Result;
use crate::flowfield::ChannelScenario;
use crate::hull::{CurvatureClass, HullFamily, HullShape};

use super::backend::{AgentRole, LlmBackend};
use super::dossier::DesignDossier;

/// Version tag carried by every simulation configuration bundle.
pub const SCHEMA_VERSION: u32 = 1;

/// Where a stage output came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// A configured backend produced a reply that passed validation.
    Backend,
    /// The deterministic offline rules produced the output.
    Fallback,
}

/// One stage's logged exchange: the structured content that became the stage
/// output, whether it passed validation, and where it came from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentMessage {
    pub role: AgentRole,
    pub content: Value,
    pub validated: bool,
    pub provenance: Provenance,
    /// Diagnostics: backend failures that forced retries or the fallback,
    /// and validation failures of the fallback itself.
    pub note: Option<String>,
}

/// Output of the task-analysis stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Directives {
    /// Fractional drag-coefficient reduction to aim for, in (0, 0.5].
    pub target_drag_reduction: f64,
    /// Curvature class the next profile should belong to.
    pub curvature_class: CurvatureClass,
    /// Hull length that must be preserved exactly (meters).
    pub keep_length: f64,
    /// Hull width that must be preserved exactly (meters).
    pub keep_width: f64,
    /// Free-text justification for the directives.
    pub rationale: String,
    pub provenance: Provenance,
}

/// Verdict of the manual proposal check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProposalCheck {
    Accepted,
    Rejected(String),
}

impl ProposalCheck {
    pub fn is_accepted(&self) -> bool {
        matches!(self, ProposalCheck::Accepted)
    }
}

/// Manual acceptance rules for a hull proposal: well-formed geometry, exact
/// preservation of the incumbent's placement and dimensions, and a strict
/// drag improvement.
pub fn validate_proposal(incumbent: &HullShape, proposal: &HullShape) -> ProposalCheck {
    for (name, v) in [
        ("cx", proposal.cx),
        ("cy", proposal.cy),
        ("length", proposal.length),
        ("width", proposal.width),
        ("taper_exponent", proposal.taper_exponent),
    ] {
        if !v.is_finite() {
            return ProposalCheck::Rejected(format!("proposal {name} is not finite"));
        }
    }
    if !(proposal.length > 0.0) || !(proposal.width > 0.0) {
        return ProposalCheck::Rejected(format!(
            "proposal dimensions must be positive (length {}, width {})",
            proposal.length, proposal.width
        ));
    }
    if proposal.width > proposal.length {
        return ProposalCheck::Rejected(format!(
            "proposal width {} exceeds length {}",
            proposal.width, proposal.length
        ));
    }
    if !(proposal.taper_exponent >= 1.0) {
        return ProposalCheck::Rejected(format!(
            "proposal taper exponent {} must be >= 1",
            proposal.taper_exponent
        ));
    }
    if proposal.length != incumbent.length || proposal.width != incumbent.width {
        return ProposalCheck::Rejected(format!(
            "proposal must preserve dimensions: got {} x {}, incumbent is {} x {}",
            proposal.length, proposal.width, incumbent.length, incumbent.width
        ));
    }
    if proposal.cx != incumbent.cx || proposal.cy != incumbent.cy {
        return ProposalCheck::Rejected(format!(
            "proposal must preserve placement: got ({}, {}), incumbent is at ({}, {})",
            proposal.cx, proposal.cy, incumbent.cx, incumbent.cy
        ));
    }
    if proposal == incumbent {
        return ProposalCheck::Rejected("proposal is identical to the incumbent".to_string());
    }
    let (cd_new, cd_old) = (proposal.drag_coefficient(), incumbent.drag_coefficient());
    if !(cd_new < cd_old) {
        return ProposalCheck::Rejected(format!(
            "proposal drag coefficient {cd_new:.6} does not improve on the incumbent's {cd_old:.6}"
        ));
    }
    ProposalCheck::Accepted
}

/// Channel-flow parameters recorded in a simulation bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowScenarioSpec {
    pub inflow: f64,
    pub reynolds: f64,
    pub x: (f64, f64),
    pub y: (f64, f64),
}

/// Environment settings recorded in a simulation bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSettingsSpec {
    pub mode: Mode,
    pub drag_coefficient: f64,
}

/// Executable simulation configuration for one design generation: the hull,
/// its discretized outline, and the flow/environment settings needed to
/// retrain and re-evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfigBundle {
    pub schema_version: u32,
    pub generation: u32,
    pub hull: HullShape,
    /// Number of outline samples requested per side.
    pub boundary_n: usize,
    pub boundary_points: Vec<(f64, f64)>,
    pub flow_scenario: FlowScenarioSpec,
    pub env_settings: EnvSettingsSpec,
}

impl SimConfigBundle {
    /// Write the bundle as pretty JSON, creating parent directories.
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Channel-flow training scenario for a physical hull: the standard channel
/// with the plane hull matched to the physical aspect ratio and taper
/// (lengths normalized by hull length, velocities by inflow speed).
pub fn channel_scenario_for(shape: &HullShape) -> Result<ChannelScenario> {
    let mut scenario = ChannelScenario::standard(shape.family);
    scenario.hull = HullShape::new(shape.family, 0.5, 0.0, 1.0, shape.width / shape.length)?
        .with_taper_exponent(shape.taper_exponent)?;
    Ok(scenario)
}

/// Deterministically render a hull into a simulation configuration bundle.
pub fn generate_sim_config(
    shape: &HullShape,
    generation: u32,
    boundary_n: usize,
) -> Result<SimConfigBundle> {
    let channel = channel_scenario_for(shape)?;
    Ok(SimConfigBundle {
        schema_version: SCHEMA_VERSION,
        generation,
        hull: shape.clone(),
        boundary_n,
        boundary_points: shape.boundary_points(boundary_n)?,
        flow_scenario: FlowScenarioSpec {
            inflow: channel.inflow,
            reynolds: channel.groups.reynolds,
            x: channel.domain.x,
            y: channel.domain.y,
        },
        env_settings: EnvSettingsSpec {
            mode: Mode::EnvAware,
            drag_coefficient: shape.drag_coefficient(),
        },
    })
}

/// Result of a full pipeline round.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineOutput {
    pub directives: Directives,
    pub proposal: HullShape,
    pub check: ProposalCheck,
    /// Present only when the proposal passed the manual check.
    pub sim_config: Option<SimConfigBundle>,
    /// One message per executed stage, in execution order.
    pub messages: Vec<AgentMessage>,
}

/// The three-agent pipeline driver.
pub struct Pipeline {
    backend: Option<Box<dyn LlmBackend>>,
    retries: usize,
    boundary_n: usize,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("backend", &self.backend_name())
            .field("retries", &self.retries)
            .field("boundary_n", &self.boundary_n)
            .finish()
    }
}

impl Pipeline {
    /// Pipeline with no backend: every stage uses the deterministic rules.
    pub fn offline() -> Self {
        Self {
            backend: None,
            retries: 3,
            boundary_n: 160,
        }
    }

    /// Pipeline served by the given backend, falling back to the
    /// deterministic rules when replies fail validation.
    pub fn with_backend(backend: Box<dyn LlmBackend>) -> Self {
        Self {
            backend: Some(backend),
            retries: 3,
            boundary_n: 160,
        }
    }

    /// Pipeline from the process environment: HTTP backend when
    /// `HYDRORL_LLM_URL` is set, offline otherwise.
    pub fn from_env() -> Self {
        match super::backend::HttpBackend::from_env() {
            Some(b) => Self::with_backend(Box::new(b)),
            None => Self::offline(),
        }
    }

    /// Name of the configured backend, if any.
    pub fn backend_name(&self) -> Option<&'static str> {
        self.backend.as_deref().map(|b| b.name())
    }

    /// Run one design round on a dossier.
    ///
    /// The stages execute strictly in order. A proposal that fails the
    /// manual check ends the round after the second stage: no simulation
    /// configuration is generated and the caller must keep the incumbent.
    pub fn run(&self, dossier: &DesignDossier) -> Result<PipelineOutput> {
        dossier.validate()?;
        let dossier_json = serde_json::to_value(dossier)?;
        let mut messages = Vec::with_capacity(3);

        // Stage 1: task analysis.
        let incumbent = dossier.hull.clone();
        let (directives, msg) = self.run_stage(
            AgentRole::TaskAnalysis,
            &dossier_json,
            &|v| parse_directives(v, &incumbent),
            fallback_directives(dossier),
        )?;
        messages.push(msg);

        // Stage 2: task implementation.
        let request = json!({
            "dossier": dossier_json,
            "directives": serde_json::to_value(&directives)?,
        });
        let dir = directives.clone();
        let (proposal, msg) = self.run_stage(
            AgentRole::TaskImplementation,
            &request,
            &|v| parse_proposal(v, &incumbent, &dir),
            fallback_proposal(&dossier.hull, &directives),
        )?;
        messages.push(msg);

        let check = validate_proposal(&dossier.hull, &proposal);
        if let ProposalCheck::Rejected(_) = &check {
            return Ok(PipelineOutput {
                directives,
                proposal,
                check,
                sim_config: None,
                messages,
            });
        }

        // Stage 3: code generation.
        let expected = generate_sim_config(&proposal, dossier.generation + 1, self.boundary_n)?;
        let request = json!({
            "dossier": dossier_json,
            "directives": serde_json::to_value(&directives)?,
            "proposal": serde_json::to_value(&proposal)?,
        });
        let want = expected.clone();
        let (sim_config, msg) = self.run_stage(
            AgentRole::CodeGeneration,
            &request,
            &|v| parse_sim_config(v, &want),
            expected,
        )?;
        messages.push(msg);

        Ok(PipelineOutput {
            directives,
            proposal,
            check,
            sim_config: Some(sim_config),
            messages,
        })
    }

    /// Run one stage: try the backend up to `retries` times, validating
    /// every reply; otherwise emit the deterministic fallback (also passed
    /// through the validator, so an unusable fallback is flagged).
    fn run_stage<T: Serialize>(
        &self,
        role: AgentRole,
        request: &Value,
        validate: &dyn Fn(&Value) -> std::result::Result<T, String>,
        fallback: T,
    ) -> Result<(T, AgentMessage)> {
        let mut notes: Vec<String> = Vec::new();
        if let Some(backend) = self.backend.as_deref() {
            for attempt in 1..=self.retries {
                match backend.complete(role, request) {
                    Ok(reply) => match validate(&reply) {
                        Ok(value) => {
                            return Ok((
                                value,
                                AgentMessage {
                                    role,
                                    content: reply,
                                    validated: true,
                                    provenance: Provenance::Backend,
                                    note: None,
                                },
                            ));
                        }
                        Err(msg) => notes.push(format!("attempt {attempt}: invalid reply: {msg}")),
                    },
                    Err(e) => notes.push(format!("attempt {attempt}: {e}")),
                }
            }
        } else {
            notes.push("no backend configured".to_string());
        }
        let content = serde_json::to_value(&fallback)?;
        let validated = match validate(&content) {
            Ok(_) => true,
            Err(msg) => {
                notes.push(format!("fallback: {msg}"));
                false
            }
        };
        Ok((
            fallback,
            AgentMessage {
                role,
                content,
                validated,
                provenance: Provenance::Fallback,
                note: Some(notes.join("; ")),
            },
        ))
    }
}

/// Wire schema of a task-analysis reply.
#[derive(Deserialize)]
struct DirectivesWire {
    target_drag_reduction: f64,
    curvature_class: CurvatureClass,
    keep_length: f64,
    keep_width: f64,
    rationale: String,
}

fn parse_directives(v: &Value, hull: &HullShape) -> std::result::Result<Directives, String> {
    let w: DirectivesWire = serde_json::from_value(v.clone())
        .map_err(|e| format!("directives do not match the schema: {e}"))?;
    if !w.target_drag_reduction.is_finite()
        || !(w.target_drag_reduction > 0.0)
        || w.target_drag_reduction > 0.5
    {
        return Err(format!(
            "target_drag_reduction {} outside (0, 0.5]",
            w.target_drag_reduction
        ));
    }
    if w.keep_length != hull.length || w.keep_width != hull.width {
        return Err(format!(
            "directives must freeze the incumbent dimensions {} x {}, got {} x {}",
            hull.length, hull.width, w.keep_length, w.keep_width
        ));
    }
    if w.rationale.trim().is_empty() {
        return Err("rationale is empty".to_string());
    }
    Ok(Directives {
        target_drag_reduction: w.target_drag_reduction,
        curvature_class: w.curvature_class,
        keep_length: w.keep_length,
        keep_width: w.keep_width,
        rationale: w.rationale,
        provenance: Provenance::Backend,
    })
}

fn parse_proposal(
    v: &Value,
    incumbent: &HullShape,
    directives: &Directives,
) -> std::result::Result<HullShape, String> {
    let shape: HullShape = serde_json::from_value(v.clone())
        .map_err(|e| format!("proposal does not match the hull schema: {e}"))?;
    if shape.curvature_class() != directives.curvature_class {
        return Err(format!(
            "proposal curvature class {:?} does not match the directive {:?}",
            shape.curvature_class(),
            directives.curvature_class
        ));
    }
    match validate_proposal(incumbent, &shape) {
        ProposalCheck::Accepted => Ok(shape),
        ProposalCheck::Rejected(msg) => Err(msg),
    }
}

fn parse_sim_config(
    v: &Value,
    expected: &SimConfigBundle,
) -> std::result::Result<SimConfigBundle, String> {
    let bundle: SimConfigBundle = serde_json::from_value(v.clone())
        .map_err(|e| format!("sim config does not match the schema: {e}"))?;
    if bundle.schema_version != expected.schema_version {
        return Err(format!(
            "schema_version {} != {}",
            bundle.schema_version, expected.schema_version
        ));
    }
    if bundle.generation != expected.generation {
        return Err(format!(
            "generation {} must advance to {}",
            bundle.generation, expected.generation
        ));
    }
    if bundle.hull != expected.hull {
        return Err("hull does not match the accepted proposal".to_string());
    }
    if bundle.boundary_n != expected.boundary_n || bundle.boundary_points != expected.boundary_points
    {
        return Err("boundary discretization does not match the proposal outline".to_string());
    }
    if bundle.flow_scenario != expected.flow_scenario {
        return Err("flow scenario does not match the channel setup".to_string());
    }
    if bundle.env_settings != expected.env_settings {
        return Err("environment settings do not match the proposal".to_string());
    }
    Ok(bundle)
}

/// Deterministic task analysis: move one family toward the streamlined end
/// of the catalog (capsule → ice-cream cone → parabolic tail), or ask for a
/// small refinement once there; freeze the incumbent's dimensions.
fn fallback_directives(dossier: &DesignDossier) -> Directives {
    let hull = &dossier.hull;
    let (next_family, curvature_class) = match hull.family {
        HullFamily::Capsule => (HullFamily::IceCreamCone, CurvatureClass::Constant),
        HullFamily::IceCreamCone => (HullFamily::ParabolicTail, CurvatureClass::Gradient),
        HullFamily::ParabolicTail => (HullFamily::ParabolicTail, CurvatureClass::Gradient),
    };
    let cd_now = hull.drag_coefficient();
    let target_drag_reduction = if next_family == hull.family {
        0.02
    } else {
        let mut next = hull.clone();
        next.family = next_family;
        next.taper_exponent = 2.0;
        (1.0 - next.drag_coefficient() / cd_now).clamp(0.02, 0.5)
    };
    let rationale = format!(
        "Mean energy consumption is {:.3} over the last {} episodes with drag coefficient \
         {cd_now:.4}; smooth the longitudinal area gradient by moving to a {next_family:?} \
         profile to cut form drag by about {:.0}% at fixed {} x {} m dimensions.",
        dossier.curve.mean_ec,
        dossier.curve.window,
        target_drag_reduction * 100.0,
        hull.length,
        hull.width,
    );
    Directives {
        target_drag_reduction,
        curvature_class,
        keep_length: hull.length,
        keep_width: hull.width,
        rationale,
        provenance: Provenance::Fallback,
    }
}

/// Deterministic task implementation: realize the directed curvature class
/// at the incumbent's exact dimensions. Within the parabolic family the
/// taper exponent is refined by grid search; a same-family incumbent with no
/// refinement dimension comes back unchanged (and is then rejected by the
/// manual check).
fn fallback_proposal(incumbent: &HullShape, directives: &Directives) -> HullShape {
    let target_family = match directives.curvature_class {
        CurvatureClass::Abrupt => HullFamily::Capsule,
        CurvatureClass::Constant => HullFamily::IceCreamCone,
        CurvatureClass::Gradient => HullFamily::ParabolicTail,
    };
    let mut proposal = incumbent.clone();
    if target_family != incumbent.family {
        proposal.family = target_family;
        proposal.taper_exponent = 2.0;
        return proposal;
    }
    if target_family == HullFamily::ParabolicTail {
        // Candidate exponents 1.50, 1.55, …, 3.00, excluding the incumbent's.
        let best_k = (0..=30)
            .map(|i| 1.5 + 0.05 * i as f64)
            .filter(|k| (k - incumbent.taper_exponent).abs() > 1e-9)
            .min_by(|a, b| {
                drag_with_taper(incumbent, *a).total_cmp(&drag_with_taper(incumbent, *b))
            })
            .expect("taper grid is never empty");
        proposal.taper_exponent = best_k;
    }
    proposal
}

fn drag_with_taper(shape: &HullShape, k: f64) -> f64 {
    let mut cand = shape.clone();
    cand.taper_exponent = k;
    cand.drag_coefficient()
}
