//! The multi-AUV decision process: spawning, stepping, rewards, termination
//! and episode accounting, for both task families and both sensing modes.

use super::kinematics::{
    clamp_to_box, distance, energy_step, kinematics_update, Action, AuvState, CRASH_DISTANCE,
    DETECTION_RANGE, SPEED_MAX, SPEED_MIN, WORLD_SIZE,
};
use super::metrics::{
    per_auv_success_rates, AuvStepRecord, EpisodeMetrics, RewardTerms, RewardWeights, StepRecord,
};
use super::task::{
    data_rate, target_position, target_velocity, SensorNode, TargetPattern, TaskConfig, TaskKind,
};
use super::world::{AmbientField, DisturbanceConfig};
use crate::flowfield::{flow_features, FlowModel, ProbeLayout};
use crate::hull::{HullFamily, HullShape};
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Sensing mode: whether the agents receive flow features and the world
/// carries ambient flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Flow network drives the ambient field and the flow features.
    EnvAware,
    /// Still water, flow features zeroed: the classical baseline.
    Traditional,
}

/// A named, serializable experiment scenario: the task plus the sea state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub task: TaskConfig,
    pub disturbances: DisturbanceConfig,
    pub weights: RewardWeights,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Build one of the three named scenarios at its full-scale defaults.
    ///
    /// * `data-collection-normal` — six nodes, calm water.
    /// * `data-collection-complex` — the same task in a wave-and-current sea.
    /// * `target-tracking` — straight-line target through the area middle.
    pub fn by_name(name: &str, seed: u64) -> Result<Self> {
        let task = match name {
            "data-collection-normal" | "data-collection-complex" => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e6f_6465);
                let mut nodes = Vec::new();
                for _ in 0..6 {
                    let p = [
                        rng.gen_range(20.0..180.0),
                        rng.gen_range(20.0..180.0),
                        rng.gen_range(20.0..180.0),
                    ];
                    let urgency = rng.gen_range(1..=3u8);
                    nodes.push(SensorNode::new(p, urgency, 30.0)?);
                }
                TaskConfig::new(TaskKind::DataCollection { nodes }, 2, 400, 1.0)?
            }
            "target-tracking" => TaskConfig::new(
                TaskKind::TargetTracking {
                    pattern: TargetPattern::straight_line(0.28),
                },
                2,
                600,
                1.0,
            )?,
            other => {
                return Err(Error::Config(format!(
                    "unknown scenario '{other}'; expected data-collection-normal, \
                     data-collection-complex or target-tracking"
                )))
            }
        };
        let disturbances = if name == "data-collection-complex" {
            DisturbanceConfig {
                wave: Some(Default::default()),
                current: Some(Default::default()),
            }
        } else {
            DisturbanceConfig::default()
        };
        Ok(Self {
            name: name.to_string(),
            task,
            disturbances,
            weights: RewardWeights::default(),
            seed,
        })
    }

    /// The canonical scenario names accepted by [`ScenarioConfig::by_name`].
    pub const NAMES: [&'static str; 3] = [
        "data-collection-normal",
        "data-collection-complex",
        "target-tracking",
    ];
}

/// Everything needed to instantiate an environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub scenario: ScenarioConfig,
    pub mode: Mode,
    pub hull: HullShape,
}

impl EnvConfig {
    /// Environment-aware configuration with the given hull.
    pub fn env_aware(scenario: ScenarioConfig, hull: HullShape) -> Self {
        Self {
            scenario,
            mode: Mode::EnvAware,
            hull,
        }
    }

    /// The classical baseline: still water, masked features, and the
    /// generation-1 capsule hull.
    pub fn traditional(scenario: ScenarioConfig) -> Self {
        Self {
            scenario,
            mode: Mode::Traditional,
            hull: HullShape::standard(HullFamily::Capsule),
        }
    }
}

/// Agent observation: task observations `s′` plus flow features `f`;
/// the full state is their concatenation `S = (s′, f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub task_obs: Vec<f64>,
    pub flow_features: Vec<f64>,
}

impl StateVector {
    /// Total observation length.
    pub fn len(&self) -> usize {
        self.task_obs.len() + self.flow_features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Concatenated `(s′, f)` vector consumed by the agents.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.task_obs);
        v.extend_from_slice(&self.flow_features);
        v
    }
}

/// Result of one environment step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub states: Vec<StateVector>,
    pub rewards: Vec<f64>,
    pub done: bool,
    pub record: StepRecord,
}

/// The multi-AUV environment. Single-threaded; clone configs and use
/// distinct seeds to run many instances concurrently against one shared
/// flow model.
#[derive(Debug)]
pub struct AuvEnv {
    cfg: EnvConfig,
    ambient: AmbientField,
    layout: ProbeLayout,
    feature_len: usize,
    drag: f64,
    rng: ChaCha8Rng,
    auvs: Vec<AuvState>,
    nodes: Vec<SensorNode>,
    target: Option<TargetPattern>,
    prev_target_distance: Vec<f64>,
    t: f64,
    step_idx: usize,
    terminated: bool,
    log: Vec<StepRecord>,
    metrics: EpisodeMetrics,
}

impl AuvEnv {
    /// Build an environment. In `Traditional` mode the flow model and the
    /// disturbance layers are discarded: the baseline swims in still water
    /// with masked features, through the very same code path.
    pub fn new(cfg: EnvConfig, flow: Option<Arc<FlowModel>>) -> Result<Self> {
        cfg.scenario.weights.validate()?;
        let ambient = match cfg.mode {
            Mode::Traditional => AmbientField::still(),
            Mode::EnvAware => {
                let base = match flow {
                    Some(f) => AmbientField::from_flow(f),
                    None => AmbientField::still(),
                };
                base.with_disturbances(&cfg.scenario.disturbances)?
            }
        };
        let plane_length = cfg.hull.length * ambient.map().scale;
        let layout = ProbeLayout::standard(plane_length);
        let feature_len = layout.feature_len();
        let drag = cfg.hull.drag_coefficient();
        let (nodes, target) = match &cfg.scenario.task.kind {
            TaskKind::DataCollection { nodes } => (nodes.clone(), None),
            TaskKind::TargetTracking { pattern } => (Vec::new(), Some(*pattern)),
        };
        let rng = ChaCha8Rng::seed_from_u64(cfg.scenario.seed);
        let n = cfg.scenario.task.n_auvs;
        Ok(Self {
            cfg,
            ambient,
            layout,
            feature_len,
            drag,
            rng,
            auvs: Vec::with_capacity(n),
            nodes,
            target,
            prev_target_distance: Vec::new(),
            t: 0.0,
            step_idx: 0,
            terminated: true,
            log: Vec::new(),
            metrics: EpisodeMetrics::zero(),
        })
    }

    /// Number of vehicles in the team.
    pub fn n_auvs(&self) -> usize {
        self.cfg.scenario.task.n_auvs
    }

    /// Length of the flat observation vector (constant per configuration).
    pub fn observation_dim(&self) -> usize {
        let n = self.n_auvs();
        let task_len = match &self.cfg.scenario.task.kind {
            TaskKind::DataCollection { nodes } => 6 * nodes.len(),
            TaskKind::TargetTracking { .. } => 6,
        };
        8 + task_len + 3 * (n - 1) + self.feature_len
    }

    /// Length of the flow-feature block.
    pub fn feature_dim(&self) -> usize {
        self.feature_len
    }

    /// Current simulation time (s).
    pub fn time(&self) -> f64 {
        self.t
    }

    /// Episode step counter.
    pub fn step_count(&self) -> usize {
        self.step_idx
    }

    /// Whether the running episode has terminated (or none has started).
    pub fn terminated(&self) -> bool {
        self.terminated
    }

    /// Kinematic states of all vehicles.
    pub fn auv_states(&self) -> &[AuvState] {
        &self.auvs
    }

    /// Sensor nodes in their current state.
    pub fn nodes(&self) -> &[SensorNode] {
        &self.nodes
    }

    /// The episode log so far.
    pub fn log(&self) -> &[StepRecord] {
        &self.log
    }

    /// Running episode metrics. `success_rate` is filled in when the episode
    /// terminates.
    pub fn metrics(&self) -> EpisodeMetrics {
        self.metrics
    }

    /// The configuration this environment was built from.
    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    /// Start a new episode: respawn vehicles, restore nodes, clear the log.
    /// Spawns are drawn from the environment's deterministic RNG stream, so a
    /// fixed seed yields an identical sequence of episodes.
    pub fn reset(&mut self) -> Result<Vec<StateVector>> {
        for node in &mut self.nodes {
            node.reset();
        }
        self.t = 0.0;
        self.step_idx = 0;
        self.terminated = false;
        self.log.clear();
        self.metrics = EpisodeMetrics::zero();
        self.auvs.clear();
        let n = self.n_auvs();
        match self.target {
            Some(pattern) => {
                // Spawn behind the target's start, spread across track.
                let origin = target_position(&pattern, 0.0);
                for i in 0..n {
                    let side = if i % 2 == 0 { 1.0 } else { -1.0 };
                    let row = (i / 2) as f64;
                    let jitter = [
                        self.rng.gen_range(-3.0..3.0),
                        self.rng.gen_range(-3.0..3.0),
                        self.rng.gen_range(-3.0..3.0),
                    ];
                    let p = [
                        origin[0] - 14.0 - 6.0 * row + jitter[0],
                        origin[1] + side * 10.0 + jitter[1],
                        origin[2] + jitter[2],
                    ];
                    self.auvs.push(AuvState::at(clamp_to_box(p)));
                }
                self.prev_target_distance = self
                    .auvs
                    .iter()
                    .map(|a| distance(a.position, origin))
                    .collect();
            }
            None => {
                // Spawn anywhere in the interior, rejecting crash-close pairs.
                for _ in 0..n {
                    let mut p;
                    let mut tries = 0;
                    loop {
                        p = [
                            self.rng.gen_range(20.0..180.0),
                            self.rng.gen_range(20.0..180.0),
                            self.rng.gen_range(20.0..180.0),
                        ];
                        let ok = self
                            .auvs
                            .iter()
                            .all(|a| distance(a.position, p) >= 4.0 * CRASH_DISTANCE);
                        tries += 1;
                        if ok || tries > 100 {
                            break;
                        }
                    }
                    self.auvs.push(AuvState::at(p));
                }
                self.prev_target_distance = vec![0.0; n];
            }
        }
        self.observe_all()
    }

    /// Observations for every vehicle at the current time.
    pub fn observe_all(&self) -> Result<Vec<StateVector>> {
        (0..self.n_auvs()).map(|i| self.observe(i)).collect()
    }

    /// Observation for vehicle `i`: own kinematics, task block, peer
    /// positions, then flow features (zeroed in traditional mode).
    pub fn observe(&self, i: usize) -> Result<StateVector> {
        let me = &self.auvs[i];
        let mut s = Vec::with_capacity(self.observation_dim() - self.feature_len);
        for k in 0..3 {
            s.push(me.position[k] / WORLD_SIZE);
        }
        s.push((me.speed - SPEED_MIN) / (SPEED_MAX - SPEED_MIN));
        let (sy, cy) = me.yaw.sin_cos();
        let (sp, cp) = me.pitch.sin_cos();
        s.extend_from_slice(&[sy, cy, sp, cp]);
        match &self.cfg.scenario.task.kind {
            TaskKind::DataCollection { .. } => {
                for node in &self.nodes {
                    for k in 0..3 {
                        s.push((node.position[k] - me.position[k]) / WORLD_SIZE);
                    }
                    s.push(node.data_volume / node.initial_volume);
                    s.push(f64::from(node.urgency) / 3.0);
                    s.push(if node.collected { 1.0 } else { 0.0 });
                }
            }
            TaskKind::TargetTracking { pattern } => {
                let tp = target_position(pattern, self.t);
                let tv = target_velocity(pattern, self.t);
                for (t, p) in tp.iter().zip(&me.position) {
                    s.push((t - p) / WORLD_SIZE);
                }
                s.extend(tv.iter().map(|v| v / SPEED_MAX));
            }
        }
        for (j, other) in self.auvs.iter().enumerate() {
            if j == i {
                continue;
            }
            for k in 0..3 {
                s.push((other.position[k] - me.position[k]) / WORLD_SIZE);
            }
        }
        let f = match (self.cfg.mode, self.ambient.flow()) {
            (Mode::EnvAware, Some(flow)) => {
                let xy = self.ambient.map().to_plane([me.position[0], me.position[1]]);
                flow_features(flow, xy, me.yaw, self.t, &self.layout)?
            }
            _ => vec![0.0; self.feature_len],
        };
        Ok(StateVector {
            task_obs: s,
            flow_features: f,
        })
    }

    /// Advance the world by one control interval.
    pub fn step(&mut self, actions: &[Action]) -> Result<StepOutcome> {
        if self.terminated {
            return Err(Error::Contract(
                "step() called on a terminated episode; call reset() first".into(),
            ));
        }
        let n = self.n_auvs();
        if actions.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected {n} actions, got {}",
                actions.len()
            )));
        }
        let dt = self.cfg.scenario.task.dt;

        // Kinematics: all vehicles move simultaneously through the flow at
        // the step's start time.
        let mut energies = Vec::with_capacity(n);
        let mut next_states = Vec::with_capacity(n);
        for (state, a) in self.auvs.iter().zip(actions) {
            let ambient = self.ambient.velocity(state.position, self.t)?;
            let e = energy_step(state, a, self.drag, ambient, dt);
            let mut next = kinematics_update(state, a, ambient, dt);
            next.energy = state.energy + e;
            energies.push(e);
            next_states.push(next);
        }
        self.t += dt;
        self.step_idx += 1;

        // Task dynamics at the new positions.
        let mut progress = vec![0.0; n];
        let mut rates = vec![0.0; n];
        let mut in_range = vec![false; n];
        let mut target_now = None;
        match self.target {
            None => {
                for node in self.nodes.iter_mut() {
                    if node.collected {
                        continue;
                    }
                    let per_auv: Vec<f64> = next_states
                        .iter()
                        .map(|s| data_rate(s.position, node))
                        .collect();
                    let demand: f64 = per_auv.iter().sum::<f64>() * dt;
                    for (i, r) in per_auv.iter().enumerate() {
                        rates[i] += r;
                    }
                    if demand <= 0.0 {
                        continue;
                    }
                    let drained = demand.min(node.data_volume);
                    for (i, r) in per_auv.iter().enumerate() {
                        progress[i] += drained * (r * dt / demand);
                    }
                    node.data_volume -= drained;
                    if node.data_volume <= 1e-12 {
                        node.data_volume = 0.0;
                        node.collected = true;
                    }
                }
            }
            Some(pattern) => {
                let tp = target_position(&pattern, self.t);
                target_now = Some(tp);
                for i in 0..n {
                    let d = distance(next_states[i].position, tp);
                    progress[i] = self.prev_target_distance[i] - d;
                    in_range[i] = d <= DETECTION_RANGE;
                    self.prev_target_distance[i] = d;
                }
            }
        }

        // Cooperation: distinct nearest nodes, or bracketing the target.
        let coop = self.cooperation(&next_states, &in_range, target_now);

        // Collisions between any vehicle pair.
        let mut crashed = vec![false; n];
        for i in 0..n {
            for j in (i + 1)..n {
                if distance(next_states[i].position, next_states[j].position) < CRASH_DISTANCE {
                    crashed[i] = true;
                    crashed[j] = true;
                }
            }
        }
        let collision = crashed.iter().any(|&c| c);

        let all_collected =
            self.target.is_none() && self.nodes.iter().all(|node| node.collected);
        let horizon_reached = self.step_idx >= self.cfg.scenario.task.horizon;
        let done = collision || all_collected || horizon_reached;

        // Rewards.
        let w = &self.cfg.scenario.weights;
        let mut auv_records = Vec::with_capacity(n);
        let mut rewards = Vec::with_capacity(n);
        for i in 0..n {
            let terms = RewardTerms {
                task: w.task_gain * progress[i],
                energy: -w.energy_cost * energies[i],
                collision: if crashed[i] { w.collision_penalty } else { 0.0 },
                cooperation: if coop[i] { w.cooperation_bonus } else { 0.0 },
            };
            let reward = terms.total();
            rewards.push(reward);
            auv_records.push(AuvStepRecord {
                position: next_states[i].position,
                action: actions[i],
                reward,
                reward_terms: terms,
                data_rate: rates[i],
                energy: energies[i],
                target_in_range: in_range[i],
            });
        }

        self.auvs = next_states;
        let record = StepRecord {
            t: self.t,
            auvs: auv_records,
            done,
            collision,
            target_position: target_now,
        };
        self.metrics.absorb(&record);
        self.log.push(record.clone());

        if done {
            self.terminated = true;
            self.metrics.success_rate = match self.target {
                Some(_) => {
                    let rates = per_auv_success_rates(&self.log)?;
                    rates.iter().sum::<f64>() / rates.len() as f64
                }
                None => {
                    let total = self.nodes.len() as f64;
                    self.nodes.iter().filter(|node| node.collected).count() as f64 / total
                }
            };
        }

        let states = self.observe_all()?;
        Ok(StepOutcome {
            states,
            rewards,
            done,
            record,
        })
    }

    /// Which vehicles earn the cooperation bonus this step.
    fn cooperation(
        &self,
        states: &[AuvState],
        in_range: &[bool],
        target: Option<[f64; 3]>,
    ) -> Vec<bool> {
        let n = states.len();
        let mut coop = vec![false; n];
        if n < 2 {
            return coop;
        }
        match target {
            Some(tp) => {
                // Bracketing: in-range vehicles standing on opposite sides.
                for i in 0..n {
                    if !in_range[i] {
                        continue;
                    }
                    let ri = sub(states[i].position, tp);
                    for (j, s) in states.iter().enumerate() {
                        if j == i || !in_range[j] {
                            continue;
                        }
                        let rj = sub(s.position, tp);
                        if dot(ri, rj) < 0.0 {
                            coop[i] = true;
                            break;
                        }
                    }
                }
            }
            None => {
                // Role separation: each vehicle's nearest uncollected node is
                // nobody else's nearest.
                let nearest: Vec<Option<usize>> = states
                    .iter()
                    .map(|s| {
                        self.nodes
                            .iter()
                            .enumerate()
                            .filter(|(_, node)| !node.collected)
                            .min_by(|(_, a), (_, b)| {
                                distance(s.position, a.position)
                                    .total_cmp(&distance(s.position, b.position))
                            })
                            .map(|(j, _)| j)
                    })
                    .collect();
                for i in 0..n {
                    if let Some(mine) = nearest[i] {
                        coop[i] = (0..n).all(|j| j == i || nearest[j] != Some(mine));
                    }
                }
            }
        }
        coop
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowfield::{DimensionlessGroups, Domain, FlowMeta, LossWeights};
    use crate::numcore::Mlp;

    fn uniform_flow(u: f64, v: f64) -> Arc<FlowModel> {
        let mut net = Mlp::zeros(&[3, 3]).unwrap();
        let mut params = net.params();
        params[9] = u;
        params[10] = v;
        net.set_params(&params).unwrap();
        Arc::new(
            FlowModel::new(
                net,
                FlowMeta {
                    domain: Domain::new((-1.5, 2.5), (-1.0, 1.0), (0.0, 0.0)).unwrap(),
                    groups: DimensionlessGroups::steady(1.0, 100.0).unwrap(),
                    weights: LossWeights::default(),
                    final_losses: None,
                    length_scale: 100.0,
                    velocity_scale: 0.35,
                },
            )
            .unwrap(),
        )
    }

    fn data_env(mode: Mode) -> AuvEnv {
        let scenario = ScenarioConfig::by_name("data-collection-normal", 11).unwrap();
        let cfg = match mode {
            Mode::EnvAware => {
                EnvConfig::env_aware(scenario, HullShape::standard(HullFamily::ParabolicTail))
            }
            Mode::Traditional => EnvConfig::traditional(scenario),
        };
        let flow = match mode {
            Mode::EnvAware => Some(uniform_flow(1.0, 0.0)),
            Mode::Traditional => None,
        };
        AuvEnv::new(cfg, flow).unwrap()
    }

    fn tracking_env(seed: u64) -> AuvEnv {
        let scenario = ScenarioConfig::by_name("target-tracking", seed).unwrap();
        let cfg = EnvConfig::traditional(scenario);
        AuvEnv::new(cfg, None).unwrap()
    }

    fn hold() -> Action {
        Action::new(SPEED_MIN, 0.0, 0.0)
    }

    #[test]
    fn observation_dim_matches_and_is_constant() {
        let mut env = data_env(Mode::EnvAware);
        let states = env.reset().unwrap();
        let dim = env.observation_dim();
        assert_eq!(dim, 8 + 6 * 6 + 3 + 27);
        for s in &states {
            assert_eq!(s.len(), dim);
        }
        for _ in 0..5 {
            let out = env.step(&[hold(), hold()]).unwrap();
            for s in &out.states {
                assert_eq!(s.len(), dim);
            }
            if out.done {
                break;
            }
        }
    }

    #[test]
    fn traditional_mode_masks_features_env_aware_fills_them() {
        let mut trad = data_env(Mode::Traditional);
        let s = trad.reset().unwrap();
        assert!(s[0].flow_features.iter().all(|&x| x == 0.0));
        let mut aware = data_env(Mode::EnvAware);
        let s = aware.reset().unwrap();
        assert!(s[0].flow_features.iter().any(|&x| x != 0.0));
        assert_eq!(s[0].flow_features.len(), 27);
    }

    #[test]
    fn env_aware_without_flow_equals_traditional_with_same_hull() {
        // Zero ambient + zero features must reduce exactly to the baseline.
        let scenario = ScenarioConfig::by_name("data-collection-normal", 3).unwrap();
        let mut a = AuvEnv::new(
            EnvConfig {
                scenario: scenario.clone(),
                mode: Mode::EnvAware,
                hull: HullShape::standard(HullFamily::Capsule),
            },
            None,
        )
        .unwrap();
        let mut b = AuvEnv::new(EnvConfig::traditional(scenario), None).unwrap();
        let sa = a.reset().unwrap();
        let sb = b.reset().unwrap();
        for (x, y) in sa.iter().zip(&sb) {
            assert_eq!(x, y);
        }
        for k in 0..20 {
            let act = [
                Action::new(1.5, 0.1 * k as f64, 0.05),
                Action::new(2.0, 6.0 - 0.1 * k as f64, 0.0),
            ];
            let oa = a.step(&act).unwrap();
            let ob = b.step(&act).unwrap();
            assert_eq!(oa.record, ob.record);
            assert_eq!(oa.rewards, ob.rewards);
            if oa.done {
                break;
            }
        }
    }

    #[test]
    fn fixed_seed_and_policy_reproduce_the_log_exactly() {
        let run = || {
            let mut env = data_env(Mode::EnvAware);
            env.reset().unwrap();
            for k in 0..30 {
                let act = [
                    Action::new(1.4 + 0.01 * k as f64, 0.2 * k as f64, 0.3),
                    Action::new(2.1, 1.0 + 0.1 * k as f64, 6.0),
                ];
                if env.step(&act).unwrap().done {
                    break;
                }
            }
            serde_json::to_string(env.log()).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn crash_terminates_with_failure_penalty() {
        let mut env = tracking_env(5);
        env.reset().unwrap();
        // Force two vehicles just under the crash distance apart.
        env.auvs[0].position = [100.0, 100.0, 100.0];
        env.auvs[1].position = [100.0, 104.9 + 2.0 * SPEED_MIN, 100.0];
        // AUV 0 holds +x heading; AUV 1 swims toward AUV 0 (-y).
        let out = env
            .step(&[
                Action::new(SPEED_MIN, 0.0, 0.0),
                Action::new(SPEED_MIN, 1.5 * std::f64::consts::PI, 0.0),
            ])
            .unwrap();
        // AUV1 moved 1.2 toward AUV0 twice-over start gap 4.9+2.4 → 4.9+1.2·? — recompute:
        // gap start = 4.9 + 2·1.2 = 7.3; AUV0 moves +x (perp), AUV1 closes 1.2 in y.
        // New dy = 7.3 − 1.2 = 6.1, dx = 1.2 → d = √(6.1²+1.2²) ≈ 6.22 > 5: no crash.
        // Step again to close in.
        assert!(!out.done);
        let out = env
            .step(&[
                Action::new(SPEED_MIN, std::f64::consts::FRAC_PI_2, 0.0),
                Action::new(SPEED_MIN, 1.5 * std::f64::consts::PI, 0.0),
            ])
            .unwrap();
        assert!(out.done, "expected crash, log: {:?}", env.log().last());
        assert!(out.record.collision);
        for a in &out.record.auvs {
            assert_eq!(a.reward_terms.collision, -100.0);
        }
        // Acting after termination violates the contract.
        assert!(matches!(
            env.step(&[hold(), hold()]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn horizon_always_terminates() {
        let scenario = ScenarioConfig {
            task: TaskConfig::new(
                TaskKind::TargetTracking {
                    pattern: TargetPattern::straight_line(0.28),
                },
                2,
                5,
                1.0,
            )
            .unwrap(),
            ..ScenarioConfig::by_name("target-tracking", 9).unwrap()
        };
        let mut env = AuvEnv::new(EnvConfig::traditional(scenario), None).unwrap();
        env.reset().unwrap();
        let mut done = false;
        for _ in 0..5 {
            done = env.step(&[hold(), hold()]).unwrap().done;
        }
        assert!(done);
        assert_eq!(env.step_count(), 5);
    }

    #[test]
    fn no_nodes_in_range_means_zero_rate_and_energy_only_reward() {
        let mut env = data_env(Mode::Traditional);
        env.reset().unwrap();
        // Park both vehicles in a corner far from every node? Instead, check
        // the accounting identity on whatever happened: rate zero ⇒ task term
        // zero, and reward = energy + cooperation terms.
        env.auvs[0].position = [0.0, 0.0, 0.0];
        env.auvs[1].position = [0.0, 0.0, 199.0];
        let out = env.step(&[hold(), hold()]).unwrap();
        let rec = &out.record.auvs[0];
        if rec.data_rate == 0.0 {
            assert_eq!(rec.reward_terms.task, 0.0);
            assert!(
                (rec.reward - (rec.reward_terms.energy + rec.reward_terms.cooperation)).abs()
                    < 1e-15
            );
        } else {
            panic!("corner position unexpectedly within range of a node");
        }
    }

    #[test]
    fn metrics_identities_hold_exactly() {
        let mut env = data_env(Mode::EnvAware);
        env.reset().unwrap();
        let mut k = 0u32;
        loop {
            let act = [
                Action::new(1.6, 0.13 * k as f64, 0.02 * k as f64),
                Action::new(1.9, 2.0 - 0.07 * k as f64, 0.0),
            ];
            let out = env.step(&act).unwrap();
            k += 1;
            if out.done || k >= 60 {
                break;
            }
        }
        let m = env.metrics();
        let mut cr = 0.0;
        let mut sdr = 0.0;
        let mut ec = 0.0;
        for rec in env.log() {
            for a in &rec.auvs {
                cr += a.reward;
                sdr += a.data_rate;
                ec += a.energy;
            }
        }
        assert_eq!(m.cumulative_reward, cr);
        assert_eq!(m.sum_data_rate, sdr);
        assert_eq!(m.energy_consumption, ec);
        // Per-vehicle accumulated energy also reconciles with the log.
        let logged: f64 = env
            .log()
            .iter()
            .map(|r| r.auvs[0].energy)
            .sum();
        assert!((env.auv_states()[0].energy - logged).abs() < 1e-9);
    }

    #[test]
    fn draining_a_node_sets_collected_and_success_fraction() {
        let node = SensorNode::new([100.0, 100.0, 100.0], 3, 2.0).unwrap();
        let scenario = ScenarioConfig {
            task: TaskConfig::new(
                TaskKind::DataCollection { nodes: vec![node] },
                1,
                50,
                1.0,
            )
            .unwrap(),
            ..ScenarioConfig::by_name("data-collection-normal", 21).unwrap()
        };
        let mut env = AuvEnv::new(EnvConfig::traditional(scenario), None).unwrap();
        env.reset().unwrap();
        env.auvs[0].position = [100.0, 100.0, 98.0];
        // Circle the node: stay within 2.2 m of it, rate ≈ 3/(1+…) ≈ 2.8 Mb/s.
        let mut done = false;
        let mut steps = 0;
        while !done && steps < 50 {
            // Turn in place-ish: alternate headings to stay near the node.
            let yaw = if steps % 2 == 0 { 0.0 } else { std::f64::consts::PI };
            let out = env.step(&[Action::new(SPEED_MIN, yaw, 0.0)]).unwrap();
            done = out.done;
            steps += 1;
        }
        assert!(done, "node never drained; positions {:?}", env.auv_states());
        assert!(env.nodes()[0].collected);
        assert_eq!(env.metrics().success_rate, 1.0);
        // SDR ≥ drained volume / dt is not an identity, but progress ≤ volume is.
        let task_total: f64 = env
            .log()
            .iter()
            .flat_map(|r| r.auvs.iter())
            .map(|a| a.reward_terms.task)
            .sum();
        assert!(task_total <= 2.0 + 1e-9);
        assert!(task_total > 1.9);
    }

    #[test]
    fn tracking_in_range_flags_feed_success_rate() {
        let mut env = tracking_env(13);
        env.reset().unwrap();
        // Teleport AUV 0 onto the target track and follow it exactly.
        let pattern = TargetPattern::straight_line(0.28);
        env.auvs[0].position = target_position(&pattern, 0.0);
        env.auvs[1].position = [190.0, 20.0, 20.0]; // far away, never in range
        let mut done = false;
        while !done {
            done = env
                .step(&[Action::new(SPEED_MIN, 0.0, 0.0), hold()])
                .unwrap()
                .done;
        }
        // AUV0 cruises +x at 1.2 while the target does 0.28: it runs ahead,
        // but within the horizon the gap stays… let the numbers speak.
        let rates = per_auv_success_rates(env.log()).unwrap();
        assert!(rates[1] < 0.05, "far vehicle should almost never see it");
        let mean = (rates[0] + rates[1]) / 2.0;
        assert!((env.metrics().success_rate - mean).abs() < 1e-12);
    }

    #[test]
    fn cooperation_bonus_for_distinct_nearest_nodes() {
        let nodes = vec![
            SensorNode::new([50.0, 100.0, 100.0], 1, 30.0).unwrap(),
            SensorNode::new([150.0, 100.0, 100.0], 1, 30.0).unwrap(),
        ];
        let scenario = ScenarioConfig {
            task: TaskConfig::new(TaskKind::DataCollection { nodes }, 2, 100, 1.0).unwrap(),
            ..ScenarioConfig::by_name("data-collection-normal", 2).unwrap()
        };
        let mut env = AuvEnv::new(EnvConfig::traditional(scenario), None).unwrap();
        env.reset().unwrap();
        env.auvs[0].position = [60.0, 100.0, 100.0];
        env.auvs[1].position = [140.0, 100.0, 100.0];
        let out = env.step(&[hold(), Action::new(SPEED_MIN, std::f64::consts::PI, 0.0)]).unwrap();
        assert!(out.record.auvs.iter().all(|a| a.reward_terms.cooperation > 0.0));
        // Both near the same node → no bonus.
        env.reset().unwrap();
        env.auvs[0].position = [45.0, 100.0, 100.0];
        env.auvs[1].position = [55.0, 95.0, 100.0];
        let out = env.step(&[hold(), hold()]).unwrap();
        assert!(out.record.auvs.iter().all(|a| a.reward_terms.cooperation == 0.0));
    }

    #[test]
    fn unknown_scenario_is_a_config_error() {
        assert!(ScenarioConfig::by_name("data-collection", 1).is_err());
        for name in ScenarioConfig::NAMES {
            assert!(ScenarioConfig::by_name(name, 1).is_ok());
        }
    }
}
