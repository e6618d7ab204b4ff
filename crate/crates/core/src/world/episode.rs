use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::game::{CounterStrategy, Strategy};
use crate::ltl::{GR1Spec, PropKind, Valuation};

use super::scene::{World, WorldEdit};
use super::symbols::{ActionSym, Color, SensorSym, SensorType};
use super::WorldError;

/// Who moves the environment between robot steps.
#[derive(Clone, Debug, PartialEq)]
pub enum EnvironmentPolicy {
    /// Edits per step (step 1 uses entry 0); no edits once the script runs out.
    Scripted(Vec<Vec<WorldEdit>>),
    Random { seed: u64, edit_prob: f64 },
    Adversarial(CounterStrategy),
}

/// Running state of a policy.
pub struct PolicyRunner {
    policy: EnvironmentPolicy,
    step: usize,
    rng: StdRng,
    node: Option<usize>,
}

impl PolicyRunner {
    pub fn new(policy: EnvironmentPolicy) -> Self {
        let seed = match &policy {
            EnvironmentPolicy::Random { seed, .. } => *seed,
            _ => 0,
        };
        PolicyRunner { policy, step: 0, rng: StdRng::seed_from_u64(seed), node: None }
    }

    /// Edits for the next step, given the world and the full valuation of the last step.
    pub fn edits(&mut self, world: &World, sensors: &[SensorSym], last: &Valuation) -> Result<Vec<WorldEdit>, WorldError> {
        self.step += 1;
        match &self.policy {
            EnvironmentPolicy::Scripted(script) => Ok(script.get(self.step - 1).cloned().unwrap_or_default()),
            EnvironmentPolicy::Random { edit_prob, .. } => {
                let p = *edit_prob;
                Ok(random_edits(&mut self.rng, world, p))
            }
            EnvironmentPolicy::Adversarial(cs) => {
                let matches = |n: usize| {
                    let v = cs.valuation(n);
                    v.0.iter().all(|(k, b)| last.get(k).map_or(true, |l| l == *b))
                };
                let next = match self.node {
                    None => cs.initial.iter().copied().find(|&n| matches(n)),
                    Some(cur) => cs.nodes[cur].next.iter().map(|(_, t)| *t).find(|&t| matches(t)),
                }
                .or_else(|| (0..cs.len()).find(|&n| matches(n)));
                self.node = next;
                match next {
                    Some(n) => edits_towards(world, sensors, &cs.env_move(n)),
                    None => Ok(vec![]),
                }
            }
        }
    }
}

fn random_edits(rng: &mut StdRng, world: &World, p: f64) -> Vec<WorldEdit> {
    if !rng.gen_bool(p.clamp(0.0, 1.0)) {
        return vec![];
    }
    let mut options = Vec::new();
    for b in &world.bins {
        options.push(WorldEdit::SetLid { side: b.side, open: !b.lid_open });
    }
    for c in Color::ALL {
        if world.cubes.len() < 6 {
            options.push(WorldEdit::AddCube { color: c, on: None });
        }
        options.push(WorldEdit::RemoveCube { color: c });
    }
    options.retain(|e| world.apply_edit(e).is_ok());
    if options.is_empty() {
        return vec![];
    }
    let k = rng.gen_range(0..options.len());
    vec![options.swap_remove(k)]
}

/// World edits making the sensors read `target`.
pub fn edits_towards(world: &World, sensors: &[SensorSym], target: &Valuation) -> Result<Vec<WorldEdit>, WorldError> {
    let mut w = world.clone();
    let mut out = Vec::new();
    for s in sensors {
        let Some(want) = target.get(&s.prop()) else { continue };
        // a few rounds: removing one cube can reveal another of the same color
        for _ in 0..8 {
            if w.sense_one(s)? == want {
                break;
            }
            let e = match (s.kind, s.color, s.side, want) {
                (SensorType::ObservedCube, Some(c), _, true) => WorldEdit::AddCube { color: c, on: None },
                (SensorType::ObservedCube, Some(c), _, false) => WorldEdit::RemoveCube { color: c },
                (SensorType::BinClear, _, Some(side), open) => WorldEdit::SetLid { side, open },
                (SensorType::UnderStack, Some(c), _, true) => {
                    let other = Color::ALL.into_iter().find(|&o| o != c).expect("another color");
                    if !w.cubes.iter().any(|k| k.color == c && w.observed(k)) {
                        let e = WorldEdit::AddCube { color: c, on: None };
                        w = w.apply_edit(&e)?;
                        out.push(e);
                    }
                    WorldEdit::AddCube { color: other, on: Some(c) }
                }
                (SensorType::UnderStack, Some(c), _, false) => WorldEdit::Unstack { color: c },
                _ => return Err(WorldError::UnknownSensorType(s.prop())),
            };
            w = w.apply_edit(&e)?;
            out.push(e);
        }
    }
    let got = w.sense(sensors)?;
    if target.0.iter().any(|(k, b)| got.get(k).is_some_and(|g| g != *b)) {
        return Err(WorldError::Unmappable(format!("{:?}", target.0)));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub max_steps: usize,
    /// Stop once every system goal has been met this many times.
    pub cycles: usize,
    /// An environment goal unmet for longer than this counts as an assumption breach.
    pub patience: usize,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig { max_steps: 50, cycles: 1, patience: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EpisodeStatus {
    Running,
    GoalCycleComplete,
    EnvViolation { step: usize, detail: String },
    Halted { step: usize, violated: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecStep {
    pub step: usize,
    pub edits: Vec<WorldEdit>,
    pub env: Valuation,
    pub sys: Valuation,
    pub node: usize,
    pub world: World,
    /// System goals satisfied at this step.
    pub goals: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub initial: ExecStep,
    pub steps: Vec<ExecStep>,
    pub status: EpisodeStatus,
}

/// A controller running in the simulated world, one environment step at a time.
#[derive(Clone, Debug)]
pub struct Episode {
    strategy: Strategy,
    actions: BTreeMap<String, ActionSym>,
    sensors: Vec<SensorSym>,
    env_liveness: Vec<String>,
    cfg: EpisodeConfig,
    node: usize,
    world: World,
    goal_hits: Vec<usize>,
    since_env: Vec<usize>,
    trace: ExecutionTrace,
}

impl Episode {
    pub fn new(
        spec: &GR1Spec,
        strategy: &Strategy,
        world: &World,
        actions: &[ActionSym],
        cfg: EpisodeConfig,
    ) -> Result<Episode, WorldError> {
        let sensors: Vec<SensorSym> = spec
            .propositions
            .iter()
            .filter(|p| p.kind == PropKind::Sensor)
            .map(|p| SensorSym::from_prop(&p.name).ok_or_else(|| WorldError::UnknownSensorType(p.name.clone())))
            .collect::<Result<_, _>>()?;
        let actions: BTreeMap<String, ActionSym> = actions.iter().map(|a| (a.prop(), *a)).collect();
        let env = world.sense(&sensors)?;
        let node = strategy
            .initial_for(&env)
            .ok_or_else(|| WorldError::NoInitialNode(format!("{:?}", env.0)))?;
        let world = apply_system(world, strategy, node, &actions)?;
        let initial = ExecStep {
            step: 0,
            edits: vec![],
            env,
            sys: strategy.system(node),
            node,
            world: world.clone(),
            goals: strategy.goals_at(node),
        };
        Ok(Episode {
            goal_hits: vec![0; strategy.sys_goals.len()],
            since_env: vec![0; strategy.env_goals.len()],
            env_liveness: spec.env_liveness.iter().map(|f| f.to_string()).collect(),
            strategy: strategy.clone(),
            actions,
            sensors,
            cfg,
            node,
            world,
            trace: ExecutionTrace { initial, steps: vec![], status: EpisodeStatus::Running },
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn sensors(&self) -> &[SensorSym] {
        &self.sensors
    }

    pub fn status(&self) -> &EpisodeStatus {
        &self.trace.status
    }

    pub fn trace(&self) -> &ExecutionTrace {
        &self.trace
    }

    pub fn current_valuation(&self) -> Valuation {
        self.strategy.valuation(self.node)
    }

    /// Apply the environment's edits, sense, let the controller move, act.
    pub fn step(&mut self, edits: Vec<WorldEdit>) -> Result<&EpisodeStatus, WorldError> {
        if self.trace.status != EpisodeStatus::Running {
            return Ok(&self.trace.status);
        }
        let step = self.trace.steps.len() + 1;
        let mut world = self.world.clone();
        for e in &edits {
            world = world.apply_edit(e)?;
        }
        let env = world.sense(&self.sensors)?;
        let Some(node) = self.strategy.step(self.node, &env) else {
            self.world = world;
            self.trace.status = EpisodeStatus::EnvViolation {
                step,
                detail: format!("sensor values {:?} break the environment safety assumptions", env.0),
            };
            return Ok(&self.trace.status);
        };
        let world = apply_system(&world, &self.strategy, node, &self.actions)?;
        let goals = self.strategy.goals_at(node);
        for &g in &goals {
            self.goal_hits[g] += 1;
        }
        let state = self.strategy.nodes[node].state as usize;
        for (i, since) in self.since_env.iter_mut().enumerate() {
            *since = if self.strategy.env_goals[i][state] { 0 } else { *since + 1 };
        }
        self.trace.steps.push(ExecStep {
            step,
            edits,
            env,
            sys: self.strategy.system(node),
            node,
            world: world.clone(),
            goals,
        });
        self.node = node;
        self.world = world;
        if self.goal_hits.iter().all(|&h| h >= self.cfg.cycles) {
            self.trace.status = EpisodeStatus::GoalCycleComplete;
        } else if let Some(i) = self.since_env.iter().position(|&s| s > self.cfg.patience) {
            let violated = self.env_liveness.get(i).cloned().unwrap_or_else(|| format!("env goal {i}"));
            self.trace.status = EpisodeStatus::Halted { step, violated };
        }
        Ok(&self.trace.status)
    }

    pub fn into_trace(self) -> ExecutionTrace {
        self.trace
    }
}

fn apply_system(
    world: &World,
    strategy: &Strategy,
    node: usize,
    actions: &BTreeMap<String, ActionSym>,
) -> Result<World, WorldError> {
    let mut w = world.clone();
    for (name, on) in &strategy.system(node).0 {
        if *on {
            if let Some(a) = actions.get(name) {
                w = w.apply_action(a)?;
            }
        }
    }
    Ok(w)
}

/// Run a controller against an environment policy until a terminal status or `max_steps`.
pub fn run_episode(
    spec: &GR1Spec,
    strategy: &Strategy,
    world: &World,
    policy: EnvironmentPolicy,
    actions: &[ActionSym],
    cfg: EpisodeConfig,
) -> Result<ExecutionTrace, WorldError> {
    let mut ep = Episode::new(spec, strategy, world, actions, cfg)?;
    let mut runner = PolicyRunner::new(policy);
    for _ in 0..cfg.max_steps {
        if *ep.status() != EpisodeStatus::Running {
            break;
        }
        let edits = runner.edits(ep.world(), ep.sensors(), &ep.current_valuation())?;
        ep.step(edits)?;
    }
    Ok(ep.into_trace())
}

