//! The repair loop: ground an instruction, synthesize, inject the sensed
//! initial state, mine assumptions, ask about them, and execute once the
//! specification is realizable. Every step lands in an append-only transcript.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{check_realizability, GameError, Strategy, SynthesisResult, Verdict};
use crate::grammar::{bundled_grammar, Grammar};
use crate::grounding::{
    action_text, ground_instruction, grounding_set_to_spec, prepositions, symbol_space, GroundedObject,
    GroundingError, GroundingModel, GroundingSet, InferConfig,
};
use crate::ltl::{GR1Spec, PropKind, SpecDump, Valuation};
use crate::miner::{
    apply_candidate, initial_state_assumption, mine_candidates, AssumptionCandidate, Literal, MinerError,
};
use crate::prompter::{render_prompt, PromptTemplates, Reference};
use crate::world::{
    ActionSym, Color, Episode, EpisodeConfig, EpisodeStatus, PolicyRunner, SensorSym, SensorType, Side, World, WorldEdit, WorldError,
};

pub const TRANSCRIPT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("`{op}` is not allowed in state {state}")]
    WrongState { op: &'static str, state: String },
    #[error("could not understand the instruction: {0}")]
    Grounding(#[from] GroundingError),
    #[error("synthesis: {0}")]
    Game(#[from] GameError),
    #[error("mining: {0}")]
    Miner(#[from] MinerError),
    #[error("simulation: {0}")]
    World(#[from] WorldError),
    #[error("transcript: {0}")]
    Transcript(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum SessionState {
    AwaitInstruction,
    Grounded,
    Synthesizing,
    InitStateInjected,
    AwaitAnswer { prompt: String, remaining: usize },
    Executing,
    Done { status: EpisodeStatus },
    Unsatisfiable,
    Unrepairable,
}

impl SessionState {
    pub fn name(&self) -> &'static str {
        match self {
            SessionState::AwaitInstruction => "await_instruction",
            SessionState::Grounded => "grounded",
            SessionState::Synthesizing => "synthesizing",
            SessionState::InitStateInjected => "init_state_injected",
            SessionState::AwaitAnswer { .. } => "await_answer",
            SessionState::Executing => "executing",
            SessionState::Done { .. } => "done",
            SessionState::Unsatisfiable => "unsatisfiable",
            SessionState::Unrepairable => "unrepairable",
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, SessionState::Done { .. } | SessionState::Unsatisfiable | SessionState::Unrepairable)
    }
}

/// The state diagram, by state name.
pub fn transition_allowed(from: &str, to: &str) -> bool {
    matches!(
        (from, to),
        ("await_instruction", "grounded")
            | ("grounded", "synthesizing")
            | ("grounded", "await_instruction")
            | ("synthesizing", "executing")
            | ("synthesizing", "unsatisfiable")
            | ("synthesizing", "init_state_injected")
            | ("synthesizing", "await_answer")
            | ("synthesizing", "unrepairable")
            | ("init_state_injected", "synthesizing")
            | ("await_answer", "synthesizing")
            | ("await_answer", "await_answer")
            | ("await_answer", "unrepairable")
            | ("executing", "done")
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Mining rounds before giving up.
    pub max_rounds: usize,
    pub max_literals: usize,
    pub beam: usize,
    pub parses: usize,
    pub floor: f64,
    pub episode: EpisodeConfig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        let i = InferConfig::default();
        SessionConfig {
            max_rounds: 5,
            max_literals: crate::miner::DEFAULT_MAX_LITERALS,
            beam: i.beam,
            parses: i.parses,
            floor: i.floor,
            episode: EpisodeConfig::default(),
        }
    }
}

impl SessionConfig {
    fn infer(&self) -> InferConfig {
        InferConfig { beam: self.beam, parses: self.parses, floor: self.floor }
    }
}

/// Immutable inputs shared by every session.
#[derive(Clone, Debug)]
pub struct Resources {
    pub grammar: Grammar,
    pub model: GroundingModel,
    pub templates: PromptTemplates,
}

impl Resources {
    pub fn bundled() -> Self {
        Resources { grammar: bundled_grammar(), model: GroundingModel::bundled(), templates: PromptTemplates::bundled() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpecEdit {
    Grounded,
    InitialState { formula: String },
    Assumption { formula: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Instruction { text: String },
    /// A specification supplied directly instead of an instruction.
    SpecInput { spec: SpecDump },
    Parsed { trees: Vec<String> },
    Grounded { actions: Vec<String>, objects: Vec<GroundedObject> },
    Transition { from: String, to: String },
    SpecVersion { version: usize, edit: SpecEdit, spec: SpecDump },
    Verdict { version: usize, verdict: Verdict },
    Mined { round: usize, report: serde_json::Value },
    Prompted { text: String, formula: String, references: Vec<Reference> },
    Answered { yes: bool },
    Skipped { formula: String, reason: String },
    Step { step: usize, edits: Vec<WorldEdit>, env: Valuation, sys: Valuation, goals: Vec<usize> },
    Finished { status: EpisodeStatus },
    Rejected { message: String },
}

/// Timestamps are event indices so replays compare byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub t: usize,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub version: u32,
    pub world: World,
    pub config: SessionConfig,
    pub entries: Vec<Entry>,
}

impl Transcript {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SessionError> {
        let t: Transcript = serde_json::from_str(text).map_err(|e| SessionError::Transcript(e.to_string()))?;
        if t.version != TRANSCRIPT_VERSION {
            return Err(SessionError::Transcript(format!("unsupported version {}", t.version)));
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, SessionError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SessionError::Transcript(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.entries.iter().map(|e| &e.event)
    }

    pub fn spec_versions(&self) -> Vec<&SpecDump> {
        self.events()
            .filter_map(|e| match e {
                Event::SpecVersion { spec, .. } => Some(spec),
                _ => None,
            })
            .collect()
    }

    pub fn verdicts(&self) -> Vec<Verdict> {
        self.events()
            .filter_map(|e| match e {
                Event::Verdict { verdict, .. } => Some(*verdict),
                _ => None,
            })
            .collect()
    }

    pub fn prompts(&self) -> Vec<&str> {
        self.events()
            .filter_map(|e| match e {
                Event::Prompted { text, .. } => Some(text.as_str()),
                _ => None,
            })
            .collect()
    }
}

struct Pending {
    candidate: AssumptionCandidate,
    text: String,
}

pub struct Session {
    res: Arc<Resources>,
    cfg: SessionConfig,
    world: World,
    state: SessionState,
    transcript: Transcript,
    grounding: Option<GroundingSet>,
    spec: Option<GR1Spec>,
    strategy: Option<Strategy>,
    actions: Vec<ActionSym>,
    pending: VecDeque<Pending>,
    declined: BTreeSet<Vec<Literal>>,
    rounds: usize,
    episode: Option<Episode>,
}

impl Session {
    pub fn new(world: World, res: Arc<Resources>, cfg: SessionConfig) -> Self {
        let transcript =
            Transcript { version: TRANSCRIPT_VERSION, world: world.clone(), config: cfg.clone(), entries: vec![] };
        Session {
            res,
            cfg,
            world,
            state: SessionState::AwaitInstruction,
            transcript,
            grounding: None,
            spec: None,
            strategy: None,
            actions: vec![],
            pending: VecDeque::new(),
            declined: BTreeSet::new(),
            rounds: 0,
            episode: None,
        }
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn spec(&self) -> Option<&GR1Spec> {
        self.spec.as_ref()
    }

    pub fn grounding(&self) -> Option<&GroundingSet> {
        self.grounding.as_ref()
    }

    pub fn strategy(&self) -> Option<&Strategy> {
        self.strategy.as_ref()
    }

    pub fn world(&self) -> &World {
        self.episode.as_ref().map_or(&self.world, |e| e.world())
    }

    pub fn episode(&self) -> Option<&Episode> {
        self.episode.as_ref()
    }

    pub fn current_candidate(&self) -> Option<&AssumptionCandidate> {
        match self.state {
            SessionState::AwaitAnswer { .. } => self.pending.front().map(|p| &p.candidate),
            _ => None,
        }
    }

    fn log(&mut self, event: Event) {
        let t = self.transcript.entries.len();
        self.transcript.entries.push(Entry { t, event });
    }

    fn go(&mut self, to: SessionState) {
        debug_assert!(transition_allowed(self.state.name(), to.name()), "{} -> {}", self.state.name(), to.name());
        self.log(Event::Transition { from: self.state.name().into(), to: to.name().into() });
        self.state = to;
    }

    fn wrong(&self, op: &'static str) -> SessionError {
        SessionError::WrongState { op, state: self.state.name().into() }
    }

    fn push_spec(&mut self, spec: GR1Spec, edit: SpecEdit) {
        let version = self.transcript.spec_versions().len();
        self.log(Event::SpecVersion { version, edit, spec: spec.to_dump() });
        self.spec = Some(spec);
    }

    /// Ground, synthesize, and either start executing or start asking.
    pub fn handle_instruction(&mut self, text: &str) -> Result<SessionState, SessionError> {
        if self.state != SessionState::AwaitInstruction {
            return Err(self.wrong("instruction"));
        }
        self.log(Event::Instruction { text: text.to_string() });
        let res = Arc::clone(&self.res);
        let space = symbol_space(&self.world, self.world.task, &prepositions(&res.grammar));
        let gs = match ground_instruction(text, &self.world, &res.grammar, &res.model.scorer(&space), &self.cfg.infer())
        {
            Ok(gs) => gs,
            Err(e) => {
                self.log(Event::Rejected { message: e.to_string() });
                return Err(e.into());
            }
        };
        self.log(Event::Parsed { trees: gs.sentences.iter().map(|s| s.tree.bracketed()).collect() });
        self.log(Event::Grounded {
            actions: gs.scopes.iter().map(|s| action_text(&s.action)).collect(),
            objects: gs.objects.clone(),
        });
        self.go(SessionState::Grounded);
        let spec = match grounding_set_to_spec(&gs) {
            Ok(s) => s,
            Err(e) => {
                self.log(Event::Rejected { message: e.to_string() });
                self.go(SessionState::AwaitInstruction);
                return Err(e.into());
            }
        };
        self.actions = system_actions(&gs, &spec);
        self.grounding = Some(gs);
        self.push_spec(spec, SpecEdit::Grounded);
        self.go(SessionState::Synthesizing);
        self.synthesize(true)
    }

    /// Start from a ready specification. Prompts fall back to canonical
    /// object descriptions since there are no user words to reuse.
    pub fn handle_spec(&mut self, spec: GR1Spec) -> Result<SessionState, SessionError> {
        if self.state != SessionState::AwaitInstruction {
            return Err(self.wrong("spec"));
        }
        self.log(Event::SpecInput { spec: spec.to_dump() });
        let actions = match actions_from_spec(&spec) {
            Ok(a) => a,
            Err(e) => {
                self.log(Event::Rejected { message: e.to_string() });
                return Err(e);
            }
        };
        self.actions = actions;
        self.grounding = Some(GroundingSet {
            task: self.world.task,
            sentences: vec![],
            objects: vec![],
            scopes: vec![],
            referents: vec![],
        });
        self.go(SessionState::Grounded);
        self.push_spec(spec, SpecEdit::Grounded);
        self.go(SessionState::Synthesizing);
        self.synthesize(true)
    }

    fn synthesize(&mut self, may_inject: bool) -> Result<SessionState, SessionError> {
        let spec = self.spec.clone().expect("spec present while synthesizing");
        let result = check_realizability(&spec)?;
        let version = self.transcript.spec_versions().len() - 1;
        self.log(Event::Verdict { version, verdict: result.verdict() });
        match result {
            SynthesisResult::Realizable(strategy) => self.start_execution(&spec, strategy),
            SynthesisResult::Unsatisfiable => {
                self.go(SessionState::Unsatisfiable);
                Ok(self.state.clone())
            }
            SynthesisResult::Unrealizable(cs) if may_inject => {
                let sensors: Vec<SensorSym> = spec
                    .propositions
                    .iter()
                    .filter(|p| p.kind == PropKind::Sensor)
                    .filter_map(|p| SensorSym::from_prop(&p.name))
                    .collect();
                let init = initial_state_assumption(&self.world, &sensors)?;
                if init == spec.env_init {
                    return self.mine(&spec, &cs);
                }
                let mut next = spec;
                next.env_init = init.clone();
                self.push_spec(next, SpecEdit::InitialState { formula: init.to_string() });
                self.go(SessionState::InitStateInjected);
                self.go(SessionState::Synthesizing);
                self.synthesize(false)
            }
            SynthesisResult::Unrealizable(cs) => self.mine(&spec, &cs),
        }
    }

    fn mine(&mut self, spec: &GR1Spec, cs: &crate::game::CounterStrategy) -> Result<SessionState, SessionError> {
        self.rounds += 1;
        if self.rounds > self.cfg.max_rounds {
            self.log(Event::Rejected { message: format!("gave up after {} mining rounds", self.cfg.max_rounds) });
            self.go(SessionState::Unrepairable);
            return Ok(self.state.clone());
        }
        let report = mine_candidates(spec, cs, self.cfg.max_literals)?;
        self.log(Event::Mined { round: self.rounds, report: report.to_json() });
        let offers = if report.candidates.is_empty() { report.partial } else { report.candidates };
        self.pending.clear();
        let gs = self.grounding.clone().expect("grounded");
        for c in offers {
            if self.declined.contains(c.literals()) {
                continue;
            }
            match render_prompt(&c, &gs, &self.res.templates) {
                Ok(p) => self.pending.push_back(Pending { candidate: c, text: p.text }),
                Err(e) => self.log(Event::Skipped { formula: c.formula().to_string(), reason: e.to_string() }),
            }
        }
        self.offer_next()
    }

    fn offer_next(&mut self) -> Result<SessionState, SessionError> {
        let Some(p) = self.pending.front() else {
            self.go(SessionState::Unrepairable);
            return Ok(self.state.clone());
        };
        let gs = self.grounding.as_ref().expect("grounded");
        let refs = render_prompt(&p.candidate, gs, &self.res.templates).map(|p| p.references).unwrap_or_default();
        let (text, formula) = (p.text.clone(), p.candidate.formula().to_string());
        self.log(Event::Prompted { text: text.clone(), formula, references: refs });
        let remaining = self.pending.len() - 1;
        self.go(SessionState::AwaitAnswer { prompt: text, remaining });
        Ok(self.state.clone())
    }

    pub fn handle_answer(&mut self, yes: bool) -> Result<SessionState, SessionError> {
        if !matches!(self.state, SessionState::AwaitAnswer { .. }) {
            return Err(self.wrong("answer"));
        }
        self.log(Event::Answered { yes });
        let p = self.pending.pop_front().expect("a pending prompt while awaiting an answer");
        if !yes {
            self.declined.insert(p.candidate.literals().to_vec());
            return self.offer_next();
        }
        let spec = apply_candidate(self.spec.as_ref().expect("spec"), &p.candidate)?;
        self.push_spec(spec, SpecEdit::Assumption { formula: p.candidate.formula().to_string() });
        self.pending.clear();
        self.go(SessionState::Synthesizing);
        self.synthesize(false)
    }

    fn start_execution(&mut self, spec: &GR1Spec, strategy: Strategy) -> Result<SessionState, SessionError> {
        let episode = Episode::new(spec, &strategy, &self.world, &self.actions, self.cfg.episode)?;
        self.strategy = Some(strategy);
        self.episode = Some(episode);
        self.go(SessionState::Executing);
        Ok(self.state.clone())
    }

    /// One environment step of the running controller.
    pub fn step_execution(&mut self, edits: Vec<WorldEdit>) -> Result<SessionState, SessionError> {
        if self.state != SessionState::Executing {
            return Err(self.wrong("step"));
        }
        let ep = self.episode.as_mut().expect("episode while executing");
        let status = ep.step(edits)?.clone();
        if let Some(s) = ep.trace().steps.last() {
            let event =
                Event::Step { step: s.step, edits: s.edits.clone(), env: s.env.clone(), sys: s.sys.clone(), goals: s.goals.clone() };
            self.log(event);
        }
        if status != EpisodeStatus::Running {
            self.log(Event::Finished { status: status.clone() });
            self.go(SessionState::Done { status });
        }
        Ok(self.state.clone())
    }

    /// Steps until the episode ends or the step budget runs out.
    pub fn run_execution(&mut self, runner: &mut PolicyRunner) -> Result<SessionState, SessionError> {
        while self.state == SessionState::Executing {
            let ep = self.episode.as_ref().expect("episode while executing");
            if ep.trace().steps.len() >= self.cfg.episode.max_steps {
                break;
            }
            let edits = runner.edits(ep.world(), ep.sensors(), &ep.current_valuation())?;
            self.step_execution(edits)?;
        }
        Ok(self.state.clone())
    }
}

/// Action primitives the controller may command: one per scope plus the
/// release actions the spec added.
fn system_actions(gs: &GroundingSet, spec: &GR1Spec) -> Vec<ActionSym> {
    let mut out: Vec<ActionSym> = gs.scopes.iter().map(|s| s.action).collect();
    for side in Side::ALL {
        let r = ActionSym::release(side);
        if spec.propositions.contains(&r.prop()) {
            out.push(r);
        }
    }
    out
}

/// Action primitives behind a specification's action propositions. A pickup's
/// target is the one cube color its safety formula mentions.
pub fn actions_from_spec(spec: &GR1Spec) -> Result<Vec<ActionSym>, SessionError> {
    let bad = |m: String| SessionError::Grounding(GroundingError::Spec(m));
    let mut out = Vec::new();
    for p in spec.propositions.iter().filter(|p| p.kind == PropKind::Action) {
        let name = p.name.as_str();
        let side = |s: &str| Side::from_name(s).ok_or_else(|| bad(format!("unknown action `{name}`")));
        let a = if let Some(s) = name.strip_prefix("pickup_") {
            let colors: BTreeSet<Color> = spec
                .sys_safety
                .iter()
                .filter(|f| f.props().contains(name))
                .flat_map(|f| f.props())
                .filter_map(|q| SensorSym::from_prop(&q))
                .filter(|q| q.kind == SensorType::ObservedCube)
                .filter_map(|q| q.color)
                .collect();
            match colors.iter().collect::<Vec<_>>()[..] {
                [c] => ActionSym::pickup(side(s)?, *c),
                _ => return Err(bad(format!("cannot tell which cube `{name}` picks up"))),
            }
        } else if let Some(c) = name.strip_prefix("place_on_") {
            ActionSym::place_on(Color::from_name(c).ok_or_else(|| bad(format!("unknown action `{name}`")))?)
        } else if let Some(s) = name.strip_prefix("place_").and_then(|r| r.strip_suffix("_bin")) {
            ActionSym::place_bin(side(s)?)
        } else if let Some(s) = name.strip_prefix("release_") {
            ActionSym::release(side(s)?)
        } else {
            return Err(bad(format!("unknown action `{name}`")));
        };
        out.push(a);
    }
    Ok(out)
}

/// Re-run a transcript's instruction, answers, and recorded environment
/// edits in a fresh session.
pub fn replay(t: &Transcript, res: Arc<Resources>) -> Result<Transcript, SessionError> {
    let mut s = Session::new(t.world.clone(), res, t.config.clone());
    for e in t.events() {
        match e {
            Event::Instruction { text } => {
                // failures are part of the record
                let _ = s.handle_instruction(text);
            }
            Event::SpecInput { spec } => {
                let spec = GR1Spec::from_dump(spec).map_err(|e| SessionError::Transcript(e.to_string()))?;
                let _ = s.handle_spec(spec);
            }
            Event::Answered { yes } => {
                s.handle_answer(*yes)?;
            }
            Event::Step { edits, .. } => {
                s.step_execution(edits.clone())?;
            }
            _ => {}
        }
    }
    Ok(s.transcript)
}
