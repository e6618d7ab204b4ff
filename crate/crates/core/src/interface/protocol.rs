//! Newline-delimited JSON messages between a client (UI or script) and a
//! session host. Every line is one [`Message`]; the schema is closed.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::game::Verdict;
use crate::ltl::{GR1Spec, SpecDump, Valuation};
use crate::prompter::Reference;
use crate::session::{Event, Resources, Session, SessionConfig, SessionError, SessionState, SpecEdit};
use crate::world::{load_world, PolicyRunner, World, WorldEdit};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Message {
    pub version: u32,
    pub session: String,
    pub seq: u64,
    pub body: Body,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    BadMessage,
    VersionMismatch,
    WrongState,
    NotUnderstood,
    Input,
    Internal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case", deny_unknown_fields)]
pub enum Body {
    /// Client: opens a session on a world. Server: acknowledges it.
    Hello { protocol: u32, #[serde(default, skip_serializing_if = "Option::is_none")] world: Option<String> },
    Instruction { text: String },
    /// A ready specification instead of an instruction.
    Spec { spec: SpecDump },
    Prompt { text: String, formula: String, references: Vec<Reference>, remaining: usize },
    Answer { yes: bool },
    SpecUpdate { version: usize, edit: SpecEdit, spec: SpecDump },
    Verdict { version: usize, verdict: Verdict },
    WorldState { world: World },
    ExecutionStep { step: usize, edits: Vec<WorldEdit>, env: Valuation, sys: Valuation, goals: Vec<usize> },
    Report { topic: String, data: serde_json::Value },
    Error { error: ErrorKind, message: String },
    Done { state: SessionState },
    Heartbeat,
}

impl Body {
    pub fn kind(&self) -> &'static str {
        match self {
            Body::Hello { .. } => "hello",
            Body::Instruction { .. } => "instruction",
            Body::Spec { .. } => "spec",
            Body::Prompt { .. } => "prompt",
            Body::Answer { .. } => "answer",
            Body::SpecUpdate { .. } => "spec_update",
            Body::Verdict { .. } => "verdict",
            Body::WorldState { .. } => "world_state",
            Body::ExecutionStep { .. } => "execution_step",
            Body::Report { .. } => "report",
            Body::Error { .. } => "error",
            Body::Done { .. } => "done",
            Body::Heartbeat => "heartbeat",
        }
    }
}

impl Message {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("messages serialize")
    }

    pub fn from_line(line: &str) -> Result<Message, String> {
        serde_json::from_str(line.trim()).map_err(|e| e.to_string())
    }
}

/// Transcript events a client sees, as message bodies.
pub fn event_body(e: &Event) -> Option<Body> {
    Some(match e {
        Event::SpecVersion { version, edit, spec } => {
            Body::SpecUpdate { version: *version, edit: edit.clone(), spec: spec.clone() }
        }
        Event::Verdict { version, verdict } => Body::Verdict { version: *version, verdict: *verdict },
        Event::Prompted { .. } => return None, // sent with the state that carries `remaining`
        Event::Step { step, edits, env, sys, goals } => Body::ExecutionStep {
            step: *step,
            edits: edits.clone(),
            env: env.clone(),
            sys: sys.clone(),
            goals: goals.clone(),
        },
        Event::Mined { round, report } => {
            Body::Report { topic: "mining".into(), data: serde_json::json!({ "round": round, "report": report }) }
        }
        Event::Grounded { actions, objects } => Body::Report {
            topic: "grounding".into(),
            data: serde_json::json!({ "actions": actions, "objects": objects }),
        },
        Event::Skipped { formula, reason } => Body::Report {
            topic: "skipped".into(),
            data: serde_json::json!({ "formula": formula, "reason": reason }),
        },
        Event::Rejected { message } => Body::Error { error: ErrorKind::NotUnderstood, message: message.clone() },
        _ => return None,
    })
}

/// How a host moves the environment once a controller runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    Scripted { steps: Vec<Vec<WorldEdit>> },
    Random { edit_prob: f64 },
}

impl PolicySpec {
    pub fn runner(&self, seed: u64) -> PolicyRunner {
        use crate::world::EnvironmentPolicy;
        PolicyRunner::new(match self {
            PolicySpec::Scripted { steps } => EnvironmentPolicy::Scripted(steps.clone()),
            PolicySpec::Random { edit_prob } => EnvironmentPolicy::Random { seed, edit_prob: *edit_prob },
        })
    }
}

impl Default for PolicySpec {
    fn default() -> Self {
        PolicySpec::Scripted { steps: vec![] }
    }
}

/// Host-side settings shared by every connection.
#[derive(Clone, Debug)]
pub struct HostConfig {
    pub resources: Arc<Resources>,
    pub session: SessionConfig,
    pub policy: PolicySpec,
    pub seed: u64,
    /// Directory searched for `<name>.json` worlds before the bundled ones.
    pub worlds_dir: Option<std::path::PathBuf>,
}

impl HostConfig {
    pub fn bundled() -> Self {
        HostConfig {
            resources: Arc::new(Resources::bundled()),
            session: SessionConfig::default(),
            policy: PolicySpec::default(),
            seed: 0,
            worlds_dir: None,
        }
    }

    fn world(&self, name: &str) -> Result<World, String> {
        if let Some(dir) = &self.worlds_dir {
            let p = dir.join(format!("{name}.json"));
            if p.exists() {
                return World::load(&p).map_err(|e| e.to_string());
            }
        }
        load_world(name).map_err(|e| e.to_string())
    }
}

/// One client's conversation: parses lines, drives a session, and returns
/// the reply messages with fresh sequence numbers.
pub struct Conversation {
    id: String,
    host: HostConfig,
    session: Option<Session>,
    seen: usize,
    out_seq: u64,
    in_seq: Option<u64>,
    closed: bool,
}

impl Conversation {
    pub fn new(id: impl Into<String>, host: HostConfig) -> Self {
        Conversation { id: id.into(), host, session: None, seen: 0, out_seq: 0, in_seq: None, closed: false }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// A protocol-version mismatch ends the conversation.
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn session(&self) -> Option<&Session> {
        self.session.as_ref()
    }

    /// Stamp a body as the next outgoing message.
    pub fn stamp(&mut self, body: Body) -> Message {
        self.out_seq += 1;
        Message { version: PROTOCOL_VERSION, session: self.id.clone(), seq: self.out_seq, body }
    }

    fn error(&mut self, error: ErrorKind, message: impl Into<String>) -> Vec<Message> {
        vec![self.stamp(Body::Error { error, message: message.into() })]
    }

    pub fn handle_line(&mut self, line: &str) -> Vec<Message> {
        if self.closed {
            return vec![];
        }
        match Message::from_line(line) {
            Ok(m) => self.handle(m),
            Err(e) => self.error(ErrorKind::BadMessage, e),
        }
    }

    pub fn handle(&mut self, m: Message) -> Vec<Message> {
        if m.version != PROTOCOL_VERSION {
            self.closed = matches!(m.body, Body::Hello { .. });
            return self.error(ErrorKind::VersionMismatch, format!("protocol version {} unsupported", m.version));
        }
        if self.in_seq.is_some_and(|last| m.seq <= last) {
            return self.error(ErrorKind::BadMessage, format!("sequence number {} does not increase", m.seq));
        }
        self.in_seq = Some(m.seq);
        match m.body {
            Body::Hello { protocol, world } => self.hello(protocol, world),
            Body::Instruction { text } => self.drive(|s| s.handle_instruction(&text)),
            Body::Spec { spec } => match GR1Spec::from_dump(&spec) {
                Ok(spec) => self.drive(|s| s.handle_spec(spec)),
                Err(e) => self.error(ErrorKind::Input, e.to_string()),
            },
            Body::Answer { yes } => self.drive(|s| s.handle_answer(yes)),
            other => self.error(ErrorKind::BadMessage, format!("`{}` is not a client message", other.kind())),
        }
    }

    fn hello(&mut self, protocol: u32, world: Option<String>) -> Vec<Message> {
        if protocol != PROTOCOL_VERSION {
            self.closed = true;
            return self.error(ErrorKind::VersionMismatch, format!("protocol {protocol} unsupported"));
        }
        if self.session.is_some() {
            return self.error(ErrorKind::WrongState, "session already open");
        }
        let name = world.unwrap_or_else(|| "sorting_env2".into());
        let w = match self.host.world(&name) {
            Ok(w) => w,
            Err(e) => return self.error(ErrorKind::Input, e),
        };
        self.session = Some(Session::new(w.clone(), Arc::clone(&self.host.resources), self.host.session.clone()));
        let hello = self.stamp(Body::Hello { protocol: PROTOCOL_VERSION, world: Some(name) });
        let ws = self.stamp(Body::WorldState { world: w });
        vec![hello, ws]
    }

    fn drive(&mut self, f: impl FnOnce(&mut Session) -> Result<SessionState, SessionError>) -> Vec<Message> {
        let Some(session) = self.session.as_mut() else {
            return self.error(ErrorKind::WrongState, "send hello first");
        };
        let result = f(session);
        let mut out = self.flush();
        match result {
            Err(SessionError::WrongState { op, state }) => {
                out.extend(self.error(ErrorKind::WrongState, format!("`{op}` is not allowed in state {state}")));
                return out;
            }
            // grounding failures already went out as a transcript event
            Err(SessionError::Grounding(_)) => return out,
            Err(e) => {
                out.extend(self.error(ErrorKind::Internal, e.to_string()));
                return out;
            }
            Ok(_) => {}
        }
        let session = self.session.as_mut().expect("session");
        if *session.state() == SessionState::Executing {
            let mut runner = self.host.policy.runner(self.host.seed);
            if let Err(e) = session.run_execution(&mut runner) {
                out.extend(self.flush());
                out.extend(self.error(ErrorKind::Internal, e.to_string()));
                return out;
            }
            out.extend(self.flush());
            let world = self.session.as_ref().expect("session").world().clone();
            out.push(self.stamp(Body::WorldState { world }));
        }
        out.extend(self.state_message());
        out
    }

    fn flush(&mut self) -> Vec<Message> {
        let Some(session) = self.session.as_ref() else { return vec![] };
        let bodies: Vec<Body> = session.transcript().entries[self.seen..].iter().filter_map(|e| event_body(&e.event)).collect();
        self.seen = session.transcript().entries.len();
        bodies.into_iter().map(|b| self.stamp(b)).collect()
    }

    fn state_message(&mut self) -> Vec<Message> {
        let Some(session) = self.session.as_ref() else { return vec![] };
        let state = session.state().clone();
        let body = match &state {
            SessionState::AwaitAnswer { prompt, remaining } => {
                let formula = session.current_candidate().map(|c| c.formula().to_string()).unwrap_or_default();
                let references = session
                    .transcript()
                    .events()
                    .filter_map(|e| match e {
                        Event::Prompted { references, .. } => Some(references.clone()),
                        _ => None,
                    })
                    .last()
                    .unwrap_or_default();
                Body::Prompt { text: prompt.clone(), formula, references, remaining: *remaining }
            }
            s if s.is_terminal() => Body::Done { state },
            SessionState::Executing => {
                Body::Report { topic: "state".into(), data: serde_json::to_value(&state).expect("state serializes") }
            }
            SessionState::AwaitInstruction => {
                Body::Report { topic: "state".into(), data: serde_json::to_value(&state).expect("state serializes") }
            }
            _ => return vec![],
        };
        vec![self.stamp(body)]
    }
}
