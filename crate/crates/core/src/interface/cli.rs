//! The `repair` command line.

use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use super::protocol::{HostConfig, PolicySpec};
use super::server::{serve_stdio, Server};
use crate::game::{check_realizability, strategy_json, counterstrategy_json, SynthesisResult};
use crate::grammar::{bundled_grammar, Grammar};
use crate::grounding::{
    corpus_tasks, cross_validate, evaluate, ground_instruction, grounding_set_to_spec, prepositions, symbol_space,
    train, Corpus, EvalReport, FeatureSet, GroundingError, GroundingModel, InferConfig, TrainConfig,
};
use crate::ltl::GR1Spec;
use crate::prompter::PromptTemplates;
use crate::session::{replay, Resources, Session, SessionConfig, SessionError, SessionState, Transcript};
use crate::world::{load_world, EpisodeStatus, World};

pub const EXIT_OK: i32 = 0;
/// The run finished but the controller did not complete its goal cycle.
pub const EXIT_INCOMPLETE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_UNREPAIRABLE: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "repair", version, about = "Ground tabletop instructions, synthesize controllers, and repair unrealizable specifications")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ResourceArgs {
    /// Grounding model (JSON); the bundled model when absent.
    #[arg(long, env = "REPAIR_MODEL")]
    pub model: Option<PathBuf>,
    /// Grammar file; the bundled grammar when absent.
    #[arg(long, env = "REPAIR_GRAMMAR")]
    pub grammar: Option<PathBuf>,
    /// Prompt template file; the bundled templates when absent.
    #[arg(long)]
    pub templates: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Ground an instruction and print the grounding and specification.
    Ground {
        instruction: String,
        /// World file or bundled world name.
        #[arg(long, env = "REPAIR_WORLD", default_value = "sorting_env2")]
        world: String,
        #[command(flatten)]
        res: ResourceArgs,
        /// Also write the specification dump here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a specification dump for realizability.
    Synth {
        spec: PathBuf,
        /// Write the strategy or counterstrategy as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the repair loop headlessly or on the terminal.
    Repair {
        #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
        instruction: Option<String>,
        /// Specification dump to start from instead of an instruction.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, env = "REPAIR_WORLD", default_value = "sorting_env2")]
        world: String,
        #[command(flatten)]
        res: ResourceArgs,
        /// File of yes/no answers, one per prompt; missing answers count as no.
        #[arg(long, conflicts_with_all = ["answers", "interactive"])]
        script: Option<PathBuf>,
        /// Inline answers, e.g. `yes,no`.
        #[arg(long, conflicts_with = "interactive")]
        answers: Option<String>,
        /// Ask on the terminal.
        #[arg(long)]
        interactive: bool,
        /// Environment policy (JSON); no user edits when absent.
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_rounds: Option<usize>,
        /// Where to write the transcript.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Re-run a transcript and check it reproduces byte for byte.
    Replay {
        transcript: PathBuf,
        #[command(flatten)]
        res: ResourceArgs,
    },
    /// Train a grounding model on an annotated corpus.
    Train {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long, env = "REPAIR_GRAMMAR")]
        grammar: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        l2: Option<f64>,
    },
    /// Measure grounding recovery on a corpus.
    Eval {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        res: ResourceArgs,
        /// Features used when a split retrains.
        #[arg(long)]
        features: Option<PathBuf>,
        /// `none` (given model, all examples), `task` (train and test per
        /// task), or `cv:K` (K-fold cross-validation).
        #[arg(long, default_value = "none")]
        split: String,
    },
    /// Serve sessions over TCP or stdio.
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        stdio: bool,
        /// Directory of `<name>.json` worlds offered to clients.
        #[arg(long)]
        worlds: Option<PathBuf>,
        #[command(flatten)]
        res: ResourceArgs,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn input(kind: &'static str, message: impl Into<String>) -> Self {
        CliError { code: EXIT_INPUT, kind, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        CliError { code: EXIT_INTERNAL, kind: "Internal", message: message.into() }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self.kind, "message": self.message }).to_string()
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => CliError::input("FileNotFound", format!("{}: not found", path.display())),
        _ => CliError::input("Io", format!("{}: {e}", path.display())),
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::input("Io", format!("{}: {e}", path.display())))
}

fn world(spec: &str) -> Result<World, CliError> {
    let looks_like_file = spec.contains('/') || spec.ends_with(".json");
    if looks_like_file && !Path::new(spec).exists() {
        return Err(CliError::input("FileNotFound", format!("{spec}: not found")));
    }
    load_world(spec).map_err(|e| match e {
        crate::world::WorldError::Io(m) => CliError::input("FileNotFound", m),
        e => CliError::input("BadWorld", e.to_string()),
    })
}

fn grounding_err(e: GroundingError) -> CliError {
    let kind = match e {
        GroundingError::CoverageGap(_) => "CoverageGap",
        GroundingError::InconsistentAnnotation(_) => "InconsistentAnnotation",
        GroundingError::Parse(_) => "Parse",
        GroundingError::Io(_) => "Io",
        GroundingError::Format(_) => "Format",
        _ => "Grounding",
    };
    CliError::input(kind, e.to_string())
}

impl ResourceArgs {
    fn grammar(&self) -> Result<Grammar, CliError> {
        match &self.grammar {
            Some(p) => Grammar::parse(&read(p)?).map_err(|e| CliError::input("Format", e.to_string())),
            None => Ok(bundled_grammar()),
        }
    }

    fn model(&self) -> Result<GroundingModel, CliError> {
        match &self.model {
            Some(p) => GroundingModel::from_json(&read(p)?).map_err(grounding_err),
            None => Ok(GroundingModel::bundled()),
        }
    }

    fn load(&self) -> Result<Resources, CliError> {
        let templates = match &self.templates {
            Some(p) => PromptTemplates::parse(&read(p)?).map_err(|e| CliError::input("Format", e.to_string()))?,
            None => PromptTemplates::bundled(),
        };
        Ok(Resources { grammar: self.grammar()?, model: self.model()?, templates })
    }
}

fn policy(path: Option<&PathBuf>) -> Result<PolicySpec, CliError> {
    match path {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| CliError::input("Format", format!("{}: {e}", p.display()))),
        None => Ok(PolicySpec::default()),
    }
}

/// Answers separated by commas or whitespace; `#` comments run to line end.
pub fn parse_answers(text: &str) -> Result<Vec<bool>, CliError> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|w| !w.is_empty())
        .map(|w| match w.to_ascii_lowercase().as_str() {
            "y" | "yes" => Ok(true),
            "n" | "no" => Ok(false),
            other => Err(CliError::input("Format", format!("answer `{other}` is not yes or no"))),
        })
        .collect()
}

fn print_json(v: &serde_json::Value) {
    // a closed pipe downstream is not our failure
    let _ = writeln!(io::stdout(), "{}", serde_json::to_string_pretty(v).expect("json"));
}

pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Ground { instruction, world: w, res, out } => {
            let w = world(&w)?;
            let g = res.grammar()?;
            let model = res.model()?;
            let space = symbol_space(&w, w.task, &prepositions(&g));
            let gs = ground_instruction(&instruction, &w, &g, &model.scorer(&space), &InferConfig::default())
                .map_err(grounding_err)?;
            let spec = grounding_set_to_spec(&gs).map_err(grounding_err)?;
            if let Some(p) = out {
                write(&p, &spec.dump_json())?;
            }
            print_json(&json!({
                "task": w.task,
                "sentences": gs.sentences.iter().map(|s| json!({
                    "text": s.text,
                    "tree": s.tree.bracketed(),
                    "symbols": s.symbols.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                    "score": s.score,
                })).collect::<Vec<_>>(),
                "objects": gs.objects,
                "actions": gs.scopes.iter().map(|s| crate::grounding::action_text(&s.action)).collect::<Vec<_>>(),
                "spec": spec.to_dump(),
            }));
            Ok(EXIT_OK)
        }
        Command::Synth { spec, out } => {
            let spec = GR1Spec::load_json(&read(&spec)?).map_err(|e| CliError::input("BadSpec", e.to_string()))?;
            let result = check_realizability(&spec).map_err(|e| CliError::input("BadSpec", e.to_string()))?;
            let (detail, code) = match &result {
                SynthesisResult::Realizable(s) => (strategy_json(s), EXIT_OK),
                SynthesisResult::Unrealizable(c) => (counterstrategy_json(c), EXIT_UNREPAIRABLE),
                SynthesisResult::Unsatisfiable => (serde_json::Value::Null, EXIT_UNREPAIRABLE),
            };
            if let Some(p) = out {
                write(&p, &serde_json::to_string_pretty(&detail).expect("json"))?;
            }
            let nodes = match &result {
                SynthesisResult::Realizable(s) => json!(s.len()),
                SynthesisResult::Unrealizable(c) => json!(c.nodes.len()),
                SynthesisResult::Unsatisfiable => json!(null),
            };
            print_json(&json!({ "verdict": result.verdict(), "nodes": nodes }));
            Ok(code)
        }
        Command::Repair {
            instruction,
            spec,
            world: w,
            res,
            script,
            answers,
            interactive,
            policy: pol,
            seed,
            max_rounds,
            transcript,
        } => {
            let w = world(&w)?;
            let resources = Arc::new(res.load()?);
            let spec = match &spec {
                Some(p) => {
                    Some(GR1Spec::load_json(&read(p)?).map_err(|e| CliError::input("BadSpec", e.to_string()))?)
                }
                None => None,
            };
            let scripted = match (&script, &answers) {
                (Some(p), _) => parse_answers(&read(p)?)?,
                (None, Some(a)) => parse_answers(a)?,
                _ => vec![],
            };
            let pol = policy(pol.as_ref())?;
            let mut cfg = SessionConfig::default();
            if let Some(r) = max_rounds {
                cfg.max_rounds = r;
            }
            let mut session = Session::new(w, resources, cfg);
            let mut ask = Answerer { scripted: scripted.into_iter(), interactive };
            let outcome = drive(&mut session, instruction.as_deref(), spec, &mut ask, &pol, seed);
            if let Some(p) = &transcript {
                write(p, &session.transcript().to_json())?;
            }
            let state = outcome?;
            let t = session.transcript();
            print_json(&json!({
                "state": state,
                "prompts": t.prompts(),
                "verdicts": t.verdicts(),
                "spec_versions": t.spec_versions().len(),
                "steps": session.episode().map_or(0, |e| e.trace().steps.len()),
            }));
            Ok(exit_code(&state))
        }
        Command::Replay { transcript, res } => {
            let original = Transcript::from_json(&read(&transcript)?).map_err(|e| CliError::input("BadTranscript", e.to_string()))?;
            let again = replay(&original, Arc::new(res.load()?)).map_err(|e| CliError::internal(e.to_string()))?;
            let identical = again.to_json() == original.to_json();
            print_json(&json!({ "identical": identical, "entries": again.entries.len() }));
            Ok(if identical { EXIT_OK } else { EXIT_INTERNAL })
        }
        Command::Train { corpus, features, grammar, out, steps, l2 } => {
            let corpus = load_corpus(corpus.as_deref())?;
            let features = load_features(features.as_deref())?;
            let g = ResourceArgs { model: None, grammar, templates: None }.grammar()?;
            let mut cfg = TrainConfig::default();
            if let Some(s) = steps {
                cfg.steps = s;
            }
            if let Some(l) = l2 {
                cfg.l2 = l;
            }
            let started = Instant::now();
            let trained = train(&corpus, &g, &features, &cfg).map_err(grounding_err)?;
            write(&out, &trained.model.to_json())?;
            print_json(&json!({
                "examples": corpus.examples.len(),
                "weights": trained.model.weights.len(),
                "objective": trained.final_objective,
                "coverage_gaps": trained.coverage_gaps,
                "seconds": started.elapsed().as_secs_f64(),
            }));
            Ok(EXIT_OK)
        }
        Command::Eval { corpus, res, features, split } => {
            let corpus = load_corpus(corpus.as_deref())?;
            let g = res.grammar()?;
            let infer = InferConfig::default();
            let report = |r: &EvalReport| {
                json!({
                    "instructions": r.instructions,
                    "recovered": r.recovered,
                    "recovery": r.recovery(),
                    "symbol_accuracy": r.symbol_accuracy(),
                    "beam_disagreements": r.beam_disagreements,
                    "misses": r.misses,
                })
            };
            let out = match split.as_str() {
                "none" => {
                    let r = evaluate(&corpus, &g, &res.model()?, &infer).map_err(grounding_err)?;
                    json!({ "split": "none", "report": report(&r) })
                }
                "task" => {
                    let features = load_features(features.as_deref())?;
                    let mut reports = serde_json::Map::new();
                    for task in corpus_tasks(&corpus) {
                        let part = Corpus {
                            version: corpus.version,
                            examples: corpus.examples.iter().filter(|e| e.task == task).cloned().collect(),
                        };
                        let model = train(&part, &g, &features, &TrainConfig::default()).map_err(grounding_err)?.model;
                        let r = evaluate(&part, &g, &model, &infer).map_err(grounding_err)?;
                        reports.insert(task.name().to_string(), report(&r));
                    }
                    json!({ "split": "task", "reports": reports })
                }
                s => {
                    let k: usize = s
                        .strip_prefix("cv:")
                        .and_then(|k| k.parse().ok())
                        .filter(|k| *k >= 2)
                        .ok_or_else(|| CliError::input("BadArgument", format!("unknown split `{s}`")))?;
                    let features = load_features(features.as_deref())?;
                    let r = cross_validate(&corpus, &g, &features, &TrainConfig::default(), &infer, k)
                        .map_err(grounding_err)?;
                    json!({ "split": format!("cv:{k}"), "report": report(&r) })
                }
            };
            print_json(&out);
            Ok(EXIT_OK)
        }
        Command::Serve { port, host, stdio, worlds, res, policy: pol, seed } => {
            let cfg = HostConfig {
                resources: Arc::new(res.load()?),
                session: SessionConfig::default(),
                policy: policy(pol.as_ref())?,
                seed,
                worlds_dir: worlds,
            };
            if stdio {
                serve_stdio(cfg).map_err(|e| CliError::internal(e.to_string()))?;
                return Ok(EXIT_OK);
            }
            let server = Server::bind(&format!("{host}:{port}"), cfg)
                .map_err(|e| CliError::input("Bind", format!("{host}:{port}: {e}")))?;
            eprintln!("listening on {}", server.local_addr().map_err(|e| CliError::internal(e.to_string()))?);
            server.run().map_err(|e| CliError::internal(e.to_string()))?;
            Ok(EXIT_OK)
        }
    }
}

fn load_corpus(path: Option<&Path>) -> Result<Corpus, CliError> {
    let corpus = match path {
        Some(p) => Corpus::from_json(&read(p)?).map_err(grounding_err)?,
        None => Corpus::bundled(),
    };
    if corpus.examples.is_empty() {
        return Err(CliError::input("CoverageGap", "corpus has no examples; no feature is covered"));
    }
    Ok(corpus)
}

fn load_features(path: Option<&Path>) -> Result<FeatureSet, CliError> {
    match path {
        Some(p) => FeatureSet::parse(&read(p)?).map_err(grounding_err),
        None => Ok(FeatureSet::bundled()),
    }
}

struct Answerer {
    scripted: std::vec::IntoIter<bool>,
    interactive: bool,
}

impl Answerer {
    fn answer(&mut self, prompt: &str) -> Result<bool, CliError> {
        if !self.interactive {
            return Ok(self.scripted.next().unwrap_or(false));
        }
        let stdin = io::stdin();
        let mut line = String::new();
        loop {
            eprint!("{prompt} [y/n] ");
            io::stderr().flush().ok();
            line.clear();
            if stdin.lock().read_line(&mut line).map_err(|e| CliError::internal(e.to_string()))? == 0 {
                return Ok(false);
            }
            if let Ok(a) = parse_answers(&line) {
                if let [a] = a[..] {
                    return Ok(a);
                }
            }
        }
    }
}

fn session_err(e: SessionError) -> CliError {
    match e {
        SessionError::Grounding(g) => grounding_err(g),
        e => CliError::internal(e.to_string()),
    }
}

fn drive(
    session: &mut Session,
    instruction: Option<&str>,
    spec: Option<GR1Spec>,
    ask: &mut Answerer,
    policy: &PolicySpec,
    seed: u64,
) -> Result<SessionState, CliError> {
    let mut state = match (instruction, spec) {
        (Some(text), _) => session.handle_instruction(text),
        (None, Some(spec)) => session.handle_spec(spec),
        (None, None) => return Err(CliError::input("BadArgument", "give --instruction or --spec")),
    }
    .map_err(session_err)?;
    while let SessionState::AwaitAnswer { prompt, .. } = &state {
        let yes = ask.answer(prompt)?;
        state = session.handle_answer(yes).map_err(session_err)?;
    }
    if state == SessionState::Executing {
        state = session.run_execution(&mut policy.runner(seed)).map_err(session_err)?;
    }
    Ok(state)
}

pub fn exit_code(state: &SessionState) -> i32 {
    match state {
        SessionState::Done { status: EpisodeStatus::GoalCycleComplete } => EXIT_OK,
        SessionState::Unrepairable | SessionState::Unsatisfiable => EXIT_UNREPAIRABLE,
        _ => EXIT_INCOMPLETE,
    }
}

/// Parse arguments, run, report errors as JSON on stderr, and return the
/// process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.code
        }
    }
}
