use crate::ltl::{validate_spec, Formula, GR1Spec, PropKind, Proposition, Valuation};

use super::GameError;

/// Bit layout for full valuations: proposition `i` (lexicographic) sits at bit
/// `n - 1 - i`, so numeric order on encoded states is lexicographic order on
/// valuations with `false < true`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Encoding {
    pub props: Vec<Proposition>,
    pub sensor_mask: u32,
    pub system_mask: u32,
}

impl Encoding {
    pub fn new(props: Vec<Proposition>) -> Self {
        let n = props.len();
        let mut sensor_mask = 0;
        let mut system_mask = 0;
        for (i, p) in props.iter().enumerate() {
            let bit = 1u32 << (n - 1 - i);
            if p.kind == PropKind::Sensor {
                sensor_mask |= bit;
            } else {
                system_mask |= bit;
            }
        }
        Encoding { props, sensor_mask, system_mask }
    }

    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn is_empty(&self) -> bool {
        self.props.is_empty()
    }

    pub fn n_states(&self) -> usize {
        1usize << self.props.len()
    }

    pub fn bit(&self, name: &str) -> Option<u32> {
        let n = self.props.len();
        self.props.iter().position(|p| p.name == name).map(|i| 1u32 << (n - 1 - i))
    }

    pub fn decode(&self, state: u32) -> Valuation {
        let n = self.props.len();
        Valuation(
            self.props
                .iter()
                .enumerate()
                .map(|(i, p)| (p.name.clone(), state & (1 << (n - 1 - i)) != 0))
                .collect(),
        )
    }

    /// Decode only the bits selected by `mask`.
    pub fn decode_masked(&self, state: u32, mask: u32) -> Valuation {
        let n = self.props.len();
        Valuation(
            self.props
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << (n - 1 - i)) != 0)
                .map(|(i, p)| (p.name.clone(), state & (1 << (n - 1 - i)) != 0))
                .collect(),
        )
    }

    /// Encode a (possibly partial) valuation; names outside the encoding are errors.
    pub fn encode(&self, v: &Valuation) -> Result<u32, GameError> {
        let mut out = 0;
        for (name, value) in &v.0 {
            let bit = self.bit(name).ok_or_else(|| GameError::UnknownProposition(name.clone()))?;
            if *value {
                out |= bit;
            }
        }
        Ok(out)
    }

    /// All sub-valuations of `mask`, in increasing numeric order.
    pub fn submasks(mask: u32) -> Vec<u32> {
        let bits: Vec<u32> = (0..32).filter(|b| mask & (1 << b) != 0).collect();
        (0..(1u32 << bits.len()))
            .map(|k| {
                bits.iter()
                    .enumerate()
                    .filter(|(j, _)| k & (1 << j) != 0)
                    .fold(0, |acc, (_, b)| acc | (1 << b))
            })
            .collect()
    }
}

/// Propositional formula over the current and next state, compiled to bits.
#[derive(Clone, Debug)]
pub enum StepExpr {
    Const(bool),
    Var { bit: u32, next: bool },
    Not(Box<StepExpr>),
    And(Vec<StepExpr>),
    Or(Vec<StepExpr>),
    Implies(Box<StepExpr>, Box<StepExpr>),
}

impl StepExpr {
    pub fn compile(f: &Formula, enc: &Encoding) -> Result<Self, GameError> {
        Self::compile_at(f, enc, false)
    }

    fn compile_at(f: &Formula, enc: &Encoding, next: bool) -> Result<Self, GameError> {
        Ok(match f {
            Formula::True => StepExpr::Const(true),
            Formula::False => StepExpr::Const(false),
            Formula::Prop(p) => StepExpr::Var {
                bit: enc.bit(p).ok_or_else(|| GameError::UnknownProposition(p.clone()))?,
                next,
            },
            Formula::Not(g) => StepExpr::Not(Box::new(Self::compile_at(g, enc, next)?)),
            Formula::And(gs) => StepExpr::And(
                gs.iter().map(|g| Self::compile_at(g, enc, next)).collect::<Result<_, _>>()?,
            ),
            Formula::Or(gs) => StepExpr::Or(
                gs.iter().map(|g| Self::compile_at(g, enc, next)).collect::<Result<_, _>>()?,
            ),
            Formula::Implies(a, b) => StepExpr::Implies(
                Box::new(Self::compile_at(a, enc, next)?),
                Box::new(Self::compile_at(b, enc, next)?),
            ),
            Formula::Next(g) if !next => Self::compile_at(g, enc, true)?,
            other => return Err(GameError::Unsupported(other.to_string())),
        })
    }

    pub fn eval(&self, cur: u32, nxt: u32) -> bool {
        match self {
            StepExpr::Const(b) => *b,
            StepExpr::Var { bit, next } => (if *next { nxt } else { cur }) & bit != 0,
            StepExpr::Not(e) => !e.eval(cur, nxt),
            StepExpr::And(es) => es.iter().all(|e| e.eval(cur, nxt)),
            StepExpr::Or(es) => es.iter().any(|e| e.eval(cur, nxt)),
            StepExpr::Implies(a, b) => !a.eval(cur, nxt) || b.eval(cur, nxt),
        }
    }
}

fn strip_always(f: &Formula) -> &Formula {
    match f {
        Formula::Always(b) => b,
        other => other,
    }
}

fn strip_always_eventually(f: &Formula) -> &Formula {
    match f {
        Formula::Always(inner) => match &**inner {
            Formula::Eventually(b) => b,
            other => other,
        },
        other => other,
    }
}

/// Explicit arena: every full valuation is a state; the environment picks the
/// next sensor values, then the system picks the next action/memory values
/// having seen them.
#[derive(Clone, Debug)]
pub struct GameGraph {
    pub enc: Encoding,
    /// Per state, legal next sensor valuations (sensor bits only).
    pub env_moves: Vec<Vec<u32>>,
    /// Per state and per env move (same index), legal successor states.
    pub sys_moves: Vec<Vec<Vec<u32>>>,
    pub env_init: Vec<bool>,
    pub sys_init: Vec<bool>,
    /// Per env liveness goal, the states satisfying it.
    pub env_goals: Vec<Vec<bool>>,
    /// Per sys liveness goal, the states satisfying it.
    pub sys_goals: Vec<Vec<bool>>,
}

pub const DEFAULT_MAX_PROPS: usize = 16;

pub fn build_game(spec: &GR1Spec) -> Result<GameGraph, GameError> {
    build_game_capped(spec, DEFAULT_MAX_PROPS)
}

pub fn build_game_capped(spec: &GR1Spec, max_props: usize) -> Result<GameGraph, GameError> {
    let violations = validate_spec(spec);
    if !violations.is_empty() {
        return Err(GameError::InvalidSpec(violations));
    }
    if spec.propositions.len() > max_props.min(24) {
        return Err(GameError::TooManyPropositions(max_props));
    }
    let enc = Encoding::new(spec.propositions.iter().collect());
    let compile_all = |fs: &[Formula], strip: fn(&Formula) -> &Formula| {
        fs.iter().map(|f| StepExpr::compile(strip(f), &enc)).collect::<Result<Vec<_>, _>>()
    };
    let env_safety = compile_all(&spec.env_safety, strip_always)?;
    let sys_safety = compile_all(&spec.sys_safety, strip_always)?;
    let env_live = compile_all(&spec.env_liveness, strip_always_eventually)?;
    let sys_live = compile_all(&spec.sys_liveness, strip_always_eventually)?;
    let env_init = StepExpr::compile(&spec.env_init, &enc)?;
    let sys_init = StepExpr::compile(&spec.sys_init, &enc)?;

    let n_states = enc.n_states();
    let sensor_vals = Encoding::submasks(enc.sensor_mask);
    let system_vals = Encoding::submasks(enc.system_mask);

    let mut env_moves = Vec::with_capacity(n_states);
    let mut sys_moves = Vec::with_capacity(n_states);
    for s in 0..n_states as u32 {
        let mut moves = Vec::new();
        let mut replies = Vec::new();
        for &x in &sensor_vals {
            if !env_safety.iter().all(|e| e.eval(s, x)) {
                continue;
            }
            moves.push(x);
            replies.push(
                system_vals
                    .iter()
                    .map(|&y| x | y)
                    .filter(|&t| sys_safety.iter().all(|e| e.eval(s, t)))
                    .collect::<Vec<u32>>(),
            );
        }
        env_moves.push(moves);
        sys_moves.push(replies);
    }
    let states = |e: &StepExpr| (0..n_states as u32).map(|s| e.eval(s, s)).collect::<Vec<bool>>();
    Ok(GameGraph {
        env_init: states(&env_init),
        sys_init: states(&sys_init),
        env_goals: env_live.iter().map(states).collect(),
        sys_goals: sys_live.iter().map(states).collect(),
        env_moves,
        sys_moves,
        enc,
    })
}

impl GameGraph {
    pub fn n_states(&self) -> usize {
        self.env_moves.len()
    }

    /// Sensor valuations allowed by the environment's initial condition.
    pub fn initial_sensor_values(&self) -> Vec<u32> {
        Encoding::submasks(self.enc.sensor_mask).into_iter().filter(|&x| self.env_init[x as usize]).collect()
    }

    /// States the system may start in once the environment picked `x`.
    pub fn initial_states_for(&self, x: u32) -> Vec<u32> {
        Encoding::submasks(self.enc.system_mask)
            .into_iter()
            .map(|y| x | y)
            .filter(|&s| self.sys_init[s as usize])
            .collect()
    }

    pub fn has_initial_state(&self) -> bool {
        self.initial_sensor_values().into_iter().any(|x| !self.initial_states_for(x).is_empty())
    }

    /// Index of env move `x` at `state`, if legal.
    pub fn env_move_index(&self, state: u32, x: u32) -> Option<usize> {
        self.env_moves[state as usize].iter().position(|&m| m == x)
    }

    pub fn transition_count(&self) -> usize {
        self.sys_moves.iter().flatten().map(Vec::len).sum()
    }
}
