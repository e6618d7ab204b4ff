//! Environment assumptions: the initial-state formula read off the scene, and
//! liveness assumptions `G F (conjunction of sensor literals)` mined from a
//! counterstrategy and validated by resynthesis.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{
    build_game, env_assumptions_enforceable, env_assumptions_satisfiable, solve_game, CounterStrategy, GameError, GameGraph, SynthesisResult,
};
use crate::ltl::{Formula, GR1Spec, PropKind};
use crate::world::{SensorSym, World, WorldError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MinerError {
    #[error("sensor `{0}` cannot be evaluated in this world")]
    UnknownSensorType(String),
    #[error("specification is not unrealizable")]
    NotUnrealizable,
    #[error("assumption `{0}` is already part of the specification")]
    DuplicateAssumption(String),
    #[error("max_literals must be at least 1")]
    BadLimit,
    #[error(transparent)]
    Game(#[from] GameError),
}

impl From<WorldError> for MinerError {
    fn from(e: WorldError) -> Self {
        match e {
            WorldError::UnknownSensorType(s) => MinerError::UnknownSensorType(s),
            other => MinerError::UnknownSensorType(other.to_string()),
        }
    }
}

pub const DEFAULT_MAX_LITERALS: usize = 2;

/// Conjunction of every sensor literal, polarity taken from the scene. Order
/// follows `sensors`; repeats are dropped.
pub fn initial_state_assumption(world: &World, sensors: &[SensorSym]) -> Result<Formula, MinerError> {
    let mut seen = BTreeSet::new();
    let mut lits = Vec::new();
    for s in sensors {
        if !seen.insert(s.prop()) {
            continue;
        }
        let v = world.sense_one(s)?;
        lits.push(literal(&s.prop(), v));
    }
    // keep the caller's order; Formula::and would sort
    Ok(match lits.len() {
        0 => Formula::True,
        1 => lits.pop().unwrap(),
        _ => Formula::And(lits),
    })
}

fn literal(prop: &str, positive: bool) -> Formula {
    if positive {
        Formula::prop(prop)
    } else {
        Formula::not(Formula::prop(prop))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub prop: String,
    pub positive: bool,
}

impl Literal {
    pub fn formula(&self) -> Formula {
        literal(&self.prop, self.positive)
    }
}

/// Ordering key: fewer literals first, then sets that are false in more
/// recurrent counterstrategy nodes, then literal names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankKey {
    pub size: usize,
    pub false_in_cycles: usize,
    pub names: Vec<String>,
}

impl Ord for RankKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.size
            .cmp(&other.size)
            .then(other.false_in_cycles.cmp(&self.false_in_cycles))
            .then_with(|| self.names.cmp(&other.names))
    }
}

impl PartialOrd for RankKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssumptionCandidate {
    literals: Vec<Literal>,
    formula: Formula,
    pub provenance: Vec<usize>,
    pub rank_key: RankKey,
}

impl AssumptionCandidate {
    /// Literals must be nonempty, over distinct propositions.
    pub fn new(literals: Vec<Literal>, provenance: Vec<usize>, false_in_cycles: usize) -> Option<Self> {
        let mut literals = literals;
        literals.sort();
        if literals.is_empty() || literals.windows(2).any(|w| w[0].prop == w[1].prop) {
            return None;
        }
        let formula = candidate_formula(&literals);
        let rank_key = RankKey { size: literals.len(), false_in_cycles, names: literals.iter().map(render).collect() };
        Some(AssumptionCandidate { literals, formula, provenance, rank_key })
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "formula": self.formula.to_string(),
            "literals": self.literals,
            "provenance": self.provenance,
        })
    }
}

fn render(l: &Literal) -> String {
    if l.positive {
        l.prop.clone()
    } else {
        format!("!{}", l.prop)
    }
}

fn candidate_formula(literals: &[Literal]) -> Formula {
    Formula::always_eventually(Formula::and(literals.iter().map(Literal::formula)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    StillUnrealizable,
    EnvUnsatisfiable,
    /// The environment could comply only if the robot helps.
    EnvNotEnforceable,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MiningReport {
    /// Each one alone makes the spec realizable; ranked.
    pub candidates: Vec<AssumptionCandidate>,
    pub rejected: Vec<(AssumptionCandidate, RejectReason)>,
    /// Filled only when `candidates` is empty: satisfiable assumptions that
    /// make more system goals winnable on their own, ranked by that gain.
    pub partial: Vec<AssumptionCandidate>,
}

impl MiningReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "candidates": self.candidates.iter().map(AssumptionCandidate::to_json).collect::<Vec<_>>(),
            "rejected": self.rejected.iter().map(|(c, r)| {
                let mut v = c.to_json();
                v["reason"] = serde_json::to_value(r).unwrap();
                v
            }).collect::<Vec<_>>(),
            "partial": self.partial.iter().map(AssumptionCandidate::to_json).collect::<Vec<_>>(),
        })
    }

    /// Next assumption worth offering: a full repair if any, else the best partial one.
    pub fn best(&self) -> Option<&AssumptionCandidate> {
        self.candidates.first().or_else(|| self.partial.first())
    }
}

fn with_goal(game: &GameGraph, lits: &[(u32, bool)]) -> GameGraph {
    let mut g = game.clone();
    let goal = (0..g.n_states() as u32).map(|s| lits.iter().all(|&(b, pos)| (s & b != 0) == pos)).collect();
    g.env_goals.push(goal);
    g
}

fn sys_goals_won(game: &GameGraph) -> Result<usize, GameError> {
    let mut won = 0;
    for j in 0..game.sys_goals.len() {
        let mut g = game.clone();
        g.sys_goals = vec![game.sys_goals[j].clone()];
        if solve_game(&g)?.is_realizable() {
            won += 1;
        }
    }
    Ok(won)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Enumerate and validate liveness assumptions over up to `max_literals`
/// sensor literals.
pub fn mine_candidates(spec: &GR1Spec, cs: &CounterStrategy, max_literals: usize) -> Result<MiningReport, MinerError> {
    if max_literals == 0 {
        return Err(MinerError::BadLimit);
    }
    let game = build_game(spec)?;
    if !matches!(solve_game(&game)?, SynthesisResult::Unrealizable(_)) {
        return Err(MinerError::NotUnrealizable);
    }
    let sensors: Vec<String> =
        spec.propositions.iter().filter(|p| p.kind == PropKind::Sensor).map(|p| p.name).collect();
    let recurrent = cs.recurrent_nodes();
    let mut pool = Vec::new();
    for k in 1..=max_literals.min(sensors.len()) {
        for props in combinations(sensors.len(), k) {
            for signs in 0u32..(1 << k) {
                let lits: Vec<Literal> = props
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| Literal { prop: sensors[p].clone(), positive: signs & (1 << i) == 0 })
                    .collect();
                let holds = |node: usize| {
                    let s = cs.nodes[node].state;
                    lits.iter().all(|l| cs.enc.bit(&l.prop).is_some_and(|b| (s & b != 0) == l.positive))
                };
                let provenance: Vec<usize> = recurrent.iter().copied().filter(|&n| !holds(n)).collect();
                let n_false = provenance.len();
                pool.extend(AssumptionCandidate::new(lits, provenance, n_false));
            }
        }
    }
    pool.sort_by(|a, b| a.rank_key.cmp(&b.rank_key));

    let bits = |c: &AssumptionCandidate| -> Vec<(u32, bool)> {
        c.literals.iter().map(|l| (game.enc.bit(&l.prop).expect("sensor in encoding"), l.positive)).collect()
    };
    // assumptions the spec already makes cannot change the verdict
    let present: Vec<BTreeSet<Literal>> = spec.env_liveness.iter().filter_map(liveness_literals).collect();
    let mut report = MiningReport::default();
    let mut satisfiable_unrealizable = Vec::new();
    for c in pool {
        let subsumed = report.candidates.iter().any(|a| a.literals.iter().all(|l| c.literals.contains(l)));
        let set: BTreeSet<Literal> = c.literals.iter().cloned().collect();
        if subsumed || present.contains(&set) {
            continue;
        }
        let g = with_goal(&game, &bits(&c));
        if !solve_game(&g)?.is_realizable() {
            if env_assumptions_enforceable(&g) {
                satisfiable_unrealizable.push(c.clone());
            }
            report.rejected.push((c, RejectReason::StillUnrealizable));
        } else if !env_assumptions_satisfiable(&g) {
            report.rejected.push((c, RejectReason::EnvUnsatisfiable));
        } else if !env_assumptions_enforceable(&g) {
            report.rejected.push((c, RejectReason::EnvNotEnforceable));
        } else {
            report.candidates.push(c);
        }
    }
    if report.candidates.is_empty() && game.sys_goals.len() > 1 {
        let base = sys_goals_won(&game)?;
        let mut gains = Vec::new();
        for c in satisfiable_unrealizable {
            let won = sys_goals_won(&with_goal(&game, &bits(&c)))?;
            if won > base {
                gains.push((won, c));
            }
        }
        // larger gain first; the sort is stable so rank order breaks ties
        gains.sort_by(|a, b| b.0.cmp(&a.0));
        report.partial = gains.into_iter().map(|(_, c)| c).collect();
    }
    Ok(report)
}

/// Literal set of a `G F (literal conjunction)` formula, if it has that shape.
pub fn liveness_literals(f: &Formula) -> Option<BTreeSet<Literal>> {
    let Formula::Always(inner) = f else { return None };
    let Formula::Eventually(body) = &**inner else { return None };
    let parts: Vec<&Formula> = match &**body {
        Formula::And(fs) => fs.iter().collect(),
        other => vec![other],
    };
    parts
        .into_iter()
        .map(|p| match p {
            Formula::Prop(n) => Some(Literal { prop: n.clone(), positive: true }),
            Formula::Not(b) => match &**b {
                Formula::Prop(n) => Some(Literal { prop: n.clone(), positive: false }),
                _ => None,
            },
            _ => None,
        })
        .collect()
}

/// The spec with the candidate's formula appended to env_liveness.
pub fn apply_candidate(spec: &GR1Spec, c: &AssumptionCandidate) -> Result<GR1Spec, MinerError> {
    let lits: BTreeSet<Literal> = c.literals.iter().cloned().collect();
    let dup = spec
        .env_liveness
        .iter()
        .any(|f| f == &c.formula || liveness_literals(f).is_some_and(|l| l == lits));
    if dup {
        return Err(MinerError::DuplicateAssumption(c.formula.to_string()));
    }
    let mut out = spec.clone();
    out.env_liveness.push(c.formula.clone());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::check_realizability;
    use crate::grounding::{make_scope, spec_from_scopes};
    use crate::ltl::parse_formula;
    use crate::world::{bundled_world, ActionSym, Color, Side, Task};

    fn spec_for(actions: &[ActionSym], task: Task) -> GR1Spec {
        let scopes: Vec<_> = actions.iter().map(|a| make_scope(*a, task).unwrap()).collect();
        spec_from_scopes(&scopes, task).unwrap()
    }

    fn mine(spec: &GR1Spec) -> MiningReport {
        let SynthesisResult::Unrealizable(cs) = check_realizability(spec).unwrap() else {
            panic!("expected unrealizable")
        };
        mine_candidates(spec, &cs, DEFAULT_MAX_LITERALS).unwrap()
    }

    #[test]
    fn sorting_initial_formula() {
        let w = bundled_world("sorting_env2").unwrap();
        let sensors = [
            SensorSym::observed(Color::Blue),
            SensorSym::bin_clear(Side::Right),
            SensorSym::observed(Color::Red),
            SensorSym::bin_clear(Side::Left),
        ];
        let f = initial_state_assumption(&w, &sensors).unwrap();
        assert_eq!(f.to_string(), "observed_cube_blue & right_bin_clear & observed_cube_red & left_bin_clear");
        let missing = initial_state_assumption(&w, &[SensorSym::understack(Color::Red)]);
        assert!(missing.is_ok(), "understack is defined on any scene");
    }

    #[test]
    fn single_sensor_assumption_for_sorting_pickup() {
        let spec = spec_for(&[ActionSym::pickup(Side::Right, Color::Blue)], Task::Sorting);
        let r = mine(&spec);
        assert_eq!(r.candidates[0].formula().to_string(), "G (F (observed_cube_blue))");
        let fixed = apply_candidate(&spec, &r.candidates[0]).unwrap();
        assert_eq!(fixed.env_liveness.len(), spec.env_liveness.len() + 1);
        assert!(check_realizability(&fixed).unwrap().is_realizable());
        assert!(matches!(apply_candidate(&fixed, &r.candidates[0]), Err(MinerError::DuplicateAssumption(_))));
    }

    #[test]
    fn two_sensor_assumption_for_stacking_take() {
        let spec = spec_for(&[ActionSym::pickup(Side::Right, Color::Red)], Task::Stacking);
        let r = mine(&spec);
        let want = parse_formula("G (F (observed_cube_red & !understack_cube_red))", &spec.propositions).unwrap();
        assert_eq!(r.candidates[0].formula(), &want);
        assert!(r.rejected.iter().any(|(c, _)| c.formula().to_string() == "G (F (observed_cube_red))"));
    }

    #[test]
    fn pick_and_bin_needs_a_joint_assumption() {
        let spec = spec_for(&[ActionSym::pickup(Side::Right, Color::Blue), ActionSym::place_bin(Side::Right)], Task::Sorting);
        let r = mine(&spec);
        let first = r.best().unwrap().formula().to_string();
        assert_eq!(first, "G (F (observed_cube_blue & right_bin_clear))", "{:#?}", r.to_json());
    }

    #[test]
    fn realizable_spec_is_not_mined() {
        let spec = spec_for(&[ActionSym::pickup(Side::Right, Color::Blue)], Task::Sorting);
        let r = mine(&spec);
        let fixed = apply_candidate(&spec, &r.candidates[0]).unwrap();
        let SynthesisResult::Unrealizable(cs) = check_realizability(&spec).unwrap() else { unreachable!() };
        assert_eq!(mine_candidates(&fixed, &cs, 2), Err(MinerError::NotUnrealizable));
    }

    #[test]
    fn rank_prefers_small_then_frequent() {
        let a = RankKey { size: 1, false_in_cycles: 3, names: vec!["b".into()] };
        let b = RankKey { size: 1, false_in_cycles: 1, names: vec!["a".into()] };
        let c = RankKey { size: 2, false_in_cycles: 9, names: vec!["a".into()] };
        assert!(a < b && b < c);
    }

    #[test]
    fn candidate_rejects_repeated_props() {
        let l = |p: &str, s| Literal { prop: p.into(), positive: s };
        assert!(AssumptionCandidate::new(vec![l("a", true), l("a", false)], vec![], 0).is_none());
        assert!(AssumptionCandidate::new(vec![], vec![], 0).is_none());
        let c = AssumptionCandidate::new(vec![l("b", false), l("a", true)], vec![], 0).unwrap();
        assert_eq!(liveness_literals(c.formula()).unwrap(), c.literals().iter().cloned().collect());
    }
}
