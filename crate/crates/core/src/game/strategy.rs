use std::collections::{BTreeMap, VecDeque};

use crate::ltl::{GR1Spec, Valuation};

use super::arena::{build_game_capped, Encoding, GameGraph, DEFAULT_MAX_PROPS};
use super::lasso::fair_lasso_exists;
use super::solve::{EnvSolution, SysSolution, UNRANKED};
use super::GameError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrategyNode {
    pub state: u32,
    /// System goal currently pursued.
    pub goal: usize,
    /// Successor per legal sensor move (sensor bits), ordered by move.
    pub next: Vec<(u32, usize)>,
}

/// Finite-state controller: reads the next sensor values, emits the next
/// system values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Strategy {
    pub enc: Encoding,
    pub nodes: Vec<StrategyNode>,
    pub initial: Vec<usize>,
    pub sys_goals: Vec<Vec<bool>>,
    pub env_goals: Vec<Vec<bool>>,
}

impl Strategy {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn valuation(&self, node: usize) -> Valuation {
        self.enc.decode(self.nodes[node].state)
    }

    pub fn sensors(&self, node: usize) -> Valuation {
        self.enc.decode_masked(self.nodes[node].state, self.enc.sensor_mask)
    }

    pub fn system(&self, node: usize) -> Valuation {
        self.enc.decode_masked(self.nodes[node].state, self.enc.system_mask)
    }

    /// Initial node whose sensor part equals `sensors`.
    pub fn initial_for(&self, sensors: &Valuation) -> Option<usize> {
        let x = self.enc.encode(sensors).ok()?;
        self.initial.iter().copied().find(|&n| self.nodes[n].state & self.enc.sensor_mask == x)
    }

    pub fn step(&self, node: usize, sensors: &Valuation) -> Option<usize> {
        let x = self.enc.encode(sensors).ok()?;
        self.step_bits(node, x)
    }

    pub fn step_bits(&self, node: usize, x: u32) -> Option<usize> {
        self.nodes[node].next.iter().find(|(m, _)| *m == x).map(|(_, n)| *n)
    }

    /// Sys goals satisfied at a node's state.
    pub fn goals_at(&self, node: usize) -> Vec<usize> {
        let s = self.nodes[node].state as usize;
        (0..self.sys_goals.len()).filter(|&j| self.sys_goals[j][s]).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterNode {
    pub state: u32,
    /// Level of the environment's attractor the node belongs to.
    pub level: usize,
    /// Env liveness goal currently pursued.
    pub env_goal: usize,
    /// System goal being starved.
    pub starving: usize,
    /// Sensor values the environment plays from here.
    pub env_move: u32,
    /// Successor per legal system reply (full successor state).
    pub next: Vec<(u32, usize)>,
}

/// Finite-state environment strategy witnessing unrealizability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterStrategy {
    pub enc: Encoding,
    pub nodes: Vec<CounterNode>,
    pub initial: Vec<usize>,
    pub sys_goals: Vec<Vec<bool>>,
    pub env_goals: Vec<Vec<bool>>,
}

impl CounterStrategy {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn valuation(&self, node: usize) -> Valuation {
        self.enc.decode(self.nodes[node].state)
    }

    pub fn env_move(&self, node: usize) -> Valuation {
        self.enc.decode_masked(self.nodes[node].env_move, self.enc.sensor_mask)
    }

    /// Nodes lying on a cycle of the counterstrategy graph.
    pub fn recurrent_nodes(&self) -> Vec<usize> {
        let succ: Vec<Vec<u32>> =
            self.nodes.iter().map(|n| n.next.iter().map(|(_, t)| *t as u32).collect()).collect();
        let comp = super::lasso::scc(self.nodes.len(), &succ);
        (0..self.nodes.len())
            .filter(|&v| succ[v].iter().any(|&t| comp[t as usize] == comp[v]))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SynthesisResult {
    Realizable(Strategy),
    Unsatisfiable,
    Unrealizable(CounterStrategy),
}

impl SynthesisResult {
    pub fn verdict(&self) -> Verdict {
        match self {
            SynthesisResult::Realizable(_) => Verdict::Realizable,
            SynthesisResult::Unsatisfiable => Verdict::Unsatisfiable,
            SynthesisResult::Unrealizable(_) => Verdict::Unrealizable,
        }
    }

    pub fn is_realizable(&self) -> bool {
        matches!(self, SynthesisResult::Realizable(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Realizable,
    Unsatisfiable,
    Unrealizable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unsynthesizable {
    Unsatisfiable,
    Unrealizable,
}

pub fn check_realizability(spec: &GR1Spec) -> Result<SynthesisResult, GameError> {
    check_realizability_capped(spec, DEFAULT_MAX_PROPS)
}

pub fn check_realizability_capped(spec: &GR1Spec, max_props: usize) -> Result<SynthesisResult, GameError> {
    let game = build_game_capped(spec, max_props)?;
    solve_game(&game)
}

/// Realizability on a pre-built arena.
///
/// The environment picks initial sensor values satisfying `env_init`; the
/// system must then be able to pick initial values satisfying `sys_init`
/// inside its winning region.
pub fn solve_game(game: &GameGraph) -> Result<SynthesisResult, GameError> {
    if !game.has_initial_state() {
        return Err(GameError::NoInitialState);
    }
    let sys = game.solve_sys();
    let mut starts = Vec::new();
    let mut losing_x = None;
    for x in game.initial_sensor_values() {
        match game.initial_states_for(x).into_iter().find(|&s| sys.winning[s as usize]) {
            Some(s) => starts.push(s),
            None => {
                losing_x = Some(x);
                break;
            }
        }
    }
    let Some(x) = losing_x else {
        return Ok(SynthesisResult::Realizable(extract_strategy(game, &sys, &starts)?));
    };
    if !cooperatively_satisfiable(game) {
        return Ok(SynthesisResult::Unsatisfiable);
    }
    let env = game.solve_env();
    if env.winning.iter().zip(&sys.winning).any(|(e, s)| e == s) {
        return Err(GameError::Internal("system and environment regions do not partition the arena".into()));
    }
    Ok(SynthesisResult::Unrealizable(extract_counterstrategy(game, &env, x)?))
}

pub fn classify_unsynthesizable(spec: &GR1Spec) -> Result<Unsynthesizable, GameError> {
    match check_realizability(spec)? {
        SynthesisResult::Realizable(_) => Err(GameError::NotApplicable),
        SynthesisResult::Unsatisfiable => Ok(Unsynthesizable::Unsatisfiable),
        SynthesisResult::Unrealizable(_) => Ok(Unsynthesizable::Unrealizable),
    }
}

/// Re-solve with the system also choosing the sensor values: is there any
/// run meeting every initial condition, safety, and liveness on both sides?
pub fn cooperatively_satisfiable(game: &GameGraph) -> bool {
    let n = game.n_states();
    let succ: Vec<Vec<u32>> = game.sys_moves.iter().map(|rs| rs.iter().flatten().copied().collect()).collect();
    let init: Vec<bool> = (0..n).map(|s| game.env_init[s] && game.sys_init[s]).collect();
    let goals: Vec<Vec<bool>> = game.env_goals.iter().chain(&game.sys_goals).cloned().collect();
    fair_lasso_exists(&succ, &init, &goals)
}

/// Can the environment alone produce a run satisfying `env_init`,
/// `env_safety`, and every env liveness goal (system values unconstrained)?
pub fn env_assumptions_satisfiable(game: &GameGraph) -> bool {
    let ys = Encoding::submasks(game.enc.system_mask);
    let succ: Vec<Vec<u32>> = game
        .env_moves
        .iter()
        .map(|xs| xs.iter().flat_map(|&x| ys.iter().map(move |&y| x | y)).collect())
        .collect();
    fair_lasso_exists(&succ, &game.env_init, &game.env_goals)
}

/// Can the environment meet `env_init`, `env_safety`, and every env liveness
/// goal whatever the system does? Stronger than
/// [`env_assumptions_satisfiable`]: an assumption the environment can only
/// keep when the robot cooperates fails here.
pub fn env_assumptions_enforceable(game: &GameGraph) -> bool {
    let n = game.n_states();
    let goals = game.env_goal_sets();
    let mut z = vec![true; n];
    loop {
        let epre_z = game.epre(&z);
        let mut next_z = vec![true; n];
        for goal in &goals {
            let mut y = vec![false; n];
            loop {
                let epre_y = game.epre(&y);
                let next_y: Vec<bool> = (0..n).map(|s| (goal[s] && epre_z[s]) || epre_y[s]).collect();
                if next_y == y {
                    break;
                }
                y = next_y;
            }
            for s in 0..n {
                next_z[s] &= y[s];
            }
        }
        if next_z == z {
            break;
        }
        z = next_z;
    }
    game.initial_sensor_values().into_iter().any(|x| {
        let starts = game.initial_states_for(x);
        !starts.is_empty() && starts.iter().all(|&s| z[s as usize])
    })
}

fn extract_strategy(game: &GameGraph, sol: &SysSolution, starts: &[u32]) -> Result<Strategy, GameError> {
    let goals = game.sys_goal_sets();
    let n_goals = goals.len();
    let key = |j: usize, t: u32| (sol.rank[j][t as usize], !sol.progress[j][t as usize], sol.env_goal[j][t as usize], t);
    let mut index: BTreeMap<(u32, usize), usize> = BTreeMap::new();
    let mut nodes: Vec<StrategyNode> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |s: u32, j: usize, nodes: &mut Vec<StrategyNode>, queue: &mut VecDeque<usize>| {
        *index.entry((s, j)).or_insert_with(|| {
            nodes.push(StrategyNode { state: s, goal: j, next: vec![] });
            queue.push_back(nodes.len() - 1);
            nodes.len() - 1
        })
    };
    let initial: Vec<usize> = starts.iter().map(|&s| intern(s, 0, &mut nodes, &mut queue)).collect();
    while let Some(id) = queue.pop_front() {
        let (s, j) = (nodes[id].state, nodes[id].goal);
        let target = if goals[j][s as usize] { (j + 1) % n_goals } else { j };
        let mut next = Vec::new();
        for (k, &x) in game.env_moves[s as usize].iter().enumerate() {
            let t = game.sys_moves[s as usize][k]
                .iter()
                .copied()
                .filter(|&t| sol.winning[t as usize] && sol.rank[target][t as usize] != UNRANKED)
                .min_by_key(|&t| key(target, t))
                .ok_or_else(|| GameError::Internal(format!("no winning reply at state {s} for move {x}")))?;
            next.push((x, intern(t, target, &mut nodes, &mut queue)));
        }
        nodes[id].next = next;
    }
    Ok(Strategy {
        enc: game.enc.clone(),
        nodes,
        initial,
        sys_goals: game.sys_goals.clone(),
        env_goals: game.env_goals.clone(),
    })
}

fn extract_counterstrategy(game: &GameGraph, sol: &EnvSolution, x0: u32) -> Result<CounterStrategy, GameError> {
    let sys_goals = game.sys_goal_sets();
    let env_goals = game.env_goal_sets();
    let n_env = env_goals.len();
    // memory on entering a fresh level: the level itself and its least starving goal
    let enter = |t: u32| -> Result<(usize, usize), GameError> {
        let k = sol.level[t as usize];
        if k == UNRANKED {
            return Err(GameError::Internal(format!("counterstrategy left the environment region at {t}")));
        }
        let k = k as usize;
        let j = (0..sys_goals.len())
            .find(|&j| sol.starve[k][j][t as usize])
            .ok_or_else(|| GameError::Internal(format!("state {t} has no starving goal")))?;
        Ok((k, j))
    };
    type Key = (u32, usize, usize, usize);
    let mut index: BTreeMap<Key, usize> = BTreeMap::new();
    let mut nodes: Vec<CounterNode> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |key: Key, nodes: &mut Vec<CounterNode>, queue: &mut VecDeque<usize>| {
        *index.entry(key).or_insert_with(|| {
            nodes.push(CounterNode {
                state: key.0,
                level: key.1,
                starving: key.2,
                env_goal: key.3,
                env_move: 0,
                next: vec![],
            });
            queue.push_back(nodes.len() - 1);
            nodes.len() - 1
        })
    };
    let mut initial = Vec::new();
    for s in game.initial_states_for(x0) {
        let (k, j) = enter(s)?;
        initial.push(intern((s, k, j, 0), &mut nodes, &mut queue));
    }
    while let Some(id) = queue.pop_front() {
        let CounterNode { state: s, level: k, starving: j, env_goal: i, .. } = nodes[id];
        let su = s as usize;
        let lower = |t: u32| (sol.level[t as usize] as usize) < k;
        let pick = |ok: &dyn Fn(u32) -> bool| {
            (0..game.env_moves[su].len()).find(|&m| game.sys_moves[su][m].iter().all(|&t| ok(t)))
        };
        let lvl = &sol.reach[k][j][i];
        let (m, next_goal) = if let Some(m) = pick(&|t| sol.level[t as usize] != UNRANKED && lower(t)) {
            (m, None)
        } else if sys_goals[j][su] {
            return Err(GameError::Internal(format!("state {s} visits the starved goal")));
        } else if env_goals[i][su] {
            match pick(&|t| sol.starve[k][j][t as usize]) {
                Some(m) => (m, Some((i + 1) % n_env)),
                None => (
                    pick(&|t| lvl[t as usize] < lvl[su])
                        .ok_or_else(|| GameError::Internal(format!("no environment move at state {s}")))?,
                    Some(i),
                ),
            }
        } else {
            let m = pick(&|t| lvl[t as usize] < lvl[su])
                .ok_or_else(|| GameError::Internal(format!("no environment move at state {s}")))?;
            (m, Some(i))
        };
        let mut next = Vec::new();
        for &t in &game.sys_moves[su][m] {
            let succ_key = match next_goal {
                Some(i2) => (t, k, j, i2),
                None => {
                    let (k2, j2) = enter(t)?;
                    (t, k2, j2, 0)
                }
            };
            next.push((t, intern(succ_key, &mut nodes, &mut queue)));
        }
        let node = &mut nodes[id];
        node.env_move = game.env_moves[su][m];
        node.next = next;
    }
    Ok(CounterStrategy {
        enc: game.enc.clone(),
        nodes,
        initial,
        sys_goals: game.sys_goals.clone(),
        env_goals: game.env_goals.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{parse_formula, PropTable, Proposition};

    fn pickup_spec() -> GR1Spec {
        let props = PropTable::from_props([
            Proposition::sensor("observed_cube_blue"),
            Proposition::action("pickup_right"),
            Proposition::memory("right_gripper"),
        ])
        .unwrap();
        let f = |t: &str| parse_formula(t, &props).unwrap();
        GR1Spec {
            env_init: f("!observed_cube_blue"),
            sys_init: f("!pickup_right & !right_gripper"),
            sys_safety: vec![f("G ((!(X observed_cube_blue) | right_gripper) -> !(X pickup_right))")],
            sys_liveness: vec![f("G F pickup_right")],
            propositions: props,
            ..GR1Spec::default()
        }
    }

    #[test]
    fn pickup_needs_cube_assumption() {
        let spec = pickup_spec();
        let r = check_realizability(&spec).unwrap();
        let SynthesisResult::Unrealizable(cs) = r else { panic!("expected unrealizable, got {:?}", r.verdict()) };
        assert!(!cs.is_empty());
        // the environment never shows the cube on the recurrent part
        for n in cs.recurrent_nodes() {
            assert_eq!(cs.env_move(n).get("observed_cube_blue"), Some(false));
        }
        assert_eq!(classify_unsynthesizable(&spec), Ok(Unsynthesizable::Unrealizable));

        let mut fixed = spec.clone();
        fixed.env_liveness.push(parse_formula("G F observed_cube_blue", &fixed.propositions).unwrap());
        let r = check_realizability(&fixed).unwrap();
        assert!(r.is_realizable());
        assert_eq!(classify_unsynthesizable(&fixed), Err(GameError::NotApplicable));
    }

    #[test]
    fn self_contradiction_is_unsatisfiable() {
        let props = PropTable::from_props([Proposition::sensor("s"), Proposition::action("a")]).unwrap();
        let spec = GR1Spec {
            sys_safety: vec![parse_formula("G !(X a)", &props).unwrap()],
            sys_liveness: vec![parse_formula("G F a", &props).unwrap()],
            propositions: props,
            ..GR1Spec::default()
        };
        assert_eq!(check_realizability(&spec).unwrap(), SynthesisResult::Unsatisfiable);
    }

    #[test]
    fn no_initial_state() {
        let props = PropTable::from_props([Proposition::sensor("s"), Proposition::action("a")]).unwrap();
        let spec = GR1Spec {
            env_init: parse_formula("s & !s", &props).unwrap(),
            propositions: props,
            ..GR1Spec::default()
        };
        assert_eq!(check_realizability(&spec), Err(GameError::NoInitialState));
    }

    #[test]
    fn strategy_is_deterministic_and_total() {
        let mut spec = pickup_spec();
        spec.env_liveness.push(parse_formula("G F observed_cube_blue", &spec.propositions).unwrap());
        let SynthesisResult::Realizable(s) = check_realizability(&spec).unwrap() else { panic!() };
        let again = check_realizability(&spec).unwrap();
        assert_eq!(again, SynthesisResult::Realizable(s.clone()));
        let game = build_game_capped(&spec, DEFAULT_MAX_PROPS).unwrap();
        for n in &s.nodes {
            let moves: Vec<u32> = n.next.iter().map(|(x, _)| *x).collect();
            assert_eq!(moves, game.env_moves[n.state as usize]);
        }
    }
}
