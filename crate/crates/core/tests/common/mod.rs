//! Oracles shared by the integration tests and the acceptance runner. None of
//! them call into the crate's solver or evaluator.

#![allow(dead_code)]

pub mod parity;

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::Rng;
use repair_core::game::{CounterStrategy, Strategy};
use repair_core::ltl::{Formula, GR1Spec, PropKind, PropTable, Proposition, Valuation};

/// A spec compiled to index-based evaluation: props in declaration order,
/// sensors first.
pub struct Compiled {
    pub names: Vec<String>,
    pub sensor: Vec<bool>,
    pub spec: GR1Spec,
}

pub type State = Vec<bool>;

impl Compiled {
    pub fn new(spec: &GR1Spec) -> Self {
        let mut names: Vec<(bool, String)> =
            spec.propositions.iter().map(|p| (p.kind != PropKind::Sensor, p.name.clone())).collect();
        names.sort();
        Compiled {
            sensor: names.iter().map(|(sys, _)| !sys).collect(),
            names: names.into_iter().map(|(_, n)| n).collect(),
            spec: spec.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn states(&self) -> Vec<State> {
        (0..1u32 << self.n()).map(|b| (0..self.n()).map(|i| b >> i & 1 == 1).collect()).collect()
    }

    pub fn index(&self, s: &State) -> usize {
        s.iter().enumerate().map(|(i, &v)| (v as usize) << i).sum()
    }

    pub fn sensors_of(&self, s: &State) -> Vec<bool> {
        s.iter().zip(&self.sensor).filter(|(_, &k)| k).map(|(&v, _)| v).collect()
    }

    pub fn from_valuation(&self, v: &Valuation) -> State {
        self.names.iter().map(|n| v.get(n).expect("valuation covers all props")).collect()
    }

    pub fn to_valuation(&self, s: &State) -> Valuation {
        Valuation::from_pairs(self.names.iter().map(String::as_str).zip(s.iter().copied()))
    }

    fn lookup(&self, name: &str) -> usize {
        self.names.iter().position(|n| n == name).unwrap_or_else(|| panic!("unknown prop {name}"))
    }

    /// Value of a formula over a current and next state; `X` reads the next.
    pub fn eval(&self, f: &Formula, cur: &State, nxt: &State) -> bool {
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Prop(p) => cur[self.lookup(p)],
            Formula::Not(a) => !self.eval(a, cur, nxt),
            Formula::And(xs) => xs.iter().all(|x| self.eval(x, cur, nxt)),
            Formula::Or(xs) => xs.iter().any(|x| self.eval(x, cur, nxt)),
            Formula::Implies(a, b) => !self.eval(a, cur, nxt) || self.eval(b, cur, nxt),
            Formula::Next(a) => self.eval(a, nxt, nxt),
            other => panic!("not a step formula: {other:?}"),
        }
    }

    fn strip<'a>(f: &'a Formula) -> &'a Formula {
        match f {
            Formula::Always(a) => match &**a {
                Formula::Eventually(b) => b,
                _ => a,
            },
            other => other,
        }
    }

    pub fn env_init(&self, s: &State) -> bool {
        self.eval(&self.spec.env_init, s, s)
    }

    pub fn sys_init(&self, s: &State) -> bool {
        self.eval(&self.spec.sys_init, s, s)
    }

    pub fn env_ok(&self, cur: &State, nxt: &State) -> bool {
        self.spec.env_safety.iter().all(|f| self.eval(Self::strip(f), cur, nxt))
    }

    pub fn sys_ok(&self, cur: &State, nxt: &State) -> bool {
        self.spec.sys_safety.iter().all(|f| self.eval(Self::strip(f), cur, nxt))
    }

    /// Goal sets, with an empty list read as the single goal `true`.
    fn goals(&self, list: &[Formula]) -> Vec<Vec<bool>> {
        let states = self.states();
        if list.is_empty() {
            return vec![vec![true; states.len()]];
        }
        list.iter().map(|f| states.iter().map(|s| self.eval(Self::strip(f), s, s)).collect()).collect()
    }

    pub fn env_goals(&self) -> Vec<Vec<bool>> {
        self.goals(&self.spec.env_liveness)
    }

    pub fn sys_goals(&self) -> Vec<Vec<bool>> {
        self.goals(&self.spec.sys_liveness)
    }

    /// Full states reachable in one step by sensor values `x`.
    pub fn with_sensors(&self, x: &[bool]) -> Vec<State> {
        self.states().into_iter().filter(|s| self.sensors_of(s) == x).collect()
    }

    pub fn sensor_values(&self) -> Vec<Vec<bool>> {
        let k = self.sensor.iter().filter(|&&s| s).count();
        (0..1u32 << k).map(|b| (0..k).map(|i| b >> i & 1 == 1).collect()).collect()
    }

    /// Legal env moves from `cur`: sensor values whose every completion
    /// passes env safety (env safety never reads next system values).
    pub fn env_moves(&self, cur: &State) -> Vec<Vec<bool>> {
        self.sensor_values().into_iter().filter(|x| self.with_sensors(x).iter().all(|t| self.env_ok(cur, t))).collect()
    }

    pub fn sys_replies(&self, cur: &State, x: &[bool]) -> Vec<State> {
        self.with_sensors(x).into_iter().filter(|t| self.sys_ok(cur, t)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    Realizable,
    Unsatisfiable,
    Unrealizable,
}

/// Realizability through a parity game: GR(1) winning condition encoded with
/// goal counters as a one-pair Streett condition, priorities 2 (sys counter
/// wraps), 1 (env counter wraps), 0.
pub fn oracle_verdict(c: &Compiled) -> OracleVerdict {
    let states = c.states();
    let eg = c.env_goals();
    let sg = c.sys_goals();
    let (ne, ns) = (eg.len(), sg.len());
    let mut g = parity::Game::default();
    let win = g.add(0, 2);
    let lose = g.add(0, 1);
    g.succ[win].push(win);
    g.succ[lose].push(lose);
    let mut env_node = BTreeMap::new();
    for (si, _) in states.iter().enumerate() {
        for i in 0..ne {
            for j in 0..ns {
                let prio = if sg[j][si] && j == ns - 1 {
                    2
                } else if eg[i][si] && i == ne - 1 {
                    1
                } else {
                    0
                };
                env_node.insert((si, i, j), g.add(1, prio));
            }
        }
    }
    for (si, s) in states.iter().enumerate() {
        let moves = c.env_moves(s);
        for i in 0..ne {
            for j in 0..ns {
                let v = env_node[&(si, i, j)];
                let i2 = if eg[i][si] { (i + 1) % ne } else { i };
                let j2 = if sg[j][si] { (j + 1) % ns } else { j };
                if moves.is_empty() {
                    g.succ[v].push(win);
                }
                for x in &moves {
                    let w = g.add(0, 0);
                    g.succ[v].push(w);
                    let replies = c.sys_replies(s, x);
                    if replies.is_empty() {
                        g.succ[w].push(lose);
                    }
                    for t in replies {
                        let tw = env_node[&(c.index(&t), i2, j2)];
                        g.succ[w].push(tw);
                    }
                }
            }
        }
    }
    let w0 = g.solve();
    let realizable = c.sensor_values().iter().all(|x| {
        let inits: Vec<State> = c.with_sensors(x).into_iter().filter(|s| c.env_init(s)).collect();
        inits.is_empty()
            || c.with_sensors(x)
                .iter()
                .any(|s| c.env_init(s) && c.sys_init(s) && w0[env_node[&(c.index(s), 0, 0)]])
    });
    if realizable {
        OracleVerdict::Realizable
    } else if !cooperative_lasso(c) {
        OracleVerdict::Unsatisfiable
    } else {
        OracleVerdict::Unrealizable
    }
}

/// Some run from a jointly initial state obeying both safeties visits every
/// env and sys goal infinitely often.
pub fn cooperative_lasso(c: &Compiled) -> bool {
    let states = c.states();
    let succ: Vec<Vec<usize>> = states
        .iter()
        .map(|s| {
            states.iter().enumerate().filter(|(_, t)| c.env_ok(s, t) && c.sys_ok(s, t)).map(|(k, _)| k).collect()
        })
        .collect();
    let init: Vec<usize> = (0..states.len()).filter(|&k| c.env_init(&states[k]) && c.sys_init(&states[k])).collect();
    let goals: Vec<Vec<bool>> = c.env_goals().into_iter().chain(c.sys_goals()).collect();
    let keep = vec![true; states.len()];
    fair_cycle(&succ, &init, &keep, &goals)
}

fn reach(succ: &[Vec<usize>], from: &[usize], keep: &[bool]) -> Vec<bool> {
    let mut seen = vec![false; succ.len()];
    let mut stack: Vec<usize> = from.iter().copied().filter(|&v| keep[v]).collect();
    for &v in &stack {
        seen[v] = true;
    }
    while let Some(v) = stack.pop() {
        for &w in &succ[v] {
            if keep[w] && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// Is there a cycle, reachable from `init` inside `keep`, whose strongly
/// connected component meets every goal set?
pub fn fair_cycle(succ: &[Vec<usize>], init: &[usize], keep: &[bool], goals: &[Vec<bool>]) -> bool {
    let reachable = reach(succ, init, keep);
    let n = succ.len();
    for v in (0..n).filter(|&v| reachable[v]) {
        let fwd = reach(succ, &succ[v].iter().copied().filter(|&w| keep[w]).collect::<Vec<_>>(), keep);
        if !fwd[v] {
            continue;
        }
        // component of v: nodes reachable from v that reach v
        let comp: Vec<usize> = (0..n).filter(|&w| fwd[w] && reach(succ, &[w], keep)[v]).collect();
        if goals.iter().all(|g| comp.iter().any(|&w| g[w])) {
            return true;
        }
    }
    false
}

/// Problems with a controller, judged against the spec alone.
pub fn strategy_faults(c: &Compiled, st: &Strategy) -> Vec<String> {
    let mut faults = Vec::new();
    let states: Vec<State> = (0..st.nodes.len()).map(|k| c.from_valuation(&st.valuation(k))).collect();
    for x in c.sensor_values() {
        let env_ok = c.with_sensors(&x).iter().any(|s| c.env_init(s));
        if env_ok
            && !st.initial.iter().any(|&k| c.sensors_of(&states[k]) == x && c.env_init(&states[k]) && c.sys_init(&states[k]))
        {
            faults.push(format!("no initial node for sensors {x:?}"));
        }
    }
    let mut succ = vec![vec![]; states.len()];
    for (k, s) in states.iter().enumerate() {
        for x in c.env_moves(s) {
            let names = c.names.iter().zip(&c.sensor).filter(|(_, k)| **k).map(|(n, _)| n.as_str());
            let v = Valuation::from_pairs(names.zip(x.iter().copied()));
            match st.step(k, &v) {
                None => faults.push(format!("node {k}: no reply to legal move {x:?}")),
                Some(t) => {
                    if c.sensors_of(&states[t]) != x {
                        faults.push(format!("node {k}: successor ignores move {x:?}"));
                    }
                    if !c.sys_ok(s, &states[t]) {
                        faults.push(format!("node {k}: reply to {x:?} breaks sys safety"));
                    }
                    succ[k].push(t);
                }
            }
        }
    }
    let eg = c.env_goals();
    let sg = c.sys_goals();
    let idx: Vec<usize> = states.iter().map(|s| c.index(s)).collect();
    let env_sets: Vec<Vec<bool>> = eg.iter().map(|g| idx.iter().map(|&i| g[i]).collect()).collect();
    for (j, g) in sg.iter().enumerate() {
        let keep: Vec<bool> = idx.iter().map(|&i| !g[i]).collect();
        if fair_cycle(&succ, &st.initial, &keep, &env_sets) {
            faults.push(format!("a play meets every env goal but starves sys goal {j}"));
        }
    }
    faults
}

/// Problems with a counterstrategy: it must play legal moves, answer every
/// legal system reply, and make every infinite play satisfy the env goals
/// while starving some sys goal.
pub fn counterstrategy_faults(c: &Compiled, cs: &CounterStrategy) -> Vec<String> {
    let mut faults = Vec::new();
    let states: Vec<State> = (0..cs.nodes.len()).map(|k| c.from_valuation(&cs.valuation(k))).collect();
    let enc = &cs.enc;
    let decode = |bits: u32| c.from_valuation(&enc.decode(bits));
    if cs.initial.is_empty() {
        faults.push("no initial node".into());
    } else {
        let x = c.sensors_of(&states[cs.initial[0]]);
        if !c.with_sensors(&x).iter().any(|s| c.env_init(s)) {
            faults.push("initial sensors violate env_init".into());
        }
        for s in c.with_sensors(&x).into_iter().filter(|s| c.env_init(s) && c.sys_init(s)) {
            if !cs.initial.iter().any(|&k| states[k] == s) {
                faults.push(format!("initial system choice {s:?} not covered"));
            }
        }
    }
    let mut succ = vec![vec![]; states.len()];
    for (k, s) in states.iter().enumerate() {
        let x = c.sensors_of(&decode(cs.nodes[k].env_move));
        if !c.env_moves(s).contains(&x) {
            faults.push(format!("node {k}: illegal env move {x:?}"));
            continue;
        }
        let mut want: Vec<State> = c.sys_replies(s, &x);
        let mut got: Vec<State> = cs.nodes[k].next.iter().map(|(t, _)| decode(*t)).collect();
        want.sort();
        got.sort();
        if want != got {
            faults.push(format!("node {k}: replies {got:?} differ from legal {want:?}"));
        }
        for (t, n) in &cs.nodes[k].next {
            if states[*n] != decode(*t) {
                faults.push(format!("node {k}: successor node does not hold the reply"));
            }
            succ[k].push(*n);
        }
    }
    let idx: Vec<usize> = states.iter().map(|s| c.index(s)).collect();
    let keep_all = vec![true; states.len()];
    let sys_sets: Vec<Vec<bool>> = c.sys_goals().iter().map(|g| idx.iter().map(|&i| g[i]).collect()).collect();
    if fair_cycle(&succ, &cs.initial, &keep_all, &sys_sets) {
        faults.push("some play meets every sys goal".into());
    }
    for (i, g) in c.env_goals().iter().enumerate() {
        let keep: Vec<bool> = idx.iter().map(|&k| !g[k]).collect();
        if fair_cycle(&succ, &cs.initial, &keep, &[]) {
            faults.push(format!("some play starves env goal {i}"));
        }
    }
    faults
}

// ---------------------------------------------------------------- generators

pub fn props(n_sensors: usize, n_sys: usize) -> PropTable {
    let mut ps = Vec::new();
    for i in 0..n_sensors {
        ps.push(Proposition::sensor(&format!("s{i}")));
    }
    for i in 0..n_sys {
        ps.push(Proposition::action(&format!("y{i}")));
    }
    PropTable::from_props(ps).unwrap()
}

fn lit(name: String, pos: bool) -> Formula {
    if pos {
        Formula::prop(name)
    } else {
        Formula::not(Formula::prop(name))
    }
}

/// Random atom: a literal over the given names, optionally under `X`.
fn atom(rng: &mut StdRng, cur: &[String], next: &[String]) -> Formula {
    let total = cur.len() + next.len();
    let k = rng.gen_range(0..total);
    let pos = rng.gen_bool(0.5);
    if k < cur.len() {
        lit(cur[k].clone(), pos)
    } else if pos {
        Formula::next(Formula::prop(next[k - cur.len()].clone()))
    } else {
        Formula::not(Formula::next(Formula::prop(next[k - cur.len()].clone())))
    }
}

fn boolean(rng: &mut StdRng, depth: usize, cur: &[String], next: &[String]) -> Formula {
    if depth == 0 || rng.gen_bool(0.35) {
        return atom(rng, cur, next);
    }
    let a = boolean(rng, depth - 1, cur, next);
    let b = boolean(rng, depth - 1, cur, next);
    match rng.gen_range(0..3) {
        0 => Formula::And(vec![a, b]),
        1 => Formula::Or(vec![a, b]),
        _ => Formula::implies(a, b),
    }
}

/// Random well-formed GR(1) spec with the given proposition counts.
pub fn random_spec(rng: &mut StdRng, n_sensors: usize, n_sys: usize) -> GR1Spec {
    let table = props(n_sensors, n_sys);
    let s: Vec<String> = (0..n_sensors).map(|i| format!("s{i}")).collect();
    let y: Vec<String> = (0..n_sys).map(|i| format!("y{i}")).collect();
    let all: Vec<String> = s.iter().chain(&y).cloned().collect();
    let pick = |rng: &mut StdRng, n: usize| rng.gen_range(0..=n);
    let env_init = if rng.gen_bool(0.5) { Formula::True } else { atom(rng, &s, &[]) };
    let sys_init = if rng.gen_bool(0.5) { Formula::True } else { atom(rng, &y, &[]) };
    let n = pick(rng, 2);
    let env_safety = (0..n).map(|_| Formula::always(boolean(rng, 2, &all, &s))).collect();
    let n = pick(rng, 2);
    let sys_safety = (0..n).map(|_| Formula::always(boolean(rng, 2, &all, &all))).collect();
    let n = pick(rng, 2);
    let env_liveness = (0..n).map(|_| Formula::always_eventually(boolean(rng, 1, &all, &[]))).collect();
    let n = pick(rng, 2);
    let sys_liveness = (0..n).map(|_| Formula::always_eventually(boolean(rng, 1, &all, &[]))).collect();
    GR1Spec { propositions: table, env_init, env_safety, env_liveness, sys_init, sys_safety, sys_liveness }
}

/// Every spec over one sensor `s0` and one system proposition `y0` with at
/// most one formula per slot drawn from small literal families.
pub fn exhaustive_small_specs() -> Vec<GR1Spec> {
    let s = || Formula::prop("s0");
    let y = || Formula::prop("y0");
    let xs = || Formula::next(s());
    let xy = || Formula::next(y());
    let neg = Formula::not;
    let state_lits = || vec![s(), neg(s()), y(), neg(y())];
    let mut env_safety = vec![None];
    for a in std::iter::once(Formula::True).chain(state_lits()) {
        for b in [xs(), neg(xs())] {
            env_safety.push(Some(Formula::always(guarded(&a, b))));
        }
    }
    let mut sys_safety = vec![None];
    for a in std::iter::once(Formula::True).chain(state_lits()).chain([xs(), neg(xs())]) {
        for b in [xy(), neg(xy())] {
            sys_safety.push(Some(Formula::always(guarded(&a, b))));
        }
    }
    let live: Vec<Option<Formula>> =
        std::iter::once(None).chain(state_lits().into_iter().map(|f| Some(Formula::always_eventually(f)))).collect();
    let mut out = Vec::new();
    for env_init in [Formula::True, s(), neg(s())] {
        for sys_init in [Formula::True, y(), neg(y())] {
            for es in &env_safety {
                for ss in &sys_safety {
                    for el in &live {
                        for sl in &live {
                            out.push(GR1Spec {
                                propositions: props(1, 1),
                                env_init: env_init.clone(),
                                env_safety: es.iter().cloned().collect(),
                                env_liveness: el.iter().cloned().collect(),
                                sys_init: sys_init.clone(),
                                sys_safety: ss.iter().cloned().collect(),
                                sys_liveness: sl.iter().cloned().collect(),
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

fn guarded(a: &Formula, b: Formula) -> Formula {
    if *a == Formula::True {
        b
    } else {
        Formula::implies(a.clone(), b)
    }
}

// ------------------------------------------------------------ LTL unfolding

/// Truth of `f` at position `i` of the lasso `trace[..loopback] (trace[loopback..])^ω`,
/// by direct recursion on the definitions. Every suffix of a lasso is one of
/// `trace.len()` distinct suffixes, so quantifiers range over one period.
pub fn unfold(f: &Formula, trace: &[Valuation], loopback: usize, i: usize) -> bool {
    let n = trace.len();
    let pos = |k: usize| if k < n { k } else { loopback + (k - loopback) % (n - loopback) };
    let i = pos(i);
    // n consecutive positions from i visit every suffix reachable from i
    let span = i..i + n;
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Prop(p) => trace[i].get(p).unwrap_or(false),
        Formula::Not(a) => !unfold(a, trace, loopback, i),
        Formula::And(xs) => xs.iter().all(|x| unfold(x, trace, loopback, i)),
        Formula::Or(xs) => xs.iter().any(|x| unfold(x, trace, loopback, i)),
        Formula::Implies(a, b) => !unfold(a, trace, loopback, i) || unfold(b, trace, loopback, i),
        Formula::Next(a) => unfold(a, trace, loopback, pos(i + 1)),
        Formula::Always(a) => span.clone().all(|k| unfold(a, trace, loopback, pos(k))),
        Formula::Eventually(a) => span.clone().any(|k| unfold(a, trace, loopback, pos(k))),
        Formula::Until(a, b) => {
            for k in span {
                if unfold(b, trace, loopback, pos(k)) {
                    return true;
                }
                if !unfold(a, trace, loopback, pos(k)) {
                    return false;
                }
            }
            false
        }
    }
}

/// All formulas over `a`, `b` with at most `depth` nested operators.
pub fn small_formulas(depth: usize) -> Vec<Formula> {
    let mut level: Vec<Formula> = vec![Formula::True, Formula::False, Formula::prop("a"), Formula::prop("b")];
    for _ in 0..depth {
        let mut next = level.clone();
        for f in &level {
            next.push(Formula::Not(Box::new(f.clone())));
            next.push(Formula::Next(Box::new(f.clone())));
            next.push(Formula::Always(Box::new(f.clone())));
            next.push(Formula::Eventually(Box::new(f.clone())));
        }
        for f in &level {
            for g in &level {
                next.push(Formula::And(vec![f.clone(), g.clone()]));
                next.push(Formula::Or(vec![f.clone(), g.clone()]));
                next.push(Formula::Implies(Box::new(f.clone()), Box::new(g.clone())));
                next.push(Formula::Until(Box::new(f.clone()), Box::new(g.clone())));
            }
        }
        next.sort();
        next.dedup();
        level = next;
    }
    level
}

/// Every lasso over `a`, `b` with at most `max_len` positions.
pub fn small_lassos(max_len: usize) -> Vec<(Vec<Valuation>, usize)> {
    let mut out = Vec::new();
    for len in 1..=max_len {
        for bits in 0..1u32 << (2 * len) {
            let trace: Vec<Valuation> = (0..len)
                .map(|k| Valuation::from_pairs([("a", bits >> (2 * k) & 1 == 1), ("b", bits >> (2 * k + 1) & 1 == 1)]))
                .collect();
            for lb in 0..len {
                out.push((trace.clone(), lb));
            }
        }
    }
    out
}

// ------------------------------------------------------------------- sweeps

#[derive(Debug, Default)]
pub struct Sweep {
    pub cases: usize,
    pub agree: usize,
    pub realizable: usize,
    pub unrealizable: usize,
    pub unsatisfiable: usize,
    pub mismatches: Vec<String>,
    /// Controller or counterstrategy faults found by the exhaustive checks.
    pub faults: Vec<String>,
}

/// Compare the crate's verdict with the oracle on every spec and check every
/// produced strategy or counterstrategy.
pub fn sweep(specs: &[GR1Spec], check_witnesses: bool) -> Sweep {
    use repair_core::game::{check_realizability, SynthesisResult};
    let mut r = Sweep::default();
    for spec in specs {
        r.cases += 1;
        let c = Compiled::new(spec);
        let want = oracle_verdict(&c);
        let got = match check_realizability(spec) {
            Ok(x) => x,
            Err(e) => {
                r.mismatches.push(format!("{}: error {e}", spec.dump_json()));
                continue;
            }
        };
        let got_v = match &got {
            SynthesisResult::Realizable(_) => OracleVerdict::Realizable,
            SynthesisResult::Unrealizable(_) => OracleVerdict::Unrealizable,
            SynthesisResult::Unsatisfiable => OracleVerdict::Unsatisfiable,
        };
        match want {
            OracleVerdict::Realizable => r.realizable += 1,
            OracleVerdict::Unrealizable => r.unrealizable += 1,
            OracleVerdict::Unsatisfiable => r.unsatisfiable += 1,
        }
        if got_v == want {
            r.agree += 1;
        } else {
            r.mismatches.push(format!("{}: crate {got_v:?}, oracle {want:?}", spec.dump_json()));
        }
        if check_witnesses {
            let faults = match &got {
                SynthesisResult::Realizable(st) => strategy_faults(&c, st),
                SynthesisResult::Unrealizable(cs) => counterstrategy_faults(&c, cs),
                SynthesisResult::Unsatisfiable => vec![],
            };
            for f in faults {
                r.faults.push(format!("{}: {f}", spec.dump_json()));
            }
        }
    }
    r
}

pub fn random_specs(seed: u64, count: usize) -> Vec<GR1Spec> {
    use rand::SeedableRng;
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let ns = rng.gen_range(1..=3);
            let ny = rng.gen_range(1..=3);
            random_spec(&mut rng, ns, ny)
        })
        .collect()
}

/// Can the environment alone keep env safety and visit every env goal
/// forever, whatever safe replies the system makes? Solved as a parity game
/// with the environment as the even player.
pub fn env_enforceable(c: &Compiled) -> bool {
    let states = c.states();
    let eg = c.env_goals();
    let ne = eg.len();
    let mut g = parity::Game::default();
    let win = g.add(0, 2);
    let lose = g.add(0, 1);
    g.succ[win].push(win);
    g.succ[lose].push(lose);
    let mut node = BTreeMap::new();
    for si in 0..states.len() {
        for i in 0..ne {
            node.insert((si, i), g.add(0, if eg[i][si] && i == ne - 1 { 2 } else { 1 }));
        }
    }
    for (si, s) in states.iter().enumerate() {
        let moves = c.env_moves(s);
        for i in 0..ne {
            let v = node[&(si, i)];
            let i2 = if eg[i][si] { (i + 1) % ne } else { i };
            if moves.is_empty() {
                g.succ[v].push(lose);
            }
            for x in &moves {
                let w = g.add(1, 1);
                g.succ[v].push(w);
                let replies = c.sys_replies(s, x);
                if replies.is_empty() {
                    g.succ[w].push(win);
                }
                for t in replies {
                    g.succ[w].push(node[&(c.index(&t), i2)]);
                }
            }
        }
    }
    let w = g.solve();
    c.sensor_values().iter().any(|x| {
        let starts: Vec<State> = c.with_sensors(x).into_iter().filter(|s| c.env_init(s) && c.sys_init(s)).collect();
        !starts.is_empty() && starts.iter().all(|s| w[node[&(c.index(s), 0)]])
    })
}

/// A run obeying env_init and env safety (system values free) that visits
/// every env goal infinitely often.
pub fn env_lasso(c: &Compiled) -> bool {
    let states = c.states();
    let succ: Vec<Vec<usize>> =
        states.iter().map(|s| (0..states.len()).filter(|&k| c.env_ok(s, &states[k])).collect()).collect();
    let init: Vec<usize> = (0..states.len()).filter(|&k| c.env_init(&states[k])).collect();
    fair_cycle(&succ, &init, &vec![true; states.len()], &c.env_goals())
}
