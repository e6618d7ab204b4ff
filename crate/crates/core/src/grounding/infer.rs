use std::collections::BTreeMap;

use serde::Serialize;

use crate::grammar::{cyk_parse, split_instruction, tokenize, Grammar, ParseTree};
use crate::world::{ActionSym, ActionType, Color, Task};

use super::features::{features, FeatureSet, NodeView};
use super::symbols::{ObjectSym, ObjectType, ScopeSym, SpatialRelation, Sym, SymbolSpace, Verb, PRONOUN};
use super::templates::{make_scope, scope_sensors};
use super::GroundingError;
use crate::world::{Side, World};

/// Candidate symbols for a preterminal.
pub fn leaf_candidates() -> Vec<Sym> {
    let mut out = vec![Sym::Null, Sym::Pronoun];
    out.extend(ObjectType::ALL.map(Sym::Type));
    out.extend(Color::ALL.map(Sym::Color));
    out.extend(SpatialRelation::ALL.map(Sym::Spatial));
    out.extend(Verb::ALL.map(Sym::Verb));
    out.sort();
    out
}

/// Context shared by all nodes of an instruction.
#[derive(Clone, Debug, Default)]
pub struct Discourse {
    /// Color of the most recent cube mentioned in an earlier sentence.
    pub antecedent: Option<Color>,
}

fn is_descriptor(s: &Sym) -> bool {
    matches!(s, Sym::Type(_) | Sym::Color(_) | Sym::Spatial(_) | Sym::Object(_))
}

fn cube_color(space: &SymbolSpace, obj: &str, ctx: &Discourse) -> Option<Color> {
    if obj == PRONOUN {
        return ctx.antecedent;
    }
    space.object(obj).filter(|o| o.otype == ObjectType::Cube).and_then(|o| o.color)
}

fn allowed(space: &SymbolSpace, a: &ActionSym) -> bool {
    space.actions.contains(a) && scope_sensors(a, space.task).is_some()
}

/// Scopes for `verb obj prep target`, if the combination means anything.
fn form_scopes(space: &SymbolSpace, ctx: &Discourse, verb: Verb, obj: &str, target: &ObjectSym) -> Option<Vec<ActionSym>> {
    let actions = match (verb, target.otype) {
        (Verb::PickUp, ObjectType::Gripper) => vec![ActionSym::pickup(target.side?, cube_color(space, obj, ctx)?)],
        (Verb::Place, ObjectType::Bin) => vec![ActionSym::place_bin(target.side?)],
        (Verb::Place, ObjectType::Cube) if obj != target.id => vec![ActionSym::place_on(target.color?)],
        (Verb::Sort, ObjectType::Bin) => {
            let side = target.side?;
            vec![ActionSym::pickup(side, cube_color(space, obj, ctx)?), ActionSym::place_bin(side)]
        }
        _ => return None,
    };
    actions.iter().all(|a| allowed(space, a)).then_some(actions)
}

/// Push `actions` as a scope set once per assignment of arms to its pickups.
fn push_armings(space: &SymbolSpace, out: &mut Vec<Sym>, verb: Verb, actions: Vec<ActionSym>) {
    let picks: Vec<usize> = (0..actions.len()).filter(|&i| actions[i].kind == ActionType::PickUp).collect();
    for mask in 0..(1usize << picks.len()) {
        let mut acts = actions.clone();
        for (k, &i) in picks.iter().enumerate() {
            acts[i].arm = if mask & (1 << k) != 0 { Side::Right } else { Side::Left };
        }
        if acts.iter().all(|a| allowed(space, a)) {
            out.push(Sym::scopes(verb, acts));
        }
    }
}

/// Candidate symbols for an internal node given one choice of child symbols.
pub fn compose(space: &SymbolSpace, ctx: &Discourse, left_word: Option<&str>, a: &Sym, b: &Sym) -> Vec<Sym> {
    let mut out = vec![Sym::Null];
    for s in [a, b] {
        if *s != Sym::Null {
            out.push(s.clone());
        }
    }
    if is_descriptor(a) || is_descriptor(b) {
        out.extend(space.objects.iter().map(|o| Sym::Object(o.id.clone())));
    }
    match (a, b) {
        (Sym::Null, Sym::Object(id)) => {
            if let Some(prep) = left_word {
                out.push(Sym::Region { prep: prep.into(), target: id.clone() });
            }
        }
        (Sym::Verb(v), Sym::Object(_) | Sym::Pronoun) => {
            let obj = match b {
                Sym::Object(id) => id.clone(),
                _ => PRONOUN.to_string(),
            };
            if *v == Verb::PickUp {
                if let Some(c) = cube_color(space, &obj, ctx) {
                    for arm in Side::ALL {
                        let act = ActionSym::pickup(arm, c);
                        if allowed(space, &act) {
                            out.push(Sym::scopes(Verb::PickUp, vec![act]));
                        }
                    }
                }
            }
            out.push(Sym::Act { verb: *v, obj });
        }
        (Sym::Object(obj), Sym::Region { prep, target }) => {
            out.push(Sym::Partial { obj: obj.clone(), prep: prep.clone(), target: target.clone() })
        }
        (Sym::Pronoun, Sym::Region { prep, target }) => {
            out.push(Sym::Partial { obj: PRONOUN.into(), prep: prep.clone(), target: target.clone() })
        }
        (Sym::Act { verb, obj }, Sym::Region { target, .. }) => {
            if let Some(t) = space.object(target) {
                if let Some(acts) = form_scopes(space, ctx, *verb, obj, t) {
                    push_armings(space, &mut out, *verb, acts);
                }
            }
        }
        (Sym::Scopes { verb, actions }, Sym::Region { target, .. }) => {
            if space.object(target).is_some_and(|t| t.otype == ObjectType::Gripper) && actions.len() == 1 {
                push_armings(space, &mut out, *verb, actions.clone());
            }
        }
        (Sym::Scopes { verb, actions }, Sym::Scopes { actions: more, .. }) => {
            push_armings(space, &mut out, *verb, actions.iter().chain(more).copied().collect());
        }
        (Sym::Scopes { verb, actions }, Sym::Partial { obj, target, .. }) => {
            if let Some(t) = space.object(target) {
                if let Some(acts) = form_scopes(space, ctx, *verb, obj, t) {
                    push_armings(space, &mut out, *verb, actions.iter().chain(&acts).copied().collect());
                }
            }
        }
        _ => {}
    }
    out.sort();
    out.dedup();
    out
}

/// Weighted feature scorer.
#[derive(Clone, Debug)]
pub struct Scorer<'a> {
    pub features: &'a FeatureSet,
    pub weights: &'a BTreeMap<String, f64>,
    pub space: &'a SymbolSpace,
}

impl Scorer<'_> {
    pub fn score(&self, view: &NodeView, cand: &Sym) -> f64 {
        features(self.features, view, cand, self.space).iter().map(|f| self.weights.get(f).copied().unwrap_or(0.0)).sum()
    }

    /// Log-probabilities of `cands` under the local log-linear factor.
    pub fn log_probs(&self, view: &NodeView, cands: &[Sym]) -> Vec<f64> {
        let scores: Vec<f64> = cands.iter().map(|c| self.score(view, c)).collect();
        let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z = m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
        scores.iter().map(|s| s - z).collect()
    }
}

#[derive(Clone, Debug)]
struct Hyp {
    sym: Sym,
    score: f64,
    kids: Option<(usize, usize)>,
}

struct BeamNode {
    hyps: Vec<Hyp>,
    children: Vec<BeamNode>,
}

/// Preposition heading a `PP` node.
pub fn prep_word_of(t: &ParseTree) -> Option<&str> {
    t.children.first().filter(|c| c.tag == "IN").and_then(|c| c.word.as_deref())
}

fn prune(mut hyps: Vec<Hyp>, beam: Option<usize>) -> Vec<Hyp> {
    // best hypothesis per symbol, then by score with the symbol as tie-break
    let mut best: BTreeMap<Sym, Hyp> = BTreeMap::new();
    for h in hyps.drain(..) {
        match best.get(&h.sym) {
            Some(old) if old.score >= h.score => {}
            _ => {
                best.insert(h.sym.clone(), h);
            }
        }
    }
    let mut out: Vec<Hyp> = best.into_values().collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.sym.cmp(&b.sym)));
    if let Some(n) = beam {
        out.truncate(n.max(1));
    }
    out
}

fn run_beam(t: &ParseTree, scorer: &Scorer, ctx: &Discourse, beam: Option<usize>) -> BeamNode {
    if t.is_leaf() {
        let view = NodeView { tag: &t.tag, word: t.word.as_deref(), children: None };
        let cands = leaf_candidates();
        let lp = scorer.log_probs(&view, &cands);
        let hyps = cands.into_iter().zip(lp).map(|(sym, score)| Hyp { sym, score, kids: None }).collect();
        return BeamNode { hyps: prune(hyps, beam), children: vec![] };
    }
    let l = run_beam(&t.children[0], scorer, ctx, beam);
    let r = run_beam(&t.children[1], scorer, ctx, beam);
    let mut hyps = Vec::new();
    for (i, a) in l.hyps.iter().enumerate() {
        for (j, b) in r.hyps.iter().enumerate() {
            let view = NodeView { tag: &t.tag, word: None, children: Some((&a.sym, &b.sym)) };
            let cands = compose(scorer.space, ctx, prep_word_of(t), &a.sym, &b.sym);
            let lp = scorer.log_probs(&view, &cands);
            for (sym, p) in cands.into_iter().zip(lp) {
                hyps.push(Hyp { sym, score: p + a.score + b.score, kids: Some((i, j)) });
            }
        }
    }
    BeamNode { hyps: prune(hyps, beam), children: vec![l, r] }
}

fn backtrace(node: &BeamNode, h: usize, out: &mut Vec<Sym>) {
    let hyp = &node.hyps[h];
    out.push(hyp.sym.clone());
    if let Some((i, j)) = hyp.kids {
        backtrace(&node.children[0], i, out);
        backtrace(&node.children[1], j, out);
    }
}

/// Best derivation of a tree whose root is a scope set: preorder symbols and
/// the total log score. `beam = None` keeps every distinct symbol.
pub fn ground_tree(
    t: &ParseTree,
    scorer: &Scorer,
    ctx: &Discourse,
    beam: Option<usize>,
) -> Option<(Vec<Sym>, f64)> {
    let root = run_beam(t, scorer, ctx, beam);
    let best = root.hyps.iter().position(|h| matches!(h.sym, Sym::Scopes { .. }))?;
    let mut syms = Vec::new();
    backtrace(&root, best, &mut syms);
    Some((syms, root.hyps[best].score))
}

/// Best derivation of any subtree, whatever its root symbol.
pub fn ground_subtree(t: &ParseTree, scorer: &Scorer, ctx: &Discourse, beam: Option<usize>) -> (Vec<Sym>, f64) {
    let root = run_beam(t, scorer, ctx, beam);
    let mut syms = Vec::new();
    backtrace(&root, 0, &mut syms);
    (syms, root.hyps[0].score)
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct GroundedObject {
    pub id: String,
    pub sentence: usize,
    /// Token span `[start, end)` within the sentence.
    pub span: (usize, usize),
    pub phrase: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SentenceGrounding {
    pub text: String,
    pub tree: ParseTree,
    /// Derivation symbols, preorder over `tree`.
    pub symbols: Vec<Sym>,
    pub score: f64,
}

impl SentenceGrounding {
    pub fn root_actions(&self) -> Vec<ActionSym> {
        match self.symbols.first() {
            Some(Sym::Scopes { actions, .. }) => actions.clone(),
            _ => vec![],
        }
    }
}

/// Everything inferred from one instruction.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundingSet {
    pub task: Task,
    pub sentences: Vec<SentenceGrounding>,
    /// Referring expressions aligned to the objects they denote.
    pub objects: Vec<GroundedObject>,
    /// Union of the sentences' scopes, first mention first.
    pub scopes: Vec<ScopeSym>,
    /// Scene objects the aligned phrases denote, in id order.
    pub referents: Vec<ObjectSym>,
}

impl GroundingSet {
    /// Words the user used for an object, earliest first.
    pub fn phrase_for(&self, id: &str) -> Option<&str> {
        self.objects.iter().find(|o| o.id == id).map(|o| o.phrase.as_str())
    }

    /// Comparable summary: scope actions and aligned objects.
    pub fn signature(&self) -> (Vec<String>, Vec<(String, usize, usize, usize)>) {
        let mut acts: Vec<String> = self.scopes.iter().map(|s| super::action_text(&s.action)).collect();
        acts.sort();
        let objs = self.objects.iter().map(|o| (o.id.clone(), o.sentence, o.span.0, o.span.1)).collect();
        (acts, objs)
    }
}

/// Maximal `Object` nodes of a derivation: the referring expressions.
pub fn aligned_objects(tree: &ParseTree, symbols: &[Sym], sentence: usize) -> Vec<GroundedObject> {
    let nodes = tree.preorder();
    let mut parent = vec![usize::MAX; nodes.len()];
    // preorder of a binary tree: a node's children follow it
    fn walk(t: &ParseTree, idx: &mut usize, par: usize, parent: &mut Vec<usize>) {
        let me = *idx;
        parent[me] = par;
        *idx += 1;
        for c in &t.children {
            walk(c, idx, me, parent);
        }
    }
    walk(tree, &mut 0, usize::MAX, &mut parent);
    let mut out = Vec::new();
    for (k, node) in nodes.iter().enumerate() {
        let Sym::Object(id) = &symbols[k] else { continue };
        if parent[k] != usize::MAX && symbols[parent[k]] == symbols[k] {
            continue;
        }
        out.push(GroundedObject {
            id: id.clone(),
            sentence,
            span: (node.start, node.end),
            phrase: node.words().join(" "),
        });
    }
    out
}

/// Tunables for inference.
#[derive(Clone, Debug)]
pub struct InferConfig {
    pub beam: usize,
    /// Parses tried per sentence, best first.
    pub parses: usize,
    /// Minimum total log score of an accepted root.
    pub floor: f64,
}

impl Default for InferConfig {
    fn default() -> Self {
        InferConfig { beam: 4, parses: 3, floor: -3.5 }
    }
}

/// Split, parse, and ground an instruction against a world.
pub fn ground_instruction(
    text: &str,
    world: &World,
    grammar: &Grammar,
    scorer: &Scorer,
    cfg: &InferConfig,
) -> Result<GroundingSet, GroundingError> {
    let space = scorer.space;
    let mut ctx = Discourse::default();
    let mut sentences = Vec::new();
    let mut objects: Vec<GroundedObject> = Vec::new();
    let mut actions: Vec<ActionSym> = Vec::new();
    let _ = world;
    for (si, sentence) in split_instruction(text).iter().enumerate() {
        let tokens = tokenize(sentence);
        let words: Vec<&str> = tokens.iter().map(String::as_str).collect();
        let parses = cyk_parse(&words, grammar, cfg.parses).map_err(GroundingError::Parse)?;
        // best grounding plus parse log weight over the k-best parses
        let mut best: Option<(ParseTree, Vec<Sym>, f64)> = None;
        let mut best_total = f64::NEG_INFINITY;
        for t in parses {
            let Some((syms, score)) = ground_tree(&t, scorer, &ctx, Some(cfg.beam)) else { continue };
            if score < cfg.floor {
                continue;
            }
            if score + t.weight > best_total {
                best_total = score + t.weight;
                best = Some((t, syms, score));
            }
        }
        let best = best.ok_or_else(|| GroundingError::NoGrounding(sentence.clone()))?;
        let (tree, symbols, score) = best;
        let objs = aligned_objects(&tree, &symbols, si);
        if let Some(c) = objs.iter().rev().find_map(|o| {
            space.object(&o.id).filter(|x| x.otype == ObjectType::Cube).and_then(|x| x.color)
        }) {
            ctx.antecedent = Some(c);
        }
        objects.extend(objs);
        let g = SentenceGrounding { text: sentence.clone(), tree, symbols, score };
        for a in g.root_actions() {
            if !actions.contains(&a) {
                actions.push(a);
            }
        }
        sentences.push(g);
    }
    let scopes = actions.into_iter().map(|a| make_scope(a, space.task)).collect::<Result<_, _>>()?;
    let referents = space.objects.iter().filter(|o| objects.iter().any(|a| a.id == o.id)).cloned().collect();
    Ok(GroundingSet { task: space.task, sentences, objects, scopes, referents })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::bundled_grammar;
    use crate::grounding::{grounding_set_to_spec, prepositions, symbol_space, GroundingModel};
    use crate::ltl::parse_formula;
    use crate::world::bundled_world;

    fn ground(text: &str, world: &str, task: Task) -> Result<GroundingSet, GroundingError> {
        let g = bundled_grammar();
        let w = bundled_world(world).unwrap();
        let space = symbol_space(&w, task, &prepositions(&g));
        let model = GroundingModel::bundled();
        ground_instruction(text, &w, &g, &model.scorer(&space), &InferConfig::default())
    }

    #[test]
    fn sorting_pickup_grounds_to_its_formulae() {
        let gs = ground("Pick up the blue cube with your right hand", "sorting_env2", Task::Sorting).unwrap();
        assert_eq!(gs.scopes.len(), 1);
        let spec = grounding_set_to_spec(&gs).unwrap();
        let p = |s: &str| parse_formula(s, &spec.propositions).unwrap();
        assert_eq!(gs.scopes[0].formulae[0], p("G ((!(X observed_cube_blue) | right_gripper) -> !(X pickup_right))"));
        assert_eq!(gs.scopes[0].formulae[1], p("G (F (pickup_right))"));
        assert!(spec.sys_safety.contains(&gs.scopes[0].formulae[0]));
        assert_eq!(gs.phrase_for("cube_blue_1"), Some("the blue cube"));
        assert_eq!(gs.phrase_for("gripper_right"), Some("your right hand"));
    }

    #[test]
    fn stacking_take_grounds_to_its_formulae() {
        let gs = ground("Take the red cube", "stacking_env4", Task::Stacking).unwrap();
        let spec = grounding_set_to_spec(&gs).unwrap();
        let p = |s: &str| parse_formula(s, &spec.propositions).unwrap();
        assert_eq!(
            gs.scopes[0].formulae,
            vec![
                p("G ((!(X observed_cube_red) | understack_cube_red | right_gripper) -> !(X pickup_right))"),
                p("G (F (pickup_right))")
            ]
        );
    }

    #[test]
    fn box_on_the_right_is_the_right_bin() {
        let g = bundled_grammar();
        let pp = g.with_start(&["PP"]);
        let tokens = ["into", "the", "box", "on", "the", "right"];
        let tree = &cyk_parse(&tokens, &pp, 1).unwrap()[0];
        let w = bundled_world("sorting_env2").unwrap();
        let space = symbol_space(&w, Task::Sorting, &prepositions(&g));
        let model = GroundingModel::bundled();
        let (syms, _) = ground_subtree(tree, &model.scorer(&space), &Discourse::default(), Some(4));
        assert_eq!(syms[0], Sym::Region { prep: "into".into(), target: "bin_right".into() });
        let bin = space.object("bin_right").unwrap();
        assert!(bin.satisfies(SpatialRelation::Right) && !bin.satisfies(SpatialRelation::Center));
    }

    #[test]
    fn pronoun_resolves_across_sentences() {
        let gs = ground("Take the green cube. Put it on the red cube.", "stacking_env4", Task::Stacking).unwrap();
        let (acts, _) = gs.signature();
        assert_eq!(acts, ["pickup_right/green", "place_on_red"]);
        assert_eq!(gs.sentences.len(), 2);
    }

    #[test]
    fn failures_are_reported() {
        assert!(matches!(
            ground("Pick up the zorp", "sorting_env2", Task::Sorting),
            Err(GroundingError::Parse(_))
        ));
        assert!(matches!(ground("Put the blue cube", "sorting_env2", Task::Sorting), Err(GroundingError::NoGrounding(_))));
    }

    #[test]
    fn symbol_text_round_trips() {
        for s in [
            "null",
            "pronoun",
            "type:bin",
            "spatial:above",
            "object:cube_red_1",
            "region:into:bin_right",
            "act:place:it",
            "partial:cube_red_1:into:bin_left",
            "scopes:sort:pickup_left/red+place_left_bin",
        ] {
            assert_eq!(s.parse::<Sym>().unwrap().to_string(), s);
        }
        assert!("scopes:sort:place_left_bin+pickup_left/red".parse::<Sym>().is_err());
        assert!("colour:blue".parse::<Sym>().is_err());
    }

    #[test]
    fn symbol_space_counts() {
        let g = bundled_grammar();
        let w = bundled_world("sorting_env2").unwrap();
        let preps = prepositions(&g);
        let space = symbol_space(&w, Task::Sorting, &preps);
        // 2 cubes, 2 bins, 2 grippers; 2 arms x 2 colors pickups + 2 bin places
        assert_eq!(space.objects.len(), 6);
        assert_eq!(space.regions.len(), preps.len() * 6);
        assert_eq!(space.actions.len(), 6);
        assert_eq!(space.sensors.len(), 4);
        assert_eq!(space.cardinality(), 6 + 3 + 3 + 4 + 3 + preps.len() * 6 + 4 + 6);
        let mut empty = w.clone();
        empty.cubes.clear();
        empty.bins.clear();
        empty.grippers.clear();
        let space = symbol_space(&empty, Task::Sorting, &preps);
        assert_eq!(space.cardinality(), 3 + 3 + 4 + 3);
    }
}
