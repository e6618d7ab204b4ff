//! Formula templates for scopes and the scaffolding that turns a set of
//! scopes into a complete GR(1) specification.

use std::collections::{BTreeMap, BTreeSet};

use crate::ltl::{parse_formula, Formula, GR1Spec, PropTable, Proposition};
use crate::world::{gripper_prop, ActionSym, ActionType, Color, Destination, SensorSym, Side, Task};

use super::symbols::ScopeSym;
use super::GroundingError;

/// Sensors a scope over `action` carries in `task`, or `None` if no template
/// covers the pair.
pub fn scope_sensors(action: &ActionSym, task: Task) -> Option<Vec<SensorSym>> {
    match (task, action.kind, action.dest) {
        (Task::Sorting, ActionType::PickUp, _) => Some(vec![SensorSym::observed(action.color?)]),
        (Task::Stacking, ActionType::PickUp, _) => {
            let c = action.color?;
            Some(vec![SensorSym::observed(c), SensorSym::understack(c)])
        }
        (Task::Sorting, ActionType::Place, Some(Destination::Bin(s))) => Some(vec![SensorSym::bin_clear(s)]),
        (Task::Stacking, ActionType::Place, Some(Destination::OnCube(c))) => {
            Some(vec![SensorSym::observed(c), SensorSym::understack(c)])
        }
        _ => None,
    }
}

fn template_key(sensors: &[SensorSym], action: &ActionSym, task: Task) -> String {
    let kinds: Vec<String> = sensors.iter().map(|s| format!("{:?}", s.kind)).collect();
    format!("{task}/{:?}/{}", action.kind, kinds.join(","))
}

fn table_for(sensors: &[SensorSym], action: &ActionSym) -> PropTable {
    let mut props: Vec<Proposition> = sensors.iter().map(|s| Proposition::sensor(&s.prop())).collect();
    props.push(Proposition::action(&action.prop()));
    props.push(Proposition::memory(&gripper_prop(action.arm)));
    PropTable::from_props(props).expect("template propositions are well formed")
}

/// Safety and liveness formulae for one scope.
pub fn scope_to_formulae(
    sensors: &[SensorSym],
    action: &ActionSym,
    task: Task,
) -> Result<Vec<Formula>, GroundingError> {
    let no_template = || GroundingError::NoTemplate(template_key(sensors, action, task));
    if scope_sensors(action, task).as_deref() != Some(sensors) {
        return Err(no_template());
    }
    let a = action.prop();
    let g = gripper_prop(action.arm);
    let blockers: Vec<String> = match (action.kind, action.dest) {
        (ActionType::PickUp, _) => {
            let mut b = vec![format!("!(X {})", sensors[0].prop())];
            b.extend(sensors[1..].iter().map(|s| s.prop()));
            b.push(g);
            b
        }
        (ActionType::Place, Some(Destination::Bin(_))) => vec![format!("!(X {})", sensors[0].prop()), format!("!{g}")],
        (ActionType::Place, Some(Destination::OnCube(_))) => {
            vec![format!("!(X {})", sensors[0].prop()), sensors[1].prop(), format!("!{g}")]
        }
        _ => return Err(no_template()),
    };
    let table = table_for(sensors, action);
    let safety = format!("G (({}) -> !(X {a}))", blockers.join(" | "));
    let liveness = format!("G (F ({a}))");
    Ok(vec![
        parse_formula(&safety, &table).expect("safety template parses"),
        parse_formula(&liveness, &table).expect("liveness template parses"),
    ])
}

pub fn make_scope(action: ActionSym, task: Task) -> Result<ScopeSym, GroundingError> {
    let sensors = scope_sensors(&action, task)
        .ok_or_else(|| GroundingError::NoTemplate(template_key(&[], &action, task)))?;
    let formulae = scope_to_formulae(&sensors, &action, task)?;
    Ok(ScopeSym { sensors, action, formulae })
}

fn atom(name: &str) -> Formula {
    Formula::prop(name)
}

fn next(name: &str) -> Formula {
    Formula::next(atom(name))
}

fn not_next(name: &str) -> Formula {
    Formula::not(next(name))
}

/// Conjoin every scope's formulae and add the robot and world scaffolding:
/// gripper memory, mutually exclusive actions, release for arms that never
/// place, and the physical persistence of sensed facts.
pub fn spec_from_scopes(scopes: &[ScopeSym], task: Task) -> Result<GR1Spec, GroundingError> {
    if scopes.is_empty() {
        return Err(GroundingError::NoGoals);
    }
    // one safety template per action proposition
    let mut by_prop: BTreeMap<String, &ScopeSym> = BTreeMap::new();
    for s in scopes {
        if let Some(prev) = by_prop.get(&s.action.prop()) {
            if prev.formulae != s.formulae {
                return Err(GroundingError::ConflictingScopes(s.action.prop()));
            }
            continue;
        }
        by_prop.insert(s.action.prop(), s);
    }
    let actions: Vec<ActionSym> = by_prop.values().map(|s| s.action).collect();
    let sensors: BTreeSet<SensorSym> = by_prop.values().flat_map(|s| s.sensors.iter().copied()).collect();

    let arms: BTreeSet<Side> = actions.iter().map(|a| a.arm).collect();
    let mut sys_actions: Vec<ActionSym> = actions.clone();
    for &arm in &arms {
        let picks = actions.iter().any(|a| a.arm == arm && a.kind == ActionType::PickUp);
        let places = actions.iter().any(|a| a.arm == arm && a.kind == ActionType::Place);
        if picks && !places {
            sys_actions.push(ActionSym::release(arm));
        }
    }

    let mut props: Vec<Proposition> = sensors.iter().map(|s| Proposition::sensor(&s.prop())).collect();
    props.extend(sys_actions.iter().map(|a| Proposition::action(&a.prop())));
    props.extend(arms.iter().map(|&a| Proposition::memory(&gripper_prop(a))));
    let propositions = PropTable::from_props(props).map_err(|e| GroundingError::Spec(e.to_string()))?;

    let mut sys_safety = Vec::new();
    let mut sys_liveness = Vec::new();
    for s in by_prop.values() {
        sys_safety.push(s.formulae[0].clone());
        sys_liveness.push(s.formulae[1].clone());
    }

    for &arm in &arms {
        let g = gripper_prop(arm);
        let emptying: Vec<Formula> = sys_actions
            .iter()
            .filter(|a| a.arm == arm && a.kind != ActionType::PickUp)
            .map(|a| not_next(&a.prop()))
            .collect();
        let keep = Formula::and(std::iter::once(atom(&g)).chain(emptying));
        let fills: Vec<Formula> = sys_actions
            .iter()
            .filter(|a| a.arm == arm && a.kind == ActionType::PickUp)
            .map(|a| next(&a.prop()))
            .collect();
        let cause = Formula::or(fills.into_iter().chain(std::iter::once(keep)));
        sys_safety.push(Formula::always(Formula::and([
            Formula::implies(next(&g), cause.clone()),
            Formula::implies(cause, next(&g)),
        ])));
        if sys_actions.contains(&ActionSym::release(arm)) {
            let r = ActionSym::release(arm).prop();
            sys_safety.push(Formula::always(Formula::implies(Formula::not(atom(&g)), not_next(&r))));
        }
    }
    let sys_props: Vec<String> = sys_actions.iter().map(|a| a.prop()).collect();
    for (i, p) in sys_props.iter().enumerate() {
        for q in &sys_props[i + 1..] {
            sys_safety.push(Formula::always(Formula::not(Formula::and([next(p), next(q)]))));
        }
    }
    let sys_init = Formula::and(
        sys_props
            .iter()
            .cloned()
            .chain(arms.iter().map(|&a| gripper_prop(a)))
            .map(|p| Formula::not(atom(&p))),
    );

    let mut env_safety = Vec::new();
    for s in &sensors {
        let prop = s.prop();
        match (s.kind, s.color) {
            (crate::world::SensorType::ObservedCube, Some(c)) => {
                let takers: Vec<Formula> = actions
                    .iter()
                    .filter(|a| a.kind == ActionType::PickUp && a.color == Some(c))
                    .map(|a| Formula::not(atom(&a.prop())))
                    .collect();
                let lhs = Formula::and(std::iter::once(atom(&prop)).chain(takers));
                env_safety.push(Formula::always(Formula::implies(lhs, next(&prop))));
                for &arm in &arms {
                    if sys_actions.contains(&ActionSym::release(arm)) && single_pick_color(&actions, arm) == Some(c) {
                        let r = ActionSym::release(arm).prop();
                        env_safety.push(Formula::always(Formula::implies(atom(&r), next(&prop))));
                    }
                }
            }
            (crate::world::SensorType::UnderStack, Some(c)) => {
                let place = ActionSym::place_on(c);
                let mut lhs = vec![Formula::not(atom(&prop))];
                if actions.contains(&place) {
                    lhs.push(Formula::not(atom(&place.prop())));
                }
                env_safety.push(Formula::always(Formula::implies(Formula::and(lhs), not_next(&prop))));
            }
            _ => {}
        }
    }
    let _ = task;
    Ok(GR1Spec {
        propositions,
        env_init: Formula::True,
        env_safety,
        env_liveness: vec![],
        sys_init,
        sys_safety,
        sys_liveness,
    })
}

fn single_pick_color(actions: &[ActionSym], arm: Side) -> Option<Color> {
    let colors: BTreeSet<Color> = actions
        .iter()
        .filter(|a| a.arm == arm && a.kind == ActionType::PickUp)
        .filter_map(|a| a.color)
        .collect();
    if colors.len() == 1 {
        colors.into_iter().next()
    } else {
        None
    }
}
