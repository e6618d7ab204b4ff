use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::formula::{format_formula, Formula};
use super::parse::parse_with;
use super::LtlError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropKind {
    Sensor,
    Action,
    Memory,
}

impl PropKind {
    /// Sensors belong to the environment; actions and memory to the system.
    pub fn is_env(self) -> bool {
        self == PropKind::Sensor
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Proposition {
    pub name: String,
    pub kind: PropKind,
}

pub fn valid_prop_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some('a'..='z'))
        && chars.all(|c| matches!(c, 'a'..='z' | '0'..='9' | '_'))
        && name != "true"
        && name != "false"
}

impl Proposition {
    pub fn new(name: impl Into<String>, kind: PropKind) -> Result<Self, LtlError> {
        let name = name.into();
        if !valid_prop_name(&name) {
            return Err(LtlError::BadName(name));
        }
        Ok(Proposition { name, kind })
    }

    pub fn sensor(name: &str) -> Self {
        Self::new(name, PropKind::Sensor).expect("valid sensor name")
    }

    pub fn action(name: &str) -> Self {
        Self::new(name, PropKind::Action).expect("valid action name")
    }

    pub fn memory(name: &str) -> Self {
        Self::new(name, PropKind::Memory).expect("valid memory name")
    }
}

/// Declared propositions keyed by name; iteration order is lexicographic.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PropTable(BTreeMap<String, PropKind>);

impl PropTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_props(props: impl IntoIterator<Item = Proposition>) -> Result<Self, LtlError> {
        let mut t = PropTable::new();
        for p in props {
            t.insert(p)?;
        }
        Ok(t)
    }

    pub fn insert(&mut self, p: Proposition) -> Result<(), LtlError> {
        match self.0.get(&p.name) {
            Some(k) if *k != p.kind => Err(LtlError::DuplicateProposition(p.name)),
            _ => {
                self.0.insert(p.name, p.kind);
                Ok(())
            }
        }
    }

    pub fn kind(&self, name: &str) -> Option<PropKind> {
        self.0.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Proposition> + '_ {
        self.0.iter().map(|(n, k)| Proposition { name: n.clone(), kind: *k })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn sensors(&self) -> Vec<String> {
        self.0.iter().filter(|(_, k)| k.is_env()).map(|(n, _)| n.clone()).collect()
    }

    pub fn system(&self) -> Vec<String> {
        self.0.iter().filter(|(_, k)| !k.is_env()).map(|(n, _)| n.clone()).collect()
    }
}

pub fn parse_formula(text: &str, props: &PropTable) -> Result<Formula, LtlError> {
    parse_with(text, &|n| props.contains(n))
}

/// Assume-guarantee GR(1) specification.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GR1Spec {
    pub propositions: PropTable,
    pub env_init: Formula,
    pub env_safety: Vec<Formula>,
    pub env_liveness: Vec<Formula>,
    pub sys_init: Formula,
    pub sys_safety: Vec<Formula>,
    pub sys_liveness: Vec<Formula>,
}

impl Default for GR1Spec {
    fn default() -> Self {
        GR1Spec {
            propositions: PropTable::new(),
            env_init: Formula::True,
            env_safety: vec![],
            env_liveness: vec![],
            sys_init: Formula::True,
            sys_safety: vec![],
            sys_liveness: vec![],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    EnvInit,
    EnvSafety,
    EnvLiveness,
    SysInit,
    SysSafety,
    SysLiveness,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Slot::EnvInit => "env_init",
            Slot::EnvSafety => "env_safety",
            Slot::EnvLiveness => "env_liveness",
            Slot::SysInit => "sys_init",
            Slot::SysSafety => "sys_safety",
            Slot::SysLiveness => "sys_liveness",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ShapeViolation {
    WrongTemporalShape { slot: Slot, index: usize },
    IllegalNextTarget { slot: Slot, index: usize, prop: String },
    NestedNext { slot: Slot, index: usize },
    UndeclaredProposition { slot: Slot, index: usize, prop: String },
    SystemPropInEnvInit { index: usize, prop: String },
}

impl fmt::Display for ShapeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeViolation::WrongTemporalShape { slot, index } => {
                write!(f, "{slot}[{index}]: formula does not match the slot template")
            }
            ShapeViolation::IllegalNextTarget { slot, index, prop } => {
                write!(f, "{slot}[{index}]: X may not be applied to {prop}")
            }
            ShapeViolation::NestedNext { slot, index } => write!(f, "{slot}[{index}]: nested X"),
            ShapeViolation::UndeclaredProposition { slot, index, prop } => {
                write!(f, "{slot}[{index}]: undeclared proposition {prop}")
            }
            ShapeViolation::SystemPropInEnvInit { index, prop } => {
                write!(f, "env_init[{index}]: system proposition {prop}")
            }
        }
    }
}

impl GR1Spec {
    pub fn slots(&self) -> Vec<(Slot, Vec<&Formula>)> {
        vec![
            (Slot::EnvInit, vec![&self.env_init]),
            (Slot::EnvSafety, self.env_safety.iter().collect()),
            (Slot::EnvLiveness, self.env_liveness.iter().collect()),
            (Slot::SysInit, vec![&self.sys_init]),
            (Slot::SysSafety, self.sys_safety.iter().collect()),
            (Slot::SysLiveness, self.sys_liveness.iter().collect()),
        ]
    }

    pub fn to_dump(&self) -> SpecDump {
        let fmt_all = |fs: &[Formula]| fs.iter().map(format_formula).collect::<Vec<_>>();
        SpecDump {
            version: SPEC_DUMP_VERSION,
            propositions: self.propositions.iter().collect(),
            env_init: format_formula(&self.env_init),
            env_safety: fmt_all(&self.env_safety),
            env_liveness: fmt_all(&self.env_liveness),
            sys_init: format_formula(&self.sys_init),
            sys_safety: fmt_all(&self.sys_safety),
            sys_liveness: fmt_all(&self.sys_liveness),
        }
    }

    pub fn from_dump(dump: &SpecDump) -> Result<Self, LtlError> {
        if dump.version != SPEC_DUMP_VERSION {
            return Err(LtlError::Format(format!("unsupported spec dump version {}", dump.version)));
        }
        let propositions = PropTable::from_props(
            dump.propositions
                .iter()
                .map(|p| Proposition::new(p.name.clone(), p.kind))
                .collect::<Result<Vec<_>, _>>()?,
        )?;
        let one = |s: &str| parse_formula(s, &propositions);
        let many = |v: &[String]| v.iter().map(|s| one(s)).collect::<Result<Vec<_>, _>>();
        Ok(GR1Spec {
            env_init: one(&dump.env_init)?,
            env_safety: many(&dump.env_safety)?,
            env_liveness: many(&dump.env_liveness)?,
            sys_init: one(&dump.sys_init)?,
            sys_safety: many(&dump.sys_safety)?,
            sys_liveness: many(&dump.sys_liveness)?,
            propositions,
        })
    }

    /// Pretty JSON, newline terminated. Stable across runs.
    pub fn dump_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_dump()).expect("spec dump serializes");
        s.push('\n');
        s
    }

    pub fn load_json(text: &str) -> Result<Self, LtlError> {
        let dump: SpecDump = serde_json::from_str(text).map_err(|e| LtlError::Format(e.to_string()))?;
        Self::from_dump(&dump)
    }
}

pub const SPEC_DUMP_VERSION: u32 = 1;

/// On-disk form of a [`GR1Spec`]; formulas in concrete syntax.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDump {
    pub version: u32,
    pub propositions: Vec<Proposition>,
    pub env_init: String,
    pub env_safety: Vec<String>,
    pub env_liveness: Vec<String>,
    pub sys_init: String,
    pub sys_safety: Vec<String>,
    pub sys_liveness: Vec<String>,
}

/// Check every formula against its slot template and the turn-order rules.
pub fn validate_spec(spec: &GR1Spec) -> Vec<ShapeViolation> {
    let mut out = Vec::new();
    for (slot, formulas) in spec.slots() {
        for (index, f) in formulas.into_iter().enumerate() {
            for prop in f.props() {
                if !spec.propositions.contains(&prop) {
                    out.push(ShapeViolation::UndeclaredProposition { slot, index, prop });
                }
            }
            let body = match slot {
                Slot::EnvInit | Slot::SysInit => Some(f),
                Slot::EnvSafety | Slot::SysSafety => match f {
                    Formula::Always(b) if is_step_formula(b) => Some(&**b),
                    _ => None,
                },
                Slot::EnvLiveness | Slot::SysLiveness => match f {
                    Formula::Always(inner) => match &**inner {
                        Formula::Eventually(b) => Some(&**b),
                        _ => None,
                    },
                    _ => None,
                },
            };
            let Some(body) = body else {
                out.push(ShapeViolation::WrongTemporalShape { slot, index });
                continue;
            };
            match slot {
                Slot::EnvSafety | Slot::SysSafety => {
                    check_next_targets(body, spec, slot, index, false, &mut out);
                }
                _ => {
                    if !body.is_propositional() {
                        out.push(ShapeViolation::WrongTemporalShape { slot, index });
                    }
                }
            }
            if slot == Slot::EnvInit {
                for prop in body.props() {
                    if matches!(spec.propositions.kind(&prop), Some(k) if !k.is_env()) {
                        out.push(ShapeViolation::SystemPropInEnvInit { index, prop });
                    }
                }
            }
        }
    }
    out
}

/// Propositional structure where `X` may wrap propositional subformulas.
fn is_step_formula(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::False | Formula::Prop(_) => true,
        Formula::Not(g) => is_step_formula(g),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().all(is_step_formula),
        Formula::Implies(a, b) => is_step_formula(a) && is_step_formula(b),
        Formula::Next(g) => is_step_formula(g),
        _ => false,
    }
}

fn check_next_targets(
    f: &Formula,
    spec: &GR1Spec,
    slot: Slot,
    index: usize,
    under_next: bool,
    out: &mut Vec<ShapeViolation>,
) {
    match f {
        Formula::Next(g) => {
            if under_next {
                out.push(ShapeViolation::NestedNext { slot, index });
                return;
            }
            check_next_targets(g, spec, slot, index, true, out);
        }
        Formula::Prop(p) if under_next && slot == Slot::EnvSafety => {
            if matches!(spec.propositions.kind(p), Some(k) if !k.is_env()) {
                out.push(ShapeViolation::IllegalNextTarget { slot, index, prop: p.clone() });
            }
        }
        _ => {
            for c in f.children() {
                check_next_targets(c, spec, slot, index, under_next, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GR1Spec {
        GR1Spec {
            propositions: PropTable::from_props([Proposition::sensor("s"), Proposition::action("a")])
                .unwrap(),
            ..GR1Spec::default()
        }
    }

    #[test]
    fn empty_spec_is_valid() {
        assert!(validate_spec(&GR1Spec::default()).is_empty());
    }

    #[test]
    fn liveness_in_safety_slot() {
        let mut spec = small();
        spec.sys_safety.push(Formula::always_eventually(Formula::prop("a")));
        assert_eq!(
            validate_spec(&spec),
            vec![ShapeViolation::WrongTemporalShape { slot: Slot::SysSafety, index: 0 }]
        );
    }

    #[test]
    fn env_safety_cannot_look_at_next_action() {
        let mut spec = small();
        spec.env_safety.push(Formula::always(Formula::implies(
            Formula::prop("s"),
            Formula::next(Formula::prop("a")),
        )));
        assert_eq!(
            validate_spec(&spec),
            vec![ShapeViolation::IllegalNextTarget {
                slot: Slot::EnvSafety,
                index: 0,
                prop: "a".into()
            }]
        );
        // the same shape is fine for the system
        spec.sys_safety = std::mem::take(&mut spec.env_safety);
        assert!(validate_spec(&spec).is_empty());
    }

    #[test]
    fn other_violations() {
        let mut spec = small();
        spec.env_init = Formula::prop("a");
        spec.sys_liveness.push(Formula::always_eventually(Formula::next(Formula::prop("a"))));
        spec.sys_safety.push(Formula::always(Formula::next(Formula::next(Formula::prop("zz")))));
        let v = validate_spec(&spec);
        assert!(v.contains(&ShapeViolation::SystemPropInEnvInit { index: 0, prop: "a".into() }));
        assert!(v.contains(&ShapeViolation::WrongTemporalShape { slot: Slot::SysLiveness, index: 0 }));
        assert!(v.contains(&ShapeViolation::NestedNext { slot: Slot::SysSafety, index: 0 }));
        assert!(v.contains(&ShapeViolation::UndeclaredProposition {
            slot: Slot::SysSafety,
            index: 0,
            prop: "zz".into()
        }));
    }

    #[test]
    fn names_are_checked() {
        assert!(Proposition::new("Bad", PropKind::Sensor).is_err());
        assert!(Proposition::new("", PropKind::Sensor).is_err());
        assert!(Proposition::new("true", PropKind::Sensor).is_err());
        assert!(Proposition::new("ok_1", PropKind::Sensor).is_ok());
        let mut t = PropTable::new();
        t.insert(Proposition::sensor("x")).unwrap();
        assert!(t.insert(Proposition::action("x")).is_err());
    }

    #[test]
    fn dump_round_trips_bit_exact() {
        let mut spec = small();
        spec.sys_safety.push(Formula::always(Formula::implies(
            Formula::not(Formula::next(Formula::prop("s"))),
            Formula::not(Formula::next(Formula::prop("a"))),
        )));
        spec.sys_liveness.push(Formula::always_eventually(Formula::prop("a")));
        let text = spec.dump_json();
        let back = GR1Spec::load_json(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.dump_json(), text);
        assert!(GR1Spec::load_json(&text.replace("\"version\"", "\"extra\": 1, \"version\"")).is_err());
    }
}
