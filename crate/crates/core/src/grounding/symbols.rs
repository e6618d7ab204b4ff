use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ltl::Formula;
use crate::world::{ActionSym, ActionType, Color, SensorSym, Side, Task, World};

use super::GroundingError;

/// Spatial-relation threshold on the robot-frame y axis, meters.
pub const SPATIAL_DELTA: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectType {
    Cube,
    Bin,
    Gripper,
}

impl ObjectType {
    pub const ALL: [ObjectType; 3] = [ObjectType::Cube, ObjectType::Bin, ObjectType::Gripper];

    pub fn name(self) -> &'static str {
        match self {
            ObjectType::Cube => "cube",
            ObjectType::Bin => "bin",
            ObjectType::Gripper => "gripper",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialRelation {
    Center,
    Left,
    Right,
    Above,
}

impl SpatialRelation {
    pub const ALL: [SpatialRelation; 4] =
        [SpatialRelation::Center, SpatialRelation::Left, SpatialRelation::Right, SpatialRelation::Above];

    pub fn name(self) -> &'static str {
        match self {
            SpatialRelation::Center => "center",
            SpatialRelation::Left => "left",
            SpatialRelation::Right => "right",
            SpatialRelation::Above => "above",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    PickUp,
    Place,
    Sort,
}

impl Verb {
    pub const ALL: [Verb; 3] = [Verb::PickUp, Verb::Place, Verb::Sort];

    pub fn name(self) -> &'static str {
        match self {
            Verb::PickUp => "pickup",
            Verb::Place => "place",
            Verb::Sort => "sort",
        }
    }
}

/// A perceived object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSym {
    pub id: String,
    pub otype: ObjectType,
    pub color: Option<Color>,
    pub pose: [f64; 3],
    /// Resting on another cube.
    pub stacked: bool,
    /// Bins and grippers belong to a side.
    pub side: Option<Side>,
}

impl ObjectSym {
    pub fn satisfies(&self, rel: SpatialRelation) -> bool {
        let y = self.pose[1];
        match rel {
            SpatialRelation::Left => y > SPATIAL_DELTA,
            SpatialRelation::Right => y < -SPATIAL_DELTA,
            SpatialRelation::Center => y.abs() <= SPATIAL_DELTA,
            SpatialRelation::Above => self.stacked,
        }
    }

    /// "the blue cube", "the right bin".
    pub fn canonical_phrase(&self) -> String {
        match (self.color, self.side) {
            (Some(c), _) => format!("the {} {}", c.name(), self.otype.name()),
            (None, Some(s)) => format!("the {} {}", s.name(), self.otype.name()),
            _ => format!("the {}", self.otype.name()),
        }
    }
}

/// Objects of a world, in id order. Grippers sit at a nominal pose on their side.
pub fn world_objects(w: &World) -> Vec<ObjectSym> {
    let mut out: Vec<ObjectSym> = w
        .cubes
        .iter()
        .map(|c| ObjectSym {
            id: c.id.clone(),
            otype: ObjectType::Cube,
            color: Some(c.color),
            pose: c.pose,
            stacked: c.on_top_of.is_some(),
            side: None,
        })
        .chain(w.bins.iter().map(|b| ObjectSym {
            id: b.id.clone(),
            otype: ObjectType::Bin,
            color: None,
            pose: b.pose,
            stacked: false,
            side: Some(b.side),
        }))
        .chain(w.grippers.iter().map(|g| ObjectSym {
            id: g.id.clone(),
            otype: ObjectType::Gripper,
            color: None,
            pose: [0.0, if g.side == Side::Left { 0.3 } else { -0.3 }, 0.4],
            stacked: false,
            side: Some(g.side),
        }))
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

/// Placeholder object id for an unresolved pronoun.
pub const PRONOUN: &str = "it";

/// Grounding symbol attached to a parse-tree node.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sym {
    Null,
    Type(ObjectType),
    Color(Color),
    Spatial(SpatialRelation),
    Verb(Verb),
    Pronoun,
    Object(String),
    Region { prep: String, target: String },
    Act { verb: Verb, obj: String },
    /// A conjunct whose verb was elided: object plus destination.
    Partial { obj: String, prep: String, target: String },
    /// Scope symbols; each action determines its sensors and formulae.
    Scopes { verb: Verb, actions: Vec<ActionSym> },
}

impl Sym {
    pub fn kind(&self) -> &'static str {
        match self {
            Sym::Null => "null",
            Sym::Type(_) => "type",
            Sym::Color(_) => "color",
            Sym::Spatial(_) => "spatial",
            Sym::Verb(_) => "verb",
            Sym::Pronoun => "pronoun",
            Sym::Object(_) => "object",
            Sym::Region { .. } => "region",
            Sym::Act { .. } => "act",
            Sym::Partial { .. } => "partial",
            Sym::Scopes { .. } => "scopes",
        }
    }

    pub fn scopes(verb: Verb, mut actions: Vec<ActionSym>) -> Sym {
        actions.sort();
        actions.dedup();
        Sym::Scopes { verb, actions }
    }
}

pub fn action_text(a: &ActionSym) -> String {
    match (a.kind, a.color) {
        (ActionType::PickUp, Some(c)) => format!("{}/{}", a.prop(), c.name()),
        _ => a.prop(),
    }
}

pub fn parse_action(s: &str) -> Option<ActionSym> {
    if let Some((prop, color)) = s.split_once('/') {
        let arm = Side::from_name(prop.strip_prefix("pickup_")?)?;
        return Some(ActionSym::pickup(arm, Color::from_name(color)?));
    }
    if let Some(c) = s.strip_prefix("place_on_") {
        return Color::from_name(c).map(ActionSym::place_on);
    }
    if let Some(rest) = s.strip_prefix("place_") {
        return Side::from_name(rest.strip_suffix("_bin")?).map(ActionSym::place_bin);
    }
    if let Some(arm) = s.strip_prefix("release_") {
        return Side::from_name(arm).map(ActionSym::release);
    }
    None
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::Null => write!(f, "null"),
            Sym::Type(t) => write!(f, "type:{}", t.name()),
            Sym::Color(c) => write!(f, "color:{}", c.name()),
            Sym::Spatial(s) => write!(f, "spatial:{}", s.name()),
            Sym::Verb(v) => write!(f, "verb:{}", v.name()),
            Sym::Pronoun => write!(f, "pronoun"),
            Sym::Object(id) => write!(f, "object:{id}"),
            Sym::Region { prep, target } => write!(f, "region:{prep}:{target}"),
            Sym::Act { verb, obj } => write!(f, "act:{}:{obj}", verb.name()),
            Sym::Partial { obj, prep, target } => write!(f, "partial:{obj}:{prep}:{target}"),
            Sym::Scopes { verb, actions } => write!(
                f,
                "scopes:{}:{}",
                verb.name(),
                actions.iter().map(action_text).collect::<Vec<_>>().join("+")
            ),
        }
    }
}

impl FromStr for Sym {
    type Err = GroundingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GroundingError::BadSymbol(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let verb = |v: &str| Verb::ALL.into_iter().find(|x| x.name() == v).ok_or_else(bad);
        Ok(match parts.as_slice() {
            ["null"] => Sym::Null,
            ["pronoun"] => Sym::Pronoun,
            ["type", t] => Sym::Type(ObjectType::ALL.into_iter().find(|x| x.name() == *t).ok_or_else(bad)?),
            ["color", c] => Sym::Color(Color::from_name(c).ok_or_else(bad)?),
            ["spatial", r] => Sym::Spatial(SpatialRelation::ALL.into_iter().find(|x| x.name() == *r).ok_or_else(bad)?),
            ["verb", v] => Sym::Verb(verb(v)?),
            ["object", id] => Sym::Object(id.to_string()),
            ["region", p, t] => Sym::Region { prep: p.to_string(), target: t.to_string() },
            ["act", v, o] => Sym::Act { verb: verb(v)?, obj: o.to_string() },
            ["partial", o, p, t] => Sym::Partial { obj: o.to_string(), prep: p.to_string(), target: t.to_string() },
            ["scopes", v, list] => {
                let actions = list.split('+').map(|a| parse_action(a).ok_or_else(bad)).collect::<Result<_, _>>()?;
                let sym = Sym::scopes(verb(v)?, actions);
                if sym.to_string() != s {
                    return Err(bad());
                }
                sym
            }
            _ => return Err(bad()),
        })
    }
}

/// Scope: sensors paired with one action and their templated formulae.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScopeSym {
    pub sensors: Vec<SensorSym>,
    pub action: ActionSym,
    /// `[safety, liveness]`
    pub formulae: Vec<Formula>,
}

/// Everything a world and task make expressible. Scopes are built lazily
/// during inference and are not listed.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolSpace {
    pub task: Task,
    pub objects: Vec<ObjectSym>,
    pub types: Vec<ObjectType>,
    pub colors: Vec<Color>,
    pub spatial: Vec<SpatialRelation>,
    pub verbs: Vec<Verb>,
    pub regions: Vec<(String, String)>,
    pub sensors: Vec<SensorSym>,
    pub actions: Vec<ActionSym>,
}

impl SymbolSpace {
    pub fn object(&self, id: &str) -> Option<&ObjectSym> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn cardinality(&self) -> usize {
        self.objects.len()
            + self.types.len()
            + self.colors.len()
            + self.spatial.len()
            + self.verbs.len()
            + self.regions.len()
            + self.sensors.len()
            + self.actions.len()
    }
}

pub fn symbol_space(world: &World, task: Task, prepositions: &[String]) -> SymbolSpace {
    let objects = world_objects(world);
    let regions = prepositions
        .iter()
        .flat_map(|p| objects.iter().map(move |o| (p.clone(), o.id.clone())))
        .collect();
    let colors_present = world.colors_present();
    let arms: Vec<Side> = world.grippers.iter().map(|g| g.side).collect();
    let mut actions: Vec<ActionSym> = arms
        .iter()
        .flat_map(|&a| colors_present.iter().map(move |&c| ActionSym::pickup(a, c)))
        .collect();
    match task {
        Task::Sorting => actions.extend(
            world.bins.iter().filter(|b| arms.contains(&b.side)).map(|b| ActionSym::place_bin(b.side)),
        ),
        Task::Stacking if arms.contains(&Side::Right) => {
            actions.extend(colors_present.iter().map(|&c| ActionSym::place_on(c)))
        }
        Task::Stacking => {}
    }
    actions.sort();
    let mut world_for_task = world.clone();
    world_for_task.task = task;
    SymbolSpace {
        task,
        objects,
        types: ObjectType::ALL.to_vec(),
        colors: Color::ALL.to_vec(),
        spatial: SpatialRelation::ALL.to_vec(),
        verbs: Verb::ALL.to_vec(),
        regions,
        sensors: world_for_task.task_sensors(),
        actions,
    }
}
