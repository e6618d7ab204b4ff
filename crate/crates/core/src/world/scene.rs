use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ltl::Valuation;

use super::symbols::{ActionSym, ActionType, Color, Destination, SensorSym, SensorType, Side, Task};
use super::WorldError;

pub const DEFAULT_REACH: f64 = 0.9;
/// Half-width of the square table, meters.
pub const TABLE_HALF: f64 = 1.5;
pub const CUBE_SIZE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cube {
    pub id: String,
    pub color: Color,
    /// Robot frame: x forward, y to the robot's left, z up.
    pub pose: [f64; 3],
    #[serde(default)]
    pub on_top_of: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bin {
    pub id: String,
    pub side: Side,
    pub pose: [f64; 3],
    pub lid_open: bool,
    #[serde(default)]
    pub contents: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gripper {
    pub id: String,
    pub side: Side,
    #[serde(default)]
    pub holding: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct World {
    pub name: String,
    pub task: Task,
    #[serde(default)]
    pub cubes: Vec<Cube>,
    #[serde(default)]
    pub bins: Vec<Bin>,
    #[serde(default)]
    pub grippers: Vec<Gripper>,
    #[serde(default = "default_reach")]
    pub reach_radius: f64,
}

fn default_reach() -> f64 {
    DEFAULT_REACH
}

/// Edits the environment (the user) may make between robot steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "edit", rename_all = "snake_case", deny_unknown_fields)]
pub enum WorldEdit {
    /// New cube at the color's home slot, or on top of the visible cube of color `on`.
    AddCube { color: Color, #[serde(default)] on: Option<Color> },
    /// Take away one visible cube of this color.
    RemoveCube { color: Color },
    /// Take away whatever sits on top of a cube of this color.
    Unstack { color: Color },
    SetLid { side: Side, open: bool },
}

impl World {
    pub fn empty(name: &str, task: Task) -> Self {
        World { name: name.into(), task, cubes: vec![], bins: vec![], grippers: vec![], reach_radius: DEFAULT_REACH }
    }

    pub fn load(path: &Path) -> Result<Self, WorldError> {
        let text = std::fs::read_to_string(path).map_err(|e| WorldError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        let w: World = serde_json::from_str(text).map_err(|e| WorldError::Format(e.to_string()))?;
        w.validate()?;
        Ok(w)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("world serializes");
        s.push('\n');
        s
    }

    pub fn cube(&self, id: &str) -> Option<&Cube> {
        self.cubes.iter().find(|c| c.id == id)
    }

    pub fn bin(&self, side: Side) -> Option<&Bin> {
        self.bins.iter().find(|b| b.side == side)
    }

    pub fn gripper(&self, side: Side) -> Option<&Gripper> {
        self.grippers.iter().find(|g| g.side == side)
    }

    pub fn is_held(&self, id: &str) -> bool {
        self.grippers.iter().any(|g| g.holding.as_deref() == Some(id))
    }

    pub fn is_binned(&self, id: &str) -> bool {
        self.bins.iter().any(|b| b.contents.iter().any(|c| c == id))
    }

    /// On the table or on a stack, i.e. neither held nor in a bin.
    pub fn on_table(&self, id: &str) -> bool {
        !self.is_held(id) && !self.is_binned(id)
    }

    pub fn has_cube_on_top(&self, id: &str) -> bool {
        self.cubes.iter().any(|c| c.on_top_of.as_deref() == Some(id) && self.on_table(&c.id))
    }

    pub fn reachable(&self, cube: &Cube) -> bool {
        (cube.pose[0].powi(2) + cube.pose[1].powi(2)).sqrt() <= self.reach_radius
    }

    /// Visible to the robot: unheld, reachable, resting on the table surface or topping a stack.
    pub fn observed(&self, cube: &Cube) -> bool {
        self.on_table(&cube.id)
            && self.reachable(cube)
            && (cube.on_top_of.is_none() || !self.has_cube_on_top(&cube.id))
    }

    pub fn colors_present(&self) -> Vec<Color> {
        let mut cs: Vec<Color> = self.cubes.iter().map(|c| c.color).collect();
        cs.sort();
        cs.dedup();
        cs
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let mut ids: Vec<&str> = self
            .cubes
            .iter()
            .map(|c| c.id.as_str())
            .chain(self.bins.iter().map(|b| b.id.as_str()))
            .chain(self.grippers.iter().map(|g| g.id.as_str()))
            .collect();
        ids.sort();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(WorldError::Invalid(format!("duplicate id `{}`", w[0])));
        }
        for side in Side::ALL {
            if self.bins.iter().filter(|b| b.side == side).count() > 1 {
                return Err(WorldError::Invalid(format!("two {} bins", side.name())));
            }
            if self.grippers.iter().filter(|g| g.side == side).count() > 1 {
                return Err(WorldError::Invalid(format!("two {} grippers", side.name())));
            }
        }
        for c in &self.cubes {
            if c.pose[0].abs() > TABLE_HALF || c.pose[1].abs() > TABLE_HALF {
                return Err(WorldError::Invalid(format!("cube `{}` is off the table", c.id)));
            }
            if let Some(under) = &c.on_top_of {
                if self.cube(under).is_none() {
                    return Err(WorldError::Invalid(format!("cube `{}` sits on unknown `{under}`", c.id)));
                }
                if self.is_held(&c.id) || self.is_held(under) {
                    return Err(WorldError::Invalid(format!("held cube in a stack at `{}`", c.id)));
                }
            }
            // walk down the stack; more steps than cubes means a cycle
            let mut cur = c;
            for _ in 0..=self.cubes.len() {
                match cur.on_top_of.as_deref().and_then(|u| self.cube(u)) {
                    Some(next) => cur = next,
                    None => break,
                }
                if cur.id == c.id {
                    return Err(WorldError::Invalid(format!("stacking cycle through `{}`", c.id)));
                }
            }
            if self.cubes.iter().filter(|o| o.on_top_of.as_deref() == Some(&c.id)).count() > 1 {
                return Err(WorldError::Invalid(format!("two cubes on top of `{}`", c.id)));
            }
        }
        let mut placed: Vec<&str> = self
            .grippers
            .iter()
            .filter_map(|g| g.holding.as_deref())
            .chain(self.bins.iter().flat_map(|b| b.contents.iter().map(String::as_str)))
            .collect();
        for id in &placed {
            if self.cube(id).is_none() {
                return Err(WorldError::Invalid(format!("unknown cube `{id}` held or binned")));
            }
        }
        placed.sort();
        if let Some(w) = placed.windows(2).find(|w| w[0] == w[1]) {
            return Err(WorldError::Invalid(format!("cube `{}` is in two places", w[0])));
        }
        Ok(())
    }

    /// Sensors the task instantiates for this scene.
    pub fn task_sensors(&self) -> Vec<SensorSym> {
        let mut out: Vec<SensorSym> = self.colors_present().into_iter().map(SensorSym::observed).collect();
        match self.task {
            Task::Sorting => out.extend(self.bins.iter().map(|b| SensorSym::bin_clear(b.side))),
            Task::Stacking => out.extend(self.colors_present().into_iter().map(SensorSym::understack)),
        }
        out.sort_by_key(|s| s.prop());
        out
    }

    pub fn sense_one(&self, s: &SensorSym) -> Result<bool, WorldError> {
        Ok(match (s.kind, s.color, s.side) {
            (SensorType::ObservedCube, Some(c), _) => self.cubes.iter().any(|k| k.color == c && self.observed(k)),
            (SensorType::UnderStack, Some(c), _) => {
                self.cubes.iter().any(|k| k.color == c && self.on_table(&k.id) && self.has_cube_on_top(&k.id))
            }
            (SensorType::BinClear, _, Some(side)) => {
                self.bin(side).ok_or_else(|| WorldError::UnknownSensorType(s.prop()))?.lid_open
            }
            _ => return Err(WorldError::UnknownSensorType(s.prop())),
        })
    }

    pub fn sense(&self, sensors: &[SensorSym]) -> Result<Valuation, WorldError> {
        let mut v = Valuation::new();
        for s in sensors {
            v.set(&s.prop(), self.sense_one(s)?);
        }
        Ok(v)
    }

    fn pickable(&self, color: Color) -> Option<&Cube> {
        self.cubes.iter().find(|k| k.color == color && self.observed(k) && !self.has_cube_on_top(&k.id))
    }

    /// Apply an actuation primitive; the input world is left untouched.
    pub fn apply_action(&self, a: &ActionSym) -> Result<World, WorldError> {
        let mut w = self.clone();
        let pre = |msg: String| WorldError::PreconditionViolated(format!("{}: {msg}", a.prop()));
        let gi = w
            .grippers
            .iter()
            .position(|g| g.side == a.arm)
            .ok_or_else(|| pre(format!("no {} gripper", a.arm.name())))?;
        match a.kind {
            ActionType::PickUp => {
                let color = a.color.ok_or_else(|| pre("pickup without a target color".into()))?;
                if w.grippers[gi].holding.is_some() {
                    return Err(pre("gripper is full".into()));
                }
                let id = self
                    .pickable(color)
                    .ok_or_else(|| pre(format!("no free {} cube in reach", color.name())))?
                    .id
                    .clone();
                let cube = w.cubes.iter_mut().find(|c| c.id == id).expect("cube exists");
                cube.on_top_of = None;
                w.grippers[gi].holding = Some(id);
            }
            ActionType::Place | ActionType::Release => {
                let held = w.grippers[gi].holding.clone().ok_or_else(|| pre("gripper is empty".into()))?;
                match (a.kind, a.dest) {
                    (ActionType::Place, Some(Destination::Bin(side))) => {
                        let bin = w
                            .bins
                            .iter_mut()
                            .find(|b| b.side == side)
                            .ok_or_else(|| pre(format!("no {} bin", side.name())))?;
                        if !bin.lid_open {
                            return Err(pre(format!("{} bin is closed", side.name())));
                        }
                        bin.contents.push(held);
                    }
                    (ActionType::Place, Some(Destination::OnCube(color))) => {
                        let base = self
                            .cubes
                            .iter()
                            .find(|k| k.color == color && k.id != held && self.observed(k) && !self.has_cube_on_top(&k.id))
                            .ok_or_else(|| pre(format!("no free {} cube to stack on", color.name())))?;
                        let (bid, mut pose) = (base.id.clone(), base.pose);
                        pose[2] += CUBE_SIZE;
                        let cube = w.cubes.iter_mut().find(|c| c.id == held).expect("held cube exists");
                        cube.on_top_of = Some(bid);
                        cube.pose = pose;
                    }
                    (ActionType::Release, _) => {
                        let cube = w.cubes.iter_mut().find(|c| c.id == held).expect("held cube exists");
                        cube.on_top_of = None;
                        cube.pose[2] = 0.0;
                    }
                    _ => return Err(pre("place without a destination".into())),
                }
                w.grippers[gi].holding = None;
            }
        }
        Ok(w)
    }

    /// Apply an environment edit; the input world is left untouched.
    pub fn apply_edit(&self, e: &WorldEdit) -> Result<World, WorldError> {
        let mut w = self.clone();
        let bad = |msg: String| WorldError::BadEdit(msg);
        match e {
            WorldEdit::AddCube { color, on } => {
                let n = (1..).find(|n| w.cube(&format!("cube_{}_{n}", color.name())).is_none()).expect("free id");
                let id = format!("cube_{}_{n}", color.name());
                let (pose, on_top_of) = match on {
                    None => (home_slot(*color), None),
                    Some(base) => {
                        let b = self
                            .pickable(*base)
                            .ok_or_else(|| bad(format!("no free {} cube to stack on", base.name())))?;
                        ([b.pose[0], b.pose[1], b.pose[2] + CUBE_SIZE], Some(b.id.clone()))
                    }
                };
                w.cubes.push(Cube { id, color: *color, pose, on_top_of });
            }
            WorldEdit::RemoveCube { color } => {
                let id = self
                    .pickable(*color)
                    .ok_or_else(|| bad(format!("no visible {} cube to remove", color.name())))?
                    .id
                    .clone();
                w.cubes.retain(|c| c.id != id);
            }
            WorldEdit::Unstack { color } => {
                let top = self
                    .cubes
                    .iter()
                    .find(|k| {
                        self.on_table(&k.id)
                            && k.on_top_of.as_deref().and_then(|u| self.cube(u)).map(|u| u.color) == Some(*color)
                    })
                    .ok_or_else(|| bad(format!("nothing stacked on a {} cube", color.name())))?
                    .id
                    .clone();
                // anything resting on the removed cube drops with it
                let mut gone = vec![top];
                while let Some(next) = w
                    .cubes
                    .iter()
                    .find(|c| c.on_top_of.as_ref().is_some_and(|u| gone.contains(u)) && !gone.contains(&c.id))
                {
                    gone.push(next.id.clone());
                }
                w.cubes.retain(|c| !gone.contains(&c.id));
            }
            WorldEdit::SetLid { side, open } => {
                let bin = w.bins.iter_mut().find(|b| b.side == *side).ok_or_else(|| bad(format!("no {} bin", side.name())))?;
                bin.lid_open = *open;
            }
        }
        Ok(w)
    }
}

/// Where a freshly added cube of a color is put.
pub fn home_slot(c: Color) -> [f64; 3] {
    match c {
        Color::Blue => [0.5, 0.2, 0.0],
        Color::Red => [0.5, -0.2, 0.0],
        Color::Green => [0.6, 0.0, 0.0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::bundled_world;

    fn env2() -> World {
        bundled_world("sorting_env2").unwrap()
    }

    #[test]
    fn env2_senses_everything_true() {
        let w = env2();
        let v = w.sense(&w.task_sensors()).unwrap();
        let names: Vec<&str> = v.names().collect();
        assert_eq!(names, ["left_bin_clear", "observed_cube_blue", "observed_cube_red", "right_bin_clear"]);
        assert!(v.0.values().all(|b| *b));
    }

    #[test]
    fn env4_red_is_under_blue() {
        let w = bundled_world("stacking_env4").unwrap();
        let v = w.sense(&w.task_sensors()).unwrap();
        assert_eq!(v.get("understack_cube_red"), Some(true));
        assert_eq!(v.get("understack_cube_blue"), Some(false));
        assert_eq!(v.get("observed_cube_red"), Some(true));
        let pick_red = ActionSym::pickup(Side::Right, Color::Red);
        assert!(matches!(w.apply_action(&pick_red), Err(WorldError::PreconditionViolated(_))));
        let w2 = w.apply_edit(&WorldEdit::Unstack { color: Color::Red }).unwrap();
        assert_eq!(w2.sense_one(&SensorSym::understack(Color::Red)), Ok(false));
        assert!(w2.apply_action(&pick_red).is_ok());
    }

    #[test]
    fn pickup_then_place() {
        let w = env2();
        let a = ActionSym::pickup(Side::Right, Color::Blue);
        let held = w.apply_action(&a).unwrap();
        assert_eq!(held.gripper(Side::Right).unwrap().holding.as_deref(), Some("cube_blue_1"));
        assert_eq!(held.sense_one(&SensorSym::observed(Color::Blue)), Ok(false));
        assert_eq!(w.sense_one(&SensorSym::observed(Color::Blue)), Ok(true));
        assert!(matches!(held.apply_action(&ActionSym::pickup(Side::Right, Color::Red)), Err(WorldError::PreconditionViolated(_))));
        let closed = held.apply_edit(&WorldEdit::SetLid { side: Side::Right, open: false }).unwrap();
        assert!(matches!(closed.apply_action(&ActionSym::place_bin(Side::Right)), Err(WorldError::PreconditionViolated(_))));
        let placed = held.apply_action(&ActionSym::place_bin(Side::Right)).unwrap();
        assert_eq!(placed.bin(Side::Right).unwrap().contents, ["cube_blue_1"]);
        placed.validate().unwrap();
    }

    #[test]
    fn round_trip_and_validation() {
        let w = env2();
        assert_eq!(World::from_json(&w.to_json()).unwrap(), w);
        let mut bad = w.clone();
        bad.cubes[0].on_top_of = Some(bad.cubes[1].id.clone());
        bad.cubes[1].on_top_of = Some(bad.cubes[0].id.clone());
        assert!(matches!(bad.validate(), Err(WorldError::Invalid(_))));
        let empty = World::empty("e", Task::Sorting);
        assert!(empty.task_sensors().is_empty());
    }

    #[test]
    fn reach_radius_limits_observation() {
        let mut w = env2();
        w.cubes[0].pose = [1.2, 0.0, 0.0];
        assert_eq!(w.sense_one(&SensorSym::observed(Color::Blue)), Ok(false));
    }
}
