use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Blue,
    Red,
    Green,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::Blue, Color::Red, Color::Green];

    pub fn name(self) -> &'static str {
        match self {
            Color::Blue => "blue",
            Color::Red => "red",
            Color::Green => "green",
        }
    }

    pub fn from_name(s: &str) -> Option<Color> {
        Color::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const ALL: [Side; 2] = [Side::Left, Side::Right];

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }

    pub fn from_name(s: &str) -> Option<Side> {
        Side::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Sorting,
    Stacking,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Sorting => "sorting",
            Task::Stacking => "stacking",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sorting" => Ok(Task::Sorting),
            "stacking" => Ok(Task::Stacking),
            other => Err(format!("unknown task `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorType {
    ObservedCube,
    BinClear,
    UnderStack,
}

/// A sensor proposition together with what it is about. The proposition
/// name is derived, never stored, so the two cannot drift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SensorSym {
    pub kind: SensorType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Color>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
}

impl SensorSym {
    pub fn observed(c: Color) -> Self {
        SensorSym { kind: SensorType::ObservedCube, color: Some(c), side: None }
    }

    pub fn bin_clear(s: Side) -> Self {
        SensorSym { kind: SensorType::BinClear, color: None, side: Some(s) }
    }

    pub fn understack(c: Color) -> Self {
        SensorSym { kind: SensorType::UnderStack, color: Some(c), side: None }
    }

    pub fn prop(&self) -> String {
        match (self.kind, self.color, self.side) {
            (SensorType::ObservedCube, Some(c), _) => format!("observed_cube_{}", c.name()),
            (SensorType::UnderStack, Some(c), _) => format!("understack_cube_{}", c.name()),
            (SensorType::BinClear, _, Some(s)) => format!("{}_bin_clear", s.name()),
            _ => format!("{:?}", self.kind).to_lowercase(),
        }
    }

    pub fn from_prop(name: &str) -> Option<Self> {
        if let Some(c) = name.strip_prefix("observed_cube_") {
            return Color::from_name(c).map(Self::observed);
        }
        if let Some(c) = name.strip_prefix("understack_cube_") {
            return Color::from_name(c).map(Self::understack);
        }
        name.strip_suffix("_bin_clear").and_then(Side::from_name).map(Self::bin_clear)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionType {
    PickUp,
    Place,
    Release,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "target")]
pub enum Destination {
    Bin(Side),
    OnCube(Color),
}

/// An actuation primitive. `color` is the cube a pickup targets; `dest` is
/// where a place puts the held cube.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionSym {
    pub kind: ActionType,
    pub arm: Side,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Color>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dest: Option<Destination>,
}

impl ActionSym {
    pub fn pickup(arm: Side, color: Color) -> Self {
        ActionSym { kind: ActionType::PickUp, arm, color: Some(color), dest: None }
    }

    pub fn place_bin(side: Side) -> Self {
        ActionSym { kind: ActionType::Place, arm: side, color: None, dest: Some(Destination::Bin(side)) }
    }

    pub fn place_on(color: Color) -> Self {
        ActionSym { kind: ActionType::Place, arm: Side::Right, color: None, dest: Some(Destination::OnCube(color)) }
    }

    pub fn release(arm: Side) -> Self {
        ActionSym { kind: ActionType::Release, arm, color: None, dest: None }
    }

    pub fn prop(&self) -> String {
        match (self.kind, self.dest) {
            (ActionType::PickUp, _) => format!("pickup_{}", self.arm.name()),
            (ActionType::Place, Some(Destination::Bin(s))) => format!("place_{}_bin", s.name()),
            (ActionType::Place, Some(Destination::OnCube(c))) => format!("place_on_{}", c.name()),
            (ActionType::Place, None) => format!("place_{}", self.arm.name()),
            (ActionType::Release, _) => format!("release_{}", self.arm.name()),
        }
    }
}

/// Memory proposition tracking whether an arm holds a cube.
pub fn gripper_prop(arm: Side) -> String {
    format!("{}_gripper", arm.name())
}
