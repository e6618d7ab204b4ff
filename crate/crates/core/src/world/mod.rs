//! Simulated tabletop: scenes, sensing, action effects, environment policies,
//! and controller execution.

mod episode;
mod scene;
mod symbols;

use std::path::Path;

use thiserror::Error;

pub use episode::{
    edits_towards, run_episode, EnvironmentPolicy, Episode, EpisodeConfig, EpisodeStatus, ExecStep, ExecutionTrace,
    PolicyRunner,
};
pub use scene::{home_slot, Bin, Cube, Gripper, World, WorldEdit, CUBE_SIZE, DEFAULT_REACH, TABLE_HALF};
pub use symbols::{gripper_prop, ActionSym, ActionType, Color, Destination, SensorSym, SensorType, Side, Task};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("{0}")]
    Io(String),
    #[error("world file: {0}")]
    Format(String),
    #[error("invalid world: {0}")]
    Invalid(String),
    #[error("sensor `{0}` is not defined for this world")]
    UnknownSensorType(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("environment edit failed: {0}")]
    BadEdit(String),
    #[error("cannot realize sensor values {0} by editing the world")]
    Unmappable(String),
    #[error("controller has no initial node for sensor values {0}")]
    NoInitialNode(String),
}

/// The two bundled scenes, keyed by name.
pub fn bundled_world(name: &str) -> Option<World> {
    let text = match name {
        "sorting_env2" => include_str!("../../data/worlds/sorting_env2.json"),
        "stacking_env4" => include_str!("../../data/worlds/stacking_env4.json"),
        _ => return None,
    };
    Some(World::from_json(text).expect("bundled world is valid"))
}

/// Load a world by file path, falling back to a bundled scene name.
pub fn load_world(spec: &str) -> Result<World, WorldError> {
    let path = Path::new(spec);
    if path.exists() {
        return World::load(path);
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
    bundled_world(stem).ok_or_else(|| WorldError::Io(format!("{spec}: file not found")))
}
