use crate::ltl::Valuation;

use super::strategy::Strategy;
use super::GameError;

/// Supplies sensor values to a running controller.
pub trait SensorPolicy {
    /// Sensor values at time 0.
    fn initial(&mut self) -> Valuation;
    /// Sensor values for step `step` (1-based) given the current full state.
    fn next(&mut self, step: usize, current: &Valuation) -> Valuation;
}

/// Replays a fixed list of sensor valuations, repeating the last one.
#[derive(Clone, Debug)]
pub struct ScriptedSensors {
    pub script: Vec<Valuation>,
}

impl SensorPolicy for ScriptedSensors {
    fn initial(&mut self) -> Valuation {
        self.script.first().cloned().unwrap_or_default()
    }

    fn next(&mut self, step: usize, _current: &Valuation) -> Valuation {
        self.script.get(step).or(self.script.last()).cloned().unwrap_or_default()
    }
}

impl<F: FnMut(usize, &Valuation) -> Valuation> SensorPolicy for F {
    fn initial(&mut self) -> Valuation {
        self(0, &Valuation::new())
    }

    fn next(&mut self, step: usize, current: &Valuation) -> Valuation {
        self(step, current)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlayStep {
    pub env: Valuation,
    pub sys: Valuation,
    pub node: usize,
    pub goals_hit: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PlayTrace {
    pub steps: Vec<PlayStep>,
}

impl PlayTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Run a strategy against a sensor policy for `max_steps` transitions. The
/// trace holds the initial state followed by one entry per transition.
pub fn simulate(
    strategy: &Strategy,
    policy: &mut dyn SensorPolicy,
    max_steps: usize,
) -> Result<PlayTrace, GameError> {
    let x0 = policy.initial();
    let mut node = strategy.initial_for(&x0).ok_or(GameError::IllegalEnvMove(0))?;
    let record = |node: usize| PlayStep {
        env: strategy.sensors(node),
        sys: strategy.system(node),
        node,
        goals_hit: strategy.goals_at(node),
    };
    let mut trace = PlayTrace { steps: vec![record(node)] };
    for step in 1..=max_steps {
        let x = policy.next(step, &strategy.valuation(node));
        node = strategy.step(node, &x).ok_or(GameError::IllegalEnvMove(step))?;
        trace.steps.push(record(node));
    }
    Ok(trace)
}
