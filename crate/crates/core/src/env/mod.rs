//! Deterministic, seedable control tasks behind one stepping interface.
//!
//! Every environment is a pure function of `(state, action)`; randomness only
//! enters through [`reset`], which derives the initial state from a seed.

mod acrobot;
mod cartpole;
mod lander;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, UdrlError};

pub use acrobot::energy_pumping_action;

/// Names of the two command features appended to every state.
pub const COMMAND_FEATURE_NAMES: [&str; 2] = ["d_r", "d_t"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    CartPole,
    Acrobot,
    #[serde(rename = "lander")]
    SimpleLander,
}

impl EnvKind {
    pub const ALL: [EnvKind; 3] = [EnvKind::CartPole, EnvKind::Acrobot, EnvKind::SimpleLander];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::CartPole => "cartpole",
            EnvKind::Acrobot => "acrobot",
            EnvKind::SimpleLander => "lander",
        }
    }

    pub fn spec(self) -> EnvSpec {
        spec(self)
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = UdrlError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cartpole" => Ok(EnvKind::CartPole),
            "acrobot" => Ok(EnvKind::Acrobot),
            "lander" | "simplelander" => Ok(EnvKind::SimpleLander),
            other => Err(UdrlError::InvalidConfig(format!(
                "unknown environment '{other}' (expected cartpole, acrobot or lander)"
            ))),
        }
    }
}

/// An environment observation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(pub Vec<f64>);

impl State {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for State {
    fn from(values: Vec<f64>) -> Self {
        State(values)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvSpec {
    pub kind: EnvKind,
    pub state_dim: usize,
    pub action_count: usize,
    pub max_steps: usize,
    pub feature_names: &'static [&'static str],
}

impl EnvSpec {
    /// Display names of a full behavior-function input: state features then `d_r`, `d_t`.
    pub fn input_feature_names(&self) -> Vec<String> {
        self.feature_names
            .iter()
            .chain(COMMAND_FEATURE_NAMES.iter())
            .map(|s| s.to_string())
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.state_dim + COMMAND_FEATURE_NAMES.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub next_state: State,
    pub reward: f64,
    pub terminal: bool,
    /// Set when the step exhausted the horizon.
    pub truncated: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

pub fn spec(kind: EnvKind) -> EnvSpec {
    match kind {
        EnvKind::CartPole => EnvSpec {
            kind,
            state_dim: 4,
            action_count: 2,
            max_steps: 200,
            feature_names: &["x", "ẋ", "θ", "θ̇"],
        },
        EnvKind::Acrobot => EnvSpec {
            kind,
            state_dim: 6,
            action_count: 3,
            max_steps: 500,
            feature_names: &["sin θ₁", "cos θ₁", "sin θ₂", "cos θ₂", "θ̇₁", "θ̇₂"],
        },
        EnvKind::SimpleLander => EnvSpec {
            kind,
            state_dim: 8,
            action_count: 4,
            max_steps: 400,
            feature_names: &["x", "y", "ẋ", "ẏ", "θ", "θ̇", "l_c", "r_c"],
        },
    }
}

/// Draws the initial state for `kind` from a generator seeded with `seed`.
pub fn reset(kind: EnvKind, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        EnvKind::CartPole => cartpole::initial_state(&mut rng),
        EnvKind::Acrobot => acrobot::initial_state(&mut rng),
        EnvKind::SimpleLander => lander::initial_state(&mut rng),
    }
}

/// Advances `state` by one tick under `action`. `step_count` is the number of
/// steps already taken in the episode.
pub fn step(kind: EnvKind, state: &State, action: usize, step_count: usize) -> Result<StepResult> {
    let spec = spec(kind);
    if action >= spec.action_count {
        return Err(UdrlError::InvalidAction {
            action,
            action_count: spec.action_count,
        });
    }
    if state.len() != spec.state_dim {
        return Err(UdrlError::Dimension {
            expected: spec.state_dim,
            got: state.len(),
        });
    }
    if step_count >= spec.max_steps {
        return Err(UdrlError::StepLimit {
            step_count,
            max_steps: spec.max_steps,
        });
    }
    let (next_state, reward, terminal) = match kind {
        EnvKind::CartPole => cartpole::advance(state.values(), action),
        EnvKind::Acrobot => acrobot::advance(state.values(), action),
        EnvKind::SimpleLander => lander::advance(state.values(), action),
    };
    Ok(StepResult {
        next_state: State(next_state),
        reward,
        terminal,
        truncated: step_count + 1 >= spec.max_steps,
    })
}

/// A running episode: owns the current state and the step counter.
#[derive(Clone, Debug)]
pub struct Environment {
    spec: EnvSpec,
    state: State,
    step_count: usize,
    done: bool,
}

impl Environment {
    pub fn new(kind: EnvKind, seed: u64) -> Self {
        Environment {
            spec: spec(kind),
            state: reset(kind, seed),
            step_count: 0,
            done: false,
        }
    }

    pub fn kind(&self) -> EnvKind {
        self.spec.kind
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn step(&mut self, action: usize) -> Result<StepResult> {
        if self.done {
            return Err(UdrlError::EpisodeFinished);
        }
        let result = step(self.spec.kind, &self.state, action, self.step_count)?;
        self.state = result.next_state.clone();
        self.step_count += 1;
        self.done = result.done();
        Ok(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_constants() {
        let cp = spec(EnvKind::CartPole);
        assert_eq!((cp.state_dim, cp.action_count, cp.max_steps), (4, 2, 200));
        let ac = spec(EnvKind::Acrobot);
        assert_eq!((ac.state_dim, ac.action_count, ac.max_steps), (6, 3, 500));
        let la = spec(EnvKind::SimpleLander);
        assert_eq!((la.state_dim, la.action_count, la.max_steps), (8, 4, 400));
        for kind in EnvKind::ALL {
            let s = spec(kind);
            assert_eq!(s.feature_names.len(), s.state_dim);
            let names = s.input_feature_names();
            assert_eq!(names.len(), s.state_dim + 2);
            assert_eq!(&names[s.state_dim..], &["d_r", "d_t"]);
        }
    }

    #[test]
    fn step_rejects_bad_input() {
        let s = reset(EnvKind::CartPole, 0);
        assert!(matches!(
            step(EnvKind::CartPole, &s, 2, 0),
            Err(UdrlError::InvalidAction { action: 2, action_count: 2 })
        ));
        let short = State(vec![0.0; 3]);
        assert!(matches!(
            step(EnvKind::CartPole, &short, 0, 0),
            Err(UdrlError::Dimension { expected: 4, got: 3 })
        ));
        assert!(matches!(
            step(EnvKind::CartPole, &s, 0, 200),
            Err(UdrlError::StepLimit { .. })
        ));
    }

    #[test]
    fn truncation_flag_at_horizon() {
        let s = State(vec![0.0; 4]);
        let r = step(EnvKind::CartPole, &s, 0, 199).unwrap();
        assert!(r.truncated);
        let r = step(EnvKind::CartPole, &s, 0, 198).unwrap();
        assert!(!r.truncated);
    }

    #[test]
    fn env_kind_parses_and_serializes() {
        for kind in EnvKind::ALL {
            assert_eq!(kind.name().parse::<EnvKind>().unwrap(), kind);
        }
        assert!("pendulum".parse::<EnvKind>().is_err());
    }

    #[test]
    fn reset_is_deterministic() {
        for kind in EnvKind::ALL {
            let a = reset(kind, 42);
            let b = reset(kind, 42);
            assert_eq!(
                a.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
            assert_eq!(a.len(), spec(kind).state_dim);
        }
    }
}
