//! Planar point-mass lander with orientation, standing in for the rigid-body
//! lunar lander. Terrain is flat at `y = 0` with the pad centred on `x = 0`.
//!
//! Observation: `[x, y, ẋ, ẏ, θ, θ̇, left_contact, right_contact]`.
//! Actions: 0 idle, 1 left engine (pushes right, spins clockwise),
//! 2 main engine, 3 right engine (pushes left, spins counter-clockwise).
//!
//! Touchdown (`y <= CONTACT_HEIGHT`) always ends the episode: a landing with
//! both legs down and small velocities pays `+LANDING_REWARD`, anything else
//! is a crash. Leaving `|x| <= X_LIMIT` is also a crash. Each step adds the
//! change of the shaping potential, engine costs and a one-off bonus per leg.

use rand::Rng;

use super::State;

pub const GRAVITY: f64 = 1.6;
pub const MAIN_ENGINE_ACCEL: f64 = 13.0;
pub const SIDE_ENGINE_ACCEL: f64 = 0.5;
/// Angular velocity change per side-engine firing.
pub const SIDE_ENGINE_SPIN: f64 = 0.05;
pub const DT: f64 = 0.02;

pub const CONTACT_HEIGHT: f64 = 0.01;
pub const CONTACT_MAX_TILT: f64 = 0.35;
pub const SAFE_SPEED: f64 = 0.5;
pub const X_LIMIT: f64 = 1.5;
pub const START_HEIGHT: f64 = 1.4;

pub const LANDING_REWARD: f64 = 100.0;
pub const CRASH_REWARD: f64 = -100.0;
pub const LEG_CONTACT_REWARD: f64 = 10.0;
pub const MAIN_ENGINE_COST: f64 = 0.3;
pub const SIDE_ENGINE_COST: f64 = 0.03;

pub(super) fn initial_state<R: Rng>(rng: &mut R) -> State {
    let x = rng.gen_range(-0.3..0.3);
    let vx = rng.gen_range(-0.1..0.1);
    let vy = rng.gen_range(-0.1..0.1);
    let theta = rng.gen_range(-0.05..0.05);
    let omega = rng.gen_range(-0.05..0.05);
    State(vec![x, START_HEIGHT, vx, vy, theta, omega, 0.0, 0.0])
}

/// Shaping potential; rises toward zero as the lander nears the pad centre at rest.
pub fn potential(s: &[f64]) -> f64 {
    -((s[0] * s[0] + s[1] * s[1]).sqrt() + s[2].abs() + s[3].abs() + s[4].abs())
}

pub(super) fn advance(s: &[f64], action: usize) -> (Vec<f64>, f64, bool) {
    let (mut x, mut y, mut vx, mut vy, mut theta, mut omega) = (s[0], s[1], s[2], s[3], s[4], s[5]);
    let mut ax = 0.0;
    let mut ay = -GRAVITY;
    let mut reward = 0.0;

    match action {
        1 | 3 => {
            // body x-axis is (cos θ, sin θ)
            let dir = if action == 1 { 1.0 } else { -1.0 };
            ax += dir * SIDE_ENGINE_ACCEL * theta.cos();
            ay += dir * SIDE_ENGINE_ACCEL * theta.sin();
            omega -= dir * SIDE_ENGINE_SPIN;
            reward -= SIDE_ENGINE_COST;
        }
        2 => {
            // body up-axis is (-sin θ, cos θ)
            ax -= MAIN_ENGINE_ACCEL * theta.sin();
            ay += MAIN_ENGINE_ACCEL * theta.cos();
            reward -= MAIN_ENGINE_COST;
        }
        _ => {}
    }

    // semi-implicit Euler: velocities first, positions with the new velocities
    vx += ax * DT;
    vy += ay * DT;
    x += vx * DT;
    y += vy * DT;
    theta += omega * DT;

    let touchdown = y <= CONTACT_HEIGHT;
    let legs_down = touchdown && theta.abs() < CONTACT_MAX_TILT;
    let contact = if legs_down { 1.0 } else { 0.0 };
    if touchdown {
        y = y.max(0.0);
    }

    let next = vec![x, y, vx, vy, theta, omega, contact, contact];
    reward += potential(&next) - potential(s);
    for leg in 6..8 {
        if next[leg] == 1.0 && s[leg] == 0.0 {
            reward += LEG_CONTACT_REWARD;
        }
    }

    let mut terminal = false;
    if touchdown {
        terminal = true;
        let landed = legs_down && vy.abs() < SAFE_SPEED && vx.abs() < SAFE_SPEED;
        reward += if landed { LANDING_REWARD } else { CRASH_REWARD };
    } else if x.abs() > X_LIMIT {
        terminal = true;
        reward += CRASH_REWARD;
    }
    (next, reward, terminal)
}
