//! Cart-pole balancing with the classic-control constants and explicit Euler
//! integration. Reward is +1 on every step, including the failing one.

use rand::Rng;

use super::State;

pub const GRAVITY: f64 = 9.8;
pub const MASS_CART: f64 = 1.0;
pub const MASS_POLE: f64 = 0.1;
const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
/// Half the pole length.
pub const HALF_LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = MASS_POLE * HALF_LENGTH;
pub const FORCE_MAG: f64 = 10.0;
pub const TAU: f64 = 0.02;

pub const X_THRESHOLD: f64 = 2.4;
pub const THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;

pub(super) fn initial_state<R: Rng>(rng: &mut R) -> State {
    State((0..4).map(|_| rng.gen_range(-0.05..0.05)).collect())
}

pub(super) fn advance(s: &[f64], action: usize) -> (Vec<f64>, f64, bool) {
    let (x, x_dot, theta, theta_dot) = (s[0], s[1], s[2], s[3]);
    let force = if action == 1 { FORCE_MAG } else { -FORCE_MAG };
    let (sin, cos) = (theta.sin(), theta.cos());

    let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin) / TOTAL_MASS;
    let theta_acc = (GRAVITY * sin - cos * temp)
        / (HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos * cos / TOTAL_MASS));
    let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS;

    let next = vec![
        x + TAU * x_dot,
        x_dot + TAU * x_acc,
        theta + TAU * theta_dot,
        theta_dot + TAU * theta_acc,
    ];
    let terminal = next[0].abs() > X_THRESHOLD || next[2].abs() > THETA_THRESHOLD;
    (next, 1.0, terminal)
}
