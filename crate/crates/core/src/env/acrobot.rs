//! Two-link underactuated pendulum ("book" dynamics). Torque acts on the
//! joint between the links; the goal is to swing the tip above one link
//! length over the pivot.
//!
//! Integration runs in angle space with a single RK4 step of `DT`; the
//! observation encodes each angle as `(sin, cos)`.

use std::f64::consts::PI;

use rand::Rng;

use super::State;

const LINK_LENGTH_1: f64 = 1.0;
const LINK_MASS_1: f64 = 1.0;
const LINK_MASS_2: f64 = 1.0;
const LINK_COM_1: f64 = 0.5;
const LINK_COM_2: f64 = 0.5;
const LINK_MOI: f64 = 1.0;
const GRAVITY: f64 = 9.8;

pub const DT: f64 = 0.2;
pub const MAX_VEL_1: f64 = 4.0 * PI;
pub const MAX_VEL_2: f64 = 9.0 * PI;
const TORQUES: [f64; 3] = [-1.0, 0.0, 1.0];

pub(super) fn initial_state<R: Rng>(rng: &mut R) -> State {
    let raw: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-0.1..0.1));
    State(observe(&raw))
}

fn observe(s: &[f64; 4]) -> Vec<f64> {
    vec![s[0].sin(), s[0].cos(), s[1].sin(), s[1].cos(), s[2], s[3]]
}

fn decode(obs: &[f64]) -> [f64; 4] {
    [obs[0].atan2(obs[1]), obs[2].atan2(obs[3]), obs[4], obs[5]]
}

/// Tip height relative to the pivot, in link lengths.
pub(super) fn tip_height(theta1: f64, theta2: f64) -> f64 {
    -theta1.cos() - (theta1 + theta2).cos()
}

pub(super) fn advance(obs: &[f64], action: usize) -> (Vec<f64>, f64, bool) {
    let torque = TORQUES[action];
    let s = decode(obs);
    let mut ns = rk4(s, torque);
    ns[0] = wrap(ns[0]);
    ns[1] = wrap(ns[1]);
    ns[2] = ns[2].clamp(-MAX_VEL_1, MAX_VEL_1);
    ns[3] = ns[3].clamp(-MAX_VEL_2, MAX_VEL_2);
    let terminal = tip_height(ns[0], ns[1]) > 1.0;
    let reward = if terminal { 0.0 } else { -1.0 };
    (observe(&ns), reward, terminal)
}

fn wrap(angle: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut a = angle;
    while a > PI {
        a -= two_pi;
    }
    while a < -PI {
        a += two_pi;
    }
    a
}

fn derivatives(s: [f64; 4], torque: f64) -> [f64; 4] {
    let (m1, m2) = (LINK_MASS_1, LINK_MASS_2);
    let l1 = LINK_LENGTH_1;
    let (lc1, lc2) = (LINK_COM_1, LINK_COM_2);
    let (i1, i2) = (LINK_MOI, LINK_MOI);
    let g = GRAVITY;
    let [theta1, theta2, dtheta1, dtheta2] = s;

    let d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * theta2.cos()) + i1 + i2;
    let d2 = m2 * (lc2 * lc2 + l1 * lc2 * theta2.cos()) + i2;
    let phi2 = m2 * lc2 * g * (theta1 + theta2 - PI / 2.0).cos();
    let phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * theta2.sin()
        - 2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * theta2.sin()
        + (m1 * lc1 + m2 * l1) * g * (theta1 - PI / 2.0).cos()
        + phi2;
    let ddtheta2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * theta2.sin() - phi2)
        / (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    let ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    [dtheta1, dtheta2, ddtheta1, ddtheta2]
}

fn rk4(s: [f64; 4], torque: f64) -> [f64; 4] {
    let offset = |base: [f64; 4], k: [f64; 4], h: f64| -> [f64; 4] {
        std::array::from_fn(|i| base[i] + h * k[i])
    };
    let k1 = derivatives(s, torque);
    let k2 = derivatives(offset(s, k1, DT / 2.0), torque);
    let k3 = derivatives(offset(s, k2, DT / 2.0), torque);
    let k4 = derivatives(offset(s, k3, DT), torque);
    std::array::from_fn(|i| s[i] + DT / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Scripted swing-up controller. The joint torque reacts on the first link
/// with opposite sign, so pumping energy into the first link's swing means
/// torquing against its angular velocity.
pub fn energy_pumping_action(state: &State) -> usize {
    let dtheta1 = state.values()[4];
    if dtheta1 > 0.0 {
        0
    } else if dtheta1 < 0.0 {
        2
    } else {
        1
    }
}
