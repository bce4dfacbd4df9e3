use rand::Rng;

use crate::model::{distance, Position, SimTime};

/// Position update period for moving nodes, seconds.
pub const MOBILITY_TICK: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityState {
    pub position: Position,
    pub waypoint: Position,
    pub speed: f64,
    pub pause_until: SimTime,
    /// At the waypoint and waiting for a new one.
    arrived: bool,
}

impl MobilityState {
    /// A node sitting at `position` that draws its first waypoint on the
    /// first tick.
    pub fn at(position: Position) -> Self {
        MobilityState {
            position,
            waypoint: position,
            speed: 0.0,
            pause_until: 0.0,
            arrived: true,
        }
    }

    /// A node already heading to `waypoint` at `speed`.
    pub fn heading(position: Position, waypoint: Position, speed: f64) -> Self {
        MobilityState {
            position,
            waypoint,
            speed,
            pause_until: 0.0,
            arrived: false,
        }
    }

    pub fn arrived(&self) -> bool {
        self.arrived
    }
}

/// Advances one tick ending at `now`. After a pause the node draws a uniform
/// waypoint in the area and a uniform speed in `[v_min, v_max]`, then moves
/// in a straight line, snapping onto the waypoint on the tick it arrives.
pub fn random_waypoint_step<R: Rng + ?Sized>(
    state: &mut MobilityState,
    now: SimTime,
    rng: &mut R,
    area: (f64, f64),
    v_min: f64,
    v_max: f64,
    pause: f64,
) {
    if now < state.pause_until {
        return;
    }
    if state.arrived {
        state.waypoint = Position::new(rng.gen_range(0.0..=area.0), rng.gen_range(0.0..=area.1));
        state.speed = if v_max > v_min {
            rng.gen_range(v_min..=v_max)
        } else {
            v_max
        };
        state.arrived = false;
    }
    let step = state.speed * MOBILITY_TICK;
    let remaining = distance(state.position, state.waypoint);
    if remaining <= step + 1e-9 {
        state.position = state.waypoint;
        state.arrived = true;
        state.pause_until = now + pause;
    } else {
        let f = step / remaining;
        state.position = Position::new(
            state.position.x + (state.waypoint.x - state.position.x) * f,
            state.position.y + (state.waypoint.y - state.position.y) * f,
        );
    }
    state.position.x = state.position.x.clamp(0.0, area.0);
    state.position.y = state.position.y.clamp(0.0, area.1);
}
