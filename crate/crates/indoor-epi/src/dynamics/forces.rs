//! Social-force terms: goal attraction, pedestrian repulsion/contact, and
//! wall repulsion.

use crate::geometry::Vec2;
use crate::scenario::RoomSpec;

/// Velocity relaxation time, seconds.
pub const RELAXATION_TIME_S: f64 = 0.5;
/// Psychological repulsion strength, newtons.
pub const REPULSION_STRENGTH_N: f64 = 2000.0;
/// Psychological repulsion range, meters.
pub const REPULSION_RANGE_M: f64 = 0.08;
/// Body compression stiffness, kg/s².
pub const BODY_STIFFNESS: f64 = 1.2e5;
/// Sliding friction coefficient, kg/(m·s).
pub const SLIDING_FRICTION: f64 = 2.4e5;
pub const AGENT_MASS_KG: f64 = 80.0;
pub const AGENT_RADIUS_M: f64 = 0.2;
pub const DESIRED_SPEED_MPS: f64 = 1.34;
/// Velocities are capped at this multiple of the desired speed.
pub const SPEED_CAP_FACTOR: f64 = 1.3;
/// Pair interactions beyond this separation are dropped; the psychological
/// term is below 1e-5 N there.
pub const PAIR_CUTOFF_M: f64 = 2.0;
/// Half-width of the entrance/exit openings, where walls exert no force.
pub const DOOR_HALF_WIDTH_M: f64 = 0.6;

/// Attraction toward the target at the desired speed. With no defined
/// direction (agent at the target) only the damping term remains.
pub fn goal_force(position: Vec2, velocity: Vec2, target: Vec2, desired_speed: f64) -> Vec2 {
    let dir = (target - position).normalized_or_zero();
    (dir * desired_speed - velocity) * (AGENT_MASS_KG / RELAXATION_TIME_S)
}

/// Repulsion exerted on agent `i` by agent `j`: exponential psychological
/// term plus, when bodies compress, normal contact and sliding friction.
pub fn pedestrian_force(
    pos_i: Vec2,
    vel_i: Vec2,
    pos_j: Vec2,
    vel_j: Vec2,
    radius_sum: f64,
) -> Vec2 {
    let diff = pos_i - pos_j;
    let dist = diff.norm();
    // Coincident centers: push along a fixed direction instead of NaN.
    let normal = if dist > 1e-12 {
        diff * (1.0 / dist)
    } else {
        Vec2::new(1.0, 0.0)
    };
    let overlap = radius_sum - dist;
    let mut force = normal * (REPULSION_STRENGTH_N * (overlap / REPULSION_RANGE_M).exp());
    if overlap > 0.0 {
        force += normal * (BODY_STIFFNESS * overlap);
        let tangent = normal.perp();
        let tangential_dv = (vel_j - vel_i).dot(tangent);
        force += tangent * (SLIDING_FRICTION * overlap * tangential_dv);
    }
    force
}

/// Total repulsion from the four room walls, skipping door openings around
/// the entrance and exit.
pub fn wall_force(room: &RoomSpec, position: Vec2, velocity: Vec2, radius: f64) -> Vec2 {
    let mut total = Vec2::ZERO;
    for nearest in wall_nearest_points(room, position) {
        if nearest.dist(room.entrance) < DOOR_HALF_WIDTH_M
            || nearest.dist(room.exit) < DOOR_HALF_WIDTH_M
        {
            continue;
        }
        total += pedestrian_force(position, velocity, nearest, Vec2::ZERO, radius);
    }
    total
}

/// Nearest point on each of the four walls to `position`.
fn wall_nearest_points(room: &RoomSpec, p: Vec2) -> [Vec2; 4] {
    let cx = p.x.clamp(0.0, room.width);
    let cy = p.y.clamp(0.0, room.depth);
    [
        Vec2::new(cx, 0.0),
        Vec2::new(cx, room.depth),
        Vec2::new(0.0, cy),
        Vec2::new(room.width, cy),
    ]
}
