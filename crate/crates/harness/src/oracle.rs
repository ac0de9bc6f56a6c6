//! Reference solutions the simulations are checked against.

/// Position at time `t` of a point moving from `x0` at constant speed `v0`
/// toward a rigid wall at `wall_x`, reflected without loss on impact.
pub fn analytic_wall_trajectory(x0: f64, v0: f64, wall_x: f64, t: f64) -> f64 {
    let free = x0 + v0 * t;
    let past = if v0 >= 0.0 { free - wall_x } else { wall_x - free };
    if past > 0.0 {
        free - 2.0 * past * v0.signum()
    } else {
        free
    }
}

/// Time at which the point reaches the wall, if it ever does.
pub fn wall_impact_time(x0: f64, v0: f64, wall_x: f64) -> Option<f64> {
    let t = (wall_x - x0) / v0;
    (t.is_finite() && t >= 0.0).then_some(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_is_a_mirror() {
        assert_eq!(analytic_wall_trajectory(0.0, 1.0, 1.0, 0.5), 0.5);
        assert_eq!(analytic_wall_trajectory(0.0, 1.0, 1.0, 1.0), 1.0);
        assert_eq!(analytic_wall_trajectory(0.0, 1.0, 1.0, 1.5), 0.5);
        assert_eq!(analytic_wall_trajectory(0.0, -1.0, -1.0, 1.5), -0.5);
        assert_eq!(wall_impact_time(0.0, 1.0, 1.0), Some(1.0));
        assert_eq!(wall_impact_time(0.0, -1.0, 1.0), None);
    }
}
