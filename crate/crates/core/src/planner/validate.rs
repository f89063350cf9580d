use serde::{Deserialize, Serialize};

use super::{PlanError, Trajectory};
use crate::gridmap::{Point, SemanticRegion, WorldMap};

/// Interior points checked on each segment between consecutive micro-steps.
pub const SEGMENT_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticViolation {
    pub robot: String,
    /// Index into `[start, micro_1, ..., micro_TK]`.
    pub step: usize,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterRobotViolation {
    pub robots: [String; 2],
    pub step: usize,
    pub positions: [Point; 2],
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub static_violations: Vec<StaticViolation>,
    pub inter_robot_violations: Vec<InterRobotViolation>,
    pub goal_reached: Vec<bool>,
    /// Distance from each final position to its nearest goal region.
    pub goal_distance: Vec<f64>,
    /// Smallest pairwise distance over all steps (`None` for one robot).
    pub min_clearance: Option<f64>,
}

impl Validation {
    pub fn success(&self) -> bool {
        self.static_violations.is_empty()
            && self.inter_robot_violations.is_empty()
            && self.goal_reached.iter().all(|g| *g)
    }
}

/// Checks trajectories against obstacles, the safety distance and their goals.
///
/// Each trajectory is read as its start followed by its micro-steps. A step is
/// flagged when its position is not free, or, with both endpoints free, when
/// one of the interior points of the segment from the previous step is not.
pub fn validate_plan(
    trajectories: &[Trajectory],
    goals: &[Vec<SemanticRegion>],
    map: &WorldMap,
    d_safe: f64,
    goal_tol: f64,
) -> Result<Validation, PlanError> {
    if trajectories.is_empty() {
        return Err(PlanError::Input("no trajectories to validate".into()));
    }
    if goals.len() != trajectories.len() {
        return Err(PlanError::Input(format!(
            "{} goal lists for {} trajectories",
            goals.len(),
            trajectories.len()
        )));
    }
    let len = trajectories[0].micro_steps.len();
    if let Some(bad) = trajectories.iter().find(|t| t.micro_steps.len() != len) {
        return Err(PlanError::Input(format!(
            "robot {} has {} micro-steps, expected {len}",
            bad.id,
            bad.micro_steps.len()
        )));
    }
    let seqs: Vec<Vec<Point>> = trajectories
        .iter()
        .map(|t| {
            let mut seq = Vec::with_capacity(len + 1);
            seq.push(t.start());
            seq.extend_from_slice(&t.micro_steps);
            seq
        })
        .collect();

    let mut static_violations = Vec::new();
    for (traj, seq) in trajectories.iter().zip(&seqs) {
        for (step, p) in seq.iter().enumerate() {
            let bad = if !map.is_free(p) {
                true
            } else if step > 0 && map.is_free(&seq[step - 1]) {
                let a = seq[step - 1];
                (1..=SEGMENT_SAMPLES).any(|k| {
                    let f = k as f64 / (SEGMENT_SAMPLES + 1) as f64;
                    !map.is_free(&(a + (p - a) * f))
                })
            } else {
                false
            };
            if bad {
                static_violations.push(StaticViolation {
                    robot: traj.id.clone(),
                    step,
                    position: *p,
                });
            }
        }
    }

    let mut inter_robot_violations = Vec::new();
    let mut min_clearance: Option<f64> = None;
    for step in 0..=len {
        for i in 0..seqs.len() {
            for j in i + 1..seqs.len() {
                let d = (seqs[i][step] - seqs[j][step]).norm();
                min_clearance = Some(min_clearance.map_or(d, |m| m.min(d)));
                if !(d > d_safe) {
                    inter_robot_violations.push(InterRobotViolation {
                        robots: [trajectories[i].id.clone(), trajectories[j].id.clone()],
                        step,
                        positions: [seqs[i][step], seqs[j][step]],
                        distance: d,
                    });
                }
            }
        }
    }

    let mut goal_reached = Vec::with_capacity(seqs.len());
    let mut goal_distance = Vec::with_capacity(seqs.len());
    for (seq, regions) in seqs.iter().zip(goals) {
        let last = seq[len];
        let d = regions
            .iter()
            .map(|r| r.distance_to(&last, map))
            .fold(f64::INFINITY, f64::min);
        goal_reached.push(d <= goal_tol);
        goal_distance.push(d);
    }

    Ok(Validation {
        static_violations,
        inter_robot_violations,
        goal_reached,
        goal_distance,
        min_clearance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(id: &str, pts: &[(f64, f64)]) -> Trajectory {
        let pts: Vec<Point> = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
        Trajectory {
            id: id.into(),
            waypoints: vec![pts[0], *pts.last().unwrap()],
            micro_steps: pts[1..].to_vec(),
        }
    }

    fn map_with_block() -> WorldMap {
        let n = 20;
        let mut occ = vec![false; n * n];
        occ[10 * n + 10] = true;
        WorldMap::new("block", n, n, (2.0, 2.0), occ, vec![SemanticRegion::rect("g", 17, 17, 2, 2)]).unwrap()
    }

    #[test]
    fn obstacle_point_flags_one_step() {
        let map = map_with_block();
        let goal = vec![map.regions()[0].clone()];
        // (1.05, 1.05) lies in the blocked cell
        let t = traj("a", &[(0.85, 1.05), (0.95, 1.05), (1.05, 1.05), (1.25, 1.25), (1.8, 1.8)]);
        let v = validate_plan(&[t], &[goal], &map, 0.1, 0.05).unwrap();
        assert_eq!(v.static_violations.len(), 1);
        assert_eq!(v.static_violations[0].step, 2);
        assert_eq!(v.goal_reached, vec![true]);
    }

    #[test]
    fn crossing_segment_flagged() {
        let map = map_with_block();
        let goal = vec![map.regions()[0].clone()];
        let t = traj("a", &[(0.95, 1.05), (1.15, 1.05)]);
        let v = validate_plan(&[t], &[goal], &map, 0.1, 0.05).unwrap();
        assert_eq!(v.static_violations.len(), 1);
        assert_eq!(v.static_violations[0].step, 1);
        assert_eq!(v.goal_reached, vec![false]);
    }

    #[test]
    fn coincident_robots_flagged() {
        let map = map_with_block();
        let goal = vec![map.regions()[0].clone()];
        let a = traj("a", &[(0.2, 0.2), (0.5, 0.5), (0.6, 0.6)]);
        let b = traj("b", &[(0.8, 0.2), (0.5, 0.5), (0.2, 0.6)]);
        let v = validate_plan(&[a, b], &[goal.clone(), goal], &map, 0.1, 0.05).unwrap();
        assert_eq!(v.inter_robot_violations.len(), 1);
        assert_eq!(v.inter_robot_violations[0].step, 1);
        assert_eq!(v.min_clearance, Some(0.0));
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let map = map_with_block();
        let goal = vec![map.regions()[0].clone()];
        let a = traj("a", &[(0.2, 0.2), (0.5, 0.5)]);
        let b = traj("b", &[(0.8, 0.2), (0.5, 0.5), (0.2, 0.6)]);
        assert!(matches!(
            validate_plan(&[a, b], &[goal.clone(), goal], &map, 0.1, 0.05),
            Err(PlanError::Input(_))
        ));
    }
}
