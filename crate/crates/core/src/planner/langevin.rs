use super::guidance::interrobot_guidance;
use super::PlanError;
use crate::gridmap::{Point, WorldMap};
use crate::heatfield::ScoreField;

#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub positions: Vec<Point>,
    /// Current diffusion level.
    pub t: usize,
}

/// Parameters of one Langevin update.
#[derive(Debug, Clone, Copy)]
pub struct StepParams {
    pub alpha: f64,
    pub beta: f64,
    pub d_margin: f64,
}

/// Proposed move of one robot, split into its deterministic and random parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub drift: Point,
    pub noise: Point,
}

/// Drift `0.5 alpha^2 (s + beta g)` and noise `alpha eps` for every robot,
/// all evaluated at the same snapshot.
pub fn propose(
    state: &JointState,
    fields: &[&ScoreField],
    params: StepParams,
    eps: &[Point],
) -> Result<Vec<Proposal>, PlanError> {
    let n = state.positions.len();
    assert_eq!(fields.len(), n, "one field per robot");
    assert_eq!(eps.len(), n, "one noise draw per robot");
    let guidance = if params.beta > 0.0 {
        interrobot_guidance(&state.positions, params.d_margin)?
    } else {
        vec![Point::zeros(); n]
    };
    let half_a2 = 0.5 * params.alpha * params.alpha;
    Ok((0..n)
        .map(|i| {
            let s = fields[i].interpolate_clamped(&state.positions[i]);
            Proposal {
                drift: (s + guidance[i] * params.beta) * half_a2,
                noise: eps[i] * params.alpha,
            }
        })
        .collect())
}

/// Plain update `x + drift + noise`, clamped to the domain.
pub fn langevin_step(
    state: &JointState,
    fields: &[&ScoreField],
    params: StepParams,
    eps: &[Point],
    map: &WorldMap,
) -> Result<JointState, PlanError> {
    let moves = propose(state, fields, params, eps)?;
    Ok(JointState {
        positions: state
            .positions
            .iter()
            .zip(&moves)
            .map(|(x, m)| map.clamp(&(x + m.drift + m.noise)))
            .collect(),
        t: state.t,
    })
}

/// Update that never leaves free space or brings two robots within `d_safe`.
///
/// Each robot takes its full move when the straight segment to it is free,
/// else its drift alone, else stays. Then, while some pair ends up within
/// `d_safe`, both robots of every such pair fall back to their previous
/// positions. The previous configuration is feasible, so this terminates.
pub fn filtered_step(
    state: &JointState,
    fields: &[&ScoreField],
    params: StepParams,
    eps: &[Point],
    map: &WorldMap,
    d_safe: f64,
) -> Result<JointState, PlanError> {
    let moves = propose(state, fields, params, eps)?;
    let prev = &state.positions;
    let mut next: Vec<Point> = prev
        .iter()
        .zip(&moves)
        .map(|(x, m)| {
            let full = map.clamp(&(x + m.drift + m.noise));
            if map.segment_is_free(x, &full) {
                return full;
            }
            let drift = map.clamp(&(x + m.drift));
            if map.segment_is_free(x, &drift) {
                return drift;
            }
            *x
        })
        .collect();
    let n = next.len();
    let mut reverted = vec![false; n];
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in i + 1..n {
                if (next[i] - next[j]).norm() <= d_safe {
                    for k in [i, j] {
                        if !reverted[k] {
                            reverted[k] = true;
                            next[k] = prev[k];
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(JointState {
        positions: next,
        t: state.t,
    })
}
