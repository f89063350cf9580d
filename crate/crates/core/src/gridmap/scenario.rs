use std::collections::HashSet;
use std::path::PathBuf;
use std::sync::Arc;

use super::{resolve_goal_regions, GoalError, Point, WorldMap};
use crate::planner::ConfigOverrides;

/// One robot's task: where it starts and what it was told.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotSpec {
    pub id: String,
    /// Fixed start in world units; `None` samples uniformly from free space.
    pub start: Option<Point>,
    pub instruction: String,
}

impl RobotSpec {
    pub fn new(id: impl Into<String>, start: Option<Point>, instruction: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            start,
            instruction: instruction.into(),
        }
    }
}

/// How the scenario document referenced its map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapSource {
    Inline,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: Option<String>,
    pub map: Arc<WorldMap>,
    pub map_source: MapSource,
    pub robots: Vec<RobotSpec>,
    pub seed: u64,
    pub config: ConfigOverrides,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("scenario has no robots")]
    NoRobots,
    #[error("duplicate robot id {0:?}")]
    DuplicateId(String),
    #[error("robot {id:?} start ({x}, {y}) is not in free space")]
    StartNotFree { id: String, x: f64, y: f64 },
    #[error("robot {id:?}: {source}")]
    Goal {
        id: String,
        #[source]
        source: GoalError,
    },
}

impl Scenario {
    pub fn new(map: Arc<WorldMap>, robots: Vec<RobotSpec>, seed: u64) -> Self {
        Self {
            name: None,
            map,
            map_source: MapSource::Inline,
            robots,
            seed,
            config: ConfigOverrides::default(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Checks id uniqueness, start placement, and instruction grounding.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.robots.is_empty() {
            return Err(ScenarioError::NoRobots);
        }
        let mut ids = HashSet::new();
        for robot in &self.robots {
            if !ids.insert(robot.id.as_str()) {
                return Err(ScenarioError::DuplicateId(robot.id.clone()));
            }
            if let Some(p) = robot.start {
                if !self.map.is_free(&p) {
                    return Err(ScenarioError::StartNotFree {
                        id: robot.id.clone(),
                        x: p.x,
                        y: p.y,
                    });
                }
            }
            resolve_goal_regions(&robot.instruction, &self.map).map_err(|source| {
                ScenarioError::Goal {
                    id: robot.id.clone(),
                    source,
                }
            })?;
        }
        Ok(())
    }
}

