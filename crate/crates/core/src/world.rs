// SPDX-License-Identifier: Apache-2.0

//! Flat 2D world: circular landmarks, wall segments that block sight, and
//! robots with poses. Panoramas come from exact line-of-sight geometry.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{segment_intersects, Point2, Segment};
use crate::panorama::{normalize_angle, LandmarkObservation, PanoramicView};

/// Slack on arrival so rounding never leaves a robot creeping toward a
/// landmark in sub-nanometre steps.
const ARRIVAL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Radians in `[0, 2π)`.
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Landmark {
    pub center: Point2,
    pub radius: f64,
    pub descriptor: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("robot {0} is not in the world")]
    UnknownRobot(String),
    #[error("landmark {0} is not in the world")]
    UnknownLandmark(String),
    #[error("invalid world: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldModel {
    pub landmarks: BTreeMap<String, Landmark>,
    pub walls: Vec<Segment>,
    pub robots: BTreeMap<String, Pose>,
    /// Meters.
    pub sensor_range: f64,
    /// Meters from a landmark center at which homing reports arrival.
    pub approach_distance: f64,
    /// Meters per tick.
    pub speed: f64,
}

impl WorldModel {
    pub const DEFAULT_SENSOR_RANGE: f64 = 40.0;
    pub const DEFAULT_APPROACH_DISTANCE: f64 = 3.0;
    pub const DEFAULT_SPEED: f64 = 0.5;

    pub fn empty() -> Self {
        WorldModel {
            landmarks: BTreeMap::new(),
            walls: Vec::new(),
            robots: BTreeMap::new(),
            sensor_range: Self::DEFAULT_SENSOR_RANGE,
            approach_distance: Self::DEFAULT_APPROACH_DISTANCE,
            speed: Self::DEFAULT_SPEED,
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: String| Err(WorldError::Invalid(m));
        for (name, v) in [
            ("sensor_range", self.sensor_range),
            ("approach_distance", self.approach_distance),
            ("speed", self.speed),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be a positive number, got {v}"));
            }
        }
        for (id, l) in &self.landmarks {
            if !l.center.is_finite() || l.radius.is_nan() || l.radius <= 0.0 {
                return bad(format!("landmark {id} needs finite center and radius > 0"));
            }
            if l.radius >= self.sensor_range {
                return bad(format!("landmark {id} radius must be below sensor_range"));
            }
            if self.approach_distance <= l.radius {
                return bad(format!(
                    "approach_distance {} must exceed landmark {id} radius {}",
                    self.approach_distance, l.radius
                ));
            }
        }
        for w in &self.walls {
            if !w.a.is_finite() || !w.b.is_finite() {
                return bad("wall endpoints must be finite".into());
            }
        }
        for (id, p) in &self.robots {
            if !p.position().is_finite() {
                return bad(format!("robot {id} pose must be finite"));
            }
        }
        Ok(())
    }

    pub fn pose(&self, robot_id: &str) -> Result<Pose, WorldError> {
        self.robots
            .get(robot_id)
            .copied()
            .ok_or_else(|| WorldError::UnknownRobot(robot_id.to_string()))
    }

    pub fn set_pose(&mut self, robot_id: &str, pose: Pose) -> Result<(), WorldError> {
        let slot = self
            .robots
            .get_mut(robot_id)
            .ok_or_else(|| WorldError::UnknownRobot(robot_id.to_string()))?;
        *slot = pose;
        Ok(())
    }

    pub fn landmark(&self, id: &str) -> Result<&Landmark, WorldError> {
        self.landmarks
            .get(id)
            .ok_or_else(|| WorldError::UnknownLandmark(id.to_string()))
    }

    /// Walls are the only occluders; landmarks never hide each other.
    pub fn line_of_sight(&self, from: Point2, to: Point2) -> bool {
        let sight = Segment::new(from, to);
        !self.walls.iter().any(|w| segment_intersects(&sight, w))
    }

    /// Whether `landmark` is in range of and unoccluded from `at`.
    pub fn sees_from(&self, at: Point2, landmark: &Landmark) -> bool {
        at.distance(landmark.center) <= self.sensor_range && self.line_of_sight(at, landmark.center)
    }
}

fn observe(at: Point2, id: &str, landmark: &Landmark) -> LandmarkObservation {
    let distance = at.distance(landmark.center);
    let apparent_size = if distance > landmark.radius {
        2.0 * (landmark.radius / distance).atan()
    } else {
        // standing inside the disc: it fills as much of the view as allowed
        PI * (1.0 - 1e-9)
    };
    LandmarkObservation {
        landmark_id: id.to_string(),
        bearing: normalize_angle(at.angle_to(landmark.center)),
        apparent_size,
        descriptor: landmark.descriptor.clone(),
    }
}

/// Landmarks the robot can currently see, ordered by bearing.
pub fn visible_landmarks(
    world: &WorldModel,
    robot_id: &str,
) -> Result<Vec<LandmarkObservation>, WorldError> {
    let at = world.pose(robot_id)?.position();
    let mut out: Vec<LandmarkObservation> = world
        .landmarks
        .iter()
        .filter(|(_, l)| world.sees_from(at, l))
        .map(|(id, l)| observe(at, id, l))
        .collect();
    out.sort_by(|a, b| {
        a.bearing
            .total_cmp(&b.bearing)
            .then_with(|| a.landmark_id.cmp(&b.landmark_id))
    });
    Ok(out)
}

pub fn capture_panorama(
    world: &WorldModel,
    robot_id: &str,
    now: u64,
) -> Result<PanoramicView, WorldError> {
    Ok(PanoramicView::new(
        robot_id,
        now,
        visible_landmarks(world, robot_id)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HomingStep {
    /// The pose the robot should take this tick.
    Moved(Pose),
    Arrived,
    NotVisible,
}

/// One tick of bearing pursuit toward a landmark. Does not move the robot;
/// apply a `Moved` pose with [`WorldModel::set_pose`].
pub fn homing_step(
    world: &WorldModel,
    robot_id: &str,
    landmark_id: &str,
) -> Result<HomingStep, WorldError> {
    let pose = world.pose(robot_id)?;
    let at = pose.position();
    let Some(landmark) = world.landmarks.get(landmark_id) else {
        return Ok(HomingStep::NotVisible);
    };
    if !world.sees_from(at, landmark) {
        return Ok(HomingStep::NotVisible);
    }
    let distance = at.distance(landmark.center);
    if distance <= world.approach_distance + ARRIVAL_EPS {
        return Ok(HomingStep::Arrived);
    }
    let bearing = at.angle_to(landmark.center);
    let step = world.speed.min(distance - world.approach_distance);
    Ok(HomingStep::Moved(Pose::new(
        at.x + step * bearing.cos(),
        at.y + step * bearing.sin(),
        bearing,
    )))
}
