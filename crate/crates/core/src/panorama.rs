// SPDX-License-Identifier: Apache-2.0

//! Panoramic views, the difference metric between two views, and the policy
//! deciding when a robot has to publish a fresh view to the ledger.
//!
//! A view is the set of landmarks a robot can see from one position, ordered
//! by bearing. Difference between views is the Jaccard distance over landmark
//! ids; descriptors ride along but are not compared.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::geometry::Point2;

/// Default descriptor length used by scenarios that do not pin their own.
pub const DESCRIPTOR_LEN: usize = 8;

/// One landmark sighting inside a panorama.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandmarkObservation {
    pub landmark_id: String,
    /// Radians in `[0, 2π)`, counterclockwise from world +x.
    pub bearing: f64,
    /// Angular diameter in radians.
    pub apparent_size: f64,
    pub descriptor: Vec<f64>,
}

/// Wrap an angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let wrapped = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// A robot's full 360° view at one capture instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanoramicView {
    pub robot_id: String,
    pub captured_at: u64,
    pub observations: Vec<LandmarkObservation>,
}

impl PanoramicView {
    /// Builds a view, sorting by bearing and collapsing repeated sightings of
    /// the same landmark to the one with the largest apparent size.
    pub fn new(
        robot_id: impl Into<String>,
        captured_at: u64,
        observations: impl IntoIterator<Item = LandmarkObservation>,
    ) -> Self {
        let mut kept: Vec<LandmarkObservation> = Vec::new();
        for obs in observations {
            match kept.iter_mut().find(|k| k.landmark_id == obs.landmark_id) {
                Some(existing) => {
                    if obs.apparent_size > existing.apparent_size {
                        *existing = obs;
                    }
                }
                None => kept.push(obs),
            }
        }
        kept.sort_by(|a, b| {
            a.bearing
                .total_cmp(&b.bearing)
                .then_with(|| a.landmark_id.cmp(&b.landmark_id))
        });
        PanoramicView {
            robot_id: robot_id.into(),
            captured_at,
            observations: kept,
        }
    }

    pub fn empty(robot_id: impl Into<String>, captured_at: u64) -> Self {
        Self::new(robot_id, captured_at, std::iter::empty())
    }

    pub fn landmark_ids(&self) -> BTreeSet<&str> {
        self.observations
            .iter()
            .map(|o| o.landmark_id.as_str())
            .collect()
    }

    pub fn observation(&self, landmark_id: &str) -> Option<&LandmarkObservation> {
        self.observations
            .iter()
            .find(|o| o.landmark_id == landmark_id)
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// Jaccard distance between the landmark-id sets of two views. Two empty
/// views are identical (distance 0).
pub fn panorama_difference(a: &PanoramicView, b: &PanoramicView) -> f64 {
    let la = a.landmark_ids();
    let lb = b.landmark_ids();
    let union = la.union(&lb).count();
    if union == 0 {
        return 0.0;
    }
    let inter = la.intersection(&lb).count();
    1.0 - inter as f64 / union as f64
}

pub fn contains_landmark(p: &PanoramicView, landmark_id: &str) -> bool {
    p.observations.iter().any(|o| o.landmark_id == landmark_id)
}

/// Landmarks present in both views, in lexicographic order.
pub fn common_landmarks<'a>(a: &'a PanoramicView, b: &PanoramicView) -> BTreeSet<&'a str> {
    let lb = b.landmark_ids();
    a.observations
        .iter()
        .map(|o| o.landmark_id.as_str())
        .filter(|id| lb.contains(id))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpdatePolicy {
    /// Meters.
    pub distance_threshold: f64,
    /// Jaccard distance in `(0, 1]`.
    pub difference_threshold: f64,
    /// Milliseconds.
    pub time_threshold: u64,
}

impl Default for UpdatePolicy {
    fn default() -> Self {
        UpdatePolicy {
            distance_threshold: 2.0,
            difference_threshold: 0.25,
            time_threshold: 10_000,
        }
    }
}

impl UpdatePolicy {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.distance_threshold.is_finite() && self.distance_threshold > 0.0) {
            return Err(format!(
                "distance_threshold must be > 0, got {}",
                self.distance_threshold
            ));
        }
        if !(self.difference_threshold > 0.0 && self.difference_threshold <= 1.0) {
            return Err(format!(
                "difference_threshold must be in (0, 1], got {}",
                self.difference_threshold
            ));
        }
        if self.time_threshold == 0 {
            return Err("time_threshold must be > 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UpdateReason {
    Distance,
    Difference,
    Time,
}

/// Outcome of [`should_update`]: which of the three triggers fired.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UpdateDecision {
    pub reasons: BTreeSet<UpdateReason>,
}

impl UpdateDecision {
    pub fn publish(&self) -> bool {
        !self.reasons.is_empty()
    }
}

/// What a robot last published.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorState {
    pub position: Point2,
    pub panorama: PanoramicView,
    pub published_at: u64,
}

/// Evaluates the three publish triggers. All comparisons are strict.
pub fn should_update(
    policy: &UpdatePolicy,
    prior: &PriorState,
    current_position: Point2,
    current_panorama: &PanoramicView,
    now: u64,
) -> UpdateDecision {
    debug_assert!(now >= prior.published_at, "clock went backwards");
    let mut reasons = BTreeSet::new();
    if prior.position.distance(current_position) > policy.distance_threshold {
        reasons.insert(UpdateReason::Distance);
    }
    if panorama_difference(&prior.panorama, current_panorama) > policy.difference_threshold {
        reasons.insert(UpdateReason::Difference);
    }
    if now.saturating_sub(prior.published_at) > policy.time_threshold {
        reasons.insert(UpdateReason::Time);
    }
    UpdateDecision { reasons }
}
