// SPDX-License-Identifier: Apache-2.0

//! Scenario files and the seeded random-placement generator.
//!
//! ```json
//! {"seed": 1, "sensor_range": 40, "approach_distance": 3, "speed": 0.5,
//!  "policy": {"distance_threshold": 2, "difference_threshold": 0.25, "time_threshold": 10000},
//!  "landmarks": [{"id": "L1", "x": 0, "y": 0, "radius": 1}],
//!  "walls": [[0, 5, 10, 5]],
//!  "robots": [{"id": "R1", "x": 0, "y": -5, "script": [[1, -5], [2, -5]]}]}
//! ```
//!
//! `tick_ms` (default 100) and `tasks` (navigation requests run after the
//! scripts) are optional.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Point2, Segment};
use crate::ledger::compute_hash;
use crate::panorama::{UpdatePolicy, DESCRIPTOR_LEN};
use crate::sim::SimError;
use crate::world::{Landmark, Pose, WorldModel};

fn default_sensor_range() -> f64 {
    WorldModel::DEFAULT_SENSOR_RANGE
}
fn default_approach() -> f64 {
    WorldModel::DEFAULT_APPROACH_DISTANCE
}
fn default_speed() -> f64 {
    WorldModel::DEFAULT_SPEED
}
fn default_tick_ms() -> u64 {
    100
}
fn default_max_ticks() -> u32 {
    5_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandmarkSpec {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub id: String,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub script: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub robot: String,
    pub goal: String,
    #[serde(default = "default_max_ticks")]
    pub max_ticks: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    #[serde(default = "default_sensor_range")]
    pub sensor_range: f64,
    #[serde(default = "default_approach")]
    pub approach_distance: f64,
    #[serde(default = "default_speed")]
    pub speed: f64,
    #[serde(default)]
    pub policy: UpdatePolicy,
    #[serde(default = "default_tick_ms")]
    pub tick_ms: u64,
    pub landmarks: Vec<LandmarkSpec>,
    #[serde(default)]
    pub walls: Vec<[f64; 4]>,
    pub robots: Vec<RobotSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tasks: Vec<Task>,
}

/// Everything about a run that is not world geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub policy: UpdatePolicy,
    /// Simulated milliseconds per tick.
    pub tick_ms: u64,
    pub scripts: BTreeMap<String, Vec<Point2>>,
    pub tasks: Vec<Task>,
}

/// Appearance signature for a landmark, fixed by seed and id.
pub fn landmark_descriptor(seed: u64, landmark_id: &str) -> Vec<f64> {
    let mut preimage = seed.to_be_bytes().to_vec();
    preimage.extend_from_slice(landmark_id.as_bytes());
    let digest = compute_hash(&preimage);
    digest.as_bytes()[..DESCRIPTOR_LEN]
        .iter()
        .map(|&b| f64::from(b) / 255.0)
        .collect()
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::ScenarioInvalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Scenario, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::ScenarioInvalid(format!("{}: {e}", path.display())))?;
        Scenario::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenarios always serialize")
    }

    /// Builds the world and run configuration. `seed` overrides the file's.
    pub fn build(&self, seed: Option<u64>) -> Result<(WorldModel, SimConfig), SimError> {
        let seed = seed.unwrap_or(self.seed);
        let invalid = |m: String| Err(SimError::ScenarioInvalid(m));
        self.policy.validate().map_err(SimError::ScenarioInvalid)?;
        if self.tick_ms == 0 {
            return invalid("tick_ms must be positive".into());
        }

        let mut world = WorldModel::empty();
        world.sensor_range = self.sensor_range;
        world.approach_distance = self.approach_distance;
        world.speed = self.speed;

        for l in &self.landmarks {
            if l.id.is_empty() {
                return invalid("landmark id must not be empty".into());
            }
            let landmark = Landmark {
                center: Point2::new(l.x, l.y),
                radius: l.radius,
                descriptor: landmark_descriptor(seed, &l.id),
            };
            if world.landmarks.insert(l.id.clone(), landmark).is_some() {
                return invalid(format!("duplicate landmark id {}", l.id));
            }
        }
        world.walls = self
            .walls
            .iter()
            .map(|[x1, y1, x2, y2]| Segment::from_coords(*x1, *y1, *x2, *y2))
            .collect();

        let mut scripts = BTreeMap::new();
        for r in &self.robots {
            if r.id.is_empty() {
                return invalid("robot id must not be empty".into());
            }
            if world
                .robots
                .insert(r.id.clone(), Pose::new(r.x, r.y, 0.0))
                .is_some()
            {
                return invalid(format!("duplicate robot id {}", r.id));
            }
            let script: Vec<Point2> = r.script.iter().map(|[x, y]| Point2::new(*x, *y)).collect();
            if script.iter().any(|p| !p.is_finite()) {
                return invalid(format!("robot {} script has non-finite points", r.id));
            }
            scripts.insert(r.id.clone(), script);
        }
        world
            .validate()
            .map_err(|e| SimError::ScenarioInvalid(e.to_string()))?;

        let known: BTreeSet<&String> = world.robots.keys().collect();
        for t in &self.tasks {
            if !known.contains(&t.robot) {
                return invalid(format!("task names unknown robot {}", t.robot));
            }
        }

        Ok((
            world,
            SimConfig {
                seed,
                policy: self.policy,
                tick_ms: self.tick_ms,
                scripts,
                tasks: self.tasks.clone(),
            },
        ))
    }
}

/// Parameters for a random open-field scenario: landmarks scattered over a
/// rectangle, robots visiting random positions with consecutive team
/// members a bounded distance apart.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomLayout {
    pub robots: usize,
    pub positions: usize,
    pub landmarks: usize,
    pub width: f64,
    pub height: f64,
    pub min_spacing: f64,
    pub max_spacing: f64,
}

impl Default for RandomLayout {
    fn default() -> Self {
        RandomLayout {
            robots: 2,
            positions: 40,
            landmarks: 80,
            width: 130.0,
            height: 180.0,
            min_spacing: 1.0,
            max_spacing: 20.0,
        }
    }
}

fn round_cm(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

impl RandomLayout {
    pub fn generate(&self, seed: u64) -> Scenario {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let landmarks = (0..self.landmarks)
            .map(|i| LandmarkSpec {
                id: format!("L{i:03}"),
                x: round_cm(rng.gen_range(0.0..self.width)),
                y: round_cm(rng.gen_range(0.0..self.height)),
                radius: round_cm(rng.gen_range(0.3..1.5)),
            })
            .collect();

        let margin = self.max_spacing;
        // one extra leading placement: the robots' starting poses
        let mut scripts: Vec<Vec<[f64; 2]>> =
            vec![Vec::with_capacity(self.positions + 1); self.robots];
        for _ in 0..=self.positions {
            let mut prev = [
                rng.gen_range(margin..self.width - margin),
                rng.gen_range(margin..self.height - margin),
            ];
            for (i, script) in scripts.iter_mut().enumerate() {
                let p = if i == 0 {
                    prev
                } else {
                    self.place_near(&mut rng, prev)
                };
                let p = [round_cm(p[0]), round_cm(p[1])];
                script.push(p);
                prev = p;
            }
        }

        let robots = scripts
            .into_iter()
            .enumerate()
            .map(|(i, mut script)| {
                let [x, y] = script.remove(0);
                RobotSpec {
                    id: format!("R{}", i + 1),
                    x,
                    y,
                    script,
                }
            })
            .collect();

        Scenario {
            seed,
            sensor_range: 30.0,
            approach_distance: 2.0,
            speed: WorldModel::DEFAULT_SPEED,
            // every scripted jump is a new published position
            policy: UpdatePolicy {
                distance_threshold: 1e-3,
                ..UpdatePolicy::default()
            },
            tick_ms: default_tick_ms(),
            landmarks,
            walls: Vec::new(),
            robots,
            tasks: Vec::new(),
        }
    }

    fn place_near(&self, rng: &mut ChaCha8Rng, from: [f64; 2]) -> [f64; 2] {
        let mut candidate = from;
        for _ in 0..64 {
            let d = rng.gen_range(self.min_spacing..=self.max_spacing);
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            candidate = [from[0] + d * theta.cos(), from[1] + d * theta.sin()];
            if (0.0..=self.width).contains(&candidate[0])
                && (0.0..=self.height).contains(&candidate[1])
            {
                return candidate;
            }
        }
        [
            candidate[0].clamp(0.0, self.width),
            candidate[1].clamp(0.0, self.height),
        ]
    }
}
