// SPDX-License-Identifier: Apache-2.0

//! Discrete-time driver tying the world to the ledger.
//!
//! Each tick: scripted robots move, every robot captures a panorama and
//! checks its publish triggers against what it last published, and all
//! resulting transactions go into one new block. Ticks where nobody
//! publishes append nothing.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::Point2;
use crate::ledger::{Chain, Hash, LedgerError, Transaction};
use crate::panorama::{should_update, PriorState, UpdatePolicy, UpdateReason};
use crate::planner::{build_graph, plan_route, NavigationPlan, PlanError};
use crate::scenario::{SimConfig, Task};
use crate::world::{
    capture_panorama, homing_step, visible_landmarks, HomingStep, Pose, WorldError, WorldModel,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("scenario invalid: {0}")]
    ScenarioInvalid(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("plan does not match the ledger tip: {0}")]
    InvalidPlan(String),
}

/// How panoramas reach the rest of the team.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MessageMode {
    /// One broadcast transaction per publishing robot.
    Ledger,
    /// Every publishing robot sends its panorama to each teammate.
    PointToPoint,
}

impl MessageMode {
    pub fn messages_per_publisher(self, team_size: usize) -> u64 {
        match self {
            MessageMode::Ledger => 1,
            MessageMode::PointToPoint => team_size.saturating_sub(1) as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MessageStats {
    pub mode: MessageMode,
    pub messages_sent: u64,
    pub rounds: u64,
}

/// Publisher count per round, from which either mode's totals follow.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MessageLog {
    team_size: usize,
    publishers_per_round: Vec<usize>,
}

impl MessageLog {
    pub fn new(team_size: usize) -> Self {
        MessageLog {
            team_size,
            publishers_per_round: Vec::new(),
        }
    }

    pub fn record_round(&mut self, publishers: usize) {
        if publishers > 0 {
            self.publishers_per_round.push(publishers);
        }
    }

    pub fn team_size(&self) -> usize {
        self.team_size
    }

    pub fn stats(&self, mode: MessageMode) -> MessageStats {
        let per = mode.messages_per_publisher(self.team_size);
        MessageStats {
            mode,
            messages_sent: self
                .publishers_per_round
                .iter()
                .map(|&p| p as u64 * per)
                .sum(),
            rounds: self.publishers_per_round.len() as u64,
        }
    }
}

/// A transaction a robot put on the ledger, and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Publication {
    pub robot_id: String,
    pub tx_id: Hash,
    pub timestamp: u64,
    /// Empty for a robot's first publication.
    pub reasons: Vec<UpdateReason>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ExecutionOutcome {
    Success,
    NextWaypointNotVisible(String),
    TickBudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Arrival {
    pub landmark_id: String,
    pub tick: u32,
    /// Landmarks seen when looking around on arrival.
    pub visible: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionTrace {
    pub robot_id: String,
    pub plan: NavigationPlan,
    /// Starting pose followed by the pose after every movement tick.
    pub poses: Vec<Pose>,
    pub arrivals: Vec<Arrival>,
    pub published: Vec<Publication>,
    pub movement_ticks: u32,
    pub outcome: ExecutionOutcome,
}

impl ExecutionTrace {
    pub fn succeeded(&self) -> bool {
        self.outcome == ExecutionOutcome::Success
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskReport {
    pub task: Task,
    pub result: Result<ExecutionTrace, PlanError>,
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub chain: Chain,
    pub messages: MessageLog,
    /// Publications of each round that appended a block, in order.
    pub rounds: Vec<Vec<Publication>>,
    pub tasks: Vec<TaskReport>,
    pub world: WorldModel,
}

pub struct Simulation {
    world: WorldModel,
    chain: Chain,
    policy: UpdatePolicy,
    priors: BTreeMap<String, PriorState>,
    now_ms: u64,
    tick_ms: u64,
    messages: MessageLog,
}

impl Simulation {
    pub fn new(world: WorldModel, policy: UpdatePolicy, tick_ms: u64) -> Result<Self, SimError> {
        world.validate()?;
        policy.validate().map_err(SimError::ScenarioInvalid)?;
        if tick_ms == 0 {
            return Err(SimError::ScenarioInvalid("tick_ms must be positive".into()));
        }
        let chain = Chain::new(world.robots.keys().cloned(), 0);
        let messages = MessageLog::new(world.robots.len());
        Ok(Simulation {
            world,
            chain,
            policy,
            priors: BTreeMap::new(),
            now_ms: 0,
            tick_ms,
            messages,
        })
    }

    pub fn world(&self) -> &WorldModel {
        &self.world
    }

    /// For editing the environment between phases (e.g. adding a wall).
    pub fn world_mut(&mut self) -> &mut WorldModel {
        &mut self.world
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn messages(&self) -> &MessageLog {
        &self.messages
    }

    pub fn now(&self) -> u64 {
        self.now_ms
    }

    pub fn policy(&self) -> &UpdatePolicy {
        &self.policy
    }

    pub fn advance_clock(&mut self) {
        self.now_ms += self.tick_ms;
    }

    /// Every robot looks around; those whose triggers fire (or that never
    /// published) go into one block at the current time.
    pub fn publish_round(&mut self) -> Result<Vec<Publication>, SimError> {
        let now = self.now_ms;
        let mut pending = Vec::new();
        for (robot, pose) in &self.world.robots {
            let panorama = capture_panorama(&self.world, robot, now)?;
            let position = pose.position();
            let reasons = match self.priors.get(robot) {
                None => Some(Vec::new()),
                Some(prior) => {
                    let d = should_update(&self.policy, prior, position, &panorama, now);
                    d.publish().then(|| d.reasons.into_iter().collect())
                }
            };
            if let Some(reasons) = reasons {
                pending.push((position, reasons, Transaction::new(now, panorama)?));
            }
        }
        if pending.is_empty() {
            return Ok(Vec::new());
        }

        let txs = pending.iter().map(|(_, _, tx)| tx.clone()).collect();
        self.chain.commit(txs, now)?;
        self.messages.record_round(pending.len());

        Ok(pending
            .into_iter()
            .map(|(position, reasons, tx)| {
                let publication = Publication {
                    robot_id: tx.robot_id.clone(),
                    tx_id: tx.tx_id,
                    timestamp: now,
                    reasons,
                };
                self.priors.insert(
                    tx.robot_id.clone(),
                    PriorState {
                        position,
                        panorama: tx.panorama,
                        published_at: now,
                    },
                );
                publication
            })
            .collect())
    }

    /// Plays the waypoint scripts: on tick `t` every robot with a `t`-th
    /// point moves there, then a publish round runs. Returns the
    /// publications of each round that appended a block.
    pub fn run_scripts(
        &mut self,
        scripts: &BTreeMap<String, Vec<Point2>>,
    ) -> Result<Vec<Vec<Publication>>, SimError> {
        let ticks = scripts.values().map(Vec::len).max().unwrap_or(0);
        let mut rounds = Vec::new();
        for t in 0..ticks {
            if t > 0 {
                self.advance_clock();
            }
            for (robot, script) in scripts {
                if let Some(&target) = script.get(t) {
                    let current = self.world.pose(robot)?;
                    let heading = if target == current.position() {
                        current.heading
                    } else {
                        current.position().angle_to(target)
                    };
                    self.world
                        .set_pose(robot, Pose::new(target.x, target.y, heading))?;
                }
            }
            let published = self.publish_round()?;
            if !published.is_empty() {
                rounds.push(published);
            }
        }
        Ok(rounds)
    }

    pub fn plan(&self, robot_id: &str, goal: &str) -> Result<NavigationPlan, PlanError> {
        plan_route(&build_graph(self.chain.latest_states()), robot_id, goal)
    }

    /// Homes through the plan's waypoints in order. On reaching each one the
    /// robot looks around again before heading for the next; if the next is
    /// not in view the run stops with `NextWaypointNotVisible`.
    pub fn execute_plan(
        &mut self,
        robot_id: &str,
        plan: &NavigationPlan,
        max_ticks: u32,
    ) -> Result<ExecutionTrace, SimError> {
        let graph = build_graph(self.chain.latest_states());
        plan.check_against(&graph).map_err(SimError::InvalidPlan)?;
        if plan.start_robot != robot_id {
            return Err(SimError::InvalidPlan(format!(
                "plan starts at {}, not {robot_id}",
                plan.start_robot
            )));
        }

        let mut trace = ExecutionTrace {
            robot_id: robot_id.to_string(),
            plan: plan.clone(),
            poses: vec![self.world.pose(robot_id)?],
            arrivals: Vec::new(),
            published: Vec::new(),
            movement_ticks: 0,
            outcome: ExecutionOutcome::TickBudgetExhausted,
        };
        let mut next = 0usize;
        while next < plan.waypoints.len() {
            let target = &plan.waypoints[next];
            match homing_step(&self.world, robot_id, target)? {
                HomingStep::NotVisible => {
                    trace.outcome = ExecutionOutcome::NextWaypointNotVisible(target.clone());
                    return Ok(trace);
                }
                HomingStep::Arrived => {
                    let visible = visible_landmarks(&self.world, robot_id)?
                        .into_iter()
                        .map(|o| o.landmark_id)
                        .collect();
                    trace.arrivals.push(Arrival {
                        landmark_id: target.clone(),
                        tick: trace.movement_ticks,
                        visible,
                    });
                    next += 1;
                }
                HomingStep::Moved(pose) => {
                    if trace.movement_ticks >= max_ticks {
                        trace.outcome = ExecutionOutcome::TickBudgetExhausted;
                        return Ok(trace);
                    }
                    self.advance_clock();
                    self.world.set_pose(robot_id, pose)?;
                    trace.movement_ticks += 1;
                    trace.poses.push(pose);
                    trace.published.extend(self.publish_round()?);
                }
            }
        }
        trace.outcome = ExecutionOutcome::Success;
        Ok(trace)
    }

    pub fn into_parts(self) -> (WorldModel, Chain, MessageLog) {
        (self.world, self.chain, self.messages)
    }
}

/// Runs scripts, then each task (plan from the ledger tip, then execute).
pub fn run_scenario(world: WorldModel, config: &SimConfig) -> Result<ScenarioRun, SimError> {
    let mut sim = Simulation::new(world, config.policy, config.tick_ms)?;
    let mut rounds = sim.run_scripts(&config.scripts)?;
    if !config.tasks.is_empty() && sim.chain().len() == 1 {
        let first = sim.publish_round()?;
        rounds.push(first);
    }
    let mut tasks = Vec::new();
    for task in &config.tasks {
        let result = match sim.plan(&task.robot, &task.goal) {
            Ok(plan) => Ok(sim.execute_plan(&task.robot, &plan, task.max_ticks)?),
            Err(e) => Err(e),
        };
        tasks.push(TaskReport {
            task: task.clone(),
            result,
        });
    }
    let (world, chain, messages) = sim.into_parts();
    Ok(ScenarioRun {
        chain,
        messages,
        rounds,
        tasks,
        world,
    })
}
