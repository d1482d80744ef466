// SPDX-License-Identifier: Apache-2.0

//! Robot–landmark visibility graph and the shortest landmark-chain search.
//!
//! Robots are adjacent when their latest panoramas share a landmark. A route
//! from `start` to `goal` is a minimum-hop robot chain ending at a robot that
//! sees the goal. Waypoints are one shared landmark per hop, then the goal.
//!
//! Ties are broken lexicographically: first on the whole robot sequence, then
//! on the shared landmark chosen for each hop.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::Transaction;
use crate::panorama::contains_landmark;

/// Max team size accepted by [`oracle_plan`].
pub const ORACLE_MAX_ROBOTS: usize = 8;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VisibilityGraph {
    robots: BTreeSet<String>,
    landmarks: BTreeSet<String>,
    sees: BTreeMap<String, BTreeSet<String>>,
    seen_by: BTreeMap<String, BTreeSet<String>>,
}

impl VisibilityGraph {
    /// Graph with the given edges. Endpoints missing from the node sets are
    /// added.
    pub fn from_edges<R, L, E>(robots: R, landmarks: L, edges: E) -> Self
    where
        R: IntoIterator,
        R::Item: Into<String>,
        L: IntoIterator,
        L::Item: Into<String>,
        E: IntoIterator<Item = (String, String)>,
    {
        let mut g = VisibilityGraph::default();
        for r in robots {
            g.add_robot(r.into());
        }
        for l in landmarks {
            g.landmarks.insert(l.into());
        }
        for (r, l) in edges {
            g.add_edge(r, l);
        }
        g
    }

    fn add_robot(&mut self, robot: String) {
        self.sees.entry(robot.clone()).or_default();
        self.robots.insert(robot);
    }

    pub fn add_edge(&mut self, robot: String, landmark: String) {
        self.add_robot(robot.clone());
        self.landmarks.insert(landmark.clone());
        self.sees
            .entry(robot.clone())
            .or_default()
            .insert(landmark.clone());
        self.seen_by.entry(landmark).or_default().insert(robot);
    }

    pub fn robots(&self) -> &BTreeSet<String> {
        &self.robots
    }

    pub fn landmarks(&self) -> &BTreeSet<String> {
        &self.landmarks
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.sees
            .iter()
            .flat_map(|(r, ls)| ls.iter().map(move |l| (r.as_str(), l.as_str())))
    }

    pub fn edge_count(&self) -> usize {
        self.sees.values().map(BTreeSet::len).sum()
    }

    pub fn has_edge(&self, robot: &str, landmark: &str) -> bool {
        self.sees.get(robot).is_some_and(|ls| ls.contains(landmark))
    }

    pub fn visible_from(&self, robot: &str) -> impl Iterator<Item = &str> {
        self.sees
            .get(robot)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    pub fn degree(&self, robot: &str) -> usize {
        self.sees.get(robot).map_or(0, BTreeSet::len)
    }

    /// Smallest landmark id both robots see.
    pub fn first_shared(&self, a: &str, b: &str) -> Option<&str> {
        let la = self.sees.get(a)?;
        let lb = self.sees.get(b)?;
        la.iter().find(|l| lb.contains(*l)).map(String::as_str)
    }

    /// Robots sharing at least one landmark with `robot`, ascending.
    fn neighbours(&self, robot: &str) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for l in self.visible_from(robot) {
            for r in self.seen_by.get(l).into_iter().flatten() {
                if r != robot {
                    out.insert(r.as_str());
                }
            }
        }
        out
    }
}

/// Builds the graph from a ledger tip, e.g. the output of `latest_states`.
pub fn build_graph<'a, I>(latest: I) -> VisibilityGraph
where
    I: IntoIterator<Item = (&'a str, &'a Transaction)>,
{
    let mut g = VisibilityGraph::default();
    for (robot, tx) in latest {
        g.add_robot(robot.to_string());
        for obs in &tx.panorama.observations {
            debug_assert!(contains_landmark(&tx.panorama, &obs.landmark_id));
            g.add_edge(robot.to_string(), obs.landmark_id.clone());
        }
    }
    g
}

pub fn robots_seeing<'g>(g: &'g VisibilityGraph, landmark_id: &str) -> Vec<&'g str> {
    g.seen_by
        .get(landmark_id)
        .into_iter()
        .flatten()
        .map(String::as_str)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavigationPlan {
    pub start_robot: String,
    pub goal: String,
    /// Shared landmarks in travel order, ending with `goal`.
    pub waypoints: Vec<String>,
    /// `via_robots[i]` sees `waypoints[i]`; `via_robots[0]` is the start.
    pub via_robots: Vec<String>,
}

impl NavigationPlan {
    /// Number of robots the chain spans.
    pub fn hops(&self) -> usize {
        self.via_robots.len()
    }

    /// Checks the plan's structure against a graph. Returns the first broken
    /// rule as text.
    pub fn check_against(&self, g: &VisibilityGraph) -> Result<(), String> {
        if self.waypoints.is_empty() {
            return Err("no waypoints".into());
        }
        if self.waypoints.len() != self.via_robots.len() {
            return Err("waypoints and via_robots differ in length".into());
        }
        if self.via_robots[0] != self.start_robot {
            return Err("chain does not start at start_robot".into());
        }
        if self.waypoints.last() != Some(&self.goal) {
            return Err("last waypoint is not the goal".into());
        }
        if !g.has_edge(&self.start_robot, &self.waypoints[0]) {
            return Err(format!(
                "{} cannot see {}",
                self.start_robot, self.waypoints[0]
            ));
        }
        for i in 0..self.waypoints.len() - 1 {
            let via = &self.via_robots[i + 1];
            for w in [&self.waypoints[i], &self.waypoints[i + 1]] {
                if !g.has_edge(via, w) {
                    return Err(format!("{via} cannot see {w}"));
                }
            }
        }
        let distinct: BTreeSet<&String> = self.via_robots.iter().collect();
        if distinct.len() != self.via_robots.len() {
            return Err("robot repeated in chain".into());
        }
        Ok(())
    }

    fn from_chain(g: &VisibilityGraph, chain: &[&str], goal: &str) -> NavigationPlan {
        let mut waypoints: Vec<String> = chain
            .windows(2)
            .map(|w| {
                g.first_shared(w[0], w[1])
                    .expect("consecutive chain robots share a landmark")
                    .to_string()
            })
            .collect();
        waypoints.push(goal.to_string());
        NavigationPlan {
            start_robot: chain[0].to_string(),
            goal: goal.to_string(),
            waypoints,
            via_robots: chain.iter().map(|r| r.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("no chain of shared landmarks reaches the goal")]
    NoPath,
    #[error("robot {0} is not in the visibility graph")]
    UnknownRobot(String),
    #[error("oracle limited to {ORACLE_MAX_ROBOTS} robots, graph has {0}")]
    TooLarge(usize),
}

impl PlanError {
    /// Short machine-readable name.
    pub fn code(&self) -> &'static str {
        match self {
            PlanError::NoPath => "NoPath",
            PlanError::UnknownRobot(_) => "UnknownRobot",
            PlanError::TooLarge(_) => "TooLarge",
        }
    }
}

/// Breadth-first search over robots.
///
/// Neighbours are expanded in ascending order and each robot keeps the first
/// parent that reaches it, so within a BFS layer the queue is ordered by the
/// lexicographic order of the robots' best paths. The first goal-seer popped
/// therefore ends the shortest, lexicographically smallest chain.
pub fn plan_route(
    g: &VisibilityGraph,
    start_robot: &str,
    goal: &str,
) -> Result<NavigationPlan, PlanError> {
    if !g.robots.contains(start_robot) {
        return Err(PlanError::UnknownRobot(start_robot.to_string()));
    }
    let mut parent: BTreeMap<&str, Option<&str>> = BTreeMap::new();
    let mut queue = VecDeque::new();
    parent.insert(start_robot, None);
    queue.push_back(start_robot);

    while let Some(robot) = queue.pop_front() {
        if g.has_edge(robot, goal) {
            let mut chain = vec![robot];
            let mut cur = robot;
            while let Some(Some(p)) = parent.get(cur) {
                chain.push(p);
                cur = p;
            }
            chain.reverse();
            return Ok(NavigationPlan::from_chain(g, &chain, goal));
        }
        for next in g.neighbours(robot) {
            if !parent.contains_key(next) {
                parent.insert(next, Some(robot));
                queue.push_back(next);
            }
        }
    }
    Err(PlanError::NoPath)
}

/// Exhaustive reference planner: enumerates every simple robot sequence from
/// `start_robot` and keeps the shortest, lexicographically smallest one
/// ending at a goal-seer. Test use only; refuses teams above
/// [`ORACLE_MAX_ROBOTS`].
pub fn oracle_plan(
    g: &VisibilityGraph,
    start_robot: &str,
    goal: &str,
) -> Result<NavigationPlan, PlanError> {
    if g.robots.len() > ORACLE_MAX_ROBOTS {
        return Err(PlanError::TooLarge(g.robots.len()));
    }
    if !g.robots.contains(start_robot) {
        return Err(PlanError::UnknownRobot(start_robot.to_string()));
    }
    let robots: Vec<&str> = g.robots.iter().map(String::as_str).collect();
    let shares = |a: &str, b: &str| g.first_shared(a, b).is_some();

    let mut best: Option<Vec<&str>> = None;
    let mut stack: Vec<Vec<&str>> = vec![vec![start_robot]];
    while let Some(path) = stack.pop() {
        let last = *path.last().unwrap();
        if g.has_edge(last, goal) {
            let better = match &best {
                None => true,
                Some(b) => (path.len(), &path) < (b.len(), b),
            };
            if better {
                best = Some(path.clone());
            }
        }
        for &r in &robots {
            if !path.contains(&r) && shares(last, r) {
                let mut ext = path.clone();
                ext.push(r);
                stack.push(ext);
            }
        }
    }
    let chain = best.ok_or(PlanError::NoPath)?;
    let mut waypoints: Vec<String> = chain
        .windows(2)
        .map(|w| {
            let a: BTreeSet<&str> = g.visible_from(w[0]).collect();
            let b: BTreeSet<&str> = g.visible_from(w[1]).collect();
            a.intersection(&b).min().unwrap().to_string()
        })
        .collect();
    waypoints.push(goal.to_string());
    Ok(NavigationPlan {
        start_robot: start_robot.to_string(),
        goal: goal.to_string(),
        waypoints,
        via_robots: chain.iter().map(|r| r.to_string()).collect(),
    })
}
