// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::BTreeSet;

use homing_chain::geometry::Segment;
use homing_chain::ledger::{to_jsonl_string, validate_chain};
use homing_chain::planner::{build_graph, plan_route};
use homing_chain::scenario::{RandomLayout, Scenario};
use homing_chain::sim::{run_scenario, ExecutionOutcome, Simulation};
use homing_chain::world::visible_landmarks;

const OPEN_RANDOM_SEED: u64 = 7;

fn open_random_layout() -> RandomLayout {
    RandomLayout {
        robots: 3,
        positions: 20,
        ..RandomLayout::default()
    }
}

fn load(name: &str) -> Scenario {
    Scenario::load(&common::scenario_path(name)).unwrap()
}

#[test]
#[ignore = "rewrites scenarios/open_random.json"]
fn regenerate_open_random() {
    let text = open_random_layout()
        .generate(OPEN_RANDOM_SEED)
        .to_json_pretty();
    std::fs::write(common::scenario_path("open_random.json"), text + "\n").unwrap();
}

#[test]
fn bundled_open_random_matches_generator() {
    assert_eq!(
        load("open_random.json"),
        open_random_layout().generate(OPEN_RANDOM_SEED)
    );
}

#[test]
fn relay_tip_graph_and_plan() {
    let (world, config) = load("relay.json").build(None).unwrap();
    let run = run_scenario(world, &config).unwrap();
    assert_eq!(run.chain.len(), 2);
    validate_chain(&run.chain).unwrap();

    let g = build_graph(run.chain.latest_states());
    let seen = |r: &str| g.visible_from(r).collect::<Vec<_>>();
    assert_eq!(seen("R1"), ["L12"]);
    assert_eq!(seen("R2"), ["L12", "L23"]);
    assert_eq!(seen("R3"), ["GOAL", "L23"]);

    let plan = plan_route(&g, "R1", "GOAL").unwrap();
    assert_eq!(plan.waypoints, ["L12", "L23", "GOAL"]);
    assert_eq!(plan.via_robots, ["R1", "R2", "R3"]);
}

#[test]
fn relay_execution_reaches_goal() {
    let (world, config) = load("relay.json").build(None).unwrap();
    let mut sim = Simulation::new(world, config.policy, config.tick_ms).unwrap();
    sim.run_scripts(&config.scripts).unwrap();
    let plan = sim.plan("R1", "GOAL").unwrap();
    let trace = sim.execute_plan("R1", &plan, 5000).unwrap();
    assert_eq!(trace.outcome, ExecutionOutcome::Success);

    let arrived: Vec<_> = trace
        .arrivals
        .iter()
        .map(|a| a.landmark_id.as_str())
        .collect();
    assert_eq!(arrived, ["L12", "L23", "GOAL"]);
    // each arrival could see the next waypoint
    for pair in trace.arrivals.windows(2) {
        assert!(pair[0].visible.contains(&pair[1].landmark_id));
    }
    let end = sim.world().pose("R1").unwrap().position();
    let goal = sim.world().landmark("GOAL").unwrap().center;
    assert!(end.distance(goal) <= sim.world().approach_distance);
    validate_chain(sim.chain()).unwrap();
}

#[test]
fn relay_blocked_next_waypoint_stops_execution() {
    let (world, config) = load("relay.json").build(None).unwrap();
    let mut sim = Simulation::new(world, config.policy, config.tick_ms).unwrap();
    sim.run_scripts(&config.scripts).unwrap();
    let plan = sim.plan("R1", "GOAL").unwrap();

    sim.world_mut()
        .walls
        .push(Segment::from_coords(25.0, 2.0, 25.0, 12.0));
    // R2's own view of L23 is untouched
    let r2: Vec<_> = visible_landmarks(sim.world(), "R2")
        .unwrap()
        .into_iter()
        .map(|o| o.landmark_id)
        .collect();
    assert!(r2.contains(&"L23".to_string()));

    let trace = sim.execute_plan("R1", &plan, 5000).unwrap();
    assert_eq!(
        trace.outcome,
        ExecutionOutcome::NextWaypointNotVisible("L23".into())
    );
    assert_eq!(trace.arrivals.len(), 1);
}

#[test]
fn published_panoramas_match_the_world_at_publish_time() {
    let (world, config) = load("open_random.json").build(None).unwrap();
    let mut sim = Simulation::new(world, config.policy, config.tick_ms).unwrap();
    let ticks = config.scripts.values().map(Vec::len).max().unwrap();
    for t in 0..ticks {
        if t > 0 {
            sim.advance_clock();
        }
        for (robot, script) in &config.scripts {
            let p = script[t];
            sim.world_mut()
                .set_pose(robot, homing_chain::world::Pose::new(p.x, p.y, 0.0))
                .unwrap();
        }
        for publication in sim.publish_round().unwrap() {
            let tx = sim
                .chain()
                .tip()
                .transaction(&publication.robot_id)
                .unwrap();
            assert_eq!(tx.tx_id, publication.tx_id);
            let expected: BTreeSet<String> = visible_landmarks(sim.world(), &publication.robot_id)
                .unwrap()
                .into_iter()
                .map(|o| o.landmark_id)
                .collect();
            let published: BTreeSet<String> = tx
                .panorama
                .landmark_ids()
                .into_iter()
                .map(String::from)
                .collect();
            assert_eq!(
                published, expected,
                "tick {t} robot {}",
                publication.robot_id
            );
        }
    }
}

#[test]
fn unpublished_robots_carry_their_transactions() {
    let (world, config) = load("open_random.json").build(None).unwrap();
    // R3 moves only for the first few ticks
    let mut config = config;
    config.scripts.get_mut("R3").unwrap().truncate(3);
    let run = run_scenario(world, &config).unwrap();
    assert_eq!(run.rounds.len(), run.chain.len() - 1);

    let blocks = run.chain.blocks();
    for (i, round) in run.rounds.iter().enumerate() {
        let (prev, block) = (&blocks[i], &blocks[i + 1]);
        assert_eq!(block.transactions.len(), run.chain.team().len());
        let publishers: BTreeSet<&str> = round.iter().map(|p| p.robot_id.as_str()).collect();
        for tx in &block.transactions {
            if !publishers.contains(tx.robot_id.as_str()) {
                assert_eq!(prev.transaction(&tx.robot_id), Some(tx));
            }
        }
    }
    let tip_r3 = run.chain.tip().transaction("R3").unwrap();
    assert_eq!(blocks[3].transaction("R3").unwrap(), tip_r3);
}

#[test]
fn scenario_runs_are_deterministic() {
    let a = {
        let (world, config) = load("open_random.json").build(None).unwrap();
        to_jsonl_string(&run_scenario(world, &config).unwrap().chain)
    };
    let b = {
        let (world, config) = load("open_random.json").build(None).unwrap();
        to_jsonl_string(&run_scenario(world, &config).unwrap().chain)
    };
    assert_eq!(a, b);

    let c = {
        let (world, config) = load("open_random.json")
            .build(Some(OPEN_RANDOM_SEED + 1))
            .unwrap();
        to_jsonl_string(&run_scenario(world, &config).unwrap().chain)
    };
    assert_ne!(a, c, "seed feeds the descriptors");
}

#[test]
fn serialized_ledger_has_no_coordinates() {
    let (world, config) = load("open_random.json").build(None).unwrap();
    let run = run_scenario(world, &config).unwrap();
    let mut keys = BTreeSet::new();
    for line in to_jsonl_string(&run.chain).lines() {
        common::collect_keys(&serde_json::from_str(line).unwrap(), &mut keys);
    }
    let allowed: BTreeSet<String> = common::LEDGER_KEYS.iter().map(|k| k.to_string()).collect();
    assert!(
        keys.is_subset(&allowed),
        "unexpected keys {:?}",
        keys.difference(&allowed)
    );
    for k in common::POSITION_KEYS {
        assert!(!keys.contains(*k));
    }
}
