// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use homing_chain::planner::VisibilityGraph;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

pub fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_homing-chain"))
}

pub fn run_bin(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn homing-chain")
}

pub fn stdout_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("bad json {text:?}: {e}"))
}

/// Random bipartite graph: robots `R0..`, landmarks `L0..`, each edge kept
/// with probability `p`.
pub fn random_graph(
    rng: &mut ChaCha8Rng,
    max_robots: usize,
    max_landmarks: usize,
    p: f64,
) -> VisibilityGraph {
    let nr = rng.gen_range(1..=max_robots);
    let nl = rng.gen_range(1..=max_landmarks);
    let mut edges = Vec::new();
    for r in 0..nr {
        for l in 0..nl {
            if rng.gen_bool(p) {
                edges.push((format!("R{r}"), format!("L{l}")));
            }
        }
    }
    VisibilityGraph::from_edges(
        (0..nr).map(|i| format!("R{i}")),
        (0..nl).map(|i| format!("L{i}")),
        edges,
    )
}

/// Every object key anywhere in a JSON value.
pub fn collect_keys(v: &Value, keys: &mut BTreeSet<String>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                keys.insert(k.clone());
                collect_keys(child, keys);
            }
        }
        Value::Array(items) => items.iter().for_each(|c| collect_keys(c, keys)),
        _ => {}
    }
}

/// Keys a persisted ledger may contain; none of them carries a position.
pub const LEDGER_KEYS: &[&str] = &[
    "index",
    "timestamp",
    "prev_hash",
    "block_hash",
    "transactions",
    "tx_id",
    "robot_id",
    "panorama",
    "captured_at",
    "observations",
    "landmark_id",
    "bearing",
    "apparent_size",
    "descriptor",
];

pub const POSITION_KEYS: &[&str] = &[
    "x",
    "y",
    "heading",
    "pose",
    "position",
    "center",
    "coordinates",
];
