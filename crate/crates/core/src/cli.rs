// SPDX-License-Identifier: Apache-2.0

//! `homing-chain` command line.
//!
//! Exit codes: 0 success, 1 no path / invalid chain / runtime failure,
//! 2 usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::bench::{self, MonotonicClock};
use crate::ledger::{load_jsonl, to_jsonl_string, validate_chain, Chain};
use crate::planner::{build_graph, plan_route};
use crate::scenario::Scenario;
use crate::sim::{run_scenario, ExecutionOutcome, MessageMode};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "homing-chain",
    version,
    about = "Panorama ledger and landmark-chain planner for visual homing teams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file and dump the resulting ledger.
    Sim {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "ledger-out")]
        ledger_out: PathBuf,
    },
    /// Plan a landmark chain from a ledger dump.
    Plan {
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long)]
        robot: String,
        #[arg(long)]
        goal: String,
    },
    /// Random-placement latency benchmark.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "40,200,500")]
        positions: Vec<usize>,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u16).range(2..))]
        robots: u16,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Check every hash and link in a ledger dump.
    Validate {
        #[arg(long)]
        ledger: PathBuf,
    },
}

/// Entry point shared by the binary and tests.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_FAILURE
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<u8, String> {
    match command {
        Command::Sim {
            scenario,
            seed,
            ledger_out,
        } => sim(&scenario, seed, &ledger_out, out),
        Command::Plan {
            ledger,
            robot,
            goal,
        } => plan(&ledger, &robot, &goal, out),
        Command::Bench {
            positions,
            robots,
            out: dir,
            seed,
        } => bench_cmd(&positions, robots as usize, &dir, seed, out),
        Command::Validate { ledger } => validate(&ledger, out),
    }
}

fn emit(out: &mut dyn Write, value: serde_json::Value) -> Result<(), String> {
    writeln!(out, "{value}").map_err(|e| e.to_string())
}

fn sim(
    scenario: &Path,
    seed: Option<u64>,
    ledger_out: &Path,
    out: &mut dyn Write,
) -> Result<u8, String> {
    let (world, config) = Scenario::load(scenario)
        .and_then(|s| s.build(seed))
        .map_err(|e| e.to_string())?;
    let run = run_scenario(world, &config).map_err(|e| e.to_string())?;
    std::fs::write(ledger_out, to_jsonl_string(&run.chain))
        .map_err(|e| format!("{}: {e}", ledger_out.display()))?;

    let tasks: Vec<_> = run
        .tasks
        .iter()
        .map(|t| match &t.result {
            Ok(trace) => json!({
                "robot": t.task.robot,
                "goal": t.task.goal,
                "waypoints": trace.plan.waypoints,
                "outcome": match &trace.outcome {
                    ExecutionOutcome::Success => "Success".to_string(),
                    ExecutionOutcome::NextWaypointNotVisible(w) => format!("NextWaypointNotVisible({w})"),
                    ExecutionOutcome::TickBudgetExhausted => "TickBudgetExhausted".to_string(),
                },
                "movement_ticks": trace.movement_ticks,
            }),
            Err(e) => json!({"robot": t.task.robot, "goal": t.task.goal, "outcome": e.code()}),
        })
        .collect();
    emit(
        out,
        json!({
            "blocks": run.chain.len(),
            "tip_hash": run.chain.tip().block_hash.to_hex(),
            "ledger_msgs": run.messages.stats(MessageMode::Ledger).messages_sent,
            "p2p_msgs": run.messages.stats(MessageMode::PointToPoint).messages_sent,
            "tasks": tasks,
        }),
    )?;
    Ok(EXIT_OK)
}

enum Loaded {
    Valid(Chain),
    Invalid {
        index: usize,
        reason: String,
        detail: String,
    },
}

fn load_and_validate(path: &Path) -> Result<Loaded, String> {
    let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    match load_jsonl(BufReader::new(file)) {
        Ok(chain) => Ok(match validate_chain(&chain) {
            Ok(()) => Loaded::Valid(chain),
            Err(v) => Loaded::Invalid {
                index: v.index,
                reason: v.fault.to_string(),
                detail: v.to_string(),
            },
        }),
        Err(e) => match e.block_index() {
            Some(index) => Ok(Loaded::Invalid {
                index,
                reason: "Malformed".into(),
                detail: e.to_string(),
            }),
            None => Err(e.to_string()),
        },
    }
}

fn validate(ledger: &Path, out: &mut dyn Write) -> Result<u8, String> {
    match load_and_validate(ledger)? {
        Loaded::Valid(chain) => {
            emit(out, json!({"valid": true, "blocks": chain.len()}))?;
            Ok(EXIT_OK)
        }
        Loaded::Invalid {
            index,
            reason,
            detail,
        } => {
            emit(
                out,
                json!({"valid": false, "first_bad_index": index, "reason": reason, "detail": detail}),
            )?;
            Ok(EXIT_FAILURE)
        }
    }
}

fn plan(ledger: &Path, robot: &str, goal: &str, out: &mut dyn Write) -> Result<u8, String> {
    let chain = match load_and_validate(ledger)? {
        Loaded::Valid(chain) => chain,
        Loaded::Invalid { index, reason, .. } => {
            return Err(format!("ledger invalid at block {index}: {reason}"));
        }
    };
    let graph = build_graph(chain.latest_states());
    match plan_route(&graph, robot, goal) {
        Ok(plan) => {
            emit(out, serde_json::to_value(&plan).map_err(|e| e.to_string())?)?;
            Ok(EXIT_OK)
        }
        Err(e) => {
            emit(out, json!({"error": e.code()}))?;
            Ok(EXIT_FAILURE)
        }
    }
}

fn bench_cmd(
    positions: &[usize],
    robots: usize,
    dir: &Path,
    seed: u64,
    out: &mut dyn Write,
) -> Result<u8, String> {
    let clock = MonotonicClock::new();
    let mut records = Vec::with_capacity(positions.len());
    std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    for &p in positions {
        let run = bench::run_positions(p, robots, seed, &clock).map_err(|e| e.to_string())?;
        bench::emit_ledger(&run.chain, &bench::ledger_path(dir, p)).map_err(|e| e.to_string())?;
        records.push(run.record);
    }
    bench::emit_table(&records, dir).map_err(|e| e.to_string())?;
    write!(out, "{}", bench::table_csv(&records)).map_err(|e| e.to_string())?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (u8, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["homing-chain"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_errors_exit_2() {
        let (code, _, err) = call(&["plan", "--robot", "R1"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--ledger"));
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(call(&[]).0, EXIT_USAGE);
        assert_eq!(
            call(&["bench", "--robots", "1", "--out", "x"]).0,
            EXIT_USAGE
        );
    }

    #[test]
    fn help_exits_0() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("validate"));
    }

    #[test]
    fn missing_file_is_a_runtime_failure() {
        let (code, _, err) = call(&["validate", "--ledger", "/nonexistent/ledger.jsonl"]);
        assert_eq!(code, EXIT_FAILURE);
        assert!(err.contains("/nonexistent/ledger.jsonl"));
    }
}
