// SPDX-License-Identifier: Apache-2.0

//! Latency harness: ledger update time, panorama retrieval time, a
//! landmark-quality score, and message counts, emitted as CSV.

use std::fmt::Write as _;
use std::fs;
use std::hint::black_box;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::ledger::{to_jsonl_string, Chain, LedgerError, Transaction};
use crate::panorama::{common_landmarks, should_update, PanoramicView, PriorState};
use crate::planner::build_graph;
use crate::scenario::RandomLayout;
use crate::sim::{MessageLog, MessageMode, MessageStats, SimError};
use crate::world::{capture_panorama, visible_landmarks, Pose, WorldError, WorldModel};

/// Unmeasured iterations run before each timed series.
pub const WARMUP_ITERATIONS: usize = 10;
/// Apparent size (radians) at which a shared landmark scores full marks.
pub const QUALITY_REFERENCE_SIZE: f64 = 0.25;
pub const QUALITY_MAX: f64 = 5.0;

pub const TABLE_HEADER: &str =
    "positions,avg_update_ms,avg_retrieval_ms,avg_landmark_quality,ledger_msgs,p2p_msgs";
pub const SERIES_HEADER: &str = "index,robot_id,ms";

/// Monotonic time source. `now` is measured from an arbitrary origin.
pub trait Clock {
    fn now(&self) -> Duration;
}

#[derive(Debug, Clone, Copy)]
pub struct MonotonicClock {
    origin: Instant,
}

impl MonotonicClock {
    pub fn new() -> Self {
        MonotonicClock {
            origin: Instant::now(),
        }
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }
}

fn elapsed_ms(clock: &impl Clock, start: Duration) -> f64 {
    clock.now().saturating_sub(start).as_secs_f64() * 1e3
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

/// Signs, serializes for broadcast, assembles, validates and appends one
/// block holding `panoramas`. Returns the elapsed milliseconds.
pub fn measure_update(
    chain: &mut Chain,
    panoramas: Vec<PanoramicView>,
    timestamp: u64,
    clock: &impl Clock,
) -> Result<f64, LedgerError> {
    let start = clock.now();
    let mut txs = Vec::with_capacity(panoramas.len());
    for p in panoramas {
        let tx = Transaction::new(timestamp, p)?;
        black_box(serde_json::to_vec(&tx).expect("transactions always serialize"));
        txs.push(tx);
    }
    let block = chain.assemble_block(txs, timestamp)?;
    chain.append_block(block)?;
    Ok(elapsed_ms(clock, start))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Retrieval {
    pub team_size: usize,
    pub common: Vec<String>,
}

/// Reads the tip, builds the visibility graph, and finds the landmarks
/// `robot` shares with `partner`.
pub fn measure_retrieval(
    chain: &Chain,
    robot: &str,
    partner: &str,
    clock: &impl Clock,
) -> (Retrieval, f64) {
    let start = clock.now();
    let states = chain.latest_states();
    let graph = build_graph(states.iter().map(|(r, t)| (*r, *t)));
    let common = match (states.get(robot), states.get(partner)) {
        (Some(a), Some(b)) => common_landmarks(&a.panorama, &b.panorama)
            .into_iter()
            .map(str::to_string)
            .collect(),
        _ => Vec::new(),
    };
    black_box(&graph);
    let ms = elapsed_ms(clock, start);
    (
        Retrieval {
            team_size: states.len(),
            common,
        },
        ms,
    )
}

/// Score in `[0, 5]` for how usable a shared landmark is.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct QualityScore(f64);

impl QualityScore {
    pub fn from_sizes(size_a: f64, size_b: f64) -> Self {
        let smaller = size_a.min(size_b);
        QualityScore(QUALITY_MAX * (smaller / QUALITY_REFERENCE_SIZE).clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QualityError {
    #[error("landmark {landmark} is not visible to both {robot_a} and {robot_b}")]
    NotCommon {
        landmark: String,
        robot_a: String,
        robot_b: String,
    },
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Both robots' apparent sizes of the landmark, scored by the smaller one:
/// `5 · min(1, min(size_a, size_b) / 0.25 rad)`.
pub fn landmark_quality(
    world: &WorldModel,
    landmark_id: &str,
    robot_a: &str,
    robot_b: &str,
) -> Result<QualityScore, QualityError> {
    let size = |robot: &str| -> Result<Option<f64>, WorldError> {
        Ok(visible_landmarks(world, robot)?
            .into_iter()
            .find(|o| o.landmark_id == landmark_id)
            .map(|o| o.apparent_size))
    };
    match (size(robot_a)?, size(robot_b)?) {
        (Some(a), Some(b)) => Ok(QualityScore::from_sizes(a, b)),
        _ => Err(QualityError::NotCommon {
            landmark: landmark_id.to_string(),
            robot_a: robot_a.to_string(),
            robot_b: robot_b.to_string(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    /// Position number within the run.
    pub index: usize,
    pub robot_id: String,
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub positions: usize,
    pub avg_update_ms: f64,
    pub avg_retrieval_ms: f64,
    pub avg_landmark_quality: f64,
    pub samples_update: Vec<Sample>,
    pub samples_retrieval: Vec<Sample>,
    pub ledger: MessageStats,
    pub point_to_point: MessageStats,
}

pub fn mean(samples: &[Sample]) -> f64 {
    if samples.is_empty() {
        0.0
    } else {
        samples.iter().map(|s| s.ms).sum::<f64>() / samples.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct BenchRun {
    pub record: MetricsRecord,
    pub chain: Chain,
}

/// Best shared-landmark score for a robot pair at their current poses.
fn best_common_quality(world: &WorldModel, a: &str, b: &str) -> Result<Option<f64>, WorldError> {
    let va = capture_panorama(world, a, 0)?;
    let vb = capture_panorama(world, b, 0)?;
    let mut best: Option<f64> = None;
    for id in common_landmarks(&va, &vb) {
        let (Some(oa), Some(ob)) = (va.observation(id), vb.observation(id)) else {
            continue;
        };
        let q = QualityScore::from_sizes(oa.apparent_size, ob.apparent_size).value();
        best = Some(best.map_or(q, |cur: f64| cur.max(q)));
    }
    Ok(best)
}

/// Random-placement run: robots register from their start poses, then at
/// each scripted position every robot publishes (one measured block per
/// robot) and then measures a retrieval against its next teammate.
pub fn run_positions(
    positions: usize,
    robots: usize,
    seed: u64,
    clock: &impl Clock,
) -> Result<BenchRun, BenchError> {
    let scenario = RandomLayout {
        robots,
        positions,
        ..RandomLayout::default()
    }
    .generate(seed);
    let (mut world, config) = scenario.build(None)?;
    let team: Vec<String> = world.robots.keys().cloned().collect();
    let mut chain = Chain::new(team.iter().cloned(), 0);
    let mut messages = MessageLog::new(team.len());

    let mut priors = Vec::with_capacity(team.len());
    let mut registration = Vec::with_capacity(team.len());
    for robot in &team {
        let p = capture_panorama(&world, robot, 0)?;
        priors.push(PriorState {
            position: world.pose(robot)?.position(),
            panorama: p.clone(),
            published_at: 0,
        });
        registration.push(p);
    }
    chain.commit(
        registration
            .into_iter()
            .map(|p| Transaction::new(0, p))
            .collect::<Result<_, _>>()?,
        0,
    )?;
    messages.record_round(team.len());

    let partner = |i: usize| &team[(i + 1) % team.len()];

    for _ in 0..WARMUP_ITERATIONS {
        let mut scratch = chain.clone();
        let p = capture_panorama(&world, &team[0], 0)?;
        measure_update(&mut scratch, vec![p], 0, clock)?;
        black_box(measure_retrieval(&chain, &team[0], partner(0), clock));
    }

    let mut samples_update = Vec::new();
    let mut samples_retrieval = Vec::new();
    let mut quality = Vec::new();
    for k in 0..positions {
        let now = (k as u64 + 1) * config.tick_ms;
        for robot in &team {
            if let Some(&target) = config.scripts[robot].get(k) {
                let heading = world.pose(robot)?.position().angle_to(target);
                world.set_pose(robot, Pose::new(target.x, target.y, heading))?;
            }
        }
        for (i, robot) in team.iter().enumerate() {
            let position = world.pose(robot)?.position();
            let panorama = capture_panorama(&world, robot, now)?;
            if !should_update(&config.policy, &priors[i], position, &panorama, now).publish() {
                continue;
            }
            priors[i] = PriorState {
                position,
                panorama: panorama.clone(),
                published_at: now,
            };
            let ms = measure_update(&mut chain, vec![panorama], now, clock)?;
            messages.record_round(1);
            samples_update.push(Sample {
                index: k,
                robot_id: robot.clone(),
                ms,
            });
        }
        for (i, robot) in team.iter().enumerate() {
            let (_, ms) = measure_retrieval(&chain, robot, partner(i), clock);
            samples_retrieval.push(Sample {
                index: k,
                robot_id: robot.clone(),
                ms,
            });
        }
        for pair in team.windows(2) {
            if let Some(q) = best_common_quality(&world, &pair[0], &pair[1])? {
                quality.push(q);
            }
        }
    }

    let avg_landmark_quality = if quality.is_empty() {
        0.0
    } else {
        quality.iter().sum::<f64>() / quality.len() as f64
    };
    let record = MetricsRecord {
        positions,
        avg_update_ms: mean(&samples_update),
        avg_retrieval_ms: mean(&samples_retrieval),
        avg_landmark_quality,
        samples_update,
        samples_retrieval,
        ledger: messages.stats(MessageMode::Ledger),
        point_to_point: messages.stats(MessageMode::PointToPoint),
    };
    Ok(BenchRun { record, chain })
}

/// Formats with six significant digits in plain decimal notation.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.5e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    } else {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            out.push_str(&digits);
            out.extend(std::iter::repeat_n('0', int_len - digits.len()));
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    }
    out
}

pub fn table_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.positions,
            sig6(r.avg_update_ms),
            sig6(r.avg_retrieval_ms),
            sig6(r.avg_landmark_quality),
            r.ledger.messages_sent,
            r.point_to_point.messages_sent
        )
        .unwrap();
    }
    out
}

pub fn series_csv(samples: &[Sample]) -> String {
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    for s in samples {
        writeln!(out, "{},{},{}", s.index, s.robot_id, s.ms).unwrap();
    }
    out
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, BenchError> {
    fs::write(&path, contents).map_err(|source| BenchError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

pub fn table_path(dir: &Path) -> PathBuf {
    dir.join("table.csv")
}

pub fn update_series_path(dir: &Path, positions: usize) -> PathBuf {
    dir.join(format!("update_series_{positions}.csv"))
}

pub fn retrieval_series_path(dir: &Path, positions: usize) -> PathBuf {
    dir.join(format!("retrieval_series_{positions}.csv"))
}

pub fn ledger_path(dir: &Path, positions: usize) -> PathBuf {
    dir.join(format!("ledger_{positions}.jsonl"))
}

/// Writes `table.csv` plus one update and one retrieval series per record.
pub fn emit_table(records: &[MetricsRecord], dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    fs::create_dir_all(dir).map_err(|source| BenchError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = vec![write(table_path(dir), &table_csv(records))?];
    for r in records {
        written.push(write(
            update_series_path(dir, r.positions),
            &series_csv(&r.samples_update),
        )?);
        written.push(write(
            retrieval_series_path(dir, r.positions),
            &series_csv(&r.samples_retrieval),
        )?);
    }
    Ok(written)
}

pub fn emit_ledger(chain: &Chain, path: &Path) -> Result<PathBuf, BenchError> {
    write(path.to_path_buf(), &to_jsonl_string(chain))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point2, Segment};
    use crate::world::Landmark;
    use std::cell::Cell;

    /// Advances one microsecond per reading.
    struct TickingClock(Cell<u64>);

    impl Clock for TickingClock {
        fn now(&self) -> Duration {
            let t = self.0.get();
            self.0.set(t + 1);
            Duration::from_micros(t)
        }
    }

    fn two_robot_world() -> WorldModel {
        let mut w = WorldModel::empty();
        w.sensor_range = 20.0;
        w.approach_distance = 2.0;
        w.landmarks.insert(
            "L".into(),
            Landmark {
                center: Point2::new(10.0, 0.0),
                radius: 1.0,
                descriptor: vec![0.0; 8],
            },
        );
        w.robots.insert("A".into(), Pose::new(0.0, 0.0, 0.0));
        // apparent size 2·atan(1/d) = 0.5 rad
        let d = 1.0 / 0.25f64.tan();
        w.robots.insert("B".into(), Pose::new(10.0 + d, 0.0, 0.0));
        w
    }

    #[test]
    fn quality_examples() {
        let w = two_robot_world();
        let q = landmark_quality(&w, "L", "A", "B").unwrap().value();
        assert!((q - 5.0 * (2.0 * 0.1f64.atan()) / 0.25).abs() < 1e-9);
        assert!((q - 3.9867).abs() < 1e-4);
        assert_eq!(landmark_quality(&w, "L", "B", "A").unwrap().value(), q);
        assert_eq!(QualityScore::from_sizes(0.3, 0.9).value(), 5.0);

        let mut blocked = w.clone();
        blocked
            .walls
            .push(Segment::from_coords(12.0, -1.0, 12.0, 1.0));
        assert!(matches!(
            landmark_quality(&blocked, "L", "A", "B"),
            Err(QualityError::NotCommon { .. })
        ));
    }

    #[test]
    fn quality_is_monotone_in_each_size() {
        let sizes = [0.01, 0.05, 0.1, 0.2, 0.25, 0.4, 1.0];
        for &a in &sizes {
            for w in sizes.windows(2) {
                let lo = QualityScore::from_sizes(a, w[0]).value();
                let hi = QualityScore::from_sizes(a, w[1]).value();
                assert!(lo <= hi);
                assert!((0.0..=5.0).contains(&hi));
            }
        }
    }

    #[test]
    fn update_grows_chain_and_takes_time() {
        let w = two_robot_world();
        let mut chain = Chain::new(["A", "B"], 0);
        let clock = MonotonicClock::new();
        let pa = capture_panorama(&w, "A", 0).unwrap();
        let pb = capture_panorama(&w, "B", 0).unwrap();
        measure_update(&mut chain, vec![pa.clone(), pb], 0, &clock).unwrap();
        let ms = measure_update(&mut chain, vec![pa], 100, &clock).unwrap();
        assert!(ms > 0.0);
        assert_eq!(chain.len(), 3);
        assert!(chain.validate().is_ok());

        let stranger = PanoramicView::empty("Z", 0);
        assert!(measure_update(&mut chain, vec![stranger], 200, &clock).is_err());
    }

    #[test]
    fn retrieval_on_genesis_only() {
        let chain = Chain::new(["A"], 0);
        let (r, ms) = measure_retrieval(&chain, "A", "A", &TickingClock(Cell::new(0)));
        assert_eq!(r.team_size, 0);
        assert!(r.common.is_empty());
        assert!(ms > 0.0);
    }

    #[test]
    fn forty_positions_give_forty_samples_per_robot() {
        let run = run_positions(40, 2, 1, &MonotonicClock::new()).unwrap();
        let r = &run.record;
        for robot in ["R1", "R2"] {
            assert_eq!(
                r.samples_update
                    .iter()
                    .filter(|s| s.robot_id == robot)
                    .count(),
                40
            );
            assert_eq!(
                r.samples_retrieval
                    .iter()
                    .filter(|s| s.robot_id == robot)
                    .count(),
                40
            );
        }
        assert_eq!(run.chain.len(), 1 + 1 + 80);
        assert!((r.avg_update_ms - mean(&r.samples_update)).abs() < 1e-15);
        assert_eq!(r.ledger.messages_sent, 82);
        assert_eq!(r.point_to_point.messages_sent, 82);
        assert!(r.avg_landmark_quality > 0.0 && r.avg_landmark_quality <= 5.0);
        assert!(run.chain.validate().is_ok());
    }

    #[test]
    fn repeated_workload_medians_agree() {
        let median = |mut v: Vec<f64>| {
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        };
        let clock = MonotonicClock::new();
        let a = run_positions(40, 2, 5, &clock).unwrap().record;
        let b = run_positions(40, 2, 5, &clock).unwrap().record;
        let ma = median(a.samples_update.iter().map(|s| s.ms).collect());
        let mb = median(b.samples_update.iter().map(|s| s.ms).collect());
        assert!(ma / mb < 10.0 && mb / ma < 10.0, "{ma} vs {mb}");
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(sig6(0.00082998), "0.000829980");
        assert_eq!(sig6(3.41), "3.41000");
        assert_eq!(sig6(1.0), "1.00000");
        assert_eq!(sig6(123456789.0), "123457000");
        assert_eq!(sig6(9.9999996), "10.0000");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-0.5), "-0.500000");
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(table_csv(&[]), format!("{TABLE_HEADER}\n"));
    }
}
