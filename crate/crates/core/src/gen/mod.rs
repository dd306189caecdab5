//! Synthetic single-track line instances.
//!
//! The corridor has `num_stations` stations in a row, each with
//! `tracks_per_station` parallel tracks (one resource per track), joined by
//! single-track segments shared by both directions. A train runs from an
//! origin station to a destination station:
//!
//! ```text
//! entry (origin track) -> segment -> {track 0 | track 1 | ...} -> segment -> ... -> exit
//! ```
//!
//! The entry operation sits on a fixed origin track, with the timetabled
//! departure as its lower bound. At every later station the train picks one
//! of the parallel tracks. The exit operation holds no resource. Objective
//! components sit on the exit operation; their thresholds derive from the
//! unhindered arrival time, so a train that is never held up costs nothing.

mod patterns;
mod perturb;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Instance, ModelError, ObjectiveComponent, Operation, Time, Train};

pub use patterns::{add_pattern, Pattern};
pub use perturb::{perturb, PerturbSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CostShape {
    /// One component: one unit per time unit late.
    #[default]
    Linear,
    /// Three unit steps, 180 and 360 time units apart.
    Steps,
    /// Three unit slopes starting at the same three points, so the marginal
    /// cost grows from 1 to 3.
    ConvexPw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSpec {
    pub num_stations: usize,
    #[serde(default = "default_tracks")]
    pub tracks_per_station: usize,
    pub num_trains: usize,
    /// Probability that a train runs towards higher station numbers.
    #[serde(default = "default_fraction")]
    pub eastbound_fraction: f64,
    /// Inclusive `[min, max]` running time of a segment.
    #[serde(default = "default_runtime")]
    pub segment_runtime: (Time, Time),
    #[serde(default = "default_dwell")]
    pub dwell: (Time, Time),
    /// Release time on segments, the minimum headway between trains.
    #[serde(default)]
    pub release: (Time, Time),
    /// Departures are drawn from `[0, departure_spread]`.
    #[serde(default = "default_spread")]
    pub departure_spread: Time,
    /// Upper limit on the number of segments a train travels; the whole line
    /// when absent.
    #[serde(default)]
    pub max_span: Option<usize>,
    #[serde(default)]
    pub cost_shape: CostShape,
    #[serde(default)]
    pub seed: u64,
}

fn default_tracks() -> usize {
    2
}
fn default_fraction() -> f64 {
    0.5
}
fn default_runtime() -> (Time, Time) {
    (60, 180)
}
fn default_dwell() -> (Time, Time) {
    (0, 60)
}
fn default_spread() -> Time {
    1800
}

impl LineSpec {
    pub fn new(num_stations: usize, num_trains: usize, seed: u64) -> Self {
        LineSpec {
            num_stations,
            tracks_per_station: default_tracks(),
            num_trains,
            eastbound_fraction: default_fraction(),
            segment_runtime: default_runtime(),
            dwell: default_dwell(),
            release: (0, 0),
            departure_spread: default_spread(),
            max_span: None,
            cost_shape: CostShape::default(),
            seed,
        }
    }

    fn validate(&self) -> Result<(), GenError> {
        let invalid = |field: &'static str, reason: &str| {
            Err(GenError::InvalidSpec {
                field,
                reason: reason.to_string(),
            })
        };
        if self.num_stations < 2 {
            return invalid("num_stations", "need at least 2 stations");
        }
        if self.tracks_per_station < 2 {
            return invalid("tracks_per_station", "need at least 2 tracks per station");
        }
        if self.num_trains == 0 {
            return invalid("num_trains", "need at least 1 train");
        }
        if !(0.0..=1.0).contains(&self.eastbound_fraction) {
            return invalid("eastbound_fraction", "must lie in [0, 1]");
        }
        for (field, (lo, hi)) in [
            ("segment_runtime", self.segment_runtime),
            ("dwell", self.dwell),
            ("release", self.release),
        ] {
            if lo < 0 || lo > hi || hi > 1_000_000_000 {
                return invalid(field, "need 0 <= min <= max <= 1e9");
            }
        }
        if !(0..=1_000_000_000).contains(&self.departure_spread) {
            return invalid("departure_spread", "must lie in [0, 1e9]");
        }
        if self.max_span == Some(0) {
            return invalid("max_span", "must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid spec field {field}: {reason}")]
    InvalidSpec { field: &'static str, reason: String },
    #[error("spec cannot be realised: {reason}")]
    SpecInfeasible { reason: String },
    #[error("pattern cannot be applied: {reason}")]
    PatternConflict { reason: String },
    #[error("no reference schedule found for the instance to perturb")]
    NoReference,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// What an operation of a generated train represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OpKind {
    /// Standing on the origin track of a train that has not started yet.
    Entry,
    Track {
        station: usize,
        track: usize,
    },
    Segment {
        from: usize,
        to: usize,
    },
    Cancel,
    Exit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub origin: usize,
    pub destination: usize,
    pub departure: Time,
    /// One entry per operation. A re-rooted train keeps the kind of the
    /// operation it was re-rooted at.
    pub kinds: Vec<OpKind>,
    /// Track of the entry operation, for trains that have not started.
    pub origin_track: Option<usize>,
}

/// An instance plus the placement data the perturbation and pattern steps
/// need.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub instance: Instance,
    pub trains: Vec<TrainMeta>,
}

pub fn track_resource(station: usize, track: usize) -> String {
    format!("S{station}.{track}")
}

pub fn segment_resource(from: usize, to: usize) -> String {
    format!("L{}", from.min(to))
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (Time, Time)) -> Time {
    rng.random_range(lo..=hi)
}

pub fn generate_line(spec: &LineSpec) -> Result<Generated, GenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let segments = spec.num_stations - 1;
    let k = spec.tracks_per_station;
    let mut originating = vec![0usize; spec.num_stations];
    let mut trains = Vec::new();
    let mut metas = Vec::new();
    let mut objective = Vec::new();

    for i in 0..spec.num_trains {
        let east = rng.random_bool(spec.eastbound_fraction);
        let span = match spec.max_span {
            Some(m) => rng.random_range(1..=m.min(segments)),
            None => segments,
        };
        let origin = if east {
            rng.random_range(0..=segments - span)
        } else {
            rng.random_range(span..=segments)
        };
        let stations: Vec<usize> = if east {
            (origin..=origin + span).collect()
        } else {
            (origin - span..=origin).rev().collect()
        };
        let departure = rng.random_range(0..=spec.departure_spread);
        let origin_track = originating[origin] % k;
        originating[origin] += 1;

        let mut ops = Vec::new();
        let mut kinds = Vec::new();
        let dwell = draw(&mut rng, spec.dwell);
        ops.push(
            Operation::new(dwell)
                .start_lb(departure)
                .resource(track_resource(origin, origin_track), 0),
        );
        kinds.push(OpKind::Entry);
        let mut arrival = departure + dwell;
        // Operations whose successors point at the next layer.
        let mut frontier = vec![0usize];
        for w in stations.windows(2) {
            let (from, to) = (w[0], w[1]);
            let seg = ops.len();
            for &f in &frontier {
                ops[f].successors.push(seg);
            }
            let runtime = draw(&mut rng, spec.segment_runtime);
            let release = draw(&mut rng, spec.release);
            ops.push(Operation::new(runtime).resource(segment_resource(from, to), release));
            kinds.push(OpKind::Segment { from, to });
            let dwell = draw(&mut rng, spec.dwell);
            let first = ops.len();
            for track in 0..k {
                ops.push(Operation::new(dwell).resource(track_resource(to, track), 0));
                kinds.push(OpKind::Track { station: to, track });
            }
            ops[seg].successors = (first..first + k).collect();
            frontier = (first..first + k).collect();
            arrival += runtime + dwell;
        }
        let exit = ops.len();
        for &f in &frontier {
            ops[f].successors.push(exit);
        }
        ops.push(Operation::new(0));
        kinds.push(OpKind::Exit);

        for (threshold, coeff, increment) in cost_terms(spec.cost_shape, arrival) {
            objective.push(ObjectiveComponent {
                train: i,
                operation: exit,
                threshold,
                coeff,
                increment,
            });
        }
        trains.push(Train::new(ops));
        metas.push(TrainMeta {
            origin,
            destination: *stations.last().unwrap(),
            departure,
            kinds,
            origin_track: Some(origin_track),
        });
    }

    if spec.departure_spread == 0 {
        if let Some(s) = originating.iter().position(|&n| n > k) {
            return Err(GenError::SpecInfeasible {
                reason: format!(
                    "{} trains depart from station {s} at time 0 but it has {k} tracks",
                    originating[s]
                ),
            });
        }
    }
    Ok(Generated {
        instance: Instance::new(trains, objective)?,
        trains: metas,
    })
}

/// `(threshold, coeff, increment)` triples for a train due at `due`.
///
/// Step components start one time unit after the due time: a step charges at
/// its threshold, and arriving on time should be free.
fn cost_terms(shape: CostShape, due: Time) -> Vec<(Time, i64, i64)> {
    match shape {
        CostShape::Linear => vec![(due, 1, 0)],
        CostShape::Steps => [1, 181, 361].iter().map(|&d| (due + d, 0, 1)).collect(),
        CostShape::ConvexPw => [0, 180, 360].iter().map(|&d| (due + d, 1, 0)).collect(),
    }
}
