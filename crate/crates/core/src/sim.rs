//! Event-by-event generation of the two stations' time-tag streams.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    sample_delay, sample_hidden_pair, sample_outcome, zeta, ModelParams, Outcome, Setting,
};
use crate::rng::{Role, Substreams, MAX_PAIR_ID};

/// Time tags are recorded on a grid of `10^-TIME_DECIMALS` time units, which is
/// also the precision of the time-tag file format.
pub const TIME_DECIMALS: usize = 6;
const TIME_SCALE: f64 = 1e6;

/// Rounds a time to the recording grid.
pub fn quantize_time(t: f64) -> f64 {
    (t * TIME_SCALE).round() / TIME_SCALE
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Station {
    One,
    Two,
}

impl Station {
    pub fn number(self) -> u8 {
        match self {
            Station::One => 1,
            Station::Two => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Station> {
        match n {
            1 => Some(Station::One),
            2 => Some(Station::Two),
            _ => None,
        }
    }
}

impl fmt::Display for Station {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// One detector click at one station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEvent {
    pub station: Station,
    /// `None` only for events read from files that carry no pair ids.
    pub pair_id: Option<u64>,
    pub setting_index: usize,
    pub outcome: Outcome,
    pub time_tag: f64,
}

/// How pairs are spaced in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Emission {
    /// Pair `i` is emitted at `i * interval`.
    Regular { interval: f64 },
    /// Exponential gaps with the given rate; pair 0 is emitted after the first gap.
    Poisson { rate: f64 },
}

impl Emission {
    /// Regular spacing of `10 * t0`, which keeps pairs from interleaving for any `W <= t0`.
    pub fn default_for(params: &ModelParams) -> Self {
        Emission::Regular {
            interval: 10.0 * params.t0(),
        }
    }

    fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            Emission::Regular { interval } => ("emission interval", interval),
            Emission::Poisson { rate } => ("emission rate", rate),
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid("emission", format!("{name} must be > 0, got {v}")));
        }
        Ok(())
    }
}

/// How each pair's setting indices are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SettingSchedule {
    /// Independent uniform choice at each station, per pair.
    #[default]
    Random,
    /// Deterministic cycle through every combination of the two setting lists.
    RoundRobin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub settings1: Vec<Setting>,
    pub settings2: Vec<Setting>,
    pub n_pairs: u64,
    pub seed: u64,
    pub emission: Emission,
    #[serde(default)]
    pub schedule: SettingSchedule,
}

impl ExperimentConfig {
    /// A config with the default regular emission and random setting choice.
    pub fn new(
        params: ModelParams,
        settings1: Vec<Setting>,
        settings2: Vec<Setting>,
        n_pairs: u64,
        seed: u64,
    ) -> Self {
        ExperimentConfig {
            emission: Emission::default_for(&params),
            params,
            settings1,
            settings2,
            n_pairs,
            seed,
            schedule: SettingSchedule::Random,
        }
    }

    pub fn with_emission(mut self, emission: Emission) -> Self {
        self.emission = emission;
        self
    }

    pub fn with_schedule(mut self, schedule: SettingSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pairs == 0 {
            return Err(Error::invalid("pairs", "must be at least 1"));
        }
        if self.n_pairs - 1 > MAX_PAIR_ID {
            return Err(Error::invalid("pairs", format!("at most {MAX_PAIR_ID} pairs")));
        }
        if self.settings1.is_empty() {
            return Err(Error::invalid("angles1", "station 1 needs at least one setting"));
        }
        if self.settings2.is_empty() {
            return Err(Error::invalid("angles2", "station 2 needs at least one setting"));
        }
        if let Some(a) = self
            .settings1
            .iter()
            .chain(&self.settings2)
            .find(|s| !s.angle().is_finite())
        {
            return Err(Error::invalid("angles", format!("non-finite angle {}", a.angle())));
        }
        // Re-validates params that came in through serde or struct literals.
        ModelParams::new(self.params.d(), self.params.t0(), self.params.window())?;
        self.emission.validate()
    }

    fn setting_indices(&self, pair_id: u64, streams: &Substreams) -> (usize, usize) {
        let (n1, n2) = (self.settings1.len(), self.settings2.len());
        match self.schedule {
            SettingSchedule::Random => {
                let mut rng = streams.get(pair_id, Role::Schedule);
                let u1: f64 = rng.random();
                let u2: f64 = rng.random();
                (pick(u1, n1), pick(u2, n2))
            }
            SettingSchedule::RoundRobin => {
                let i1 = (pair_id % n1 as u64) as usize;
                let i2 = ((pair_id / n1 as u64) % n2 as u64) as usize;
                (i1, i2)
            }
        }
    }
}

fn pick(u: f64, n: usize) -> usize {
    ((u * n as f64) as usize).min(n - 1)
}

/// Time-ordered event streams of both stations plus the config that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub config: ExperimentConfig,
    pub station1: Vec<DetectionEvent>,
    pub station2: Vec<DetectionEvent>,
}

impl EventLog {
    /// Builds a log from raw streams, sorting each by time tag (ties by pair id).
    pub fn from_streams(
        config: ExperimentConfig,
        mut station1: Vec<DetectionEvent>,
        mut station2: Vec<DetectionEvent>,
    ) -> Self {
        sort_stream(&mut station1);
        sort_stream(&mut station2);
        EventLog {
            config,
            station1,
            station2,
        }
    }

    pub fn stream(&self, station: Station) -> &[DetectionEvent] {
        match station {
            Station::One => &self.station1,
            Station::Two => &self.station2,
        }
    }

    /// Number of emitted pairs the log accounts for.
    pub fn n_pairs(&self) -> u64 {
        self.config.n_pairs
    }
}

fn sort_stream(events: &mut [DetectionEvent]) {
    events.sort_by(|a, b| {
        a.time_tag
            .total_cmp(&b.time_tag)
            .then_with(|| a.pair_id.cmp(&b.pair_id))
    });
}

/// Generates the two detection events of one pair.
///
/// Draws the hidden polarizations from the pair's hidden-variable stream, then
/// each station's outcome and delay from that station's own stream, using only
/// its local `zeta`.
pub fn generate_pair(
    pair_id: u64,
    emission_time: f64,
    setting1: (usize, Setting),
    setting2: (usize, Setting),
    params: &ModelParams,
    streams: &Substreams,
) -> (DetectionEvent, DetectionEvent) {
    let hidden = sample_hidden_pair(&mut streams.get(pair_id, Role::Hidden));
    let detect = |station: Station, role: Role, (index, setting): (usize, Setting), s: f64| {
        let mut rng = streams.get(pair_id, role);
        let z = zeta(setting, s);
        let outcome = sample_outcome(z, &mut rng);
        let delay = sample_delay(z, params, &mut rng);
        DetectionEvent {
            station,
            pair_id: Some(pair_id),
            setting_index: index,
            outcome,
            time_tag: quantize_time(emission_time + delay),
        }
    };
    (
        detect(Station::One, Role::Station1, setting1, hidden.s1()),
        detect(Station::Two, Role::Station2, setting2, hidden.s2()),
    )
}

/// Emission time of every pair, on the recording grid.
#[derive(Debug, Clone)]
pub(crate) enum EmissionTimes {
    Regular(f64),
    Listed(Vec<f64>),
}

impl EmissionTimes {
    pub(crate) fn new(config: &ExperimentConfig, streams: &Substreams) -> Self {
        match config.emission {
            Emission::Regular { interval } => EmissionTimes::Regular(interval),
            Emission::Poisson { rate } => {
                let gaps: Vec<f64> = (0..config.n_pairs)
                    .into_par_iter()
                    .map(|id| {
                        let mut rng = streams.get(id, Role::Schedule);
                        // Skip the two setting-choice draws.
                        let _: (f64, f64) = (rng.random(), rng.random());
                        let u: f64 = rng.random();
                        -(1.0 - u).ln() / rate
                    })
                    .collect();
                let mut t = 0.0;
                let times = gaps
                    .into_iter()
                    .map(|g| {
                        t += g;
                        quantize_time(t)
                    })
                    .collect();
                EmissionTimes::Listed(times)
            }
        }
    }

    pub(crate) fn get(&self, pair_id: u64) -> f64 {
        match self {
            EmissionTimes::Regular(interval) => quantize_time(pair_id as f64 * interval),
            EmissionTimes::Listed(times) => times[pair_id as usize],
        }
    }
}

/// Generates pair `pair_id` exactly as [`run_experiment`] does.
pub(crate) fn experiment_pair(
    config: &ExperimentConfig,
    streams: &Substreams,
    emission: &EmissionTimes,
    pair_id: u64,
) -> (DetectionEvent, DetectionEvent) {
    let (i1, i2) = config.setting_indices(pair_id, streams);
    generate_pair(
        pair_id,
        emission.get(pair_id),
        (i1, config.settings1[i1]),
        (i2, config.settings2[i2]),
        &config.params,
        streams,
    )
}

/// Runs the experiment on the current rayon pool.
///
/// The result depends only on the config: every pair draws from its own
/// substreams, so the number of worker threads does not matter.
pub fn run_experiment(config: &ExperimentConfig) -> Result<EventLog> {
    config.validate()?;
    let streams = Substreams::new(config.seed);
    let emission = EmissionTimes::new(config, &streams);
    let (station1, station2): (Vec<_>, Vec<_>) = (0..config.n_pairs)
        .into_par_iter()
        .map(|id| experiment_pair(config, &streams, &emission, id))
        .unzip();
    Ok(EventLog::from_streams(config.clone(), station1, station2))
}

/// Runs the experiment on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(config: &ExperimentConfig, workers: usize) -> Result<EventLog> {
    with_workers(workers, || run_experiment(config))
}

pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if workers == 0 {
        return Err(Error::invalid("workers", "must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    pool.install(f)
}
