//! Coincidence selection: the per-pair window filter and a time-tag stream matcher.
//!
//! The window is closed: two events coincide iff `|t2 - t1| <= W`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{DetectionEvent, EventLog, Station};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoincidencePair {
    pub event1: DetectionEvent,
    pub event2: DetectionEvent,
    /// `time_tag2 - time_tag1`.
    pub dt: f64,
}

impl CoincidencePair {
    fn new(event1: DetectionEvent, event2: DetectionEvent) -> Self {
        CoincidencePair {
            event1,
            event2,
            dt: event2.time_tag - event1.time_tag,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchPolicy {
    /// Match events carrying the same pair id.
    #[default]
    Paired,
    /// Greedy earliest-first nearest-neighbour matching on raw time tags.
    Stream,
}

impl FromStr for MatchPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paired" => Ok(MatchPolicy::Paired),
            "stream" | "stream-greedy" => Ok(MatchPolicy::Stream),
            other => Err(Error::invalid(
                "matcher",
                format!("expected `paired` or `stream`, got {other:?}"),
            )),
        }
    }
}

impl fmt::Display for MatchPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchPolicy::Paired => "paired",
            MatchPolicy::Stream => "stream",
        })
    }
}

fn check_window(window: f64) -> Result<()> {
    if window.is_finite() && window >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("window", format!("must be finite and >= 0, got {window}")))
    }
}

/// Pairs up the two stations' events by pair id, in pair-id order.
///
/// Fails if a stream lacks pair ids or the two streams do not cover the same ids.
pub fn pair_events(log: &EventLog) -> Result<Vec<(DetectionEvent, DetectionEvent)>> {
    let index = |station: Station| -> Result<HashMap<u64, DetectionEvent>> {
        let stream = log.stream(station);
        let mut map = HashMap::with_capacity(stream.len());
        for ev in stream {
            let id = ev.pair_id.ok_or(Error::MissingPairId {
                station: station.number(),
            })?;
            if map.insert(id, *ev).is_some() {
                return Err(Error::MismatchedPairIds(format!(
                    "pair_id {id} appears twice at station {station}"
                )));
            }
        }
        Ok(map)
    };
    let first = index(Station::One)?;
    let mut second = index(Station::Two)?;
    if first.len() != second.len() {
        return Err(Error::MismatchedPairIds(format!(
            "station 1 has {} ids, station 2 has {}",
            first.len(),
            second.len()
        )));
    }
    let mut pairs = Vec::with_capacity(first.len());
    for (id, e1) in first {
        let e2 = second.remove(&id).ok_or_else(|| {
            Error::MismatchedPairIds(format!("pair_id {id} missing at station 2"))
        })?;
        pairs.push((e1, e2));
    }
    pairs.par_sort_unstable_by_key(|(e1, _)| e1.pair_id);
    Ok(pairs)
}

fn within(e1: &DetectionEvent, e2: &DetectionEvent, window: f64) -> bool {
    (e2.time_tag - e1.time_tag).abs() <= window
}

/// Keeps the pairs whose two time tags lie within `window` of each other.
pub fn pair_filter(log: &EventLog, window: f64) -> Result<Vec<CoincidencePair>> {
    check_window(window)?;
    Ok(filter_paired(&pair_events(log)?, window))
}

/// [`pair_filter`] over pairs already joined by [`pair_events`]; lets sweeps join once.
pub fn filter_paired(
    pairs: &[(DetectionEvent, DetectionEvent)],
    window: f64,
) -> Vec<CoincidencePair> {
    pairs
        .par_iter()
        .filter(|(e1, e2)| within(e1, e2, window))
        .map(|&(e1, e2)| CoincidencePair::new(e1, e2))
        .collect()
}

/// Greedy stream matching.
///
/// Station-1 events are visited in time order; each is matched to the nearest
/// still-unmatched station-2 event within `window` (the earlier one on a tie).
/// Every event takes part in at most one pair. Pair ids are ignored.
pub fn stream_match(log: &EventLog, window: f64) -> Result<Vec<CoincidencePair>> {
    check_window(window)?;
    let first = &log.station1;
    let second = &log.station2;
    let mut taken = vec![false; second.len()];
    let mut lo = 0;
    let mut out = Vec::new();
    for e1 in first {
        let t1 = e1.time_tag;
        while lo < second.len() && (taken[lo] || second[lo].time_tag < t1 - window) {
            lo += 1;
        }
        let mut best: Option<(usize, f64)> = None;
        for (j, e2) in second.iter().enumerate().skip(lo) {
            if e2.time_tag > t1 + window {
                break;
            }
            if taken[j] {
                continue;
            }
            let gap = (e2.time_tag - t1).abs();
            if gap <= window && best.is_none_or(|(_, g)| gap < g) {
                best = Some((j, gap));
            }
        }
        if let Some((j, _)) = best {
            taken[j] = true;
            out.push(CoincidencePair::new(*e1, second[j]));
        }
    }
    Ok(out)
}

/// Runs the matcher selected by `policy`.
pub fn find_coincidences(
    log: &EventLog,
    window: f64,
    policy: MatchPolicy,
) -> Result<Vec<CoincidencePair>> {
    match policy {
        MatchPolicy::Paired => pair_filter(log, window),
        MatchPolicy::Stream => stream_match(log, window),
    }
}

/// Fraction of emitted pairs that end up coincident under the window filter.
pub fn coincidence_rate(log: &EventLog, window: f64) -> Result<f64> {
    let n = pair_filter(log, window)?.len();
    Ok(n as f64 / log.n_pairs() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelParams, Outcome, Setting};
    use crate::sim::ExperimentConfig;

    fn event(station: Station, id: Option<u64>, t: f64) -> DetectionEvent {
        DetectionEvent {
            station,
            pair_id: id,
            setting_index: 0,
            outcome: Outcome::Plus,
            time_tag: t,
        }
    }

    fn log(t1: &[f64], t2: &[f64]) -> EventLog {
        let params = ModelParams::new(4.0, 1.0, 0.5).unwrap();
        let config = ExperimentConfig::new(params, vec![Setting(0.0)], vec![Setting(0.0)], t1.len().max(1) as u64, 0);
        let s1 = t1.iter().enumerate().map(|(i, &t)| event(Station::One, Some(i as u64), t)).collect();
        let s2 = t2.iter().enumerate().map(|(i, &t)| event(Station::Two, Some(i as u64), t)).collect();
        EventLog::from_streams(config, s1, s2)
    }

    #[test]
    fn pair_filter_boundary_examples() {
        assert_eq!(pair_filter(&log(&[0.0], &[0.3]), 0.5).unwrap().len(), 1);
        assert_eq!(pair_filter(&log(&[0.0], &[0.6]), 0.5).unwrap().len(), 0);
        // Closed boundary.
        assert_eq!(pair_filter(&log(&[0.0], &[0.5]), 0.5).unwrap().len(), 1);
    }

    #[test]
    fn pair_filter_rejects_mismatched_ids() {
        let mut l = log(&[0.0, 1.0], &[0.0, 1.0]);
        l.station2[1].pair_id = Some(9);
        assert!(matches!(pair_filter(&l, 1.0), Err(Error::MismatchedPairIds(_))));
        let mut l = log(&[0.0, 1.0], &[0.0]);
        l.station2.truncate(1);
        assert!(matches!(pair_filter(&l, 1.0), Err(Error::MismatchedPairIds(_))));
        let mut l = log(&[0.0], &[0.0]);
        l.station1[0].pair_id = None;
        assert!(matches!(pair_filter(&l, 1.0), Err(Error::MissingPairId { station: 1 })));
    }

    #[test]
    fn stream_match_examples() {
        let m = stream_match(&log(&[0.0], &[0.2]), 0.5).unwrap();
        assert_eq!(m.len(), 1);
        assert!((m[0].dt - 0.2).abs() < 1e-15);
        assert!(stream_match(&log(&[0.0], &[0.6]), 0.5).unwrap().is_empty());
        let m = stream_match(&log(&[0.0, 1.0], &[0.4]), 0.5).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].event1.time_tag, 0.0);
        assert_eq!(m[0].event2.time_tag, 0.4);
    }

    #[test]
    fn stream_match_prefers_nearest_then_earlier() {
        let m = stream_match(&log(&[1.0], &[0.7, 1.1]), 0.5).unwrap();
        assert_eq!(m[0].event2.time_tag, 1.1);
        let m = stream_match(&log(&[1.0], &[0.75, 1.25]), 0.5).unwrap();
        assert_eq!(m[0].event2.time_tag, 0.75);
    }

    #[test]
    fn stream_match_ignores_pair_ids() {
        let mut l = log(&[0.0], &[0.1]);
        l.station1[0].pair_id = None;
        l.station2[0].pair_id = None;
        assert_eq!(stream_match(&l, 0.5).unwrap().len(), 1);
    }

    #[test]
    fn negative_window_rejected() {
        assert!(pair_filter(&log(&[0.0], &[0.0]), -1.0).is_err());
        assert!(stream_match(&log(&[0.0], &[0.0]), f64::NAN).is_err());
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("paired".parse::<MatchPolicy>().unwrap(), MatchPolicy::Paired);
        assert_eq!("stream".parse::<MatchPolicy>().unwrap(), MatchPolicy::Stream);
        assert!("nearest".parse::<MatchPolicy>().is_err());
    }
}
