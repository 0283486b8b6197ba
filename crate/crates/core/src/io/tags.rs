//! Time-tag files: one CSV per station.
//!
//! ```text
//! # eprb-timetags v1 station=1
//! pair_id,time_ns,setting_index,outcome
//! 0,0.000000,1,-1
//! 1,10000.417312,0,1
//! ```
//!
//! Times are written with exactly six decimals. The `pair_id` column may be
//! omitted; such files can only be re-matched with the stream matcher.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::Outcome;
use crate::sim::{DetectionEvent, EventLog, ExperimentConfig, Station, TIME_DECIMALS};

pub const FORMAT_TAG: &str = "eprb-timetags";
pub const FORMAT_VERSION: &str = "v1";
const HEADER_WITH_IDS: [&str; 4] = ["pair_id", "time_ns", "setting_index", "outcome"];
const HEADER_WITHOUT_IDS: [&str; 3] = ["time_ns", "setting_index", "outcome"];

/// File holding one station's stream for a given prefix: `<prefix>.station<N>.csv`.
pub fn station_path(prefix: &Path, station: Station) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(format!(".station{}.csv", station.number()));
    PathBuf::from(name)
}

/// One station's events as stored in a file.
#[derive(Debug, Clone, PartialEq)]
pub struct StationStream {
    pub station: Station,
    pub events: Vec<DetectionEvent>,
}

/// Renders one station's stream in the time-tag format.
pub fn format_stream(station: Station, events: &[DetectionEvent]) -> String {
    let mut out = String::with_capacity(32 * events.len() + 64);
    out.push_str(&format!("# {FORMAT_TAG} {FORMAT_VERSION} station={}\n", station.number()));
    out.push_str(&HEADER_WITH_IDS.join(","));
    out.push('\n');
    for e in events {
        let id = e.pair_id.map(|id| id.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{id},{:.*},{},{}\n",
            TIME_DECIMALS, e.time_tag, e.setting_index, e.outcome
        ));
    }
    out
}

fn parse_error(source: &str, line: u64, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: source.to_owned(),
        line,
        reason: reason.into(),
    }
}

fn parse_version_line(source: &str, line: &str) -> Result<Station> {
    let line = line.trim_end_matches('\r');
    let mut words = line
        .strip_prefix('#')
        .ok_or_else(|| parse_error(source, 1, format!("expected `# {FORMAT_TAG} {FORMAT_VERSION} station=N`")))?
        .split_whitespace();
    if words.next() != Some(FORMAT_TAG) {
        return Err(parse_error(source, 1, format!("not a {FORMAT_TAG} file")));
    }
    let version = words.next().unwrap_or("");
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version.to_owned(),
            expected: FORMAT_VERSION.to_owned(),
        });
    }
    let station = words
        .next()
        .and_then(|w| w.strip_prefix("station="))
        .and_then(|n| n.parse::<u8>().ok())
        .and_then(Station::from_number)
        .ok_or_else(|| parse_error(source, 1, "missing or invalid `station=1|2`"))?;
    if let Some(extra) = words.next() {
        return Err(parse_error(source, 1, format!("unexpected {extra:?} in version line")));
    }
    Ok(station)
}

/// Parses a time-tag file. `source` names the input in error messages.
pub fn parse_stream(text: &str, source: &str) -> Result<StationStream> {
    let (first, rest) = match text.split_once('\n') {
        Some(split) => split,
        None => (text, ""),
    };
    let station = parse_version_line(source, first)?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(rest.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_error(source, 2, e.to_string()))?
        .clone();
    let header: Vec<&str> = header.iter().map(str::trim).collect();
    let with_ids = if header == HEADER_WITH_IDS {
        true
    } else if header == HEADER_WITHOUT_IDS {
        false
    } else {
        return Err(parse_error(
            source,
            2,
            format!("header must be `{}` or `{}`", HEADER_WITH_IDS.join(","), HEADER_WITHOUT_IDS.join(",")),
        ));
    };
    let columns = if with_ids { 4 } else { 3 };

    let mut events = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() + 1);
            parse_error(source, line, e.to_string())
        })?;
        // csv counts lines from the header; the version line comes first.
        let line = record.position().map_or(0, |p| p.line() + 1);
        if record.len() != columns {
            return Err(parse_error(
                source,
                line,
                format!("expected {columns} columns, found {}", record.len()),
            ));
        }
        let field = |k: usize| record[k].trim();
        let mut k = 0;
        let pair_id = if with_ids {
            k = 1;
            let raw = field(0);
            if raw.is_empty() {
                None
            } else {
                Some(raw.parse::<u64>().map_err(|_| {
                    parse_error(source, line, format!("pair_id {raw:?} is not a non-negative integer"))
                })?)
            }
        } else {
            None
        };
        let raw_time = field(k);
        let time_tag = raw_time
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite())
            .ok_or_else(|| parse_error(source, line, format!("time {raw_time:?} is not a finite number")))?;
        let raw_index = field(k + 1);
        let setting_index = raw_index.parse::<usize>().map_err(|_| {
            parse_error(source, line, format!("setting_index {raw_index:?} is not a non-negative integer"))
        })?;
        let raw_outcome = field(k + 2);
        let outcome = raw_outcome
            .parse::<i64>()
            .ok()
            .and_then(|x| Outcome::try_from(x).ok())
            .ok_or_else(|| parse_error(source, line, format!("outcome {raw_outcome:?} is not +1 or -1")))?;
        events.push(DetectionEvent {
            station,
            pair_id,
            setting_index,
            outcome,
            time_tag,
        });
    }
    Ok(StationStream { station, events })
}

/// Writes both stations' streams next to `prefix` and returns the two paths.
pub fn write_tags(log: &EventLog, prefix: &Path) -> Result<[PathBuf; 2]> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut paths = Vec::with_capacity(2);
    for station in [Station::One, Station::Two] {
        let path = station_path(prefix, station);
        let text = format_stream(station, log.stream(station));
        let mut file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        file.write_all(text.as_bytes()).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok([paths[0].clone(), paths[1].clone()])
}

/// Reads the two station files under `prefix` into an event log.
///
/// `config` supplies the setting lists and model parameters for later
/// analysis; its pair count is replaced by the number of events read.
pub fn read_tags(prefix: &Path, config: &ExperimentConfig) -> Result<EventLog> {
    let mut streams = Vec::with_capacity(2);
    for station in [Station::One, Station::Two] {
        let path = station_path(prefix, station);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let stream = parse_stream(&text, &path.display().to_string())?;
        if stream.station != station {
            return Err(parse_error(
                &path.display().to_string(),
                1,
                format!("file declares station {}, expected {}", stream.station, station),
            ));
        }
        streams.push(stream.events);
    }
    let station2 = streams.pop().unwrap_or_default();
    let station1 = streams.pop().unwrap_or_default();
    let mut config = config.clone();
    config.n_pairs = station1.len().max(station2.len()) as u64;
    Ok(EventLog::from_streams(config, station1, station2))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# eprb-timetags v1 station=2\n\
        pair_id,time_ns,setting_index,outcome\n\
        0,0.250000,1,-1\n\
        1,10000.000001,0,1\n";

    #[test]
    fn parses_sample() {
        let s = parse_stream(SAMPLE, "sample").unwrap();
        assert_eq!(s.station, Station::Two);
        assert_eq!(s.events.len(), 2);
        assert_eq!(s.events[0].pair_id, Some(0));
        assert_eq!(s.events[0].outcome, Outcome::Minus);
        assert_eq!(s.events[1].time_tag, 10000.000001);
        assert_eq!(format_stream(Station::Two, &s.events), SAMPLE);
    }

    #[test]
    fn pair_id_column_optional() {
        let text = "# eprb-timetags v1 station=1\ntime_ns,setting_index,outcome\n1.5,0,1\n";
        let s = parse_stream(text, "x").unwrap();
        assert_eq!(s.events[0].pair_id, None);
        assert_eq!(s.events[0].time_tag, 1.5);
    }

    #[test]
    fn non_numeric_time_names_line() {
        let text = "# eprb-timetags v1 station=1\npair_id,time_ns,setting_index,outcome\n0,1.0,0,1\n1,abc,0,1\n";
        match parse_stream(text, "f.csv") {
            Err(Error::Parse { line, reason, .. }) => {
                assert_eq!(line, 4);
                assert!(reason.contains("abc"), "{reason}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_column_count() {
        let text = "# eprb-timetags v1 station=1\npair_id,time_ns,setting_index,outcome\n0,1.0,0\n";
        assert!(matches!(parse_stream(text, "f"), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn bad_outcome_and_index() {
        let base = "# eprb-timetags v1 station=1\npair_id,time_ns,setting_index,outcome\n";
        assert!(parse_stream(&format!("{base}0,1.0,0,0\n"), "f").is_err());
        assert!(parse_stream(&format!("{base}0,1.0,-1,1\n"), "f").is_err());
        assert!(parse_stream(&format!("{base}0,inf,0,1\n"), "f").is_err());
        assert!(parse_stream(&format!("{base}x,1.0,0,1\n"), "f").is_err());
    }

    #[test]
    fn version_mismatch() {
        let text = "# eprb-timetags v2 station=1\npair_id,time_ns,setting_index,outcome\n";
        assert!(matches!(parse_stream(text, "f"), Err(Error::VersionMismatch { .. })));
        assert!(matches!(parse_stream("pair_id,time_ns\n", "f"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_stream("# eprb-timetags v1 station=3\n", "f").is_err());
        assert!(parse_stream("# eprb-timetags v1 station=1\nfoo,bar\n", "f").is_err());
    }

    #[test]
    fn station_paths() {
        let p = station_path(Path::new("out/run"), Station::Two);
        assert_eq!(p, PathBuf::from("out/run.station2.csv"));
    }
}
