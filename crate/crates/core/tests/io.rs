mod common;

use eprb::io::manifest::{unix_now, RunManifest};
use eprb::io::results::{read_rows, write_sweep};
use eprb::io::tags::{format_stream, parse_stream};
use eprb::io::{read_tags, write_tags};
use eprb::model::Outcome;
use eprb::sim::{quantize_time, run_experiment, DetectionEvent, Station};
use eprb::{sweep_log, ChshQuadruple, Error, MatchPolicy, SweepOptions};
use eprb::analysis::SweepRow;
use proptest::prelude::*;

use common::chsh_config;

#[test]
fn tags_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = chsh_config(4.0, 1000.0, 0.0, 5_000, 77);
    let log = run_experiment(&config).unwrap();
    let prefix = dir.path().join("nested/run");
    let paths = write_tags(&log, &prefix).unwrap();
    assert!(paths.iter().all(|p| p.exists()));
    assert_eq!(read_tags(&prefix, &config).unwrap(), log);
}

#[test]
fn reanalysis_of_stored_tags_matches_the_live_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let config = chsh_config(4.0, 1000.0, 0.0, 20_000, 5);
    let log = run_experiment(&config).unwrap();
    let prefix = dir.path().join("tags");
    write_tags(&log, &prefix).unwrap();
    let windows = [2.0, 20.0, 200.0, 900.0];
    for matcher in [MatchPolicy::Paired, MatchPolicy::Stream] {
        let opts = SweepOptions {
            matcher,
            ..SweepOptions::default()
        };
        let live = sweep_log(&log, &windows, &opts).unwrap();
        let stored = sweep_log(&read_tags(&prefix, &config).unwrap(), &windows, &opts).unwrap();
        assert_eq!(live, stored);
    }
}

#[test]
fn non_numeric_time_is_reported_with_its_line() {
    let text = "# eprb-timetags v1 station=1\npair_id,time_ns,setting_index,outcome\n0,1.000000,0,1\n1,2.000000,1,-1\n2,later,0,1\n";
    match parse_stream(text, "station1.csv") {
        Err(e @ Error::Parse { line: 5, .. }) => assert!(e.to_string().contains("station1.csv")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn sweep_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = chsh_config(4.0, 1000.0, 0.0, 5_000, 6);
    let sweep = sweep_log(&run_experiment(&config).unwrap(), &[10.0, 100.0, 1000.0], &SweepOptions::default()).unwrap();
    let path = dir.path().join("sweep.csv");
    write_sweep(&path, &sweep).unwrap();
    let header = std::fs::read_to_string(&path).unwrap().lines().next().unwrap().to_owned();
    assert_eq!(header, "window,s,stderr,coincidence_rate");
    let back: Vec<SweepRow> = read_rows(&path).unwrap();
    assert_eq!(back, sweep.rows);
}

#[test]
fn manifest_round_trip() {
    let config = chsh_config(2.0, 500.0, 5.0, 100, 3);
    let manifest = RunManifest {
        version: "0.1.0".into(),
        mode: "sweep".into(),
        seed: config.seed,
        config,
        windows: vec![1.0, 10.0],
        quadruple: ChshQuadruple::default(),
        matcher: MatchPolicy::Stream,
        started: unix_now(),
        finished: unix_now(),
        outputs: vec!["out/sweep.csv".into()],
    };
    let json = manifest.to_json().unwrap();
    assert_eq!(RunManifest::from_json(&json).unwrap(), manifest);
    assert!(RunManifest::from_json(&json.replacen("\"mode\"", "\"mood\"", 1)).is_err());
}

fn event_strategy(station: Station) -> impl Strategy<Value = DetectionEvent> {
    (prop::option::of(0u64..1_000_000), 0.0f64..1e9, 0usize..4, any::<bool>()).prop_map(move |(id, t, k, plus)| {
        DetectionEvent {
            station,
            pair_id: id,
            setting_index: k,
            outcome: if plus { Outcome::Plus } else { Outcome::Minus },
            time_tag: quantize_time(t),
        }
    })
}

proptest! {
    #[test]
    fn stream_text_round_trips(events in prop::collection::vec(event_strategy(Station::Two), 0..40)) {
        let text = format_stream(Station::Two, &events);
        let back = parse_stream(&text, "p").unwrap();
        prop_assert_eq!(back.station, Station::Two);
        prop_assert_eq!(&back.events, &events);
        prop_assert_eq!(format_stream(Station::Two, &back.events), text);
    }
}

proptest! {
    #[test]
    fn manifest_floats_round_trip(started in 0.0f64..4e9, angle in -10.0f64..10.0, window in 0.0f64..1e4) {
        let mut config = chsh_config(4.0, 1000.0, window, 10, 1);
        config.settings1[1] = eprb::model::Setting(angle);
        let manifest = RunManifest {
            version: "0.1.0".into(),
            mode: "mc".into(),
            seed: 1,
            config,
            windows: vec![window],
            quadruple: ChshQuadruple::default(),
            matcher: MatchPolicy::Paired,
            started,
            finished: started,
            outputs: vec![],
        };
        prop_assert_eq!(RunManifest::from_json(&manifest.to_json().unwrap()).unwrap(), manifest);
    }
}
