#![no_main]

use eprb::io::tags::{format_stream, parse_stream};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(stream) = parse_stream(text, "fuzz") {
        // Whatever parses must survive a write/read cycle unchanged.
        let again = parse_stream(&format_stream(stream.station, &stream.events), "fuzz").unwrap();
        assert_eq!(again.events.len(), stream.events.len());
        for (a, b) in again.events.iter().zip(&stream.events) {
            assert_eq!((a.pair_id, a.setting_index, a.outcome), (b.pair_id, b.setting_index, b.outcome));
        }
    }
});
