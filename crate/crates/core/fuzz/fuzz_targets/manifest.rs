#![no_main]

use eprb::io::RunManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(m) = RunManifest::from_json(text) {
        let _ = m.to_json();
    }
});
