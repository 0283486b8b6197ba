#![no_main]

use eprb::cli::parse_emission;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let _ = parse_emission(text);
});
