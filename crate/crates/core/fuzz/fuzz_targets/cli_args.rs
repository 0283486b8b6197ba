#![no_main]

use eprb::cli::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    // One argument per line; never point at real files.
    let args: Vec<&str> = std::iter::once("eprb")
        .chain(text.lines())
        .filter(|a| !a.starts_with("--config"))
        .collect();
    let _ = parse_config(args);
});
