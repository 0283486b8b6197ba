#![no_main]

use clap::Parser;
use eprb::cli::{resolve, Args, FileConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(file) = FileConfig::parse(text, "fuzz.toml") {
        let args = Args::try_parse_from(["eprb"]).unwrap();
        let _ = resolve(args, file, None);
    }
});
