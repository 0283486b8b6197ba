#![no_main]

use eprb::cli::parse_window_grid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(grid) = parse_window_grid(text) {
        assert!(!grid.is_empty());
        assert!(grid.iter().all(|w| w.is_finite() && *w >= 0.0));
    }
});
