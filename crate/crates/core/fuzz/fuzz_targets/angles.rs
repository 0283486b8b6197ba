#![no_main]

use eprb::cli::{parse_angle, parse_angles, parse_quadruple};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(a) = parse_angle(text) {
        assert!(a.is_finite());
    }
    let _ = parse_angles(text);
    let _ = parse_quadruple(text);
});
