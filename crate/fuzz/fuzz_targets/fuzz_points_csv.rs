#![no_main]

use gapscope::io::{parse_points_csv, write_points_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_points_csv(text) {
        let again = parse_points_csv(&write_points_csv(&cfg)).expect("written points parse");
        assert_eq!(again.coords(), cfg.coords());
    }
});
