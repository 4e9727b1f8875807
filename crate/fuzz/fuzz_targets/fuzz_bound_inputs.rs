#![no_main]

use gapscope::bounds::{evaluate_named, BOUND_NAMES};
use gapscope::io::parse_bound_inputs;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(inputs) = parse_bound_inputs(text) {
        for name in BOUND_NAMES {
            let _ = evaluate_named(name, &inputs, None);
        }
    }
});
