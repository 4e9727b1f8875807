#![no_main]

use gapscope::io::parse_space_json;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(space) = parse_space_json(text) {
        if space.dim() <= 64 {
            let x = vec![1.0; space.dim()];
            assert!(space.norm(&x).unwrap() > 0.0);
        }
    }
});
