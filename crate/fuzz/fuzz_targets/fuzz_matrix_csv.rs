#![no_main]

use gapscope::io::parse_matrix_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(a) = parse_matrix_csv(text) {
        for i in 0..a.n() {
            let row: f64 = (0..a.n()).map(|j| a.get(i, j)).sum();
            assert!((row - 1.0).abs() < 1e-6);
        }
    }
});
