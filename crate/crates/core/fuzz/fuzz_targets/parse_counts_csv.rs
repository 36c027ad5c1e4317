#![no_main]

use libfuzzer_sys::fuzz_target;
use ocsnspd::detector::de_from_counts;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(measurements) = ocsnspd::io::parse_counts_csv(text) {
        for m in &measurements {
            de_from_counts(m).expect("parsed measurements are valid");
        }
    }
});
