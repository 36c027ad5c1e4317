#![no_main]

use libfuzzer_sys::fuzz_target;
use ocsnspd::detector::{de_at_dark_rate, Interpolation};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(curve) = ocsnspd::io::parse_de_curve_csv(text, "fuzz", 1550.0) {
        let (lo, hi) = curve.range();
        for rate in [lo, (lo * hi).sqrt(), hi] {
            let _ = de_at_dark_rate(&curve, rate, Interpolation::LogRate);
            let _ = de_at_dark_rate(&curve, rate, Interpolation::LinearRate);
        }
    }
});
