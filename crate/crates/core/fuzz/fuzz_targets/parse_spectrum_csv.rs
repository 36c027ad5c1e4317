#![no_main]

use libfuzzer_sys::fuzz_target;
use ocsnspd::interferometry::{analyze_fringes, resolve_surfaces, SurfaceAttribution};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spectrum) = ocsnspd::io::parse_spectrum_csv(text) {
        // Keep the heavier structured fit to small inputs.
        if analyze_fringes(&spectrum).is_ok() && spectrum.len() <= 4096 {
            let _ = resolve_surfaces(&spectrum, SurfaceAttribution::ShorterIsAir);
        }
    }
});
