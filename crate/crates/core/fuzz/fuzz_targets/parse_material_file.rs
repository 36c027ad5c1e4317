#![no_main]

use libfuzzer_sys::fuzz_target;
use ocsnspd::config::{parse_material_file, MaterialTable};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = parse_material_file(text) {
        let _ = MaterialTable::from_specs(&file.materials);
    }
});
