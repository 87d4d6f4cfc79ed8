#![no_main]

use libfuzzer_sys::fuzz_target;
use tardy_core::formats::{parse_training_data, write_training_data};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((mode, rows)) = parse_training_data(text) {
        let written = write_training_data(mode, &rows).expect("parsed data can be written");
        let (mode2, rows2) = parse_training_data(&written).expect("written data parses");
        assert_eq!(mode, mode2);
        assert_eq!(rows, rows2);
    }
});
