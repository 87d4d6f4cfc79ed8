#![no_main]

use libfuzzer_sys::fuzz_target;
use tardy_core::bench::{parse_records, records_to_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(records) = parse_records(text) {
        let again = parse_records(&records_to_csv(&records).expect("serializes")).expect("reparses");
        assert_eq!(again, records);
    }
});
