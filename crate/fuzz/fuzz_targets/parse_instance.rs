#![no_main]

use libfuzzer_sys::fuzz_target;
use tardy_core::formats::{parse_instance, write_instance};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(instance) = parse_instance(text) {
        // values on the six-decimal grid survive a rewrite
        let again = parse_instance(&write_instance(&instance)).expect("rewritten instance parses");
        assert_eq!(again.len(), instance.len());
        assert_eq!(write_instance(&again), write_instance(&instance));
    }
});
