#![no_main]

use libfuzzer_sys::fuzz_target;
use tardy_core::oracle::MlpModel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = MlpModel::from_json(text) {
        let again = MlpModel::from_json(&model.to_json().expect("serializes")).expect("reloads");
        assert_eq!(again, model);
    }
});
