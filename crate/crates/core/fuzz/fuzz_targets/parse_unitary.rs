#![no_main]

use libfuzzer_sys::fuzz_target;
use qcost::io::{parse_unitary, unitary_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(u) = parse_unitary(text) {
        assert_eq!(parse_unitary(&unitary_to_json(&u)).expect("reparse"), u);
    }
});
