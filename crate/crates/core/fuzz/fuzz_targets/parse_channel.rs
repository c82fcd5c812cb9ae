#![no_main]

use libfuzzer_sys::fuzz_target;
use qcost::channel::STRICT_TOL;
use qcost::io::{channel_to_json, parse_channel};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // anything accepted must survive a write/read cycle unchanged
    if let Ok(ch) = parse_channel(text, STRICT_TOL) {
        let again = parse_channel(&channel_to_json(&ch), STRICT_TOL).expect("reparse");
        assert_eq!(again.ops(), ch.ops());
    }
});
