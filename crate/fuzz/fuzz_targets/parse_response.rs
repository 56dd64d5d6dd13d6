#![no_main]

use herdlab::sensing::{parse_response, reduce_observation};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(raw) = std::str::from_utf8(data) {
        if let Ok(report) = parse_response(raw) {
            assert_eq!(report.reduced, reduce_observation(&report.flags));
        }
    }
});
