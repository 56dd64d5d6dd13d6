#![no_main]

use herdlab::sensing::CacheEntry;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(line) = std::str::from_utf8(data) {
        let _ = CacheEntry::parse_line(line);
    }
});
