#![no_main]

use herdlab::sensing::{read_dataset, CutPoints, DatasetColumns};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let columns = DatasetColumns::default();
    for cuts in [CutPoints::PositiveQuintiles, CutPoints::Explicit([0.0, 0.5, 1.0, 1.5])] {
        if let Ok(records) = read_dataset(data, &columns, &cuts) {
            assert!(records.iter().all(|r| r.class() <= 5));
        }
    }
});
