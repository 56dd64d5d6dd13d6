#![no_main]

use herdlab::{CostModel, ObservationModel};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = ObservationModel::read_csv(data) {
        for row in model.rows() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }
    let _ = CostModel::read_csv(data);
});
