#![no_main]

use herdlab::rbm::RbmParams;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(params) = RbmParams::read_flat_csv(data) {
        let mut out = Vec::new();
        params.write_flat_csv(&mut out).unwrap();
        assert_eq!(RbmParams::read_flat_csv(out.as_slice()).unwrap(), params);
    }
});
