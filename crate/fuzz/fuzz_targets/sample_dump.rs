#![no_main]

use herdlab::rbm::{read_samples, write_samples};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(samples) = read_samples(data) {
        let mut out = Vec::new();
        write_samples(&mut out, &samples).unwrap();
        assert_eq!(read_samples(out.as_slice()).unwrap(), samples);
    }
});
