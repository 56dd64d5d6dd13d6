#![no_main]

use herdlab_cli::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = ExperimentConfig::from_toml(text) {
            let _ = config.hash();
        }
    }
});
