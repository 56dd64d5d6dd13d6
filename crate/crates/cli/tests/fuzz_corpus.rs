//! Replays the checked-in configuration fuzz seeds.

use std::fs;
use std::path::PathBuf;

use herdlab_cli::ExperimentConfig;

#[test]
fn config_toml_seeds() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/config_toml");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let parsed = ExperimentConfig::from_toml(&fs::read_to_string(&path).unwrap());
        assert_eq!(parsed.is_ok(), name != "unknown_key", "{name}");
        if let Ok(config) = parsed {
            assert_eq!(config.hash().len(), 64);
        }
        seen += 1;
    }
    assert_eq!(seen, 3);
}
