#![no_main]

use libfuzzer_sys::fuzz_target;
use rbf_lab_cli::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = ExperimentConfig::parse(text) {
        let again = ExperimentConfig::parse(&config.to_toml()).expect("serialized config parses");
        assert_eq!(again, config);
    }
});
