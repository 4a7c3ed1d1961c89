#![no_main]

use libfuzzer_sys::fuzz_target;
use wagetheft::experiments::SweepSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = SweepSpec::from_json(text) {
        let _ = spec.resolved_axis();
        // Accepted specs re-serialize to something that parses back.
        let again = serde_json::to_string(&spec).unwrap();
        assert_eq!(SweepSpec::from_json(&again).unwrap(), spec);
    }
});
