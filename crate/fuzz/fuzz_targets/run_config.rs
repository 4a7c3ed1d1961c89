#![no_main]

use libfuzzer_sys::fuzz_target;
use wagetheft::cli::{default_instance, instance_from_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(instance) = instance_from_json(default_instance(), text) {
        // Any validated instance must solve without panicking.
        let _ = wagetheft::solve(&instance);
    }
});
