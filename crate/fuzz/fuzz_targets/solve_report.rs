#![no_main]

use libfuzzer_sys::fuzz_target;
use wagetheft::cli::SolveReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = SolveReport::from_json(text) {
        let _ = report.recheck();
    }
});
