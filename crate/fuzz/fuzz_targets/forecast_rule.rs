#![no_main]

use libfuzzer_sys::fuzz_target;
use wagetheft::repeated::ForecastRule;

fuzz_target!(|text: &str| {
    let Ok(rule) = text.parse::<ForecastRule>() else {
        return;
    };
    assert_eq!(rule.to_string().parse::<ForecastRule>().unwrap(), rule);
    let mut f = rule.start();
    for b in [0.0, 1.0, 2.5] {
        f.observe(b);
        assert!(f.forecast().is_finite());
    }
});
