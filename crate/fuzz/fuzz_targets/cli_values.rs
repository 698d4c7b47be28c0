#![no_main]

use libfuzzer_sys::fuzz_target;
use rdlimit::io::{parse_budget_list, parse_size};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((w, h)) = parse_size(text) {
        assert!(w > 0 && h > 0);
    }
    if let Ok(budgets) = parse_budget_list(text) {
        assert!(budgets.windows(2).all(|w| w[0] < w[1]));
        assert!(budgets.iter().all(|b| *b > 0.0 && b.is_finite()));
    }
});
