#![no_main]

use libfuzzer_sys::fuzz_target;
use rdlimit::io::Table;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = Table::from_bytes(data) {
        for name in table.header.clone() {
            let _ = table.column(&name);
        }
        let _ = table.to_bytes();
    }
});
