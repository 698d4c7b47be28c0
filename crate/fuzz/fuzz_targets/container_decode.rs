#![no_main]

use libfuzzer_sys::fuzz_target;
use rdlimit::io::{decode_container, encode_container};

fuzz_target!(|data: &[u8]| {
    if let Ok(payload) = decode_container(data) {
        let bytes = encode_container(&payload).unwrap();
        assert_eq!(bytes, data);
    }
});
