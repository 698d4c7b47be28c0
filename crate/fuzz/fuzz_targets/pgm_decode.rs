#![no_main]

use libfuzzer_sys::fuzz_target;
use rdlimit::io::{decode_pgm, encode_pgm};

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = decode_pgm(data) {
        assert!(img.samples().iter().all(|s| (0.0..=1.0).contains(s)));
        // 16-bit re-encoding is lossless for both input depths
        let again = decode_pgm(&encode_pgm(&img, 65535).unwrap()).unwrap();
        assert_eq!(again.width(), img.width());
        assert_eq!(again.height(), img.height());
    }
});
