//! Corpus ingestion must never panic, and serializing a parsed corpus must
//! reach a fixed point after one round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    for lowercase in [false, true] {
        if let Ok(corpus) = decipos::corpus::parse_plaintext(text, lowercase) {
            let canon = corpus.to_plaintext();
            let again = decipos::corpus::parse_plaintext(&canon, false)
                .expect("serialized corpus failed to parse");
            assert_eq!(
                again.to_plaintext(),
                canon,
                "serialization is not a fixed point"
            );
        }
    }
});
