//! Language-model TSV: no panics on garbage, and serialization of an
//! accepted model is a fixed point after one round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(lm) = decipos::poslm::parse_lm_tsv(text) {
        let canon = lm.to_tsv(0);
        let again = decipos::poslm::parse_lm_tsv(&canon).expect("serialized model");
        assert_eq!(again.to_tsv(0), canon, "serialization is not a fixed point");
    }
});
