//! Emission-table TSV: no panics, and probabilities survive a round trip
//! bit for bit.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = decipos::cipher::parse_table_tsv(text) {
        let tsv = decipos::cipher::table_to_tsv(&table, 0);
        let again = decipos::cipher::parse_table_tsv(&tsv).expect("round trip");
        assert_eq!(again.tags(), table.tags());
        assert_eq!(again.clusters(), table.clusters());
        for (a, b) in again.probs().iter().zip(table.probs()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
});
