//! Typology feature tables: parsing arbitrary bytes must never panic, and
//! accepted tables must expose consistent dimensions.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = decipos::typology::parse_wals_tsv(text) {
        for (l, lang) in table.languages().iter().enumerate() {
            assert!(!lang.is_empty());
            for f in 0..table.features().len() {
                // Every stored value must be a real number or absent.
                if let Some(v) = table.value(l, f) {
                    assert!(v.is_finite());
                }
            }
        }
    }
});
