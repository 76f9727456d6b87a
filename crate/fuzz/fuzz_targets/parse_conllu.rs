//! The CoNLL-U reader must reject or accept arbitrary input without
//! panicking; accepted input must survive the word/tag TSV round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(corpus) = decipos::corpus::parse_conllu(text) {
        let tsv = decipos::corpus::tagged_to_tsv(&corpus, 0);
        let again = decipos::corpus::parse_tagged_tsv(&tsv).expect("tagged TSV of parsed treebank");
        assert_eq!(again.sentences(), corpus.sentences());
    }
});
