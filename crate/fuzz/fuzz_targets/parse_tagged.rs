//! Tagged-output TSV: parse anything without panicking; parsed content
//! must serialize and reparse to the same sentences.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(corpus) = decipos::corpus::parse_tagged_tsv(text) {
        let tsv = decipos::corpus::tagged_to_tsv(&corpus, 0);
        let again = decipos::corpus::parse_tagged_tsv(&tsv).expect("round trip");
        assert_eq!(again.sentences(), corpus.sentences());
    }
});
