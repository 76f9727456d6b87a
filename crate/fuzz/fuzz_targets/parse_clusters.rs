//! Cluster files from arbitrary producers: parsing must not panic, and a
//! parsed clustering must serialize to a canonical form that reparses to
//! the same assignment, paths, and frequencies.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(clustering) = decipos::brown::parse_clusters_tsv(text) {
        let tsv = decipos::brown::clusters_to_tsv(&clustering, 0);
        let again = decipos::brown::parse_clusters_tsv(&tsv).expect("round trip");
        assert_eq!(again.assignment(), clustering.assignment());
        assert_eq!(again.paths(), clustering.paths());
        assert_eq!(again.word_freq(), clustering.word_freq());
        assert_eq!(again.lowercase(), clustering.lowercase());
    }
});
