//! Corpus ingestion.
//!
//! Raw text arrives as plaintext (one sentence per line, tokens separated by
//! single spaces); labeled training data arrives as a CoNLL-U subset that
//! keeps only the FORM and UPOS columns. Tagged output produced by the tag
//! command (`word<TAB>tag` rows, blank line between sentences) can be read
//! back for evaluation.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{read_to_string, write_string, Error, Result};
use crate::tsv;

/// A raw corpus: sentences of verbatim tokens plus type frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenizedCorpus {
    sentences: Vec<Vec<String>>,
    vocab: BTreeMap<String, u64>,
}

impl TokenizedCorpus {
    /// Build a corpus from sentences, computing the vocabulary. Sentences
    /// must be non-empty and tokens must be non-empty strings.
    pub fn from_sentences(sentences: Vec<Vec<String>>) -> Result<Self> {
        let mut vocab = BTreeMap::new();
        for sentence in &sentences {
            if sentence.is_empty() {
                return Err(Error::invalid("corpus contains an empty sentence"));
            }
            for token in sentence {
                if token.is_empty() {
                    return Err(Error::invalid("corpus contains an empty token"));
                }
                *vocab.entry(token.clone()).or_insert(0) += 1;
            }
        }
        Ok(TokenizedCorpus { sentences, vocab })
    }

    pub fn sentences(&self) -> &[Vec<String>] {
        &self.sentences
    }

    /// Word type -> frequency. Counts sum to `token_count`.
    pub fn vocab(&self) -> &BTreeMap<String, u64> {
        &self.vocab
    }

    pub fn token_count(&self) -> u64 {
        self.sentences.iter().map(|s| s.len() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Serialize back to the plaintext format. Reloading the result yields
    /// an identical corpus.
    pub fn to_plaintext(&self) -> String {
        let mut out = String::new();
        for sentence in &self.sentences {
            out.push_str(&sentence.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn write_plaintext(&self, path: impl AsRef<Path>) -> Result<()> {
        write_string(path.as_ref(), &self.to_plaintext())
    }
}

/// Parse plaintext corpus content: one sentence per line, single spaces
/// between tokens, blank lines skipped. `lowercase` applies Unicode
/// lowercasing to every token at ingestion.
pub fn parse_plaintext(text: &str, lowercase: bool) -> Result<TokenizedCorpus> {
    let mut sentences = Vec::new();
    for (lineno, line) in tsv::lines(text) {
        tsv::reject_cr(lineno, line)?;
        if line.is_empty() {
            continue;
        }
        let mut sentence = Vec::new();
        for token in line.split(' ') {
            if token.is_empty() {
                return Err(Error::parse(
                    lineno,
                    "empty token (leading, trailing, or doubled space)",
                ));
            }
            if token.contains('\t') {
                return Err(Error::parse(
                    lineno,
                    "token contains a tab; downstream TSV formats cannot represent it",
                ));
            }
            sentence.push(if lowercase {
                token.to_lowercase()
            } else {
                token.to_owned()
            });
        }
        sentences.push(sentence);
    }
    if sentences.is_empty() {
        return Err(Error::EmptyInput {
            context: "<input>".to_owned(),
        });
    }
    TokenizedCorpus::from_sentences(sentences)
}

pub fn load_plaintext(path: impl AsRef<Path>, lowercase: bool) -> Result<TokenizedCorpus> {
    let path = path.as_ref();
    parse_plaintext(&read_to_string(path)?, lowercase).map_err(|e| e.with_path(path))
}

/// A labeled corpus: sentences of (word, tag) pairs plus the tagset in
/// first-occurrence order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TaggedCorpus {
    sentences: Vec<Vec<(String, String)>>,
    tagset: Vec<String>,
}

impl TaggedCorpus {
    /// Build from (word, tag) sentences; the tagset is collected in order of
    /// first occurrence. Sentences, words, and tags must be non-empty.
    pub fn from_sentences(sentences: Vec<Vec<(String, String)>>) -> Result<Self> {
        let mut tagset = Vec::new();
        let mut seen = BTreeMap::new();
        for sentence in &sentences {
            if sentence.is_empty() {
                return Err(Error::invalid("tagged corpus contains an empty sentence"));
            }
            for (word, tag) in sentence {
                if word.is_empty() || tag.is_empty() {
                    return Err(Error::invalid(
                        "tagged corpus contains an empty word or tag",
                    ));
                }
                if seen.insert(tag.clone(), ()).is_none() {
                    tagset.push(tag.clone());
                }
            }
        }
        Ok(TaggedCorpus { sentences, tagset })
    }

    pub fn sentences(&self) -> &[Vec<(String, String)>] {
        &self.sentences
    }

    /// Distinct tags in order of first occurrence.
    pub fn tagset(&self) -> &[String] {
        &self.tagset
    }

    pub fn token_count(&self) -> u64 {
        self.sentences.iter().map(|s| s.len() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// The word side only, e.g. for assigning clusters to a gold corpus.
    pub fn word_sentences(&self) -> Vec<Vec<String>> {
        self.sentences
            .iter()
            .map(|s| s.iter().map(|(w, _)| w.clone()).collect())
            .collect()
    }
}

/// Extract tag sequences (one per sentence), the LM training view of a
/// tagged corpus.
pub fn extract_tag_sequences(corpus: &TaggedCorpus) -> Vec<Vec<String>> {
    corpus
        .sentences()
        .iter()
        .map(|s| s.iter().map(|(_, t)| t.clone()).collect())
        .collect()
}

/// Parse the CoNLL-U subset: 10 tab-separated columns per token row, `#`
/// comment lines, blank line between sentences. FORM is column 2, UPOS
/// column 4. Multiword-token rows (ID with `-`) and empty-node rows (ID
/// with `.`) are skipped.
pub fn parse_conllu(text: &str) -> Result<TaggedCorpus> {
    let mut sentences = Vec::new();
    let mut current: Vec<(String, String)> = Vec::new();
    for (lineno, line) in tsv::lines(text) {
        tsv::reject_cr(lineno, line)?;
        if line.is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::parse(
                lineno,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            continue;
        }
        let (form, upos) = (cols[1], cols[3]);
        if form.is_empty() {
            return Err(Error::parse(lineno, "empty FORM column"));
        }
        if upos.is_empty() {
            return Err(Error::parse(lineno, "empty UPOS column"));
        }
        current.push((form.to_owned(), upos.to_owned()));
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    if sentences.is_empty() {
        return Err(Error::EmptyInput {
            context: "<input>".to_owned(),
        });
    }
    TaggedCorpus::from_sentences(sentences)
}

pub fn load_conllu(path: impl AsRef<Path>) -> Result<TaggedCorpus> {
    let path = path.as_ref();
    parse_conllu(&read_to_string(path)?).map_err(|e| e.with_path(path))
}

/// Parse tagged-output TSV: `word<TAB>tag` rows, blank line between
/// sentences, `#` header lines skipped.
pub fn parse_tagged_tsv(text: &str) -> Result<TaggedCorpus> {
    let mut sentences = Vec::new();
    let mut current: Vec<(String, String)> = Vec::new();
    for (lineno, line) in tsv::lines(text) {
        tsv::reject_cr(lineno, line)?;
        if line.is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols = tsv::fields(lineno, line, 2)?;
        if cols[0].is_empty() || cols[1].is_empty() {
            return Err(Error::parse(lineno, "empty word or tag field"));
        }
        current.push((cols[0].to_owned(), cols[1].to_owned()));
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    // Zero sentences is legal here: tagging an empty corpus produces an
    // empty file, which must read back as an empty corpus.
    TaggedCorpus::from_sentences(sentences)
}

pub fn load_tagged_tsv(path: impl AsRef<Path>) -> Result<TaggedCorpus> {
    let path = path.as_ref();
    parse_tagged_tsv(&read_to_string(path)?).map_err(|e| e.with_path(path))
}

/// Serialize a tagged corpus as `word<TAB>tag` rows with a blank line after
/// each sentence. The seed header records the run that produced the file.
pub fn tagged_to_tsv(corpus: &TaggedCorpus, seed: u64) -> String {
    let mut out = format!("#seed={seed}\n");
    for (i, sentence) in corpus.sentences().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for (word, tag) in sentence {
            out.push_str(word);
            out.push('\t');
            out.push_str(tag);
            out.push('\n');
        }
    }
    out
}

pub fn write_tagged_tsv(corpus: &TaggedCorpus, path: impl AsRef<Path>, seed: u64) -> Result<()> {
    write_string(path.as_ref(), &tagged_to_tsv(corpus, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plaintext_single_line() {
        let c = parse_plaintext("the dog barks\n", false).unwrap();
        assert_eq!(
            c.sentences(),
            &[vec!["the".to_owned(), "dog".into(), "barks".into()]]
        );
        assert_eq!(c.token_count(), 3);
    }

    #[test]
    fn plaintext_counts_and_blank_lines() {
        // "a b\n\na b a\n": 5 tokens, a:3 b:2, blank line skipped.
        let c = parse_plaintext("a b\n\na b a\n", false).unwrap();
        assert_eq!(c.sentences().len(), 2);
        assert_eq!(c.token_count(), 5);
        assert_eq!(c.vocab().get("a"), Some(&3));
        assert_eq!(c.vocab().get("b"), Some(&2));
        assert_eq!(c.vocab().values().sum::<u64>(), c.token_count());
    }

    #[test]
    fn plaintext_missing_final_newline_ok() {
        let c = parse_plaintext("a b", false).unwrap();
        assert_eq!(c.token_count(), 2);
    }

    #[test]
    fn plaintext_empty_is_error() {
        assert!(matches!(
            parse_plaintext("", false),
            Err(Error::EmptyInput { .. })
        ));
        assert!(matches!(
            parse_plaintext("\n\n", false),
            Err(Error::EmptyInput { .. })
        ));
    }

    #[test]
    fn plaintext_rejects_double_space_with_line_number() {
        let err = parse_plaintext("a b\nc  d\n", false).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn plaintext_rejects_crlf() {
        assert!(parse_plaintext("a b\r\n", false).is_err());
    }

    #[test]
    fn plaintext_lowercase_flag() {
        let c = parse_plaintext("The DOG\n", true).unwrap();
        assert_eq!(c.sentences()[0], vec!["the".to_owned(), "dog".into()]);
        let c = parse_plaintext("The DOG\n", false).unwrap();
        assert_eq!(c.sentences()[0], vec!["The".to_owned(), "DOG".into()]);
    }

    #[test]
    fn plaintext_large_token_count_matches_direct_recount() {
        // 10_000 generated lines; oracle is an independent whitespace count
        // over the raw string.
        let mut text = String::new();
        for i in 0..10_000u32 {
            let len = 1 + (i % 7) as usize;
            let words: Vec<String> = (0..len)
                .map(|j| format!("w{}", (i + j as u32) % 57))
                .collect();
            text.push_str(&words.join(" "));
            text.push('\n');
        }
        let oracle: u64 = text.lines().map(|l| l.split(' ').count() as u64).sum();
        let c = parse_plaintext(&text, false).unwrap();
        assert_eq!(c.token_count(), oracle);
        assert_eq!(c.vocab().values().sum::<u64>(), oracle);
    }

    #[test]
    fn plaintext_round_trip() {
        let text = "a b c\nb a\nxyz q q\n";
        let c = parse_plaintext(text, false).unwrap();
        assert_eq!(c.to_plaintext(), text);
        assert_eq!(parse_plaintext(&c.to_plaintext(), false).unwrap(), c);
    }

    const CONLLU: &str = "\
# sent_id = 1
1\tThe\tthe\tDET\tDT\t_\t2\tdet\t_\t_
2-3\tdog's\t_\t_\t_\t_\t_\t_\t_\t_
2\tdog\tdog\tNOUN\tNN\t_\t3\tnsubj\t_\t_
3\tbarks\tbark\tVERB\tVBZ\t_\t0\troot\t_\t_

1\tIt\tit\tPRON\tPRP\t_\t2\tnsubj\t_\t_
2\truns\trun\tVERB\tVBZ\t_\t0\troot\t_\t_
2.1\telided\t_\tVERB\t_\t_\t_\t_\t_\t_
";

    #[test]
    fn conllu_skips_ranges_empty_nodes_and_comments() {
        let c = parse_conllu(CONLLU).unwrap();
        assert_eq!(c.sentences().len(), 2);
        // 3 plain rows in sentence 1 (the 2-3 range is skipped) + 2 in
        // sentence 2 (the 2.1 empty node is skipped).
        assert_eq!(c.token_count(), 5);
        assert_eq!(
            c.sentences()[0],
            vec![
                ("The".to_owned(), "DET".to_owned()),
                ("dog".to_owned(), "NOUN".to_owned()),
                ("barks".to_owned(), "VERB".to_owned()),
            ]
        );
        // First-occurrence tagset order.
        assert_eq!(c.tagset(), &["DET", "NOUN", "VERB", "PRON"]);
    }

    #[test]
    fn conllu_token_count_equals_plain_row_count() {
        let plain_rows = CONLLU
            .lines()
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter(|l| {
                let id = l.split('\t').next().unwrap();
                !id.contains('-') && !id.contains('.')
            })
            .count() as u64;
        assert_eq!(parse_conllu(CONLLU).unwrap().token_count(), plain_rows);
    }

    #[test]
    fn conllu_short_row_reports_line_number() {
        let text = "1\tThe\tthe\tDET\tDT\t_\t2\tdet\t_\t_\n2\tdog\tNOUN\n";
        match parse_conllu(text).unwrap_err() {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("10"), "{msg}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn conllu_empty_is_error() {
        assert!(matches!(
            parse_conllu("# only comments\n"),
            Err(Error::EmptyInput { .. })
        ));
    }

    #[test]
    fn conllu_no_trailing_blank_line() {
        let text = "1\ta\t_\tX\t_\t_\t_\t_\t_\t_";
        assert_eq!(parse_conllu(text).unwrap().token_count(), 1);
    }

    #[test]
    fn tag_sequences_project_tags() {
        let c = parse_conllu(CONLLU).unwrap();
        assert_eq!(
            extract_tag_sequences(&c),
            vec![
                vec!["DET".to_owned(), "NOUN".into(), "VERB".into()],
                vec!["PRON".to_owned(), "VERB".into()],
            ]
        );
    }

    #[test]
    fn tagged_tsv_round_trip_with_headers() {
        let c = TaggedCorpus::from_sentences(vec![
            vec![
                ("the".to_owned(), "DET".to_owned()),
                ("dog".to_owned(), "NOUN".to_owned()),
            ],
            vec![("runs".to_owned(), "VERB".to_owned())],
        ])
        .unwrap();
        let tsv = tagged_to_tsv(&c, 42);
        assert!(tsv.starts_with("#seed=42\n"));
        assert_eq!(parse_tagged_tsv(&tsv).unwrap(), c);
    }

    #[test]
    fn tagged_tsv_empty_round_trip() {
        let empty = TaggedCorpus::default();
        assert_eq!(parse_tagged_tsv(&tagged_to_tsv(&empty, 7)).unwrap(), empty);
    }

    #[test]
    fn tagged_tsv_bad_column_count() {
        assert!(parse_tagged_tsv("word\tTAG\textra\n").is_err());
    }
}
