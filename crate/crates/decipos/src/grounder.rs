//! Grounding cluster sequences in actual tags.
//!
//! A clustering of the child language says which words behave alike but
//! not what they are. This module attaches tag identities by deciphering
//! the child's cluster sequences against tag statistics from one or more
//! annotated parent languages:
//!
//! - single-parent: decipher against one parent's tag bigram model;
//! - averaged: decipher against each parent separately with a shared
//!   restart seed, average the emission tables entrywise, and decode with
//!   a bigram model trained on all parents' tag sequences together.
//!
//! The result is a [`GroundedTagger`] that can tag raw text and be saved
//! as a four-file bundle (clusters, emission table, language model,
//! provenance).

use std::collections::BTreeSet;
use std::path::Path;

use crate::brown::{assign_clusters, Clustering};
use crate::cipher::{average_probs_sorted, train_with_restarts, viterbi_decode, CipherTable};
use crate::corpus::{extract_tag_sequences, TaggedCorpus, TokenizedCorpus};
use crate::error::{read_to_string, write_string, Error, Result};
use crate::poslm::{train_pos_lm_with_tagset, PosLanguageModel};
use crate::tsv;

/// Knobs for the EM decipherment runs.
#[derive(Debug, Clone, Copy)]
pub struct TrainParams {
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            restarts: 70,
            max_iterations: 500,
            tolerance: 1e-6,
            seed: 42,
        }
    }
}

/// Provenance for one parent's decipherment run: which restart won and the
/// training perplexity it reached.
#[derive(Debug, Clone, PartialEq)]
pub struct ParentRun {
    pub name: String,
    pub restart_seed: u64,
    pub perplexity: f64,
}

/// Everything needed to tag child-language text: the clustering, the
/// tag-to-cluster emission table, and the tag bigram model used for
/// decoding, plus a record of how the table was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundedTagger {
    pub clustering: Clustering,
    pub table: CipherTable,
    pub lm: PosLanguageModel,
    pub provenance: Vec<ParentRun>,
}

/// Ground a clustering against a single parent's tag bigram model.
pub fn build_single_parent(
    name: &str,
    corpus: &TokenizedCorpus,
    lm: &PosLanguageModel,
    clustering: &Clustering,
    params: &TrainParams,
) -> Result<GroundedTagger> {
    let seqs = assign_clusters(corpus, clustering);
    let clusters = clustering.cluster_ids();
    let result = train_with_restarts(
        &seqs,
        lm,
        &clusters,
        params.restarts,
        params.max_iterations,
        params.tolerance,
        params.seed,
    )?;
    Ok(GroundedTagger {
        clustering: clustering.clone(),
        table: result.table,
        lm: lm.clone(),
        provenance: vec![ParentRun {
            name: name.to_owned(),
            restart_seed: result.restart_seed,
            perplexity: result.perplexity,
        }],
    })
}

/// Entrywise mean of emission tables. All tables must agree on tags and
/// clusters, in order. Each cell's addends are summed in value order, so
/// the result does not depend on the order the tables are given in.
pub fn average_tables(tables: &[CipherTable]) -> Result<CipherTable> {
    let first = tables
        .first()
        .ok_or_else(|| Error::invalid("cannot average an empty list of tables"))?;
    for t in &tables[1..] {
        if t.tags() != first.tags() {
            return Err(Error::invalid(
                "tables to average disagree on their tagsets",
            ));
        }
        if t.clusters() != first.clusters() {
            return Err(Error::invalid(
                "tables to average disagree on their cluster sets",
            ));
        }
    }
    let probs = average_probs_sorted(&tables.iter().map(|t| t.probs()).collect::<Vec<_>>());
    CipherTable::new(first.tags().to_vec(), first.clusters().to_vec(), probs)
}

/// Ground a clustering against several parents: one decipherment per
/// parent (all from the same master seed), entrywise-averaged emissions,
/// and a decoding model trained on the concatenated parent tag sequences.
/// All parents must use the same tag inventory; the canonical tag order is
/// first occurrence across the parents as given.
pub fn build_cipher_avg(
    corpus: &TokenizedCorpus,
    clustering: &Clustering,
    parents: &[(String, TaggedCorpus)],
    alpha: f64,
    params: &TrainParams,
) -> Result<GroundedTagger> {
    if parents.len() < 2 {
        return Err(Error::invalid(format!(
            "averaged grounding needs at least 2 parents, got {}",
            parents.len()
        )));
    }
    let mut canonical: Vec<String> = Vec::new();
    for (_, parent) in parents {
        for tag in parent.tagset() {
            if !canonical.contains(tag) {
                canonical.push(tag.clone());
            }
        }
    }
    let canonical_set: BTreeSet<&String> = canonical.iter().collect();
    for (name, parent) in parents {
        let set: BTreeSet<&String> = parent.tagset().iter().collect();
        if set != canonical_set {
            let missing: Vec<&str> = canonical_set.difference(&set).map(|t| t.as_str()).collect();
            return Err(Error::invalid(format!(
                "parent {name:?} does not use the shared tag inventory; missing: {}",
                missing.join(", ")
            )));
        }
    }

    let seqs = assign_clusters(corpus, clustering);
    let clusters = clustering.cluster_ids();
    let mut tables = Vec::with_capacity(parents.len());
    let mut provenance = Vec::with_capacity(parents.len());
    for (name, parent) in parents {
        let parent_lm =
            train_pos_lm_with_tagset(&extract_tag_sequences(parent), &canonical, 2, alpha)?;
        let result = train_with_restarts(
            &seqs,
            &parent_lm,
            &clusters,
            params.restarts,
            params.max_iterations,
            params.tolerance,
            params.seed,
        )?;
        tables.push(result.table);
        provenance.push(ParentRun {
            name: name.clone(),
            restart_seed: result.restart_seed,
            perplexity: result.perplexity,
        });
    }
    let table = average_tables(&tables)?;
    let all_seqs: Vec<Vec<String>> = parents
        .iter()
        .flat_map(|(_, p)| extract_tag_sequences(p))
        .collect();
    let lm = train_pos_lm_with_tagset(&all_seqs, &canonical, 2, alpha)?;
    Ok(GroundedTagger {
        clustering: clustering.clone(),
        table,
        lm,
        provenance,
    })
}

/// Tag a corpus: map words to clusters (unknown words go to the reserved
/// cluster) and Viterbi-decode tag sequences. The corpus must be
/// normalized the same way the clustering was trained; check
/// [`Clustering::lowercase`] when parsing the text.
pub fn tag(tagger: &GroundedTagger, corpus: &TokenizedCorpus) -> Result<TaggedCorpus> {
    let seqs = assign_clusters(corpus, &tagger.clustering);
    let tags = viterbi_decode(&seqs, &tagger.lm, &tagger.table)?;
    let sentences: Vec<Vec<(String, String)>> = corpus
        .sentences()
        .iter()
        .zip(tags)
        .map(|(words, ts)| words.iter().cloned().zip(ts).collect())
        .collect();
    TaggedCorpus::from_sentences(sentences)
}

fn provenance_to_tsv(runs: &[ParentRun], seed: u64) -> String {
    let mut out = format!("#seed={seed}\n#columns=parent,restart_seed,perplexity\n");
    for run in runs {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            run.name,
            run.restart_seed,
            tsv::fmt_f64_exact(run.perplexity)
        ));
    }
    out
}

fn parse_provenance_tsv(text: &str) -> Result<Vec<ParentRun>> {
    let mut runs = Vec::new();
    for (lineno, line) in tsv::lines(text) {
        tsv::reject_cr(lineno, line)?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols = tsv::fields(lineno, line, 3)?;
        if cols[0].is_empty() {
            return Err(Error::parse(lineno, "empty parent name"));
        }
        runs.push(ParentRun {
            name: cols[0].to_owned(),
            restart_seed: tsv::parse_num(lineno, "restart seed", cols[1])?,
            perplexity: tsv::parse_num(lineno, "perplexity", cols[2])?,
        });
    }
    if runs.is_empty() {
        return Err(Error::EmptyInput {
            context: "provenance file".to_owned(),
        });
    }
    Ok(runs)
}

pub const BUNDLE_CLUSTERS: &str = "clusters.tsv";
pub const BUNDLE_TABLE: &str = "table.tsv";
pub const BUNDLE_LM: &str = "lm.tsv";
pub const BUNDLE_PROVENANCE: &str = "provenance.tsv";

/// Write the four bundle files into `dir` (created if needed).
pub fn save_bundle(tagger: &GroundedTagger, dir: impl AsRef<Path>, seed: u64) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|source| Error::Write {
        path: dir.display().to_string(),
        source,
    })?;
    crate::brown::write_clusters(&tagger.clustering, dir.join(BUNDLE_CLUSTERS), seed)?;
    crate::cipher::write_table(&tagger.table, dir.join(BUNDLE_TABLE), seed)?;
    tagger.lm.write_tsv(dir.join(BUNDLE_LM), seed)?;
    write_string(
        &dir.join(BUNDLE_PROVENANCE),
        &provenance_to_tsv(&tagger.provenance, seed),
    )
}

/// Load a bundle and make sure its parts fit together: the table must
/// cover the language model's tags exactly and every cluster ID the
/// clustering can produce.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<GroundedTagger> {
    let dir = dir.as_ref();
    let clustering = crate::brown::load_clusters_tsv(dir.join(BUNDLE_CLUSTERS))?;
    let table = crate::cipher::load_table_tsv(dir.join(BUNDLE_TABLE))?;
    let lm = crate::poslm::load_lm_tsv(dir.join(BUNDLE_LM))?;
    let provenance = {
        let path = dir.join(BUNDLE_PROVENANCE);
        parse_provenance_tsv(&read_to_string(&path)?).map_err(|e| e.with_path(&path))?
    };
    if table.tags() != lm.tagset() {
        return Err(Error::invalid(format!(
            "bundle mismatch: table tags {:?} vs language model tags {:?}",
            table.tags(),
            lm.tagset()
        )));
    }
    for id in clustering.cluster_ids() {
        if table.col_of(id).is_none() {
            return Err(Error::invalid(format!(
                "bundle mismatch: cluster {id} has no column in the emission table"
            )));
        }
    }
    Ok(GroundedTagger {
        clustering,
        table,
        lm,
        provenance,
    })
}
