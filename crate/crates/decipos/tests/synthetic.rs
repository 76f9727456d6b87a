//! End-to-end recovery tests on synthetic data with a known ground truth.
//!
//! Data is generated from a hand-built HMM whose transition structure is
//! deliberately asymmetric: no two tags behave alike, so the tag identities
//! are pinned by the dynamics alone and decipherment has a unique good
//! optimum to find.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use decipos::brown::Clustering;
use decipos::cipher::{train_with_restarts, viterbi_decode};
use decipos::corpus::{extract_tag_sequences, TaggedCorpus, TokenizedCorpus};
use decipos::eval::tag_accuracy;
use decipos::grounder::{self, TrainParams};
use decipos::poslm::train_pos_lm;

const TAGS: [&str; 3] = ["T0", "T1", "T2"];

// Start and transition distributions with no symmetry between tags: T0
// chains into T1, T1 into T2, T2 back to T0, each with its own strength.
const START: [f64; 3] = [0.70, 0.20, 0.10];
const TRANS: [[f64; 3]; 3] = [[0.10, 0.75, 0.15], [0.20, 0.05, 0.75], [0.65, 0.25, 0.10]];

/// Each tag owns two clusters: a dominant one (p = 0.85) and a rarer one.
const EMIT: [f64; 2] = [0.85, 0.15];

fn sample(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let x: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if x < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Tag sequences plus aligned cluster sequences, about `target_tokens`
/// tokens in total.
fn generate(seed: u64, target_tokens: usize) -> (Vec<Vec<String>>, Vec<Vec<usize>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tag_seqs = Vec::new();
    let mut cluster_seqs = Vec::new();
    let mut tokens = 0;
    while tokens < target_tokens {
        let len = 6 + rng.random_range(0..8);
        let mut tags = Vec::with_capacity(len);
        let mut clusters = Vec::with_capacity(len);
        let mut state = sample(&mut rng, &START);
        for _ in 0..len {
            tags.push(TAGS[state].to_string());
            clusters.push(2 * state + sample(&mut rng, &EMIT));
            state = sample(&mut rng, &TRANS[state]);
        }
        tokens += len;
        tag_seqs.push(tags);
        cluster_seqs.push(clusters);
    }
    (tag_seqs, cluster_seqs)
}

#[test]
fn decipherment_recovers_synthetic_tags() {
    let (tag_seqs, cluster_seqs) = generate(77, 2000);
    let lm = train_pos_lm(&tag_seqs, 2, 0.1).unwrap();
    let clusters: Vec<usize> = (0..6).collect();
    let result = train_with_restarts(&cluster_seqs, &lm, &clusters, 6, 200, 1e-8, 42).unwrap();
    let decoded = viterbi_decode(&cluster_seqs, &lm, &result.table).unwrap();

    let total: usize = tag_seqs.iter().map(Vec::len).sum();
    let correct: usize = decoded
        .iter()
        .zip(&tag_seqs)
        .map(|(d, g)| d.iter().zip(g).filter(|(a, b)| a == b).count())
        .sum();
    let accuracy = correct as f64 / total as f64;
    assert!(accuracy >= 0.90, "synthetic tagging accuracy {accuracy:.3}");
}

/// The same recovery, but through the grounder: child words carry their
/// cluster in the name, the parent treebank carries the tag statistics,
/// and the whole bundle round-trips through disk before tagging.
#[test]
fn grounder_pipeline_recovers_synthetic_tags() {
    let (tag_seqs, cluster_seqs) = generate(101, 2000);

    // Child text: word "c<id>x<i>" belongs to cluster <id>; a few distinct
    // word forms per cluster so the vocabulary is not trivial.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sentences: Vec<Vec<String>> = cluster_seqs
        .iter()
        .map(|seq| {
            seq.iter()
                .map(|c| format!("c{c}x{}", rng.random_range(0..4)))
                .collect()
        })
        .collect();
    let corpus = TokenizedCorpus::from_sentences(sentences).unwrap();
    let assignment: BTreeMap<String, usize> = corpus
        .vocab()
        .keys()
        .map(|w| {
            let id: usize = w[1..w.find('x').unwrap()].parse().unwrap();
            (w.clone(), id)
        })
        .collect();
    let paths = (0..6).map(|i| format!("{i:03b}")).collect();
    let clustering = Clustering::new(assignment, corpus.vocab().clone(), paths, false).unwrap();

    // Parent treebank with the true tag sequences over dummy word forms.
    let parent = TaggedCorpus::from_sentences(
        tag_seqs
            .iter()
            .map(|seq| {
                seq.iter()
                    .enumerate()
                    .map(|(i, t)| (format!("p{i}"), t.clone()))
                    .collect()
            })
            .collect(),
    )
    .unwrap();
    let lm = train_pos_lm(&extract_tag_sequences(&parent), 2, 0.1).unwrap();

    let params = TrainParams {
        restarts: 6,
        max_iterations: 200,
        tolerance: 1e-8,
        seed: 42,
    };
    let tagger =
        grounder::build_single_parent("synthetic", &corpus, &lm, &clustering, &params).unwrap();

    let dir = tempfile::tempdir().unwrap();
    grounder::save_bundle(&tagger, dir.path(), 42).unwrap();
    let loaded = grounder::load_bundle(dir.path()).unwrap();

    let tagged = grounder::tag(&loaded, &corpus).unwrap();
    let gold = TaggedCorpus::from_sentences(
        corpus
            .sentences()
            .iter()
            .zip(&tag_seqs)
            .map(|(ws, ts)| ws.iter().cloned().zip(ts.iter().cloned()).collect())
            .collect(),
    )
    .unwrap();
    let report = tag_accuracy(&tagged, &gold, true).unwrap();
    assert!(
        report.accuracy >= 0.90,
        "pipeline accuracy {:.3}",
        report.accuracy
    );

    // Averaging the same parent with itself must not change the answer.
    let avg = grounder::build_cipher_avg(
        &corpus,
        &clustering,
        &[
            ("p1".to_string(), parent.clone()),
            ("p2".to_string(), parent.clone()),
        ],
        0.1,
        &params,
    )
    .unwrap();
    let tagged_avg = grounder::tag(&avg, &corpus).unwrap();
    let report_avg = tag_accuracy(&tagged_avg, &gold, true).unwrap();
    assert!(
        report_avg.accuracy >= 0.90,
        "averaged accuracy {:.3}",
        report_avg.accuracy
    );
}
