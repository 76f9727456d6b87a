//! Decipherment of cluster-ID sequences into tags.
//!
//! The model is an HMM whose hidden states are tags and whose observations
//! are word-cluster IDs. Transition, start, and end probabilities come from
//! a bigram tag language model and stay frozen; only the tag-to-cluster
//! emission table is learned, by expectation-maximization over unlabeled
//! cluster sequences. Because nothing ties a particular tag to a particular
//! cluster a priori, training restarts from many random emission tables and
//! keeps the run with the best training perplexity.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::brown::ClusterId;
use crate::error::{read_to_string, write_string, Error, Result};
use crate::poslm::{self, PosLanguageModel};
use crate::tsv;

/// Emission probabilities are floored at this value after every update so
/// no cluster becomes permanently unreachable for a tag.
const EMISSION_FLOOR: f64 = 1e-10;

/// Sequences per parallel work unit in the E-step. Chunk results are
/// combined in chunk order, so the reduction is identical for any thread
/// count; the constant only balances scheduling overhead.
const E_STEP_CHUNK: usize = 64;

/// A tag-to-cluster emission table. Rows are tags, columns are cluster IDs,
/// and every row is a probability distribution over the columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CipherTable {
    tags: Vec<String>,
    clusters: Vec<ClusterId>,
    cluster_col: HashMap<ClusterId, usize>,
    probs: Vec<f64>,
}

impl CipherTable {
    /// Build a table from row-major probabilities, checking shape, tag and
    /// cluster uniqueness, and that each row sums to 1 (within 1e-6; the
    /// stored values are kept as given).
    pub fn new(tags: Vec<String>, clusters: Vec<ClusterId>, probs: Vec<f64>) -> Result<Self> {
        if tags.is_empty() {
            return Err(Error::invalid("emission table needs at least one tag"));
        }
        if clusters.is_empty() {
            return Err(Error::invalid("emission table needs at least one cluster"));
        }
        for tag in &tags {
            poslm::validate_tag(tag)?;
        }
        let mut seen_tags: Vec<&String> = tags.iter().collect();
        seen_tags.sort();
        if seen_tags.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("emission table has duplicate tags"));
        }
        let mut cluster_col = HashMap::new();
        for (i, &c) in clusters.iter().enumerate() {
            if cluster_col.insert(c, i).is_some() {
                return Err(Error::invalid(format!(
                    "emission table lists cluster {c} twice"
                )));
            }
        }
        if probs.len() != tags.len() * clusters.len() {
            return Err(Error::invalid(format!(
                "emission table has {} values, expected {} tags x {} clusters",
                probs.len(),
                tags.len(),
                clusters.len()
            )));
        }
        for (t, row) in probs.chunks(clusters.len()).enumerate() {
            let mut sum = 0.0;
            for &p in row {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::invalid(format!(
                        "emission probability {p} for tag {:?} is not a finite non-negative value",
                        tags[t]
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(format!(
                    "emission row for tag {:?} sums to {sum}, expected 1",
                    tags[t]
                )));
            }
        }
        Ok(CipherTable {
            tags,
            clusters,
            cluster_col,
            probs,
        })
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn clusters(&self) -> &[ClusterId] {
        &self.clusters
    }

    /// Row-major emission probabilities, tags x clusters.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn col_of(&self, cluster: ClusterId) -> Option<usize> {
        self.cluster_col.get(&cluster).copied()
    }

    pub fn tag_index(&self, tag: &str) -> Option<usize> {
        self.tags.iter().position(|t| t == tag)
    }

    /// P(cluster | tag) by row/column index.
    pub fn prob(&self, tag_idx: usize, col: usize) -> f64 {
        self.probs[tag_idx * self.clusters.len() + col]
    }

    fn row(&self, tag_idx: usize) -> &[f64] {
        let n = self.clusters.len();
        &self.probs[tag_idx * n..(tag_idx + 1) * n]
    }
}

/// Random emission table: each row is drawn from a flat Dirichlet (uniform
/// over the simplex), via normalized unit exponentials. Reproducible from
/// the seed.
pub fn init_table(tags: &[String], clusters: &[ClusterId], seed: u64) -> Result<CipherTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nc = clusters.len();
    let mut probs = Vec::with_capacity(tags.len() * nc);
    for _ in 0..tags.len() {
        let row: Vec<f64> = (0..nc).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            probs.extend(row.iter().map(|e| e / sum));
        } else {
            probs.extend(std::iter::repeat_n(1.0 / nc as f64, nc));
        }
    }
    CipherTable::new(tags.to_vec(), clusters.to_vec(), probs)
}

/// Outcome of one EM run: the learned table plus the statistics used to
/// compare restarts. `perplexity` is exp(-LL / token count), counting only
/// cluster tokens; `ll_history` holds the likelihood before each update and
/// ends with the final model's likelihood.
#[derive(Debug, Clone)]
pub struct DeciphermentResult {
    pub table: CipherTable,
    pub log_likelihood: f64,
    pub perplexity: f64,
    pub iterations_run: usize,
    pub restart_seed: u64,
    pub ll_history: Vec<f64>,
}

struct Hmm {
    init: Vec<f64>,
    trans: Vec<f64>,
    eos: Vec<f64>,
    nt: usize,
}

impl Hmm {
    fn from_lm(lm: &PosLanguageModel) -> Result<Self> {
        let (init, trans, eos) = lm.bigram_matrices()?;
        let nt = lm.tagset().len();
        Ok(Hmm {
            init,
            trans,
            eos,
            nt,
        })
    }
}

/// Map sequences to table column indices, rejecting clusters the table does
/// not cover and empty sequences.
fn map_columns(sequences: &[Vec<ClusterId>], table: &CipherTable) -> Result<Vec<Vec<usize>>> {
    sequences
        .iter()
        .map(|seq| {
            if seq.is_empty() {
                return Err(Error::invalid(
                    "decipherment corpus contains an empty sequence",
                ));
            }
            seq.iter()
                .map(|&c| {
                    table.col_of(c).ok_or_else(|| {
                        Error::invalid(format!("cluster {c} is not covered by the emission table"))
                    })
                })
                .collect()
        })
        .collect()
}

fn check_setup(
    sequences: &[Vec<ClusterId>],
    lm: &PosLanguageModel,
    table: &CipherTable,
) -> Result<()> {
    if sequences.is_empty() {
        return Err(Error::EmptyInput {
            context: "decipherment corpus".to_owned(),
        });
    }
    if lm.tagset() != table.tags() {
        return Err(Error::invalid(format!(
            "emission table tags {:?} do not match language model tags {:?}",
            table.tags(),
            lm.tagset()
        )));
    }
    Ok(())
}

/// Scaled forward pass only; returns the sequence log-likelihood, which is
/// -inf when the sequence has zero probability.
fn forward_ll(cols: &[usize], hmm: &Hmm, table: &CipherTable) -> f64 {
    let nt = hmm.nt;
    let mut alpha = vec![0.0; nt];
    let mut ll = 0.0;
    for (k, &o) in cols.iter().enumerate() {
        let mut next = vec![0.0; nt];
        let mut scale = 0.0;
        for (t, cell) in next.iter_mut().enumerate() {
            let input = if k == 0 {
                hmm.init[t]
            } else {
                (0..nt).map(|s| alpha[s] * hmm.trans[s * nt + t]).sum()
            };
            *cell = input * table.prob(t, o);
            scale += *cell;
        }
        if scale == 0.0 {
            return f64::NEG_INFINITY;
        }
        for v in &mut next {
            *v /= scale;
        }
        ll += scale.ln();
        alpha = next;
    }
    let end: f64 = (0..nt).map(|t| alpha[t] * hmm.eos[t]).sum();
    if end == 0.0 {
        return f64::NEG_INFINITY;
    }
    ll + end.ln()
}

/// Scaled forward-backward for one sequence: returns the log-likelihood and
/// adds the expected tag-cluster counts into `counts` (row-major, tags x
/// clusters). Zero-probability sequences are an error here because EM
/// cannot proceed with them.
fn forward_backward(
    cols: &[usize],
    hmm: &Hmm,
    table: &CipherTable,
    counts: &mut [f64],
) -> Result<f64> {
    let nt = hmm.nt;
    let nc = table.clusters().len();
    let len = cols.len();
    let mut alpha = vec![0.0; len * nt];
    let mut scales = vec![0.0; len + 1];
    for (k, &o) in cols.iter().enumerate() {
        let mut scale = 0.0;
        for t in 0..nt {
            let input = if k == 0 {
                hmm.init[t]
            } else {
                (0..nt)
                    .map(|s| alpha[(k - 1) * nt + s] * hmm.trans[s * nt + t])
                    .sum()
            };
            let v = input * table.prob(t, o);
            alpha[k * nt + t] = v;
            scale += v;
        }
        if scale == 0.0 {
            return Err(Error::invalid(
                "a sequence has zero probability under the model; cannot run EM",
            ));
        }
        for t in 0..nt {
            alpha[k * nt + t] /= scale;
        }
        scales[k] = scale;
    }
    let end: f64 = (0..nt)
        .map(|t| alpha[(len - 1) * nt + t] * hmm.eos[t])
        .sum();
    if end == 0.0 {
        return Err(Error::invalid(
            "a sequence has zero probability under the model; cannot run EM",
        ));
    }
    scales[len] = end;

    // Backward pass with the same scale factors, so alpha * beta is exactly
    // the posterior state probability at each position.
    let mut beta: Vec<f64> = hmm.eos.iter().map(|e| e / end).collect();
    for k in (0..len).rev() {
        for t in 0..nt {
            let gamma = alpha[k * nt + t] * beta[t];
            counts[t * nc + cols[k]] += gamma;
        }
        if k > 0 {
            let o = cols[k];
            let mut prev = vec![0.0; nt];
            for (t, cell) in prev.iter_mut().enumerate() {
                *cell = (0..nt)
                    .map(|s| hmm.trans[t * nt + s] * table.prob(s, o) * beta[s])
                    .sum::<f64>()
                    / scales[k];
            }
            beta = prev;
        }
    }
    Ok(scales.iter().map(|s| s.ln()).sum())
}

/// One E-step over the whole corpus: total log-likelihood and expected
/// emission counts. Parallel over fixed-size sequence chunks, combined in
/// chunk order so results do not depend on the thread count.
fn e_step(seq_cols: &[Vec<usize>], hmm: &Hmm, table: &CipherTable) -> Result<(f64, Vec<f64>)> {
    let size = table.tags().len() * table.clusters().len();
    let chunks: Vec<Result<(f64, Vec<f64>)>> = seq_cols
        .par_chunks(E_STEP_CHUNK)
        .map(|chunk| {
            let mut ll = 0.0;
            let mut counts = vec![0.0; size];
            for cols in chunk {
                ll += forward_backward(cols, hmm, table, &mut counts)?;
            }
            Ok((ll, counts))
        })
        .collect();
    let mut total_ll = 0.0;
    let mut total = vec![0.0; size];
    for chunk in chunks {
        let (ll, counts) = chunk?;
        total_ll += ll;
        for (acc, c) in total.iter_mut().zip(&counts) {
            *acc += c;
        }
    }
    Ok((total_ll, total))
}

/// M-step: normalize expected counts per tag, floor, renormalize. A tag
/// with no expected mass anywhere keeps its previous row.
fn m_step(counts: &[f64], table: &CipherTable) -> CipherTable {
    let nc = table.clusters().len();
    let mut probs = Vec::with_capacity(counts.len());
    for (t, row) in counts.chunks(nc).enumerate() {
        let sum: f64 = row.iter().sum();
        let mut new_row: Vec<f64> = if sum > 0.0 {
            row.iter().map(|c| (c / sum).max(EMISSION_FLOOR)).collect()
        } else {
            table
                .row(t)
                .iter()
                .map(|&p| p.max(EMISSION_FLOOR))
                .collect()
        };
        let total: f64 = new_row.iter().sum();
        for p in &mut new_row {
            *p /= total;
        }
        probs.extend(new_row);
    }
    CipherTable {
        tags: table.tags.clone(),
        clusters: table.clusters.clone(),
        cluster_col: table.cluster_col.clone(),
        probs,
    }
}

/// Entrywise mean over equally sized probability slices. The addends for
/// each cell are summed in ascending value order, which makes the result
/// independent of the order the slices are given in.
pub(crate) fn average_probs_sorted(tables: &[&[f64]]) -> Vec<f64> {
    let size = tables[0].len();
    let n = tables.len() as f64;
    let mut out = Vec::with_capacity(size);
    let mut addends = vec![0.0; tables.len()];
    for i in 0..size {
        for (a, t) in addends.iter_mut().zip(tables) {
            *a = t[i];
        }
        addends.sort_by(|x, y| x.total_cmp(y));
        out.push(addends.iter().sum::<f64>() / n);
    }
    out
}

/// Run EM from a given starting table. Transitions stay frozen at the
/// language model's values; only emissions are re-estimated. Stops when the
/// relative likelihood gain drops below `tolerance` or after
/// `max_iterations` updates. `restart_seed` is carried through into the
/// result for provenance.
pub fn em_train(
    sequences: &[Vec<ClusterId>],
    lm: &PosLanguageModel,
    start: CipherTable,
    max_iterations: usize,
    tolerance: f64,
    restart_seed: u64,
) -> Result<DeciphermentResult> {
    if max_iterations == 0 {
        return Err(Error::invalid("EM needs at least one iteration"));
    }
    if !tolerance.is_finite() || tolerance < 0.0 {
        return Err(Error::invalid(format!(
            "EM tolerance must be finite and >= 0, got {tolerance}"
        )));
    }
    check_setup(sequences, lm, &start)?;
    let hmm = Hmm::from_lm(lm)?;
    let seq_cols = map_columns(sequences, &start)?;
    let n_tokens: usize = sequences.iter().map(Vec::len).sum();

    let mut table = start;
    let mut ll_history: Vec<f64> = Vec::new();
    let mut iterations_run = 0;
    let mut converged = false;
    for _ in 0..max_iterations {
        let (ll, counts) = e_step(&seq_cols, &hmm, &table)?;
        if let Some(&prev) = ll_history.last() {
            if ll < prev - 1e-9 * prev.abs() {
                return Err(Error::internal(format!(
                    "EM log-likelihood decreased from {prev} to {ll}"
                )));
            }
            if ll - prev < tolerance * prev.abs() {
                // Converged: the table from the previous update stands, and
                // this likelihood is exactly its score.
                ll_history.push(ll);
                converged = true;
                break;
            }
        }
        ll_history.push(ll);
        table = m_step(&counts, &table);
        iterations_run += 1;
    }
    if !converged {
        // Ran out of iterations: score the final table so the reported
        // likelihood always matches the returned emissions.
        let ll: f64 = seq_cols
            .iter()
            .map(|cols| forward_ll(cols, &hmm, &table))
            .sum();
        let prev = *ll_history.last().unwrap();
        if ll < prev - 1e-9 * prev.abs() {
            return Err(Error::internal(format!(
                "EM log-likelihood decreased from {prev} to {ll}"
            )));
        }
        ll_history.push(ll);
    }
    let log_likelihood = *ll_history.last().unwrap();
    Ok(DeciphermentResult {
        table,
        log_likelihood,
        perplexity: (-log_likelihood / n_tokens as f64).exp(),
        iterations_run,
        restart_seed,
        ll_history,
    })
}

/// Run EM from `restarts` random initializations (seeds `master_seed`,
/// `master_seed + 1`, ...) and keep the run with the lowest training
/// perplexity; seed order breaks exact ties, so the choice is reproducible.
pub fn train_with_restarts(
    sequences: &[Vec<ClusterId>],
    lm: &PosLanguageModel,
    clusters: &[ClusterId],
    restarts: usize,
    max_iterations: usize,
    tolerance: f64,
    master_seed: u64,
) -> Result<DeciphermentResult> {
    if restarts == 0 {
        return Err(Error::invalid("need at least one restart"));
    }
    let runs: Vec<Result<DeciphermentResult>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let seed = master_seed.wrapping_add(r as u64);
            let start = init_table(lm.tagset(), clusters, seed)?;
            em_train(sequences, lm, start, max_iterations, tolerance, seed)
        })
        .collect();
    let mut best: Option<DeciphermentResult> = None;
    for run in runs {
        let run = run?;
        let better = match &best {
            None => true,
            Some(b) => match run.perplexity.total_cmp(&b.perplexity) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Equal => run.restart_seed < b.restart_seed,
                std::cmp::Ordering::Greater => false,
            },
        };
        if better {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

/// Log-likelihood and perplexity of sequences under a fixed table, with the
/// per-sequence end event counted in the normalizer: exp(-LL / (tokens +
/// sequences)). Zero-probability sequences yield an infinite perplexity
/// rather than an error.
pub fn corpus_perplexity(
    sequences: &[Vec<ClusterId>],
    lm: &PosLanguageModel,
    table: &CipherTable,
) -> Result<(f64, f64)> {
    check_setup(sequences, lm, table)?;
    let hmm = Hmm::from_lm(lm)?;
    let seq_cols = map_columns(sequences, table)?;
    let ll: f64 = seq_cols
        .iter()
        .map(|cols| forward_ll(cols, &hmm, table))
        .sum();
    let n: usize = sequences.iter().map(|s| s.len() + 1).sum();
    Ok((ll, (-ll / n as f64).exp()))
}

/// Most probable tag sequence for each cluster sequence, including the end
/// probability in the path score. Ties prefer the lower tag index at every
/// step, so decoding is deterministic.
pub fn viterbi_decode(
    sequences: &[Vec<ClusterId>],
    lm: &PosLanguageModel,
    table: &CipherTable,
) -> Result<Vec<Vec<String>>> {
    check_setup(sequences, lm, table)?;
    let hmm = Hmm::from_lm(lm)?;
    let seq_cols = map_columns(sequences, table)?;
    seq_cols
        .iter()
        .map(|cols| viterbi_one(cols, &hmm, table))
        .collect()
}

fn viterbi_one(cols: &[usize], hmm: &Hmm, table: &CipherTable) -> Result<Vec<String>> {
    let nt = hmm.nt;
    let len = cols.len();
    let mut score = vec![f64::NEG_INFINITY; len * nt];
    let mut back = vec![0usize; len * nt];
    for (t, cell) in score[..nt].iter_mut().enumerate() {
        *cell = hmm.init[t].ln() + table.prob(t, cols[0]).ln();
    }
    for k in 1..len {
        for t in 0..nt {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for s in 0..nt {
                let v = score[(k - 1) * nt + s] + hmm.trans[s * nt + t].ln();
                if v > best {
                    best = v;
                    arg = s;
                }
            }
            score[k * nt + t] = best + table.prob(t, cols[k]).ln();
            back[k * nt + t] = arg;
        }
    }
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for t in 0..nt {
        let v = score[(len - 1) * nt + t] + hmm.eos[t].ln();
        if v > best {
            best = v;
            arg = t;
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::invalid(
            "no tag path has nonzero probability for a sequence",
        ));
    }
    let mut path = vec![0usize; len];
    path[len - 1] = arg;
    for k in (1..len).rev() {
        path[k - 1] = back[k * nt + path[k]];
    }
    Ok(path.into_iter().map(|t| table.tags()[t].clone()).collect())
}

/// Serialize a table: tag and cluster headers, then one
/// `tag<TAB>cluster<TAB>probability` row per cell in table order.
/// Probabilities use 17 significant digits, so parsing restores the exact
/// same values.
pub fn table_to_tsv(table: &CipherTable, seed: u64) -> String {
    let mut out = format!(
        "#seed={seed}\n#tags={}\n#clusters={}\n",
        table.tags().join(","),
        table
            .clusters()
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    push_rows(&mut out, table);
    out
}

/// Serialize a decipherment result: like [`table_to_tsv`] plus metadata
/// lines recording how the table was obtained.
pub fn result_to_tsv(result: &DeciphermentResult, seed: u64) -> String {
    let mut out = format!(
        "#seed={seed}\n#tags={}\n#clusters={}\n#log_likelihood={}\n#perplexity={}\n#iterations_run={}\n#restart_seed={}\n",
        result.table.tags().join(","),
        result.table.clusters().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","),
        tsv::fmt_f64_exact(result.log_likelihood),
        tsv::fmt_f64_exact(result.perplexity),
        result.iterations_run,
        result.restart_seed,
    );
    push_rows(&mut out, &result.table);
    out
}

fn push_rows(out: &mut String, table: &CipherTable) {
    for (t, tag) in table.tags().iter().enumerate() {
        for (c, cluster) in table.clusters().iter().enumerate() {
            out.push_str(&format!(
                "{tag}\t{cluster}\t{}\n",
                tsv::fmt_f64_exact(table.prob(t, c))
            ));
        }
    }
}

pub fn write_table(
    table: &CipherTable,
    path: impl AsRef<std::path::Path>,
    seed: u64,
) -> Result<()> {
    write_string(path.as_ref(), &table_to_tsv(table, seed))
}

/// Parse a table file produced by [`table_to_tsv`] or [`result_to_tsv`]:
/// every tag-cluster cell must appear exactly once. Metadata headers are
/// ignored here; only the table itself is reconstructed.
pub fn parse_table_tsv(text: &str) -> Result<CipherTable> {
    let mut tags: Option<Vec<String>> = None;
    let mut clusters: Option<Vec<ClusterId>> = None;
    let mut cells: Vec<(usize, String, ClusterId, f64)> = Vec::new();
    for (lineno, line) in tsv::lines(text) {
        tsv::reject_cr(lineno, line)?;
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            match tsv::header_kv(line) {
                Some(("tags", v)) => {
                    let parsed: Vec<String> = if v.is_empty() {
                        Vec::new()
                    } else {
                        v.split(',').map(str::to_owned).collect()
                    };
                    tags = Some(parsed);
                }
                Some(("clusters", v)) => {
                    let mut parsed = Vec::new();
                    for part in v.split(',') {
                        parsed.push(tsv::parse_num::<ClusterId>(lineno, "cluster", part)?);
                    }
                    clusters = Some(parsed);
                }
                _ => {}
            }
            continue;
        }
        let cols = tsv::fields(lineno, line, 3)?;
        let cluster: ClusterId = tsv::parse_num(lineno, "cluster", cols[1])?;
        let prob: f64 = tsv::parse_num(lineno, "probability", cols[2])?;
        cells.push((lineno, cols[0].to_owned(), cluster, prob));
    }
    let tags = tags.ok_or_else(|| Error::invalid("table file is missing the #tags= header"))?;
    let clusters =
        clusters.ok_or_else(|| Error::invalid("table file is missing the #clusters= header"))?;
    if tags.is_empty() {
        return Err(Error::invalid("table file declares an empty tagset"));
    }
    let tag_idx: HashMap<&str, usize> = tags
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let col_idx: HashMap<ClusterId, usize> =
        clusters.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let nc = clusters.len();
    let mut probs = vec![f64::NAN; tags.len() * nc];
    for (lineno, tag, cluster, prob) in cells {
        let t = *tag_idx
            .get(tag.as_str())
            .ok_or_else(|| Error::parse(lineno, format!("tag {tag:?} not in #tags= header")))?;
        let c = *col_idx.get(&cluster).ok_or_else(|| {
            Error::parse(
                lineno,
                format!("cluster {cluster} not in #clusters= header"),
            )
        })?;
        if !probs[t * nc + c].is_nan() {
            return Err(Error::parse(
                lineno,
                format!("duplicate cell for tag {tag:?}, cluster {cluster}"),
            ));
        }
        probs[t * nc + c] = prob;
    }
    if probs.iter().any(|p| p.is_nan()) {
        return Err(Error::invalid(
            "table file does not cover every tag-cluster cell",
        ));
    }
    CipherTable::new(tags, clusters, probs)
}

pub fn load_table_tsv(path: impl AsRef<std::path::Path>) -> Result<CipherTable> {
    let path = path.as_ref();
    parse_table_tsv(&read_to_string(path)?).map_err(|e| e.with_path(path))
}
