//! Additive-smoothed n-gram language models over POS tag sequences.
//!
//! Probabilities follow P(t|h) = (count(h,t) + alpha) / (count(h) + alpha*V)
//! where V counts the tagset plus the end-of-sequence symbol. Histories are
//! padded with `order - 1` begin markers (context only, never predicted);
//! one end-of-sequence event is predicted per sequence. Unseen histories
//! back off to the uniform 1/V. All log quantities use natural log.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{read_to_string, write_string, Error, Result};
use crate::tsv;

/// Begin-of-sequence marker as it appears in serialized histories.
pub const BOS: &str = "<s>";
/// End-of-sequence marker as it appears in serialized predictions.
pub const EOS: &str = "</s>";

const BOS_ID: u16 = u16::MAX;

#[derive(Debug, Clone, PartialEq)]
struct Row {
    counts: Vec<u64>,
    total: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosLanguageModel {
    order: usize,
    alpha: f64,
    tagset: Vec<String>,
    tag_ids: HashMap<String, u16>,
    /// history (length order-1, BOS_ID for begin padding) -> outcome counts.
    /// Outcome index i < |tagset| is tagset[i]; index |tagset| is EOS.
    counts: HashMap<Vec<u16>, Row>,
}

impl PosLanguageModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tagset(&self) -> &[String] {
        &self.tagset
    }

    /// Smoothing vocabulary size: |tagset| + 1 for the end marker.
    pub fn vocab_size(&self) -> usize {
        self.tagset.len() + 1
    }

    fn eos_index(&self) -> usize {
        self.tagset.len()
    }

    fn tag_id(&self, tag: &str) -> Result<u16> {
        self.tag_ids
            .get(tag)
            .copied()
            .ok_or_else(|| Error::invalid(format!("tag {tag:?} is not in the model tagset")))
    }

    fn prob_ids(&self, history: &[u16], outcome: usize) -> f64 {
        let v = self.vocab_size() as f64;
        match self.counts.get(history) {
            Some(row) => {
                (row.counts[outcome] as f64 + self.alpha) / (row.total as f64 + self.alpha * v)
            }
            None => 1.0 / v,
        }
    }

    /// P(outcome | history) with symbols as strings. History entries may be
    /// tags or `<s>`; the outcome may be a tag or `</s>`. The history must
    /// have length `order - 1`.
    pub fn prob(&self, history: &[&str], outcome: &str) -> Result<f64> {
        if history.len() != self.order - 1 {
            return Err(Error::invalid(format!(
                "history length {} does not match order {}",
                history.len(),
                self.order
            )));
        }
        let hist: Vec<u16> = history
            .iter()
            .map(|s| {
                if *s == BOS {
                    Ok(BOS_ID)
                } else {
                    self.tag_id(s)
                }
            })
            .collect::<Result<_>>()?;
        let outcome = if outcome == EOS {
            self.eos_index()
        } else {
            self.tag_id(outcome)? as usize
        };
        Ok(self.prob_ids(&hist, outcome))
    }

    /// Natural-log probability of a tag sequence including its end event.
    pub fn sequence_log_prob(&self, tags: &[String]) -> Result<f64> {
        let ids: Vec<u16> = tags.iter().map(|t| self.tag_id(t)).collect::<Result<_>>()?;
        let mut history = vec![BOS_ID; self.order - 1];
        let mut ll = 0.0;
        for &id in &ids {
            ll += self.prob_ids(&history, id as usize).ln();
            push_history(&mut history, id);
        }
        ll += self.prob_ids(&history, self.eos_index()).ln();
        Ok(ll)
    }

    /// exp(-LL/N) over the given sequences, N counting one end event per
    /// sequence in addition to the tags.
    pub fn perplexity(&self, sequences: &[Vec<String>]) -> Result<f64> {
        if sequences.is_empty() {
            return Err(Error::invalid("perplexity of an empty sequence list"));
        }
        let mut ll = 0.0;
        let mut n = 0u64;
        for seq in sequences {
            ll += self.sequence_log_prob(seq)?;
            n += seq.len() as u64 + 1;
        }
        Ok((-ll / n as f64).exp())
    }

    /// Dense bigram transition tables for HMM decoding: (P(t|begin),
    /// P(t'|t) row-major, P(end|t)). Only order-2 models describe a plain
    /// tag-to-tag HMM, so any other order is rejected.
    pub fn bigram_matrices(&self) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        if self.order != 2 {
            return Err(Error::invalid(format!(
                "decipherment needs a bigram LM (order 2), got order {}",
                self.order
            )));
        }
        let n = self.tagset.len();
        let bos = vec![BOS_ID];
        let init: Vec<f64> = (0..n).map(|t| self.prob_ids(&bos, t)).collect();
        let mut trans = vec![0.0; n * n];
        let mut eos = vec![0.0; n];
        for t in 0..n {
            let hist = vec![t as u16];
            for t2 in 0..n {
                trans[t * n + t2] = self.prob_ids(&hist, t2);
            }
            eos[t] = self.prob_ids(&hist, self.eos_index());
        }
        Ok((init, trans, eos))
    }

    /// Serialize as TSV: header lines for order, alpha, and the tagset,
    /// then `history<TAB>tag<TAB>count` rows. Counts are integers and alpha
    /// uses shortest round-trip formatting, so parsing the output rebuilds
    /// an identical model.
    pub fn to_tsv(&self, seed: u64) -> String {
        let mut out = format!(
            "#seed={seed}\n#order={}\n#alpha={}\n#tags={}\n",
            self.order,
            self.alpha,
            self.tagset.join(",")
        );
        let mut rows: Vec<(String, String, u64)> = Vec::new();
        for (hist, row) in &self.counts {
            let hist_str = hist
                .iter()
                .map(|&id| {
                    if id == BOS_ID {
                        BOS
                    } else {
                        self.tagset[id as usize].as_str()
                    }
                })
                .collect::<Vec<_>>()
                .join(" ");
            for (i, &c) in row.counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let out_str = if i == self.eos_index() {
                    EOS.to_owned()
                } else {
                    self.tagset[i].clone()
                };
                rows.push((hist_str.clone(), out_str, c));
            }
        }
        rows.sort();
        for (h, t, c) in rows {
            out.push_str(&format!("{h}\t{t}\t{c}\n"));
        }
        out
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>, seed: u64) -> Result<()> {
        write_string(path.as_ref(), &self.to_tsv(seed))
    }
}

fn push_history(history: &mut Vec<u16>, id: u16) {
    if !history.is_empty() {
        history.remove(0);
        history.push(id);
    }
}

fn validate_params(order: usize, alpha: f64) -> Result<()> {
    if order == 0 {
        return Err(Error::invalid("LM order must be at least 1"));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::invalid(format!(
            "alpha must be finite and > 0, got {alpha}"
        )));
    }
    Ok(())
}

pub(crate) fn validate_tag(tag: &str) -> Result<()> {
    if tag == BOS || tag == EOS {
        return Err(Error::invalid(format!(
            "tag {tag:?} collides with a reserved marker"
        )));
    }
    if tag.is_empty() || tag.contains([' ', '\t', '\n', '\r', ',']) {
        return Err(Error::invalid(format!(
            "tag {tag:?} is empty or contains whitespace/comma, which the LM format cannot hold"
        )));
    }
    Ok(())
}

fn train_with_tagset_ids(
    sequences: &[Vec<String>],
    tagset: Vec<String>,
    order: usize,
    alpha: f64,
) -> Result<PosLanguageModel> {
    let tag_ids: HashMap<String, u16> = tagset
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as u16))
        .collect();
    let n = tagset.len();
    let mut model = PosLanguageModel {
        order,
        alpha,
        tagset,
        tag_ids,
        counts: HashMap::new(),
    };
    for seq in sequences {
        let mut history = vec![BOS_ID; order - 1];
        for tag in seq {
            let id = *model.tag_ids.get(tag).ok_or_else(|| {
                Error::invalid(format!("tag {tag:?} is not in the supplied tagset"))
            })?;
            bump(&mut model.counts, &history, id as usize, n);
            push_history(&mut history, id);
        }
        bump(&mut model.counts, &history, n, n);
    }
    Ok(model)
}

fn bump(counts: &mut HashMap<Vec<u16>, Row>, history: &[u16], outcome: usize, n: usize) {
    let row = counts.entry(history.to_vec()).or_insert_with(|| Row {
        counts: vec![0; n + 1],
        total: 0,
    });
    row.counts[outcome] += 1;
    row.total += 1;
}

/// Train on tag sequences; the tagset is collected in first-occurrence
/// order across the sequences.
pub fn train_pos_lm(
    sequences: &[Vec<String>],
    order: usize,
    alpha: f64,
) -> Result<PosLanguageModel> {
    validate_params(order, alpha)?;
    if sequences.is_empty() {
        return Err(Error::invalid("cannot train an LM on zero sequences"));
    }
    let mut tagset = Vec::new();
    let mut seen = HashMap::new();
    for seq in sequences {
        for tag in seq {
            if seen.insert(tag.clone(), ()).is_none() {
                validate_tag(tag)?;
                tagset.push(tag.clone());
            }
        }
    }
    train_with_tagset_ids(sequences, tagset, order, alpha)
}

/// Train with an explicit tagset (ordering and smoothing vocabulary fixed
/// by the caller). Every observed tag must be in `tagset`.
pub fn train_pos_lm_with_tagset(
    sequences: &[Vec<String>],
    tagset: &[String],
    order: usize,
    alpha: f64,
) -> Result<PosLanguageModel> {
    validate_params(order, alpha)?;
    if sequences.is_empty() {
        return Err(Error::invalid("cannot train an LM on zero sequences"));
    }
    for tag in tagset {
        validate_tag(tag)?;
    }
    train_with_tagset_ids(sequences, tagset.to_vec(), order, alpha)
}

/// Train one LM on several corpora concatenated in the given order.
/// Identical to training on the flattened sequence list.
pub fn concat_train(
    parents: &[Vec<Vec<String>>],
    order: usize,
    alpha: f64,
) -> Result<PosLanguageModel> {
    let flat: Vec<Vec<String>> = parents.iter().flatten().cloned().collect();
    train_pos_lm(&flat, order, alpha)
}

/// Parse the LM TSV format written by [`PosLanguageModel::to_tsv`].
pub fn parse_lm_tsv(text: &str) -> Result<PosLanguageModel> {
    let mut order: Option<usize> = None;
    let mut alpha: Option<f64> = None;
    let mut tagset: Option<Vec<String>> = None;
    let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
    for (lineno, line) in tsv::lines(text) {
        tsv::reject_cr(lineno, line)?;
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            match tsv::header_kv(line) {
                Some(("order", v)) => order = Some(tsv::parse_num(lineno, "order", v)?),
                Some(("alpha", v)) => alpha = Some(tsv::parse_num(lineno, "alpha", v)?),
                Some(("tags", v)) => {
                    tagset = Some(if v.is_empty() {
                        Vec::new()
                    } else {
                        v.split(',').map(str::to_owned).collect()
                    })
                }
                _ => {}
            }
            continue;
        }
        rows.push((lineno, tsv::fields(lineno, line, 3)?));
    }
    let order = order.ok_or_else(|| Error::invalid("LM file is missing the #order= header"))?;
    let alpha = alpha.ok_or_else(|| Error::invalid("LM file is missing the #alpha= header"))?;
    let tagset = tagset.ok_or_else(|| Error::invalid("LM file is missing the #tags= header"))?;
    validate_params(order, alpha)?;
    let mut tag_ids = HashMap::new();
    for (i, tag) in tagset.iter().enumerate() {
        validate_tag(tag)?;
        if tag_ids.insert(tag.clone(), i as u16).is_some() {
            return Err(Error::invalid(format!(
                "duplicate tag {tag:?} in #tags= header"
            )));
        }
    }
    let n = tagset.len();
    let mut model = PosLanguageModel {
        order,
        alpha,
        tagset,
        tag_ids,
        counts: HashMap::new(),
    };
    for (lineno, cols) in rows {
        let hist_syms: Vec<&str> = if cols[0].is_empty() {
            Vec::new()
        } else {
            cols[0].split(' ').collect()
        };
        if hist_syms.len() != order - 1 {
            return Err(Error::parse(
                lineno,
                format!(
                    "history {:?} does not have order-1 = {} symbols",
                    cols[0],
                    order - 1
                ),
            ));
        }
        let mut hist = Vec::with_capacity(order - 1);
        for sym in hist_syms {
            hist.push(if sym == BOS {
                BOS_ID
            } else {
                *model.tag_ids.get(sym).ok_or_else(|| {
                    Error::parse(lineno, format!("history symbol {sym:?} not in tagset"))
                })?
            });
        }
        let outcome = if cols[1] == EOS {
            n
        } else {
            *model.tag_ids.get(cols[1]).ok_or_else(|| {
                Error::parse(
                    lineno,
                    format!("predicted symbol {:?} not in tagset", cols[1]),
                )
            })? as usize
        };
        let count: u64 = tsv::parse_num(lineno, "count", cols[2])?;
        let row = model.counts.entry(hist).or_insert_with(|| Row {
            counts: vec![0; n + 1],
            total: 0,
        });
        if row.counts[outcome] != 0 {
            return Err(Error::parse(lineno, "duplicate history/tag row"));
        }
        row.counts[outcome] = count;
        row.total += count;
    }
    Ok(model)
}

pub fn load_lm_tsv(path: impl AsRef<Path>) -> Result<PosLanguageModel> {
    let path = path.as_ref();
    parse_lm_tsv(&read_to_string(path)?).map_err(|e| e.with_path(path))
}
