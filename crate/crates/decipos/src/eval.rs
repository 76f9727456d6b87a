//! Evaluation of induced taggings against gold annotations.
//!
//! Two evaluation modes matter here: many-to-one accuracy for raw cluster
//! assignments (each cluster is relabeled with its most frequent gold tag)
//! and plain tagging accuracy for decipherment output, with per-tag
//! precision/recall/F1 and a confusion matrix. A z-normalized pooled
//! correlation helper supports comparing a quality signal (such as typology
//! similarity) against accuracy across groups with different scales.

use std::collections::BTreeMap;

use crate::brown::ClusterId;
use crate::corpus::TaggedCorpus;
use crate::error::{Error, Result};

/// Precision, recall, and F1 for one tag, as fractions in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TagPrf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Accuracy report: overall accuracy, per-tag scores, and a confusion
/// matrix over `tags` (the sorted union of gold and predicted tags),
/// indexed gold-major.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub accuracy: f64,
    pub n_tokens: usize,
    pub per_tag: BTreeMap<String, TagPrf>,
    pub tags: Vec<String>,
    pub confusion: Vec<u64>,
    /// Many-to-one accuracy of the underlying clusters, when the caller
    /// supplied them alongside the tagging.
    pub many_to_one: Option<f64>,
}

impl EvalReport {
    /// Confusion count for a (gold, predicted) tag pair.
    pub fn confusion_count(&self, gold: &str, predicted: &str) -> u64 {
        let g = self.tags.iter().position(|t| t == gold);
        let p = self.tags.iter().position(|t| t == predicted);
        match (g, p) {
            (Some(g), Some(p)) => self.confusion[g * self.tags.len() + p],
            _ => 0,
        }
    }
}

fn check_aligned<A, B>(predicted: &[Vec<A>], gold: &[Vec<B>]) -> Result<()> {
    if predicted.is_empty() {
        return Err(Error::EmptyInput {
            context: "evaluation corpus".to_owned(),
        });
    }
    if predicted.len() != gold.len() {
        return Err(Error::invalid(format!(
            "sentence counts differ: {} predicted vs {} gold",
            predicted.len(),
            gold.len()
        )));
    }
    for (i, (p, g)) in predicted.iter().zip(gold).enumerate() {
        if p.len() != g.len() {
            return Err(Error::invalid(format!(
                "sentence {} length differs: {} predicted vs {} gold tokens",
                i + 1,
                p.len(),
                g.len()
            )));
        }
    }
    Ok(())
}

/// Map each cluster to the gold tag it co-occurs with most often; ties go
/// to the lexicographically smallest tag. This is the accuracy-maximizing
/// relabeling among those that treat each cluster independently.
pub fn many_to_one(
    cluster_seqs: &[Vec<ClusterId>],
    gold: &[Vec<String>],
) -> Result<BTreeMap<ClusterId, String>> {
    check_aligned(cluster_seqs, gold)?;
    let mut counts: BTreeMap<ClusterId, BTreeMap<&String, u64>> = BTreeMap::new();
    for (clusters, tags) in cluster_seqs.iter().zip(gold) {
        for (&c, t) in clusters.iter().zip(tags) {
            *counts.entry(c).or_default().entry(t).or_insert(0) += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|(c, by_tag)| {
            // BTreeMap iterates tags in ascending order, so keeping only
            // strictly larger counts realizes the tie-break.
            let mut best: Option<(&String, u64)> = None;
            for (tag, n) in by_tag {
                if best.is_none_or(|(_, bn)| n > bn) {
                    best = Some((tag, n));
                }
            }
            (c, best.expect("cluster seen at least once").0.clone())
        })
        .collect())
}

/// Accuracy of cluster sequences after the many-to-one relabeling.
pub fn many_to_one_accuracy(cluster_seqs: &[Vec<ClusterId>], gold: &[Vec<String>]) -> Result<f64> {
    let mapping = many_to_one(cluster_seqs, gold)?;
    let mut correct = 0u64;
    let mut total = 0u64;
    for (clusters, tags) in cluster_seqs.iter().zip(gold) {
        for (c, t) in clusters.iter().zip(tags) {
            total += 1;
            if mapping[c] == *t {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / total as f64)
}

/// Compare a predicted tagging against gold. Sentence counts and lengths
/// must line up; with `check_words` the word forms must match too, which
/// guards against evaluating misaligned corpora.
pub fn tag_accuracy(
    predicted: &TaggedCorpus,
    gold: &TaggedCorpus,
    check_words: bool,
) -> Result<EvalReport> {
    check_aligned(predicted.sentences(), gold.sentences())?;
    if check_words {
        for (i, (p, g)) in predicted
            .sentences()
            .iter()
            .zip(gold.sentences())
            .enumerate()
        {
            for (j, ((pw, _), (gw, _))) in p.iter().zip(g).enumerate() {
                if pw != gw {
                    return Err(Error::invalid(format!(
                        "word mismatch at sentence {}, token {}: {pw:?} predicted vs {gw:?} gold",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
    }

    let mut tags: Vec<String> = gold
        .tagset()
        .iter()
        .chain(predicted.tagset())
        .cloned()
        .collect();
    tags.sort();
    tags.dedup();
    let index: BTreeMap<&str, usize> = tags
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let n = tags.len();
    let mut confusion = vec![0u64; n * n];
    let mut correct = 0u64;
    let mut total = 0u64;
    for (p, g) in predicted.sentences().iter().zip(gold.sentences()) {
        for ((_, pt), (_, gt)) in p.iter().zip(g) {
            confusion[index[gt.as_str()] * n + index[pt.as_str()]] += 1;
            total += 1;
            if pt == gt {
                correct += 1;
            }
        }
    }

    let mut per_tag = BTreeMap::new();
    for (t, tag) in tags.iter().enumerate() {
        let tp = confusion[t * n + t];
        let gold_total: u64 = (0..n).map(|p| confusion[t * n + p]).sum();
        let pred_total: u64 = (0..n).map(|g| confusion[g * n + t]).sum();
        per_tag.insert(tag.clone(), prf(tp, pred_total, gold_total));
    }
    Ok(EvalReport {
        accuracy: correct as f64 / total as f64,
        n_tokens: total as usize,
        per_tag,
        tags,
        confusion,
        many_to_one: None,
    })
}

/// Precision/recall/F1 from true positives and the predicted/gold totals;
/// empty denominators score 0 rather than NaN.
fn prf(tp: u64, pred_total: u64, gold_total: u64) -> TagPrf {
    let precision = if pred_total == 0 {
        0.0
    } else {
        tp as f64 / pred_total as f64
    };
    let recall = if gold_total == 0 {
        0.0
    } else {
        tp as f64 / gold_total as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    TagPrf {
        precision,
        recall,
        f1,
    }
}

/// Pearson correlation between x and y after z-normalizing x within each
/// group (population standard deviation), pooling all points. Groups with
/// fewer than two points, a group with zero x-variance, or zero pooled
/// y-variance are errors because the statistic is undefined there.
pub fn znorm_pearson<K: Ord + std::fmt::Debug>(
    groups: &BTreeMap<K, Vec<(f64, f64)>>,
) -> Result<f64> {
    if groups.is_empty() {
        return Err(Error::EmptyInput {
            context: "correlation groups".to_owned(),
        });
    }
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    for (key, points) in groups {
        if points.len() < 2 {
            return Err(Error::invalid(format!(
                "group {key:?} has {} point(s); need at least 2 to z-normalize",
                points.len()
            )));
        }
        let n = points.len() as f64;
        let mean = points.iter().map(|p| p.0).sum::<f64>() / n;
        let var = points.iter().map(|p| (p.0 - mean).powi(2)).sum::<f64>() / n;
        if var == 0.0 {
            return Err(Error::invalid(format!(
                "group {key:?} has zero variance in x"
            )));
        }
        let sd = var.sqrt();
        pooled.extend(points.iter().map(|&(x, y)| ((x - mean) / sd, y)));
    }
    let n = pooled.len() as f64;
    let mx = pooled.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pooled.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for &(x, y) in &pooled {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if syy == 0.0 {
        return Err(Error::invalid("pooled y values have zero variance"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Serialize a report as sectioned TSV. Accuracy, precision, recall, and
/// F1 appear as percentages with two decimals; confusion counts are raw.
pub fn report_to_tsv(report: &EvalReport, seed: u64) -> String {
    let pct = |x: f64| format!("{:.2}", 100.0 * x);
    let mut out = format!(
        "#seed={seed}\n#section=SUMMARY\naccuracy\t{}\ntokens\t{}\n",
        pct(report.accuracy),
        report.n_tokens
    );
    if let Some(m2o) = report.many_to_one {
        out.push_str(&format!("many_to_one\t{}\n", pct(m2o)));
    }
    out.push_str("#section=PER_TAG\ntag\tprecision\trecall\tf1\n");
    for (tag, s) in &report.per_tag {
        out.push_str(&format!(
            "{tag}\t{}\t{}\t{}\n",
            pct(s.precision),
            pct(s.recall),
            pct(s.f1)
        ));
    }
    out.push_str("#section=CONFUSION\ngold\\predicted");
    for tag in &report.tags {
        out.push('\t');
        out.push_str(tag);
    }
    out.push('\n');
    let n = report.tags.len();
    for (g, tag) in report.tags.iter().enumerate() {
        out.push_str(tag);
        for p in 0..n {
            out.push_str(&format!("\t{}", report.confusion[g * n + p]));
        }
        out.push('\n');
    }
    out
}

pub fn write_report(
    report: &EvalReport,
    path: impl AsRef<std::path::Path>,
    seed: u64,
) -> Result<()> {
    crate::error::write_string(path.as_ref(), &report_to_tsv(report, seed))
}
