//! Typological similarity ranking of candidate parent languages.
//!
//! Languages are rows of numeric typological feature values (WALS-style
//! tables) with holes where a feature is undocumented. Missing cells are
//! filled with the feature's mean over the documented languages, rows are
//! mean-centered, and principal components are extracted from the feature
//! covariance. Ranking a child language then reduces to cosine similarity
//! in the projected space.
//!
//! Every step is pinned to a deterministic convention (component order,
//! sign, tie-breaks) so rankings are reproducible byte for byte.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{read_to_string, write_string, Error, Result};
use crate::tsv;

/// A languages-by-features table of optional numeric values.
#[derive(Debug, Clone, PartialEq)]
pub struct WalsTable {
    languages: Vec<String>,
    features: Vec<String>,
    values: Vec<Option<f64>>,
}

impl WalsTable {
    pub fn new(
        languages: Vec<String>,
        features: Vec<String>,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        if languages.is_empty() {
            return Err(Error::invalid("typology table has no languages"));
        }
        if features.is_empty() {
            return Err(Error::invalid("typology table has no feature columns"));
        }
        if values.len() != languages.len() * features.len() {
            return Err(Error::invalid(format!(
                "typology table has {} cells, expected {} languages x {} features",
                values.len(),
                languages.len(),
                features.len()
            )));
        }
        let mut seen = HashSet::new();
        for lang in &languages {
            if lang.is_empty() {
                return Err(Error::invalid("empty language name"));
            }
            if !seen.insert(lang.as_str()) {
                return Err(Error::invalid(format!("duplicate language {lang:?}")));
            }
        }
        for v in values.iter().flatten() {
            if !v.is_finite() {
                return Err(Error::invalid(format!("non-finite feature value {v}")));
            }
        }
        Ok(WalsTable {
            languages,
            features,
            values,
        })
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn value(&self, language: usize, feature: usize) -> Option<f64> {
        self.values[language * self.features.len() + feature]
    }
}

/// Parse a typology table: a `language<TAB>feature...` header naming the
/// columns, then one row per language. Empty cells mean "undocumented".
pub fn parse_wals_tsv(text: &str) -> Result<WalsTable> {
    let mut features: Option<Vec<String>> = None;
    let mut languages = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in tsv::lines(text) {
        tsv::reject_cr(lineno, line)?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match &features {
            None => {
                let cols: Vec<&str> = line.split('\t').collect();
                if cols[0] != "language" {
                    return Err(Error::parse(
                        lineno,
                        format!("header must start with \"language\", got {:?}", cols[0]),
                    ));
                }
                if cols.len() < 2 {
                    return Err(Error::parse(lineno, "header names no feature columns"));
                }
                features = Some(cols[1..].iter().map(|s| s.to_string()).collect());
            }
            Some(feats) => {
                let cols = tsv::fields(lineno, line, feats.len() + 1)?;
                if cols[0].is_empty() {
                    return Err(Error::parse(lineno, "empty language name"));
                }
                languages.push(cols[0].to_owned());
                for cell in &cols[1..] {
                    if cell.is_empty() {
                        values.push(None);
                    } else {
                        values.push(Some(tsv::parse_num(lineno, "feature value", cell)?));
                    }
                }
            }
        }
    }
    let features = features.ok_or_else(|| Error::EmptyInput {
        context: "typology table".to_owned(),
    })?;
    WalsTable::new(languages, features, values)
}

pub fn load_wals_tsv(path: impl AsRef<Path>) -> Result<WalsTable> {
    let path = path.as_ref();
    parse_wals_tsv(&read_to_string(path)?).map_err(|e| e.with_path(path))
}

/// Principal-component coordinates for every language, using at most
/// `dims` components. Missing cells are imputed with the feature mean over
/// documented languages (0 for features nobody documents), features are
/// mean-centered, and the covariance uses the 1/(L-1) normalization.
///
/// Components are ordered by descending eigenvalue (original index breaks
/// exact ties) and signed so the entry of largest magnitude (first such
/// entry on ties) is positive, which makes the projection deterministic.
pub fn pca_project(table: &WalsTable, dims: usize) -> Result<Vec<Vec<f64>>> {
    let l = table.languages().len();
    let f = table.features().len();
    if l < 2 {
        return Err(Error::invalid(
            "principal components need at least 2 languages",
        ));
    }
    if dims == 0 {
        return Err(Error::invalid("projection needs at least 1 dimension"));
    }
    let mut data = vec![0.0; l * f];
    for j in 0..f {
        let present: Vec<f64> = (0..l).filter_map(|i| table.value(i, j)).collect();
        let mean = if present.is_empty() {
            0.0
        } else {
            present.iter().sum::<f64>() / present.len() as f64
        };
        for i in 0..l {
            data[i * f + j] = table.value(i, j).unwrap_or(mean);
        }
        let col_mean = (0..l).map(|i| data[i * f + j]).sum::<f64>() / l as f64;
        for i in 0..l {
            data[i * f + j] -= col_mean;
        }
    }
    let x = DMatrix::from_row_slice(l, f, &data);
    let cov = x.transpose() * &x / (l as f64 - 1.0);
    let eigen = cov.symmetric_eigen();

    let mut order: Vec<usize> = (0..f).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .total_cmp(&eigen.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let d = dims.min(f);
    let mut components = DMatrix::zeros(f, d);
    for (out, &src) in order[..d].iter().enumerate() {
        let col = eigen.eigenvectors.column(src);
        let mut arg = 0;
        for i in 1..f {
            if col[i].abs() > col[arg].abs() {
                arg = i;
            }
        }
        let sign = if col[arg] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..f {
            components[(i, out)] = sign * col[i];
        }
    }
    let coords = x * components;
    Ok((0..l)
        .map(|i| coords.row(i).iter().copied().collect())
        .collect())
}

/// Cosine similarity with pinned degenerate cases: two zero vectors are
/// identical (1.0), a zero against a nonzero vector is neutral (0.0).
fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 && nb == 0.0 {
        return 1.0;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Rank every other language in the table by typological similarity to
/// `child`: PCA over all rows, then cosine similarity in the projected
/// space, most similar first (names break exact ties).
pub fn rank_parents(table: &WalsTable, child: &str, dims: usize) -> Result<Vec<(String, f64)>> {
    let child_idx = table
        .languages()
        .iter()
        .position(|l| l == child)
        .ok_or_else(|| Error::invalid(format!("language {child:?} not in typology table")))?;
    let coords = pca_project(table, dims)?;
    let mut ranking: Vec<(String, f64)> = table
        .languages()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != child_idx)
        .map(|(i, lang)| (lang.clone(), cosine(&coords[child_idx], &coords[i])))
        .collect();
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ranking)
}

/// Serialize a ranking: `language<TAB>similarity` rows, best match first.
pub fn ranking_to_tsv(ranking: &[(String, f64)], child: &str, seed: u64) -> String {
    let mut out = format!("#seed={seed}\n#child={child}\n#columns=language,similarity\n");
    for (lang, sim) in ranking {
        out.push_str(&format!("{lang}\t{sim:.6}\n"));
    }
    out
}

pub fn write_ranking(
    ranking: &[(String, f64)],
    child: &str,
    path: impl AsRef<Path>,
    seed: u64,
) -> Result<()> {
    write_string(path.as_ref(), &ranking_to_tsv(ranking, child, seed))
}
