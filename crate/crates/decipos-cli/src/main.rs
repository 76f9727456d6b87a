//! Command-line driver for the POS induction pipeline.
//!
//! Subcommands mirror the pipeline stages: `cluster` raw child text,
//! `train-lm` on an annotated parent treebank, `ground` the clusters in
//! tags (single parent or averaged over several), `tag` new text with the
//! resulting bundle, `eval` a tagging against gold, and `typology` to rank
//! candidate parents. Every output carries a `#seed=` header and all
//! stages are deterministic for a fixed seed, regardless of `--workers`.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use decipos::corpus::{
    extract_tag_sequences, load_conllu, load_plaintext, load_tagged_tsv, tagged_to_tsv,
    TokenizedCorpus,
};
use decipos::grounder::{self, TrainParams};
use decipos::{brown, eval, poslm, typology, Error, Result};

#[derive(Parser)]
#[command(
    name = "decipos",
    version,
    about = "POS induction without labeled child-language data"
)]
struct Cli {
    /// Random seed; echoed into every output header.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Worker threads for parallel sections (0 = one per core). Outputs
    /// are identical for any value.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, ValueEnum)]
enum Mode {
    /// Decipher against one parent language model.
    Single,
    /// Decipher against each parent and average the emission tables.
    Avg,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster raw text into word classes.
    Cluster {
        /// Plain text: one sentence per line, tokens separated by single
        /// spaces.
        input: PathBuf,

        /// Number of clusters.
        #[arg(long, default_value_t = 500)]
        clusters: usize,

        /// Minimum frequency for a word type to take part in clustering;
        /// rarer words fall to the reserved unknown cluster.
        #[arg(long, default_value_t = 1)]
        min_count: u64,

        /// Lowercase tokens before clustering. Recorded in the output so
        /// later stages normalize their input the same way.
        #[arg(long)]
        lowercase: bool,

        /// Output file (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },

    /// Train a tag n-gram language model from a CoNLL-U treebank.
    TrainLm {
        /// CoNLL-U file; the UPOS column supplies the tags.
        input: PathBuf,

        /// N-gram order.
        #[arg(long, default_value_t = 2)]
        order: usize,

        /// Add-alpha smoothing weight.
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,

        /// Output file (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },

    /// Learn a tag-to-cluster emission table for a child language and
    /// write a tagger bundle.
    Ground {
        /// Parent inputs: exactly one language-model TSV with
        /// `--mode single`, two or more CoNLL-U treebanks with
        /// `--mode avg` (parent names are the file stems).
        #[arg(required = true)]
        parents: Vec<PathBuf>,

        #[arg(long, value_enum, default_value_t = Mode::Single)]
        mode: Mode,

        /// Raw child-language text.
        #[arg(long)]
        text: PathBuf,

        /// Clusters file for the child language.
        #[arg(long)]
        clusters: PathBuf,

        /// Random restarts for EM.
        #[arg(long, default_value_t = 70)]
        restarts: usize,

        /// Maximum EM iterations per restart.
        #[arg(long, default_value_t = 500)]
        iters: usize,

        /// Relative log-likelihood gain below which EM stops.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,

        /// Smoothing weight for parent language models (avg mode).
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,

        /// Directory to write the bundle into (created if needed).
        #[arg(long)]
        output: PathBuf,
    },

    /// Tag raw text with a trained bundle.
    Tag {
        /// Plain text to tag; empty input produces empty output.
        input: PathBuf,

        /// Bundle directory written by `ground`.
        #[arg(long)]
        bundle: PathBuf,

        /// Output file (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },

    /// Score a predicted tagging against gold annotations.
    Eval {
        /// Predicted tagging (word<TAB>tag TSV, blank line between
        /// sentences).
        predicted: PathBuf,

        /// Gold file; a .conllu extension selects the CoNLL-U parser,
        /// anything else is read as word/tag TSV.
        #[arg(long)]
        gold: PathBuf,

        /// Only compare tags, even when the word forms differ.
        #[arg(long)]
        ignore_words: bool,

        /// Clusters file for the gold text; adds many-to-one accuracy
        /// (each cluster relabeled with its most frequent gold tag) to the
        /// summary.
        #[arg(long, value_name = "CLUSTERS")]
        m2o: Option<PathBuf>,

        /// Output file (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },

    /// Rank candidate parent languages by typological similarity.
    Typology {
        /// Feature table: a `language` header column plus one column per
        /// numeric feature; empty cells mean "undocumented".
        wals: PathBuf,

        /// Language to rank the others against.
        #[arg(long)]
        child: String,

        /// Principal components to keep.
        #[arg(long, default_value_t = 50)]
        dims: usize,

        /// Output file (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    if cli.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
        {
            eprintln!(
                "error: cannot configure {} worker threads: {e}",
                cli.workers
            );
            std::process::exit(3);
        }
    }
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Cluster {
            input,
            clusters,
            min_count,
            lowercase,
            output,
        } => {
            let corpus = load_plaintext(&input, lowercase)?;
            let clustering =
                brown::train_brown(&corpus, clusters, min_count)?.with_lowercase(lowercase);
            emit(
                &brown::clusters_to_tsv(&clustering, seed),
                output.as_deref(),
            )
        }
        Command::TrainLm {
            input,
            order,
            alpha,
            output,
        } => {
            let treebank = load_conllu(&input)?;
            let lm = poslm::train_pos_lm(&extract_tag_sequences(&treebank), order, alpha)?;
            emit(&lm.to_tsv(seed), output.as_deref())
        }
        Command::Ground {
            parents,
            mode,
            text,
            clusters,
            restarts,
            iters,
            tol,
            alpha,
            output,
        } => {
            let clustering = brown::load_clusters_tsv(&clusters)?;
            let corpus = load_plaintext(&text, clustering.lowercase())?;
            let params = TrainParams {
                restarts,
                max_iterations: iters,
                tolerance: tol,
                seed,
            };
            let tagger = match mode {
                Mode::Single => {
                    if parents.len() != 1 {
                        return Err(Error::invalid(format!(
                            "--mode single takes exactly one language-model file, got {}",
                            parents.len()
                        )));
                    }
                    let lm = poslm::load_lm_tsv(&parents[0])?;
                    grounder::build_single_parent(
                        &stem(&parents[0]),
                        &corpus,
                        &lm,
                        &clustering,
                        &params,
                    )?
                }
                Mode::Avg => {
                    let mut named = Vec::with_capacity(parents.len());
                    for path in &parents {
                        named.push((stem(path), load_conllu(path)?));
                    }
                    grounder::build_cipher_avg(&corpus, &clustering, &named, alpha, &params)?
                }
            };
            grounder::save_bundle(&tagger, &output, seed)
        }
        Command::Tag {
            input,
            bundle,
            output,
        } => {
            let tagger = grounder::load_bundle(&bundle)?;
            let corpus = match load_plaintext(&input, tagger.clustering.lowercase()) {
                Ok(corpus) => corpus,
                // Nothing to tag is not an error; emit nothing.
                Err(Error::EmptyInput { .. }) => return emit("", output.as_deref()),
                Err(e) => return Err(e),
            };
            let tagged = grounder::tag(&tagger, &corpus)?;
            emit(&tagged_to_tsv(&tagged, seed), output.as_deref())
        }
        Command::Eval {
            predicted,
            gold,
            ignore_words,
            m2o,
            output,
        } => {
            let predicted = load_tagged_tsv(&predicted)?;
            let gold = if gold.extension().is_some_and(|e| e == "conllu") {
                load_conllu(&gold)?
            } else {
                load_tagged_tsv(&gold)?
            };
            let mut report = eval::tag_accuracy(&predicted, &gold, !ignore_words)?;
            if let Some(path) = m2o {
                let clustering = brown::load_clusters_tsv(&path)?;
                let words = gold
                    .sentences()
                    .iter()
                    .map(|s| {
                        s.iter()
                            .map(|(w, _)| {
                                if clustering.lowercase() {
                                    w.to_lowercase()
                                } else {
                                    w.clone()
                                }
                            })
                            .collect()
                    })
                    .collect();
                let cluster_seqs =
                    brown::assign_clusters(&TokenizedCorpus::from_sentences(words)?, &clustering);
                report.many_to_one = Some(eval::many_to_one_accuracy(
                    &cluster_seqs,
                    &extract_tag_sequences(&gold),
                )?);
            }
            emit(&eval::report_to_tsv(&report, seed), output.as_deref())
        }
        Command::Typology {
            wals,
            child,
            dims,
            output,
        } => {
            let table = typology::load_wals_tsv(&wals)?;
            let ranking = typology::rank_parents(&table, &child, dims)?;
            emit(
                &typology::ranking_to_tsv(&ranking, &child, seed),
                output.as_deref(),
            )
        }
    }
}

/// Parent name for provenance rows: the file name without its extension.
fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Write {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
