//! Unsupervised part-of-speech induction for languages without labeled
//! data.
//!
//! The pipeline clusters raw child-language text into word classes, then
//! treats the cluster-ID sequences as a cipher over POS tags: a tag-sequence
//! language model from a labeled parent language supplies frozen HMM
//! transitions, and EM learns the tag-to-cluster emission table. Decoding
//! the cluster sequences with the learned table yields universal POS tags
//! for the child language. Tables learned from several parents can be
//! averaged, and WALS-based typology ranks candidate parents.

pub mod brown;
pub mod cipher;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod grounder;
pub mod poslm;
pub mod typology;

mod tsv;

pub use error::{Error, Result};
