//! Statistical dependence between the grammatical gender of nouns and the
//! adjectives and verbs they combine with in dependency treebanks.
//!
//! The crate is organised as a pipeline:
//!
//! * [`conllu`] streams sentences out of CoNLL-U files,
//! * [`extract`] pulls noun–adjective / noun–verb pairs and noun feature
//!   observations out of them and routes nouns by animacy,
//! * [`filter`] applies the rank-order coverage filters and fixes one gender
//!   per noun type,
//! * [`info`] computes plug-in entropy, mutual information and six
//!   normalized MI variants,
//! * [`perm`] runs type-level gender permutation tests,
//! * [`synth`] generates corpora with known ground truth,
//! * [`pipeline`] ties it all together and writes the result artifacts.
//!
//! See the `examples/` directory for one runnable program per stage.

pub mod conllu;
pub mod extract;
pub mod filter;
pub mod info;
pub mod perm;
pub mod pipeline;
pub mod synth;

pub use conllu::{Case, Gender, Number, ParseMode, Sentence, Token};
pub use extract::{Animacy, AnimacyLexicon, DependencyPair, NounFeatureObservation, Relation};
pub use info::{ContingencyTable, NmiReport, Normalizer};
pub use perm::{MiTestResult, NounProfile, PermutationLevel, ProfileSet};
