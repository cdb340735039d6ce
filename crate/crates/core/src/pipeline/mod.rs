//! End-to-end analysis: ingest → extract → animacy partition → coverage
//! filters → type-gender assignment → tables → permutation tests and NMI.
//!
//! [`run`] computes everything in memory and only then writes the output
//! directory, one file at a time through a temporary name and a rename:
//!
//! | file                | content                                             |
//! |---------------------|-----------------------------------------------------|
//! | `results.json`      | versioned [`AnalysisResult`]                        |
//! | `audit.json`        | discard accounting per stage                        |
//! | `retained.json`     | lemma sets kept by the coverage filters             |
//! | `counts.csv`        | token / type counts per cell                        |
//! | `mi_table.csv`      | MI and p-values, one row per variable               |
//! | `figures/*.svg,csv` | NMI bar charts and the values they plot             |

mod analysis;
mod report;
mod svg;

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conllu::ParseMode;
use crate::extract::{Animacy, ExtractOptions, Relation};
use crate::filter::DEFAULT_COVERAGE;
use crate::perm::{PermutationLevel, DEFAULT_PERMUTATIONS};

pub use analysis::{
    analyze, analyze_sentences, AnalysisResult, Audit, BaselineAudit, Cell, CellCounts, CellOutcome, ClassAudit,
    CorpusStats, RelationAudit, RetainedSets, Settings, SCHEMA_VERSION,
};
pub use report::{emit_counts, emit_mi_table, render_mi};
pub use svg::{emit_figures, Figure};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "GENDERMI_WORKERS";

/// Noun-internal features used as baselines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Case,
    Number,
}

impl FromStr for Baseline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "case" => Ok(Baseline::Case),
            "number" => Ok(Baseline::Number),
            other => Err(format!("unknown baseline {other:?}")),
        }
    }
}

/// The variable whose dependence on gender a cell measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    Amod,
    Dobj,
    Iobj,
    Nsubj,
    Case,
    Number,
}

impl Variable {
    pub fn as_str(self) -> &'static str {
        match self {
            Variable::Amod => "amod",
            Variable::Dobj => "dobj",
            Variable::Iobj => "iobj",
            Variable::Nsubj => "nsubj",
            Variable::Case => "case",
            Variable::Number => "number",
        }
    }
}

impl From<Relation> for Variable {
    fn from(r: Relation) -> Self {
        match r {
            Relation::Amod => Variable::Amod,
            Relation::Dobj => Variable::Dobj,
            Relation::Iobj => Variable::Iobj,
            Relation::Nsubj => Variable::Nsubj,
        }
    }
}

impl From<Baseline> for Variable {
    fn from(b: Baseline) -> Self {
        match b {
            Baseline::Case => Variable::Case,
            Baseline::Number => Variable::Number,
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub language: String,
    pub inputs: Vec<PathBuf>,
    pub lexicon: PathBuf,
    pub relations: BTreeSet<Relation>,
    pub baselines: BTreeSet<Baseline>,
    pub animacy: BTreeSet<Animacy>,
    pub coverage: f64,
    pub n_permutations: usize,
    pub seed: u64,
    pub parse_mode: ParseMode,
    /// 0 means one per available core.
    pub workers: usize,
    pub out_dir: PathBuf,
    pub extract: ExtractOptions,
    pub permutation_level: PermutationLevel,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            language: String::new(),
            inputs: Vec::new(),
            lexicon: PathBuf::new(),
            relations: Relation::ALL.into_iter().collect(),
            baselines: [Baseline::Case, Baseline::Number].into_iter().collect(),
            animacy: [Animacy::Inanimate, Animacy::Animate].into_iter().collect(),
            coverage: DEFAULT_COVERAGE,
            n_permutations: DEFAULT_PERMUTATIONS,
            seed: 0,
            parse_mode: ParseMode::Lenient,
            workers: 0,
            out_dir: PathBuf::from("out"),
            extract: ExtractOptions::default(),
            permutation_level: PermutationLevel::Type,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |m: String| Err(PipelineError::Config(m));
        if self.relations.is_empty() && self.baselines.is_empty() {
            return fail("select at least one relation or baseline".into());
        }
        if self.animacy.is_empty() {
            return fail("select at least one animacy class".into());
        }
        if !(self.coverage > 0.0 && self.coverage <= 1.0) {
            return fail(format!("coverage must lie in (0, 1], got {}", self.coverage));
        }
        if self.n_permutations == 0 {
            return fail("number of permutations must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no input sentences")]
    EmptyCorpus,
    #[error("stage {stage}: {message}")]
    Input { stage: &'static str, message: String },
    #[error("writing {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl PipelineError {
    /// Process exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::EmptyCorpus | PipelineError::Input { .. } => 3,
            PipelineError::Output { .. } => 3,
        }
    }
}

/// Exit code when every selected cell came out N/A.
pub const EXIT_DEGENERATE: i32 = 4;

/// All output files as (relative path, bytes).
pub fn render_outputs(result: &AnalysisResult) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = vec![
        (PathBuf::from("results.json"), json(result)),
        (PathBuf::from("audit.json"), json(&result.audit)),
        (PathBuf::from("retained.json"), json(&result.retained)),
        (PathBuf::from("counts.csv"), emit_counts(result).into_bytes()),
        (PathBuf::from("mi_table.csv"), emit_mi_table(result).into_bytes()),
    ];
    for fig in emit_figures(result) {
        files.push((Path::new("figures").join(format!("{}.svg", fig.name)), fig.svg.into_bytes()));
        files.push((Path::new("figures").join(format!("{}.csv", fig.name)), fig.csv.into_bytes()));
    }
    files
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("result types serialize");
    s.push('\n');
    s.into_bytes()
}

/// Writes each file to `<name>.tmp` and renames it into place.
pub fn write_outputs(out_dir: &Path, files: &[(PathBuf, Vec<u8>)]) -> Result<(), PipelineError> {
    let wrap = |path: &Path| {
        let path = path.to_path_buf();
        move |source| PipelineError::Output { path, source }
    };
    for (rel, bytes) in files {
        let path = out_dir.join(rel);
        let parent = path.parent().unwrap_or(out_dir);
        fs::create_dir_all(parent).map_err(wrap(parent))?;
        let mut tmp = path.clone().into_os_string();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        fs::write(&tmp, bytes).map_err(wrap(&tmp))?;
        fs::rename(&tmp, &path).map_err(wrap(&path))?;
    }
    Ok(())
}

/// Runs the analysis described by `config` and writes its outputs.
pub fn run(config: &PipelineConfig) -> Result<AnalysisResult, PipelineError> {
    let result = analyze(config)?;
    write_outputs(&config.out_dir, &render_outputs(&result))?;
    Ok(result)
}
