use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Baseline, PipelineConfig, PipelineError, Variable};
use crate::conllu::{ParseMode, Reader, Sentence};
use crate::extract::{
    extract_noun_observations, extract_pairs, partition_by_animacy, Animacy, AnimacyLexicon, DependencyPair,
    ExtractOptions, NounFeatureObservation, Relation,
};
use crate::filter::{apply_retention, assign_type_gender, count_lemmata, coverage_filter};
use crate::info::{nmi_report, NmiReport};
use crate::perm::{build_profiles, MiTestResult, PermError, PermutationLevel, PermutationTest};

pub const SCHEMA_VERSION: u32 = 1;

/// Run settings echoed into `results.json`. Worker count and output
/// location are left out because they must not affect the result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub inputs: Vec<String>,
    pub lexicon: String,
    pub relations: Vec<Relation>,
    pub baselines: Vec<Baseline>,
    pub animacy: Vec<Animacy>,
    pub coverage: f64,
    pub n_permutations: usize,
    pub seed: u64,
    pub parse_mode: ParseMode,
    pub permutation_level: PermutationLevel,
    pub extract: ExtractOptions,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub files: usize,
    pub sentences: usize,
    pub skipped_sentences: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    /// Non-unique pairs (the table total).
    pub tokens: u64,
    /// Distinct (noun, value) pairs.
    pub types: u64,
    pub noun_types: u64,
    pub partner_types: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum CellOutcome {
    #[serde(rename = "ok")]
    Analyzed {
        rows: usize,
        cols: usize,
        test: MiTestResult,
        nmi: NmiReport,
    },
    #[serde(rename = "N/A")]
    NotAvailable { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub animacy: Animacy,
    pub variable: Variable,
    pub counts: CellCounts,
    #[serde(flatten)]
    pub outcome: CellOutcome,
}

impl Cell {
    pub fn analyzed(&self) -> Option<(&MiTestResult, &NmiReport)> {
        match &self.outcome {
            CellOutcome::Analyzed { test, nmi, .. } => Some((test, nmi)),
            CellOutcome::NotAvailable { .. } => None,
        }
    }

    pub fn is_na(&self) -> bool {
        matches!(self.outcome, CellOutcome::NotAvailable { .. })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassAudit {
    pub input: usize,
    pub partner_filtered: usize,
    pub noun_filtered: usize,
    pub tied_gender: usize,
    pub retained: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationAudit {
    /// Matching arcs, with or without noun gender.
    pub input_arcs: usize,
    pub ungendered: usize,
    pub unknown_animacy: usize,
    pub class_not_selected: usize,
    pub classes: BTreeMap<Animacy, ClassAudit>,
}

impl RelationAudit {
    pub fn discarded(&self) -> usize {
        self.ungendered
            + self.unknown_animacy
            + self.class_not_selected
            + self
                .classes
                .values()
                .map(|c| c.partner_filtered + c.noun_filtered + c.tied_gender)
                .sum::<usize>()
    }

    pub fn retained(&self) -> usize {
        self.classes.values().map(|c| c.retained).sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineClassAudit {
    pub input: usize,
    pub noun_filtered: usize,
    pub tied_gender: usize,
    /// Observations lacking the feature, per baseline.
    pub unmarked: BTreeMap<Baseline, usize>,
    pub retained: BTreeMap<Baseline, usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineAudit {
    pub observations: usize,
    pub unknown_animacy: usize,
    pub class_not_selected: usize,
    pub classes: BTreeMap<Animacy, BaselineClassAudit>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Audit {
    pub corpus: CorpusStats,
    pub relations: BTreeMap<Relation, RelationAudit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baselines: Option<BaselineAudit>,
    /// Stages executed, in order.
    pub stages: Vec<String>,
}

/// Lemma sets kept by the coverage filters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetainedSets {
    pub partners: BTreeMap<Relation, BTreeSet<String>>,
    /// Keyed by relation name or "observations", then animacy class.
    pub nouns: BTreeMap<String, BTreeMap<Animacy, BTreeSet<String>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub schema_version: u32,
    pub unit: String,
    pub language: String,
    pub settings: Settings,
    pub cells: Vec<Cell>,
    pub audit: Audit,
    #[serde(skip)]
    pub retained: RetainedSets,
}

impl AnalysisResult {
    pub fn cell(&self, animacy: Animacy, variable: Variable) -> Option<&Cell> {
        self.cells.iter().find(|c| c.animacy == animacy && c.variable == variable)
    }

    /// Every cell is N/A (or there are none).
    pub fn is_degenerate(&self) -> bool {
        self.cells.iter().all(Cell::is_na)
    }
}

/// Everything pulled out of one input.
#[derive(Default)]
struct Harvest {
    sentences: usize,
    skipped: usize,
    pairs: BTreeMap<Relation, Vec<DependencyPair>>,
    ungendered: BTreeMap<Relation, usize>,
    observations: Vec<NounFeatureObservation>,
}

impl Harvest {
    fn add(&mut self, sentence: &Sentence, config: &PipelineConfig) {
        self.sentences += 1;
        for &r in &config.relations {
            let ex = extract_pairs(sentence, r, &config.extract);
            self.pairs.entry(r).or_default().extend(ex.pairs);
            *self.ungendered.entry(r).or_default() += ex.ungendered;
        }
        if !config.baselines.is_empty() {
            self.observations.extend(extract_noun_observations(sentence, &config.extract));
        }
    }

    fn merge(&mut self, other: Harvest) {
        self.sentences += other.sentences;
        self.skipped += other.skipped;
        for (r, pairs) in other.pairs {
            self.pairs.entry(r).or_default().extend(pairs);
        }
        for (r, n) in other.ungendered {
            *self.ungendered.entry(r).or_default() += n;
        }
        self.observations.extend(other.observations);
    }
}

fn harvest_file(path: &Path, config: &PipelineConfig) -> Result<Harvest, PipelineError> {
    let input_err = |message: String| PipelineError::Input { stage: "ingest", message };
    let file = File::open(path).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    let mut reader = Reader::new(BufReader::new(file), config.parse_mode);
    let mut harvest = Harvest::default();
    for sentence in reader.by_ref() {
        let sentence = sentence.map_err(|e| input_err(format!("{}: {e}", path.display())))?;
        harvest.add(&sentence, config);
    }
    harvest.skipped = reader.skipped();
    Ok(harvest)
}

fn load_lexicon(path: &Path) -> Result<AnimacyLexicon, PipelineError> {
    let input_err = |message: String| PipelineError::Input { stage: "lexicon", message };
    let file = File::open(path).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    AnimacyLexicon::load(BufReader::new(file)).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Reads the configured inputs and lexicon and runs the analysis.
pub fn analyze(config: &PipelineConfig) -> Result<AnalysisResult, PipelineError> {
    config.validate()?;
    if config.inputs.is_empty() {
        return Err(PipelineError::EmptyCorpus);
    }
    let lexicon = load_lexicon(&config.lexicon)?;
    with_pool(config.workers, || {
        let harvests: Vec<Harvest> = config
            .inputs
            .par_iter()
            .map(|p| harvest_file(p, config))
            .collect::<Result<_, _>>()?;
        let mut all = Harvest::default();
        for h in harvests {
            all.merge(h);
        }
        Analysis::new(config, &lexicon).finish(all, config.inputs.len())
    })
}

/// Runs the analysis over in-memory sentences. `config.inputs` and
/// `config.lexicon` are only echoed into the settings.
pub fn analyze_sentences(
    config: &PipelineConfig,
    lexicon: &AnimacyLexicon,
    sentences: impl IntoIterator<Item = Sentence>,
) -> Result<AnalysisResult, PipelineError> {
    config.validate()?;
    let mut harvest = Harvest::default();
    for s in sentences {
        harvest.add(&s, config);
    }
    with_pool(config.workers, || Analysis::new(config, lexicon).finish(harvest, config.inputs.len()))
}

/// Per-cell seed derived from the master seed (splitmix64 finaliser).
fn cell_seed(seed: u64, animacy: Animacy, variable: Variable) -> u64 {
    let code = (animacy as u64) << 8 | variable as u64;
    let mut z = seed ^ code.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Analysis<'a> {
    config: &'a PipelineConfig,
    lexicon: &'a AnimacyLexicon,
    audit: Audit,
    retained: RetainedSets,
    cells: Vec<Cell>,
}

impl<'a> Analysis<'a> {
    fn new(config: &'a PipelineConfig, lexicon: &'a AnimacyLexicon) -> Self {
        Analysis {
            config,
            lexicon,
            audit: Audit::default(),
            retained: RetainedSets::default(),
            cells: Vec::new(),
        }
    }

    fn stage(&mut self, name: String) {
        self.audit.stages.push(name);
    }

    fn finish(mut self, harvest: Harvest, files: usize) -> Result<AnalysisResult, PipelineError> {
        if harvest.sentences == 0 {
            return Err(PipelineError::EmptyCorpus);
        }
        self.stage("ingest".into());
        self.audit.corpus = CorpusStats {
            files,
            sentences: harvest.sentences,
            skipped_sentences: harvest.skipped,
        };
        let Harvest {
            mut pairs,
            ungendered,
            observations,
            ..
        } = harvest;
        for &relation in &self.config.relations {
            let rel_pairs = pairs.remove(&relation).unwrap_or_default();
            let ungendered = ungendered.get(&relation).copied().unwrap_or(0);
            self.relation(relation, rel_pairs, ungendered)?;
        }
        if !self.config.baselines.is_empty() {
            self.baselines(observations)?;
        }
        self.cells.sort_by_key(|c| (std::cmp::Reverse(c.animacy), c.variable));
        let config = self.config;
        Ok(AnalysisResult {
            schema_version: SCHEMA_VERSION,
            unit: "bits".into(),
            language: config.language.clone(),
            settings: Settings {
                inputs: config.inputs.iter().map(|p| file_name(p)).collect(),
                lexicon: file_name(&config.lexicon),
                relations: config.relations.iter().copied().collect(),
                baselines: config.baselines.iter().copied().collect(),
                animacy: config.animacy.iter().copied().collect(),
                coverage: config.coverage,
                n_permutations: config.n_permutations,
                seed: config.seed,
                parse_mode: config.parse_mode,
                permutation_level: config.permutation_level,
                extract: config.extract,
            },
            cells: self.cells,
            audit: self.audit,
            retained: self.retained,
        })
    }

    fn relation(&mut self, relation: Relation, pairs: Vec<DependencyPair>, ungendered: usize) -> Result<(), PipelineError> {
        let tag = relation.as_str();
        self.stage(format!("extract:{tag}"));
        let mut audit = RelationAudit {
            input_arcs: pairs.len() + ungendered,
            ungendered,
            ..Default::default()
        };
        self.stage(format!("partition:{tag}"));
        let part = partition_by_animacy(pairs, self.lexicon);
        audit.unknown_animacy = part.discarded;

        self.stage(format!("partner-filter:{tag}"));
        let partner_counts = count_lemmata(
            part.animate.iter().chain(&part.inanimate).map(|p| p.partner_lemma.as_str()),
        );
        let partners = retained_set(&partner_counts, self.config.coverage, "partner-filter")?;

        for class in [Animacy::Inanimate, Animacy::Animate] {
            let records = part.class(class);
            if !self.config.animacy.contains(&class) {
                audit.class_not_selected += records.len();
                continue;
            }
            let mut ca = ClassAudit {
                input: records.len(),
                ..Default::default()
            };
            let kept: Vec<&DependencyPair> = records.iter().filter(|p| partners.contains(&p.partner_lemma)).collect();
            ca.partner_filtered = records.len() - kept.len();

            self.stage(format!("noun-filter:{tag}:{class}"));
            let noun_counts = count_lemmata(kept.iter().map(|p| p.noun_lemma.as_str()));
            let nouns = retained_set(&noun_counts, self.config.coverage, "noun-filter")?;
            let kept = apply_retention(kept, &partners, &nouns, |p| &p.partner_lemma, |p| &p.noun_lemma);
            ca.noun_filtered = records.len() - ca.partner_filtered - kept.len();

            self.stage(format!("gender-assignment:{tag}:{class}"));
            let assignment = assign_type_gender(kept.iter().map(|p| (p.noun_lemma.as_str(), p.noun_gender)));
            let kept: Vec<(&str, &str)> = kept
                .iter()
                .filter(|p| assignment.entries.contains_key(&p.noun_lemma))
                .map(|p| (p.noun_lemma.as_str(), p.partner_lemma.as_str()))
                .collect();
            ca.tied_gender = records.len() - ca.partner_filtered - ca.noun_filtered - kept.len();
            ca.retained = kept.len();

            self.stage(format!("permutation-test:{tag}:{class}"));
            let cell = self.cell(class, relation.into(), &kept, &assignment)?;
            self.cells.push(cell);
            audit.classes.insert(class, ca);
            self.retained.nouns.entry(tag.to_string()).or_default().insert(class, nouns);
        }
        self.retained.partners.insert(relation, partners);
        self.audit.relations.insert(relation, audit);
        Ok(())
    }

    fn baselines(&mut self, observations: Vec<NounFeatureObservation>) -> Result<(), PipelineError> {
        self.stage("extract:observations".into());
        let mut audit = BaselineAudit {
            observations: observations.len(),
            ..Default::default()
        };
        self.stage("partition:observations".into());
        let part = partition_by_animacy(observations, self.lexicon);
        audit.unknown_animacy = part.discarded;

        for class in [Animacy::Inanimate, Animacy::Animate] {
            let records = part.class(class);
            if !self.config.animacy.contains(&class) {
                audit.class_not_selected += records.len();
                continue;
            }
            let mut ca = BaselineClassAudit {
                input: records.len(),
                ..Default::default()
            };
            self.stage(format!("noun-filter:observations:{class}"));
            let noun_counts = count_lemmata(records.iter().map(|o| o.noun_lemma.as_str()));
            let nouns = retained_set(&noun_counts, self.config.coverage, "noun-filter")?;
            let kept: Vec<&NounFeatureObservation> = records.iter().filter(|o| nouns.contains(&o.noun_lemma)).collect();
            ca.noun_filtered = records.len() - kept.len();

            self.stage(format!("gender-assignment:observations:{class}"));
            let assignment = assign_type_gender(kept.iter().map(|o| (o.noun_lemma.as_str(), o.gender)));
            let kept: Vec<&NounFeatureObservation> =
                kept.into_iter().filter(|o| assignment.entries.contains_key(&o.noun_lemma)).collect();
            ca.tied_gender = records.len() - ca.noun_filtered - kept.len();

            for &baseline in &self.config.baselines {
                let values: Vec<(&str, &str)> = kept
                    .iter()
                    .filter_map(|o| {
                        let value = match baseline {
                            Baseline::Case => o.case.as_ref().map(|c| c.as_str()),
                            Baseline::Number => o.number.map(|n| n.as_str()),
                        };
                        value.map(|v| (o.noun_lemma.as_str(), v))
                    })
                    .collect();
                ca.unmarked.insert(baseline, kept.len() - values.len());
                ca.retained.insert(baseline, values.len());
                let variable = Variable::from(baseline);
                self.stage(format!("permutation-test:{variable}:{class}"));
                let cell = if values.is_empty() {
                    Cell {
                        animacy: class,
                        variable,
                        counts: CellCounts::default(),
                        outcome: CellOutcome::NotAvailable {
                            reason: format!("no {variable} feature on retained nouns"),
                        },
                    }
                } else {
                    self.cell(class, variable, &values, &assignment)?
                };
                self.cells.push(cell);
            }
            audit.classes.insert(class, ca);
            self.retained.nouns.entry("observations".into()).or_default().insert(class, nouns);
        }
        self.audit.baselines = Some(audit);
        Ok(())
    }

    fn cell(
        &self,
        animacy: Animacy,
        variable: Variable,
        records: &[(&str, &str)],
        assignment: &crate::filter::GenderAssignment,
    ) -> Result<Cell, PipelineError> {
        let na = |counts: CellCounts, reason: &str| Cell {
            animacy,
            variable,
            counts,
            outcome: CellOutcome::NotAvailable { reason: reason.into() },
        };
        if records.is_empty() {
            return Ok(na(CellCounts::default(), "no retained observations"));
        }
        let (profiles, table) = build_profiles(records.iter().copied(), assignment).map_err(|e| PipelineError::Input {
            stage: "profiles",
            message: e.to_string(),
        })?;
        let counts = CellCounts {
            tokens: table.total(),
            types: profiles.profiles().iter().map(|p| p.partner_counts.len() as u64).sum(),
            noun_types: profiles.len() as u64,
            partner_types: profiles.partner_labels().len() as u64,
        };
        let test = PermutationTest {
            n_permutations: self.config.n_permutations,
            seed: cell_seed(self.config.seed, animacy, variable),
            // already running inside the configured pool
            workers: if self.config.workers == 1 { 1 } else { 0 },
            level: self.config.permutation_level,
        };
        match test.run(&profiles) {
            Ok(test) => Ok(Cell {
                animacy,
                variable,
                counts,
                outcome: CellOutcome::Analyzed {
                    rows: table.n_rows(),
                    cols: table.n_cols(),
                    nmi: nmi_report(&table),
                    test,
                },
            }),
            Err(PermError::SingleGender) => Ok(na(counts, "single gender")),
            Err(PermError::TooFewNouns(_)) => Ok(na(counts, "fewer than two noun types")),
            Err(e) => Err(PipelineError::Input {
                stage: "permutation-test",
                message: e.to_string(),
            }),
        }
    }
}

fn retained_set(counts: &HashMap<&str, u64>, coverage: f64, stage: &'static str) -> Result<BTreeSet<String>, PipelineError> {
    if counts.is_empty() {
        return Ok(BTreeSet::new());
    }
    coverage_filter(counts, coverage).map_err(|e| PipelineError::Input {
        stage,
        message: e.to_string(),
    })
}
