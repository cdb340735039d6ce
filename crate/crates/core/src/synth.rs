//! Synthetic pair corpora with known dependence between gender and partner.
//!
//! Noun types get a gender drawn from `gender_probs` and a Zipf-distributed
//! token frequency. Every token picks its partner from the mixture
//! `(1 − λ)·Q + λ·Q_g`, where `Q` is uniform over all partner types and `Q_g`
//! is uniform over a block of partner types reserved for gender `g`. With
//! `λ = 0` gender and partner are independent; with `λ = 1` the partner
//! determines the gender.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rand::distr::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{weighted::WeightedIndex, Zipf};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conllu::{Case, Gender, MorphFeatures, Number, Sentence, Token};
use crate::extract::{Animacy, AnimacyLexicon, DependencyPair, Relation};
use crate::filter::GenderAssignment;
use crate::info::entropy;
use crate::perm::{build_profiles, ProfileSet};

#[derive(Debug, Error, PartialEq)]
#[error("invalid synthetic corpus parameters: {0}")]
pub struct InvalidParams(pub String);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_noun_types: usize,
    pub n_partner_types: usize,
    /// One probability per gender, in `Gender::ALL` order (2 or 3 entries).
    pub gender_probs: Vec<f64>,
    pub zipf_exponent: f64,
    /// λ in [0, 1].
    pub mixing_weight: f64,
    pub tokens: usize,
    pub relation: Relation,
    /// Emit a Case feature (uniform over Nom/Acc/Gen/Dat) on nouns.
    pub with_case: bool,
    pub noun_prefix: String,
    pub partner_prefix: String,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_noun_types: 200,
            n_partner_types: 50,
            gender_probs: vec![0.5, 0.5],
            zipf_exponent: 1.0,
            mixing_weight: 0.0,
            tokens: 20_000,
            relation: Relation::Amod,
            with_case: false,
            noun_prefix: "noun".into(),
            partner_prefix: "partner".into(),
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), InvalidParams> {
        let fail = |m: &str| Err(InvalidParams(m.to_string()));
        let g = self.gender_probs.len();
        if !(1..=3).contains(&g) {
            return fail("gender_probs needs between 1 and 3 entries");
        }
        if self.gender_probs.iter().any(|&p| p.is_nan() || p < 0.0) || (self.gender_probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return fail("gender_probs must be a probability vector");
        }
        if self.n_noun_types == 0 {
            return fail("n_noun_types must be positive");
        }
        if self.n_partner_types < g {
            return fail("need at least one partner type per gender");
        }
        if !self.zipf_exponent.is_finite() || self.zipf_exponent <= 0.0 {
            return fail("zipf_exponent must be positive");
        }
        if !(0.0..=1.0).contains(&self.mixing_weight) {
            return fail("mixing_weight must lie in [0, 1]");
        }
        if self.tokens < self.n_noun_types {
            return fail("tokens must be at least n_noun_types");
        }
        Ok(())
    }

    /// Partner indices reserved for gender number `g`.
    fn block(&self, g: usize) -> std::ops::Range<usize> {
        let k = self.gender_probs.len();
        let size = self.n_partner_types / k;
        let start = g * size;
        let end = if g + 1 == k { self.n_partner_types } else { start + size };
        start..end
    }

    pub fn noun_lemma(&self, i: usize) -> String {
        format!("{}{i}", self.noun_prefix)
    }

    pub fn partner_lemma(&self, j: usize) -> String {
        format!("{}{j}", self.partner_prefix)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub params: SynthParams,
    pub seed: u64,
    /// Population MI in bits where it has a closed form.
    pub expected_mi: Option<f64>,
    pub noun_tokens: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthCorpus {
    pub pairs: Vec<DependencyPair>,
    pub assignment: GenderAssignment,
    pub truth: GroundTruth,
}

impl SynthCorpus {
    /// Lexicon listing every generated noun under `class`.
    pub fn lexicon(&self, class: Animacy) -> AnimacyLexicon {
        self.assignment.entries.keys().map(|l| (l.clone(), class)).collect()
    }

    /// Noun profiles of all pairs under the generating gender assignment.
    pub fn profiles(&self) -> ProfileSet {
        let records = self.pairs.iter().map(|p| (p.noun_lemma.as_str(), p.partner_lemma.as_str()));
        build_profiles(records, &self.assignment).expect("every generated noun has a gender").0
    }
}

/// Population MI for the closed-form cases λ = 0 and λ = 1, `None` otherwise.
pub fn expected_mi(params: &SynthParams) -> Option<f64> {
    if params.mixing_weight == 0.0 {
        Some(0.0)
    } else if params.mixing_weight == 1.0 {
        entropy(&params.gender_probs).ok()
    } else {
        None
    }
}

pub fn generate(params: &SynthParams, seed: u64) -> Result<SynthCorpus, InvalidParams> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gender_dist = WeightedIndex::new(&params.gender_probs).map_err(|e| InvalidParams(e.to_string()))?;
    let genders: Vec<usize> = (0..params.n_noun_types).map(|_| gender_dist.sample(&mut rng)).collect();

    // every noun type occurs at least once; the rest follow Zipf over ranks
    let mut freq = vec![1u64; params.n_noun_types];
    let zipf = Zipf::new(params.n_noun_types as f64, params.zipf_exponent).map_err(|e| InvalidParams(e.to_string()))?;
    for _ in params.n_noun_types..params.tokens {
        let rank = zipf.sample(&mut rng) as usize;
        freq[rank.clamp(1, params.n_noun_types) - 1] += 1;
    }

    let shared = Uniform::new(0, params.n_partner_types).unwrap();
    let blocks: Vec<Uniform<usize>> = (0..params.gender_probs.len())
        .map(|g| {
            let b = params.block(g);
            Uniform::new(b.start, b.end).unwrap()
        })
        .collect();
    const CASES: [Case; 4] = [Case::Nom, Case::Acc, Case::Gen, Case::Dat];

    let mut pairs = Vec::with_capacity(params.tokens);
    for (i, (&g, &n)) in genders.iter().zip(&freq).enumerate() {
        let noun = params.noun_lemma(i);
        for _ in 0..n {
            let partner = if rng.random_bool(params.mixing_weight) {
                blocks[g].sample(&mut rng)
            } else {
                shared.sample(&mut rng)
            };
            let number = if rng.random_bool(0.5) { Number::Sing } else { Number::Plur };
            let case = params.with_case.then(|| CASES[rng.random_range(0..CASES.len())].clone());
            pairs.push(DependencyPair {
                noun_lemma: noun.clone(),
                noun_gender: Gender::ALL[g],
                noun_number: Some(number),
                noun_case: case,
                partner_lemma: params.partner_lemma(partner),
                relation: params.relation,
            });
        }
    }
    pairs.shuffle(&mut rng);

    let assignment = GenderAssignment {
        entries: genders.iter().enumerate().map(|(i, &g)| (params.noun_lemma(i), Gender::ALL[g])).collect(),
        dropped: Default::default(),
    };
    let truth = GroundTruth {
        params: params.clone(),
        seed,
        expected_mi: expected_mi(params),
        noun_tokens: freq.iter().enumerate().map(|(i, &n)| (params.noun_lemma(i), n)).collect(),
    };
    Ok(SynthCorpus { pairs, assignment, truth })
}

/// Renders one pair as a minimal two-token sentence: noun + adjective for
/// `amod`, verb + noun for the verb relations.
pub fn pair_sentence(pair: &DependencyPair, id: usize) -> Sentence {
    let noun = |tid: usize, head: usize, deprel: &str| Token {
        id: tid,
        form: pair.noun_lemma.clone(),
        lemma: pair.noun_lemma.clone(),
        upos: "NOUN".into(),
        feats: MorphFeatures {
            gender: Some(pair.noun_gender),
            number: pair.noun_number,
            case: pair.noun_case.clone(),
        },
        head,
        deprel: deprel.into(),
    };
    let partner = |tid: usize, head: usize, deprel: &str| Token {
        id: tid,
        form: pair.partner_lemma.clone(),
        lemma: pair.partner_lemma.clone(),
        upos: pair.relation.partner_upos().into(),
        feats: MorphFeatures::default(),
        head,
        deprel: deprel.into(),
    };
    let tokens = match pair.relation {
        Relation::Amod => vec![noun(1, 0, "root"), partner(2, 1, "amod")],
        Relation::Dobj => vec![partner(1, 0, "root"), noun(2, 1, "obj")],
        Relation::Iobj => vec![partner(1, 0, "root"), noun(2, 1, "iobj")],
        Relation::Nsubj => vec![partner(1, 0, "root"), noun(2, 1, "nsubj")],
    };
    Sentence {
        source_id: Some(format!("synth-{id}")),
        tokens,
    }
}

/// Writes the pairs as CoNLL-U, one sentence per pair.
pub fn write_conllu<'a, W: Write>(pairs: impl IntoIterator<Item = &'a DependencyPair>, out: &mut W) -> io::Result<()> {
    for (i, p) in pairs.into_iter().enumerate() {
        pair_sentence(p, i + 1).write_conllu(out)?;
    }
    Ok(())
}
