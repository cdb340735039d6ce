//! Noun–adjective / noun–verb pair extraction, noun feature observations and
//! animacy partitioning.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conllu::{Case, Gender, Number, Sentence, Token};

/// The four arc types the analysis looks at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Amod,
    Dobj,
    Iobj,
    Nsubj,
}

impl Relation {
    pub const ALL: [Relation; 4] = [Relation::Amod, Relation::Dobj, Relation::Iobj, Relation::Nsubj];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Amod => "amod",
            Relation::Dobj => "dobj",
            Relation::Iobj => "iobj",
            Relation::Nsubj => "nsubj",
        }
    }

    pub fn is_verbal(self) -> bool {
        self != Relation::Amod
    }

    /// UPOS required on the partner (non-noun) side of the arc.
    pub fn partner_upos(self) -> &'static str {
        match self {
            Relation::Amod => "ADJ",
            _ => "VERB",
        }
    }

    /// Maps a DEPREL label onto a relation. Subtypes (`nsubj:pass`) are
    /// stripped; UD v1 `dobj` and v2 `obj` both map to [`Relation::Dobj`], and
    /// v1 `nsubjpass` is treated like `nsubj:pass`.
    pub fn from_deprel(label: &str, include_passive_subjects: bool) -> Option<Relation> {
        let (base, subtype) = match label.split_once(':') {
            Some((base, sub)) => (base, Some(sub)),
            None => (label, None),
        };
        match base {
            "amod" => Some(Relation::Amod),
            "obj" | "dobj" => Some(Relation::Dobj),
            "iobj" => Some(Relation::Iobj),
            "nsubj" if subtype == Some("pass") && !include_passive_subjects => None,
            "nsubj" => Some(Relation::Nsubj),
            "nsubjpass" if include_passive_subjects => Some(Relation::Nsubj),
            _ => None,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "amod" => Ok(Relation::Amod),
            "dobj" | "obj" => Ok(Relation::Dobj),
            "iobj" => Ok(Relation::Iobj),
            "nsubj" => Ok(Relation::Nsubj),
            other => Err(format!("unknown relation {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DependencyPair {
    pub noun_lemma: String,
    pub noun_gender: Gender,
    pub noun_number: Option<Number>,
    pub noun_case: Option<Case>,
    pub partner_lemma: String,
    pub relation: Relation,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NounFeatureObservation {
    pub noun_lemma: String,
    pub gender: Gender,
    pub case: Option<Case>,
    pub number: Option<Number>,
}

/// Records that carry a noun lemma, so they can be routed by animacy and
/// filtered by noun frequency.
pub trait NounRecord {
    fn noun_lemma(&self) -> &str;
    fn gender(&self) -> Gender;
}

impl NounRecord for DependencyPair {
    fn noun_lemma(&self) -> &str {
        &self.noun_lemma
    }
    fn gender(&self) -> Gender {
        self.noun_gender
    }
}

impl NounRecord for NounFeatureObservation {
    fn noun_lemma(&self) -> &str {
        &self.noun_lemma
    }
    fn gender(&self) -> Gender {
        self.gender
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractOptions {
    /// Treat PROPN like NOUN on the noun side.
    pub include_propn: bool,
    /// Count `nsubj:pass` / `nsubjpass` arcs as subjects.
    pub include_passive_subjects: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            include_propn: false,
            include_passive_subjects: true,
        }
    }
}

impl ExtractOptions {
    fn is_noun(&self, token: &Token) -> bool {
        token.upos == "NOUN" || (self.include_propn && token.upos == "PROPN")
    }
}

/// Pairs found in one sentence plus the number of otherwise valid arcs whose
/// noun had no gender annotation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PairExtraction {
    pub pairs: Vec<DependencyPair>,
    pub ungendered: usize,
}

/// One pair per matching arc. For `amod` the dependent is the adjective and
/// the head the noun; for the verb relations the dependent is the noun and
/// the head the verb.
pub fn extract_pairs(sentence: &Sentence, relation: Relation, opts: &ExtractOptions) -> PairExtraction {
    let mut out = PairExtraction::default();
    for dependent in &sentence.tokens {
        if Relation::from_deprel(&dependent.deprel, opts.include_passive_subjects) != Some(relation) {
            continue;
        }
        let Some(head) = sentence.head_of(dependent) else {
            continue;
        };
        let (noun, partner) = if relation.is_verbal() {
            (dependent, head)
        } else {
            (head, dependent)
        };
        if !opts.is_noun(noun) || partner.upos != relation.partner_upos() {
            continue;
        }
        let Some(gender) = noun.feats.gender else {
            out.ungendered += 1;
            continue;
        };
        out.pairs.push(DependencyPair {
            noun_lemma: noun.lemma.clone(),
            noun_gender: gender,
            noun_number: noun.feats.number,
            noun_case: noun.feats.case.clone(),
            partner_lemma: partner.lemma.clone(),
            relation,
        });
    }
    out
}

/// One observation per gender-marked noun token, whatever its syntactic role.
pub fn extract_noun_observations(sentence: &Sentence, opts: &ExtractOptions) -> Vec<NounFeatureObservation> {
    sentence
        .tokens
        .iter()
        .filter(|t| opts.is_noun(t))
        .filter_map(|t| {
            Some(NounFeatureObservation {
                noun_lemma: t.lemma.clone(),
                gender: t.feats.gender?,
                case: t.feats.case.clone(),
                number: t.feats.number,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Animacy {
    Animate,
    Inanimate,
}

impl Animacy {
    pub fn as_str(self) -> &'static str {
        match self {
            Animacy::Animate => "animate",
            Animacy::Inanimate => "inanimate",
        }
    }
}

impl fmt::Display for Animacy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Animacy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "animate" => Ok(Animacy::Animate),
            "inanimate" => Ok(Animacy::Inanimate),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: unknown animacy class {label:?} (expected \"animate\" or \"inanimate\")")]
    BadClassLabel { line: usize, label: String },
    #[error("line {line}: {lemma:?} already listed with the other animacy class")]
    ConflictingDuplicate { line: usize, lemma: String },
    #[error("line {line}: expected `lemma<TAB>class`")]
    BadRecord { line: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Noun lemma → animacy class. Lemmata not listed have no class.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnimacyLexicon {
    entries: HashMap<String, Animacy>,
}

impl AnimacyLexicon {
    pub fn load<R: BufRead>(input: R) -> Result<AnimacyLexicon, LexiconError> {
        let mut entries = HashMap::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line_no = i + 1;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (lemma, label) = line.split_once('\t').ok_or(LexiconError::BadRecord { line: line_no })?;
            if lemma.is_empty() {
                return Err(LexiconError::BadRecord { line: line_no });
            }
            let class: Animacy = label.parse().map_err(|label| LexiconError::BadClassLabel { line: line_no, label })?;
            match entries.insert(lemma.to_string(), class) {
                Some(prev) if prev != class => {
                    return Err(LexiconError::ConflictingDuplicate {
                        line: line_no,
                        lemma: lemma.to_string(),
                    })
                }
                _ => {}
            }
        }
        Ok(AnimacyLexicon { entries })
    }

    pub fn lookup(&self, lemma: &str) -> Option<Animacy> {
        self.entries.get(lemma).copied()
    }

    pub fn insert(&mut self, lemma: impl Into<String>, class: Animacy) -> Option<Animacy> {
        self.entries.insert(lemma.into(), class)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes `lemma TAB class LF` records, sorted by lemma.
    pub fn write<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let mut rows: Vec<_> = self.entries.iter().collect();
        rows.sort();
        for (lemma, class) in rows {
            writeln!(out, "{lemma}\t{class}")?;
        }
        Ok(())
    }
}

impl FromIterator<(String, Animacy)> for AnimacyLexicon {
    fn from_iter<T: IntoIterator<Item = (String, Animacy)>>(iter: T) -> Self {
        AnimacyLexicon {
            entries: iter.into_iter().collect(),
        }
    }
}

pub fn load_lexicon<R: BufRead>(input: R) -> Result<AnimacyLexicon, LexiconError> {
    AnimacyLexicon::load(input)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnimacyPartition<T> {
    pub animate: Vec<T>,
    pub inanimate: Vec<T>,
    /// Records whose noun is not in the lexicon.
    pub discarded: usize,
}

impl<T> AnimacyPartition<T> {
    pub fn class(&self, class: Animacy) -> &[T] {
        match class {
            Animacy::Animate => &self.animate,
            Animacy::Inanimate => &self.inanimate,
        }
    }
}

/// Routes records by the lexicon class of their noun. Input order is kept
/// within each class.
pub fn partition_by_animacy<T: NounRecord>(records: impl IntoIterator<Item = T>, lexicon: &AnimacyLexicon) -> AnimacyPartition<T> {
    let mut part = AnimacyPartition {
        animate: Vec::new(),
        inanimate: Vec::new(),
        discarded: 0,
    };
    for r in records {
        match lexicon.lookup(r.noun_lemma()) {
            Some(Animacy::Animate) => part.animate.push(r),
            Some(Animacy::Inanimate) => part.inanimate.push(r),
            None => part.discarded += 1,
        }
    }
    part
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::{ParseMode, Reader};

    const BRIDGE: &str = "1\tYo\tyo\tPRON\t_\tNumber=Sing|Person=1\t2\tnsubj\t_\t_\n\
2\tquiero\tquerer\tVERB\t_\tMood=Ind|Number=Sing\t0\troot\t_\t_\n\
3\tcruzar\tcruzar\tVERB\t_\tVerbForm=Inf\t2\txcomp\t_\t_\n\
4\tun\tuno\tDET\t_\tGender=Masc|Number=Sing\t5\tdet\t_\t_\n\
5\tpuente\tpuente\tNOUN\t_\tGender=Masc|Number=Sing\t3\tobj\t_\t_\n\
6\trobusto\trobusto\tADJ\t_\tGender=Masc|Number=Sing\t5\tamod\t_\t_\n\n";

    fn sentence(text: &str) -> Sentence {
        Reader::new(text.as_bytes(), ParseMode::Strict).next().unwrap().unwrap()
    }

    fn pair(noun: &str, partner: &str, relation: Relation) -> DependencyPair {
        DependencyPair {
            noun_lemma: noun.into(),
            noun_gender: Gender::Masc,
            noun_number: Some(Number::Sing),
            noun_case: None,
            partner_lemma: partner.into(),
            relation,
        }
    }

    #[test]
    fn bridge_pairs() {
        let s = sentence(BRIDGE);
        let opts = ExtractOptions::default();
        assert_eq!(extract_pairs(&s, Relation::Amod, &opts).pairs, vec![pair("puente", "robusto", Relation::Amod)]);
        assert_eq!(extract_pairs(&s, Relation::Dobj, &opts).pairs, vec![pair("puente", "cruzar", Relation::Dobj)]);
        assert!(extract_pairs(&s, Relation::Iobj, &opts).pairs.is_empty());
        // "yo" is a PRON subject, not a noun
        assert!(extract_pairs(&s, Relation::Nsubj, &opts).pairs.is_empty());
    }

    #[test]
    fn bridge_observations() {
        let obs = extract_noun_observations(&sentence(BRIDGE), &ExtractOptions::default());
        assert_eq!(
            obs,
            vec![NounFeatureObservation {
                noun_lemma: "puente".into(),
                gender: Gender::Masc,
                case: None,
                number: Some(Number::Sing)
            }]
        );
    }

    #[test]
    fn german_genitive_observation() {
        let s = sentence("1\tder\tder\tDET\t_\tCase=Gen|Gender=Fem|Number=Sing\t2\tdet\t_\t_\n2\tGabel\tGabel\tNOUN\t_\tCase=Gen|Gender=Fem|Number=Sing\t0\troot\t_\t_\n\n");
        let obs = extract_noun_observations(&s, &ExtractOptions::default());
        assert_eq!(obs.len(), 1);
        assert_eq!(obs[0].gender, Gender::Fem);
        assert_eq!(obs[0].case, Some(Case::Gen));
        assert_eq!(obs[0].number, Some(Number::Sing));
        let no_nouns = sentence("1\tja\tja\tINTJ\t_\t_\t0\troot\t_\t_\n\n");
        assert!(extract_noun_observations(&no_nouns, &ExtractOptions::default()).is_empty());
    }

    #[test]
    fn ungendered_nouns_are_counted() {
        let s = sentence("1\tcasa\tcasa\tNOUN\t_\tNumber=Sing\t0\troot\t_\t_\n2\tbonita\tbonito\tADJ\t_\t_\t1\tamod\t_\t_\n\n");
        let ex = extract_pairs(&s, Relation::Amod, &ExtractOptions::default());
        assert!(ex.pairs.is_empty());
        assert_eq!(ex.ungendered, 1);
    }

    #[test]
    fn subtype_and_v1_labels() {
        assert_eq!(Relation::from_deprel("nsubj:pass", true), Some(Relation::Nsubj));
        assert_eq!(Relation::from_deprel("nsubj:pass", false), None);
        assert_eq!(Relation::from_deprel("nsubjpass", true), Some(Relation::Nsubj));
        assert_eq!(Relation::from_deprel("nsubjpass", false), None);
        assert_eq!(Relation::from_deprel("dobj", true), Some(Relation::Dobj));
        assert_eq!(Relation::from_deprel("obj", true), Some(Relation::Dobj));
        assert_eq!(Relation::from_deprel("amod:att", true), Some(Relation::Amod));
        assert_eq!(Relation::from_deprel("obl", true), None);
    }

    #[test]
    fn propn_gate() {
        let s = sentence("1\tvio\tver\tVERB\t_\t_\t0\troot\t_\t_\n2\tMaría\tMaría\tPROPN\t_\tGender=Fem\t1\tnsubj\t_\t_\n\n");
        assert!(extract_pairs(&s, Relation::Nsubj, &ExtractOptions::default()).pairs.is_empty());
        let opts = ExtractOptions { include_propn: true, ..Default::default() };
        assert_eq!(extract_pairs(&s, Relation::Nsubj, &opts).pairs.len(), 1);
    }

    #[test]
    fn lexicon_loading() {
        let lex = load_lexicon("puente\tinanimate\nChef\tanimate\n".as_bytes()).unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.lookup("Chef"), Some(Animacy::Animate));
        assert_eq!(lex.lookup("Xyzzy"), None);

        let lex = load_lexicon("# comment\nBrücke\tinanimate\nBrücke\tinanimate\n".as_bytes()).unwrap();
        assert_eq!(lex.lookup("Brücke"), Some(Animacy::Inanimate));
        assert_eq!(lex.len(), 1);
    }

    #[test]
    fn lexicon_errors() {
        let err = load_lexicon("a\tanimate\nb\tplant\n".as_bytes()).unwrap_err();
        assert!(matches!(err, LexiconError::BadClassLabel { line: 2, .. }));
        let err = load_lexicon("a\tanimate\n\na\tinanimate\n".as_bytes()).unwrap_err();
        assert!(matches!(err, LexiconError::ConflictingDuplicate { line: 3, .. }));
        let err = load_lexicon("no tab here\n".as_bytes()).unwrap_err();
        assert!(matches!(err, LexiconError::BadRecord { line: 1 }));
    }

    #[test]
    fn lexicon_write_round_trip() {
        let lex: AnimacyLexicon = [("b".to_string(), Animacy::Animate), ("a".to_string(), Animacy::Inanimate)].into_iter().collect();
        let mut buf = Vec::new();
        lex.write(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "a\tinanimate\nb\tanimate\n");
        assert_eq!(load_lexicon(buf.as_slice()).unwrap(), lex);
    }

    #[test]
    fn partition_routing() {
        let lex = load_lexicon("puente\tinanimate\nChef\tanimate\n".as_bytes()).unwrap();
        let pairs = vec![
            pair("puente", "robusto", Relation::Amod),
            pair("Chef", "nuevo", Relation::Amod),
            pair("Xyzzy", "raro", Relation::Amod),
            pair("puente", "largo", Relation::Amod),
        ];
        let part = partition_by_animacy(pairs.clone(), &lex);
        assert_eq!(part.inanimate, vec![pairs[0].clone(), pairs[3].clone()]);
        assert_eq!(part.animate, vec![pairs[1].clone()]);
        assert_eq!(part.discarded, 1);

        let empty = partition_by_animacy(pairs.clone(), &AnimacyLexicon::default());
        assert_eq!(empty.discarded, 4);
        assert!(empty.animate.is_empty() && empty.inanimate.is_empty());

        let only = partition_by_animacy(vec![pairs[0].clone()], &lex);
        assert!(only.animate.is_empty());
        assert_eq!(only.inanimate.len(), 1);
    }
}
