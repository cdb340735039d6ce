//! Coverage filtering and per-type gender assignment on the adjective
//! pairs of a corpus.
//!
//! ```text
//! cargo run --example coverage_filter -- [FILE.conllu] [COVERAGE]
//! ```

use std::fs::File;
use std::io::BufReader;

use gendermi::conllu::{parse_conllu, ParseMode};
use gendermi::extract::{extract_pairs, ExtractOptions};
use gendermi::filter::{apply_retention, assign_type_gender, count_lemmata, coverage_filter};
use gendermi::Relation;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let corpus = args
        .first()
        .cloned()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/mini.conllu").into());
    let coverage: f64 = args.get(1).map(|c| c.parse()).transpose()?.unwrap_or(0.9);

    let mut pairs = Vec::new();
    for s in parse_conllu(BufReader::new(File::open(corpus)?), ParseMode::Lenient) {
        pairs.extend(extract_pairs(&s?, Relation::Amod, &ExtractOptions::default()).pairs);
    }

    let partner_counts = count_lemmata(pairs.iter().map(|p| p.partner_lemma.as_str()));
    let partners = coverage_filter(&partner_counts, coverage)?;
    let noun_counts = count_lemmata(pairs.iter().filter(|p| partners.contains(&p.partner_lemma)).map(|p| p.noun_lemma.as_str()));
    let nouns = coverage_filter(&noun_counts, coverage)?;
    println!("adjectives: {} of {} kept at coverage {coverage}", partners.len(), partner_counts.len());
    println!("nouns:      {} of {} kept", nouns.len(), noun_counts.len());

    let kept = apply_retention(pairs.iter(), &partners, &nouns, |p| &p.partner_lemma, |p| &p.noun_lemma);
    println!("pairs:      {} of {} kept", kept.len(), pairs.len());

    let genders = assign_type_gender(kept.iter().map(|p| (p.noun_lemma.as_str(), p.noun_gender)));
    for (noun, gender) in &genders.entries {
        println!("    {noun:<12} {gender}");
    }
    if !genders.dropped.is_empty() {
        println!("dropped (tied gender): {:?}", genders.dropped);
    }
    Ok(())
}
