//! Lists the (noun, partner) pairs of every relation in a CoNLL-U file,
//! split by animacy class.
//!
//! ```text
//! cargo run --example extract_pairs -- [FILE.conllu] [LEXICON.tsv]
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;

use gendermi::conllu::{parse_conllu, ParseMode};
use gendermi::extract::{extract_pairs, load_lexicon, partition_by_animacy, ExtractOptions};
use gendermi::Relation;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let corpus = args.first().cloned().unwrap_or(format!("{FIXTURES}/bridge.conllu"));
    let lexicon = args.get(1).cloned().unwrap_or(format!("{FIXTURES}/mini.lexicon"));
    let lexicon = load_lexicon(BufReader::new(File::open(lexicon)?))?;
    let opts = ExtractOptions::default();

    let sentences = parse_conllu(BufReader::new(File::open(&corpus)?), ParseMode::Lenient).collect::<Result<Vec<_>, _>>()?;
    for relation in Relation::ALL {
        let mut pairs = Vec::new();
        let mut ungendered = 0;
        for s in &sentences {
            let found = extract_pairs(s, relation, &opts);
            pairs.extend(found.pairs);
            ungendered += found.ungendered;
        }
        let split = partition_by_animacy(pairs, &lexicon);
        println!(
            "{relation}: {} inanimate, {} animate, {} not in lexicon, {ungendered} without gender",
            split.inanimate.len(),
            split.animate.len(),
            split.discarded
        );
        let mut top: BTreeMap<(&str, &str, String), usize> = BTreeMap::new();
        for p in split.inanimate.iter().chain(&split.animate) {
            *top.entry((&p.noun_lemma, &p.partner_lemma, p.noun_gender.to_string())).or_default() += 1;
        }
        for ((noun, partner, gender), n) in top.iter().take(4) {
            println!("    {noun} ({gender}) - {partner}  x{n}");
        }
    }
    Ok(())
}
