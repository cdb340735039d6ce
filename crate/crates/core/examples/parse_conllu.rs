//! Streams a CoNLL-U file and prints one line per sentence.
//!
//! ```text
//! cargo run --example parse_conllu -- [FILE.conllu] [--strict]
//! ```

use std::fs::File;
use std::io::BufReader;

use gendermi::conllu::{ParseMode, Reader};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args: Vec<String> = std::env::args().skip(1).collect();
    let strict = args.iter().any(|a| a == "--strict");
    args.retain(|a| a != "--strict");
    let path = args
        .pop()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/mini.conllu").into());
    let mode = if strict { ParseMode::Strict } else { ParseMode::Lenient };

    let mut reader = Reader::new(BufReader::new(File::open(&path)?), mode);
    let mut sentences = 0;
    for sentence in reader.by_ref() {
        let sentence = sentence?;
        sentences += 1;
        if sentences <= 5 {
            let nouns: Vec<String> = sentence
                .tokens
                .iter()
                .filter(|t| t.upos == "NOUN")
                .map(|t| match t.feats.gender {
                    Some(g) => format!("{}[{g}]", t.lemma),
                    None => t.lemma.clone(),
                })
                .collect();
            println!("{:<10} {} tokens, nouns: {}", sentence.source_id.as_deref().unwrap_or("-"), sentence.len(), nouns.join(" "));
        }
    }
    println!("{sentences} sentences read, {} skipped", reader.skipped());
    Ok(())
}
