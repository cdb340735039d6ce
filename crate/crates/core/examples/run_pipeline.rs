//! Full analysis of the bundled mini corpus, written to `OUT_DIR`
//! (default `target/mini-out`).
//!
//! ```text
//! cargo run --release --example run_pipeline -- [OUT_DIR]
//! ```

use std::path::PathBuf;

use gendermi::pipeline::{self, PipelineConfig};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out_dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "target/mini-out".into());
    let config = PipelineConfig {
        language: "es".into(),
        inputs: vec![format!("{FIXTURES}/mini.conllu").into()],
        lexicon: format!("{FIXTURES}/mini.lexicon").into(),
        seed: 42,
        out_dir: out_dir.clone(),
        ..Default::default()
    };
    let result = pipeline::run(&config)?;

    let audit = &result.audit.corpus;
    println!("{} sentences ({} skipped)", audit.sentences, audit.skipped_sentences);
    print!("{}", pipeline::emit_mi_table(&result));
    for (path, _) in pipeline::render_outputs(&result) {
        println!("  {}", out_dir.join(path).display());
    }
    Ok(())
}
