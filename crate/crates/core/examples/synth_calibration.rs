//! Rejection rate of the permutation test on null corpora, and the MI of a
//! fully dependent corpus against its closed form. With `--emit DIR` it
//! also writes one planted corpus as CoNLL-U plus a lexicon, ready for the
//! `gendermi` binary.
//!
//! ```text
//! cargo run --release --example synth_calibration -- [RUNS] [--emit DIR]
//! ```

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use rayon::prelude::*;

use gendermi::info::{entropy_of_counts, mutual_information};
use gendermi::perm::PermutationTest;
use gendermi::synth::{self, expected_mi, SynthParams};
use gendermi::Animacy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let mut runs = 100u64;
    let mut emit = None;
    while let Some(a) = args.next() {
        match a.as_str() {
            "--emit" => emit = args.next().map(PathBuf::from),
            other => runs = other.parse()?,
        }
    }

    let null = SynthParams::default();
    let rejected: usize = (0..runs)
        .into_par_iter()
        .map(|seed| {
            let set = synth::generate(&null, seed).unwrap().profiles();
            let r = PermutationTest::new(1_000, seed).workers(1).run(&set).unwrap();
            usize::from(r.significant)
        })
        .sum();
    println!("null: {rejected}/{runs} rejected at 0.05 ({:.3})", rejected as f64 / runs as f64);

    let full = SynthParams { mixing_weight: 1.0, gender_probs: vec![0.5, 0.3, 0.2], ..Default::default() };
    let corpus = synth::generate(&full, 0)?;
    let table = corpus.profiles().table()?;
    println!(
        "lambda=1: MI = {:.4} bits, H(gender) over tokens = {:.4}, population value {:.4}",
        mutual_information(&table),
        entropy_of_counts(&table.row_sums()),
        expected_mi(&full).unwrap_or(f64::NAN)
    );

    if let Some(dir) = emit {
        fs::create_dir_all(&dir)?;
        let planted = SynthParams { mixing_weight: 0.3, with_case: true, ..Default::default() };
        let corpus = synth::generate(&planted, 0)?;
        synth::write_conllu(&corpus.pairs, &mut BufWriter::new(File::create(dir.join("synthetic.conllu"))?))?;
        corpus.lexicon(Animacy::Inanimate).write(&mut File::create(dir.join("synthetic.lexicon"))?)?;
        println!("wrote {} pairs to {}", corpus.pairs.len(), dir.join("synthetic.conllu").display());
    }
    Ok(())
}
