//! Command-line front end for [`gendermi::pipeline::run`].

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::Parser;

use gendermi::pipeline::{self, Baseline, PipelineConfig, EXIT_DEGENERATE, WORKERS_ENV};
use gendermi::{Animacy, ParseMode, Relation};
use gendermi::extract::ExtractOptions;
use gendermi::perm::PermutationLevel;

#[derive(Parser, Debug)]
#[command(version, about = "Mutual information between noun gender and co-occurring adjectives/verbs")]
struct Cli {
    /// Language tag recorded in the outputs (e.g. "de").
    #[arg(long = "lang")]
    language: String,
    /// CoNLL-U input file; repeat for several files.
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    /// Animacy lexicon (lemma TAB animate|inanimate).
    #[arg(long)]
    lexicon: PathBuf,
    /// Comma-separated subset of amod,dobj,iobj,nsubj, or "none".
    #[arg(long, default_value = "amod,dobj,iobj,nsubj")]
    relations: String,
    /// Comma-separated subset of case,number, or "none".
    #[arg(long, default_value = "case,number")]
    baselines: String,
    /// Comma-separated subset of inanimate,animate.
    #[arg(long, default_value = "inanimate,animate")]
    animacy: String,
    #[arg(long, default_value_t = 0.90)]
    coverage: f64,
    #[arg(long, default_value_t = 10_000)]
    permutations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Abort on the first malformed sentence instead of skipping it.
    #[arg(long)]
    strict: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, env = WORKERS_ENV, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Treat PROPN tokens as nouns.
    #[arg(long)]
    include_propn: bool,
    /// Ignore nsubj:pass arcs.
    #[arg(long)]
    exclude_passive_subjects: bool,
    /// Permute genders over pair tokens instead of noun types.
    #[arg(long)]
    token_level: bool,
}

fn parse_set<T: FromStr<Err = String> + Ord>(list: &str) -> Result<BTreeSet<T>, String> {
    if list.trim().eq_ignore_ascii_case("none") || list.trim().is_empty() {
        return Ok(BTreeSet::new());
    }
    list.split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("invalid list entry {:?}", s.trim())))
        .collect()
}

fn config(cli: Cli) -> Result<PipelineConfig, String> {
    Ok(PipelineConfig {
        language: cli.language,
        inputs: cli.inputs,
        lexicon: cli.lexicon,
        relations: parse_set::<Relation>(&cli.relations)?,
        baselines: parse_set::<Baseline>(&cli.baselines)?,
        animacy: parse_set::<Animacy>(&cli.animacy)?,
        coverage: cli.coverage,
        n_permutations: cli.permutations,
        seed: cli.seed,
        parse_mode: if cli.strict { ParseMode::Strict } else { ParseMode::Lenient },
        workers: cli.workers,
        out_dir: cli.out,
        extract: ExtractOptions {
            include_propn: cli.include_propn,
            include_passive_subjects: !cli.exclude_passive_subjects,
        },
        permutation_level: if cli.token_level { PermutationLevel::Token } else { PermutationLevel::Type },
    })
}

fn main() -> ExitCode {
    let config = match config(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pipeline::run(&config) {
        Ok(result) => {
            print!("{}", pipeline::emit_mi_table(&result));
            if result.is_degenerate() {
                eprintln!("every selected cell is N/A");
                return ExitCode::from(EXIT_DEGENERATE as u8);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
