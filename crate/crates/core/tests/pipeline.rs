use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use gendermi::pipeline::{self, AnalysisResult, Baseline, CellOutcome, PipelineConfig, PipelineError, RetainedSets, Variable};
use gendermi::{Animacy, ParseMode, Relation};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn fixture(name: &str) -> PathBuf {
    Path::new(FIXTURES).join(name)
}

fn mini_config(out: &Path) -> PipelineConfig {
    PipelineConfig {
        language: "es".into(),
        inputs: vec![fixture("mini.conllu")],
        lexicon: fixture("mini.lexicon"),
        n_permutations: 500,
        seed: 42,
        workers: 1,
        out_dir: out.to_path_buf(),
        ..Default::default()
    }
}

fn run_mini(tweak: impl FnOnce(&mut PipelineConfig)) -> (tempfile::TempDir, AnalysisResult) {
    let dir = tempfile::tempdir().unwrap();
    let mut config = mini_config(&dir.path().join("out"));
    tweak(&mut config);
    let result = pipeline::run(&config).unwrap();
    (dir, result)
}

/// Minimal independent reading of the fixture: (deprel, dependent, head)
/// triples of every sentence whose heads are all in range.
struct Arc {
    deprel: String,
    dep_lemma: String,
    dep_upos: String,
    dep_feats: String,
    head_lemma: String,
    head_upos: String,
    head_feats: String,
}

fn naive_arcs(text: &str) -> Vec<Arc> {
    let mut arcs = Vec::new();
    for block in text.split("\n\n") {
        let rows: Vec<Vec<&str>> = block
            .lines()
            .filter(|l| !l.starts_with('#') && !l.is_empty())
            .map(|l| l.split('\t').collect())
            .filter(|cols: &Vec<&str>| !cols[0].contains('-') && !cols[0].contains('.'))
            .collect();
        let len = rows.len();
        if rows.iter().any(|r| r[6].parse::<usize>().unwrap() > len) {
            continue;
        }
        for r in &rows {
            let head: usize = r[6].parse().unwrap();
            if head == 0 {
                continue;
            }
            let h = &rows[head - 1];
            arcs.push(Arc {
                deprel: r[7].split(':').next().unwrap().to_string(),
                dep_lemma: r[2].into(),
                dep_upos: r[3].into(),
                dep_feats: r[5].into(),
                head_lemma: h[2].into(),
                head_upos: h[3].into(),
                head_feats: h[5].into(),
            });
        }
    }
    arcs
}

fn has_gender(feats: &str) -> bool {
    feats.split('|').any(|f| f.starts_with("Gender="))
}

/// (noun, partner) tokens of one relation.
fn naive_pairs(arcs: &[Arc], relation: Relation) -> Vec<(String, String)> {
    arcs.iter()
        .filter_map(|a| match relation {
            Relation::Amod if a.deprel == "amod" && a.dep_upos == "ADJ" && a.head_upos == "NOUN" && has_gender(&a.head_feats) => {
                Some((a.head_lemma.clone(), a.dep_lemma.clone()))
            }
            Relation::Amod => None,
            verbal => {
                let labels: &[&str] = match verbal {
                    Relation::Dobj => &["obj", "dobj"],
                    Relation::Iobj => &["iobj"],
                    _ => &["nsubj", "nsubjpass"],
                };
                (labels.contains(&a.deprel.as_str()) && a.dep_upos == "NOUN" && a.head_upos == "VERB" && has_gender(&a.dep_feats))
                    .then(|| (a.dep_lemma.clone(), a.head_lemma.clone()))
            }
        })
        .collect()
}

fn read_counts(path: &Path) -> BTreeMap<(String, String), Vec<String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["animacy", "variable", "status", "tokens", "types", "noun_types", "partner_types"]
    );
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            ((r[0].to_string(), r[1].to_string()), r.iter().skip(2).map(str::to_string).collect())
        })
        .collect()
}

#[test]
fn counts_match_a_naive_recount() {
    let (dir, _) = run_mini(|_| {});
    let out = dir.path().join("out");
    let retained: RetainedSets = serde_json::from_slice(&fs::read(out.join("retained.json")).unwrap()).unwrap();
    let counts = read_counts(&out.join("counts.csv"));
    let arcs = naive_arcs(&fs::read_to_string(fixture("mini.conllu")).unwrap());

    for relation in Relation::ALL {
        let pairs = naive_pairs(&arcs, relation);
        for class in [Animacy::Inanimate, Animacy::Animate] {
            let nouns = &retained.nouns[relation.as_str()][&class];
            let partners = &retained.partners[&relation];
            let kept: Vec<&(String, String)> =
                pairs.iter().filter(|(n, p)| nouns.contains(n) && partners.contains(p)).collect();
            let types: BTreeSet<_> = kept.iter().collect();
            let noun_types: BTreeSet<_> = kept.iter().map(|p| &p.0).collect();
            let partner_types: BTreeSet<_> = kept.iter().map(|p| &p.1).collect();
            let expected = vec![
                "ok".to_string(),
                kept.len().to_string(),
                types.len().to_string(),
                noun_types.len().to_string(),
                partner_types.len().to_string(),
            ];
            assert_eq!(counts[&(class.to_string(), relation.to_string())], expected, "{class}/{relation}");
        }
    }
}

#[test]
fn counts_without_cells_are_header_only() {
    let (_, mut result) = run_mini(|c| {
        c.relations.clear();
        c.baselines = [Baseline::Number].into_iter().collect();
    });
    assert!(result.cells.iter().all(|c| c.variable == Variable::Number));
    result.cells.clear();
    assert_eq!(pipeline::emit_counts(&result), "animacy,variable,status,tokens,types,noun_types,partner_types\n");
}

#[test]
fn counts_of_a_constructed_corpus() {
    let params = gendermi::synth::SynthParams {
        n_noun_types: 10,
        n_partner_types: 5,
        tokens: 1_000,
        mixing_weight: 0.5,
        ..Default::default()
    };
    let corpus = gendermi::synth::generate(&params, 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut text = Vec::new();
    gendermi::synth::write_conllu(&corpus.pairs, &mut text).unwrap();
    fs::write(dir.path().join("c.conllu"), text).unwrap();
    let mut lex = Vec::new();
    corpus.lexicon(Animacy::Inanimate).write(&mut lex).unwrap();
    fs::write(dir.path().join("c.lexicon"), lex).unwrap();

    let config = PipelineConfig {
        language: "synthetic".into(),
        inputs: vec![dir.path().join("c.conllu")],
        lexicon: dir.path().join("c.lexicon"),
        relations: [Relation::Amod].into_iter().collect(),
        baselines: BTreeSet::new(),
        animacy: [Animacy::Inanimate].into_iter().collect(),
        coverage: 1.0,
        n_permutations: 100,
        out_dir: dir.path().join("out"),
        ..Default::default()
    };
    pipeline::run(&config).unwrap();
    let counts = read_counts(&dir.path().join("out/counts.csv"));
    let row = &counts[&("inanimate".to_string(), "amod".to_string())];
    assert_eq!((row[1].as_str(), row[3].as_str(), row[4].as_str()), ("1000", "10", "5"));
}

#[test]
fn stages_run_in_filter_order() {
    let (_, result) = run_mini(|_| {});
    let stages = &result.audit.stages;
    let pos = |name: &str| stages.iter().position(|s| s == name).unwrap_or_else(|| panic!("{name} missing: {stages:?}"));
    for relation in Relation::ALL {
        let r = relation.as_str();
        assert!(pos("ingest") < pos(&format!("extract:{r}")));
        assert!(pos(&format!("extract:{r}")) < pos(&format!("partition:{r}")));
        assert!(pos(&format!("partition:{r}")) < pos(&format!("partner-filter:{r}")));
        for class in ["inanimate", "animate"] {
            assert!(pos(&format!("partner-filter:{r}")) < pos(&format!("noun-filter:{r}:{class}")));
            assert!(pos(&format!("noun-filter:{r}:{class}")) < pos(&format!("gender-assignment:{r}:{class}")));
        }
    }
}

#[test]
fn case_baseline_is_na_without_case_features() {
    let (dir, result) = run_mini(|_| {});
    for class in [Animacy::Inanimate, Animacy::Animate] {
        let cell = result.cell(class, Variable::Case).unwrap();
        match &cell.outcome {
            CellOutcome::NotAvailable { reason } => assert!(reason.contains("case"), "{reason}"),
            other => panic!("expected N/A, got {other:?}"),
        }
        assert!(result.cell(class, Variable::Number).unwrap().analyzed().is_some());
    }
    let table = fs::read_to_string(dir.path().join("out/mi_table.csv")).unwrap();
    let case_row = table.lines().find(|l| l.starts_with("case,")).unwrap();
    assert!(case_row.split(',').skip(1).all(|f| f == "N/A"), "{case_row}");
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("out/results.json")).unwrap()).unwrap();
    let case_cell = json["cells"].as_array().unwrap().iter().find(|c| c["variable"] == "case").unwrap();
    assert_eq!(case_cell["status"], "N/A");
}

#[test]
fn audit_accounts_for_every_arc() {
    let (_, result) = run_mini(|_| {});
    let audit = &result.audit;
    assert_eq!(audit.corpus.sentences, 198);
    assert_eq!(audit.corpus.skipped_sentences, 2);
    let arcs = naive_arcs(&fs::read_to_string(fixture("mini.conllu")).unwrap());
    for (relation, ra) in &audit.relations {
        let class_inputs: usize = ra.classes.values().map(|c| c.input).sum();
        assert_eq!(ra.input_arcs, ra.ungendered + ra.unknown_animacy + ra.class_not_selected + class_inputs);
        assert_eq!(ra.input_arcs, ra.discarded() + ra.retained());
        assert_eq!(ra.input_arcs - ra.ungendered, naive_pairs(&arcs, *relation).len());
        for (class, ca) in &ra.classes {
            assert_eq!(ca.input, ca.partner_filtered + ca.noun_filtered + ca.tied_gender + ca.retained);
            let cell = result.cell(*class, (*relation).into()).unwrap();
            assert_eq!(cell.counts.tokens, ca.retained as u64);
        }
    }
    let ba = audit.baselines.as_ref().unwrap();
    let class_inputs: usize = ba.classes.values().map(|c| c.input).sum();
    assert_eq!(ba.observations, ba.unknown_animacy + ba.class_not_selected + class_inputs);
    for (class, ca) in &ba.classes {
        for baseline in [Baseline::Case, Baseline::Number] {
            assert_eq!(ca.input, ca.noun_filtered + ca.tied_gender + ca.unmarked[&baseline] + ca.retained[&baseline]);
            let cell = result.cell(*class, baseline.into()).unwrap();
            assert_eq!(cell.counts.tokens, ca.retained[&baseline] as u64);
        }
    }
}

#[test]
fn single_relation_runs_only_its_stages() {
    let (dir, result) = run_mini(|c| {
        c.relations = [Relation::Amod].into_iter().collect();
        c.baselines.clear();
    });
    assert!(result.cells.iter().all(|c| c.variable == Variable::Amod));
    assert_eq!(result.cells.len(), 2);
    assert!(result.audit.baselines.is_none());
    assert!(result.audit.stages.iter().all(|s| s == "ingest" || s.contains("amod")), "{:?}", result.audit.stages);
    let mut figures: Vec<String> = fs::read_dir(dir.path().join("out/figures"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    figures.sort();
    assert_eq!(
        figures,
        ["nmi_animate.csv", "nmi_animate.svg", "nmi_inanimate.csv", "nmi_inanimate.svg", "nmi_paired_amod.csv", "nmi_paired_amod.svg"]
    );
    // filtering for another relation cannot change the amod cells
    let (_, full) = run_mini(|_| {});
    for class in [Animacy::Inanimate, Animacy::Animate] {
        assert_eq!(result.cell(class, Variable::Amod), full.cell(class, Variable::Amod));
    }
}

fn attr<'a>(element: &'a str, name: &str) -> Option<&'a str> {
    let key = format!(" {name}=\"");
    let start = element.find(&key)? + key.len();
    Some(&element[start..start + element[start..].find('"')?])
}

/// (group, series) → (value, bar height) for every plotted element.
fn svg_values(svg: &str) -> BTreeMap<(String, String), (String, Option<f64>)> {
    svg.lines()
        .filter_map(|line| {
            let value = attr(line, "data-value")?;
            let height = line.starts_with("<rect").then(|| attr(line, "height").unwrap().parse().unwrap());
            Some(((attr(line, "data-group")?.to_string(), attr(line, "data-series")?.to_string()), (value.to_string(), height)))
        })
        .collect()
}

#[test]
fn figure_csv_matches_svg_values() {
    let (dir, _) = run_mini(|_| {});
    let figures = dir.path().join("out/figures");
    let mut checked = 0;
    for entry in fs::read_dir(&figures).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "csv") {
            let svg = svg_values(&fs::read_to_string(path.with_extension("svg")).unwrap());
            let mut reader = csv::Reader::from_path(&path).unwrap();
            let mut rows = 0;
            for r in reader.records() {
                let r = r.unwrap();
                let (value, _) = &svg[&(r[0].to_string(), r[1].to_string())];
                assert_eq!(value, &r[2]);
                rows += 1;
            }
            assert_eq!(rows, svg.len());
            checked += 1;
        }
    }
    assert_eq!(checked, 5);
}

#[test]
fn stronger_animate_dependence_draws_taller_bars() {
    let (dir, result) = run_mini(|_| {});
    let svg = svg_values(&fs::read_to_string(dir.path().join("out/figures/nmi_paired_amod.svg")).unwrap());
    let anim = result.cell(Animacy::Animate, Variable::Amod).unwrap().analyzed().unwrap().1;
    let inan = result.cell(Animacy::Inanimate, Variable::Amod).unwrap().analyzed().unwrap().1;
    for n in gendermi::info::Normalizer::ALL {
        let a = svg[&(n.to_string(), "animate".to_string())].1.unwrap();
        let i = svg[&(n.to_string(), "inanimate".to_string())].1.unwrap();
        assert_eq!(a > i, anim.get(n).value() > inan.get(n).value(), "{n}");
        assert!(a > i, "{n}: animate bar {a} vs inanimate {i}");
    }
}

#[test]
fn outputs_replace_previous_runs_without_leftovers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join("results.json"), "stale").unwrap();
    pipeline::run(&mini_config(&out)).unwrap();
    let first = fs::read(out.join("results.json")).unwrap();
    assert!(first.starts_with(b"{"));
    pipeline::run(&mini_config(&out)).unwrap();
    assert_eq!(fs::read(out.join("results.json")).unwrap(), first);
    let mut stack = vec![out.clone()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            assert!(!p.to_string_lossy().ends_with(".tmp"), "{}", p.display());
            if p.is_dir() {
                stack.push(p);
            }
        }
    }
}

#[test]
fn unwritable_output_is_an_output_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let err = pipeline::run(&mini_config(&blocker.join("out"))).unwrap_err();
    assert!(matches!(err, PipelineError::Output { .. }), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn empty_corpus_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.conllu");
    fs::write(&empty, "# only a comment\n\n").unwrap();
    let mut config = mini_config(&dir.path().join("out"));
    config.inputs = vec![empty];
    let err = pipeline::run(&config).unwrap_err();
    assert!(matches!(err, PipelineError::EmptyCorpus), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn strict_mode_stops_at_the_broken_sentence() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = mini_config(&dir.path().join("out"));
    config.parse_mode = ParseMode::Strict;
    let err = pipeline::run(&config).unwrap_err();
    assert!(matches!(err, PipelineError::Input { .. }), "{err}");
    assert!(err.to_string().contains("42"), "{err}");
}

#[test]
fn results_record_settings_but_not_paths_or_workers() {
    let (dir, result) = run_mini(|_| {});
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("out/results.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["unit"], "bits");
    assert_eq!(json["settings"]["inputs"], serde_json::json!(["mini.conllu"]));
    assert!(json["settings"].get("workers").is_none());
    assert!(json["settings"].get("out_dir").is_none());
    let reparsed: AnalysisResult = serde_json::from_value(json).unwrap();
    assert_eq!(reparsed.cells, result.cells);
}

#[test]
fn cell_seeds_differ_between_cells() {
    let (_, result) = run_mini(|_| {});
    let seeds: Vec<u64> = result.cells.iter().filter_map(|c| c.analyzed()).map(|(t, _)| t.seed).collect();
    let unique: BTreeSet<_> = seeds.iter().collect();
    assert_eq!(unique.len(), seeds.len());
}

fn cli(args: &[&str], out: &Path, envs: &[(&str, &str)]) -> (i32, String) {
    let output = Command::new(env!("CARGO_BIN_EXE_gendermi"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("GENDERMI_WORKERS")
        .envs(envs.iter().copied())
        .output()
        .unwrap();
    (output.status.code().unwrap(), String::from_utf8_lossy(&output.stderr).into_owned())
}

#[test]
fn command_line_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mini = fixture("mini.conllu");
    let lex = fixture("mini.lexicon");
    let (mini, lex) = (mini.to_str().unwrap(), lex.to_str().unwrap());
    let base = ["--lang", "es", "--input", mini, "--lexicon", lex, "--permutations", "200"];
    let with = |extra: &[&'static str]| -> Vec<&str> { base.iter().copied().chain(extra.iter().copied()).collect() };

    let mut cases: Vec<(Vec<&str>, i32)> = vec![
        (with(&[]), 0),
        (with(&["--coverage", "1.5"]), 2),
        (with(&["--relations", "amod,xcomp"]), 2),
        (with(&["--permutations", "0"]), 2),
        (with(&["--relations", "none", "--baselines", "case"]), 4),
        (with(&["--strict"]), 3),
    ];
    cases.push((vec!["--lang", "es", "--input", "/nonexistent.conllu", "--lexicon", lex], 3));
    cases.push((vec!["--lang", "es", "--input", mini, "--lexicon", "/nonexistent.tsv"], 3));
    for (args, expected) in cases {
        let (code, stderr) = cli(&args, &out, &[]);
        assert_eq!(code, expected, "{args:?}: {stderr}");
    }
}

#[test]
fn worker_count_from_environment_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let golden = fs::read(fixture("mini.results.json")).unwrap();
    let args = ["--lang", "es", "--input", fixture("mini.conllu").to_str().unwrap(), "--lexicon", fixture("mini.lexicon").to_str().unwrap(), "--seed", "42"]
        .map(str::to_string);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    for workers in ["1", "3"] {
        let out = dir.path().join(workers);
        let (code, stderr) = cli(&args, &out, &[("GENDERMI_WORKERS", workers)]);
        assert_eq!(code, 0, "{stderr}");
        assert_eq!(fs::read(out.join("results.json")).unwrap(), golden);
    }
}

#[test]
fn token_counts_per_noun_follow_the_lexicon() {
    let (_, result) = run_mini(|_| {});
    let lexicon: HashMap<String, String> = fs::read_to_string(fixture("mini.lexicon"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let (a, b) = l.split_once('\t').unwrap();
            (a.to_string(), b.to_string())
        })
        .collect();
    for (key, by_class) in &result.retained.nouns {
        for (class, nouns) in by_class {
            for n in nouns {
                assert_eq!(lexicon[n], class.as_str(), "{key}: {n}");
            }
        }
    }
}
