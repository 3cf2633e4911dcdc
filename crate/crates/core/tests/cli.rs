//! End-to-end CLI tests: run every subcommand in-process against fixture
//! files in a temp directory and check artifacts, manifests, and the
//! documented exit-code mapping.

use lateralqa::cli::run_command;
use lateralqa::dataset::{read_instances, GroupKey, QAInstance, Source, Subtask, Variant};
use lateralqa::manifest::Manifest;
use std::fs;
use std::path::{Path, PathBuf};
use tempfile::TempDir;

fn fixture_instances() -> Vec<QAInstance> {
    let mut instances = Vec::new();
    for (g, topic) in ["g1", "g2"].iter().zip(["barber", "london"]) {
        for (suffix, variant) in [
            ("o", Variant::Original),
            ("s", Variant::Semantic),
            ("c", Variant::Context),
        ] {
            let id = format!("{g}-{suffix}");
            instances.push(QAInstance {
                id: id.clone(),
                question: format!("{topic} question {suffix}"),
                choices: vec![
                    format!("answer about {topic} one"),
                    format!("answer about {topic} two"),
                    format!("answer about {topic} three"),
                    format!("answer about {topic} four"),
                ],
                gold_index: 1,
                group: GroupKey(g.to_string()),
                variant,
                subtask: Subtask::Sentence,
                source: Source::Provided,
            });
        }
    }
    instances
}

fn write_fixture(dir: &Path, name: &str, instances: &[QAInstance]) -> PathBuf {
    let path = dir.join(name);
    let body = serde_json::to_string_pretty(instances).unwrap();
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> i32 {
    run_command(args.iter().map(|s| s.to_string()))
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

#[test]
fn ingest_writes_canonical_file_and_manifest() {
    let dir = TempDir::new().unwrap();
    let input = write_fixture(dir.path(), "raw.json", &fixture_instances());
    let output = dir.path().join("canonical.json");
    let code = run(&[
        "ingest",
        "--in",
        &path_str(&input),
        "--subtask",
        "sentence",
        "--out",
        &path_str(&output),
    ]);
    assert_eq!(code, 0);
    assert_eq!(read_instances(&output).unwrap().len(), 6);
    let manifest = Manifest::load(&dir.path().join("canonical.json.manifest.json")).unwrap();
    assert_eq!(manifest.command, "ingest");
    assert_eq!(manifest.outputs.len(), 1);
}

#[test]
fn missing_input_exits_two_and_bad_data_exits_one() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out.json");
    // Nonexistent file: I/O error class.
    assert_eq!(
        run(&["ingest", "--in", "/nonexistent/x.json", "--subtask", "word", "--out", &path_str(&out)]),
        2
    );
    // Malformed content: validation error class.
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "this is not json").unwrap();
    assert_eq!(
        run(&["ingest", "--in", &path_str(&bad), "--subtask", "word", "--out", &path_str(&out)]),
        1
    );
    // Unknown flag: usage error.
    assert_eq!(run(&["ingest", "--frobnicate"]), 1);
}

#[test]
fn remap_pipeline_produces_four_choice_instances() {
    let dir = TempDir::new().unwrap();
    let riddles = dir.path().join("riddles.jsonl");
    let mut lines = String::new();
    for (i, answer) in ["A", "E", "C"].iter().enumerate() {
        lines.push_str(&serde_json::json!({
            "question": format!("riddle number {i}"),
            "choices": [
                {"label": "A", "text": format!("r{i} first")},
                {"label": "B", "text": format!("r{i} second")},
                {"label": "C", "text": format!("r{i} third")},
                {"label": "D", "text": format!("r{i} fourth")},
                {"label": "E", "text": format!("r{i} fifth")},
            ],
            "answerKey": answer,
        }).to_string());
        lines.push('\n');
    }
    fs::write(&riddles, lines).unwrap();
    let output = dir.path().join("rs4.json");
    assert_eq!(run(&["remap", "--in", &path_str(&riddles), "--out", &path_str(&output)]), 0);
    let instances = read_instances(&output).unwrap();
    assert_eq!(instances.len(), 3);
    assert!(instances.iter().all(|i| i.choices.len() == 4));
    assert_eq!(instances[1].gold_index, 3);
    assert_eq!(instances[1].gold_text(), "r1 fifth");
    assert!(instances.iter().all(|i| i.source == Source::Riddlesense));
}

#[test]
fn dedup_command_reports_and_writes_partitions() {
    let dir = TempDir::new().unwrap();
    let mut instances = fixture_instances();
    let mut dup = instances[0].clone();
    dup.id = "dup-1".to_string();
    dup.question = format!("  {}!", instances[0].question.to_uppercase());
    instances.push(dup);
    let input = write_fixture(dir.path(), "with_dups.json", &instances);
    let kept_path = dir.path().join("kept.json");
    let dropped_path = dir.path().join("dropped.json");
    let code = run(&[
        "dedup",
        "--in",
        &path_str(&input),
        "--out",
        &path_str(&kept_path),
        "--dropped",
        &path_str(&dropped_path),
    ]);
    assert_eq!(code, 0);
    assert_eq!(read_instances(&kept_path).unwrap().len(), 6);
    let dropped = read_instances(&dropped_path).unwrap();
    assert_eq!(dropped.len(), 1);
    assert_eq!(dropped[0].id, "dup-1");
}

#[test]
fn generate_requires_a_transport_and_mock_works() {
    let dir = TempDir::new().unwrap();
    let output = dir.path().join("novel.json");
    // No --mock and no --endpoint: refused.
    assert_eq!(
        run(&["generate", "--prompt", "p2", "--out", &path_str(&output)]),
        1
    );
    let mock = dir.path().join("mock_response.json");
    fs::write(
        &mock,
        r#"[{"joke": "Mock joke?", "options": ["A. one", "B. two", "C. three", "D. four"], "answer": "B"}]"#,
    )
    .unwrap();
    let code = run(&[
        "generate",
        "--prompt",
        "p3",
        "--mock",
        &path_str(&mock),
        "--out",
        &path_str(&output),
    ]);
    assert_eq!(code, 0);
    let novel = read_instances(&output).unwrap();
    assert_eq!(novel.len(), 1);
    assert_eq!(novel[0].gold_text(), "two");

    // Re-running with the output accumulated yields nothing new.
    let second = dir.path().join("novel2.json");
    let code = run(&[
        "generate",
        "--prompt",
        "p3",
        "--mock",
        &path_str(&mock),
        "--accumulated",
        &path_str(&output),
        "--out",
        &path_str(&second),
    ]);
    assert_eq!(code, 0);
    assert!(read_instances(&second).unwrap().is_empty());

    // Mock transport returning garbage: validation error.
    fs::write(&mock, "no jokes here").unwrap();
    assert_eq!(
        run(&["generate", "--prompt", "p1", "--mock", &path_str(&mock), "--out", &path_str(&second)]),
        1
    );
}

#[test]
fn mix_concatenates_weighted_sources() {
    let dir = TempDir::new().unwrap();
    let a = write_fixture(dir.path(), "a.json", &fixture_instances());
    let mut other = fixture_instances();
    for (i, inst) in other.iter_mut().enumerate() {
        inst.id = format!("w-{i}");
        inst.group = GroupKey(format!("wg{}", i / 3));
        inst.question = format!("word puzzle {i}");
        inst.subtask = Subtask::Word;
        for (c, choice) in inst.choices.iter_mut().enumerate() {
            *choice = format!("word answer {i}-{c}");
        }
    }
    let b = write_fixture(dir.path(), "b.json", &other);
    let output = dir.path().join("mixed.json");
    let code = run(&[
        "mix",
        "--in",
        &path_str(&a),
        "--in",
        &format!("{}:0.5", path_str(&b)),
        "--seed",
        "7",
        "--out",
        &path_str(&output),
    ]);
    assert_eq!(code, 0);
    assert_eq!(read_instances(&output).unwrap().len(), 6 + 3);
}

#[test]
fn tok_train_then_full_train_predict_eval_replay() {
    let dir = TempDir::new().unwrap();
    // Tokenizer corpus.
    let corpus = dir.path().join("corpus.txt");
    fs::write(&corpus, "a b c d e f g h i j k l m n o p q r s t\n").unwrap();
    let table = dir.path().join("tok.json");
    assert_eq!(
        run(&["tok", "train", "--corpus", &path_str(&corpus), "--vocab", "259", "--out", &path_str(&table)]),
        0
    );

    // Tiny synthetic data via the library, written canonically.
    let data = write_fixture(
        dir.path(),
        "copy.json",
        &lateralqa::dataset::copy_marker_dataset(30, 3),
    );

    let out_dir = dir.path().join("run1");
    let code = run(&[
        "train",
        "--data",
        &path_str(&data),
        "--table",
        &path_str(&table),
        "--out-dir",
        &path_str(&out_dir),
        "--layers",
        "1",
        "--hidden-dim",
        "16",
        "--heads",
        "2",
        "--ffn-dim",
        "24",
        "--max-positions",
        "32",
        "--epochs",
        "2",
        "--batch-size",
        "8",
        "--val-fraction",
        "0.2",
    ]);
    assert_eq!(code, 0);
    assert!(out_dir.join("checkpoint.bin").exists());
    assert!(out_dir.join("report.json").exists());
    let manifest_path = out_dir.join("manifest.json");
    assert!(manifest_path.exists());

    // Replay reproduces byte-identical artifacts.
    assert_eq!(run(&["replay", "--manifest", &path_str(&manifest_path)]), 0);

    // Predict over the same data.
    let preds = dir.path().join("preds.jsonl");
    let code = run(&[
        "predict",
        "--checkpoint",
        &path_str(&out_dir.join("checkpoint.bin")),
        "--table",
        &path_str(&table),
        "--data",
        &path_str(&data),
        "--out",
        &path_str(&preds),
    ]);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(&preds).unwrap().lines().count(), 30);

    // Gold instances are ungrouped; eval needs grouped data, so build one.
    let gold = write_fixture(dir.path(), "gold.json", &fixture_instances());
    let perfect: Vec<String> = fixture_instances()
        .iter()
        .map(|inst| {
            serde_json::json!({"id": inst.id, "chosen_index": inst.gold_index}).to_string()
        })
        .collect();
    let gold_preds = dir.path().join("gold_preds.jsonl");
    fs::write(&gold_preds, perfect.join("\n")).unwrap();
    let report = dir.path().join("eval.json");
    let code = run(&[
        "eval",
        "--preds",
        &path_str(&gold_preds),
        "--gold",
        &path_str(&gold),
        "--subtask",
        "sentence",
        "--out",
        &path_str(&report),
    ]);
    assert_eq!(code, 0);
    let report_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(report_json["sections"][0]["cells"]["overall"]["num"], 6);
    assert_eq!(report_json["sections"][0]["cells"]["overall"]["den"], 6);

    // Report rendering from the saved eval JSON plus an ablation file.
    let ablation = dir.path().join("ablation.json");
    fs::write(
        &ablation,
        r#"[{"label": "baseline", "accuracy": "50.8"},
            {"label": "mc head", "accuracy": "60.0"},
            {"label": "bigger encoder", "accuracy": "88.3"},
            {"label": "augmented data", "accuracy": "92.5"}]"#,
    )
    .unwrap();
    let code = run(&[
        "report",
        "--sentence",
        &path_str(&report),
        "--ablation",
        &path_str(&ablation),
    ]);
    assert_eq!(code, 0);
}

#[test]
fn eval_detects_missing_and_unmatched_predictions() {
    let dir = TempDir::new().unwrap();
    let gold = write_fixture(dir.path(), "gold.json", &fixture_instances());
    // Partial predictions: validation error.
    let partial = dir.path().join("partial.jsonl");
    fs::write(&partial, "{\"id\": \"g1-o\", \"chosen_index\": 1}\n").unwrap();
    assert_eq!(run(&["eval", "--preds", &path_str(&partial), "--gold", &path_str(&gold)]), 1);
    // Unknown prediction id: validation error.
    let stray = dir.path().join("stray.jsonl");
    fs::write(&stray, "{\"id\": \"ghost\", \"chosen_index\": 0}\n").unwrap();
    assert_eq!(run(&["eval", "--preds", &path_str(&stray), "--gold", &path_str(&gold)]), 1);
}

#[test]
fn commands_never_mutate_input_files() {
    let dir = TempDir::new().unwrap();
    let input = write_fixture(dir.path(), "input.json", &fixture_instances());
    let before = fs::read(&input).unwrap();
    let out = dir.path().join("out.json");
    assert_eq!(run(&["dedup", "--in", &path_str(&input), "--out", &path_str(&out)]), 0);
    assert_eq!(
        run(&["mix", "--in", &path_str(&input), "--seed", "0", "--out", &path_str(&out)]),
        0
    );
    assert_eq!(fs::read(&input).unwrap(), before);
}

#[test]
fn replay_rejects_drifted_inputs() {
    let dir = TempDir::new().unwrap();
    let input = write_fixture(dir.path(), "input.json", &fixture_instances());
    let out = dir.path().join("out.json");
    assert_eq!(run(&["dedup", "--in", &path_str(&input), "--out", &path_str(&out)]), 0);
    let manifest = dir.path().join("out.json.manifest.json");
    assert_eq!(run(&["replay", "--manifest", &path_str(&manifest)]), 0);
    // Drift the input; replay must refuse.
    let mut instances = fixture_instances();
    instances.pop();
    write_fixture(dir.path(), "input.json", &instances);
    assert_eq!(run(&["replay", "--manifest", &path_str(&manifest)]), 1);
}
