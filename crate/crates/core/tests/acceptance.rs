//! Acceptance suite: one test per criterion, each printing a PASS line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//! Criteria cover gradient exactness, metric-oracle equivalence, published
//! arithmetic reproduction, remap and tokenizer correctness, the two-head
//! formulation comparison at desk scale, reference-row handling, replay
//! determinism, and the dedup pipeline.

use lateralqa::cli::run_command;
use lateralqa::dataset::{
    copy_marker_dataset, dedup, generate_humor_batch, remap_five_to_four, riddles::LabeledChoice,
    split_train_val, DedupPolicy, FileMockClient, GroupKey, PromptId, QAInstance, RawRiddle,
    Source, Subtask, Variant,
};
use lateralqa::evaluator::{
    ablation_deltas, build_results_table, group_accuracy, instance_accuracy, parse_decimal,
    reference, Accuracy, Prediction, COLUMN_LABELS,
};
use lateralqa::model::{self, batch_loss, init_params, EncoderConfig, HeadKind, Pooling};
use lateralqa::tokenizer::{decode, encode, train_bpe, BASE_VOCAB};
use lateralqa::trainer::{self, encode_instances, Hyperparams, Optimizer};
use num_rational::Ratio;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::fs;
use std::time::Instant;

const FD_STEP: f64 = 1e-4;
const FD_TOLERANCE: f64 = 1e-4;

#[test]
fn criterion_1_gradient_correctness() {
    let started = Instant::now();
    let config = EncoderConfig {
        layers: 2,
        hidden_dim: 16,
        heads: 2,
        ffn_dim: 24,
        max_positions: 16,
        vocab_size: 48,
        pooling: Pooling::FirstToken,
    };
    let params = init_params(&config, 11).unwrap();

    let seq = |ids: &[u32]| lateralqa::tokenizer::TokenSeq::untruncated(ids.to_vec());
    let mc_batch = vec![
        model::EncodedInstance {
            id: "a".into(),
            gold: 2,
            seqs: vec![seq(&[1, 10, 11, 2, 20]), seq(&[1, 10, 11, 2, 21]), seq(&[1, 10, 11, 2, 22]), seq(&[1, 10, 11, 2, 23])],
        },
        model::EncodedInstance {
            id: "b".into(),
            gold: 0,
            seqs: vec![seq(&[1, 12, 2, 24]), seq(&[1, 12, 2, 25]), seq(&[1, 12, 2, 26]), seq(&[1, 12, 2, 27])],
        },
    ];
    let sc_batch = vec![
        model::EncodedInstance {
            id: "c".into(),
            gold: 1,
            seqs: vec![seq(&[1, 10, 2, 20, 2, 21, 2, 22, 2, 23])],
        },
        model::EncodedInstance {
            id: "d".into(),
            gold: 3,
            seqs: vec![seq(&[1, 13, 2, 24, 2, 25, 2, 26, 2, 27])],
        },
    ];

    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    for (head, batch) in [(HeadKind::Mc, &mc_batch), (HeadKind::Sc, &sc_batch)] {
        let analytic = model::backward(&params, &config, batch, head).unwrap();
        for (name, mat) in params.iter() {
            let grad = &analytic.grads[name];
            for index in 0..mat.rows() * mat.cols() {
                let mut plus = params.clone();
                plus.get_mut(name).unwrap().data_mut()[index] += FD_STEP;
                let mut minus = params.clone();
                minus.get_mut(name).unwrap().data_mut()[index] -= FD_STEP;
                let numeric = (batch_loss(&plus, &config, batch, head).unwrap()
                    - batch_loss(&minus, &config, batch, head).unwrap())
                    / (2.0 * FD_STEP);
                let analytic_value = grad.data()[index];
                let rel = (analytic_value - numeric).abs() / (numeric.abs() + 1e-8);
                assert!(
                    rel < FD_TOLERANCE,
                    "{head:?} {name}[{index}]: analytic {analytic_value} vs fd {numeric} (rel {rel})"
                );
                worst = worst.max(rel);
                checked += 1;
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "gradient check took {elapsed:.1}s");
    println!(
        "[PASS] criterion 1: {checked} gradient entries across both heads match central \
         finite differences (worst rel err {worst:.2e}, {elapsed:.1}s)"
    );
}

/// Naive counting oracle for instance accuracy.
fn oracle_instance(preds: &[Prediction], gold: &[QAInstance], filter: Option<Variant>) -> (u64, u64) {
    let mut correct = 0;
    let mut total = 0;
    for inst in gold {
        if filter.is_some() && filter != Some(inst.variant) {
            continue;
        }
        total += 1;
        for pred in preds {
            if pred.id == inst.id && pred.chosen_index == inst.gold_index {
                correct += 1;
            }
        }
    }
    (correct, total)
}

/// Naive enumeration oracle for group accuracy.
fn oracle_group(preds: &[Prediction], gold: &[QAInstance], members: &BTreeSet<Variant>) -> (u64, u64) {
    let mut keys: Vec<&GroupKey> = gold
        .iter()
        .filter(|i| i.variant != Variant::Ungrouped)
        .map(|i| &i.group)
        .collect();
    keys.sort();
    keys.dedup();
    let mut scoring = 0;
    for key in &keys {
        let mut all_correct = true;
        for inst in gold {
            if inst.variant == Variant::Ungrouped || &inst.group != *key {
                continue;
            }
            if !members.contains(&inst.variant) {
                continue;
            }
            let hit = preds
                .iter()
                .any(|p| p.id == inst.id && p.chosen_index == inst.gold_index);
            if !hit {
                all_correct = false;
            }
        }
        if all_correct {
            scoring += 1;
        }
    }
    (scoring, keys.len() as u64)
}

#[test]
fn criterion_2_metric_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let variants = [Variant::Semantic, Variant::Context];
    let mut fixtures = 0usize;
    while fixtures < 10_000 {
        fixtures += 1;
        // 1..4 groups; group sizes cycle through 1..=5 members.
        let group_count = rng.random_range(1..4usize);
        let mut gold = Vec::new();
        for g in 0..group_count {
            let size = (fixtures + g) % 5 + 1;
            let group = format!("g{g}");
            for member in 0..size {
                let variant = if member == 0 {
                    Variant::Original
                } else {
                    variants[rng.random_range(0..2)]
                };
                gold.push(QAInstance {
                    id: format!("f{fixtures}-{g}-{member}"),
                    question: format!("q {g} {member}"),
                    choices: (0..4).map(|c| format!("c{c} of {g}-{member}")).collect(),
                    gold_index: rng.random_range(0..4),
                    group: GroupKey(group.clone()),
                    variant,
                    subtask: Subtask::Sentence,
                    source: Source::Provided,
                });
            }
        }
        let preds: Vec<Prediction> = gold
            .iter()
            .map(|inst| Prediction {
                id: inst.id.clone(),
                chosen_index: if rng.random_range(0..100) < 60 {
                    inst.gold_index
                } else {
                    (inst.gold_index + 1 + rng.random_range(0..3)) % 4
                },
            })
            .collect();

        let acc = instance_accuracy(&preds, &gold, None).unwrap();
        assert_eq!((acc.correct, acc.total), oracle_instance(&preds, &gold, None));
        let with_filter = instance_accuracy(&preds, &gold, Some(Variant::Original)).unwrap();
        assert_eq!(
            (with_filter.correct, with_filter.total),
            oracle_instance(&preds, &gold, Some(Variant::Original))
        );
        for members in [
            BTreeSet::from([Variant::Original, Variant::Semantic]),
            BTreeSet::from([Variant::Original, Variant::Semantic, Variant::Context]),
        ] {
            let ours = group_accuracy(&preds, &gold, &members).unwrap();
            assert_eq!(
                (ours.accuracy.correct, ours.accuracy.total),
                oracle_group(&preds, &gold, &members),
                "fixture {fixtures}"
            );
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "metric oracle sweep took {elapsed:.1}s");
    println!(
        "[PASS] criterion 2: instance and group accuracy match brute-force enumeration on \
         {fixtures} randomized fixtures (group sizes 1-5, {elapsed:.1}s)"
    );
}

#[test]
fn criterion_3_published_arithmetic_reproduction() {
    let rows: Vec<(String, Ratio<i64>)> = [
        ("baseline sequence head", "50.8"),
        ("multiple-choice head", "60.0"),
        ("larger encoder", "88.3"),
        ("augmented data", "92.5"),
    ]
    .iter()
    .map(|(label, acc)| (label.to_string(), parse_decimal(acc).unwrap()))
    .collect();
    let deltas = ablation_deltas(&rows);
    assert_eq!(deltas[0].delta, None);
    assert_eq!(deltas[1].delta, Some(Ratio::new(92, 10)));
    assert_eq!(deltas[2].delta, Some(Ratio::new(283, 10)));
    assert_eq!(deltas[3].delta, Some(Ratio::new(42, 10)));

    // Column structure of the rendered results table, per subtask.
    let gold: Vec<QAInstance> = {
        let mut out = Vec::new();
        for (g, subtask) in [("s1", Subtask::Sentence), ("w1", Subtask::Word)] {
            for (suffix, variant) in
                [("o", Variant::Original), ("s", Variant::Semantic), ("c", Variant::Context)]
            {
                out.push(QAInstance {
                    id: format!("{g}-{suffix}"),
                    question: format!("q {g} {suffix}"),
                    choices: (0..4).map(|c| format!("c{c} {g} {suffix}")).collect(),
                    gold_index: 0,
                    group: GroupKey(g.to_string()),
                    variant,
                    subtask,
                    source: Source::Provided,
                });
            }
        }
        out
    };
    let preds: Vec<Prediction> =
        gold.iter().map(|i| Prediction { id: i.id.clone(), chosen_index: 0 }).collect();
    let sentence: Vec<QAInstance> =
        gold.iter().filter(|i| i.subtask == Subtask::Sentence).cloned().collect();
    let word: Vec<QAInstance> = gold.iter().filter(|i| i.subtask == Subtask::Word).cloned().collect();
    let sentence_preds: Vec<Prediction> =
        preds.iter().filter(|p| p.id.starts_with("s")).cloned().collect();
    let word_preds: Vec<Prediction> = preds.iter().filter(|p| p.id.starts_with("w")).cloned().collect();
    let table = build_results_table(&[
        (Subtask::Sentence, &sentence_preds, &sentence),
        (Subtask::Word, &word_preds, &word),
    ])
    .unwrap();
    let text = table.render(true);
    for section in ["Sentence puzzle", "Word puzzle"] {
        assert!(text.contains(section), "missing section {section}");
    }
    let mut cursor = 0;
    for label in COLUMN_LABELS {
        let at = text[cursor..].find(label).expect("column order");
        cursor += at;
    }
    println!(
        "[PASS] criterion 3: ablation deltas are exactly (+9.2, +28.3, +4.2) and the results \
         table renders all six columns per subtask"
    );
}

#[test]
fn criterion_4_remap_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let labels = ["A", "B", "C", "D", "E"];
    let mut by_position = [0usize; 5];
    for round in 0..500 {
        let texts: Vec<String> = (0..5)
            .map(|i| format!("choice {} {}", i, rng.random_range(0..1_000_000)))
            .collect();
        let answer = round % 5;
        by_position[answer] += 1;
        let raw = RawRiddle {
            question: format!("riddle {round}"),
            choices: labels
                .iter()
                .zip(&texts)
                .map(|(label, text)| LabeledChoice { label: label.to_string(), text: text.clone() })
                .collect(),
            answer_key: labels[answer].to_string(),
        };
        let inst = remap_five_to_four(&raw).unwrap();
        assert_eq!(inst.choices.len(), 4);
        assert_eq!(inst.gold_text(), texts[answer], "gold text must survive the remap");
        if answer == 4 {
            assert_eq!(inst.gold_index, 3, "answer E moves to the fourth slot");
        } else {
            assert_eq!(inst.gold_index, answer);
        }
    }
    assert!(by_position.iter().all(|&n| n == 100));
    println!(
        "[PASS] criterion 4: 500 randomized riddles over all answer positions A-E remap to 4 \
         choices with the gold text preserved (E -> index 3)"
    );
}

#[test]
fn criterion_5_tokenizer_losslessness() {
    let corpus = ["the quick brown fox", "pack my box with five dozen jugs", "héllo 🌍"];
    let table = train_bpe(&corpus, BASE_VOCAB + 32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut round_trips = 0usize;
    for case in 0..1000 {
        let text = if case == 0 {
            String::new() // the empty case is always included
        } else {
            let len = rng.random_range(0..40);
            (0..len)
                .map(|_| match rng.random_range(0..4u8) {
                    0 => char::from(rng.random_range(32..127u8)),
                    1 => char::from_u32(rng.random_range(0xA0..0x2FF)).unwrap_or('é'),
                    2 => char::from_u32(rng.random_range(0x4E00..0x4FFF)).unwrap_or('中'),
                    _ => char::from_u32(rng.random_range(0x1F300..0x1F3FF)).unwrap_or('🌍'),
                })
                .collect()
        };
        let seq = encode(&table, &text, usize::MAX);
        assert_eq!(decode(&table, &seq).unwrap(), text, "case {case}");
        round_trips += 1;
    }

    // Truncation flag semantics at the boundary.
    let table = train_bpe(&["x"], BASE_VOCAB).unwrap(); // byte-level: length == byte count
    let exactly = encode(&table, "abcd", 4);
    assert!(!exactly.truncated && exactly.ids.len() == 4);
    let over = encode(&table, "abcde", 4);
    assert!(over.truncated && over.ids.len() == 4);
    let under = encode(&table, "abc", 4);
    assert!(!under.truncated && under.ids.len() == 3);
    println!(
        "[PASS] criterion 5: decode(encode(x)) is the identity on {round_trips} random UTF-8 \
         strings (multibyte and empty included); truncation flag flips exactly past max_len"
    );
}

#[test]
fn criterion_6_formulation_comparison_at_desk_scale() {
    let started = Instant::now();
    let instances = copy_marker_dataset(2500, 60);
    let (train_set, val_set) = split_train_val(&instances, 0.2, 60).unwrap();
    assert_eq!((train_set.len(), val_set.len()), (2000, 500));
    let corpus: Vec<String> = train_set.iter().map(|i| i.question.clone()).collect();
    let table = train_bpe(&corpus, BASE_VOCAB).unwrap();
    let config = EncoderConfig::desk(table.vocab_size());
    let max_len = 32;

    // Multiple-choice head: three seeds, each must reach 0.95 validation
    // accuracy within 30 epochs for at least two of them.
    let mut mc_hits = 0;
    let mut mc_best = Vec::new();
    let mc_train = encode_instances(&table, HeadKind::Mc, &train_set, max_len, "").unwrap();
    let mc_val = encode_instances(&table, HeadKind::Mc, &val_set, max_len, "").unwrap();
    let mut mc_first_losses = Vec::new();
    for seed in 0..3u64 {
        let hp = Hyperparams {
            batch_size: 16,
            learning_rate: 1e-3,
            epochs: 30,
            seed,
            head: HeadKind::Mc,
            optimizer: Optimizer::AdamLike,
            stop_at_val_accuracy: Some(0.95),
        };
        let init = init_params(&config, seed).unwrap();
        let report = trainer::train(&config, &init, &mc_train, &mc_val, &hp).unwrap();
        let best = report.best_val_accuracy();
        if best >= 0.95 && report.epochs.len() <= 30 {
            mc_hits += 1;
        }
        if seed == 0 {
            mc_first_losses = report.epochs.iter().map(|e| e.train_loss).collect();
        }
        mc_best.push(best);
    }
    assert!(mc_hits >= 2, "mc head reached 0.95 on only {mc_hits}/3 seeds ({mc_best:?})");

    // Sequence-classification head on the same data, reported alongside.
    let sc_train = encode_instances(&table, HeadKind::Sc, &train_set, max_len, "").unwrap();
    let sc_val = encode_instances(&table, HeadKind::Sc, &val_set, max_len, "").unwrap();
    let sc_hp = Hyperparams {
        batch_size: 16,
        learning_rate: 1e-3,
        epochs: 6,
        seed: 0,
        head: HeadKind::Sc,
        optimizer: Optimizer::AdamLike,
        stop_at_val_accuracy: None,
    };
    let sc_init = init_params(&config, 0).unwrap();
    let sc_report = trainer::train(&config, &sc_init, &sc_train, &sc_val, &sc_hp).unwrap();

    // Both heads train: the first five epochs' losses decrease monotonically
    // under a window-2 moving average. The early-stopped MC run may be
    // shorter than five epochs, so rerun it without early stop if needed.
    let mc_losses = if mc_first_losses.len() >= 5 {
        mc_first_losses
    } else {
        let hp = Hyperparams {
            batch_size: 16,
            learning_rate: 1e-3,
            epochs: 5,
            seed: 0,
            head: HeadKind::Mc,
            optimizer: Optimizer::AdamLike,
            stop_at_val_accuracy: None,
        };
        let init = init_params(&config, 0).unwrap();
        trainer::train(&config, &init, &mc_train, &mc_val, &hp)
            .unwrap()
            .epochs
            .iter()
            .map(|e| e.train_loss)
            .collect()
    };
    for (head, losses) in [
        ("mc", &mc_losses[..5.min(mc_losses.len())]),
        ("sc", &sc_report.epochs.iter().map(|e| e.train_loss).collect::<Vec<_>>()[..5]),
    ] {
        let smoothed: Vec<f64> = losses.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
        for pair in smoothed.windows(2) {
            assert!(
                pair[1] < pair[0],
                "{head} loss moving average not decreasing: {losses:?}"
            );
        }
    }

    // The comparison report.
    let sc_best = sc_report.best_val_accuracy();
    let mc_overall = mc_best.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut report = String::new();
    report.push_str("formulation comparison on the copy-marker task (2000 train / 500 val)\n");
    report.push_str(&format!(
        "{:<30} {:>12} {:>10}\n",
        "head", "val acc", "epochs"
    ));
    report.push_str(&format!(
        "{:<30} {:>12.3} {:>10}\n",
        "multiple-choice (best seed)", mc_overall, 30
    ));
    report.push_str(&format!(
        "{:<30} {:>12.3} {:>10}\n",
        "sequence-classification", sc_best, sc_report.epochs.len()
    ));
    assert!(report.contains("multiple-choice") && report.contains("sequence-classification"));
    print!("{report}");

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 600.0, "comparison took {elapsed:.1}s");
    println!(
        "[PASS] criterion 6: mc head hit >=0.95 on {mc_hits}/3 seeds (best {mc_overall:.3}), \
         sc head reported at {sc_best:.3}, both losses monotone over the first 5 epochs \
         ({elapsed:.0}s)"
    );
}

#[test]
fn criterion_7_reference_rows_are_flagged_not_asserted() {
    // The published system and baseline accuracies exist only as static
    // display rows; nothing in this suite asserts their values against
    // anything computed.
    let gold: Vec<QAInstance> = (0..2)
        .flat_map(|g| {
            [
                (Variant::Original, "o"),
                (Variant::Semantic, "s"),
                (Variant::Context, "c"),
            ]
            .map(|(variant, suffix)| QAInstance {
                id: format!("g{g}-{suffix}"),
                question: format!("q {g} {suffix}"),
                choices: (0..4).map(|c| format!("c{c} g{g} {suffix}")).collect(),
                gold_index: 0,
                group: GroupKey(format!("g{g}")),
                variant,
                subtask: Subtask::Sentence,
                source: Source::Provided,
            })
        })
        .collect();
    let preds: Vec<Prediction> =
        gold.iter().map(|i| Prediction { id: i.id.clone(), chosen_index: 0 }).collect();
    let table = build_results_table(&[(Subtask::Sentence, &preds[..], &gold[..])]).unwrap();
    let text = table.render(true);
    for row in reference::REFERENCE_ROWS {
        if row.for_subtask(Subtask::Sentence).is_some() {
            assert!(text.contains(row.label));
            let line = text.lines().find(|l| l.contains(row.label)).unwrap();
            assert!(line.contains("[reference]"), "row {:?} must be flagged", row.label);
        }
    }
    assert!(text.contains(reference::REFERENCE_NOTE));
    // Hiding the rows removes them entirely.
    let bare = table.render(false);
    assert!(!bare.contains("[reference]"));
    println!(
        "[PASS] criterion 7: published system and baseline rows render only as flagged \
         reference rows; no computation or assertion touches their values"
    );
}

#[test]
fn criterion_8_replay_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).display().to_string();

    let corpus = dir.path().join("corpus.txt");
    fs::write(&corpus, "a b c d e f g h i j k l m n o p q r s t\n").unwrap();
    assert_eq!(
        run_command(["tok", "train", "--corpus", &path("corpus.txt"), "--vocab", "259", "--out", &path("tok.json")]),
        0
    );
    let data = copy_marker_dataset(40, 8);
    fs::write(
        dir.path().join("data.json"),
        serde_json::to_string_pretty(&data).unwrap(),
    )
    .unwrap();

    let common = [
        "--data".to_string(),
        path("data.json"),
        "--table".to_string(),
        path("tok.json"),
        "--layers".to_string(),
        "1".to_string(),
        "--hidden-dim".to_string(),
        "16".to_string(),
        "--heads".to_string(),
        "2".to_string(),
        "--ffn-dim".to_string(),
        "24".to_string(),
        "--max-positions".to_string(),
        "32".to_string(),
        "--epochs".to_string(),
        "2".to_string(),
    ];

    let mut train_args = vec!["train".to_string()];
    train_args.extend(common.iter().cloned());
    train_args.extend(["--out-dir".to_string(), path("train_run")]);
    assert_eq!(run_command(train_args.iter().map(String::as_str)), 0);
    assert_eq!(
        run_command(["replay", "--manifest", &path("train_run/manifest.json")]),
        0,
        "train replay must be byte-identical"
    );

    let mut search_args = vec!["search".to_string()];
    search_args.extend(common.iter().cloned());
    search_args.extend([
        "--batch-sizes".to_string(),
        "4,8".to_string(),
        "--learning-rates".to_string(),
        "1e-3,5e-4".to_string(),
        "--trials".to_string(),
        "2".to_string(),
        "--out-dir".to_string(),
        path("search_run"),
    ]);
    assert_eq!(run_command(search_args.iter().map(String::as_str)), 0);
    assert_eq!(
        run_command(["replay", "--manifest", &path("search_run/manifest.json")]),
        0,
        "search replay must be byte-identical"
    );
    println!(
        "[PASS] criterion 8: train and search replays reproduce byte-identical checkpoints \
         and reports from their manifests"
    );
}

#[test]
fn criterion_9_dedup_pipeline() {
    // Planted near and exact duplicates among planted non-duplicates.
    let base = |id: &str, question: &str| QAInstance {
        id: id.to_string(),
        question: question.to_string(),
        choices: (0..4).map(|c| format!("choice {c} of {id}")).collect(),
        gold_index: 0,
        group: GroupKey(id.to_string()),
        variant: Variant::Ungrouped,
        subtask: Subtask::External,
        source: Source::Humor,
    };
    let originals = vec![
        base("k0", "Why did the bicycle fall over?"),
        base("k1", "What's orange and sounds like a parrot?"),
        base("k2", "Why are ghosts bad liars?"),
        base("k3", "What do you call a fish with no eyes?"),
    ];
    let duplicates = vec![
        base("d0", "why did the bicycle fall over"),        // case + punctuation
        base("d1", "What's  orange and sounds like a parrot?"), // whitespace
        base("d2", "Why are ghosts bad liars?"),            // exact
    ];
    let non_duplicates = vec![
        base("n0", "Why did the bicycle fall over twice?"), // different text
        base("n1", "What's orange and walks like a parrot?"),
    ];
    let mut input = Vec::new();
    input.extend(originals.clone());
    input.extend(duplicates.clone());
    input.extend(non_duplicates.clone());

    let (kept, dropped) = dedup(input, DedupPolicy::default());
    let dropped_ids: BTreeSet<&str> = dropped.iter().map(|i| i.id.as_str()).collect();
    assert_eq!(dropped_ids, BTreeSet::from(["d0", "d1", "d2"]), "exactly the planted duplicates");
    let kept_ids: BTreeSet<&str> = kept.iter().map(|i| i.id.as_str()).collect();
    for survivor in ["k0", "k1", "k2", "k3", "n0", "n1"] {
        assert!(kept_ids.contains(survivor), "{survivor} wrongly removed");
    }

    // The generation loop returns only novel instances against a mock.
    let body = r#"[
        {"joke": "Why did the bicycle fall over?",
         "options": ["A. Because it was two-tired.", "B. It had a flat.", "C. It was unbalanced.", "D. It slipped."],
         "answer": "A"},
        {"joke": "Brand new joke about a lighthouse?",
         "options": ["A. It shone.", "B. It blinked.", "C. It waved.", "D. It spun."],
         "answer": "B"}
    ]"#;
    let client = FileMockClient::from_body(body);
    let novel = generate_humor_batch(&client, PromptId::P3, &kept).unwrap();
    assert_eq!(novel.len(), 1, "only the unseen joke is novel");
    assert_eq!(novel[0].question, "Brand new joke about a lighthouse?");

    // A second round with the novel batch accumulated yields nothing.
    let mut accumulated = kept;
    accumulated.extend(novel);
    let again = generate_humor_batch(&client, PromptId::P3, &accumulated).unwrap();
    assert!(again.is_empty());
    println!(
        "[PASS] criterion 9: dedup removed 3/3 planted duplicates and 0/6 non-duplicates; \
         the mocked generation loop returned only novel instances"
    );
}

/// The accuracy type keeps exact fractions; spot-check the f64 view.
#[test]
fn accuracy_display_sanity() {
    let acc = Accuracy { correct: 3, total: 4 };
    assert_eq!(acc.to_string(), "3/4");
    assert!((acc.value() - 0.75).abs() < 1e-15);
}
