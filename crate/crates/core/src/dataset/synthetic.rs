//! Synthetic copy-marker task: the gold choice is the one letter that also
//! appears in the question, so a model only has to learn lexical overlap.
//! Used as a desk-scale learnability check for the two task heads.

use super::instance::{GroupKey, QAInstance, Source, Subtask, Variant};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LETTERS: [char; 20] = [
    'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r',
    's', 't',
];
const QUESTION_LEN: usize = 4;
const CHOICE_COUNT: usize = 4;

/// Generate `count` copy-marker instances. Each question is four distinct
/// letters; exactly one of the four choices repeats a question letter and is
/// gold. Deterministic in the seed.
pub fn copy_marker_dataset(count: usize, seed: u64) -> Vec<QAInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances = Vec::with_capacity(count);
    for index in 0..count {
        let mut pool = LETTERS;
        pool.shuffle(&mut rng);
        let question_letters = &pool[..QUESTION_LEN];
        let distractors = &pool[QUESTION_LEN..QUESTION_LEN + CHOICE_COUNT - 1];
        let key = *question_letters.choose(&mut rng).expect("non-empty");

        let mut choices: Vec<String> = distractors.iter().map(|c| c.to_string()).collect();
        choices.push(key.to_string());
        choices.shuffle(&mut rng);
        let gold_index = choices
            .iter()
            .position(|c| *c == key.to_string())
            .expect("key is among the choices");

        let id = format!("copy-{index:05}");
        instances.push(QAInstance {
            id: id.clone(),
            question: question_letters
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" "),
            choices,
            gold_index,
            group: GroupKey(id),
            variant: Variant::Ungrouped,
            subtask: Subtask::External,
            source: Source::Synthetic,
        });
    }
    instances
}
