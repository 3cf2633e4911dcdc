//! Weighted source mixing and group-aware train/validation splitting.

use super::instance::{QAInstance, Variant};
use super::DatasetError;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// Combine sources into one training pool.
///
/// A weight of 1 keeps a source as-is; weight `w` resizes it to
/// `round(w * n)` instances, subsampling without replacement below 1 and
/// repeating whole copies (plus a sampled remainder) above 1. The combined
/// pool is then shuffled. Output order is a pure function of the inputs and
/// the seed.
pub fn mix(sources: &[(&[QAInstance], f64)], seed: u64) -> Result<Vec<QAInstance>, DatasetError> {
    if sources.is_empty() {
        return Err(DatasetError::Invalid("mix needs at least one source".to_string()));
    }
    for (_, weight) in sources {
        if !weight.is_finite() || *weight < 0.0 {
            return Err(DatasetError::Invalid(format!("weight {weight} is not a non-negative number")));
        }
    }
    if !sources.iter().any(|(s, w)| !s.is_empty() && *w > 0.0) {
        return Err(DatasetError::Invalid(
            "mix needs at least one non-empty source with positive weight".to_string(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut combined = Vec::new();
    for (source, weight) in sources {
        let target = (weight * source.len() as f64).round() as usize;
        let full_copies = if source.is_empty() { 0 } else { target / source.len() };
        let remainder = if source.is_empty() { 0 } else { target % source.len() };
        for _ in 0..full_copies {
            combined.extend_from_slice(source);
        }
        if remainder > 0 {
            let mut picked: Vec<usize> =
                rand::seq::index::sample(&mut rng, source.len(), remainder).into_vec();
            picked.sort_unstable();
            combined.extend(picked.into_iter().map(|i| source[i].clone()));
        }
    }
    combined.shuffle(&mut rng);
    Ok(combined)
}

/// Split into train/validation without separating instances that share a
/// group: grouped variants move as a unit, ungrouped instances move alone.
/// Validation size lands within one group of `round(val_fraction * n)`.
pub fn split_train_val(
    instances: &[QAInstance],
    val_fraction: f64,
    seed: u64,
) -> Result<(Vec<QAInstance>, Vec<QAInstance>), DatasetError> {
    if instances.len() < 2 {
        return Err(DatasetError::Invalid(format!(
            "cannot split {} instance(s)",
            instances.len()
        )));
    }
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(DatasetError::Invalid(format!(
            "val_fraction {val_fraction} must lie strictly between 0 and 1"
        )));
    }

    // Units of indices that must land on the same side.
    let mut units: Vec<Vec<usize>> = Vec::new();
    let mut unit_of_group: HashMap<&str, usize> = HashMap::new();
    for (index, inst) in instances.iter().enumerate() {
        if inst.variant == Variant::Ungrouped {
            units.push(vec![index]);
        } else if let Some(&u) = unit_of_group.get(inst.group.as_str()) {
            units[u].push(index);
        } else {
            unit_of_group.insert(inst.group.as_str(), units.len());
            units.push(vec![index]);
        }
    }

    let target = ((val_fraction * instances.len() as f64).round() as usize)
        .clamp(1, instances.len() - 1);
    let mut order: Vec<usize> = (0..units.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut val_indices = Vec::new();
    for unit in order {
        if val_indices.len() >= target {
            break;
        }
        val_indices.extend_from_slice(&units[unit]);
    }
    val_indices.sort_unstable();

    let mut val = Vec::with_capacity(val_indices.len());
    let mut train = Vec::with_capacity(instances.len() - val_indices.len());
    let mut next_val = val_indices.iter().peekable();
    for (index, inst) in instances.iter().enumerate() {
        if next_val.peek() == Some(&&index) {
            next_val.next();
            val.push(inst.clone());
        } else {
            train.push(inst.clone());
        }
    }
    Ok((train, val))
}

/// Permute an instance's choices in place, keeping the gold index pointing
/// at the same text. Opt-in counter to the positional bias the five-to-four
/// remap introduces.
pub fn shuffle_choices<R: Rng>(inst: &mut QAInstance, rng: &mut R) {
    let gold_text = inst.choices[inst.gold_index].clone();
    inst.choices.shuffle(rng);
    inst.gold_index = inst
        .choices
        .iter()
        .position(|c| *c == gold_text)
        .expect("gold text survives a permutation");
}
