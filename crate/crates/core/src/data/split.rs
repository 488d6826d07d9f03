use crate::data::Sample;
use crate::error::{Error, Result};
use crate::rng;
use crate::seed::derive_seed;

/// Stratified train/test split.
///
/// Each class is partitioned independently so class proportions carry over;
/// the held-out count per class is `round(n_c * test_fraction)` clamped so
/// both sides stay non-empty. Sample order within each output follows the
/// original input order. Deterministic per seed.
pub fn split(
    samples: Vec<Sample>,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<Sample>, Vec<Sample>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test_fraction must be strictly between 0 and 1, got {test_fraction}"
        )));
    }
    if samples.is_empty() {
        return Err(Error::Input("cannot split an empty sample set".into()));
    }

    let num_classes = samples.iter().map(|s| s.label).max().unwrap() + 1;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, s) in samples.iter().enumerate() {
        by_class[s.label].push(i);
    }

    let mut is_test = vec![false; samples.len()];
    for (class, indices) in by_class.iter().enumerate() {
        if indices.is_empty() {
            continue;
        }
        if indices.len() < 2 {
            return Err(Error::Input(format!(
                "class {class} has {} sample(s); at least 2 are needed to stratify",
                indices.len()
            )));
        }
        let n = indices.len();
        let want = (n as f64 * test_fraction).round() as usize;
        let test_count = want.clamp(1, n - 1);
        let mut shuffled = indices.clone();
        let mut class_rng = rng::chacha(derive_seed(seed, &format!("split/{class}")));
        rng::shuffle(&mut class_rng, &mut shuffled);
        for &i in shuffled.iter().take(test_count) {
            is_test[i] = true;
        }
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, s) in samples.into_iter().enumerate() {
        if is_test[i] {
            test.push(s);
        } else {
            train.push(s);
        }
    }
    Ok((train, test))
}
