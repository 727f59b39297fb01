//! Held-out splits by whole sequences.

use super::generate::Dataset;
use crate::error::{Error, Result};
use crate::numcore::Rng;

/// Indices of the train and held-out parts of `n` sequences. The held-out
/// part has `round(frac · n)` sequences, at least one; both parts keep the
/// original order.
pub fn split_indices(n: usize, frac: f64, rng: &mut Rng) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::InvalidDataset(format!(
            "need at least 2 sequences to split, got {n}"
        )));
    }
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "held-out fraction {frac} must be in (0, 1)"
        )));
    }
    let heldout = ((frac * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut held: Vec<usize> = order[..heldout].to_vec();
    let mut train: Vec<usize> = order[heldout..].to_vec();
    held.sort_unstable();
    train.sort_unstable();
    Ok((train, held))
}

pub fn split_heldout(data: &Dataset, frac: f64, rng: &mut Rng) -> Result<(Dataset, Dataset)> {
    let (train, held) = split_indices(data.sequences.len(), frac, rng)?;
    Ok((data.subset(&train), data.subset(&held)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{streams, Rng};
    use proptest::prelude::*;

    #[test]
    fn five_percent_of_a_hundred() {
        let mut rng = Rng::new(0, streams::SPLIT);
        let (t, h) = split_indices(100, 0.05, &mut rng).unwrap();
        assert_eq!((t.len(), h.len()), (95, 5));
    }

    #[test]
    fn tiny_fraction_keeps_one_sequence() {
        let mut rng = Rng::new(0, streams::SPLIT);
        let (t, h) = split_indices(10, 0.01, &mut rng).unwrap();
        assert_eq!((t.len(), h.len()), (9, 1));
    }

    #[test]
    fn single_sequence_rejected() {
        let mut rng = Rng::new(0, streams::SPLIT);
        assert!(split_indices(1, 0.5, &mut rng).is_err());
        assert!(split_indices(5, 1.0, &mut rng).is_err());
    }

    proptest! {
        #[test]
        fn split_is_a_deterministic_partition(n in 2usize..300, frac in 0.001f64..0.999, seed in any::<u64>()) {
            let (t, h) = split_indices(n, frac, &mut Rng::new(seed, streams::SPLIT)).unwrap();
            let (t2, h2) = split_indices(n, frac, &mut Rng::new(seed, streams::SPLIT)).unwrap();
            prop_assert_eq!(&t, &t2);
            prop_assert_eq!(&h, &h2);
            let mut all: Vec<usize> = t.iter().chain(&h).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert!(!h.is_empty() && !t.is_empty());
        }
    }
}
