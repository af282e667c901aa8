//! Deterministic partial selection of the largest entries.
//!
//! All selections order candidates by value (descending) and break ties by
//! the caller-supplied key (ascending), so every top-k choice in the crate is
//! reproducible.

use std::cmp::Ordering;

fn by_value_then_key<K: Ord>(a: &(f64, K), b: &(f64, K)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1))
}

/// Returns the `k` largest `(value, key)` pairs, sorted by descending value
/// and ascending key among equal values.
///
/// Uses an unordered partial selection followed by a sort of the `k` winners.
pub fn top_k<K: Ord>(mut items: Vec<(f64, K)>, k: usize) -> Vec<(f64, K)> {
    if k == 0 {
        return Vec::new();
    }
    if k < items.len() {
        items.select_nth_unstable_by(k - 1, by_value_then_key);
        items.truncate(k);
    }
    items.sort_by(by_value_then_key);
    items
}

/// Indices of the `k` largest entries of `values` (ties toward the smaller
/// index), in selection order.
pub fn top_k_indices(values: &[f64], k: usize) -> Vec<usize> {
    let items = values.iter().copied().zip(0..).collect();
    top_k(items, k).into_iter().map(|(_, i)| i).collect()
}

/// Index of the largest entry, ties toward the smaller index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_prefer_smaller_keys() {
        assert_eq!(top_k_indices(&[1.0, 3.0, 3.0, 2.0], 2), vec![1, 2]);
        assert_eq!(top_k_indices(&[1.0, 1.0, 1.0], 2), vec![0, 1]);
        assert_eq!(top_k_indices(&[5.0, 1.0], 0), Vec::<usize>::new());
        assert_eq!(top_k_indices(&[5.0, 1.0], 7), vec![0, 1]);
    }

    #[test]
    fn argmax_tie_rule() {
        assert_eq!(argmax(&[3.0, 1.0]), 0);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
        assert_eq!(argmax(&[-1.0, 2.0, 0.0]), 1);
    }

    #[test]
    fn matches_full_sort() {
        let vals: [f64; 7] = [0.5, -2.0, 7.0, 0.5, 3.25, 7.0, 0.0];
        for k in 0..=vals.len() {
            let mut idx: Vec<usize> = (0..vals.len()).collect();
            idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
            idx.truncate(k);
            assert_eq!(top_k_indices(&vals, k), idx);
        }
    }
}
