//! Exhaustive search over admissible binary perturbations.

use ndarray::Array2;

use crate::bounds::Budget;
use crate::error::{Error, Result};
use crate::gcn::{self, GcnParams};
use crate::graph::SlicedProblem;

/// Largest number of perturbations the enumerators will visit.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationResult {
    pub exact_min_margin: f64,
    pub argmin_perturbation: Array2<f64>,
    pub count_enumerated: u128,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of flip sets with at most `local` flips in each of `rows` rows of
/// width `dim` and at most `global` flips overall.
pub fn perturbation_count(rows: usize, dim: usize, budget: Budget) -> u128 {
    let cap = budget.global.min(rows * dim);
    let per_row: Vec<u128> = (0..=budget.local.min(dim)).map(|k| binomial(dim, k)).collect();
    let mut poly = vec![0u128; cap + 1];
    poly[0] = 1;
    for _ in 0..rows {
        let mut next = vec![0u128; cap + 1];
        for (i, &a) in poly.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (k, &b) in per_row.iter().enumerate() {
                if i + k <= cap {
                    next[i + k] = next[i + k].saturating_add(a.saturating_mul(b));
                }
            }
        }
        poly = next;
    }
    poly.iter().fold(0u128, |a, &b| a.saturating_add(b))
}

/// Calls `visit` on every admissible perturbation of `attrs` (the clean one
/// first). Refuses when the count exceeds [`ENUMERATION_LIMIT`].
pub fn for_each_perturbation<F>(attrs: &Array2<f64>, budget: Budget, mut visit: F) -> Result<u128>
where
    F: FnMut(&Array2<f64>),
{
    let (rows, dim) = attrs.dim();
    let count = perturbation_count(rows, dim, budget);
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut work = attrs.clone();
    let mut per_row = vec![0usize; rows];
    let mut visited = 0u128;
    fn rec<F: FnMut(&Array2<f64>)>(
        start: usize,
        left: usize,
        work: &mut Array2<f64>,
        per_row: &mut [usize],
        local: usize,
        visit: &mut F,
        visited: &mut u128,
    ) {
        visit(work);
        *visited += 1;
        if left == 0 {
            return;
        }
        let dim = work.ncols();
        for idx in start..work.len() {
            let (n, d) = (idx / dim, idx % dim);
            if per_row[n] >= local {
                continue;
            }
            work[[n, d]] = 1.0 - work[[n, d]];
            per_row[n] += 1;
            rec(idx + 1, left - 1, work, per_row, local, visit, visited);
            per_row[n] -= 1;
            work[[n, d]] = 1.0 - work[[n, d]];
        }
    }
    rec(0, budget.global, &mut work, &mut per_row, budget.local, &mut visit, &mut visited);
    Ok(visited)
}

/// Exact worst-case margin `min f(X̃)_{y*} − f(X̃)_y` by exhaustive forward
/// passes.
pub fn enumerate_exact_margin(
    sp: &SlicedProblem,
    params: &GcnParams,
    budget: Budget,
    y_star: usize,
    y: usize,
) -> Result<EnumerationResult> {
    let mut best = f64::INFINITY;
    let mut arg = sp.sliced_attrs.clone();
    let mut failure = None;
    let count = for_each_perturbation(&sp.sliced_attrs, budget, |xt| {
        match gcn::forward_sliced(sp, params, Some(xt)) {
            Ok(trace) => {
                let m = trace.logits[y_star] - trace.logits[y];
                if m < best {
                    best = m;
                    arg = xt.clone();
                }
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(EnumerationResult {
        exact_min_margin: best,
        argmin_perturbation: arg,
        count_enumerated: count,
    })
}

/// Entrywise minimum and maximum of the first hidden pre-activation `Ĥ^(2)`
/// over all admissible perturbations.
pub fn enumerate_first_layer_extremes(
    sp: &SlicedProblem,
    params: &GcnParams,
    budget: Budget,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let a = sp.mp(1);
    let w = params.weight(1);
    let b = params.bias(1).view().insert_axis(ndarray::Axis(0)).to_owned();
    let shape = (a.nrows(), w.ncols());
    let mut lo = Array2::from_elem(shape, f64::INFINITY);
    let mut hi = Array2::from_elem(shape, f64::NEG_INFINITY);
    for_each_perturbation(&sp.sliced_attrs, budget, |xt| {
        let h = a.dot(xt).dot(w) + &b;
        ndarray::Zip::from(&mut lo).and(&mut hi).and(&h).for_each(|l, u, &v| {
            *l = l.min(v);
            *u = u.max(v);
        });
    })?;
    Ok((lo, hi))
}
