//! Partition comparison and clustering quality measures.

use std::collections::HashMap;

use crate::dataset::{squared_distance, Dataset};
use crate::error::{Error, Result};
use crate::partition::{Ensemble, Partition};

fn check_same_len(a: &Partition, b: &Partition) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(a.len())
}

#[inline]
fn comb2(x: u64) -> u64 {
    x * x.saturating_sub(1) / 2
}

/// Pair counts `(Σ_ij C(n_ij, 2), Σ_i C(a_i, 2), Σ_j C(b_j, 2))` from the
/// contingency table of two partitions.
fn pair_sums(a: &Partition, b: &Partition) -> (u64, u64, u64) {
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    for (&x, &y) in a.assignment().iter().zip(b.assignment()) {
        *table.entry((x, y)).or_insert(0) += 1;
    }
    let both = table.values().map(|&c| comb2(c)).sum();
    let rows = a.cluster_sizes().iter().map(|&s| comb2(s as u64)).sum();
    let cols = b.cluster_sizes().iter().map(|&s| comb2(s as u64)).sum();
    (both, rows, cols)
}

/// Number of unordered pairs co-clustered in exactly one of the partitions.
pub fn pair_disagreement(p1: &Partition, p2: &Partition) -> Result<u64> {
    check_same_len(p1, p2)?;
    let (both, rows, cols) = pair_sums(p1, p2);
    Ok(rows + cols - 2 * both)
}

/// `Σ_i pair_disagreement(π_i, p)` over the ensemble.
pub fn partition_difference_objective(p: &Partition, ensemble: &Ensemble) -> Result<u64> {
    ensemble
        .members()
        .iter()
        .map(|member| pair_disagreement(member, p))
        .sum()
}

/// Fraction of point pairs on which the partitions agree.
pub fn rand_index(p1: &Partition, p2: &Partition) -> Result<f64> {
    let n = check_same_len(p1, p2)?;
    if n < 2 {
        return Err(Error::InvalidParameter("rand index needs n >= 2".into()));
    }
    let total = comb2(n as u64);
    let disagree = pair_disagreement(p1, p2)?;
    Ok((total - disagree) as f64 / total as f64)
}

/// Hubert–Arabie adjusted Rand index. When the chance-corrected denominator
/// vanishes, returns 1.0 for identical partitions and 0.0 otherwise.
pub fn adjusted_rand_index(p1: &Partition, p2: &Partition) -> Result<f64> {
    let n = check_same_len(p1, p2)?;
    if n < 2 {
        return Err(Error::InvalidParameter("ARI needs n >= 2".into()));
    }
    let (both, rows, cols) = pair_sums(p1, p2);
    let total = comb2(n as u64) as f64;
    let index = both as f64;
    let expected = rows as f64 * cols as f64 / total;
    let max_index = 0.5 * (rows as f64 + cols as f64);
    let denom = max_index - expected;
    if denom == 0.0 {
        return Ok(if p1 == p2 { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

/// Mean ARI between `p` and every member of the ensemble.
pub fn mean_ari(p: &Partition, ensemble: &Ensemble) -> Result<f64> {
    let mut total = 0.0;
    for member in ensemble.members() {
        total += adjusted_rand_index(member, p)?;
    }
    Ok(total / ensemble.len() as f64)
}

/// Mean silhouette coefficient with Euclidean distances. Points in singleton
/// clusters score 0.
pub fn silhouette(dataset: &Dataset, p: &Partition) -> Result<f64> {
    let n = dataset.num_points();
    if p.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: p.len(),
        });
    }
    let k = p.k();
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "silhouette is undefined for {k} cluster(s)"
        )));
    }
    let sizes = p.cluster_sizes();
    let mut sums = vec![0.0; k];
    let mut total = 0.0;
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i != j {
                sums[p.cluster_of(j)] +=
                    squared_distance(dataset.point(i), dataset.point(j)).sqrt();
            }
        }
        let own = p.cluster_of(i);
        if sizes[own] == 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Coefficient of variation of class sizes (population SD over mean).
pub fn class_cv(labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Empty("labels"));
    }
    let sizes: Vec<f64> = Partition::from_labels(labels)
        .cluster_sizes()
        .into_iter()
        .map(|s| s as f64)
        .collect();
    let mean = sizes.iter().sum::<f64>() / sizes.len() as f64;
    let var = sizes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / sizes.len() as f64;
    Ok(var.sqrt() / mean)
}
