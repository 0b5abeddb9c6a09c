//! Set partitions and ensembles of partitions.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// A clustering of `n` points with cluster ids compacted to `[0, k)`.
///
/// Ids are assigned in order of first appearance, so two assignments that
/// describe the same set partition produce equal `Partition` values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
}

/// Compacts `assignment` into canonical first-appearance form.
pub fn validate_partition(assignment: &[usize], n: usize) -> Result<Partition> {
    if assignment.is_empty() {
        return Err(Error::Empty("partition assignment"));
    }
    if assignment.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: assignment.len(),
        });
    }
    Ok(Partition::from_labels(assignment))
}

impl Partition {
    /// Canonicalizes arbitrary labels. Panics on nothing; empty input gives
    /// an empty partition, which callers reject through `validate_partition`.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let assignment = labels
            .iter()
            .map(|&label| {
                let next = remap.len();
                *remap.entry(label).or_insert(next)
            })
            .collect();
        Partition {
            assignment,
            k: remap.len(),
        }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            assignment: (0..n).collect(),
            k: n,
        }
    }

    pub fn single_cluster(n: usize) -> Self {
        Partition {
            assignment: vec![0; n],
            k: usize::from(n > 0),
        }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Number of clusters in use.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    #[inline]
    pub fn cluster_of(&self, point: usize) -> usize {
        self.assignment[point]
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// Point indices grouped by cluster id.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k];
        for (point, &c) in self.assignment.iter().enumerate() {
            groups[c].push(point);
        }
        groups
    }

    #[inline]
    pub fn same_cluster(&self, u: usize, v: usize) -> bool {
        self.assignment[u] == self.assignment[v]
    }
}

/// A set of base clusterings over the same points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ensemble {
    members: Vec<Partition>,
    generator_seed: u64,
}

impl Ensemble {
    pub fn new(members: Vec<Partition>, generator_seed: u64) -> Result<Self> {
        let first = members.first().ok_or(Error::Empty("ensemble"))?;
        let n = first.len();
        if n == 0 {
            return Err(Error::Empty("ensemble member"));
        }
        if let Some(bad) = members.iter().find(|p| p.len() != n) {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: bad.len(),
            });
        }
        Ok(Ensemble {
            members,
            generator_seed,
        })
    }

    pub fn members(&self) -> &[Partition] {
        &self.members
    }

    /// Number of clusterings `m`.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Number of points `n` shared by all members.
    pub fn num_points(&self) -> usize {
        self.members[0].len()
    }

    pub fn generator_seed(&self) -> u64 {
        self.generator_seed
    }

    pub fn mean_k(&self) -> f64 {
        let total: usize = self.members.iter().map(Partition::k).sum();
        total as f64 / self.members.len() as f64
    }
}
