//! Exhaustive references for small instances. Nothing here is used by the
//! solving pipeline; tests and the acceptance suite compare against it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::qubo::{eval_objective, ModelKind, QuboModel};
use crate::similarity::SimilarityMatrix;

pub const MAX_ENUMERATION_POINTS: usize = 12;
pub const MAX_CONSENSUS_POINTS: usize = 10;
pub const MAX_BRUTE_FORCE_VARS: usize = 24;
/// Slot count limit for [`exhaustive_one_hot_minimum`] (point sets are `u32` masks).
pub const MAX_SYMMETRIC_SLOTS: usize = 16;

/// Iterator over set partitions as restricted growth strings, in
/// lexicographic order of the strings.
#[derive(Debug, Clone)]
pub struct PartitionIter {
    labels: Vec<usize>,
    k_max: usize,
    done: bool,
}

impl PartitionIter {
    fn advance(&mut self) -> bool {
        let n = self.labels.len();
        let mut prefix_max = vec![0usize; n];
        for i in 1..n {
            prefix_max[i] = prefix_max[i - 1].max(self.labels[i - 1]);
        }
        for i in (1..n).rev() {
            let next = self.labels[i] + 1;
            if next <= prefix_max[i] + 1 && next < self.k_max {
                self.labels[i] = next;
                self.labels[i + 1..].iter_mut().for_each(|l| *l = 0);
                return true;
            }
        }
        false
    }
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        let out = Partition::from_labels(&self.labels);
        if !self.advance() {
            self.done = true;
        }
        Some(out)
    }
}

/// Every set partition of `n` items exactly once, optionally limited to at
/// most `k_max` blocks.
pub fn enumerate_partitions(n: usize, k_max: Option<usize>) -> Result<PartitionIter> {
    if n == 0 {
        return Err(Error::Empty("points"));
    }
    if n > MAX_ENUMERATION_POINTS {
        return Err(Error::TooLarge(format!(
            "partition enumeration supports n <= {MAX_ENUMERATION_POINTS}, got {n}"
        )));
    }
    let k_max = k_max.unwrap_or(n);
    Ok(PartitionIter {
        labels: vec![0; n],
        k_max,
        done: k_max == 0,
    })
}

/// Minimum of [`eval_objective`] over all partitions with at most `k_max`
/// blocks. Ties resolve to the first partition in enumeration order.
pub fn brute_force_consensus(
    sim: &SimilarityMatrix,
    kind: ModelKind,
    k_max: usize,
) -> Result<(Partition, i64)> {
    let n = sim.num_points();
    if n > MAX_CONSENSUS_POINTS {
        return Err(Error::TooLarge(format!(
            "brute-force consensus supports n <= {MAX_CONSENSUS_POINTS}, got {n}"
        )));
    }
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be positive".into()));
    }
    let mut best: Option<(Partition, i64)> = None;
    for p in enumerate_partitions(n, Some(k_max))? {
        let value = eval_objective(&p, sim, kind)?;
        if best.as_ref().is_none_or(|(_, b)| value < *b) {
            best = Some((p, value));
        }
    }
    best.ok_or(Error::Empty("partitions"))
}

/// Symmetric dense coefficient matrix with biases on the diagonal.
fn dense_matrix(model: &QuboModel) -> Vec<Vec<i64>> {
    let n = model.num_vars();
    let mut m = vec![vec![0i64; n]; n];
    for (i, &c) in model.biases().iter().enumerate() {
        m[i][i] = c;
    }
    for &(i, j, w) in model.couplers() {
        m[i][j] = w;
        m[j][i] = w;
    }
    m
}

/// Exhaustive minimum over all `2^N` bit vectors. Ties resolve to the
/// lowest vector in binary order, reading variable 0 as the most
/// significant bit. Energies include the model constant.
pub fn brute_force_qubo(model: &QuboModel) -> Result<(Vec<bool>, i64)> {
    let n = model.num_vars();
    if n > MAX_BRUTE_FORCE_VARS {
        return Err(Error::TooLarge(format!(
            "brute-force QUBO supports at most {MAX_BRUTE_FORCE_VARS} variables, got {n}"
        )));
    }
    let matrix = dense_matrix(model);
    // Shard on the leading variables; each shard Gray-codes the rest.
    let fixed = n.min(6);
    let free = n - fixed;
    let (energy, code) = (0u64..1 << fixed)
        .into_par_iter()
        .map(|prefix| {
            let mut bits = vec![false; n];
            for (i, bit) in bits.iter_mut().enumerate().take(fixed) {
                *bit = prefix >> (fixed - 1 - i) & 1 == 1;
            }
            let mut energy = model.constant();
            let mut field = vec![0i64; n];
            for i in 0..n {
                field[i] = matrix[i][i];
                for j in 0..fixed {
                    if bits[j] && j != i {
                        field[i] += matrix[i][j];
                    }
                }
            }
            for i in 0..fixed {
                if bits[i] {
                    energy += matrix[i][i];
                    for j in i + 1..fixed {
                        if bits[j] {
                            energy += matrix[i][j];
                        }
                    }
                }
            }
            let mut code = prefix << free;
            let mut best = (energy, code);
            for step in 1u64..1 << free {
                let pos = step.trailing_zeros() as usize;
                let var = n - 1 - pos;
                let sign = if bits[var] { -1 } else { 1 };
                energy += sign * field[var];
                bits[var] = !bits[var];
                code ^= 1 << pos;
                let row = &matrix[var];
                for (j, f) in field.iter_mut().enumerate() {
                    if j != var {
                        *f += sign * row[j];
                    }
                }
                if (energy, code) < best {
                    best = (energy, code);
                }
            }
            best
        })
        .min()
        .expect("at least one shard");
    let bits = (0..n).map(|i| code >> (n - 1 - i) & 1 == 1).collect();
    Ok((bits, energy))
}

/// Outcome of [`exhaustive_one_hot_minimum`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHotMinimum {
    /// A minimizer among one-hot feasible vectors, with its energy.
    pub best_feasible: Option<(Vec<bool>, i64)>,
    /// Lowest energy over vectors violating the one-hot constraint.
    pub best_infeasible: Option<i64>,
}

impl OneHotMinimum {
    pub fn minimum(&self) -> i64 {
        let f = self.best_feasible.as_ref().map(|(_, e)| *e);
        f.into_iter()
            .chain(self.best_infeasible)
            .min()
            .expect("non-empty search")
    }

    /// True when every global minimizer is one-hot feasible.
    pub fn strictly_feasible(&self) -> bool {
        match (&self.best_feasible, self.best_infeasible) {
            (Some((_, f)), Some(i)) => *f < i,
            (Some(_), None) => true,
            (None, _) => false,
        }
    }
}

/// Per-point and per-pair coefficients of a slot-symmetric one-hot model.
struct SymmetricModel {
    n: usize,
    k: usize,
    constant: i64,
    bias: Vec<i64>,
    within: Vec<i64>,
    /// `same[u][v]`: coupler between equal slots of two points.
    same: Vec<Vec<i64>>,
    /// `cross[u][v]`: coupler between different slots of two points.
    cross: Vec<Vec<i64>>,
}

impl SymmetricModel {
    fn extract(model: &QuboModel) -> Result<Self> {
        let vm = model.var_map();
        let (n, k) = (vm.num_points, vm.slots);
        let m = dense_matrix(model);
        let asym =
            || Error::InvalidParameter("model is not invariant under slot permutations".into());
        let mut bias = vec![0; n];
        let mut within = vec![0; n];
        let mut same = vec![vec![0; n]; n];
        let mut cross = vec![vec![0; n]; n];
        for u in 0..n {
            bias[u] = m[vm.index(u, 0)][vm.index(u, 0)];
            if k > 1 {
                within[u] = m[vm.index(u, 0)][vm.index(u, 1)];
            }
            for v in 0..n {
                if v != u {
                    same[u][v] = m[vm.index(u, 0)][vm.index(v, 0)];
                    if k > 1 {
                        cross[u][v] = m[vm.index(u, 0)][vm.index(v, 1)];
                    }
                }
            }
        }
        for u in 0..n {
            for c in 0..k {
                let i = vm.index(u, c);
                for v in 0..n {
                    for d in 0..k {
                        let j = vm.index(v, d);
                        let expected = match (u == v, c == d) {
                            (true, true) => bias[u],
                            (true, false) => within[u],
                            (false, true) => same[u][v],
                            (false, false) => cross[u][v],
                        };
                        if m[i][j] != expected {
                            return Err(asym());
                        }
                    }
                }
            }
        }
        Ok(Self {
            n,
            k,
            constant: model.constant(),
            bias,
            within,
            same,
            cross,
        })
    }

    fn self_energy(&self, u: usize, set: u32) -> i64 {
        let s = i64::from(set.count_ones());
        self.bias[u] * s + self.within[u] * s * (s - 1) / 2
    }

    fn pair_energy(&self, u: usize, su: u32, v: usize, sv: u32) -> i64 {
        let both = i64::from((su & sv).count_ones());
        let prod = i64::from(su.count_ones()) * i64::from(sv.count_ones());
        self.same[u][v] * both + self.cross[u][v] * (prod - both)
    }

    fn energy_of(&self, sets: &[u32]) -> i64 {
        let mut e = self.constant;
        for u in 0..sets.len() {
            e += self.self_energy(u, sets[u]);
            for v in u + 1..sets.len() {
                e += self.pair_energy(u, sets[u], v, sets[v]);
            }
        }
        e
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    energy: i64,
    sets: [u32; 8],
}

fn better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.energy < x.energy { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Exact minimum of a one-hot model over all `2^(n·K)` bit vectors,
/// exploiting invariance under permutations of the slots.
///
/// Point 0's slot set is fixed to a prefix `{0..s}`, point 1's to a canonical
/// representative under the stabiliser of that prefix, the middle points are
/// enumerated by Gray code, and the last point is minimised in closed form
/// (for a fixed set size, take the cheapest slots). Supports `3 ≤ n ≤ 8`.
pub fn exhaustive_one_hot_minimum(model: &QuboModel) -> Result<OneHotMinimum> {
    if !model.kind().is_one_hot() {
        return Err(Error::UnsupportedKind(model.kind().as_str()));
    }
    let sym = SymmetricModel::extract(model)?;
    let (n, k) = (sym.n, sym.k);
    if !(3..=8).contains(&n) || k > MAX_SYMMETRIC_SLOTS {
        return Err(Error::TooLarge(format!(
            "symmetric search supports 3 <= n <= 8 and K <= {MAX_SYMMETRIC_SLOTS}, got n={n}, K={k}"
        )));
    }
    let middle = n - 3;
    let middle_bits = middle * k;
    if middle_bits > 40 {
        return Err(Error::TooLarge(format!("{middle_bits} free variables")));
    }
    let prefix = |len: usize, from: usize| -> u32 { ((1u32 << len) - 1) << from };
    let mut roots = Vec::new();
    for s in 0..=k {
        for a in 0..=s {
            for b in 0..=k - s {
                roots.push((prefix(s, 0), prefix(a, 0) | prefix(b, s)));
            }
        }
    }
    let last = n - 1;
    let results: Vec<(Option<Candidate>, Option<i64>)> = roots
        .par_iter()
        .map(|&(s0, s1)| {
            let mut sets = [0u32; 8];
            sets[0] = s0;
            sets[1] = s1;
            // energy of points 0..last (constant included)
            let mut energy = sym.energy_of(&sets[..last]);
            let mut best_feasible: Option<Candidate> = None;
            let mut best_infeasible: Option<i64> = None;
            let mut costs = vec![0i64; k];
            let mut step: u64 = 0;
            loop {
                // closed-form minimisation over the last point's slot set
                for (c, cost) in costs.iter_mut().enumerate() {
                    let mut g = sym.bias[last];
                    for (v, &set) in sets[..last].iter().enumerate() {
                        let size = i64::from(set.count_ones());
                        let inside = i64::from(set >> c & 1);
                        g += sym.cross[v][last] * (size - inside) + sym.same[v][last] * inside;
                    }
                    *cost = g;
                }
                let mut order: Vec<usize> = (0..k).collect();
                order.sort_by_key(|&c| (costs[c], c));
                let prior_feasible = sets[..last].iter().all(|s| s.count_ones() == 1);
                let mut acc = 0i64;
                for size in 0..=k {
                    if size > 0 {
                        acc += costs[order[size - 1]];
                    }
                    let s = size as i64;
                    let total = energy + acc + sym.within[last] * s * (s - 1) / 2;
                    if prior_feasible && size == 1 {
                        if best_feasible.is_none_or(|b| total < b.energy) {
                            let mut full = sets;
                            full[last] = 1 << order[0];
                            best_feasible = Some(Candidate {
                                energy: total,
                                sets: full,
                            });
                        }
                    } else if best_infeasible.is_none_or(|b| total < b) {
                        best_infeasible = Some(total);
                    }
                }
                step += 1;
                if step >= 1u64 << middle_bits {
                    break;
                }
                let pos = step.trailing_zeros() as usize;
                let (u, c) = (2 + pos / k, pos % k);
                let before = sym.self_energy(u, sets[u])
                    + (0..last)
                        .filter(|&v| v != u)
                        .map(|v| sym.pair_energy(u, sets[u], v, sets[v]))
                        .sum::<i64>();
                sets[u] ^= 1 << c;
                let after = sym.self_energy(u, sets[u])
                    + (0..last)
                        .filter(|&v| v != u)
                        .map(|v| sym.pair_energy(u, sets[u], v, sets[v]))
                        .sum::<i64>();
                energy += after - before;
            }
            (best_feasible, best_infeasible)
        })
        .collect();
    let mut feasible = None;
    let mut infeasible: Option<i64> = None;
    for (f, i) in results {
        feasible = better(feasible, f);
        infeasible = match (infeasible, i) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }
    let vm = model.var_map();
    let best_feasible = feasible.map(|cand| {
        let mut bits = vec![false; vm.num_vars()];
        for u in 0..n {
            for c in 0..k {
                bits[vm.index(u, c)] = cand.sets[u] >> c & 1 == 1;
            }
        }
        (bits, cand.energy)
    });
    Ok(OneHotMinimum {
        best_feasible,
        best_infeasible: infeasible,
    })
}

/// True when every point has exactly one active slot.
pub fn is_one_hot_feasible(bits: &[bool], model: &QuboModel) -> bool {
    let vm = model.var_map();
    bits.len() == vm.num_vars()
        && (0..vm.num_points).all(|u| (0..vm.slots).filter(|&c| bits[vm.index(u, c)]).count() == 1)
}
