//! Integer QUBO models for consensus clustering.
//!
//! Three encodings are supported:
//!
//! * [`ModelKind::Pairwise`]: one-hot `q_uc` variables, within-cluster
//!   dissimilarity `Σ_{u<v} (100 − D_uv) Σ_c q_uc q_vc` plus the penalty
//!   `A Σ_u (Σ_c q_uc − 1)²`.
//! * [`ModelKind::Correlation`]: the same variables, additionally charging
//!   `D_uv` for every pair placed in different slots, with penalty `B`.
//! * [`ModelKind::Binary`]: each point carries the binary code of its cluster
//!   id over `b` bits; a pair pays `(100 − D_uv)` per differing bit. There is
//!   no one-hot constraint and hence no penalty.
//!
//! The penalty expansion `P (Σ_c q_uc − 1)² = P Σ_c q_uc (−1) + 2P Σ_{c<c'}
//! q_uc q_uc' + P` contributes the constant `P·n`, which is kept as the model
//! constant so that feasible encodings evaluate exactly to the combinatorial
//! objective.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::similarity::SimilarityMatrix;

/// Penalty `A` used for the pairwise model unless the theoretical bound is requested.
pub const DEFAULT_PAIRWISE_PENALTY: i64 = 1 << 14;
/// Penalty `B` used for the correlation model unless the theoretical bound is requested.
pub const DEFAULT_CORRELATION_PENALTY: i64 = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Pairwise,
    Correlation,
    Binary,
    /// Hand-assembled models with no clustering semantics.
    Custom,
}

impl ModelKind {
    pub fn is_one_hot(self) -> bool {
        matches!(self, ModelKind::Pairwise | ModelKind::Correlation)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Pairwise => "pairwise",
            ModelKind::Correlation => "correlation",
            ModelKind::Binary => "binary",
            ModelKind::Custom => "custom",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pairwise" => Ok(ModelKind::Pairwise),
            "correlation" => Ok(ModelKind::Correlation),
            "binary" => Ok(ModelKind::Binary),
            "custom" => Ok(ModelKind::Custom),
            other => Err(Error::InvalidParameter(format!(
                "unknown model kind {other:?}"
            ))),
        }
    }
}

/// Bijection between variable indices and `(point, slot)` pairs, laid out
/// point-major: variable `u · slots + c`. A slot is a cluster id for one-hot
/// models and a bit position for the binary model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarMap {
    pub num_points: usize,
    pub slots: usize,
}

impl VarMap {
    #[inline]
    pub fn index(&self, point: usize, slot: usize) -> usize {
        point * self.slots + slot
    }

    #[inline]
    pub fn point_slot(&self, var: usize) -> (usize, usize) {
        (var / self.slots, var % self.slots)
    }

    pub fn num_vars(&self) -> usize {
        self.num_points * self.slots
    }
}

/// Quadratic pseudo-Boolean function with integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuboModel {
    kind: ModelKind,
    var_map: VarMap,
    biases: Vec<i64>,
    /// Sorted by `(i, j)`, `i < j`, no duplicates, no zero weights.
    couplers: Vec<(usize, usize, i64)>,
    constant: i64,
    penalty_weight: i64,
}

impl QuboModel {
    /// Assembles a [`ModelKind::Custom`] model. Duplicate couplers are summed,
    /// `(j, i)` is folded onto `(i, j)`, and zero weights are dropped.
    pub fn from_terms(
        biases: Vec<i64>,
        couplers: &[(usize, usize, i64)],
        constant: i64,
    ) -> Result<Self> {
        let num_vars = biases.len();
        if num_vars == 0 {
            return Err(Error::Empty("QUBO model"));
        }
        let mut terms = Vec::with_capacity(couplers.len());
        for &(i, j, w) in couplers {
            if i == j || i >= num_vars || j >= num_vars {
                return Err(Error::OutOfRange(format!(
                    "coupler ({i}, {j}) invalid for {num_vars} variables"
                )));
            }
            terms.push((i.min(j), i.max(j), w));
        }
        terms.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<(usize, usize, i64)> = Vec::with_capacity(terms.len());
        for (i, j, w) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => {
                    last.2 = last
                        .2
                        .checked_add(w)
                        .ok_or(Error::Overflow("merging couplers"))?;
                }
                _ => merged.push((i, j, w)),
            }
        }
        merged.retain(|&(_, _, w)| w != 0);
        let model = QuboModel {
            kind: ModelKind::Custom,
            var_map: VarMap {
                num_points: num_vars,
                slots: 1,
            },
            biases,
            couplers: merged,
            constant,
            penalty_weight: 0,
        };
        model.check_magnitude()?;
        Ok(model)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn var_map(&self) -> VarMap {
        self.var_map
    }

    pub fn num_vars(&self) -> usize {
        self.biases.len()
    }

    pub fn num_points(&self) -> usize {
        self.var_map.num_points
    }

    /// Slots per point: K for one-hot kinds, bit-width for the binary kind.
    pub fn slots(&self) -> usize {
        self.var_map.slots
    }

    pub fn biases(&self) -> &[i64] {
        &self.biases
    }

    pub fn couplers(&self) -> &[(usize, usize, i64)] {
        &self.couplers
    }

    /// Constant term, `penalty · n` for one-hot kinds.
    pub fn constant(&self) -> i64 {
        self.constant
    }

    pub fn penalty_weight(&self) -> i64 {
        self.penalty_weight
    }

    pub fn max_abs_coefficient(&self) -> i64 {
        self.biases
            .iter()
            .map(|b| b.abs())
            .chain(self.couplers.iter().map(|c| c.2.abs()))
            .max()
            .unwrap_or(0)
    }

    /// Rejects models whose energies could leave the `i64` range.
    fn check_magnitude(&self) -> Result<()> {
        let total: i128 = i128::from(self.constant).abs()
            + self
                .biases
                .iter()
                .map(|&b| i128::from(b).abs())
                .sum::<i128>()
            + self
                .couplers
                .iter()
                .map(|c| i128::from(c.2).abs())
                .sum::<i128>();
        if total > i128::from(i64::MAX) {
            return Err(Error::Overflow("bounding model energies"));
        }
        Ok(())
    }

    /// Energy including the constant term. Bits beyond `num_vars` are an error.
    pub fn energy(&self, bits: &[bool]) -> Result<i64> {
        eval_qubo(bits, self)
    }

    /// Encodes a partition: one-hot over K slots, or cluster ids as binary codes.
    pub fn encode(&self, partition: &Partition) -> Result<Vec<bool>> {
        if partition.len() != self.num_points() {
            return Err(Error::LengthMismatch {
                expected: self.num_points(),
                actual: partition.len(),
            });
        }
        let slots = self.slots();
        let mut bits = vec![false; self.num_vars()];
        match self.kind {
            ModelKind::Pairwise | ModelKind::Correlation => {
                if partition.k() > slots {
                    return Err(Error::OutOfRange(format!(
                        "partition uses {} clusters but the model has {slots} slots",
                        partition.k()
                    )));
                }
                for (u, &c) in partition.assignment().iter().enumerate() {
                    bits[self.var_map.index(u, c)] = true;
                }
            }
            ModelKind::Binary => {
                if slots < usize::BITS as usize && partition.k() > (1usize << slots) {
                    return Err(Error::OutOfRange(format!(
                        "partition uses {} clusters but {slots} bits encode at most {}",
                        partition.k(),
                        1usize << slots
                    )));
                }
                for (u, &c) in partition.assignment().iter().enumerate() {
                    for bit in 0..slots {
                        bits[self.var_map.index(u, bit)] = (c >> bit) & 1 == 1;
                    }
                }
            }
            ModelKind::Custom => return Err(Error::UnsupportedKind("custom")),
        }
        Ok(bits)
    }

    /// Text dump: a header line, then `<i> <c_i>` per nonzero bias and
    /// `<i> <j> <c_ij>` per coupler.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# qubo num_vars={} offset={} kind={} penalty={} points={} slots={}",
            self.num_vars(),
            self.constant,
            self.kind,
            self.penalty_weight,
            self.var_map.num_points,
            self.var_map.slots
        )?;
        for (i, &b) in self.biases.iter().enumerate() {
            if b != 0 {
                writeln!(out, "{i} {b}")?;
            }
        }
        for &(i, j, w) in &self.couplers {
            writeln!(out, "{i} {j} {w}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or(Error::Empty("model file"))??;
        let parse_err = |line: usize, message: String| Error::Parse { line, message };
        let body = header
            .strip_prefix("# qubo")
            .ok_or_else(|| parse_err(1, "missing '# qubo' header".into()))?;
        let mut fields = std::collections::HashMap::new();
        for field in body.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| parse_err(1, format!("malformed header field {field:?}")))?;
            fields.insert(k, v);
        }
        let get = |key: &str| {
            fields
                .get(key)
                .copied()
                .ok_or_else(|| parse_err(1, format!("header lacks {key}")))
        };
        let int = |key: &str| -> Result<i64> {
            get(key)?
                .parse()
                .map_err(|e| parse_err(1, format!("bad {key}: {e}")))
        };
        let num_vars = int("num_vars")? as usize;
        let constant = int("offset")?;
        let penalty_weight = int("penalty")?;
        let kind: ModelKind = get("kind")?.parse()?;
        let num_points = int("points")? as usize;
        let slots = int("slots")? as usize;
        if num_points * slots != num_vars {
            return Err(parse_err(1, "points * slots must equal num_vars".into()));
        }

        let mut biases = vec![0i64; num_vars];
        let mut couplers = Vec::new();
        for (offset, line) in lines.enumerate() {
            let line = line?;
            let line_no = offset + 2;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let num = |t: &str| -> Result<i64> {
                t.parse()
                    .map_err(|e| parse_err(line_no, format!("bad number {t:?}: {e}")))
            };
            let index = |t: &str| -> Result<usize> {
                let v = num(t)?;
                usize::try_from(v)
                    .ok()
                    .filter(|&i| i < num_vars)
                    .ok_or_else(|| parse_err(line_no, format!("index {v} out of range")))
            };
            match tokens.as_slice() {
                [] => continue,
                [i, b] => biases[index(i)?] = num(b)?,
                [i, j, w] => couplers.push((index(i)?, index(j)?, num(w)?)),
                _ => return Err(parse_err(line_no, format!("unexpected line {line:?}"))),
            }
        }
        let mut model = QuboModel::from_terms(biases, &couplers, constant)?;
        model.kind = kind;
        model.var_map = VarMap { num_points, slots };
        model.penalty_weight = penalty_weight;
        Ok(model)
    }
}

/// Slot count and penalty for a builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuilderConfig {
    /// K for one-hot models, bit-width for the binary model.
    pub k_slots: usize,
    pub penalty: i64,
    /// Use `100 · n` instead of `penalty`.
    pub use_theoretical_penalty: bool,
}

impl BuilderConfig {
    pub fn pairwise(k: usize) -> Self {
        BuilderConfig {
            k_slots: k,
            penalty: DEFAULT_PAIRWISE_PENALTY,
            use_theoretical_penalty: false,
        }
    }

    pub fn correlation(k: usize) -> Self {
        BuilderConfig {
            k_slots: k,
            penalty: DEFAULT_CORRELATION_PENALTY,
            use_theoretical_penalty: false,
        }
    }

    /// Binary model sized to represent `k` cluster codes.
    pub fn binary_for_clusters(k: usize) -> Self {
        BuilderConfig {
            k_slots: bits_for_clusters(k),
            penalty: 0,
            use_theoretical_penalty: false,
        }
    }

    pub fn with_penalty(mut self, penalty: i64) -> Self {
        self.penalty = penalty;
        self.use_theoretical_penalty = false;
        self
    }

    pub fn with_theoretical_penalty(mut self) -> Self {
        self.use_theoretical_penalty = true;
        self
    }

    fn effective_penalty(&self, n: usize) -> Result<i64> {
        let penalty = if self.use_theoretical_penalty {
            theoretical_penalty(n)?
        } else {
            self.penalty
        };
        if penalty <= 0 {
            return Err(Error::InvalidParameter(format!(
                "penalty must be positive, got {penalty}"
            )));
        }
        Ok(penalty)
    }
}

/// `ceil(log2 k)`, at least 1.
pub fn bits_for_clusters(k: usize) -> usize {
    if k <= 2 {
        1
    } else {
        (usize::BITS - (k - 1).leading_zeros()) as usize
    }
}

/// Penalty guaranteeing one-hot feasible optima on the quantized scale: `100 · n`.
pub fn theoretical_penalty(n: usize) -> Result<i64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    i64::try_from(n)
        .ok()
        .and_then(|n| n.checked_mul(100))
        .ok_or(Error::Overflow("computing the theoretical penalty"))
}

/// Pairwise-similarity model: within-cluster dissimilarity plus one-hot penalty A.
pub fn build_pairwise(sim: &SimilarityMatrix, cfg: &BuilderConfig) -> Result<QuboModel> {
    build_one_hot(sim, cfg, ModelKind::Pairwise)
}

/// Correlation-clustering model: within-cluster dissimilarity, between-cluster
/// similarity, and one-hot penalty B. K acts as an upper bound on clusters.
pub fn build_correlation(sim: &SimilarityMatrix, cfg: &BuilderConfig) -> Result<QuboModel> {
    build_one_hot(sim, cfg, ModelKind::Correlation)
}

fn build_one_hot(
    sim: &SimilarityMatrix,
    cfg: &BuilderConfig,
    kind: ModelKind,
) -> Result<QuboModel> {
    let n = sim.num_points();
    let k = cfg.k_slots;
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "one-hot models need K >= 2, got {k}"
        )));
    }
    let penalty = cfg.effective_penalty(n)?;
    let within = penalty
        .checked_mul(2)
        .ok_or(Error::Overflow("doubling the penalty"))?;
    let constant = penalty
        .checked_mul(n as i64)
        .ok_or(Error::Overflow("computing the penalty constant"))?;
    let var_map = VarMap {
        num_points: n,
        slots: k,
    };
    let num_vars = n
        .checked_mul(k)
        .ok_or(Error::Overflow("sizing the model"))?;

    let cross_pairs = if kind == ModelKind::Correlation { k } else { 1 };
    let mut couplers = Vec::with_capacity(n * k * ((k - 1) / 2 + (n / 2) * cross_pairs));
    // Emitted in (i, j) order: for variable (u, c), first the other slots of
    // u, then every (v, l) with v > u.
    for u in 0..n {
        for c in 0..k {
            let i = var_map.index(u, c);
            for c2 in c + 1..k {
                couplers.push((i, var_map.index(u, c2), within));
            }
            for v in u + 1..n {
                let apart = sim.dissimilarity(u, v);
                let together = sim.quantized(u, v);
                match kind {
                    ModelKind::Pairwise => {
                        if apart != 0 {
                            couplers.push((i, var_map.index(v, c), apart));
                        }
                    }
                    _ => {
                        for l in 0..k {
                            let w = if l == c { apart } else { together };
                            if w != 0 {
                                couplers.push((i, var_map.index(v, l), w));
                            }
                        }
                    }
                }
            }
        }
    }

    let model = QuboModel {
        kind,
        var_map,
        biases: vec![-penalty; num_vars],
        couplers,
        constant,
        penalty_weight: penalty,
    };
    model.check_magnitude()?;
    Ok(model)
}

/// Binary-coded model over `b = cfg.k_slots` bits per point, without penalty.
pub fn build_binary(sim: &SimilarityMatrix, cfg: &BuilderConfig) -> Result<QuboModel> {
    let n = sim.num_points();
    let bits = cfg.k_slots;
    if bits < 1 {
        return Err(Error::InvalidParameter(
            "binary model needs at least 1 bit".into(),
        ));
    }
    let var_map = VarMap {
        num_points: n,
        slots: bits,
    };
    let num_vars = n
        .checked_mul(bits)
        .ok_or(Error::Overflow("sizing the model"))?;
    let mut biases = vec![0i64; num_vars];
    let mut couplers = Vec::with_capacity(n * (n - 1) / 2 * bits);
    // (q_ui − q_vi)² = q_ui + q_vi − 2 q_ui q_vi
    for u in 0..n {
        for bit in 0..bits {
            let i = var_map.index(u, bit);
            for v in u + 1..n {
                let w = sim.dissimilarity(u, v);
                if w == 0 {
                    continue;
                }
                let j = var_map.index(v, bit);
                biases[i] += w;
                biases[j] += w;
                couplers.push((i, j, -2 * w));
            }
        }
    }
    let model = QuboModel {
        kind: ModelKind::Binary,
        var_map,
        biases,
        couplers,
        constant: 0,
        penalty_weight: 0,
    };
    model.check_magnitude()?;
    Ok(model)
}

/// Combinatorial objective of a partition on the quantized scale.
///
/// * pairwise: `Σ_{u<v, same} (100 − D_uv)`
/// * correlation: pairwise plus `Σ_{u<v, apart} D_uv`
/// * binary: `Σ_{u<v} (100 − D_uv) · hamming(id_u, id_v)`
pub fn eval_objective(
    partition: &Partition,
    sim: &SimilarityMatrix,
    kind: ModelKind,
) -> Result<i64> {
    let n = sim.num_points();
    if partition.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: partition.len(),
        });
    }
    let labels = partition.assignment();
    let mut total = 0i64;
    for u in 0..n {
        for v in u + 1..n {
            let same = labels[u] == labels[v];
            total += match kind {
                ModelKind::Pairwise if same => sim.dissimilarity(u, v),
                ModelKind::Pairwise => 0,
                ModelKind::Correlation if same => sim.dissimilarity(u, v),
                ModelKind::Correlation => sim.quantized(u, v),
                ModelKind::Binary => {
                    sim.dissimilarity(u, v) * i64::from((labels[u] ^ labels[v]).count_ones())
                }
                ModelKind::Custom => return Err(Error::UnsupportedKind("custom")),
            };
        }
    }
    Ok(total)
}

/// `Σ c_i q_i + Σ_{i<j} c_ij q_i q_j` plus the model constant.
pub fn eval_qubo(bits: &[bool], model: &QuboModel) -> Result<i64> {
    if bits.len() != model.num_vars() {
        return Err(Error::LengthMismatch {
            expected: model.num_vars(),
            actual: bits.len(),
        });
    }
    let linear: i64 = model
        .biases
        .iter()
        .zip(bits)
        .filter(|(_, &q)| q)
        .map(|(&c, _)| c)
        .sum();
    let quadratic: i64 = model
        .couplers
        .iter()
        .filter(|&&(i, j, _)| bits[i] && bits[j])
        .map(|&(_, _, w)| w)
        .sum();
    Ok(model.constant + linear + quadratic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Ensemble;
    use crate::similarity::build_similarity;

    fn sim_from(rows: &[&[usize]]) -> SimilarityMatrix {
        let members = rows.iter().map(|r| Partition::from_labels(r)).collect();
        build_similarity(&Ensemble::new(members, 0).unwrap()).unwrap()
    }

    fn all_states(num_vars: usize) -> impl Iterator<Item = Vec<bool>> {
        (0u32..1 << num_vars).map(move |mask| (0..num_vars).map(|i| mask >> i & 1 == 1).collect())
    }

    fn exhaustive_min(model: &QuboModel) -> (i64, Vec<Vec<bool>>) {
        let mut best = i64::MAX;
        let mut argmins = Vec::new();
        for bits in all_states(model.num_vars()) {
            let e = eval_qubo(&bits, model).unwrap();
            if e < best {
                best = e;
                argmins.clear();
            }
            if e == best {
                argmins.push(bits);
            }
        }
        (best, argmins)
    }

    #[test]
    fn pairwise_two_identical_points() {
        let sim = sim_from(&[&[0, 0]]);
        let model = build_pairwise(&sim, &BuilderConfig::pairwise(2)).unwrap();
        let (best, argmins) = exhaustive_min(&model);
        assert_eq!(best, 0);
        // any feasible state has energy 0 here
        for bits in argmins {
            assert_eq!(bits.iter().filter(|&&b| b).count(), 2);
        }
    }

    #[test]
    fn pairwise_two_dissimilar_points() {
        let sim = sim_from(&[&[0, 1]]);
        let model = build_pairwise(&sim, &BuilderConfig::pairwise(2).with_penalty(200)).unwrap();
        let (best, argmins) = exhaustive_min(&model);
        assert_eq!(best, 0);
        // separating assignments: (slot0, slot1) and (slot1, slot0)
        let separated = [
            vec![true, false, false, true],
            vec![false, true, true, false],
        ];
        assert_eq!(argmins.len(), 2);
        for s in &separated {
            assert!(argmins.contains(s));
        }
        assert_eq!(eval_qubo(&[true, false, true, false], &model).unwrap(), 100);
    }

    #[test]
    fn correlation_equal_cost_at_half_similarity() {
        let sim = sim_from(&[&[0, 0], &[0, 1]]);
        let model = build_correlation(&sim, &BuilderConfig::correlation(2)).unwrap();
        let together = eval_qubo(&[true, false, true, false], &model).unwrap();
        let apart = eval_qubo(&[true, false, false, true], &model).unwrap();
        assert_eq!(together, 50);
        assert_eq!(apart, 50);
        assert_eq!(exhaustive_min(&model).0, 50);
    }

    #[test]
    fn binary_two_dissimilar_points() {
        let sim = sim_from(&[&[0, 1]]);
        let model = build_binary(
            &sim,
            &BuilderConfig {
                k_slots: 1,
                penalty: 0,
                use_theoretical_penalty: false,
            },
        )
        .unwrap();
        assert_eq!(model.num_vars(), 2);
        assert_eq!(model.biases(), &[100, 100]);
        assert_eq!(model.couplers(), &[(0, 1, -200)]);
        assert_eq!(eval_qubo(&[false, false], &model).unwrap(), 0);
        assert_eq!(eval_qubo(&[true, true], &model).unwrap(), 0);
        assert_eq!(eval_qubo(&[true, false], &model).unwrap(), 100);
        assert_eq!(eval_qubo(&[false, true], &model).unwrap(), 100);
    }

    #[test]
    fn binary_model_charges_differing_codes() {
        let sim = sim_from(&[&[0, 0, 1, 1, 2], &[0, 0, 1, 1, 2]]);
        let cfg = BuilderConfig::binary_for_clusters(3);
        assert_eq!(cfg.k_slots, 2);
        let model = build_binary(&sim, &cfg).unwrap();
        // everyone shares code 0
        assert_eq!(
            eval_qubo(&vec![false; model.num_vars()], &model).unwrap(),
            0
        );
        // distinct codes 00, 01, 10 for the unanimous clusters: every cross pair
        // has weight 100; hamming(0,1) = hamming(0,2) = 1, hamming(1,2) = 2
        // cross pairs: 0-1: 4, 0-2: 2, 1-2: 2 -> 100 * (4 + 2 + 2 * 2) = 1000
        let p = Partition::from_labels(&[0, 0, 1, 1, 2]);
        let bits = model.encode(&p).unwrap();
        assert_eq!(eval_qubo(&bits, &model).unwrap(), 1000);
        assert_eq!(eval_objective(&p, &sim, ModelKind::Binary).unwrap(), 1000);
    }

    #[test]
    fn bit_width() {
        assert_eq!(bits_for_clusters(1), 1);
        assert_eq!(bits_for_clusters(2), 1);
        assert_eq!(bits_for_clusters(3), 2);
        assert_eq!(bits_for_clusters(4), 2);
        assert_eq!(bits_for_clusters(5), 3);
        assert_eq!(bits_for_clusters(12), 4);
    }

    #[test]
    fn penalties() {
        assert_eq!(theoretical_penalty(150).unwrap(), 15000);
        assert_eq!(theoretical_penalty(1).unwrap(), 100);
        assert!(theoretical_penalty(0).is_err());
        assert_eq!(BuilderConfig::pairwise(3).penalty, 16384);
        assert_eq!(BuilderConfig::correlation(3).penalty, 32768);
        let sim = sim_from(&[&[0, 1, 1]]);
        let m = build_correlation(
            &sim,
            &BuilderConfig::correlation(3).with_theoretical_penalty(),
        )
        .unwrap();
        assert_eq!(m.penalty_weight(), 300);
        assert!(build_pairwise(&sim, &BuilderConfig::pairwise(1)).is_err());
        assert!(build_pairwise(&sim, &BuilderConfig::pairwise(2).with_penalty(0)).is_err());
        assert_eq!(
            build_pairwise(
                &sim,
                &BuilderConfig::pairwise(2).with_penalty(i64::MAX / 2 + 1)
            ),
            Err(Error::Overflow("doubling the penalty"))
        );
        assert!(
            build_pairwise(&sim, &BuilderConfig::pairwise(2).with_penalty(i64::MAX / 4)).is_err()
        );
    }

    #[test]
    fn all_zero_energy_is_penalty_times_n() {
        let sim = sim_from(&[&[0, 1, 1, 2], &[0, 0, 1, 2]]);
        for model in [
            build_pairwise(&sim, &BuilderConfig::pairwise(3)).unwrap(),
            build_correlation(&sim, &BuilderConfig::correlation(3)).unwrap(),
        ] {
            let zeros = vec![false; model.num_vars()];
            assert_eq!(
                eval_qubo(&zeros, &model).unwrap(),
                4 * model.penalty_weight()
            );
        }
    }

    #[test]
    fn couplers_are_canonical() {
        let sim = sim_from(&[&[0, 1, 1, 2], &[0, 0, 1, 2], &[1, 0, 1, 1]]);
        for model in [
            build_pairwise(&sim, &BuilderConfig::pairwise(3)).unwrap(),
            build_correlation(&sim, &BuilderConfig::correlation(3)).unwrap(),
            build_binary(&sim, &BuilderConfig::binary_for_clusters(4)).unwrap(),
        ] {
            let c = model.couplers();
            assert!(c
                .iter()
                .all(|&(i, j, w)| i < j && j < model.num_vars() && w != 0));
            assert!(c.windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1)));
        }
    }

    #[test]
    fn objective_examples() {
        let rows: [&[usize]; 3] = [&[0, 0, 1, 1], &[0, 1, 1, 0], &[0, 0, 0, 1]];
        let sim = sim_from(&rows);
        let p = Partition::from_labels(&[0, 0, 1, 1]);
        // pair table (D values): 01:67 02:33 03:33 12:67 13:0 23:33
        // same pairs 01, 23 cost 33 + 67; apart pairs cost 33 + 33 + 67 + 0
        assert_eq!(eval_objective(&p, &sim, ModelKind::Pairwise).unwrap(), 100);
        assert_eq!(
            eval_objective(&p, &sim, ModelKind::Correlation).unwrap(),
            100 + 133
        );
        assert_eq!(
            eval_objective(&Partition::singletons(4), &sim, ModelKind::Pairwise).unwrap(),
            0
        );
        let unanimous = sim_from(&[&[0, 1, 1], &[0, 1, 1]]);
        let own = Partition::from_labels(&[0, 1, 1]);
        assert_eq!(
            eval_objective(&own, &unanimous, ModelKind::Correlation).unwrap(),
            0
        );
        assert!(eval_objective(&Partition::singletons(3), &sim, ModelKind::Pairwise).is_err());
        assert!(eval_objective(&p, &sim, ModelKind::Custom).is_err());
    }

    #[test]
    fn eval_qubo_basics() {
        let m = QuboModel::from_terms(vec![5], &[], 0).unwrap();
        assert_eq!(eval_qubo(&[true], &m).unwrap(), 5);
        assert_eq!(eval_qubo(&[false], &m).unwrap(), 0);
        assert!(eval_qubo(&[true, false], &m).is_err());
    }

    #[test]
    fn from_terms_merges_and_validates() {
        let m = QuboModel::from_terms(
            vec![0, 0, 0],
            &[(1, 0, 2), (0, 1, 3), (1, 2, 4), (2, 1, -4)],
            1,
        )
        .unwrap();
        assert_eq!(m.couplers(), &[(0, 1, 5)]);
        assert!(QuboModel::from_terms(vec![0, 0], &[(0, 0, 1)], 0).is_err());
        assert!(QuboModel::from_terms(vec![0, 0], &[(0, 2, 1)], 0).is_err());
        assert!(QuboModel::from_terms(vec![], &[], 0).is_err());
        assert!(QuboModel::from_terms(vec![i64::MAX, i64::MAX], &[], 0).is_err());
    }

    #[test]
    fn encoding_feasible_states_gives_objective() {
        let sim = sim_from(&[&[0, 0, 1, 1, 2], &[0, 1, 1, 2, 2], &[0, 0, 0, 1, 1]]);
        let pw = build_pairwise(&sim, &BuilderConfig::pairwise(3)).unwrap();
        let cr = build_correlation(&sim, &BuilderConfig::correlation(3)).unwrap();
        for labels in [[0, 0, 1, 1, 2], [0, 1, 2, 0, 1], [0, 0, 0, 0, 0]] {
            let p = Partition::from_labels(&labels);
            for (model, kind) in [(&pw, ModelKind::Pairwise), (&cr, ModelKind::Correlation)] {
                let bits = model.encode(&p).unwrap();
                assert_eq!(
                    eval_qubo(&bits, model).unwrap(),
                    eval_objective(&p, &sim, kind).unwrap()
                );
            }
        }
        assert!(pw.encode(&Partition::singletons(5)).is_err());
    }

    #[test]
    fn text_dump_round_trip() {
        let sim = sim_from(&[&[0, 0, 1], &[0, 1, 1]]);
        let model = build_correlation(&sim, &BuilderConfig::correlation(2)).unwrap();
        let mut buf = Vec::new();
        model.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "# qubo num_vars=6 offset=98304 kind=correlation penalty=32768 points=3 slots=2\n"
        ));
        assert!(text.contains("\n0 -32768\n"));
        assert!(text.contains("\n0 1 65536\n"));
        assert_eq!(QuboModel::read_text(buf.as_slice()).unwrap(), model);
        assert!(QuboModel::read_text("0 1\n".as_bytes()).is_err());
        assert!(QuboModel::read_text(
            "# qubo num_vars=2 offset=0 kind=custom penalty=0 points=2 slots=1\n0 9 1\n".as_bytes()
        )
        .is_err());
    }
}
