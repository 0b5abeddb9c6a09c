//! Decoding annealer states, the average-linkage baseline, and the
//! end-to-end consensus pipeline.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::annealer::{anneal, AnnealParams, IncrementalState, NeighborTable, SolveReport};
use crate::error::{Error, Result};
use crate::partition::{Ensemble, Partition};
use crate::qubo::{
    build_binary, build_correlation, build_pairwise, BuilderConfig, ModelKind, QuboModel,
};
use crate::similarity::{build_similarity, SimilarityMatrix};

/// Makes every point of a one-hot state own exactly one slot.
///
/// Points are visited in index order; a violating point has its slots cleared
/// and then takes the slot minimizing the energy given all other bits, ties
/// going to the lowest slot. Feasible points are left untouched. Binary
/// models have no constraint and are returned unchanged.
pub fn repair(bits: &[bool], model: &QuboModel) -> Result<Vec<bool>> {
    Ok(repair_counting(bits, model)?.0)
}

fn repair_counting(bits: &[bool], model: &QuboModel) -> Result<(Vec<bool>, usize)> {
    check_len(bits, model)?;
    match model.kind() {
        ModelKind::Binary => return Ok((bits.to_vec(), 0)),
        ModelKind::Custom => return Err(Error::UnsupportedKind("custom")),
        _ => {}
    }
    let map = model.var_map();
    let violating: Vec<usize> = (0..map.num_points)
        .filter(|&u| (0..map.slots).filter(|&c| bits[map.index(u, c)]).count() != 1)
        .collect();
    if violating.is_empty() {
        return Ok((bits.to_vec(), 0));
    }

    let table = NeighborTable::new(model)?;
    let mut state = IncrementalState::new(&table, bits.to_vec())?;
    for &u in &violating {
        for c in 0..map.slots {
            let var = map.index(u, c);
            if state.bits()[var] {
                state.flip(var)?;
            }
        }
        let mut best_slot = 0;
        let mut best_delta = i64::MAX;
        for c in 0..map.slots {
            let delta = state.delta_energy(map.index(u, c))?;
            if delta < best_delta {
                best_delta = delta;
                best_slot = c;
            }
        }
        state.flip(map.index(u, best_slot))?;
    }
    Ok((state.bits().to_vec(), violating.len()))
}

/// Reads a partition out of a model state and reports how many points
/// violated one-hot before repair.
pub fn decode(bits: &[bool], model: &QuboModel) -> Result<(Partition, usize)> {
    decode_and_repair(bits, model)
}

pub(crate) fn decode_and_repair(bits: &[bool], model: &QuboModel) -> Result<(Partition, usize)> {
    let (fixed, violations) = repair_counting(bits, model)?;
    let map = model.var_map();
    let labels: Vec<usize> = match model.kind() {
        ModelKind::Pairwise | ModelKind::Correlation => (0..map.num_points)
            .map(|u| {
                (0..map.slots)
                    .find(|&c| fixed[map.index(u, c)])
                    .expect("repaired state is one-hot")
            })
            .collect(),
        ModelKind::Binary => (0..map.num_points)
            .map(|u| {
                (0..map.slots)
                    .filter(|&bit| fixed[map.index(u, bit)])
                    .fold(0usize, |code, bit| code | 1 << bit)
            })
            .collect(),
        ModelKind::Custom => return Err(Error::UnsupportedKind("custom")),
    };
    Ok((Partition::from_labels(&labels), violations))
}

fn check_len(bits: &[bool], model: &QuboModel) -> Result<()> {
    if bits.len() != model.num_vars() {
        return Err(Error::LengthMismatch {
            expected: model.num_vars(),
            actual: bits.len(),
        });
    }
    Ok(())
}

/// Average-linkage agglomerative clustering on the co-association matrix.
///
/// Starting from singletons, merges the two clusters with the largest mean
/// cross-pair similarity until `k_target` clusters remain. A cluster is
/// identified by its smallest point index; ties go to the lexicographically
/// smallest pair. Comparisons are exact (integer pair counts).
pub fn hac(sim: &SimilarityMatrix, k_target: usize) -> Result<Partition> {
    let n = sim.num_points();
    if k_target == 0 || k_target > n {
        return Err(Error::InvalidParameter(format!(
            "k_target = {k_target} must be in [1, {n}]"
        )));
    }
    // link[a * n + b]: summed agreement counts between clusters a and b
    let mut link: Vec<u64> = (0..n * n)
        .map(|idx| u64::from(sim.agree_count(idx / n, idx % n)))
        .collect();
    let mut size = vec![1u64; n];
    let mut owner: Vec<usize> = (0..n).collect();
    let mut active: Vec<usize> = (0..n).collect();

    while active.len() > k_target {
        let mut best: Option<(usize, usize)> = None;
        // best score as the fraction best_num / best_den
        let (mut best_num, mut best_den) = (0u128, 1u128);
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let num = u128::from(link[a * n + b]);
                let den = u128::from(size[a] * size[b]);
                if best.is_none() || num * best_den > best_num * den {
                    best = Some((a, b));
                    best_num = num;
                    best_den = den;
                }
            }
        }
        let (a, b) = best.expect("at least two active clusters");
        for &c in &active {
            if c != a && c != b {
                let merged = link[a * n + c] + link[b * n + c];
                link[a * n + c] = merged;
                link[c * n + a] = merged;
            }
        }
        size[a] += size[b];
        for o in owner.iter_mut().filter(|o| **o == b) {
            *o = a;
        }
        active.retain(|&c| c != b);
    }
    Ok(Partition::from_labels(&owner))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Pairwise-similarity QUBO.
    DaSm,
    /// Correlation-clustering QUBO.
    DaCr,
    /// Binary-coded pairwise QUBO.
    DaBin,
    /// Average-linkage agglomerative clustering on S.
    Hac,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::DaSm, Method::DaCr, Method::DaBin, Method::Hac];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::DaSm => "da-sm",
            Method::DaCr => "da-cr",
            Method::DaBin => "da-bin",
            Method::Hac => "hac",
        }
    }

    pub fn model_kind(self) -> Option<ModelKind> {
        match self {
            Method::DaSm => Some(ModelKind::Pairwise),
            Method::DaCr => Some(ModelKind::Correlation),
            Method::DaBin => Some(ModelKind::Binary),
            Method::Hac => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Penalty {
    /// 2^14 for the pairwise model, 2^15 for the correlation model.
    #[default]
    Default,
    /// `100 · n`.
    Theoretical,
    Fixed(i64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusConfig {
    pub method: Method,
    /// Cluster budget K (exact for HAC, slots for one-hot models, code count
    /// for the binary model).
    pub k: usize,
    pub penalty: Penalty,
    pub anneal: AnnealParams,
}

impl ConsensusConfig {
    pub fn new(method: Method, k: usize) -> Self {
        ConsensusConfig {
            method,
            k,
            penalty: Penalty::Default,
            anneal: AnnealParams::default(),
        }
    }

    fn builder_config(&self) -> BuilderConfig {
        let base = match self.method {
            Method::DaSm | Method::Hac => BuilderConfig::pairwise(self.k),
            Method::DaCr => BuilderConfig::correlation(self.k),
            Method::DaBin => return BuilderConfig::binary_for_clusters(self.k),
        };
        match self.penalty {
            Penalty::Default => base,
            Penalty::Theoretical => base.with_theoretical_penalty(),
            Penalty::Fixed(p) => base.with_penalty(p),
        }
    }

    /// Builds the QUBO for the configured method; `None` for HAC.
    pub fn build_model(&self, sim: &SimilarityMatrix) -> Result<Option<QuboModel>> {
        let cfg = self.builder_config();
        Ok(match self.method {
            Method::DaSm => Some(build_pairwise(sim, &cfg)?),
            Method::DaCr => Some(build_correlation(sim, &cfg)?),
            Method::DaBin => Some(build_binary(sim, &cfg)?),
            Method::Hac => None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ConsensusResult {
    pub method: Method,
    pub k: usize,
    pub partition: Partition,
    pub similarity: SimilarityMatrix,
    /// Annealer report; `None` for HAC.
    pub solve: Option<SolveReport>,
    pub wall_time: Duration,
}

/// Builds S, then either runs HAC or builds, anneals and decodes the
/// method's QUBO.
pub fn run_consensus(ensemble: &Ensemble, config: &ConsensusConfig) -> Result<ConsensusResult> {
    let started = Instant::now();
    let n = ensemble.num_points();
    if config.k == 0 || config.k > n {
        return Err(Error::InvalidParameter(format!(
            "K = {} must be in [1, {n}]",
            config.k
        )));
    }
    let similarity = build_similarity(ensemble)?;
    let (partition, solve) = match config.build_model(&similarity)? {
        None => (hac(&similarity, config.k)?, None),
        Some(model) => {
            let report = anneal(&model, &config.anneal)?;
            let partition = report
                .partition
                .clone()
                .ok_or(Error::UnsupportedKind("custom"))?;
            (partition, Some(report))
        }
    };
    Ok(ConsensusResult {
        method: config.method,
        k: config.k,
        partition,
        similarity,
        solve,
        wall_time: started.elapsed(),
    })
}
