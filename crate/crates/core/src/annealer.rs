//! Parallel-trial simulated annealing with a dynamic energy offset.
//!
//! Every Monte Carlo step evaluates all single-bit flips. Flip `i` passes its
//! trial with probability `min(1, exp(−(ΔE_i − offset) / T))`; when at least
//! one flip passes, one of the passing flips is applied, chosen uniformly,
//! and the offset drops back to zero. When none passes, the offset grows by
//! `offset_increment`, which gradually lifts the state out of local minima.
//!
//! `ΔE_i` comes from a cached local field `Σ_j c_ij q_j`, so a trial is O(1)
//! and an applied flip costs O(degree). Temperatures follow a geometric
//! schedule, one value per sweep of `num_vars` steps.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::consensus::decode_and_repair;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::qubo::{eval_qubo, QuboModel};
use crate::rng::stream_rng;

/// Flips whose excess `ΔE − offset` is below `NEAR_BUCKETS · T` are bucketed
/// by `floor(excess / T)`; all others pass with probability below
/// `e^-NEAR_BUCKETS` and are sampled without being scanned individually.
const NEAR_BUCKETS: usize = 8;

/// Default offset growth per rejected step, in quantized energy units
/// (ten maximal pair costs). Much smaller steps leave one-hot models stuck
/// behind the penalty barrier for most of a run.
pub const DEFAULT_OFFSET_INCREMENT: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealParams {
    pub num_runs: usize,
    pub sweeps_per_run: usize,
    /// `None` selects the largest absolute model coefficient.
    pub t_initial: Option<f64>,
    pub t_final: f64,
    pub offset_increment: f64,
    /// Checked between sweeps. Results depend on timing when this triggers.
    pub time_limit: Option<Duration>,
    pub seed: u64,
}

impl Default for AnnealParams {
    fn default() -> Self {
        AnnealParams {
            num_runs: 8,
            sweeps_per_run: 2000,
            t_initial: None,
            t_final: 1.0,
            offset_increment: DEFAULT_OFFSET_INCREMENT,
            time_limit: None,
            seed: 0,
        }
    }
}

impl AnnealParams {
    /// Initial temperature for `model`, validating every parameter.
    pub fn resolve_t_initial(&self, model: &QuboModel) -> Result<f64> {
        if self.num_runs == 0 || self.sweeps_per_run == 0 {
            return Err(Error::InvalidParameter(
                "num_runs and sweeps_per_run must be >= 1".into(),
            ));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        if !(self.offset_increment.is_finite() && self.offset_increment > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "offset_increment must be positive, got {}",
                self.offset_increment
            )));
        }
        let t0 = match self.t_initial {
            Some(t) => t,
            None => (model.max_abs_coefficient() as f64).max(self.t_final),
        };
        if !t0.is_finite() || t0 < self.t_final {
            return Err(Error::InvalidParameter(format!(
                "t_initial ({t0}) must be finite and >= t_final ({})",
                self.t_final
            )));
        }
        Ok(t0)
    }

    /// Per-sweep multiplicative temperature decay.
    pub fn decay_factor(&self, t_initial: f64) -> f64 {
        if self.sweeps_per_run < 2 {
            1.0
        } else {
            (self.t_final / t_initial).powf(1.0 / (self.sweeps_per_run - 1) as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub sweep: usize,
    pub best_energy: i64,
    pub current_energy: i64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub best_bits: Vec<bool>,
    /// Energy of `best_bits`, model constant included.
    pub best_energy: i64,
    /// Decoded (and repaired) clustering; `None` for custom models.
    pub partition: Option<Partition>,
    /// Points violating one-hot in `best_bits`, before repair.
    pub violations: usize,
    pub repaired: bool,
    /// Total sweeps over all runs.
    pub sweeps_done: usize,
    pub seed: u64,
    pub wall_time: Duration,
    /// One trace per run, one point per completed sweep.
    pub traces: Vec<Vec<TracePoint>>,
}

/// Compressed adjacency of a QUBO model.
#[derive(Debug, Clone)]
pub struct NeighborTable {
    biases: Vec<i64>,
    constant: i64,
    start: Vec<usize>,
    index: Vec<u32>,
    weight: Vec<i64>,
}

impl NeighborTable {
    pub fn new(model: &QuboModel) -> Result<Self> {
        let n = model.num_vars();
        if n == 0 {
            return Err(Error::Empty("QUBO model"));
        }
        if u32::try_from(n).is_err() {
            return Err(Error::TooLarge(format!("{n} variables")));
        }
        let mut degree = vec![0usize; n + 1];
        for &(i, j, _) in model.couplers() {
            degree[i + 1] += 1;
            degree[j + 1] += 1;
        }
        for v in 1..=n {
            degree[v] += degree[v - 1];
        }
        let start = degree;
        let mut fill = start.clone();
        let mut index = vec![0u32; start[n]];
        let mut weight = vec![0i64; start[n]];
        for &(i, j, w) in model.couplers() {
            index[fill[i]] = j as u32;
            weight[fill[i]] = w;
            fill[i] += 1;
            index[fill[j]] = i as u32;
            weight[fill[j]] = w;
            fill[j] += 1;
        }
        Ok(NeighborTable {
            biases: model.biases().to_vec(),
            constant: model.constant(),
            start,
            index,
            weight,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.biases.len()
    }

    #[inline]
    fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, i64)> + '_ {
        let range = self.start[i]..self.start[i + 1];
        self.index[range.clone()]
            .iter()
            .zip(&self.weight[range])
            .map(|(&j, &w)| (j as usize, w))
    }
}

/// Bit-vector with the cached flip energies `ΔE_i = ±(c_i + Σ_j c_ij q_j)`.
#[derive(Debug, Clone)]
pub struct IncrementalState<'a> {
    table: &'a NeighborTable,
    bits: Vec<bool>,
    /// `+1` while bit `i` is clear, `−1` while set.
    polarity: Vec<i64>,
    delta: Vec<i64>,
    energy: i64,
}

impl<'a> IncrementalState<'a> {
    pub fn new(table: &'a NeighborTable, bits: Vec<bool>) -> Result<Self> {
        let n = table.num_vars();
        if bits.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: bits.len(),
            });
        }
        let mut field = vec![0i64; n];
        let mut energy = table.constant;
        for i in (0..n).filter(|&i| bits[i]) {
            energy += table.biases[i];
            for (j, w) in table.neighbors(i) {
                field[j] += w;
                if j < i && bits[j] {
                    energy += w;
                }
            }
        }
        let polarity: Vec<i64> = bits.iter().map(|&q| if q { -1 } else { 1 }).collect();
        let delta = (0..n)
            .map(|i| polarity[i] * (table.biases[i] + field[i]))
            .collect();
        Ok(IncrementalState {
            table,
            bits,
            polarity,
            delta,
            energy,
        })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn energy(&self) -> i64 {
        self.energy
    }

    /// Local field `Σ_j c_ij q_j` of variable `i`.
    pub fn field(&self, i: usize) -> i64 {
        self.polarity[i] * self.delta[i] - self.table.biases[i]
    }

    /// Energy change from flipping bit `i`.
    pub fn delta_energy(&self, i: usize) -> Result<i64> {
        self.delta
            .get(i)
            .copied()
            .ok_or_else(|| Error::OutOfRange(format!("variable {i} of {}", self.bits.len())))
    }

    /// Flips bit `i`, updating the energy and its neighbors' flip energies.
    pub fn flip(&mut self, i: usize) -> Result<()> {
        if i >= self.bits.len() {
            return Err(Error::OutOfRange(format!(
                "variable {i} of {}",
                self.bits.len()
            )));
        }
        self.flip_unchecked(i);
        Ok(())
    }

    #[inline]
    fn flip_unchecked(&mut self, i: usize) {
        self.energy += self.delta[i];
        // field change of every neighbor is ±w; +w when `i` turns on
        let direction = self.polarity[i];
        self.bits[i] = !self.bits[i];
        self.polarity[i] = -direction;
        self.delta[i] = -self.delta[i];
        let start = self.table.start[i];
        let end = self.table.start[i + 1];
        let index = &self.table.index[start..end];
        let weight = &self.table.weight[start..end];
        for (&j, &w) in index.iter().zip(weight) {
            let j = j as usize;
            self.delta[j] += direction * w * self.polarity[j];
        }
    }
}

struct RunOutcome {
    best_bits: Vec<bool>,
    best_energy: i64,
    sweeps_done: usize,
    trace: Vec<TracePoint>,
}

/// Anneals `model` with `params.num_runs` independent runs and returns the
/// best state seen. Run `r` draws from stream `r` of `params.seed`, so the
/// result does not depend on how runs are scheduled across threads.
pub fn anneal(model: &QuboModel, params: &AnnealParams) -> Result<SolveReport> {
    let started = Instant::now();
    let t_initial = params.resolve_t_initial(model)?;
    let table = NeighborTable::new(model)?;
    let outcomes: Vec<RunOutcome> = (0..params.num_runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = stream_rng(params.seed, run as u64);
            anneal_run(&table, params, t_initial, started, &mut rng)
        })
        .collect();

    let sweeps_done = outcomes.iter().map(|o| o.sweeps_done).sum();
    let mut traces = Vec::with_capacity(outcomes.len());
    let mut best: Option<(i64, Vec<bool>)> = None;
    for outcome in outcomes {
        if best.as_ref().is_none_or(|(e, _)| outcome.best_energy < *e) {
            best = Some((outcome.best_energy, outcome.best_bits));
        }
        traces.push(outcome.trace);
    }
    let (best_energy, best_bits) = best.expect("num_runs >= 1");
    debug_assert_eq!(eval_qubo(&best_bits, model), Ok(best_energy));

    let (partition, violations) = match decode_and_repair(&best_bits, model) {
        Ok((p, v)) => (Some(p), v),
        Err(Error::UnsupportedKind(_)) => (None, 0),
        Err(e) => return Err(e),
    };
    Ok(SolveReport {
        best_bits,
        best_energy,
        partition,
        violations,
        repaired: violations > 0,
        sweeps_done,
        seed: params.seed,
        wall_time: started.elapsed(),
        traces,
    })
}

fn anneal_run(
    table: &NeighborTable,
    params: &AnnealParams,
    t_initial: f64,
    started: Instant,
    rng: &mut ChaCha8Rng,
) -> RunOutcome {
    let n = table.num_vars();
    let initial: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    let mut state = IncrementalState::new(table, initial).expect("length matches table");
    let mut best_energy = state.energy();
    let mut best_bits = state.bits().to_vec();
    let decay = params.decay_factor(t_initial);
    let mut temperature = t_initial;
    let mut offset = 0.0f64;
    let mut scratch = TrialScratch::new(n);
    let mut trace = Vec::with_capacity(params.sweeps_per_run);

    for sweep in 0..params.sweeps_per_run {
        let inv_t = 1.0 / temperature;
        for _ in 0..n {
            trial_step(&state, offset, inv_t, &mut scratch, rng);
            if scratch.passers.is_empty() {
                offset += params.offset_increment;
                continue;
            }
            // uniform over passers in variable order
            let rank = rng.random_range(0..scratch.passers.len());
            let chosen = *scratch.passers.select_nth_unstable(rank).1;
            state.flip_unchecked(chosen);
            offset = 0.0;
            if state.energy() < best_energy {
                best_energy = state.energy();
                best_bits.copy_from_slice(state.bits());
            }
        }
        trace.push(TracePoint {
            sweep,
            best_energy,
            current_energy: state.energy(),
            offset,
        });
        temperature *= decay;
        if params
            .time_limit
            .is_some_and(|limit| started.elapsed() >= limit)
        {
            break;
        }
    }

    RunOutcome {
        best_bits,
        best_energy,
        sweeps_done: trace.len(),
        trace,
    }
}

/// Per-run buffers for [`trial_step`].
struct TrialScratch {
    buckets: Vec<Vec<u32>>,
    passers: Vec<usize>,
}

impl TrialScratch {
    fn new(n: usize) -> Self {
        TrialScratch {
            buckets: vec![Vec::new(); NEAR_BUCKETS],
            passers: Vec::with_capacity(n),
        }
    }
}

/// Visits `0..len` as a Bernoulli(`p_max`) process using geometric gaps.
fn skip_sample(
    len: usize,
    p_max: f64,
    rng: &mut ChaCha8Rng,
    mut visit: impl FnMut(usize, &mut ChaCha8Rng),
) {
    if len == 0 || p_max <= 0.0 {
        return;
    }
    if p_max >= 1.0 {
        (0..len).for_each(|i| visit(i, rng));
        return;
    }
    let log_q = (-p_max).ln_1p();
    let mut pos = 0usize;
    loop {
        let u = 1.0 - rng.random::<f64>();
        let gap = (u.ln() / log_q).floor();
        if gap >= (len - pos) as f64 {
            return;
        }
        pos += gap as usize;
        visit(pos, rng);
        pos += 1;
        if pos >= len {
            return;
        }
    }
}

/// Fills `scratch.passers` (in no particular order) with the flips that
/// pass their trial, each independently with probability
/// `min(1, exp(−(ΔE_i − offset)/T))`.
///
/// A set of candidates whose pass probabilities are all at most `p_max` is
/// visited as a Bernoulli(`p_max`) process and each visited flip is kept with
/// probability `p_i / p_max`, which is exact and costs random draws only in
/// proportion to `p_max`. Bucket `b` of near flips uses `p_max = e^-b`; the
/// remaining far flips share one bound and are never listed.
fn trial_step(
    state: &IncrementalState<'_>,
    offset: f64,
    inv_t: f64,
    scratch: &mut TrialScratch,
    rng: &mut ChaCha8Rng,
) {
    let TrialScratch { buckets, passers } = scratch;
    passers.clear();
    buckets.iter_mut().for_each(Vec::clear);
    let deltas = &state.delta;
    // integer d is near iff d < near_limit iff d < ceil(near_limit)
    let near_limit = (offset + NEAR_BUCKETS as f64 / inv_t).ceil();
    let near_below = if near_limit >= i64::MAX as f64 {
        i64::MAX
    } else {
        near_limit as i64
    };
    let pass_probability = |d: i64| (-(d as f64 - offset) * inv_t).exp();

    let mut lowest = i64::MAX;
    for (i, &d) in deltas.iter().enumerate() {
        lowest = lowest.min(d);
        if d < near_below {
            let excess = d as f64 - offset;
            if excess <= 0.0 {
                passers.push(i);
            } else {
                let b = ((excess * inv_t) as usize).min(NEAR_BUCKETS - 1);
                buckets[b].push(i as u32);
            }
        }
    }
    for (b, members) in buckets.iter().enumerate() {
        let p_max = (-(b as f64)).exp();
        skip_sample(members.len(), p_max, rng, |k, rng| {
            let i = members[k] as usize;
            if rng.random::<f64>() * p_max < pass_probability(deltas[i]) {
                passers.push(i);
            }
        });
    }

    let far_bound = ((lowest as f64 - offset) * inv_t).max(NEAR_BUCKETS as f64);
    let p_max = (-far_bound).exp();
    skip_sample(deltas.len(), p_max, rng, |i, rng| {
        let d = deltas[i];
        if d >= near_below && rng.random::<f64>() * p_max < pass_probability(d) {
            passers.push(i);
        }
    });
}

/// Writes one run's trace as `sweep,best_energy,current_energy,offset`.
pub fn write_trace_csv<W: Write>(trace: &[TracePoint], mut out: W) -> Result<()> {
    writeln!(out, "sweep,best_energy,current_energy,offset")?;
    for p in trace {
        writeln!(
            out,
            "{},{},{},{}",
            p.sweep, p.best_energy, p.current_energy, p.offset
        )?;
    }
    Ok(())
}
