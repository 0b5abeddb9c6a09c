//! Base-clustering ensembles from randomized K-Means.
//!
//! Each member draws its cluster count uniformly from `[2, 3·K̃]` and its
//! initial centers uniformly (without replacement) from the data points, then
//! runs Lloyd iterations. Member `i` uses stream `i` of the ensemble seed, so
//! the ensemble is identical however the members are scheduled.

use std::io::{BufRead, Write};

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{squared_distance, Dataset};
use crate::error::{Error, Result};
use crate::partition::{Ensemble, Partition};
use crate::rng::stream_rng;

pub const DEFAULT_MEMBERS: usize = 100;
pub const DEFAULT_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EnsembleConfig {
    /// Number of clusterings.
    pub m: usize,
    /// Ground-truth cluster count K̃.
    pub k_true: usize,
    /// Lloyd iteration cap.
    pub max_iters: usize,
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn new(k_true: usize, seed: u64) -> Self {
        EnsembleConfig {
            m: DEFAULT_MEMBERS,
            k_true,
            max_iters: DEFAULT_MAX_ITERS,
            seed,
        }
    }

    /// Inclusive range the per-member K is drawn from.
    pub fn k_range(&self) -> (usize, usize) {
        (2, 3 * self.k_true)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidParameter(
                "ensemble size m must be >= 1".into(),
            ));
        }
        if self.k_true == 0 {
            return Err(Error::InvalidParameter("k_true must be >= 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// Lloyd's algorithm from `k` distinct data points chosen uniformly at random.
pub fn kmeans(dataset: &Dataset, k: usize, seed: u64, max_iters: usize) -> Result<Partition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    kmeans_with_rng(dataset, k, max_iters, &mut rng)
}

fn kmeans_with_rng(
    dataset: &Dataset,
    k: usize,
    max_iters: usize,
    rng: &mut impl Rng,
) -> Result<Partition> {
    let n = dataset.num_points();
    let d = dataset.num_features();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must be in [1, {n}]"
        )));
    }
    if max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
    }
    if let Some(pos) = dataset.features().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: pos / d,
            col: pos % d,
        });
    }

    let mut centers: Vec<f64> = Vec::with_capacity(k * d);
    for idx in sample(rng, n, k).into_iter() {
        centers.extend_from_slice(dataset.point(idx));
    }
    let mut assignment = vec![usize::MAX; n];

    for _ in 0..max_iters {
        let mut changed = false;
        for (i, slot) in assignment.iter_mut().enumerate() {
            let nearest = nearest_center(dataset.point(i), &centers, d);
            if *slot != nearest {
                *slot = nearest;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        update_centers(dataset, &mut assignment, &mut centers, k);
    }

    Ok(Partition::from_labels(&assignment))
}

fn nearest_center(point: &[f64], centers: &[f64], d: usize) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (c, center) in centers.chunks_exact(d).enumerate() {
        let dist = squared_distance(point, center);
        if dist < best_dist {
            best_dist = dist;
            best = c;
        }
    }
    best
}

fn compute_means(
    dataset: &Dataset,
    assignment: &[usize],
    centers: &mut [f64],
    k: usize,
) -> Vec<usize> {
    let d = dataset.num_features();
    let mut sizes = vec![0usize; k];
    let mut sums = vec![0.0; k * d];
    for (i, &c) in assignment.iter().enumerate() {
        sizes[c] += 1;
        for (acc, v) in sums[c * d..(c + 1) * d].iter_mut().zip(dataset.point(i)) {
            *acc += v;
        }
    }
    for c in 0..k {
        if sizes[c] > 0 {
            for j in 0..d {
                centers[c * d + j] = sums[c * d + j] / sizes[c] as f64;
            }
        }
    }
    sizes
}

/// Recomputes centroids. Each empty cluster takes over the point farthest from
/// its own centroid (among clusters that can spare a point).
fn update_centers(dataset: &Dataset, assignment: &mut [usize], centers: &mut [f64], k: usize) {
    let d = dataset.num_features();
    let mut sizes = compute_means(dataset, assignment, centers, k);
    let empties: Vec<usize> = (0..k).filter(|&c| sizes[c] == 0).collect();
    if empties.is_empty() {
        return;
    }
    for c in empties {
        let mut farthest = None;
        let mut far_dist = -1.0;
        for (i, &own) in assignment.iter().enumerate() {
            if sizes[own] < 2 {
                continue;
            }
            let dist = squared_distance(dataset.point(i), &centers[own * d..(own + 1) * d]);
            if dist > far_dist {
                far_dist = dist;
                farthest = Some(i);
            }
        }
        // k <= n guarantees a donor exists
        let Some(i) = farthest else { break };
        sizes[assignment[i]] -= 1;
        sizes[c] = 1;
        assignment[i] = c;
        centers[c * d..(c + 1) * d].copy_from_slice(dataset.point(i));
    }
    compute_means(dataset, assignment, centers, k);
}

/// Generates `config.m` K-Means clusterings with randomized K and centers.
pub fn generate_ensemble(dataset: &Dataset, config: &EnsembleConfig) -> Result<Ensemble> {
    config.validate()?;
    let (low, high) = config.k_range();
    let n = dataset.num_points();
    let members = (0..config.m)
        .into_par_iter()
        .map(|index| {
            let mut rng = stream_rng(config.seed, index as u64);
            let k = rng.random_range(low..=high).min(n);
            let member_seed = rng.next_u64();
            kmeans(dataset, k, member_seed, config.max_iters)
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(members, config.seed)
}

/// Writes the ensemble as CSV: a `# n=.. m=.. seed=..` header, then one row
/// of `n` labels per clustering.
pub fn write_ensemble_csv<W: Write>(ensemble: &Ensemble, mut out: W) -> Result<()> {
    writeln!(
        out,
        "# n={} m={} seed={}",
        ensemble.num_points(),
        ensemble.len(),
        ensemble.generator_seed()
    )?;
    let mut line = String::new();
    for member in ensemble.members() {
        line.clear();
        for (i, label) in member.assignment().iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&label.to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_ensemble_csv<R: BufRead>(input: R) -> Result<Ensemble> {
    let mut lines = input.lines();
    let header = lines.next().ok_or(Error::Empty("ensemble file"))??;
    let (n, m, seed) = parse_header(&header)?;
    let mut members = Vec::with_capacity(m);
    for (offset, line) in lines.enumerate() {
        let line = line?;
        let line_no = offset + 2;
        if line.trim().is_empty() {
            continue;
        }
        let labels = line
            .split(',')
            .map(|cell| {
                cell.trim().parse::<usize>().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("bad label {cell:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if labels.len() != n {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {n} labels, found {}", labels.len()),
            });
        }
        members.push(Partition::from_labels(&labels));
    }
    if members.len() != m {
        return Err(Error::Parse {
            line: 1,
            message: format!("header declares m={m}, found {} rows", members.len()),
        });
    }
    Ensemble::new(members, seed)
}

fn parse_header(header: &str) -> Result<(usize, usize, u64)> {
    let bad = |message: String| Error::Parse { line: 1, message };
    let body = header
        .strip_prefix('#')
        .ok_or_else(|| bad("missing '# n=.. m=.. seed=..' header".into()))?;
    let (mut n, mut m, mut seed) = (None, None, None);
    for field in body.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| bad(format!("malformed header field {field:?}")))?;
        match key {
            "n" => n = value.parse().ok(),
            "m" => m = value.parse().ok(),
            "seed" => seed = value.parse().ok(),
            _ => {}
        }
    }
    match (n, m, seed) {
        (Some(n), Some(m), Some(seed)) => Ok((n, m, seed)),
        _ => Err(bad(format!("incomplete header {header:?}"))),
    }
}
