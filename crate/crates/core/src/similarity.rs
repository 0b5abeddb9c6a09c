//! Co-association similarity and its integer quantization.

use std::io::Write;

use crate::error::{Error, Result};
use crate::partition::Ensemble;

/// Symmetric `n × n` co-association matrix.
///
/// Entries are kept as exact fractions `agree_uv / m`, where `agree_uv` counts
/// the clusterings placing `u` and `v` together. The quantized form
/// `D_uv = round_half_up(100 · s_uv)` is what the QUBO builders consume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityMatrix {
    n: usize,
    m: u32,
    agree: Vec<u32>,
    quantized: Vec<u8>,
}

impl SimilarityMatrix {
    /// Builds a matrix from pair counts over `m` clusterings. `agree` is a
    /// dense `n × n` matrix; only `u < v` entries are read and the rest are
    /// filled in symmetrically.
    pub fn from_counts(n: usize, m: u32, agree: &[u32]) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("need n >= 2, got {n}")));
        }
        if m == 0 {
            return Err(Error::Empty("ensemble"));
        }
        if agree.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                actual: agree.len(),
            });
        }
        let mut counts = vec![0u32; n * n];
        for u in 0..n {
            counts[u * n + u] = m;
            for v in u + 1..n {
                let c = agree[u * n + v];
                if c > m {
                    return Err(Error::OutOfRange(format!(
                        "count {c} exceeds m = {m} at ({u}, {v})"
                    )));
                }
                counts[u * n + v] = c;
                counts[v * n + u] = c;
            }
        }
        let quantized = counts.iter().map(|&c| quantize_ratio(c, m)).collect();
        Ok(SimilarityMatrix {
            n,
            m,
            agree: counts,
            quantized,
        })
    }

    pub fn num_points(&self) -> usize {
        self.n
    }

    /// Denominator of every entry (number of clusterings).
    pub fn denominator(&self) -> u32 {
        self.m
    }

    #[inline]
    pub fn agree_count(&self, u: usize, v: usize) -> u32 {
        self.agree[u * self.n + v]
    }

    #[inline]
    pub fn s(&self, u: usize, v: usize) -> f64 {
        f64::from(self.agree_count(u, v)) / f64::from(self.m)
    }

    /// `D_uv` in `[0, 100]`.
    #[inline]
    pub fn quantized(&self, u: usize, v: usize) -> i64 {
        i64::from(self.quantized[u * self.n + v])
    }

    /// `100 − D_uv`, the quantized dissimilarity.
    #[inline]
    pub fn dissimilarity(&self, u: usize, v: usize) -> i64 {
        100 - self.quantized(u, v)
    }

    /// Writes the quantized matrix as CSV, one row per point.
    pub fn write_quantized_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for row in self.quantized.chunks_exact(self.n) {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Co-association fractions of an ensemble.
pub fn build_similarity(ensemble: &Ensemble) -> Result<SimilarityMatrix> {
    let n = ensemble.num_points();
    if let Some(bad) = ensemble.members().iter().find(|p| p.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: bad.len(),
        });
    }
    let m =
        u32::try_from(ensemble.len()).map_err(|_| Error::Overflow("counting ensemble members"))?;
    let mut agree = vec![0u32; n * n];
    for member in ensemble.members() {
        let labels = member.assignment();
        for u in 0..n {
            let row = &mut agree[u * n..(u + 1) * n];
            for v in u + 1..n {
                if labels[u] == labels[v] {
                    row[v] += 1;
                }
            }
        }
    }
    SimilarityMatrix::from_counts(n, m, &agree)
}

/// Round-half-up of `100 · s` for `s ∈ [0, 1]`.
pub fn quantize(s: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::OutOfRange(format!("similarity {s} not in [0, 1]")));
    }
    Ok((100.0 * s + 0.5).floor() as u8)
}

/// Exact round-half-up of `100 · count / m`.
pub fn quantize_ratio(count: u32, m: u32) -> u8 {
    let (count, m) = (u64::from(count), u64::from(m));
    ((200 * count + m) / (2 * m)) as u8
}
