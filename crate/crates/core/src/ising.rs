//! Exact QUBO → Ising conversion through `σ = 2q − 1`.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::qubo::QuboModel;

pub type Rational = Ratio<i128>;

/// `E(σ) = Σ_{i<j} J_ij σ_i σ_j + Σ_i h_i σ_i`, plus `offset` so that
/// `E(σ) + offset` equals the source QUBO energy (constant included).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsingModel {
    pub h: Vec<Rational>,
    /// Sorted `(i, j, J_ij)` with `i < j`.
    pub j: Vec<(usize, usize, Rational)>,
    pub offset: Rational,
}

impl IsingModel {
    pub fn num_spins(&self) -> usize {
        self.h.len()
    }

    /// Ising energy without the offset; spins must be ±1.
    pub fn energy(&self, spins: &[i8]) -> Result<Rational> {
        if spins.len() != self.num_spins() {
            return Err(Error::LengthMismatch {
                expected: self.num_spins(),
                actual: spins.len(),
            });
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::OutOfRange("spins must be +1 or -1".into()));
        }
        let mut e = Rational::from_integer(0);
        for (h, &s) in self.h.iter().zip(spins) {
            e += *h * i128::from(s);
        }
        for &(a, b, w) in &self.j {
            e += w * i128::from(spins[a] * spins[b]);
        }
        Ok(e)
    }
}

/// `c_i q_i = c_i/2 σ_i + c_i/2` and
/// `c_ij q_i q_j = c_ij/4 (σ_i σ_j + σ_i + σ_j + 1)`.
pub fn to_ising(model: &QuboModel) -> IsingModel {
    let mut h: Vec<Rational> = model
        .biases()
        .iter()
        .map(|&c| Rational::new(i128::from(c), 2))
        .collect();
    let mut offset = Rational::from_integer(i128::from(model.constant()));
    for &c in model.biases() {
        offset += Rational::new(i128::from(c), 2);
    }
    let mut j = Vec::with_capacity(model.couplers().len());
    for &(a, b, w) in model.couplers() {
        let quarter = Rational::new(i128::from(w), 4);
        j.push((a, b, quarter));
        h[a] += quarter;
        h[b] += quarter;
        offset += quarter;
    }
    IsingModel { h, j, offset }
}

/// `σ = 2q − 1`.
pub fn spins_from_bits(bits: &[bool]) -> Vec<i8> {
    bits.iter().map(|&q| if q { 1 } else { -1 }).collect()
}
