//! Readout calibration, measurement correction and Z-correlators.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::Partition;
use crate::simulator::{DensityState, Simulator};

/// Largest accepted condition number of the assignment matrix.
pub const MAX_CONDITION: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutCalibration {
    /// `a[measured][prepared]`
    pub a: Vec<Vec<f64>>,
    pub a_inv: Vec<Vec<f64>>,
    pub condition: f64,
}

impl ReadoutCalibration {
    pub fn from_matrix(a: Vec<Vec<f64>>) -> Result<Self> {
        let dim = a.len();
        let m = DMatrix::from_fn(dim, dim, |r, c| a[r][c]);
        let sv = m.clone().singular_values();
        let (max, min) = (sv.max(), sv.min());
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        if condition.is_nan() || condition > MAX_CONDITION {
            return Err(Error::Calibration { cond: condition, limit: MAX_CONDITION });
        }
        let inv = m.try_inverse().ok_or(Error::Calibration { cond: condition, limit: MAX_CONDITION })?;
        let a_inv = (0..dim).map(|r| (0..dim).map(|c| inv[(r, c)]).collect()).collect();
        Ok(Self { a, a_inv, condition })
    }

    pub fn identity(n: usize) -> Self {
        let dim = 1usize << n;
        let eye: Vec<Vec<f64>> = (0..dim).map(|r| (0..dim).map(|c| f64::from(u8::from(r == c))).collect()).collect();
        Self { a: eye.clone(), a_inv: eye, condition: 1.0 }
    }

    /// `A^{-1} p`.
    pub fn correct(&self, p: &[f64]) -> Vec<f64> {
        self.a_inv.iter().map(|row| row.iter().zip(p).map(|(a, x)| a * x).sum()).collect()
    }
}

/// Prepare every basis state ideally, measure `shots` times, and use the
/// empirical distributions as the columns of `A`.
pub fn calibrate_readout<R: Rng + ?Sized>(sim: &Simulator, shots: usize, rng: &mut R) -> Result<ReadoutCalibration> {
    let n = sim.device().n;
    let dim = 1usize << n;
    let mut a = vec![vec![0.0; dim]; dim];
    for prep in 0..dim {
        let state = DensityState::basis(n, prep)?;
        let counts = sim.sample_shots(&state, shots, rng)?;
        for (meas, &c) in counts.iter().enumerate() {
            a[meas][prep] = c as f64 / shots as f64;
        }
    }
    ReadoutCalibration::from_matrix(a)
}

/// Exact assignment matrix of the device (infinite calibration shots).
pub fn exact_calibration(sim: &Simulator) -> Result<ReadoutCalibration> {
    let n = sim.device().n;
    if sim.device().readout.is_perfect() {
        return Ok(ReadoutCalibration::identity(n));
    }
    ReadoutCalibration::from_matrix(sim.device().readout.assignment_matrix())
}

/// Empirical distribution from counts.
pub fn frequencies(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// All `2^m` correlators `sum_x (-1)^{|x & qubits(S)|} p(x)` of a (corrected) distribution.
pub fn correlators(p: &[f64], b: &Partition) -> Vec<f64> {
    b.patterns()
        .map(|s| {
            let mask = b.pattern_qubit_mask(s) as usize;
            p.iter()
                .enumerate()
                .map(|(x, &v)| if (x & mask).count_ones() & 1 == 1 { -v } else { v })
                .sum()
        })
        .collect()
}

/// Correct an empirical distribution with `A^{-1}` and return all correlators.
/// Negative corrected probabilities are kept.
pub fn correct_and_correlate(counts: &[u64], cal: &ReadoutCalibration, b: &Partition) -> Result<Vec<f64>> {
    if counts.len() != cal.a_inv.len() {
        return Err(Error::Dimension { expected: cal.a_inv.len(), got: counts.len() });
    }
    Ok(correlators(&cal.correct(&frequencies(counts)), b))
}
