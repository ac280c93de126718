//! Crosstalk metric: L1 distance from a Pauli channel to the nearest tensor
//! product of local Pauli channels.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{FixedWeightCoeffs, PauliChannelProbs};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::pauli::{Partition, PauliOperator};

const RESTARTS: usize = 16;
const LOGIT_FLOOR: f64 = -40.0;

/// One Pauli probability vector per subsystem.
///
/// The local index of subsystem `j` lists its qubits in ascending order with
/// the first qubit as the least significant base-4 digit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalChannelAnsatz {
    locals: Vec<Vec<f64>>,
}

impl LocalChannelAnsatz {
    pub fn new(locals: Vec<Vec<f64>>, b: &Partition) -> Result<Self> {
        if locals.len() != b.len() {
            return Err(Error::Dimension { expected: b.len(), got: locals.len() });
        }
        for (gamma, n_j) in locals.iter().zip(b.sizes()) {
            let expected = 1usize << (2 * n_j);
            if gamma.len() != expected {
                return Err(Error::Dimension { expected, got: gamma.len() });
            }
            let sum: f64 = gamma.iter().sum();
            if (sum - 1.0).abs() > 1e-10 || gamma.iter().any(|&g| g < -1e-10) {
                return Err(Error::State("local channel is not a probability vector".into()));
            }
        }
        Ok(Self { locals })
    }

    pub fn locals(&self) -> &[Vec<f64>] {
        &self.locals
    }

    /// Full `4^n` distribution of the tensor product.
    pub fn product(&self, b: &Partition) -> Vec<f64> {
        let idx = LocalIndex::new(b);
        (0..idx.size).map(|i| idx.product(i, &self.locals)).collect()
    }
}

/// Local indices of every full Pauli for each subsystem.
struct LocalIndex {
    size: usize,
    m: usize,
    table: Vec<usize>,
}

impl LocalIndex {
    fn new(b: &Partition) -> Self {
        let n = b.n_total();
        let size = 1usize << (2 * n);
        let m = b.len();
        let mut table = vec![0; size * m];
        for i in 0..size {
            let p = PauliOperator::from_index(n, i);
            for (j, qubits) in b.subsystems().iter().enumerate() {
                table[i * m + j] = qubits
                    .iter()
                    .enumerate()
                    .map(|(k, &q)| p.local_digit(q) << (2 * k))
                    .sum();
            }
        }
        Self { size, m, table }
    }

    fn local(&self, i: usize, j: usize) -> usize {
        self.table[i * self.m + j]
    }

    fn product(&self, i: usize, locals: &[Vec<f64>]) -> f64 {
        locals.iter().enumerate().map(|(j, g)| g[self.local(i, j)]).product()
    }
}

/// Value and minimizer of the crosstalk metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaResult {
    pub eta: f64,
    pub ansatz: LocalChannelAnsatz,
}

fn softmax(theta: &[f64]) -> Vec<f64> {
    // identity logit fixed at zero
    let max = theta.iter().copied().fold(0.0, f64::max);
    let mut out: Vec<f64> = std::iter::once(0.0).chain(theta.iter().copied()).map(|t| (t - max).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    out
}

fn logits(gamma: &[f64]) -> Vec<f64> {
    let g0 = gamma[0].max(1e-300);
    gamma[1..].iter().map(|&g| (g.max(1e-300) / g0).ln().max(LOGIT_FLOOR)).collect()
}

fn unpack(theta: &[f64], sizes: &[usize]) -> Vec<Vec<f64>> {
    let mut offset = 0;
    sizes
        .iter()
        .map(|&n_j| {
            let k = (1usize << (2 * n_j)) - 1;
            let g = softmax(&theta[offset..offset + k]);
            offset += k;
            g
        })
        .collect()
}

fn marginals(lambda: &[f64], idx: &LocalIndex, sizes: &[usize]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = sizes.iter().map(|&n_j| vec![0.0; 1 << (2 * n_j)]).collect();
    for (i, &l) in lambda.iter().enumerate() {
        for (j, g) in out.iter_mut().enumerate() {
            g[idx.local(i, j)] += l;
        }
    }
    out
}

fn depolarized(gamma: &[f64]) -> Vec<f64> {
    let k = gamma.len() - 1;
    let q = 1.0 - gamma[0];
    std::iter::once(gamma[0]).chain(std::iter::repeat_n(q / k as f64, k)).collect()
}

fn l1_objective(lambda: &[f64], locals: &[Vec<f64>], idx: &LocalIndex) -> f64 {
    lambda.iter().enumerate().map(|(i, &l)| (l - idx.product(i, locals)).abs()).sum()
}

/// `min_gamma sum_i |lambda_i - prod_j gamma_{j,i}|` over products of local Pauli channels.
pub fn eta_pauli(lambda: &PauliChannelProbs, b: &Partition) -> Result<EtaResult> {
    if lambda.num_qubits() != b.n_total() {
        return Err(Error::Dimension { expected: b.n_total(), got: lambda.num_qubits() });
    }
    let probs = lambda.probs();
    let sizes = b.sizes();
    let idx = LocalIndex::new(b);
    let marg = marginals(probs, &idx, &sizes);

    let mut seeds: Vec<Vec<Vec<f64>>> = vec![marg.clone(), marg.iter().map(|g| depolarized(g)).collect()];
    if b.all_single_qubit() {
        let (_, q) = eta_local_form(lambda)?;
        seeds.push(q.iter().map(|&q| vec![1.0 - q, q / 3.0, q / 3.0, q / 3.0]).collect());
    }
    let mut rng = crate::rng::stream(0xe7a, &[b.n_total() as u64]);
    while seeds.len() < RESTARTS {
        seeds.push(
            marg.iter()
                .map(|g| {
                    let raw: Vec<f64> = g.iter().map(|&v| v * rng.random_range(0.5..1.5) + 1e-4 * rng.random::<f64>()).collect();
                    let total: f64 = raw.iter().sum();
                    raw.into_iter().map(|v| v / total).collect()
                })
                .collect(),
        );
    }

    let opts = NelderMeadOptions { step: 1.0, ftol: 1e-10, xtol: 1e-9, max_evals: 40_000, max_restarts: 30 };
    let runs: Vec<(f64, Vec<Vec<f64>>)> = seeds
        .par_iter()
        .map(|seed| {
            let theta0: Vec<f64> = seed.iter().flat_map(|g| logits(g)).collect();
            let f = |theta: &[f64]| l1_objective(probs, &unpack(theta, &sizes), &idx);
            let m = nelder_mead(f, &theta0, &opts);
            (m.value, unpack(&m.x, &sizes))
        })
        .collect();
    let (eta, locals) = runs
        .into_iter()
        .filter(|(v, _)| v.is_finite())
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or(Error::Metric { best: f64::NAN })?;
    Ok(EtaResult { eta: eta.max(0.0), ansatz: LocalChannelAnsatz::new(locals, b)? })
}

/// [`eta_pauli`] on the channel obtained by spreading each pattern mass uniformly over its class.
pub fn eta_from_fixed_weight(p: &FixedWeightCoeffs, b: &Partition) -> Result<EtaResult> {
    eta_pauli(&p.expand(b)?, b)
}

/// Same metric restricted to products of single-qubit depolarizing channels with error `q_j`.
pub fn eta_local_form(p: &PauliChannelProbs) -> Result<(f64, Vec<f64>)> {
    let n = p.num_qubits();
    let probs = p.probs();
    let supports: Vec<u64> = (0..probs.len())
        .map(|i| {
            let op = PauliOperator::from_index(n, i);
            op.x_bits() | op.z_bits()
        })
        .collect();
    let objective = |q: &[f64]| -> f64 {
        probs
            .iter()
            .zip(&supports)
            .map(|(&l, &s)| {
                let g: f64 = (0..n).map(|j| if s >> j & 1 == 1 { q[j] / 3.0 } else { 1.0 - q[j] }).product();
                (l - g).abs()
            })
            .sum()
    };
    let start: Vec<f64> = (0..n)
        .map(|j| {
            let q: f64 = probs.iter().zip(&supports).filter(|(_, &s)| s >> j & 1 == 1).map(|(l, _)| l).sum();
            q.clamp(0.0, 1.0).sqrt().asin()
        })
        .collect();
    let to_q = |theta: &[f64]| -> Vec<f64> { theta.iter().map(|t| t.sin().powi(2)).collect() };
    let opts = NelderMeadOptions { step: 0.05, ftol: 1e-12, xtol: 1e-10, max_evals: 20_000, max_restarts: 30 };
    let m = nelder_mead(|t: &[f64]| objective(&to_q(t)), &start, &opts);
    Ok((m.value.max(0.0), to_q(&m.x)))
}

/// Pattern masses of the two-qubit composition `L_12 L_1 L_2` where `L_S` has
/// total error mass `e_S` spread uniformly over Paulis with support exactly `S`.
/// Order: (II, one-qubit-on-0, one-qubit-on-1, both).
pub fn two_qubit_masses(e1: f64, e2: f64, e12: f64) -> [f64; 4] {
    let p11 = e1 * e2 + e12 * (1.0 - e1 / 3.0 - e2 / 3.0 - 8.0 / 9.0 * e1 * e2);
    let p01 = e2 * (1.0 - e1) + e12 * (e1 / 3.0 - e2 + 8.0 / 9.0 * e1 * e2);
    let p10 = e1 * (1.0 - e2) + e12 * (e2 / 3.0 - e1 + 8.0 / 9.0 * e1 * e2);
    let p00 = (1.0 - e1) * (1.0 - e2) - e12 * ((1.0 - e1) * (1.0 - e2) - e1 * e2 / 9.0);
    [p00, p10, p01, p11]
}

/// The twirled two-qubit channel with the masses of [`two_qubit_masses`].
pub fn two_qubit_weight_param_channel(e1: f64, e2: f64, e12: f64) -> Result<PauliChannelProbs> {
    let m = two_qubit_masses(e1, e2, e12);
    let probs = (0..16)
        .map(|i| {
            // base-4 digits: qubit 0 low, qubit 1 high
            let s = usize::from(i % 4 != 0) | usize::from(i / 4 != 0) << 1;
            m[s] / [1.0, 3.0, 3.0, 9.0][s]
        })
        .collect();
    PauliChannelProbs::new(2, probs)
}

/// Mass-convention parameter of a depolarizing channel whose parameter is
/// defined with the identity inside the uniform mixture over `m_S` Paulis.
pub fn mass_from_depolarizing(eps: f64, m_s: f64) -> f64 {
    eps * (m_s - 1.0) / m_s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitEta {
    pub eta: f64,
    pub q1: f64,
    pub q2: f64,
}

/// Two-qubit metric over local depolarizing ansatz `(q1, q2)` by grid search
/// and zoomed refinement. Parameters use the mass convention of [`two_qubit_masses`].
pub fn eta_two_qubit_weight_param(e1: f64, e2: f64, e12: f64) -> TwoQubitEta {
    let [p00, p10, p01, p11] = two_qubit_masses(e1, e2, e12);
    let f = |q1: f64, q2: f64| {
        (q1 * q2 - p11).abs() + (q2 * (1.0 - q1) - p01).abs() + (q1 * (1.0 - q2) - p10).abs() + ((1.0 - q1) * (1.0 - q2) - p00).abs()
    };
    let mut best = TwoQubitEta { eta: f(0.0, 0.0), q1: 0.0, q2: 0.0 };
    let (mut lo1, mut lo2, mut width, mut steps) = (0.0, 0.0, 1.0, 1000usize);
    for _ in 0..5 {
        let h = width / steps as f64;
        for a in 0..=steps {
            let q1 = (lo1 + a as f64 * h).clamp(0.0, 1.0);
            for c in 0..=steps {
                let q2 = (lo2 + c as f64 * h).clamp(0.0, 1.0);
                let v = f(q1, q2);
                if v < best.eta {
                    best = TwoQubitEta { eta: v, q1, q2 };
                }
            }
        }
        width = 4.0 * h;
        lo1 = best.q1 - 2.0 * h;
        lo2 = best.q2 - 2.0 * h;
        steps = 200;
    }
    best
}
