//! Device noise model: relaxation times, always-on ZZ couplings, readout confusion.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::PauliChannelProbs;
use crate::error::{Error, Result};

/// Largest register the dense simulator accepts.
pub const MAX_SIM_QUBITS: usize = 6;

/// One always-on `Z_i Z_j` coupling with conditional frequency shift `zeta_hz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZzCoupling {
    pub pair: [usize; 2],
    pub zeta_hz: f64,
}

/// Per-qubit confusion matrix `m[measured][prepared]`; columns sum to one.
pub type Confusion = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Readout {
    pub confusion: Vec<Confusion>,
    /// Full `2^n x 2^n` assignment matrix `A[measured][prepared]`; replaces
    /// the per-qubit model when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<Vec<Vec<f64>>>,
}

impl Readout {
    pub fn perfect(n: usize) -> Self {
        Self { confusion: vec![[[1.0, 0.0], [0.0, 1.0]]; n], assignment: None }
    }

    /// Symmetric bit-flip error `e` on every qubit.
    pub fn symmetric(n: usize, e: f64) -> Self {
        Self { confusion: vec![[[1.0 - e, e], [e, 1.0 - e]]; n], assignment: None }
    }

    /// Dense assignment matrix (tensor product of the confusions unless given).
    pub fn assignment_matrix(&self) -> Vec<Vec<f64>> {
        if let Some(a) = &self.assignment {
            return a.clone();
        }
        let n = self.confusion.len();
        let dim = 1usize << n;
        (0..dim)
            .map(|meas| {
                (0..dim)
                    .map(|prep| {
                        self.confusion
                            .iter()
                            .enumerate()
                            .map(|(q, c)| c[meas >> q & 1][prep >> q & 1])
                            .product()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn is_perfect(&self) -> bool {
        self.assignment.is_none() && self.confusion.iter().all(|c| c[0][1] == 0.0 && c[1][0] == 0.0)
    }
}

/// Physical noise model of an `n`-qubit register.
///
/// `t1_us`/`t2_us` entries of `null` mean "infinite". Every timed slot applies
/// ZZ evolution and then relaxation for its duration; `pauli_noise`, when
/// set, is applied after that.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceModel {
    pub n: usize,
    pub t1_us: Vec<Option<f64>>,
    pub t2_us: Vec<Option<f64>>,
    #[serde(default)]
    pub zz_pairs: Vec<ZzCoupling>,
    pub gate_duration_ns: f64,
    pub readout: Readout,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauli_noise: Option<PauliChannelProbs>,
}

impl DeviceModel {
    pub fn noiseless(n: usize) -> Self {
        Self {
            n,
            t1_us: vec![None; n],
            t2_us: vec![None; n],
            zz_pairs: vec![],
            gate_duration_ns: 96.0,
            readout: Readout::perfect(n),
            pauli_noise: None,
        }
    }

    /// Four fixed-frequency transmons, qubits 0, 1 and 3 coupled to qubit 2.
    pub fn paper4q() -> Self {
        Self {
            n: 4,
            t1_us: [45.0, 57.0, 54.0, 47.0].map(Some).to_vec(),
            t2_us: [74.0, 100.0, 91.0, 81.0].map(Some).to_vec(),
            zz_pairs: vec![
                ZzCoupling { pair: [0, 2], zeta_hz: 148e3 },
                ZzCoupling { pair: [1, 2], zeta_hz: 99e3 },
                ZzCoupling { pair: [3, 2], zeta_hz: 150e3 },
            ],
            gate_duration_ns: 96.0,
            readout: Readout::symmetric(4, 0.02),
            pauli_noise: None,
        }
    }

    /// `paper4q` couplings with relaxation disabled.
    pub fn zz_only() -> Self {
        Self { t1_us: vec![None; 4], t2_us: vec![None; 4], ..Self::paper4q() }
    }

    /// `paper4q` without couplings.
    pub fn relaxation_only() -> Self {
        Self { zz_pairs: vec![], ..Self::paper4q() }
    }

    pub fn with_duration(mut self, ns: f64) -> Self {
        self.gate_duration_ns = ns;
        self
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "noiseless" => Ok(Self::noiseless(4)),
            "paper4q" => Ok(Self::paper4q()),
            "zz-only" => Ok(Self::zz_only()),
            "relaxation-only" => Ok(Self::relaxation_only()),
            "paper4q-59ns" => Ok(Self::paper4q().with_duration(59.0)),
            other => Err(Error::Config(format!("unknown device preset {other:?}"))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(text)?;
        d.validate()?;
        Ok(d)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 || n > MAX_SIM_QUBITS {
            return Err(Error::Config(format!("device must have 1..={MAX_SIM_QUBITS} qubits, got {n}")));
        }
        if self.t1_us.len() != n || self.t2_us.len() != n || self.readout.confusion.len() != n {
            return Err(Error::Config("per-qubit device lists must have length n".into()));
        }
        if !(self.gate_duration_ns.is_finite() && self.gate_duration_ns >= 0.0) {
            return Err(Error::Config("gate_duration_ns must be finite and >= 0".into()));
        }
        for q in 0..n {
            let t1 = self.t1_us[q].unwrap_or(f64::INFINITY);
            let t2 = self.t2_us[q].unwrap_or(f64::INFINITY);
            if t1 <= 0.0 || t2 <= 0.0 || t1.is_nan() || t2.is_nan() {
                return Err(Error::Physicality(format!("qubit {q}: T1 and T2 must be positive")));
            }
            if t2 > 2.0 * t1 {
                return Err(Error::Physicality(format!("qubit {q}: T2 = {t2} us exceeds 2 T1 = {} us", 2.0 * t1)));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.zz_pairs {
            let [i, j] = c.pair;
            if i == j {
                return Err(Error::Config(format!("ZZ self-pair on qubit {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::Config(format!("ZZ pair ({i}, {j}) outside the register")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::Config(format!("ZZ pair ({i}, {j}) listed twice")));
            }
            if !c.zeta_hz.is_finite() {
                return Err(Error::Config("ZZ strength must be finite".into()));
            }
        }
        for (q, c) in self.readout.confusion.iter().enumerate() {
            check_stochastic(&[c[0].to_vec(), c[1].to_vec()], &format!("qubit {q} confusion"))?;
        }
        if let Some(a) = &self.readout.assignment {
            let dim = 1usize << n;
            if a.len() != dim || a.iter().any(|r| r.len() != dim) {
                return Err(Error::Config(format!("assignment matrix must be {dim}x{dim}")));
            }
            check_stochastic(a, "assignment matrix")?;
        }
        if let Some(p) = &self.pauli_noise {
            if p.num_qubits() != n {
                return Err(Error::Config("pauli_noise must act on all n qubits".into()));
            }
            if !p.is_nonnegative() {
                return Err(Error::Config("pauli_noise has negative probabilities".into()));
            }
        }
        Ok(())
    }
}

fn check_stochastic(m: &[Vec<f64>], what: &str) -> Result<()> {
    let cols = m.first().map_or(0, Vec::len);
    for c in 0..cols {
        let mut sum = 0.0;
        for row in m {
            if !(0.0..=1.0).contains(&row[c]) {
                return Err(Error::Config(format!("{what}: entries must lie in [0, 1]")));
            }
            sum += row[c];
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("{what}: column {c} sums to {sum}")));
        }
    }
    Ok(())
}
