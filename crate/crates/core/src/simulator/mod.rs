//! Density-matrix simulation of simultaneous gate layers under ZZ coupling,
//! T1/T2 relaxation, optional Pauli noise, and noisy readout.

mod device;
mod state;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

pub use device::{Confusion, DeviceModel, Readout, ZzCoupling, MAX_SIM_QUBITS};
pub use state::{superop_compose, superop_from_kraus, DensityState, Superop1};

use crate::channel::PtmDiagonal;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::pauli::PauliOperator;

/// A unitary on an ordered list of qubits (first qubit = least significant bit of the matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    pub qubits: Vec<usize>,
    pub unitary: CMatrix,
}

impl GateOp {
    pub fn new(qubits: Vec<usize>, unitary: CMatrix) -> Self {
        Self { qubits, unitary }
    }
}

/// Gates applied simultaneously at the start of a time slot.
pub type GateLayer = Vec<GateOp>;

/// Diagonal of `exp(-i sum 2 pi zeta t Z_i Z_j / 4)` over computational basis states.
pub fn zz_phases(n: usize, pairs: &[ZzCoupling], duration_ns: f64) -> Vec<Complex64> {
    let t = duration_ns * 1e-9;
    (0..1usize << n)
        .map(|x| {
            let angle: f64 = pairs
                .iter()
                .map(|c| {
                    let zi = if x >> c.pair[0] & 1 == 1 { -1.0 } else { 1.0 };
                    let zj = if x >> c.pair[1] & 1 == 1 { -1.0 } else { 1.0 };
                    2.0 * PI * c.zeta_hz * t * zi * zj / 4.0
                })
                .sum();
            Complex64::from_polar(1.0, -angle)
        })
        .collect()
}

/// Dense form of [`zz_phases`].
pub fn zz_unitary(n: usize, pairs: &[ZzCoupling], duration_ns: f64) -> CMatrix {
    let ph = zz_phases(n, pairs, duration_ns);
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(ph))
}

/// Amplitude damping followed by pure dephasing for `duration_ns`.
/// `None` stands for an infinite time constant.
pub fn thermal_relaxation_kraus(t1_us: Option<f64>, t2_us: Option<f64>, duration_ns: f64) -> Result<Vec<CMatrix>> {
    let t1 = t1_us.unwrap_or(f64::INFINITY);
    let t2 = t2_us.unwrap_or(f64::INFINITY);
    if t2 > 2.0 * t1 {
        return Err(Error::Physicality(format!("T2 = {t2} us exceeds 2 T1 = {} us", 2.0 * t1)));
    }
    if duration_ns < 0.0 {
        return Err(Error::Config("negative duration".into()));
    }
    let t_us = duration_ns * 1e-3;
    let p_damp = 1.0 - (-t_us / t1).exp();
    let rate_phi = (1.0 / t2 - 0.5 / t1).max(0.0);
    let p_phi = (1.0 - (-t_us * rate_phi).exp()) / 2.0;
    let c = |v: f64| Complex64::new(v, 0.0);
    let k0 = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c((1.0 - p_damp).sqrt())]);
    let k1 = CMatrix::from_row_slice(2, 2, &[ZERO, c(p_damp.sqrt()), ZERO, ZERO]);
    let z = linalg::pauli_matrix(&PauliOperator::from_index(1, 3));
    let keep = c((1.0 - p_phi).sqrt());
    let flip = c(p_phi.sqrt());
    Ok(vec![&k0 * keep, &k1 * keep, &z * &k0 * flip, &z * &k1 * flip])
}

/// Precomputed noise of one timed slot.
#[derive(Debug, Clone)]
struct NoiseKernel {
    zz: Option<Vec<Complex64>>,
    relax: Vec<Option<Superop1>>,
}

impl NoiseKernel {
    fn new(device: &DeviceModel, duration_ns: f64) -> Result<Self> {
        let zz = (!device.zz_pairs.is_empty() && duration_ns > 0.0)
            .then(|| zz_phases(device.n, &device.zz_pairs, duration_ns));
        let relax = (0..device.n)
            .map(|q| {
                if duration_ns == 0.0 || (device.t1_us[q].is_none() && device.t2_us[q].is_none()) {
                    return Ok(None);
                }
                Ok(Some(superop_from_kraus(&thermal_relaxation_kraus(device.t1_us[q], device.t2_us[q], duration_ns)?)))
            })
            .collect::<Result<_>>()?;
        Ok(Self { zz, relax })
    }
}

/// Runs gate layers and timed slots against one device.
#[derive(Debug, Clone)]
pub struct Simulator {
    device: DeviceModel,
    kernel: NoiseKernel,
}

impl Simulator {
    pub fn new(device: &DeviceModel) -> Result<Self> {
        device.validate()?;
        Ok(Self {
            device: device.clone(),
            kernel: NoiseKernel::new(device, device.gate_duration_ns)?,
        })
    }

    pub fn device(&self) -> &DeviceModel {
        &self.device
    }

    fn kernel_for(&self, duration_ns: f64) -> Result<std::borrow::Cow<'_, NoiseKernel>> {
        use std::borrow::Cow;
        if duration_ns == self.device.gate_duration_ns {
            Ok(Cow::Borrowed(&self.kernel))
        } else {
            Ok(Cow::Owned(NoiseKernel::new(&self.device, duration_ns)?))
        }
    }

    fn evolve(&self, state: &mut DensityState, duration_ns: f64) -> Result<()> {
        if duration_ns == 0.0 {
            return Ok(());
        }
        let kernel = self.kernel_for(duration_ns)?;
        if let Some(ph) = &kernel.zz {
            state.apply_diagonal_unitary(ph);
        }
        for (q, s) in kernel.relax.iter().enumerate() {
            if let Some(s) = s {
                state.apply_superop(q, s);
            }
        }
        Ok(())
    }

    /// Apply `layer` instantly, then the device noise for `duration_ns`.
    pub fn apply_slot(&self, state: &mut DensityState, layer: &[GateOp], duration_ns: f64) -> Result<()> {
        check_layout(layer, self.device.n)?;
        for g in layer {
            state.apply_unitary(&g.qubits, &g.unitary)?;
        }
        self.idle(state, duration_ns)
    }

    /// Device noise for `duration_ns` with no gates: ZZ, relaxation, then Pauli noise.
    pub fn idle(&self, state: &mut DensityState, duration_ns: f64) -> Result<()> {
        self.evolve(state, duration_ns)?;
        self.pauli_noise(state, duration_ns)
    }

    fn pauli_noise(&self, state: &mut DensityState, duration_ns: f64) -> Result<()> {
        match &self.device.pauli_noise {
            Some(p) if duration_ns > 0.0 => state.apply_pauli_channel(p),
            _ => Ok(()),
        }
    }

    /// Population vector after readout error (infinite-shot limit).
    pub fn measured_distribution(&self, state: &DensityState) -> Result<Vec<f64>> {
        let pop = populations(state)?;
        if self.device.readout.is_perfect() {
            return Ok(pop);
        }
        let a = self.device.readout.assignment_matrix();
        Ok(a.iter().map(|row| row.iter().zip(&pop).map(|(x, p)| x * p).sum()).collect())
    }

    /// Sample `shots` outcomes and pass each through the readout model.
    pub fn sample_shots<R: Rng + ?Sized>(&self, state: &DensityState, shots: usize, rng: &mut R) -> Result<Vec<u64>> {
        sample_shots(state, shots, &self.device, rng)
    }
}

/// `apply_slot` with the device gate duration.
pub fn apply_gate_layer(state: &mut DensityState, layer: &[GateOp], device: &DeviceModel) -> Result<()> {
    Simulator::new(device)?.apply_slot(state, layer, device.gate_duration_ns)
}

fn check_layout(layer: &[GateOp], n: usize) -> Result<()> {
    let mut used = 0u64;
    for g in layer {
        for &q in &g.qubits {
            if q >= n {
                return Err(Error::Layout(format!("qubit {q} outside the {n}-qubit register")));
            }
            if used >> q & 1 == 1 {
                return Err(Error::Layout(format!("qubit {q} targeted twice in one layer")));
            }
            used |= 1 << q;
        }
    }
    Ok(())
}

fn populations(state: &DensityState) -> Result<Vec<f64>> {
    let pop = state.diagonal();
    if let Some(bad) = pop.iter().find(|&&p| p < -1e-9 || !p.is_finite()) {
        return Err(Error::State(format!("negative population {bad:.3e}")));
    }
    Ok(pop.into_iter().map(|p| p.max(0.0)).collect())
}

/// Counts over the `2^n` measured bitstrings (bit `q` of the index = qubit `q`).
pub fn sample_shots<R: Rng + ?Sized>(state: &DensityState, shots: usize, device: &DeviceModel, rng: &mut R) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::Config("shots must be >= 1".into()));
    }
    let pop = populations(state)?;
    let dist = WeightedIndex::new(&pop).map_err(|e| Error::State(e.to_string()))?;
    let mut counts = vec![0u64; pop.len()];
    let readout = &device.readout;
    let perfect = readout.is_perfect();
    let columns = readout.assignment.as_ref().map(|a| {
        (0..pop.len())
            .map(|prep| WeightedIndex::new(a.iter().map(|row| row[prep])).expect("stochastic column"))
            .collect::<Vec<_>>()
    });
    for _ in 0..shots {
        let truth = dist.sample(rng);
        let seen = if perfect {
            truth
        } else if let Some(cols) = &columns {
            cols[truth].sample(rng)
        } else {
            let mut out = 0usize;
            for (q, c) in readout.confusion.iter().enumerate() {
                let bit = truth >> q & 1;
                let p_one = c[1][bit];
                if rng.random::<f64>() < p_one {
                    out |= 1 << q;
                }
            }
            out
        };
        counts[seen] += 1;
    }
    Ok(counts)
}

/// PTM diagonal `Tr(P L(P)) / 2^n` of the noise applied in one idle slot.
pub fn noise_ptm_diagonal(device: &DeviceModel, duration_ns: f64) -> Result<PtmDiagonal> {
    let sim = Simulator::new(device)?;
    let n = device.n;
    let dim = 1usize << n;
    let diag = (0..1usize << (2 * n))
        .map(|i| {
            let p = linalg::pauli_matrix(&PauliOperator::from_index(n, i));
            let mut s = DensityState::from_matrix(&p)?;
            sim.idle(&mut s, duration_ns)?;
            let out = s.to_matrix();
            Ok((&p * out).trace().re / dim as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    PtmDiagonal::new(n, diag)
}
