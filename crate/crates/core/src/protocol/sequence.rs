//! Random Clifford sequences, noise injection, and compilation to timed slots.

use std::f64::consts::{FRAC_PI_4, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::{decompose_generators, sample_uniform, CliffordElement, Pulse};
use crate::error::{Error, Result};
use crate::linalg;
use crate::pauli::{Partition, PauliOperator};
use crate::rng;
use crate::simulator::{GateLayer, GateOp};

/// How a Clifford layer maps onto time slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timing {
    /// one gate-duration slot per Clifford layer
    #[default]
    Layer,
    /// one slot per simultaneous generator pulse
    Pulse,
}

/// Arrangement of simultaneous generator pulses in time.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    #[default]
    Simultaneous,
    /// pulses on `idle_group` run in a second slot after everyone else's
    Split { idle_group: Vec<usize> },
    /// three-pulse echoed gates, idle group in its own three slots
    Echo { idle_group: Vec<usize> },
    /// same slot structure as `Echo` with the refocusing pulse replaced by an idle
    Control { idle_group: Vec<usize> },
}

impl Schedule {
    pub fn idle_group(&self) -> Option<&[usize]> {
        match self {
            Schedule::Simultaneous => None,
            Schedule::Split { idle_group } | Schedule::Echo { idle_group } | Schedule::Control { idle_group } => Some(idle_group),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EchoMode {
    Echo,
    Control,
}

/// One step of a benchmarking sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// one Clifford per subsystem, in partition order
    Clifford(Vec<CliffordElement>),
    /// instantaneous `X_pi` on each listed qubit
    Flip(Vec<usize>),
}

/// A gate layer plus the time the device evolves afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub gates: GateLayer,
    pub duration_ns: f64,
}

const STREAM_SEQUENCE: u64 = 1;
const STREAM_INJECTION: u64 = 2;

/// Per-subsystem lists of `l` Cliffords whose product is the identity.
///
/// Each subsystem draws from its own stream addressed by `(seed, l, trial, j)`.
pub fn generate_sequences(b: &Partition, l: usize, seed: u64, trial: u64) -> Result<Vec<Vec<CliffordElement>>> {
    if l == 0 {
        return Err(Error::Config("sequence length must be >= 1".into()));
    }
    b.subsystems()
        .iter()
        .enumerate()
        .map(|(j, qubits)| {
            let mut r = rng::stream(seed, &[STREAM_SEQUENCE, l as u64, trial, j as u64]);
            random_sequence(qubits.len(), l, &mut r)
        })
        .collect()
}

/// `l - 1` uniform Cliffords followed by the inverse of their product.
pub fn random_sequence<R: Rng + ?Sized>(n: usize, l: usize, rng: &mut R) -> Result<Vec<CliffordElement>> {
    let mut seq = Vec::with_capacity(l);
    let mut total = CliffordElement::identity(n)?;
    for _ in 1..l {
        let g = sample_uniform(n, rng)?;
        total = g.compose(&total)?;
        seq.push(g);
    }
    seq.push(total.inverse());
    Ok(seq)
}

/// Bernoulli(p) decision for a flip layer after each of the `l` Clifford positions.
pub fn inject_flips<R: Rng + ?Sized>(l: usize, p: f64, rng: &mut R) -> Result<Vec<bool>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("injection probability {p} outside [0, 1]")));
    }
    Ok((0..l).map(|_| rng.random::<f64>() < p).collect())
}

/// Injection stream for one `(l, trial)`.
pub fn injection_rng(seed: u64, l: usize, trial: u64) -> rng::StreamRng {
    rng::stream(seed, &[STREAM_INJECTION, l as u64, trial])
}

/// Interleave Clifford layers with flip layers where `flips` is set.
pub fn build_layers(seqs: &[Vec<CliffordElement>], flips: Option<(&[bool], &[usize])>) -> Vec<Layer> {
    let l = seqs.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(2 * l);
    for k in 0..l {
        out.push(Layer::Clifford(seqs.iter().map(|s| s[k]).collect()));
        if let Some((mask, qubits)) = flips {
            if mask[k] {
                out.push(Layer::Flip(qubits.to_vec()));
            }
        }
    }
    out
}

/// Six slots realizing one generator layer (`pulses[q]` for each qubit).
///
/// Slots 1-3 carry the active qubits' gates, slots 4-6 the idle group's.
/// An `X/Y +-pi/2` becomes `-+pi/4, +-pi, -+pi/4` on the same axis in echo
/// mode and `+-pi/4, idle, +-pi/4` in control mode. A qubit with no pulse at
/// this position gets `idle, X_pi, X_-pi` in echo mode and idles in control mode.
pub fn echo_compile(pulses: &[Option<Pulse>], idle_group: &[usize], mode: EchoMode) -> Vec<GateLayer> {
    let mut slots: Vec<GateLayer> = vec![Vec::new(); 6];
    for (q, p) in pulses.iter().enumerate() {
        let base = if idle_group.contains(&q) { 3 } else { 0 };
        let (axis, parts) = match (*p, mode) {
            (Some(p), EchoMode::Echo) => {
                let s = p.sign();
                (p.axis(), [Some(-s * FRAC_PI_4), Some(s * PI), Some(-s * FRAC_PI_4)])
            }
            (Some(p), EchoMode::Control) => (p.axis(), [Some(p.sign() * FRAC_PI_4), None, Some(p.sign() * FRAC_PI_4)]),
            (None, EchoMode::Echo) => (1, [None, Some(PI), Some(-PI)]),
            (None, EchoMode::Control) => continue,
        };
        for (k, angle) in parts.into_iter().enumerate() {
            if let Some(a) = angle {
                slots[base + k].push(GateOp::new(vec![q], linalg::rotation(axis, a)));
            }
        }
    }
    slots
}

/// Compiles layers to slots for a given timing/schedule and pulse duration.
#[derive(Debug, Clone)]
pub struct Compiler<'a> {
    partition: &'a Partition,
    timing: Timing,
    schedule: &'a Schedule,
    duration_ns: f64,
}

impl<'a> Compiler<'a> {
    pub fn new(partition: &'a Partition, timing: Timing, schedule: &'a Schedule, duration_ns: f64) -> Result<Self> {
        if let Some(idle) = schedule.idle_group() {
            if let Some(j) = partition.sizes().into_iter().find(|&s| s != 1) {
                return Err(Error::UnsupportedSize(j));
            }
            if let Some(&q) = idle.iter().find(|&&q| q >= partition.n_total()) {
                return Err(Error::Config(format!("idle-group qubit {q} outside the register")));
            }
        }
        Ok(Self { partition, timing, schedule, duration_ns })
    }

    pub fn compile(&self, layers: &[Layer]) -> Result<Vec<Slot>> {
        let mut out = Vec::new();
        for layer in layers {
            match layer {
                Layer::Flip(qubits) => {
                    let x = linalg::pauli_matrix(&PauliOperator::from_index(1, 1));
                    let gates = qubits.iter().map(|&q| GateOp::new(vec![q], x.clone())).collect();
                    out.push(Slot { gates, duration_ns: 0.0 });
                }
                Layer::Clifford(elements) => self.compile_clifford(elements, &mut out)?,
            }
        }
        Ok(out)
    }

    fn compile_clifford(&self, elements: &[CliffordElement], out: &mut Vec<Slot>) -> Result<()> {
        let subs = self.partition.subsystems();
        if elements.len() != subs.len() {
            return Err(Error::Dimension { expected: subs.len(), got: elements.len() });
        }
        if self.timing == Timing::Layer && self.schedule.idle_group().is_none() {
            let gates = elements
                .iter()
                .zip(subs)
                .filter(|(g, _)| !g.is_identity())
                .map(|(g, qubits)| GateOp::new(qubits.clone(), g.to_unitary()))
                .collect();
            out.push(Slot { gates, duration_ns: self.duration_ns });
            return Ok(());
        }
        // generator words for 1-qubit subsystems; larger ones act whole in the first slot
        let mut words: Vec<(usize, Vec<Pulse>)> = Vec::new();
        let mut whole: GateLayer = Vec::new();
        for (g, qubits) in elements.iter().zip(subs) {
            if qubits.len() == 1 {
                words.push((qubits[0], decompose_generators(g)?));
            } else if !g.is_identity() {
                whole.push(GateOp::new(qubits.clone(), g.to_unitary()));
            }
        }
        let depth = words.iter().map(|(_, w)| w.len()).max().unwrap_or(0).max(usize::from(!whole.is_empty()));
        let n = self.partition.n_total();
        for k in 0..depth {
            let mut pulses = vec![None; n];
            for (q, w) in &words {
                pulses[*q] = w.get(k).copied();
            }
            match self.schedule {
                Schedule::Simultaneous => {
                    let mut gates: GateLayer = pulses
                        .iter()
                        .enumerate()
                        .filter_map(|(q, p)| p.map(|p| GateOp::new(vec![q], p.unitary())))
                        .collect();
                    if k == 0 {
                        gates.append(&mut whole);
                    }
                    out.push(Slot { gates, duration_ns: self.duration_ns });
                }
                Schedule::Split { idle_group } => {
                    let (mut first, mut second) = (Vec::new(), Vec::new());
                    for (q, p) in pulses.iter().enumerate() {
                        if let Some(p) = p {
                            let op = GateOp::new(vec![q], p.unitary());
                            if idle_group.contains(&q) { second.push(op) } else { first.push(op) }
                        }
                    }
                    out.push(Slot { gates: first, duration_ns: self.duration_ns });
                    out.push(Slot { gates: second, duration_ns: self.duration_ns });
                }
                Schedule::Echo { idle_group } | Schedule::Control { idle_group } => {
                    let mode = if matches!(self.schedule, Schedule::Echo { .. }) { EchoMode::Echo } else { EchoMode::Control };
                    for gates in echo_compile(&pulses, idle_group, mode) {
                        out.push(Slot { gates, duration_ns: self.duration_ns });
                    }
                }
            }
        }
        Ok(())
    }
}
