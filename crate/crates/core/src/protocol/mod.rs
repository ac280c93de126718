//! Correlated randomized benchmarking: run sequences on the simulator,
//! estimate every correlated Z-decay, fit, and convert to crosstalk figures.

mod fit;
mod readout;
mod sequence;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use fit::{fit_decay, DecayFit, FitFlag, FitPoint, STDERR_FLOOR};
pub use readout::{
    calibrate_readout, correct_and_correlate, correlators, exact_calibration, frequencies, ReadoutCalibration, MAX_CONDITION,
};
pub use sequence::{
    build_layers, echo_compile, generate_sequences, inject_flips, injection_rng, random_sequence, Compiler, EchoMode, Layer,
    Schedule, Slot, Timing,
};

use crate::channel::{
    epc_from_alpha, fixed_weight_from_decays, locality_diagnostic, weight_params_from_decays, weight_params_stderr,
    FixedWeightCoeffs, LocalityPair, SubspaceDecays, WeightParams,
};
use crate::error::{Error, Result};
use crate::metrics::{eta_from_fixed_weight, LocalChannelAnsatz};
use crate::pauli::{Partition, SupportPattern};
use crate::rng;
use crate::simulator::{DensityState, DeviceModel, Simulator};

pub const DEFAULT_LENGTHS: [usize; 9] = [1, 10, 25, 50, 75, 100, 150, 200, 300];

fn default_lengths() -> Vec<usize> {
    DEFAULT_LENGTHS.to_vec()
}
fn default_trials() -> usize {
    30
}
fn default_shots() -> usize {
    1000
}
fn default_calibration_shots() -> usize {
    10_000
}

/// Bit-flip injection on `qubits` with probability `p` after every Clifford layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injection {
    pub qubits: Vec<usize>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrRbConfig {
    pub partition: Partition,
    #[serde(default = "default_lengths")]
    pub lengths: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub timing: Timing,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injection: Option<Injection>,
    /// use exact outcome probabilities and the exact assignment matrix
    #[serde(default)]
    pub exact_probabilities: bool,
    #[serde(default = "default_calibration_shots")]
    pub calibration_shots: usize,
}

impl CorrRbConfig {
    pub fn new(partition: Partition) -> Self {
        Self {
            partition,
            lengths: default_lengths(),
            trials: default_trials(),
            shots: default_shots(),
            seed: 0,
            schedule: Schedule::Simultaneous,
            timing: Timing::Layer,
            injection: None,
            exact_probabilities: false,
            calibration_shots: default_calibration_shots(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengths.len() < 3 {
            return Err(Error::Config("at least 3 lengths are needed for the decay fit".into()));
        }
        if self.lengths[0] == 0 || self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("lengths must be >= 1 and strictly increasing".into()));
        }
        if self.trials == 0 || self.shots == 0 || self.calibration_shots == 0 {
            return Err(Error::Config("trials, shots and calibration_shots must be >= 1".into()));
        }
        if let Some(inj) = &self.injection {
            if !(0.0..=1.0).contains(&inj.p) {
                return Err(Error::Config(format!("injection probability {} outside [0, 1]", inj.p)));
            }
            if inj.qubits.is_empty() || inj.qubits.iter().any(|&q| q >= self.partition.n_total()) {
                return Err(Error::Config("injection qubits must be a non-empty subset of the register".into()));
            }
        }
        Compiler::new(&self.partition, self.timing, &self.schedule, 0.0)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub l: usize,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternCurve {
    pub pattern: String,
    pub points: Vec<DecayPoint>,
}

/// Averaged corrected correlators for every pattern and length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayDataset {
    pub partition: Partition,
    pub lengths: Vec<usize>,
    /// indexed by pattern integer
    pub curves: Vec<PatternCurve>,
    /// total injected flip layers per length
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injections: Option<Vec<usize>>,
    pub readout_condition: f64,
}

impl DecayDataset {
    pub fn curve(&self, s: SupportPattern) -> &PatternCurve {
        &self.curves[s.index()]
    }

    /// CSV with columns `pattern,l,mean,stderr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pattern,l,mean,stderr\n");
        for c in self.curves.iter().skip(1) {
            for p in &c.points {
                writeln!(out, "{},{},{},{}", c.pattern, p.l, p.mean, p.stderr).expect("write to string");
            }
        }
        out
    }
}

struct TrialResult {
    correlators: Vec<f64>,
    injections: usize,
}

fn run_trial(cfg: &CorrRbConfig, sim: &Simulator, cal: &ReadoutCalibration, l: usize, trial: u64) -> Result<TrialResult> {
    let b = &cfg.partition;
    let seqs = generate_sequences(b, l, cfg.seed, trial)?;
    let flips = match &cfg.injection {
        Some(inj) => Some(inject_flips(l, inj.p, &mut injection_rng(cfg.seed, l, trial))?),
        None => None,
    };
    let injections = flips.as_ref().map_or(0, |f| f.iter().filter(|&&x| x).count());
    let layers = build_layers(&seqs, flips.as_deref().zip(cfg.injection.as_ref().map(|i| i.qubits.as_slice())));
    let slots = Compiler::new(b, cfg.timing, &cfg.schedule, sim.device().gate_duration_ns)?.compile(&layers)?;
    let mut state = DensityState::zero(b.n_total())?;
    for slot in &slots {
        sim.apply_slot(&mut state, &slot.gates, slot.duration_ns)?;
    }
    let corr = if cfg.exact_probabilities {
        correlators(&cal.correct(&sim.measured_distribution(&state)?), b)
    } else {
        let mut r = rng::stream(cfg.seed, &[3, l as u64, trial]);
        correct_and_correlate(&sim.sample_shots(&state, cfg.shots, &mut r)?, cal, b)?
    };
    Ok(TrialResult { correlators: corr, injections })
}

/// Steps 1-4: simulate every (length, trial), correct readout, and average correlators.
pub fn run_corr_rb(cfg: &CorrRbConfig, device: &DeviceModel) -> Result<DecayDataset> {
    cfg.validate()?;
    let b = &cfg.partition;
    if b.n_total() != device.n {
        return Err(Error::Config(format!("partition covers {} qubits but the device has {}", b.n_total(), device.n)));
    }
    let sim = Simulator::new(device)?;
    let cal = if cfg.exact_probabilities {
        exact_calibration(&sim)?
    } else {
        calibrate_readout(&sim, cfg.calibration_shots, &mut rng::stream(cfg.seed, &[4]))?
    };
    log::info!("readout calibrated (condition number {:.3})", cal.condition);

    let jobs: Vec<(usize, u64)> = cfg.lengths.iter().flat_map(|&l| (0..cfg.trials as u64).map(move |t| (l, t))).collect();
    let results: Vec<TrialResult> = jobs
        .par_iter()
        .map(|&(l, t)| run_trial(cfg, &sim, &cal, l, t))
        .collect::<Result<_>>()?;

    let k = b.num_patterns();
    let mut curves: Vec<PatternCurve> = b.patterns().map(|s| PatternCurve { pattern: s.label(), points: vec![] }).collect();
    let mut injections = Vec::new();
    for (li, &l) in cfg.lengths.iter().enumerate() {
        let chunk = &results[li * cfg.trials..(li + 1) * cfg.trials];
        injections.push(chunk.iter().map(|r| r.injections).sum());
        let n = chunk.len() as f64;
        for (s, curve) in curves.iter_mut().enumerate().take(k) {
            let mean = chunk.iter().map(|r| r.correlators[s]).sum::<f64>() / n;
            let stderr = if chunk.len() > 1 {
                (chunk.iter().map(|r| (r.correlators[s] - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            } else {
                0.0
            };
            curve.points.push(DecayPoint { l, mean, stderr, trials: chunk.len() });
        }
    }
    Ok(DecayDataset {
        partition: b.clone(),
        lengths: cfg.lengths.clone(),
        curves,
        injections: cfg.injection.as_ref().map(|_| injections),
        readout_condition: cal.condition,
    })
}

/// Per-pattern summary line of an [`AnalysisReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSummary {
    pub pattern: String,
    pub weight: usize,
    pub alpha: f64,
    pub alpha_stderr: f64,
    pub eps: f64,
    pub eps_stderr: f64,
    pub eps_cptp: bool,
    pub p_s: f64,
    pub fit: DecayFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub partition: Partition,
    pub alpha: SubspaceDecays,
    pub eps: WeightParams,
    pub p_s: FixedWeightCoeffs,
    /// error per Clifford of each subsystem
    pub epc: Vec<f64>,
    pub epc_stderr: Vec<f64>,
    pub eta: f64,
    pub eta_ansatz: LocalChannelAnsatz,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locality: Option<Vec<LocalityPair>>,
    /// residual norm of the eps inversion
    pub inversion_residual: f64,
    /// patterns ordered by weight, then by index
    pub patterns: Vec<PatternSummary>,
}

impl AnalysisReport {
    pub fn summary(&self, s: &str) -> Option<&PatternSummary> {
        self.patterns.iter().find(|p| p.pattern == s)
    }

    pub fn eps_map(&self) -> BTreeMap<String, f64> {
        self.patterns.iter().map(|p| (p.pattern.clone(), p.eps)).collect()
    }
}

fn one() -> usize {
    1
}

/// Options for [`analyze_with`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisOptions {
    /// lengths below this are left out of the decay fits
    #[serde(default = "one")]
    pub min_length: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { min_length: 1 }
    }
}

/// Step 5 plus derived figures: fit each curve, invert to eps, compute p_S, EPC and eta.
pub fn analyze(data: &DecayDataset, b: &Partition) -> Result<AnalysisReport> {
    analyze_with(data, b, &AnalysisOptions::default())
}

pub fn analyze_with(data: &DecayDataset, b: &Partition, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    if &data.partition != b {
        return Err(Error::Config("dataset was recorded with a different partition".into()));
    }
    let k = b.num_patterns();
    let fits: Vec<Option<DecayFit>> = data
        .curves
        .iter()
        .enumerate()
        .map(|(s, c)| {
            if s == 0 {
                return Ok(None);
            }
            let pts: Vec<FitPoint> = c
                .points
                .iter()
                .filter(|p| p.l >= opts.min_length)
                .map(|p| FitPoint { l: p.l as f64, y: p.mean, stderr: p.stderr })
                .collect();
            fit_decay(&pts).map(Some)
        })
        .collect::<Result<_>>()?;
    let mut alpha = vec![1.0; k];
    let mut alpha_se = vec![0.0; k];
    for (s, f) in fits.iter().enumerate() {
        if let Some(f) = f {
            alpha[s] = f.alpha;
            alpha_se[s] = if f.stderr_alpha.is_finite() { f.stderr_alpha } else { 0.0 };
        }
    }
    let alpha = SubspaceDecays::new(b.len(), alpha)?;
    let eps = weight_params_from_decays(&alpha, b)?;
    let eps_se = weight_params_stderr(&eps, b, &alpha_se)?;
    let p_s = fixed_weight_from_decays(&alpha, b)?;
    let sizes = b.sizes();
    let (epc, epc_stderr): (Vec<f64>, Vec<f64>) = (0..b.len())
        .map(|j| {
            let d = (1u64 << sizes[j]) as f64;
            (epc_from_alpha(alpha.values()[1 << j], sizes[j]), (d - 1.0) / d * alpha_se[1 << j])
        })
        .unzip();
    let eta = eta_from_fixed_weight(&p_s, b)?;
    let locality = if b.all_single_qubit() { Some(locality_diagnostic(&alpha, b)?) } else { None };

    let mut order: Vec<SupportPattern> = b.patterns().skip(1).collect();
    order.sort_by_key(|s| (s.weight(), s.index()));
    let patterns = order
        .into_iter()
        .map(|s| {
            let i = s.index();
            PatternSummary {
                pattern: s.label(),
                weight: s.weight(),
                alpha: alpha.values()[i],
                alpha_stderr: alpha_se[i],
                eps: eps.values()[i],
                eps_stderr: eps_se[i],
                eps_cptp: eps.is_cptp(s),
                p_s: p_s.values()[i],
                fit: fits[i].clone().expect("non-empty pattern has a fit"),
            }
        })
        .collect();
    Ok(AnalysisReport {
        partition: b.clone(),
        inversion_residual: eps.residual(),
        alpha,
        eps,
        p_s,
        epc,
        epc_stderr,
        eta: eta.eta,
        eta_ansatz: eta.ansatz,
        locality,
        patterns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_unknown_keys() {
        let cfg: CorrRbConfig = serde_json::from_str(r#"{"partition": [[0], [1]]}"#).unwrap();
        assert_eq!(cfg.lengths, DEFAULT_LENGTHS.to_vec());
        assert_eq!((cfg.trials, cfg.shots), (30, 1000));
        assert!(serde_json::from_str::<CorrRbConfig>(r#"{"partition": [[0]], "extra": 1}"#).is_err());
        let cfg: CorrRbConfig =
            serde_json::from_str(r#"{"partition": [[0], [1], [2]], "schedule": {"kind": "echo", "idle_group": [2]}}"#).unwrap();
        assert_eq!(cfg.schedule, Schedule::Echo { idle_group: vec![2] });
        assert!(serde_json::from_str::<CorrRbConfig>(r#"{"partition": [[0]], "schedule": {"kind": "echo", "idle_group": [0], "x": 1}}"#).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = CorrRbConfig::new(Partition::singletons(2).unwrap());
        cfg.validate().unwrap();
        cfg.lengths = vec![1, 5, 5];
        assert!(cfg.validate().is_err());
        cfg.lengths = vec![1, 5, 9];
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        cfg.trials = 2;
        cfg.injection = Some(Injection { qubits: vec![0, 3], p: 0.1 });
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn noiseless_run_gives_unit_correlators() {
        let mut cfg = CorrRbConfig::new(Partition::singletons(2).unwrap());
        cfg.lengths = vec![1, 4, 9];
        cfg.trials = 3;
        cfg.shots = 50;
        let data = run_corr_rb(&cfg, &DeviceModel::noiseless(2)).unwrap();
        for c in &data.curves {
            assert!(c.points.iter().all(|p| p.mean == 1.0 && p.stderr == 0.0));
        }
        let csv = data.to_csv();
        assert!(csv.starts_with("pattern,l,mean,stderr\n10,1,1,0\n"), "{csv}");
        assert_eq!(csv.lines().count(), 1 + 3 * 3);
    }
}
