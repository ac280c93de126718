//! Config-driven experiments: `run`, `inject` and `echo-compare`, rendered to
//! report.json, decays.csv and SVG plots.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Partition, SupportPattern};
use crate::plot::{decay_curves_svg, epsilon_bar_svg, BarSeries};
use crate::protocol::{
    analyze_with, run_corr_rb, AnalysisOptions, AnalysisReport, CorrRbConfig, DecayDataset, Injection, Schedule, Timing,
};
use crate::simulator::DeviceModel;

pub const PRESETS: [&str; 5] = ["noiseless", "paper4q", "fig1", "inject4", "echo59"];
pub const DEFAULT_OUTPUT_DIR: &str = "corrrb-out";

/// A named device preset or an inline model; `gate_duration_ns` overrides either.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<DeviceModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_duration_ns: Option<f64>,
}

impl DeviceSpec {
    pub fn preset(name: &str) -> Self {
        Self { preset: Some(name.to_string()), model: None, gate_duration_ns: None }
    }

    pub fn resolve(&self) -> Result<DeviceModel> {
        let mut d = match (&self.preset, &self.model) {
            (Some(name), None) => DeviceModel::preset(name)?,
            (None, Some(m)) => m.clone(),
            _ => return Err(Error::Config("device needs exactly one of \"preset\" or \"model\"".into())),
        };
        if let Some(ns) = self.gate_duration_ns {
            d.gate_duration_ns = ns;
        }
        d.validate()?;
        Ok(d)
    }
}

/// Settings used only by `echo-compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EchoOptions {
    pub idle_group: Vec<usize>,
    /// also run the plain simultaneous schedule as a baseline
    #[serde(default)]
    pub include_plain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub device: DeviceSpec,
    pub protocol: CorrRbConfig,
    #[serde(default)]
    pub analysis: AnalysisOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub echo: Option<EchoOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// overrides `protocol.seed` when set
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let singles = Partition::singletons(4)?;
        let mut protocol = CorrRbConfig::new(singles);
        protocol.seed = 1;
        let mut cfg = Self {
            device: DeviceSpec::preset("noiseless"),
            protocol,
            analysis: AnalysisOptions::default(),
            echo: None,
            output_dir: None,
            seed: None,
        };
        match name {
            "noiseless" => {}
            "paper4q" | "fig1" => {
                cfg.device = DeviceSpec::preset("paper4q");
                cfg.protocol.timing = Timing::Pulse;
                // resolves the weakest coupled pair (99 kHz) above 3 sigma
                cfg.protocol.trials = 100;
            }
            "inject4" => {
                cfg.device = DeviceSpec::preset("paper4q");
                cfg.protocol.timing = Timing::Pulse;
                cfg.protocol.trials = 4000;
                cfg.protocol.injection = Some(Injection { qubits: vec![0, 1, 2, 3], p: 0.005 });
            }
            "echo59" => {
                cfg.device = DeviceSpec::preset("paper4q-59ns");
                cfg.protocol.timing = Timing::Pulse;
                cfg.protocol.schedule = Schedule::Echo { idle_group: vec![2] };
                cfg.echo = Some(EchoOptions { idle_group: vec![2], include_plain: true });
            }
            other => return Err(Error::Config(format!("unknown preset {other:?} (expected one of {PRESETS:?})"))),
        }
        Ok(cfg)
    }

    /// Protocol settings with the top-level seed applied.
    pub fn effective_protocol(&self) -> CorrRbConfig {
        let mut p = self.protocol.clone();
        if let Some(seed) = self.seed {
            p.seed = seed;
        }
        p
    }

    pub fn validate(&self) -> Result<DeviceModel> {
        let device = self.device.resolve()?;
        let p = self.effective_protocol();
        p.validate()?;
        if p.partition.n_total() != device.n {
            return Err(Error::Config(format!(
                "partition covers {} qubits but the device has {}",
                p.partition.n_total(),
                device.n
            )));
        }
        if self.analysis.min_length > 1 && p.lengths.iter().filter(|&&l| l >= self.analysis.min_length).count() < 3 {
            return Err(Error::Config("analysis.min_length leaves fewer than 3 lengths".into()));
        }
        if let Some(e) = &self.echo {
            if e.idle_group.iter().any(|&q| q >= device.n) {
                return Err(Error::Config("echo.idle_group qubit outside the register".into()));
            }
        }
        Ok(device)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    /// The config as recorded in reports: seed folded in, no output path.
    fn recorded(&self) -> Self {
        let mut c = self.clone();
        c.protocol = self.effective_protocol();
        c.seed = None;
        c.output_dir = None;
        c
    }
}

/// Recovered figures for the injected pattern.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectionSummary {
    pub qubits: Vec<usize>,
    pub p: f64,
    pub pattern: String,
    /// `p` expressed as a depolarizing parameter on the injected pattern
    pub expected_eps: f64,
    pub eps: f64,
    pub eps_stderr: f64,
    pub eta: f64,
    /// injected flip layers summed over trials, per length
    pub injected_layers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub config: ExperimentConfig,
    pub device: DeviceModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub injection: Option<InjectionSummary>,
    pub analysis: AnalysisReport,
    pub dataset: DecayDataset,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleRun {
    pub schedule: Schedule,
    pub analysis: AnalysisReport,
    pub dataset: DecayDataset,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EchoReport {
    pub command: &'static str,
    pub config: ExperimentConfig,
    pub device: DeviceModel,
    pub eta_control: f64,
    pub eta_echo: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_plain: Option<f64>,
    /// control eps over echo eps for every weight-2 pattern
    pub weight2_suppression: Vec<(String, f64)>,
    pub control: ScheduleRun,
    pub echo: ScheduleRun,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plain: Option<ScheduleRun>,
}

/// Rendered output files, relative path to contents; nothing touches disk until [`Artifacts::write`].
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub files: Vec<(PathBuf, String)>,
}

impl Artifacts {
    fn add(&mut self, path: impl Into<PathBuf>, text: String) {
        self.files.push((path.into(), text));
    }

    pub fn get(&self, path: &str) -> Option<&str> {
        self.files.iter().find(|(p, _)| p == Path::new(path)).map(|(_, t)| t.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::with_capacity(self.files.len());
        for (rel, text) in &self.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, text)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn simulate(protocol: &CorrRbConfig, device: &DeviceModel, opts: &AnalysisOptions) -> Result<(DecayDataset, AnalysisReport)> {
    let data = run_corr_rb(protocol, device)?;
    let report = analyze_with(&data, &protocol.partition, opts)?;
    Ok((data, report))
}

fn single_run_files(prefix: &Path, title: &str, data: &DecayDataset, report: &AnalysisReport, out: &mut Artifacts) {
    out.add(prefix.join("decays.csv"), data.to_csv());
    out.add(prefix.join("epsilon_bar.svg"), epsilon_bar_svg(&format!("{title}: epsilon by pattern"), &[BarSeries::from_report(title, report)]));
    out.add(prefix.join("decay_curves.svg"), decay_curves_svg(&format!("{title}: correlator decays"), data, report));
}

/// Depolarizing parameter of a pattern carrying total Pauli mass `p`.
fn eps_from_mass(p: f64, b: &Partition, s: SupportPattern) -> f64 {
    let m: f64 = b.sizes().iter().enumerate().filter(|(j, _)| s.contains(*j)).map(|(_, &n)| 4f64.powi(n as i32) - 1.0).product::<f64>() + 1.0;
    p * m / (m - 1.0)
}

fn run_inner(cfg: &ExperimentConfig, command: &'static str) -> Result<(RunReport, Artifacts)> {
    let device = cfg.validate()?;
    let protocol = cfg.effective_protocol();
    let (data, analysis) = simulate(&protocol, &device, &cfg.analysis)?;
    let injection = match &protocol.injection {
        Some(inj) => {
            let b = &protocol.partition;
            let mut mask = 0u32;
            for &q in &inj.qubits {
                mask |= 1 << b.subsystem_of(q).ok_or_else(|| Error::Config(format!("qubit {q} not in partition")))?;
            }
            let s = SupportPattern::new(mask, b.len())?;
            let summary = analysis.summary(&s.label()).expect("every non-empty pattern is summarized");
            Some(InjectionSummary {
                qubits: inj.qubits.clone(),
                p: inj.p,
                pattern: s.label(),
                expected_eps: eps_from_mass(inj.p, b, s),
                eps: summary.eps,
                eps_stderr: summary.eps_stderr,
                eta: analysis.eta,
                injected_layers: data.injections.clone().unwrap_or_default(),
            })
        }
        None => None,
    };
    let mut out = Artifacts::default();
    single_run_files(Path::new(""), command, &data, &analysis, &mut out);
    let report = RunReport { command, config: cfg.recorded(), device, injection, analysis, dataset: data };
    out.files.insert(0, (PathBuf::from("report.json"), to_json(&report)?));
    Ok((report, out))
}

/// Plain corrRB run.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<(RunReport, Artifacts)> {
    run_inner(cfg, "run")
}

/// Injection run; `qubits`/`p` override the config's injection settings.
pub fn cmd_inject(cfg: &ExperimentConfig, qubits: Option<Vec<usize>>, p: Option<f64>) -> Result<(RunReport, Artifacts)> {
    let mut cfg = cfg.clone();
    let base = cfg.protocol.injection.clone();
    let qubits = qubits.or_else(|| base.as_ref().map(|i| i.qubits.clone()));
    let p = p.or_else(|| base.as_ref().map(|i| i.p));
    match (qubits, p) {
        (Some(qubits), Some(p)) => cfg.protocol.injection = Some(Injection { qubits, p }),
        _ => return Err(Error::Config("inject needs injection qubits and p (from the config or the command line)".into())),
    }
    run_inner(&cfg, "inject")
}

/// Echo and control schedules (plus the plain baseline if requested) on identical sequences.
pub fn cmd_echo_compare(cfg: &ExperimentConfig) -> Result<(EchoReport, Artifacts)> {
    let device = cfg.validate()?;
    let base = cfg.effective_protocol();
    let (idle_group, include_plain) = match (&cfg.echo, base.schedule.idle_group()) {
        (Some(e), _) => (e.idle_group.clone(), e.include_plain),
        (None, Some(g)) => (g.to_vec(), false),
        (None, None) => return Err(Error::Config("echo-compare needs echo.idle_group or an idle-group schedule".into())),
    };
    let run = |schedule: Schedule| -> Result<ScheduleRun> {
        let mut p = base.clone();
        p.schedule = schedule.clone();
        p.validate()?;
        let (dataset, analysis) = simulate(&p, &device, &cfg.analysis)?;
        Ok(ScheduleRun { schedule, analysis, dataset })
    };
    let control = run(Schedule::Control { idle_group: idle_group.clone() })?;
    let echo = run(Schedule::Echo { idle_group: idle_group.clone() })?;
    let plain = if include_plain { Some(run(Schedule::Simultaneous)?) } else { None };

    let weight2_suppression = control
        .analysis
        .patterns
        .iter()
        .filter(|p| p.weight == 2)
        .map(|c| {
            let e = echo.analysis.summary(&c.pattern).expect("same partition").eps;
            (c.pattern.clone(), c.eps / e)
        })
        .collect();

    let mut out = Artifacts::default();
    let mut series = Vec::new();
    if let Some(p) = &plain {
        series.push(BarSeries::from_report("plain", &p.analysis));
        single_run_files(Path::new("plain"), "plain", &p.dataset, &p.analysis, &mut out);
    }
    series.push(BarSeries::from_report("control", &control.analysis));
    series.push(BarSeries::from_report("echo", &echo.analysis));
    single_run_files(Path::new("control"), "control", &control.dataset, &control.analysis, &mut out);
    single_run_files(Path::new("echo"), "echo", &echo.dataset, &echo.analysis, &mut out);
    out.files.insert(0, (PathBuf::from("epsilon_bar.svg"), epsilon_bar_svg("epsilon by pattern: echo vs control", &series)));

    let report = EchoReport {
        command: "echo-compare",
        config: cfg.recorded(),
        device,
        eta_control: control.analysis.eta,
        eta_echo: echo.analysis.eta,
        eta_plain: plain.as_ref().map(|p| p.analysis.eta),
        weight2_suppression,
        control,
        echo,
        plain,
    };
    out.files.insert(0, (PathBuf::from("report.json"), to_json(&report)?));
    Ok((report, out))
}
