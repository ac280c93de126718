//! Pauli-channel representations and the conversions between them.
//!
//! * [`PauliChannelProbs`]: Kraus-form probabilities `p_i` over all `4^n` Paulis.
//! * [`PtmDiagonal`]: diagonal of the Pauli transfer matrix.
//! * [`FixedWeightCoeffs`]: probability mass `p_S` per support pattern.
//! * [`SubspaceDecays`]: PTM decay `alpha_S` per support pattern.
//! * [`WeightParams`]: `eps_S` of the composition of fixed-subspace-weight
//!   depolarizing channels.
//!
//! Pattern-indexed vectors have length `2^m` and use the pattern integer as
//! index (bit `j` = subsystem `j`).

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::pauli::{subspace_size, Partition, PauliBasis, PauliOperator, SupportPattern};

const SUM_TOL: f64 = 1e-10;

/// Probabilities of a Pauli channel `sum_i p_i P_i rho P_i`, indexed by Pauli index.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliChannelProbs {
    n: usize,
    probs: Vec<f64>,
}

impl PauliChannelProbs {
    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self> {
        check_len(1 << (2 * n), probs.len())?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::State(format!("Pauli probabilities sum to {sum}")));
        }
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::State("non-finite Pauli probability".into()));
        }
        Ok(Self { n, probs })
    }

    /// Construct without the simplex checks (inverse transforms of
    /// non-Pauli diagonals may produce negative entries).
    pub fn unchecked(n: usize, probs: Vec<f64>) -> Self {
        Self { n, probs }
    }

    pub fn identity(n: usize) -> Self {
        let mut probs = vec![0.0; 1 << (2 * n)];
        probs[0] = 1.0;
        Self { n, probs }
    }

    /// Random channel: Dirichlet(1) weights mixed with the identity.
    pub fn random<R: Rng + ?Sized>(n: usize, identity_weight: f64, rng: &mut R) -> Self {
        let size = 1usize << (2 * n);
        let mut w: Vec<f64> = (0..size).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x *= (1.0 - identity_weight) / total);
        w[0] += identity_weight;
        Self { n, probs: w }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, p: &PauliOperator) -> f64 {
        self.probs[p.index()]
    }

    /// Whether every entry is non-negative up to `1e-12`.
    pub fn is_nonnegative(&self) -> bool {
        self.probs.iter().all(|&p| p >= -1e-12)
    }

    /// Direct summation of probability mass per support pattern.
    pub fn pattern_masses(&self, b: &Partition) -> Result<FixedWeightCoeffs> {
        check_len(b.n_total(), self.n)?;
        let pats = PauliBasis::new(self.n).patterns(b);
        let mut p = vec![0.0; b.num_patterns()];
        for (i, &s) in pats.iter().enumerate() {
            p[s] += self.probs[i];
        }
        Ok(FixedWeightCoeffs { m: b.len(), values: p })
    }

    /// Sequential composition of two Pauli channels.
    pub fn compose(&self, other: &PauliChannelProbs) -> Result<PauliChannelProbs> {
        check_len(self.n, other.n)?;
        let size = self.probs.len();
        let mut out = vec![0.0; size];
        let basis = PauliBasis::new(self.n);
        for (i, &a) in self.probs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.probs.iter().enumerate() {
                let k = index_of(self.n, basis.x[i] ^ basis.x[j], basis.z[i] ^ basis.z[j]);
                out[k] += a * b;
            }
        }
        Ok(PauliChannelProbs { n: self.n, probs: out })
    }

    /// Tensor product `self (x) other` with `self` on the low qubits.
    pub fn tensor(&self, other: &PauliChannelProbs) -> PauliChannelProbs {
        let n = self.n + other.n;
        let mut probs = vec![0.0; 1 << (2 * n)];
        for (j, &b) in other.probs.iter().enumerate() {
            for (i, &a) in self.probs.iter().enumerate() {
                probs[i | (j << (2 * self.n))] = a * b;
            }
        }
        PauliChannelProbs { n, probs }
    }
}

fn index_of(n: usize, x: u64, z: u64) -> usize {
    PauliOperator::new(n, x, z).expect("bits within register").index()
}

/// Diagonal of a Pauli transfer matrix, indexed by Pauli index.
#[derive(Debug, Clone, PartialEq)]
pub struct PtmDiagonal {
    n: usize,
    diag: Vec<f64>,
}

impl PtmDiagonal {
    pub fn new(n: usize, diag: Vec<f64>) -> Result<Self> {
        check_len(1 << (2 * n), diag.len())?;
        if (diag[0] - 1.0).abs() > SUM_TOL {
            return Err(Error::State(format!("identity PTM entry is {} (must be 1)", diag[0])));
        }
        let mut diag = diag;
        diag[0] = 1.0;
        Ok(Self { n, diag })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Elementwise product: the PTM of the composed channel.
    pub fn compose(&self, other: &PtmDiagonal) -> Result<PtmDiagonal> {
        check_len(self.n, other.n)?;
        let diag = self.diag.iter().zip(&other.diag).map(|(a, b)| a * b).collect();
        Ok(PtmDiagonal { n: self.n, diag })
    }
}

/// `R_jj = sum_i p_i (-1)^{omega(P_j, P_i)}`.
pub fn ptm_from_probs(p: &PauliChannelProbs) -> PtmDiagonal {
    let basis = PauliBasis::new(p.n);
    let size = basis.len();
    let mut diag = vec![0.0; size];
    for (j, d) in diag.iter_mut().enumerate() {
        *d = (0..size)
            .map(|i| if basis.omega(j, i) == 1 { -p.probs[i] } else { p.probs[i] })
            .sum();
    }
    diag[0] = 1.0;
    PtmDiagonal { n: p.n, diag }
}

/// `p_i = 4^{-n} sum_j (-1)^{omega(P_i, P_j)} R_jj`. Negative entries are kept.
pub fn probs_from_ptm(r: &PtmDiagonal) -> PauliChannelProbs {
    let basis = PauliBasis::new(r.n);
    let size = basis.len();
    let scale = 1.0 / size as f64;
    let probs = (0..size)
        .map(|i| {
            scale
                * (0..size)
                    .map(|j| if basis.omega(i, j) == 1 { -r.diag[j] } else { r.diag[j] })
                    .sum::<f64>()
        })
        .collect();
    PauliChannelProbs { n: r.n, probs }
}

/// Probability mass per support pattern. Sums to one for a trace-preserving channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedWeightCoeffs {
    m: usize,
    values: Vec<f64>,
}

impl FixedWeightCoeffs {
    pub fn new(m: usize, values: Vec<f64>) -> Result<Self> {
        check_len(1 << m, values.len())?;
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::State(format!("fixed-weight coefficients sum to {sum}")));
        }
        Ok(Self { m, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, s: SupportPattern) -> f64 {
        self.values[s.index()]
    }

    pub fn num_subsystems(&self) -> usize {
        self.m
    }

    pub fn is_cptp(&self) -> bool {
        self.values.iter().all(|&p| (-1e-12..=1.0 + 1e-12).contains(&p))
    }

    /// Full Pauli distribution with each `p_S` spread uniformly over its pattern class.
    pub fn expand(&self, b: &Partition) -> Result<PauliChannelProbs> {
        check_len(b.len(), self.m)?;
        let n = b.n_total();
        let pats = PauliBasis::new(n).patterns(b);
        let sizes: Vec<f64> = b
            .patterns()
            .map(|s| subspace_size(s, b).map(|v| v as f64))
            .collect::<Result<_>>()?;
        let probs = pats.iter().map(|&s| self.values[s] / sizes[s]).collect();
        Ok(PauliChannelProbs { n, probs })
    }
}

/// PTM decay `alpha_S` per support pattern; `alpha_empty = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceDecays {
    m: usize,
    values: Vec<f64>,
}

impl SubspaceDecays {
    pub fn new(m: usize, values: Vec<f64>) -> Result<Self> {
        check_len(1 << m, values.len())?;
        if (values[0] - 1.0).abs() > SUM_TOL {
            return Err(Error::State(format!("alpha of the empty pattern is {} (must be 1)", values[0])));
        }
        let mut values = values;
        values[0] = 1.0;
        Ok(Self { m, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, s: SupportPattern) -> f64 {
        self.values[s.index()]
    }

    pub fn num_subsystems(&self) -> usize {
        self.m
    }
}

/// Result of [`decays_from_ptm`]: the decays plus the largest within-pattern
/// deviation of the PTM diagonal from the pattern mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternAverage {
    pub decays: SubspaceDecays,
    pub max_deviation: Vec<f64>,
}

/// `alpha_S = Tr(P_S R) / Tr(P_S)`: the mean diagonal entry over each pattern class.
pub fn decays_from_ptm(r: &PtmDiagonal, b: &Partition) -> Result<PatternAverage> {
    check_len(b.n_total(), r.n)?;
    let pats = PauliBasis::new(r.n).patterns(b);
    let k = b.num_patterns();
    let mut sum = vec![0.0; k];
    let mut count = vec![0usize; k];
    for (i, &s) in pats.iter().enumerate() {
        sum[s] += r.diag[i];
        count[s] += 1;
    }
    let mean: Vec<f64> = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
    let mut dev = vec![0.0f64; k];
    for (i, &s) in pats.iter().enumerate() {
        dev[s] = dev[s].max((r.diag[i] - mean[s]).abs());
    }
    let mut values = mean;
    values[0] = 1.0;
    Ok(PatternAverage { decays: SubspaceDecays { m: b.len(), values }, max_deviation: dev })
}

/// Per-subsystem 2x2 factor of the pattern-mass -> decay map:
/// `[[1, 1], [1, -1/(4^{n_j} - 1)]]` (row: j in S, column: j in T).
fn mass_to_decay_factor(n_j: usize) -> [[f64; 2]; 2] {
    let c = -1.0 / (((1u64 << (2 * n_j)) - 1) as f64);
    [[1.0, 1.0], [1.0, c]]
}

fn invert2(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}

/// Apply `(x)_j F_j` to a pattern-indexed vector (subsystem `j` on bit `j`).
fn kron_apply(values: &mut [f64], factors: &[[[f64; 2]; 2]]) {
    for (j, f) in factors.iter().enumerate() {
        let bit = 1usize << j;
        for i in 0..values.len() {
            if i & bit == 0 {
                let (a, b) = (values[i], values[i | bit]);
                values[i] = f[0][0] * a + f[0][1] * b;
                values[i | bit] = f[1][0] * a + f[1][1] * b;
            }
        }
    }
}

/// Pattern masses from decays (inverse of [`decays_from_fixed_weight`]).
pub fn fixed_weight_from_decays(a: &SubspaceDecays, b: &Partition) -> Result<FixedWeightCoeffs> {
    check_len(b.len(), a.m)?;
    let factors: Vec<_> = b.sizes().into_iter().map(|n| invert2(mass_to_decay_factor(n))).collect();
    let mut values = a.values.clone();
    kron_apply(&mut values, &factors);
    Ok(FixedWeightCoeffs { m: a.m, values })
}

/// `alpha_S = sum_T p_T prod_{j in S and T} (-1/(4^{n_j} - 1))`.
pub fn decays_from_fixed_weight(p: &FixedWeightCoeffs, b: &Partition) -> Result<SubspaceDecays> {
    check_len(b.len(), p.m)?;
    let factors: Vec<_> = b.sizes().into_iter().map(mass_to_decay_factor).collect();
    let mut values = p.values.clone();
    kron_apply(&mut values, &factors);
    Ok(SubspaceDecays { m: p.m, values })
}

/// `m_T = prod_{j in T} (4^{n_j} - 1) + 1`.
pub fn depolarizing_dimension(t: SupportPattern, b: &Partition) -> Result<f64> {
    Ok(subspace_size(t, b)? as f64 + 1.0)
}

/// Factor `y_S(T)` with `alpha_S = prod_T (1 + y_S(T) eps_T)`.
///
/// `y_S(T) = (1 + prod_{j in T} f_j) / m_T - 1` where `f_j = -1` for `j` in
/// `S` and `4^{n_j} - 1` otherwise.
pub fn y_factor(s: SupportPattern, t: SupportPattern, b: &Partition) -> Result<f64> {
    check_len(b.len(), s.len())?;
    check_len(b.len(), t.len())?;
    if t.is_empty() {
        return Err(Error::Config("y_S(T) is undefined for the empty pattern T".into()));
    }
    let sizes = b.sizes();
    let mut prod = 1.0;
    for (j, &n_j) in sizes.iter().enumerate() {
        if t.contains(j) {
            prod *= if s.contains(j) { -1.0 } else { ((1u64 << (2 * n_j)) - 1) as f64 };
        }
    }
    let m_t = depolarizing_dimension(t, b)?;
    Ok((1.0 + prod) / m_t - 1.0)
}

/// Fixed-subspace-weight depolarizing parameters `eps_S`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightParams {
    m: usize,
    /// length `2^m`; entry 0 is unused and always 0
    values: Vec<f64>,
    cptp: Vec<bool>,
    residual: f64,
}

impl WeightParams {
    /// From `2^m` values (entry 0 ignored); CPTP flags are computed against `b`.
    pub fn new(values: Vec<f64>, b: &Partition) -> Result<Self> {
        check_len(b.num_patterns(), values.len())?;
        let mut values = values;
        values[0] = 0.0;
        let cptp = cptp_flags(&values, b)?;
        Ok(Self { m: b.len(), values, cptp, residual: 0.0 })
    }

    pub fn zeros(b: &Partition) -> Self {
        Self::new(vec![0.0; b.num_patterns()], b).expect("length matches")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, s: SupportPattern) -> f64 {
        self.values[s.index()]
    }

    pub fn is_cptp(&self, s: SupportPattern) -> bool {
        self.cptp[s.index()]
    }

    /// True when every `eps_S` is inside its CPTP range.
    pub fn all_cptp(&self) -> bool {
        self.cptp.iter().skip(1).all(|&c| c)
    }

    /// Residual norm of the inversion that produced these parameters (0 when constructed directly).
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn num_subsystems(&self) -> usize {
        self.m
    }
}

fn cptp_flags(values: &[f64], b: &Partition) -> Result<Vec<bool>> {
    b.patterns()
        .map(|s| {
            if s.is_empty() {
                return Ok(true);
            }
            let m_s = depolarizing_dimension(s, b)?;
            let e = values[s.index()];
            Ok((0.0..=m_s / (m_s - 1.0)).contains(&e))
        })
        .collect()
}

/// `y_S(T)` for every pair of patterns (row S, column T; column 0 unused).
fn y_table(b: &Partition) -> Result<Vec<Vec<f64>>> {
    let k = b.num_patterns();
    let pats: Vec<_> = b.patterns().collect();
    let mut table = vec![vec![0.0; k]; k];
    for s in &pats {
        for t in pats.iter().skip(1) {
            table[s.index()][t.index()] = y_factor(*s, *t, b)?;
        }
    }
    Ok(table)
}

fn model_decays(eps: &[f64], y: &[Vec<f64>]) -> Vec<f64> {
    let k = eps.len();
    (0..k)
        .map(|s| {
            (1..k)
                .filter(|&t| s & t != 0)
                .map(|t| 1.0 + y[s][t] * eps[t])
                .product()
        })
        .collect()
}

/// Jacobian of the model decays (rows S != 0) w.r.t. eps (columns T != 0).
fn model_jacobian(eps: &[f64], y: &[Vec<f64>]) -> DMatrix<f64> {
    let k = eps.len();
    DMatrix::from_fn(k - 1, k - 1, |r, c| {
        let (s, t) = (r + 1, c + 1);
        if s & t == 0 {
            return 0.0;
        }
        let others: f64 = (1..k)
            .filter(|&u| u != t && s & u != 0)
            .map(|u| 1.0 + y[s][u] * eps[u])
            .product();
        y[s][t] * others
    })
}

/// `alpha_S = prod_{T : S and T intersect} (1 + y_S(T) eps_T)`.
pub fn decays_from_weight_params(e: &WeightParams, b: &Partition) -> Result<SubspaceDecays> {
    check_len(b.len(), e.m)?;
    let y = y_table(b)?;
    let mut values = model_decays(&e.values, &y);
    values[0] = 1.0;
    Ok(SubspaceDecays { m: e.m, values })
}

const INVERSION_MAX_ITER: usize = 200;
const INVERSION_RESTARTS: usize = 8;
const GRADIENT_TOL: f64 = 1e-12;

struct InversionAttempt {
    eps: Vec<f64>,
    residual: f64,
    converged: bool,
}

/// Damped Gauss-Newton on `sum_S (alpha_S - model_S(eps))^2`.
fn invert_from(start: Vec<f64>, alpha: &[f64], y: &[Vec<f64>]) -> InversionAttempt {
    let k = alpha.len();
    let residuals = |eps: &[f64]| -> DVector<f64> {
        let model = model_decays(eps, y);
        DVector::from_iterator(k - 1, (1..k).map(|s| alpha[s] - model[s]))
    };
    let mut eps = start;
    let mut r = residuals(&eps);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..INVERSION_MAX_ITER {
        let j = model_jacobian(&eps, y);
        // residual = alpha - model, so d(residual)/d(eps) = -J
        let grad = j.transpose() * &r;
        if grad.norm() < GRADIENT_TOL || cost.sqrt() < 1e-15 {
            converged = true;
            break;
        }
        let jtj = j.transpose() * &j;
        let mut improved = false;
        for _ in 0..30 {
            let mut damped = jtj.clone();
            for d in 0..k - 1 {
                damped[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&grad) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = eps
                .iter()
                .enumerate()
                .map(|(t, &e)| if t == 0 { 0.0 } else { e + step[t - 1] })
                .collect();
            let r_trial = residuals(&trial);
            let c_trial = r_trial.norm_squared();
            if c_trial.is_finite() && c_trial <= cost {
                let rel_step = step.norm() / (1.0 + eps.iter().map(|e| e * e).sum::<f64>().sqrt());
                eps = trial;
                r = r_trial;
                cost = c_trial;
                lambda = (lambda * 0.3).max(1e-15);
                improved = true;
                if rel_step < 1e-16 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved || converged {
            // no descent direction left: a stationary point up to rounding
            converged = true;
            break;
        }
    }
    InversionAttempt { eps, residual: cost.sqrt(), converged }
}

/// Least-squares `eps` for measured decays. Out-of-range values are flagged, never clipped.
pub fn weight_params_from_decays(a: &SubspaceDecays, b: &Partition) -> Result<WeightParams> {
    check_len(b.len(), a.m)?;
    if a.values.iter().skip(1).any(|v| !v.is_finite()) {
        return Err(Error::State("non-finite decay".into()));
    }
    let y = y_table(b)?;
    let k = a.values.len();
    let pats: Vec<_> = b.patterns().collect();
    let mut start = vec![0.0; k];
    for s in &pats {
        if s.weight() == 1 {
            // a weight-1 eps multiplies its own decay by (1 + y_S(S) eps)
            let ys = y[s.index()][s.index()];
            start[s.index()] = (a.values[s.index()] - 1.0) / ys;
        }
    }
    let mut best = invert_from(start, &a.values, &y);
    let good = |att: &InversionAttempt| att.converged && att.residual < 1e-10;
    if !good(&best) {
        let mut rng = crate::rng::stream(0x5eed, &[k as u64]);
        for _ in 0..INVERSION_RESTARTS {
            let start: Vec<f64> = (0..k)
                .map(|t| if t == 0 { 0.0 } else { rng.random_range(-0.05..0.3) })
                .collect();
            let att = invert_from(start, &a.values, &y);
            if (att.converged && !best.converged) || (att.converged == best.converged && att.residual < best.residual) {
                best = att;
            }
            if good(&best) {
                break;
            }
        }
    }
    if !best.converged || !best.residual.is_finite() {
        return Err(Error::FitFailure { residual: best.residual });
    }
    let mut out = WeightParams::new(best.eps, b)?;
    out.residual = best.residual;
    Ok(out)
}

/// Linearized standard errors of `eps` given independent standard errors of `alpha`.
pub fn weight_params_stderr(e: &WeightParams, b: &Partition, alpha_stderr: &[f64]) -> Result<Vec<f64>> {
    check_len(b.num_patterns(), alpha_stderr.len())?;
    let y = y_table(b)?;
    let j = model_jacobian(&e.values, &y);
    let k = b.num_patterns();
    let Some(jinv) = j.try_inverse() else {
        return Ok(vec![f64::INFINITY; k]);
    };
    let mut out = vec![0.0; k];
    for t in 1..k {
        let var: f64 = (1..k).map(|s| (jinv[(t - 1, s - 1)] * alpha_stderr[s]).powi(2)).sum();
        out[t] = var.sqrt();
    }
    Ok(out)
}

/// Weight-2 coefficient that would cancel the correlated mass of two independent bit-flip channels.
pub fn kappa_weight2(k1: f64, k2: f64) -> Result<f64> {
    let prod = k1 * k2;
    if (prod - 1.0).abs() < f64::EPSILON {
        return Err(Error::State("kappa_1 * kappa_2 = 1".into()));
    }
    Ok(prod / (prod - 1.0))
}

/// Error per Clifford of an `n_i`-qubit subsystem from its decay.
pub fn epc_from_alpha(alpha: f64, n_i: usize) -> f64 {
    let d = (1u64 << n_i) as f64;
    (d - 1.0) / d * (1.0 - alpha)
}

/// Geometric mean of weight-k decays next to the local-noise prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalityPair {
    pub weight: usize,
    pub geomean: f64,
    pub local_prediction: f64,
}

/// For each weight k >= 1: (geomean of weight-k alphas, (geomean of weight-1 alphas)^k).
///
/// The two agree for noise without crosstalk. Magnitudes are used so the
/// logarithm stays defined for decays at or below zero.
pub fn locality_diagnostic(a: &SubspaceDecays, b: &Partition) -> Result<Vec<LocalityPair>> {
    check_len(b.len(), a.m)?;
    if !b.all_single_qubit() {
        return Err(Error::Partition("locality diagnostic needs single-qubit subsystems".into()));
    }
    let geomean = |k: usize| -> f64 {
        let logs: Vec<f64> = b
            .patterns()
            .filter(|s| s.weight() == k)
            .map(|s| a.get(s).abs().ln())
            .collect();
        (logs.iter().sum::<f64>() / logs.len() as f64).exp()
    };
    let g1 = geomean(1);
    Ok((1..=a.m)
        .map(|k| LocalityPair { weight: k, geomean: geomean(k), local_prediction: g1.powi(k as i32) })
        .collect())
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { expected, got });
    }
    Ok(())
}

// ---- JSON: every pattern-indexed representation uses pattern-string keys ----

fn serialize_patterns<S: Serializer>(m: usize, values: &[f64], skip_empty: bool, ser: S) -> std::result::Result<S::Ok, S::Error> {
    let mut map = ser.serialize_map(None)?;
    for (i, v) in values.iter().enumerate() {
        if skip_empty && i == 0 {
            continue;
        }
        let label = SupportPattern::new(i as u32, m).expect("index < 2^m").label();
        map.serialize_entry(&label, v)?;
    }
    map.end()
}

fn deserialize_patterns<'de, D: Deserializer<'de>>(de: D, default_empty: f64) -> std::result::Result<(usize, Vec<f64>), D::Error> {
    let raw = BTreeMap::<String, f64>::deserialize(de)?;
    let m = raw.keys().next().map(|k| k.len()).ok_or_else(|| D::Error::custom("empty pattern map"))?;
    let mut values = vec![f64::NAN; 1 << m];
    values[0] = default_empty;
    for (k, v) in raw {
        let s = SupportPattern::parse(&k).map_err(D::Error::custom)?;
        if s.len() != m {
            return Err(D::Error::custom(format!("pattern {k:?} has inconsistent length")));
        }
        values[s.index()] = v;
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(D::Error::custom("pattern map is missing entries"));
    }
    Ok((m, values))
}

impl Serialize for FixedWeightCoeffs {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_patterns(self.m, &self.values, false, ser)
    }
}

impl<'de> Deserialize<'de> for FixedWeightCoeffs {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let (m, values) = deserialize_patterns(de, f64::NAN)?;
        FixedWeightCoeffs::new(m, values).map_err(D::Error::custom)
    }
}

impl Serialize for SubspaceDecays {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_patterns(self.m, &self.values, false, ser)
    }
}

impl<'de> Deserialize<'de> for SubspaceDecays {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let (m, values) = deserialize_patterns(de, 1.0)?;
        SubspaceDecays::new(m, values).map_err(D::Error::custom)
    }
}

impl Serialize for WeightParams {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry {
            value: f64,
            cptp: bool,
        }
        let mut map = ser.serialize_map(None)?;
        for (i, (&value, &cptp)) in self.values.iter().zip(&self.cptp).enumerate().skip(1) {
            let label = SupportPattern::new(i as u32, self.m).expect("index < 2^m").label();
            map.serialize_entry(&label, &Entry { value, cptp })?;
        }
        map.end()
    }
}

fn serialize_pauli_indexed<S: Serializer>(n: usize, values: &[f64], ser: S) -> std::result::Result<S::Ok, S::Error> {
    let mut map = ser.serialize_map(Some(values.len()))?;
    for (i, v) in values.iter().enumerate() {
        map.serialize_entry(&PauliOperator::from_index(n, i).to_string(), v)?;
    }
    map.end()
}

fn deserialize_pauli_indexed<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<(usize, Vec<f64>), D::Error> {
    let raw = BTreeMap::<String, f64>::deserialize(de)?;
    let n = raw.keys().next().map(|k| k.len()).ok_or_else(|| D::Error::custom("empty Pauli map"))?;
    let mut values = vec![0.0; 1 << (2 * n)];
    for (k, v) in raw {
        let p: PauliOperator = k.parse().map_err(D::Error::custom)?;
        if p.num_qubits() != n {
            return Err(D::Error::custom(format!("Pauli {k:?} has inconsistent length")));
        }
        values[p.index()] = v;
    }
    Ok((n, values))
}

impl Serialize for PauliChannelProbs {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_pauli_indexed(self.n, &self.probs, ser)
    }
}

impl<'de> Deserialize<'de> for PauliChannelProbs {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let (n, values) = deserialize_pauli_indexed(de)?;
        PauliChannelProbs::new(n, values).map_err(D::Error::custom)
    }
}

impl Serialize for PtmDiagonal {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_pauli_indexed(self.n, &self.diag, ser)
    }
}

impl<'de> Deserialize<'de> for PtmDiagonal {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let (n, values) = deserialize_pauli_indexed(de)?;
        PtmDiagonal::new(n, values).map_err(D::Error::custom)
    }
}
