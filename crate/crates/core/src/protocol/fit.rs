//! Weighted least-squares fit of `y = A alpha^l + B`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitFlag {
    /// data carry no decay information; alpha reported as 1
    Unidentifiable,
    /// alpha pinned at +-1 while the model does not describe the data
    AlphaAtBound,
    /// iteration limit reached
    NotConverged,
    /// covariance singular; errors reported as infinite
    SingularCovariance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub a: f64,
    pub alpha: f64,
    pub b: f64,
    pub stderr_a: f64,
    pub stderr_alpha: f64,
    pub stderr_b: f64,
    pub chi2_red: f64,
    pub flags: Vec<FitFlag>,
}

/// One averaged point of a decay curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub l: f64,
    pub y: f64,
    pub stderr: f64,
}

const MAX_ITER: usize = 200;

/// Standard errors at or below this are treated as zero.
pub const STDERR_FLOOR: f64 = 1e-9;

fn model(p: &Vector3<f64>, l: f64) -> f64 {
    p[0] * p[1].powf(l) + p[2]
}

fn chi2(p: &Vector3<f64>, pts: &[FitPoint], sig: &[f64]) -> f64 {
    pts.iter().zip(sig).map(|(q, s)| ((q.y - model(p, q.l)) / s).powi(2)).sum()
}

fn jacobian_row(p: &Vector3<f64>, l: f64) -> Vector3<f64> {
    let pow = p[1].powf(l);
    let dalpha = if l == 0.0 { 0.0 } else { p[0] * l * p[1].powf(l - 1.0) };
    Vector3::new(pow, dalpha, 1.0)
}

/// Best `(A, B)` for fixed `alpha` by weighted linear least squares.
fn linear_ab(alpha: f64, pts: &[FitPoint], sig: &[f64]) -> Vector3<f64> {
    let (mut s11, mut s12, mut s22, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (q, s) in pts.iter().zip(sig) {
        let w = 1.0 / (s * s);
        let u = alpha.powf(q.l);
        s11 += w * u * u;
        s12 += w * u;
        s22 += w;
        t1 += w * u * q.y;
        t2 += w * q.y;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() < 1e-300 {
        return Vector3::new(0.0, alpha, t2 / s22);
    }
    Vector3::new((t1 * s22 - t2 * s12) / det, alpha, (s11 * t2 - s12 * t1) / det)
}

fn levenberg_marquardt(mut p: Vector3<f64>, pts: &[FitPoint], sig: &[f64]) -> (Vector3<f64>, bool) {
    let mut cost = chi2(&p, pts, sig);
    let mut lambda = 1e-3;
    for _ in 0..MAX_ITER {
        let mut jtj = Matrix3::zeros();
        let mut grad = Vector3::zeros();
        for (q, s) in pts.iter().zip(sig) {
            let j = jacobian_row(&p, q.l) / *s;
            let r = (q.y - model(&p, q.l)) / s;
            jtj += j * j.transpose();
            grad += j * r;
        }
        if grad.norm() < 1e-14 * (1.0 + cost) {
            return (p, true);
        }
        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = jtj;
            for d in 0..3 {
                damped[(d, d)] += lambda * jtj[(d, d)].max(1e-30);
            }
            let Some(step) = damped.lu().solve(&grad) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = p + step;
            trial[1] = trial[1].clamp(-1.0, 1.0);
            let c = chi2(&trial, pts, sig);
            if c.is_finite() && c <= cost {
                let rel = (trial - p).norm() / (1.0 + p.norm());
                let gain = cost - c;
                p = trial;
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                if rel < 1e-14 || gain <= 1e-15 * (1.0 + cost) && rel < 1e-10 {
                    return (p, true);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            return (p, true);
        }
    }
    (p, false)
}

/// Fit `y = A alpha^l + B` with weights `1/stderr^2`; `alpha` is kept in `[-1, 1]`.
///
/// Standard errors below [`STDERR_FLOOR`] (rounding noise on exactly
/// reproducible points) are replaced by the smallest one above it; if none is
/// above, the fit is unweighted and errors come from the residual scatter.
pub fn fit_decay(points: &[FitPoint]) -> Result<DecayFit> {
    let mut ls: Vec<f64> = points.iter().map(|p| p.l).collect();
    ls.sort_by(f64::total_cmp);
    ls.dedup();
    if ls.len() < 3 {
        return Err(Error::Config("decay fit needs at least 3 distinct lengths".into()));
    }
    if points.iter().any(|p| !p.y.is_finite() || !p.l.is_finite()) {
        return Err(Error::State("non-finite decay data".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.l.total_cmp(&b.l));
    let min_pos = pts.iter().map(|p| p.stderr).filter(|&s| s > STDERR_FLOOR).fold(f64::INFINITY, f64::min);
    let weighted = min_pos.is_finite();
    let sig: Vec<f64> = pts.iter().map(|p| if weighted { p.stderr.max(min_pos) } else { 1.0 }).collect();

    let (ymin, ymax) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)));
    let mean = pts.iter().map(|p| p.y).sum::<f64>() / pts.len() as f64;
    if ymax - ymin <= 1e-12 * (1.0 + mean.abs()) {
        return Ok(DecayFit {
            a: 0.0,
            alpha: 1.0,
            b: mean,
            stderr_a: 0.0,
            stderr_alpha: 0.0,
            stderr_b: 0.0,
            chi2_red: 0.0,
            flags: vec![FitFlag::Unidentifiable],
        });
    }

    // start: A = y_first - y_last, B = y_last, alpha from log-linear regression of y - B
    let (first, last) = (pts[0], pts[pts.len() - 1]);
    let b0 = last.y;
    let a0 = first.y - last.y;
    let logs: Vec<(f64, f64)> = pts
        .iter()
        .filter(|p| p.l < last.l && (p.y - b0) * a0.signum() > 0.0)
        .map(|p| (p.l, ((p.y - b0) / a0).abs().ln()))
        .collect();
    let alpha0 = if logs.len() >= 2 {
        let n = logs.len() as f64;
        let (sx, sy) = logs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let sxx: f64 = logs.iter().map(|(x, _)| x * x).sum();
        let sxy: f64 = logs.iter().map(|(x, y)| x * y).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        slope.exp().clamp(-1.0, 1.0)
    } else {
        0.99
    };
    let mut candidates = vec![levenberg_marquardt(Vector3::new(a0, alpha0, b0), &pts, &sig)];

    // profile over alpha as a guard against poor starts
    let best_grid = (0..=400)
        .map(|k| {
            let alpha = if k == 400 { 1.0 } else { 1.0 - (2.0f64.ln() + (1e-7f64.ln() - 2.0f64.ln()) * k as f64 / 399.0).exp() };
            linear_ab(alpha.clamp(-1.0, 1.0), &pts, &sig)
        })
        .min_by(|a, b| chi2(a, &pts, &sig).total_cmp(&chi2(b, &pts, &sig)))
        .expect("non-empty grid");
    candidates.push(levenberg_marquardt(best_grid, &pts, &sig));

    let (p, converged) = candidates
        .into_iter()
        .min_by(|a, b| chi2(&a.0, &pts, &sig).total_cmp(&chi2(&b.0, &pts, &sig)))
        .expect("two candidates");
    let dof = (pts.len() as f64 - 3.0).max(1.0);
    let chi = chi2(&p, &pts, &sig);
    let chi2_red = chi / dof;

    let mut flags = Vec::new();
    if !converged {
        flags.push(FitFlag::NotConverged);
    }
    let mut jtj = Matrix3::zeros();
    for (q, s) in pts.iter().zip(&sig) {
        let j = jacobian_row(&p, q.l) / *s;
        jtj += j * j.transpose();
    }
    let scale = if weighted { chi2_red.max(1.0) } else { chi2_red };
    let (stderr_a, stderr_alpha, stderr_b) = match jtj.try_inverse() {
        Some(cov) if cov.iter().all(|v| v.is_finite()) => {
            let se = |i: usize| (cov[(i, i)].max(0.0) * scale).sqrt();
            (se(0), se(1), se(2))
        }
        _ => {
            flags.push(FitFlag::SingularCovariance);
            (f64::INFINITY, f64::INFINITY, f64::INFINITY)
        }
    };
    if p[1].abs() >= 1.0 && chi2_red > 4.0 {
        flags.push(FitFlag::AlphaAtBound);
    }
    if flags.iter().any(|f| *f != FitFlag::Unidentifiable) {
        log::warn!("decay fit quality flags {flags:?} (alpha = {:.6})", p[1]);
    }
    Ok(DecayFit { a: p[0], alpha: p[1], b: p[2], stderr_a, stderr_alpha, stderr_b, chi2_red, flags })
}
