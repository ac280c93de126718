//! Derivative-free minimization (Nelder-Mead with adaptive coefficients).

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// initial simplex edge along each coordinate
    pub step: f64,
    /// stop when the spread of simplex values falls below this
    pub ftol: f64,
    /// and the simplex diameter falls below this
    pub xtol: f64,
    pub max_evals: usize,
    /// restart from the best vertex until a restart stops improving by `ftol`
    pub max_restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { step: 0.5, ftol: 1e-12, xtol: 1e-10, max_evals: 20_000, max_restarts: 20 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

fn simplex_from(x0: &[f64], step: f64) -> Vec<Vec<f64>> {
    let mut s = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] += step;
        s.push(v);
    }
    s
}

/// One Nelder-Mead run from an axis-aligned simplex around `x0`.
fn run<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], step: f64, opts: &NelderMeadOptions) -> Minimum {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = if n > 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    let mut pts = simplex_from(x0, step);
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut evals = n + 1;
    let mut converged = false;
    let mut order: Vec<usize> = (0..=n).collect();
    while evals < opts.max_evals {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (best, worst, second) = (order[0], order[n], order[n - 1]);
        let spread = vals[worst] - vals[best];
        let diam = pts
            .iter()
            .map(|p| p.iter().zip(&pts[best]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= opts.ftol && diam <= opts.xtol.max(opts.ftol) {
            converged = true;
            break;
        }
        if diam < 1e-15 {
            converged = true;
            break;
        }
        let mut centroid = vec![0.0; n];
        for &i in order.iter().take(n) {
            for (c, x) in centroid.iter_mut().zip(&pts[i]) {
                *c += x / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&pts[worst]).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = along(alpha);
        let fr = f(&xr);
        evals += 1;
        if fr < vals[best] {
            let xe = along(beta);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if fr < vals[second] {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[worst] {
            let xc = along(gamma * alpha);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(-gamma);
            let fc = f(&xc);
            (xc, fc)
        };
        evals += 1;
        if fc < vals[worst].min(fr) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        let xb = pts[best].clone();
        for &i in order.iter().skip(1) {
            for (x, b) in pts[i].iter_mut().zip(&xb) {
                *x = b + delta * (*x - b);
            }
            vals[i] = f(&pts[i]);
            evals += 1;
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("non-empty simplex");
    Minimum { x: pts[best].clone(), value: vals[best], evals, converged }
}

/// Minimize `f` from `x0`, restarting from the best point with a shrinking
/// simplex until a restart no longer improves the value.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    if x0.is_empty() {
        return Minimum { x: vec![], value: f(x0), evals: 1, converged: true };
    }
    let mut best = run(&f, x0, opts.step, opts);
    let mut step = opts.step;
    let mut total = best.evals;
    for _ in 0..opts.max_restarts {
        step = (step * 0.5).max(1e-6);
        let next = run(&f, &best.x, step, opts);
        total += next.evals;
        let gain = best.value - next.value;
        if next.value < best.value {
            best = Minimum { converged: next.converged, ..next };
        }
        if gain <= opts.ftol {
            break;
        }
    }
    best.evals = total;
    best
}
