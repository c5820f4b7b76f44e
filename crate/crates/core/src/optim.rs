//! BFGS quasi-Newton minimization with a strong-Wolfe line search.
//!
//! The objective returns `(value, gradient)`. A non-finite value marks an infeasible point
//! (for covariance structures: an implied matrix that is not positive definite); the line
//! search then shortens the step.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    /// Converged when the gradient's max-norm falls below this.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            grad_tol: 1e-6,
            max_iter: 500,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub message: String,
}

impl Minimum {
    pub fn grad_norm(&self) -> f64 {
        self.gradient.amax()
    }
}

struct Probe {
    alpha: f64,
    value: f64,
    slope: f64,
    grad: DVector<f64>,
}

fn probe<F>(f: &mut F, x: &DVector<f64>, dir: &DVector<f64>, alpha: f64) -> Probe
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let (value, grad) = f(&(x + dir * alpha));
    let slope = if value.is_finite() { grad.dot(dir) } else { f64::NAN };
    Probe {
        alpha,
        value,
        slope,
        grad,
    }
}

/// Minimizer of the cubic through two probes, safeguarded to the interior of the bracket.
fn interpolate(lo: &Probe, hi: &Probe) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let fallback = 0.5 * (a + b);
    if !hi.value.is_finite() || !hi.slope.is_finite() {
        return fallback;
    }
    let d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (a - b);
    let disc = d1 * d1 - lo.slope * hi.slope;
    if disc < 0.0 {
        return fallback;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
    let (min, max) = if a < b { (a, b) } else { (b, a) };
    let margin = 0.1 * (max - min);
    if t.is_finite() && t > min + margin && t < max - margin {
        t
    } else {
        fallback
    }
}

/// Strong-Wolfe line search (bracketing and zoom).
fn line_search<F>(f: &mut F, x: &DVector<f64>, value: f64, slope0: f64, dir: &DVector<f64>, opts: &BfgsOptions) -> Option<Probe>
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let start = Probe {
        alpha: 0.0,
        value,
        slope: slope0,
        grad: DVector::zeros(0),
    };
    let mut prev = start;
    let mut alpha = 1.0;
    let mut evals = 0;
    loop {
        evals += 1;
        let cur = probe(f, x, dir, alpha);
        let armijo_fail = !cur.value.is_finite() || cur.value > value + opts.c1 * alpha * slope0;
        if armijo_fail || (evals > 1 && cur.value >= prev.value) {
            return zoom(f, x, value, slope0, dir, opts, prev, cur, evals);
        }
        if cur.slope.abs() <= -opts.c2 * slope0 {
            return Some(cur);
        }
        if cur.slope >= 0.0 {
            return zoom(f, x, value, slope0, dir, opts, cur, prev, evals);
        }
        if evals >= opts.max_line_search {
            return Some(cur);
        }
        prev = cur;
        alpha *= 2.0;
    }
}

#[allow(clippy::too_many_arguments)]
fn zoom<F>(
    f: &mut F,
    x: &DVector<f64>,
    value: f64,
    slope0: f64,
    dir: &DVector<f64>,
    opts: &BfgsOptions,
    mut lo: Probe,
    mut hi: Probe,
    mut evals: usize,
) -> Option<Probe>
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    while evals < opts.max_line_search {
        evals += 1;
        let alpha = interpolate(&lo, &hi);
        if (hi.alpha - lo.alpha).abs() < 1e-16 * lo.alpha.abs().max(1.0) {
            break;
        }
        let cur = probe(f, x, dir, alpha);
        if !cur.value.is_finite() || cur.value > value + opts.c1 * alpha * slope0 || cur.value >= lo.value {
            hi = cur;
            continue;
        }
        if cur.slope.abs() <= -opts.c2 * slope0 {
            return Some(cur);
        }
        if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
            hi = lo;
        }
        lo = cur;
    }
    // Accept the best sufficient-decrease point found, if any.
    (lo.alpha > 0.0).then_some(lo)
}

/// Minimizes `f` from `x0`.
pub fn minimize<F>(mut f: F, x0: DVector<f64>, opts: &BfgsOptions) -> Minimum
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let n = x0.len();
    let mut x = x0;
    let (mut value, mut grad) = f(&x);
    if !value.is_finite() {
        return Minimum {
            x,
            value,
            gradient: grad,
            iterations: 0,
            converged: false,
            message: "objective not finite at the starting point".into(),
        };
    }
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    for iter in 0..opts.max_iter {
        if grad.amax() < opts.grad_tol {
            return Minimum {
                x,
                value,
                gradient: grad,
                iterations: iter,
                converged: true,
                message: "gradient tolerance reached".into(),
            };
        }
        let mut dir = -(&h * &grad);
        let mut slope = grad.dot(&dir);
        if slope >= 0.0 {
            h = DMatrix::identity(n, n);
            dir = -grad.clone();
            slope = grad.dot(&dir);
            fresh = true;
        }
        if fresh {
            // Keep the first trial step modest when H is not yet informed by curvature.
            let scale = (1.0 / grad.norm()).min(1.0);
            dir *= scale;
            slope *= scale;
        }
        let Some(step) = line_search(&mut f, &x, value, slope, &dir, opts) else {
            if !fresh {
                h = DMatrix::identity(n, n);
                fresh = true;
                continue;
            }
            return Minimum {
                x,
                value,
                gradient: grad,
                iterations: iter,
                converged: false,
                message: "line search failed to find a decrease".into(),
            };
        };
        let s = &dir * step.alpha;
        let y = &step.grad - &grad;
        x += &s;
        value = step.value;
        grad = step.grad;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh {
                h = DMatrix::identity(n, n) * (sy / y.dot(&y));
                fresh = false;
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H+ = (I - rho s y') H (I - rho y s') + rho s s'
            h += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
    }
    let converged = grad.amax() < opts.grad_tol;
    Minimum {
        x,
        value,
        gradient: grad,
        iterations: opts.max_iter,
        converged,
        message: if converged {
            "gradient tolerance reached".into()
        } else {
            "iteration limit reached".into()
        },
    }
}
