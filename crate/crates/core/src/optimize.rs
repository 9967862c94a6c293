//! Bounded Nelder–Mead direct search with deterministic multi-start.

use std::cmp::Ordering;

use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evaluations: usize,
    /// Stop when the spread of simplex values falls below this.
    pub f_tolerance: f64,
    /// Stop when the simplex diameter (relative to the box) falls below this.
    pub x_tolerance: f64,
    /// Initial simplex edge as a fraction of each box side.
    pub initial_step: f64,
    /// Fresh-simplex restarts from the incumbent after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evaluations: 4000,
            f_tolerance: 1e-12,
            x_tolerance: 1e-10,
            initial_step: 0.05,
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Axis-aligned box `[lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        assert!(lower.iter().zip(&upper).all(|(l, u)| l <= u));
        Self { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    fn width(&self, i: usize) -> f64 {
        (self.upper[i] - self.lower[i]).max(f64::MIN_POSITIVE)
    }
}

/// NaN objective values are treated as +∞.
fn eval<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn combine(a: &[f64], b: &[f64], t: f64, bounds: &Bounds) -> Vec<f64> {
    let mut x: Vec<f64> = a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect();
    bounds.clamp(&mut x);
    x
}

fn run<F: Fn(&[f64]) -> f64>(
    f: &F,
    start: &[f64],
    bounds: &Bounds,
    opts: &NelderMeadOptions,
    budget: usize,
) -> Minimum {
    let n = bounds.dim();
    let mut x0 = start.to_vec();
    bounds.clamp(&mut x0);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut evaluations = 0;
    let f0 = eval(f, &x0);
    evaluations += 1;
    simplex.push((x0.clone(), f0));
    for i in 0..n {
        let mut x = x0.clone();
        let step = opts.initial_step * bounds.width(i);
        // Step away from the nearer wall so the vertex stays distinct.
        x[i] = if x[i] + step <= bounds.upper[i] { x[i] + step } else { x[i] - step };
        bounds.clamp(&mut x);
        let v = eval(f, &x);
        evaluations += 1;
        simplex.push((x, v));
    }

    while evaluations < budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lex(&a.0, &b.0)));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = if best.is_finite() && worst.is_finite() {
            (worst - best).abs()
        } else {
            f64::INFINITY
        };
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                (0..n)
                    .map(|i| ((x[i] - simplex[0].0[i]) / bounds.width(i)).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= opts.f_tolerance * (1.0 + best.abs()) && diameter <= opts.x_tolerance.sqrt()
            || diameter <= opts.x_tolerance
        {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|(x, _)| x[i]).sum::<f64>() / n as f64)
            .collect();
        let xw = simplex[n].0.clone();
        let xr = combine(&centroid, &xw, -1.0, bounds);
        let fr = eval(f, &xr);
        evaluations += 1;
        if fr < simplex[0].1 {
            let xe = combine(&centroid, &xw, -2.0, bounds);
            let fe = eval(f, &xe);
            evaluations += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst {
                let xc = combine(&centroid, &xr, 0.5, bounds);
                let fc = eval(f, &xc);
                (xc, fc)
            } else {
                let xc = combine(&centroid, &xw, 0.5, bounds);
                let fc = eval(f, &xc);
                (xc, fc)
            };
            evaluations += 1;
            if fc < fr.min(worst) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let xs = combine(&x_best, &vertex.0, 0.5, bounds);
                    let fs = eval(f, &xs);
                    evaluations += 1;
                    *vertex = (xs, fs);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lex(&a.0, &b.0)));
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        evaluations,
    }
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Minimizes `f` over the box from `start`, restarting from the incumbent
/// with a fresh simplex while that still improves.
pub fn minimize<F: Fn(&[f64]) -> f64>(
    f: &F,
    start: &[f64],
    bounds: &Bounds,
    opts: &NelderMeadOptions,
) -> Minimum {
    let mut best = run(f, start, bounds, opts, opts.max_evaluations);
    let mut used = best.evaluations;
    for _ in 0..opts.restarts {
        if used >= opts.max_evaluations {
            break;
        }
        let next = run(f, &best.x, bounds, opts, opts.max_evaluations - used);
        used += next.evaluations;
        if next.value >= best.value {
            break;
        }
        let gain = best.value - next.value;
        best = next;
        if gain <= opts.f_tolerance * (1.0 + best.value.abs()) {
            break;
        }
    }
    best.evaluations = used;
    best
}

/// Runs [`minimize`] from every start in parallel and returns the lowest
/// value, ties broken by lexicographic order of the minimizer.
pub fn minimize_multistart<F: Fn(&[f64]) -> f64 + Sync>(
    f: &F,
    starts: &[Vec<f64>],
    bounds: &Bounds,
    opts: &NelderMeadOptions,
) -> Option<Minimum> {
    starts
        .par_iter()
        .map(|s| minimize(f, s, bounds, opts))
        .collect::<Vec<_>>()
        .into_iter()
        .min_by(|a, b| a.value.total_cmp(&b.value).then_with(|| lex(&a.x, &b.x)))
}
