//! Limited-memory BFGS with a strong-Wolfe line search (bracketing + zoom with
//! safeguarded cubic interpolation).

use std::collections::VecDeque;

use super::{dot, norm};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub memory_pairs: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            memory_pairs: 10,
            max_iterations: 500,
            gradient_tolerance: 1e-6,
            c1: 1e-4,
            c2: 0.9,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "line search needs 0 < c1 < c2 < 1 (got c1={}, c2={})",
                self.c1, self.c2
            )));
        }
        if self.memory_pairs == 0 {
            return Err(Error::InvalidArgument("memory_pairs must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value at every accepted iterate, starting with `x0`.
    pub history: Vec<f64>,
}

const MAX_LINE_SEARCH_STEPS: usize = 40;
const MAX_NONFINITE_SHRINKS: usize = 30;

struct Trial {
    alpha: f64,
    value: f64,
    slope: f64,
    x: Vec<f64>,
    grad: Vec<f64>,
}

struct Problem<'a, F> {
    objective: F,
    origin: &'a [f64],
    direction: &'a [f64],
    nonfinite: usize,
}

impl<F> Problem<'_, F>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    // None when the objective is not finite at this step.
    fn eval(&mut self, alpha: f64) -> Result<Option<Trial>> {
        let x: Vec<f64> = self
            .origin
            .iter()
            .zip(self.direction)
            .map(|(o, d)| o + alpha * d)
            .collect();
        let mut grad = vec![0.0; x.len()];
        let value = (self.objective)(&x, &mut grad);
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            self.nonfinite += 1;
            if self.nonfinite > MAX_NONFINITE_SHRINKS {
                return Err(Error::NonFinite(format!(
                    "objective stayed non-finite after {MAX_NONFINITE_SHRINKS} step reductions"
                )));
            }
            return Ok(None);
        }
        let slope = dot(&grad, self.direction);
        Ok(Some(Trial {
            alpha,
            value,
            slope,
            x,
            grad,
        }))
    }
}

fn cubic_minimizer(lo: &Trial, hi: &Trial) -> Option<f64> {
    let d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (lo.alpha - hi.alpha);
    let disc = d1 * d1 - lo.slope * hi.slope;
    if disc < 0.0 {
        return None;
    }
    let d2 = (hi.alpha - lo.alpha).signum() * disc.sqrt();
    let denom = hi.slope - lo.slope + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let a = hi.alpha - (hi.alpha - lo.alpha) * (hi.slope + d2 - d1) / denom;
    a.is_finite().then_some(a)
}

fn line_search<F>(
    problem: &mut Problem<'_, F>,
    f0: f64,
    slope0: f64,
    initial_step: f64,
    cfg: &OptimizerConfig,
) -> Result<Option<Trial>>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let armijo = |t: &Trial| t.value <= f0 + cfg.c1 * t.alpha * slope0;
    let curvature = |t: &Trial| t.slope.abs() <= -cfg.c2 * slope0;

    let mut prev = Trial {
        alpha: 0.0,
        value: f0,
        slope: slope0,
        x: problem.origin.to_vec(),
        grad: Vec::new(),
    };
    let mut alpha = initial_step;
    let mut alpha_max = f64::INFINITY;

    for i in 0..MAX_LINE_SEARCH_STEPS {
        let Some(t) = problem.eval(alpha)? else {
            alpha_max = alpha;
            alpha = 0.5 * (prev.alpha + alpha);
            continue;
        };
        if !armijo(&t) || (i > 0 && t.value >= prev.value) {
            return zoom(problem, prev, t, f0, slope0, cfg);
        }
        if curvature(&t) {
            return Ok(Some(t));
        }
        if t.slope >= 0.0 {
            return zoom(problem, t, prev, f0, slope0, cfg);
        }
        let next = if alpha_max.is_finite() {
            0.5 * (t.alpha + alpha_max)
        } else {
            2.0 * t.alpha
        };
        prev = t;
        alpha = next;
    }
    // expansion ran out; the last Armijo point is still a decrease
    Ok((prev.alpha > 0.0).then_some(prev))
}

fn zoom<F>(
    problem: &mut Problem<'_, F>,
    mut lo: Trial,
    mut hi: Trial,
    f0: f64,
    slope0: f64,
    cfg: &OptimizerConfig,
) -> Result<Option<Trial>>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let armijo = |t: &Trial| t.value <= f0 + cfg.c1 * t.alpha * slope0;
    let curvature = |t: &Trial| t.slope.abs() <= -cfg.c2 * slope0;
    for _ in 0..MAX_LINE_SEARCH_STEPS {
        let (a, b) = if lo.alpha < hi.alpha {
            (lo.alpha, hi.alpha)
        } else {
            (hi.alpha, lo.alpha)
        };
        let width = b - a;
        if width <= f64::EPSILON * b.max(1.0) {
            break;
        }
        let guard = 0.1 * width;
        let mut trial_alpha = cubic_minimizer(&lo, &hi).unwrap_or(0.5 * (a + b));
        if trial_alpha < a + guard || trial_alpha > b - guard {
            trial_alpha = 0.5 * (a + b);
        }
        let Some(t) = problem.eval(trial_alpha)? else {
            hi = Trial {
                alpha: trial_alpha,
                value: f64::INFINITY,
                slope: f64::INFINITY,
                x: Vec::new(),
                grad: Vec::new(),
            };
            continue;
        };
        if !armijo(&t) || t.value >= lo.value {
            hi = t;
        } else {
            if curvature(&t) {
                return Ok(Some(t));
            }
            if t.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = t;
        }
    }
    // Zoom did not meet the curvature condition; accept the best sufficient
    // decrease point if there is one.
    Ok((lo.alpha > 0.0).then_some(lo))
}

/// Minimizes `objective`, which writes the gradient into its second argument
/// and returns the value.
pub fn lbfgs_minimize<F>(mut objective: F, x0: &[f64], config: &OptimizerConfig) -> Result<LbfgsOutcome>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    config.validate()?;
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut grad = vec![0.0; n];
    let mut value = objective(&x, &mut grad);
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("objective or gradient at the starting point".into()));
    }
    let mut history = vec![value];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(config.memory_pairs);
    let mut iterations = 0;

    loop {
        let gnorm = norm(&grad);
        if gnorm <= config.gradient_tolerance {
            return Ok(LbfgsOutcome {
                x,
                value,
                gradient_norm: gnorm,
                iterations,
                converged: true,
                history,
            });
        }
        if iterations >= config.max_iterations {
            break;
        }

        let mut direction = two_loop(&grad, &memory);
        let mut slope0 = dot(&grad, &direction);
        if !(slope0 < 0.0) {
            memory.clear();
            direction = grad.iter().map(|g| -g).collect();
            slope0 = -gnorm * gnorm;
        }
        let step0 = if memory.is_empty() { (1.0 / gnorm).min(1.0) } else { 1.0 };

        let mut problem = Problem {
            objective: &mut objective,
            origin: &x,
            direction: &direction,
            nonfinite: 0,
        };
        let accepted = line_search(&mut problem, value, slope0, step0, config)?;
        let Some(trial) = accepted else {
            if memory.is_empty() {
                break;
            }
            memory.clear();
            continue;
        };

        let s: Vec<f64> = trial.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = trial.grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if memory.len() == config.memory_pairs {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        x = trial.x;
        grad = trial.grad;
        value = trial.value;
        history.push(value);
        iterations += 1;
    }

    let gnorm = norm(&grad);
    Ok(LbfgsOutcome {
        x,
        value,
        gradient_norm: gnorm,
        iterations,
        converged: gnorm <= config.gradient_tolerance,
        history,
    })
}

fn two_loop(grad: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    for qi in &mut q {
        *qi = -*qi;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{seeded_stream, solve_spd, DenseMatrix};
    use rand::Rng;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    #[test]
    fn rosenbrock_reaches_minimizer() {
        let out = lbfgs_minimize(rosenbrock, &[-1.2, 1.0], &OptimizerConfig::default()).unwrap();
        assert!(out.converged);
        assert!(
            (out.x[0] - 1.0).abs() <= 1e-5 && (out.x[1] - 1.0).abs() <= 1e-5,
            "{:?}",
            out.x
        );
        for w in out.history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn quadratic_matches_closed_form() {
        let mut rng = seeded_stream(11, "quad");
        let n = 6;
        let m: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = DenseMatrix::from_row_major(n, n, m).unwrap();
        let mut a = m.transpose().matmul(&m).unwrap();
        for i in 0..n {
            a.set(i, i, a.get(i, i) + 0.5);
        }
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let expected = solve_spd(&a, &b).unwrap();
        let f = |x: &[f64], g: &mut [f64]| {
            let ax = a.mul_vec(x).unwrap();
            for i in 0..n {
                g[i] = ax[i] - b[i];
            }
            0.5 * dot(x, &ax) - dot(&b, x)
        };
        let cfg = OptimizerConfig {
            gradient_tolerance: 1e-9,
            ..Default::default()
        };
        let out = lbfgs_minimize(f, &vec![0.0; n], &cfg).unwrap();
        for (u, v) in out.x.iter().zip(&expected) {
            assert!((u - v).abs() <= 1e-6);
        }
    }

    #[test]
    fn stationary_start_returns_immediately() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * x[0];
            x[0] * x[0]
        };
        let out = lbfgs_minimize(f, &[0.0], &OptimizerConfig::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn nonfinite_region_is_shrunk_away_from() {
        // log barrier: infinite for x <= 0, minimum at x = 1
        let f = |x: &[f64], g: &mut [f64]| {
            if x[0] <= 0.0 {
                g[0] = f64::NAN;
                return f64::INFINITY;
            }
            g[0] = 1.0 - 1.0 / x[0];
            x[0] - x[0].ln()
        };
        let out = lbfgs_minimize(f, &[8.0], &OptimizerConfig::default()).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn nonfinite_start_is_an_error() {
        let f = |_: &[f64], g: &mut [f64]| {
            g[0] = 0.0;
            f64::NAN
        };
        assert!(matches!(
            lbfgs_minimize(f, &[1.0], &OptimizerConfig::default()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn max_iterations_flags_not_converged() {
        let cfg = OptimizerConfig {
            max_iterations: 3,
            ..Default::default()
        };
        let out = lbfgs_minimize(rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
    }

    #[test]
    fn bad_wolfe_constants_rejected() {
        let cfg = OptimizerConfig {
            c1: 0.9,
            c2: 0.1,
            ..Default::default()
        };
        assert!(lbfgs_minimize(rosenbrock, &[0.0, 0.0], &cfg).is_err());
    }
}
