//! Deterministic full-batch minimizer: L-BFGS two-loop recursion with a
//! backtracking Armijo line search. Every accepted step strictly decreases
//! the objective, so the recorded trace is monotone by construction. When
//! the quasi-Newton direction is not a descent direction (possible for the
//! non-smooth hinge, where we work with subgradients), the step falls back
//! to steepest descent.

const MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MIN_STEP: f64 = 1e-20;

pub struct Minimized {
    pub point: Vec<f64>,
    pub value: f64,
    pub grad_inf_norm: f64,
    pub iterations: usize,
    /// Objective value at the initial point and after each accepted step.
    pub trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `f` starting from `x0`, stopping when the gradient infinity
/// norm drops to `tol` or after `max_iter` accepted iterations.
pub fn minimize<F>(mut f: F, x0: &[f64], tol: f64, max_iter: usize) -> Minimized
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut grad) = f(&x);
    let mut trace = vec![fx];
    // (s, y, rho) pairs, newest last
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut iterations = 0;

    for _ in 0..max_iter {
        if inf_norm(&grad) <= tol {
            break;
        }

        let mut direction = lbfgs_direction(&grad, &history);
        let mut dir_deriv = dot(&grad, &direction);
        if !(dir_deriv < 0.0) || !dir_deriv.is_finite() {
            // not a descent direction: restart from steepest descent
            history.clear();
            direction = grad.iter().map(|g| -g).collect();
            dir_deriv = dot(&grad, &direction);
            if dir_deriv == 0.0 {
                break;
            }
        }

        // backtracking Armijo line search
        let mut step = 1.0;
        let mut accepted = None;
        while step >= MIN_STEP {
            let cand: Vec<f64> = x
                .iter()
                .zip(&direction)
                .map(|(xi, di)| xi + step * di)
                .collect();
            let (fc, gc) = f(&cand);
            if fc.is_finite() && fc <= fx + ARMIJO_C1 * step * dir_deriv {
                accepted = Some((cand, fc, gc));
                break;
            }
            step *= BACKTRACK;
        }
        let Some((new_x, new_f, new_grad)) = accepted else {
            // no decrease achievable along this direction; stop
            break;
        };

        let s: Vec<f64> = new_x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * inf_norm(&s) * inf_norm(&y).max(1e-300) && sy.is_finite() {
            if history.len() == MEMORY {
                history.remove(0);
            }
            history.push((s, y, 1.0 / sy));
        }

        x = new_x;
        fx = new_f;
        grad = new_grad;
        trace.push(fx);
        iterations += 1;
        debug_assert!(n == x.len());
    }

    Minimized {
        grad_inf_norm: inf_norm(&grad),
        point: x,
        value: fx,
        iterations,
        trace,
    }
}

fn lbfgs_direction(grad: &[f64], history: &[(Vec<f64>, Vec<f64>, f64)]) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let alpha = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= alpha * yi;
        }
        alphas.push(alpha);
    }
    // initial Hessian scaling from the most recent pair
    if let Some((s, y, _)) = history.last() {
        let yy = dot(y, y);
        if yy > 0.0 {
            let gamma = dot(s, y) / yy;
            for qi in q.iter_mut() {
                *qi *= gamma;
            }
        }
    }
    for ((s, y, rho), alpha) in history.iter().zip(alphas.iter().rev()) {
        let beta = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha - beta) * si;
        }
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}
