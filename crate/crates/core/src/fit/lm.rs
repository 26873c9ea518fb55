//! Bounded Levenberg–Marquardt minimizer with forward-difference Jacobians.
//!
//! Minimizes ½‖r(x)‖² over a box. The caller supplies the residual function in
//! whatever (possibly transformed) coordinates it wants optimized; bounds are
//! enforced by projecting each trial step onto the box.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative forward-difference step per parameter.
pub const JACOBIAN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when an accepted step lowers the cost by less than `ftol` relative.
    pub ftol: f64,
    /// Stop when the step is smaller than `xtol·(‖x‖ + xtol)`.
    pub xtol: f64,
    /// Initial Marquardt damping λ.
    pub damping_init: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            ftol: 1e-12,
            xtol: 1e-12,
            damping_init: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Ftol,
    Xtol,
    /// Damping grew without finding a lower cost: the current point is a local minimum
    /// to working precision.
    Stalled,
    ZeroResidual,
    MaxIterations,
}

impl Termination {
    pub fn converged(self) -> bool {
        !matches!(self, Termination::MaxIterations)
    }
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub x: DVector<f64>,
    pub residuals: DVector<f64>,
    /// Jacobian at `x`.
    pub jacobian: DMatrix<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Cost after each accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
}

fn cost_of(r: &DVector<f64>) -> f64 {
    0.5 * r.norm_squared()
}

fn project(x: &mut DVector<f64>, lower: &[f64], upper: &[f64]) {
    for (i, v) in x.iter_mut().enumerate() {
        *v = v.clamp(lower[i], upper[i]);
    }
}

/// Forward-difference Jacobian with step `JACOBIAN_STEP·max(|x_j|, 1)`, flipped to a
/// backward step when the forward point would leave the box.
pub fn numerical_jacobian<F>(
    f: &mut F,
    x: &DVector<f64>,
    r0: &DVector<f64>,
    lower: &[f64],
    upper: &[f64],
) -> Result<DMatrix<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(r0.len(), n);
    let mut xp = x.clone();
    for j in 0..n {
        let mut h = JACOBIAN_STEP * x[j].abs().max(1.0);
        if x[j] + h > upper[j] && x[j] - h >= lower[j] {
            h = -h;
        }
        xp[j] = x[j] + h;
        let rp = f(&xp)?;
        xp[j] = x[j];
        let step = (x[j] + h) - x[j];
        jac.set_column(j, &((rp - r0) / step));
    }
    Ok(jac)
}

/// Runs the minimizer from `x0` (projected into the box first).
pub fn minimize<F>(
    mut f: F,
    x0: DVector<f64>,
    lower: &[f64],
    upper: &[f64],
    options: &LmOptions,
) -> Result<LmReport>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = x0.len();
    if lower.len() != n || upper.len() != n {
        return Err(Error::invalid("bounds", "length does not match parameter vector"));
    }
    if lower.iter().zip(upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
        return Err(Error::invalid("bounds", "every parameter needs finite bounds with lower ≤ upper"));
    }

    let mut x = x0;
    project(&mut x, lower, upper);
    let mut r = f(&x)?;
    let mut cost = cost_of(&r);
    if !cost.is_finite() {
        return Err(Error::invalid("init", "initial residuals are not finite"));
    }
    let mut history = vec![cost];
    let mut lambda = options.damping_init.max(f64::MIN_POSITIVE);
    let mut jac = numerical_jacobian(&mut f, &x, &r, lower, upper)?;
    let mut iterations = 0;

    let termination = loop {
        if cost == 0.0 {
            break Termination::ZeroResidual;
        }
        if iterations >= options.max_iter {
            break Termination::MaxIterations;
        }
        iterations += 1;

        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let diag: Vec<f64> = (0..n).map(|i| jtj[(i, i)].max(1e-30)).collect();

        let mut accepted = None;
        let mut any_solved = false;
        while lambda < 1e20 {
            let mut a = jtj.clone();
            for (i, d) in diag.iter().enumerate() {
                a[(i, i)] += lambda * d;
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            any_solved = true;
            let step = -chol.solve(&grad);
            let mut trial = &x + &step;
            project(&mut trial, lower, upper);
            let r_trial = match f(&trial) {
                Ok(v) => v,
                Err(_) => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let c_trial = cost_of(&r_trial);
            if c_trial.is_finite() && c_trial < cost {
                accepted = Some((trial, r_trial, c_trial));
                break;
            }
            lambda *= 10.0;
        }

        let Some((trial, r_trial, c_trial)) = accepted else {
            if !any_solved {
                return Err(Error::IllConditioned(
                    "normal equations singular for every damping level".into(),
                ));
            }
            break Termination::Stalled;
        };

        let dx = (&trial - &x).norm();
        let rel_drop = (cost - c_trial) / cost;
        let x_norm = x.norm();
        x = trial;
        r = r_trial;
        cost = c_trial;
        history.push(cost);
        lambda = (lambda / 10.0).max(1e-15);
        jac = numerical_jacobian(&mut f, &x, &r, lower, upper)?;

        if rel_drop < options.ftol {
            break Termination::Ftol;
        }
        if dx < options.xtol * (x_norm + options.xtol) {
            break Termination::Xtol;
        }
    };

    Ok(LmReport {
        x,
        residuals: r,
        jacobian: jac,
        cost,
        iterations,
        termination,
        cost_history: history,
    })
}

/// Moore–Penrose inverse of JᵀJ, used for the local covariance. Columns are scaled to
/// unit norm before the eigen-decomposition so that parameters of very different
/// magnitude are truncated on an equal footing.
pub fn normal_matrix_pinv(jac: &DMatrix<f64>) -> DMatrix<f64> {
    let n = jac.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let scale: Vec<f64> = (0..n)
        .map(|j| {
            let norm = jac.column(j).norm();
            if norm > 0.0 && norm.is_finite() {
                1.0 / norm
            } else {
                1.0
            }
        })
        .collect();
    let mut scaled = jac.clone();
    for (j, s) in scale.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*s);
    }
    let jtj = scaled.transpose() * &scaled;
    let eig = jtj.symmetric_eigen();
    let max_ev = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = max_ev * 1e-14 * n as f64;
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        let ev = eig.eigenvalues[k];
        if ev > cutoff {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / ev;
        }
    }
    DMatrix::from_fn(n, n, |a, b| scale[a] * out[(a, b)] * scale[b])
}
