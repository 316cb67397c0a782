//! Weak divisibility: does a column-stochastic X exist with Γ(t) = X Γ(t′)?
//!
//! Solved as the convex problem min ½‖X Γ(t′) − Γ(t)‖²_F over matrices whose
//! columns lie on the probability simplex. Proximal gradient with step 1/L,
//! L = ‖Γ(t′)‖₂², using the monotone accelerated variant so that the reported
//! residual never increases from one iteration to the next.

use crate::error::{Error, Result};
use crate::linalg::{self, RMatrix};
use crate::system::TransitionMatrix;

/// Frobenius residual at or below which a divisibility query counts as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 20_000;
const CONVERGED: f64 = 1e-13;

#[derive(Clone, Debug)]
pub struct DivisibilityReport {
    pub feasible: bool,
    /// Best column-stochastic X found.
    pub witness: RMatrix,
    /// ‖X Γ(t′) − Γ(t)‖_F at the witness.
    pub residual: f64,
    pub iterations: usize,
    /// Residual after each iteration (index 0 is the starting point).
    pub history: Vec<f64>,
}

fn residual(x: &RMatrix, a: &RMatrix, b: &RMatrix) -> f64 {
    (x * a - b).norm()
}

fn project_columns(x: &mut RMatrix) {
    for mut col in x.column_iter_mut() {
        let mut v: Vec<f64> = col.iter().copied().collect();
        linalg::project_simplex(&mut v);
        col.copy_from_slice(&v);
    }
}

/// Searches for X with Γ(t) = X Γ(t′).
pub fn solve_divisibility(g_t: &TransitionMatrix, g_tp: &TransitionMatrix) -> Result<DivisibilityReport> {
    if g_t.n() != g_tp.n() {
        return Err(Error::shape(format!("{0}×{0}", g_t.n()), format!("{0}×{0}", g_tp.n())));
    }
    let n = g_t.n();
    let a = g_tp.matrix();
    let b = g_t.matrix();
    let at = a.transpose();

    // Power iteration approaches ‖A‖² from below; a small margin keeps 1/L a
    // valid descent step.
    let lipschitz = linalg::spectral_norm_sq(a) * 1.0001;

    let mut x = RMatrix::identity(n, n);
    let mut best = residual(&x, a, b);
    let mut history = vec![best];

    if lipschitz == 0.0 {
        return Ok(report(x, best, 0, history));
    }

    let mut y = x.clone();
    let mut momentum = 1.0_f64;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && best > CONVERGED {
        iterations += 1;
        let grad = (&y * a - b) * &at;
        let mut z = &y - grad / lipschitz;
        project_columns(&mut z);
        let rz = residual(&z, a, b);

        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let x_prev = x.clone();
        if rz <= best {
            x = z.clone();
            best = rz;
            y = &x + (&x - &x_prev) * ((momentum - 1.0) / next_momentum);
            momentum = next_momentum;
        } else {
            // Keep the incumbent and restart the momentum from it.
            y = x.clone();
            momentum = 1.0;
        }
        history.push(best);
    }
    Ok(report(x, best, iterations, history))
}

fn report(witness: RMatrix, residual: f64, iterations: usize, history: Vec<f64>) -> DivisibilityReport {
    DivisibilityReport {
        feasible: residual <= FEASIBILITY_TOL,
        witness,
        residual,
        iterations,
        history,
    }
}
