use crate::error::{Error, Result};
use crate::linalg::{self, RMatrix};
use crate::system::{StochasticSystem, TransitionMatrix};

fn same_dims(a: &TransitionMatrix, b: &TransitionMatrix) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::shape(format!("{0}×{0}", a.n()), format!("{0}×{0}", b.n())));
    }
    Ok(())
}

/// Max-entry residual of Γ(t) − Γ(t″)Γ(t′).
pub fn check_markov_triple(
    g_t: &TransitionMatrix,
    g_tp: &TransitionMatrix,
    g_tpp: &TransitionMatrix,
) -> Result<f64> {
    same_dims(g_t, g_tp)?;
    same_dims(g_t, g_tpp)?;
    let composed = g_tpp.matrix() * g_tp.matrix();
    Ok(linalg::max_abs_diff(g_t.matrix(), &composed))
}

/// For every n with n·dt on the grid, the residual between Γ(n·dt) and Γ(dt)ⁿ.
pub fn check_markov_chain(sys: &StochasticSystem, dt: f64) -> Result<Vec<(usize, f64)>> {
    let step = sys.transition(dt)?.matrix();
    if dt <= 0.0 {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let t_max = *sys.grid().times().last().expect("grid contains 0");
    let n = sys.n();
    let mut power = RMatrix::identity(n, n);
    let mut out = Vec::new();
    let mut k = 0usize;
    while k as f64 * dt <= t_max {
        if let Ok(g) = sys.transition(k as f64 * dt) {
            out.push((k, linalg::max_abs_diff(g.matrix(), &power)));
        }
        power = step * power;
        k += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{ProbabilityVector, TimeGrid};

    fn tm(rows: &[f64], n: usize) -> TransitionMatrix {
        TransitionMatrix::new(RMatrix::from_row_slice(n, n, rows), 1.0).unwrap()
    }

    #[test]
    fn identity_triple_composes() {
        let id = TransitionMatrix::identity(3);
        assert_eq!(check_markov_triple(&id, &id, &id).unwrap(), 0.0);
    }

    #[test]
    fn squared_step_composes() {
        let g = tm(&[0.9, 0.2, 0.1, 0.8], 2);
        let g2 = TransitionMatrix::new(g.matrix() * g.matrix(), 2.0).unwrap();
        assert!(check_markov_triple(&g2, &g, &g).unwrap() <= 1e-14);
    }

    #[test]
    fn averaging_does_not_compose_to_identity() {
        let avg = tm(&[0.5; 4], 2);
        let id = TransitionMatrix::identity(2);
        assert_eq!(check_markov_triple(&id, &avg, &avg).unwrap(), 0.5);
    }

    #[test]
    fn dimension_mismatch() {
        let a = TransitionMatrix::identity(2);
        let b = TransitionMatrix::identity(3);
        assert!(matches!(check_markov_triple(&a, &b, &a), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn chain_residuals_at_trivial_steps() {
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.5]).unwrap();
        let g1 = tm(&[0.9, 0.2, 0.1, 0.8], 2);
        let g25 = TransitionMatrix::new(RMatrix::from_element(2, 2, 0.5), 2.5).unwrap();
        let sys = StochasticSystem::new(
            grid,
            vec![TransitionMatrix::identity(2), g1, g25],
            ProbabilityVector::uniform(2),
            vec![],
        )
        .unwrap();
        let report = check_markov_chain(&sys, 1.0).unwrap();
        assert_eq!(report, vec![(0, 0.0), (1, 0.0)]);
        assert!(matches!(check_markov_chain(&sys, 0.5), Err(Error::UnknownTime(_))));
    }
}
