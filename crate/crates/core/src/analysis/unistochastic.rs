//! Doubly stochastic and unistochastic matrices.
//!
//! A doubly stochastic M is unistochastic when M_ij = |U_ij|² for some
//! unitary U. 2×2 matrices always are; 3×3 matrices are decided exactly by the
//! chain-links (triangle) criterion; for N ≥ 4 only a witness search is
//! available, so the answer there is "yes" or "unknown".

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, RMatrix};

pub const DEFAULT_RESTARTS: usize = 20;
pub const DEFAULT_MAX_ITER: usize = 2000;
/// Set-distance threshold for accepting a witness.
pub const WITNESS_TOL: f64 = 1e-8;
const TRIANGLE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "YES",
            Verdict::No => "NO",
            Verdict::Unknown => "UNKNOWN",
        })
    }
}

#[derive(Clone, Debug)]
pub struct UnistochasticityResult {
    pub verdict: Verdict,
    pub witness: Option<CMatrix>,
    /// For searches: Frobenius distance between the best unitary and the set
    /// of matrices with moduli √M. For a 3×3 "no": the largest triangle-
    /// inequality violation.
    pub defect: f64,
}

/// Entries ≥ −1e-12 and every row and column sums to 1 within 1e-10.
pub fn is_doubly_stochastic(m: &RMatrix) -> bool {
    if !m.is_square() || m.iter().any(|x| !x.is_finite()) {
        return false;
    }
    m.iter().all(|&x| x >= -1e-12)
        && m.row_iter().all(|r| (r.sum() - 1.0).abs() <= 1e-10)
        && m.column_iter().all(|c| (c.sum() - 1.0).abs() <= 1e-10)
}

fn require_doubly_stochastic(m: &RMatrix) -> Result<()> {
    if is_doubly_stochastic(m) {
        Ok(())
    } else {
        Err(Error::NotDoublyStochastic)
    }
}

/// [[√x, −√(1−x)], [√(1−x), √x]] for M = [[x, 1−x], [1−x, x]].
pub fn unistochastic_witness_2x2(m: &RMatrix) -> Result<CMatrix> {
    if m.shape() != (2, 2) {
        return Err(Error::NotTwoByTwoDoublyStochastic);
    }
    require_doubly_stochastic(m)?;
    let x = m[(0, 0)].clamp(0.0, 1.0);
    let s = x.sqrt();
    let c = (1.0 - x).sqrt();
    Ok(CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(s, 0.0),
            Complex64::new(-c, 0.0),
            Complex64::new(c, 0.0),
            Complex64::new(s, 0.0),
        ],
    ))
}

/// Signed margin of the triangle inequality on the links r_k: positive when
/// the largest link exceeds the sum of the other two.
fn triangle_excess(r: [f64; 3]) -> f64 {
    let total: f64 = r.iter().sum();
    let longest = r.iter().copied().fold(0.0, f64::max);
    longest - (total - longest)
}

fn links(a: impl Fn(usize) -> f64, b: impl Fn(usize) -> f64) -> [f64; 3] {
    [0, 1, 2].map(|k| (a(k).max(0.0) * b(k).max(0.0)).sqrt())
}

/// Exact verdict for 3×3 doubly stochastic matrices.
pub fn unistochastic_verdict_3x3(m: &RMatrix) -> Result<UnistochasticityResult> {
    if m.shape() != (3, 3) {
        return Err(Error::shape("3×3 matrix", format!("{}×{}", m.nrows(), m.ncols())));
    }
    require_doubly_stochastic(m)?;

    let pairs = [(0, 1), (0, 2), (1, 2)];
    let row_excess = pairs
        .iter()
        .map(|&(p, q)| triangle_excess(links(|k| m[(p, k)], |k| m[(q, k)])))
        .fold(f64::NEG_INFINITY, f64::max);
    let col_excess = pairs
        .iter()
        .map(|&(p, q)| triangle_excess(links(|k| m[(k, p)], |k| m[(k, q)])))
        .fold(f64::NEG_INFINITY, f64::max);
    let rows_pass = row_excess <= TRIANGLE_TOL;
    let cols_pass = col_excess <= TRIANGLE_TOL;
    // Near the boundary the two sides may round differently.
    assert!(
        rows_pass == cols_pass || row_excess.abs().min(col_excess.abs()) <= 1e-9,
        "row-pair and column-pair chain-links verdicts disagree"
    );

    if !rows_pass {
        return Ok(UnistochasticityResult {
            verdict: Verdict::No,
            witness: None,
            defect: row_excess,
        });
    }

    let found = search_unistochastic(m, DEFAULT_RESTARTS, DEFAULT_MAX_ITER, 0)?;
    if found.verdict == Verdict::Yes {
        return Ok(found);
    }
    let witness = closed_triangle_witness(m);
    let defect = witness_defect(m, &witness);
    Ok(UnistochasticityResult {
        verdict: Verdict::Yes,
        witness: Some(witness),
        defect,
    })
}

/// Builds a 3×3 witness directly: rows one and two are made orthogonal by
/// closing the triangle of links, row three is the conjugated cross product.
fn closed_triangle_witness(m: &RMatrix) -> CMatrix {
    let r = links(|k| m[(0, k)], |k| m[(1, k)]);
    let (alpha, beta) = if r[0] == 0.0 || r[1] == 0.0 {
        (0.0, PI)
    } else {
        let cos = ((r[2] * r[2] - r[0] * r[0] - r[1] * r[1]) / (2.0 * r[0] * r[1])).clamp(-1.0, 1.0);
        let alpha = cos.acos();
        let closing = -(Complex64::new(r[0], 0.0) + Complex64::from_polar(r[1], alpha));
        (alpha, closing.arg())
    };
    let phases = [0.0, alpha, beta];
    let u1: Vec<Complex64> = (0..3).map(|k| Complex64::new(m[(0, k)].max(0.0).sqrt(), 0.0)).collect();
    let u2: Vec<Complex64> = (0..3)
        .map(|k| Complex64::from_polar(m[(1, k)].max(0.0).sqrt(), phases[k]))
        .collect();
    let u3 = [
        (u1[1] * u2[2] - u1[2] * u2[1]).conj(),
        (u1[2] * u2[0] - u1[0] * u2[2]).conj(),
        (u1[0] * u2[1] - u1[1] * u2[0]).conj(),
    ];
    CMatrix::from_fn(3, 3, |i, k| match i {
        0 => u1[k],
        1 => u2[k],
        _ => u3[k],
    })
}

/// max_ij ||U_ij|² − M_ij| combined with the unitarity defect.
fn witness_defect(m: &RMatrix, u: &CMatrix) -> f64 {
    linalg::max_abs_diff(&linalg::modulus_squared(u), m).max(linalg::unitarity_defect(u))
}

struct Attempt {
    unitary: CMatrix,
    distance: f64,
}

/// One round: polar projection onto the unitaries, then back onto the
/// modulus set. Returns (U, projected point, distance).
fn project_round(moduli: &RMatrix, a: &CMatrix) -> (CMatrix, CMatrix, f64) {
    let n = moduli.nrows();
    let u = linalg::polar_unitary(a);
    let projected = CMatrix::from_fn(n, n, |i, j| {
        let z = u[(i, j)];
        let phase = if z.norm() > 0.0 { z.arg() } else { a[(i, j)].arg() };
        Complex64::from_polar(moduli[(i, j)], phase)
    });
    let distance = (&u - &projected).norm();
    (u, projected, distance)
}

fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Iterations between extrapolation attempts.
const EXTRAPOLATION_PERIOD: usize = 10;

/// Alternating projections between {A : |A_ij| = √M_ij} and the unitary group.
///
/// Near-tangential intersections make plain alternation converge with a
/// rate close to 1, so every few rounds the phase displacement since the
/// last checkpoint is extrapolated with a doubling line search; the
/// extrapolated point is kept only if it lowers the distance.
fn alternate(moduli: &RMatrix, start_phases: &RMatrix, max_iter: usize) -> Attempt {
    let n = moduli.nrows();
    let mut a = CMatrix::from_fn(n, n, |i, j| Complex64::from_polar(moduli[(i, j)], start_phases[(i, j)]));
    let mut best: Option<Attempt> = None;
    let mut last_improvement = 0;
    let mut checkpoint: Option<RMatrix> = None;
    for iter in 0..max_iter.max(1) {
        let (mut u, mut projected, mut distance) = project_round(moduli, &a);

        if iter % EXTRAPOLATION_PERIOD == 0 {
            let phases = projected.map(|z| z.arg());
            if let Some(prev) = &checkpoint {
                let step = phases.zip_map(prev, |x, y| wrap_phase(x - y));
                let mut factor = 1.0;
                while factor < 1e4 {
                    let candidate =
                        CMatrix::from_fn(n, n, |i, j| Complex64::from_polar(moduli[(i, j)], phases[(i, j)] + factor * step[(i, j)]));
                    let (cu, cp, cd) = project_round(moduli, &candidate);
                    if cd >= distance {
                        break;
                    }
                    (u, projected, distance) = (cu, cp, cd);
                    factor *= 2.0;
                }
            }
            checkpoint = Some(projected.map(|z| z.arg()));
        }

        let improved = best.as_ref().is_none_or(|b| distance < b.distance * (1.0 - 1e-10));
        if improved {
            last_improvement = iter;
        }
        if best.as_ref().is_none_or(|b| distance < b.distance) {
            best = Some(Attempt { unitary: u, distance });
        }
        if distance <= WITNESS_TOL * 1e-2 || iter - last_improvement > 200 {
            break;
        }
        a = projected;
    }
    best.expect("at least one iteration")
}

/// Numerical witness search. Attempt 0 starts from zero phases; attempts
/// 1..=restarts start from phases drawn uniformly in [0, 2π) by ChaCha8
/// seeded with `seed`, one stream per attempt. Never answers "no".
pub fn search_unistochastic(
    m: &RMatrix,
    restarts: usize,
    max_iter: usize,
    seed: u64,
) -> Result<UnistochasticityResult> {
    require_doubly_stochastic(m)?;
    let n = m.nrows();
    if n < 2 {
        return Err(Error::InvalidParameter("search needs N ≥ 2".into()));
    }
    let moduli = m.map(|x| x.max(0.0).sqrt());

    let mut best: Option<Attempt> = None;
    for attempt in 0..=restarts {
        let phases = if attempt == 0 {
            RMatrix::zeros(n, n)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(attempt as u64);
            RMatrix::from_fn(n, n, |_, _| rng.gen_range(0.0..2.0 * PI))
        };
        let result = alternate(&moduli, &phases, max_iter);
        if best.as_ref().is_none_or(|b| result.distance < b.distance) {
            best = Some(result);
        }
        let b = best.as_ref().expect("set above");
        if b.distance <= WITNESS_TOL && witness_defect(m, &b.unitary) <= WITNESS_TOL {
            break;
        }
    }

    let best = best.expect("at least one attempt");
    if best.distance <= WITNESS_TOL && witness_defect(m, &best.unitary) <= WITNESS_TOL {
        Ok(UnistochasticityResult {
            verdict: Verdict::Yes,
            defect: best.distance,
            witness: Some(best.unitary),
        })
    } else {
        Ok(UnistochasticityResult {
            verdict: Verdict::Unknown,
            defect: best.distance,
            witness: None,
        })
    }
}
