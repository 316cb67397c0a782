//! Small dense linear-algebra helpers shared by the other modules.
//!
//! Everything here works on `nalgebra` dynamic matrices. Sizes in this crate
//! stay small (N ≤ 32, dilations up to N³ = 1728), so the routines favour
//! clarity over blocking or SIMD tricks.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type RMatrix = DMatrix<f64>;
pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Promote a real matrix to a complex one.
pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Entrywise squared modulus.
pub fn modulus_squared(m: &CMatrix) -> RMatrix {
    m.map(|z| z.norm_sqr())
}

/// Largest entrywise absolute difference between two equally shaped matrices.
pub fn max_abs_diff(a: &RMatrix, b: &RMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn max_abs_diff_c(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn max_abs_imag(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.im.abs()))
}

/// max(‖U†U − 𝟙‖_max, ‖UU† − 𝟙‖_max); zero for an exact unitary.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    if u.ncols() != n {
        return f64::INFINITY;
    }
    let id = CMatrix::identity(n, n);
    let uh = u.adjoint();
    max_abs_diff_c(&(&uh * u), &id).max(max_abs_diff_c(&(u * &uh), &id))
}

/// Largest violation of double stochasticity: negative entries, row sums and
/// column sums away from one.
pub fn doubly_stochastic_defect(m: &RMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let mut worst = m.iter().fold(0.0_f64, |acc, &x| acc.max(-x));
    for r in m.row_iter() {
        worst = worst.max((r.sum() - 1.0).abs());
    }
    for c in m.column_iter() {
        worst = worst.max((c.sum() - 1.0).abs());
    }
    worst
}

/// Euclidean projection onto the probability simplex, in place.
///
/// Sort-based: find the largest k with u_k − (Σ_{i≤k} u_i − 1)/k > 0 over the
/// descending sort u, then shift and clip.
pub fn project_simplex(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Estimate of the squared spectral norm ‖A‖₂² by power iteration on AᵀA.
pub fn spectral_norm_sq(a: &RMatrix) -> f64 {
    let n = a.ncols();
    if n == 0 {
        return 0.0;
    }
    let ata = a.transpose() * a;
    let mut v = nalgebra::DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w = &ata * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - lambda).abs() <= 1e-14 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // Rayleigh quotients approach from below; one more product gives ‖AᵀAv‖ ≥ λ.
    (&ata * &v).norm().max(lambda)
}

const POLAR_MAX_ITER: usize = 50;
const POLAR_TOL: f64 = 1e-12;

/// Unitary polar factor of a square matrix.
///
/// Scaled Newton iteration X ← ½(γX + γ⁻¹X^{-†}). Falls back to the SVD
/// (U Vᴴ) when X is singular or the iteration stalls.
pub fn polar_unitary(x: &CMatrix) -> CMatrix {
    assert!(x.is_square());
    let mut cur = x.clone();
    for _ in 0..POLAR_MAX_ITER {
        let inv = match cur.clone().try_inverse() {
            Some(inv) if inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => inv,
            _ => return polar_by_svd(x),
        };
        let gamma = (inv.norm() / cur.norm()).sqrt();
        let next = (&cur * Complex64::new(gamma, 0.0)
            + inv.adjoint() * Complex64::new(1.0 / gamma, 0.0))
            * Complex64::new(0.5, 0.0);
        let change = (&next - &cur).norm() / next.norm();
        cur = next;
        if change <= POLAR_TOL {
            break;
        }
    }
    if unitarity_defect(&cur) > 1e-10 {
        return polar_by_svd(x);
    }
    cur
}

fn polar_by_svd(x: &CMatrix) -> CMatrix {
    let svd = x.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    u * v_t
}

/// Smallest eigenvalue of the Hermitian part ½(A + A†).
pub fn min_hermitian_eigenvalue(a: &CMatrix) -> f64 {
    let h = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Matrix exponential by scaling and squaring of a degree-12 Taylor series.
///
/// The scaling exponent is chosen so that ‖A‖₁ / 2^s ≤ 0.5.
pub fn expm(a: &CMatrix) -> CMatrix {
    assert!(a.is_square());
    let n = a.nrows();
    let norm1 = a
        .column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    while norm1 / 2f64.powi(squarings as i32) > 0.5 {
        squarings += 1;
    }
    let scaled = a * Complex64::new(1.0 / 2f64.powi(squarings as i32), 0.0);
    let mut result = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..=12 {
        term = &term * &scaled * Complex64::new(1.0 / k as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}
