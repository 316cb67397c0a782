//! Constructors for worked examples and test corpora: permutation
//! interpolation with its Hamiltonian, Markov chains, finite random
//! dynamical systems, and seeded random systems.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, RMatrix};
use crate::system::{ProbabilityVector, RandomVariable, StochasticSystem, TimeGrid, TransitionMatrix};

/// A permutation of {0, …, n−1} given by disjoint cycles. Fixed points may be
/// omitted; they are filled in as 1-cycles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationSpec {
    n: usize,
    cycles: Vec<Vec<usize>>,
}

impl PermutationSpec {
    pub fn new(n: usize, cycles: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for c in &cycles {
            if c.is_empty() {
                return Err(Error::InvalidParameter("empty cycle".into()));
            }
            for &i in c {
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, dim: n });
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidParameter(format!("element {} appears twice", i + 1)));
                }
            }
        }
        let mut cycles = cycles;
        cycles.extend((0..n).filter(|&i| !seen[i]).map(|i| vec![i]));
        Ok(PermutationSpec { n, cycles })
    }

    /// Cycle decomposition of the map j ↦ image[j].
    pub fn from_images(image: &[usize]) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        let mut cycles = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                cycle.push(j);
                j = *image.get(j).ok_or(Error::IndexOutOfRange { index: j, dim: n })?;
                if j >= n {
                    return Err(Error::IndexOutOfRange { index: j, dim: n });
                }
            }
            if j != start {
                return Err(Error::InvalidParameter("image list is not a permutation".into()));
            }
            cycles.push(cycle);
        }
        Ok(PermutationSpec { n, cycles })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    /// σ(j).
    pub fn image(&self, j: usize) -> usize {
        for c in &self.cycles {
            if let Some(pos) = c.iter().position(|&x| x == j) {
                return c[(pos + 1) % c.len()];
            }
        }
        unreachable!("cycles cover 0..n")
    }

    /// Σ with Σ_{σ(j), j} = 1, so Σ e_j = e_{σ(j)}.
    pub fn matrix(&self) -> RMatrix {
        let mut m = RMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            m[(self.image(j), j)] = 1.0;
        }
        m
    }

    /// Eigenpairs (θ, v) with Σv = e^{iθ}v, θ in (−π, π].
    ///
    /// A cycle (c_0 … c_{L−1}) carries v_k = L^{-1/2} Σ_m e^{−2πikm/L} e_{c_m}
    /// with eigenphase 2πk/L, folded into the principal branch.
    pub fn eigenpairs(&self) -> Vec<(f64, DVector<Complex64>)> {
        let mut out = Vec::with_capacity(self.n);
        for c in &self.cycles {
            let len = c.len();
            let norm = 1.0 / (len as f64).sqrt();
            for k in 0..len {
                let mut theta = 2.0 * PI * k as f64 / len as f64;
                if 2 * k > len {
                    theta -= 2.0 * PI;
                } else if 2 * k == len {
                    theta = PI;
                }
                let mut v = DVector::from_element(self.n, linalg::ZERO);
                for (m, &idx) in c.iter().enumerate() {
                    let angle = -2.0 * PI * ((k * m) % len) as f64 / len as f64;
                    v[idx] = Complex64::from_polar(norm, angle);
                }
                out.push((theta, v));
            }
        }
        out
    }

    /// Σ_m f(θ_m) v_m v_m†.
    fn spectral(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        self.eigenpairs()
            .into_iter()
            .fold(CMatrix::zeros(self.n, self.n), |acc, (theta, v)| {
                acc + (&v * v.adjoint()) * f(theta)
            })
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")))
    }
}

/// Σ^{t/dt} = V† D^{t/dt} V on the principal branch of the eigenphases.
pub fn permutation_power_interpolation(p: &PermutationSpec, t: f64, dt: f64) -> Result<CMatrix> {
    check_dt(dt)?;
    let s = t / dt;
    Ok(p.spectral(|theta| Complex64::from_polar(1.0, theta * s)))
}

/// H = Σ_m (−θ_m/dt) v_m v_m† (ħ = 1), so that exp(−iHt) = Σ^{t/dt}.
pub fn hamiltonian_from_permutation(p: &PermutationSpec, dt: f64) -> Result<CMatrix> {
    check_dt(dt)?;
    Ok(p.spectral(|theta| Complex64::new(-theta / dt, 0.0)))
}

/// Γ(t) = |Σ^{t/dt}|² on every grid time. Grid times that are whole
/// multiples of dt get the exact 0/1 matrix Σⁿ.
pub fn permutation_unistochastic_system(
    p: &PermutationSpec,
    grid: &TimeGrid,
    dt: f64,
    p0: ProbabilityVector,
) -> Result<StochasticSystem> {
    check_dt(dt)?;
    if p0.len() != p.n() {
        return Err(Error::shape(format!("p0 of length {}", p.n()), p0.len()));
    }
    let sigma = p.matrix();
    let mut transitions = Vec::with_capacity(grid.len());
    for &t in grid.times() {
        let steps = t / dt;
        let g = if steps.fract() == 0.0 {
            let k = steps.rem_euclid(p_order(p) as f64) as usize;
            (0..k).fold(RMatrix::identity(p.n(), p.n()), |acc, _| &sigma * acc)
        } else {
            linalg::modulus_squared(&permutation_power_interpolation(p, t, dt)?)
        };
        transitions.push(TransitionMatrix::from_raw(g, t)?);
    }
    StochasticSystem::new(grid.clone(), transitions, p0, vec![])
}

/// Order of the permutation (lcm of cycle lengths).
fn p_order(p: &PermutationSpec) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    p.cycles().iter().fold(1, |acc, c| acc / gcd(acc, c.len()) * c.len())
}

/// Grid {0, dt, …, steps·dt} with Γ(k·dt) = Γ(dt)^k, dt taken from the
/// time label of `g_dt`.
pub fn markov_chain_system(
    g_dt: &TransitionMatrix,
    steps: usize,
    p0: ProbabilityVector,
) -> Result<StochasticSystem> {
    if !g_dt.is_stochastic() {
        return Err(Error::InvalidParameter("Γ(dt) is not column-stochastic".into()));
    }
    let dt = g_dt.time();
    check_dt(dt)?;
    let grid = TimeGrid::uniform(dt, steps)?;
    let n = g_dt.n();
    let mut power = RMatrix::identity(n, n);
    let mut transitions = Vec::with_capacity(steps + 1);
    for &t in grid.times() {
        transitions.push(TransitionMatrix::from_raw(power.clone(), t)?);
        power = g_dt.matrix() * power;
    }
    StochasticSystem::new(grid, transitions, p0, vec![])
}

/// One sample point ω of a finite random dynamical system.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePoint {
    pub weight: f64,
    /// `map[k][j]`: image of state j at the k-th grid time.
    pub map: Vec<Vec<usize>>,
}

/// Weighted finite ensemble of deterministic maps f_{ω,t}.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteRDS {
    n: usize,
    grid: TimeGrid,
    omegas: Vec<SamplePoint>,
}

impl FiniteRDS {
    pub fn new(n: usize, grid: TimeGrid, omegas: Vec<SamplePoint>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::InvalidParameter("no sample points".into()));
        }
        let total: f64 = omegas.iter().map(|w| w.weight).sum();
        if omegas.iter().any(|w| !(w.weight >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "weights must be nonnegative and sum to 1 (sum {total})"
            )));
        }
        let zero = grid.zero_index();
        for (w, omega) in omegas.iter().enumerate() {
            if omega.map.len() != grid.len() || omega.map.iter().any(|m| m.len() != n) {
                return Err(Error::shape(format!("{}×{n} map table", grid.len()), format!("sample {w}")));
            }
            if omega.map.iter().flatten().any(|&s| s >= n) {
                return Err(Error::InvalidParameter(format!("sample {w} maps outside the state space")));
            }
            if omega.map[zero].iter().enumerate().any(|(j, &i)| i != j) {
                return Err(Error::InvalidParameter(format!("sample {w} is not the identity at time 0")));
            }
        }
        Ok(FiniteRDS { n, grid, omegas })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn omegas(&self) -> &[SamplePoint] {
        &self.omegas
    }
}

/// Γ_ij(t) = Σ {weight(ω) : f_{ω,t}(j) = i}.
pub fn rds_to_stochastic_system(r: &FiniteRDS, p0: ProbabilityVector) -> Result<StochasticSystem> {
    let n = r.n;
    let mut transitions = Vec::with_capacity(r.grid.len());
    for (k, &t) in r.grid.times().iter().enumerate() {
        let mut g = RMatrix::zeros(n, n);
        for omega in &r.omegas {
            for j in 0..n {
                g[(omega.map[k][j], j)] += omega.weight;
            }
        }
        transitions.push(TransitionMatrix::from_raw(g, t)?);
    }
    StochasticSystem::new(r.grid.clone(), transitions, p0, vec![])
}

/// Seeded FiniteRDS with `samples` sample points whose maps are uniform
/// random functions at every nonzero time.
pub fn random_finite_rds(n: usize, grid: &TimeGrid, samples: usize, seed: u64) -> Result<FiniteRDS> {
    if n == 0 || samples == 0 {
        return Err(Error::InvalidParameter("n and samples must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..samples).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    // Put the rounding remainder on the last weight so the sum is 1 to the ulp.
    let head: f64 = weights[..samples - 1].iter().sum();
    weights[samples - 1] = 1.0 - head;
    let zero = grid.zero_index();
    let omegas = weights
        .into_iter()
        .map(|weight| SamplePoint {
            weight,
            map: (0..grid.len())
                .map(|k| {
                    if k == zero {
                        (0..n).collect()
                    } else {
                        (0..n).map(|_| rng.gen_range(0..n)).collect()
                    }
                })
                .collect(),
        })
        .collect();
    FiniteRDS::new(n, grid.clone(), omegas)
}

fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 1.0 - rng.gen::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Seeded random system: Γ(0) = 𝟙, every other Γ(t) has columns drawn as
/// normalized positive uniforms; p0 is drawn the same way.
pub fn random_stochastic_system(n: usize, grid: &TimeGrid, seed: u64) -> Result<StochasticSystem> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p0 = ProbabilityVector::from_raw(random_distribution(&mut rng, n));
    let mut transitions = Vec::with_capacity(grid.len());
    for &t in grid.times() {
        let g = if t == 0.0 {
            RMatrix::identity(n, n)
        } else {
            let mut g = RMatrix::zeros(n, n);
            for j in 0..n {
                for (i, x) in random_distribution(&mut rng, n).into_iter().enumerate() {
                    g[(i, j)] = x;
                }
            }
            g
        };
        transitions.push(TransitionMatrix::from_raw(g, t)?);
    }
    StochasticSystem::new(grid.clone(), transitions, p0, vec![])
}

/// Random variable with magnitudes uniform in [−1, 1).
pub fn random_variable(name: &str, n: usize, grid_len: usize, seed: u64) -> RandomVariable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RandomVariable::new(name, RMatrix::from_fn(n, grid_len, |_, _| rng.gen_range(-1.0..1.0)))
}

/// Random phase matrix, entries uniform in [0, 2π).
pub fn random_phases(n: usize, seed: u64) -> RMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RMatrix::from_fn(n, n, |_, _| rng.gen_range(0.0..2.0 * PI))
}
