//! Hilbert-space representation of a stochastic system.
//!
//! Θ(t) is any complex matrix with |Θ_ij(t)|² = Γ_ij(t). From it follow the
//! density matrix ρ(t) = Θ(t)ρ(0)Θ†(t), the Born-rule probabilities
//! tr(P_i ρ(t)), diagonal observables, and the Kraus set K_β = Θ P_β whose
//! operator sum is a CPTP map.
//!
//! Trace formulas are evaluated literally (build projectors, multiply, trace)
//! so that they can be checked against the entrywise formulas.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, RMatrix, ONE};
use crate::system::{ProbabilityVector, RandomVariable, TimeGrid, TransitionMatrix};

/// Largest imaginary residue tolerated on a provably real trace.
pub const IMAG_RESIDUE_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionOperator {
    entries: CMatrix,
    time: f64,
}

impl EvolutionOperator {
    /// Wraps an arbitrary square complex matrix. Use
    /// [`build_evolution_operator`] to derive one from a transition matrix.
    pub fn from_matrix(entries: CMatrix, time: f64) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::shape(
                "square matrix",
                format!("{}×{}", entries.nrows(), entries.ncols()),
            ));
        }
        Ok(EvolutionOperator { entries, time })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    /// Entrywise |Θ_ij|².
    pub fn transition_matrix(&self) -> RMatrix {
        linalg::modulus_squared(&self.entries)
    }

    /// Largest deviation of a column norm from one.
    pub fn column_norm_defect(&self) -> f64 {
        self.entries
            .column_iter()
            .map(|c| (c.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Θ_ij = √Γ_ij · exp(i φ_ij), with φ ≡ 0 unless phases are supplied.
pub fn build_evolution_operator(
    gamma: &TransitionMatrix,
    phases: Option<&RMatrix>,
) -> Result<EvolutionOperator> {
    let n = gamma.n();
    if !gamma.is_stochastic() {
        return Err(Error::InvalidParameter(format!(
            "Γ(t={}) is not column-stochastic",
            gamma.time()
        )));
    }
    if let Some(ph) = phases {
        if ph.shape() != (n, n) {
            return Err(Error::shape(
                format!("{n}×{n} phase matrix"),
                format!("{}×{}", ph.nrows(), ph.ncols()),
            ));
        }
        if gamma.time() == 0.0 && ph.iter().any(|&x| x != 0.0) {
            return Err(Error::PhasesAtInitialTime);
        }
    }
    let g = gamma.matrix();
    let entries = CMatrix::from_fn(n, n, |i, j| {
        let modulus = g[(i, j)].max(0.0).sqrt();
        match phases {
            Some(ph) if ph[(i, j)] != 0.0 => Complex64::from_polar(modulus, ph[(i, j)]),
            _ => Complex64::new(modulus, 0.0),
        }
    });
    Ok(EvolutionOperator {
        entries,
        time: gamma.time(),
    })
}

/// Rank-one configuration projector P_i = e_i e_i†.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Projector {
    index: usize,
    dim: usize,
}

impl Projector {
    pub fn new(index: usize, dim: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        Ok(Projector { index, dim })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn matrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        m[(self.index, self.index)] = ONE;
        m
    }
}

/// The full configuration PVM {P_1, …, P_N}.
pub fn configuration_pvm(dim: usize) -> Vec<Projector> {
    (0..dim).map(|index| Projector { index, dim }).collect()
}

fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

fn real_trace(m: &CMatrix) -> f64 {
    let tr = trace(m);
    assert!(
        tr.im.abs() <= IMAG_RESIDUE_TOL,
        "imaginary residue {:e} on a real trace",
        tr.im
    );
    tr.re
}

/// Γ_ij = tr(Θ† P_i Θ P_j), computed by matrix products.
pub fn dictionary_probability(theta: &EvolutionOperator, i: usize, j: usize) -> Result<f64> {
    let n = theta.n();
    let pi = Projector::new(i, n)?.matrix();
    let pj = Projector::new(j, n)?.matrix();
    let th = theta.matrix();
    Ok(real_trace(&(th.adjoint() * pi * th * pj)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
    time: f64,
}

/// Defects of the density-matrix invariants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityDefects {
    pub hermiticity: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
}

impl DensityDefects {
    pub fn is_valid(&self) -> bool {
        self.hermiticity <= 1e-12 && self.trace <= 1e-12 && self.min_eigenvalue >= -1e-10
    }
}

impl DensityMatrix {
    pub fn from_matrix(entries: CMatrix, time: f64) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::shape(
                "square matrix",
                format!("{}×{}", entries.nrows(), entries.ncols()),
            ));
        }
        Ok(DensityMatrix { entries, time })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn defects(&self) -> DensityDefects {
        let m = &self.entries;
        let tr = trace(m);
        DensityDefects {
            hermiticity: linalg::max_abs_diff_c(m, &m.adjoint()),
            trace: (tr - ONE).norm(),
            min_eigenvalue: linalg::min_hermitian_eigenvalue(m),
        }
    }
}

/// ρ(0) = Σ_j p_j(0) P_j.
pub fn initial_density(p0: &ProbabilityVector) -> DensityMatrix {
    let diag = DVector::from_iterator(p0.len(), p0.as_slice().iter().map(|&p| Complex64::new(p, 0.0)));
    DensityMatrix {
        entries: CMatrix::from_diagonal(&diag),
        time: 0.0,
    }
}

/// ρ(t) = Θ(t) ρ(0) Θ†(t).
pub fn evolve_density(theta: &EvolutionOperator, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    if theta.n() != rho0.n() {
        return Err(Error::shape(format!("{}×{} density", theta.n(), theta.n()), rho0.n()));
    }
    let th = theta.matrix();
    Ok(DensityMatrix {
        entries: th * rho0.matrix() * th.adjoint(),
        time: theta.time(),
    })
}

/// p_i = tr(P_i ρ), clamped to [0, 1] after checking it lies within 1e-10 of that range.
pub fn born_probability(rho: &DensityMatrix, i: usize) -> Result<f64> {
    let p = Projector::new(i, rho.n())?.matrix();
    let value = real_trace(&(p * rho.matrix()));
    assert!(
        (-1e-10..=1.0 + 1e-10).contains(&value),
        "Born probability {value} outside [0, 1]"
    );
    Ok(value.clamp(0.0, 1.0))
}

/// Diagonal observable A(t) = Σ_i a_i(t) P_i.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableMatrix {
    diagonal: Vec<f64>,
    time: f64,
}

impl ObservableMatrix {
    pub fn from_diagonal(diagonal: Vec<f64>, time: f64) -> Self {
        ObservableMatrix { diagonal, time }
    }

    pub fn n(&self) -> usize {
        self.diagonal.len()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.diagonal
    }

    /// Σ_i a_i P_i as a dense matrix.
    pub fn matrix(&self) -> CMatrix {
        let n = self.n();
        configuration_pvm(n)
            .iter()
            .zip(&self.diagonal)
            .fold(CMatrix::zeros(n, n), |acc, (p, &a)| acc + p.matrix() * Complex64::new(a, 0.0))
    }
}

pub fn observable_matrix(a: &RandomVariable, grid: &TimeGrid, t: f64) -> Result<ObservableMatrix> {
    let k = grid.index_of(t)?;
    if a.table().ncols() != grid.len() {
        return Err(Error::UnknownVariable(a.name().to_string()));
    }
    Ok(ObservableMatrix {
        diagonal: a.magnitudes_at(k),
        time: t,
    })
}

/// ⟨A⟩ = tr(A ρ).
pub fn expectation_trace(a: &ObservableMatrix, rho: &DensityMatrix) -> Result<f64> {
    if a.n() != rho.n() {
        return Err(Error::shape(format!("{} configurations", rho.n()), a.n()));
    }
    Ok(real_trace(&(a.matrix() * rho.matrix())))
}

/// Kraus operators K_β = Θ P_β, β = 1..N.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    operators: Vec<CMatrix>,
    time: f64,
}

impl KrausSet {
    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn n(&self) -> usize {
        self.operators.len()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// ‖Σ_β K_β†K_β − 𝟙‖_max.
    pub fn completeness_defect(&self) -> f64 {
        let n = self.n();
        let sum = self
            .operators
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, k| acc + k.adjoint() * k);
        linalg::max_abs_diff_c(&sum, &CMatrix::identity(n, n))
    }

    /// Largest entry of K_β outside its column β.
    pub fn support_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (beta, k) in self.operators.iter().enumerate() {
            for (j, col) in k.column_iter().enumerate() {
                if j != beta {
                    worst = worst.max(col.iter().map(|z| z.norm()).fold(0.0, f64::max));
                }
            }
        }
        worst
    }

    /// Σ_β tr(K_β† P_i K_β P_j).
    pub fn dictionary_probability(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.n();
        let pi = Projector::new(i, n)?.matrix();
        let pj = Projector::new(j, n)?.matrix();
        let total = self
            .operators
            .iter()
            .map(|k| trace(&(k.adjoint() * &pi * k * &pj)))
            .sum::<Complex64>();
        assert!(total.im.abs() <= IMAG_RESIDUE_TOL);
        Ok(total.re)
    }
}

pub fn kraus_from_evolution(theta: &EvolutionOperator) -> KrausSet {
    let operators = configuration_pvm(theta.n())
        .iter()
        .map(|p| theta.matrix() * p.matrix())
        .collect();
    KrausSet {
        operators,
        time: theta.time(),
    }
}

/// 𝓔(X) = Σ_β K_β X K_β†.
pub fn apply_channel(k: &KrausSet, x: &CMatrix) -> Result<CMatrix> {
    let n = k.n();
    if x.shape() != (n, n) {
        return Err(Error::shape(format!("{n}×{n}"), format!("{}×{}", x.nrows(), x.ncols())));
    }
    Ok(k
        .operators
        .iter()
        .fold(CMatrix::zeros(n, n), |acc, kb| acc + kb * x * kb.adjoint()))
}

/// Ψ_i = √p_i · exp(i φ_i).
pub fn classical_wavefunction(p: &ProbabilityVector, phases: Option<&[f64]>) -> Result<Vec<Complex64>> {
    if let Some(ph) = phases {
        if ph.len() != p.len() {
            return Err(Error::shape(format!("{} phases", p.len()), ph.len()));
        }
    }
    Ok(p.as_slice()
        .iter()
        .enumerate()
        .map(|(i, &pi)| {
            let modulus = pi.max(0.0).sqrt();
            match phases {
                Some(ph) if ph[i] != 0.0 => Complex64::from_polar(modulus, ph[i]),
                _ => Complex64::new(modulus, 0.0),
            }
        })
        .collect())
}
