//! Unitary dilation of a generalized stochastic system.
//!
//! For each grid time the Kraus set {K_β} of Θ(t) defines the N³×N² partial
//! isometry Ṽ_{(iβm)(jl)} = K_{β,ij} δ_{lm}. Its columns are placed in an
//! N³×N³ matrix and the remaining N³ − N² columns are filled by Gram–Schmidt
//! over the standard basis, giving a unitary Ũ(t). The dilated transition
//! matrix Γ̃ = |Ũ|² is unistochastic, and marginalizing the ancilla index
//! (i′ = (β, m), N² values) at the anchored column j′ = ψ(j) recovers Γ(t).
//!
//! Indexing is 0-based: row (i, β, m) ↦ (i·N + β)·N + m, isometry column
//! (j, l) ↦ j·N + l, ancilla (β, m) ↦ β·N + m.

use rayon::prelude::*;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{build_evolution_operator, kraus_from_evolution, KrausSet};
use crate::linalg::{self, CMatrix, RMatrix};
use crate::system::{max_dilation_n, validate_system, ProbabilityVector, StochasticSystem, TimeGrid};

/// Tolerance on the marginalization residual of a finished dilation.
pub const MARGINALIZATION_TOL: f64 = 1e-10;
/// Residual norm below which a Gram–Schmidt candidate is discarded.
const SURVIVAL_THRESHOLD: f64 = 1e-6;
const ISOMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct PartialIsometry {
    entries: CMatrix,
    n: usize,
    time: f64,
}

impl PartialIsometry {
    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// ‖Ṽ†Ṽ − 𝟙‖_max.
    pub fn isometry_defect(&self) -> f64 {
        let nn = self.n * self.n;
        linalg::max_abs_diff_c(&(self.entries.adjoint() * &self.entries), &CMatrix::identity(nn, nn))
    }
}

/// Flattened row index of (i, β, m).
pub fn row_index(n: usize, i: usize, beta: usize, m: usize) -> usize {
    (i * n + beta) * n + m
}

/// Ṽ_{(iβm)(jl)} = K_{β,ij} δ_{lm}.
pub fn build_partial_isometry(k: &KrausSet) -> PartialIsometry {
    let n = k.n();
    let mut v = CMatrix::zeros(n * n * n, n * n);
    for (beta, kb) in k.operators().iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    v[(row_index(n, i, beta, l), j * n + l)] = kb[(i, j)];
                }
            }
        }
    }
    PartialIsometry {
        entries: v,
        n,
        time: k.time(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DilatedUnitary {
    entries: CMatrix,
    n: usize,
    time: f64,
}

impl DilatedUnitary {
    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn total_dim(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Full column position of isometry column (j, l): (j, β = j, m = l).
    pub fn placement(&self, j: usize, l: usize) -> usize {
        row_index(self.n, j, j, l)
    }

    pub fn unitarity_defect(&self) -> f64 {
        linalg::unitarity_defect(&self.entries)
    }
}

/// Dense storage plus the list of nonzero positions; the candidates and the
/// placed columns are sparse, so inner products only touch the support.
struct SparseColumn {
    values: Vec<Complex64>,
    support: Vec<usize>,
}

impl SparseColumn {
    fn from_dense(values: Vec<Complex64>) -> Self {
        let support = values
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != linalg::ZERO)
            .map(|(k, _)| k)
            .collect();
        SparseColumn { values, support }
    }
}

/// r ← r − q (q† r) for every q in the basis.
fn orthogonalize(r: &mut [Complex64], basis: &[SparseColumn]) {
    for q in basis {
        let coeff: Complex64 = q.support.iter().map(|&k| q.values[k].conj() * r[k]).sum();
        if coeff == linalg::ZERO {
            continue;
        }
        for &k in &q.support {
            r[k] -= q.values[k] * coeff;
        }
    }
}

/// Extends Ṽ to a unitary on ℂ^{N³}. Isometry column (j, l) goes to position
/// (j, j, l); the other positions receive, in ascending order, the standard
/// basis vectors e_1, e_2, … that survive two passes of modified Gram–Schmidt
/// against everything kept so far.
pub fn complete_to_unitary(v: &PartialIsometry) -> Result<DilatedUnitary> {
    let defect = v.isometry_defect();
    if !(defect <= ISOMETRY_TOL) {
        return Err(Error::NotIsometric(defect));
    }
    let n = v.n;
    let dim = n * n * n;
    let needed = dim - n * n;

    let mut columns: Vec<Option<Vec<Complex64>>> = vec![None; dim];
    let mut basis: Vec<SparseColumn> = Vec::with_capacity(dim);
    for j in 0..n {
        for l in 0..n {
            let col: Vec<Complex64> = v.entries.column(j * n + l).iter().copied().collect();
            columns[row_index(n, j, j, l)] = Some(col.clone());
            basis.push(SparseColumn::from_dense(col));
        }
    }

    let free_positions: Vec<usize> = (0..dim).filter(|&p| columns[p].is_none()).collect();
    let mut free = free_positions.into_iter();
    let mut kept = 0;
    for k in 0..dim {
        if kept == needed {
            break;
        }
        let mut r = vec![linalg::ZERO; dim];
        r[k] = linalg::ONE;
        orthogonalize(&mut r, &basis);
        orthogonalize(&mut r, &basis);
        let norm = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < SURVIVAL_THRESHOLD {
            continue;
        }
        if norm != 1.0 {
            let inv = 1.0 / norm;
            r.iter_mut().for_each(|z| *z *= inv);
        }
        let position = free.next().expect("fewer kept vectors than free positions");
        columns[position] = Some(r.clone());
        basis.push(SparseColumn::from_dense(r));
        kept += 1;
    }
    if kept < needed {
        return Err(Error::CompletionFailed { kept, needed });
    }

    let mut u = CMatrix::zeros(dim, dim);
    for (p, col) in columns.into_iter().enumerate() {
        let col = col.expect("every position filled");
        u.column_mut(p).copy_from_slice(&col);
    }
    Ok(DilatedUnitary {
        entries: u,
        n,
        time: v.time,
    })
}

/// Γ̃ = |Ũ|² entrywise.
pub fn dilated_transition_matrix(u: &DilatedUnitary) -> RMatrix {
    linalg::modulus_squared(&u.entries)
}

/// Ancilla index ψ(j) = (β = j, m = 0).
pub fn anchor(n: usize, j: usize) -> usize {
    j * n
}

/// The N anchored ancilla indices (β = j, m) of configuration j.
pub fn anchored_indices(n: usize, j: usize) -> impl Iterator<Item = usize> {
    (0..n).map(move |m| j * n + m)
}

/// tr(tr′(Ũ† [P_i ⊗ 𝟙′] Ũ [P_j ⊗ P′_{j′}])) = Σ_{i′} |Ũ_{(i,i′),(j,j′)}|².
pub fn dilated_dictionary_probability(u: &DilatedUnitary, i: usize, j: usize, jp: usize) -> Result<f64> {
    let n = u.n;
    let ancilla = n * n;
    for (index, dim) in [(i, n), (j, n), (jp, ancilla)] {
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
    }
    let col = j * ancilla + jp;
    Ok((0..ancilla)
        .map(|ip| u.entries[(i * ancilla + ip, col)].norm_sqr())
        .sum())
}

/// The composite unistochastic system on N × N² configurations.
#[derive(Clone, Debug)]
pub struct DilatedSystem {
    n: usize,
    grid: TimeGrid,
    unitaries: Vec<DilatedUnitary>,
    transitions: Vec<RMatrix>,
    p_tilde: Vec<Vec<f64>>,
}

impl DilatedSystem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ancilla_dim(&self) -> usize {
        self.n * self.n
    }

    pub fn total_dim(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn anchor(&self, j: usize) -> usize {
        anchor(self.n, j)
    }

    pub fn unitaries(&self) -> &[DilatedUnitary] {
        &self.unitaries
    }

    pub fn transitions(&self) -> &[RMatrix] {
        &self.transitions
    }

    pub fn unitary(&self, t: f64) -> Result<&DilatedUnitary> {
        Ok(&self.unitaries[self.grid.index_of(t)?])
    }

    pub fn transition(&self, t: f64) -> Result<&RMatrix> {
        Ok(&self.transitions[self.grid.index_of(t)?])
    }

    /// p̃(t), indexed by i·N² + i′.
    pub fn p_tilde(&self, t: f64) -> Result<&[f64]> {
        Ok(&self.p_tilde[self.grid.index_of(t)?])
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        self.unitaries
            .par_iter()
            .map(DilatedUnitary::unitarity_defect)
            .reduce(|| 0.0, f64::max)
    }

    pub fn max_doubly_stochastic_defect(&self) -> f64 {
        self.transitions
            .iter()
            .map(linalg::doubly_stochastic_defect)
            .fold(0.0, f64::max)
    }

    /// Fault injection for tests: overwrite one entry of Γ̃(t).
    #[doc(hidden)]
    pub fn corrupt_transition(&mut self, time_index: usize, row: usize, col: usize, delta: f64) {
        self.transitions[time_index][(row, col)] += delta;
    }
}

struct TimeSlice {
    unitary: DilatedUnitary,
    transition: RMatrix,
    p_tilde: Vec<f64>,
}

fn dilate_at(sys: &StochasticSystem, index: usize, phases: Option<&RMatrix>) -> Result<TimeSlice> {
    let n = sys.n();
    let ancilla = n * n;
    let theta = build_evolution_operator(&sys.transitions()[index], phases)?;
    let kraus = kraus_from_evolution(&theta);
    let v = build_partial_isometry(&kraus);
    let unitary = complete_to_unitary(&v)?;
    let transition = dilated_transition_matrix(&unitary);
    let p0 = sys.p0().as_slice();
    let p_tilde = (0..n * ancilla)
        .map(|row| {
            (0..n)
                .map(|j| transition[(row, j * ancilla + anchor(n, j))] * p0[j])
                .sum()
        })
        .collect();
    Ok(TimeSlice {
        unitary,
        transition,
        p_tilde,
    })
}

/// Builds Θ → Kraus → Ṽ → Ũ → Γ̃ at every grid time and sets
/// p̃_{ii′}(t) = Σ_j Γ̃_{ii′, jψ(j)}(t) p_j(0).
///
/// `phases`, when given, holds one N×N phase matrix per grid time.
pub fn dilate_system(sys: &StochasticSystem, phases: Option<&[RMatrix]>) -> Result<DilatedSystem> {
    let dilated = assemble_dilation(sys, phases)?;
    let residual = verify_marginalization(&dilated, sys)?;
    if residual > MARGINALIZATION_TOL {
        return Err(Error::InvalidParameter(format!(
            "marginalization residual {residual:e} exceeds {MARGINALIZATION_TOL:e}"
        )));
    }
    Ok(dilated)
}

/// [`dilate_system`] without the final marginalization check.
pub fn assemble_dilation(sys: &StochasticSystem, phases: Option<&[RMatrix]>) -> Result<DilatedSystem> {
    let report = validate_system(sys);
    if !report.is_empty() {
        return Err(Error::InvalidSystem(report));
    }
    let cap = max_dilation_n();
    if sys.n() > cap {
        return Err(Error::TooLarge { n: sys.n(), cap });
    }
    if let Some(ph) = phases {
        if ph.len() != sys.grid().len() {
            return Err(Error::shape(format!("{} phase matrices", sys.grid().len()), ph.len()));
        }
    }
    let slices = (0..sys.grid().len())
        .into_par_iter()
        .map(|k| dilate_at(sys, k, phases.map(|p| &p[k])))
        .collect::<Result<Vec<_>>>()?;

    let mut unitaries = Vec::with_capacity(slices.len());
    let mut transitions = Vec::with_capacity(slices.len());
    let mut p_tilde = Vec::with_capacity(slices.len());
    for s in slices {
        unitaries.push(s.unitary);
        transitions.push(s.transition);
        p_tilde.push(s.p_tilde);
    }
    Ok(DilatedSystem {
        n: sys.n(),
        grid: sys.grid().clone(),
        unitaries,
        transitions,
        p_tilde,
    })
}

/// max over (i, j, t) of |Σ_{i′} Γ̃_{ii′, jψ(j)}(t) − Γ_ij(t)|.
pub fn verify_marginalization(d: &DilatedSystem, sys: &StochasticSystem) -> Result<f64> {
    if d.n != sys.n() || d.grid != *sys.grid() {
        return Err(Error::shape(
            format!("dilation of an N={} system over {} times", sys.n(), sys.grid().len()),
            format!("N={} over {} times", d.n, d.grid.len()),
        ));
    }
    let n = d.n;
    let ancilla = n * n;
    let mut worst = 0.0_f64;
    for (g_tilde, g) in d.transitions.iter().zip(sys.transitions()) {
        for j in 0..n {
            let col = j * ancilla + anchor(n, j);
            for i in 0..n {
                let marginal: f64 = (0..ancilla).map(|ip| g_tilde[(i * ancilla + ip, col)]).sum();
                worst = worst.max((marginal - g.matrix()[(i, j)]).abs());
            }
        }
    }
    Ok(worst)
}

/// Both marginals of p̃(t): over the ancilla (length N) and over the system
/// (length N²).
pub fn subsystem_marginals(d: &DilatedSystem, t: f64) -> Result<(ProbabilityVector, Vec<f64>)> {
    let pt = d.p_tilde(t)?;
    let n = d.n;
    let ancilla = n * n;
    let p: Vec<f64> = (0..n)
        .map(|i| pt[i * ancilla..(i + 1) * ancilla].iter().sum())
        .collect();
    let p_prime: Vec<f64> = (0..ancilla)
        .map(|ip| (0..n).map(|i| pt[i * ancilla + ip]).sum())
        .collect();
    Ok((ProbabilityVector::from_raw(p), p_prime))
}
