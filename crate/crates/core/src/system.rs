//! Generalized stochastic systems: configuration count, time grid, the
//! stochastic map Γ(t), the initial distribution, and random variables.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::RMatrix;

/// Bound on entrywise probability ranges.
pub const ENTRY_TOL: f64 = 1e-12;
/// Bound on column sums of transition matrices.
pub const STOCHASTIC_TOL: f64 = 1e-10;
/// Bound on the sum of a probability vector.
pub const NORMALIZATION_TOL: f64 = 1e-12;

pub const DEFAULT_MAX_N: usize = 32;
pub const DEFAULT_MAX_DILATION_N: usize = 12;
pub const MAX_N_ENV: &str = "UNISTOQ_MAX_N";

fn env_cap() -> Option<usize> {
    std::env::var(MAX_N_ENV).ok()?.trim().parse().ok()
}

/// Cap on the configuration count for stochastic operations.
pub fn max_n() -> usize {
    env_cap().unwrap_or(DEFAULT_MAX_N)
}

/// Cap on the configuration count for dilations, whose size grows as N³.
pub fn max_dilation_n() -> usize {
    env_cap().unwrap_or(DEFAULT_MAX_DILATION_N)
}

/// Strictly increasing list of times that contains 0.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    zero: usize,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("times must be finite".into()));
        }
        if let Some(w) = times.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(format!(
                "times must be strictly increasing ({} is followed by {})",
                w[0], w[1]
            )));
        }
        let zero = times
            .iter()
            .position(|&t| t == 0.0)
            .ok_or_else(|| Error::InvalidGrid("the grid must contain 0".into()))?;
        Ok(TimeGrid { times, zero })
    }

    /// Evenly spaced grid {0, dt, …, steps·dt}.
    pub fn uniform(dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        Self::new((0..=steps).map(|k| k as f64 * dt).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn zero_index(&self) -> usize {
        self.zero
    }

    /// Exact-match lookup; no interpolation between grid points.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| s == t)
            .ok_or(Error::UnknownTime(t))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        let p = ProbabilityVector(entries);
        match p.defect() {
            d if d <= NORMALIZATION_TOL => Ok(p),
            d => Err(Error::InvalidParameter(format!(
                "not a probability vector (defect {d:e})"
            ))),
        }
    }

    /// Wraps candidate data without checking it; see [`validate_system`].
    pub fn from_raw(entries: Vec<f64>) -> Self {
        ProbabilityVector(entries)
    }

    pub fn uniform(n: usize) -> Self {
        ProbabilityVector(vec![1.0 / n as f64; n])
    }

    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        ProbabilityVector(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    fn defect(&self) -> f64 {
        let bounds = self
            .0
            .iter()
            .fold(0.0_f64, |acc, &p| acc.max(-p).max(p - 1.0));
        if self.0.iter().any(|p| !p.is_finite()) {
            return f64::INFINITY;
        }
        bounds.max((self.sum() - 1.0).abs())
    }
}

impl std::ops::Index<usize> for ProbabilityVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Column-stochastic matrix Γ(t) with Γ_ij(t) = p(i, t | j, 0).
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    entries: RMatrix,
    time: f64,
}

impl TransitionMatrix {
    pub fn new(entries: RMatrix, time: f64) -> Result<Self> {
        let m = Self::from_raw(entries, time)?;
        let mut violations = Vec::new();
        check_transition(&m, &mut violations);
        if violations.is_empty() {
            Ok(m)
        } else {
            Err(Error::InvalidSystem(ValidationReport { violations }))
        }
    }

    /// Only checks squareness.
    pub fn from_raw(entries: RMatrix, time: f64) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::shape(
                "square matrix",
                format!("{}×{}", entries.nrows(), entries.ncols()),
            ));
        }
        Ok(TransitionMatrix { entries, time })
    }

    pub fn identity(n: usize) -> Self {
        TransitionMatrix {
            entries: RMatrix::identity(n, n),
            time: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> RMatrix {
        self.entries
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn is_stochastic(&self) -> bool {
        let mut v = Vec::new();
        check_transition(self, &mut v);
        v.is_empty()
    }
}

/// Dense table of magnitudes a_i(t) over configurations × grid times.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomVariable {
    name: String,
    table: RMatrix,
}

impl RandomVariable {
    /// `table[(i, k)]` is the magnitude at configuration `i` and the `k`-th grid time.
    pub fn new(name: impl Into<String>, table: RMatrix) -> Self {
        RandomVariable {
            name: name.into(),
            table,
        }
    }

    pub fn constant(name: impl Into<String>, n: usize, grid_len: usize, c: f64) -> Self {
        Self::new(name, RMatrix::from_element(n, grid_len, c))
    }

    pub fn indicator(name: impl Into<String>, n: usize, grid_len: usize, i: usize) -> Self {
        let mut table = RMatrix::zeros(n, grid_len);
        table.row_mut(i).fill(1.0);
        Self::new(name, table)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn table(&self) -> &RMatrix {
        &self.table
    }

    pub fn magnitude(&self, i: usize, time_index: usize) -> f64 {
        self.table[(i, time_index)]
    }

    /// Magnitudes (a_1(t), …, a_N(t)) at one grid time.
    pub fn magnitudes_at(&self, time_index: usize) -> Vec<f64> {
        self.table.column(time_index).iter().copied().collect()
    }

    pub fn is_defined_on(&self, sys: &StochasticSystem) -> bool {
        self.table.shape() == (sys.n(), sys.grid().len())
    }
}

/// The data (configuration space, times, Γ, p, random variables) of a
/// generalized stochastic system.
#[derive(Clone, Debug)]
pub struct StochasticSystem {
    n: usize,
    grid: TimeGrid,
    transitions: Vec<TransitionMatrix>,
    p0: ProbabilityVector,
    variables: Vec<RandomVariable>,
}

impl StochasticSystem {
    /// Builds and validates a system.
    pub fn new(
        grid: TimeGrid,
        transitions: Vec<TransitionMatrix>,
        p0: ProbabilityVector,
        variables: Vec<RandomVariable>,
    ) -> Result<Self> {
        let sys = Self::from_parts(grid, transitions, p0, variables)?;
        let report = validate_system(&sys);
        if report.is_empty() {
            Ok(sys)
        } else {
            Err(Error::InvalidSystem(report))
        }
    }

    /// Structural assembly only: one square N×N matrix per grid time (in grid
    /// order, labels matching), p0 of length N, variables tabulated over
    /// N × |grid|. Probabilistic invariants are left to [`validate_system`].
    pub fn from_parts(
        grid: TimeGrid,
        transitions: Vec<TransitionMatrix>,
        p0: ProbabilityVector,
        variables: Vec<RandomVariable>,
    ) -> Result<Self> {
        let n = p0.len();
        if n == 0 {
            return Err(Error::InvalidParameter("configuration count must be positive".into()));
        }
        let cap = max_n();
        if n > cap {
            return Err(Error::TooLarge { n, cap });
        }
        if transitions.len() != grid.len() {
            return Err(Error::shape(
                format!("{} transition matrices", grid.len()),
                transitions.len(),
            ));
        }
        for (g, &t) in transitions.iter().zip(grid.times()) {
            if g.n() != n {
                return Err(Error::shape(format!("{n}×{n} at t={t}"), format!("{}×{}", g.n(), g.n())));
            }
            if g.time() != t {
                return Err(Error::shape(format!("label t={t}"), format!("label t={}", g.time())));
            }
        }
        for v in &variables {
            if v.table().shape() != (n, grid.len()) {
                return Err(Error::shape(
                    format!("variable `{}` over {}×{}", v.name(), n, grid.len()),
                    format!("{}×{}", v.table().nrows(), v.table().ncols()),
                ));
            }
        }
        Ok(StochasticSystem {
            n,
            grid,
            transitions,
            p0,
            variables,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn p0(&self) -> &ProbabilityVector {
        &self.p0
    }

    pub fn transitions(&self) -> &[TransitionMatrix] {
        &self.transitions
    }

    pub fn transition(&self, t: f64) -> Result<&TransitionMatrix> {
        Ok(&self.transitions[self.grid.index_of(t)?])
    }

    pub fn variables(&self) -> &[RandomVariable] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Result<&RandomVariable> {
        self.variables
            .iter()
            .find(|v| v.name() == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn with_variable(mut self, v: RandomVariable) -> Result<Self> {
        if !v.is_defined_on(&self) {
            return Err(Error::UnknownVariable(v.name().to_string()));
        }
        self.variables.push(v);
        Ok(self)
    }

    /// Replaces the transition at one grid index; for fault-injection in tests.
    #[doc(hidden)]
    pub fn replace_transition(&mut self, index: usize, m: RMatrix) {
        let t = self.transitions[index].time();
        self.transitions[index] = TransitionMatrix { entries: m, time: t };
    }
}

/// Which defining condition a violation breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    /// Γ(0) = 𝟙.
    InitialCondition,
    /// Σ_i Γ_ij(t) = 1.
    ColumnNormalization,
    /// 0 ≤ Γ_ij(t) ≤ 1.
    TransitionBounds,
    /// Σ_i p_i(0) = 1.
    ProbabilityNormalization,
    /// 0 ≤ p_i(0) ≤ 1.
    ProbabilityBounds,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::InitialCondition => "initial condition",
            Condition::ColumnNormalization => "column normalization",
            Condition::TransitionBounds => "transition entry bounds",
            Condition::ProbabilityNormalization => "probability normalization",
            Condition::ProbabilityBounds => "probability entry bounds",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub condition: Condition,
    pub location: String,
    pub magnitude: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}: magnitude {:e}",
            self.condition.name(),
            self.location,
            self.magnitude
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn first(&self, condition: Condition) -> Option<&Violation> {
        self.violations.iter().find(|v| v.condition == condition)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

fn check_transition(g: &TransitionMatrix, out: &mut Vec<Violation>) {
    let t = g.time();
    let m = g.matrix();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let x = m[(i, j)];
            let excess = if x.is_nan() { f64::INFINITY } else { (-x).max(x - 1.0) };
            if excess > ENTRY_TOL {
                out.push(Violation {
                    condition: Condition::TransitionBounds,
                    location: format!("Γ(t={t}) entry ({}, {})", i + 1, j + 1),
                    magnitude: excess,
                });
            }
        }
        let dev = (m.column(j).sum() - 1.0).abs();
        if !(dev <= STOCHASTIC_TOL) {
            out.push(Violation {
                condition: Condition::ColumnNormalization,
                location: format!("Γ(t={t}) column {}", j + 1),
                magnitude: dev,
            });
        }
    }
}

/// Checks every defining condition of a generalized stochastic system and
/// collects the violations. Never fails.
pub fn validate_system(sys: &StochasticSystem) -> ValidationReport {
    let mut violations = Vec::new();

    let g0 = &sys.transitions[sys.grid.zero_index()];
    let id = RMatrix::identity(sys.n, sys.n);
    let mut worst: Option<(usize, usize, f64)> = None;
    for j in 0..sys.n {
        for i in 0..sys.n {
            let d = (g0.matrix()[(i, j)] - id[(i, j)]).abs();
            if d != 0.0 && worst.is_none_or(|(_, _, w)| d > w || d.is_nan()) {
                worst = Some((i, j, d));
            }
        }
    }
    if let Some((i, j, d)) = worst {
        violations.push(Violation {
            condition: Condition::InitialCondition,
            location: format!("Γ(t=0) entry ({}, {})", i + 1, j + 1),
            magnitude: d,
        });
    }

    for g in &sys.transitions {
        check_transition(g, &mut violations);
    }

    for (i, &p) in sys.p0.as_slice().iter().enumerate() {
        let excess = if p.is_nan() { f64::INFINITY } else { (-p).max(p - 1.0) };
        if excess > ENTRY_TOL {
            violations.push(Violation {
                condition: Condition::ProbabilityBounds,
                location: format!("p(0) entry {}", i + 1),
                magnitude: excess,
            });
        }
    }
    let dev = (sys.p0.sum() - 1.0).abs();
    if !(dev <= NORMALIZATION_TOL) {
        violations.push(Violation {
            condition: Condition::ProbabilityNormalization,
            location: "p(0)".into(),
            magnitude: dev,
        });
    }

    ValidationReport { violations }
}

/// p(t) = Γ(t) p(0).
pub fn evolve_probabilities(sys: &StochasticSystem, t: f64) -> Result<ProbabilityVector> {
    let g = sys.transition(t)?.matrix();
    let p0 = nalgebra::DVector::from_column_slice(sys.p0.as_slice());
    let p = g * p0;
    Ok(ProbabilityVector(p.iter().copied().collect()))
}

/// ⟨A(t)⟩ = Σ_i a_i(t) p_i(t).
pub fn expectation(sys: &StochasticSystem, a: &RandomVariable, t: f64) -> Result<f64> {
    let k = sys.grid.index_of(t)?;
    if !a.is_defined_on(sys) {
        return Err(Error::UnknownVariable(a.name().to_string()));
    }
    let p = evolve_probabilities(sys, t)?;
    Ok((0..sys.n).map(|i| a.magnitude(i, k) * p[i]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(g1: &[f64], p0: Vec<f64>) -> StochasticSystem {
        let grid = TimeGrid::new(vec![0.0, 1.0]).unwrap();
        StochasticSystem::from_parts(
            grid,
            vec![
                TransitionMatrix::identity(2),
                TransitionMatrix::from_raw(RMatrix::from_row_slice(2, 2, g1), 1.0).unwrap(),
            ],
            ProbabilityVector::from_raw(p0),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn grid_requires_zero_and_order() {
        assert!(TimeGrid::new(vec![0.0, 1.0, 2.0]).is_ok());
        assert!(TimeGrid::new(vec![-1.0, 0.0]).is_ok());
        assert!(TimeGrid::new(vec![1.0, 2.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 2.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.0]).is_err());
        let g = TimeGrid::new(vec![-0.5, 0.0, 0.5]).unwrap();
        assert_eq!(g.zero_index(), 1);
        assert!(matches!(g.index_of(0.25), Err(Error::UnknownTime(_))));
    }

    #[test]
    fn identity_system_is_valid() {
        let sys = two_state(&[1.0, 0.0, 0.0, 1.0], vec![0.5, 0.5]);
        assert!(validate_system(&sys).is_empty());
    }

    #[test]
    fn off_diagonal_initial_condition_is_reported() {
        let grid = TimeGrid::new(vec![0.0]).unwrap();
        let g0 = RMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.1, 0.9]);
        let sys = StochasticSystem::from_parts(
            grid,
            vec![TransitionMatrix::from_raw(g0, 0.0).unwrap()],
            ProbabilityVector::uniform(2),
            vec![],
        )
        .unwrap();
        let report = validate_system(&sys);
        let v = report.first(Condition::InitialCondition).unwrap();
        assert!((v.magnitude - 0.1).abs() < 1e-15);
        assert!(report.first(Condition::ColumnNormalization).is_none());
    }

    #[test]
    fn short_column_is_reported() {
        let sys = two_state(&[0.5, 0.3, 0.4, 0.7], vec![0.5, 0.5]);
        let report = validate_system(&sys);
        assert_eq!(report.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.condition, Condition::ColumnNormalization);
        assert!((v.magnitude - 0.1).abs() < 1e-12);
        assert!(v.location.contains("column 1"));
    }

    #[test]
    fn bad_p0_is_reported() {
        let sys = two_state(&[1.0, 0.0, 0.0, 1.0], vec![1.2, -0.2]);
        let report = validate_system(&sys);
        assert!(report.first(Condition::ProbabilityBounds).is_some());
        assert!(report.first(Condition::ProbabilityNormalization).is_none());
    }

    #[test]
    fn evolve_at_zero_returns_p0() {
        let sys = two_state(&[0.9, 0.2, 0.1, 0.8], vec![0.3, 0.7]);
        assert_eq!(evolve_probabilities(&sys, 0.0).unwrap().as_slice(), &[0.3, 0.7]);
    }

    #[test]
    fn evolve_under_permutation_moves_basis_vector() {
        let sys = two_state(&[0.0, 1.0, 1.0, 0.0], vec![1.0, 0.0]);
        assert_eq!(evolve_probabilities(&sys, 1.0).unwrap().as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn unknown_time_is_an_error() {
        let sys = two_state(&[0.9, 0.2, 0.1, 0.8], vec![0.3, 0.7]);
        assert!(matches!(evolve_probabilities(&sys, 0.5), Err(Error::UnknownTime(t)) if t == 0.5));
    }

    #[test]
    fn expectation_of_constant_and_indicator() {
        let sys = two_state(&[0.9, 0.2, 0.1, 0.8], vec![0.3, 0.7]);
        let one = RandomVariable::constant("one", 2, 2, 1.0);
        let ind = RandomVariable::indicator("at2", 2, 2, 1);
        for &t in &[0.0, 1.0] {
            assert!((expectation(&sys, &one, t).unwrap() - 1.0).abs() < 1e-12);
            let p = evolve_probabilities(&sys, t).unwrap();
            assert_eq!(expectation(&sys, &ind, t).unwrap(), p[1]);
        }
        let foreign = RandomVariable::constant("x", 3, 2, 1.0);
        assert!(matches!(expectation(&sys, &foreign, 1.0), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn structural_mismatch_is_an_error() {
        let grid = TimeGrid::new(vec![0.0, 1.0]).unwrap();
        let r = StochasticSystem::from_parts(
            grid,
            vec![TransitionMatrix::identity(2)],
            ProbabilityVector::uniform(2),
            vec![],
        );
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}
