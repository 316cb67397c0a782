//! The JSON system document.
//!
//! ```json
//! {
//!   "n": 2,
//!   "times": [0.0, 0.5, 1.0],
//!   "gamma": { "0": [[1, 0], [0, 1]], "0.5": [[0.5, 0.5], [0.5, 0.5]], "1": [[0, 1], [1, 0]] },
//!   "p0": [1.0, 0.0],
//!   "variables": { "energy": { "0": [1.0, -1.0], "0.5": [1.0, -1.0], "1": [1.0, -1.0] } },
//!   "phases": { "0.5": [[0.0, 0.0], [0.0, 3.14159]] }
//! }
//! ```
//!
//! Matrices are row-major lists of rows. Map keys are decimal strings whose
//! parsed value must equal an entry of `times` exactly.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::RMatrix;
use crate::system::{validate_system, ProbabilityVector, RandomVariable, StochasticSystem, TimeGrid, TransitionMatrix};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemDocument {
    pub n: usize,
    pub times: Vec<f64>,
    pub gamma: BTreeMap<String, Vec<Vec<f64>>>,
    pub p0: Vec<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub variables: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub phases: BTreeMap<String, Vec<Vec<f64>>>,
}

/// A loaded document: the system and one phase matrix per grid time.
#[derive(Clone, Debug)]
pub struct LoadedSystem {
    pub system: StochasticSystem,
    pub phases: Option<Vec<RMatrix>>,
}

#[derive(Debug)]
pub enum LoadError {
    /// Unreadable or syntactically malformed input.
    Parse(String),
    /// Well-formed JSON that does not describe a valid system; one line per problem.
    Invalid(Vec<String>),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Parse(msg) => write!(f, "parse error: {msg}"),
            LoadError::Invalid(lines) => {
                for l in lines {
                    writeln!(f, "{l}")?;
                }
                Ok(())
            }
        }
    }
}

/// Canonical key for a time: the shortest decimal that round-trips.
pub fn time_key(t: f64) -> String {
    format!("{t}")
}

fn rows_to_matrix(rows: &[Vec<f64>], n: usize, what: &str, errors: &mut Vec<String>) -> Option<RMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        errors.push(format!("shape: {what} must be {n}×{n}"));
        return None;
    }
    Some(RMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Resolves every key of `map` against the grid; reports unparsable and
/// unknown keys.
fn resolve_keys<'a, V>(
    map: &'a BTreeMap<String, V>,
    grid: &TimeGrid,
    what: &str,
    errors: &mut Vec<String>,
) -> Vec<Option<&'a V>> {
    let mut slots = vec![None; grid.len()];
    for (key, value) in map {
        match key.trim().parse::<f64>() {
            Ok(t) => match grid.index_of(t) {
                Ok(k) => {
                    if slots[k].is_some() {
                        errors.push(format!("time key: {what} key \"{key}\" duplicates time {t}"));
                    }
                    slots[k] = Some(value);
                }
                Err(_) => errors.push(format!("time key: {what} key \"{key}\" is not in the times list")),
            },
            Err(_) => errors.push(format!("time key: {what} key \"{key}\" is not a decimal number")),
        }
    }
    slots
}

impl SystemDocument {
    pub fn parse(text: &str) -> Result<Self, LoadError> {
        serde_json::from_str(text).map_err(|e| {
            LoadError::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn load(path: &std::path::Path) -> Result<LoadedSystem, LoadError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LoadError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)?.to_system()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents always serialize");
        s.push('\n');
        s
    }

    /// Builds and validates the system.
    pub fn to_system(&self) -> Result<LoadedSystem, LoadError> {
        let n = self.n;
        let mut errors = Vec::new();
        if n == 0 {
            return Err(LoadError::Invalid(vec!["shape: n must be positive".into()]));
        }
        let grid = TimeGrid::new(self.times.clone())
            .map_err(|e| LoadError::Invalid(vec![format!("time grid: {e}")]))?;
        if self.p0.len() != n {
            errors.push(format!("shape: p0 has length {}, expected {n}", self.p0.len()));
        }

        let gamma_slots = resolve_keys(&self.gamma, &grid, "gamma", &mut errors);
        let mut transitions = Vec::with_capacity(grid.len());
        for (slot, &t) in gamma_slots.iter().zip(grid.times()) {
            match slot {
                None => errors.push(format!("missing transition: no gamma entry for time {t}")),
                Some(rows) => {
                    if let Some(m) = rows_to_matrix(rows, n, &format!("gamma[{t}]"), &mut errors) {
                        transitions.push(TransitionMatrix::from_raw(m, t).expect("square by construction"));
                    }
                }
            }
        }

        let mut variables = Vec::new();
        for (name, table) in &self.variables {
            let slots = resolve_keys(table, &grid, &format!("variable `{name}`"), &mut errors);
            let mut m = RMatrix::zeros(n, grid.len());
            for (k, slot) in slots.iter().enumerate() {
                match slot {
                    Some(v) if v.len() == n => m.column_mut(k).copy_from_slice(v),
                    Some(_) => errors.push(format!("shape: variable `{name}` at time {} needs {n} values", grid.times()[k])),
                    None => errors.push(format!("missing magnitude: variable `{name}` undefined at time {}", grid.times()[k])),
                }
            }
            variables.push(RandomVariable::new(name.clone(), m));
        }

        let phases = if self.phases.is_empty() {
            None
        } else {
            let slots = resolve_keys(&self.phases, &grid, "phases", &mut errors);
            let mut out = Vec::with_capacity(grid.len());
            for (slot, &t) in slots.iter().zip(grid.times()) {
                let m = match slot {
                    Some(rows) => rows_to_matrix(rows, n, &format!("phases[{t}]"), &mut errors)
                        .unwrap_or_else(|| RMatrix::zeros(n, n)),
                    None => RMatrix::zeros(n, n),
                };
                if t == 0.0 && m.iter().any(|&x| x != 0.0) {
                    errors.push("phases: nonzero phases at time 0".into());
                }
                out.push(m);
            }
            Some(out)
        };

        if !errors.is_empty() {
            return Err(LoadError::Invalid(errors));
        }
        let system = StochasticSystem::from_parts(grid, transitions, ProbabilityVector::from_raw(self.p0.clone()), variables)
            .map_err(|e| LoadError::Invalid(vec![e.to_string()]))?;
        let report = validate_system(&system);
        if !report.is_empty() {
            return Err(LoadError::Invalid(report.violations.iter().map(|v| v.to_string()).collect()));
        }
        Ok(LoadedSystem { system, phases })
    }

    pub fn from_system(sys: &StochasticSystem) -> Self {
        let n = sys.n();
        let matrix_rows = |m: &RMatrix| (0..n).map(|i| m.row(i).iter().copied().collect()).collect();
        let gamma = sys
            .transitions()
            .iter()
            .map(|g| (time_key(g.time()), matrix_rows(g.matrix())))
            .collect();
        let variables = sys
            .variables()
            .iter()
            .map(|v| {
                let table = sys
                    .grid()
                    .times()
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| (time_key(t), v.magnitudes_at(k)))
                    .collect();
                (v.name().to_string(), table)
            })
            .collect();
        SystemDocument {
            n,
            times: sys.grid().times().to_vec(),
            gamma,
            p0: sys.p0().as_slice().to_vec(),
            variables,
            phases: BTreeMap::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const VALID: &str = r#"{
        "n": 2,
        "times": [0, 0.5, 1],
        "gamma": {"0": [[1, 0], [0, 1]], "0.5": [[0.5, 0.5], [0.5, 0.5]], "1": [[0, 1], [1, 0]]},
        "p0": [1, 0],
        "variables": {"s": {"0": [1, -1], "0.5": [1, -1], "1": [1, -1]}}
    }"#;

    #[test]
    fn loads_valid_document() {
        let loaded = SystemDocument::parse(VALID).unwrap().to_system().unwrap();
        assert_eq!(loaded.system.n(), 2);
        assert_eq!(loaded.system.variables().len(), 1);
        assert!(loaded.phases.is_none());
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = SystemDocument::parse("{\n  \"n\": 2,\n  oops }").unwrap_err();
        match err {
            LoadError::Parse(msg) => assert!(msg.contains("line 3"), "{msg}"),
            _ => panic!("expected a parse error"),
        }
    }

    #[test]
    fn missing_and_unknown_keys_are_reported() {
        let text = VALID.replace("\"0.5\": [[0.5, 0.5], [0.5, 0.5]]", "\"0.25\": [[0.5, 0.5], [0.5, 0.5]]");
        let err = SystemDocument::parse(&text).unwrap().to_system().unwrap_err();
        let LoadError::Invalid(lines) = err else { panic!() };
        assert!(lines.iter().any(|l| l.contains("not in the times list")));
        assert!(lines.iter().any(|l| l.starts_with("missing transition")));
    }

    #[test]
    fn initial_condition_violation_is_named() {
        let text = VALID.replace("\"0\": [[1, 0], [0, 1]]", "\"0\": [[0.9, 0], [0.1, 1]]");
        let LoadError::Invalid(lines) = SystemDocument::parse(&text).unwrap().to_system().unwrap_err() else {
            panic!()
        };
        assert!(lines.iter().any(|l| l.starts_with("initial condition")));
    }

    #[test]
    fn exact_key_matching() {
        // "0.50" parses to the same value as 0.5 and is accepted.
        let text = VALID.replace("\"0.5\":", "\"0.50\":");
        assert!(SystemDocument::parse(&text).unwrap().to_system().is_ok());
    }

    #[test]
    fn document_round_trip() {
        let loaded = SystemDocument::parse(VALID).unwrap().to_system().unwrap();
        let doc = SystemDocument::from_system(&loaded.system);
        let again = SystemDocument::parse(&doc.to_json()).unwrap();
        assert_eq!(doc, again);
    }
}
