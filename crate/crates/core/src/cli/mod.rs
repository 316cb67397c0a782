//! Command-line front end.
//!
//! Exit codes: 0 success, 1 parse error, 2 validation or usage error,
//! 3 numerical-tolerance failure.

pub mod document;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand};

use crate::analysis::{self, Verdict};
use crate::dilation::{self, DilatedSystem, MARGINALIZATION_TOL};
use crate::generators::{self, PermutationSpec};
use crate::linalg::RMatrix;
use crate::system::{self, evolve_probabilities, ProbabilityVector, StochasticSystem, TimeGrid, TransitionMatrix};

pub use document::{LoadError, LoadedSystem, SystemDocument};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;

/// Tolerance on every defect reported by `dilate`.
pub const DILATION_TOL: f64 = 1e-10;
/// Markov residual at or below which a chain counts as Markovian.
pub const MARKOV_TOL: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(name = "unistoq", version, about = "Stochastic systems, their Hilbert-space form, and unistochastic dilations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a system document; prints OK or one line per violation.
    Validate { path: PathBuf },
    /// Tabulate p(t) = Γ(t) p(0) over the grid.
    Evolve {
        path: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Build the unitary dilation and check that the system is its subsystem.
    Dilate {
        path: PathBuf,
        /// Directory for the per-time CSV files and report.txt.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the report to stdout.
        #[arg(long)]
        report: bool,
    },
    /// Markov, divisibility and unistochasticity diagnostics.
    Analyze {
        path: PathBuf,
        /// Compare Γ(n·dt) against Γ(dt)ⁿ.
        #[arg(long, value_name = "DT")]
        markov: Vec<f64>,
        /// Search for column-stochastic X with Γ(t) = X Γ(t′).
        #[arg(long, value_name = "T,TPRIME", value_parser = parse_time_pair)]
        divisibility: Vec<(f64, f64)>,
        /// Classify Γ(t) as unistochastic or not.
        #[arg(long, value_name = "T")]
        unistochastic: Vec<f64>,
    },
    /// Write a system document built by one of the generators.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
}

#[derive(Subcommand, Debug)]
enum GenerateKind {
    /// Γ(t) = |Σ^{t/dt}|² for a permutation Σ given by 1-based cycles.
    Permutation {
        /// e.g. "(1 2)(3 4 5)"
        #[arg(long)]
        cycles: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
        #[arg(long, default_value = "0,1")]
        times: String,
        /// Defaults to the first basis vector.
        #[arg(long)]
        p0: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Γ(k·dt) = Γ(dt)^k.
    MarkovChain {
        /// Row-major Γ(dt), rows separated by ';', e.g. "0.9,0.2;0.1,0.8".
        #[arg(long)]
        gamma: String,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
        /// Defaults to uniform.
        #[arg(long)]
        p0: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded finite random dynamical system.
    Rds {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 6)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "0,1,2,3")]
        times: String,
        #[arg(long)]
        p0: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded random system with positive column-stochastic Γ(t).
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "0,1,2,3")]
        times: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_time_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected T,TPRIME")?;
    let a = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    Ok((a, b))
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Validate { path } => cmd_validate(&path),
        Command::Evolve { path, csv } => cmd_evolve(&path, csv.as_deref()),
        Command::Dilate { path, out, report } => cmd_dilate(&path, out.as_deref(), report),
        Command::Analyze {
            path,
            markov,
            divisibility,
            unistochastic,
        } => cmd_analyze(&path, &markov, &divisibility, &unistochastic),
        Command::Generate { kind } => cmd_generate(kind),
    }
}

fn load(path: &Path) -> Result<LoadedSystem, i32> {
    SystemDocument::load(path).map_err(|e| match e {
        LoadError::Parse(msg) => {
            eprintln!("{}: parse error: {msg}", path.display());
            EXIT_PARSE
        }
        LoadError::Invalid(lines) => {
            for l in lines {
                eprintln!("{}: {l}", path.display());
            }
            EXIT_INVALID
        }
    })
}

pub fn cmd_validate(path: &Path) -> i32 {
    match load(path) {
        Ok(_) => {
            println!("OK");
            EXIT_OK
        }
        Err(code) => code,
    }
}

pub fn cmd_evolve(path: &Path, csv: Option<&Path>) -> i32 {
    let loaded = match load(path) {
        Ok(l) => l,
        Err(code) => return code,
    };
    let sys = &loaded.system;
    let rows: Vec<(f64, Vec<f64>)> = sys
        .grid()
        .times()
        .iter()
        .map(|&t| (t, evolve_probabilities(sys, t).expect("grid time").into_vec()))
        .collect();
    let text = output::probability_table(rows.iter().map(|(t, p)| (*t, p.as_slice())), sys.n());
    emit(csv, &text)
}

fn emit(path: Option<&Path>, text: &str) -> i32 {
    match path {
        Some(p) => match output::write_atomic(p, text) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("{}: {e}", p.display());
                EXIT_INVALID
            }
        },
        None => {
            print!("{text}");
            EXIT_OK
        }
    }
}

/// Defects of a dilation against its source system.
#[derive(Clone, Copy, Debug)]
pub struct DilationCheck {
    pub unitarity: f64,
    pub double_stochasticity: f64,
    pub marginalization: f64,
}

impl DilationCheck {
    pub fn of(d: &DilatedSystem, sys: &StochasticSystem) -> Self {
        DilationCheck {
            unitarity: d.max_unitarity_defect(),
            double_stochasticity: d.max_doubly_stochastic_defect(),
            marginalization: dilation::verify_marginalization(d, sys).expect("built from sys"),
        }
    }

    pub fn passes(&self) -> bool {
        self.unitarity <= DILATION_TOL
            && self.double_stochasticity <= DILATION_TOL
            && self.marginalization <= MARGINALIZATION_TOL
    }
}

fn dilation_report(d: &DilatedSystem, check: &DilationCheck) -> String {
    let mut r = String::new();
    r.push_str(&format!("configurations: {}\n", d.n()));
    r.push_str(&format!("ancilla dimension: {}\n", d.ancilla_dim()));
    r.push_str(&format!("dilated dimension: {}\n", d.total_dim()));
    r.push_str(&format!("grid times: {}\n", d.grid().len()));
    r.push_str(&format!("unitarity defect: {:e} (tolerance {DILATION_TOL:e})\n", check.unitarity));
    r.push_str(&format!(
        "double-stochasticity defect: {:e} (tolerance {DILATION_TOL:e})\n",
        check.double_stochasticity
    ));
    r.push_str(&format!(
        "marginalization residual: {:e} (tolerance {MARGINALIZATION_TOL:e})\n",
        check.marginalization
    ));
    r.push_str(&format!(
        "SUBSYSTEM-OF-UNISTOCHASTIC: {}\n",
        if check.passes() { "PASS" } else { "FAIL" }
    ));
    r
}

fn write_dilation_files(dir: &Path, d: &DilatedSystem, report: &str) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut index = String::from("index,time\n");
    for (k, &t) in d.grid().times().iter().enumerate() {
        index.push_str(&format!("{k},{}\n", output::fmt_value(t)));
        output::write_atomic(&dir.join(format!("unitary_{k}.csv")), &output::complex_matrix(d.unitaries()[k].matrix()))?;
        output::write_atomic(&dir.join(format!("gamma_tilde_{k}.csv")), &output::real_matrix(&d.transitions()[k]))?;
    }
    output::write_atomic(&dir.join("times.csv"), &index)?;
    let rows: Vec<(f64, &[f64])> = d
        .grid()
        .times()
        .iter()
        .map(|&t| (t, d.p_tilde(t).expect("grid time")))
        .collect();
    output::write_atomic(&dir.join("p_tilde.csv"), &output::probability_table(rows.into_iter(), d.total_dim()))?;
    output::write_atomic(&dir.join("report.txt"), report)
}

pub fn cmd_dilate(path: &Path, out: Option<&Path>, print_report: bool) -> i32 {
    let loaded = match load(path) {
        Ok(l) => l,
        Err(code) => return code,
    };
    let sys = &loaded.system;
    let cap = system::max_dilation_n();
    if sys.n() > cap {
        eprintln!("{}: N = {} exceeds the dilation cap of {cap}", path.display(), sys.n());
        return EXIT_INVALID;
    }
    let d = match dilation::assemble_dilation(sys, loaded.phases.as_deref()) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("{}: dilation failed: {e}", path.display());
            return EXIT_TOLERANCE;
        }
    };
    let check = DilationCheck::of(&d, sys);
    let report = dilation_report(&d, &check);
    if let Some(dir) = out {
        if let Err(e) = write_dilation_files(dir, &d, &report) {
            eprintln!("{}: {e}", dir.display());
            return EXIT_INVALID;
        }
    }
    if print_report || out.is_none() {
        print!("{report}");
    } else {
        println!(
            "SUBSYSTEM-OF-UNISTOCHASTIC: {}",
            if check.passes() { "PASS" } else { "FAIL" }
        );
    }
    if check.passes() {
        EXIT_OK
    } else {
        EXIT_TOLERANCE
    }
}

fn matrix_lines(m: &RMatrix) -> String {
    m.row_iter()
        .map(|r| format!("  [{}]\n", r.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ")))
        .collect()
}

fn unistochastic_line(g: &TransitionMatrix) -> String {
    let m = g.matrix();
    if !analysis::is_doubly_stochastic(m) {
        return "NO (not doubly stochastic)".into();
    }
    match m.nrows() {
        1 => "YES (1×1)".into(),
        2 => match analysis::unistochastic_witness_2x2(m) {
            Ok(_) => "YES (2×2 formula)".into(),
            Err(e) => format!("ERROR ({e})"),
        },
        3 => match analysis::unistochastic_verdict_3x3(m) {
            Ok(r) if r.verdict == Verdict::No => "NO (3×3 criterion)".into(),
            Ok(r) => format!("YES (3×3 criterion, witness defect {:e})", r.defect),
            Err(e) => format!("ERROR ({e})"),
        },
        _ => match analysis::search_unistochastic(m, analysis::DEFAULT_RESTARTS, analysis::DEFAULT_MAX_ITER, 0) {
            Ok(r) if r.verdict == Verdict::Yes => {
                format!("YES (witness found, defect {:e})", r.defect)
            }
            Ok(r) => format!("UNKNOWN (best defect {:e})", r.defect),
            Err(e) => format!("ERROR ({e})"),
        },
    }
}

pub fn cmd_analyze(path: &Path, markov: &[f64], divisibility: &[(f64, f64)], unistochastic: &[f64]) -> i32 {
    let loaded = match load(path) {
        Ok(l) => l,
        Err(code) => return code,
    };
    let sys = &loaded.system;
    let unknown = |t: f64| {
        eprintln!("{}: time {t} is not a grid point", path.display());
        EXIT_INVALID
    };
    let mut out = String::new();

    for &dt in markov {
        let report = match analysis::check_markov_chain(sys, dt) {
            Ok(r) => r,
            Err(crate::Error::UnknownTime(t)) => return unknown(t),
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                return EXIT_INVALID;
            }
        };
        let worst = report.iter().map(|&(_, r)| r).fold(0.0, f64::max);
        for (n, r) in &report {
            out.push_str(&format!("markov dt={dt} n={n}: residual {r:e}\n"));
        }
        out.push_str(&format!(
            "markov dt={dt}: {} (max residual {worst:e})\n",
            if worst <= MARKOV_TOL { "MARKOV" } else { "NOT MARKOV" }
        ));
    }

    for &(t, tp) in divisibility {
        let (g_t, g_tp) = match (sys.transition(t), sys.transition(tp)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(_), _) => return unknown(t),
            (_, Err(_)) => return unknown(tp),
        };
        let r = analysis::solve_divisibility(g_t, g_tp).expect("same dimensions");
        out.push_str(&format!(
            "divisibility t={t} t'={tp}: {}, residual {:e} ({} iterations)\n",
            if r.feasible { "FEASIBLE" } else { "INFEASIBLE" },
            r.residual,
            r.iterations
        ));
        out.push_str("witness:\n");
        out.push_str(&matrix_lines(&r.witness));
    }

    for &t in unistochastic {
        match sys.transition(t) {
            Ok(g) => {
                out.push_str(&format!("unistochastic: {} at t={t}\n", unistochastic_line(g)));
            }
            Err(_) => return unknown(t),
        }
    }
    print!("{out}");
    EXIT_OK
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect()
}

fn parse_cycles(s: &str) -> Result<Vec<Vec<usize>>, String> {
    let mut cycles = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let body = rest.strip_prefix('(').ok_or_else(|| format!("expected '(' in `{s}`"))?;
        let close = body.find(')').ok_or_else(|| format!("unclosed cycle in `{s}`"))?;
        let cycle = body[..close]
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|x| !x.is_empty())
            .map(|x| match x.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(format!("`{x}` is not a 1-based index")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        cycles.push(cycle);
        rest = body[close + 1..].trim_start();
    }
    Ok(cycles)
}

fn parse_matrix(s: &str) -> Result<RMatrix, String> {
    let rows: Vec<Vec<f64>> = s.split(';').map(parse_list).collect::<Result<_, _>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(format!("matrix `{s}` is not square"));
    }
    Ok(RMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn parse_p0(s: Option<&str>, n: usize, default: ProbabilityVector) -> Result<ProbabilityVector, String> {
    match s {
        None => Ok(default),
        Some(s) => {
            let v = parse_list(s)?;
            if v.len() != n {
                return Err(format!("p0 needs {n} entries"));
            }
            ProbabilityVector::new(v).map_err(|e| e.to_string())
        }
    }
}

fn generate_system(kind: &GenerateKind) -> Result<StochasticSystem, String> {
    let grid = |s: &str| TimeGrid::new(parse_list(s)?).map_err(|e| e.to_string());
    match kind {
        GenerateKind::Permutation { cycles, n, dt, times, p0, .. } => {
            let cycles = parse_cycles(cycles)?;
            let size = n.unwrap_or_else(|| cycles.iter().flatten().map(|&i| i + 1).max().unwrap_or(1));
            let spec = PermutationSpec::new(size, cycles).map_err(|e| e.to_string())?;
            let p0 = parse_p0(p0.as_deref(), size, ProbabilityVector::basis(size, 0))?;
            generators::permutation_unistochastic_system(&spec, &grid(times)?, *dt, p0).map_err(|e| e.to_string())
        }
        GenerateKind::MarkovChain { gamma, steps, dt, p0, .. } => {
            let m = parse_matrix(gamma)?;
            let n = m.nrows();
            let g = TransitionMatrix::new(m, *dt).map_err(|e| e.to_string())?;
            let p0 = parse_p0(p0.as_deref(), n, ProbabilityVector::uniform(n))?;
            generators::markov_chain_system(&g, *steps, p0).map_err(|e| e.to_string())
        }
        GenerateKind::Rds { n, samples, seed, times, p0, .. } => {
            let r = generators::random_finite_rds(*n, &grid(times)?, *samples, *seed).map_err(|e| e.to_string())?;
            let p0 = parse_p0(p0.as_deref(), *n, ProbabilityVector::uniform(*n))?;
            generators::rds_to_stochastic_system(&r, p0).map_err(|e| e.to_string())
        }
        GenerateKind::Random { n, seed, times, .. } => {
            generators::random_stochastic_system(*n, &grid(times)?, *seed).map_err(|e| e.to_string())
        }
    }
}

fn cmd_generate(kind: GenerateKind) -> i32 {
    let out = match &kind {
        GenerateKind::Permutation { out, .. }
        | GenerateKind::MarkovChain { out, .. }
        | GenerateKind::Rds { out, .. }
        | GenerateKind::Random { out, .. } => out.clone(),
    };
    match generate_system(&kind) {
        Ok(sys) => emit(out.as_deref(), &SystemDocument::from_system(&sys).to_json()),
        Err(msg) => {
            eprintln!("generate: {msg}");
            let mut cmd = Cli::command();
            if let Some(g) = cmd.find_subcommand_mut("generate") {
                eprintln!("{}", g.render_usage());
            }
            EXIT_INVALID
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycles_parse() {
        assert_eq!(parse_cycles("(1 2)(3 4 5)").unwrap(), vec![vec![0, 1], vec![2, 3, 4]]);
        assert_eq!(parse_cycles(" (1,3) ").unwrap(), vec![vec![0, 2]]);
        assert!(parse_cycles("(0 1)").is_err());
        assert!(parse_cycles("(1 2").is_err());
        assert!(parse_cycles("1 2").is_err());
    }

    #[test]
    fn matrices_parse() {
        let m = parse_matrix("0.9,0.2;0.1,0.8").unwrap();
        assert_eq!(m[(0, 1)], 0.2);
        assert_eq!(m[(1, 0)], 0.1);
        assert!(parse_matrix("1,0;0").is_err());
    }

    #[test]
    fn time_pairs_parse() {
        assert_eq!(parse_time_pair("1,0.5").unwrap(), (1.0, 0.5));
        assert!(parse_time_pair("1").is_err());
    }
}
