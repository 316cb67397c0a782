//! Property tests for the invariants each module promises.

use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use unistoq::analysis::{
    is_doubly_stochastic, search_unistochastic, solve_divisibility, unistochastic_verdict_3x3,
    unistochastic_witness_2x2, Verdict, DEFAULT_MAX_ITER, DEFAULT_RESTARTS, WITNESS_TOL,
};
use unistoq::dilation::{anchored_indices, assemble_dilation, dilated_dictionary_probability, verify_marginalization};
use unistoq::generators::{
    markov_chain_system, permutation_power_interpolation, random_finite_rds, random_phases, random_stochastic_system,
    rds_to_stochastic_system, PermutationSpec,
};
use unistoq::hilbert::{
    apply_channel, born_probability, build_evolution_operator, dictionary_probability, evolve_density,
    initial_density, kraus_from_evolution, DensityMatrix,
};
use unistoq::linalg::{self, CMatrix, RMatrix};
use unistoq::{
    evolve_probabilities, expectation, ProbabilityVector, RandomVariable, StochasticSystem, TimeGrid, TransitionMatrix,
};

fn grid(len: usize) -> TimeGrid {
    TimeGrid::new((0..len).map(|k| k as f64 * 0.5).collect()).unwrap()
}

fn system(n: usize, len: usize, seed: u64) -> StochasticSystem {
    random_stochastic_system(n, &grid(len), seed).unwrap()
}

fn distribution(raw: &[f64]) -> ProbabilityVector {
    let total: f64 = raw.iter().sum();
    ProbabilityVector::from_raw(raw.iter().map(|x| x / total).collect())
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Random unitary: polar factor of a matrix with uniform entries.
fn random_unitary(n: usize, entries: &[(f64, f64)]) -> CMatrix {
    let x = CMatrix::from_fn(n, n, |i, j| {
        let (re, im) = entries[i * n + j];
        Complex64::new(re, im)
    });
    linalg::polar_unitary(&x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolution_is_normalized(n in 1usize..8, len in 1usize..6, seed in any::<u64>()) {
        let sys = system(n, len, seed);
        for &t in sys.grid().times() {
            assert_abs_diff_eq!(evolve_probabilities(&sys, t).unwrap().sum(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn evolution_is_linear_in_p0(
        seed in any::<u64>(),
        alpha in 0.0f64..=1.0,
        p in prop::collection::vec(0.01f64..1.0, 4),
        q in prop::collection::vec(0.01f64..1.0, 4),
    ) {
        let base = system(4, 4, seed);
        let (p, q) = (distribution(&p), distribution(&q));
        let mix = ProbabilityVector::from_raw((0..4).map(|i| alpha * p[i] + (1.0 - alpha) * q[i]).collect());
        let with = |p0: ProbabilityVector| {
            StochasticSystem::new(base.grid().clone(), base.transitions().to_vec(), p0, vec![]).unwrap()
        };
        let (sp, sq, sm) = (with(p), with(q), with(mix));
        for &t in base.grid().times() {
            let (a, b, c) = (
                evolve_probabilities(&sp, t).unwrap(),
                evolve_probabilities(&sq, t).unwrap(),
                evolve_probabilities(&sm, t).unwrap(),
            );
            for i in 0..4 {
                assert_abs_diff_eq!(c[i], alpha * a[i] + (1.0 - alpha) * b[i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn constant_one_has_unit_expectation(n in 1usize..8, seed in any::<u64>()) {
        let sys = system(n, 5, seed);
        let one = RandomVariable::constant("one", n, 5, 1.0);
        for &t in sys.grid().times() {
            assert_abs_diff_eq!(expectation(&sys, &one, t).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn hilbert_identities(n in 1usize..6, seed in any::<u64>(), diag in prop::collection::vec(-1.0f64..1.0, 6)) {
        let sys = system(n, 3, seed);
        let rho0 = initial_density(sys.p0());
        for (k, g) in sys.transitions().iter().enumerate() {
            let phases = (g.time() != 0.0).then(|| random_phases(n, seed ^ k as u64));
            let theta = build_evolution_operator(g, phases.as_ref()).unwrap();
            let kraus = kraus_from_evolution(&theta);
            let rho = evolve_density(&theta, &rho0).unwrap();
            let p = evolve_probabilities(&sys, g.time()).unwrap();
            for i in 0..n {
                assert_abs_diff_eq!(born_probability(&rho, i).unwrap(), p[i], epsilon = 1e-12);
                for j in 0..n {
                    let modulus = theta.matrix()[(i, j)].norm_sqr();
                    assert_abs_diff_eq!(dictionary_probability(&theta, i, j).unwrap(), modulus, epsilon = 1e-13);
                    assert_abs_diff_eq!(kraus.dictionary_probability(i, j).unwrap(), g.matrix()[(i, j)], epsilon = 1e-12);
                }
            }
            let d = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| Complex64::new(diag[i], 0.0)));
            let conj = theta.matrix() * &d * theta.matrix().adjoint();
            prop_assert!(max_abs(&(apply_channel(&kraus, &d).unwrap() - conj)) <= 1e-12);
        }
    }

    #[test]
    fn density_evolution_is_linear(
        seed in any::<u64>(),
        alpha in 0.0f64..=1.0,
        p in prop::collection::vec(0.01f64..1.0, 3),
        q in prop::collection::vec(0.01f64..1.0, 3),
    ) {
        let sys = system(3, 2, seed);
        let theta = build_evolution_operator(&sys.transitions()[1], Some(&random_phases(3, seed))).unwrap();
        let (d1, d2) = (initial_density(&distribution(&p)), initial_density(&distribution(&q)));
        let mixed = DensityMatrix::from_matrix(
            d1.matrix() * Complex64::new(alpha, 0.0) + d2.matrix() * Complex64::new(1.0 - alpha, 0.0),
            0.0,
        ).unwrap();
        let lhs = evolve_density(&theta, &mixed).unwrap();
        let rhs = evolve_density(&theta, &d1).unwrap().matrix() * Complex64::new(alpha, 0.0)
            + evolve_density(&theta, &d2).unwrap().matrix() * Complex64::new(1.0 - alpha, 0.0);
        prop_assert!(max_abs(&(lhs.matrix() - rhs)) <= 1e-12);
    }

    #[test]
    fn unitary_moduli_are_doubly_stochastic(
        n in 1usize..7,
        entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 36),
    ) {
        let u = random_unitary(n, &entries);
        prop_assert!(is_doubly_stochastic(&linalg::modulus_squared(&u)));
    }

    #[test]
    fn two_by_two_witness_is_unitary(x in 0.0f64..=1.0) {
        let m = RMatrix::from_row_slice(2, 2, &[x, 1.0 - x, 1.0 - x, x]);
        let u = unistochastic_witness_2x2(&m).unwrap();
        let id = CMatrix::identity(2, 2);
        prop_assert!(max_abs(&(u.adjoint() * &u - &id)) <= 1e-15);
        prop_assert!(max_abs(&(&u * u.adjoint() - id)) <= 1e-15);
    }

    #[test]
    fn permutation_interpolants_form_a_group(
        image in Just((0..5).collect::<Vec<usize>>()).prop_shuffle(),
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
    ) {
        let p = PermutationSpec::from_images(&image).unwrap();
        let dt = 0.5;
        let ua = permutation_power_interpolation(&p, a, dt).unwrap();
        let ub = permutation_power_interpolation(&p, b, dt).unwrap();
        let uab = permutation_power_interpolation(&p, a + b, dt).unwrap();
        prop_assert!(max_abs(&(&ua * &ub - &uab)) <= 1e-10);
        prop_assert!(linalg::doubly_stochastic_defect(&linalg::modulus_squared(&uab)) <= 1e-10);
    }

    #[test]
    fn rds_is_identity_at_zero(n in 1usize..5, samples in 1usize..13, seed in any::<u64>()) {
        let g = TimeGrid::new(vec![-1.0, 0.0, 1.0, 2.0]).unwrap();
        let r = random_finite_rds(n, &g, samples, seed).unwrap();
        let sys = rds_to_stochastic_system(&r, ProbabilityVector::uniform(n)).unwrap();
        prop_assert_eq!(sys.transition(0.0).unwrap().matrix(), &RMatrix::identity(n, n));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_trace_is_monotone(seed in any::<u64>()) {
        let sys = system(3, 3, seed);
        let r = solve_divisibility(&sys.transitions()[2], &sys.transitions()[1]).unwrap();
        prop_assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn markov_chains_are_divisible(entries in prop::collection::vec(0.0f64..1.0, 9)) {
        let mut m = RMatrix::from_row_slice(3, 3, &entries);
        for j in 0..3 {
            m[(j, j)] += 3.0;
            let total = m.column(j).sum();
            m.column_mut(j).iter_mut().for_each(|x| *x /= total);
        }
        let sys = markov_chain_system(&TransitionMatrix::new(m, 1.0).unwrap(), 3, ProbabilityVector::uniform(3)).unwrap();
        for k in 0..3 {
            let r = solve_divisibility(&sys.transitions()[k + 1], &sys.transitions()[k]).unwrap();
            prop_assert!(r.feasible && r.residual <= 1e-6, "step {}: residual {}", k, r.residual);
        }
    }

    #[test]
    fn verdict_and_search_agree(entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9)) {
        let m = linalg::modulus_squared(&random_unitary(3, &entries));
        let verdict = unistochastic_verdict_3x3(&m).unwrap();
        prop_assert_eq!(verdict.verdict, Verdict::Yes);
        let search = search_unistochastic(&m, DEFAULT_RESTARTS, DEFAULT_MAX_ITER, 0).unwrap();
        prop_assert_eq!(search.verdict, Verdict::Yes, "defect {}", search.defect);
        prop_assert!(search.defect <= WITNESS_TOL);
    }

    #[test]
    fn dilation_marginalizes(n in 1usize..5, len in 1usize..5, seed in any::<u64>()) {
        let sys = system(n, len, seed);
        let d = assemble_dilation(&sys, None).unwrap();
        prop_assert_eq!(d.total_dim(), n * n * n);
        prop_assert_eq!(d.ancilla_dim(), n * n);
        prop_assert!(verify_marginalization(&d, &sys).unwrap() <= 1e-10);
        for (k, u) in d.unitaries().iter().enumerate() {
            let gt = &d.transitions()[k];
            prop_assert!(is_doubly_stochastic(gt));
            prop_assert!(linalg::max_abs_diff(gt, &linalg::modulus_squared(u.matrix())) <= 1e-13);
            // Zero phases give real Θ, so the completion stays real.
            prop_assert!(linalg::max_abs_imag(u.matrix()) <= 1e-14);
            for i in 0..n {
                for j in 0..n {
                    let values: Vec<f64> = anchored_indices(n, j)
                        .map(|jp| dilated_dictionary_probability(u, i, j, jp).unwrap())
                        .collect();
                    let spread = values.iter().cloned().fold(f64::MIN, f64::max)
                        - values.iter().cloned().fold(f64::MAX, f64::min);
                    prop_assert!(spread <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn largest_supported_dilation() {
    // N = 8 with 16 grid times is the top of the supported range.
    let sys = system(8, 16, 99);
    let d = assemble_dilation(&sys, None).unwrap();
    assert!(verify_marginalization(&d, &sys).unwrap() <= 1e-10);
    assert!(d.max_unitarity_defect() <= 1e-10);
}
