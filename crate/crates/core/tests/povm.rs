use collapse_core::hilbert::{c, CMatrix, CVector, SpaceSpec, StateVector};
use collapse_core::measurement::Experiment;
use collapse_core::models::desk;
use collapse_core::povm::{
    pvm_check, reconstruct_effects, reproducibility_test, validate_povm, FnFunctional, QuadraticFunctional,
};
use collapse_core::{EffectSet, Label};
use proptest::collection::vec;
use proptest::prelude::*;

/// `B B^dagger / Tr(B B^dagger)`: Hermitian with spectrum in `[0, 1]`.
fn random_effect(d: usize, parts: &[f64]) -> CMatrix {
    let b = CMatrix::from_iterator(d, d, parts.chunks(2).map(|p| c(p[0], p[1])));
    let k = &b * b.adjoint();
    let tr = k.trace().re;
    k.unscale(tr.max(1e-300))
}

fn dim_and_parts(n: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..=4).prop_flat_map(move |d| (Just(d), vec(-1.0..1.0f64, n * 2 * d * d)))
}

fn quadratic(psi: &CVector, k: &CMatrix) -> f64 {
    psi.dotc(&(k * psi)).re
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn quadratic_functional_is_recovered((d, parts) in dim_and_parts(1)) {
        let k = random_effect(d, &parts);
        let f = QuadraticFunctional::with_complement(k.clone()).unwrap();
        let e = reconstruct_effects(&f).unwrap();
        prop_assert!((&e.effects[0] - &k).camax() <= 1e-10);
        prop_assert!((&e.effects[1] - (CMatrix::identity(d, d) - &k)).camax() <= 1e-10);
    }

    #[test]
    fn effects_add_over_disjoint_outcomes((d, parts) in dim_and_parts(2)) {
        let half = parts.len() / 2;
        // Three outcomes with K_a + K_b + K_c = I; the fourth label is a ∪ b.
        let ka = random_effect(d, &parts[..half]).scale(0.5);
        let kb = random_effect(d, &parts[half..]).scale(0.5);
        let (a2, b2) = (ka.clone(), kb.clone());
        let f = FnFunctional::new(
            d,
            ["a", "b", "c", "ab"].map(|s| Label::Named(s.into())).to_vec(),
            move |psi: &CVector| {
                let (pa, pb) = (quadratic(psi, &a2), quadratic(psi, &b2));
                vec![pa, pb, 1.0 - pa - pb, pa + pb]
            },
        );
        let e = reconstruct_effects(&f).unwrap();
        prop_assert!((e.union(&[0, 1]) - &e.effects[3]).camax() <= 1e-10);
        prop_assert!((&e.effects[0] - &ka).camax() <= 1e-10);
        prop_assert!((&e.effects[1] - &kb).camax() <= 1e-10);
    }

    #[test]
    fn effects_ignore_probe_phase((d, parts) in dim_and_parts(1), phase in 0.0..6.3f64) {
        let k = random_effect(d, &parts);
        let (k1, k2) = (k.clone(), k.clone());
        let labels = vec![Label::Named("k".into())];
        let plain = FnFunctional::new(d, labels.clone(), move |psi: &CVector| vec![quadratic(psi, &k1)]);
        let rotated = FnFunctional::new(d, labels, move |psi: &CVector| {
            vec![quadratic(&(psi * c(phase.cos(), phase.sin())), &k2)]
        });
        let a = reconstruct_effects(&plain).unwrap();
        let b = reconstruct_effects(&rotated).unwrap();
        prop_assert!((&a.effects[0] - &b.effects[0]).camax() <= 1e-14);
    }

    #[test]
    fn projector_sets_stay_pvm_when_tolerance_halves((d, parts) in dim_and_parts(1)) {
        // Projectors onto the columns of a unitary from a QR factorization.
        let m = CMatrix::from_iterator(d, d, parts.chunks(2).map(|p| c(p[0], p[1])));
        prop_assume!(m.determinant().norm() > 1e-3);
        let q = m.qr().q();
        let effects: Vec<CMatrix> = (0..d).map(|i| q.column(i) * q.column(i).adjoint()).collect();
        let labels = (0..d).map(|i| Label::Value(i as f64)).collect();
        let set = EffectSet::exact(labels, effects).unwrap();
        prop_assert!(validate_povm(&set, 1e-10).valid);
        for tol in [1e-8, 5e-9, 2.5e-9] {
            prop_assert!(pvm_check(&set, tol).is_pvm);
        }
    }
}

fn spin_probes() -> Vec<StateVector> {
    let space = SpaceSpec::spin(2).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)], [c(h, 0.0), c(h, 0.0)]]
        .iter()
        .map(|a| StateVector::from_vec(space.clone(), a.to_vec()).unwrap())
        .collect()
}

#[test]
fn reproducible_model_passes() {
    let exp = Experiment::new(desk::spin_half_model()).unwrap();
    let r = reproducibility_test(1, &exp, &spin_probes(), 300, 0.95).unwrap();
    assert!(r.spans && r.reproducible, "{r:?}");
    assert!(r.agreement.value >= 0.99);
}

#[test]
fn destructive_model_fails_the_span_check() {
    let exp = Experiment::new(desk::destructive_model()).unwrap();
    let r = reproducibility_test(2, &exp, &spin_probes(), 200, 0.95).unwrap();
    // Every post-measurement state is |+>, a one-dimensional span.
    assert_eq!(r.span_rank, 1);
    assert!(!r.spans && !r.reproducible);
}

#[test]
fn pointer_mixture_agreement_is_the_collision_probability() {
    let exp = Experiment::new(desk::nonreproducible_model()).unwrap();
    let r = reproducibility_test(3, &exp, &spin_probes(), 2000, 0.95).unwrap();
    // Independent draws from (0.3, 0.7) agree with probability 0.3^2 + 0.7^2.
    assert!((r.agreement.value - 0.58).abs() <= 4.0 * r.agreement.se + 1e-3, "{:?}", r.agreement);
    assert!(!r.reproducible);
}

#[test]
fn exact_experiment_effects_are_sz_projectors() {
    use collapse_core::povm::{ExperimentFunctional, ExperimentMode};
    let exp = Experiment::new(desk::spin_half_model()).unwrap();
    let e = reconstruct_effects(&ExperimentFunctional::new(&exp, ExperimentMode::Exact { dt: 0.01 })).unwrap();
    let up = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
    assert!((&e.effects[0] - &up).camax() <= 1e-8);
    assert!(pvm_check(&e, 1e-8).is_pvm);
    assert!(e.effects[2].camax() <= 1e-8, "null effect vanishes");
}
