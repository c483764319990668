use collapse_core::hilbert::{CVector, SpaceSpec, StateVector, C64};
use collapse_core::measurement::{factorization_check, q_measure, Experiment, Label, QMode};
use collapse_core::models::desk;

fn spin(amps: &[C64]) -> StateVector {
    StateVector::new(SpaceSpec::spin(amps.len()).unwrap(), CVector::from_column_slice(amps)).unwrap()
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn half() -> StateVector {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    spin(&[re(r), re(r)])
}

#[test]
fn eigenstate_gives_its_label() {
    let exp = Experiment::new(desk::spin_half_model()).unwrap();
    let d = exp.distribution(5, &spin(&[re(1.0), re(0.0)]), 2000).unwrap();
    assert!(d.frequency(0) >= 0.999, "{:?}", d.counts);
    let rec = exp.run(9, &spin(&[re(0.0), re(1.0)])).unwrap();
    assert_eq!(rec.label, Label::Value(-1.0));
}

#[test]
fn equal_superposition_is_fair() {
    let exp = Experiment::new(desk::spin_half_model()).unwrap();
    let d = exp.distribution(17, &half(), 10_000).unwrap();
    let e = d.estimate(0);
    assert!((e.value - 0.5).abs() <= 3.0 * e.se, "{e:?}");
    assert_eq!(d.counts[2], 0);
}

#[test]
fn uncoupled_pointer_reads_null() {
    let mut m = desk::spin_half_model();
    m.strength = 0.0;
    let exp = Experiment::new(m).unwrap();
    let d = exp.distribution(1, &half(), 200).unwrap();
    assert_eq!(d.counts[d.null_index()], 200);
}

#[test]
fn q_modes_agree_and_q_is_a_measure() {
    let exp = Experiment::new(desk::spin_half_model()).unwrap();
    let psi = spin(&[re(0.6), C64::new(0.0, 0.8)]);
    let exact = |v: &[usize]| q_measure(&exp, &psi, v, QMode::MasterEquation { dt: 0.01 }).unwrap().value;
    let all = exact(&[0, 1, 2]);
    assert!((all - 1.0).abs() < 1e-9);
    assert!((exact(&[0, 1]) - exact(&[0]) - exact(&[1])).abs() < 1e-9);
    assert!((exact(&[0]) - 0.36).abs() < 1e-6);
    let mc = q_measure(&exp, &psi, &[0], QMode::Trajectories { runs: 4000, seed: 3 }).unwrap();
    assert!((mc.value - exact(&[0])).abs() <= 3.0 * mc.se + 1e-9, "{mc:?}");
}

#[test]
fn post_measurement_state_factorizes() {
    let exp = Experiment::new(desk::spin_half_model()).unwrap();
    for seed in 0..20 {
        let rec = exp.run(seed, &half()).unwrap();
        let defect = factorization_check(&rec.trajectory.final_state, &[0]).unwrap();
        assert!(defect <= 1e-3, "{defect}");
    }
}

#[test]
fn global_phase_does_not_change_statistics() {
    let exp = Experiment::new(desk::spin_half_model()).unwrap();
    let psi = spin(&[re(0.6), re(0.8)]);
    let a = exp.distribution(2, &psi, 3000).unwrap();
    let b = exp.distribution(2, &psi.with_global_phase(1.3), 3000).unwrap();
    let (ea, eb) = (a.estimate(0), b.estimate(0));
    assert!((ea.value - eb.value).abs() <= 3.0 * (ea.se + eb.se));
    let q = |s: &StateVector| q_measure(&exp, s, &[0], QMode::MasterEquation { dt: 0.01 }).unwrap().value;
    assert!((q(&psi) - q(&psi.with_global_phase(1.3))).abs() < 1e-10);
}

#[test]
fn spin1_model_resolves_sx() {
    let exp = Experiment::new(desk::spin1_model()).unwrap();
    let d = exp.distribution(4, &spin(&[re(1.0), re(0.0), re(0.0)]), 4000).unwrap();
    for (i, p) in [0.25, 0.5, 0.25].into_iter().enumerate() {
        let e = d.estimate(i);
        assert!((e.value - p).abs() <= 3.0 * e.se, "{i}: {e:?}");
    }
}
