use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

use realdirac::algebra::{build_eta, find_z, FourVector, Spinor8};
use realdirac::dynamics::{step_rk4, step_rk4_dt, EvolutionMode};
use realdirac::lattice::{
    enforce_case, init_plane_wave, xy_transform, Case, FieldState, GridSpec, ModeTag, PhysicalParams,
};
use realdirac::observables::{
    charge, current_case, current_general, hamiltonian_density, lagrangian_di_density, CurrentKind,
};

fn random_state(n: usize, seed: u64, potential: f64) -> FieldState {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut s = FieldState::zeros(n, ModeTag::CoupledNonlinear);
    for p in s.phi.iter_mut().chain(s.pi.iter_mut()) {
        *p = Spinor8(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
    }
    for a in s.a.iter_mut() {
        *a = FourVector(std::array::from_fn(|_| potential * rng.gen_range(-1.0..1.0)));
    }
    s
}

fn max_phi_gap(a: &FieldState, b: &FieldState) -> f64 {
    a.phi.iter().zip(&b.phi).map(|(x, y)| (*x - *y).max_abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn case_two_equals_case_one_with_negated_z(seed in any::<u64>(), zi in 0usize..3, e in -0.5f64..0.5) {
        let eta = build_eta();
        let z = find_z(&eta, zi).unwrap();
        let grid = GridSpec::default_resolution(16).unwrap();
        let params = PhysicalParams::new(1.0, e).unwrap();
        let s = random_state(16, seed, 0.3);
        let two = step_rk4(&s, &EvolutionMode::CoupledLinear(Case::II), &grid, &params, &eta, &z).unwrap();
        let mut one = step_rk4(&s, &EvolutionMode::CoupledLinear(Case::I), &grid, &params, &eta, &z.negated()).unwrap();
        one.mode = two.mode;
        prop_assert_eq!(two, one);
    }

    #[test]
    fn case_states_reduce_exactly(seed in any::<u64>(), zi in 0usize..3, e in -0.5f64..0.5, case2 in any::<bool>()) {
        let eta = build_eta();
        let z = find_z(&eta, zi).unwrap();
        let params = PhysicalParams::new(0.8, e).unwrap();
        let case = if case2 { Case::II } else { Case::I };
        let s = enforce_case(random_state(16, seed, 0.3), &z, case, &params);
        let l = lagrangian_di_density(&s, &params, &eta).unwrap();
        prop_assert!(l.iter().all(|x| x.abs() <= 1e-12));
        let jg = current_general(&s, &params, &eta).unwrap();
        let jc = current_case(&s, &params, &eta);
        let scale = jc.iter().map(FourVector::max_abs).fold(0.0, f64::max);
        let gap = jg.iter().zip(&jc).map(|(a, b)| (*a - *b).max_abs()).fold(0.0, f64::max);
        prop_assert!(gap <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn generic_states_do_not_reduce(seed in any::<u64>()) {
        let eta = build_eta();
        let params = PhysicalParams::new(1.0, 0.3).unwrap();
        let s = random_state(16, seed, 0.3);
        let jg = current_general(&s, &params, &eta).unwrap();
        let jc = current_case(&s, &params, &eta);
        let scale = jc.iter().map(FourVector::max_abs).fold(0.0, f64::max);
        let gap = jg.iter().zip(&jc).map(|(a, b)| (*a - *b).max_abs()).fold(0.0, f64::max);
        prop_assert!(gap > 1e-3 * scale);
    }

    #[test]
    fn charge_is_relabeling_invariant_and_quadratic(seed in any::<u64>(), shift in 0usize..16, amp in 0.1f64..3.0) {
        let eta = build_eta();
        let grid = GridSpec::default_resolution(16).unwrap();
        let params = PhysicalParams::new(1.0, 0.2).unwrap();
        let s = random_state(16, seed, 0.0);
        let q = charge(&s, CurrentKind::Case, &grid, &params, &eta).unwrap();
        let qr = charge(&s.rotated(shift), CurrentKind::Case, &grid, &params, &eta).unwrap();
        prop_assert!((q - qr).abs() <= 1e-12 * q.abs());
        let mut scaled = s.clone();
        for p in scaled.phi.iter_mut() {
            *p = *p * amp;
        }
        let qs = charge(&scaled, CurrentKind::Case, &grid, &params, &eta).unwrap();
        prop_assert!((qs - amp * amp * q).abs() <= 1e-12 * qs.abs().max(1.0));
    }

    #[test]
    fn densities_are_even_in_phi(seed in any::<u64>()) {
        let eta = build_eta();
        let grid = GridSpec::default_resolution(16).unwrap();
        let params = PhysicalParams::new(1.0, 0.2).unwrap();
        let s = random_state(16, seed, 0.3);
        let mut neg = s.clone();
        for (p, q) in neg.phi.iter_mut().zip(neg.pi.iter_mut()) {
            *p = -*p;
            *q = -*q;
        }
        prop_assert_eq!(hamiltonian_density(&s, &grid, &params, &eta), hamiltonian_density(&neg, &grid, &params, &eta));
        prop_assert_eq!(lagrangian_di_density(&s, &params, &eta).unwrap(), lagrangian_di_density(&neg, &params, &eta).unwrap());
    }

    #[test]
    fn canonical_flow_keeps_case_one_manifold(seed in any::<u64>(), zi in 0usize..3) {
        let eta = build_eta();
        let z = find_z(&eta, zi).unwrap();
        let grid = GridSpec::default_resolution(16).unwrap();
        let params = PhysicalParams::new(1.0, 0.1).unwrap();
        let mut s = enforce_case(random_state(16, seed, 0.2), &z, Case::I, &params);
        for _ in 0..20 {
            s = step_rk4(&s, &EvolutionMode::CoupledNonlinear, &grid, &params, &eta, &z).unwrap();
            let xy = xy_transform(&s, &z, &params);
            prop_assert!(xy.max_x_norm() <= 1e-10 * xy.max_y_norm());
        }
    }
}

#[test]
fn zero_state_stays_zero() {
    let eta = build_eta();
    let z = find_z(&eta, 0).unwrap();
    let grid = GridSpec::default_resolution(16).unwrap();
    let params = PhysicalParams::new(1.0, 0.3).unwrap();
    let mut s = FieldState::zeros(16, ModeTag::CoupledNonlinear);
    for _ in 0..10 {
        s = step_rk4(&s, &EvolutionMode::CoupledNonlinear, &grid, &params, &eta, &z).unwrap();
    }
    assert!(s.phi.iter().chain(&s.pi).all(|p| p.max_abs() == 0.0));
}

#[test]
fn rk4_local_error_is_fifth_order() {
    let eta = build_eta();
    let z = find_z(&eta, 0).unwrap();
    let grid = GridSpec::default_resolution(32).unwrap();
    let params = PhysicalParams::new(1.0, 0.0).unwrap();
    let s = init_plane_wave(&grid, &params, &eta, &z, 3, 1, 1.0).unwrap();
    let mode = EvolutionMode::Free;
    let local_error = |dt: f64| {
        let one = step_rk4_dt(&s, &mode, &grid, &params, &eta, &z, dt).unwrap();
        let half = step_rk4_dt(&s, &mode, &grid, &params, &eta, &z, dt / 2.0).unwrap();
        let two = step_rk4_dt(&half, &mode, &grid, &params, &eta, &z, dt / 2.0).unwrap();
        max_phi_gap(&one, &two)
    };
    let (e1, e2) = (local_error(0.2), local_error(0.1));
    let order = (e1 / e2).log2();
    assert!((order - 5.0).abs() < 0.3, "observed local order {order}");
}

#[test]
fn rest_mode_period_error_is_fourth_order() {
    let eta = build_eta();
    let z = find_z(&eta, 1).unwrap();
    let params = PhysicalParams::new(1.0, 0.0).unwrap();
    let period = 2.0 * std::f64::consts::PI;
    let period_error = |steps: usize| {
        let grid = GridSpec::new(16, 0.5, period / steps as f64, 0.5).unwrap();
        let s0 = init_plane_wave(&grid, &params, &eta, &z, 0, 1, 1.0).unwrap();
        let mut s = s0.clone();
        for _ in 0..steps {
            s = step_rk4(&s, &EvolutionMode::Free, &grid, &params, &eta, &z).unwrap();
        }
        max_phi_gap(&s, &s0) / s0.phi[0].max_abs()
    };
    let (coarse, fine) = (period_error(40), period_error(80));
    let order = (coarse / fine).log2();
    assert!(order > 3.8 && order < 4.3, "observed order {order}");
    assert!(fine <= 1e-5);
}
