use num_complex::Complex64;
use proptest::prelude::*;
use weakval_core::io::{read_state, write_state};
use weakval_core::measurement::{evolve_joint, PointerState};
use weakval_core::quasiprob::margenau_hill;
use weakval_core::{
    coherent_state, weak_value, CoherentAmplitude, Error, MixedState, ObservableSpec,
    QuadratureGrid,
};

fn grid() -> QuadratureGrid {
    QuadratureGrid::symmetric(12.0, 256).unwrap()
}

fn wide_grid() -> QuadratureGrid {
    QuadratureGrid::symmetric(16.0, 512).unwrap()
}

fn coherent_on(ar: f64, ai: f64, g: &QuadratureGrid) -> MixedState {
    MixedState::pure(coherent_state(CoherentAmplitude::from_quadratures(ar, ai), g).unwrap())
}

fn coherent(ar: f64, ai: f64) -> MixedState {
    coherent_on(ar, ai, &grid())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weak_value_is_linear(ar in -2.0..2.0f64, ai in -1.5..1.5f64, a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let state = coherent(ar, ai);
        let combined = ObservableSpec::Combination(vec![(a, ObservableSpec::PSquared), (b, ObservableSpec::QSquared)]);
        let lhs = weak_value(&combined, &state).unwrap();
        let p2 = weak_value(&ObservableSpec::PSquared, &state).unwrap();
        let q2 = weak_value(&ObservableSpec::QSquared, &state).unwrap();
        for k in 0..grid().len() {
            if lhs.valid_mask()[k] {
                let want: Complex64 = a * p2.values()[k] + b * q2.values()[k];
                prop_assert!((lhs.values()[k] - want).norm() <= 1e-9 * want.norm().max(1.0));
            }
        }
    }

    #[test]
    fn translation_covariance(ar in -2.0..2.0f64, ai in -1.5..1.5f64, steps in -40i32..40) {
        // Shifted packets stay far enough from the periodic edge for lattice translation to be exact.
        let g = wide_grid();
        let shift = steps as f64 * g.dq();
        let a = weak_value(&ObservableSpec::PSquared, &coherent_on(ar, ai, &g)).unwrap();
        let b = weak_value(&ObservableSpec::PSquared, &coherent_on(ar + shift, ai, &g)).unwrap();
        for k in 0..g.len() {
            let j = k as i64 + steps as i64;
            if j < 0 || j >= g.len() as i64 {
                continue;
            }
            let j = j as usize;
            if a.valid_mask()[k] && b.valid_mask()[j] && a.postselection_density()[k] > 1e-8 {
                let (x, y) = (a.values()[k], b.values()[j]);
                prop_assert!((x - y).norm() <= 1e-8 * x.norm().max(1.0), "k={} {} vs {}", k, x, y);
            }
        }
    }

    #[test]
    fn margenau_hill_marginals(ar in -3.0..3.0f64, ai in -2.0..2.0f64) {
        let state = coherent(ar, ai);
        let field = margenau_hill(&state);
        for (m, d) in field.q_marginal().iter().zip(state.position_density()) {
            prop_assert!((m - d).norm() < 1e-10);
        }
        for (m, d) in field.p_marginal().iter().zip(state.momentum_density()) {
            prop_assert!((m - d).norm() < 1e-10);
        }
    }

    #[test]
    fn coupling_is_unitary(ar in -1.0..1.0f64, ai in -1.0..1.0f64, eps in 0.0..0.05f64, sigma in 0.7..1.5f64) {
        let pointer = PointerState::gaussian(sigma, &PointerState::default_grid(sigma).unwrap()).unwrap();
        let joint = match evolve_joint(&coherent(ar, ai), &pointer, &ObservableSpec::PSquared, eps) {
            Err(Error::GridOverflow { .. }) => return Err(TestCaseError::reject("pointer grid too small for the shift")),
            other => other.unwrap(),
        };
        prop_assert!((joint.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn state_text_round_trip(ar in -3.0..3.0f64, ai in -3.0..3.0f64) {
        let wf = coherent_state(CoherentAmplitude::from_quadratures(ar, ai), &grid()).unwrap();
        prop_assert_eq!(read_state(&write_state(&wf)).unwrap(), wf);
    }
}
