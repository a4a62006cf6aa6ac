//! Reference values computed independently at 30 digits and frozen here.

use weakval_core::classical::{classical_weak_value, PhaseSpaceDensity, PhaseSpaceObservable};
use weakval_core::quasiprob::{margenau_hill, vacuum_standard_closed_form};
use weakval_core::special::erfc;
use weakval_core::{
    fock_state, negativity_probability, vacuum, weak_energy_relation, weak_value,
    CoherentAmplitude, MixedState, ObservableSpec, QuadratureGrid,
};

#[test]
fn negativity_probability_table() {
    let table = [
        (0.0, 0.157_299_207_050_285_13),
        (0.5, 0.113_846_298_006_658_05),
        (1.0, 0.045_500_263_896_358_414),
        (2.0, 0.001_565_402_258_002_549_7),
    ];
    for (ai, want) in table {
        let got = negativity_probability(CoherentAmplitude::from_quadratures(1.3, ai));
        assert!(((got - want) / want).abs() < 1e-13, "alpha_i = {ai}: {got}");
        assert!((got - erfc((1.0 + ai * ai).sqrt())).abs() <= 1e-14 * want);
    }
}

#[test]
fn vacuum_margenau_hill_values() {
    // cos(qp) e^{-(q²+p²)/2} / (√2 π)
    let table = [
        (0.0, 0.0, 0.225_079_079_039_276_52),
        (1.0, 0.5, 0.105_727_767_816_342_22),
        (-1.5, 2.25, -0.005_655_968_303_403_466_2),
    ];
    for (q, p, want) in table {
        let got = vacuum_standard_closed_form(q, p).re;
        assert!((got - want).abs() < 1e-16, "({q}, {p}): {got}");
    }
    let grid = QuadratureGrid::symmetric(8.0, 256).unwrap();
    let field = margenau_hill(&MixedState::pure(vacuum(&grid).unwrap()));
    assert!((field.at(0.0, 0.0).re - table[0].2).abs() < 1e-12);
}

#[test]
fn fock_one_weak_values() {
    // ψ ∝ q e^{-q²/2}: (p²)_w = 3 − q², and |1⟩ is an energy eigenstate.
    let grid = QuadratureGrid::default_grid();
    let state = MixedState::pure(fock_state(1, &grid).unwrap());
    let p2 = weak_value(&ObservableSpec::PSquared, &state).unwrap();
    let energy = weak_value(&ObservableSpec::Energy, &state).unwrap();
    let relation = weak_energy_relation(&state).unwrap();
    let mut checked = 0;
    for (k, ok) in p2.valid_mask().iter().enumerate() {
        let q = grid.q(k);
        if !ok || q.abs() > 6.0 {
            continue;
        }
        let want = 3.0 - q * q;
        assert!(
            (p2.values()[k].re - want).abs() < 1e-7 * want.abs().max(1.0),
            "q = {q}"
        );
        assert!(
            p2.values()[k].im.abs() < 1e-7 * want.abs().max(1.0),
            "q = {q}: {}",
            p2.values()[k]
        );
        assert!(
            (energy.values()[k].re - 1.5).abs() < 1e-7 * (1.0 + q * q),
            "q = {q}"
        );
        assert!((relation.values()[k].re - want).abs() < 1e-7 * want.abs().max(1.0));
        checked += 1;
    }
    assert!(checked > 300);
}

#[test]
fn classical_conditional_expectations() {
    let f = PhaseSpaceDensity::gaussian(0.5, -1.0, 0.7, 0.4).unwrap();
    for q in [-0.5, 0.5, 1.4] {
        // p ~ N(-1, 0.4²) independent of q
        let p2 = classical_weak_value(&PhaseSpaceObservable::PSquared, &f, q).unwrap();
        assert!((p2 - 1.16).abs() < 1e-8, "{p2}");
        let e = classical_weak_value(&PhaseSpaceObservable::Energy, &f, q).unwrap();
        assert!((e - 0.5 * (q * q + 1.16)).abs() < 1e-8);
    }
}
