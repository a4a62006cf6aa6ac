//! Weak values postselected on a quadrature eigenstate.
//!
//! For an object preselected in `ρ̂ = Σ_k w_k|ψ_k⟩⟨ψ_k|` and postselected on
//! `|q⟩`, the weak value of `ĉ` is
//! `c_w(q) = Σ_k w_k ψ_k*(q)(ĉψ_k)(q) / Σ_k w_k |ψ_k(q)|²`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::QuadratureGrid;
use crate::observable::ObservableSpec;
use crate::special::erfc;
use crate::state::{coherent_state, CoherentAmplitude, MixedState};

/// Points with postselection density below this fraction of the peak are
/// masked.
pub const DENSITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WeakValueProfile {
    grid: QuadratureGrid,
    values: Vec<Complex64>,
    density: Vec<f64>,
    valid: Vec<bool>,
}

impl WeakValueProfile {
    fn from_parts(
        grid: QuadratureGrid,
        numerator: Vec<Complex64>,
        density: Vec<f64>,
    ) -> Result<Self> {
        let peak = density.iter().cloned().fold(0.0, f64::max);
        let floor = DENSITY_FLOOR * peak;
        let valid: Vec<bool> = density.iter().map(|d| *d >= floor && *d > 0.0).collect();
        if !valid.iter().any(|v| *v) {
            return Err(Error::AllMasked);
        }
        let values = numerator
            .iter()
            .zip(&density)
            .zip(&valid)
            .map(|((n, d), ok)| {
                if *ok {
                    n / d
                } else {
                    Complex64::new(f64::NAN, f64::NAN)
                }
            })
            .collect();
        Ok(Self {
            grid,
            values,
            density,
            valid,
        })
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    /// Weak value per grid point; `NaN` where masked.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `⟨q|ρ̂|q⟩` per grid point.
    pub fn postselection_density(&self) -> &[f64] {
        &self.density
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    /// Weak value at the grid point nearest `q`.
    pub fn at(&self, q: f64) -> Result<Complex64> {
        let k = self.grid.nearest_q_index(q);
        if self.valid[k] {
            Ok(self.values[k])
        } else {
            Err(Error::MaskedPoint(q))
        }
    }

    /// `(q, c_w)` over the valid mask.
    pub fn valid_points(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        (0..self.grid.len())
            .filter(|k| self.valid[*k])
            .map(|k| (self.grid.q(k), self.values[k]))
    }

    /// Replaces the values by a real profile, keeping density and mask.
    pub fn map_real(&self, f: impl Fn(f64, Complex64) -> f64) -> Self {
        let values = (0..self.grid.len())
            .map(|k| {
                if self.valid[k] {
                    Complex64::new(f(self.grid.q(k), self.values[k]), 0.0)
                } else {
                    self.values[k]
                }
            })
            .collect();
        Self {
            grid: self.grid,
            values,
            density: self.density.clone(),
            valid: self.valid.clone(),
        }
    }

    /// Probability that postselection lands where `Re c_w < 0`.
    pub fn negative_real_part_probability(&self) -> f64 {
        (0..self.grid.len())
            .filter(|k| self.valid[*k] && self.values[*k].re < 0.0)
            .map(|k| self.density[k])
            .sum::<f64>()
            * self.grid.dq()
    }
}

/// Weak value profile of `obs` for the preselected `state`, postselected on
/// position over the state's grid.
pub fn weak_value(obs: &ObservableSpec, state: &MixedState) -> Result<WeakValueProfile> {
    let grid = *state.grid();
    let mut numerator = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut density = vec![0.0; grid.len()];
    for (w, wf) in state.components() {
        let psi = wf.in_position();
        let image = obs.apply(&psi);
        for k in 0..grid.len() {
            let a = psi.amplitudes()[k];
            numerator[k] += *w * a.conj() * image.amplitudes()[k];
            density[k] += w * a.norm_sqr();
        }
    }
    WeakValueProfile::from_parts(grid, numerator, density)
}

/// `(p²)_w = 1 − (q − √2α)²` for the coherent state `|α⟩`.
pub fn coherent_p2_closed_form(alpha: impl Into<CoherentAmplitude>, q: f64) -> Complex64 {
    let alpha = alpha.into().alpha();
    let shifted = Complex64::new(q, 0.0) - std::f64::consts::SQRT_2 * alpha;
    1.0 - shifted * shifted
}

/// Edges `α_r ∓ √(1 + α_i²)` of the interval outside which
/// `Re[(p²)_w] < 0` for a coherent state.
pub fn negativity_region(alpha: impl Into<CoherentAmplitude>) -> (f64, f64) {
    let (ar, ai) = alpha.into().quadratures();
    let half = (1.0 + ai * ai).sqrt();
    (ar - half, ar + half)
}

/// `erfc(√(1 + α_i²))`: probability of postselecting a negative
/// `Re[(p²)_w]` on a coherent state.
pub fn negativity_probability(alpha: impl Into<CoherentAmplitude>) -> f64 {
    let (_, ai) = alpha.into().quadratures();
    erfc((1.0 + ai * ai).sqrt())
}

/// Two-tail integral of `|⟨q|α⟩|²` outside the negativity interval,
/// integrating the band-limited interpolant of the sampled density.
pub fn negativity_probability_numeric(
    alpha: impl Into<CoherentAmplitude>,
    grid: &QuadratureGrid,
) -> Result<f64> {
    let alpha = alpha.into();
    let wf = coherent_state(alpha, grid)?;
    let density = wf.density();
    let (low, high) = negativity_region(alpha);
    let coefficients = grid.fourier_coefficients(&density);
    let below = grid.cumulative_from_coefficients(&coefficients, low);
    let up_to_high = grid.cumulative_from_coefficients(&coefficients, high);
    let total = grid.cumulative_from_coefficients(&coefficients, grid.q_max());
    Ok(below + (total - up_to_high))
}

/// `2·Re[E_w(q)] − q²`, which reproduces `Re[(p²)_w](q)`.
pub fn weak_energy_relation(state: &MixedState) -> Result<WeakValueProfile> {
    let energy = weak_value(&ObservableSpec::Energy, state)?;
    Ok(energy.map_real(|q, e| 2.0 * e.re - q * q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observable::RealFn;
    use crate::state::{fock_state, mix, vacuum};

    fn grid() -> QuadratureGrid {
        QuadratureGrid::default_grid()
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(
            coherent_p2_closed_form(CoherentAmplitude::vacuum(), 0.0),
            Complex64::new(1.0, 0.0)
        );
        assert_eq!(
            coherent_p2_closed_form(CoherentAmplitude::vacuum(), 2.0),
            Complex64::new(-3.0, 0.0)
        );
        let v = coherent_p2_closed_form(CoherentAmplitude::from_quadratures(1.0, 1.0), 1.0);
        assert!((v - Complex64::new(2.0, 0.0)).norm() < 1e-14);
        // Re part = 1 + α_i² − (q − α_r)²
        let alpha = CoherentAmplitude::from_quadratures(0.7, -1.3);
        for q in [-2.0, 0.0, 0.7, 3.1] {
            let re = coherent_p2_closed_form(alpha, q).re;
            assert!((re - (1.0 + 1.69 - (q - 0.7f64).powi(2))).abs() < 1e-13);
        }
    }

    #[test]
    fn vacuum_weak_value_at_two() {
        let g = grid();
        let state = MixedState::pure(vacuum(&g).unwrap());
        let profile = weak_value(&ObservableSpec::PSquared, &state).unwrap();
        let v = profile.at(2.0).unwrap();
        assert!((v - Complex64::new(-3.0, 0.0)).norm() < 1e-9, "{v}");
    }

    #[test]
    fn numeric_matches_closed_form_for_coherent() {
        let g = grid();
        let alpha = CoherentAmplitude::from_quadratures(1.0, 1.0);
        let state = MixedState::pure(coherent_state(alpha, &g).unwrap());
        let profile = weak_value(&ObservableSpec::PSquared, &state).unwrap();
        for (q, v) in profile.valid_points() {
            let want = coherent_p2_closed_form(alpha, q);
            assert!((v - want).norm() <= 1e-6 * want.norm().max(1.0), "q = {q}");
        }
        assert!((profile.at(1.0).unwrap() - 2.0).norm() < 1e-9);
    }

    #[test]
    fn diagonal_observable_is_its_own_weak_value() {
        let g = grid();
        let state = MixedState::pure(
            coherent_state(CoherentAmplitude::from_quadratures(0.5, 2.0), &g).unwrap(),
        );
        let f = RealFn::new("cos q", |q: f64| q.cos());
        let profile = weak_value(&ObservableSpec::DiagonalInQ(f), &state).unwrap();
        for (q, v) in profile.valid_points() {
            assert!((v - Complex64::new(q.cos(), 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn mask_and_density() {
        let g = grid();
        let state = MixedState::pure(vacuum(&g).unwrap());
        let profile = weak_value(&ObservableSpec::PSquared, &state).unwrap();
        let total: f64 = profile.postselection_density().iter().sum::<f64>() * g.dq();
        assert!((total - 1.0).abs() < 1e-8);
        let peak = profile
            .postselection_density()
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        for (d, ok) in profile
            .postselection_density()
            .iter()
            .zip(profile.valid_mask())
        {
            assert_eq!(*ok, *d >= DENSITY_FLOOR * peak);
        }
        assert!(matches!(profile.at(10.0), Err(Error::MaskedPoint(_))));
    }

    #[test]
    fn negativity_region_examples() {
        assert_eq!(negativity_region(CoherentAmplitude::vacuum()), (-1.0, 1.0));
        let (lo, hi) = negativity_region(CoherentAmplitude::from_quadratures(3.0, 0.0));
        assert!((lo - 2.0).abs() < 1e-15 && (hi - 4.0).abs() < 1e-15);
        let (lo, hi) = negativity_region(CoherentAmplitude::from_quadratures(0.0, 3f64.sqrt()));
        assert!((lo + 2.0).abs() < 1e-15 && (hi - 2.0).abs() < 1e-15);
    }

    #[test]
    fn negativity_region_matches_sign_of_weak_value() {
        let alpha = CoherentAmplitude::from_quadratures(0.4, 1.2);
        let (lo, hi) = negativity_region(alpha);
        for i in 0..400 {
            let q = -6.0 + 0.03 * i as f64;
            if (q - lo).abs() < 1e-9 || (q - hi).abs() < 1e-9 {
                continue;
            }
            let negative = coherent_p2_closed_form(alpha, q).re < 0.0;
            assert_eq!(negative, q < lo || q > hi, "q = {q}");
        }
    }

    #[test]
    fn negativity_probability_values() {
        let p0 = negativity_probability(CoherentAmplitude::vacuum());
        assert!((p0 - 0.157_299_207_050_285_13).abs() < 1e-15);
        for ar in [-3.0, 2.0, 5.0] {
            assert_eq!(
                negativity_probability(CoherentAmplitude::from_quadratures(ar, 0.0)),
                p0
            );
        }
        let mut previous = p0;
        for i in 1..=40 {
            let p =
                negativity_probability(CoherentAmplitude::from_quadratures(0.0, 0.1 * i as f64));
            assert!(p < previous);
            previous = p;
        }
    }

    #[test]
    fn numeric_negativity_probability() {
        let g = grid();
        let p0 = negativity_probability_numeric(CoherentAmplitude::vacuum(), &g).unwrap();
        assert!((p0 - 0.157_299_207_050_285_13).abs() < 1e-6);
        let p5 = negativity_probability_numeric(CoherentAmplitude::from_quadratures(5.0, 0.0), &g)
            .unwrap();
        assert!((p5 - p0).abs() < 1e-8);
        let p2 = negativity_probability_numeric(CoherentAmplitude::from_quadratures(0.0, 2.0), &g)
            .unwrap();
        assert!((p2 - erfc(5f64.sqrt())).abs() < 1e-6);
    }

    #[test]
    fn profile_negativity_probability_for_coherent() {
        // Grid-sum estimate; the mask edges fall between grid points, so only
        // a loose agreement with the closed form is expected.
        let g = QuadratureGrid::new(-16.0, 16.0, 4096).unwrap();
        let state = MixedState::pure(vacuum(&g).unwrap());
        let profile = weak_value(&ObservableSpec::PSquared, &state).unwrap();
        let p = profile.negative_real_part_probability();
        assert!((p - negativity_probability(CoherentAmplitude::vacuum())).abs() < 1e-3);
    }

    #[test]
    fn energy_relation_on_fock_one() {
        let g = grid();
        let state = MixedState::pure(fock_state(1, &g).unwrap());
        let lhs = weak_energy_relation(&state).unwrap();
        let rhs = weak_value(&ObservableSpec::PSquared, &state).unwrap();
        for ((a, b), ok) in lhs.values().iter().zip(rhs.values()).zip(lhs.valid_mask()) {
            if *ok {
                assert!((a.re - b.re).abs() < 1e-6);
            }
        }
        // density vanishes at the node, which is masked
        assert!(!lhs.valid_mask()[g.nearest_q_index(0.0)]);
    }

    #[test]
    fn vacuum_energy_relation() {
        let g = grid();
        let state = MixedState::pure(vacuum(&g).unwrap());
        let profile = weak_energy_relation(&state).unwrap();
        for (q, v) in profile.valid_points() {
            assert!((v.re - (1.0 - q * q)).abs() < 1e-6 * (1.0 + q * q));
        }
    }

    #[test]
    fn mixture_weak_value_is_density_weighted() {
        let g = grid();
        let a = coherent_state(CoherentAmplitude::from_quadratures(1.0, 0.0), &g).unwrap();
        let b = coherent_state(CoherentAmplitude::from_quadratures(-1.0, 0.5), &g).unwrap();
        let state = mix(vec![(0.3, a.clone()), (0.7, b.clone())]).unwrap();
        let profile = weak_value(&ObservableSpec::PSquared, &state).unwrap();
        let alpha_a = CoherentAmplitude::from_quadratures(1.0, 0.0);
        let alpha_b = CoherentAmplitude::from_quadratures(-1.0, 0.5);
        for k in (0..g.len()).filter(|k| profile.valid_mask()[*k]).step_by(7) {
            let q = g.q(k);
            let da = 0.3 * a.density()[k];
            let db = 0.7 * b.density()[k];
            let want = (da * coherent_p2_closed_form(alpha_a, q)
                + db * coherent_p2_closed_form(alpha_b, q))
                / (da + db);
            assert!((profile.values()[k] - want).norm() < 1e-6 * want.norm().max(1.0));
        }
    }
}
