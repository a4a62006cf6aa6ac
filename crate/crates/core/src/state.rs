//! Wavefunctions on a quadrature grid, mixtures, and the state constructors.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::QuadratureGrid;

/// Edge density relative to the peak above which a constructor reports
/// truncation.
pub const TRUNCATION_TOLERANCE: f64 = 1e-12;

/// Largest Fock index the Hermite recurrence is trusted for.
pub const MAX_FOCK: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Position,
    Momentum,
}

impl Basis {
    pub fn name(self) -> &'static str {
        match self {
            Basis::Position => "position",
            Basis::Momentum => "momentum",
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Coherent-state amplitude. The complex `α` and the quadrature
/// parametrization `α = (α_r + iα_i)/√2` describe the same state; `α_r` is
/// the mean position and `α_i` the mean momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentAmplitude(Complex64);

impl CoherentAmplitude {
    pub fn new(alpha: Complex64) -> Self {
        Self(alpha)
    }

    pub fn from_quadratures(alpha_r: f64, alpha_i: f64) -> Self {
        Self(Complex64::new(alpha_r, alpha_i) * FRAC_1_SQRT_2)
    }

    pub fn vacuum() -> Self {
        Self(Complex64::new(0.0, 0.0))
    }

    pub fn alpha(&self) -> Complex64 {
        self.0
    }

    /// `(α_r, α_i) = √2·(Re α, Im α)`.
    pub fn quadratures(&self) -> (f64, f64) {
        (SQRT_2 * self.0.re, SQRT_2 * self.0.im)
    }
}

impl From<Complex64> for CoherentAmplitude {
    fn from(alpha: Complex64) -> Self {
        Self(alpha)
    }
}

/// Complex amplitudes sampled on a grid, in either basis.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: QuadratureGrid,
    amplitudes: Vec<Complex64>,
    basis: Basis,
}

impl WaveFunction {
    /// Wraps raw amplitudes without normalizing.
    pub fn from_amplitudes(
        grid: QuadratureGrid,
        amplitudes: Vec<Complex64>,
        basis: Basis,
    ) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid,
            amplitudes,
            basis,
        })
    }

    /// Samples `f` on the position grid and normalizes.
    pub fn from_fn(grid: QuadratureGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let amplitudes = grid.q_values().into_iter().map(f).collect();
        Self::from_amplitudes(grid, amplitudes, Basis::Position)?.normalized()
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    fn measure(&self) -> f64 {
        match self.basis {
            Basis::Position => self.grid.dq(),
            Basis::Momentum => self.grid.dp(),
        }
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.measure()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm_squared().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidParameter(
                "cannot normalize a zero or non-finite state".into(),
            ));
        }
        for a in self.amplitudes.iter_mut() {
            *a /= norm;
        }
        Ok(self)
    }

    /// `|ψ|²` per grid point.
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn to_momentum(&self) -> Result<Self> {
        if self.basis == Basis::Momentum {
            return Err(Error::Basis("momentum"));
        }
        Ok(Self {
            grid: self.grid,
            amplitudes: self.grid.forward(&self.amplitudes),
            basis: Basis::Momentum,
        })
    }

    pub fn to_position(&self) -> Result<Self> {
        if self.basis == Basis::Position {
            return Err(Error::Basis("position"));
        }
        Ok(Self {
            grid: self.grid,
            amplitudes: self.grid.inverse(&self.amplitudes),
            basis: Basis::Position,
        })
    }

    /// Same state in the position basis (clone if already there).
    pub fn in_position(&self) -> Self {
        match self.basis {
            Basis::Position => self.clone(),
            Basis::Momentum => self.to_position().expect("basis checked"),
        }
    }

    pub fn in_momentum(&self) -> Self {
        match self.basis {
            Basis::Momentum => self.clone(),
            Basis::Position => self.to_momentum().expect("basis checked"),
        }
    }

    /// Ratio of the largest density among the two edge points of each basis
    /// to the peak density. Errors once either exceeds `tolerance`.
    pub fn check_truncation(&self, tolerance: f64) -> Result<()> {
        let position = self.in_position();
        let momentum = self.in_momentum();
        for (basis, wf) in [("position", &position), ("momentum", &momentum)] {
            let density = wf.density();
            let peak = density.iter().cloned().fold(0.0, f64::max);
            let n = density.len();
            let edge = density[0]
                .max(density[1])
                .max(density[n - 1])
                .max(density[n - 2]);
            let ratio = edge / peak;
            if ratio > tolerance {
                return Err(Error::Truncation {
                    basis,
                    ratio,
                    tolerance,
                });
            }
        }
        Ok(())
    }

    /// `⟨q⟩` for a position-basis state.
    pub fn mean_position(&self) -> f64 {
        let wf = self.in_position();
        let dq = wf.grid.dq();
        wf.amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| wf.grid.q(k) * a.norm_sqr())
            .sum::<f64>()
            * dq
    }

    pub fn variance_position(&self) -> f64 {
        let wf = self.in_position();
        let mean = wf.mean_position();
        let dq = wf.grid.dq();
        wf.amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| (wf.grid.q(k) - mean).powi(2) * a.norm_sqr())
            .sum::<f64>()
            * dq
    }

    pub fn mean_momentum(&self) -> f64 {
        let wf = self.in_momentum();
        let dp = wf.grid.dp();
        wf.amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| wf.grid.p(j) * a.norm_sqr())
            .sum::<f64>()
            * dp
    }

    pub fn variance_momentum(&self) -> f64 {
        let wf = self.in_momentum();
        let mean = wf.mean_momentum();
        let dp = wf.grid.dp();
        wf.amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| (wf.grid.p(j) - mean).powi(2) * a.norm_sqr())
            .sum::<f64>()
            * dp
    }

    /// `⟨ψ|φ⟩` for states on the same grid and basis.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.grid != other.grid || self.basis != other.basis {
            return Err(Error::GridMismatch);
        }
        let sum: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(sum * self.measure())
    }
}

/// Samples `⟨q|α⟩ = π^{-1/4} exp[−q²/2 + √2αq − |α|²/2 − α²/2]` and
/// renormalizes.
pub fn coherent_state(
    alpha: impl Into<CoherentAmplitude>,
    grid: &QuadratureGrid,
) -> Result<WaveFunction> {
    let alpha = alpha.into().alpha();
    let prefactor = PI.powf(-0.25);
    let constant = -0.5 * alpha.norm_sqr() - 0.5 * alpha * alpha;
    let wf = WaveFunction::from_fn(*grid, |q| {
        prefactor * (Complex64::new(-0.5 * q * q, 0.0) + SQRT_2 * alpha * q + constant).exp()
    })?;
    wf.check_truncation(TRUNCATION_TOLERANCE)?;
    Ok(wf)
}

pub fn vacuum(grid: &QuadratureGrid) -> Result<WaveFunction> {
    coherent_state(CoherentAmplitude::vacuum(), grid)
}

/// `n`-th Hermite function via the normalized three-term recurrence
/// `ψ_n = √(2/n)·q·ψ_{n−1} − √((n−1)/n)·ψ_{n−2}`.
pub fn fock_state(n: usize, grid: &QuadratureGrid) -> Result<WaveFunction> {
    if n > MAX_FOCK {
        return Err(Error::InvalidParameter(format!(
            "Fock index {n} exceeds {MAX_FOCK}"
        )));
    }
    let amplitudes = grid
        .q_values()
        .into_iter()
        .map(|q| Complex64::new(hermite_function(n, q), 0.0))
        .collect();
    let wf = WaveFunction::from_amplitudes(*grid, amplitudes, Basis::Position)?.normalized()?;
    wf.check_truncation(TRUNCATION_TOLERANCE)?;
    Ok(wf)
}

pub(crate) fn hermite_function(n: usize, q: f64) -> f64 {
    let mut previous = 0.0;
    let mut current = PI.powf(-0.25) * (-0.5 * q * q).exp();
    for k in 1..=n {
        let kf = k as f64;
        let next = (2.0 / kf).sqrt() * q * current - ((kf - 1.0) / kf).sqrt() * previous;
        previous = current;
        current = next;
    }
    current
}

/// Convex mixture `ρ̂ = Σ_k w_k |ψ_k⟩⟨ψ_k|`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    components: Vec<(f64, WaveFunction)>,
}

impl MixedState {
    pub fn pure(state: WaveFunction) -> Self {
        Self {
            components: vec![(1.0, state)],
        }
    }

    pub fn components(&self) -> &[(f64, WaveFunction)] {
        &self.components
    }

    pub fn grid(&self) -> &QuadratureGrid {
        self.components[0].1.grid()
    }

    /// `⟨q|ρ̂|q⟩` per grid point.
    pub fn position_density(&self) -> Vec<f64> {
        let mut density = vec![0.0; self.grid().len()];
        for (w, wf) in &self.components {
            for (d, a) in density.iter_mut().zip(wf.in_position().amplitudes()) {
                *d += w * a.norm_sqr();
            }
        }
        density
    }

    /// `⟨p|ρ̂|p⟩` per momentum grid point.
    pub fn momentum_density(&self) -> Vec<f64> {
        let mut density = vec![0.0; self.grid().len()];
        for (w, wf) in &self.components {
            for (d, a) in density.iter_mut().zip(wf.in_momentum().amplitudes()) {
                *d += w * a.norm_sqr();
            }
        }
        density
    }

    pub fn is_pure(&self) -> bool {
        self.components.len() == 1
    }
}

impl From<WaveFunction> for MixedState {
    fn from(state: WaveFunction) -> Self {
        Self::pure(state)
    }
}

/// Builds a mixture, renormalizing the weights to sum to one. Component
/// states are normalized and brought to the position basis.
pub fn mix(components: Vec<(f64, WaveFunction)>) -> Result<MixedState> {
    let Some((_, first)) = components.first() else {
        return Err(Error::EmptyMixture);
    };
    let grid = *first.grid();
    let mut total = 0.0;
    for (w, wf) in &components {
        if !(w.is_finite()) || *w < 0.0 {
            return Err(Error::NegativeWeight(*w));
        }
        if *wf.grid() != grid {
            return Err(Error::GridMismatch);
        }
        total += w;
    }
    if total <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    let components = components
        .into_iter()
        .map(|(w, wf)| Ok((w / total, wf.in_position().normalized()?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MixedState { components })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> QuadratureGrid {
        QuadratureGrid::default_grid()
    }

    #[test]
    fn vacuum_peak_density() {
        let g = grid();
        let wf = vacuum(&g).unwrap();
        let k = g.nearest_q_index(0.0);
        assert!((wf.density()[k] - 1.0 / PI.sqrt()).abs() < 1e-12);
        assert!((wf.norm_squared() - 1.0).abs() < 1e-12);
        assert!(wf.amplitudes().iter().all(|a| a.im.abs() < 1e-15));
    }

    #[test]
    fn coherent_peak_follows_alpha_r() {
        let g = grid();
        let wf = coherent_state(Complex64::new(2.0 / SQRT_2, 0.0), &g).unwrap();
        let density = wf.density();
        let (k_max, _) =
            density.iter().enumerate().fold(
                (0, 0.0),
                |acc, (k, d)| if *d > acc.1 { (k, *d) } else { acc },
            );
        assert_eq!(g.q(k_max), 2.0);
    }

    #[test]
    fn truncation_is_detected() {
        let g = QuadratureGrid::new(-4.0, 4.0, 64).unwrap();
        let err = coherent_state(CoherentAmplitude::from_quadratures(0.0, 3.0), &g).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }), "{err:?}");
    }

    #[test]
    fn fock_states() {
        let g = grid();
        let f0 = fock_state(0, &g).unwrap();
        let v = vacuum(&g).unwrap();
        for (a, b) in f0.amplitudes().iter().zip(v.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
        let f1 = fock_state(1, &g).unwrap();
        assert_eq!(f1.amplitudes()[g.nearest_q_index(0.0)].norm(), 0.0);
        let k = g.nearest_q_index(1.25);
        let k_neg = g.nearest_q_index(-1.25);
        assert!((f1.amplitudes()[k] + f1.amplitudes()[k_neg]).norm() < 1e-14);
        let f2 = fock_state(2, &g).unwrap();
        assert!((f2.norm_squared() - 1.0).abs() < 1e-10);
        assert!(f2.inner(&f1).unwrap().norm() < 1e-13);
        assert!(f2.inner(&f0).unwrap().norm() < 1e-13);
        assert!(fock_state(51, &g).is_err());
        let f50 = fock_state(50, &g).unwrap();
        assert!((f50.norm_squared() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fourier_pair_of_vacuum() {
        let g = grid();
        let psi_p = vacuum(&g).unwrap().to_momentum().unwrap();
        for (j, a) in psi_p.amplitudes().iter().enumerate() {
            let p = g.p(j);
            let want = PI.powf(-0.25) * (-0.5 * p * p).exp();
            assert!((a - want).norm() < 1e-12, "p = {p}");
        }
        assert!(matches!(psi_p.to_momentum(), Err(Error::Basis("momentum"))));
    }

    #[test]
    fn momentum_peak_of_imaginary_alpha() {
        let g = grid();
        let beta = 2.5;
        let psi_p = coherent_state(CoherentAmplitude::from_quadratures(0.0, beta), &g)
            .unwrap()
            .to_momentum()
            .unwrap();
        // |ψ̃(p)|² = π^{-1/2} e^{−(p−β)²}
        for (j, a) in psi_p.amplitudes().iter().enumerate() {
            let p = g.p(j);
            let want = (-(p - beta).powi(2)).exp() / PI.sqrt();
            assert!((a.norm_sqr() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let g = grid();
        let wf = coherent_state(CoherentAmplitude::from_quadratures(1.3, -0.7), &g).unwrap();
        let back = wf.to_momentum().unwrap().to_position().unwrap();
        for (a, b) in back.amplitudes().iter().zip(wf.amplitudes()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn coherent_moments() {
        let g = grid();
        for (ar, ai) in [(0.0, 0.0), (2.0, 1.0), (-3.0, 4.0)] {
            let wf = coherent_state(CoherentAmplitude::from_quadratures(ar, ai), &g).unwrap();
            assert!((wf.mean_position() - ar).abs() < 1e-8);
            assert!((wf.mean_momentum() - ai).abs() < 1e-8);
            assert!((wf.variance_position() - 0.5).abs() < 1e-8);
            assert!((wf.variance_momentum() - 0.5).abs() < 1e-8);
        }
    }

    #[test]
    fn mixtures() {
        let g = grid();
        let psi0 = vacuum(&g).unwrap();
        let psi1 = fock_state(1, &g).unwrap();
        let m = mix(vec![(1.0, psi0.clone())]).unwrap();
        assert!(m.is_pure());
        let m = mix(vec![(0.5, psi0.clone()), (0.5, psi1)]).unwrap();
        let total: f64 = m.components().iter().map(|(w, _)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let m = mix(vec![(3.0, psi0.clone()), (1.0, psi0.clone())]).unwrap();
        assert_eq!(m.components()[0].0, 0.75);
        assert!(matches!(
            mix(vec![(-0.1, psi0.clone())]),
            Err(Error::NegativeWeight(_))
        ));
        assert!(matches!(mix(vec![]), Err(Error::EmptyMixture)));
        let other = vacuum(&QuadratureGrid::new(-8.0, 8.0, 256).unwrap()).unwrap();
        assert!(matches!(
            mix(vec![(0.5, psi0), (0.5, other)]),
            Err(Error::GridMismatch)
        ));
    }
}
