//! Object observables and their action on grid wavefunctions.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{Basis, WaveFunction};

/// Real function of a single variable, shareable across threads.
#[derive(Clone)]
pub struct RealFn {
    label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl RealFn {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for RealFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RealFn({})", self.label)
    }
}

#[derive(Debug, Clone)]
pub enum ObservableSpec {
    /// `f(q̂)`
    DiagonalInQ(RealFn),
    /// `g(p̂)`
    DiagonalInP(RealFn),
    PSquared,
    QSquared,
    /// `(p̂² + q̂²)/2`
    Energy,
    /// `Σ_k a_k ĉ_k`
    Combination(Vec<(f64, ObservableSpec)>),
}

impl ObservableSpec {
    pub fn position() -> Self {
        Self::DiagonalInQ(RealFn::new("q", |q| q))
    }

    pub fn momentum() -> Self {
        Self::DiagonalInP(RealFn::new("p", |p| p))
    }

    /// Parses the short names used on the command line:
    /// `q`, `p`, `q2`, `p2`, `energy`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "q" => Ok(Self::position()),
            "p" => Ok(Self::momentum()),
            "q2" => Ok(Self::QSquared),
            "p2" => Ok(Self::PSquared),
            "energy" => Ok(Self::Energy),
            other => Err(Error::InvalidParameter(format!(
                "unknown observable `{other}`"
            ))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::DiagonalInQ(f) => format!("f(q)={}", f.label()),
            Self::DiagonalInP(g) => format!("g(p)={}", g.label()),
            Self::PSquared => "p2".into(),
            Self::QSquared => "q2".into(),
            Self::Energy => "energy".into(),
            Self::Combination(terms) => terms
                .iter()
                .map(|(a, c)| format!("{a}*[{}]", c.label()))
                .collect::<Vec<_>>()
                .join("+"),
        }
    }

    /// `c(p)` when the observable is a function of momentum alone.
    pub fn momentum_function(&self) -> Option<RealFn> {
        match self {
            Self::DiagonalInP(g) => Some(g.clone()),
            Self::PSquared => Some(RealFn::new("p^2", |p| p * p)),
            Self::Combination(terms) => {
                let parts = terms
                    .iter()
                    .map(|(a, c)| c.momentum_function().map(|f| (*a, f)))
                    .collect::<Option<Vec<_>>>()?;
                Some(RealFn::new(self.label(), move |p| {
                    parts.iter().map(|(a, f)| a * f.eval(p)).sum()
                }))
            }
            _ => None,
        }
    }

    /// `f(q)` when the observable is a function of position alone.
    pub fn position_function(&self) -> Option<RealFn> {
        match self {
            Self::DiagonalInQ(f) => Some(f.clone()),
            Self::QSquared => Some(RealFn::new("q^2", |q| q * q)),
            Self::Combination(terms) => {
                let parts = terms
                    .iter()
                    .map(|(a, c)| c.position_function().map(|f| (*a, f)))
                    .collect::<Option<Vec<_>>>()?;
                Some(RealFn::new(self.label(), move |q| {
                    parts.iter().map(|(a, f)| a * f.eval(q)).sum()
                }))
            }
            _ => None,
        }
    }

    /// `ĉ|ψ⟩` in the position basis (not normalized). Momentum-diagonal parts
    /// act by spectral multiplication.
    pub fn apply(&self, wf: &WaveFunction) -> WaveFunction {
        let grid = *wf.grid();
        let position = wf.in_position();
        let amplitudes = match self {
            Self::DiagonalInQ(f) => multiply_in_q(&position, |q| f.eval(q)),
            Self::QSquared => multiply_in_q(&position, |q| q * q),
            Self::DiagonalInP(g) => multiply_in_p(&position, |p| g.eval(p)),
            Self::PSquared => multiply_in_p(&position, |p| p * p),
            Self::Energy => {
                let kinetic = multiply_in_p(&position, |p| p * p);
                let potential = multiply_in_q(&position, |q| q * q);
                kinetic
                    .iter()
                    .zip(&potential)
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect()
            }
            Self::Combination(terms) => {
                let mut total = vec![Complex64::new(0.0, 0.0); grid.len()];
                for (a, c) in terms {
                    let part = c.apply(&position);
                    for (t, v) in total.iter_mut().zip(part.amplitudes()) {
                        *t += *a * v;
                    }
                }
                total
            }
        };
        WaveFunction::from_amplitudes(grid, amplitudes, Basis::Position).expect("same grid")
    }

    /// `⟨ψ|ĉ|ψ⟩`.
    pub fn expectation(&self, wf: &WaveFunction) -> Complex64 {
        let position = wf.in_position();
        position.inner(&self.apply(&position)).expect("same grid")
    }
}

fn multiply_in_q(wf: &WaveFunction, f: impl Fn(f64) -> f64) -> Vec<Complex64> {
    let grid = wf.grid();
    wf.amplitudes()
        .iter()
        .enumerate()
        .map(|(k, a)| a * f(grid.q(k)))
        .collect()
}

fn multiply_in_p(wf: &WaveFunction, g: impl Fn(f64) -> f64) -> Vec<Complex64> {
    let grid = wf.grid();
    let mut spectrum = grid.forward(wf.amplitudes());
    for (j, v) in spectrum.iter_mut().enumerate() {
        *v *= g(grid.p(j));
    }
    grid.inverse(&spectrum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::QuadratureGrid;
    use crate::state::{coherent_state, fock_state, vacuum, CoherentAmplitude};

    #[test]
    fn p_squared_on_vacuum() {
        let g = QuadratureGrid::default_grid();
        let psi = vacuum(&g).unwrap();
        let out = ObservableSpec::PSquared.apply(&psi);
        for k in 0..g.len() {
            let q = g.q(k);
            if q.abs() <= 4.0 {
                let want = (1.0 - q * q) * psi.amplitudes()[k];
                assert!((out.amplitudes()[k] - want).norm() < 1e-8, "q = {q}");
            }
        }
    }

    #[test]
    fn identity_and_energy_eigenvalue() {
        let g = QuadratureGrid::default_grid();
        let psi = vacuum(&g).unwrap();
        let one = ObservableSpec::DiagonalInQ(RealFn::new("1", |_| 1.0)).apply(&psi);
        assert_eq!(one.amplitudes(), psi.amplitudes());
        let e = ObservableSpec::Energy.apply(&psi);
        for (a, b) in e.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - 0.5 * b).norm() < 1e-12);
        }
        let psi3 = fock_state(3, &g).unwrap();
        let e3 = ObservableSpec::Energy.apply(&psi3);
        for (a, b) in e3.amplitudes().iter().zip(psi3.amplitudes()) {
            assert!((a - 3.5 * b).norm() < 1e-10);
        }
    }

    #[test]
    fn energy_is_mean_of_quadratures() {
        let g = QuadratureGrid::default_grid();
        let psi = coherent_state(CoherentAmplitude::from_quadratures(1.0, 2.0), &g).unwrap();
        let e = ObservableSpec::Energy.apply(&psi);
        let combo = ObservableSpec::Combination(vec![
            (0.5, ObservableSpec::PSquared),
            (0.5, ObservableSpec::QSquared),
        ])
        .apply(&psi);
        for (a, b) in e.amplitudes().iter().zip(combo.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn spectral_kinetic_expectation_matches_momentum_density() {
        let g = QuadratureGrid::default_grid();
        let psi = coherent_state(CoherentAmplitude::from_quadratures(-1.0, 1.5), &g).unwrap();
        let spectral = ObservableSpec::PSquared.expectation(&psi);
        let psi_p = psi.to_momentum().unwrap();
        let direct: f64 = psi_p
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(j, a)| g.p(j).powi(2) * a.norm_sqr())
            .sum::<f64>()
            * g.dp();
        assert!((spectral.re - direct).abs() < 1e-8);
        assert!(spectral.im.abs() < 1e-12);
        // ⟨p²⟩ = α_i² + 1/2
        assert!((direct - (1.5f64.powi(2) + 0.5)).abs() < 1e-10);
    }

    #[test]
    fn p_squared_converges_under_refinement() {
        let alpha = CoherentAmplitude::from_quadratures(2.0, -1.0);
        let coarse = QuadratureGrid::new(-16.0, 16.0, 1024).unwrap();
        let fine = QuadratureGrid::new(-16.0, 16.0, 2048).unwrap();
        let a = ObservableSpec::PSquared
            .expectation(&coherent_state(alpha, &coarse).unwrap())
            .re;
        let b = ObservableSpec::PSquared
            .expectation(&coherent_state(alpha, &fine).unwrap())
            .re;
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn diagonal_functions() {
        assert!(ObservableSpec::PSquared.momentum_function().is_some());
        assert!(ObservableSpec::Energy.momentum_function().is_none());
        assert!(ObservableSpec::Energy.position_function().is_none());
        assert_eq!(
            ObservableSpec::QSquared
                .position_function()
                .unwrap()
                .eval(3.0),
            9.0
        );
        assert!(ObservableSpec::from_name("x").is_err());
    }
}
