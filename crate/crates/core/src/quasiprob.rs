//! Quasiprobability distributions on the (q, p) tensor grid.
//!
//! The standard-ordered distribution is `S(q,p) = ⟨q|p⟩⟨p|ρ̂|q⟩` with
//! `⟨q|p⟩ = e^{iqp}/√(2π)`. The Kirkwood distribution is its complex
//! conjugate and Margenau–Hill its real part. The Wigner function is kept as
//! a contrast: same marginals, but nonnegative on coherent states.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{fft_plan, QuadratureGrid};
use crate::state::MixedState;
use crate::weak::DENSITY_FLOOR;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    StandardOrdered,
    Kirkwood,
    MargenauHill,
    Wigner,
}

impl FieldKind {
    pub fn name(self) -> &'static str {
        match self {
            FieldKind::StandardOrdered => "standard",
            FieldKind::Kirkwood => "kirkwood",
            FieldKind::MargenauHill => "margenau-hill",
            FieldKind::Wigner => "wigner",
        }
    }

    pub fn is_real(self) -> bool {
        matches!(self, FieldKind::MargenauHill | FieldKind::Wigner)
    }

    pub(crate) fn code(self) -> u32 {
        match self {
            FieldKind::StandardOrdered => 0,
            FieldKind::Kirkwood => 1,
            FieldKind::MargenauHill => 2,
            FieldKind::Wigner => 3,
        }
    }

    pub(crate) fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(FieldKind::StandardOrdered),
            1 => Some(FieldKind::Kirkwood),
            2 => Some(FieldKind::MargenauHill),
            3 => Some(FieldKind::Wigner),
            _ => None,
        }
    }
}

/// Dense complex field over `grid.q × grid.p`, stored row-major with `q`
/// as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiprobField {
    grid: QuadratureGrid,
    values: Vec<Complex64>,
    kind: FieldKind,
}

impl QuasiprobField {
    pub fn from_values(
        grid: QuadratureGrid,
        values: Vec<Complex64>,
        kind: FieldKind,
    ) -> Result<Self> {
        if values.len() != grid.len() * grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, values, kind })
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, k: usize, j: usize) -> Complex64 {
        self.values[k * self.grid.len() + j]
    }

    /// Value at the cell nearest `(q, p)`.
    pub fn at(&self, q: f64, p: f64) -> Complex64 {
        self.get(self.grid.nearest_q_index(q), self.grid.nearest_p_index(p))
    }

    fn row(&self, k: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.values[k * n..(k + 1) * n]
    }

    /// `Σ_j F(q_k, p_j) dp`.
    pub fn q_marginal(&self) -> Vec<Complex64> {
        let dp = self.grid.dp();
        (0..self.grid.len())
            .map(|k| self.row(k).iter().sum::<Complex64>() * dp)
            .collect()
    }

    /// `Σ_k F(q_k, p_j) dq`.
    pub fn p_marginal(&self) -> Vec<Complex64> {
        let n = self.grid.len();
        let dq = self.grid.dq();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            for (o, v) in out.iter_mut().zip(self.row(k)) {
                *o += v;
            }
        }
        out.iter().map(|v| v * dq).collect()
    }

    /// `∫∫ F dq dp`.
    pub fn total(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.dq() * self.grid.dp()
    }

    pub fn min_real(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.re)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    fn postselection_density(&self) -> Vec<f64> {
        self.q_marginal().iter().map(|v| v.re).collect()
    }

    /// `∫dp pⁿ F(q,p) / ∫dp F(q,p)` at the grid point nearest `q`, real part.
    pub fn conditional_moment(&self, n: u32, q: f64) -> Result<f64> {
        let density = self.postselection_density();
        let peak = density.iter().cloned().fold(0.0, f64::max);
        let k = self.grid.nearest_q_index(q);
        if density[k] < DENSITY_FLOOR * peak || density[k] <= 0.0 {
            return Err(Error::MaskedPoint(q));
        }
        Ok(self.raw_moment(k, n) / density[k])
    }

    /// Conditional moments at every grid point, `None` where masked.
    pub fn conditional_moments(&self, n: u32) -> Vec<Option<f64>> {
        let density = self.postselection_density();
        let peak = density.iter().cloned().fold(0.0, f64::max);
        (0..self.grid.len())
            .map(|k| {
                if density[k] >= DENSITY_FLOOR * peak && density[k] > 0.0 {
                    Some(self.raw_moment(k, n) / density[k])
                } else {
                    None
                }
            })
            .collect()
    }

    fn raw_moment(&self, k: usize, n: u32) -> f64 {
        let dp = self.grid.dp();
        self.row(k)
            .iter()
            .enumerate()
            .map(|(j, v)| self.grid.p(j).powi(n as i32) * v.re)
            .sum::<f64>()
            * dp
    }

    /// `∫∫ max(0, −F) dq dp` for real-valued kinds.
    pub fn negativity_volume(&self) -> Result<f64> {
        if !self.kind.is_real() {
            return Err(Error::ComplexField(self.kind.name()));
        }
        Ok(self.values.iter().map(|v| (-v.re).max(0.0)).sum::<f64>()
            * self.grid.dq()
            * self.grid.dp())
    }

    fn map(&self, kind: FieldKind, f: impl Fn(Complex64) -> Complex64 + Sync) -> Self {
        Self {
            grid: self.grid,
            values: self.values.par_iter().map(|v| f(*v)).collect(),
            kind,
        }
    }
}

/// `S(q,p) = Σ_k w_k ⟨q|p⟩ ψ̃_k(p) ψ_k*(q)`.
pub fn standard_ordered(state: &MixedState) -> QuasiprobField {
    let grid = *state.grid();
    let n = grid.len();
    let components: Vec<(f64, Vec<Complex64>, Vec<Complex64>)> = state
        .components()
        .iter()
        .map(|(w, wf)| {
            let position = wf.in_position();
            let momentum = position.in_momentum();
            (
                *w,
                position.amplitudes().to_vec(),
                momentum.amplitudes().to_vec(),
            )
        })
        .collect();
    let norm = 1.0 / (2.0 * PI).sqrt();
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
        for (w, psi, psi_p) in &components {
            let left = *w * psi[k].conj();
            if left == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (j, cell) in row.iter_mut().enumerate() {
                *cell += left * psi_p[j];
            }
        }
        for (j, cell) in row.iter_mut().enumerate() {
            *cell *= norm * grid.plane_wave(k, j);
        }
    });
    QuasiprobField {
        grid,
        values,
        kind: FieldKind::StandardOrdered,
    }
}

pub fn kirkwood(state: &MixedState) -> QuasiprobField {
    standard_ordered(state).map(FieldKind::Kirkwood, |v| v.conj())
}

pub fn margenau_hill(state: &MixedState) -> QuasiprobField {
    standard_ordered(state).map(FieldKind::MargenauHill, |v| Complex64::new(v.re, 0.0))
}

/// Reinterprets a standard-ordered field as its Kirkwood or Margenau–Hill
/// counterpart.
pub fn convert(field: &QuasiprobField, kind: FieldKind) -> Result<QuasiprobField> {
    match (field.kind, kind) {
        (a, b) if a == b => Ok(field.clone()),
        (FieldKind::StandardOrdered, FieldKind::Kirkwood)
        | (FieldKind::Kirkwood, FieldKind::StandardOrdered) => Ok(field.map(kind, |v| v.conj())),
        (FieldKind::StandardOrdered | FieldKind::Kirkwood, FieldKind::MargenauHill) => {
            Ok(field.map(kind, |v| Complex64::new(v.re, 0.0)))
        }
        (from, to) => Err(Error::InvalidParameter(format!(
            "cannot convert a {} field to {}",
            from.name(),
            to.name()
        ))),
    }
}

/// `S_0(q,p) = e^{−(q²+p²)/2 + iqp} / (√2·π)`.
pub fn vacuum_standard_closed_form(q: f64, p: f64) -> Complex64 {
    Complex64::from_polar((-(q * q + p * p) / 2.0).exp() / (SQRT_2 * PI), q * p)
}

/// Wigner function `W(q,p) = (2π)^{-1} ∫dy e^{−ipy} ⟨q+y/2|ρ̂|q−y/2⟩`.
///
/// Each component is refined to half spacing with its band-limited
/// interpolant so that `q ± y/2` with `y = s·dq` land on samples. The sum over
/// `s` folds onto the `n` frequencies of the dual grid and is done by FFT.
pub fn wigner(state: &MixedState) -> QuasiprobField {
    let grid = *state.grid();
    let n = grid.len();
    let refined: Vec<(f64, Vec<Complex64>)> = state
        .components()
        .iter()
        .map(|(w, wf)| (*w, grid.refine(wf.in_position().amplitudes(), 2)))
        .collect();
    let fine_n = 2 * n;
    let dq = grid.dq();
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
        let centre = 2 * k as isize;
        let mut folded = vec![Complex64::new(0.0, 0.0); n];
        for s in -(n as isize - 1)..(n as isize) {
            let plus = centre + s;
            let minus = centre - s;
            if plus < 0 || minus < 0 || plus >= fine_n as isize || minus >= fine_n as isize {
                continue;
            }
            let mut product = Complex64::new(0.0, 0.0);
            for (w, psi) in &refined {
                product += *w * psi[plus as usize] * psi[minus as usize].conj();
            }
            // e^{−i p_j s dq} = (−1)^s e^{−2πi s j / n}
            if s.rem_euclid(2) == 1 {
                product = -product;
            }
            folded[s.rem_euclid(n as isize) as usize] += product;
        }
        fft_plan(n, false).process(&mut folded);
        let scale = dq / (2.0 * PI);
        for (cell, v) in row.iter_mut().zip(&folded) {
            *cell = Complex64::new(v.re * scale, 0.0);
        }
    });
    QuasiprobField {
        grid,
        values,
        kind: FieldKind::Wigner,
    }
}
