//! Exact simulation of the von Neumann weak-measurement coupling
//! `Û_ε = exp(−iε ĉ⊗P̂)` between an object and a pointer, read out in the
//! object position `q` and pointer position `Q`.
//!
//! For `ĉ = c(p̂)` and pure object/pointer,
//! `Ψ_ε(q,Q) = (2π)^{-1/2} ∫dp e^{iqp} ψ̃(p) φ(Q − ε c(p))`; for `ĉ = f(q̂)`,
//! `Ψ_ε(q,Q) = ψ(q) φ(Q − ε f(q))`. Pointer shifts use the band-limited
//! interpolant, so the evolution is unitary to rounding. Mixtures are summed
//! incoherently over every (object, pointer) component pair.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::QuadratureGrid;
use crate::observable::{ObservableSpec, RealFn};
use crate::state::{mix, Basis, MixedState, WaveFunction};
use crate::weak::{weak_value, WeakValueProfile};

/// `max |J|` allowed relative to the peak pointer density.
pub const CURRENT_TOLERANCE: f64 = 1e-10;

/// Object-marginal fraction of the peak below which a `q` slice is masked.
pub const CONDITIONING_FLOOR: f64 = 1e-10;

/// Probability mass the simulator may drop from the object's spectrum (or
/// position profile) to bound the pointer shift. Conditioning reaches slices
/// with density 1e-10 of the peak, so the dropped amplitude has to sit far
/// below that.
pub const TAIL_MASS_TOLERANCE: f64 = 1e-30;

/// Pointer mass allowed to leave the pointer grid after a shift.
pub const POINTER_EDGE_MASS: f64 = 1e-12;

/// Default `|ε·Re c_w| / σ` above which a point is flagged as not weak.
pub const WEAKNESS_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct PointerState {
    state: MixedState,
    mean: f64,
    sigma: f64,
}

impl PointerState {
    pub fn new(state: MixedState) -> Result<Self> {
        let grid = *state.grid();
        let density = state.position_density();
        let dq = grid.dq();
        let mean: f64 = density
            .iter()
            .enumerate()
            .map(|(k, d)| grid.q(k) * d)
            .sum::<f64>()
            * dq;
        let variance: f64 = density
            .iter()
            .enumerate()
            .map(|(k, d)| (grid.q(k) - mean).powi(2) * d)
            .sum::<f64>()
            * dq;
        let sigma = variance.sqrt();
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pointer standard deviation {sigma} is not positive"
            )));
        }
        Ok(Self { state, mean, sigma })
    }

    /// Pointer grid `Q ∈ [−12σ, 12σ)` with 512 points.
    pub fn default_grid(sigma: f64) -> Result<QuadratureGrid> {
        QuadratureGrid::symmetric(12.0 * sigma, 512)
    }

    /// Real Gaussian `φ(Q) ∝ exp(−Q²/(4σ²))`, so that `Var Q = σ²`.
    pub fn gaussian(sigma: f64, grid: &QuadratureGrid) -> Result<Self> {
        Self::new(MixedState::pure(gaussian_amplitude(sigma, 0.0, grid)?))
    }

    /// Incoherent mixture of centred real Gaussians, `(weight, σ)` pairs. The
    /// grid should span `±12σ` of the widest component.
    pub fn gaussian_mixture(parts: &[(f64, f64)], grid: &QuadratureGrid) -> Result<Self> {
        let components = parts
            .iter()
            .map(|(w, sigma)| Ok((*w, gaussian_amplitude(*sigma, 0.0, grid)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(mix(components)?)
    }

    /// Multiplies every component by `e^{ikQ}`, giving the pointer a mean
    /// momentum `k` and a current `k·density`.
    pub fn with_drift(self, k: f64) -> Result<Self> {
        let components = self
            .state
            .components()
            .iter()
            .map(|(w, wf)| {
                let grid = *wf.grid();
                let amplitudes = wf
                    .amplitudes()
                    .iter()
                    .enumerate()
                    .map(|(i, a)| a * Complex64::from_polar(1.0, k * grid.q(i)))
                    .collect();
                Ok((
                    *w,
                    WaveFunction::from_amplitudes(grid, amplitudes, Basis::Position)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(mix(components)?)
    }

    pub fn state(&self) -> &MixedState {
        &self.state
    }

    pub fn grid(&self) -> &QuadratureGrid {
        self.state.grid()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Smallest half-width `R` around the mean holding all but
    /// `POINTER_EDGE_MASS` of the pointer probability.
    fn extent(&self) -> f64 {
        let grid = self.grid();
        let density = self.state.position_density();
        let mut order: Vec<usize> = (0..grid.len()).collect();
        order.sort_by(|a, b| {
            let da = (grid.q(*a) - self.mean).abs();
            let db = (grid.q(*b) - self.mean).abs();
            db.total_cmp(&da)
        });
        let mut dropped = 0.0;
        for k in order {
            dropped += density[k] * grid.dq();
            if dropped >= POINTER_EDGE_MASS {
                return (grid.q(k) - self.mean).abs();
            }
        }
        0.0
    }
}

fn gaussian_amplitude(sigma: f64, centre: f64, grid: &QuadratureGrid) -> Result<WaveFunction> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "pointer sigma {sigma} must be positive"
        )));
    }
    WaveFunction::from_fn(*grid, |q| {
        Complex64::new((-(q - centre).powi(2) / (4.0 * sigma * sigma)).exp(), 0.0)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentDensityReport {
    pub max_current: f64,
    pub max_density: f64,
}

impl CurrentDensityReport {
    pub fn accepted(&self) -> bool {
        self.max_current <= CURRENT_TOLERANCE * self.max_density
    }
}

/// Pointer current `J(Q) = Im Σ_k w_k φ_k*(Q) φ_k′(Q)`; errors when it does
/// not vanish.
pub fn validate_pointer(pointer: &PointerState) -> Result<CurrentDensityReport> {
    let report = current_density_report(pointer);
    if report.accepted() {
        Ok(report)
    } else {
        Err(Error::CurrentDensityViolation {
            max_current: report.max_current,
            max_density: report.max_density,
        })
    }
}

pub fn current_density_report(pointer: &PointerState) -> CurrentDensityReport {
    let grid = pointer.grid();
    let mut current = vec![0.0; grid.len()];
    for (w, wf) in pointer.state.components() {
        let derivative = grid.derivative(wf.amplitudes());
        for ((j, a), d) in current.iter_mut().zip(wf.amplitudes()).zip(&derivative) {
            *j += w * (a.conj() * d).im;
        }
    }
    let max_density = pointer
        .state
        .position_density()
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    let max_current = current.iter().map(|j| j.abs()).fold(0.0, f64::max);
    CurrentDensityReport {
        max_current,
        max_density,
    }
}

/// `ρ_ε(q, Q)` on the object grid × pointer grid, row-major in `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    object_grid: QuadratureGrid,
    pointer_grid: QuadratureGrid,
    values: Vec<f64>,
    epsilon: f64,
    pointer_mean: f64,
    neglected_tail_mass: f64,
}

impl JointDistribution {
    pub(crate) fn from_raw(
        object_grid: QuadratureGrid,
        pointer_grid: QuadratureGrid,
        values: Vec<f64>,
        epsilon: f64,
        pointer_mean: f64,
        neglected_tail_mass: f64,
    ) -> Result<Self> {
        if values.len() != object_grid.len() * pointer_grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            object_grid,
            pointer_grid,
            values,
            epsilon,
            pointer_mean,
            neglected_tail_mass,
        })
    }

    pub fn object_grid(&self) -> &QuadratureGrid {
        &self.object_grid
    }

    pub fn pointer_grid(&self) -> &QuadratureGrid {
        &self.pointer_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Pre-interaction mean pointer position.
    pub fn pointer_mean(&self) -> f64 {
        self.pointer_mean
    }

    /// Object probability dropped from the simulation (at most
    /// `TAIL_MASS_TOLERANCE` per object component).
    pub fn neglected_tail_mass(&self) -> f64 {
        self.neglected_tail_mass
    }

    fn slice(&self, k: usize) -> &[f64] {
        let m = self.pointer_grid.len();
        &self.values[k * m..(k + 1) * m]
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.values[k * self.pointer_grid.len() + l]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.object_grid.dq() * self.pointer_grid.dq()
    }

    /// `∫ρ_ε(q,Q) dQ` per object grid point.
    pub fn object_marginal(&self) -> Vec<f64> {
        let dq = self.pointer_grid.dq();
        (0..self.object_grid.len())
            .map(|k| self.slice(k).iter().sum::<f64>() * dq)
            .collect()
    }

    pub fn pointer_marginal(&self) -> Vec<f64> {
        let m = self.pointer_grid.len();
        let mut out = vec![0.0; m];
        for k in 0..self.object_grid.len() {
            for (o, v) in out.iter_mut().zip(self.slice(k)) {
                *o += v;
            }
        }
        out.iter().map(|v| v * self.object_grid.dq()).collect()
    }

    /// Unnormalized pointer slice `ρ_ε(q, ·)` at the grid point nearest `q`.
    pub fn pointer_slice(&self, q: f64) -> &[f64] {
        self.slice(self.object_grid.nearest_q_index(q))
    }

    fn valid_mask(&self) -> (Vec<f64>, Vec<bool>) {
        let marginal = self.object_marginal();
        let peak = marginal.iter().cloned().fold(0.0, f64::max);
        let valid = marginal
            .iter()
            .map(|m| *m > 0.0 && *m >= CONDITIONING_FLOOR * peak)
            .collect();
        (marginal, valid)
    }

    fn slice_mean(&self, k: usize) -> f64 {
        let slice = self.slice(k);
        let weight: f64 = slice.iter().sum();
        let moment: f64 = slice
            .iter()
            .enumerate()
            .map(|(l, v)| self.pointer_grid.q(l) * v)
            .sum();
        moment / weight
    }

    /// `⟨Q⟩` conditioned on the object grid point nearest `q`.
    pub fn conditional_pointer_mean(&self, q: f64) -> Result<f64> {
        let (_, valid) = self.valid_mask();
        let k = self.object_grid.nearest_q_index(q);
        if !valid[k] {
            return Err(Error::MaskedPoint(q));
        }
        Ok(self.slice_mean(k))
    }

    pub fn conditional_pointer_means(&self) -> Vec<Option<f64>> {
        let (_, valid) = self.valid_mask();
        (0..self.object_grid.len())
            .map(|k| valid[k].then(|| self.slice_mean(k)))
            .collect()
    }

    /// `(⟨Q⟩_q − ⟨Q⟩_0)/ε`, the first-order estimate of `Re c_w(q)`.
    pub fn extracted_weak_values(&self) -> Vec<Option<f64>> {
        if self.epsilon == 0.0 {
            return vec![None; self.object_grid.len()];
        }
        self.conditional_pointer_means()
            .into_iter()
            .map(|m| m.map(|m| (m - self.pointer_mean) / self.epsilon))
            .collect()
    }
}

enum Coupling {
    Momentum(RealFn),
    Position(RealFn),
}

fn coupling_for(obs: &ObservableSpec) -> Result<Coupling> {
    if let Some(c) = obs.momentum_function() {
        Ok(Coupling::Momentum(c))
    } else if let Some(f) = obs.position_function() {
        Ok(Coupling::Position(f))
    } else {
        Err(Error::UnsupportedObservable(obs.label()))
    }
}

/// Indices kept after dropping the largest-|c| points whose combined mass
/// stays below `TAIL_MASS_TOLERANCE`. Returns `(kept, dropped_mass)`.
fn truncate_by_coupling(coupling: &[f64], mass: &[f64]) -> (Vec<usize>, f64) {
    let mut order: Vec<usize> = (0..coupling.len()).collect();
    order.sort_by(|a, b| {
        coupling[*b]
            .abs()
            .total_cmp(&coupling[*a].abs())
            .then(a.cmp(b))
    });
    let mut dropped = 0.0;
    let mut cut = 0;
    for &i in &order {
        if dropped + mass[i] >= TAIL_MASS_TOLERANCE {
            break;
        }
        dropped += mass[i];
        cut += 1;
    }
    let mut kept: Vec<usize> = order[cut..].to_vec();
    kept.sort_unstable();
    (kept, dropped)
}

/// Exact (non-perturbative) joint distribution after the interaction.
pub fn evolve_joint(
    object: &MixedState,
    pointer: &PointerState,
    obs: &ObservableSpec,
    epsilon: f64,
) -> Result<JointDistribution> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "coupling {epsilon} must be finite and nonnegative"
        )));
    }
    validate_pointer(pointer)?;
    let coupling = coupling_for(obs)?;
    let object_grid = *object.grid();
    let pointer_grid = *pointer.grid();
    let n = object_grid.len();
    let m = pointer_grid.len();

    let extent = pointer.extent();
    let max_forward = pointer_grid.q_max() - (pointer.mean + extent);
    let max_backward = (pointer.mean - extent) - pointer_grid.q_min();
    let check_shift = |shift: f64| -> Result<()> {
        if shift > max_forward || -shift > max_backward {
            let margin = if shift >= 0.0 {
                max_forward
            } else {
                max_backward
            };
            Err(Error::GridOverflow { shift, margin })
        } else {
            Ok(())
        }
    };

    let pointer_spectra: Vec<(f64, Vec<Complex64>)> = pointer
        .state
        .components()
        .iter()
        .map(|(w, wf)| (*w, pointer_grid.forward(wf.amplitudes())))
        .collect();
    let shifted_pointer = |spectrum: &[Complex64], shift: f64| -> Vec<Complex64> {
        let mut s = spectrum.to_vec();
        pointer_grid.translate_spectrum_in_place(&mut s, shift);
        pointer_grid.inverse(&s)
    };

    let mut values = vec![0.0; n * m];
    let mut neglected = 0.0;
    for (w_obj, wf) in object.components() {
        let psi = wf.in_position();
        match &coupling {
            Coupling::Momentum(c) => {
                let psi_p = object_grid.forward(psi.amplitudes());
                let c_values: Vec<f64> = (0..n).map(|j| c.eval(object_grid.p(j))).collect();
                let mass: Vec<f64> = psi_p
                    .iter()
                    .map(|a| a.norm_sqr() * object_grid.dp())
                    .collect();
                let (kept, dropped) = truncate_by_coupling(&c_values, &mass);
                neglected += w_obj * dropped;
                for &j in &kept {
                    check_shift(epsilon * c_values[j])?;
                }
                for (w_ptr, spectrum) in &pointer_spectra {
                    // rows[i][l] = ψ̃(p_j) φ(Q_l − ε c(p_j)) for j = kept[i]
                    let rows: Vec<Vec<Complex64>> = kept
                        .par_iter()
                        .map(|&j| {
                            let phi = shifted_pointer(spectrum, epsilon * c_values[j]);
                            phi.iter().map(|v| psi_p[j] * v).collect()
                        })
                        .collect();
                    let columns: Vec<Vec<f64>> = (0..m)
                        .into_par_iter()
                        .map(|l| {
                            let mut column = vec![Complex64::new(0.0, 0.0); n];
                            for (i, &j) in kept.iter().enumerate() {
                                column[j] = rows[i][l];
                            }
                            object_grid
                                .inverse(&column)
                                .iter()
                                .map(|a| a.norm_sqr())
                                .collect()
                        })
                        .collect();
                    let weight = w_obj * w_ptr;
                    for (l, column) in columns.iter().enumerate() {
                        for (k, d) in column.iter().enumerate() {
                            values[k * m + l] += weight * d;
                        }
                    }
                }
            }
            Coupling::Position(f) => {
                let f_values: Vec<f64> = (0..n).map(|k| f.eval(object_grid.q(k))).collect();
                let mass: Vec<f64> = psi
                    .amplitudes()
                    .iter()
                    .map(|a| a.norm_sqr() * object_grid.dq())
                    .collect();
                let (kept, dropped) = truncate_by_coupling(&f_values, &mass);
                neglected += w_obj * dropped;
                for &k in &kept {
                    check_shift(epsilon * f_values[k])?;
                }
                for (w_ptr, spectrum) in &pointer_spectra {
                    let slices: Vec<(usize, Vec<f64>)> = kept
                        .par_iter()
                        .map(|&k| {
                            let phi = shifted_pointer(spectrum, epsilon * f_values[k]);
                            let amplitude = psi.amplitudes()[k];
                            (k, phi.iter().map(|v| (amplitude * v).norm_sqr()).collect())
                        })
                        .collect();
                    let weight = w_obj * w_ptr;
                    for (k, slice) in slices {
                        for (l, d) in slice.iter().enumerate() {
                            values[k * m + l] += weight * d;
                        }
                    }
                }
            }
        }
    }

    Ok(JointDistribution {
        object_grid,
        pointer_grid,
        values,
        epsilon,
        pointer_mean: pointer.mean,
        neglected_tail_mass: neglected,
    })
}

/// `⟨Q⟩` at the object grid point nearest `q`.
pub fn conditional_pointer_mean(joint: &JointDistribution, q: f64) -> Result<f64> {
    joint.conditional_pointer_mean(q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeaknessReport {
    pub q: Vec<f64>,
    /// `|ε·Re c_w(q)| / σ`, `None` where the weak value is masked.
    pub ratio: Vec<Option<f64>>,
    pub flagged: Vec<bool>,
    pub threshold: f64,
}

impl WeaknessReport {
    pub fn max_ratio(&self) -> f64 {
        self.ratio.iter().flatten().cloned().fold(0.0, f64::max)
    }

    pub fn any_flagged(&self) -> bool {
        self.flagged.iter().any(|f| *f)
    }

    pub fn flagged_fraction(&self) -> f64 {
        let valid = self.ratio.iter().filter(|r| r.is_some()).count();
        self.flagged.iter().filter(|f| **f).count() as f64 / valid.max(1) as f64
    }
}

pub fn weakness_ratio(
    epsilon: f64,
    profile: &WeakValueProfile,
    pointer: &PointerState,
) -> WeaknessReport {
    weakness_ratio_with_threshold(epsilon, profile, pointer.sigma(), WEAKNESS_THRESHOLD)
}

pub fn weakness_ratio_with_threshold(
    epsilon: f64,
    profile: &WeakValueProfile,
    sigma: f64,
    threshold: f64,
) -> WeaknessReport {
    let grid = profile.grid();
    let ratio: Vec<Option<f64>> = profile
        .values()
        .iter()
        .zip(profile.valid_mask())
        .map(|(v, ok)| ok.then(|| (epsilon * v.re).abs() / sigma))
        .collect();
    let flagged = ratio
        .iter()
        .map(|r| r.is_some_and(|r| r > threshold))
        .collect();
    WeaknessReport {
        q: grid.q_values(),
        ratio,
        flagged,
        threshold,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    /// `max_q |⟨Q⟩_q − ⟨Q⟩_0 − ε·Re c_w(q)|` over the valid slices.
    pub max_error: f64,
    pub ratio_to_prev: Option<f64>,
    pub max_weakness_ratio: f64,
    pub weakness_violated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// Every defined error ratio lies in `[low, high]`.
    pub fn ratios_within(&self, low: f64, high: f64) -> bool {
        let ratios: Vec<f64> = self.rows.iter().filter_map(|r| r.ratio_to_prev).collect();
        !ratios.is_empty() && ratios.iter().all(|r| (low..=high).contains(r))
    }
}

/// Compares the exact conditional pointer shift with the first-order
/// prediction `ε·Re c_w(q)` at each coupling.
pub fn shift_convergence_study(
    object: &MixedState,
    pointer: &PointerState,
    obs: &ObservableSpec,
    epsilons: &[f64],
) -> Result<ConvergenceReport> {
    if epsilons.len() < 2 {
        return Err(Error::InvalidParameter(
            "convergence study needs at least two couplings".into(),
        ));
    }
    let mut sorted = epsilons.to_vec();
    sorted.sort_by(f64::total_cmp);
    let positive: Vec<f64> = sorted.iter().cloned().filter(|e| *e > 0.0).collect();
    for pair in positive.windows(2) {
        if pair[1] < 2.0 * pair[0] * (1.0 - 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "consecutive couplings {} and {} differ by less than a factor of two",
                pair[0], pair[1]
            )));
        }
    }
    let profile = weak_value(obs, object)?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(sorted.len());
    for &epsilon in &sorted {
        let joint = evolve_joint(object, pointer, obs, epsilon)?;
        let means = joint.conditional_pointer_means();
        let mut max_error: f64 = 0.0;
        let mut max_weakness: f64 = 0.0;
        for (k, mean) in means.iter().enumerate() {
            let (Some(mean), true) = (mean, profile.valid_mask()[k]) else {
                continue;
            };
            let predicted = epsilon * profile.values()[k].re;
            max_error = max_error.max((mean - joint.pointer_mean() - predicted).abs());
            max_weakness = max_weakness.max(predicted.abs() / pointer.sigma());
        }
        let ratio_to_prev = rows
            .last()
            .filter(|prev| prev.epsilon > 0.0 && prev.max_error > 0.0)
            .map(|prev| max_error / prev.max_error);
        rows.push(ConvergenceRow {
            epsilon,
            max_error,
            ratio_to_prev,
            max_weakness_ratio: max_weakness,
            weakness_violated: max_weakness > WEAKNESS_THRESHOLD,
        });
    }
    Ok(ConvergenceReport { rows })
}
