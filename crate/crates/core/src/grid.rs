//! Uniform quadrature grid and its Fourier-dual momentum grid.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid `q_k = q_min + k·dq`, `k = 0..n`, with
/// `dq = (q_max − q_min)/n` (the right endpoint is excluded).
///
/// The dual momentum grid is `p_j = (j − n/2)·dp` with `dp = 2π/(n·dq)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    q_min: f64,
    q_max: f64,
    n_points: usize,
}

impl QuadratureGrid {
    pub fn new(q_min: f64, q_max: f64, n_points: usize) -> Result<Self> {
        if !(q_min.is_finite() && q_max.is_finite()) || q_max <= q_min {
            return Err(Error::InvalidRange { q_min, q_max });
        }
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(Error::InvalidPoints(n_points));
        }
        Ok(Self {
            q_min,
            q_max,
            n_points,
        })
    }

    /// `q ∈ [−16, 16)`, 1024 points.
    pub fn default_grid() -> Self {
        Self::new(-16.0, 16.0, 1024).expect("default grid is valid")
    }

    /// Symmetric grid `[−half_width, half_width)`.
    pub fn symmetric(half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_points)
    }

    pub fn q_min(&self) -> f64 {
        self.q_min
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / self.n_points as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * PI / (self.n_points as f64 * self.dq())
    }

    pub fn q(&self, k: usize) -> f64 {
        self.q_min + k as f64 * self.dq()
    }

    pub fn p(&self, j: usize) -> f64 {
        (j as f64 - (self.n_points / 2) as f64) * self.dp()
    }

    pub fn p_min(&self) -> f64 {
        self.p(0)
    }

    pub fn q_values(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.q(k)).collect()
    }

    pub fn p_values(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.p(j)).collect()
    }

    /// Index of the grid point nearest to `q` (clamped to the grid).
    pub fn nearest_q_index(&self, q: f64) -> usize {
        let k = ((q - self.q_min) / self.dq()).round();
        k.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    pub fn nearest_p_index(&self, p: f64) -> usize {
        let j = (p / self.dp()).round() + (self.n_points / 2) as f64;
        j.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    /// Forward transform `ψ̃(p_j) = (2π)^{-1/2} Σ_k dq e^{−i q_k p_j} ψ(q_k)`.
    ///
    /// With `q_k p_j = q_min p_j + 2πk(j − n/2)/n` this is an FFT of
    /// `(−1)^k ψ_k` followed by the phase `e^{−i q_min p_j}`. The map is
    /// exactly unitary between the `dq` and `dp` measures.
    pub fn forward(&self, values: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_points;
        assert_eq!(values.len(), n);
        let mut buf: Vec<Complex64> = values
            .iter()
            .enumerate()
            .map(|(k, v)| if k % 2 == 0 { *v } else { -*v })
            .collect();
        fft_plan(n, false).process(&mut buf);
        let scale = self.dq() / (2.0 * PI).sqrt();
        for (j, v) in buf.iter_mut().enumerate() {
            *v *= scale * self.edge_phase(j).conj();
        }
        buf
    }

    /// Exact inverse of [`forward`](Self::forward):
    /// `ψ(q_k) = (2π)^{-1/2} Σ_j dp e^{i q_k p_j} ψ̃(p_j)`.
    pub fn inverse(&self, values: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_points;
        assert_eq!(values.len(), n);
        let mut buf: Vec<Complex64> = values
            .iter()
            .enumerate()
            .map(|(j, v)| v * self.edge_phase(j))
            .collect();
        fft_plan(n, true).process(&mut buf);
        let scale = self.dp() / (2.0 * PI).sqrt();
        for (k, v) in buf.iter_mut().enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            *v *= scale * sign;
        }
        buf
    }

    /// Band-limited (trigonometric) interpolant of position-basis `values`
    /// evaluated on a grid with `factor` times the resolution over the same
    /// range: point `m` sits at `q_min + m·dq/factor`.
    pub fn refine(&self, values: &[Complex64], factor: usize) -> Vec<Complex64> {
        assert!(factor >= 1 && factor.is_power_of_two());
        let n = self.n_points;
        let spectrum = self.forward(values);
        let fine_n = n * factor;
        // x_m p_j = q_min p_j + 2π m (j − n/2) / fine_n
        let mut buf = vec![Complex64::new(0.0, 0.0); fine_n];
        for (j, s) in spectrum.iter().enumerate() {
            buf[j] = s * self.edge_phase(j);
        }
        fft_plan(fine_n, true).process(&mut buf);
        let scale = self.dp() / (2.0 * PI).sqrt();
        for (m, v) in buf.iter_mut().enumerate() {
            let turns = -(((m * (n / 2)) % fine_n) as f64) / fine_n as f64;
            *v *= scale * turn_phase(turns);
        }
        buf
    }

    /// `e^{i q_min p_j}` with the argument reduced to turns before evaluation,
    /// exact on symmetric grids.
    fn edge_phase(&self, j: usize) -> Complex64 {
        let m = j as f64 - (self.n_points / 2) as f64;
        turn_phase(self.q_min / (self.q_max - self.q_min) * m)
    }

    /// Plane wave `e^{i q_k p_j}`.
    pub fn plane_wave(&self, k: usize, j: usize) -> Complex64 {
        let n = self.n_points as i64;
        let m = j as i64 - n / 2;
        let turns = (self.q_min / (self.q_max - self.q_min) * m as f64).fract()
            + (k as i64 * m).rem_euclid(n) as f64 / n as f64;
        turn_phase(turns)
    }

    /// Shifts position-basis values by `shift`: returns `f(q_k − shift)` using
    /// the band-limited interpolant (multiplication by `e^{−i p shift}`).
    pub fn translate(&self, values: &[Complex64], shift: f64) -> Vec<Complex64> {
        let mut spectrum = self.forward(values);
        self.translate_spectrum_in_place(&mut spectrum, shift);
        self.inverse(&spectrum)
    }

    pub(crate) fn translate_spectrum_in_place(&self, spectrum: &mut [Complex64], shift: f64) {
        for (j, v) in spectrum.iter_mut().enumerate() {
            *v *= Complex64::from_polar(1.0, -self.p(j) * shift);
        }
    }

    /// Spectral derivative of position-basis values.
    pub fn derivative(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut spectrum = self.forward(values);
        for (j, v) in spectrum.iter_mut().enumerate() {
            *v *= Complex64::new(0.0, self.p(j));
        }
        self.inverse(&spectrum)
    }

    /// `∫_{q_min}^{x} f(q) dq` for real samples `f`, integrating the
    /// trigonometric interpolant exactly. `x` is clamped to the grid range.
    pub fn cumulative_integral(&self, values: &[f64], x: f64) -> f64 {
        let coefficients = self.fourier_coefficients(values);
        self.cumulative_from_coefficients(&coefficients, x)
    }

    pub(crate) fn fourier_coefficients(&self, values: &[f64]) -> Vec<Complex64> {
        let n = self.n_points;
        assert_eq!(values.len(), n);
        let mut buf: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        fft_plan(n, false).process(&mut buf);
        for v in buf.iter_mut() {
            *v /= n as f64;
        }
        buf
    }

    /// `coefficients[m]` multiplies `e^{2πi m (q − q_min)/L}`; indices above
    /// `n/2` are negative frequencies and the Nyquist term is split evenly.
    pub(crate) fn cumulative_from_coefficients(&self, coefficients: &[Complex64], x: f64) -> f64 {
        let n = self.n_points;
        let length = self.q_max - self.q_min;
        let t = (x - self.q_min).clamp(0.0, length);
        let mut total = coefficients[0].re * t;
        for (m, c) in coefficients.iter().enumerate().skip(1) {
            let freq = if m < n / 2 {
                m as f64
            } else if m == n / 2 {
                // Nyquist: real part of cos term, contributes sin(πn t/L)/(...)·Re c
                let k = 2.0 * PI * m as f64 / length;
                total += c.re * (k * t).sin() / k;
                continue;
            } else {
                m as f64 - n as f64
            };
            let k = 2.0 * PI * freq / length;
            let integral = (Complex64::new(0.0, k * t).exp() - 1.0) / Complex64::new(0.0, k);
            total += (c * integral).re;
        }
        total
    }
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self::default_grid()
    }
}

fn turn_phase(turns: f64) -> Complex64 {
    let t = turns - turns.round();
    Complex64::from_polar(1.0, 2.0 * PI * t)
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft_plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        }
    })
}
