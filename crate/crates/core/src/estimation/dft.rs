//! Windowed, zero-padded discrete Fourier transforms and peak picking.

use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Rectangular,
    FlatTop,
}

impl Window {
    /// Window coefficients for `n` samples.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::FlatTop => {
                const A: [f64; 5] = [0.215_578_95, 0.416_631_58, 0.277_263_158, 0.083_578_947, 0.006_947_368];
                let denom = (n.max(2) - 1) as f64;
                (0..n)
                    .map(|i| {
                        let x = 2.0 * PI * i as f64 / denom;
                        A[0] - A[1] * x.cos() + A[2] * (2.0 * x).cos() - A[3] * (3.0 * x).cos()
                            + A[4] * (4.0 * x).cos()
                    })
                    .collect()
            }
        }
    }
}

/// Spectrum `X(f) = Σ_n w_n y_n e^{−i f t_n}` on an ascending angular
/// frequency grid, so a component `e^{iνt}` peaks at `f = ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub values: Vec<C64>,
    /// Unpadded bin width `2π/(M dt)`.
    pub bin_width: f64,
}

impl Spectrum {
    pub fn compute(y: &[C64], dt: f64, window: Window, pad_factor: usize) -> Self {
        let m = y.len();
        let nfft = (m * pad_factor.max(1)).next_power_of_two();
        let w = window.coefficients(m);
        let mut buf: Vec<C64> = y.iter().zip(&w).map(|(v, c)| v * *c).collect();
        buf.resize(nfft, C64::new(0.0, 0.0));
        FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
        // reorder to ascending frequency
        let half = nfft / 2;
        let df = 2.0 * PI / (nfft as f64 * dt);
        let mut freqs = Vec::with_capacity(nfft);
        let mut values = Vec::with_capacity(nfft);
        for k in half..nfft {
            freqs.push((k as f64 - nfft as f64) * df);
            values.push(buf[k]);
        }
        for (k, v) in buf.iter().enumerate().take(half) {
            freqs.push(k as f64 * df);
            values.push(*v);
        }
        Self { freqs, values, bin_width: 2.0 * PI / (m as f64 * dt) }
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    /// Padded grid spacing.
    pub fn df(&self) -> f64 {
        self.freqs[1] - self.freqs[0]
    }

    /// Indices of strict local maxima of `|X|`, largest first.
    pub fn peaks(&self) -> Vec<usize> {
        let mag = self.magnitude();
        let mut idx: Vec<usize> = (1..mag.len().saturating_sub(1))
            .filter(|&i| mag[i] > mag[i - 1] && mag[i] >= mag[i + 1])
            .collect();
        idx.sort_by(|&a, &b| mag[b].total_cmp(&mag[a]));
        idx
    }

    /// Index of the grid point closest to `f`.
    pub fn index_of(&self, f: f64) -> usize {
        let i = ((f - self.freqs[0]) / self.df()).round();
        (i.max(0.0) as usize).min(self.freqs.len() - 1)
    }

    /// Quadratic interpolation of the peak location around index `i`.
    pub fn refine_peak(&self, i: usize) -> f64 {
        if i == 0 || i + 1 >= self.freqs.len() {
            return self.freqs[i];
        }
        let (a, b, c) = (self.values[i - 1].norm(), self.values[i].norm(), self.values[i + 1].norm());
        let den = a - 2.0 * b + c;
        let shift = if den.abs() > 0.0 { 0.5 * (a - c) / den } else { 0.0 };
        self.freqs[i] + shift.clamp(-0.5, 0.5) * self.df()
    }

    /// Largest local maximum within `radius` of `f`, if any.
    pub fn local_peak_near(&self, f: f64, radius: f64) -> Option<usize> {
        let mag = self.magnitude();
        let lo = self.index_of(f - radius).max(1);
        let hi = self.index_of(f + radius).min(mag.len() - 2);
        (lo..=hi)
            .filter(|&i| mag[i] > mag[i - 1] && mag[i] >= mag[i + 1])
            .max_by(|&a, &b| mag[a].total_cmp(&mag[b]))
    }

    /// Half width at half maximum of the power `|X|²` around peak `i`.
    pub fn hwhm(&self, i: usize) -> Option<f64> {
        let p: Vec<f64> = self.values.iter().map(|z| z.norm_sqr()).collect();
        let half = 0.5 * p[i];
        let mut l = i;
        while l > 0 && p[l] > half {
            l -= 1;
        }
        let mut r = i;
        while r + 1 < p.len() && p[r] > half {
            r += 1;
        }
        if p[l] > half || p[r] > half {
            return None;
        }
        let cross = |a: usize, b: usize| {
            let (fa, fb) = (self.freqs[a], self.freqs[b]);
            let (pa, pb) = (p[a], p[b]);
            fa + (half - pa) / (pb - pa) * (fb - fa)
        };
        Some(0.5 * (cross(r, r - 1) - cross(l, l + 1)))
    }
}
