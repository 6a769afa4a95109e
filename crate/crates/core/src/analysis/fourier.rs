//! Harmonic content of periodic traces.
//!
//! A trace is written as `mean + sum_k A_k cos(k phi + delta_k)`, with
//! `A_k = 2 |c_k| / N` (just `|c_k| / N` for the Nyquist term) and
//! `delta_k = arg c_k`, where `c_k = sum_j x_j exp(-i k phi_j)`.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use libm::{atan2, cos, sin, sqrt};
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::kinematics::wrap_degrees;

pub const DEFAULT_MODES: usize = 5;
/// Allowed deviation of a supplied grid from exact uniform spacing, radians.
const GRID_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub k: usize,
    pub amplitude: f64,
    /// Degrees in (-180, 180].
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierSpectrum {
    pub mean: f64,
    pub modes: Vec<FourierMode>,
}

/// Spectrum of `samples` taken at `phi_j = 2 pi j / N`.
pub fn fourier(samples: &[f64], n_modes: usize) -> Result<FourierSpectrum, AnalysisError> {
    let n = samples.len();
    let needed = 2 * n_modes + 1;
    if n < needed {
        return Err(AnalysisError::TooFewSamples {
            got: n,
            modes: n_modes,
            needed,
        });
    }
    Ok(spectrum(samples, 0.0, n_modes))
}

/// Spectrum of samples on an explicit grid, which must be uniform and span
/// exactly one period.
pub fn fourier_on_grid(phi: &[f64], samples: &[f64], n_modes: usize) -> Result<FourierSpectrum, AnalysisError> {
    let n = samples.len();
    if phi.len() != n || n < 2 {
        return Err(AnalysisError::NonUniformSampling);
    }
    let step = TAU / n as f64;
    let uniform = phi
        .iter()
        .enumerate()
        .all(|(j, &p)| (p - phi[0] - step * j as f64).abs() <= GRID_TOLERANCE);
    if !uniform {
        return Err(AnalysisError::NonUniformSampling);
    }
    let needed = 2 * n_modes + 1;
    if n < needed {
        return Err(AnalysisError::TooFewSamples {
            got: n,
            modes: n_modes,
            needed,
        });
    }
    Ok(spectrum(samples, phi[0], n_modes))
}

/// Every mode up to Nyquist, enough to reproduce the samples exactly.
pub fn full_spectrum(samples: &[f64]) -> FourierSpectrum {
    spectrum(samples, 0.0, samples.len() / 2)
}

fn spectrum(samples: &[f64], phi0: f64, n_modes: usize) -> FourierSpectrum {
    let n = samples.len();
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let modes = (1..=n_modes)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, &x) in samples.iter().enumerate() {
                // Reduce k*j mod N first so the angle stays small and exact.
                let angle = TAU * ((k * j) % n) as f64 / nf + k as f64 * phi0;
                re += x * cos(angle);
                im -= x * sin(angle);
            }
            let scale = if 2 * k == n { 1.0 / nf } else { 2.0 / nf };
            FourierMode {
                k,
                amplitude: scale * sqrt(re * re + im * im),
                phase: wrap_degrees(atan2(im, re).to_degrees()),
            }
        })
        .collect();
    FourierSpectrum { mean, modes }
}

/// Evaluates the truncated series at `phi`.
pub fn reconstruct(spectrum: &FourierSpectrum, phi: f64) -> f64 {
    spectrum.mean
        + spectrum
            .modes
            .iter()
            .map(|m| m.amplitude * cos(m.k as f64 * phi + m.phase.to_radians()))
            .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|j| TAU * j as f64 / n as f64).collect()
    }

    #[test]
    fn single_cosine() {
        let x: Vec<f64> = grid(360).iter().map(|&p| 3.0 * cos(p)).collect();
        let s = fourier(&x, 5).unwrap();
        assert!((s.modes[0].amplitude - 3.0).abs() < 1e-12);
        assert!(s.modes[0].phase.abs() < 1e-9);
        assert!(s.modes[1..].iter().all(|m| m.amplitude < 1e-12));
        assert!(s.mean.abs() < 1e-12);
    }

    #[test]
    fn constant_trace() {
        let s = fourier(&[2.5; 64], 5).unwrap();
        assert!((s.mean - 2.5).abs() < 1e-15);
        assert!(s.modes.iter().all(|m| m.amplitude < 1e-12));
    }

    #[test]
    fn recovers_two_harmonics() {
        let (d1, d2) = (0.7, -2.1);
        let x: Vec<f64> = grid(360)
            .iter()
            .map(|&p| 0.426 * cos(p + d1) + 0.398 * cos(2.0 * p + d2))
            .collect();
        let s = fourier(&x, 5).unwrap();
        assert!((s.modes[0].amplitude - 0.426).abs() < 1e-9);
        assert!((s.modes[1].amplitude - 0.398).abs() < 1e-9);
        assert!((s.modes[0].phase - d1.to_degrees()).abs() < 1e-9);
        assert!((s.modes[1].phase - d2.to_degrees()).abs() < 1e-9);
    }

    #[test]
    fn full_spectrum_reproduces_samples() {
        for n in [64usize, 65] {
            let g = grid(n);
            let x: Vec<f64> = (0..n)
                .map(|j| libm::sin(j as f64 * 1.37) + 0.1 * (j % 7) as f64)
                .collect();
            let s = full_spectrum(&x);
            for (p, v) in g.iter().zip(&x) {
                assert!((reconstruct(&s, *p) - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn parseval_on_band_limited_trace() {
        let x: Vec<f64> = grid(200)
            .iter()
            .map(|&p| 0.3 + 1.2 * cos(p - 0.4) + 0.5 * sin(3.0 * p) - 0.2 * cos(5.0 * p + 1.0))
            .collect();
        let s = fourier(&x, 5).unwrap();
        let energy = s.mean * s.mean + s.modes.iter().map(|m| m.amplitude * m.amplitude / 2.0).sum::<f64>();
        let mean_square = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((energy - mean_square).abs() < 1e-9);
    }

    #[test]
    fn shifted_grid_keeps_phase_meaning() {
        let n = 90;
        let phi: Vec<f64> = (0..n).map(|j| 0.5 + TAU * j as f64 / n as f64).collect();
        let x: Vec<f64> = phi.iter().map(|&p| cos(p + 1.0)).collect();
        let s = fourier_on_grid(&phi, &x, 3).unwrap();
        assert!((s.modes[0].phase - 1.0f64.to_degrees()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_sampling() {
        let mut phi = grid(36);
        phi[5] += 0.01;
        assert_eq!(
            fourier_on_grid(&phi, &[0.0; 36], 5),
            Err(AnalysisError::NonUniformSampling)
        );
        let half: Vec<f64> = (0..36).map(|j| 0.5 * TAU * j as f64 / 36.0).collect();
        assert_eq!(
            fourier_on_grid(&half, &[0.0; 36], 5),
            Err(AnalysisError::NonUniformSampling)
        );
        assert!(matches!(
            fourier(&[0.0; 10], 5),
            Err(AnalysisError::TooFewSamples { .. })
        ));
    }
}
