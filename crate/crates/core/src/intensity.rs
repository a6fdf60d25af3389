//! Sound intensity from pressure and particle velocity.

use std::f64::consts::TAU;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::field::Phasor;

/// Reference intensity for levels, W/m².
pub const REFERENCE_INTENSITY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityResult {
    /// Time-averaged power flux, W/m².
    pub active: Vector3<f64>,
    /// Amplitude of the oscillating (non-propagating) flux, W/m².
    pub reactive: Vector3<f64>,
    pub frequency: f64,
}

impl IntensityResult {
    pub fn active_magnitude(&self) -> f64 {
        self.active.norm()
    }

    pub fn reactive_magnitude(&self) -> f64 {
        self.reactive.norm()
    }

    pub fn level_db(&self) -> Result<f64> {
        intensity_level_db(self.active_magnitude())
    }
}

/// `I = ½·p·conj(v)` split into real (active) and imaginary (reactive)
/// parts, for peak-amplitude phasors.
pub fn phasor_intensity(p: Phasor, v: &Vector3<Phasor>, frequency: f64) -> IntensityResult {
    let product = v.map(|vi| 0.5 * p * vi.conj());
    IntensityResult {
        active: product.map(|c| c.re),
        reactive: product.map(|c| c.im),
        frequency,
    }
}

/// Block average of `p(t)·v_i(t)` per axis.
pub fn block_intensity(p: &[f64], v: [&[f64]; 3]) -> Result<Vector3<f64>> {
    if p.len() < 2 {
        return Err(Error::Shape(format!(
            "block needs at least 2 samples, got {}",
            p.len()
        )));
    }
    if let Some(bad) = v.iter().find(|vi| vi.len() != p.len()) {
        return Err(Error::Shape(format!(
            "velocity block has {} samples, pressure has {}",
            bad.len(),
            p.len()
        )));
    }
    let n = p.len() as f64;
    Ok(Vector3::from_fn(|i, _| {
        p.iter().zip(v[i]).map(|(a, b)| a * b).sum::<f64>() / n
    }))
}

/// `10·log10(I / 1 pW/m²)`
pub fn intensity_level_db(intensity: f64) -> Result<f64> {
    if !(intensity.is_finite() && intensity > 0.0) {
        return Err(Error::Domain(format!(
            "intensity level needs I > 0, got {intensity}"
        )));
    }
    Ok(10.0 * (intensity / REFERENCE_INTENSITY).log10())
}

/// Two-tap filter `y[n] = a·x[n] + b·x[n−1]` whose response at `frequency`
/// equals `gain`. For a single tone this multiplies its phasor by `gain`
/// exactly. The first output sample has no predecessor and is dropped, so
/// the result is one sample shorter than the input.
pub fn apply_tone_gain(
    samples: &[f64],
    frequency: f64,
    sample_rate: f64,
    gain: Phasor,
) -> Result<Vec<f64>> {
    let w = TAU * frequency / sample_rate;
    let s = w.sin();
    if !(frequency > 0.0 && 2.0 * frequency < sample_rate) || s.abs() < 1e-12 {
        return Err(Error::Sampling(format!(
            "tone at {frequency} Hz not representable at {sample_rate} Hz"
        )));
    }
    let b = -gain.im / s;
    let a = gain.re - b * w.cos();
    Ok(samples.windows(2).map(|x| a * x[1] + b * x[0]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::sample_tone;

    const RHO_C: f64 = 1.21 * 343.0;

    #[test]
    fn plane_wave_phasor_intensity() {
        let p = Phasor::new(1.0, 0.0);
        let v = Vector3::new(p / RHO_C, Phasor::new(0.0, 0.0), Phasor::new(0.0, 0.0));
        let i = phasor_intensity(p, &v, 600.0);
        assert!((i.active.x - 1.0 / (2.0 * RHO_C)).abs() < 1e-18);
        assert!((i.active.x - 1.2048e-3).abs() < 1e-7);
        assert_eq!(i.reactive, Vector3::zeros());
    }

    #[test]
    fn quadrature_is_purely_reactive() {
        let p = Phasor::new(0.8, 0.0);
        let v = Vector3::new(
            Phasor::new(0.0, 1e-3),
            Phasor::new(0.0, 0.0),
            Phasor::new(0.0, 0.0),
        );
        let i = phasor_intensity(p, &v, 700.0);
        assert_eq!(i.active.x, 0.0);
        assert!(i.reactive.x.abs() > 0.0);
    }

    #[test]
    fn zero_velocity() {
        let i = phasor_intensity(
            Phasor::new(3.0, 1.0),
            &Vector3::from_element(Phasor::new(0.0, 0.0)),
            1.0,
        );
        assert_eq!(i.active, Vector3::zeros());
        assert_eq!(i.reactive, Vector3::zeros());
    }

    #[test]
    fn block_matches_phasor() {
        let fs = 48_000.0;
        let f = 600.0;
        let n = 4 * 80; // 4 periods
        let p = sample_tone(Phasor::new(1.0, 0.0), f, fs, n);
        let v = sample_tone(Phasor::new(1.0 / RHO_C, 0.0), f, fs, n);
        let zero = vec![0.0; n];
        let i = block_intensity(&p, [&v, &zero, &zero]).unwrap();
        assert!((i.x / (0.5 / RHO_C) - 1.0).abs() < 1e-9);

        let q = sample_tone(Phasor::new(0.0, 1.0 / RHO_C), f, fs, n);
        let i = block_intensity(&p, [&q, &zero, &zero]).unwrap();
        assert!(i.x.abs() < 1e-9 / RHO_C);

        let i = block_intensity(&zero, [&zero, &zero, &zero]).unwrap();
        assert_eq!(i, Vector3::zeros());
    }

    #[test]
    fn block_shape_errors() {
        let a = [1.0, 2.0, 3.0];
        assert!(matches!(
            block_intensity(&a, [&a, &a[..2], &a]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            block_intensity(&a[..1], [&a[..1], &a[..1], &a[..1]]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn levels() {
        assert_eq!(intensity_level_db(1e-12).unwrap(), 0.0);
        assert!((intensity_level_db(1.0).unwrap() - 120.0).abs() < 1e-12);
        assert!((intensity_level_db(1.2048e-3).unwrap() - 90.81).abs() < 0.005);
        assert!(intensity_level_db(0.0).is_err());
        assert!(intensity_level_db(-1.0).is_err());
    }

    #[test]
    fn tone_gain_is_exact_for_tones() {
        let fs = 48_000.0;
        let f = 700.0;
        let x = Phasor::from_polar(0.7, 0.3);
        let g = Phasor::from_polar(3.0, -1.1);
        let n = 1000;
        let y = apply_tone_gain(&sample_tone(x, f, fs, n), f, fs, g).unwrap();
        let expect = sample_tone(x * g, f, fs, n);
        assert_eq!(y.len(), n - 1);
        for (a, b) in y.iter().zip(&expect[1..]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(apply_tone_gain(&[1.0, 2.0], 24_000.0, fs, g).is_err());
    }
}
