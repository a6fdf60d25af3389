use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::field::{FieldModel, Phasor};

use super::geometry::{ProbeConfig, TOTAL_CHANNELS};

/// Sampled output voltages. Channels 0–3 are the velocity channels (chip 0
/// first), channel 4 is the pressure channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub sample_rate: f64,
    pub channels: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rms(&self, channel: usize) -> f64 {
        let x = &self.channels[channel];
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }
}

/// Samples `Re(X·exp(jωt))` at `t = n/fs`. The phase is reduced modulo one
/// period in cycles before the trig call so long records stay accurate.
pub fn sample_tone(phasor: Phasor, frequency: f64, sample_rate: f64, len: usize) -> Vec<f64> {
    let (amp, phi) = phasor.to_polar();
    (0..len)
        .map(|n| {
            let cycles = (frequency * n as f64 / sample_rate).fract();
            amp * (TAU * cycles + phi).cos()
        })
        .collect()
}

/// Synthesizes all five probe channels for a single-frequency field
/// observed at the probe origin, plus independent white Gaussian noise per
/// channel. Noise variance is `noise_density² · fs/2` so the one-sided
/// spectral density equals the configured density.
///
/// Channel `i` draws from ChaCha8 stream `i` of `seed`.
pub fn synthesize_timeseries(
    cfg: &ProbeConfig,
    field: &FieldModel,
    sample_rate: f64,
    duration: f64,
    seed: u64,
) -> Result<TimeSeries> {
    let f = field.frequency();
    if !(sample_rate.is_finite() && sample_rate > 2.0 * f) {
        return Err(Error::Sampling(format!(
            "sample rate {sample_rate} Hz must exceed twice the field frequency {f} Hz"
        )));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::Sampling(format!(
            "duration must be > 0, got {duration}"
        )));
    }
    let len = (duration * sample_rate).round() as usize;
    if len == 0 {
        return Err(Error::Sampling("duration shorter than one sample".into()));
    }

    let sample = field.sample(&cfg.medium, &Vector3::zeros())?;
    let phasors = cfg.channel_phasors(&sample)?;
    let densities = cfg.noise_densities();

    let mut channels = Vec::with_capacity(TOTAL_CHANNELS);
    for (i, (x, nd)) in phasors.iter().zip(densities.iter()).enumerate() {
        let mut samples = sample_tone(*x, f, sample_rate, len);
        if *nd > 0.0 {
            let sigma = nd * (sample_rate / 2.0).sqrt();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            for s in &mut samples {
                let z: f64 = StandardNormal.sample(&mut rng);
                *s += sigma * z;
            }
        }
        channels.push(samples);
    }
    Ok(TimeSeries {
        sample_rate,
        channels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::ChannelResponse;

    fn silent_noise(cfg: &ProbeConfig) -> ProbeConfig {
        let mut c = *cfg;
        for chip in &mut c.chips {
            for r in &mut chip.responses {
                r.noise_density = 0.0;
            }
        }
        c.pressure_channel.inner_channel.noise_density = 0.0;
        c
    }

    fn plane_x(amp: f64, f: f64) -> FieldModel {
        FieldModel::PlaneWave {
            direction: Vector3::x(),
            pressure_amplitude: amp,
            frequency: f,
        }
    }

    #[test]
    fn noiseless_rms_matches_phasor() {
        let cfg = silent_noise(&ProbeConfig::default());
        let field = plane_x(1.0, 600.0);
        let ts = synthesize_timeseries(&cfg, &field, 48_000.0, 1.0, 1).unwrap();
        let sample = field.sample(&cfg.medium, &Vector3::zeros()).unwrap();
        let phasors = cfg.channel_phasors(&sample).unwrap();
        for (i, x) in phasors.iter().enumerate() {
            let expect = x.norm() / 2f64.sqrt();
            assert!(
                (ts.rms(i) / expect - 1.0).abs() < 1e-6,
                "channel {i}: {} vs {expect}",
                ts.rms(i)
            );
        }
    }

    #[test]
    fn white_noise_rms() {
        let mut cfg = ProbeConfig::default();
        let r = ChannelResponse {
            noise_density: 10e-9,
            ..Default::default()
        };
        cfg.chips[0].responses = [r; 2];
        cfg.chips[1].responses = [r; 2];
        cfg.pressure_channel.inner_channel.noise_density = 10e-9;
        let field = plane_x(0.0, 100.0);
        let ts = synthesize_timeseries(&cfg, &field, 10_000.0, 10.0, 42).unwrap();
        let expect = 1e-8 * 5000f64.sqrt();
        assert!((expect - 7.07e-7).abs() < 1e-9);
        for i in 0..TOTAL_CHANNELS {
            assert!((ts.rms(i) / expect - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = ProbeConfig::default();
        let field = plane_x(1.0, 440.0);
        let a = synthesize_timeseries(&cfg, &field, 8_000.0, 0.25, 9).unwrap();
        let b = synthesize_timeseries(&cfg, &field, 8_000.0, 0.25, 9).unwrap();
        let c = synthesize_timeseries(&cfg, &field, 8_000.0, 0.25, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn channels_have_independent_noise() {
        let cfg = ProbeConfig::default();
        let ts = synthesize_timeseries(&cfg, &plane_x(0.0, 100.0), 8_000.0, 1.0, 3).unwrap();
        let a = &ts.channels[0];
        let b = &ts.channels[1];
        let corr: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
            / (ts.rms(0) * ts.rms(1) * a.len() as f64);
        assert!(corr.abs() < 0.05);
    }

    #[test]
    fn nyquist_enforced() {
        let cfg = ProbeConfig::default();
        let err = synthesize_timeseries(&cfg, &plane_x(1.0, 5_000.0), 10_000.0, 1.0, 0);
        assert!(matches!(err, Err(Error::Sampling(_))));
        let err = synthesize_timeseries(&cfg, &plane_x(1.0, 100.0), 10_000.0, 0.0, 0);
        assert!(matches!(err, Err(Error::Sampling(_))));
    }
}
