use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldSample, Medium, Phasor, UNIT_NORM_TOL};

/// Which wires are heated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireMode {
    /// One diagonal pair powered.
    TwoWire,
    /// Both pairs powered; each pair heats the other.
    FourWire,
}

/// Magnitude response and noise of one thermal velocity sensor.
///
/// The sensitivity follows a two-corner low-pass law with zero phase:
/// `s(f) = s0_eff / sqrt((1 + (f/f1)²)(1 + (f/f2)²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelResponse {
    /// Low-frequency sensitivity of a two-wire sensor, V/(m/s).
    pub s0: f64,
    pub corner_f1: f64,
    pub corner_f2: f64,
    /// Electrical noise, V/√Hz, white.
    pub noise_density: f64,
    pub wire_mode: WireMode,
    /// Sensitivity multiplier applied in four-wire mode.
    pub four_wire_gain: f64,
}

impl Default for ChannelResponse {
    fn default() -> Self {
        ChannelResponse {
            s0: 10e-3,
            corner_f1: 1_000.0,
            corner_f2: 10_000.0,
            noise_density: 10e-9,
            wire_mode: WireMode::FourWire,
            four_wire_gain: 1.5,
        }
    }
}

fn check_frequency(f: f64) -> Result<()> {
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::Domain(format!("frequency must be > 0, got {f}")));
    }
    Ok(())
}

impl ChannelResponse {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidProbe(what.to_string()));
        if !(self.s0.is_finite() && self.s0 > 0.0) {
            return bad("s0 must be > 0");
        }
        if !(self.corner_f1.is_finite() && self.corner_f1 > 0.0) {
            return bad("corner_f1 must be > 0");
        }
        if !(self.corner_f2.is_finite() && self.corner_f2 >= self.corner_f1) {
            return bad("corner_f2 must be >= corner_f1");
        }
        if !(self.noise_density.is_finite() && self.noise_density >= 0.0) {
            return bad("noise_density must be >= 0");
        }
        if !(self.four_wire_gain.is_finite() && self.four_wire_gain >= 1.0) {
            return bad("four_wire_gain must be >= 1");
        }
        Ok(())
    }

    pub fn with_mode(self, wire_mode: WireMode) -> Self {
        ChannelResponse { wire_mode, ..self }
    }

    /// Low-frequency sensitivity including the four-wire gain.
    pub fn effective_s0(&self) -> f64 {
        match self.wire_mode {
            WireMode::TwoWire => self.s0,
            WireMode::FourWire => self.s0 * self.four_wire_gain,
        }
    }

    /// V/(m/s) at frequency `f`.
    pub fn sensitivity_magnitude(&self, f: f64) -> Result<f64> {
        check_frequency(f)?;
        let a = f / self.corner_f1;
        let b = f / self.corner_f2;
        Ok(self.effective_s0() / ((1.0 + a * a) * (1.0 + b * b)).sqrt())
    }

    /// Electrical noise referred to the acoustic input, (m/s)/√Hz.
    pub fn selfnoise_density(&self, f: f64) -> Result<f64> {
        let s = self.sensitivity_magnitude(f)?;
        if s <= 0.0 || s.is_nan() {
            return Err(Error::Domain(format!("zero sensitivity at {f} Hz")));
        }
        Ok(self.noise_density / s)
    }
}

/// A velocity sensor together with its direction of maximal response in
/// the probe frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityChannel {
    pub sensitivity_axis: Vector3<f64>,
    pub response: ChannelResponse,
}

impl VelocityChannel {
    pub fn new(sensitivity_axis: Vector3<f64>, response: ChannelResponse) -> Result<Self> {
        let n = sensitivity_axis.norm();
        if (n - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidProbe(format!(
                "sensitivity axis must have unit norm, got {n}"
            )));
        }
        response.validate()?;
        Ok(VelocityChannel {
            sensitivity_axis,
            response,
        })
    }

    pub fn sensitivity_magnitude(&self, f: f64) -> Result<f64> {
        self.response.sensitivity_magnitude(f)
    }

    pub fn selfnoise_density(&self, f: f64) -> Result<f64> {
        self.response.selfnoise_density(f)
    }

    /// Output voltage phasor: sensitivity times the velocity component
    /// along the sensitivity axis.
    pub fn output(&self, sample: &FieldSample) -> Result<Phasor> {
        let s = self.sensitivity_magnitude(sample.frequency)?;
        let a = &self.sensitivity_axis;
        let projected = sample.velocity.x * a.x + sample.velocity.y * a.y + sample.velocity.z * a.z;
        Ok(projected * s)
    }
}

/// Closed cavity behind the pressure sensor: acoustic resistance in series
/// with the cavity compliance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackChamber {
    /// m³, per unit effective area.
    pub cavity_volume: f64,
    /// Pa·s/m³, per unit effective area.
    pub acoustic_resistance: f64,
}

impl Default for BackChamber {
    /// Corner `1/(2πRC)` near 28 Hz in air.
    fn default() -> Self {
        BackChamber {
            cavity_volume: 2.0,
            acoustic_resistance: 400.0,
        }
    }
}

/// Effective area of the converter, m².
pub const EFFECTIVE_AREA: f64 = 1.0;

impl BackChamber {
    pub fn validate(&self) -> Result<()> {
        if !(self.cavity_volume.is_finite() && self.cavity_volume > 0.0) {
            return Err(Error::InvalidProbe("cavity_volume must be > 0".into()));
        }
        if !(self.acoustic_resistance.is_finite() && self.acoustic_resistance > 0.0) {
            return Err(Error::InvalidProbe(
                "acoustic_resistance must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// `C = V/(ρc²)`.
    pub fn compliance(&self, medium: &Medium) -> f64 {
        self.cavity_volume / (medium.density * medium.sound_speed * medium.sound_speed)
    }

    /// Volume-velocity admittance `Y = jωC/(1 + jωRC)`.
    pub fn admittance(&self, f: f64, medium: &Medium) -> Result<Phasor> {
        check_frequency(f)?;
        let omega_c = 2.0 * PI * f * self.compliance(medium);
        let jwc = Phasor::new(0.0, omega_c);
        Ok(jwc / (1.0 + jwc * self.acoustic_resistance))
    }

    /// Internal particle velocity driven by external pressure `p`.
    pub fn internal_velocity(&self, p: Phasor, f: f64, medium: &Medium) -> Result<Phasor> {
        Ok(p * self.admittance(f, medium)? / EFFECTIVE_AREA)
    }
}

/// Pressure microphone: a velocity sensor inside a back chamber.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PressureChannel {
    pub back_chamber: BackChamber,
    pub inner_channel: ChannelResponse,
}

impl PressureChannel {
    pub fn validate(&self) -> Result<()> {
        self.back_chamber.validate()?;
        self.inner_channel.validate()
    }

    /// Complex V/Pa transfer at `f`.
    pub fn transfer(&self, f: f64, medium: &Medium) -> Result<Phasor> {
        let s = self.inner_channel.sensitivity_magnitude(f)?;
        Ok(self.back_chamber.admittance(f, medium)? / EFFECTIVE_AREA * s)
    }

    /// Output voltage phasor for external pressure `p`. Independent of the
    /// direction of the incident field.
    pub fn output(&self, p: Phasor, f: f64, medium: &Medium) -> Result<Phasor> {
        let u = self.back_chamber.internal_velocity(p, f, medium)?;
        Ok(u * self.inner_channel.sensitivity_magnitude(f)?)
    }
}
