use nalgebra::{Matrix4x3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldSample, Medium, Phasor};

use super::channel::{ChannelResponse, PressureChannel, VelocityChannel};

/// Cross-section of a four-wire sensor: a square of wires seen along their
/// length axis, with sensing pairs on the diagonals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WireQuad {
    /// Distance between neighbouring wires, m.
    pub side_spacing: f64,
    /// Distance between the two wires of a sensing pair, m.
    pub diagonal_spacing: f64,
    pub wire_length: f64,
    pub wire_width: f64,
    pub wire_height: f64,
}

impl Default for WireQuad {
    fn default() -> Self {
        WireQuad {
            side_spacing: 250e-6,
            diagonal_spacing: 350e-6,
            wire_length: 1.5e-3,
            wire_width: 2e-6,
            wire_height: 300e-9,
        }
    }
}

impl WireQuad {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("side_spacing", self.side_spacing),
            ("diagonal_spacing", self.diagonal_spacing),
            ("wire_length", self.wire_length),
            ("wire_width", self.wire_width),
            ("wire_height", self.wire_height),
        ];
        for (name, v) in dims {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidProbe(format!("{name} must be > 0, got {v}")));
            }
        }
        let mismatch =
            (self.diagonal_spacing - self.side_spacing * 2f64.sqrt()).abs() / self.diagonal_spacing;
        if mismatch >= 0.05 {
            return Err(Error::InvalidProbe(format!(
                "diagonal_spacing {} inconsistent with a square of side {} ({:.1}% off)",
                self.diagonal_spacing,
                self.side_spacing,
                100.0 * mismatch
            )));
        }
        Ok(())
    }
}

/// One sensor chip carrying a four-wire quad, i.e. two orthogonal velocity
/// channels in the chip cross-section plane.
///
/// In chip-local coordinates the wires run along `z` and angles are
/// measured in the `xy` plane from `+x`. `orientation` maps chip-local
/// vectors into the probe frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChipAssembly {
    pub quad: WireQuad,
    pub responses: [ChannelResponse; 2],
    pub nominal_axis_angles_deg: [f64; 2],
    /// Common deviation of both channel axes from nominal.
    pub axis_offset_deg: f64,
    pub orientation: Rotation3<f64>,
}

impl Default for ChipAssembly {
    fn default() -> Self {
        ChipAssembly {
            quad: WireQuad::default(),
            responses: [ChannelResponse::default(); 2],
            nominal_axis_angles_deg: [45.0, 135.0],
            axis_offset_deg: 15.0,
            orientation: Rotation3::identity(),
        }
    }
}

impl ChipAssembly {
    /// Default second chip: cross-section in the probe `xz` plane.
    pub fn default_xz() -> Self {
        ChipAssembly {
            orientation: Rotation3::from_axis_angle(
                &Vector3::x_axis(),
                std::f64::consts::FRAC_PI_2,
            ),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.quad.validate()?;
        for r in &self.responses {
            r.validate()?;
        }
        let [a, b] = self.nominal_axis_angles_deg;
        if !(a.is_finite() && b.is_finite() && self.axis_offset_deg.is_finite()) {
            return Err(Error::InvalidProbe("chip angles must be finite".into()));
        }
        let (sa, ca) = a.to_radians().sin_cos();
        let (sb, cb) = b.to_radians().sin_cos();
        // sine of the angle between the two axes lines must be ±1
        let cos_between = (ca * cb + sa * sb).abs();
        if cos_between.asin() > 1e-9 {
            return Err(Error::InvalidProbe(format!(
                "channel axes at {a}° and {b}° are not orthogonal"
            )));
        }
        Ok(())
    }

    pub fn axis_angle_deg(&self, channel: usize) -> f64 {
        self.nominal_axis_angles_deg[channel] + self.axis_offset_deg
    }

    /// Unit vector in the chip cross-section plane at `angle_deg`, in the
    /// probe frame.
    pub fn plane_direction(&self, angle_deg: f64) -> Vector3<f64> {
        let (s, c) = angle_deg.to_radians().sin_cos();
        self.orientation * Vector3::new(c, s, 0.0)
    }

    /// Wire length axis in the probe frame.
    pub fn length_axis(&self) -> Unit<Vector3<f64>> {
        Unit::new_unchecked(self.orientation * Vector3::z())
    }

    pub fn axis(&self, channel: usize) -> Vector3<f64> {
        self.plane_direction(self.axis_angle_deg(channel))
    }

    pub fn channels(&self) -> Result<[VelocityChannel; 2]> {
        Ok([
            VelocityChannel::new(self.axis(0), self.responses[0])?,
            VelocityChannel::new(self.axis(1), self.responses[1])?,
        ])
    }
}

/// Two chips and a pressure sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub chips: [ChipAssembly; 2],
    pub pressure_channel: PressureChannel,
    pub medium: Medium,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            chips: [ChipAssembly::default(), ChipAssembly::default_xz()],
            pressure_channel: PressureChannel::default(),
            medium: Medium::default(),
        }
    }
}

/// Number of velocity channels on the probe.
pub const VELOCITY_CHANNELS: usize = 4;
/// Velocity channels followed by the pressure channel.
pub const TOTAL_CHANNELS: usize = 5;

/// Rank threshold relative to the largest singular value.
const RANK_TOL: f64 = 1e-9;

pub(crate) fn numerical_rank(axes: &Matrix4x3<f64>) -> usize {
    let sv = axes.singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_TOL * max).count()
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        self.medium.validate()?;
        for chip in &self.chips {
            chip.validate()?;
        }
        self.pressure_channel.validate()?;
        self.axes_matrix().map(|_| ())
    }

    /// Copy of the probe with the axis offsets removed.
    pub fn nominal(&self) -> Self {
        let mut cfg = *self;
        for chip in &mut cfg.chips {
            chip.axis_offset_deg = 0.0;
        }
        cfg
    }

    pub fn velocity_channels(&self) -> Result<[VelocityChannel; VELOCITY_CHANNELS]> {
        let [a0, a1] = self.chips[0].channels()?;
        let [b0, b1] = self.chips[1].channels()?;
        Ok([a0, a1, b0, b1])
    }

    /// Chip index and in-chip index of velocity channel `i`.
    pub fn locate_channel(i: usize) -> (usize, usize) {
        (i / 2, i % 2)
    }

    /// Rows are the probe-frame sensitivity axes of the four velocity
    /// channels, chip 0 first.
    pub fn axes_matrix(&self) -> Result<Matrix4x3<f64>> {
        let mut m = Matrix4x3::zeros();
        for i in 0..VELOCITY_CHANNELS {
            let (c, k) = Self::locate_channel(i);
            m.set_row(i, &self.chips[c].axis(k).transpose());
        }
        let rank = numerical_rank(&m);
        if rank < 3 {
            return Err(Error::DegenerateGeometry(format!(
                "velocity axes span only {rank} dimensions"
            )));
        }
        Ok(m)
    }

    /// Output voltage phasors of all five channels for a field sample taken
    /// at the probe position.
    pub fn channel_phasors(&self, sample: &FieldSample) -> Result<[Phasor; TOTAL_CHANNELS]> {
        let mut out = [Phasor::new(0.0, 0.0); TOTAL_CHANNELS];
        for (o, ch) in out.iter_mut().zip(self.velocity_channels()?.iter()) {
            *o = ch.output(sample)?;
        }
        out[VELOCITY_CHANNELS] =
            self.pressure_channel
                .output(sample.pressure, sample.frequency, &self.medium)?;
        Ok(out)
    }

    /// White-noise densities of all five channels, V/√Hz.
    pub fn noise_densities(&self) -> [f64; TOTAL_CHANNELS] {
        [
            self.chips[0].responses[0].noise_density,
            self.chips[0].responses[1].noise_density,
            self.chips[1].responses[0].noise_density,
            self.chips[1].responses[1].noise_density,
            self.pressure_channel.inner_channel.noise_density,
        ]
    }
}
