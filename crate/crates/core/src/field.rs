//! Analytic single-frequency sound fields.
//!
//! Every model returns complex pressure and particle-velocity amplitudes
//! (peak phasors) under the `exp(+jωt)` time convention, so multiplying a
//! phasor by `j` advances it by a quarter period.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex peak amplitude of a single-frequency quantity.
pub type Phasor = Complex64;

/// Tolerance on the norm of direction and axis vectors.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Phase in radians, or `None` for a zero phasor.
pub fn phase(p: Phasor) -> Option<f64> {
    if p.norm() > 0.0 {
        Some(p.arg())
    } else {
        None
    }
}

/// Propagation medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Medium {
    /// kg/m³
    pub density: f64,
    /// m/s
    pub sound_speed: f64,
}

impl Medium {
    pub fn new(density: f64, sound_speed: f64) -> Result<Self> {
        let m = Medium {
            density,
            sound_speed,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density.is_finite() && self.density > 0.0) {
            return Err(Error::InvalidMedium(format!(
                "density must be > 0, got {}",
                self.density
            )));
        }
        if !(self.sound_speed.is_finite() && self.sound_speed > 0.0) {
            return Err(Error::InvalidMedium(format!(
                "sound speed must be > 0, got {}",
                self.sound_speed
            )));
        }
        Ok(())
    }

    /// ρc in Pa·s/m.
    pub fn characteristic_impedance(&self) -> f64 {
        self.density * self.sound_speed
    }

    pub fn wavenumber(&self, frequency: f64) -> f64 {
        2.0 * PI * frequency / self.sound_speed
    }
}

impl Default for Medium {
    /// Air at roughly 20 °C.
    fn default() -> Self {
        Medium {
            density: 1.21,
            sound_speed: 343.0,
        }
    }
}

/// Pressure and particle velocity at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    /// Pa
    pub pressure: Phasor,
    /// m/s, probe frame
    pub velocity: Vector3<Phasor>,
    /// Hz
    pub frequency: f64,
}

impl FieldSample {
    pub fn silent(frequency: f64) -> Self {
        FieldSample {
            pressure: Phasor::new(0.0, 0.0),
            velocity: Vector3::from_element(Phasor::new(0.0, 0.0)),
            frequency,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldModel {
    PlaneWave {
        /// Unit propagation direction.
        direction: Vector3<f64>,
        pressure_amplitude: f64,
        frequency: f64,
    },
    /// Lossless rigidly terminated duct. `axis` is the direction of the
    /// incident wave, pointing toward the rigid end; the tube interior lies
    /// where `position · axis < rigid_end_position`.
    StandingWaveTube {
        axis: Vector3<f64>,
        rigid_end_position: f64,
        pressure_amplitude_at_antinode: f64,
        frequency: f64,
    },
    Monopole {
        source_position: Vector3<f64>,
        pressure_amplitude_at_1m: f64,
        frequency: f64,
    },
}

fn check_unit(name: &str, v: &Vector3<f64>) -> Result<()> {
    let n = v.norm();
    if !n.is_finite() || (n - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::InvalidModel(format!(
            "{name} must have unit norm, got |{name}| = {n}"
        )));
    }
    Ok(())
}

fn check_amplitude(name: &str, a: f64) -> Result<()> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::InvalidModel(format!("{name} must be >= 0, got {a}")));
    }
    Ok(())
}

impl FieldModel {
    pub fn frequency(&self) -> f64 {
        match *self {
            FieldModel::PlaneWave { frequency, .. }
            | FieldModel::StandingWaveTube { frequency, .. }
            | FieldModel::Monopole { frequency, .. } => frequency,
        }
    }

    /// Copy of the model at another frequency.
    pub fn with_frequency(mut self, f: f64) -> Self {
        match &mut self {
            FieldModel::PlaneWave { frequency, .. }
            | FieldModel::StandingWaveTube { frequency, .. }
            | FieldModel::Monopole { frequency, .. } => *frequency = f,
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.frequency();
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::InvalidModel(format!(
                "frequency must be > 0, got {f}"
            )));
        }
        match self {
            FieldModel::PlaneWave {
                direction,
                pressure_amplitude,
                ..
            } => {
                check_unit("direction", direction)?;
                check_amplitude("pressure_amplitude", *pressure_amplitude)
            }
            FieldModel::StandingWaveTube {
                axis,
                rigid_end_position,
                pressure_amplitude_at_antinode,
                ..
            } => {
                check_unit("axis", axis)?;
                if !rigid_end_position.is_finite() {
                    return Err(Error::InvalidModel(
                        "rigid_end_position must be finite".into(),
                    ));
                }
                check_amplitude(
                    "pressure_amplitude_at_antinode",
                    *pressure_amplitude_at_antinode,
                )
            }
            FieldModel::Monopole {
                source_position,
                pressure_amplitude_at_1m,
                ..
            } => {
                if source_position.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidModel("source_position must be finite".into()));
                }
                check_amplitude("pressure_amplitude_at_1m", *pressure_amplitude_at_1m)
            }
        }
    }

    pub fn sample(&self, medium: &Medium, position: &Vector3<f64>) -> Result<FieldSample> {
        match self {
            FieldModel::PlaneWave { .. } => sample_plane_wave(self, medium, position),
            FieldModel::StandingWaveTube { .. } => sample_standing_wave(self, medium, position),
            FieldModel::Monopole { .. } => sample_monopole(self, medium, position),
        }
    }
}

fn scale_direction(amplitude: Phasor, dir: &Vector3<f64>) -> Vector3<Phasor> {
    dir.map(|c| amplitude * c)
}

/// `p = A·exp(−jk d·x)`, `v = p/(ρc) · d`.
pub fn sample_plane_wave(
    model: &FieldModel,
    medium: &Medium,
    position: &Vector3<f64>,
) -> Result<FieldSample> {
    let FieldModel::PlaneWave {
        direction,
        pressure_amplitude,
        frequency,
    } = *model
    else {
        return Err(Error::InvalidModel("expected a plane wave".into()));
    };
    model.validate()?;
    medium.validate()?;

    let k = medium.wavenumber(frequency);
    let pressure = Phasor::from_polar(pressure_amplitude, -k * direction.dot(position));
    let u = pressure / medium.characteristic_impedance();
    Ok(FieldSample {
        pressure,
        velocity: scale_direction(u, &direction),
        frequency,
    })
}

/// `p = A·cos(kx)`, `v_axis = j(A/ρc)·sin(kx)` where `x` is the distance
/// from the rigid end back along the axis.
pub fn sample_standing_wave(
    model: &FieldModel,
    medium: &Medium,
    position: &Vector3<f64>,
) -> Result<FieldSample> {
    let FieldModel::StandingWaveTube {
        axis,
        rigid_end_position,
        pressure_amplitude_at_antinode: a,
        frequency,
    } = *model
    else {
        return Err(Error::InvalidModel("expected a standing-wave tube".into()));
    };
    model.validate()?;
    medium.validate()?;

    let x = rigid_end_position - axis.dot(position);
    let kx = medium.wavenumber(frequency) * x;
    let pressure = Phasor::new(a * kx.cos(), 0.0);
    let v_axis = Phasor::new(0.0, a / medium.characteristic_impedance() * kx.sin());
    Ok(FieldSample {
        pressure,
        velocity: scale_direction(v_axis, &axis),
        frequency,
    })
}

/// `p = (A/r)·exp(−jkr)`, `v_r = p/(ρc)·(1 − j/(kr))`.
pub fn sample_monopole(
    model: &FieldModel,
    medium: &Medium,
    position: &Vector3<f64>,
) -> Result<FieldSample> {
    let FieldModel::Monopole {
        source_position,
        pressure_amplitude_at_1m: a,
        frequency,
    } = *model
    else {
        return Err(Error::InvalidModel("expected a monopole".into()));
    };
    model.validate()?;
    medium.validate()?;

    let offset = position - source_position;
    let r = offset.norm();
    if r == 0.0 {
        return Err(Error::SingularPoint);
    }
    let k = medium.wavenumber(frequency);
    let pressure = Phasor::from_polar(a / r, -k * r);
    let v_r = pressure / medium.characteristic_impedance() * Phasor::new(1.0, -1.0 / (k * r));
    Ok(FieldSample {
        pressure,
        velocity: scale_direction(v_r, &(offset / r)),
        frequency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn air() -> Medium {
        Medium::new(1.21, 343.0).unwrap()
    }

    fn plane(direction: Vector3<f64>, amp: f64, f: f64) -> FieldModel {
        FieldModel::PlaneWave {
            direction,
            pressure_amplitude: amp,
            frequency: f,
        }
    }

    fn tube(f: f64) -> FieldModel {
        FieldModel::StandingWaveTube {
            axis: Vector3::x(),
            rigid_end_position: 0.0,
            pressure_amplitude_at_antinode: 1.0,
            frequency: f,
        }
    }

    /// Point at distance `x` upstream of the rigid end of `tube`.
    fn tube_point(x: f64) -> Vector3<f64> {
        Vector3::new(-x, 0.3, -0.2)
    }

    #[test]
    fn medium_rejects_nonpositive() {
        assert!(Medium::new(0.0, 343.0).is_err());
        assert!(Medium::new(1.2, -1.0).is_err());
        assert!((air().characteristic_impedance() - 415.03).abs() < 1e-12);
    }

    #[test]
    fn plane_wave_velocity_magnitude() {
        let s = sample_plane_wave(
            &plane(Vector3::x(), 1.0, 600.0),
            &air(),
            &Vector3::new(0.3, -1.0, 2.0),
        )
        .unwrap();
        let v = s.velocity.map(|c| c.norm_sqr()).sum().sqrt();
        assert!((v - 1.0 / 415.03).abs() < 1e-15);
        assert!((v - 2.4095e-3).abs() < 1e-7);
        assert_eq!(s.velocity.y, Phasor::new(0.0, 0.0));
        assert_eq!(s.velocity.z, Phasor::new(0.0, 0.0));
    }

    #[test]
    fn plane_wave_zero_amplitude() {
        let s =
            sample_plane_wave(&plane(Vector3::y(), 0.0, 100.0), &air(), &Vector3::zeros()).unwrap();
        assert_eq!(s.pressure.norm(), 0.0);
        assert!(s.velocity.iter().all(|c| c.norm() == 0.0));
        assert_eq!(phase(s.pressure), None);
    }

    #[test]
    fn plane_wave_rejects_non_unit_direction() {
        let err = sample_plane_wave(
            &plane(Vector3::new(1.0, 1.0, 0.0), 1.0, 600.0),
            &air(),
            &Vector3::zeros(),
        );
        assert!(matches!(err, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn plane_wave_in_phase_and_impedance() {
        let d = Vector3::new(1.0, 2.0, -2.0) / 3.0;
        let s = sample_plane_wave(&plane(d, 2.5, 1234.0), &air(), &Vector3::new(0.1, 0.2, 0.7))
            .unwrap();
        for (c, dc) in s.velocity.iter().zip(d.iter()) {
            let ratio = *c / s.pressure;
            assert!(ratio.im.abs() < 1e-15);
            assert!((ratio.re - dc / 415.03).abs() < 1e-15);
        }
    }

    #[test]
    fn standing_wave_rigid_end() {
        let s = sample_standing_wave(&tube(700.0), &air(), &tube_point(0.0)).unwrap();
        assert_eq!(s.velocity.x.norm(), 0.0);
        assert_eq!(s.pressure.norm(), 1.0);
    }

    #[test]
    fn standing_wave_first_pressure_null() {
        let x: f64 = 343.0 / (4.0 * 700.0);
        assert!((x - 0.1225).abs() < 1e-15);
        let s = sample_standing_wave(&tube(700.0), &air(), &tube_point(x)).unwrap();
        assert!(s.pressure.norm() < 1e-15);
        assert!((s.velocity.x.norm() - 1.0 / 415.03).abs() < 1e-15);
    }

    #[test]
    fn standing_wave_quadrature_sign() {
        for x in [0.01, 0.05, 0.1, 0.12] {
            let s = sample_standing_wave(&tube(700.0), &air(), &tube_point(x)).unwrap();
            let dphi = phase(s.velocity.x).unwrap() - phase(s.pressure).unwrap();
            assert!((dphi.to_degrees() - 90.0).abs() < 1e-9, "x = {x}: {dphi}");
            assert_eq!(s.velocity.y.norm(), 0.0);
            assert_eq!(s.velocity.z.norm(), 0.0);
        }
    }

    #[test]
    fn standing_wave_momentum_balance() {
        // jωρ v_s = −∂p/∂s along the axis coordinate s, by central differences
        let m = air();
        let f = 700.0;
        let omega = 2.0 * PI * f;
        for x in [0.03, 0.2, 0.41] {
            let h = 1e-6;
            let p_fwd = sample_standing_wave(&tube(f), &m, &tube_point(x - h)).unwrap();
            let p_back = sample_standing_wave(&tube(f), &m, &tube_point(x + h)).unwrap();
            let dp_ds = (p_fwd.pressure - p_back.pressure) / (2.0 * h);
            let v = sample_standing_wave(&tube(f), &m, &tube_point(x))
                .unwrap()
                .velocity
                .x;
            let lhs = Phasor::new(0.0, omega * m.density) * v;
            assert!((lhs + dp_ds).norm() < 1e-6 * dp_ds.norm().max(1.0));
        }
    }

    #[test]
    fn monopole_singular_point() {
        let m = FieldModel::Monopole {
            source_position: Vector3::new(1.0, 2.0, 3.0),
            pressure_amplitude_at_1m: 1.0,
            frequency: 100.0,
        };
        assert!(matches!(
            sample_monopole(&m, &air(), &Vector3::new(1.0, 2.0, 3.0)),
            Err(Error::SingularPoint)
        ));
    }

    fn monopole_at_kr(kr: f64) -> (FieldSample, Vector3<f64>) {
        let medium = air();
        let f = 500.0;
        let r = kr / medium.wavenumber(f);
        let dir = Vector3::new(0.0, 0.6, 0.8);
        let m = FieldModel::Monopole {
            source_position: Vector3::zeros(),
            pressure_amplitude_at_1m: 1.0,
            frequency: f,
        };
        (sample_monopole(&m, &medium, &(dir * r)).unwrap(), dir)
    }

    #[test]
    fn monopole_impedance_correction() {
        let (s, dir) = monopole_at_kr(100.0);
        let v_r = s.velocity.dot(&dir.map(Phasor::from));
        let ratio = v_r.norm() * 415.03 / s.pressure.norm();
        assert!((ratio - (1.0f64 + 1e-4).sqrt()).abs() < 1e-12);
        assert!((ratio - 1.00005).abs() < 1e-8);

        let (s, dir) = monopole_at_kr(1.0);
        let v_r = s.velocity.dot(&dir.map(Phasor::from));
        let corr = v_r * 415.03 / s.pressure;
        assert!((corr.im.abs() - corr.re.abs()).abs() < 1e-12);
    }

    #[test]
    fn monopole_far_field() {
        let (s, dir) = monopole_at_kr(1e9);
        let v_r = s.velocity.dot(&dir.map(Phasor::from));
        assert!((v_r * 415.03 / s.pressure - 1.0).norm() < 1e-8);
    }

    #[test]
    fn samplers_are_pure() {
        let m = plane(Vector3::z(), 1.0, 321.0);
        let p = Vector3::new(0.1, 0.2, 0.3);
        let a = m.sample(&air(), &p).unwrap();
        let b = m.sample(&air(), &p).unwrap();
        assert_eq!(a, b);
    }
}
