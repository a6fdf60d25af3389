//! Electronic directivity correction.
//!
//! The two channels of a chip are almost identical and effectively
//! co-located, so a real linear combination of them behaves like a single
//! sensor with a rotated sensitivity axis. This module estimates the axis
//! deviation from a magnitude polar scan, builds the 2×2 mixing matrix that
//! undoes it, and reconstructs the 3D velocity from the four channels.

use std::ops::{Add, Mul};

use nalgebra::{Matrix3x4, Matrix4x3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Phasor;
use crate::probe::numerical_rank;

/// 2×2 real matrix acting on a channel pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingMatrix {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl MixingMatrix {
    pub const IDENTITY: MixingMatrix = MixingMatrix {
        m11: 1.0,
        m12: 0.0,
        m21: 0.0,
        m22: 1.0,
    };

    pub fn from_row_major(m: [f64; 4]) -> Result<Self> {
        let mm = MixingMatrix {
            m11: m[0],
            m12: m[1],
            m21: m[2],
            m22: m[3],
        };
        if !m.iter().all(|v| v.is_finite()) || mm.determinant() == 0.0 {
            return Err(Error::SingularMixing(format!("{m:?} is not invertible")));
        }
        Ok(mm)
    }

    pub fn to_row_major(&self) -> [f64; 4] {
        [self.m11, self.m12, self.m21, self.m22]
    }

    pub fn determinant(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// `self · rhs`
    pub fn compose(&self, rhs: &MixingMatrix) -> MixingMatrix {
        MixingMatrix {
            m11: self.m11 * rhs.m11 + self.m12 * rhs.m21,
            m12: self.m11 * rhs.m12 + self.m12 * rhs.m22,
            m21: self.m21 * rhs.m11 + self.m22 * rhs.m21,
            m22: self.m21 * rhs.m12 + self.m22 * rhs.m22,
        }
    }

    pub fn apply<T>(&self, x1: T, x2: T) -> (T, T)
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        (x1 * self.m11 + x2 * self.m12, x1 * self.m21 + x2 * self.m22)
    }
}

/// Mixing matrix that rotates a channel pair's sensitivity axes back by
/// `offset_deg`.
///
/// The normalized form is the pure rotation `[[cos δ, −sin δ], [sin δ, cos δ]]`.
/// The unnormalized form divides each row by its diagonal entry, so channel
/// 1 becomes "signal 1 plus `−tan δ` times signal 2" with the `1/cos δ`
/// gain left uncorrected.
pub fn correction_matrix(offset_deg: f64, normalize: bool) -> Result<MixingMatrix> {
    if !offset_deg.is_finite() {
        return Err(Error::Domain(format!(
            "offset must be finite, got {offset_deg}"
        )));
    }
    let (s, c) = offset_deg.to_radians().sin_cos();
    if normalize {
        return Ok(MixingMatrix {
            m11: c,
            m12: -s,
            m21: s,
            m22: c,
        });
    }
    if c.abs() < 1e-12 {
        return Err(Error::SingularMixing(format!(
            "unnormalized correction undefined at {offset_deg}°"
        )));
    }
    let t = s / c;
    Ok(MixingMatrix {
        m11: 1.0,
        m12: -t,
        m21: t,
        m22: 1.0,
    })
}

/// Mixes two equal-length signals sample by sample.
pub fn apply_mixing<T>(m: &MixingMatrix, ch1: &[T], ch2: &[T]) -> Result<(Vec<T>, Vec<T>)>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    if ch1.len() != ch2.len() {
        return Err(Error::Shape(format!(
            "channel lengths differ: {} vs {}",
            ch1.len(),
            ch2.len()
        )));
    }
    Ok(ch1.iter().zip(ch2).map(|(a, b)| m.apply(*a, *b)).unzip())
}

/// Magnitude response of one or more channels over a full turn.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarScan {
    pub frequency: f64,
    pub angles_deg: Vec<f64>,
    /// One vector per channel, aligned with `angles_deg`.
    pub magnitudes: Vec<Vec<f64>>,
}

impl PolarScan {
    /// Uniform grid of `360/step_deg` angles starting at 0°.
    pub fn grid(step_deg: f64) -> Result<Vec<f64>> {
        let n = 360.0 / step_deg;
        if !(step_deg > 0.0 && n.is_finite() && (n - n.round()).abs() < 1e-9 && n.round() >= 2.0) {
            return Err(Error::InvalidScan(format!(
                "step {step_deg}° does not divide 360°"
            )));
        }
        let n = n.round() as usize;
        Ok((0..n).map(|i| i as f64 * step_deg).collect())
    }

    pub fn step_deg(&self) -> f64 {
        360.0 / self.angles_deg.len() as f64
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.angles_deg.len();
        if n < 3 {
            return Err(Error::InvalidScan(format!(
                "need at least 3 angles, got {n}"
            )));
        }
        let step = self.step_deg();
        for (i, a) in self.angles_deg.iter().enumerate() {
            if !(0.0..360.0).contains(a) || (a - self.angles_deg[0] - i as f64 * step).abs() > 1e-9
            {
                return Err(Error::InvalidScan(format!(
                    "angles must be a uniform ascending full turn in [0, 360); index {i} is {a}"
                )));
            }
        }
        for (c, m) in self.magnitudes.iter().enumerate() {
            if m.len() != n {
                return Err(Error::InvalidScan(format!(
                    "channel {c} has {} magnitudes for {n} angles",
                    m.len()
                )));
            }
            if m.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidScan(format!(
                    "channel {c} has a negative or non-finite magnitude"
                )));
            }
        }
        Ok(())
    }

    pub fn channel_argmax_deg(&self, channel: usize) -> f64 {
        self.angles_deg[argmax_lowest(&self.magnitudes[channel])]
    }
}

/// Index of the largest value; values within 1e-12 relative of the maximum
/// count as ties and the lowest index wins.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * max.abs();
    values.iter().position(|v| *v >= max - tol).unwrap_or(0)
}

/// Wraps an angle in degrees into (−90, 90].
pub fn wrap_half_turn(deg: f64) -> f64 {
    let w = deg.rem_euclid(180.0);
    if w > 90.0 {
        w - 180.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Largest accepted RMS residual, relative to the scan maximum.
    pub max_residual: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { max_residual: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetEstimate {
    /// Fitted axis minus nominal, wrapped into (−90°, 90°].
    pub offset_deg: f64,
    /// Fitted lobe direction in [0°, 180°).
    pub axis_deg: f64,
    /// Fitted peak magnitude.
    pub gain: f64,
    /// RMS residual relative to the scan maximum.
    pub residual: f64,
}

/// Profile of the least-squares fit `m ≈ g·|cos(θ − a)|` over `a`, with the
/// optimal `g` eliminated. Returns `(sse, g)`.
fn profile(angles: &[f64], mags: &[f64], a_deg: f64) -> (f64, f64) {
    let lobe: Vec<f64> = angles
        .iter()
        .map(|t| (t - a_deg).to_radians().cos().abs())
        .collect();
    let smc: f64 = mags.iter().zip(&lobe).map(|(m, c)| m * c).sum();
    let scc: f64 = lobe.iter().map(|c| c * c).sum();
    let g = smc / scc;
    let sse = mags
        .iter()
        .zip(&lobe)
        .map(|(m, c)| (m - g * c).powi(2))
        .sum();
    (sse, g)
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Half-width of the coarse search around the argmax sample.
const COARSE_SPAN_DEG: f64 = 30.0;
const COARSE_STEP_DEG: f64 = 0.25;

/// Estimates how far a channel's lobe is rotated from `nominal_axis_deg`.
///
/// The magnitudes are fitted to `g·|cos(θ − a)|`. The search starts at the
/// largest sample, scans ±30° coarsely and then refines by golden section
/// to a stationary point of the residual.
pub fn estimate_axis_offset(
    scan: &PolarScan,
    channel: usize,
    nominal_axis_deg: f64,
    opts: &FitOptions,
) -> Result<OffsetEstimate> {
    scan.validate()?;
    let mags = scan.magnitudes.get(channel).ok_or_else(|| {
        Error::InvalidScan(format!(
            "channel {channel} out of range ({} channels)",
            scan.magnitudes.len()
        ))
    })?;
    let peak = mags.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::NoSignal(format!("channel {channel} is all zeros")));
    }
    let angles = &scan.angles_deg;
    let sse = |a: f64| profile(angles, mags, a).0;

    let start = angles[argmax_lowest(mags)];
    let steps = (COARSE_SPAN_DEG / COARSE_STEP_DEG) as i32;
    let mut best = start;
    let mut best_sse = sse(start);
    for i in -steps..=steps {
        let a = start + i as f64 * COARSE_STEP_DEG;
        let s = sse(a);
        if s < best_sse {
            best = a;
            best_sse = s;
        }
    }
    let a = golden_section(sse, best - COARSE_STEP_DEG, best + COARSE_STEP_DEG, 1e-10);
    let (sse_fit, gain) = profile(angles, mags, a);
    let residual = (sse_fit / mags.len() as f64).sqrt() / peak;
    if residual > opts.max_residual {
        return Err(Error::BadFit {
            residual,
            threshold: opts.max_residual,
        });
    }
    Ok(OffsetEstimate {
        offset_deg: wrap_half_turn(a - nominal_axis_deg),
        axis_deg: a.rem_euclid(180.0),
        gain,
        residual,
    })
}

/// Least-squares inverse of the 4-channel projection.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySolver {
    pinv: Matrix3x4<f64>,
}

impl VelocitySolver {
    pub fn new(axes: &Matrix4x3<f64>) -> Result<Self> {
        let rank = numerical_rank(axes);
        if rank < 3 {
            return Err(Error::DegenerateGeometry(format!(
                "axes matrix has rank {rank}"
            )));
        }
        let pinv = axes
            .pseudo_inverse(0.0)
            .map_err(|e| Error::DegenerateGeometry(e.to_string()))?;
        Ok(VelocitySolver { pinv })
    }

    pub fn solve_real(&self, readings: &[f64; 4]) -> Vector3<f64> {
        self.pinv * Vector4::from_column_slice(readings)
    }

    pub fn solve(&self, readings: &[Phasor; 4]) -> Vector3<Phasor> {
        let re = self.solve_real(&readings.map(|r| r.re));
        let im = self.solve_real(&readings.map(|r| r.im));
        Vector3::new(
            Phasor::new(re.x, im.x),
            Phasor::new(re.y, im.y),
            Phasor::new(re.z, im.z),
        )
    }
}

/// Least-squares 3D velocity from four calibrated channel velocities.
pub fn solve_velocity(axes: &Matrix4x3<f64>, readings: &[Phasor; 4]) -> Result<Vector3<Phasor>> {
    Ok(VelocitySolver::new(axes)?.solve(readings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::ProbeConfig;

    fn cos_scan(axis_deg: f64, step: f64) -> PolarScan {
        let angles = PolarScan::grid(step).unwrap();
        let mags = angles
            .iter()
            .map(|t| (t - axis_deg).to_radians().cos().abs())
            .collect();
        PolarScan {
            frequency: 600.0,
            angles_deg: angles,
            magnitudes: vec![mags],
        }
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(PolarScan::grid(3.75).unwrap().len(), 96);
        assert!(PolarScan::grid(7.0).is_err());
    }

    #[test]
    fn offset_fifteen_degrees() {
        let est =
            estimate_axis_offset(&cos_scan(60.0, 3.75), 0, 45.0, &Default::default()).unwrap();
        assert!((est.offset_deg - 15.0).abs() < 0.01, "{est:?}");
        assert!(est.residual < 1e-9);
    }

    #[test]
    fn offset_zero() {
        let est =
            estimate_axis_offset(&cos_scan(45.0, 3.75), 0, 45.0, &Default::default()).unwrap();
        assert!(est.offset_deg.abs() < 1e-6);
    }

    #[test]
    fn off_grid_axis_recovered() {
        for axis in [12.3, 97.1, 171.9] {
            let est =
                estimate_axis_offset(&cos_scan(axis, 3.75), 0, 0.0, &Default::default()).unwrap();
            assert!((est.axis_deg - axis).abs() < 1e-6, "{axis}: {est:?}");
        }
    }

    #[test]
    fn offset_wraps_half_turn() {
        let est =
            estimate_axis_offset(&cos_scan(150.0, 3.75), 0, 45.0, &Default::default()).unwrap();
        assert!((est.offset_deg - (-75.0)).abs() < 1e-6);
        assert_eq!(wrap_half_turn(90.0), 90.0);
        assert_eq!(wrap_half_turn(-90.0), 90.0);
        assert_eq!(wrap_half_turn(195.0), 15.0);
    }

    #[test]
    fn no_signal_and_bad_fit() {
        let mut scan = cos_scan(60.0, 3.75);
        scan.magnitudes[0].iter_mut().for_each(|m| *m = 0.0);
        assert!(matches!(
            estimate_axis_offset(&scan, 0, 45.0, &Default::default()),
            Err(Error::NoSignal(_))
        ));
        // an omnidirectional pattern does not fit a figure-eight
        scan.magnitudes[0].iter_mut().for_each(|m| *m = 1.0);
        assert!(matches!(
            estimate_axis_offset(&scan, 0, 45.0, &Default::default()),
            Err(Error::BadFit { .. })
        ));
    }

    #[test]
    fn correction_matrix_values() {
        assert_eq!(
            correction_matrix(0.0, true).unwrap(),
            MixingMatrix::IDENTITY
        );
        assert_eq!(
            correction_matrix(0.0, false).unwrap(),
            MixingMatrix::IDENTITY
        );

        let m = correction_matrix(15.0, true).unwrap();
        let round6 = |x: f64| (x * 1e6).round() / 1e6;
        assert_eq!(
            m.to_row_major().map(round6),
            [0.965926, -0.258819, 0.258819, 0.965926]
        );
        assert!((m.determinant() - 1.0).abs() < 1e-12);

        let u = correction_matrix(15.0, false).unwrap();
        assert_eq!(u.m11, 1.0);
        assert_eq!(round6(u.m12), -0.267949);
        let gain = 1.0 / 15f64.to_radians().cos();
        assert_eq!(round6(gain), 1.035276);
        // unnormalized equals normalized scaled by sec δ
        for (a, b) in u.to_row_major().iter().zip(m.to_row_major()) {
            assert!((a - b * gain).abs() < 1e-12);
        }
    }

    #[test]
    fn unnormalized_singular_at_quarter_turn() {
        for d in [90.0, -90.0, 270.0] {
            assert!(matches!(
                correction_matrix(d, false),
                Err(Error::SingularMixing(_))
            ));
        }
        assert!(correction_matrix(90.0, true).is_ok());
        assert!(correction_matrix(f64::NAN, true).is_err());
    }

    #[test]
    fn apply_mixing_cases() {
        let a = vec![0.1, -2.0, 3.5];
        let b = vec![7.0, 0.0, -1.25];
        let (x, y) = apply_mixing(&MixingMatrix::IDENTITY, &a, &b).unwrap();
        assert_eq!(x, a);
        assert_eq!(y, b);

        assert!(matches!(
            apply_mixing(&MixingMatrix::IDENTITY, &a, &b[..2]),
            Err(Error::Shape(_))
        ));

        let fwd = correction_matrix(37.0, true).unwrap();
        let back = correction_matrix(-37.0, true).unwrap();
        let (x, y) = apply_mixing(&fwd, &a, &b).unwrap();
        let (x, y) = apply_mixing(&back, &x, &y).unwrap();
        for i in 0..3 {
            assert!((x[i] - a[i]).abs() < 1e-12 && (y[i] - b[i]).abs() < 1e-12);
        }

        let t = 45f64.to_radians();
        let off = 60f64.to_radians();
        let m = correction_matrix(15.0, true).unwrap();
        let (o1, _) = m.apply((t - off).cos(), (t - off).sin());
        assert!((o1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixing_works_on_phasors() {
        let m = correction_matrix(20.0, true).unwrap();
        let a = [Phasor::new(1.0, 2.0)];
        let b = [Phasor::new(-0.5, 0.25)];
        let (x, _) = apply_mixing(&m, &a, &b).unwrap();
        let re = m.apply(1.0, -0.5).0;
        let im = m.apply(2.0, 0.25).0;
        assert_eq!(x[0], Phasor::new(re, im));
    }

    #[test]
    fn solve_default_axes() {
        let axes = ProbeConfig::default().nominal().axes_matrix().unwrap();
        let zero = [Phasor::new(0.0, 0.0); 4];
        let v = solve_velocity(&axes, &zero).unwrap();
        assert!(v.iter().all(|c| c.norm() == 0.0));

        let proj = |v: Vector3<f64>| {
            let r = axes * v;
            [r[0], r[1], r[2], r[3]].map(Phasor::from)
        };
        let v = solve_velocity(&axes, &proj(Vector3::x())).unwrap();
        assert!((v.map(|c| c.re) - Vector3::x()).norm() < 1e-9);

        let readings = proj(Vector3::z());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [0.0, 0.0, h, h];
        for (r, e) in readings.iter().zip(expect) {
            assert!((r.re - e).abs() < 1e-12);
        }
        let v = solve_velocity(&axes, &readings).unwrap();
        assert!((v.map(|c| c.re) - Vector3::z()).norm() < 1e-9);
    }

    #[test]
    fn solve_rejects_rank_deficient() {
        let mut axes = Matrix4x3::zeros();
        for i in 0..4 {
            axes[(i, 0)] = 1.0;
            axes[(i, 1)] = i as f64;
        }
        assert!(matches!(
            solve_velocity(&axes, &[Phasor::new(1.0, 0.0); 4]),
            Err(Error::DegenerateGeometry(_))
        ));
    }
}
