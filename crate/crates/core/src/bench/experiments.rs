//! Virtual measurements. Each run is a pure function of its inputs.

use std::fmt::Write as _;

use nalgebra::Vector3;

use crate::calib::{
    argmax_lowest, correction_matrix, estimate_axis_offset, FitOptions, MixingMatrix, PolarScan,
    VelocitySolver,
};
use crate::error::{Error, Result};
use crate::field::{FieldModel, Phasor};
use crate::intensity::{
    apply_tone_gain, block_intensity, intensity_level_db, phasor_intensity, IntensityResult,
};
use crate::probe::{synthesize_timeseries, ProbeConfig, WireMode, VELOCITY_CHANNELS};

use super::config::{
    CalibrationProfile, Correction, IntensityRunSpec, PolarScanSpec, PressurePolarSpec,
    SelfnoiseSpec, TubeSweepMode, TubeSweepSpec,
};
use super::output::Table;

fn plane_wave(direction: Vector3<f64>, amplitude: f64, frequency: f64) -> FieldModel {
    FieldModel::PlaneWave {
        direction,
        pressure_amplitude: amplitude,
        frequency,
    }
}

fn normalize(mags: &[f64], what: &str) -> Result<Vec<f64>> {
    let max = mags.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::NoSignal(format!("{what} recorded no signal")));
    }
    Ok(mags.iter().map(|m| m / max).collect())
}

/// Output phasors of one chip's two channels for a plane wave arriving
/// from each angle of the chip cross-section plane.
fn chip_turntable(
    probe: &ProbeConfig,
    chip: usize,
    angles_deg: &[f64],
    amplitude: f64,
    frequency: f64,
) -> Result<[Vec<Phasor>; 2]> {
    let assembly = &probe.chips[chip];
    let channels = assembly.channels()?;
    let mut out = [Vec::new(), Vec::new()];
    for a in angles_deg {
        let field = plane_wave(assembly.plane_direction(*a), amplitude, frequency);
        let sample = field.sample(&probe.medium, &Vector3::zeros())?;
        for (o, ch) in out.iter_mut().zip(channels.iter()) {
            o.push(ch.output(&sample)?);
        }
    }
    Ok(out)
}

fn magnitudes(pair: &[Vec<Phasor>; 2]) -> Result<Vec<Vec<f64>>> {
    pair.iter()
        .enumerate()
        .map(|(i, ch)| {
            let m: Vec<f64> = ch.iter().map(|p| p.norm()).collect();
            normalize(&m, &format!("channel {}", i + 1))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarScanReport {
    pub chip: usize,
    pub frequency: f64,
    /// Nominal axis directions of the chip's two channels.
    pub nominal_deg: [f64; 2],
    pub argmax_deg: [f64; 2],
    /// Offset estimated from the uncorrected scan (Auto only).
    pub estimated_offset_deg: Option<f64>,
    pub fit_residual: Option<f64>,
    pub matrix: Option<MixingMatrix>,
    pub corrected_argmax_deg: Option<[f64; 2]>,
    /// Offsets re-estimated from the corrected scan, per channel.
    pub residual_offset_deg: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarScanOutcome {
    pub scan: PolarScan,
    pub corrected: Option<PolarScan>,
    pub report: PolarScanReport,
}

impl PolarScanOutcome {
    /// Uncorrected and corrected channels side by side.
    pub fn combined(&self) -> PolarScan {
        let mut magnitudes = self.scan.magnitudes.clone();
        if let Some(c) = &self.corrected {
            magnitudes.extend(c.magnitudes.iter().cloned());
        }
        PolarScan {
            frequency: self.scan.frequency,
            angles_deg: self.scan.angles_deg.clone(),
            magnitudes,
        }
    }

    pub fn labels(&self) -> Vec<&'static str> {
        if self.corrected.is_some() {
            vec!["ch1", "ch2", "ch1_corrected", "ch2_corrected"]
        } else {
            vec!["ch1", "ch2"]
        }
    }
}

/// Turns a plane wave around the length axis of the chip carrying
/// `spec.channel` and records both of its channels, optionally with the
/// directivity correction applied.
pub fn run_polar_scan(
    probe: &ProbeConfig,
    spec: &PolarScanSpec,
    fit: &FitOptions,
) -> Result<PolarScanOutcome> {
    let (chip, k) = ProbeConfig::locate_channel(spec.channel);
    let angles = PolarScan::grid(spec.step_deg)?;
    let raw = chip_turntable(
        probe,
        chip,
        &angles,
        spec.pressure_amplitude,
        spec.frequency,
    )?;
    let scan = PolarScan {
        frequency: spec.frequency,
        angles_deg: angles.clone(),
        magnitudes: magnitudes(&raw)?,
    };
    let nominal = probe.chips[chip].nominal_axis_angles_deg;
    let mut report = PolarScanReport {
        chip,
        frequency: spec.frequency,
        nominal_deg: nominal,
        argmax_deg: [scan.channel_argmax_deg(0), scan.channel_argmax_deg(1)],
        estimated_offset_deg: None,
        fit_residual: None,
        matrix: None,
        corrected_argmax_deg: None,
        residual_offset_deg: None,
    };

    let offset = match spec.correction {
        Correction::None => None,
        Correction::Fixed(d) => Some(d),
        Correction::Auto => {
            let est = estimate_axis_offset(&scan, k, nominal[k], fit)?;
            report.estimated_offset_deg = Some(est.offset_deg);
            report.fit_residual = Some(est.residual);
            Some(est.offset_deg)
        }
    };
    let corrected = match offset {
        None => None,
        Some(d) => {
            let m = correction_matrix(d, true)?;
            let (c1, c2) = crate::calib::apply_mixing(&m, &raw[0], &raw[1])?;
            let fixed = PolarScan {
                frequency: spec.frequency,
                angles_deg: angles,
                magnitudes: magnitudes(&[c1, c2])?,
            };
            report.matrix = Some(m);
            report.corrected_argmax_deg =
                Some([fixed.channel_argmax_deg(0), fixed.channel_argmax_deg(1)]);
            report.residual_offset_deg = Some([
                estimate_axis_offset(&fixed, 0, nominal[0], fit)?.offset_deg,
                estimate_axis_offset(&fixed, 1, nominal[1], fit)?.offset_deg,
            ]);
            Some(fixed)
        }
    };
    Ok(PolarScanOutcome {
        scan,
        corrected,
        report,
    })
}

/// Scans both chips at `frequency` and derives a normalized correction
/// matrix for each from its first channel.
pub fn calibrate_probe(
    probe: &ProbeConfig,
    frequency: f64,
    step_deg: f64,
    fit: &FitOptions,
) -> Result<CalibrationProfile> {
    let mut offsets = [0.0; 2];
    let mut matrices = [MixingMatrix::IDENTITY; 2];
    for chip in 0..2 {
        let spec = PolarScanSpec {
            frequency,
            step_deg,
            channel: 2 * chip,
            correction: Correction::Auto,
            pressure_amplitude: 1.0,
        };
        let out = run_polar_scan(probe, &spec, fit)?;
        offsets[chip] = out.report.estimated_offset_deg.expect("auto correction");
        matrices[chip] = out.report.matrix.expect("auto correction");
    }
    Ok(CalibrationProfile {
        offsets_deg: offsets,
        matrices,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressurePolarOutcome {
    pub scan: PolarScan,
    pub max_min_ratio_db: f64,
}

/// Turns a plane wave a full circle around the probe length axis and
/// records the pressure channel.
pub fn run_pressure_polar(
    probe: &ProbeConfig,
    spec: &PressurePolarSpec,
) -> Result<PressurePolarOutcome> {
    let angles = PolarScan::grid(spec.step_deg)?;
    let turntable = &probe.chips[0];
    let mut mags = Vec::with_capacity(angles.len());
    for a in &angles {
        let field = plane_wave(
            turntable.plane_direction(*a),
            spec.pressure_amplitude,
            spec.frequency,
        );
        let sample = field.sample(&probe.medium, &Vector3::zeros())?;
        let v = probe
            .pressure_channel
            .output(sample.pressure, sample.frequency, &probe.medium)?;
        mags.push(v.norm());
    }
    let max = mags.iter().copied().fold(0.0, f64::max);
    let min = mags.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 || min == 0.0 {
        return Err(Error::NoSignal(
            "pressure channel recorded no signal".into(),
        ));
    }
    let ratio_db = 20.0 * (max / min).log10();
    Ok(PressurePolarOutcome {
        scan: PolarScan {
            frequency: spec.frequency,
            angles_deg: angles,
            magnitudes: vec![normalize(&mags, "pressure channel")?],
        },
        max_min_ratio_db: ratio_db,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Max,
    Min,
}

/// Local extrema of a sampled curve. A plateau is reported at its first
/// index; endpoints count when they beat their single neighbour.
pub fn local_extrema(values: &[f64], kind: Extremum) -> Vec<usize> {
    let n = values.len();
    if n < 2 {
        return Vec::new();
    }
    let better = |a: f64, b: f64| match kind {
        Extremum::Max => a > b,
        Extremum::Min => a < b,
    };
    let at_least = |a: f64, b: f64| a == b || better(a, b);
    let mut out = Vec::new();
    if better(values[0], values[1]) {
        out.push(0);
    }
    for i in 1..n - 1 {
        if better(values[i], values[i - 1]) && at_least(values[i], values[i + 1]) {
            // walk the plateau; it is an extremum only if it ends by descending
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j == n - 1 || better(values[i], values[j + 1]) {
                out.push(i);
            }
        }
    }
    if better(values[n - 1], values[n - 2]) {
        out.push(n - 1);
    }
    out
}

/// Largest distance, in grid steps, from any index in `from` to the
/// nearest index in `to`. `None` when `to` is empty and `from` is not.
pub fn alignment_steps(from: &[usize], to: &[usize]) -> Option<usize> {
    let mut worst = 0;
    for f in from {
        let d = to.iter().map(|t| t.abs_diff(*f)).min()?;
        worst = worst.max(d);
    }
    Some(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TubeReport {
    pub pressure_maxima: Vec<usize>,
    pub pressure_minima: Vec<usize>,
    pub velocity_maxima: Vec<usize>,
    pub velocity_minima: Vec<usize>,
    /// Worst distance between a pressure maximum and its nearest velocity
    /// minimum, and vice versa, in grid steps.
    pub max_alignment_steps: Option<usize>,
    /// Same for pressure minima against velocity maxima.
    pub min_alignment_steps: Option<usize>,
    /// Axial active intensity at each point from the calibrated channels.
    pub active_axial_intensity: Vec<f64>,
    /// `|p|max · |v|max` over the sweep, calibrated units.
    pub pv_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TubeOutcome {
    /// `sweep_value, pressure_mag, velocity_mag` (channel volts).
    pub table: Table,
    pub report: TubeReport,
}

/// Sweeps a standing-wave tube over position or frequency and records the
/// pressure channel and one velocity channel.
pub fn run_tube_sweep(probe: &ProbeConfig, spec: &TubeSweepSpec) -> Result<TubeOutcome> {
    let channel = probe.velocity_channels()?[spec.channel];
    let axis = channel.sensitivity_axis;
    let points: Vec<(f64, f64, f64)> = match spec.sweep {
        TubeSweepMode::Position(s) => linspace(s.x_min, s.x_max, s.points)
            .into_iter()
            .map(|x| (x, x, s.frequency))
            .collect(),
        TubeSweepMode::Frequency(s) => linspace(s.f_min, s.f_max, s.points)
            .into_iter()
            .map(|f| (f, s.position, f))
            .collect(),
    };

    let mut table = Table::new(&["sweep_value", "pressure_mag", "velocity_mag"]);
    let mut p_cal = Vec::with_capacity(points.len());
    let mut v_cal = Vec::with_capacity(points.len());
    for (value, x, f) in points {
        let field = FieldModel::StandingWaveTube {
            axis,
            rigid_end_position: 0.0,
            pressure_amplitude_at_antinode: spec.pressure_amplitude,
            frequency: f,
        };
        let sample = field.sample(&probe.medium, &(-x * axis))?;
        let vp = probe
            .pressure_channel
            .output(sample.pressure, f, &probe.medium)?;
        let vu = channel.output(&sample)?;
        table.rows.push(vec![value, vp.norm(), vu.norm()]);
        p_cal.push(vp / probe.pressure_channel.transfer(f, &probe.medium)?);
        v_cal.push(vu / channel.sensitivity_magnitude(f)?);
    }

    let pm = table.column(1);
    let vm = table.column(2);
    let pressure_maxima = local_extrema(&pm, Extremum::Max);
    let pressure_minima = local_extrema(&pm, Extremum::Min);
    let velocity_maxima = local_extrema(&vm, Extremum::Max);
    let velocity_minima = local_extrema(&vm, Extremum::Min);
    let both_ways =
        |a: &[usize], b: &[usize]| Some(alignment_steps(a, b)?.max(alignment_steps(b, a)?));
    let max_alignment_steps = both_ways(&pressure_maxima, &velocity_minima);
    let min_alignment_steps = both_ways(&pressure_minima, &velocity_maxima);

    let zero = Phasor::new(0.0, 0.0);
    let active_axial_intensity = p_cal
        .iter()
        .zip(&v_cal)
        .map(|(p, v)| {
            phasor_intensity(*p, &Vector3::new(*v, zero, zero), 0.0)
                .active
                .x
        })
        .collect();
    let p_max = p_cal.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let v_max = v_cal.iter().map(|v| v.norm()).fold(0.0, f64::max);

    Ok(TubeOutcome {
        table,
        report: TubeReport {
            pressure_maxima,
            pressure_minima,
            velocity_maxima,
            velocity_minima,
            max_alignment_steps,
            min_alignment_steps,
            active_axial_intensity,
            pv_scale: p_max * v_max,
        },
    })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + i as f64 * step })
        .collect()
}

/// Log-spaced grid from `lo` to `hi` inclusive with at least
/// `per_decade` points per decade.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).ceil() as usize + 1;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo * 10f64.powf(decades * i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

/// `freq_hz, selfnoise_2wire, selfnoise_4wire, ratio_db` for the channel
/// parameters of `spec.channel` powered both ways.
pub fn run_selfnoise_compare(probe: &ProbeConfig, spec: &SelfnoiseSpec) -> Result<Table> {
    let (chip, k) = ProbeConfig::locate_channel(spec.channel);
    let template = probe.chips[chip].responses[k];
    let two = template.with_mode(WireMode::TwoWire);
    let four = template.with_mode(WireMode::FourWire);
    let mut t = Table::new(&["freq_hz", "selfnoise_2wire", "selfnoise_4wire", "ratio_db"]);
    for f in log_grid(spec.f_min, spec.f_max, spec.points_per_decade) {
        let a = two.selfnoise_density(f)?;
        let b = four.selfnoise_density(f)?;
        let ratio = if b > 0.0 { 20.0 * (a / b).log10() } else { 0.0 };
        t.rows.push(vec![f, a, b, ratio]);
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensityOutcome {
    /// Block estimate from the synthesized channels.
    pub measured: IntensityResult,
    /// Phasor intensity of the field at the probe origin.
    pub reference: IntensityResult,
    pub profile: CalibrationProfile,
    pub samples: usize,
}

impl IntensityOutcome {
    pub fn level_db(&self) -> Option<f64> {
        intensity_level_db(self.measured.active_magnitude()).ok()
    }
}

/// Full measurement chain: synthesize the five channels, convert to
/// calibrated velocity and pressure, solve 3D velocity and block-average
/// the intensity.
///
/// Without a profile the probe is calibrated first with a noise-free
/// polar scan at the run frequency.
pub fn run_intensity(
    probe: &ProbeConfig,
    spec: &IntensityRunSpec,
    profile: Option<&CalibrationProfile>,
) -> Result<IntensityOutcome> {
    let field = spec.field.to_model();
    field.validate()?;
    let f = field.frequency();
    let fs = spec.sample_rate;
    let ts = synthesize_timeseries(probe, &field, fs, spec.duration, spec.seed)?;
    if ts.len() < 3 {
        return Err(Error::Sampling("record too short for intensity".into()));
    }

    let profile = match profile {
        Some(p) => *p,
        None => calibrate_probe(probe, f, 3.75, &FitOptions::default())?,
    };

    let channels = probe.velocity_channels()?;
    let mut velocity: Vec<Vec<f64>> = Vec::with_capacity(VELOCITY_CHANNELS);
    for (i, ch) in channels.iter().enumerate() {
        let s = ch.sensitivity_magnitude(f)?;
        velocity.push(ts.channels[i].iter().map(|v| v / s).collect());
    }
    for (chip, m) in profile.matrices.iter().enumerate() {
        let (a, b) = crate::calib::apply_mixing(m, &velocity[2 * chip], &velocity[2 * chip + 1])?;
        velocity[2 * chip] = a;
        velocity[2 * chip + 1] = b;
    }

    let solver = VelocitySolver::new(&probe.nominal().axes_matrix()?)?;
    let n = ts.len();
    let mut v3 = [vec![0.0; n - 1], vec![0.0; n - 1], vec![0.0; n - 1]];
    for t in 1..n {
        let v = solver.solve_real(&[
            velocity[0][t],
            velocity[1][t],
            velocity[2][t],
            velocity[3][t],
        ]);
        for axis in 0..3 {
            v3[axis][t - 1] = v[axis];
        }
    }

    // pressure in Pa, and the same advanced by a quarter period
    let inverse = Phasor::new(1.0, 0.0) / probe.pressure_channel.transfer(f, &probe.medium)?;
    let pressure = &ts.channels[VELOCITY_CHANNELS];
    let p = apply_tone_gain(pressure, f, fs, inverse)?;
    let p_quad = apply_tone_gain(pressure, f, fs, inverse * Phasor::new(0.0, -1.0))?;

    let active = block_intensity(&p, [&v3[0], &v3[1], &v3[2]])?;
    let reactive = block_intensity(&p_quad, [&v3[0], &v3[1], &v3[2]])?;
    let truth = field.sample(&probe.medium, &Vector3::zeros())?;

    Ok(IntensityOutcome {
        measured: IntensityResult {
            active,
            reactive,
            frequency: f,
        },
        reference: phasor_intensity(truth.pressure, &truth.velocity, f),
        profile,
        samples: n - 1,
    })
}

fn fmt_vec(v: &Vector3<f64>) -> String {
    format!("({:.6e}, {:.6e}, {:.6e})", v.x, v.y, v.z)
}

pub fn render_polar_report(r: &PolarScanReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "polar scan: chip {} at {} Hz", r.chip, r.frequency);
    let _ = writeln!(
        s,
        "  nominal axes: {:.2}° {:.2}°",
        r.nominal_deg[0], r.nominal_deg[1]
    );
    let _ = writeln!(
        s,
        "  measured argmax: {:.2}° {:.2}°",
        r.argmax_deg[0], r.argmax_deg[1]
    );
    if let Some(o) = r.estimated_offset_deg {
        let _ = writeln!(
            s,
            "  estimated offset: {o:.4}° (fit residual {:.3e})",
            r.fit_residual.unwrap_or(0.0)
        );
    }
    if let Some(m) = r.matrix {
        let _ = writeln!(
            s,
            "  mixing matrix: [[{:.6}, {:.6}], [{:.6}, {:.6}]]",
            m.m11, m.m12, m.m21, m.m22
        );
    }
    if let Some(a) = r.corrected_argmax_deg {
        let _ = writeln!(s, "  corrected argmax: {:.2}° {:.2}°", a[0], a[1]);
    }
    if let Some(o) = r.residual_offset_deg {
        let _ = writeln!(s, "  residual offset: {:.5}° {:.5}°", o[0], o[1]);
    }
    s
}

pub fn render_pressure_report(o: &PressurePolarOutcome) -> String {
    format!(
        "pressure polar at {} Hz: max/min ratio {:.3e} dB over {} angles\n",
        o.scan.frequency,
        o.max_min_ratio_db,
        o.scan.angles_deg.len()
    )
}

pub fn render_tube_report(o: &TubeOutcome) -> String {
    let sweep = o.table.column(0);
    let at = |idx: &[usize]| {
        idx.iter()
            .map(|i| format!("{:.6}", sweep[*i]))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let r = &o.report;
    let worst_i = r
        .active_axial_intensity
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    let mut s = String::new();
    let _ = writeln!(s, "tube sweep: {} points", sweep.len());
    let _ = writeln!(s, "  pressure maxima: {}", at(&r.pressure_maxima));
    let _ = writeln!(s, "  pressure minima: {}", at(&r.pressure_minima));
    let _ = writeln!(s, "  velocity maxima: {}", at(&r.velocity_maxima));
    let _ = writeln!(s, "  velocity minima: {}", at(&r.velocity_minima));
    for (what, d) in [
        ("p max / v min", r.max_alignment_steps),
        ("p min / v max", r.min_alignment_steps),
    ] {
        match d {
            Some(d) => {
                let _ = writeln!(s, "  alignment {what}: {d} grid steps");
            }
            None => {
                let _ = writeln!(s, "  alignment {what}: unmatched extrema");
            }
        }
    }
    let _ = writeln!(
        s,
        "  max |active axial intensity|: {worst_i:.3e} W/m² (|p|max·|v|max = {:.3e})",
        r.pv_scale
    );
    s
}

pub fn render_intensity_report(o: &IntensityOutcome) -> String {
    let mut s = String::new();
    let m = &o.measured;
    let _ = writeln!(
        s,
        "intensity at {} Hz over {} samples",
        m.frequency, o.samples
    );
    let _ = writeln!(s, "  active:    {} W/m²", fmt_vec(&m.active));
    let _ = writeln!(s, "  reactive:  {} W/m²", fmt_vec(&m.reactive));
    let _ = writeln!(s, "  |active|:  {:.6e} W/m²", m.active_magnitude());
    match o.level_db() {
        Some(l) => {
            let _ = writeln!(s, "  level:     {l:.2} dB re 1 pW/m²");
        }
        None => {
            let _ = writeln!(s, "  level:     undefined (zero active intensity)");
        }
    }
    let _ = writeln!(
        s,
        "  reference active:   {} W/m²",
        fmt_vec(&o.reference.active)
    );
    let _ = writeln!(
        s,
        "  reference reactive: {} W/m²",
        fmt_vec(&o.reference.reactive)
    );
    let _ = writeln!(
        s,
        "  calibration offsets: {:.4}° {:.4}°",
        o.profile.offsets_deg[0], o.profile.offsets_deg[1]
    );
    s
}

/// Index of the grid point nearest `value`.
pub fn nearest_index(grid: &[f64], value: f64) -> usize {
    let d: Vec<f64> = grid.iter().map(|g| -(g - value).abs()).collect();
    argmax_lowest(&d)
}
