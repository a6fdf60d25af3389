//! Experiment configuration files.
//!
//! A config is a TOML document with three optional top-level tables:
//! `probe`, `experiment` and `profile`. Every key has a default, unknown
//! keys are rejected, and validation errors name the offending key.
//!
//! ```toml
//! [experiment]
//! kind = "polar_scan"     # polar_scan | pressure_polar | tube_sweep
//!                         # | selfnoise_compare | intensity_run
//! frequency = 600.0
//! step_deg = 3.75
//! correction = "auto"     # "none" | "auto" | { fixed = 15.0 }
//! ```

use std::fmt;
use std::path::Path;

use nalgebra::{Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::calib::{MixingMatrix, PolarScan};
use crate::error::{Error, Result};
use crate::field::{FieldModel, Medium};
use crate::probe::{ChannelResponse, PressureChannel, ProbeConfig, WireQuad, VELOCITY_CHANNELS};

/// Directivity correction applied during a polar scan.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    #[default]
    None,
    /// Estimate the offset from the scan itself.
    Auto,
    /// Use a known offset in degrees.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolarScanSpec {
    pub frequency: f64,
    pub step_deg: f64,
    /// Velocity channel 0–3; the scan turns around that channel's chip
    /// length axis and records both channels of the chip.
    pub channel: usize,
    pub correction: Correction,
    pub pressure_amplitude: f64,
}

impl Default for PolarScanSpec {
    fn default() -> Self {
        PolarScanSpec {
            frequency: 600.0,
            step_deg: 3.75,
            channel: 0,
            correction: Correction::None,
            pressure_amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PressurePolarSpec {
    pub frequency: f64,
    pub step_deg: f64,
    pub pressure_amplitude: f64,
}

impl Default for PressurePolarSpec {
    fn default() -> Self {
        PressurePolarSpec {
            frequency: 700.0,
            step_deg: 3.75,
            pressure_amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PositionSweep {
    /// Distance from the rigid end, m.
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub frequency: f64,
}

impl Default for PositionSweep {
    fn default() -> Self {
        PositionSweep {
            x_min: 0.0,
            x_max: 0.5,
            points: 501,
            frequency: 700.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrequencySweep {
    pub f_min: f64,
    pub f_max: f64,
    pub points: usize,
    /// Distance from the rigid end, m.
    pub position: f64,
}

impl Default for FrequencySweep {
    fn default() -> Self {
        FrequencySweep {
            f_min: 50.0,
            f_max: 4000.0,
            points: 400,
            position: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TubeSweepMode {
    Position(PositionSweep),
    Frequency(FrequencySweep),
}

impl Default for TubeSweepMode {
    fn default() -> Self {
        TubeSweepMode::Position(PositionSweep::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TubeSweepSpec {
    pub sweep: TubeSweepMode,
    /// Velocity channel recorded next to the pressure channel. The tube axis
    /// is aligned with this channel's sensitivity axis.
    pub channel: usize,
    pub pressure_amplitude: f64,
}

impl Default for TubeSweepSpec {
    fn default() -> Self {
        TubeSweepSpec {
            sweep: TubeSweepMode::default(),
            channel: 0,
            pressure_amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelfnoiseSpec {
    pub f_min: f64,
    pub f_max: f64,
    pub points_per_decade: usize,
    /// Velocity channel whose parameters are compared.
    pub channel: usize,
}

impl Default for SelfnoiseSpec {
    fn default() -> Self {
        SelfnoiseSpec {
            f_min: 20.0,
            f_max: 10_000.0,
            points_per_decade: 10,
            channel: 0,
        }
    }
}

/// File form of a [`FieldModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    PlaneWave {
        direction: [f64; 3],
        pressure_amplitude: f64,
        frequency: f64,
    },
    StandingWaveTube {
        axis: [f64; 3],
        rigid_end_position: f64,
        pressure_amplitude_at_antinode: f64,
        frequency: f64,
    },
    Monopole {
        source_position: [f64; 3],
        pressure_amplitude_at_1m: f64,
        frequency: f64,
    },
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::PlaneWave {
            direction: [1.0, 0.0, 0.0],
            pressure_amplitude: 1.0,
            frequency: 600.0,
        }
    }
}

impl FieldSpec {
    pub fn to_model(&self) -> FieldModel {
        match *self {
            FieldSpec::PlaneWave {
                direction,
                pressure_amplitude,
                frequency,
            } => FieldModel::PlaneWave {
                direction: Vector3::from(direction),
                pressure_amplitude,
                frequency,
            },
            FieldSpec::StandingWaveTube {
                axis,
                rigid_end_position,
                pressure_amplitude_at_antinode,
                frequency,
            } => FieldModel::StandingWaveTube {
                axis: Vector3::from(axis),
                rigid_end_position,
                pressure_amplitude_at_antinode,
                frequency,
            },
            FieldSpec::Monopole {
                source_position,
                pressure_amplitude_at_1m,
                frequency,
            } => FieldModel::Monopole {
                source_position: Vector3::from(source_position),
                pressure_amplitude_at_1m,
                frequency,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntensityRunSpec {
    pub field: FieldSpec,
    pub sample_rate: f64,
    pub duration: f64,
    pub seed: u64,
}

impl Default for IntensityRunSpec {
    fn default() -> Self {
        IntensityRunSpec {
            field: FieldSpec::default(),
            sample_rate: 48_000.0,
            duration: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    PolarScan(PolarScanSpec),
    PressurePolar(PressurePolarSpec),
    TubeSweep(TubeSweepSpec),
    SelfnoiseCompare(SelfnoiseSpec),
    IntensityRun(IntensityRunSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    PolarScan,
    PressurePolar,
    TubeSweep,
    SelfnoiseCompare,
    IntensityRun,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::PolarScan => "polar_scan",
            ExperimentKind::PressurePolar => "pressure_polar",
            ExperimentKind::TubeSweep => "tube_sweep",
            ExperimentKind::SelfnoiseCompare => "selfnoise_compare",
            ExperimentKind::IntensityRun => "intensity_run",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Experiment::PolarScan(_) => ExperimentKind::PolarScan,
            Experiment::PressurePolar(_) => ExperimentKind::PressurePolar,
            Experiment::TubeSweep(_) => ExperimentKind::TubeSweep,
            Experiment::SelfnoiseCompare(_) => ExperimentKind::SelfnoiseCompare,
            Experiment::IntensityRun(_) => ExperimentKind::IntensityRun,
        }
    }

    pub fn default_for(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::PolarScan => Experiment::PolarScan(Default::default()),
            ExperimentKind::PressurePolar => Experiment::PressurePolar(Default::default()),
            ExperimentKind::TubeSweep => Experiment::TubeSweep(Default::default()),
            ExperimentKind::SelfnoiseCompare => Experiment::SelfnoiseCompare(Default::default()),
            ExperimentKind::IntensityRun => Experiment::IntensityRun(Default::default()),
        }
    }
}

/// Per-chip directivity correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationProfile {
    pub offsets_deg: [f64; 2],
    pub matrices: [MixingMatrix; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    offsets_deg: [f64; 2],
    /// Row-major 2×2 matrices, one per chip.
    matrices: [[f64; 4]; 2],
}

impl CalibrationProfile {
    /// `[profile]` section in config syntax.
    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Wrapper {
            profile: ProfileFile,
        }
        let w = Wrapper {
            profile: ProfileFile {
                offsets_deg: self.offsets_deg,
                matrices: self.matrices.map(|m| m.to_row_major()),
            },
        };
        toml::to_string(&w).expect("profile serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrientationFile {
    axis: [f64; 3],
    angle_deg: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ChipFile {
    quad: Option<WireQuad>,
    responses: Option<Vec<ChannelResponse>>,
    nominal_axis_angles_deg: Option<[f64; 2]>,
    axis_offset_deg: Option<f64>,
    /// Axis-angle rotation from chip-local to probe frame.
    orientation: Option<OrientationFile>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ProbeFile {
    medium: Medium,
    chips: Option<Vec<ChipFile>>,
    pressure_channel: PressureChannel,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ConfigFile {
    probe: ProbeFile,
    experiment: Option<Experiment>,
    profile: Option<ProfileFile>,
}

/// Validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub probe: ProbeConfig,
    pub experiment: Experiment,
    pub profile: Option<CalibrationProfile>,
}

impl ExperimentConfig {
    /// Default probe and default parameters for `kind`.
    pub fn defaults(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            probe: ProbeConfig::default(),
            experiment: Experiment::default_for(kind),
            profile: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_probe(&self.probe)?;
        validate_experiment(&self.experiment)
    }
}

/// Reads and validates a config file. `expected` fills in a missing
/// `[experiment]` table and must match a present one.
pub fn load_config(path: &Path, expected: Option<ExperimentKind>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, expected).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

pub fn parse_config(text: &str, expected: Option<ExperimentKind>) -> Result<ExperimentConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: "<config>".into(),
        message: e.to_string().trim_end().to_string(),
    })?;

    let probe = build_probe(&file.probe)?;
    let experiment = match (file.experiment, expected) {
        (Some(e), Some(k)) if e.kind() != k => {
            return Err(Error::validation(
                "experiment.kind",
                format!("config selects `{}` but `{k}` was requested", e.kind()),
            ))
        }
        (Some(e), _) => e,
        (None, Some(k)) => Experiment::default_for(k),
        (None, None) => {
            return Err(Error::validation(
                "experiment",
                "missing [experiment] table",
            ))
        }
    };
    let profile = file.profile.map(build_profile).transpose()?;
    let cfg = ExperimentConfig {
        probe,
        experiment,
        profile,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn build_profile(p: ProfileFile) -> Result<CalibrationProfile> {
    let mut matrices = [MixingMatrix::IDENTITY; 2];
    for (i, m) in p.matrices.iter().enumerate() {
        matrices[i] = MixingMatrix::from_row_major(*m)
            .map_err(|e| Error::validation(format!("profile.matrices[{i}]"), e.to_string()))?;
    }
    if let Some(i) = p.offsets_deg.iter().position(|o| !o.is_finite()) {
        return Err(Error::validation(
            format!("profile.offsets_deg[{i}]"),
            "must be finite",
        ));
    }
    Ok(CalibrationProfile {
        offsets_deg: p.offsets_deg,
        matrices,
    })
}

fn build_probe(file: &ProbeFile) -> Result<ProbeConfig> {
    let mut probe = ProbeConfig {
        medium: file.medium,
        pressure_channel: file.pressure_channel,
        ..Default::default()
    };
    if let Some(chips) = &file.chips {
        if chips.len() != 2 {
            return Err(Error::validation(
                "probe.chips",
                format!("exactly 2 chips required, got {}", chips.len()),
            ));
        }
        for (i, chip) in chips.iter().enumerate() {
            let target = &mut probe.chips[i];
            if let Some(q) = chip.quad {
                target.quad = q;
            }
            if let Some(r) = &chip.responses {
                target.responses =
                    <[ChannelResponse; 2]>::try_from(r.as_slice()).map_err(|_| {
                        Error::validation(
                            format!("probe.chips[{i}].responses"),
                            format!("exactly 2 channel responses required, got {}", r.len()),
                        )
                    })?;
            }
            if let Some(a) = chip.nominal_axis_angles_deg {
                target.nominal_axis_angles_deg = a;
            }
            if let Some(o) = chip.axis_offset_deg {
                target.axis_offset_deg = o;
            }
            if let Some(o) = chip.orientation {
                let axis = Vector3::from(o.axis);
                if !(axis.norm() > 0.0 && axis.iter().all(|c| c.is_finite())) {
                    return Err(Error::validation(
                        format!("probe.chips[{i}].orientation.axis"),
                        "must be a nonzero finite vector",
                    ));
                }
                target.orientation = Rotation3::from_axis_angle(
                    &Unit::new_normalize(axis),
                    o.angle_deg.to_radians(),
                );
            }
        }
    }
    Ok(probe)
}

fn validate_probe(probe: &ProbeConfig) -> Result<()> {
    probe
        .medium
        .validate()
        .map_err(|e| Error::validation("probe.medium", e.to_string()))?;
    for (i, chip) in probe.chips.iter().enumerate() {
        chip.quad
            .validate()
            .map_err(|e| Error::validation(format!("probe.chips[{i}].quad"), e.to_string()))?;
        for (j, r) in chip.responses.iter().enumerate() {
            r.validate().map_err(|e| {
                Error::validation(format!("probe.chips[{i}].responses[{j}]"), e.to_string())
            })?;
        }
        chip.validate()
            .map_err(|e| Error::validation(format!("probe.chips[{i}]"), e.to_string()))?;
    }
    probe
        .pressure_channel
        .validate()
        .map_err(|e| Error::validation("probe.pressure_channel", e.to_string()))?;
    probe
        .axes_matrix()
        .map_err(|e| Error::validation("probe.chips", e.to_string()))?;
    Ok(())
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be > 0, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be >= 0, got {v}")))
    }
}

fn step_divides_turn(field: &str, step: f64) -> Result<()> {
    PolarScan::grid(step)
        .map(|_| ())
        .map_err(|_| Error::validation(field, format!("{step} does not divide 360 evenly")))
}

fn ordered(lo_field: &str, lo: f64, hi: f64) -> Result<()> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(Error::validation(
            lo_field,
            format!("sweep bounds must be ordered, got {lo} .. {hi}"),
        ))
    }
}

fn enough_points(field: &str, n: usize) -> Result<()> {
    if n >= 2 {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            format!("at least 2 points required, got {n}"),
        ))
    }
}

fn channel_index(field: &str, ch: usize) -> Result<()> {
    if ch < VELOCITY_CHANNELS {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            format!("velocity channel index must be 0..{VELOCITY_CHANNELS}, got {ch}"),
        ))
    }
}

fn validate_experiment(e: &Experiment) -> Result<()> {
    match e {
        Experiment::PolarScan(s) => {
            positive("experiment.frequency", s.frequency)?;
            step_divides_turn("experiment.step_deg", s.step_deg)?;
            channel_index("experiment.channel", s.channel)?;
            non_negative("experiment.pressure_amplitude", s.pressure_amplitude)?;
            if let Correction::Fixed(d) = s.correction {
                if !d.is_finite() {
                    return Err(Error::validation("experiment.correction", "must be finite"));
                }
            }
        }
        Experiment::PressurePolar(s) => {
            positive("experiment.frequency", s.frequency)?;
            step_divides_turn("experiment.step_deg", s.step_deg)?;
            non_negative("experiment.pressure_amplitude", s.pressure_amplitude)?;
        }
        Experiment::TubeSweep(s) => {
            channel_index("experiment.channel", s.channel)?;
            non_negative("experiment.pressure_amplitude", s.pressure_amplitude)?;
            match s.sweep {
                TubeSweepMode::Position(p) => {
                    ordered("experiment.sweep.x_min", p.x_min, p.x_max)?;
                    enough_points("experiment.sweep.points", p.points)?;
                    positive("experiment.sweep.frequency", p.frequency)?;
                }
                TubeSweepMode::Frequency(f) => {
                    positive("experiment.sweep.f_min", f.f_min)?;
                    ordered("experiment.sweep.f_min", f.f_min, f.f_max)?;
                    enough_points("experiment.sweep.points", f.points)?;
                    if !f.position.is_finite() {
                        return Err(Error::validation(
                            "experiment.sweep.position",
                            "must be finite",
                        ));
                    }
                }
            }
        }
        Experiment::SelfnoiseCompare(s) => {
            positive("experiment.f_min", s.f_min)?;
            ordered("experiment.f_min", s.f_min, s.f_max)?;
            if s.points_per_decade == 0 {
                return Err(Error::validation(
                    "experiment.points_per_decade",
                    "must be >= 1",
                ));
            }
            channel_index("experiment.channel", s.channel)?;
        }
        Experiment::IntensityRun(s) => {
            s.field
                .to_model()
                .validate()
                .map_err(|e| Error::validation("experiment.field", e.to_string()))?;
            positive("experiment.sample_rate", s.sample_rate)?;
            positive("experiment.duration", s.duration)?;
            let f = s.field.to_model().frequency();
            if s.sample_rate <= 2.0 * f {
                return Err(Error::validation(
                    "experiment.sample_rate",
                    format!("must exceed twice the field frequency ({f} Hz)"),
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        parse_config(text, None)
    }

    fn field_of(err: Error) -> String {
        match err {
            Error::Validation { field, .. } => field,
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn minimal_polar_scan_defaults() {
        let cfg = parse("[experiment]\nkind = \"polar_scan\"\n").unwrap();
        let Experiment::PolarScan(s) = cfg.experiment else {
            panic!("wrong kind");
        };
        assert_eq!(s.frequency, 600.0);
        assert_eq!(s.step_deg, 3.75);
        assert_eq!(PolarScan::grid(s.step_deg).unwrap().len(), 96);
        assert_eq!(cfg.probe, ProbeConfig::default());
    }

    #[test]
    fn step_must_divide_turn() {
        let err = parse("[experiment]\nkind = \"polar_scan\"\nstep_deg = 7\n").unwrap_err();
        assert_eq!(field_of(err), "experiment.step_deg");
        let err = parse("[experiment]\nkind = \"pressure_polar\"\nstep_deg = 7.0\n").unwrap_err();
        assert_eq!(field_of(err), "experiment.step_deg");
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = parse("[experiment]\nkind = \"polar_scan\"\nstepp_deg = 3.75\n").unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("stepp_deg"), "{err}");

        let err = parse("bogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");

        let err = parse("[probe.medium]\ndensityy = 1.2\n").unwrap_err();
        assert!(err.to_string().contains("densityy"), "{err}");

        let err = parse("[experiment]\nkind = \"tube_sweep\"\n[experiment.sweep]\nmode = \"position\"\nxmin = 0\n")
            .unwrap_err();
        assert!(err.to_string().contains("xmin"), "{err}");
    }

    #[test]
    fn expected_kind_fills_and_checks() {
        let cfg = parse_config("", Some(ExperimentKind::TubeSweep)).unwrap();
        assert_eq!(cfg.experiment.kind(), ExperimentKind::TubeSweep);
        let err = parse_config(
            "[experiment]\nkind = \"polar_scan\"\n",
            Some(ExperimentKind::TubeSweep),
        )
        .unwrap_err();
        assert_eq!(field_of(err), "experiment.kind");
        assert!(parse("").is_err());
    }

    #[test]
    fn full_probe_section() {
        let text = r#"
[probe.medium]
density = 1.2
sound_speed = 340

[[probe.chips]]
axis_offset_deg = 10.0

[[probe.chips]]
axis_offset_deg = -5.0
orientation = { axis = [1, 0, 0], angle_deg = 90 }
responses = [{ wire_mode = "two_wire" }, { s0 = 0.02, four_wire_gain = 2.0 }]

[probe.pressure_channel.back_chamber]
cavity_volume = 1.0

[experiment]
kind = "selfnoise_compare"
points_per_decade = 5
"#;
        let cfg = parse(text).unwrap();
        assert_eq!(cfg.probe.medium.sound_speed, 340.0);
        assert_eq!(cfg.probe.chips[0].axis_offset_deg, 10.0);
        assert_eq!(cfg.probe.chips[1].axis_offset_deg, -5.0);
        assert_eq!(
            cfg.probe.chips[1].responses[0].wire_mode,
            crate::probe::WireMode::TwoWire
        );
        assert_eq!(cfg.probe.chips[1].responses[1].s0, 0.02);
        assert_eq!(cfg.probe.pressure_channel.back_chamber.cavity_volume, 1.0);
        assert_eq!(
            cfg.probe.pressure_channel.back_chamber.acoustic_resistance,
            400.0
        );
    }

    #[test]
    fn probe_validation_names_field() {
        let err = parse("[[probe.chips]]\n[experiment]\nkind = \"polar_scan\"\n").unwrap_err();
        assert_eq!(field_of(err), "probe.chips");

        let text =
            "[[probe.chips]]\n[[probe.chips]]\norientation = { axis = [0, 0, 1], angle_deg = 0 }\n\
                    [experiment]\nkind = \"polar_scan\"\n";
        assert_eq!(field_of(parse(text).unwrap_err()), "probe.chips");

        let text = "[[probe.chips]]\nresponses = [{ s0 = -1.0 }, {}]\n[[probe.chips]]\n\
                    [experiment]\nkind = \"polar_scan\"\n";
        assert_eq!(
            field_of(parse(text).unwrap_err()),
            "probe.chips[0].responses[0]"
        );

        let text = "[probe.medium]\ndensity = 0\n[experiment]\nkind = \"polar_scan\"\n";
        assert_eq!(field_of(parse(text).unwrap_err()), "probe.medium");
    }

    #[test]
    fn experiment_validation() {
        let cases = [
            ("kind = \"tube_sweep\"\n[experiment.sweep]\nmode = \"position\"\nx_min = 1.0\nx_max = 0.5\n", "experiment.sweep.x_min"),
            ("kind = \"tube_sweep\"\n[experiment.sweep]\nmode = \"frequency\"\npoints = 1\n", "experiment.sweep.points"),
            ("kind = \"selfnoise_compare\"\nf_min = 100\nf_max = 10\n", "experiment.f_min"),
            ("kind = \"polar_scan\"\nchannel = 4\n", "experiment.channel"),
            ("kind = \"intensity_run\"\nsample_rate = 1000\n", "experiment.sample_rate"),
            ("kind = \"intensity_run\"\n[experiment.field]\nkind = \"plane_wave\"\ndirection = [1, 1, 0]\npressure_amplitude = 1\nfrequency = 100\n", "experiment.field"),
        ];
        for (body, field) in cases {
            let err = parse(&format!("[experiment]\n{body}")).unwrap_err();
            assert_eq!(field_of(err), field, "{body}");
        }
    }

    #[test]
    fn correction_forms() {
        for (text, expect) in [
            ("\"none\"", Correction::None),
            ("\"auto\"", Correction::Auto),
            ("{ fixed = 15.0 }", Correction::Fixed(15.0)),
        ] {
            let cfg = parse(&format!(
                "[experiment]\nkind = \"polar_scan\"\ncorrection = {text}\n"
            ))
            .unwrap();
            let Experiment::PolarScan(s) = cfg.experiment else {
                panic!()
            };
            assert_eq!(s.correction, expect);
        }
    }

    #[test]
    fn profile_round_trip() {
        let profile = CalibrationProfile {
            offsets_deg: [15.0, -3.5],
            matrices: [
                crate::calib::correction_matrix(15.0, true).unwrap(),
                crate::calib::correction_matrix(-3.5, true).unwrap(),
            ],
        };
        let text = format!(
            "{}\n[experiment]\nkind = \"intensity_run\"\n",
            profile.to_toml()
        );
        let cfg = parse(&text).unwrap();
        assert_eq!(cfg.profile, Some(profile));

        let bad = "[profile]\noffsets_deg = [0, 0]\nmatrices = [[1, 1, 1, 1], [1, 0, 0, 1]]\n\
                   [experiment]\nkind = \"intensity_run\"\n";
        assert_eq!(field_of(parse(bad).unwrap_err()), "profile.matrices[0]");
    }
}
