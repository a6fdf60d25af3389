//! Virtual test bench: configuration, the four verification experiments
//! plus the intensity run, and their CSV/SVG artifacts.

mod config;
mod experiments;
mod output;

pub use config::{
    load_config, parse_config, CalibrationProfile, Correction, Experiment, ExperimentConfig,
    ExperimentKind, FieldSpec, FrequencySweep, IntensityRunSpec, PolarScanSpec, PositionSweep,
    PressurePolarSpec, SelfnoiseSpec, TubeSweepMode, TubeSweepSpec,
};
pub use experiments::{
    alignment_steps, calibrate_probe, local_extrema, log_grid, nearest_index,
    render_intensity_report, render_polar_report, render_pressure_report, render_tube_report,
    run_intensity, run_polar_scan, run_pressure_polar, run_selfnoise_compare, run_tube_sweep,
    Extremum, IntensityOutcome, PolarScanOutcome, PolarScanReport, PressurePolarOutcome,
    TubeOutcome, TubeReport,
};
pub use output::{csv_string, emit_csv, emit_polar_svg, format_sci, polar_svg, polar_table, Table};
