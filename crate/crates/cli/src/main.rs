use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use puprobe::bench::{
    self, emit_csv, emit_polar_svg, load_config, polar_table, Experiment, ExperimentConfig,
    ExperimentKind, Table,
};
use puprobe::calib::FitOptions;
use puprobe::Error;

/// Virtual test bench for a 3D p-u sound intensity probe.
#[derive(Parser, Debug)]
#[command(name = "puprobe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Velocity-channel polar scan around the chip length axis.
    Polar(Common),
    /// Pressure-channel polar scan over a full turn.
    PressurePolar(Common),
    /// Standing-wave tube sweep over position or frequency.
    Tube(Common),
    /// Two-wire versus four-wire selfnoise.
    Selfnoise(Common),
    /// Synthesized five-channel intensity measurement.
    Intensity(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML experiment file; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Noise seed for synthesized runs. Overrides the config file.
    #[arg(long, env = "PUPROBE_SEED")]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Svg,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        self != Format::Svg
    }
    fn svg(self) -> bool {
        self != Format::Csv
    }
}

enum Failure {
    Config(Error),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Config(e)
        } else {
            Failure::Run(e)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (kind, opts) = match &cli.command {
        Command::Polar(c) => (ExperimentKind::PolarScan, c),
        Command::PressurePolar(c) => (ExperimentKind::PressurePolar, c),
        Command::Tube(c) => (ExperimentKind::TubeSweep, c),
        Command::Selfnoise(c) => (ExperimentKind::SelfnoiseCompare, c),
        Command::Intensity(c) => (ExperimentKind::IntensityRun, c),
    };

    // anything wrong with the config file, including a missing one, is a
    // validation failure
    let mut cfg = match &opts.config {
        Some(path) => load_config(path, Some(kind)).map_err(Failure::Config)?,
        None => ExperimentConfig::defaults(kind),
    };
    if let (Some(seed), Experiment::IntensityRun(spec)) = (opts.seed, &mut cfg.experiment) {
        spec.seed = seed;
    }

    std::fs::create_dir_all(&opts.out).map_err(|source| {
        Failure::Run(Error::Io {
            path: opts.out.clone(),
            source,
        })
    })?;
    let out = opts.out.as_path();
    let fmt = opts.format;

    let report = match &cfg.experiment {
        Experiment::PolarScan(spec) => {
            let res = bench::run_polar_scan(&cfg.probe, spec, &FitOptions::default())?;
            let scan = res.combined();
            let labels = res.labels();
            if fmt.csv() {
                emit_csv(&polar_table(&scan, &labels)?, &out.join("polar.csv"))?;
            }
            if fmt.svg() {
                let title = format!("velocity channels, {} Hz", spec.frequency);
                emit_polar_svg(&scan, &labels, &title, &out.join("polar.svg"))?;
            }
            if let Some(m) = res.report.matrix {
                if let Some(offset) = res.report.estimated_offset_deg {
                    let (chip, _) = puprobe::probe::ProbeConfig::locate_channel(spec.channel);
                    let mut profile = cfg.profile.unwrap_or(bench::CalibrationProfile {
                        offsets_deg: [0.0; 2],
                        matrices: [puprobe::calib::MixingMatrix::IDENTITY; 2],
                    });
                    profile.offsets_deg[chip] = offset;
                    profile.matrices[chip] = m;
                    write_text(&out.join("profile.toml"), &profile.to_toml())?;
                }
            }
            bench::render_polar_report(&res.report)
        }
        Experiment::PressurePolar(spec) => {
            let res = bench::run_pressure_polar(&cfg.probe, spec)?;
            if fmt.csv() {
                emit_csv(
                    &polar_table(&res.scan, &["pressure"])?,
                    &out.join("pressure_polar.csv"),
                )?;
            }
            if fmt.svg() {
                let title = format!("pressure channel, {} Hz", spec.frequency);
                emit_polar_svg(
                    &res.scan,
                    &["pressure"],
                    &title,
                    &out.join("pressure_polar.svg"),
                )?;
            }
            bench::render_pressure_report(&res)
        }
        Experiment::TubeSweep(spec) => {
            let res = bench::run_tube_sweep(&cfg.probe, spec)?;
            table_only(&res.table, fmt, &out.join("tube.csv"))?;
            bench::render_tube_report(&res)
        }
        Experiment::SelfnoiseCompare(spec) => {
            let table = bench::run_selfnoise_compare(&cfg.probe, spec)?;
            table_only(&table, fmt, &out.join("selfnoise.csv"))?;
            format!(
                "selfnoise comparison: {} frequencies, two-wire/four-wire ratio {:.4} dB at {} Hz\n",
                table.rows.len(),
                table.rows[0][3],
                table.rows[0][0]
            )
        }
        Experiment::IntensityRun(spec) => {
            let res = bench::run_intensity(&cfg.probe, spec, cfg.profile.as_ref())?;
            if fmt.csv() {
                let mut t = Table::new(&[
                    "active_x",
                    "active_y",
                    "active_z",
                    "reactive_x",
                    "reactive_y",
                    "reactive_z",
                ]);
                let (a, r) = (res.measured.active, res.measured.reactive);
                t.rows.push(vec![a.x, a.y, a.z, r.x, r.y, r.z]);
                emit_csv(&t, &out.join("intensity.csv"))?;
            }
            if fmt.svg() {
                eprintln!("note: no polar plot for an intensity run");
            }
            format!(
                "seed {}\n{}",
                spec.seed,
                bench::render_intensity_report(&res)
            )
        }
    };

    write_text(&out.join("report.txt"), &report)?;
    print!("{report}");
    Ok(())
}

fn table_only(table: &Table, fmt: Format, path: &Path) -> Result<(), Failure> {
    if fmt.csv() {
        emit_csv(table, path)?;
    }
    if fmt.svg() {
        eprintln!("note: no polar plot for this experiment, SVG skipped");
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|source| {
        Failure::Run(Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}
