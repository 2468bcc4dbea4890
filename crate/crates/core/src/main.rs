//! Command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pwqre::cli_reports::{
    parse_bits, parse_time, qrs_check, qrs_csv, render_bundle, rescaling_csv, rescaling_input, resolve_instance,
    run_full_report, run_reports, write_files, Format, InstanceSpec, ReportError, BUILTIN_INSTANCES,
};
use pwqre::initprep::{normal_modes_seeded, parse_geometry_hessian, DEFAULT_SEED};
use pwqre::qci::{classify_trajectory, counts_csv, parse_xyz, FingerprintModel, SpeciesRuleSet};
use pwqre::qrs_design::QrsParams;
use pwqre::rescaling::rescaling_report;
use pwqre::Error;

#[derive(Parser)]
#[command(name = "pwqre", version, about = "Resource estimates for plane-wave pseudopotential quantum dynamics")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Args)]
struct Output {
    /// Directory for output files (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance file or bundled instance name.
    #[arg(long)]
    instance: String,
    /// Bit-width file overriding the instance's widths.
    #[arg(long)]
    bits: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Full cost estimate for one instance.
    Estimate {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Evolution times, e.g. 1, 10au, 0.5fs (repeatable).
        #[arg(long = "time", default_value = "1fs")]
        times: Vec<String>,
        /// Total error target.
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Exact rescaling factors and their bounds.
    Rescaling {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Success probabilities of the reference states of an instance's species.
    QrsCheck {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Normal modes from a geometry and Hessian file.
    Modes {
        /// Geometry and Hessian file.
        #[arg(long)]
        input: PathBuf,
        /// Seed for completing the vibrational basis.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Species counts along an XYZ trajectory.
    Fingerprint {
        /// Trajectory in XYZ format.
        #[arg(long)]
        xyz: PathBuf,
        /// Fingerprint model files replacing the bundled models (repeatable).
        #[arg(long)]
        model: Vec<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Full reports for several instances (all bundled instances by default).
    Report {
        /// Instance files or bundled names (repeatable).
        #[arg(long)]
        instance: Vec<String>,
        /// Evolution times (repeatable).
        #[arg(long = "time", default_value = "1fs")]
        times: Vec<String>,
        /// Total error target.
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        /// Output directory.
        #[arg(long, default_value = "reports")]
        out: PathBuf,
        /// Output format.
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
    },
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| ReportError::Io { path: path.display().to_string(), msg: e.to_string() }.into())
}

fn load(args: &InstanceArgs) -> Result<InstanceSpec, Error> {
    let mut inst = resolve_instance(&args.instance)?;
    if let Some(p) = &args.bits {
        inst.bits = parse_bits(&read(p)?)?;
    }
    Ok(inst)
}

fn times(raw: &[String]) -> Result<Vec<f64>, Error> {
    raw.iter().map(|t| parse_time(t).map_err(Error::from)).collect()
}

fn json<T: Serialize>(v: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| ReportError::Serialize(e.to_string()).into())
}

fn emit(out: &Output, files: Vec<(String, String)>) -> Result<(), Error> {
    match &out.out {
        Some(dir) => {
            write_files(dir, &files)?;
            for (name, _) in &files {
                eprintln!("wrote {}", dir.join(name).display());
            }
        }
        None if files.len() == 1 => print!("{}", files[0].1),
        None => {
            for (name, body) in &files {
                println!("# {name}");
                print!("{body}");
            }
        }
    }
    Ok(())
}

fn single<T: Serialize>(out: &Output, stem: &str, value: &T, csv: impl FnOnce() -> String) -> Result<(), Error> {
    let file = match Format::from(out.format) {
        Format::Json => (format!("{stem}.json"), json(value)?),
        Format::Csv => (format!("{stem}.csv"), csv()),
    };
    emit(out, vec![file])
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Command::Estimate { inst, times: t, delta, out } => {
            let inst = load(&inst)?;
            let bundle = run_full_report(&inst, &times(&t)?, delta)?;
            emit(&out, render_bundle(&bundle, out.format.into())?)
        }
        Command::Rescaling { inst, out } => {
            let inst = load(&inst)?;
            let r = rescaling_report(&rescaling_input(&inst))?;
            single(&out, "rescaling", &r, || rescaling_csv(&r))
        }
        Command::QrsCheck { inst, out } => {
            let inst = load(&inst)?;
            let rows = qrs_check(&inst, &QrsParams::bundled())?;
            single(&out, "qrs", &rows, || qrs_csv(&rows))
        }
        Command::Modes { input, seed, out } => {
            let (geom, hess) = parse_geometry_hessian(&read(&input)?)?;
            let modes = normal_modes_seeded(&geom, &hess, seed)?;
            #[derive(Serialize)]
            struct ModesOut {
                frequencies_hartree: Vec<f64>,
                wavenumbers_cm: Vec<f64>,
                zero_mode_residuals: Vec<f64>,
            }
            let m = ModesOut {
                wavenumbers_cm: modes.wavenumbers(),
                frequencies_hartree: modes.frequencies,
                zero_mode_residuals: modes.zero_mode_residuals,
            };
            single(&out, "modes", &m, || {
                let mut s = String::from("mode,hartree,cm-1\n");
                for (i, (h, c)) in m.frequencies_hartree.iter().zip(&m.wavenumbers_cm).enumerate() {
                    s += &format!("{i},{h:.10e},{c:.6}\n");
                }
                s
            })
        }
        Command::Fingerprint { xyz, model, out } => {
            let frames = parse_xyz(&read(&xyz)?)?;
            let rules = if model.is_empty() {
                SpeciesRuleSet::bundled()
            } else {
                let models =
                    model.iter().map(|p| Ok(FingerprintModel::parse(&read(p)?)?)).collect::<Result<Vec<_>, Error>>()?;
                SpeciesRuleSet::from_models(models)
            };
            let counts = classify_trajectory(&frames, &rules)?;
            single(&out, "species_counts", &counts, || counts_csv(&counts, &rules))
        }
        Command::Report { instance, times: t, delta, out, format } => {
            let names: Vec<String> = if instance.is_empty() {
                BUILTIN_INSTANCES.iter().map(|(n, _)| n.to_string()).collect()
            } else {
                instance
            };
            let t = times(&t)?;
            let insts = names.iter().map(|n| resolve_instance(n)).collect::<Result<Vec<_>, _>>()?;
            for bundle in run_reports(&insts, &t, delta) {
                let bundle = bundle?;
                let files = render_bundle(&bundle, format.into())?;
                write_files(&out, &files)?;
                eprintln!("{}: {} files in {}", bundle.instance.name, files.len(), out.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
