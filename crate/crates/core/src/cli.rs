//! Command-line front end.
//!
//! Exit codes: 0 success, 1 parse/validation/argument/IO errors, 2 singular
//! closure or degenerate phase, 3 unreachable bias target.

use crate::analysis::{
    find_bias_point, perturbation_response, sensitivity_profile, sweep, Device, PhaseGrid,
};
use crate::error::{Error, Result};
use crate::netlist::{compile, parse_netlist};
use crate::phase_expr::constant_of;
use crate::report::{sensitivity_csv, sensitivity_svg, sweep_csv, sweep_svg};
use crate::scattering::check_unitary;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const TOL_ENV: &str = "MULTIPORT_LAB_TOL";

#[derive(Parser, Debug)]
#[command(name = "multiport-lab", version, about = "Multiport cavity networks and Grover-Michelson sensitivity")]
pub struct Cli {
    /// Read CLI phases (--phi1, --phi2, grids, --delta) as degrees.
    #[arg(long, global = true)]
    pub degrees: bool,

    /// Numerical tolerance for unitarity and conservation checks.
    #[arg(long, global = true, env = TOL_ENV, default_value_t = DEFAULT_TOL)]
    pub tol: f64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the effective scattering matrix of a device.
    Smatrix(SmatrixArgs),
    /// Transmission curve T(phi1) at fixed phi2, as CSV.
    Sweep(SweepArgs),
    /// Maximum sensitivity versus phi2 for the Grover-Michelson and Michelson.
    Sensitivity(SensitivityArgs),
    /// Calibrate phi1 to a target transmittance and probe perturbations.
    Bias(BiasArgs),
}

#[derive(Args, Debug)]
pub struct DeviceArg {
    /// Named device (michelson, bs-cavity, grover-single-seal,
    /// grover-michelson) or path to a netlist JSON file.
    #[arg(long)]
    pub device: String,
}

#[derive(Args, Debug)]
pub struct SmatrixArgs {
    #[command(flatten)]
    pub device: DeviceArg,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub phi1: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub phi2: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub device: DeviceArg,
    #[arg(long, default_value = "pi", allow_hyphen_values = true)]
    pub phi2: String,
    /// start:stop:count, default 0:2*pi:257.
    #[arg(long = "phi1-grid", allow_hyphen_values = true)]
    pub phi1_grid: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Linear,
    /// Geometric in the distance to the nearer end of (0, 2π).
    LogEnds,
}

#[derive(Args, Debug)]
pub struct SensitivityArgs {
    /// start:stop:count, default 1e-5:2*pi-1e-5:256.
    #[arg(long = "phi2-grid", allow_hyphen_values = true)]
    pub phi2_grid: Option<String>,
    #[arg(long, value_enum, default_value_t = Spacing::LogEnds)]
    pub spacing: Spacing,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BiasArgs {
    #[command(flatten)]
    pub device: DeviceArg,
    #[arg(long, default_value = "pi/8", allow_hyphen_values = true)]
    pub phi2: String,
    /// Target transmittance.
    #[arg(long, default_value_t = 0.5)]
    pub target: f64,
    /// Phase perturbation to probe; repeat for a table.
    #[arg(long = "delta", allow_hyphen_values = true)]
    pub deltas: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SingularClosure { .. } | Error::DegeneratePhase { .. } => 2,
        Error::TargetUnreachable { .. } => 3,
        _ => 1,
    }
}

/// Angle handling at the CLI boundary.
#[derive(Clone, Copy, Debug)]
pub struct Angles {
    pub degrees: bool,
}

impl Angles {
    pub fn phase(&self, text: &str) -> Result<f64> {
        let c = constant_of(text.trim())?;
        Ok(if self.degrees { c.degrees_to_radians().value() } else { c.value() })
    }

    /// `start:stop:count`.
    pub fn grid(&self, text: &str) -> Result<PhaseGrid> {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, count] = parts[..] else {
            return Err(Error::InvalidArgument(format!("grid {text:?} is not start:stop:count")));
        };
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("grid count {count:?} is not an integer")))?;
        PhaseGrid::new(self.phase(start)?, self.phase(stop)?, count)
    }
}

pub fn resolve_device(spec: &str) -> Result<Device> {
    if let Some(d) = Device::from_name(spec) {
        return Ok(d);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::InvalidArgument(format!(
            "unknown device {spec:?}: expected one of {} or a netlist file",
            Device::NAMES.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut netlist = parse_netlist(&text)?;
    if netlist.name.is_none() {
        netlist.name = path.file_stem().and_then(|s| s.to_str()).map(str::to_string);
    }
    Ok(Device::Netlist(Arc::new(compile(&netlist)?)))
}

/// φ₂ values for the sensitivity profile.
pub fn phi2_values(grid: &PhaseGrid, spacing: Spacing) -> Result<Vec<f64>> {
    use std::f64::consts::{PI, TAU};
    match spacing {
        Spacing::Linear => Ok(grid.points()),
        Spacing::LogEnds => {
            if !(grid.start > 0.0 && grid.start < PI && grid.stop > PI && grid.stop < TAU) {
                return Err(Error::InvalidArgument(
                    "log-ends spacing needs 0 < start < pi < stop < 2*pi".into(),
                ));
            }
            // first half geometric from start up to π, second half mirrored
            // towards 2π, so both ends are resolved on a log scale
            let left = grid.count.div_ceil(2);
            let right = grid.count - left;
            let lo = grid.start;
            let hi = TAU - grid.stop;
            let mut v = Vec::with_capacity(grid.count);
            for i in 0..left {
                let frac = if left == 1 { 0.0 } else { i as f64 / (left - 1) as f64 };
                v.push(lo * (PI / lo).powf(frac));
            }
            for j in (0..right).rev() {
                let frac = j as f64 / right as f64;
                v.push(TAU - hi * (PI / hi).powf(frac));
            }
            Ok(v)
        }
    }
}

/// Output captured from a command: the main text and any side files.
#[derive(Debug, Default)]
pub struct Output {
    pub main: String,
    pub files: Vec<(PathBuf, String)>,
    pub warnings: Vec<String>,
}

pub fn cmd_smatrix(args: &SmatrixArgs, angles: Angles, tol: f64) -> Result<Output> {
    let device = resolve_device(&args.device.device)?;
    let phi1 = angles.phase(&args.phi1)?;
    let phi2 = angles.phase(&args.phi2)?;
    let closed = device.closed(phi1, phi2)?;
    let s = &closed.effective;
    let check = check_unitary(s, tol);
    let mut out = String::new();
    let _ = writeln!(out, "# device {} at phi1 = {phi1:?}, phi2 = {phi2:?}", device.id());
    let _ = writeln!(out, "# ports {}", s.labels().join(" "));
    let _ = writeln!(out, "# row i lists re im of S[i][j] for each column j");
    for i in 0..s.ports() {
        let row: Vec<String> = (0..s.ports())
            .map(|j| {
                let z = s.get(i, j);
                format!("{:.14e} {:.14e}", z.re, z.im)
            })
            .collect();
        let _ = writeln!(out, "{}", row.join("  "));
    }
    let _ = writeln!(out, "unitarity_deviation {:e}", check.deviation);
    let _ = writeln!(out, "unitary {} (tol {tol:e})", check.ok);
    let _ = writeln!(out, "closure_condition {:e}", closed.closure_condition);
    Ok(Output {
        main: out,
        ..Output::default()
    })
}

pub fn cmd_sweep(args: &SweepArgs, angles: Angles, tol: f64) -> Result<Output> {
    let device = resolve_device(&args.device.device)?;
    let phi2 = angles.phase(&args.phi2)?;
    let grid = match &args.phi1_grid {
        Some(g) => angles.grid(g)?,
        None => PhaseGrid::period(257)?,
    };
    let curve = sweep(&device, phi2, &grid)?;
    let mut output = Output {
        main: sweep_csv(&curve),
        ..Output::default()
    };
    let err = curve.max_conservation_error();
    if err > tol {
        output.warnings.push(format!("max |R + T - 1| = {err:e} exceeds tol {tol:e}"));
    }
    if let Some(p) = &args.svg {
        output.files.push((p.clone(), sweep_svg(&curve)));
    }
    Ok(output)
}

pub fn cmd_sensitivity(args: &SensitivityArgs, angles: Angles) -> Result<Output> {
    use std::f64::consts::TAU;
    let grid = match &args.phi2_grid {
        Some(g) => angles.grid(g)?,
        None => PhaseGrid::new(1e-5, TAU - 1e-5, 256)?,
    };
    let phi2 = phi2_values(&grid, args.spacing)?;
    let gm = sensitivity_profile(&Device::GroverMichelson, &phi2)?;
    let m = sensitivity_profile(&Device::Michelson, &phi2)?;
    let mut output = Output {
        main: sensitivity_csv(&gm.points, &m.points),
        ..Output::default()
    };
    if let Some(p) = &args.svg {
        output.files.push((p.clone(), sensitivity_svg(&gm.points, &m.points)));
    }
    Ok(output)
}

pub fn cmd_bias(args: &BiasArgs, angles: Angles) -> Result<Output> {
    let device = resolve_device(&args.device.device)?;
    let phi2 = angles.phase(&args.phi2)?;
    let bias = find_bias_point(&device, phi2, args.target)?;
    let mut out = String::new();
    let _ = writeln!(out, "device {}", device.id());
    let _ = writeln!(out, "phi1 {:?}", bias.phi1);
    let _ = writeln!(out, "phi2 {:?}", bias.phi2);
    let _ = writeln!(out, "T {:?}", bias.transmittance);
    let _ = writeln!(out, "slope {:?}", bias.slope);
    if !args.deltas.is_empty() {
        let _ = writeln!(out, "delta,delta_T,saturated");
        for d in &args.deltas {
            let delta = angles.phase(d)?;
            let r = perturbation_response(&device, &bias, delta)?;
            let _ = writeln!(out, "{delta:?},{:?},{}", r.delta_t, r.saturated);
        }
    }
    Ok(Output {
        main: out,
        ..Output::default()
    })
}

fn execute(cli: &Cli) -> Result<(Output, Option<PathBuf>)> {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("--tol must be positive, got {}", cli.tol)));
    }
    let angles = Angles { degrees: cli.degrees };
    Ok(match &cli.command {
        Command::Smatrix(a) => (cmd_smatrix(a, angles, cli.tol)?, a.out.clone()),
        Command::Sweep(a) => (cmd_sweep(a, angles, cli.tol)?, a.out.clone()),
        Command::Sensitivity(a) => (cmd_sensitivity(a, angles)?, a.out.clone()),
        Command::Bias(a) => (cmd_bias(a, angles)?, a.out.clone()),
    })
}

/// Parse `args`, run the command and return the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    let result = execute(&cli).and_then(|(output, out_path)| {
        for w in &output.warnings {
            let _ = writeln!(stderr, "warning: {w}");
        }
        match out_path {
            Some(p) => std::fs::write(&p, &output.main).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
            None => stdout
                .write_all(output.main.as_bytes())
                .map_err(|e| Error::Io(e.to_string()))?,
        }
        for (p, text) in &output.files {
            std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        }
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    #[test]
    fn grid_parsing() {
        let a = Angles { degrees: false };
        let g = a.grid("0:2*pi:5").unwrap();
        assert_eq!((g.start, g.stop, g.count), (0.0, TAU, 5));
        assert!(a.grid("0:1").is_err());
        assert!(a.grid("0:1:x").is_err());
        assert!(a.grid("1:0:3").is_err());
        let d = Angles { degrees: true };
        assert_eq!(d.phase("90").unwrap(), FRAC_PI_2);
        assert_eq!(d.grid("0:360:3").unwrap().stop, TAU);
    }

    #[test]
    fn log_ends_spacing() {
        let g = PhaseGrid::new(1e-5, TAU - 1e-5, 256).unwrap();
        let v = phi2_values(&g, Spacing::LogEnds).unwrap();
        assert_eq!(v.len(), 256);
        assert!((v[0] - 1e-5).abs() < 1e-20);
        assert!((v[255] - (TAU - 1e-5)).abs() < 1e-12);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        assert!((v[127] - PI).abs() < 1e-12);
        assert!(phi2_values(&PhaseGrid::new(0.0, 1.0, 4).unwrap(), Spacing::LogEnds).is_err());
        let odd = phi2_values(&PhaseGrid::new(1e-3, TAU - 1e-3, 5).unwrap(), Spacing::LogEnds).unwrap();
        assert_eq!(odd.len(), 5);
        assert!(odd.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Validation("x".into())), 1);
        assert_eq!(
            exit_code(&Error::SingularClosure {
                rcond: 0.0,
                ports: String::new()
            }),
            2
        );
        assert_eq!(
            exit_code(&Error::TargetUnreachable {
                target: 2.0,
                min: 0.0,
                max: 1.0
            }),
            3
        );
    }

    #[test]
    fn unknown_device() {
        assert!(matches!(resolve_device("no-such-device"), Err(Error::InvalidArgument(_))));
    }
}
