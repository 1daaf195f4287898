use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use paramp_cli::commands::{self, Command, GeometryChoice, Overrides};
use paramp_cli::config::{self, parse_artifacts};
use paramp_cli::CliError;

/// Parametric image amplification in planar and confocal cavities.
#[derive(Debug, Parser)]
#[command(name = "paramp", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Summary (peak G, min F, validity) plus the artifacts listed in --emit.
    Run(Common),
    /// Gain map G(ρ).
    GainMap(Common),
    /// Noise-figure map F(ρ) at the detector efficiency.
    NoiseMap(Common),
    /// Image-plane field, magnitude and phase.
    Amplify(Common),
    /// Monte Carlo photocount images.
    Simulate(Common),
    /// Gauss-Laguerre basis diagnostics.
    Modes(ModesArgs),
    /// Check a scenario and print its validity figure.
    Validate(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Artifacts to write: gain-map, noise-map, image, counts.
    #[arg(long, value_delimiter = ',')]
    emit: Option<Vec<String>>,
    #[arg(long, default_value = "paramp-out")]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long, value_enum)]
    geometry: Option<GeometryArg>,
    /// Validity-figure cutoff.
    #[arg(long)]
    threshold: Option<f64>,
    /// Also write 16-bit PGM previews.
    #[arg(long)]
    pgm: bool,
}

#[derive(Debug, Args)]
struct ModesArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    pmax: Option<u32>,
    #[arg(long)]
    lmax: Option<u32>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GeometryArg {
    Planar,
    Confocal,
    Both,
}

fn overrides(c: &Common) -> Result<Overrides, CliError> {
    Ok(Overrides {
        emit: c.emit.as_deref().map(parse_artifacts).transpose()?,
        seed: c.seed,
        shots: c.shots,
        geometry: c.geometry.map(|g| match g {
            GeometryArg::Planar => GeometryChoice::Planar,
            GeometryArg::Confocal => GeometryChoice::Confocal,
            GeometryArg::Both => GeometryChoice::Both,
        }),
        threshold: c.threshold,
        pgm: c.pgm,
        pmax: None,
        lmax: None,
    })
}

fn dispatch(cli: Cli) -> Result<String, CliError> {
    let (command, common, pmax, lmax) = match &cli.command {
        Cmd::Run(c) => (Command::Run, c, None, None),
        Cmd::GainMap(c) => (Command::GainMap, c, None, None),
        Cmd::NoiseMap(c) => (Command::NoiseMap, c, None, None),
        Cmd::Amplify(c) => (Command::Amplify, c, None, None),
        Cmd::Simulate(c) => (Command::Simulate, c, None, None),
        Cmd::Modes(m) => (Command::Modes, &m.common, m.pmax, m.lmax),
        Cmd::Validate(c) => (Command::Validate, c, None, None),
    };
    let mut ov = overrides(common)?;
    ov.pmax = pmax;
    ov.lmax = lmax;
    let scenario = config::load(&common.config)?;
    let outcome = commands::execute(command, scenario, &ov)?;
    let mut text = outcome.summary.clone();
    for path in commands::write_outcome(&outcome, &common.out_dir)? {
        text.push_str(&format!("wrote {}\n", path.display()));
    }
    Ok(text)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
