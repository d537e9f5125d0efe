//! `bogolib`: scattering, spectrum, identity checks and exact
//! diagonalization from a TOML config.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{AChoice, Format, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("computation failed: {0}")]
    Compute(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<bogolib::Error> for CliError {
    fn from(e: bogolib::Error) -> Self {
        match e {
            bogolib::Error::Config(m) => CliError::Config(m),
            other => CliError::Compute(other.to_string()),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "bogolib", version, about = "Bogoliubov theory of the dilute Bose gas on a momentum lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML config; built-in defaults apply to every missing key.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output format (overrides `output.format`).
    #[arg(long)]
    out: Option<Format>,
    /// Output file (overrides `output.path`); stdout when neither is set.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Desk,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Box and continuum scattering lengths over particle numbers.
    Scattering {
        #[command(flatten)]
        common: Common,
        /// Particle numbers, e.g. `20,40,80`.
        #[arg(long = "sweep-N", value_delimiter = ',')]
        sweep_n: Option<Vec<u32>>,
    },
    /// Excitation spectrum below an energy.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        max_energy: Option<f64>,
        /// Scattering length feeding the dispersion.
        #[arg(long, value_enum)]
        a_choice: Option<AChoiceArg>,
    },
    /// Checks operator identities on a truncated Fock space.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Identity name or `all`.
        #[arg(long, default_value = "all")]
        identity: String,
    },
    /// Exact diagonalization compared with the predicted spectrum.
    Ed {
        #[command(flatten)]
        common: Common,
        /// Momentum sectors, e.g. `0,e1,1:1:0`.
        #[arg(long, value_delimiter = ',')]
        sectors: Option<Vec<String>>,
        #[arg(long)]
        levels: Option<usize>,
    },
    /// ED along the particle-number list.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
    },
    /// Concatenates earlier outputs into one long-format CSV table.
    Report {
        /// Output files of earlier runs.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AChoiceArg {
    Box,
    Continuum,
}

fn base_config(common: &Common) -> Result<RunConfig, CliError> {
    match &common.config {
        Some(p) => config::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn finish(cfg: &mut RunConfig, common: &Common, default_format: Format) -> Result<Format, CliError> {
    if let Some(f) = common.out {
        cfg.output.format = Some(f);
    }
    if let Some(p) = &common.output {
        cfg.output.path = Some(p.clone());
    }
    cfg.output.format.get_or_insert(default_format);
    cfg.validate()?;
    Ok(cfg.output.format.expect("set above"))
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("BOGOLIB_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| CliError::Config(format!("BOGOLIB_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    configure_threads()?;
    let (cfg, rendered) = match cli.command {
        Command::Scattering { common, sweep_n } => {
            let mut cfg = base_config(&common)?;
            if let Some(ns) = sweep_n {
                cfg.gp.n_list = Some(ns);
            }
            let f = finish(&mut cfg, &common, Format::Csv)?;
            let r = commands::scattering(&cfg, f)?;
            (cfg, r)
        }
        Command::Spectrum { common, max_energy, a_choice } => {
            let mut cfg = base_config(&common)?;
            if let Some(e) = max_energy {
                cfg.spectrum.max_energy = e;
            }
            if let Some(c) = a_choice {
                cfg.bogoliubov.a_choice = match c {
                    AChoiceArg::Box => AChoice::Box,
                    AChoiceArg::Continuum => AChoice::Continuum,
                };
            }
            let f = finish(&mut cfg, &common, Format::Csv)?;
            let r = commands::spectrum(&cfg, f)?;
            (cfg, r)
        }
        Command::Verify { common, identity } => {
            let names = commands::parse_identities(&identity)?;
            let mut cfg = base_config(&common)?;
            let f = finish(&mut cfg, &common, Format::Json)?;
            let r = commands::verify(&cfg, &names, f)?;
            (cfg, r)
        }
        Command::Ed { common, sectors, levels } => {
            let mut cfg = base_config(&common)?;
            if let Some(s) = sectors {
                cfg.ed.sectors = s;
            }
            if let Some(m) = levels {
                cfg.ed.levels = m;
            }
            let f = finish(&mut cfg, &common, Format::Json)?;
            let r = commands::exact_diagonalization("ed", &cfg, f)?;
            (cfg, r)
        }
        Command::Sweep { common, preset } => {
            let mut cfg = match (preset, &common.config) {
                (Some(_), Some(_)) => return Err(CliError::Config("--preset and --config are exclusive".into())),
                (Some(Preset::Desk), None) => RunConfig::desk(),
                (None, _) => base_config(&common)?,
            };
            let f = finish(&mut cfg, &common, Format::Csv)?;
            let r = commands::exact_diagonalization("sweep", &cfg, f)?;
            (cfg, r)
        }
        Command::Report { inputs, output } => {
            let text = commands::report(&inputs)?;
            output::emit(output.as_deref(), &text)?;
            return Ok(true);
        }
    };
    output::emit(cfg.output.path.as_deref(), &rendered.text)?;
    Ok(rendered.ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("bogolib: one or more checks did not pass");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("bogolib: {e}");
            ExitCode::from(e.code())
        }
    }
}
