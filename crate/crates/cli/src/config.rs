//! Run configuration: TOML sections with defaults, validated before any
//! computation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use bogolib::bogoliubov::ScatteringLengthChoice;
use bogolib::ed::{EigenOptions, SweepConfig};
use bogolib::fock::basis::DEFAULT_BASIS_BUDGET;
use bogolib::fock::identity::VERIFY_CUTOFF;
use bogolib::potential::{PotentialSpec, RadialTable};
use bogolib::{LatticeShape, LatticeVector, MomentumLattice, DEFAULT_ALPHA};

use crate::CliError;

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSection,
    pub gp: GpSection,
    pub lattice: LatticeSection,
    pub scattering: ScatteringSection,
    pub bogoliubov: BogoliubovSection,
    pub spectrum: SpectrumSection,
    pub ed: EdSection,
    pub verify: VerifySection,
    pub output: OutputSection,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Step,
    Gaussian,
    Table,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialSection {
    pub family: Family,
    pub v: f64,
    #[serde(rename = "R")]
    pub r: f64,
    /// Gaussian width.
    pub width: Option<f64>,
    /// Two-column CSV `r, V(r)`; relative paths resolve against the config file.
    pub table_path: Option<PathBuf>,
}

impl Default for PotentialSection {
    fn default() -> Self {
        PotentialSection { family: Family::Step, v: 50.0, r: 0.2, width: None, table_path: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GpSection {
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(rename = "N_list")]
    pub n_list: Option<Vec<u32>>,
}

impl Default for GpSection {
    fn default() -> Self {
        GpSection { n: 3, n_list: None }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Cube,
    Ball,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSection {
    #[serde(rename = "K")]
    pub k: u32,
    pub shape: Shape,
}

impl Default for LatticeSection {
    fn default() -> Self {
        LatticeSection { k: 1, shape: Shape::Cube }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ScatteringSection {
    pub tol: f64,
}

impl Default for ScatteringSection {
    fn default() -> Self {
        ScatteringSection { tol: 1e-12 }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum AChoice {
    Box,
    Continuum,
}

impl From<AChoice> for ScatteringLengthChoice {
    fn from(c: AChoice) -> Self {
        match c {
            AChoice::Box => ScatteringLengthChoice::Box,
            AChoice::Continuum => ScatteringLengthChoice::Continuum,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct BogoliubovSection {
    pub alpha: f64,
    pub a_choice: AChoice,
}

impl Default for BogoliubovSection {
    fn default() -> Self {
        BogoliubovSection { alpha: DEFAULT_ALPHA, a_choice: AChoice::Box }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub max_energy: f64,
    /// Largest number of occupation maps enumerated.
    pub budget: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection { max_energy: 200.0, budget: 1_000_000 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EdSection {
    pub sectors: Vec<String>,
    pub levels: usize,
    pub tol: f64,
    pub basis_budget: usize,
    pub dense_threshold: usize,
    pub max_restarts: usize,
    pub seed: u64,
    pub trial_overlap: bool,
}

impl Default for EdSection {
    fn default() -> Self {
        let e = EigenOptions::default();
        EdSection {
            sectors: vec!["0".into(), "e1".into()],
            levels: 6,
            tol: e.tol,
            basis_budget: DEFAULT_BASIS_BUDGET,
            dense_threshold: e.dense_threshold,
            max_restarts: e.max_restarts,
            seed: e.seed,
            trial_overlap: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Infrared threshold `|p| ≤ cutoff` for `φ̃`.
    pub cutoff: f64,
    pub sector: String,
    pub tol: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection { cutoff: VERIFY_CUTOFF, sector: "0".into(), tol: 1e-10 }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub format: Option<Format>,
    pub path: Option<PathBuf>,
}

/// `0`, `e1`, `-e2` or `x:y:z`.
pub fn parse_sector(s: &str) -> Result<LatticeVector, CliError> {
    let t = s.trim();
    if t == "0" {
        return Ok(LatticeVector::ZERO);
    }
    let (neg, body) = t.strip_prefix('-').map_or((false, t), |b| (true, b));
    if let Some(i) = body.strip_prefix('e') {
        let axis: usize = i.parse().map_err(|_| CliError::Config(format!("bad sector `{s}`")))?;
        if !(1..=3).contains(&axis) {
            return Err(CliError::Config(format!("bad sector `{s}`: axis must be 1, 2 or 3")));
        }
        let v = LatticeVector::unit(axis - 1);
        return Ok(if neg { -v } else { v });
    }
    let parts: Vec<i32> = t
        .split(':')
        .map(|x| x.trim().parse::<i32>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("bad sector `{s}`; use 0, e1, -e2 or x:y:z")))?;
    match parts[..] {
        [x, y, z] => Ok(LatticeVector::new(x, y, z)),
        _ => Err(CliError::Config(format!("bad sector `{s}`; use 0, e1, -e2 or x:y:z"))),
    }
}

/// Reads a config file; a missing file is a configuration error naming the path.
pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read config `{}`: {e}", path.display())))?;
    let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(t) = &cfg.potential.table_path {
        if t.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.potential.table_path = Some(base.join(t));
        }
    }
    Ok(cfg)
}

fn cfg_err(e: bogolib::Error) -> CliError {
    CliError::Config(e.to_string())
}

impl RunConfig {
    /// Desk-scale ED preset.
    pub fn desk() -> Self {
        let d = SweepConfig::desk();
        let mut cfg = RunConfig::default();
        cfg.potential.v = d.potential.strength;
        cfg.potential.r = d.potential.radius;
        cfg.gp.n = d.particles[0];
        cfg.gp.n_list = Some(d.particles.clone());
        cfg.lattice = LatticeSection { k: d.lattice.cutoff(), shape: Shape::Ball };
        cfg.ed.levels = d.levels;
        cfg.scattering.tol = d.scattering_tol;
        cfg
    }

    pub fn particle_list(&self) -> Vec<u32> {
        self.gp.n_list.clone().unwrap_or_else(|| vec![self.gp.n])
    }

    pub fn lattice(&self) -> MomentumLattice {
        let shape = match self.lattice.shape {
            Shape::Cube => LatticeShape::Cube,
            Shape::Ball => LatticeShape::Ball,
        };
        MomentumLattice::with_shape(self.lattice.k, shape)
    }

    pub fn potential(&self, particles: u32) -> Result<PotentialSpec<f64>, CliError> {
        let p = &self.potential;
        match p.family {
            Family::Step => PotentialSpec::step(p.v, p.r, particles),
            Family::Gaussian => {
                let w = p.width.ok_or_else(|| CliError::Config("potential.width is required for the gaussian family".into()))?;
                PotentialSpec::gaussian(p.v, p.r, w, particles)
            }
            Family::Table => {
                let path = p.table_path.as_ref().ok_or_else(|| CliError::Config("potential.table_path is required for the table family".into()))?;
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read potential table `{}`: {e}", path.display())))?;
                PotentialSpec::table(RadialTable::parse_csv(&text).map_err(cfg_err)?, p.v, particles)
            }
        }
        .map_err(cfg_err)
    }

    pub fn sectors(&self) -> Result<Vec<LatticeVector>, CliError> {
        self.ed.sectors.iter().map(|s| parse_sector(s)).collect()
    }

    pub fn eigen_options(&self) -> EigenOptions {
        EigenOptions {
            tol: self.ed.tol,
            dense_threshold: self.ed.dense_threshold,
            max_restarts: self.ed.max_restarts,
            seed: self.ed.seed,
            ..EigenOptions::default()
        }
    }

    pub fn sweep_config(&self) -> Result<SweepConfig, CliError> {
        let particles = self.particle_list();
        Ok(SweepConfig {
            potential: self.potential(particles[0])?,
            particles,
            lattice: self.lattice(),
            alpha: self.bogoliubov.alpha,
            levels: self.ed.levels,
            sectors: self.sectors()?,
            eigen: self.eigen_options(),
            scattering_tol: self.scattering.tol,
            basis_budget: self.ed.basis_budget,
            trial_overlap: self.ed.trial_overlap,
        })
    }

    /// Every cross-field constraint, checked before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.lattice.k < 1 {
            return bad("lattice.K must be at least 1".into());
        }
        let a = self.bogoliubov.alpha;
        if !(a > 0.0 && a < 1.0) {
            return bad(format!("bogoliubov.alpha must lie in (0, 1), got {a}"));
        }
        let list = self.particle_list();
        if list.is_empty() {
            return bad("gp.N_list is empty".into());
        }
        for &n in &list {
            self.potential(n)?;
        }
        for (name, t) in [("scattering.tol", self.scattering.tol), ("ed.tol", self.ed.tol), ("verify.tol", self.verify.tol)] {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("{name} must be positive, got {t}"));
            }
        }
        if !(self.spectrum.max_energy > 0.0 && self.spectrum.max_energy.is_finite()) {
            return bad(format!("spectrum.max_energy must be positive, got {}", self.spectrum.max_energy));
        }
        if self.spectrum.budget == 0 || self.ed.basis_budget == 0 || self.ed.max_restarts == 0 {
            return bad("budgets must be positive".into());
        }
        if self.ed.levels == 0 {
            return bad("ed.levels must be at least 1".into());
        }
        if !(self.verify.cutoff >= 0.0 && self.verify.cutoff.is_finite()) {
            return bad(format!("verify.cutoff must be non-negative, got {}", self.verify.cutoff));
        }
        let lattice = self.lattice();
        let sectors = self.sectors()?;
        if sectors.is_empty() {
            return bad("ed.sectors is empty".into());
        }
        for s in sectors.iter().chain(std::iter::once(&parse_sector(&self.verify.sector)?)) {
            if lattice.index_of(s).is_none() {
                return bad(format!("sector {s} lies outside the lattice"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sectors_parse() {
        assert_eq!(parse_sector("0").unwrap(), LatticeVector::ZERO);
        assert_eq!(parse_sector("e2").unwrap(), LatticeVector::new(0, 1, 0));
        assert_eq!(parse_sector("-e3").unwrap(), LatticeVector::new(0, 0, -1));
        assert_eq!(parse_sector("1:-1:0").unwrap(), LatticeVector::new(1, -1, 0));
        assert!(parse_sector("e4").is_err());
        assert!(parse_sector("x").is_err());
    }

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
        RunConfig::desk().validate().unwrap();
    }

    #[test]
    fn desk_matches_library_preset() {
        let mut lib = SweepConfig::desk();
        lib.potential = lib.potential.with_particles(lib.particles[0]).unwrap();
        assert_eq!(RunConfig::desk().sweep_config().unwrap(), lib);
    }

    #[test]
    fn shipped_configs_parse() {
        let desk: RunConfig = toml::from_str(include_str!("../../../configs/desk.toml")).unwrap();
        assert_eq!(desk, RunConfig::desk());
        let example: RunConfig = toml::from_str(include_str!("../../../configs/example.toml")).unwrap();
        assert_eq!(example, RunConfig::default());
    }

    #[test]
    fn rejects_bad_fields() {
        let mut c = RunConfig::default();
        c.bogoliubov.alpha = 1.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.gp.n = 1;
        c.potential.r = 0.9;
        assert!(c.validate().is_err());
        assert!(toml::from_str::<RunConfig>("[lattice]\nL = 3\n").is_err());
    }
}
