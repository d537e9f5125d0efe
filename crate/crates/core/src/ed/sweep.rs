//! Exact diagonalization along a sequence of particle numbers and the
//! comparison with the Bogoliubov predictions.

use std::sync::Arc;

use rayon::prelude::*;

use super::eigen::{lowest_eigenvalues, EigenOptions, EigenResult};
use crate::bogoliubov::{dispersion, excitation_spectrum, ground_state_energy, ScatteringLengthChoice};
use crate::fock::basis::{enumerate_basis, FockBasis, ModeSet};
use crate::fock::krylov::apply_exponentials;
use crate::fock::named::{self, OperatorContext};
use crate::fock::sparse::{assemble_between, SparseOperator, DEFAULT_NNZ_BUDGET};
use crate::lattice::{LatticeVector, MomentumLattice};
use crate::potential::PotentialSpec;
use crate::Error;

/// `⟨𝒩₊⟩` and `⟨n₀⟩/N` of a state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Depletion {
    pub n_plus: f64,
    pub condensate_fraction: f64,
}

/// `⟨𝒩₊⟩ = Σ|c|²(N − n₀)` for a normalized vector.
pub fn depletion(vector: &[f64], basis: &FockBasis) -> Result<Depletion, Error> {
    if vector.len() != basis.len() {
        return Err(Error::Dimension { expected: basis.len(), found: vector.len() });
    }
    let norm2: f64 = vector.iter().map(|c| c * c).sum();
    let n_plus: f64 = vector.iter().enumerate().map(|(i, c)| c * c * basis.excitations(i) as f64).sum::<f64>() / norm2;
    let n = basis.particles() as f64;
    let condensate_fraction = if n > 0.0 { (n - n_plus) / n } else { 1.0 };
    Ok(Depletion { n_plus, condensate_fraction })
}

/// One excited level matched (or not) to a predicted level.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelRow {
    pub sector: LatticeVector,
    /// Index of the eigenvalue within its sector.
    pub level: usize,
    pub ed_gap: f64,
    pub predicted: Option<f64>,
    pub occupations: Option<String>,
    pub rel_dev: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundRow {
    pub ed_energy: f64,
    /// `4π𝔞_N(N−1) + ½Σσ(p)` on the same lattice.
    pub predicted: f64,
    pub e0_per_particle: f64,
    pub fourpi_an: f64,
    /// `E_N/N − 4π𝔞_N`.
    pub lhy_deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub particles: u32,
    pub a_n: f64,
    pub sectors: Vec<(LatticeVector, usize)>,
    pub rows: Vec<LevelRow>,
    pub ground: GroundRow,
    pub depletion: Depletion,
    /// Lowest gap in sector `e₁`, its prediction `ε_{2πe₁}` and the relative deviation.
    pub e1_gap: Option<(f64, f64, f64)>,
    /// `|⟨ground, e^{𝓑₂}e^{𝓑₃}e^{𝓑₄} vac⟩|`.
    pub trial_overlap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    /// Potential; its particle number is replaced per run.
    pub potential: PotentialSpec<f64>,
    pub particles: Vec<u32>,
    pub lattice: MomentumLattice,
    pub alpha: f64,
    pub levels: usize,
    pub sectors: Vec<LatticeVector>,
    pub eigen: EigenOptions,
    pub scattering_tol: f64,
    pub basis_budget: usize,
    pub trial_overlap: bool,
}

impl SweepConfig {
    /// Desk-scale preset: step `v = 50`, `R = 0.2`, the seven modes
    /// `|n| ≤ 1`, `N ∈ {6, 12, 20}`, sectors `0` and `e₁`.
    pub fn desk() -> Self {
        SweepConfig {
            potential: PotentialSpec::step(50.0, 0.2, 1).expect("valid step"),
            particles: vec![6, 12, 20],
            lattice: MomentumLattice::with_shape(1, crate::lattice::LatticeShape::Ball),
            alpha: crate::DEFAULT_ALPHA,
            levels: 6,
            sectors: vec![LatticeVector::ZERO, LatticeVector::unit(0)],
            eigen: EigenOptions::default(),
            scattering_tol: 1e-12,
            basis_budget: crate::fock::basis::DEFAULT_BASIS_BUDGET,
            trial_overlap: true,
        }
    }
}

/// Sector spectrum with its basis and Hamiltonian.
pub struct SectorSolve {
    pub basis: Arc<FockBasis>,
    pub hamiltonian: SparseOperator,
    pub result: EigenResult,
}

/// Assembles `H_N` on `(N, sector)` and extracts `levels` eigenvalues.
pub fn solve_sector(
    ctx: &OperatorContext,
    sector: LatticeVector,
    levels: usize,
    opts: &EigenOptions,
    budget: usize,
    vectors: bool,
) -> Result<SectorSolve, Error> {
    let basis = Arc::new(enumerate_basis(ctx.modes.clone(), ctx.particles, Some(sector), budget)?);
    let h = assemble_between(&named::hamiltonian(ctx)?, &basis, &basis, DEFAULT_NNZ_BUDGET)?;
    let m = levels.min(basis.len());
    let mut result = lowest_eigenvalues(&h, m, opts, vectors)?;
    result.sector = Some(sector);
    Ok(SectorSolve { basis, hamiltonian: h, result })
}

struct Candidate {
    energy: f64,
    occupations: String,
    window: f64,
}

/// Greedy nearest matching: pairs are taken in order of increasing
/// distance, each predicted level at most once, only within its window.
fn match_levels(gaps: &[f64], predicted: &[Candidate]) -> Vec<Option<usize>> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, g) in gaps.iter().enumerate() {
        for (j, c) in predicted.iter().enumerate() {
            let d = (g - c.energy).abs();
            if d <= c.window {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![None; gaps.len()];
    let mut used = vec![false; predicted.len()];
    for (_, i, j) in pairs {
        if out[i].is_none() && !used[j] {
            out[i] = Some(j);
            used[j] = true;
        }
    }
    out
}

fn candidates(a: f64, lattice: &MomentumLattice, sector: LatticeVector, max_energy: f64) -> Result<Vec<Candidate>, Error> {
    let spec = excitation_spectrum(a, ScatteringLengthChoice::Box, lattice, max_energy, 1_000_000)?;
    let mut out: Vec<(f64, String)> = spec
        .excitations
        .iter()
        .filter(|e| {
            let mut n = [0i64; 3];
            for (p, k) in &e.occupation {
                for c in 0..3 {
                    n[c] += p.n[c] as i64 * *k as i64;
                }
            }
            n == [sector.n[0] as i64, sector.n[1] as i64, sector.n[2] as i64] && e.total() > 0
        })
        .map(|e| (e.energy, e.occupation_string()))
        .collect();
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    let distinct: Vec<f64> = {
        let mut d: Vec<f64> = out.iter().map(|x| x.0).collect();
        d.dedup_by(|x, y| (*x - *y).abs() <= 1e-9 * y.abs().max(1.0));
        d
    };
    Ok(out
        .into_iter()
        .map(|(energy, occupations)| {
            let spacing = distinct
                .iter()
                .filter(|d| (**d - energy).abs() > 1e-9 * energy.abs().max(1.0))
                .map(|d| (d - energy).abs())
                .fold(f64::INFINITY, f64::min);
            let spacing = if spacing.is_finite() { spacing } else { energy };
            Candidate { energy, occupations, window: 0.25 * spacing }
        })
        .collect())
}

/// ED run at one particle number.
pub fn compare_at(cfg: &SweepConfig, particles: u32) -> Result<ComparisonReport, Error> {
    let spec = cfg.potential.with_particles(particles)?;
    spec.check_support()?;
    let ctx = OperatorContext::prepare(&cfg.lattice, &spec, cfg.alpha, None, cfg.scattering_tol)?;
    let a_n = ctx.solution()?.a_n;
    let zero = LatticeVector::ZERO;
    let mut sectors = cfg.sectors.clone();
    if !sectors.contains(&zero) {
        sectors.insert(0, zero);
    }
    let solves: Vec<SectorSolve> = sectors
        .par_iter()
        .map(|s| solve_sector(&ctx, *s, cfg.levels, &cfg.eigen, cfg.basis_budget, *s == zero))
        .collect::<Result<_, _>>()?;
    let e0 = solves.iter().map(|s| s.result.eigenvalues[0]).fold(f64::INFINITY, f64::min);
    let ground_solve = &solves[sectors.iter().position(|s| *s == zero).expect("zero sector")];
    let ground_vec = &ground_solve.result.eigenvectors.as_ref().expect("vectors requested")[0];
    let dep = depletion(ground_vec, &ground_solve.basis)?;

    let mut rows = Vec::new();
    let mut e1_gap = None;
    for (s, solve) in sectors.iter().zip(&solves) {
        let gaps: Vec<f64> = solve
            .result
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(i, _)| !(*s == zero && *i == 0))
            .map(|(_, e)| e - e0)
            .collect();
        let max_gap = gaps.iter().copied().fold(0.0, f64::max);
        let cands = candidates(a_n, &cfg.lattice, *s, 1.5 * max_gap + 1.0)?;
        let matched = match_levels(&gaps, &cands);
        let offset = if *s == zero { 1 } else { 0 };
        for (i, g) in gaps.iter().enumerate() {
            let c = matched[i].map(|j| &cands[j]);
            rows.push(LevelRow {
                sector: *s,
                level: i + offset,
                ed_gap: *g,
                predicted: c.map(|c| c.energy),
                occupations: c.map(|c| c.occupations.clone()),
                rel_dev: c.map(|c| (g - c.energy).abs() / c.energy),
            });
        }
        if *s == LatticeVector::unit(0) {
            if let Some(g) = gaps.first() {
                let eps = dispersion(a_n, LatticeVector::unit(0));
                e1_gap = Some((*g, eps, (g - eps).abs() / eps));
            }
        }
    }

    let n = particles as f64;
    let fourpi_an = 4.0 * std::f64::consts::PI * a_n;
    let gse = ground_state_energy(a_n, particles, &cfg.lattice);
    let ground = GroundRow { ed_energy: e0, predicted: gse.value, e0_per_particle: e0 / n, fourpi_an, lhy_deviation: e0 / n - fourpi_an };

    let trial_overlap = if cfg.trial_overlap {
        Some(trial_overlap(&ctx, &ground_solve.basis, ground_vec)?)
    } else {
        None
    };

    Ok(ComparisonReport {
        particles,
        a_n,
        sectors: sectors.iter().zip(&solves).map(|(s, x)| (*s, x.basis.len())).collect(),
        rows,
        ground,
        depletion: dep,
        e1_gap,
        trial_overlap,
    })
}

/// `|⟨ψ, e^{𝓑₂}e^{𝓑₃}e^{𝓑₄}|N,0,…⟩⟩|` on the sector-zero basis.
pub fn trial_overlap(ctx: &OperatorContext, basis: &FockBasis, ground: &[f64]) -> Result<f64, Error> {
    let gens: Vec<SparseOperator> = [named::b2(ctx)?, named::b3(ctx)?, named::b4(ctx)?]
        .iter()
        .map(|e| assemble_between(e, basis, basis, DEFAULT_NNZ_BUDGET))
        .collect::<Result<_, _>>()?;
    let refs: Vec<&SparseOperator> = gens.iter().collect();
    let mut vac = vec![0.0; basis.len()];
    vac[basis.condensate_index().ok_or(Error::Config("condensate state outside the basis".into()))?] = 1.0;
    let t = apply_exponentials(&refs, &vac, 1e-12)?;
    let dot: f64 = t.iter().zip(ground).map(|(a, b)| a * b).sum();
    let nt: f64 = t.iter().map(|x| x * x).sum::<f64>().sqrt();
    let ng: f64 = ground.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok((dot / (nt * ng)).abs())
}

/// Runs [`compare_at`] for every particle number, in order.
pub fn gp_sweep(cfg: &SweepConfig) -> Result<Vec<ComparisonReport>, Error> {
    cfg.particles.iter().map(|&n| compare_at(cfg, n)).collect()
}

/// Mode set of a lattice, shared by the harness.
pub fn modes_of(lattice: &MomentumLattice) -> Arc<ModeSet> {
    Arc::new(ModeSet::from_lattice(lattice))
}
