//! The named operators of the Bogoliubov construction as expressions on a
//! finite mode set.
//!
//! Sums run over labels inside the mode list: every momentum carried by a
//! creation or annihilation operator lies in `M \ {0}` except for explicit
//! `a₀`, `a₀†`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::basis::ModeSet;
use super::expr::{an, cr, Op, OperatorExpression, Symmetry};
use crate::bogoliubov::BogoliubovData;
use crate::lattice::{LatticeVector, MomentumLattice};
use crate::potential::{PotentialSpec, ScaledPotential};
use crate::scattering::{
    difference_norm_bound, solve_with_table, w_coefficients, with_cutoff, InfraredCutoff, ScatteringSolution,
    WCoefficients,
};
use crate::Error;

/// Data the named operators are built from.
#[derive(Clone, Debug)]
pub struct OperatorContext {
    pub modes: Arc<ModeSet>,
    pub particles: u32,
    pub potential: Option<ScaledPotential<f64>>,
    pub scattering: Option<ScatteringSolution<f64>>,
    pub w: Option<WCoefficients<f64>>,
    pub bogoliubov: Option<BogoliubovData<f64>>,
    /// Interpolation parameter of `E(s)`.
    pub s: Option<f64>,
}

impl OperatorContext {
    /// Context with no potential data; enough for `H1`, `N+`, `N0`.
    pub fn bare(modes: Arc<ModeSet>, particles: u32) -> Self {
        OperatorContext { modes, particles, potential: None, scattering: None, w: None, bogoliubov: None, s: None }
    }

    /// Solves the scattering equation on `lattice` and fills every field.
    ///
    /// `cutoff` replaces the threshold `N^α` when given.
    pub fn prepare(
        lattice: &MomentumLattice,
        spec: &PotentialSpec<f64>,
        alpha: f64,
        cutoff: Option<f64>,
        tol: f64,
    ) -> Result<Self, Error> {
        let particles = spec.particles;
        let modes = Arc::new(ModeSet::from_lattice(lattice));
        let table = spec.scaled_table(difference_norm_bound(lattice))?;
        let cut = cutoff.map_or_else(|| InfraredCutoff::from_alpha(particles, alpha), InfraredCutoff::new);
        let sol = with_cutoff(solve_with_table(lattice, &table, tol)?, alpha, cut);
        let w = w_coefficients(&sol, &table);
        let bog = BogoliubovData::with_cutoff(sol.a_n, lattice, particles, alpha, cut);
        Ok(OperatorContext {
            modes,
            particles,
            potential: Some(table),
            scattering: Some(sol),
            w: Some(w),
            bogoliubov: Some(bog),
            s: Some(1.0),
        })
    }

    pub fn vhat(&self) -> Result<&ScaledPotential<f64>, Error> {
        self.potential.as_ref().ok_or(Error::MissingContext("potential"))
    }

    pub fn solution(&self) -> Result<&ScatteringSolution<f64>, Error> {
        self.scattering.as_ref().ok_or(Error::MissingContext("scattering"))
    }

    pub fn w(&self) -> Result<&WCoefficients<f64>, Error> {
        self.w.as_ref().ok_or(Error::MissingContext("w"))
    }

    pub fn bog(&self) -> Result<&BogoliubovData<f64>, Error> {
        self.bogoliubov.as_ref().ok_or(Error::MissingContext("bogoliubov"))
    }

    pub fn cutoff(&self) -> Result<InfraredCutoff<f64>, Error> {
        if let Some(s) = &self.scattering {
            Ok(s.cutoff)
        } else if let Some(b) = &self.bogoliubov {
            Ok(b.cutoff)
        } else {
            Err(Error::MissingContext("cutoff"))
        }
    }

    /// `M \ {0}` in mode order.
    pub fn nonzero(&self) -> Vec<LatticeVector> {
        self.modes.nonzero().collect()
    }

    fn inm(&self, p: LatticeVector) -> bool {
        self.modes.contains_nonzero(p)
    }

    fn n(&self) -> f64 {
        self.particles as f64
    }
}

/// Operators available through [`build_named`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NamedOperator {
    H0,
    H1,
    H2,
    Q2,
    Q3,
    Q4,
    B2,
    B3,
    B4,
    TQ2,
    TQ2Prime,
    NPlus,
    N0,
    Es,
    /// The full Hamiltonian, built directly.
    HN,
}

impl NamedOperator {
    pub const ALL: [NamedOperator; 15] = [
        NamedOperator::H0,
        NamedOperator::H1,
        NamedOperator::H2,
        NamedOperator::Q2,
        NamedOperator::Q3,
        NamedOperator::Q4,
        NamedOperator::B2,
        NamedOperator::B3,
        NamedOperator::B4,
        NamedOperator::TQ2,
        NamedOperator::TQ2Prime,
        NamedOperator::NPlus,
        NamedOperator::N0,
        NamedOperator::Es,
        NamedOperator::HN,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            NamedOperator::H0 => "H0",
            NamedOperator::H1 => "H1",
            NamedOperator::H2 => "H2",
            NamedOperator::Q2 => "Q2",
            NamedOperator::Q3 => "Q3",
            NamedOperator::Q4 => "Q4",
            NamedOperator::B2 => "B2",
            NamedOperator::B3 => "B3",
            NamedOperator::B4 => "B4",
            NamedOperator::TQ2 => "tQ2",
            NamedOperator::TQ2Prime => "tQ2prime",
            NamedOperator::NPlus => "N+",
            NamedOperator::N0 => "N0",
            NamedOperator::Es => "E_s",
            NamedOperator::HN => "HN",
        }
    }
}

impl fmt::Display for NamedOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NamedOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        NamedOperator::ALL
            .iter()
            .copied()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown operator `{s}`")))
    }
}

pub fn build_named(name: NamedOperator, ctx: &OperatorContext) -> Result<OperatorExpression, Error> {
    match name {
        NamedOperator::H0 => h0(ctx),
        NamedOperator::H1 => Ok(h1(ctx)),
        NamedOperator::H2 => h2(ctx),
        NamedOperator::Q2 => q2(ctx),
        NamedOperator::Q3 => q3(ctx),
        NamedOperator::Q4 => q4(ctx),
        NamedOperator::B2 => b2(ctx),
        NamedOperator::B3 => b3(ctx),
        NamedOperator::B4 => b4(ctx),
        NamedOperator::TQ2 => tq2(ctx),
        NamedOperator::TQ2Prime => tq2_prime(ctx),
        NamedOperator::NPlus => Ok(n_plus(ctx)),
        NamedOperator::N0 => Ok(n_zero(ctx)),
        NamedOperator::Es => e_s(ctx),
        NamedOperator::HN => hamiltonian(ctx),
    }
}

const Z: LatticeVector = LatticeVector::ZERO;

fn hermitian(mut e: OperatorExpression) -> OperatorExpression {
    e.symmetry = Symmetry::Hermitian;
    e
}

/// `V̂_N(0)N(N−1)/2` times the identity.
pub fn h0(ctx: &OperatorContext) -> Result<OperatorExpression, Error> {
    let n = ctx.n();
    Ok(OperatorExpression::identity("H0", ctx.vhat()?.at_zero() * n * (n - 1.0) / 2.0))
}

/// `Σ p² a_p†a_p`.
pub fn h1(ctx: &OperatorContext) -> OperatorExpression {
    let mut e = OperatorExpression::new("H1");
    for p in ctx.nonzero() {
        e.push(p.momentum_sq(), vec![cr(p), an(p)]);
    }
    hermitian(e)
}

pub fn n_plus(ctx: &OperatorContext) -> OperatorExpression {
    let mut e = OperatorExpression::new("N+");
    for p in ctx.nonzero() {
        e.push(1.0, vec![cr(p), an(p)]);
    }
    hermitian(e)
}

pub fn n_zero(_ctx: &OperatorContext) -> OperatorExpression {
    let mut e = OperatorExpression::new("N0");
    e.push(1.0, vec![cr(Z), an(Z)]);
    hermitian(e)
}

/// `Σ V̂_N(p) a_p†a_p (N − 𝒩₊) − ½V̂_N(0) 𝒩₊(𝒩₊ − 1)`, normal ordered.
pub fn h2(ctx: &OperatorContext) -> Result<OperatorExpression, Error> {
    let v = ctx.vhat()?;
    let n = ctx.n();
    let nz = ctx.nonzero();
    let mut e = OperatorExpression::new("H2");
    for &p in &nz {
        e.push(v.get(p) * (n - 1.0), vec![cr(p), an(p)]);
        for &q in &nz {
            e.push(-v.get(p) - 0.5 * v.at_zero(), vec![cr(p), cr(q), an(q), an(p)]);
        }
    }
    Ok(hermitian(e).simplify())
}

/// `½ Σ V̂_N(p)[a_p†a_{−p}†a₀a₀ + h.c.]`.
pub fn q2(ctx: &OperatorContext) -> Result<OperatorExpression, Error> {
    let v = ctx.vhat()?;
    let mut e = OperatorExpression::new("Q2");
    for p in ctx.nonzero() {
        if ctx.inm(-p) {
            e.push(0.5 * v.get(p), vec![cr(p), cr(-p), an(Z), an(Z)]);
        }
    }
    Ok(e.plus_hc().with_name("Q2"))
}

/// `Σ_{q,r,q+r≠0} V̂_N(r)[a_{q+r}†a_{−r}†a_q a₀ + h.c.]`.
pub fn q3(ctx: &OperatorContext) -> Result<OperatorExpression, Error> {
    let v = ctx.vhat()?;
    let nz = ctx.nonzero();
    let mut e = OperatorExpression::new("Q3");
    for &q in &nz {
        for &r in &nz {
            if ctx.inm(q + r) && ctx.inm(-r) {
                e.push(v.get(r), vec![cr(q + r), cr(-r), an(q), an(Z)]);
            }
        }
    }
    Ok(e.plus_hc().with_name("Q3"))
}

/// `½ Σ V̂_N(r) a_{p+r}†a_q†a_p a_{q+r}`, all four labels nonzero.
pub fn q4(ctx: &OperatorContext) -> Result<OperatorExpression, Error> {
    let v = ctx.vhat()?;
    let nz = ctx.nonzero();
    let mut e = OperatorExpression::new("Q4");
    for &p in &nz {
        for &pr in &nz {
            let r = pr - p;
            for &q in &nz {
                if ctx.inm(q + r) {
                    e.push(0.5 * v.get(r), vec![cr(pr), cr(q), an(p), an(q + r)]);
                }
            }
        }
    }
    Ok(hermitian(e))
}

/// `Σ p² a_p†a_p + ½ Σ V̂_N(r) a_{p+r}†a_q†a_{q+r}a_p` with every label in `M`.
pub fn hamiltonian(ctx: &OperatorContext) -> Result<OperatorExpression, Error> {
    let v = ctx.vhat()?;
    let all = ctx.modes.vectors().to_vec();
    let mut e = OperatorExpression::new("HN");
    for &p in &all {
        if !p.is_zero() {
            e.push(p.momentum_sq(), vec![cr(p), an(p)]);
        }
    }
    for &p in &all {
        for &pr in &all {
            let r = pr - p;
            for &q in &all {
                if ctx.modes.contains(q + r) {
                    e.push(0.5 * v.get(r), vec![cr(pr), cr(q), an(q + r), an(p)]);
                }
            }
        }
    }
    Ok(hermitian(e))
}

/// `½ Σ φ̃_p [a_p†a_{−p}†a₀a₀ − h.c.]`.
pub fn b2(ctx: &OperatorContext) -> Result<OperatorExpression, Error> {
    let sol = ctx.solution()?;
    let mut e = OperatorExpression::new("B2");
    for p in ctx.nonzero() {
        if ctx.inm(-p) {
            e.push(0.5 * sol.phi_tilde_at(p), vec![cr(p), cr(-p), an(Z), an(Z)]);
        }
    }
    Ok(e.minus_hc().with_name("B2"))
}

/// `Σ φ̃_p χ_{|q|≤N^α} a_{p+q}†a_{−p}†a_q a₀ − h.c.`
pub fn b3(ctx: &OperatorContext) -> Result<OperatorExpression, Error> {
    let sol = ctx.solution()?;
    let cut = ctx.cutoff()?;
    let nz = ctx.nonzero();
    let mut e = OperatorExpression::new("B3");
    for &p in &nz {
        let f = sol.phi_tilde_at(p);
        if f == 0.0 || !ctx.inm(-p) {
            continue;
        }
        for &q in &nz {
            if cut.inside(q) && ctx.inm(p + q) {
                e.push(f, vec![cr(p + q), cr(-p), an(q), an(Z)]);
            }
        }
    }
    Ok(e.minus_hc().with_name("B3"))
}

/// `½ Σ_{|p|≤N^α} τ_p (a_p†a_{−p}†a₀a₀/N − h.c.)`.
pub fn b4(ctx: &OperatorContext) -> Result<OperatorExpression, Error> {
    let bog = ctx.bog()?;
    let n = ctx.n();
    let mut e = OperatorExpression::new("B4");
    for p in ctx.nonzero() {
        if bog.cutoff.inside(p) && ctx.inm(-p) {
            e.push(0.5 * bog.tau_at(p) / n, vec![cr(p), cr(-p), an(Z), an(Z)]);
        }
    }
    Ok(e.minus_hc().with_name("B4"))
}

/// `Σ_{|p|≤N^α} 4π𝔞_N [a_p†a_{−p}†a₀a₀/N + h.c.]`.
pub fn tq2(ctx: &OperatorContext) -> Result<OperatorExpression, Error> {
    let sol = ctx.solution()?;
    let c = 4.0 * std::f64::consts::PI * sol.a_n / ctx.n();
    let mut e = OperatorExpression::new("tQ2");
    for p in ctx.nonzero() {
        if sol.cutoff.inside(p) && ctx.inm(-p) {
            e.push(c, vec![cr(p), cr(-p), an(Z), an(Z)]);
        }
    }
    Ok(e.plus_hc().with_name("tQ2"))
}

/// `Σ Ŵ(p) a_p†a_{−p}†a₀a₀ + h.c.`
pub fn tq2_prime(ctx: &OperatorContext) -> Result<OperatorExpression, Error> {
    let w = ctx.w()?;
    let mut e = OperatorExpression::new("tQ2prime");
    for p in ctx.nonzero() {
        if ctx.inm(-p) {
            e.push(w.at(p), vec![cr(p), cr(-p), an(Z), an(Z)]);
        }
    }
    Ok(e.plus_hc().with_name("tQ2prime"))
}

/// `b_p = a₀†a_p/√N` as a single monomial.
pub fn b_op(p: LatticeVector, particles: u32) -> OperatorExpression {
    let mut e = OperatorExpression::new(format!("b{p:?}"));
    e.push(1.0 / (particles as f64).sqrt(), vec![cr(Z), an(p)]);
    e
}

/// `b_p† = a_p†a₀/√N`.
pub fn b_dag(p: LatticeVector, particles: u32) -> OperatorExpression {
    let mut e = OperatorExpression::new(format!("b†{p:?}"));
    e.push(1.0 / (particles as f64).sqrt(), vec![cr(p), an(Z)]);
    e
}

/// `E(s) = Σ_{|p|≤N^α} ε_p (γ_p^s b_p† + ν_p^s b_{−p})(γ_p^s b_p + ν_p^s b_{−p}†)`
/// with `γ^s = cosh(sτ_p)`, `ν^s = sinh(sτ_p)`; products kept in the
/// written order.
pub fn e_s(ctx: &OperatorContext) -> Result<OperatorExpression, Error> {
    let bog = ctx.bog()?;
    let s = ctx.s.ok_or(Error::MissingContext("s"))?;
    let n = ctx.n();
    let mut e = OperatorExpression::new("E_s");
    for p in ctx.nonzero() {
        if !bog.cutoff.inside(p) || !ctx.inm(-p) {
            continue;
        }
        let t = s * bog.tau_at(p);
        let (g, v) = (t.cosh(), t.sinh());
        let eps = bog.eps_at(p) / n;
        let bd = |k: LatticeVector| [cr(k), an(Z)];
        let b = |k: LatticeVector| [cr(Z), an(k)];
        let cat = |x: [Op; 2], y: [Op; 2]| vec![x[0], x[1], y[0], y[1]];
        e.push(eps * g * g, cat(bd(p), b(p)));
        e.push(eps * g * v, cat(bd(p), bd(-p)));
        e.push(eps * v * g, cat(b(-p), b(p)));
        e.push(eps * v * v, cat(b(-p), bd(-p)));
    }
    Ok(hermitian(e))
}

/// `Σ V̂_N(r) φ̃_p [a_{p+r}†a_q†a_{−p}†a_{q+r}a₀a₀ + h.c.]`.
pub fn gamma2_rhs(ctx: &OperatorContext) -> Result<OperatorExpression, Error> {
    let v = ctx.vhat()?;
    let sol = ctx.solution()?;
    let nz = ctx.nonzero();
    let mut e = OperatorExpression::new("Γ₂ rhs");
    for &p in &nz {
        let f = sol.phi_tilde_at(p);
        if f == 0.0 || !ctx.inm(-p) {
            continue;
        }
        for &pr in &nz {
            let r = pr - p;
            for &q in &nz {
                if ctx.inm(q + r) {
                    e.push(v.get(r) * f, vec![cr(pr), cr(q), cr(-p), an(q + r), an(Z), an(Z)]);
                }
            }
        }
    }
    Ok(e.plus_hc().with_name("Γ₂ rhs"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::basis::enumerate_basis;
    use crate::fock::sparse::{assemble, assemble_naive};
    use crate::lattice::LatticeShape;

    fn ctx(n: u32) -> OperatorContext {
        let lat = MomentumLattice::new(1);
        let spec = PotentialSpec::step(50.0, 0.2, n).unwrap();
        OperatorContext::prepare(&lat, &spec, crate::DEFAULT_ALPHA, Some(std::f64::consts::TAU * 1.2), 1e-13).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for n in NamedOperator::ALL {
            assert_eq!(n.as_str().parse::<NamedOperator>().unwrap(), n);
        }
        assert!("Q5".parse::<NamedOperator>().is_err());
    }

    #[test]
    fn missing_context() {
        let lat = MomentumLattice::with_shape(1, LatticeShape::Ball);
        let c = OperatorContext::bare(Arc::new(ModeSet::from_lattice(&lat)), 3);
        assert!(build_named(NamedOperator::H1, &c).is_ok());
        assert_eq!(build_named(NamedOperator::Q4, &c).unwrap_err(), Error::MissingContext("potential"));
        assert_eq!(build_named(NamedOperator::B3, &c).unwrap_err(), Error::MissingContext("scattering"));
        assert_eq!(build_named(NamedOperator::B4, &c).unwrap_err(), Error::MissingContext("bogoliubov"));
    }

    #[test]
    fn h0_scalar_and_diagonals() {
        let c = ctx(3);
        let basis = enumerate_basis(c.modes.clone(), 3, Some(Z), 100_000).unwrap();
        let v0 = c.vhat().unwrap().at_zero();
        let h0 = assemble(&build_named(NamedOperator::H0, &c).unwrap(), &basis).unwrap();
        assert!(h0.diagonal().iter().all(|d| (d - v0 * 3.0).abs() < 1e-15));
        let np = assemble(&n_plus(&c), &basis).unwrap();
        let h1 = assemble(&h1(&c), &basis).unwrap();
        for i in 0..basis.len() {
            assert_eq!(np.get(i, i), basis.excitations(i) as f64);
            let kin: f64 = basis.state(i).iter().zip(c.modes.vectors()).map(|(n, p)| *n as f64 * p.momentum_sq::<f64>()).sum();
            assert!((h1.get(i, i) - kin).abs() < 1e-12 * kin.max(1.0));
        }
    }

    #[test]
    fn symmetry_flags_hold() {
        let c = ctx(3);
        let basis = enumerate_basis(c.modes.clone(), 3, Some(Z), 100_000).unwrap();
        for n in NamedOperator::ALL {
            let op = assemble(&build_named(n, &c).unwrap(), &basis).unwrap();
            assert!(op.symmetry_defect() < 1e-12, "{n}");
            assert_eq!(op.leaked, 0, "{n}");
            assert_eq!(op.dropped, 0, "{n}");
        }
        let b2 = build_named(NamedOperator::B2, &c).unwrap();
        assert_eq!(b2.symmetry, Symmetry::AntiHermitian);
        assert!(assemble(&b2, &basis).unwrap().max_abs() > 0.0);
    }

    #[test]
    fn q4_matches_naive() {
        let c = ctx(3);
        let basis = enumerate_basis(c.modes.clone(), 3, Some(Z), 100_000).unwrap();
        let e = q4(&c).unwrap();
        let fast = assemble(&e, &basis).unwrap();
        let slow = assemble_naive(&e, &basis).unwrap();
        assert!(fast.max_abs_diff(&slow).0 < 1e-14);
    }
}
