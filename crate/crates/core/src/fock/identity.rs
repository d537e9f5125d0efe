//! Exact operator identities checked as matrix identities on finite bases.
//!
//! Every sum is restricted to labels inside the mode list, including the
//! momenta contracted between the two factors of a commutator; with that
//! convention the identities hold exactly on any negation-closed mode set.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::basis::{BasisCache, FockBasis};
use super::expr::{an, cr, OperatorExpression};
use super::named::{self, OperatorContext};
use super::sparse::{assemble_between, SparseOperator, DEFAULT_NNZ_BUDGET};
use crate::lattice::LatticeVector;
use crate::Error;

const Z: LatticeVector = LatticeVector::ZERO;

/// Default cutoff used by the checker, `|p| ≤ 1.2·2π`: the first shell is
/// infrared and every other nonzero momentum of the `K = 1` cube is not.
pub const VERIFY_CUTOFF: f64 = 1.2 * std::f64::consts::TAU;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IdentityName {
    DecompoHN,
    Comm1,
    Comm2,
    Gamma2,
    H1B3,
    Q4B3,
    BComm,
    TQ2B3Comm,
}

impl IdentityName {
    pub const ALL: [IdentityName; 8] = [
        IdentityName::DecompoHN,
        IdentityName::Comm1,
        IdentityName::Comm2,
        IdentityName::Gamma2,
        IdentityName::H1B3,
        IdentityName::Q4B3,
        IdentityName::BComm,
        IdentityName::TQ2B3Comm,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            IdentityName::DecompoHN => "decompo_HN",
            IdentityName::Comm1 => "comm1",
            IdentityName::Comm2 => "comm2",
            IdentityName::Gamma2 => "gamma2",
            IdentityName::H1B3 => "H1B3",
            IdentityName::Q4B3 => "Q4B3",
            IdentityName::BComm => "bcomm",
            IdentityName::TQ2B3Comm => "tQ2B3-comm",
        }
    }

    fn needs_scattering(&self) -> bool {
        matches!(self, IdentityName::Gamma2 | IdentityName::H1B3 | IdentityName::Q4B3 | IdentityName::TQ2B3Comm)
    }
}

impl fmt::Display for IdentityName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IdentityName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        IdentityName::ALL
            .iter()
            .copied()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown identity `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdentityStatus {
    Pass,
    Fail,
}

impl IdentityStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            IdentityStatus::Pass => "pass",
            IdentityStatus::Fail => "fail",
        }
    }
}

/// First matrix element whose deviation exceeds the tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    /// Which piece of the identity (e.g. the `(p, q)` pair).
    pub piece: String,
    pub row_state: String,
    pub col_state: String,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    pub name: IdentityName,
    pub max_dev: f64,
    pub tol: f64,
    /// Dimensions of every basis touched.
    pub basis_dims: Vec<usize>,
    pub status: IdentityStatus,
    pub first_violation: Option<Violation>,
    /// Number of matrix comparisons made.
    pub pieces: usize,
    /// Largest entry of either side, for scale.
    pub scale: f64,
}

/// Where to check: particle number, sector and tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityOptions {
    pub particles: u32,
    pub sector: LatticeVector,
    pub tol: f64,
}

fn state_string(basis: &FockBasis, i: usize) -> String {
    let parts: Vec<String> = basis
        .state(i)
        .iter()
        .zip(basis.modes().vectors())
        .filter(|(n, _)| **n > 0)
        .map(|(n, p)| format!("{n}@({},{},{})", p.n[0], p.n[1], p.n[2]))
        .collect();
    format!("|{}⟩", parts.join(" "))
}

struct Checker<'a> {
    cache: &'a BasisCache,
    tol: f64,
    max_dev: f64,
    first: Option<Violation>,
    dims: Vec<usize>,
    pieces: usize,
    scale: f64,
}

impl<'a> Checker<'a> {
    fn new(cache: &'a BasisCache, tol: f64) -> Self {
        Checker { cache, tol, max_dev: 0.0, first: None, dims: Vec::new(), pieces: 0, scale: 0.0 }
    }

    fn basis(&mut self, particles: u32, sector: LatticeVector) -> Result<Arc<FockBasis>, Error> {
        let b = self.cache.get(particles, Some(sector))?;
        if !self.dims.contains(&b.len()) {
            self.dims.push(b.len());
        }
        Ok(b)
    }

    fn op(&self, e: &OperatorExpression, src: &FockBasis, dst: &FockBasis) -> Result<SparseOperator, Error> {
        let m = assemble_between(e, src, dst, DEFAULT_NNZ_BUDGET)?;
        if m.dropped > 0 || m.leaked > 0 {
            return Err(Error::CutoffUnsafe(format!(
                "`{}` has {} terms outside the mode list and {} images outside the target basis",
                e.name, m.dropped, m.leaked
            )));
        }
        Ok(m)
    }

    fn compare(&mut self, piece: impl FnOnce() -> String, lhs: &SparseOperator, rhs: &SparseOperator, rows: &FockBasis, cols: &FockBasis) {
        self.pieces += 1;
        self.scale = self.scale.max(lhs.max_abs()).max(rhs.max_abs());
        let diff = &lhs.matrix - &rhs.matrix;
        let mut local_first = None;
        for (r, c, v) in diff.triplet_iter() {
            let d = v.abs();
            if d > self.max_dev {
                self.max_dev = d;
            }
            if d > self.tol && local_first.is_none() {
                local_first = Some((r, c));
            }
        }
        if self.first.is_none() {
            if let Some((r, c)) = local_first {
                self.first = Some(Violation {
                    piece: piece(),
                    row_state: state_string(rows, r),
                    col_state: state_string(cols, c),
                    lhs: lhs.get(r, c),
                    rhs: rhs.get(r, c),
                });
            }
        }
    }

    fn finish(mut self, name: IdentityName) -> IdentityReport {
        self.dims.sort_unstable();
        let status = if self.first.is_none() && self.max_dev <= self.tol { IdentityStatus::Pass } else { IdentityStatus::Fail };
        IdentityReport {
            name,
            max_dev: self.max_dev,
            tol: self.tol,
            basis_dims: self.dims,
            status,
            first_violation: self.first,
            pieces: self.pieces,
            scale: self.scale,
        }
    }
}

/// Compares two assembled operators entrywise.
pub fn compare_operators(
    name: IdentityName,
    lhs: &SparseOperator,
    rhs: &SparseOperator,
    basis: &FockBasis,
    tol: f64,
) -> IdentityReport {
    let cache = BasisCache::new(basis.modes().clone(), 0);
    let mut ch = Checker::new(&cache, tol);
    ch.dims.push(basis.len());
    ch.compare(|| "operator".into(), lhs, rhs, basis, basis);
    ch.finish(name)
}

/// Refuses configurations on which the restricted identities are not
/// meaningful.
pub fn check_cutoff_safe(name: IdentityName, ctx: &OperatorContext) -> Result<(), Error> {
    if !ctx.modes.is_negation_closed() {
        return Err(Error::CutoffUnsafe("mode list is not closed under p → −p".into()));
    }
    if name.needs_scattering() {
        let sol = ctx.solution()?;
        let mut a = sol.modes.clone();
        let mut b = ctx.nonzero();
        a.sort();
        b.sort();
        if a != b {
            return Err(Error::CutoffUnsafe(
                "the scattering solution lives on a different mode list; the scattering equation does not hold on this one".into(),
            ));
        }
    }
    Ok(())
}

/// Runs one identity on `(N, sector)`.
pub fn verify_identity(
    name: IdentityName,
    ctx: &OperatorContext,
    cache: &BasisCache,
    opts: &IdentityOptions,
) -> Result<IdentityReport, Error> {
    if cache.modes() != &ctx.modes && **cache.modes() != *ctx.modes {
        return Err(Error::Config("basis cache and context use different modes".into()));
    }
    if opts.particles != ctx.particles {
        return Err(Error::Config(format!(
            "identity requested at N = {} but the context was built for N = {}",
            opts.particles, ctx.particles
        )));
    }
    check_cutoff_safe(name, ctx)?;
    let mut ch = Checker::new(cache, opts.tol);
    match name {
        IdentityName::DecompoHN => decompo(ctx, &mut ch, opts)?,
        IdentityName::Comm1 => comm1(ctx, &mut ch, opts)?,
        IdentityName::Comm2 => comm2(ctx, &mut ch, opts)?,
        IdentityName::Gamma2 => gamma2(ctx, &mut ch, opts)?,
        IdentityName::H1B3 => h1b3(ctx, &mut ch, opts)?,
        IdentityName::Q4B3 => q4b3(ctx, &mut ch, opts)?,
        IdentityName::BComm => bcomm(ctx, &mut ch, opts)?,
        IdentityName::TQ2B3Comm => tq2b3(ctx, &mut ch, opts)?,
    }
    Ok(ch.finish(name))
}

fn square(ch: &Checker, e: &OperatorExpression, b: &FockBasis) -> Result<SparseOperator, Error> {
    ch.op(e, b, b)
}

fn decompo(ctx: &OperatorContext, ch: &mut Checker, o: &IdentityOptions) -> Result<(), Error> {
    let b = ch.basis(o.particles, o.sector)?;
    let parts = [named::h0(ctx)?, named::h1(ctx), named::h2(ctx)?, named::q2(ctx)?, named::q3(ctx)?, named::q4(ctx)?];
    let mut lhs = SparseOperator::zeros(b.len(), b.len());
    for p in &parts {
        lhs = lhs.add(&square(ch, p, &b)?);
    }
    let rhs = square(ch, &named::hamiltonian(ctx)?, &b)?;
    ch.compare(|| "H0+H1+H2+Q2+Q3+Q4 vs HN".into(), &lhs, &rhs, &b, &b);
    Ok(())
}

fn mono(name: &str, ops: Vec<super::expr::Op>) -> OperatorExpression {
    let mut e = OperatorExpression::new(name);
    e.push(1.0, ops);
    e
}

fn comm1(ctx: &OperatorContext, ch: &mut Checker, o: &IdentityOptions) -> Result<(), Error> {
    let n = o.particles;
    let b = ch.basis(n, o.sector)?;
    let up = ch.basis(n + 2, o.sector)?;
    let down = if n >= 2 { Some(ch.basis(n - 2, o.sector)?) } else { None };
    let all = ctx.modes.vectors().to_vec();
    struct Pair {
        x_up: SparseOperator,
        y_n: SparseOperator,
        x_n: Option<SparseOperator>,
        y_down: Option<SparseOperator>,
    }
    let mut ops = Vec::with_capacity(all.len());
    for &p in &all {
        // X_p = a_{−p}a_p, Y_p = a_p†a_{−p}†
        let x = mono("X", vec![an(-p), an(p)]);
        let y = mono("Y", vec![cr(p), cr(-p)]);
        ops.push(Pair {
            x_up: ch.op(&x, &up, &b)?,
            y_n: ch.op(&y, &b, &up)?,
            x_n: down.as_ref().map(|d| ch.op(&x, &b, d)).transpose()?,
            y_down: down.as_ref().map(|d| ch.op(&y, d, &b)).transpose()?,
        });
    }
    let number: Vec<SparseOperator> =
        all.iter().map(|&p| square(ch, &mono("n", vec![cr(p), an(p)]), &b)).collect::<Result<_, _>>()?;
    let id = SparseOperator::identity(b.len());
    for (i, &p) in all.iter().enumerate() {
        let ip = ctx.modes.index_of(-p).expect("negation closed");
        for (j, &q) in all.iter().enumerate() {
            let mut lhs = ops[i].x_up.mul(&ops[j].y_n);
            if let (Some(yd), Some(xn)) = (&ops[j].y_down, &ops[i].x_n) {
                lhs = lhs.sub(&yd.mul(xn));
            }
            let delta = (p == q) as u8 as f64 + (p == -q) as u8 as f64;
            let rhs = if delta == 0.0 {
                SparseOperator::zeros(b.len(), b.len())
            } else {
                id.add(&number[i]).add(&number[ip]).scaled(delta)
            };
            ch.compare(|| format!("p = {:?}, q = {:?}", p.n, q.n), &lhs, &rhs, &b, &b);
        }
    }
    Ok(())
}

fn comm2(_ctx: &OperatorContext, ch: &mut Checker, o: &IdentityOptions) -> Result<(), Error> {
    let n = o.particles;
    let nf = n as f64;
    let b = ch.basis(n, o.sector)?;
    let dim = b.len();
    let np = SparseOperator::from_diagonal("N+", &(0..dim).map(|i| b.excitations(i) as f64).collect::<Vec<_>>());
    let n0 = SparseOperator::from_diagonal("N0", &(0..dim).map(|i| b.state(i)[b.modes().zero()] as f64).collect::<Vec<_>>());
    let id = SparseOperator::identity(dim);
    let lhs = square(ch, &mono("a0†a0†a0a0", vec![cr(Z), cr(Z), an(Z), an(Z)]), &b)?;
    let rhs = id.scaled(nf * (nf - 1.0)).sub(&np.scaled(2.0 * nf)).add(&np.mul(&np)).add(&np);
    ch.compare(|| "a0†a0†a0a0 = N(N−1) − 2N𝒩₊ + 𝒩₊(𝒩₊+1)".into(), &lhs, &rhs, &b, &b);
    let n0_rhs = n0.clone().scaled(-1.0).add(&id.scaled(nf));
    ch.compare(|| "𝒩₀ = N − 𝒩₊".into(), &n0_rhs, &np, &b, &b);

    let up = ch.basis(n + 2, o.sector)?;
    let x = mono("a0a0", vec![an(Z), an(Z)]);
    let y = mono("a0†a0†", vec![cr(Z), cr(Z)]);
    let mut lhs = ch.op(&x, &up, &b)?.mul(&ch.op(&y, &b, &up)?);
    if n >= 2 {
        let down = ch.basis(n - 2, o.sector)?;
        lhs = lhs.sub(&ch.op(&y, &down, &b)?.mul(&ch.op(&x, &b, &down)?));
    }
    let rhs = n0.scaled(4.0).add(&id.scaled(2.0));
    ch.compare(|| "[a0a0, a0†a0†] = 2(2𝒩₀ + 1)".into(), &lhs, &rhs, &b, &b);
    Ok(())
}

fn gamma2(ctx: &OperatorContext, ch: &mut Checker, o: &IdentityOptions) -> Result<(), Error> {
    let b = ch.basis(o.particles, o.sector)?;
    let h1q4 = square(ch, &named::h1(ctx), &b)?.add(&square(ch, &named::q4(ctx)?, &b)?);
    let b2 = square(ch, &named::b2(ctx)?, &b)?;
    let q2 = square(ch, &named::q2(ctx)?, &b)?;
    let tq2p = square(ch, &named::tq2_prime(ctx)?, &b)?;
    let lhs = h1q4.commutator(&b2).add(&q2).sub(&tq2p);
    let rhs = square(ch, &named::gamma2_rhs(ctx)?, &b)?;
    ch.compare(|| "[H1+Q4, B2] + Q2 − tQ2′".into(), &lhs, &rhs, &b, &b);
    Ok(())
}

/// Right-hand side of `[H₁, 𝓑₃]`: main term plus the `p·q` remainder.
pub fn h1b3_rhs(ctx: &OperatorContext) -> Result<(OperatorExpression, OperatorExpression), Error> {
    let v = ctx.vhat()?;
    let sol = ctx.solution()?;
    let cut = ctx.cutoff()?;
    let nz = ctx.nonzero();
    let inm = |p: LatticeVector| ctx.modes.contains_nonzero(p);
    let mut main = OperatorExpression::new("H1B3 main");
    let mut rem = OperatorExpression::new("H1B3 remainder");
    for &p in &nz {
        if cut.inside(p) || !inm(-p) {
            continue;
        }
        let mut conv = v.get(p);
        for &r in &nz {
            conv += v.get(p - r) * sol.phi_at(r);
        }
        let f = sol.phi_tilde_at(p);
        for &q in &nz {
            if !cut.inside(q) || !inm(p + q) {
                continue;
            }
            let ops = vec![cr(p + q), cr(-p), an(q), an(Z)];
            main.push(-conv, ops.clone());
            rem.push(2.0 * p.momentum_dot::<f64>(&q) * f, ops);
        }
    }
    Ok((main.plus_hc(), rem.plus_hc()))
}

fn h1b3(ctx: &OperatorContext, ch: &mut Checker, o: &IdentityOptions) -> Result<(), Error> {
    let b = ch.basis(o.particles, o.sector)?;
    let lhs = square(ch, &named::h1(ctx), &b)?.commutator(&square(ch, &named::b3(ctx)?, &b)?);
    let (main, rem) = h1b3_rhs(ctx)?;
    let rhs = square(ch, &main, &b)?.add(&square(ch, &rem, &b)?);
    ch.compare(|| "[H1, B3] = main + remainder".into(), &lhs, &rhs, &b, &b);
    Ok(())
}

/// Right-hand side of `[Q₄, 𝓑₃]`.
pub fn q4b3_rhs(ctx: &OperatorContext) -> Result<OperatorExpression, Error> {
    let v = ctx.vhat()?;
    let sol = ctx.solution()?;
    let cut = ctx.cutoff()?;
    let nz = ctx.nonzero();
    let inm = |p: LatticeVector| ctx.modes.contains_nonzero(p);
    let chi = |p: LatticeVector| cut.inside(p);
    let ft = |p: LatticeVector| sol.phi_tilde_at(p);

    let mut main = OperatorExpression::new("Q4B3 main");
    for &pp in &nz {
        for &q in &nz {
            if !chi(q) || !inm(pp + q) || !inm(-pp) {
                continue;
            }
            let mut c = 0.0;
            for &r in &nz {
                if inm(q + r) {
                    c += v.get(pp - r) * ft(r);
                }
            }
            main.push(c, vec![cr(pp + q), cr(-pp), an(q), an(Z)]);
        }
    }

    let diffs = ctx.modes.differences();
    let mut rest = OperatorExpression::new("Q4B3 rest");
    for &m in &nz {
        for &p in &nz {
            for &q in &nz {
                for &r in &diffs {
                    let vr = v.get(r);
                    if vr == 0.0 {
                        continue;
                    }
                    let all = |ls: &[LatticeVector]| ls.iter().all(|x| inm(*x));
                    // E1
                    if all(&[m + p + r, -m, q, q + r, p, p + r]) && chi(p + r) {
                        rest.push(-vr * ft(m), vec![cr(m + p + r), cr(-m), cr(q), an(q + r), an(p), an(Z)]);
                    }
                    // E2
                    if all(&[m + q, -m, p + r, q + r, p, q]) && chi(q) {
                        rest.push(-vr * ft(m), vec![cr(m + q), cr(-m), cr(p + r), an(q + r), an(p), an(Z)]);
                    }
                    // E3
                    if all(&[p + r, -m, q, q + r - m, p, q + r]) && chi(q + r - m) {
                        rest.push(vr * ft(m), vec![cr(p + r), cr(-m), cr(q), an(q + r - m), an(p), an(Z)]);
                    }
                    // E4
                    if all(&[p + r, -m, q, q + r, p - m, p]) && chi(p - m) {
                        rest.push(vr * ft(m), vec![cr(p + r), cr(-m), cr(q), an(q + r), an(p - m), an(Z)]);
                    }
                    // E5
                    if all(&[p + r, q, -q - r + m, p, m, q + r]) && chi(m) {
                        rest.push(vr * ft(-q - r), vec![cr(p + r), cr(q), cr(-q - r + m), an(p), an(m), an(Z)]);
                    }
                    // E6
                    if all(&[p + r, q, -m, q + r, p - m, p]) && chi(p - m) {
                        rest.push(vr * ft(-p), vec![cr(p + r), cr(q), cr(-m), an(q + r), an(p - m), an(Z)]);
                    }
                }
            }
        }
    }
    Ok(main.plus_hc().add(rest.plus_hc().scaled(0.5)).with_name("Q4B3 rhs"))
}

fn q4b3(ctx: &OperatorContext, ch: &mut Checker, o: &IdentityOptions) -> Result<(), Error> {
    let b = ch.basis(o.particles, o.sector)?;
    let lhs = square(ch, &named::q4(ctx)?, &b)?.commutator(&square(ch, &named::b3(ctx)?, &b)?);
    let rhs = square(ch, &q4b3_rhs(ctx)?, &b)?;
    ch.compare(|| "[Q4, B3]".into(), &lhs, &rhs, &b, &b);
    Ok(())
}

fn bcomm(ctx: &OperatorContext, ch: &mut Checker, o: &IdentityOptions) -> Result<(), Error> {
    let n = o.particles;
    let nf = n as f64;
    let s = o.sector;
    let b0 = ch.basis(n, s)?;
    let np = square(ch, &named::n_plus(ctx), &b0)?;
    let nz = ctx.nonzero();
    for &p in &nz {
        for &q in &nz {
            let bp = named::b_op(p, n);
            let bq = named::b_op(q, n);
            let bqd = named::b_dag(q, n);
            let sq = ch.basis(n, s + q)?;
            let smp = ch.basis(n, s - p)?;
            let out = ch.basis(n, s + q - p)?;
            // [b_p, b_q†]
            let lhs = ch.op(&bp, &sq, &out)?.mul(&ch.op(&bqd, &b0, &sq)?).sub(&ch.op(&bqd, &smp, &out)?.mul(&ch.op(&bp, &b0, &smp)?));
            let mut rhs = ch.op(&mono("a_q†a_p", vec![cr(q), an(p)]), &b0, &out)?.scaled(-1.0 / nf);
            if p == q {
                rhs = rhs.add(&SparseOperator::identity(b0.len()).sub(&np.scaled(1.0 / nf)));
            }
            ch.compare(|| format!("[b_p, b_q†], p = {:?}, q = {:?}", p.n, q.n), &lhs, &rhs, &b0, &out);
            // [b_p, b_q]
            let smq = ch.basis(n, s - q)?;
            let out2 = ch.basis(n, s - p - q)?;
            let lhs = ch.op(&bp, &smq, &out2)?.mul(&ch.op(&bq, &b0, &smq)?).sub(&ch.op(&bq, &smp, &out2)?.mul(&ch.op(&bp, &b0, &smp)?));
            let zero = SparseOperator::zeros(out2.len(), b0.len());
            ch.compare(|| format!("[b_p, b_q], p = {:?}, q = {:?}", p.n, q.n), &lhs, &zero, &b0, &out2);
        }
    }
    Ok(())
}

/// Right-hand side of `[Q̃₂, 𝓑₃]`, expanded term by term.
pub fn tq2b3_rhs(ctx: &OperatorContext) -> Result<OperatorExpression, Error> {
    let sol = ctx.solution()?;
    let cut = ctx.cutoff()?;
    let nz = ctx.nonzero();
    let inm = |p: LatticeVector| ctx.modes.contains_nonzero(p);
    let c = 4.0 * std::f64::consts::PI * sol.a_n / ctx.particles as f64;
    let mut e = OperatorExpression::new("tQ2B3 rhs");
    for &r in &nz {
        if !cut.inside(r) || !inm(-r) {
            continue;
        }
        for &p in &nz {
            let f = sol.phi_tilde_at(p);
            if f == 0.0 || !inm(-p) {
                continue;
            }
            for &q in &nz {
                if !cut.inside(q) || !inm(p + q) {
                    continue;
                }
                let k = 2.0 * c * f;
                if p + q == r {
                    e.push(k, vec![cr(Z), cr(Z), cr(-p), an(-p - q), an(q), an(Z)]);
                }
                if p == r {
                    e.push(k, vec![cr(Z), cr(Z), cr(p + q), an(p), an(q), an(Z)]);
                }
                if r == q {
                    e.push(-k, vec![cr(p + q), cr(-p), cr(-q), an(Z), an(Z), an(Z)]);
                }
                e.push(-k, vec![cr(p + q), cr(-p), cr(Z), an(q), an(r), an(-r)]);
            }
        }
    }
    Ok(e.plus_hc())
}

fn tq2b3(ctx: &OperatorContext, ch: &mut Checker, o: &IdentityOptions) -> Result<(), Error> {
    let b = ch.basis(o.particles, o.sector)?;
    let lhs = square(ch, &named::tq2(ctx)?, &b)?.commutator(&square(ch, &named::b3(ctx)?, &b)?);
    let rhs = square(ch, &tq2b3_rhs(ctx)?, &b)?;
    ch.compare(|| "[tQ2, B3]".into(), &lhs, &rhs, &b, &b);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::basis::{ModeSet, DEFAULT_BASIS_BUDGET};
    use crate::lattice::{LatticeShape, MomentumLattice};
    use crate::potential::PotentialSpec;

    fn setup(n: u32, shape: LatticeShape) -> (OperatorContext, BasisCache) {
        let lat = MomentumLattice::with_shape(1, shape);
        let spec = PotentialSpec::step(50.0, 0.2, n).unwrap();
        let ctx = OperatorContext::prepare(&lat, &spec, crate::DEFAULT_ALPHA, Some(VERIFY_CUTOFF), 1e-13).unwrap();
        let cache = BasisCache::new(ctx.modes.clone(), DEFAULT_BASIS_BUDGET);
        (ctx, cache)
    }

    fn run(name: IdentityName, n: u32) -> IdentityReport {
        let (ctx, cache) = setup(n, LatticeShape::Cube);
        let opts = IdentityOptions { particles: n, sector: Z, tol: 1e-10 };
        verify_identity(name, &ctx, &cache, &opts).unwrap()
    }

    #[test]
    fn all_identities_pass_at_n3() {
        for name in IdentityName::ALL {
            let r = run(name, 3);
            eprintln!("{name}: {:e} scale {:e} dims {:?}", r.max_dev, r.scale, r.basis_dims);
            assert_eq!(r.status, IdentityStatus::Pass, "{name}: {r:?}");
        }
    }

    #[test]
    fn generators_are_nontrivial() {
        let (ctx, cache) = setup(3, LatticeShape::Cube);
        let b = cache.get(3, Some(Z)).unwrap();
        for e in [named::b2(&ctx).unwrap(), named::b3(&ctx).unwrap(), named::b4(&ctx).unwrap(), h1b3_rhs(&ctx).unwrap().1] {
            assert!(crate::fock::sparse::assemble(&e, &b).unwrap().max_abs() > 1e-6, "{}", e.name);
        }
    }

    #[test]
    #[ignore]
    fn n4_timing() {
        for name in IdentityName::ALL {
            let t = std::time::Instant::now();
            let r = run(name, 4);
            eprintln!("{name}: {:e} scale {:e} dims {:?} {:?}", r.max_dev, r.scale, r.basis_dims, t.elapsed());
        }
    }

    #[test]
    fn broken_identity_is_reported() {
        let (ctx, cache) = setup(3, LatticeShape::Cube);
        let b = cache.get(3, Some(Z)).unwrap();
        let h = crate::fock::sparse::assemble(&named::h1(&ctx), &b).unwrap();
        let r = compare_operators(IdentityName::DecompoHN, &h, &h.scaled(1.0 + 1e-6), &b, 1e-10);
        assert_eq!(r.status, IdentityStatus::Fail);
        assert!(r.first_violation.is_some());
    }

    #[test]
    fn refuses_foreign_scattering_solution() {
        let (mut ctx, cache) = setup(3, LatticeShape::Cube);
        let ball = MomentumLattice::with_shape(1, LatticeShape::Ball);
        ctx.modes = Arc::new(ModeSet::from_lattice(&ball));
        let cache2 = BasisCache::new(ctx.modes.clone(), DEFAULT_BASIS_BUDGET);
        let opts = IdentityOptions { particles: 3, sector: Z, tol: 1e-10 };
        assert!(matches!(verify_identity(IdentityName::H1B3, &ctx, &cache2, &opts), Err(Error::CutoffUnsafe(_))));
        assert!(verify_identity(IdentityName::Comm1, &ctx, &cache2, &opts).is_ok());
        drop(cache);
    }

    #[test]
    fn refuses_non_symmetric_modes() {
        let (mut ctx, _) = setup(3, LatticeShape::Cube);
        ctx.modes = Arc::new(ModeSet::new(vec![Z, LatticeVector::unit(0)]).unwrap());
        let cache = BasisCache::new(ctx.modes.clone(), 1000);
        let opts = IdentityOptions { particles: 3, sector: Z, tol: 1e-10 };
        assert!(matches!(verify_identity(IdentityName::Comm2, &ctx, &cache, &opts), Err(Error::CutoffUnsafe(_))));
    }
}
