//! Bogoliubov dispersion, the coefficients `τ_p, γ_p, ν_p`, the
//! ground-state energy formula and enumeration of the quadratic-model
//! excitation spectrum `Σ n_p ε_p`.

use std::cmp::Ordering;

use crate::lattice::{LatticeVector, MomentumLattice};
use crate::scalar::Real;
use crate::scattering::InfraredCutoff;
use crate::Error;

/// Which scattering length feeds a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScatteringLengthChoice {
    /// Box scattering length `𝔞_N`.
    Box,
    /// Continuum scattering length `𝔞`.
    Continuum,
}

impl ScatteringLengthChoice {
    pub fn label(&self) -> &'static str {
        match self {
            ScatteringLengthChoice::Box => "box",
            ScatteringLengthChoice::Continuum => "continuum",
        }
    }
}

/// `ε_p = √(|p|⁴ + 16πa|p|²)`.
pub fn dispersion<T: Real>(a: T, p: LatticeVector) -> T {
    dispersion_sq(a, p.momentum_sq())
}

/// Dispersion as a function of `|p|²`.
pub fn dispersion_sq<T: Real>(a: T, p2: T) -> T {
    // |p|·√(p² + 16πa): no squaring of p²
    p2.sqrt() * (p2 + T::lit(16.0) * T::PI() * a).sqrt()
}

/// `(τ, cosh τ, sinh τ)` with `τ = −¼ log(1 + 16πa/p²)`.
pub fn hyperbolic<T: Real>(a: T, p2: T) -> (T, T, T) {
    let tau = -T::lit(0.25) * (T::lit(16.0) * T::PI() * a / p2).ln_1p();
    (tau, tau.cosh(), tau.sinh())
}

/// Coefficients of the quadratic Bogoliubov transformation.
#[derive(Clone, Debug, PartialEq)]
pub struct BogoliubovData<T> {
    pub a: T,
    pub particles: u32,
    pub alpha: T,
    pub cutoff: InfraredCutoff<T>,
    /// Nonzero lattice vectors, in lattice order.
    pub modes: Vec<LatticeVector>,
    pub eps: Vec<T>,
    /// Zero outside `|p| ≤ N^α`.
    pub tau: Vec<T>,
    pub gamma: Vec<T>,
    pub nu: Vec<T>,
}

impl<T: Real> BogoliubovData<T> {
    pub fn with_cutoff(a: T, lattice: &MomentumLattice, particles: u32, alpha: T, cutoff: InfraredCutoff<T>) -> Self {
        let modes: Vec<_> = lattice.nonzero().map(|(_, v)| v).collect();
        let mut eps = Vec::with_capacity(modes.len());
        let mut tau = Vec::with_capacity(modes.len());
        let mut gamma = Vec::with_capacity(modes.len());
        let mut nu = Vec::with_capacity(modes.len());
        for p in &modes {
            let p2 = p.momentum_sq();
            eps.push(dispersion_sq(a, p2));
            let (t, g, n) = if cutoff.inside(*p) { hyperbolic(a, p2) } else { (T::zero(), T::one(), T::zero()) };
            tau.push(t);
            gamma.push(g);
            nu.push(n);
        }
        BogoliubovData { a, particles, alpha, cutoff, modes, eps, tau, gamma, nu }
    }

    fn index_of(&self, p: LatticeVector) -> Option<usize> {
        self.modes.binary_search(&p).ok()
    }

    pub fn eps_at(&self, p: LatticeVector) -> T {
        self.index_of(p).map_or(T::zero(), |i| self.eps[i])
    }

    pub fn tau_at(&self, p: LatticeVector) -> T {
        self.index_of(p).map_or(T::zero(), |i| self.tau[i])
    }

    pub fn gamma_at(&self, p: LatticeVector) -> T {
        self.index_of(p).map_or(T::one(), |i| self.gamma[i])
    }

    pub fn nu_at(&self, p: LatticeVector) -> T {
        self.index_of(p).map_or(T::zero(), |i| self.nu[i])
    }
}

/// `τ_p, γ_p, ν_p` on `0 < |p| ≤ N^α`, and `ε_p` on every nonzero vector.
pub fn tau_coefficients<T: Real>(a: T, lattice: &MomentumLattice, particles: u32, alpha: T) -> BogoliubovData<T> {
    BogoliubovData::with_cutoff(a, lattice, particles, alpha, InfraredCutoff::from_alpha(particles, alpha))
}

/// `σ(p) = ε_p − p² − 8πa + (8πa)²/(2p²)`.
///
/// With `x = 16πa/p²`, `σ = p²·Σ_{k≥3} binom(½,k) x^k`; the series is
/// summed for small `x` so the leading cancellations never happen.
pub fn sigma<T: Real>(a: T, p2: T) -> T {
    let x = T::lit(16.0) * T::PI() * a / p2;
    if x == T::zero() {
        return T::zero();
    }
    if x < T::lit(0.1) {
        let mut c = T::one();
        let mut xk = T::one();
        let mut acc = T::zero();
        for k in 0..24 {
            if k >= 3 {
                acc += c * xk;
            }
            c *= (T::lit(0.5) - T::int(k)) / T::int(k + 1);
            xk *= x;
        }
        p2 * acc
    } else {
        let s = (T::one() + x).sqrt();
        let half = T::lit(0.5);
        p2 * (x / (s + T::one()) - half * x + x * x / T::lit(8.0))
    }
}

/// Lattice value of the ground-state energy formula with its tail estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundStateEnergy<T> {
    /// `4π𝔞_N(N−1) + ½Σ_{p≠0} σ(p)` over the lattice.
    pub value: T,
    /// `½Σ_{p≠0} σ(p)` alone.
    pub lattice_sum: T,
    /// Estimate of the omitted `|p| > 2πK` contribution (non-negative).
    pub tail: T,
}

/// `4π𝔞_N(N−1) + ½Σ σ(p)` and the tail `½∫_{|p|>2πK} (16π𝔞_N)³/(16|p|⁴) d³p/(2π)³`.
pub fn ground_state_energy<T: Real>(a_n: T, particles: u32, lattice: &MomentumLattice) -> GroundStateEnergy<T> {
    let half = T::lit(0.5);
    let pi = T::PI();
    let mut shells: Vec<_> = lattice.shells().iter().collect();
    shells.sort_by_key(|s| std::cmp::Reverse(s.norm_sq));
    // smallest terms first
    let mut sum = T::zero();
    for s in shells {
        let p2 = T::int(s.norm_sq) * T::lit(4.0) * pi * pi;
        sum += T::int(s.members.len() as i64) * sigma(a_n, p2);
    }
    let lattice_sum = half * sum;
    let four_pi = T::lit(4.0) * pi;
    let value = four_pi * a_n * T::int(particles as i64 - 1) + lattice_sum;
    let c = T::lit(16.0) * pi * a_n;
    let big_p = T::TAU() * T::int(lattice.cutoff() as i64);
    let tail = half * c * c * c / T::lit(16.0) / (T::lit(2.0) * pi * pi) / big_p;
    GroundStateEnergy { value, lattice_sum, tail }
}

/// Which spectrum a report describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumKind {
    /// Predicted excitation spectrum `Σ n_p ε_p`.
    Excitation,
    /// Levels of the diagonal model operator `E_∞`.
    EInfinity,
}

/// One occupation map `{p: n_p}` and its energy.
#[derive(Clone, Debug, PartialEq)]
pub struct Excitation<T> {
    /// Nonzero occupations, sorted by momentum label.
    pub occupation: Vec<(LatticeVector, u32)>,
    pub energy: T,
}

impl<T: Real> Excitation<T> {
    pub fn total(&self) -> u32 {
        self.occupation.iter().map(|(_, n)| *n).sum()
    }

    /// `n1@(x,y,z);…`.
    pub fn occupation_string(&self) -> String {
        self.occupation.iter().map(|(p, n)| format!("{n}@{p}")).collect::<Vec<_>>().join(";")
    }
}

/// A group of occupation maps sharing one energy.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumLevel<T> {
    pub energy: T,
    pub degeneracy: usize,
    /// Index of the first member in [`SpectrumReport::excitations`].
    pub first: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport<T> {
    pub kind: SpectrumKind,
    pub a: T,
    pub a_choice: ScatteringLengthChoice,
    pub cutoff: u32,
    pub particles: Option<u32>,
    pub alpha: Option<T>,
    pub max_energy: T,
    /// Energy of the lowest level (the vacuum).
    pub ground_energy: T,
    /// Sorted by energy; ties broken by lexicographic occupation map.
    pub excitations: Vec<Excitation<T>>,
    /// Lowest single-excitation energy outside the lattice; levels below
    /// it are complete.
    pub tail_estimate: T,
}

impl<T: Real> SpectrumReport<T> {
    /// Distinct energies with their degeneracies.
    pub fn levels(&self) -> Vec<SpectrumLevel<T>> {
        group_levels(&self.excitations)
    }
}

fn same_level<T: Real>(a: T, b: T) -> bool {
    (a - b).abs() <= T::lit(1e-12) * T::one().max(a.abs())
}

fn group_levels<T: Real>(ex: &[Excitation<T>]) -> Vec<SpectrumLevel<T>> {
    let mut out: Vec<SpectrumLevel<T>> = Vec::new();
    for (i, e) in ex.iter().enumerate() {
        match out.last_mut() {
            Some(l) if same_level(l.energy, e.energy) => l.degeneracy += 1,
            _ => out.push(SpectrumLevel { energy: e.energy, degeneracy: 1, first: i }),
        }
    }
    out
}

/// Sort by energy, merging energies equal to 1e-12 relative, then by
/// occupation map inside each level.
pub fn sort_excitations<T: Real>(ex: &mut [Excitation<T>]) {
    ex.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap_or(Ordering::Equal).then_with(|| a.occupation.cmp(&b.occupation)));
    let mut start = 0;
    while start < ex.len() {
        let mut end = start + 1;
        while end < ex.len() && same_level(ex[start].energy, ex[end].energy) {
            end += 1;
        }
        ex[start..end].sort_by(|a, b| a.occupation.cmp(&b.occupation));
        start = end;
    }
}

/// Smallest `|n|²` of a vector outside the lattice.
pub fn first_omitted_norm_sq(lattice: &MomentumLattice) -> i64 {
    let k = lattice.cutoff() as i32 + 1;
    let mut best = i64::MAX;
    for x in -k..=k {
        for y in -k..=k {
            for z in -k..=k {
                let v = LatticeVector::new(x, y, z);
                if !lattice.contains(&v) {
                    best = best.min(v.norm_sq());
                }
            }
        }
    }
    best
}

/// All occupation maps with `Σ n_p ε_p ≤ max_energy`.
///
/// Depth-first branch-and-bound over modes sorted by `ε_p`; energies are
/// accumulated per shell so degenerate maps share bitwise-equal energies.
pub fn excitation_spectrum<T: Real>(
    a: T,
    a_choice: ScatteringLengthChoice,
    lattice: &MomentumLattice,
    max_energy: T,
    budget: usize,
) -> Result<SpectrumReport<T>, Error> {
    if !(max_energy > T::zero()) {
        return Err(Error::Config("max_energy must be positive".into()));
    }
    if a < T::zero() {
        return Err(Error::Config("scattering length must be non-negative".into()));
    }
    let shells = lattice.shells();
    let shell_eps: Vec<T> = shells.iter().map(|s| dispersion(a, lattice.vector(s.members[0]))).collect();
    // (energy, shell, vector), cheapest first
    let mut modes: Vec<(T, usize, LatticeVector)> = Vec::new();
    for (si, s) in shells.iter().enumerate() {
        for m in &s.members {
            modes.push((shell_eps[si], si, lattice.vector(*m)));
        }
    }
    modes.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal).then_with(|| x.2.cmp(&y.2)));

    struct Search<'a, T> {
        modes: &'a [(T, usize, LatticeVector)],
        shell_eps: &'a [T],
        max_energy: T,
        budget: usize,
        counts: Vec<u32>,
        shell_counts: Vec<u32>,
        out: Vec<Excitation<T>>,
    }

    impl<T: Real> Search<'_, T> {
        fn energy(&self) -> T {
            self.shell_counts.iter().zip(self.shell_eps).map(|(c, e)| T::int(*c as i64) * *e).sum()
        }

        fn visit(&mut self, start: usize) -> Result<(), Error> {
            let e = self.energy();
            if e > self.max_energy {
                return Ok(());
            }
            if self.out.len() >= self.budget {
                return Err(Error::Budget { what: "spectrum enumeration", limit: self.budget, count: self.out.len() + 1 });
            }
            let mut occupation: Vec<(LatticeVector, u32)> = self
                .modes
                .iter()
                .zip(&self.counts)
                .filter(|(_, c)| **c > 0)
                .map(|(m, c)| (m.2, *c))
                .collect();
            occupation.sort();
            self.out.push(Excitation { occupation, energy: e });
            // add one more quantum to mode i ≥ start (multisets without repeats)
            for i in start..self.modes.len() {
                let (eps_i, shell, _) = self.modes[i];
                if e + eps_i > self.max_energy {
                    // modes are sorted: nothing cheaper follows
                    break;
                }
                if eps_i <= T::zero() {
                    return Err(Error::Config("zero-energy mode makes the enumeration infinite".into()));
                }
                self.counts[i] += 1;
                self.shell_counts[shell] += 1;
                let r = self.visit(i);
                self.counts[i] -= 1;
                self.shell_counts[shell] -= 1;
                r?;
            }
            Ok(())
        }
    }

    let mut search = Search {
        modes: &modes,
        shell_eps: &shell_eps,
        max_energy,
        budget,
        counts: vec![0; modes.len()],
        shell_counts: vec![0; shells.len()],
        out: Vec::new(),
    };
    search.visit(0)?;
    let mut excitations = search.out;
    sort_excitations(&mut excitations);
    let omitted = first_omitted_norm_sq(lattice);
    let tail_estimate = dispersion_sq(a, T::int(omitted) * T::lit(4.0) * T::PI() * T::PI());
    Ok(SpectrumReport {
        kind: SpectrumKind::Excitation,
        a,
        a_choice,
        cutoff: lattice.cutoff(),
        particles: None,
        alpha: None,
        max_energy,
        ground_energy: T::zero(),
        excitations,
        tail_estimate,
    })
}

/// Spectrum of `E_∞ = Σ_p ε_p a_p†a_p` (with `a = 𝔞_N`) below `max_energy`.
pub fn e_infinity_levels<T: Real>(
    a_n: T,
    lattice: &MomentumLattice,
    max_energy: T,
    budget: usize,
) -> Result<SpectrumReport<T>, Error> {
    let mut r = excitation_spectrum(a_n, ScatteringLengthChoice::Box, lattice, max_energy, budget)?;
    r.kind = SpectrumKind::EInfinity;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeShape;
    use std::f64::consts::PI;

    #[test]
    fn dispersion_values() {
        assert_eq!(dispersion::<f64>(0.3, LatticeVector::ZERO), 0.0);
        let p = LatticeVector::new(1, 2, 0);
        let p2: f64 = p.momentum_sq();
        assert!((dispersion::<f64>(0.0, p) - p2).abs() < 1e-12 * p2);
        assert!((dispersion_sq(1.0 / (16.0 * PI), 1.0) - 2f64.sqrt()).abs() < 1e-15);
        let e = dispersion::<f64>(0.05, p);
        assert!(((e * e) - (p2 * p2 + 16.0 * PI * 0.05 * p2)).abs() < 1e-12 * e * e);
        assert_eq!(dispersion::<f64>(0.05, p), dispersion::<f64>(0.05, -p));
    }

    #[test]
    fn hyperbolic_relations() {
        let a: f64 = 0.04;
        for n in [1i64, 2, 3, 5, 14, 100] {
            let p2 = 4.0 * PI * PI * n as f64;
            let (t, g, nu) = hyperbolic(a, p2);
            let e = dispersion_sq(a, p2);
            assert!((g * g - nu * nu - 1.0).abs() < 1e-12);
            assert!(((g * g + nu * nu) - (p2 + 8.0 * PI * a) / e).abs() < 1e-12 * (g * g + nu * nu));
            assert!((2.0 * g * nu + 8.0 * PI * a / e).abs() < 1e-12 * (8.0 * PI * a / e));
            assert!(((2.0 * t).tanh() + 8.0 * PI * a / (p2 + 8.0 * PI * a)).abs() < 1e-13);
        }
        let (t, _, _) = hyperbolic(1e-300f64, 40.0);
        assert!(t.abs() < 1e-290);
    }

    #[test]
    fn tau_respects_cutoff() {
        let lat = MomentumLattice::new(2);
        let d = tau_coefficients(0.05f64, &lat, 10, 0.8);
        let c = 10f64.powf(0.8);
        for (i, p) in d.modes.iter().enumerate() {
            let inside = p.momentum_norm::<f64>() <= c;
            assert_eq!(d.tau[i] != 0.0, inside);
            assert!((d.gamma[i] * d.gamma[i] - d.nu[i] * d.nu[i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_matches_direct_form() {
        for a in [1e-3, 0.05, 1.0] {
            for n in [1i64, 2, 9, 50, 400] {
                let p2 = 4.0 * PI * PI * n as f64;
                let direct = dispersion_sq(a, p2) - p2 - 8.0 * PI * a + (8.0 * PI * a).powi(2) / (2.0 * p2);
                let s = sigma(a, p2);
                assert!(s > 0.0);
                let x = 16.0 * PI * a / p2;
                if x > 1e-2 {
                    assert!((s - direct).abs() < 1e-8 * direct, "{a} {n}: {s} {direct}");
                } else {
                    // the direct form has lost every digit here
                    let lead = p2 * (x.powi(3) / 16.0 - 5.0 * x.powi(4) / 128.0);
                    assert!((s - lead).abs() < x * x * lead);
                }
                assert!(s <= p2 * x * x * x / 16.0);
            }
        }
        assert_eq!(sigma(0.0, 4.0), 0.0);
    }

    #[test]
    fn ground_state_energy_zero_and_bracket() {
        let lat = MomentumLattice::new(3);
        let g = ground_state_energy(0.0, 10, &lat);
        assert_eq!(g.value, 0.0);
        assert_eq!(g.tail, 0.0);
        let small = ground_state_energy(0.05, 10, &MomentumLattice::new(4));
        let big = ground_state_energy(0.05, 10, &MomentumLattice::new(6));
        assert!(small.value <= big.value);
        assert!(big.value <= small.value + small.tail);
    }

    fn brute_force(a: f64, lat: &MomentumLattice, max_total: u32) -> Vec<Excitation<f64>> {
        let modes: Vec<_> = lat.nonzero().map(|(_, v)| v).collect();
        let mut out = Vec::new();
        let mut counts = vec![0u32; modes.len()];
        fn rec(i: usize, left: u32, counts: &mut Vec<u32>, modes: &[LatticeVector], a: f64, out: &mut Vec<Excitation<f64>>) {
            if i == modes.len() {
                let mut occ: Vec<_> = modes.iter().zip(counts.iter()).filter(|(_, c)| **c > 0).map(|(m, c)| (*m, *c)).collect();
                occ.sort();
                let energy = occ.iter().map(|(p, n)| *n as f64 * dispersion::<f64>(a, *p)).sum();
                out.push(Excitation { occupation: occ, energy });
                return;
            }
            for n in 0..=left {
                counts[i] = n;
                rec(i + 1, left - n, counts, modes, a, out);
            }
            counts[i] = 0;
        }
        rec(0, max_total, &mut counts, &modes, a, &mut out);
        out
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let lat = MomentumLattice::new(1);
        let a: f64 = 0.05;
        let e1 = dispersion::<f64>(a, LatticeVector::unit(0));
        let rep = excitation_spectrum(a, ScatteringLengthChoice::Box, &lat, 4.0 * e1 * (1.0 + 1e-12), 1_000_000).unwrap();
        let mut bf: Vec<_> = brute_force(a, &lat, 4).into_iter().filter(|e| e.energy <= rep.max_energy).collect();
        sort_excitations(&mut bf);
        assert_eq!(rep.excitations.len(), bf.len());
        for (x, y) in rep.excitations.iter().zip(&bf) {
            assert_eq!(x.occupation, y.occupation);
            assert!((x.energy - y.energy).abs() < 1e-12 * y.energy.max(1.0));
        }
        let l1 = rep.levels();
        let l2 = group_levels(&bf);
        assert_eq!(l1.len(), l2.len());
        for (x, y) in l1.iter().zip(&l2) {
            assert_eq!(x.degeneracy, y.degeneracy);
        }
    }

    #[test]
    fn first_levels() {
        let lat = MomentumLattice::new(2);
        let a: f64 = 0.05;
        let e1 = dispersion::<f64>(a, LatticeVector::unit(0));
        let e2 = dispersion::<f64>(a, LatticeVector::new(1, 1, 0));
        let rep = excitation_spectrum(a, ScatteringLengthChoice::Box, &lat, 2.5 * e1, 100_000).unwrap();
        let levels = rep.levels();
        assert_eq!(levels[0].energy, 0.0);
        assert_eq!(levels[0].degeneracy, 1);
        assert!((levels[1].energy - e1).abs() < 1e-12 * e1);
        assert_eq!(levels[1].degeneracy, 6);
        // pair n_p = n_{−p} = 1 sits at 2ε₁; ordered against the second shell
        let pair = rep
            .excitations
            .iter()
            .find(|x| x.occupation == vec![(LatticeVector::new(-1, 0, 0), 1), (LatticeVector::new(1, 0, 0), 1)])
            .unwrap();
        assert!((pair.energy - 2.0 * e1).abs() < 1e-12 * e1);
        let pos2 = levels.iter().position(|l| (l.energy - e2).abs() < 1e-12 * e2).unwrap();
        let pos_pair = levels.iter().position(|l| (l.energy - 2.0 * e1).abs() < 1e-12 * e1).unwrap();
        assert_eq!(pos_pair < pos2, 2.0 * e1 < e2);
        assert!(rep.excitations.windows(2).all(|w| w[0].energy <= w[1].energy + 1e-12));
    }

    #[test]
    fn budget_and_tail() {
        let lat = MomentumLattice::new(1);
        let err = excitation_spectrum(0.05, ScatteringLengthChoice::Box, &lat, 500.0, 100).unwrap_err();
        assert!(matches!(err, Error::Budget { limit: 100, .. }));
        let ball = MomentumLattice::with_shape(1, LatticeShape::Ball);
        assert_eq!(first_omitted_norm_sq(&ball), 2);
        assert_eq!(first_omitted_norm_sq(&lat), 4);
        let r = e_infinity_levels(0.05, &ball, 10.0, 10).unwrap();
        assert_eq!(r.kind, SpectrumKind::EInfinity);
        assert_eq!(r.excitations.len(), 1);
    }
}
