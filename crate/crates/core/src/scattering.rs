//! Truncated zero-energy scattering equation
//!
//! `p²φ_p + ½ Σ_{q≠0} V̂_N(p−q) φ_q = −½ V̂_N(p)`,  `p ≠ 0`,
//!
//! solved on the nonzero vectors of a [`MomentumLattice`], together with
//! the box scattering length, the infrared-cut sequence `φ̃` and the
//! coefficients `Ŵ`.

use rayon::prelude::*;

use crate::lattice::{Convolver, LatticeShape, LatticeVector, MomentumLattice};
use crate::potential::{PotentialSpec, ScaledPotential};
use crate::quadrature::integrate;
use crate::scalar::Real;
use crate::Error;

/// Momentum threshold `N^α`; `|p| ≤ N^α` counts as inside (infrared).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfraredCutoff<T> {
    pub threshold: T,
}

impl<T: Real> InfraredCutoff<T> {
    pub fn from_alpha(particles: u32, alpha: T) -> Self {
        InfraredCutoff { threshold: T::int(particles as i64).powf(alpha) }
    }

    pub fn new(threshold: T) -> Self {
        InfraredCutoff { threshold }
    }

    /// `χ_{|p| ≤ N^α}`.
    pub fn inside(&self, p: LatticeVector) -> bool {
        p.momentum_sq::<T>() <= self.threshold * self.threshold
    }
}

/// Solution of the scattering equation on a finite lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringSolution<T> {
    /// Nonzero vectors, in lattice enumeration order.
    pub modes: Vec<LatticeVector>,
    pub phi: Vec<T>,
    /// `φ_p·1_{|p| > N^α}`.
    pub phi_tilde: Vec<T>,
    pub alpha: T,
    pub cutoff: InfraredCutoff<T>,
    pub a_n: T,
    pub residual_sup: T,
    pub iterations: usize,
    pub particles: u32,
}

impl<T: Real> ScatteringSolution<T> {
    pub fn index_of(&self, p: LatticeVector) -> Option<usize> {
        self.modes.binary_search(&p).ok()
    }

    /// `φ_p`, zero for vectors outside the solution (including `p = 0`).
    pub fn phi_at(&self, p: LatticeVector) -> T {
        self.index_of(p).map_or(T::zero(), |i| self.phi[i])
    }

    pub fn phi_tilde_at(&self, p: LatticeVector) -> T {
        self.index_of(p).map_or(T::zero(), |i| self.phi_tilde[i])
    }

    /// The four uniform-bound quantities of the scattering sequence.
    pub fn bounds(&self) -> SequenceBounds<T> {
        let n = T::int(self.particles as i64);
        let pointwise = self
            .modes
            .iter()
            .zip(&self.phi)
            .map(|(p, f)| n * p.momentum_sq::<T>() * f.abs())
            .fold(T::zero(), T::max);
        let l2 = self.phi_tilde.iter().map(|x| *x * *x).sum::<T>().sqrt();
        let sup = self.phi_tilde.iter().map(|x| x.abs()).fold(T::zero(), T::max);
        let l1 = self.phi_tilde.iter().map(|x| x.abs()).sum::<T>();
        let phi_l1 = self.phi.iter().map(|x| x.abs()).sum::<T>();
        let a = self.alpha;
        let two = T::lit(2.0);
        SequenceBounds {
            pointwise,
            l2_scaled: l2 * n.powf(T::one() + a / two),
            sup_scaled: sup * n.powf(T::one() + two * a),
            l1_tilde: l1,
            phi_l1,
            phi_tilde_l2: l2,
        }
    }
}

/// `max N p²|φ_p|`, `‖φ̃‖₂N^{1+α/2}`, `‖φ̃‖_∞N^{1+2α}`, `‖φ̃‖₁`, plus raw norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequenceBounds<T> {
    pub pointwise: T,
    pub l2_scaled: T,
    pub sup_scaled: T,
    pub l1_tilde: T,
    pub phi_l1: T,
    pub phi_tilde_l2: T,
}

/// Coefficients `Ŵ(p)` on the nonzero modes.
#[derive(Clone, Debug, PartialEq)]
pub struct WCoefficients<T> {
    pub modes: Vec<LatticeVector>,
    pub w: Vec<T>,
}

impl<T: Real> WCoefficients<T> {
    pub fn at(&self, p: LatticeVector) -> T {
        self.modes.binary_search(&p).map_or(T::zero(), |i| self.w[i])
    }
}

/// Bound on `|n|²` for every difference of two vectors of the lattice.
pub fn difference_norm_bound(lattice: &MomentumLattice) -> i64 {
    let k = lattice.cutoff() as i64;
    12 * k * k
}

enum Operator<'a, T: Real> {
    Fft(Convolver<T>),
    Direct(&'a ScaledPotential<T>),
}

struct Problem<'a, T: Real> {
    lattice: &'a MomentumLattice,
    table: &'a ScaledPotential<T>,
    p2: Vec<T>,
    zero: usize,
    op: Operator<'a, T>,
}

impl<T: Real> Problem<'_, T> {
    fn convolve(&self, x: &[T]) -> Vec<T> {
        match &self.op {
            Operator::Fft(c) => c.apply(x),
            Operator::Direct(t) => {
                let vs = self.lattice.vectors();
                vs.par_iter()
                    .map(|p| {
                        let mut acc = T::zero();
                        for (q, xq) in vs.iter().zip(x) {
                            if *xq != T::zero() {
                                acc += t.get(*p - *q) * *xq;
                            }
                        }
                        acc
                    })
                    .collect()
            }
        }
    }

    /// `P₀⊥ (p² + ½V̂_N *) P₀⊥ x`.
    fn apply(&self, x: &[T]) -> Vec<T> {
        let half = T::lit(0.5);
        let mut y = self.convolve(x);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.p2[i] * x[i] + half * *yi;
        }
        y[self.zero] = T::zero();
        y
    }

    fn rhs(&self) -> Vec<T> {
        let half = T::lit(0.5);
        let mut b: Vec<T> = self.lattice.vectors().iter().map(|p| -half * self.table.get(*p)).collect();
        b[self.zero] = T::zero();
        b
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn sup<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Preconditioned conjugate gradients with the `p²` diagonal.
///
/// Stops when the sup-norm of the residual drops below `tol`. The result
/// is symmetrized under `p → −p`, which the exact solution satisfies.
pub fn solve_scattering_equation<T: Real>(
    lattice: &MomentumLattice,
    spec: &PotentialSpec<T>,
    tol: T,
) -> Result<ScatteringSolution<T>, Error> {
    let table = spec.scaled_table(difference_norm_bound(lattice))?;
    solve_with_table(lattice, &table, tol)
}

/// As [`solve_scattering_equation`], reusing a tabulated `V̂_N`.
pub fn solve_with_table<T: Real>(
    lattice: &MomentumLattice,
    table: &ScaledPotential<T>,
    tol: T,
) -> Result<ScatteringSolution<T>, Error> {
    if !(tol > T::zero()) {
        return Err(Error::Config("solver tolerance must be positive".into()));
    }
    if table.max_norm_sq() < difference_norm_bound(lattice) {
        return Err(Error::Config("potential table does not cover the lattice differences".into()));
    }
    let op = if lattice.shape() == LatticeShape::Cube && lattice.len() > 343 {
        Operator::Fft(Convolver::new(lattice, |d| table.get(d))?)
    } else {
        Operator::Direct(table)
    };
    let prob = Problem {
        lattice,
        table,
        p2: lattice.vectors().iter().map(|p| p.momentum_sq()).collect(),
        zero: lattice.zero_index(),
        op,
    };
    let n = lattice.len();
    let b = prob.rhs();
    let precond = |r: &[T]| -> Vec<T> {
        r.iter()
            .zip(&prob.p2)
            .map(|(ri, pi)| if *pi > T::zero() { *ri / *pi } else { T::zero() })
            .collect()
    };
    let mut x = vec![T::zero(); n];
    let mut r = b.clone();
    let mut iterations = 0;
    let max_iter = 20 * n + 100;
    if sup(&r) > tol {
        let mut z = precond(&r);
        let mut d = z.clone();
        let mut rz = dot(&r, &z);
        loop {
            iterations += 1;
            let ad = prob.apply(&d);
            let dad = dot(&d, &ad);
            if !(dad > T::zero()) {
                return Err(Error::NoConvergence { what: "scattering CG", iterations, residual: sup(&r).as_f64() });
            }
            let step = rz / dad;
            for i in 0..n {
                x[i] += step * d[i];
                r[i] -= step * ad[i];
            }
            if sup(&r) <= tol {
                // confirm against the true residual
                let ax = prob.apply(&x);
                let true_r: Vec<T> = b.iter().zip(&ax).map(|(bi, ai)| *bi - *ai).collect();
                if sup(&true_r) <= tol {
                    break;
                }
                r = true_r;
            }
            if iterations >= max_iter {
                return Err(Error::NoConvergence { what: "scattering CG", iterations, residual: sup(&r).as_f64() });
            }
            z = precond(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                d[i] = z[i] + beta * d[i];
            }
        }
    }
    // enforce φ_p = φ_{−p} exactly
    let half = T::lit(0.5);
    let sym: Vec<T> = lattice
        .vectors()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let j = lattice.index_of(&-*p).expect("lattice is negation closed");
            half * (x[i] + x[j])
        })
        .collect();
    let ax = prob.apply(&sym);
    let residual_sup = b.iter().zip(&ax).map(|(bi, ai)| (*bi - *ai).abs()).fold(T::zero(), T::max);

    let mut modes = Vec::with_capacity(n - 1);
    let mut phi = Vec::with_capacity(n - 1);
    for (i, p) in lattice.nonzero() {
        modes.push(p);
        phi.push(sym[i]);
    }
    let alpha = T::lit(crate::DEFAULT_ALPHA);
    let particles = table.particles();
    let mut sol = ScatteringSolution {
        modes,
        phi_tilde: Vec::new(),
        phi,
        alpha,
        cutoff: InfraredCutoff::from_alpha(particles, alpha),
        a_n: T::zero(),
        residual_sup,
        iterations,
        particles,
    };
    sol.a_n = box_scattering_length_with_table(&sol, table);
    Ok(truncate_phi(sol, alpha))
}

/// `𝔞_N = (N/8π)·[V̂_N(0) + Σ_{p≠0} V̂_N(p)φ_p]`.
pub fn box_scattering_length<T: Real>(sol: &ScatteringSolution<T>, spec: &PotentialSpec<T>) -> Result<T, Error> {
    let n = T::int(spec.particles as i64);
    let mut acc = spec.scaled_coefficient(LatticeVector::ZERO)?;
    for (p, f) in sol.modes.iter().zip(&sol.phi) {
        acc += spec.scaled_coefficient(*p)? * *f;
    }
    Ok(n * acc / (T::lit(8.0) * T::PI()))
}

fn box_scattering_length_with_table<T: Real>(sol: &ScatteringSolution<T>, table: &ScaledPotential<T>) -> T {
    let n = T::int(table.particles() as i64);
    let mut acc = table.at_zero();
    for (p, f) in sol.modes.iter().zip(&sol.phi) {
        acc += table.get(*p) * *f;
    }
    n * acc / (T::lit(8.0) * T::PI())
}

/// `φ̃_p = φ_p·1_{|p| > N^α}`.
pub fn truncate_phi<T: Real>(sol: ScatteringSolution<T>, alpha: T) -> ScatteringSolution<T> {
    let cutoff = InfraredCutoff::from_alpha(sol.particles, alpha);
    with_cutoff(sol, alpha, cutoff)
}

/// Cut `φ` at an explicit momentum threshold; `alpha` is kept for reporting.
pub fn with_cutoff<T: Real>(mut sol: ScatteringSolution<T>, alpha: T, cutoff: InfraredCutoff<T>) -> ScatteringSolution<T> {
    sol.phi_tilde = sol
        .modes
        .iter()
        .zip(&sol.phi)
        .map(|(p, f)| if cutoff.inside(*p) { T::zero() } else { *f })
        .collect();
    sol.alpha = alpha;
    sol.cutoff = cutoff;
    sol
}

/// `Ŵ(p) = ½χ_{|p|≤N^α}[Σ_q V̂_N(p−q)φ_q + V̂_N(p)] − ½Σ_{|q|≤N^α} V̂_N(p−q)φ_q`,
/// with `q` over the solution's nonzero modes.
pub fn w_coefficients<T: Real>(sol: &ScatteringSolution<T>, table: &ScaledPotential<T>) -> WCoefficients<T> {
    let half = T::lit(0.5);
    let cut = sol.cutoff;
    let w = sol
        .modes
        .par_iter()
        .map(|p| {
            let mut full = T::zero();
            let mut low = T::zero();
            for (q, f) in sol.modes.iter().zip(&sol.phi) {
                let term = table.get(*p - *q) * *f;
                full += term;
                if cut.inside(*q) {
                    low += term;
                }
            }
            let mut w = -half * low;
            if cut.inside(*p) {
                w += half * (full + table.get(*p));
            }
            w
        })
        .collect();
    WCoefficients { modes: sol.modes.clone(), w }
}

/// Continuum scattering length of `V` (unscaled).
///
/// Integrates `u'' = ½V u`, `u(0) = 0`, `u'(0) = 1` with embedded
/// Dormand–Prince 5(4) steps between the profile's breakpoints and returns
/// `R − u(R)/u'(R)`.
pub fn continuum_scattering_length<T: Real>(spec: &PotentialSpec<T>, tol: T) -> Result<T, Error> {
    if spec.strength == T::zero() {
        return Ok(T::zero());
    }
    let half = T::lit(0.5);
    let rhs = |r: T, y: [T; 2]| [y[1], half * spec.value_left(r) * y[0]];
    let mut y = [T::zero(), T::one()];
    let bps = spec.breakpoints();
    let step_tol = tol * T::lit(1e-2);
    for w in bps.windows(2) {
        y = dopri_segment(&rhs, w[0], w[1], y, step_tol)?;
    }
    let r = spec.radius;
    Ok(r - y[0] / y[1])
}

impl<T: Real> PotentialSpec<T> {
    // profile evaluated from the left so segment ends keep interior values
    fn value_left(&self, r: T) -> T {
        let eps = T::epsilon() * self.radius;
        self.value((r - eps).max(T::zero()))
    }
}

fn dopri_segment<T: Real, F: Fn(T, [T; 2]) -> [T; 2]>(f: &F, a: T, b: T, y0: [T; 2], tol: T) -> Result<[T; 2], Error> {
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let len = b - a;
    if len <= T::zero() {
        return Ok(y0);
    }
    let mut r = a;
    let mut y = y0;
    let mut h = len / T::lit(64.0);
    let h_min = len * T::lit(1e-14);
    let mut steps = 0usize;
    while r < b {
        if r + h > b {
            h = b - r;
        }
        let mut k = [[T::zero(); 2]; 7];
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let aij = T::lit(A[s][j]);
                ys[0] += h * aij * kj[0];
                ys[1] += h * aij * kj[1];
            }
            k[s] = f(r + T::lit(C[s]) * h, ys);
        }
        let mut y5 = y;
        let mut err = T::zero();
        for c in 0..2 {
            let mut d5 = T::zero();
            let mut d4 = T::zero();
            for s in 0..7 {
                d5 += T::lit(B5[s]) * k[s][c];
                d4 += T::lit(B4[s]) * k[s][c];
            }
            y5[c] += h * d5;
            let scale = tol * (T::one() + y5[c].abs().max(y[c].abs()));
            err = err.max((h * (d5 - d4)).abs() / scale);
        }
        steps += 1;
        if err <= T::one() {
            r += h;
            y = y5;
        }
        let factor = if err == T::zero() {
            T::lit(5.0)
        } else {
            (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
        };
        h *= factor;
        if (h < h_min && r < b) || steps > 1_000_000 || !y[0].is_finite() {
            return Err(Error::Ode { radius: r.as_f64() });
        }
    }
    Ok(y)
}

/// Born approximation of the scattering length: order 1 is `V̂(0)/8π`,
/// order 2 subtracts `(16π)^{-1}·(2π²)^{-1} ∫₀^∞ V̂(k)² dk`.
pub fn born_scattering_length<T: Real>(spec: &PotentialSpec<T>, order: u32) -> Result<T, Error> {
    let eight_pi = T::lit(8.0) * T::PI();
    let first = spec.integral()? / eight_pi;
    if order <= 1 {
        return Ok(first);
    }
    let k_max = T::lit(400.0) / spec.radius;
    let pieces = 400;
    let h = k_max / T::int(pieces);
    let mut acc = T::zero();
    for j in 0..pieces {
        let a = h * T::int(j);
        let (v, _) = integrate(
            |k: T| {
                let v = spec.transform_at(k).unwrap_or(T::nan());
                v * v
            },
            a,
            a + h,
            T::lit(1e-10),
            200,
        )?;
        acc += v;
    }
    if !acc.is_finite() {
        return Err(Error::Quadrature { achieved: f64::INFINITY, requested: 1e-10 });
    }
    let two_pi_sq = T::lit(2.0) * T::PI() * T::PI();
    Ok(first - acc / (T::lit(16.0) * T::PI() * two_pi_sq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn dense_oracle(lat: &MomentumLattice, spec: &PotentialSpec<f64>) -> Vec<f64> {
        let modes: Vec<_> = lat.nonzero().map(|(_, v)| v).collect();
        let m = modes.len();
        let mut a = DMatrix::zeros(m, m);
        let mut b = DVector::zeros(m);
        for (i, p) in modes.iter().enumerate() {
            a[(i, i)] += p.momentum_sq::<f64>();
            for (j, q) in modes.iter().enumerate() {
                a[(i, j)] += 0.5 * spec.scaled_coefficient(*p - *q).unwrap();
            }
            b[i] = -0.5 * spec.scaled_coefficient(*p).unwrap();
        }
        a.lu().solve(&b).unwrap().iter().copied().collect()
    }

    #[test]
    fn k1_matches_dense_lu() {
        let lat = MomentumLattice::new(1);
        let spec = PotentialSpec::step(50.0, 0.2, 4).unwrap();
        let sol = solve_scattering_equation(&lat, &spec, 1e-12).unwrap();
        let oracle = dense_oracle(&lat, &spec);
        assert_eq!(sol.phi.len(), 26);
        for (a, b) in sol.phi.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-13, "{a} {b}");
        }
        assert!(sol.residual_sup <= 1e-12);
    }

    #[test]
    fn fft_path_matches_dense_lu() {
        let lat = MomentumLattice::new(4);
        let spec = PotentialSpec::step(80.0, 0.3, 2).unwrap();
        let sol = solve_scattering_equation(&lat, &spec, 1e-11).unwrap();
        let oracle = dense_oracle(&lat, &spec);
        for (a, b) in sol.phi.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn zero_potential() {
        let lat = MomentumLattice::new(2);
        let spec = PotentialSpec::step(0.0, 0.2, 5).unwrap();
        let sol = solve_scattering_equation(&lat, &spec, 1e-10).unwrap();
        assert!(sol.phi.iter().all(|x| *x == 0.0));
        assert_eq!(sol.residual_sup, 0.0);
        assert_eq!(sol.a_n, 0.0);
        let table = spec.scaled_table(48).unwrap();
        assert!(w_coefficients(&sol, &table).w.iter().all(|x| *x == 0.0));
        assert_eq!(continuum_scattering_length(&spec, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn sign_and_upper_bound() {
        let lat = MomentumLattice::new(3);
        for v in [1.0, 30.0, 300.0] {
            let spec = PotentialSpec::step(v, 0.25, 6).unwrap();
            let sol = solve_scattering_equation(&lat, &spec, 1e-11).unwrap();
            let s: f64 = sol.modes.iter().zip(&sol.phi).map(|(p, f)| spec.scaled_coefficient(*p).unwrap() * f).sum();
            assert!(s <= 0.0);
            assert!(sol.a_n <= spec.integral().unwrap() / (8.0 * std::f64::consts::PI));
            let direct = box_scattering_length(&sol, &spec).unwrap();
            assert!((direct - sol.a_n).abs() < 1e-14);
        }
    }

    #[test]
    fn phi_is_even() {
        let lat = MomentumLattice::new(5);
        let spec = PotentialSpec::step(50.0, 0.2, 3).unwrap();
        let sol = solve_scattering_equation(&lat, &spec, 1e-10).unwrap();
        for (p, f) in sol.modes.iter().zip(&sol.phi) {
            assert_eq!(*f, sol.phi_at(-*p));
        }
    }

    #[test]
    fn truncation_limits() {
        let lat = MomentumLattice::new(2);
        let spec = PotentialSpec::step(10.0, 0.2, 4).unwrap();
        let sol = solve_scattering_equation(&lat, &spec, 1e-11).unwrap();
        // N^α above the largest lattice momentum
        let big = (2.0 * std::f64::consts::PI * 2.0 * 3f64.sqrt() * 1.01).ln() / 4f64.ln();
        let cut = truncate_phi(sol.clone(), big);
        assert!(cut.phi_tilde.iter().all(|x| *x == 0.0));
        let small = truncate_phi(sol.clone(), 1e-9);
        assert_eq!(small.phi_tilde, sol.phi);
    }

    #[test]
    fn w_matches_brute_force() {
        let lat = MomentumLattice::new(1);
        let spec = PotentialSpec::step(40.0, 0.3, 3).unwrap();
        let sol = solve_scattering_equation(&lat, &spec, 1e-12).unwrap();
        let sol = with_cutoff(sol, 0.5, InfraredCutoff::new(2.0 * std::f64::consts::PI * 1.2));
        let table = spec.scaled_table(12).unwrap();
        let w = w_coefficients(&sol, &table);
        let c = 2.0 * std::f64::consts::PI * 1.2;
        for p in &sol.modes {
            let pn: f64 = p.momentum_norm();
            let mut expect = 0.0;
            for q in &sol.modes {
                let qn: f64 = q.momentum_norm();
                let term = spec.scaled_coefficient(*p - *q).unwrap() * sol.phi_at(*q);
                if pn <= c {
                    expect += 0.5 * term;
                }
                if qn <= c {
                    expect -= 0.5 * term;
                }
            }
            if pn <= c {
                expect += 0.5 * spec.scaled_coefficient(*p).unwrap();
            }
            assert!((w.at(*p) - expect).abs() < 1e-15);
        }
        // no infrared lattice points: Ŵ vanishes identically
        let sol = with_cutoff(sol, 0.5, InfraredCutoff::new(1.0));
        assert!(w_coefficients(&sol, &table).w.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn continuum_step_exact() {
        // u = sinh(kr) inside, k = √(v/2): 𝔞 = R − tanh(kR)/k
        for v in [1e-3, 2.0, 50.0, 800.0] {
            let spec = PotentialSpec::step(v, 0.2, 1).unwrap();
            let a = continuum_scattering_length(&spec, 1e-12).unwrap();
            let k = (v / 2.0f64).sqrt();
            let exact = 0.2 - (k * 0.2).tanh() / k;
            assert!((a - exact).abs() < 1e-14 + 1e-10 * exact, "{v}: {a} {exact}");
        }
    }

    #[test]
    fn born_cross_check() {
        let spec = PotentialSpec::<f64>::step(1e-3, 0.2, 1).unwrap();
        let a = continuum_scattering_length(&spec, 1e-12).unwrap();
        let b1 = born_scattering_length(&spec, 1).unwrap();
        assert!((a - b1).abs() / b1 < 1e-2);
        assert!(a < b1);
        let b2 = born_scattering_length(&spec, 2).unwrap();
        // step: 𝔞 = vR³/6 − v²R⁵/30 + O(v³)
        let second = 1e-6 * 0.2f64.powi(5) / 30.0;
        assert!(((b1 - b2) - second).abs() < 1e-3 * second, "{} {}", b1 - b2, second);
        assert!((a - b2).abs() < 2e-2 * (b1 - b2));
    }
}
