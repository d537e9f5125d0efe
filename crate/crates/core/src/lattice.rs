//! Finite truncations of the momentum lattice `2πℤ³`.
//!
//! Vectors are stored as integer triples `n`; the physical momentum
//! `p = 2πn` is produced on demand so that shell membership and
//! momentum conservation are decided in exact integer arithmetic.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::scalar::Real;
use crate::Error;

/// Integer label `n` of the momentum `p = 2πn`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeVector {
    pub n: [i32; 3],
}

impl LatticeVector {
    pub const ZERO: LatticeVector = LatticeVector { n: [0, 0, 0] };

    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        LatticeVector { n: [x, y, z] }
    }

    /// Unit vector along axis `i`.
    pub fn unit(i: usize) -> Self {
        let mut n = [0; 3];
        n[i] = 1;
        LatticeVector { n }
    }

    pub fn is_zero(&self) -> bool {
        self.n == [0, 0, 0]
    }

    /// `|n|²`, exact.
    pub fn norm_sq(&self) -> i64 {
        self.n.iter().map(|&c| (c as i64) * (c as i64)).sum()
    }

    pub fn sup_norm(&self) -> i32 {
        self.n.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// Integer dot product `n·m`.
    pub fn dot(&self, other: &LatticeVector) -> i64 {
        (0..3).map(|i| self.n[i] as i64 * other.n[i] as i64).sum()
    }

    /// `|p|² = 4π²|n|²`.
    pub fn momentum_sq<T: Real>(&self) -> T {
        let two_pi = T::TAU();
        two_pi * two_pi * T::int(self.norm_sq())
    }

    /// `|p| = 2π|n|`.
    pub fn momentum_norm<T: Real>(&self) -> T {
        T::TAU() * T::int(self.norm_sq()).sqrt()
    }

    /// Physical momentum `2πn`.
    pub fn momentum<T: Real>(&self) -> [T; 3] {
        let two_pi = T::TAU();
        [
            two_pi * T::int(self.n[0] as i64),
            two_pi * T::int(self.n[1] as i64),
            two_pi * T::int(self.n[2] as i64),
        ]
    }

    /// `p·q = 4π² n·m`.
    pub fn momentum_dot<T: Real>(&self, other: &LatticeVector) -> T {
        let two_pi = T::TAU();
        two_pi * two_pi * T::int(self.dot(other))
    }
}

impl Add for LatticeVector {
    type Output = LatticeVector;
    fn add(self, o: LatticeVector) -> LatticeVector {
        LatticeVector::new(self.n[0] + o.n[0], self.n[1] + o.n[1], self.n[2] + o.n[2])
    }
}

impl Sub for LatticeVector {
    type Output = LatticeVector;
    fn sub(self, o: LatticeVector) -> LatticeVector {
        LatticeVector::new(self.n[0] - o.n[0], self.n[1] - o.n[1], self.n[2] - o.n[2])
    }
}

impl Neg for LatticeVector {
    type Output = LatticeVector;
    fn neg(self) -> LatticeVector {
        LatticeVector::new(-self.n[0], -self.n[1], -self.n[2])
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.n[0], self.n[1], self.n[2])
    }
}

/// Which vectors a lattice of cutoff `K` keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatticeShape {
    /// `‖n‖_∞ ≤ K`, `(2K+1)³` vectors.
    Cube,
    /// `|n|² ≤ K²`; `K = 1` gives the zero mode plus the six unit vectors.
    Ball,
}

/// Vectors sharing one value of `|n|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct Shell {
    pub norm_sq: i64,
    /// Dense indices of the members, ascending.
    pub members: Vec<usize>,
}

/// Negation-closed finite set of lattice vectors containing zero.
#[derive(Clone, Debug)]
pub struct MomentumLattice {
    cutoff: u32,
    shape: LatticeShape,
    vectors: Vec<LatticeVector>,
    index: HashMap<LatticeVector, usize>,
    shells: Vec<Shell>,
}

impl PartialEq for MomentumLattice {
    fn eq(&self, other: &Self) -> bool {
        self.vectors == other.vectors
    }
}

impl MomentumLattice {
    /// Cube `‖n‖_∞ ≤ K`, enumerated lexicographically.
    pub fn new(cutoff: u32) -> Self {
        Self::with_shape(cutoff, LatticeShape::Cube)
    }

    pub fn with_shape(cutoff: u32, shape: LatticeShape) -> Self {
        let k = cutoff as i32;
        let mut vectors = Vec::with_capacity((2 * cutoff as usize + 1).pow(3));
        for x in -k..=k {
            for y in -k..=k {
                for z in -k..=k {
                    let v = LatticeVector::new(x, y, z);
                    if shape == LatticeShape::Cube || v.norm_sq() <= (k as i64) * (k as i64) {
                        vectors.push(v);
                    }
                }
            }
        }
        Self::build(cutoff, shape, vectors)
    }

    fn build(cutoff: u32, shape: LatticeShape, vectors: Vec<LatticeVector>) -> Self {
        let index: HashMap<_, _> = vectors.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut by_shell: HashMap<i64, Vec<usize>> = HashMap::new();
        for (i, v) in vectors.iter().enumerate() {
            if !v.is_zero() {
                by_shell.entry(v.norm_sq()).or_default().push(i);
            }
        }
        let mut shells: Vec<Shell> = by_shell
            .into_iter()
            .map(|(norm_sq, members)| Shell { norm_sq, members })
            .collect();
        shells.sort_by_key(|s| s.norm_sq);
        MomentumLattice { cutoff, shape, vectors, index, shells }
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn shape(&self) -> LatticeShape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[LatticeVector] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> LatticeVector {
        self.vectors[i]
    }

    pub fn index_of(&self, v: &LatticeVector) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn contains(&self, v: &LatticeVector) -> bool {
        self.index.contains_key(v)
    }

    pub fn zero_index(&self) -> usize {
        self.index[&LatticeVector::ZERO]
    }

    /// Nonzero shells sorted by `|n|²`.
    pub fn shells(&self) -> &[Shell] {
        &self.shells
    }

    /// Nonzero vectors in enumeration order.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, LatticeVector)> + '_ {
        self.vectors.iter().copied().enumerate().filter(|(_, v)| !v.is_zero())
    }
}

/// `h(p) = Σ_q f(p−q) g(q)` over the lattice, with `f` evaluated at the
/// exact difference vector (no periodic wrap-around). Rows are summed in
/// enumeration order.
pub fn convolve<T, F>(lattice: &MomentumLattice, f: F, g: &[T]) -> Result<Vec<T>, Error>
where
    T: Real,
    F: Fn(LatticeVector) -> T + Sync,
{
    if g.len() != lattice.len() {
        return Err(Error::Dimension { expected: lattice.len(), found: g.len() });
    }
    let vs = lattice.vectors();
    Ok(vs
        .par_iter()
        .map(|p| {
            let mut acc = T::zero();
            for (q, gq) in vs.iter().zip(g) {
                if *gq != T::zero() {
                    acc += f(*p - *q) * *gq;
                }
            }
            acc
        })
        .collect())
}

/// FFT convolution against a fixed kernel on a cube lattice.
///
/// The kernel is tabulated on the difference box `‖n‖_∞ ≤ 2K`; a period of
/// `4K+1` keeps every difference distinct, so the cyclic product equals the
/// linear convolution on the output box.
pub struct Convolver<T: Real> {
    cutoff: usize,
    period: usize,
    kernel_hat: Vec<Complex<T>>,
    fft: Arc<dyn rustfft::Fft<T>>,
    ifft: Arc<dyn rustfft::Fft<T>>,
}

impl<T: Real> Convolver<T> {
    pub fn new<F>(lattice: &MomentumLattice, f: F) -> Result<Self, Error>
    where
        F: Fn(LatticeVector) -> T + Sync,
    {
        if lattice.shape() != LatticeShape::Cube {
            return Err(Error::Config("FFT convolution needs a cube lattice".into()));
        }
        let k = lattice.cutoff() as usize;
        let period = 4 * k + 1;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(period);
        let ifft = planner.plan_fft_inverse(period);
        let l = period as i32;
        let mut kernel = vec![Complex::new(T::zero(), T::zero()); period.pow(3)];
        let wrap = |c: i32| -> usize { c.rem_euclid(l) as usize };
        let span = 2 * k as i32;
        let values: Vec<(usize, T)> = (-span..=span)
            .into_par_iter()
            .flat_map_iter(|x| {
                let f = &f;
                (-span..=span).flat_map(move |y| {
                    (-span..=span).map(move |z| {
                        let idx = (wrap(x) * period + wrap(y)) * period + wrap(z);
                        (idx, f(LatticeVector::new(x, y, z)))
                    })
                })
            })
            .collect();
        for (idx, v) in values {
            kernel[idx] = Complex::new(v, T::zero());
        }
        let mut c = Convolver { cutoff: k, period, kernel_hat: kernel, fft, ifft };
        let mut buf = std::mem::take(&mut c.kernel_hat);
        c.transform(&mut buf, false);
        c.kernel_hat = buf;
        Ok(c)
    }

    fn transform(&self, data: &mut [Complex<T>], inverse: bool) {
        let l = self.period;
        let plan = if inverse { &self.ifft } else { &self.fft };
        // z lines are contiguous
        data.par_chunks_mut(l).for_each(|line| plan.process(line));
        // y lines
        data.par_chunks_mut(l * l).for_each(|plane| {
            let mut line = vec![Complex::new(T::zero(), T::zero()); l];
            for z in 0..l {
                for y in 0..l {
                    line[y] = plane[y * l + z];
                }
                plan.process(&mut line);
                for y in 0..l {
                    plane[y * l + z] = line[y];
                }
            }
        });
        // x lines
        let mut cols: Vec<Vec<Complex<T>>> = (0..l * l)
            .into_par_iter()
            .map(|yz| {
                let mut line: Vec<Complex<T>> = (0..l).map(|x| data[x * l * l + yz]).collect();
                plan.process(&mut line);
                line
            })
            .collect();
        for (yz, line) in cols.iter_mut().enumerate() {
            for x in 0..l {
                data[x * l * l + yz] = line[x];
            }
        }
    }

    /// Convolution of `g`, given in the cube's lexicographic order.
    pub fn apply(&self, g: &[T]) -> Vec<T> {
        let k = self.cutoff;
        let side = 2 * k + 1;
        assert_eq!(g.len(), side.pow(3), "vector does not match the lattice");
        let l = self.period;
        let zero = Complex::new(T::zero(), T::zero());
        let mut buf = vec![zero; l.pow(3)];
        for x in 0..side {
            for y in 0..side {
                for z in 0..side {
                    buf[(x * l + y) * l + z] = Complex::new(g[(x * side + y) * side + z], T::zero());
                }
            }
        }
        self.transform(&mut buf, false);
        buf.par_iter_mut().zip(self.kernel_hat.par_iter()).for_each(|(b, h)| *b = *b * *h);
        self.transform(&mut buf, true);
        // input occupies [0, 2K] per axis (offset K); output p sits at p + K
        let scale = T::one() / T::int(l.pow(3) as i64);
        let mut out = vec![T::zero(); side.pow(3)];
        for x in 0..side {
            for y in 0..side {
                for z in 0..side {
                    out[(x * side + y) * side + z] = buf[(x * l + y) * l + z].re * scale;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_counts_and_shells() {
        for k in 1..4u32 {
            let lat = MomentumLattice::new(k);
            assert_eq!(lat.len(), (2 * k as usize + 1).pow(3));
            let total: usize = lat.shells().iter().map(|s| s.members.len()).sum();
            assert_eq!(total, lat.len() - 1);
            for s in lat.shells() {
                for &i in &s.members {
                    assert_eq!(lat.vector(i).norm_sq(), s.norm_sq);
                }
            }
            for v in lat.vectors() {
                assert_eq!(lat.vector(lat.index_of(&-*v).unwrap()), -*v);
            }
        }
    }

    #[test]
    fn ball_k1_has_seven_modes() {
        let lat = MomentumLattice::with_shape(1, LatticeShape::Ball);
        assert_eq!(lat.len(), 7);
        assert_eq!(lat.shells().len(), 1);
        assert_eq!(lat.shells()[0].members.len(), 6);
    }

    #[test]
    fn momentum_from_integers() {
        let v = LatticeVector::new(1, -2, 3);
        let p: [f64; 3] = v.momentum();
        assert_eq!(p[1], -2.0 * std::f64::consts::TAU);
        assert_eq!(v.norm_sq(), 14);
        let ps: f64 = v.momentum_sq();
        assert!((ps - 14.0 * std::f64::consts::TAU.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn fft_matches_direct() {
        let lat = MomentumLattice::new(2);
        let f = |d: LatticeVector| 1.0 / (1.0 + d.norm_sq() as f64) + 0.1 * d.n[0] as f64;
        let g: Vec<f64> = (0..lat.len()).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let direct = convolve(&lat, f, &g).unwrap();
        let conv = Convolver::new(&lat, f).unwrap();
        let fast = conv.apply(&g);
        for (a, b) in direct.iter().zip(&fast) {
            assert!((a - b).abs() < 1e-11, "{a} vs {b}");
        }
    }

    #[test]
    fn delta_and_constant_kernels() {
        let lat = MomentumLattice::new(1);
        let z = lat.zero_index();
        let mut g = vec![0.0; lat.len()];
        g[z] = 2.5;
        let f = |d: LatticeVector| d.norm_sq() as f64 + 1.0;
        let h = convolve(&lat, f, &g).unwrap();
        for (i, v) in lat.vectors().iter().enumerate() {
            assert_eq!(h[i], f(*v) * 2.5);
        }
        let g: Vec<f64> = (0..lat.len()).map(|i| i as f64).collect();
        let s: f64 = g.iter().sum();
        let h = convolve(&lat, |_| 1.0, &g).unwrap();
        assert!(h.iter().all(|x| (x - s).abs() < 1e-9));
        assert!(convolve(&lat, |_| 1.0, &g[1..]).is_err());
    }
}
