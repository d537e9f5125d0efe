//! Occupation-number bases of fixed particle number and total momentum.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::lattice::{LatticeVector, MomentumLattice};
use crate::Error;

/// Default cap on the number of basis states.
pub const DEFAULT_BASIS_BUDGET: usize = 2_000_000;

/// Ordered single-particle modes; the zero momentum is always present.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    vectors: Vec<LatticeVector>,
    index: HashMap<LatticeVector, usize>,
    zero: usize,
}

impl ModeSet {
    pub fn new(vectors: Vec<LatticeVector>) -> Result<Self, Error> {
        if vectors.is_empty() {
            return Err(Error::Config("mode list is empty".into()));
        }
        if vectors.len() > u16::MAX as usize {
            return Err(Error::Config("too many modes".into()));
        }
        let index: HashMap<_, _> = vectors.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        if index.len() != vectors.len() {
            return Err(Error::Config("mode list has duplicates".into()));
        }
        let zero = *index.get(&LatticeVector::ZERO).ok_or_else(|| Error::Config("mode list lacks p = 0".into()))?;
        Ok(ModeSet { vectors, index, zero })
    }

    pub fn from_lattice(lattice: &MomentumLattice) -> Self {
        Self::new(lattice.vectors().to_vec()).expect("lattices contain zero")
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

    pub fn index_of(&self, p: LatticeVector) -> Option<usize> {
        self.index.get(&p).copied()
    }

    pub fn contains(&self, p: LatticeVector) -> bool {
        self.index.contains_key(&p)
    }

    /// `p ∈ M` and `p ≠ 0`.
    pub fn contains_nonzero(&self, p: LatticeVector) -> bool {
        !p.is_zero() && self.contains(p)
    }

    pub fn zero(&self) -> usize {
        self.zero
    }

    pub fn nonzero(&self) -> impl Iterator<Item = LatticeVector> + '_ {
        self.vectors.iter().copied().filter(|v| !v.is_zero())
    }

    /// Every `p − q` with `p, q ∈ M`, sorted.
    pub fn differences(&self) -> Vec<LatticeVector> {
        let mut d: Vec<_> = self.vectors.iter().flat_map(|p| self.vectors.iter().map(move |q| *p - *q)).collect();
        d.sort();
        d.dedup();
        d
    }

    pub fn is_negation_closed(&self) -> bool {
        self.vectors.iter().all(|v| self.contains(-*v))
    }
}

/// States `|n_0, n_1, …⟩` with `Σn = N` and optionally `Σ n_p p = P`.
#[derive(Debug, Clone)]
pub struct FockBasis {
    modes: Arc<ModeSet>,
    particles: u32,
    sector: Option<LatticeVector>,
    occupations: Vec<u8>,
    index: HashMap<Box<[u8]>, usize>,
}

fn binomial(n: u64, k: u64) -> Option<u64> {
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Number of `N`-particle states over `M` modes, `C(N+M−1, N)`.
pub fn unrestricted_dimension(modes: usize, particles: u32) -> Option<u64> {
    if modes == 0 {
        return Some(0);
    }
    binomial(particles as u64 + modes as u64 - 1, particles as u64)
}

/// Enumerates the basis in reverse-lexicographic order of occupations
/// (`|N,0,…⟩` first); the sector filter is applied during the walk.
pub fn enumerate_basis(
    modes: Arc<ModeSet>,
    particles: u32,
    sector: Option<LatticeVector>,
    budget: usize,
) -> Result<FockBasis, Error> {
    if particles > u8::MAX as u32 {
        return Err(Error::Config("particle number above 255".into()));
    }
    let m = modes.len();
    if sector.is_none() {
        let count = unrestricted_dimension(m, particles).unwrap_or(u64::MAX);
        if count > budget as u64 {
            return Err(Error::Budget { what: "Fock basis", limit: budget, count: count.min(usize::MAX as u64) as usize });
        }
    }
    // remaining momentum reachable with k particles from modes i.. is bounded by
    // k·max|n_c| per axis; used to prune sector walks
    let max_abs: Vec<[i32; 3]> = {
        let mut suffix = vec![[0i32; 3]; m + 1];
        for i in (0..m).rev() {
            let v = modes.vectors()[i];
            for c in 0..3 {
                suffix[i][c] = suffix[i + 1][c].max(v.n[c].abs());
            }
        }
        suffix
    };
    struct Walk<'a> {
        modes: &'a ModeSet,
        target: Option<LatticeVector>,
        max_abs: &'a [[i32; 3]],
        current: Vec<u8>,
        out: Vec<u8>,
        count: usize,
        budget: usize,
    }
    impl Walk<'_> {
        fn go(&mut self, i: usize, left: u32, mom: [i64; 3]) -> Result<(), Error> {
            let m = self.modes.len();
            if let Some(t) = self.target {
                for c in 0..3 {
                    let need = (t.n[c] as i64 - mom[c]).abs();
                    if need > left as i64 * self.max_abs[i][c] as i64 {
                        return Ok(());
                    }
                }
            }
            if i == m - 1 {
                let v = self.modes.vectors()[i];
                let mut fin = mom;
                for c in 0..3 {
                    fin[c] += left as i64 * v.n[c] as i64;
                }
                if let Some(t) = self.target {
                    if fin != [t.n[0] as i64, t.n[1] as i64, t.n[2] as i64] {
                        return Ok(());
                    }
                }
                self.current[i] = left as u8;
                if self.count >= self.budget {
                    return Err(Error::Budget { what: "Fock basis", limit: self.budget, count: self.count + 1 });
                }
                self.out.extend_from_slice(&self.current);
                self.count += 1;
                self.current[i] = 0;
                return Ok(());
            }
            let v = self.modes.vectors()[i];
            for n in (0..=left).rev() {
                self.current[i] = n as u8;
                let mut next = mom;
                for c in 0..3 {
                    next[c] += n as i64 * v.n[c] as i64;
                }
                self.go(i + 1, left - n, next)?;
            }
            self.current[i] = 0;
            Ok(())
        }
    }
    let mut walk = Walk {
        modes: &modes,
        target: sector,
        max_abs: &max_abs,
        current: vec![0; m],
        out: Vec::new(),
        count: 0,
        budget,
    };
    walk.go(0, particles, [0; 3])?;
    let occupations = walk.out;
    let index = occupations.chunks(m).enumerate().map(|(i, s)| (s.to_vec().into_boxed_slice(), i)).collect();
    Ok(FockBasis { modes, particles, sector, occupations, index })
}

impl FockBasis {
    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn particles(&self) -> u32 {
        self.particles
    }

    pub fn sector(&self) -> Option<LatticeVector> {
        self.sector
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn state(&self, i: usize) -> &[u8] {
        let m = self.modes.len();
        &self.occupations[i * m..(i + 1) * m]
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn states(&self) -> impl Iterator<Item = &[u8]> {
        self.occupations.chunks(self.modes.len().max(1))
    }

    pub fn total_momentum(&self, i: usize) -> LatticeVector {
        let mut n = [0i32; 3];
        for (occ, v) in self.state(i).iter().zip(self.modes.vectors()) {
            for c in 0..3 {
                n[c] += *occ as i32 * v.n[c];
            }
        }
        LatticeVector { n }
    }

    /// `N − n_0` of state `i`.
    pub fn excitations(&self, i: usize) -> u32 {
        self.particles - self.state(i)[self.modes.zero()] as u32
    }

    /// Index of `|N, 0, …, 0⟩`, if it lies in the basis.
    pub fn condensate_index(&self) -> Option<usize> {
        let mut occ = vec![0u8; self.modes.len()];
        occ[self.modes.zero()] = self.particles as u8;
        self.index_of(&occ)
    }
}

/// Bases shared across operators, keyed by `(N, sector)`.
#[derive(Debug)]
pub struct BasisCache {
    modes: Arc<ModeSet>,
    budget: usize,
    map: Mutex<HashMap<(u32, Option<LatticeVector>), Arc<FockBasis>>>,
}

impl BasisCache {
    pub fn new(modes: Arc<ModeSet>, budget: usize) -> Self {
        BasisCache { modes, budget, map: Mutex::new(HashMap::new()) }
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn get(&self, particles: u32, sector: Option<LatticeVector>) -> Result<Arc<FockBasis>, Error> {
        if let Some(b) = self.map.lock().expect("cache poisoned").get(&(particles, sector)) {
            return Ok(b.clone());
        }
        let b = Arc::new(enumerate_basis(self.modes.clone(), particles, sector, self.budget)?);
        self.map.lock().expect("cache poisoned").insert((particles, sector), b.clone());
        Ok(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeShape;

    fn modes_of(lat: &MomentumLattice) -> Arc<ModeSet> {
        Arc::new(ModeSet::from_lattice(lat))
    }

    #[test]
    fn counts() {
        let two = Arc::new(ModeSet::new(vec![LatticeVector::ZERO, LatticeVector::unit(0)]).unwrap());
        let b = enumerate_basis(two, 2, None, 100).unwrap();
        assert_eq!(b.len(), 3);
        assert_eq!(b.state(0), &[2, 0]);
        assert_eq!(b.state(2), &[0, 2]);
        let ball = MomentumLattice::with_shape(1, LatticeShape::Ball);
        let b = enumerate_basis(modes_of(&ball), 12, None, 100_000).unwrap();
        assert_eq!(b.len(), 18564);
        assert_eq!(unrestricted_dimension(7, 12), Some(18564));
    }

    #[test]
    fn sector_matches_filter() {
        let lat = MomentumLattice::new(1);
        let modes = modes_of(&lat);
        let all = enumerate_basis(modes.clone(), 3, None, 100_000).unwrap();
        for sector in [LatticeVector::ZERO, LatticeVector::unit(0), LatticeVector::new(2, -1, 0)] {
            let s = enumerate_basis(modes.clone(), 3, Some(sector), 100_000).unwrap();
            let filtered: Vec<Vec<u8>> = (0..all.len()).filter(|&i| all.total_momentum(i) == sector).map(|i| all.state(i).to_vec()).collect();
            let got: Vec<Vec<u8>> = s.states().map(|x| x.to_vec()).collect();
            assert_eq!(got, filtered);
            for i in 0..s.len() {
                assert_eq!(s.index_of(s.state(i)), Some(i));
                assert_eq!(s.total_momentum(i), sector);
            }
        }
    }

    #[test]
    fn budget() {
        let lat = MomentumLattice::new(1);
        let e = enumerate_basis(modes_of(&lat), 6, None, 1000).unwrap_err();
        assert!(matches!(e, Error::Budget { limit: 1000, .. }));
        let e = enumerate_basis(modes_of(&lat), 4, Some(LatticeVector::ZERO), 10).unwrap_err();
        assert!(matches!(e, Error::Budget { limit: 10, .. }));
    }

    #[test]
    fn mode_set_requires_zero() {
        assert!(ModeSet::new(vec![LatticeVector::unit(0)]).is_err());
        assert!(ModeSet::new(vec![]).is_err());
    }
}
