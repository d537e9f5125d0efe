//! Compressed sparse operators and assembly of expressions on bases.

use std::collections::HashMap;

use nalgebra::DMatrix;
use nalgebra_sparse::CsrMatrix;
use rayon::prelude::*;

use super::basis::FockBasis;
use super::expr::{Monomial, Op, OperatorExpression, Symmetry};
use crate::Error;

/// Default cap on stored entries of an assembled operator.
pub const DEFAULT_NNZ_BUDGET: usize = 200_000_000;

/// Anything with a matrix-vector product.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y ← A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), Error>;
}

/// Real sparse matrix in CSR form with a recorded symmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    pub name: String,
    pub matrix: CsrMatrix<f64>,
    pub symmetry: Symmetry,
    /// Terms skipped during construction or assembly (labels outside the
    /// mode list).
    pub dropped: usize,
    /// Images that fell outside the target basis.
    pub leaked: usize,
}

impl SparseOperator {
    pub fn from_matrix(name: impl Into<String>, matrix: CsrMatrix<f64>, symmetry: Symmetry) -> Self {
        SparseOperator { name: name.into(), matrix, symmetry, dropped: 0, leaked: 0 }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_matrix("1", CsrMatrix::identity(n), Symmetry::Hermitian)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_matrix("0", CsrMatrix::zeros(rows, cols), Symmetry::Hermitian)
    }

    pub fn from_diagonal(name: impl Into<String>, d: &[f64]) -> Self {
        let n = d.len();
        let m = CsrMatrix::try_from_csr_data(n, n, (0..=n).collect(), (0..n).collect(), d.to_vec()).expect("valid diagonal");
        Self::from_matrix(name, m, Symmetry::Hermitian)
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.matrix.get_entry(r, c).map_or(0.0, |e| e.into_value())
    }

    /// `y ← A x`, parallel over rows.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols());
        assert_eq!(y.len(), self.nrows());
        let (offsets, cols, vals) = self.matrix.csr_data();
        y.par_iter_mut().enumerate().for_each(|(r, yr)| {
            let mut acc = 0.0;
            for k in offsets[r]..offsets[r + 1] {
                acc += vals[k] * x[cols[k]];
            }
            *yr = acc;
        });
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Self {
        SparseOperator {
            name: format!("{}ᵀ", self.name),
            matrix: self.matrix.transpose(),
            symmetry: self.symmetry,
            dropped: self.dropped,
            leaked: self.leaked,
        }
    }

    fn combine(&self, other: &Self, name: String, matrix: CsrMatrix<f64>) -> Self {
        let symmetry = if self.symmetry == other.symmetry { self.symmetry } else { Symmetry::None };
        SparseOperator { name, matrix, symmetry, dropped: self.dropped + other.dropped, leaked: self.leaked + other.leaked }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, format!("{} + {}", self.name, other.name), &self.matrix + &other.matrix)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, format!("{} − {}", self.name, other.name), &self.matrix - &other.matrix)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.matrix.values_mut().iter_mut().for_each(|v| *v *= c);
        out.name = format!("{c}·{}", self.name);
        out
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = self.combine(other, format!("{}·{}", self.name, other.name), &self.matrix * &other.matrix);
        out.symmetry = Symmetry::None;
        out
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        let ab = &self.matrix * &other.matrix;
        let ba = &other.matrix * &self.matrix;
        let sym = match (self.symmetry, other.symmetry) {
            (Symmetry::Hermitian, Symmetry::AntiHermitian) | (Symmetry::AntiHermitian, Symmetry::Hermitian) => Symmetry::Hermitian,
            (Symmetry::Hermitian, Symmetry::Hermitian) | (Symmetry::AntiHermitian, Symmetry::AntiHermitian) => Symmetry::AntiHermitian,
            _ => Symmetry::None,
        };
        let mut out = self.combine(other, format!("[{}, {}]", self.name, other.name), &ab - &ba);
        out.symmetry = sym;
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A_ij ∓ A_ji|` for the recorded symmetry (0 when none is recorded).
    pub fn symmetry_defect(&self) -> f64 {
        let t = self.matrix.transpose();
        match self.symmetry {
            Symmetry::Hermitian => max_abs_csr(&(&self.matrix - &t)),
            Symmetry::AntiHermitian => max_abs_csr(&(&self.matrix + &t)),
            Symmetry::None => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows().min(self.ncols())).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows(), self.ncols());
        for (r, c, v) in self.matrix.triplet_iter() {
            d[(r, c)] += *v;
        }
        d
    }

    /// Largest entry of `|self − other|`, with its position and the two values.
    pub fn max_abs_diff(&self, other: &Self) -> (f64, Option<(usize, usize, f64, f64)>) {
        assert_eq!((self.nrows(), self.ncols()), (other.nrows(), other.ncols()));
        let d = &self.matrix - &other.matrix;
        let mut best = (0.0, None);
        for (r, c, v) in d.triplet_iter() {
            if v.abs() > best.0 {
                best = (v.abs(), Some((r, c, self.get(r, c), other.get(r, c))));
            }
        }
        best
    }
}

fn max_abs_csr(m: &CsrMatrix<f64>) -> f64 {
    m.values().iter().fold(0.0, |a, v| a.max(v.abs()))
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), Error> {
        self.matvec_into(x, y);
        Ok(())
    }
}

struct Compiled {
    /// Sorted annihilated mode indices → (sorted created indices, coefficient).
    groups: HashMap<Vec<u16>, Vec<(Vec<u16>, f64)>>,
    sizes: Vec<usize>,
    general: Vec<(f64, Vec<(bool, u16)>)>,
    dropped: usize,
}

fn compile(expr: &OperatorExpression, basis: &FockBasis) -> Compiled {
    let modes = basis.modes();
    let mut groups: HashMap<Vec<u16>, Vec<(Vec<u16>, f64)>> = HashMap::new();
    let mut general = Vec::new();
    let mut dropped = expr.dropped;
    for t in &expr.terms {
        let idx: Option<Vec<(bool, u16)>> = t
            .ops
            .iter()
            .map(|o| modes.index_of(o.label()).map(|i| (matches!(o, Op::Create(_)), i as u16)))
            .collect();
        let Some(idx) = idx else {
            dropped += 1;
            continue;
        };
        if t.is_normal_ordered() {
            let mut c: Vec<u16> = idx.iter().filter(|x| x.0).map(|x| x.1).collect();
            let mut a: Vec<u16> = idx.iter().filter(|x| !x.0).map(|x| x.1).collect();
            c.sort_unstable();
            a.sort_unstable();
            groups.entry(a).or_default().push((c, t.coeff));
        } else {
            general.push((t.coeff, idx));
        }
    }
    let mut sizes: Vec<usize> = groups.keys().map(Vec::len).collect();
    sizes.sort_unstable();
    sizes.dedup();
    Compiled { groups, sizes, general, dropped }
}

// every sorted multiset of size k drawn from the occupations
fn submultisets(occ: &[u8], k: usize, f: &mut impl FnMut(&[u16])) {
    fn rec(occ: &[u8], start: usize, k: usize, cur: &mut Vec<u16>, f: &mut impl FnMut(&[u16])) {
        if k == 0 {
            f(cur);
            return;
        }
        for i in start..occ.len() {
            if occ[i] == 0 {
                continue;
            }
            let used = cur.iter().rev().take_while(|&&c| c as usize == i).count();
            if used >= occ[i] as usize {
                continue;
            }
            cur.push(i as u16);
            rec(occ, i, k - 1, cur, f);
            cur.pop();
        }
    }
    let mut cur = Vec::with_capacity(k);
    rec(occ, 0, k, &mut cur, f);
}

/// Matrix of `expr` from `source` to `target`: entry `(i, j) = ⟨t_i|expr|s_j⟩`.
pub fn assemble_between(
    expr: &OperatorExpression,
    source: &FockBasis,
    target: &FockBasis,
    nnz_budget: usize,
) -> Result<SparseOperator, Error> {
    if source.modes() != target.modes() {
        return Err(Error::Config("source and target bases use different modes".into()));
    }
    let comp = compile(expr, source);
    let m = source.modes().len();
    let columns: Vec<(Vec<(usize, f64)>, usize)> = (0..source.len())
        .into_par_iter()
        .map(|j| {
            let state = source.state(j);
            let mut entries: Vec<(usize, f64)> = Vec::new();
            let mut leaked = 0usize;
            let mut work = vec![0u8; m];
            for &k in &comp.sizes {
                submultisets(state, k, &mut |key| {
                    let Some(list) = comp.groups.get(key) else { return };
                    work.copy_from_slice(state);
                    let mut amp = 1.0;
                    for &a in key {
                        amp *= (work[a as usize] as f64).sqrt();
                        work[a as usize] -= 1;
                    }
                    let mid = work.clone();
                    for (cre, c) in list {
                        work.copy_from_slice(&mid);
                        let mut amp2 = amp * c;
                        for &x in cre {
                            work[x as usize] += 1;
                            amp2 *= (work[x as usize] as f64).sqrt();
                        }
                        match target.index_of(&work) {
                            Some(i) => entries.push((i, amp2)),
                            None => leaked += 1,
                        }
                    }
                });
            }
            for (c, ops) in &comp.general {
                work.copy_from_slice(state);
                let mut amp = *c;
                let mut alive = true;
                for &(create, x) in ops.iter().rev() {
                    let x = x as usize;
                    if create {
                        work[x] += 1;
                        amp *= (work[x] as f64).sqrt();
                    } else {
                        if work[x] == 0 {
                            alive = false;
                            break;
                        }
                        amp *= (work[x] as f64).sqrt();
                        work[x] -= 1;
                    }
                }
                if alive {
                    match target.index_of(&work) {
                        Some(i) => entries.push((i, amp)),
                        None => leaked += 1,
                    }
                }
            }
            entries.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
            for (i, v) in entries {
                match merged.last_mut() {
                    Some(last) if last.0 == i => last.1 += v,
                    _ => merged.push((i, v)),
                }
            }
            merged.retain(|e| e.1 != 0.0);
            (merged, leaked)
        })
        .collect();
    let nnz: usize = columns.iter().map(|c| c.0.len()).sum();
    if nnz > nnz_budget {
        return Err(Error::Budget { what: "operator entries", limit: nnz_budget, count: nnz });
    }
    let leaked = columns.iter().map(|c| c.1).sum();
    let mut offsets = Vec::with_capacity(source.len() + 1);
    let mut rows = Vec::with_capacity(nnz);
    let mut vals = Vec::with_capacity(nnz);
    offsets.push(0);
    for (col, _) in &columns {
        for (i, v) in col {
            rows.push(*i);
            vals.push(*v);
        }
        offsets.push(rows.len());
    }
    let transposed = CsrMatrix::try_from_csr_data(source.len(), target.len(), offsets, rows, vals)
        .map_err(|e| Error::Config(format!("sparse assembly: {e}")))?;
    Ok(SparseOperator {
        name: expr.name.clone(),
        matrix: transposed.transpose(),
        symmetry: expr.symmetry,
        dropped: comp.dropped,
        leaked,
    })
}

/// Square assembly on one basis.
pub fn assemble(expr: &OperatorExpression, basis: &FockBasis) -> Result<SparseOperator, Error> {
    assemble_between(expr, basis, basis, DEFAULT_NNZ_BUDGET)
}

/// Reference assembler: applies every monomial to every state.
pub fn assemble_naive(expr: &OperatorExpression, basis: &FockBasis) -> Result<SparseOperator, Error> {
    let n = basis.len();
    let mut dense = vec![HashMap::<usize, f64>::new(); n];
    let mut dropped = 0;
    for (j, col) in dense.iter_mut().enumerate() {
        for t in &expr.terms {
            let Monomial { .. } = t;
            if let Some(app) = super::expr::apply_monomial(basis.modes(), basis.state(j), t, &mut dropped) {
                if let Some(i) = basis.index_of(&app.occupation) {
                    *col.entry(i).or_insert(0.0) += app.amplitude;
                }
            }
        }
    }
    let mut offsets = vec![0];
    let mut rows = Vec::new();
    let mut vals = Vec::new();
    for col in &dense {
        let mut e: Vec<_> = col.iter().map(|(i, v)| (*i, *v)).filter(|x| x.1 != 0.0).collect();
        e.sort_by_key(|x| x.0);
        for (i, v) in e {
            rows.push(i);
            vals.push(v);
        }
        offsets.push(rows.len());
    }
    let t = CsrMatrix::try_from_csr_data(n, n, offsets, rows, vals).map_err(|e| Error::Config(format!("{e}")))?;
    Ok(SparseOperator { name: expr.name.clone(), matrix: t.transpose(), symmetry: expr.symmetry, dropped, leaked: 0 })
}
