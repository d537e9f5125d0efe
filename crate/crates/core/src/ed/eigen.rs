//! Lowest eigenpairs of symmetric operators: thick-restart block Lanczos
//! with full reorthogonalization, and a dense fallback.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::fock::expr::Symmetry;
use crate::fock::sparse::{LinearOperator, SparseOperator};
use crate::lattice::LatticeVector;
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenOptions {
    /// Bound on `‖Av − λv‖` for every returned pair.
    pub tol: f64,
    pub block_size: usize,
    /// Largest basis before a restart.
    pub basis_size: usize,
    pub max_restarts: usize,
    /// Dimensions up to this use the dense solver.
    pub dense_threshold: usize,
    /// Use the Krylov solver regardless of dimension.
    pub force_krylov: bool,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-10,
            block_size: 2,
            basis_size: 60,
            max_restarts: 2000,
            dense_threshold: 2000,
            force_krylov: false,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenMethod {
    Dense,
    Krylov,
}

impl EigenMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            EigenMethod::Dense => "dense",
            EigenMethod::Krylov => "krylov",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult {
    pub sector: Option<LatticeVector>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub eigenvectors: Option<Vec<Vec<f64>>>,
    pub method: EigenMethod,
    pub matvecs: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    if a.len() > 1 << 14 {
        a.par_chunks(4096).zip(b.par_chunks(4096)).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>()).sum()
    } else {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    if y.len() > 1 << 14 {
        y.par_chunks_mut(4096).zip(x.par_chunks(4096)).for_each(|(ys, xs)| ys.iter_mut().zip(xs).for_each(|(u, v)| *u += alpha * v));
    } else {
        y.iter_mut().zip(x).for_each(|(u, v)| *u += alpha * v);
    }
}

/// `Σ_k c_k V_k`.
fn combine(vs: &[Vec<f64>], c: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    out.par_chunks_mut(4096).enumerate().for_each(|(ci, chunk)| {
        let off = ci * 4096;
        let len = chunk.len();
        for (k, v) in vs.iter().enumerate() {
            let ck = c[k];
            if ck != 0.0 {
                chunk.iter_mut().zip(&v[off..off + len]).for_each(|(o, x)| *o += ck * x);
            }
        }
    });
    out
}

/// Orthogonalizes `w` against `basis` twice; returns the norm before
/// normalization (zero-length output when `w` lies in the span).
fn orthonormalize(basis: &[Vec<f64>], w: &mut [f64]) -> f64 {
    let before = norm(w);
    for _ in 0..2 {
        let coeffs: Vec<f64> = basis.par_iter().map(|q| dot(q, w)).collect();
        for (q, c) in basis.iter().zip(coeffs) {
            axpy(-c, q, w);
        }
    }
    let after = norm(w);
    if after <= 1e-10 * before || after == 0.0 {
        return 0.0;
    }
    w.iter_mut().for_each(|x| *x /= after);
    after
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
}

/// The `m` lowest eigenpairs of a hermitian-flagged operator.
pub fn lowest_eigenvalues(a: &SparseOperator, m: usize, opts: &EigenOptions, vectors: bool) -> Result<EigenResult, Error> {
    if a.symmetry != Symmetry::Hermitian {
        return Err(Error::Config(format!("operator `{}` is not flagged hermitian", a.name)));
    }
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension { expected: a.nrows(), found: a.ncols() });
    }
    if a.nrows() <= opts.dense_threshold && !opts.force_krylov {
        check_m(m, a.nrows())?;
        return dense_eigen(&a.to_dense(), m, vectors, None);
    }
    lowest_eigenvalues_op(a, m, opts, vectors)
}

fn check_m(m: usize, n: usize) -> Result<(), Error> {
    if m == 0 || m > n {
        return Err(Error::Config(format!("requested {m} eigenvalues of a {n}-dimensional operator")));
    }
    Ok(())
}

/// Dense symmetric eigensolver on `(A + Aᵀ)/2`.
pub fn dense_eigen(a: &DMatrix<f64>, m: usize, vectors: bool, sector: Option<LatticeVector>) -> Result<EigenResult, Error> {
    let n = a.nrows();
    check_m(m, n)?;
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut vals = Vec::with_capacity(m);
    let mut res = Vec::with_capacity(m);
    let mut vecs = Vec::new();
    for &i in order.iter().take(m) {
        let v = eig.eigenvectors.column(i).clone_owned();
        let r = &sym * &v - &v * eig.eigenvalues[i];
        vals.push(eig.eigenvalues[i]);
        res.push(r.norm());
        if vectors {
            vecs.push(v.iter().copied().collect());
        }
    }
    Ok(EigenResult { sector, eigenvalues: vals, residuals: res, eigenvectors: vectors.then_some(vecs), method: EigenMethod::Dense, matvecs: 0 })
}

/// Appends `w` (orthonormal to `v`) and updates the projected matrix.
fn extend(a: &dyn LinearOperator, w: Vec<f64>, v: &mut Vec<Vec<f64>>, av: &mut Vec<Vec<f64>>, t: &mut DMatrix<f64>) -> Result<(), Error> {
    let mut aw = vec![0.0; w.len()];
    a.apply(&w, &mut aw)?;
    let k = v.len();
    let mut nt = DMatrix::<f64>::zeros(k + 1, k + 1);
    nt.view_mut((0, 0), (k, k)).copy_from(t);
    let col: Vec<f64> = v.par_iter().zip(av.par_iter()).map(|(q, aq)| 0.5 * (dot(q, &aw) + dot(aq, &w))).collect();
    for (i, c) in col.into_iter().enumerate() {
        nt[(i, k)] = c;
        nt[(k, i)] = c;
    }
    nt[(k, k)] = dot(&w, &aw);
    *t = nt;
    v.push(w);
    av.push(aw);
    Ok(())
}

/// Thick-restart block Lanczos on any symmetric linear operator.
///
/// The basis grows by the Ritz residuals of the lowest unconverged pairs
/// (which span the next block Krylov space), with two passes of classical
/// Gram–Schmidt against the whole basis. At `basis_size` the basis shrinks
/// to the lowest Ritz vectors.
pub fn lowest_eigenvalues_op(a: &dyn LinearOperator, m: usize, opts: &EigenOptions, vectors: bool) -> Result<EigenResult, Error> {
    let n = a.dim();
    check_m(m, n)?;
    let bs = opts.block_size.max(1);
    let max_basis = opts.basis_size.max(m + 2 * bs).min(n);
    let keep = (m + bs).max(max_basis / 2).min(max_basis.saturating_sub(bs)).max(m);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<Vec<f64>> = Vec::new();
    let mut av: Vec<Vec<f64>> = Vec::new();
    let mut matvecs = 0usize;
    let mut t = DMatrix::<f64>::zeros(0, 0);

    for _ in 0..bs.min(n) {
        let mut w = random_vector(&mut rng, n);
        while orthonormalize(&v, &mut w) == 0.0 {
            w = random_vector(&mut rng, n);
        }
        extend(a, w, &mut v, &mut av, &mut t)?;
        matvecs += 1;
    }

    let mut restarts = 0usize;
    let mut last_res;
    loop {
        let eig = SymmetricEigen::new(t.clone());
        let mut order: Vec<usize> = (0..t.nrows()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let want = m.min(order.len());
        let mut ritz = Vec::with_capacity(want);
        let mut unconverged = Vec::new();
        let exhausted = v.len() >= n;
        for (rank, &i) in order.iter().enumerate() {
            if rank >= (want + bs).min(order.len()) {
                break;
            }
            let y: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            let theta = eig.eigenvalues[i];
            let x = combine(&v, &y, n);
            let mut r = combine(&av, &y, n);
            axpy(-theta, &x, &mut r);
            let rn = norm(&r);
            if rank < want {
                ritz.push((theta, rn, x));
                if rn > opts.tol && !exhausted {
                    unconverged.push(r);
                }
            }
        }
        last_res = ritz.iter().map(|r| r.1).fold(0.0, f64::max);
        if (unconverged.is_empty() && ritz.len() == m) || exhausted {
            let vecs = vectors.then(|| ritz.iter().map(|r| r.2.clone()).collect());
            return Ok(EigenResult {
                sector: None,
                eigenvalues: ritz.iter().map(|r| r.0).collect(),
                residuals: ritz.iter().map(|r| r.1).collect(),
                eigenvectors: vecs,
                method: EigenMethod::Krylov,
                matvecs,
            });
        }
        if v.len() + bs > max_basis {
            restarts += 1;
            if restarts > opts.max_restarts {
                return Err(Error::NoConvergence { what: "block Lanczos", iterations: restarts, residual: last_res });
            }
            let cols: Vec<usize> = order.iter().take(keep).copied().collect();
            let ys: Vec<Vec<f64>> = cols.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
            let nv: Vec<Vec<f64>> = ys.par_iter().map(|y| combine(&v, y, n)).collect();
            let nav: Vec<Vec<f64>> = ys.par_iter().map(|y| combine(&av, y, n)).collect();
            v = nv;
            av = nav;
            t = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(cols.len(), cols.iter().map(|&i| eig.eigenvalues[i])));
        }
        let mut added = 0;
        for mut r in unconverged.into_iter().take(bs) {
            if v.len() >= n {
                break;
            }
            if orthonormalize(&v, &mut r) == 0.0 {
                let mut tries = 0;
                loop {
                    r = random_vector(&mut rng, n);
                    if orthonormalize(&v, &mut r) > 0.0 || tries > 10 {
                        break;
                    }
                    tries += 1;
                }
            }
            if norm(&r) > 0.5 {
                extend(a, r, &mut v, &mut av, &mut t)?;
                matvecs += 1;
                added += 1;
            }
        }
        if added == 0 && v.len() < n {
            let mut w = random_vector(&mut rng, n);
            if orthonormalize(&v, &mut w) > 0.0 {
                extend(a, w, &mut v, &mut av, &mut t)?;
        matvecs += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra_sparse::{CooMatrix, CsrMatrix};

    fn random_sparse(n: usize, seed: u64) -> SparseOperator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coo = CooMatrix::new(n, n);
        for i in 0..n {
            coo.push(i, i, rng.random::<f64>() * 10.0);
            for _ in 0..4 {
                let j = rng.random_range(0..n);
                if j != i {
                    let x = rng.random::<f64>() - 0.5;
                    coo.push(i, j, x);
                    coo.push(j, i, x);
                }
            }
        }
        SparseOperator::from_matrix("R", CsrMatrix::from(&coo), Symmetry::Hermitian)
    }

    #[test]
    fn krylov_matches_dense_on_random_sparse() {
        let a = random_sparse(500, 11);
        let opts = EigenOptions { force_krylov: true, ..Default::default() };
        let k = lowest_eigenvalues(&a, 6, &opts, false).unwrap();
        let d = dense_eigen(&a.to_dense(), 6, false, None).unwrap();
        for (x, y) in k.eigenvalues.iter().zip(&d.eigenvalues) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
        assert!(k.residuals.iter().all(|r| *r <= 1e-10));
        assert_eq!(k.method, EigenMethod::Krylov);
    }

    #[test]
    fn finds_degenerate_copies() {
        let d: Vec<f64> = (0..300).map(|i| [1.0, 1.0, 1.0, 2.0][i.min(3)] + if i >= 3 { i as f64 } else { 0.0 }).collect();
        let mut a = SparseOperator::from_diagonal("D", &d);
        // rotate to hide the structure
        let b = random_sparse(300, 5).scaled(1e-3);
        a = a.add(&b);
        a.symmetry = Symmetry::Hermitian;
        let opts = EigenOptions { force_krylov: true, ..Default::default() };
        let k = lowest_eigenvalues(&a, 4, &opts, false).unwrap();
        let e = dense_eigen(&a.to_dense(), 4, false, None).unwrap();
        for (x, y) in k.eigenvalues.iter().zip(&e.eigenvalues) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_unflagged() {
        let mut a = SparseOperator::identity(3);
        a.symmetry = Symmetry::None;
        assert!(lowest_eigenvalues(&a, 1, &EigenOptions::default(), false).is_err());
        let a = SparseOperator::identity(3);
        assert!(lowest_eigenvalues(&a, 4, &EigenOptions::default(), false).is_err());
    }

    #[test]
    fn small_dimension_exhausts_space() {
        let a = SparseOperator::from_diagonal("D", &[3.0, 1.0, 2.0]);
        let opts = EigenOptions { force_krylov: true, ..Default::default() };
        let k = lowest_eigenvalues(&a, 3, &opts, false).unwrap();
        assert!((k.eigenvalues[0] - 1.0).abs() < 1e-12 && (k.eigenvalues[2] - 3.0).abs() < 1e-12);
    }
}
