//! Exponential-vector products by Arnoldi iteration and the conjugated
//! action `v ↦ e^{−B} H e^{B} v`.

use nalgebra::DMatrix;

use super::expr::Symmetry;
use super::sparse::{LinearOperator, SparseOperator};
use crate::Error;

/// Krylov dimension per substep.
pub const DEFAULT_KRYLOV_DIM: usize = 30;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `e^{tA} v` to absolute accuracy `tol·‖v‖`.
///
/// Time steps shrink until the a-posteriori Arnoldi error estimate
/// `β h_{m+1,m} |(e^{τH_m})_{m,1}|` meets the step's share of `tol`.
pub fn expmv(a: &dyn LinearOperator, t: f64, v: &[f64], tol: f64, krylov_dim: usize) -> Result<Vec<f64>, Error> {
    let n = a.dim();
    if v.len() != n {
        return Err(Error::Dimension { expected: n, found: v.len() });
    }
    let mut w = v.to_vec();
    let v_norm = norm(v);
    if v_norm == 0.0 || t == 0.0 {
        return Ok(w);
    }
    let m_max = krylov_dim.max(2).min(n);
    let mut done = 0.0f64;
    let mut dt = t;
    let mut rejected = 0usize;
    let mut scratch = vec![0.0; n];
    while done.abs() < t.abs() {
        if (t - done).abs() < dt.abs() {
            dt = t - done;
        }
        let beta = norm(&w);
        if beta == 0.0 {
            return Ok(w);
        }
        let mut basis: Vec<Vec<f64>> = vec![w.iter().map(|x| x / beta).collect()];
        let mut h = DMatrix::<f64>::zeros(m_max + 1, m_max);
        let mut m = m_max;
        let mut breakdown = false;
        for j in 0..m_max {
            a.apply(&basis[j], &mut scratch)?;
            let mut r = scratch.clone();
            for _ in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let c = dot(q, &r);
                    h[(i, j)] += c;
                    r.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let hn = norm(&r);
            h[(j + 1, j)] = hn;
            if hn <= 1e-14 * beta.max(1.0) {
                m = j + 1;
                breakdown = true;
                break;
            }
            r.iter_mut().for_each(|x| *x /= hn);
            basis.push(r);
        }
        loop {
            let hm = h.view((0, 0), (m, m)).clone_owned() * dt;
            let e = hm.exp();
            let err = if breakdown { 0.0 } else { beta * h[(m, m - 1)] * e[(m - 1, 0)].abs() * dt.abs() };
            let allowed = tol * v_norm * (dt / t).abs();
            if err <= allowed || dt.abs() < t.abs() * 1e-12 {
                if err > allowed {
                    return Err(Error::NoConvergence { what: "Krylov exponential", iterations: rejected, residual: err });
                }
                w.iter_mut().for_each(|x| *x = 0.0);
                for (k, q) in basis.iter().take(m).enumerate() {
                    let c = beta * e[(k, 0)];
                    w.iter_mut().zip(q).for_each(|(x, y)| *x += c * y);
                }
                done += dt;
                if err < 0.1 * allowed {
                    dt *= 2.0;
                }
                break;
            }
            dt *= 0.5;
            rejected += 1;
            if rejected > 10_000 {
                return Err(Error::NoConvergence { what: "Krylov exponential", iterations: rejected, residual: err });
            }
        }
    }
    Ok(w)
}

/// Action of `e^{−B} H e^{B}` for antihermitian `B`.
pub struct ConjugatedOperator<'a> {
    pub h: &'a dyn LinearOperator,
    pub b: &'a SparseOperator,
    pub tol: f64,
    pub krylov_dim: usize,
}

/// Checks the generator and wraps the conjugated action.
pub fn krylov_conjugate<'a>(h: &'a dyn LinearOperator, b: &'a SparseOperator, tol: f64) -> Result<ConjugatedOperator<'a>, Error> {
    if b.symmetry != Symmetry::AntiHermitian {
        return Err(Error::Config(format!("generator `{}` is not flagged antihermitian", b.name)));
    }
    if h.dim() != b.nrows() || b.nrows() != b.ncols() {
        return Err(Error::Dimension { expected: h.dim(), found: b.nrows() });
    }
    Ok(ConjugatedOperator { h, b, tol, krylov_dim: DEFAULT_KRYLOV_DIM })
}

impl LinearOperator for ConjugatedOperator<'_> {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), Error> {
        let u = expmv(self.b, 1.0, x, self.tol, self.krylov_dim)?;
        let mut hu = vec![0.0; u.len()];
        self.h.apply(&u, &mut hu)?;
        let out = expmv(self.b, -1.0, &hu, self.tol, self.krylov_dim)?;
        y.copy_from_slice(&out);
        Ok(())
    }
}

/// `e^{B_1} e^{B_2} ⋯ e^{B_k} v`.
pub fn apply_exponentials(generators: &[&SparseOperator], v: &[f64], tol: f64) -> Result<Vec<f64>, Error> {
    let mut w = v.to_vec();
    for b in generators.iter().rev() {
        w = expmv(*b, 1.0, &w, tol, DEFAULT_KRYLOV_DIM)?;
    }
    Ok(w)
}
