//! Products of creation and annihilation operators with real coefficients.

use std::collections::BTreeMap;
use std::fmt;

use super::basis::{FockBasis, ModeSet};
use crate::lattice::LatticeVector;

/// A single ladder operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    /// `a_p†`
    Create(LatticeVector),
    /// `a_p`
    Annihilate(LatticeVector),
}

impl Op {
    pub fn label(&self) -> LatticeVector {
        match self {
            Op::Create(p) | Op::Annihilate(p) => *p,
        }
    }

    pub fn adjoint(&self) -> Op {
        match self {
            Op::Create(p) => Op::Annihilate(*p),
            Op::Annihilate(p) => Op::Create(*p),
        }
    }
}

/// `a_p†`.
pub fn cr(p: LatticeVector) -> Op {
    Op::Create(p)
}

/// `a_p`.
pub fn an(p: LatticeVector) -> Op {
    Op::Annihilate(p)
}

/// `coeff · o₁ o₂ ⋯ o_k`, acting right to left. An empty product is the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub ops: Vec<Op>,
}

impl Monomial {
    pub fn new(coeff: f64, ops: Vec<Op>) -> Self {
        Monomial { coeff, ops }
    }

    pub fn adjoint(&self) -> Monomial {
        Monomial { coeff: self.coeff, ops: self.ops.iter().rev().map(Op::adjoint).collect() }
    }

    /// All creations precede all annihilations.
    pub fn is_normal_ordered(&self) -> bool {
        let first_an = self.ops.iter().position(|o| matches!(o, Op::Annihilate(_))).unwrap_or(self.ops.len());
        self.ops[first_an..].iter().all(|o| matches!(o, Op::Annihilate(_)))
    }

    /// `(Σ created − Σ annihilated, #created − #annihilated)`.
    pub fn charge(&self) -> (LatticeVector, i32) {
        let mut p = LatticeVector::ZERO;
        let mut n = 0;
        for o in &self.ops {
            match o {
                Op::Create(q) => {
                    p = p + *q;
                    n += 1;
                }
                Op::Annihilate(q) => {
                    p = p - *q;
                    n -= 1;
                }
            }
        }
        (p, n)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+e}", self.coeff)?;
        for o in &self.ops {
            match o {
                Op::Create(p) => write!(f, " a†{p}")?,
                Op::Annihilate(p) => write!(f, " a{p}")?,
            }
        }
        Ok(())
    }
}

/// Structural symmetry recorded when an expression is built as `X ± h.c.`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    Hermitian,
    AntiHermitian,
    None,
}

/// Sum of monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorExpression {
    pub name: String,
    pub terms: Vec<Monomial>,
    pub symmetry: Symmetry,
    /// Terms skipped because a label left the mode list.
    pub dropped: usize,
}

impl OperatorExpression {
    pub fn new(name: impl Into<String>) -> Self {
        OperatorExpression { name: name.into(), terms: Vec::new(), symmetry: Symmetry::None, dropped: 0 }
    }

    pub fn identity(name: impl Into<String>, c: f64) -> Self {
        let mut e = Self::new(name);
        e.push(c, vec![]);
        e.symmetry = Symmetry::Hermitian;
        e
    }

    pub fn push(&mut self, coeff: f64, ops: Vec<Op>) {
        if coeff != 0.0 {
            self.terms.push(Monomial::new(coeff, ops));
        }
    }

    /// Adds the monomial when every label lies in `modes`; counts it as
    /// dropped otherwise.
    pub fn push_in(&mut self, modes: &ModeSet, coeff: f64, ops: Vec<Op>) {
        if ops.iter().all(|o| modes.contains(o.label())) {
            self.push(coeff, ops);
        } else if coeff != 0.0 {
            self.dropped += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn adjoint(&self) -> Self {
        OperatorExpression {
            name: format!("{}†", self.name),
            terms: self.terms.iter().map(Monomial::adjoint).collect(),
            symmetry: self.symmetry,
            dropped: self.dropped,
        }
    }

    /// `X + h.c.`
    pub fn plus_hc(mut self) -> Self {
        let adj: Vec<_> = self.terms.iter().map(Monomial::adjoint).collect();
        self.terms.extend(adj);
        self.dropped *= 2;
        self.symmetry = Symmetry::Hermitian;
        self
    }

    /// `X − h.c.`
    pub fn minus_hc(mut self) -> Self {
        let adj: Vec<_> = self.terms.iter().map(|m| {
            let mut a = m.adjoint();
            a.coeff = -a.coeff;
            a
        }).collect();
        self.terms.extend(adj);
        self.dropped *= 2;
        self.symmetry = Symmetry::AntiHermitian;
        self
    }

    pub fn scaled(mut self, c: f64) -> Self {
        for t in &mut self.terms {
            t.coeff *= c;
        }
        self
    }

    /// Sum; the symmetry survives only if both agree.
    pub fn add(mut self, other: OperatorExpression) -> Self {
        if self.symmetry != other.symmetry {
            self.symmetry = Symmetry::None;
        }
        self.terms.extend(other.terms);
        self.dropped += other.dropped;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Merges identical normal-ordered monomials (creators and annihilators
    /// each sorted); other monomials are kept as they are.
    pub fn simplify(mut self) -> Self {
        let mut merged: BTreeMap<Vec<Op>, f64> = BTreeMap::new();
        let mut rest = Vec::new();
        for t in self.terms.drain(..) {
            if t.is_normal_ordered() {
                let mut ops = t.ops;
                let split = ops.iter().position(|o| matches!(o, Op::Annihilate(_))).unwrap_or(ops.len());
                ops[..split].sort();
                ops[split..].sort();
                *merged.entry(ops).or_insert(0.0) += t.coeff;
            } else {
                rest.push(t);
            }
        }
        self.terms = merged.into_iter().filter(|(_, c)| *c != 0.0).map(|(ops, c)| Monomial::new(c, ops)).collect();
        self.terms.extend(rest);
        self
    }

    /// Change of total momentum and particle number, if all terms agree.
    pub fn charge(&self) -> Option<(LatticeVector, i32)> {
        let mut it = self.terms.iter().map(Monomial::charge);
        let first = it.next().unwrap_or((LatticeVector::ZERO, 0));
        it.all(|c| c == first).then_some(first)
    }

    pub fn conserves_momentum(&self) -> bool {
        self.terms.iter().all(|t| t.charge().0.is_zero())
    }

    pub fn is_normal_ordered(&self) -> bool {
        self.terms.iter().all(Monomial::is_normal_ordered)
    }
}

/// Result of applying a monomial to a basis state.
#[derive(Clone, Debug, PartialEq)]
pub struct Application {
    pub occupation: Vec<u8>,
    pub amplitude: f64,
}

/// `m|state⟩`: `a_p|…n_p…⟩ = √n_p|…n_p−1…⟩`, `a_p†|…n_p…⟩ = √(n_p+1)|…n_p+1…⟩`.
///
/// Returns `None` when the product annihilates the state. Labels outside the
/// mode list are reported through `dropped`.
pub fn apply_monomial(modes: &ModeSet, state: &[u8], m: &Monomial, dropped: &mut usize) -> Option<Application> {
    let mut occ = state.to_vec();
    let mut amp = m.coeff;
    for o in m.ops.iter().rev() {
        let Some(i) = modes.index_of(o.label()) else {
            *dropped += 1;
            return None;
        };
        match o {
            Op::Annihilate(_) => {
                if occ[i] == 0 {
                    return None;
                }
                amp *= (occ[i] as f64).sqrt();
                occ[i] -= 1;
            }
            Op::Create(_) => {
                if occ[i] == u8::MAX {
                    *dropped += 1;
                    return None;
                }
                occ[i] += 1;
                amp *= (occ[i] as f64).sqrt();
            }
        }
    }
    Some(Application { occupation: occ, amplitude: amp })
}

/// `m` applied to state `i` of `basis`, as a list of target states.
pub fn apply_to_basis_state(basis: &FockBasis, i: usize, m: &Monomial) -> (Vec<Application>, usize) {
    let mut dropped = 0;
    let out = apply_monomial(basis.modes(), basis.state(i), m, &mut dropped).into_iter().collect();
    (out, dropped)
}
