//! Exact convolution `*`-algebras. Finite groupoids use finitely supported
//! functions on elements; `G^∞_α` uses finite sums of `c·1_{U×{g}}` for
//! basic bisections `U` of `H_∞`, kept in a canonical form so that equality
//! is decidable.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::germ::{bisection_product, hinf_word, reduce_pair, BasicBisection};
use crate::graph::{Eid, PathWord, Vid};
use crate::groupoid::{FiniteGroupoid, GroupoidAutomorphism};
use crate::scalar::{Coeff, CoeffMatrix};
use crate::twisted::TwistedProduct;

type Word = PathWord<Vid, Eid>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConvError {
    #[error("element does not belong to this backend")]
    MixedBackends,
    #[error("regular representations need a finite groupoid")]
    SymbolicRegularRepresentation,
    #[error("element {0} is not a unit")]
    NotAUnit(usize),
    #[error("element {0} does not exist")]
    NoSuchElement(usize),
    #[error("x* y is not supported on the units of H_∞; this is a bug")]
    EscapesEmbedding,
}

/// Value `rest` on every tail not continued by a child.
#[derive(Debug, Clone, PartialEq, Eq)]
struct TailTree {
    rest: Coeff,
    children: BTreeMap<Eid, TailTree>,
}

impl TailTree {
    fn leaf(rest: Coeff) -> Self {
        TailTree {
            rest,
            children: BTreeMap::new(),
        }
    }

    fn add_everywhere(&mut self, c: Coeff) {
        self.rest += c;
        for ch in self.children.values_mut() {
            ch.add_everywhere(c);
        }
    }

    /// Adds `c` on `Z(κ∖F)` relative to this node.
    fn add(&mut self, kappa: &[Eid], excluded: &BTreeSet<Eid>, c: Coeff) {
        match kappa.split_first() {
            Some((e, rest)) => {
                let inherit = self.rest;
                self.children
                    .entry(*e)
                    .or_insert_with(|| TailTree::leaf(inherit))
                    .add(rest, excluded, c);
            }
            None => {
                for e in excluded {
                    let inherit = self.rest;
                    self.children.entry(*e).or_insert_with(|| TailTree::leaf(inherit));
                }
                self.rest += c;
                for (e, ch) in self.children.iter_mut() {
                    if !excluded.contains(e) {
                        ch.add_everywhere(c);
                    }
                }
            }
        }
    }

    fn canonicalize(&mut self) {
        for ch in self.children.values_mut() {
            ch.canonicalize();
        }
        let rest = self.rest;
        self.children.retain(|_, ch| !(ch.children.is_empty() && ch.rest == rest));
    }

    fn is_zero(&self) -> bool {
        self.rest.is_zero() && self.children.is_empty()
    }

    fn eval(&self, tail: &[Eid]) -> Coeff {
        match tail.split_first().and_then(|(e, rest)| self.children.get(e).map(|ch| (ch, rest))) {
            Some((ch, rest)) => ch.eval(rest),
            None => self.rest,
        }
    }

    fn pieces(&self, prefix: &mut Vec<Eid>, out: &mut Vec<(Vec<Eid>, BTreeSet<Eid>, Coeff)>) {
        if !self.rest.is_zero() {
            out.push((prefix.clone(), self.children.keys().copied().collect(), self.rest));
        }
        for (e, ch) in &self.children {
            prefix.push(*e);
            ch.pieces(prefix, out);
            prefix.pop();
        }
    }
}

/// A function on `G^∞_α` in canonical form: per reduced root pair
/// `(α₀, β₀)` and G-element `g`, a tail tree over `Z(α₀κ, β₀κ)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TwistedFunction {
    terms: BTreeMap<(Word, Word, usize), TailTree>,
}

impl TwistedFunction {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn indicator(b: &BasicBisection<Vid, Eid>, g: usize, c: Coeff) -> Self {
        let mut f = Self::zero();
        f.add_piece(b, g, c);
        f
    }

    /// `+= c·1_{b×{g}}`.
    pub fn add_piece(&mut self, b: &BasicBisection<Vid, Eid>, g: usize, c: Coeff) {
        if c.is_zero() {
            return;
        }
        let (a0, b0, kappa) = reduce_pair(&b.alpha, &b.beta);
        let key = (a0, b0, g);
        let tree = self
            .terms
            .entry(key.clone())
            .or_insert_with(|| TailTree::leaf(Coeff::zero()));
        tree.add(kappa.edges(), &b.excluded, c);
        tree.canonicalize();
        if tree.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (b, g, c) in other.pieces() {
            out.add_piece(&b, g, c);
        }
        out
    }

    pub fn scale(&self, c: Coeff) -> Self {
        let mut out = Self::zero();
        for (b, g, x) in self.pieces() {
            out.add_piece(&b, g, x * c);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Disjoint decomposition into `c·1_{Z((α,β)∖F)×{g}}`.
    pub fn pieces(&self) -> Vec<(BasicBisection<Vid, Eid>, usize, Coeff)> {
        let mut out = Vec::new();
        for ((a0, b0, g), tree) in &self.terms {
            let mut raw = Vec::new();
            tree.pieces(&mut Vec::new(), &mut raw);
            for (kappa, excluded, c) in raw {
                let k: Vec<usize> = kappa.iter().map(|e| e.0).collect();
                let kw = hinf_word(&k);
                let b = BasicBisection {
                    alpha: a0.concat(&kw).expect("one vertex"),
                    beta: b0.concat(&kw).expect("one vertex"),
                    excluded,
                };
                out.push((b, *g, c));
            }
        }
        out
    }

    /// Value at the germ `(x, |x| − |y|, y)` of finite words, paired with `g`.
    pub fn eval(&self, x: &Word, y: &Word, g: usize) -> Coeff {
        // reduced root pairs are unique, so the germ sits under (a0, b0) or nowhere
        let (a0, b0, kappa) = reduce_pair(x, y);
        match self.terms.get(&(a0, b0, g)) {
            Some(t) => t.eval(kappa.edges()),
            None => Coeff::zero(),
        }
    }
}

impl fmt::Display for TwistedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pieces = self.pieces();
        if pieces.is_empty() {
            return f.write_str("0");
        }
        for (i, (b, g, c)) in pieces.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c})·1[{b} x {{g{g}}}]")?;
        }
        Ok(())
    }
}

/// A convolution algebra element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConvElement {
    /// Finitely supported function on the elements of a finite groupoid.
    Finite(BTreeMap<usize, Coeff>),
    /// Function on `G^∞_α`.
    Twisted(TwistedFunction),
}

/// Which groupoid the elements live on.
#[derive(Debug, Clone, Copy)]
pub enum ConvBackend<'a> {
    Finite(&'a FiniteGroupoid),
    Hinf {
        g: &'a FiniteGroupoid,
        alpha: &'a GroupoidAutomorphism,
    },
}

fn clean(mut m: BTreeMap<usize, Coeff>) -> BTreeMap<usize, Coeff> {
    m.retain(|_, c| !c.is_zero());
    m
}

pub fn delta(g: usize) -> ConvElement {
    ConvElement::Finite(BTreeMap::from([(g, Coeff::new(1.into(), 0.into()))]))
}

impl ConvElement {
    pub fn finite(m: BTreeMap<usize, Coeff>) -> Self {
        ConvElement::Finite(clean(m))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ConvElement::Finite(m) => m.is_empty(),
            ConvElement::Twisted(t) => t.is_zero(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, ConvError> {
        match (self, other) {
            (ConvElement::Finite(a), ConvElement::Finite(b)) => {
                let mut m = a.clone();
                for (k, v) in b {
                    *m.entry(*k).or_insert_with(Coeff::zero) += v;
                }
                Ok(ConvElement::finite(m))
            }
            (ConvElement::Twisted(a), ConvElement::Twisted(b)) => Ok(ConvElement::Twisted(a.add(b))),
            _ => Err(ConvError::MixedBackends),
        }
    }

    pub fn scale(&self, c: Coeff) -> Self {
        match self {
            ConvElement::Finite(a) => ConvElement::finite(a.iter().map(|(k, v)| (*k, v * c)).collect()),
            ConvElement::Twisted(t) => ConvElement::Twisted(t.scale(c)),
        }
    }
}

fn check_finite(g: &FiniteGroupoid, m: &BTreeMap<usize, Coeff>) -> Result<(), ConvError> {
    match m.keys().find(|&&k| k >= g.len()) {
        Some(&k) => Err(ConvError::NoSuchElement(k)),
        None => Ok(()),
    }
}

/// `(ξ * η)(g) = Σ_{hk = g} ξ(h) η(k)`.
pub fn convolve(b: &ConvBackend<'_>, x: &ConvElement, y: &ConvElement) -> Result<ConvElement, ConvError> {
    match (b, x, y) {
        (ConvBackend::Finite(g), ConvElement::Finite(a), ConvElement::Finite(c)) => {
            check_finite(g, a)?;
            check_finite(g, c)?;
            let mut out: BTreeMap<usize, Coeff> = BTreeMap::new();
            for (&h, &u) in a {
                for (&k, &v) in c {
                    if let Some(p) = g.mul(h, k) {
                        *out.entry(p).or_insert_with(Coeff::zero) += u * v;
                    }
                }
            }
            Ok(ConvElement::finite(out))
        }
        (ConvBackend::Hinf { g, alpha }, ConvElement::Twisted(a), ConvElement::Twisted(c)) => {
            let mut out = TwistedFunction::zero();
            let right = c.pieces();
            for (u, g1, c1) in a.pieces() {
                let d = u.degree();
                for (v, g2, c2) in &right {
                    let g2t = alpha.apply_pow(*g2, -d);
                    let Some(gg) = g.mul(g1, g2t) else { continue };
                    for p in bisection_product(&u, v).pieces() {
                        out.add_piece(p, gg, c1 * c2);
                    }
                }
            }
            Ok(ConvElement::Twisted(out))
        }
        _ => Err(ConvError::MixedBackends),
    }
}

/// `ξ*(g) = conj(ξ(g⁻¹))`; on `G^∞_α`, `(U×{g})⁻¹ = U⁻¹ × {α^{deg U}(g⁻¹)}`.
pub fn involution(b: &ConvBackend<'_>, x: &ConvElement) -> Result<ConvElement, ConvError> {
    match (b, x) {
        (ConvBackend::Finite(g), ConvElement::Finite(a)) => {
            check_finite(g, a)?;
            Ok(ConvElement::finite(a.iter().map(|(&k, v)| (g.inv(k), v.conj())).collect()))
        }
        (ConvBackend::Hinf { g, alpha }, ConvElement::Twisted(t)) => {
            let mut out = TwistedFunction::zero();
            for (u, gg, c) in t.pieces() {
                out.add_piece(&u.inverse(), alpha.apply_pow(g.inv(gg), u.degree()), c.conj());
            }
            Ok(ConvElement::Twisted(out))
        }
        _ => Err(ConvError::MixedBackends),
    }
}

/// `1_{H⁰} × f` on a finite twisted product.
pub fn iota_embed_finite(tp: &TwistedProduct, f: &BTreeMap<usize, Coeff>) -> Result<ConvElement, ConvError> {
    check_finite(tp.g(), f)?;
    let mut out = BTreeMap::new();
    for u in tp.h().units() {
        for (&g, &c) in f {
            out.insert(tp.id(u, g), c);
        }
    }
    Ok(ConvElement::finite(out))
}

/// `ι(f) = Σ_g f(g)·1_{Z(v,v)×{g}}` on `G^∞_α`.
pub fn iota_embed(f: &BTreeMap<usize, Coeff>) -> ConvElement {
    let v = hinf_word(&[]);
    let unit = BasicBisection::plain(v.clone(), v).expect("vertex");
    let mut out = TwistedFunction::zero();
    for (&g, &c) in f {
        out.add_piece(&unit, g, c);
    }
    ConvElement::Twisted(out)
}

/// `x_i × f = Σ_g f(g)·1_{Z(e_i, v)×{g}}`.
pub fn x_times(i: usize, f: &BTreeMap<usize, Coeff>) -> ConvElement {
    let u = BasicBisection::plain(hinf_word(&[i]), hinf_word(&[])).expect("one vertex");
    let mut out = TwistedFunction::zero();
    for (&g, &c) in f {
        out.add_piece(&u, g, c);
    }
    ConvElement::Twisted(out)
}

/// `x · ι(f′)`, the right module action.
pub fn right_action(b: &ConvBackend<'_>, x: &ConvElement, fprime: &BTreeMap<usize, Coeff>) -> Result<ConvElement, ConvError> {
    convolve(b, x, &iota_embed(fprime))
}

/// `ι⁻¹(x* * y)`.
pub fn module_inner_product(
    b: &ConvBackend<'_>,
    x: &ConvElement,
    y: &ConvElement,
) -> Result<BTreeMap<usize, Coeff>, ConvError> {
    let p = convolve(b, &involution(b, x)?, y)?;
    let ConvElement::Twisted(t) = p else {
        return Err(ConvError::MixedBackends);
    };
    let v = hinf_word(&[]);
    let mut out = BTreeMap::new();
    for ((a0, b0, g), tree) in &t.terms {
        if *a0 != v || *b0 != v || !tree.children.is_empty() {
            return Err(ConvError::EscapesEmbedding);
        }
        out.insert(*g, tree.rest);
    }
    Ok(out)
}

/// `f ∘ α^k` on the elements of `G`.
pub fn compose_alpha(f: &BTreeMap<usize, Coeff>, alpha: &GroupoidAutomorphism, k: i64) -> BTreeMap<usize, Coeff> {
    // (f∘α^k)(g) = f(α^k g), so the value at α^{-k}(h) is f(h)
    f.iter().map(|(&h, &c)| (alpha.apply_pow(h, -k), c)).collect()
}

/// `R_u(ξ)` on `ℓ²(G_u)`, `G_u = {g : s(g) = u}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegRepMatrix {
    pub basis: Vec<usize>,
    pub matrix: CoeffMatrix,
}

/// `R_u(ξ)δ_g = Σ_h ξ(h) δ_{hg}`.
pub fn regular_representation(b: &ConvBackend<'_>, u: usize, x: &ConvElement) -> Result<RegRepMatrix, ConvError> {
    let (ConvBackend::Finite(g), ConvElement::Finite(xi)) = (b, x) else {
        return Err(match b {
            ConvBackend::Finite(_) => ConvError::MixedBackends,
            ConvBackend::Hinf { .. } => ConvError::SymbolicRegularRepresentation,
        });
    };
    if u >= g.len() {
        return Err(ConvError::NoSuchElement(u));
    }
    if !g.is_unit(u) {
        return Err(ConvError::NotAUnit(u));
    }
    check_finite(g, xi)?;
    let basis: Vec<usize> = (0..g.len()).filter(|&k| g.s(k) == u).collect();
    let pos: BTreeMap<usize, usize> = basis.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let mut matrix = CoeffMatrix::zeros(basis.len(), basis.len());
    for (col, &k) in basis.iter().enumerate() {
        for (&h, &c) in xi {
            if let Some(p) = g.mul(h, k) {
                matrix.add_at(pos[&p], col, c);
            }
        }
    }
    Ok(RegRepMatrix { basis, matrix })
}

/// Brute-force convolution by evaluation at germs of finite words: for each
/// piece of `x` whose range contains `r`, the unique element over `r`
/// determines the factorisation. Used to cross-check [`convolve`].
pub fn eval_convolution(
    g: &FiniteGroupoid,
    alpha: &GroupoidAutomorphism,
    x: &TwistedFunction,
    y: &TwistedFunction,
    r: &Word,
    s: &Word,
    target: usize,
) -> Coeff {
    let mut total = Coeff::zero();
    for (u, g1, c1) in x.pieces() {
        // the element of u with range r: (αw, βw) with r = αw
        let Some(w) = r.strip_prefix(&u.alpha) else { continue };
        if w.first_edge().is_some_and(|e| u.excluded.contains(e)) {
            continue;
        }
        let mid = u.beta.concat(&w).expect("one vertex");
        let d = u.degree();
        if g.r(g1) != g.r(target) {
            continue;
        }
        // g = g1 · α^{-d}(g2)  ⇒  g2 = α^{d}(g1⁻¹ g)
        let Some(q) = g.mul(g.inv(g1), target) else { continue };
        let g2 = alpha.apply_pow(q, d);
        total += c1 * y.eval(&mid, s, g2);
    }
    total
}
