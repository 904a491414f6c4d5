//! Exhaustive sweeps of the module identities over the small `G` family.

use std::collections::BTreeMap;

use forge_core::convolution::{
    compose_alpha, convolve, involution, iota_embed, right_action, x_times, ConvBackend, ConvElement, ConvError,
    TwistedFunction,
};
use forge_core::groupoid::FiniteGroupoid;
use forge_core::scalar::{coeff, Coeff};

use crate::samples::small_g_family;

type Fun = BTreeMap<usize, Coeff>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Identity {
    /// `(x_i × f)*(x_j × f′) = δ_ij ι((f∘α⁻¹)*(f′∘α⁻¹))`
    Comp,
    /// `ι(f′)(x_i × f) = x_i × (f′f)`
    Comp2,
    /// `(x_i × f)·f′ = x_i × (f(f′∘α))`
    RightAction,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Tally {
    pub groupoid: String,
    pub checked: usize,
    pub failures: Vec<String>,
}

fn finite(x: ConvElement) -> Fun {
    match x {
        ConvElement::Finite(m) => m,
        other => unreachable!("finite backend returned {other:?}"),
    }
}

fn conv_g(g: &FiniteGroupoid, a: &Fun, b: &Fun) -> Result<Fun, ConvError> {
    let b0 = ConvBackend::Finite(g);
    Ok(finite(convolve(&b0, &ConvElement::finite(a.clone()), &ConvElement::finite(b.clone()))?))
}

fn star_g(g: &FiniteGroupoid, a: &Fun) -> Result<Fun, ConvError> {
    Ok(finite(involution(&ConvBackend::Finite(g), &ConvElement::finite(a.clone()))?))
}

/// Every point mass pair with coefficients `1 + 2i`, `3 − i`, and `i, j ≤ 3`.
pub fn sweep(which: Identity) -> Result<Vec<Tally>, ConvError> {
    let (cf, cf2) = (coeff(1, 2), coeff(3, -1));
    let mut out = Vec::new();
    for (name, g, alpha) in small_g_family() {
        let b = ConvBackend::Hinf { g: &g, alpha: &alpha };
        let mut t = Tally {
            groupoid: name.to_string(),
            checked: 0,
            failures: Vec::new(),
        };
        for p in 0..g.len() {
            for q in 0..g.len() {
                let f: Fun = BTreeMap::from([(p, cf)]);
                let f2: Fun = BTreeMap::from([(q, cf2)]);
                for i in 1..=3 {
                    let mut record = |ok: bool, what: String| {
                        t.checked += 1;
                        if !ok {
                            t.failures.push(what);
                        }
                    };
                    match which {
                        Identity::Comp => {
                            for j in 1..=3 {
                                let lhs = convolve(&b, &involution(&b, &x_times(i, &f))?, &x_times(j, &f2))?;
                                let rhs = if i == j {
                                    let fa = compose_alpha(&f, &alpha, -1);
                                    let f2a = compose_alpha(&f2, &alpha, -1);
                                    iota_embed(&conv_g(&g, &star_g(&g, &fa)?, &f2a)?)
                                } else {
                                    ConvElement::Twisted(TwistedFunction::zero())
                                };
                                record(lhs == rhs, format!("p={p} q={q} i={i} j={j}"));
                            }
                        }
                        Identity::Comp2 => {
                            let lhs = convolve(&b, &iota_embed(&f2), &x_times(i, &f))?;
                            record(lhs == x_times(i, &conv_g(&g, &f2, &f)?), format!("p={p} q={q} i={i}"));
                        }
                        Identity::RightAction => {
                            let lhs = right_action(&b, &x_times(i, &f), &f2)?;
                            let rhs = x_times(i, &conv_g(&g, &f, &compose_alpha(&f2, &alpha, 1))?);
                            record(lhs == rhs, format!("p={p} q={q} i={i}"));
                        }
                    }
                }
            }
        }
        out.push(t);
    }
    Ok(out)
}
