//! Constraint triples over the template coefficients.
//!
//! Each significant label contributes two families of conditions: the
//! measure must be non-negative wherever the label's invariant holds, and
//! it must dominate every piece of the one-step expansion. A triple records
//! one such condition as a conjunction of linear premises over program
//! variables together with a polynomial obligation whose coefficients are
//! affine in the template variables; the triple claims the obligation is
//! non-negative wherever the premise holds.
//!
//! Premises are pruned twice: unsatisfiable conjunctions (checked with the
//! floor-aware emptiness test) drop the whole triple, and atoms entailed by
//! the rest of their conjunction are removed one at a time. The redundancy
//! pass treats floored subexpressions as opaque, so it never invents
//! relations the later abstraction stage is responsible for.

use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::cfg::Cfg;
use crate::expansion::{EmptyCache, Expansion};
use crate::frontend::{Conjunct, FunId, Label, NormExpr, Program};
use crate::invariant;
use crate::poly::{render_poly, OpKind, PolyExpr};
use crate::template::Templates;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripleKind {
    /// Non-negativity of the measure under the label invariant.
    Nonneg,
    /// Dominance over one expansion piece, identified by branch and piece
    /// position for dumps.
    Step { branch: usize, piece: usize },
}

#[derive(Debug, Clone)]
pub struct Triple {
    pub fun: FunId,
    pub label: Label,
    pub kind: TripleKind,
    /// Conjunction of `e >= 0` premises, redundancy-pruned.
    pub premise: Vec<NormExpr>,
    /// Polynomial required non-negative under the premise.
    pub obligation: PolyExpr,
}

pub fn generate(cfg: &Cfg, templates: &Templates, ex: &Expansion) -> Vec<Triple> {
    let mut cache = EmptyCache::new();
    let mut out = Vec::new();
    let minus_one = -BigRational::one();
    for &l in &cfg.significant {
        let fun = cfg.label_fun[&l];
        let inv = cfg.annotation(l);
        let eta = &templates.etas[&l];
        for disj in &inv.disjuncts {
            push_triple(
                &mut out,
                &mut cache,
                fun,
                l,
                TripleKind::Nonneg,
                disj.atoms.clone(),
                eta.clone(),
            );
        }
        for (bi, branch) in ex.rhs[&l].branches.iter().enumerate() {
            for (pi, (guard, h)) in branch.pieces.iter().enumerate() {
                let obligation = eta.add(&h.scale(&minus_one));
                for gd in &guard.disjuncts {
                    for id in &inv.disjuncts {
                        let Some(c) = id.and(gd) else { continue };
                        push_triple(
                            &mut out,
                            &mut cache,
                            fun,
                            l,
                            TripleKind::Step { branch: bi, piece: pi },
                            c.atoms,
                            obligation.clone(),
                        );
                    }
                }
            }
        }
    }
    out
}

fn push_triple(
    out: &mut Vec<Triple>,
    cache: &mut EmptyCache,
    fun: FunId,
    label: Label,
    kind: TripleKind,
    atoms: Vec<NormExpr>,
    obligation: PolyExpr,
) {
    let Some(conj) = Conjunct::new(atoms) else { return };
    if cache.is_empty(&conj) {
        return;
    }
    if vacuous(&obligation) {
        return;
    }
    let premise = simplify_premise(conj.atoms);
    out.push(Triple { fun, label, kind, premise, obligation });
}

/// An obligation with no template variables and a non-negative constant
/// value holds outright.
fn vacuous(obligation: &PolyExpr) -> bool {
    let template_free = obligation.terms.values().all(|c| c.linear.is_empty());
    if !template_free {
        return false;
    }
    if obligation.is_zero() {
        return true;
    }
    match obligation.terms.iter().next() {
        Some((m, c)) if obligation.terms.len() == 1 && m.is_one() => {
            !c.constant.is_negative()
        }
        _ => false,
    }
}

/// Removes each atom entailed by the rest of its conjunction, scanning the
/// canonical order once. Floored subexpressions are treated as opaque.
fn simplify_premise(mut atoms: Vec<NormExpr>) -> Vec<NormExpr> {
    let mut i = 0;
    while i < atoms.len() {
        let mut rest: Vec<NormExpr> = Vec::with_capacity(atoms.len() - 1);
        for (j, a) in atoms.iter().enumerate() {
            if j != i {
                rest.push(a.clone());
            }
        }
        if invariant::entails_opaque(&rest, &atoms[i]) {
            atoms.remove(i);
        } else {
            i += 1;
        }
    }
    atoms
}

pub fn render_triple(
    program: &Program,
    templates: &Templates,
    op: &OpKind,
    t: &Triple,
) -> String {
    let fun_name = &program.function(t.fun).name;
    let kind = match t.kind {
        TripleKind::Nonneg => "nonneg".to_string(),
        TripleKind::Step { branch, piece } => format!("step {}.{}", branch + 1, piece + 1),
    };
    let premise = if t.premise.is_empty() {
        "true".to_string()
    } else {
        let parts: Vec<String> = t
            .premise
            .iter()
            .map(|a| format!("{} >= 0", a.display(program)))
            .collect();
        parts.join(" and ")
    };
    format!(
        "{}@{} [{}]  {}  |=  {}  >=  0",
        fun_name,
        t.label.0,
        kind,
        premise,
        render_poly(program, &t.obligation, &templates.names, op)
    )
}
