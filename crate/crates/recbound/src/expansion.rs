//! One-step expansion of the worst-case recurrence.
//!
//! For every significant label the measure template must dominate the cost
//! of executing one step and continuing with the measure of whatever label
//! comes next. This module unrolls that right-hand side through the
//! control-flow graph until it reaches significant labels or a terminal,
//! producing a guarded piecewise expression over the template coefficients.
//! Recursion terminates because every cycle passes a significant label,
//! where the unrolling cuts to the template piece instead of continuing.
//!
//! The result at each label is a max over branches (from demonic choice) of
//! guarded sums, where each guarded sum's pieces are pairwise disjoint and
//! jointly exhaustive. Pieces with unsatisfiable guards are pruned eagerly
//! and pieces sharing a polynomial are merged, which keeps long call chains
//! from blowing up the piece count exponentially.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::One;

use crate::cfg::{Cfg, LabelKind, Step, Transition};
use crate::frontend::{Conjunct, Dnf, Label, NormExpr, Program, VarId};
use crate::invariant;
use crate::poly::{render_poly, OpKind, PolyExpr};
use crate::template::Templates;

/// Disjoint, exhaustive guarded pieces summed into one case expression.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GuardedSum {
    pub pieces: Vec<(Dnf, PolyExpr)>,
}

/// Max over guarded sums; one branch per resolution of demonic choices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseMax {
    pub branches: Vec<GuardedSum>,
}

/// Memoized satisfiability queries on canonical conjuncts. The same guard
/// fragments recur across pieces, so caching pays for itself quickly.
pub struct EmptyCache {
    map: BTreeMap<Conjunct, bool>,
}

impl EmptyCache {
    pub fn new() -> EmptyCache {
        EmptyCache { map: BTreeMap::new() }
    }

    pub fn is_empty(&mut self, c: &Conjunct) -> bool {
        if let Some(&b) = self.map.get(c) {
            return b;
        }
        let b = invariant::conjunct_is_empty(c);
        self.map.insert(c.clone(), b);
        b
    }

    fn prune(&mut self, d: &Dnf) -> Dnf {
        let kept: Vec<Conjunct> =
            d.disjuncts.iter().filter(|c| !self.is_empty(c)).cloned().collect();
        Dnf { disjuncts: kept }
    }
}

impl Default for EmptyCache {
    fn default() -> Self {
        EmptyCache::new()
    }
}

/// Negation of a DNF, back in DNF. Atom negation over the integers turns
/// `e >= 0` into `-e - 1 >= 0`.
pub fn negate_dnf(d: &Dnf) -> Dnf {
    let mut acc = Dnf::truth();
    for c in &d.disjuncts {
        let mut dis = Dnf::falsity();
        for a in &c.atoms {
            dis = dis.or(&Dnf::literal(a.neg().sub_const_one()));
        }
        acc = acc.and(&dis);
    }
    acc
}

impl GuardedSum {
    pub fn constant(p: PolyExpr) -> GuardedSum {
        GuardedSum { pieces: vec![(Dnf::truth(), p)] }
    }

    /// Prunes unsatisfiable disjuncts, drops emptied pieces, and merges
    /// pieces that carry the same polynomial.
    fn simplify(self, cache: &mut EmptyCache) -> GuardedSum {
        let mut merged: BTreeMap<PolyExpr, Dnf> = BTreeMap::new();
        for (g, p) in self.pieces {
            let g = cache.prune(&g);
            if g.is_false() {
                continue;
            }
            merged
                .entry(p)
                .and_modify(|d| *d = d.or(&g))
                .or_insert(g);
        }
        GuardedSum { pieces: merged.into_iter().map(|(p, g)| (g, p)).collect() }
    }

    fn add(&self, other: &GuardedSum, cache: &mut EmptyCache) -> GuardedSum {
        let mut pieces = Vec::new();
        for (ga, pa) in &self.pieces {
            for (gb, pb) in &other.pieces {
                let g = ga.and(gb);
                if g.is_false() {
                    continue;
                }
                pieces.push((g, pa.add(pb)));
            }
        }
        GuardedSum { pieces }.simplify(cache)
    }

    fn and_guard(&self, phi: &Dnf, cache: &mut EmptyCache) -> GuardedSum {
        let pieces =
            self.pieces.iter().map(|(g, p)| (g.and(phi), p.clone())).collect();
        GuardedSum { pieces }.simplify(cache)
    }

    fn add_const(&self, k: &BigRational) -> GuardedSum {
        let pieces =
            self.pieces.iter().map(|(g, p)| (g.clone(), p.add_const(k))).collect();
        GuardedSum { pieces }
    }

    fn subst(&self, map: &BTreeMap<VarId, NormExpr>, cache: &mut EmptyCache) -> GuardedSum {
        let pieces = self
            .pieces
            .iter()
            .map(|(g, p)| (g.subst(map), p.subst(map)))
            .collect();
        GuardedSum { pieces }.simplify(cache)
    }
}

impl PiecewiseMax {
    pub fn zero() -> PiecewiseMax {
        PiecewiseMax { branches: vec![GuardedSum::constant(PolyExpr::zero())] }
    }

    pub fn single(gs: GuardedSum) -> PiecewiseMax {
        PiecewiseMax { branches: vec![gs] }
    }

    fn canon(mut self) -> PiecewiseMax {
        self.branches.sort();
        self.branches.dedup();
        self
    }

    fn add(&self, other: &PiecewiseMax, cache: &mut EmptyCache) -> PiecewiseMax {
        let mut branches = Vec::new();
        for a in &self.branches {
            for b in &other.branches {
                branches.push(a.add(b, cache));
            }
        }
        PiecewiseMax { branches }.canon()
    }

    fn max(self, other: PiecewiseMax) -> PiecewiseMax {
        let mut branches = self.branches;
        branches.extend(other.branches);
        PiecewiseMax { branches }.canon()
    }

    fn and_guard(&self, phi: &Dnf, cache: &mut EmptyCache) -> PiecewiseMax {
        let branches =
            self.branches.iter().map(|b| b.and_guard(phi, cache)).collect();
        PiecewiseMax { branches }.canon()
    }

    fn add_const(&self, k: &BigRational) -> PiecewiseMax {
        let branches = self.branches.iter().map(|b| b.add_const(k)).collect();
        PiecewiseMax { branches }
    }

    fn subst(&self, map: &BTreeMap<VarId, NormExpr>, cache: &mut EmptyCache) -> PiecewiseMax {
        let branches = self.branches.iter().map(|b| b.subst(map, cache)).collect();
        PiecewiseMax { branches }.canon()
    }

    pub fn piece_count(&self) -> usize {
        self.branches.iter().map(|b| b.pieces.len()).sum()
    }
}

/// Expansion of every significant label's right-hand side, along with the
/// memoized continuation table used to build it.
pub struct Expansion {
    /// Per significant label: one unrolled step from that label.
    pub rhs: BTreeMap<Label, PiecewiseMax>,
    /// Per label: the continuation measure used when the unrolling reaches
    /// that label from elsewhere.
    pub memo: BTreeMap<Label, PiecewiseMax>,
}

pub fn expand(program: &Program, cfg: &Cfg, templates: &Templates) -> Expansion {
    let mut ex = Expander {
        program,
        cfg,
        templates,
        memo: BTreeMap::new(),
        cache: EmptyCache::new(),
        visiting: BTreeSet::new(),
    };
    let mut rhs = BTreeMap::new();
    for &l in &cfg.significant {
        rhs.insert(l, ex.step(l));
    }
    Expansion { rhs, memo: ex.memo }
}

struct Expander<'a> {
    program: &'a Program,
    cfg: &'a Cfg,
    templates: &'a Templates,
    memo: BTreeMap<Label, PiecewiseMax>,
    cache: EmptyCache,
    visiting: BTreeSet<Label>,
}

impl<'a> Expander<'a> {
    /// The continuation measure at a label: the template piece at
    /// significant labels, zero at terminals, one unrolled step elsewhere.
    fn g(&mut self, l: Label) -> PiecewiseMax {
        if let Some(m) = self.memo.get(&l) {
            return m.clone();
        }
        assert!(self.visiting.insert(l), "unrolling revisited label {}", l.0);
        let fun = self.cfg.label_fun[&l];
        let r = if self.cfg.significant.contains(&l) {
            self.template_piece(l)
        } else if l == self.cfg.fun_cfg(fun).terminal {
            PiecewiseMax::zero()
        } else {
            self.step(l)
        };
        self.visiting.remove(&l);
        self.memo.insert(l, r.clone());
        r
    }

    fn template_piece(&mut self, l: Label) -> PiecewiseMax {
        let inv = self.cfg.annotation(l);
        let eta = self.templates.etas[&l].clone();
        let gs = GuardedSum {
            pieces: vec![(inv.clone(), eta), (negate_dnf(&inv), PolyExpr::zero())],
        };
        PiecewiseMax::single(gs.simplify(&mut self.cache))
    }

    /// One unrolled step from a non-terminal label.
    fn step(&mut self, l: Label) -> PiecewiseMax {
        let cfg = self.cfg;
        let fun = cfg.label_fun[&l];
        let outs: Vec<Transition> =
            cfg.fun_cfg(fun).outgoing(l).into_iter().cloned().collect();
        let one = BigRational::one();
        match cfg.kind(l) {
            LabelKind::Terminal => PiecewiseMax::zero(),
            LabelKind::Assignment => {
                let t = &outs[0];
                let child = self.g(t.to);
                let child = match &t.step {
                    Step::Update(None) => child,
                    Step::Update(Some((x, e))) => {
                        let mut map = BTreeMap::new();
                        map.insert(*x, e.clone());
                        child.subst(&map, &mut self.cache)
                    }
                    _ => unreachable!("assignment label with non-update step"),
                };
                child.add_const(&one)
            }
            LabelKind::Branching => {
                let (d1, d2) = match (&outs[0].step, &outs[1].step) {
                    (Step::Guard { dnf: a, .. }, Step::Guard { dnf: b, .. }) => {
                        (a.clone(), b.clone())
                    }
                    _ => unreachable!("branching label without guard steps"),
                };
                let ga = self.g(outs[0].to);
                let ga = ga.and_guard(&d1, &mut self.cache);
                let gb = self.g(outs[1].to);
                let gb = gb.and_guard(&d2, &mut self.cache);
                // The two guards partition the state space, so the union of
                // one branch from each side is again disjoint and exhaustive.
                let mut branches = Vec::new();
                for a in &ga.branches {
                    for b in &gb.branches {
                        let mut pieces = a.pieces.clone();
                        pieces.extend(b.pieces.iter().cloned());
                        branches.push(GuardedSum { pieces }.simplify(&mut self.cache));
                    }
                }
                PiecewiseMax { branches }.canon().add_const(&one)
            }
            LabelKind::Demonic => {
                let a = self.g(outs[0].to);
                let b = self.g(outs[1].to);
                a.max(b).add_const(&one)
            }
            LabelKind::Call => {
                let t = &outs[0];
                let (callee, passing) = match &t.step {
                    Step::Call { callee, passing } => (*callee, passing.clone()),
                    _ => unreachable!("call label without call step"),
                };
                let entry = self.program.function(callee).entry_label;
                let composed = self.g(entry);
                let composed = composed.subst(&passing, &mut self.cache);
                let cont = self.g(t.to);
                composed.add(&cont, &mut self.cache).add_const(&one)
            }
        }
    }
}

/// Text dump of one label's expansion, one piece per line.
pub fn render_expansion(
    program: &Program,
    templates: &Templates,
    op: &OpKind,
    pm: &PiecewiseMax,
) -> String {
    let mut out = String::new();
    for (i, b) in pm.branches.iter().enumerate() {
        if pm.branches.len() > 1 {
            out.push_str(&format!("  branch {}:\n", i + 1));
        }
        for (g, p) in &b.pieces {
            out.push_str(&format!(
                "    [{}]  {}\n",
                render_dnf(program, g),
                render_poly(program, p, &templates.names, op)
            ));
        }
    }
    out
}

pub fn render_dnf(program: &Program, d: &Dnf) -> String {
    if d.is_true() {
        return "true".to_string();
    }
    if d.is_false() {
        return "false".to_string();
    }
    let parts: Vec<String> = d
        .disjuncts
        .iter()
        .map(|c| {
            let atoms: Vec<String> =
                c.atoms.iter().map(|a| format!("{} >= 0", a.display(program))).collect();
            atoms.join(" and ")
        })
        .collect();
    parts.join("  or  ")
}
