//! Control flow graphs over labeled transitions.
//!
//! Every function becomes a set of triples `(l, step, l')`. Assignments and
//! `skip` are update steps, branch conditions become guard steps (one for
//! the condition, one for its negation), demonic choices become a pair of
//! star steps and calls carry the value-passing map into the callee.
//!
//! The significant labels of a program are the function entry labels plus
//! the while-loop heads; every cycle of the program passes through at least
//! one of them.

use crate::frontend::{
    Cond, Dnf, FunId, FunctionDecl, Label, NormExpr, Program, Stmt, VarId,
    pred_to_string,
};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone)]
pub enum Step {
    /// `skip` (no payload) or a single-variable assignment.
    Update(Option<(VarId, NormExpr)>),
    /// A branch guard; `text` keeps the source form for dumps.
    Guard { dnf: Dnf, text: String },
    /// One side of a demonic nondeterministic branch.
    Star,
    /// A call; `passing` maps every callee variable to an expression over
    /// the caller's variables (unlisted callee variables get zero).
    Call { callee: FunId, passing: BTreeMap<VarId, NormExpr> },
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub from: Label,
    pub step: Step,
    pub to: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    Assignment,
    Branching,
    Call,
    Demonic,
    Terminal,
}

#[derive(Debug, Clone)]
pub struct FunCfg {
    pub fun: FunId,
    pub entry: Label,
    pub terminal: Label,
    pub transitions: Vec<Transition>,
}

impl FunCfg {
    /// Outgoing transitions of a label in construction order (for branches:
    /// the positive guard first).
    pub fn outgoing(&self, l: Label) -> Vec<&Transition> {
        self.transitions.iter().filter(|t| t.from == l).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Cfg {
    pub funs: Vec<FunCfg>,
    pub significant: BTreeSet<Label>,
    /// Source invariant annotations (entry brackets and loop-head brackets)
    /// as DNFs; labels without a bracket are absent.
    pub annotations: BTreeMap<Label, Dnf>,
    pub label_fun: BTreeMap<Label, FunId>,
    pub label_kind: BTreeMap<Label, LabelKind>,
}

impl Cfg {
    pub fn fun_cfg(&self, f: FunId) -> &FunCfg {
        &self.funs[f.0 as usize]
    }

    pub fn kind(&self, l: Label) -> LabelKind {
        self.label_kind[&l]
    }

    /// Invariant at a label: the source annotation, `true` if absent.
    pub fn annotation(&self, l: Label) -> Dnf {
        self.annotations.get(&l).cloned().unwrap_or_else(Dnf::truth)
    }

    /// Checks that removing the significant labels leaves an acyclic
    /// transition graph, so every cycle passes a significant label.
    pub fn cycles_cut_by_significant(&self) -> bool {
        for fc in &self.funs {
            let mut adj: BTreeMap<Label, Vec<Label>> = BTreeMap::new();
            for t in &fc.transitions {
                if !self.significant.contains(&t.from) && !self.significant.contains(&t.to) {
                    adj.entry(t.from).or_default().push(t.to);
                }
            }
            // Iterative DFS with colors over the reduced graph.
            let mut color: BTreeMap<Label, u8> = BTreeMap::new();
            let nodes: Vec<Label> = adj.keys().copied().collect();
            for start in nodes {
                if color.get(&start).copied().unwrap_or(0) != 0 {
                    continue;
                }
                let mut stack = vec![(start, 0usize)];
                color.insert(start, 1);
                while let Some((node, idx)) = stack.pop() {
                    let next = adj.get(&node).and_then(|v| v.get(idx)).copied();
                    match next {
                        Some(succ) => {
                            stack.push((node, idx + 1));
                            match color.get(&succ).copied().unwrap_or(0) {
                                0 => {
                                    color.insert(succ, 1);
                                    stack.push((succ, 0));
                                }
                                1 => return false,
                                _ => {}
                            }
                        }
                        None => {
                            color.insert(node, 2);
                        }
                    }
                }
            }
        }
        true
    }
}

impl fmt::Display for Cfg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fc in &self.funs {
            writeln!(f, "function #{} entry {} terminal {}", fc.fun.0, fc.entry, fc.terminal)?;
            for t in &fc.transitions {
                let step = match &t.step {
                    Step::Update(None) => "id".to_string(),
                    Step::Update(Some((_, e))) => format!("update({:?} := ...)", e),
                    Step::Guard { text, .. } => text.clone(),
                    Step::Star => "star".to_string(),
                    Step::Call { callee, .. } => format!("call #{}", callee.0),
                };
                writeln!(f, "  ({}, {}, {})", t.from, step, t.to)?;
            }
        }
        Ok(())
    }
}

struct Builder<'a> {
    program: &'a Program,
    fun: &'a FunctionDecl,
    transitions: Vec<Transition>,
    significant: BTreeSet<Label>,
    annotations: BTreeMap<Label, Dnf>,
    label_kind: BTreeMap<Label, LabelKind>,
}

impl Builder<'_> {
    fn build_stmt(&mut self, s: &Stmt, succ: Label) {
        let fun = self.fun.id;
        match s {
            Stmt::Skip { label } => {
                self.label_kind.insert(*label, LabelKind::Assignment);
                self.transitions.push(Transition {
                    from: *label,
                    step: Step::Update(None),
                    to: succ,
                });
            }
            Stmt::Assign { label, var, value } => {
                self.label_kind.insert(*label, LabelKind::Assignment);
                let target = self
                    .program
                    .resolve_var(fun, var)
                    .expect("assigned variable is in scope");
                let value = self.program.normalize_expr(fun, value);
                self.transitions.push(Transition {
                    from: *label,
                    step: Step::Update(Some((target, value))),
                    to: succ,
                });
            }
            Stmt::Call { label, callee, args } => {
                self.label_kind.insert(*label, LabelKind::Call);
                let callee_decl = self
                    .program
                    .fun_by_name(callee)
                    .expect("callee resolved during validation");
                let mut passing = BTreeMap::new();
                for (param, arg) in callee_decl.params.iter().zip(args) {
                    let pv = self
                        .program
                        .resolve_var(callee_decl.id, param)
                        .expect("parameter is in callee scope");
                    passing.insert(pv, self.program.normalize_expr(fun, arg));
                }
                for v in &callee_decl.vars {
                    passing.entry(*v).or_insert_with(NormExpr::zero);
                }
                self.transitions.push(Transition {
                    from: *label,
                    step: Step::Call { callee: callee_decl.id, passing },
                    to: succ,
                });
            }
            Stmt::If { label, cond, then_branch, else_branch } => {
                match cond {
                    Cond::Pred(p) => {
                        self.label_kind.insert(*label, LabelKind::Branching);
                        self.transitions.push(Transition {
                            from: *label,
                            step: Step::Guard {
                                dnf: self.program.pred_dnf(fun, p, false),
                                text: pred_to_string(p),
                            },
                            to: then_branch.entry_label(),
                        });
                        self.transitions.push(Transition {
                            from: *label,
                            step: Step::Guard {
                                dnf: self.program.pred_dnf(fun, p, true),
                                text: format!("not ({})", pred_to_string(p)),
                            },
                            to: else_branch.entry_label(),
                        });
                    }
                    Cond::Star => {
                        self.label_kind.insert(*label, LabelKind::Demonic);
                        self.transitions.push(Transition {
                            from: *label,
                            step: Step::Star,
                            to: then_branch.entry_label(),
                        });
                        self.transitions.push(Transition {
                            from: *label,
                            step: Step::Star,
                            to: else_branch.entry_label(),
                        });
                    }
                }
                self.build_stmt(then_branch, succ);
                self.build_stmt(else_branch, succ);
            }
            Stmt::While { label, invariant, cond, body } => {
                self.label_kind.insert(*label, LabelKind::Branching);
                self.significant.insert(*label);
                if let Some(inv) = invariant {
                    let dnf = self.program.pred_dnf(fun, inv, false);
                    self.add_annotation(*label, dnf);
                }
                self.transitions.push(Transition {
                    from: *label,
                    step: Step::Guard {
                        dnf: self.program.pred_dnf(fun, cond, false),
                        text: pred_to_string(cond),
                    },
                    to: body.entry_label(),
                });
                self.transitions.push(Transition {
                    from: *label,
                    step: Step::Guard {
                        dnf: self.program.pred_dnf(fun, cond, true),
                        text: format!("not ({})", pred_to_string(cond)),
                    },
                    to: succ,
                });
                self.build_stmt(body, *label);
            }
            Stmt::Seq(a, b) => {
                self.build_stmt(a, b.entry_label());
                self.build_stmt(b, succ);
            }
        }
    }

    fn add_annotation(&mut self, label: Label, dnf: Dnf) {
        match self.annotations.remove(&label) {
            Some(prev) => {
                self.annotations.insert(label, prev.and(&dnf));
            }
            None => {
                self.annotations.insert(label, dnf);
            }
        }
    }
}

/// Builds the control flow graph of a whole program.
pub fn build(program: &Program) -> Cfg {
    let mut funs = Vec::new();
    let mut significant = BTreeSet::new();
    let mut annotations = BTreeMap::new();
    let mut label_fun = BTreeMap::new();
    let mut label_kind = BTreeMap::new();

    for f in &program.functions {
        let mut b = Builder {
            program,
            fun: f,
            transitions: Vec::new(),
            significant: BTreeSet::new(),
            annotations: BTreeMap::new(),
            label_kind: BTreeMap::new(),
        };
        b.build_stmt(&f.body, f.terminal_label);
        b.significant.insert(f.entry_label);
        if let Some(inv) = &f.invariant {
            let dnf = program.pred_dnf(f.id, inv, false);
            b.add_annotation(f.entry_label, dnf);
        }
        b.label_kind.insert(f.terminal_label, LabelKind::Terminal);

        for t in &b.transitions {
            label_fun.insert(t.from, f.id);
        }
        label_fun.insert(f.terminal_label, f.id);
        significant.extend(b.significant.iter().copied());
        annotations.extend(b.annotations.clone());
        label_kind.extend(b.label_kind.clone());
        funs.push(FunCfg {
            fun: f.id,
            entry: f.entry_label,
            terminal: f.terminal_label,
            transitions: b.transitions,
        });
    }

    Cfg { funs, significant, annotations, label_fun, label_kind }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    const BINARY_SEARCH: &str = include_str!("../corpus/binary_search.rec");
    const MERGESORT: &str = include_str!("../corpus/mergesort.rec");

    #[test]
    fn halving_recursion_transitions() {
        let p = parse(BINARY_SEARCH).unwrap();
        let cfg = build(&p);
        let fc = cfg.fun_cfg(FunId(0));
        assert_eq!(fc.entry, Label(1));
        assert_eq!(fc.terminal, Label(4));
        assert_eq!(fc.transitions.len(), 4);

        let out1 = fc.outgoing(Label(1));
        assert_eq!(out1.len(), 2);
        assert_eq!(out1[0].to, Label(2));
        assert_eq!(out1[1].to, Label(3));
        assert!(matches!(&out1[0].step, Step::Guard { .. }));

        let out2 = fc.outgoing(Label(2));
        assert_eq!(out2.len(), 1);
        assert_eq!(out2[0].to, Label(4));
        match &out2[0].step {
            Step::Call { callee, passing } => {
                assert_eq!(*callee, FunId(0));
                let n = p.resolve_var(FunId(0), "n").unwrap();
                let expected = NormExpr::var(n).floor_div(&num_bigint::BigInt::from(2));
                assert_eq!(passing[&n], expected);
            }
            other => panic!("expected call, got {:?}", other),
        }

        let out3 = fc.outgoing(Label(3));
        assert_eq!(out3.len(), 1);
        assert!(matches!(&out3[0].step, Step::Update(None)));
        assert_eq!(out3[0].to, Label(4));

        assert_eq!(cfg.significant.iter().copied().collect::<Vec<_>>(), vec![Label(1)]);
    }

    #[test]
    fn mergesort_label_layout() {
        let p = parse(MERGESORT).unwrap();
        let cfg = build(&p);
        let ms = cfg.fun_cfg(FunId(0));
        let mg = cfg.fun_cfg(FunId(1));
        assert_eq!((ms.entry, ms.terminal), (Label(1), Label(7)));
        assert_eq!((mg.entry, mg.terminal), (Label(8), Label(22)));

        let sig: Vec<Label> = cfg.significant.iter().copied().collect();
        assert_eq!(sig, vec![Label(1), Label(8), Label(11), Label(19)]);

        for l in [2, 6] {
            assert_eq!(cfg.kind(Label(l)), LabelKind::Assignment, "label {}", l);
        }
        assert_eq!(cfg.kind(Label(1)), LabelKind::Branching);
        for l in 3..=5 {
            assert_eq!(cfg.kind(Label(l)), LabelKind::Call, "label {}", l);
        }
        for l in (8..=10).chain(13..=18).chain(20..=21) {
            assert_eq!(cfg.kind(Label(l)), LabelKind::Assignment, "label {}", l);
        }
        assert_eq!(cfg.kind(Label(11)), LabelKind::Branching);
        assert_eq!(cfg.kind(Label(19)), LabelKind::Branching);
        assert_eq!(cfg.kind(Label(12)), LabelKind::Demonic);
        assert_eq!(cfg.kind(Label(7)), LabelKind::Terminal);
        assert_eq!(cfg.kind(Label(22)), LabelKind::Terminal);

        // while bodies loop back to their head
        assert!(mg.transitions.iter().any(|t| t.from == Label(17) && t.to == Label(11)));
        assert!(mg.transitions.iter().any(|t| t.from == Label(21) && t.to == Label(19)));
    }

    #[test]
    fn call_passing_zeroes_locals() {
        let p = parse(MERGESORT).unwrap();
        let cfg = build(&p);
        let ms = cfg.fun_cfg(FunId(0));
        // label 3: mergesort(i, k) — callee j gets caller k, callee local k gets 0
        let out = ms.outgoing(Label(3));
        match &out[0].step {
            Step::Call { callee, passing } => {
                assert_eq!(*callee, FunId(0));
                let i = p.resolve_var(FunId(0), "i").unwrap();
                let j = p.resolve_var(FunId(0), "j").unwrap();
                let k = p.resolve_var(FunId(0), "k").unwrap();
                assert_eq!(passing[&i], NormExpr::var(i));
                assert_eq!(passing[&j], NormExpr::var(k));
                assert_eq!(passing[&k], NormExpr::zero());
            }
            other => panic!("expected call, got {:?}", other),
        }
    }

    #[test]
    fn annotations_present_at_significant_labels() {
        let p = parse(MERGESORT).unwrap();
        let cfg = build(&p);
        for l in [1, 8, 11, 19] {
            let ann = cfg.annotation(Label(l));
            assert!(!ann.is_true(), "label {} should carry an annotation", l);
            assert_eq!(ann.disjuncts.len(), 1);
            assert_eq!(ann.disjuncts[0].atoms.len(), 2);
        }
        // non-significant labels carry none
        assert!(cfg.annotation(Label(2)).is_true());
    }

    #[test]
    fn cycles_pass_significant_labels_in_corpus() {
        for src in [
            BINARY_SEARCH,
            MERGESORT,
            include_str!("../corpus/karatsuba.rec"),
            include_str!("../corpus/closest_pair.rec"),
            include_str!("../corpus/strassen.rec"),
            include_str!("../corpus/randwalk.rec"),
            include_str!("../corpus/nestedloop.rec"),
        ] {
            let p = parse(src).unwrap();
            let cfg = build(&p);
            assert!(cfg.cycles_cut_by_significant());
            // every non-terminal label has at least one outgoing transition
            for fc in &cfg.funs {
                let labels: BTreeSet<Label> =
                    fc.transitions.iter().map(|t| t.from).collect();
                for t in &fc.transitions {
                    assert!(
                        t.to == fc.terminal || labels.contains(&t.to),
                        "dangling target {}",
                        t.to
                    );
                }
            }
        }
    }

    #[test]
    fn guard_negation_is_exhaustive_and_disjoint() {
        let p = parse(MERGESORT).unwrap();
        let cfg = build(&p);
        let ms = cfg.fun_cfg(FunId(0));
        let out = ms.outgoing(Label(1));
        let (g1, g2) = match (&out[0].step, &out[1].step) {
            (Step::Guard { dnf: a, .. }, Step::Guard { dnf: b, .. }) => (a.clone(), b.clone()),
            _ => panic!("expected two guards"),
        };
        // sample a small integer grid
        let vars = p.functions[0].vars.clone();
        for i in -3i64..=3 {
            for j in -3i64..=3 {
                for k in -3i64..=3 {
                    let env = |v: VarId| {
                        let idx = vars.iter().position(|x| *x == v).unwrap();
                        num_rational::BigRational::from_integer(num_bigint::BigInt::from(
                            [i, j, k][idx],
                        ))
                    };
                    let a = g1.eval(env);
                    let b = g2.eval(env);
                    assert!(a ^ b, "guards must partition at ({}, {}, {})", i, j, k);
                }
            }
        }
    }
}
