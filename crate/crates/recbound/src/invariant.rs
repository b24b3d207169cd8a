//! Polyhedral entailment, emptiness, and bound queries over conjunctions of
//! linear atoms, plus propagation of source invariants to every label for
//! runtime spot checks.
//!
//! An atom `e >= 0` is kept as a [`LinExpr`], a rational affine form over
//! dense dimension indices. Program variables and opaque floor terms are
//! interned into dimensions by [`FloorSystem`]; floor terms additionally get
//! bracketing constraints tying the fresh dimension to its argument, and a
//! constant lower-bound tightening step when the divisor is positive.
//!
//! All queries run on the real relaxation, which is the sound direction for
//! both pruning (real-empty implies integer-empty is false... the other way:
//! real-nonempty may be integer-empty, so emptiness verdicts are only used
//! to discard, never to certify satisfiability) and entailment (a real
//! certificate is valid at every integer point).

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::cfg::{Cfg, Step, Transition};
use crate::frontend::{Conjunct, Dnf, Label, NormBase, NormExpr, Program, VarId};
use crate::lpsolve::{self, Cmp, Objective, Outcome, Problem};
use crate::rat::rat_floor;

/// Affine form over dense dimensions: `sum coeffs[d] * x_d + constant`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LinExpr {
    pub coeffs: BTreeMap<usize, BigRational>,
    pub constant: BigRational,
}

impl LinExpr {
    pub fn zero() -> LinExpr {
        LinExpr { coeffs: BTreeMap::new(), constant: BigRational::zero() }
    }

    pub fn constant(c: BigRational) -> LinExpr {
        LinExpr { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn dim(d: usize) -> LinExpr {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(d, BigRational::one());
        LinExpr { coeffs, constant: BigRational::zero() }
    }

    pub fn coeff(&self, d: usize) -> BigRational {
        self.coeffs.get(&d).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add_term(&mut self, d: usize, c: &BigRational) {
        if c.is_zero() {
            return;
        }
        let e = self.coeffs.entry(d).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&d);
        }
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        for (d, c) in &other.coeffs {
            out.add_term(*d, c);
        }
        out.constant += &other.constant;
        out
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, k: &BigRational) -> LinExpr {
        if k.is_zero() {
            return LinExpr::zero();
        }
        LinExpr {
            coeffs: self.coeffs.iter().map(|(d, c)| (*d, c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn add_const(&self, k: &BigRational) -> LinExpr {
        let mut out = self.clone();
        out.constant += k;
        out
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval<F: Fn(usize) -> BigRational>(&self, env: F) -> BigRational {
        let mut v = self.constant.clone();
        for (d, c) in &self.coeffs {
            v += c * env(*d);
        }
        v
    }
}

fn dims_of(atoms: &[LinExpr], extra: &[&LinExpr]) -> Vec<usize> {
    let mut set = BTreeSet::new();
    for a in atoms {
        set.extend(a.coeffs.keys().copied());
    }
    for e in extra {
        set.extend(e.coeffs.keys().copied());
    }
    set.into_iter().collect()
}

/// Nonnegative multipliers `y` with `target = sum y_i * atom_i + residual`,
/// `residual >= 0`, if the atoms entail `target >= 0` over the reals.
/// Returns None when no certificate exists (in particular the atoms must be
/// satisfiable for completeness).
pub fn farkas_entails(atoms: &[LinExpr], target: &LinExpr) -> Option<Vec<BigRational>> {
    let m = atoms.len();
    let dims = dims_of(atoms, &[target]);
    let mut p = Problem::new(m);
    for d in &dims {
        let coeffs: Vec<BigRational> = atoms.iter().map(|a| a.coeff(*d)).collect();
        p.add(coeffs, Cmp::Eq, target.coeff(*d));
    }
    let consts: Vec<BigRational> = atoms.iter().map(|a| a.constant.clone()).collect();
    p.add(consts, Cmp::Le, target.constant.clone());
    match lpsolve::solve(&p, &Objective::feasibility(m)) {
        Outcome::Optimal { point, .. } => Some(point),
        _ => None,
    }
}

/// Nonnegative multipliers combining the atoms into an absurd constant
/// (zero linear part, negative constant) when the conjunction has no real
/// solution; None when it is satisfiable.
pub fn is_empty(atoms: &[LinExpr]) -> Option<Vec<BigRational>> {
    let dims = dims_of(atoms, &[]);
    let n = dims.len();
    let mut p = Problem::new(n);
    for j in 0..n {
        p.mark_free(j);
    }
    for a in atoms {
        let coeffs: Vec<BigRational> = dims.iter().map(|d| a.coeff(*d)).collect();
        p.add(coeffs, Cmp::Ge, -a.constant.clone());
    }
    match lpsolve::solve(&p, &Objective::feasibility(n)) {
        Outcome::Infeasible { farkas } => Some(farkas),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bound {
    Value(BigRational),
    Unbounded,
    Empty,
}

/// Greatest `t` with `atoms |= e >= t`, i.e. the minimum of `e` over the
/// solution set.
pub fn lower_bound(atoms: &[LinExpr], e: &LinExpr) -> Bound {
    let dims = dims_of(atoms, &[e]);
    let n = dims.len();
    let mut p = Problem::new(n);
    for j in 0..n {
        p.mark_free(j);
    }
    for a in atoms {
        let coeffs: Vec<BigRational> = dims.iter().map(|d| a.coeff(*d)).collect();
        p.add(coeffs, Cmp::Ge, -a.constant.clone());
    }
    let obj: Vec<BigRational> = dims.iter().map(|d| e.coeff(*d)).collect();
    match lpsolve::solve(&p, &Objective::Minimize(obj)) {
        Outcome::Optimal { value, .. } => Bound::Value(value + &e.constant),
        Outcome::Unbounded => Bound::Unbounded,
        Outcome::Infeasible { .. } => Bound::Empty,
    }
}

/// Lexicographically largest `(r, b)` such that the atoms entail both
/// `e - (r * ep + b) >= 0` and `r * ep + b >= 1`. None when no such pair
/// exists or the optimum is unbounded.
pub fn no_smaller(atoms: &[LinExpr], e: &LinExpr, ep: &LinExpr) -> Option<(BigRational, BigRational)> {
    let m = atoms.len();
    let dims = dims_of(atoms, &[e, ep]);
    let nv = 2 + 2 * m;
    let mut p = Problem::new(nv);
    p.mark_free(0);
    p.mark_free(1);
    let zero = BigRational::zero;
    for d in &dims {
        // r*ep[d] + sum y_i a_i[d] = e[d]
        let mut row = vec![zero(); nv];
        row[0] = ep.coeff(*d);
        for (i, a) in atoms.iter().enumerate() {
            row[2 + i] = a.coeff(*d);
        }
        p.add(row, Cmp::Eq, e.coeff(*d));
    }
    {
        // r*ep.c + b + sum y_i a_i.c <= e.c
        let mut row = vec![zero(); nv];
        row[0] = ep.constant.clone();
        row[1] = BigRational::one();
        for (i, a) in atoms.iter().enumerate() {
            row[2 + i] = a.constant.clone();
        }
        p.add(row, Cmp::Le, e.constant.clone());
    }
    for d in &dims {
        // r*ep[d] - sum z_i a_i[d] = 0
        let mut row = vec![zero(); nv];
        row[0] = ep.coeff(*d);
        for (i, a) in atoms.iter().enumerate() {
            row[2 + m + i] = -a.coeff(*d);
        }
        p.add(row, Cmp::Eq, zero());
    }
    {
        // sum z_i a_i.c - r*ep.c - b <= -1
        let mut row = vec![zero(); nv];
        row[0] = -ep.constant.clone();
        row[1] = -BigRational::one();
        for (i, a) in atoms.iter().enumerate() {
            row[2 + m + i] = a.constant.clone();
        }
        p.add(row, Cmp::Le, -BigRational::one());
    }
    let mut obj_r = vec![zero(); nv];
    obj_r[0] = BigRational::one();
    let mut obj_b = vec![zero(); nv];
    obj_b[1] = BigRational::one();
    match lpsolve::lexicographic(&p, &[Objective::Maximize(obj_r), Objective::Maximize(obj_b)]) {
        Outcome::Optimal { point, .. } => Some((point[0].clone(), point[1].clone())),
        _ => None,
    }
}

/// Lexicographically smallest `(r, b)` such that the atoms entail
/// `(r * ep + b) - e >= 0`. None when none exists or the optimum is
/// unbounded below.
pub fn no_greater(atoms: &[LinExpr], e: &LinExpr, ep: &LinExpr) -> Option<(BigRational, BigRational)> {
    let m = atoms.len();
    let dims = dims_of(atoms, &[e, ep]);
    let nv = 2 + m;
    let mut p = Problem::new(nv);
    p.mark_free(0);
    p.mark_free(1);
    let zero = BigRational::zero;
    for d in &dims {
        // r*ep[d] - sum y_i a_i[d] = e[d]
        let mut row = vec![zero(); nv];
        row[0] = ep.coeff(*d);
        for (i, a) in atoms.iter().enumerate() {
            row[2 + i] = -a.coeff(*d);
        }
        p.add(row, Cmp::Eq, e.coeff(*d));
    }
    {
        // sum y_i a_i.c - r*ep.c - b <= -e.c
        let mut row = vec![zero(); nv];
        row[0] = -ep.constant.clone();
        row[1] = -BigRational::one();
        for (i, a) in atoms.iter().enumerate() {
            row[2 + i] = a.constant.clone();
        }
        p.add(row, Cmp::Le, -e.constant.clone());
    }
    let mut obj_r = vec![zero(); nv];
    obj_r[0] = BigRational::one();
    let mut obj_b = vec![zero(); nv];
    obj_b[1] = BigRational::one();
    match lpsolve::lexicographic(&p, &[Objective::Minimize(obj_r), Objective::Minimize(obj_b)]) {
        Outcome::Optimal { point, .. } => Some((point[0].clone(), point[1].clone())),
        _ => None,
    }
}

fn base_depth(b: &NormBase) -> usize {
    match b {
        NormBase::Var(_) => 0,
        NormBase::Floor(e, _) => 1 + e.terms.keys().map(base_depth).max().unwrap_or(0),
    }
}

fn collect_bases(e: &NormExpr, out: &mut BTreeSet<NormBase>) {
    for b in e.terms.keys() {
        out.insert(b.clone());
        if let NormBase::Floor(inner, _) = b {
            collect_bases(inner, out);
        }
    }
}

/// Linear view of a set of atoms whose floor terms are interned as fresh
/// dimensions and bracketed by the defining inequalities of integer
/// division, with a constant tightening of each floor over a positive
/// divisor from a lower bound of its argument.
pub struct FloorSystem {
    index: BTreeMap<NormBase, usize>,
    /// Dimension -> base, in assignment order: plain variables first, then
    /// floor terms innermost first.
    pub dims: Vec<NormBase>,
    /// Linearized input atoms followed by the floor constraints.
    pub atoms: Vec<LinExpr>,
    /// How many leading entries of `atoms` mirror the input atoms.
    pub n_input: usize,
}

impl FloorSystem {
    /// Builds the system from constraint atoms; `extra` lists expressions
    /// that are not constraints themselves but whose floor terms must be
    /// interned and bracketed (arguments of interpreted function symbols).
    pub fn build(atoms: &[NormExpr], extra: &[NormExpr]) -> FloorSystem {
        let mut bases = BTreeSet::new();
        for e in atoms.iter().chain(extra) {
            collect_bases(e, &mut bases);
        }
        let mut vars: Vec<NormBase> = Vec::new();
        let mut floors: Vec<NormBase> = Vec::new();
        for b in bases {
            match b {
                NormBase::Var(_) => vars.push(b),
                NormBase::Floor(..) => floors.push(b),
            }
        }
        floors.sort_by(|a, b| base_depth(a).cmp(&base_depth(b)).then_with(|| a.cmp(b)));
        let mut sys = FloorSystem {
            index: BTreeMap::new(),
            dims: Vec::new(),
            atoms: Vec::new(),
            n_input: atoms.len(),
        };
        for b in vars.into_iter().chain(floors.iter().cloned()) {
            let d = sys.dims.len();
            sys.index.insert(b.clone(), d);
            sys.dims.push(b);
        }
        for a in atoms {
            let la = sys.lin(a);
            sys.atoms.push(la);
        }
        for fb in floors {
            let w = sys.index[&fb];
            let (arg, c) = match &fb {
                NormBase::Floor(arg, c) => (sys.lin(arg), c.clone()),
                NormBase::Var(_) => unreachable!(),
            };
            let cr = BigRational::from_integer(c.clone());
            let wterm = LinExpr::dim(w).scale(&cr);
            if c.is_positive() {
                // arg - c*w >= 0 and c*w - arg + c - 1 >= 0
                sys.atoms.push(arg.sub(&wterm));
                sys.atoms.push(wterm.sub(&arg).add_const(&(cr.clone() - BigRational::one())));
                if let Bound::Value(t) = lower_bound(&sys.atoms, &arg) {
                    let lb = rat_floor(&(t / &cr));
                    sys.atoms.push(LinExpr::dim(w).add_const(&-BigRational::from_integer(lb)));
                }
            } else {
                // c*w - arg >= 0 and arg - c*w - c - 1 >= 0
                sys.atoms.push(wterm.sub(&arg));
                sys.atoms.push(arg.sub(&wterm).add_const(&(-cr - BigRational::one())));
            }
        }
        sys
    }

    /// Linearizes an expression whose bases were all seen at build time.
    pub fn lin(&self, e: &NormExpr) -> LinExpr {
        let mut out = LinExpr::constant(e.constant.clone());
        for (b, c) in &e.terms {
            let d = *self.index.get(b).expect("base interned at build time");
            out.add_term(d, c);
        }
        out
    }

    pub fn dim_of(&self, b: &NormBase) -> Option<usize> {
        self.index.get(b).copied()
    }
}

/// Real-relaxation emptiness of a conjunction, floor aware.
pub fn conjunct_is_empty(c: &Conjunct) -> bool {
    let sys = FloorSystem::build(&c.atoms, &[]);
    is_empty(&sys.atoms).is_some()
}

/// Floor-aware entailment of `target >= 0` from the conjunction.
pub fn entails_with_floors(context: &[NormExpr], target: &NormExpr) -> bool {
    let sys = FloorSystem::build(context, std::slice::from_ref(target));
    farkas_entails(&sys.atoms, &sys.lin(target)).is_some()
}

/// Entailment treating each distinct floor term as an opaque dimension,
/// with no bracketing: only the literal linear structure is used.
pub fn entails_opaque(context: &[NormExpr], target: &NormExpr) -> bool {
    let mut index: BTreeMap<NormBase, usize> = BTreeMap::new();
    let lin = |e: &NormExpr, index: &mut BTreeMap<NormBase, usize>| -> LinExpr {
        let mut out = LinExpr::constant(e.constant.clone());
        for (b, c) in &e.terms {
            let next = index.len();
            let d = *index.entry(b.clone()).or_insert(next);
            out.add_term(d, c);
        }
        out
    };
    let atoms: Vec<LinExpr> = context.iter().map(|e| lin(e, &mut index)).collect();
    let t = lin(target, &mut index);
    farkas_entails(&atoms, &t).is_some()
}

fn mentions(e: &NormExpr, x: VarId) -> bool {
    let mut vs = BTreeSet::new();
    e.vars(&mut vs);
    vs.contains(&x)
}

fn drop_var(d: &Dnf, x: VarId) -> Dnf {
    let mut disjuncts = Vec::new();
    for c in &d.disjuncts {
        let kept: Vec<NormExpr> =
            c.atoms.iter().filter(|a| !mentions(a, x)).cloned().collect();
        if let Some(c) = Conjunct::new(kept) {
            disjuncts.push(c);
        }
    }
    if disjuncts.is_empty() {
        return Dnf::falsity();
    }
    let mut out = Dnf::falsity();
    for c in disjuncts {
        let mut single = Dnf::truth();
        single.disjuncts = vec![c];
        out = out.or(&single);
    }
    out
}

/// Propagates the source annotations forward to every label, producing the
/// per-label claims that runtime sampling checks. Significant labels keep
/// their annotations verbatim; other labels receive the join of their
/// predecessors' claims through each step: assignments drop atoms about the
/// written variable, floor-free branch guards are conjoined, and calls,
/// demonic choices, and skips pass claims through unchanged.
pub fn claims(_program: &Program, cfg: &Cfg) -> BTreeMap<Label, Dnf> {
    let mut out: BTreeMap<Label, Dnf> = BTreeMap::new();
    for l in &cfg.significant {
        out.insert(*l, cfg.annotation(*l));
    }
    let mut all: Vec<&Transition> = cfg.funs.iter().flat_map(|f| f.transitions.iter()).collect();
    all.sort_by_key(|t| t.from.0);
    for t in all {
        let cur = out.get(&t.from).cloned().unwrap_or_else(Dnf::truth);
        let post = match &t.step {
            Step::Update(None) | Step::Star | Step::Call { .. } => cur,
            Step::Update(Some((x, _))) => drop_var(&cur, *x),
            Step::Guard { dnf, .. } => {
                if dnf.has_floor() {
                    cur
                } else {
                    cur.and(dnf)
                }
            }
        };
        if cfg.significant.contains(&t.to) {
            continue;
        }
        match out.get(&t.to) {
            None => {
                out.insert(t.to, post);
            }
            Some(prev) => {
                let joined = prev.or(&post);
                out.insert(t.to, joined);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg;
    use crate::frontend::parse;
    use crate::rat::{rat, rat_i64};
    use crate::semantics::run_checked;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lx(pairs: &[(usize, i64)], c: i64) -> LinExpr {
        let mut e = LinExpr::constant(rat_i64(c));
        for (d, k) in pairs {
            e.add_term(*d, &rat_i64(*k));
        }
        e
    }

    #[test]
    fn entailment_with_certificate_replay() {
        // x >= 1, y >= x  |=  y >= 1
        let atoms = vec![lx(&[(0, 1)], -1), lx(&[(1, 1), (0, -1)], 0)];
        let target = lx(&[(1, 1)], -1);
        let y = farkas_entails(&atoms, &target).expect("entailed");
        let mut combo = LinExpr::zero();
        for (m, a) in y.iter().zip(&atoms) {
            assert!(!m.is_negative());
            combo = combo.add(&a.scale(m));
        }
        let residual = target.sub(&combo);
        assert!(residual.is_constant());
        assert!(!residual.constant.is_negative());
    }

    #[test]
    fn non_entailment() {
        let atoms = vec![lx(&[(0, 1)], -1)]; // x >= 1
        assert!(farkas_entails(&atoms, &lx(&[(0, 1)], -2)).is_none()); // x >= 2
        assert!(farkas_entails(&atoms, &lx(&[(0, -1)], 2)).is_none()); // x <= 2
    }

    #[test]
    fn emptiness_certificate_replay() {
        // x >= 3 and -x >= 0
        let atoms = vec![lx(&[(0, 1)], -3), lx(&[(0, -1)], 0)];
        let mu = is_empty(&atoms).expect("empty");
        let mut combo = LinExpr::zero();
        for (m, a) in mu.iter().zip(&atoms) {
            assert!(!m.is_negative());
            combo = combo.add(&a.scale(m));
        }
        assert!(combo.is_constant());
        assert!(combo.constant.is_negative());
        // satisfiable sibling
        assert!(is_empty(&[lx(&[(0, 1)], -3)]).is_none());
    }

    #[test]
    fn lower_bounds() {
        let atoms = vec![lx(&[(0, 1)], -2)]; // n >= 2
        assert_eq!(lower_bound(&atoms, &lx(&[(0, 1)], 0)), Bound::Value(rat_i64(2)));
        assert_eq!(lower_bound(&atoms, &lx(&[(0, 3)], 1)), Bound::Value(rat_i64(7)));
        assert_eq!(lower_bound(&atoms, &lx(&[(0, -1)], 0)), Bound::Unbounded);
        let empty = vec![lx(&[], -1)];
        assert_eq!(lower_bound(&empty, &lx(&[(0, 1)], 0)), Bound::Empty);
    }

    #[test]
    fn mutual_bounds_on_halved_interval() {
        // n >= 2, n >= 2w, 2w >= n - 1, w >= 1  (w plays floor(n/2))
        let atoms = vec![
            lx(&[(0, 1)], -2),
            lx(&[(0, 1), (1, -2)], 0),
            lx(&[(1, 2), (0, -1)], 1),
            lx(&[(1, 1)], -1),
        ];
        let n = lx(&[(0, 1)], 0);
        let w = lx(&[(1, 1)], 0);
        let (r, b) = no_smaller(&atoms, &n, &w).expect("feasible");
        assert_eq!((r, b), (rat_i64(2), rat_i64(0)));
        let (rt, bt) = no_greater(&atoms, &n, &w).expect("feasible");
        assert_eq!((rt, bt), (rat_i64(2), rat_i64(1)));
        let (r2, b2) = no_smaller(&atoms, &w, &n).expect("feasible");
        assert_eq!((r2, b2), (rat_i64(0), rat_i64(1)));
        let (rt2, bt2) = no_greater(&atoms, &w, &n).expect("feasible");
        assert_eq!((rt2, bt2), (rat(1, 2), rat_i64(0)));
    }

    fn floor_expr(arg: NormExpr, c: i64) -> NormExpr {
        arg.floor_div(&num_bigint::BigInt::from(c))
    }

    #[test]
    fn floor_tightening_step() {
        // n >= 2 entails floor(n/2) >= 1, which needs the constant
        // tightening: the brackets alone only give 2w >= n - 1 >= 1.
        let n = NormExpr::var(VarId(0));
        let ctx = vec![n.add_const(&rat_i64(-2))];
        let target = floor_expr(n.clone(), 2).add_const(&rat_i64(-1));
        assert!(entails_with_floors(&ctx, &target));
        // brackets alone fail over the reals
        let brackets = vec![
            lx(&[(0, 1)], -2),
            lx(&[(0, 1), (1, -2)], 0),
            lx(&[(1, 2), (0, -1)], 1),
        ];
        assert!(farkas_entails(&brackets, &lx(&[(1, 1)], -1)).is_none());
    }

    #[test]
    fn negative_divisor_brackets() {
        // n >= 2 entails floor(n/-2) <= -1
        let n = NormExpr::var(VarId(0));
        let ctx = vec![n.add_const(&rat_i64(-2))];
        let target = floor_expr(n.clone(), -2).neg().add_const(&rat_i64(-1));
        assert!(entails_with_floors(&ctx, &target));
    }

    #[test]
    fn floor_emptiness_prunes() {
        // n >= 2 and floor(n/2) <= 0 is empty
        let n = NormExpr::var(VarId(0));
        let c = Conjunct::new(vec![
            n.add_const(&rat_i64(-2)),
            floor_expr(n.clone(), 2).neg(),
        ])
        .unwrap();
        assert!(conjunct_is_empty(&c));
        let ok = Conjunct::new(vec![n.add_const(&rat_i64(-2))]).unwrap();
        assert!(!conjunct_is_empty(&ok));
    }

    #[test]
    fn opaque_floors_are_uninterpreted() {
        let n = NormExpr::var(VarId(0));
        let f2 = floor_expr(n.clone(), 2);
        let ctx = vec![f2.add_const(&rat_i64(-1)), n.sub(&f2)];
        assert!(entails_opaque(&ctx, &n.add_const(&rat_i64(-1))));
        let f3 = floor_expr(n.clone(), 3);
        assert!(!entails_opaque(&ctx, &f3));
    }

    #[test]
    fn nested_floor_brackets() {
        // n >= 4 entails floor(floor(n/2)/2) >= 1
        let n = NormExpr::var(VarId(0));
        let ctx = vec![n.add_const(&rat_i64(-4))];
        let target = floor_expr(floor_expr(n.clone(), 2), 2).add_const(&rat_i64(-1));
        assert!(entails_with_floors(&ctx, &target));
    }

    #[test]
    fn claims_on_binary_search() {
        let src = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/corpus/binary_search.rec"
        ))
        .unwrap();
        let program = parse(&src).unwrap();
        let g = cfg::build(&program);
        let cl = claims(&program, &g);
        // call site sits under the n >= 2 branch
        let call_claim = &cl[&Label(2)];
        let at = |n: i64| call_claim.eval(|_| rat_i64(n));
        assert!(!at(1));
        assert!(at(2) && at(7));
        // skip branch keeps only the invariant
        let skip_claim = &cl[&Label(3)];
        assert!(skip_claim.eval(|_| rat_i64(1)));
        assert!(!skip_claim.eval(|_| rat_i64(0)));
    }

    #[test]
    fn claims_hold_along_sampled_runs() {
        for file in ["mergesort.rec", "binary_search.rec", "nestedloop.rec"] {
            let src = std::fs::read_to_string(format!(
                "{}/corpus/{}",
                env!("CARGO_MANIFEST_DIR"),
                file
            ))
            .unwrap();
            let program = parse(&src).unwrap();
            let g = cfg::build(&program);
            let cl = claims(&program, &g);
            let entry = program.entry;
            let params = &program.function(entry).params;
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for seed in 0..30u64 {
                let args: Vec<i64> = match file {
                    "mergesort.rec" => {
                        let i = rng.gen_range(0..6);
                        let j = i + rng.gen_range(0..6);
                        vec![i, j, 0]
                    }
                    "binary_search.rec" => vec![rng.gen_range(1..40)],
                    _ => {
                        assert_eq!(params.len(), 4);
                        vec![1, 0, rng.gen_range(0..5), rng.gen_range(0..5)]
                    }
                };
                let run = run_checked(&program, &g, entry, &args, &cl, seed, 50_000);
                assert!(
                    run.violation.is_none(),
                    "{}: claim violated at {:?}",
                    file,
                    run.violation
                );
            }
        }
    }

    #[test]
    fn farkas_matches_vertex_ray_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut checked = 0;
        while checked < 60 {
            let n = rng.gen_range(2..=3usize);
            let mut atoms: Vec<LinExpr> = Vec::new();
            for d in 0..n {
                // x_d >= -K keeps the polyhedron pointed
                atoms.push(lx(&[(d, 1)], rng.gen_range(0..4)));
            }
            let extra = rng.gen_range(1..=3);
            for _ in 0..extra {
                let mut a = LinExpr::constant(rat_i64(rng.gen_range(-4..5)));
                for d in 0..n {
                    a.add_term(d, &rat_i64(rng.gen_range(-3..4)));
                }
                atoms.push(a);
            }
            if is_empty(&atoms).is_some() {
                continue;
            }
            let mut target = LinExpr::constant(rat_i64(rng.gen_range(-4..5)));
            for d in 0..n {
                target.add_term(d, &rat_i64(rng.gen_range(-3..4)));
            }
            // ground truth from vertex and ray enumeration
            let mut p = Problem::new(n);
            for j in 0..n {
                p.mark_free(j);
            }
            for a in &atoms {
                let coeffs: Vec<BigRational> = (0..n).map(|d| a.coeff(d)).collect();
                p.add(coeffs, lpsolve::Cmp::Ge, -a.constant.clone());
            }
            let verts = lpsolve::reference::enumerate_vertices(&p);
            assert!(!verts.is_empty(), "pointed nonempty system must have a vertex");
            let rays = lpsolve::reference::enumerate_rays(&p);
            let on_verts = verts.iter().all(|v| !target.eval(|d| v[d].clone()).is_negative());
            let on_rays = rays.iter().all(|r| {
                let mut v = BigRational::zero();
                for (d, c) in &target.coeffs {
                    v += c * &r[*d];
                }
                !v.is_negative()
            });
            let truth = on_verts && on_rays;
            assert_eq!(
                farkas_entails(&atoms, &target).is_some(),
                truth,
                "atoms {:?} target {:?}",
                atoms,
                target
            );
            checked += 1;
        }
    }
}
