//! Certificate search over the abstracted triples.
//!
//! Each triple demands that its obligation polynomial be a nonnegative
//! combination of products of at most `k` of its `gamma` members (the empty
//! product counts, so adding a plain nonnegative constant is allowed). The
//! obligation's coefficients are affine in the shared template variables,
//! so the whole search is one linear feasibility problem: multipliers per
//! triple, template values shared across all of them.
//!
//! The multiplier blocks of different triples never share a row, so the
//! one assembled tableau is block diagonal apart from the template columns,
//! and the simplex solver's zero skipping keeps the solve cheap. Checking a
//! proposed template valuation instead solves each triple's small block on
//! its own with the template values substituted into the right-hand sides.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::abstraction::{render_lin, AbstractTriple};
use crate::constraints::TripleKind;
use crate::frontend::{FunId, Label};
use crate::invariant::{farkas_entails, LinExpr};
use crate::lpsolve::{Cmp, Objective, Outcome, Problem};
use crate::poly::TemplateVarId;

/// A product of up to `k` gamma members, expanded over the dimensions.
#[derive(Debug, Clone)]
pub struct MonoidElement {
    /// Sorted indices into the triple's gamma, empty for the constant one.
    pub factors: Vec<usize>,
    pub poly: BTreeMap<Vec<usize>, BigRational>,
}

fn poly_mul(
    a: &BTreeMap<Vec<usize>, BigRational>,
    b: &BTreeMap<Vec<usize>, BigRational>,
) -> BTreeMap<Vec<usize>, BigRational> {
    let mut out: BTreeMap<Vec<usize>, BigRational> = BTreeMap::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            let mut key = ma.clone();
            key.extend(mb.iter().copied());
            key.sort_unstable();
            let slot = out.entry(key).or_insert_with(BigRational::zero);
            *slot += ca * cb;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn poly_of_lin(g: &LinExpr) -> BTreeMap<Vec<usize>, BigRational> {
    let mut out = BTreeMap::new();
    for (d, c) in &g.coeffs {
        out.insert(vec![*d], c.clone());
    }
    if !g.constant.is_zero() {
        out.insert(Vec::new(), g.constant.clone());
    }
    out
}

/// Products of at most `k` gamma members, the empty product included.
///
/// Members that are already nonnegative combinations of the others (plus a
/// nonnegative constant) are dropped first: any product using such a member
/// expands into products of the survivors with the same degree, so no
/// certificate is lost while the basis shrinks considerably. Elements with
/// equal expansions are deduplicated.
pub fn monoid_basis(gamma: &[LinExpr], k: usize) -> Vec<MonoidElement> {
    let mut keep: Vec<usize> = Vec::new();
    for i in 0..gamma.len() {
        let mut others: Vec<LinExpr> =
            keep.iter().map(|&j| gamma[j].clone()).collect();
        others.extend(gamma[i + 1..].iter().cloned());
        if farkas_entails(&others, &gamma[i]).is_none() {
            keep.push(i);
        }
    }

    let mut elements: Vec<MonoidElement> = Vec::new();
    let mut seen: BTreeSet<Vec<(Vec<usize>, BigRational)>> = BTreeSet::new();
    let one: BTreeMap<Vec<usize>, BigRational> =
        [(Vec::new(), BigRational::one())].into_iter().collect();
    let mut frontier: Vec<MonoidElement> =
        vec![MonoidElement { factors: Vec::new(), poly: one }];
    seen.insert(canon(&frontier[0].poly));
    elements.push(frontier[0].clone());
    for _ in 0..k {
        let mut next: Vec<MonoidElement> = Vec::new();
        for el in &frontier {
            let start = el.factors.last().map_or(0, |&j| {
                keep.iter().position(|&x| x == j).unwrap()
            });
            for &j in &keep[start..] {
                let mut factors = el.factors.clone();
                factors.push(j);
                let poly = poly_mul(&el.poly, &poly_of_lin(&gamma[j]));
                if poly.is_empty() {
                    continue;
                }
                let c = canon(&poly);
                let fresh = seen.insert(c);
                let me = MonoidElement { factors, poly };
                if fresh {
                    elements.push(me.clone());
                }
                next.push(me);
            }
        }
        frontier = next;
    }
    elements
}

fn canon(p: &BTreeMap<Vec<usize>, BigRational>) -> Vec<(Vec<usize>, BigRational)> {
    p.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
}

#[derive(Debug, Clone)]
pub struct TripleCertificate {
    pub fun: FunId,
    pub label: Label,
    pub kind: TripleKind,
    /// Nonzero multipliers: gamma indices of the product's factors (empty
    /// for the constant one) with the multiplier value.
    pub lambda: Vec<(Vec<usize>, BigRational)>,
}

#[derive(Debug, Clone)]
pub struct Certificate {
    pub template_values: Vec<BigRational>,
    pub per_triple: Vec<TripleCertificate>,
}

#[derive(Debug, Clone)]
pub enum Goal {
    Feasibility,
    /// Minimize the sum of absolute values of the given template variables.
    MinimizeAbsSum(Vec<TemplateVarId>),
}

#[derive(Debug)]
pub enum SystemOutcome {
    Solved(Certificate),
    Infeasible,
}

struct Block {
    monomials: Vec<Vec<usize>>,
    elements: Vec<MonoidElement>,
    /// Per monomial: constant part and template-linear part of the
    /// obligation coefficient.
    const_rhs: Vec<BigRational>,
    lin_rhs: Vec<BTreeMap<TemplateVarId, BigRational>>,
}

fn build_block(at: &AbstractTriple, k: usize) -> Block {
    let elements = monoid_basis(&at.gamma, k);
    let mut keys: BTreeSet<Vec<usize>> = at.obligation.keys().cloned().collect();
    for el in &elements {
        keys.extend(el.poly.keys().cloned());
    }
    let monomials: Vec<Vec<usize>> = keys.into_iter().collect();
    let mut const_rhs = Vec::with_capacity(monomials.len());
    let mut lin_rhs = Vec::with_capacity(monomials.len());
    for m in &monomials {
        match at.obligation.get(m) {
            Some(c) => {
                const_rhs.push(c.constant.clone());
                lin_rhs.push(c.linear.clone());
            }
            None => {
                const_rhs.push(BigRational::zero());
                lin_rhs.push(BTreeMap::new());
            }
        }
    }
    Block { monomials, elements, const_rhs, lin_rhs }
}

/// Fixed-point presolve over one block. A monomial row whose obligation
/// coefficient is identically zero reads Σ cᵢ·λᵢ = 0; when every live cᵢ
/// shares one sign, λ ≥ 0 forces all supporting multipliers to zero, which
/// exposes further one-signed rows. Fixing those multipliers never changes
/// the solution set, so the shrunken block is equivalent to the original.
/// Returns `false` when a row degenerates to a nonzero constant equalling
/// an empty sum, which makes the whole system infeasible outright.
fn presolve_block(block: &mut Block) -> bool {
    let mut live_el = vec![true; block.elements.len()];
    let mut live_row = vec![true; block.monomials.len()];
    loop {
        let mut changed = false;
        for i in 0..block.monomials.len() {
            if !live_row[i]
                || !block.const_rhs[i].is_zero()
                || !block.lin_rhs[i].is_empty()
            {
                continue;
            }
            let m = &block.monomials[i];
            let mut pos = false;
            let mut neg = false;
            for (j, el) in block.elements.iter().enumerate() {
                if !live_el[j] {
                    continue;
                }
                match el.poly.get(m) {
                    Some(c) if c.is_positive() => pos = true,
                    Some(c) if c.is_negative() => neg = true,
                    _ => {}
                }
            }
            if pos && neg {
                continue;
            }
            for (j, el) in block.elements.iter().enumerate() {
                if live_el[j] && el.poly.contains_key(m) {
                    live_el[j] = false;
                    changed = true;
                }
            }
            live_row[i] = false;
            changed = true;
        }
        if !changed {
            break;
        }
    }
    let mut it = live_el.iter();
    block.elements.retain(|_| *it.next().unwrap());
    let mut ok = true;
    let keep: Vec<bool> = (0..block.monomials.len())
        .map(|i| {
            if !live_row[i] {
                return false;
            }
            let m = &block.monomials[i];
            let supported = block.elements.iter().any(|el| el.poly.contains_key(m));
            if !supported && block.lin_rhs[i].is_empty() {
                if block.const_rhs[i].is_zero() {
                    return false;
                }
                ok = false;
            }
            true
        })
        .collect();
    let mut it = keep.iter();
    block.monomials.retain(|_| *it.next().unwrap());
    let mut it = keep.iter();
    block.const_rhs.retain(|_| *it.next().unwrap());
    let mut it = keep.iter();
    block.lin_rhs.retain(|_| *it.next().unwrap());
    ok
}

fn solve_block(
    block: &Block,
    values: &[BigRational],
) -> Option<Vec<(Vec<usize>, BigRational)>> {
    let n = block.elements.len();
    let mut p = Problem::new(n);
    for (i, m) in block.monomials.iter().enumerate() {
        let mut row = vec![BigRational::zero(); n];
        for (j, el) in block.elements.iter().enumerate() {
            if let Some(c) = el.poly.get(m) {
                row[j] = c.clone();
            }
        }
        let mut rhs = block.const_rhs[i].clone();
        for (v, a) in &block.lin_rhs[i] {
            rhs += a * &values[v.0];
        }
        p.add(row, Cmp::Eq, rhs);
    }
    match crate::lpsolve::solve(&p, &Objective::feasibility(n)) {
        Outcome::Optimal { point, .. } => Some(
            block
                .elements
                .iter()
                .zip(&point)
                .filter(|(_, l)| !l.is_zero())
                .map(|(el, l)| (el.factors.clone(), l.clone()))
                .collect(),
        ),
        Outcome::Infeasible { .. } => None,
        Outcome::Unbounded => unreachable!("feasibility objective is bounded"),
    }
}

pub fn solve_system(
    abs: &[AbstractTriple],
    num_template: usize,
    k: usize,
    goal: &Goal,
) -> SystemOutcome {
    let mut blocks: Vec<Block> = abs.iter().map(|at| build_block(at, k)).collect();
    if std::env::var_os("LP_NO_PRESOLVE").is_none() {
        for block in &mut blocks {
            if !presolve_block(block) {
                return SystemOutcome::Infeasible;
            }
        }
    }
    let objective_vars: &[TemplateVarId] = match goal {
        Goal::Feasibility => &[],
        Goal::MinimizeAbsSum(vs) => vs,
    };

    let mut offset = vec![0usize; blocks.len()];
    let mut next = num_template;
    for (b, block) in blocks.iter().enumerate() {
        offset[b] = next;
        next += block.elements.len();
    }
    let aux0 = next;
    let n = next + objective_vars.len();

    let mut p = Problem::new(n);
    for v in 0..num_template {
        p.mark_free(v);
    }
    for (b, block) in blocks.iter().enumerate() {
        for (i, m) in block.monomials.iter().enumerate() {
            let mut row = vec![BigRational::zero(); n];
            for (j, el) in block.elements.iter().enumerate() {
                if let Some(c) = el.poly.get(m) {
                    row[offset[b] + j] = c.clone();
                }
            }
            for (v, a) in &block.lin_rhs[i] {
                row[v.0] = -a.clone();
            }
            p.add(row, Cmp::Eq, block.const_rhs[i].clone());
        }
    }
    let mut obj = vec![BigRational::zero(); n];
    for (i, v) in objective_vars.iter().enumerate() {
        let s = aux0 + i;
        let mut row = vec![BigRational::zero(); n];
        row[s] = BigRational::one();
        row[v.0] = -BigRational::one();
        p.add(row, Cmp::Ge, BigRational::zero());
        let mut row = vec![BigRational::zero(); n];
        row[s] = BigRational::one();
        row[v.0] = BigRational::one();
        p.add(row, Cmp::Ge, BigRational::zero());
        obj[s] = BigRational::one();
    }

    match crate::lpsolve::solve(&p, &Objective::Minimize(obj)) {
        Outcome::Optimal { point, .. } => {
            let template_values = point[..num_template].to_vec();
            let per_triple = abs
                .iter()
                .zip(&blocks)
                .enumerate()
                .map(|(b, (at, block))| TripleCertificate {
                    fun: at.fun,
                    label: at.label,
                    kind: at.kind,
                    lambda: block
                        .elements
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| !point[offset[b] + *j].is_zero())
                        .map(|(j, el)| {
                            (el.factors.clone(), point[offset[b] + j].clone())
                        })
                        .collect(),
                })
                .collect();
            SystemOutcome::Solved(Certificate { template_values, per_triple })
        }
        Outcome::Infeasible { farkas } => {
            if std::env::var_os("LP_TRACE").is_some() {
                let mut r = 0usize;
                for (b, block) in blocks.iter().enumerate() {
                    let nz = farkas[r..r + block.monomials.len()]
                        .iter()
                        .filter(|y| !y.is_zero())
                        .count();
                    if nz > 0 {
                        eprintln!(
                            "    farkas block {} ({:?} label {:?} {:?}): {} rows",
                            b, abs[b].fun, abs[b].label, abs[b].kind, nz
                        );
                    }
                    r += block.monomials.len();
                }
            }
            SystemOutcome::Infeasible
        }
        Outcome::Unbounded => {
            unreachable!("objective is bounded below by construction")
        }
    }
}

/// Re-check one triple's multipliers against fixed template values.
pub fn check_solution(
    abs: &[AbstractTriple],
    values: &[BigRational],
    k: usize,
) -> Result<Vec<TripleCertificate>, usize> {
    let mut out = Vec::new();
    for (i, at) in abs.iter().enumerate() {
        let mut block = build_block(at, k);
        if !presolve_block(&mut block) {
            return Err(i);
        }
        match solve_block(&block, values) {
            Some(lambda) => out.push(TripleCertificate {
                fun: at.fun,
                label: at.label,
                kind: at.kind,
                lambda,
            }),
            None => return Err(i),
        }
    }
    Ok(out)
}

/// Exact replay of a certificate: the multiplier combination must equal the
/// obligation coefficient for coefficient once template values are filled in.
pub fn replay(
    at: &AbstractTriple,
    values: &[BigRational],
    lambda: &[(Vec<usize>, BigRational)],
) -> bool {
    let mut combo: BTreeMap<Vec<usize>, BigRational> = BTreeMap::new();
    for (factors, l) in lambda {
        if l.is_negative() {
            return false;
        }
        let mut poly: BTreeMap<Vec<usize>, BigRational> =
            [(Vec::new(), l.clone())].into_iter().collect();
        for &j in factors {
            poly = poly_mul(&poly, &poly_of_lin(&at.gamma[j]));
        }
        for (m, c) in poly {
            let slot = combo.entry(m).or_insert_with(BigRational::zero);
            *slot += c;
        }
    }
    combo.retain(|_, c| !c.is_zero());
    let mut target: BTreeMap<Vec<usize>, BigRational> = BTreeMap::new();
    for (m, coef) in &at.obligation {
        let v = coef.eval(|tv| values[tv.0].clone());
        if !v.is_zero() {
            target.insert(m.clone(), v);
        }
    }
    combo == target
}

pub fn render_certificate(at: &AbstractTriple, cert: &TripleCertificate) -> String {
    let mut out = String::new();
    for (factors, l) in &cert.lambda {
        let product = if factors.is_empty() {
            "1".to_string()
        } else {
            factors
                .iter()
                .map(|&j| format!("({})", render_lin(&at.gamma[j], &at.dim_names)))
                .collect::<Vec<_>>()
                .join("*")
        };
        out.push_str(&format!("  {} * {}\n", render_rat(l), product));
    }
    out
}

fn render_rat(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::{abstract_triples, directed_pow, Direction};
    use crate::cfg;
    use crate::constraints::generate;
    use crate::expansion::expand;
    use crate::frontend::parse;
    use crate::poly::{Coef, OpKind};
    use crate::rat::{rat, rat_i64};
    use crate::template::build_templates;

    fn lin(pairs: &[(usize, BigRational)], c: BigRational) -> LinExpr {
        let mut le = LinExpr::constant(c);
        for (d, k) in pairs {
            le.add_term(*d, k);
        }
        le
    }

    #[test]
    fn monoid_expands_pair_products() {
        let gamma = vec![
            lin(&[(0, rat_i64(1))], rat_i64(-1)),
            lin(&[(1, rat_i64(1))], rat_i64(2)),
        ];
        let els = monoid_basis(&gamma, 2);
        assert_eq!(els.len(), 6);
        let prod = els
            .iter()
            .find(|e| e.factors == vec![0, 1])
            .expect("cross product present");
        let expected: BTreeMap<Vec<usize>, BigRational> = [
            (vec![0, 1], rat_i64(1)),
            (vec![0], rat_i64(2)),
            (vec![1], rat_i64(-1)),
            (Vec::new(), rat_i64(-2)),
        ]
        .into_iter()
        .collect();
        assert_eq!(prod.poly, expected);
    }

    #[test]
    fn redundant_members_shrink_the_basis() {
        let gamma = vec![
            lin(&[(0, rat_i64(1))], rat_i64(0)),
            lin(&[(1, rat_i64(1))], rat_i64(0)),
            lin(&[(0, rat_i64(1)), (1, rat_i64(1))], rat_i64(1)),
        ];
        let els = monoid_basis(&gamma, 1);
        // The sum member is a combination of the first two plus a constant.
        assert_eq!(els.len(), 3);
        assert!(els.iter().all(|e| e.factors != vec![2]));
    }

    fn micro_triple(
        gamma: Vec<LinExpr>,
        obligation: BTreeMap<Vec<usize>, Coef>,
        names: &[&str],
    ) -> AbstractTriple {
        AbstractTriple {
            fun: FunId(0),
            label: Label(1),
            kind: TripleKind::Nonneg,
            dims: Vec::new(),
            dim_names: names.iter().map(|s| s.to_string()).collect(),
            gamma,
            obligation,
        }
    }

    #[test]
    fn karatsuba_step_constant_decomposes() {
        // One level of the even-split recurrence with leading coefficient
        // 1000: the per-step surplus (1000 - 3000*(1/2)^r) * n^r - 7n must
        // be a nonnegative combination over n >= 2, u >= 2^r, u >= 2^(r-1) n.
        let r = rat(8, 5);
        let a = directed_pow(&rat_i64(2), &r, Direction::Lower);
        let b = directed_pow(&rat_i64(2), &(&r - rat_i64(1)), Direction::Lower);
        let kappa = directed_pow(&rat(1, 2), &r, Direction::Upper);
        let gamma = vec![
            lin(&[(0, rat_i64(1))], rat_i64(-2)),
            lin(&[(1, rat_i64(1))], -a),
            lin(&[(1, rat_i64(1)), (0, -b.clone())], rat_i64(0)),
        ];
        let surplus = rat_i64(1000) - rat_i64(3000) * &kappa;
        assert!(surplus.is_positive());
        let obligation: BTreeMap<Vec<usize>, Coef> = [
            (vec![1], Coef::from_const(surplus)),
            (vec![0], Coef::from_const(rat_i64(-7))),
        ]
        .into_iter()
        .collect();
        let at = micro_triple(gamma, obligation, &["n", "u"]);
        let out = solve_system(std::slice::from_ref(&at), 0, 1, &Goal::Feasibility);
        let SystemOutcome::Solved(cert) = out else {
            panic!("expected a certificate")
        };
        assert!(replay(&at, &[], &cert.per_triple[0].lambda));
        let on_slope = cert.per_triple[0]
            .lambda
            .iter()
            .find(|(f, _)| f == &vec![2])
            .expect("slope member used");
        assert!(on_slope.1 >= rat_i64(7) / &b);
    }

    #[test]
    fn impossible_obligation_is_reported_infeasible() {
        let gamma = vec![lin(&[(0, rat_i64(1))], rat_i64(-1))];
        let obligation: BTreeMap<Vec<usize>, Coef> =
            [(vec![0], Coef::from_const(rat_i64(-1)))].into_iter().collect();
        let at = micro_triple(gamma, obligation, &["x"]);
        let out = solve_system(std::slice::from_ref(&at), 0, 2, &Goal::Feasibility);
        assert!(matches!(out, SystemOutcome::Infeasible));
    }

    #[test]
    fn abs_sum_goal_minimizes_the_chosen_variable() {
        // Obligation (c0 - 2) * (x - 1): feasible exactly when c0 >= 2.
        let gamma = vec![lin(&[(0, rat_i64(1))], rat_i64(-1))];
        let c0 = TemplateVarId(0);
        let obligation: BTreeMap<Vec<usize>, Coef> = [
            (vec![0], Coef::from_var(c0).add(&Coef::from_const(rat_i64(-2)))),
            (
                Vec::new(),
                Coef::from_var(c0).scale(&rat_i64(-1)).add(&Coef::from_const(rat_i64(2))),
            ),
        ]
        .into_iter()
        .collect();
        let at = micro_triple(gamma, obligation, &["x"]);
        let out = solve_system(
            std::slice::from_ref(&at),
            1,
            1,
            &Goal::MinimizeAbsSum(vec![c0]),
        );
        let SystemOutcome::Solved(cert) = out else {
            panic!("expected a certificate")
        };
        assert_eq!(cert.template_values[0], rat_i64(2));
        assert!(replay(&at, &cert.template_values, &cert.per_triple[0].lambda));
    }

    fn pipeline(
        name: &str,
        op: OpKind,
        degree: usize,
    ) -> (usize, Vec<AbstractTriple>) {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus");
        let src = std::fs::read_to_string(format!("{}/{}.rec", dir, name)).unwrap();
        let program = parse(&src).unwrap();
        let cfg = cfg::build(&program);
        let templates = build_templates(&program, &cfg, &op, degree, None).unwrap();
        let ex = expand(&program, &cfg, &templates);
        let ts = generate(&cfg, &templates, &ex);
        let abs = abstract_triples(&program, &ts, &op);
        (templates.num_vars(), abs)
    }

    #[test]
    fn binary_search_admits_a_logarithmic_measure() {
        let (nvars, abs) = pipeline("binary_search", OpKind::Log, 1);
        let out = solve_system(&abs, nvars, 1, &Goal::Feasibility);
        let SystemOutcome::Solved(cert) = out else {
            panic!("expected a certificate")
        };
        for (at, tc) in abs.iter().zip(&cert.per_triple) {
            assert!(replay(at, &cert.template_values, &tc.lambda));
        }
    }

    #[test]
    fn binary_search_accepts_the_worked_solution() {
        use crate::poly::{Factor, Monomial};

        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus");
        let src =
            std::fs::read_to_string(format!("{}/binary_search.rec", dir)).unwrap();
        let program = parse(&src).unwrap();
        let cfg = cfg::build(&program);
        let templates =
            build_templates(&program, &cfg, &OpKind::Log, 1, None).unwrap();
        let ex = expand(&program, &cfg, &templates);
        let ts = generate(&cfg, &templates, &ex);
        let abs = abstract_triples(&program, &ts, &OpKind::Log);
        assert_eq!(templates.num_vars(), 3);

        let entry = program.functions[0].entry_label;
        let eta = &templates.etas[&entry];
        let n = program.functions[0].vars[0];
        let var_of = |m: &Monomial| -> TemplateVarId {
            let coef = &eta.terms[m];
            assert!(coef.constant.is_zero());
            assert_eq!(coef.linear.len(), 1);
            *coef.linear.keys().next().unwrap()
        };
        let ln_n = var_of(&Monomial::single(Factor::Ln(
            crate::frontend::NormExpr::var(n),
        )));
        let lin_n = var_of(&Monomial::single(Factor::Var(n)));
        let const_m = var_of(&Monomial::one());

        let ln2l = crate::abstraction::directed_ln(&rat_i64(2), Direction::Lower);
        let mut values = vec![rat_i64(0); 3];
        values[ln_n.0] = rat_i64(2) / &ln2l;
        values[lin_n.0] = rat_i64(0);
        values[const_m.0] = rat_i64(2);
        let certs = check_solution(&abs, &values, 1).expect("worked values accepted");
        for (at, tc) in abs.iter().zip(&certs) {
            assert!(replay(at, &values, &tc.lambda));
        }
    }
}
