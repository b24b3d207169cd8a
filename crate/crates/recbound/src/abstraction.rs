//! Linear abstraction of constraint triples.
//!
//! A triple's obligation may mention floored expressions and interpreted
//! logarithm or power terms, none of which a linear solver understands.
//! This stage replaces every such term with a fresh dimension and collects,
//! per triple, a set `gamma` of linear expressions that are non-negative on
//! every program state satisfying the premise. The replacement facts come
//! in three groups: bracketing constraints for floors (from the defining
//! inequalities of integer division, tightened through a lower bound of the
//! argument), mean-value bounds tying each logarithm or power dimension to
//! its argument, and transfer bounds between two such dimensions whenever
//! one argument is linearly bounded by the other.
//!
//! Real constants arising here (Euler's number, logarithms and fractional
//! powers of rationals) are replaced by rationals rounded outward to four
//! decimal places, each in the direction that keeps the collected
//! inequality true. The rounded values are exposed through the `directed_*`
//! helpers so downstream consumers can reproduce them exactly.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::constraints::{Triple, TripleKind};
use crate::frontend::{FunId, Label, NormBase, NormExpr, Program};
use crate::invariant::{self, Bound, FloorSystem, LinExpr};
use crate::poly::{Coef, Factor, OpKind};
use crate::rat::{
    default_constant_eps, enclose_e, enclose_ln, enclose_pow, rat, rat_i64,
    round_down_dec, round_up_dec, Enclosure,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Lower,
    Upper,
}

/// Outward rounding of a real constant's enclosure to four decimals.
/// `Lower` returns a rational at most the true value, `Upper` at least.
pub fn directed(enc: &Enclosure, dir: Direction) -> BigRational {
    match dir {
        Direction::Lower => round_down_dec(&enc.lo, 4),
        Direction::Upper => round_up_dec(&enc.hi, 4),
    }
}

pub fn directed_ln(q: &BigRational, dir: Direction) -> BigRational {
    directed(&enclose_ln(q, &default_constant_eps(q)), dir)
}

pub fn directed_pow(q: &BigRational, r: &BigRational, dir: Direction) -> BigRational {
    directed(&enclose_pow(q, r, &default_constant_eps(q)), dir)
}

pub fn directed_euler(dir: Direction) -> BigRational {
    directed(&enclose_e(&default_constant_eps(&rat_i64(3))), dir)
}

/// What a dimension of an abstracted triple stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DimMeaning {
    /// A program variable or an interned floor term.
    Base(NormBase),
    /// Natural logarithm of the expression.
    Ln(NormExpr),
    /// The expression raised to the analysis exponent.
    Pow(NormExpr),
    /// The expression raised to the analysis exponent less one.
    PowAux(NormExpr),
}

#[derive(Debug, Clone)]
pub struct AbstractTriple {
    pub fun: FunId,
    pub label: Label,
    pub kind: TripleKind,
    pub dims: Vec<DimMeaning>,
    pub dim_names: Vec<String>,
    /// Linear expressions non-negative on every concretization of a
    /// premise-satisfying state; sorted and deduplicated.
    pub gamma: Vec<LinExpr>,
    /// The obligation as a polynomial over the dimensions, monomials as
    /// sorted dimension multisets, coefficients affine in template
    /// variables.
    pub obligation: BTreeMap<Vec<usize>, Coef>,
}

pub fn abstract_triples(
    program: &Program,
    triples: &[Triple],
    op: &OpKind,
) -> Vec<AbstractTriple> {
    triples.iter().filter_map(|t| abstract_one(program, t, op)).collect()
}

fn abstract_one(program: &Program, t: &Triple, op: &OpKind) -> Option<AbstractTriple> {
    let ln_args: Vec<NormExpr> = t.obligation.ln_args().into_iter().collect();
    let pow_args: Vec<NormExpr> = t.obligation.pow_args().into_iter().collect();

    let mut extra: Vec<NormExpr> = Vec::new();
    extra.extend(ln_args.iter().cloned());
    extra.extend(pow_args.iter().cloned());
    for m in t.obligation.terms.keys() {
        for f in &m.0 {
            match f {
                Factor::Var(v) => extra.push(NormExpr::var(*v)),
                Factor::Floor(e, c) => extra.push(e.floor_div(c)),
                Factor::Ln(_) | Factor::Pow(_) => {}
            }
        }
    }

    let fs = FloorSystem::build(&t.premise, &extra);
    if invariant::is_empty(&fs.atoms).is_some() {
        return None;
    }

    let nfs = fs.dims.len();
    let u_dim = |k: usize| nfs + k;
    let v_dim = |k: usize| nfs + ln_args.len() + k;
    let vp_dim = |k: usize| nfs + ln_args.len() + pow_args.len() + k;

    let r = match op {
        OpKind::Exp(r) => Some(r.clone()),
        OpKind::Log => None,
    };
    assert!(
        pow_args.is_empty() || r.is_some(),
        "power terms require an exponent"
    );

    let mut gamma: BTreeSet<LinExpr> = fs.atoms.iter().cloned().collect();

    // Least value of each interpreted argument over the premise polyhedron.
    let arg_floor = |e: &NormExpr| -> Option<BigRational> {
        match invariant::lower_bound(&fs.atoms, &fs.lin(e)) {
            Bound::Value(t) if t >= BigRational::one() => Some(t),
            _ => None,
        }
    };
    let t_ln: Vec<Option<BigRational>> = ln_args.iter().map(arg_floor).collect();
    let t_pow: Vec<Option<BigRational>> = pow_args.iter().map(arg_floor).collect();

    for (k, e) in ln_args.iter().enumerate() {
        let Some(te) = &t_ln[k] else { continue };
        let le = fs.lin(e);
        let u = LinExpr::dim(u_dim(k));
        gamma.insert(le.sub(&u.scale(&kappa_lower(te))));
        gamma.insert(u.add_const(&-directed_ln(te, Direction::Lower)));
    }

    if let Some(r) = &r {
        let rm1 = r - BigRational::one();
        for (k, e) in pow_args.iter().enumerate() {
            let Some(te) = &t_pow[k] else { continue };
            let le = fs.lin(e);
            let v = LinExpr::dim(v_dim(k));
            let vp = LinExpr::dim(vp_dim(k));
            let t_rm1 = directed_pow(te, &rm1, Direction::Lower);
            gamma.insert(v.sub(&le.scale(&t_rm1)));
            gamma.insert(v.add_const(&-directed_pow(te, r, Direction::Lower)));
            gamma.insert(vp.add_const(&-t_rm1));
            let two = rat_i64(2);
            if *r >= two {
                let t_rm2 = directed_pow(te, &(r - &two), Direction::Lower);
                gamma.insert(vp.sub(&le.scale(&t_rm2)));
            } else {
                let t_2mr = directed_pow(te, &(&two - r), Direction::Lower);
                gamma.insert(le.sub(&vp.scale(&t_2mr)));
            }
        }
    }

    // Transfer bounds between interpreted dimensions sharing a triple.
    for k1 in 0..ln_args.len() {
        for k2 in 0..ln_args.len() {
            if k1 == k2 || t_ln[k1].is_none() {
                continue;
            }
            let Some(t2) = &t_ln[k2] else { continue };
            let e1 = fs.lin(&ln_args[k1]);
            let e2 = fs.lin(&ln_args[k2]);
            let u1 = LinExpr::dim(u_dim(k1));
            let u2 = LinExpr::dim(u_dim(k2));
            if let Some((rs, bs)) = invariant::no_smaller(&fs.atoms, &e1, &e2) {
                if rs.is_positive() {
                    let mut m = u1
                        .sub(&u2)
                        .add_const(&-directed_ln(&rs, Direction::Lower));
                    if bs.is_negative() {
                        let shift = &bs / &rs;
                        m = m.add_const(&(-&shift / (t2 + &shift)));
                    }
                    gamma.insert(m);
                }
            }
            if let Some((rt, bt)) = invariant::no_greater(&fs.atoms, &e1, &e2) {
                if rt.is_positive() {
                    let mut m = u2
                        .sub(&u1)
                        .add_const(&directed_ln(&rt, Direction::Upper));
                    if !bt.is_negative() {
                        m = m.add_const(&(&bt / &rt / t2));
                    }
                    gamma.insert(m);
                }
            }
        }
    }
    if let Some(r) = &r {
        let rm1 = r - BigRational::one();
        for k1 in 0..pow_args.len() {
            for k2 in 0..pow_args.len() {
                if k1 == k2 || t_pow[k1].is_none() {
                    continue;
                }
                let Some(t2) = &t_pow[k2] else { continue };
                let e1 = fs.lin(&pow_args[k1]);
                let e2 = fs.lin(&pow_args[k2]);
                let v1 = LinExpr::dim(v_dim(k1));
                let v2 = LinExpr::dim(v_dim(k2));
                let vp2 = LinExpr::dim(vp_dim(k2));
                if let Some((rs, bs)) = invariant::no_smaller(&fs.atoms, &e1, &e2) {
                    if rs.is_positive() && !bs.is_negative() {
                        let c = directed_pow(&rs, r, Direction::Lower);
                        let inner = v2.add(&vp2.scale(&(r * &bs / &rs)));
                        gamma.insert(v1.sub(&inner.scale(&c)));
                    }
                }
                if let Some((rt, bt)) = invariant::no_greater(&fs.atoms, &e1, &e2) {
                    if rt.is_positive() && !bt.is_negative() {
                        let c = directed_pow(&rt, r, Direction::Upper);
                        let mcoef = if bt.is_positive() {
                            let m = &bt / (&rt * t2) + BigRational::one();
                            directed_pow(&m, &rm1, Direction::Upper)
                        } else {
                            BigRational::one()
                        };
                        let inner = v2.add(&vp2.scale(&(&mcoef * r * &bt / &rt)));
                        gamma.insert(inner.scale(&c).sub(&v1));
                    }
                }
            }
        }
    }

    // Obligation over the new dimensions.
    let mut obligation: BTreeMap<Vec<usize>, Coef> = BTreeMap::new();
    for (m, coef) in &t.obligation.terms {
        let mut dims: Vec<usize> = Vec::with_capacity(m.0.len());
        for f in &m.0 {
            let d = match f {
                Factor::Var(v) => fs
                    .dim_of(&NormBase::Var(*v))
                    .expect("variable factor interned"),
                Factor::Floor(e, c) => fs
                    .dim_of(&NormBase::Floor(Box::new(e.clone()), c.clone()))
                    .expect("floor factor interned"),
                Factor::Ln(e) => {
                    u_dim(ln_args.iter().position(|a| a == e).expect("ln arg listed"))
                }
                Factor::Pow(e) => v_dim(
                    pow_args.iter().position(|a| a == e).expect("pow arg listed"),
                ),
            };
            dims.push(d);
        }
        dims.sort_unstable();
        let slot = obligation.entry(dims).or_insert_with(Coef::zero);
        *slot = slot.add(coef);
    }
    obligation.retain(|_, c| !c.is_zero());

    let mut dims: Vec<DimMeaning> = Vec::new();
    let mut dim_names: Vec<String> = Vec::new();
    let mut floor_count = 0usize;
    for b in &fs.dims {
        dims.push(DimMeaning::Base(b.clone()));
        match b {
            NormBase::Var(v) => dim_names.push(program.var_name(*v).to_string()),
            NormBase::Floor(..) => {
                floor_count += 1;
                dim_names.push(format!("w{}", floor_count));
            }
        }
    }
    for (k, e) in ln_args.iter().enumerate() {
        dims.push(DimMeaning::Ln(e.clone()));
        dim_names.push(format!("u{}", k + 1));
    }
    for (k, e) in pow_args.iter().enumerate() {
        dims.push(DimMeaning::Pow(e.clone()));
        dim_names.push(format!("v{}", k + 1));
    }
    for (k, e) in pow_args.iter().enumerate() {
        dims.push(DimMeaning::PowAux(e.clone()));
        dim_names.push(format!("v{}'", k + 1));
    }

    Some(AbstractTriple {
        fun: t.fun,
        label: t.label,
        kind: t.kind,
        dims,
        dim_names,
        gamma: gamma.into_iter().collect(),
        obligation,
    })
}

/// Lower rounding of the least slope constant tying a logarithm to its
/// argument: Euler's number when the argument can reach it, otherwise
/// `t / ln t` for the argument's least value `t`.
fn kappa_lower(t: &BigRational) -> BigRational {
    if t_below_euler(t) {
        directed_euler(Direction::Lower)
    } else {
        let eps = default_constant_eps(t);
        let enc = Enclosure::exact(t.clone()).div(&enclose_ln(t, &eps));
        directed(&enc, Direction::Lower)
    }
}

fn t_below_euler(t: &BigRational) -> bool {
    let mut eps = rat(1, 1_000);
    loop {
        let enc = enclose_e(&eps);
        if *t <= enc.lo {
            return true;
        }
        if *t >= enc.hi {
            return false;
        }
        eps = eps / rat_i64(1_000);
    }
}

pub fn render_lin(le: &LinExpr, names: &[String]) -> String {
    let mut parts: Vec<String> = Vec::new();
    for (d, c) in &le.coeffs {
        let name = &names[*d];
        let piece = if c.is_one() {
            name.clone()
        } else if (-c).is_one() {
            format!("-{}", name)
        } else {
            format!("{}*{}", render_q(c), name)
        };
        parts.push(piece);
    }
    if !le.constant.is_zero() || parts.is_empty() {
        parts.push(render_q(&le.constant));
    }
    let mut out = String::new();
    for (i, p) in parts.iter().enumerate() {
        if i == 0 {
            out.push_str(p);
        } else if let Some(rest) = p.strip_prefix('-') {
            out.push_str(" - ");
            out.push_str(rest);
        } else {
            out.push_str(" + ");
            out.push_str(p);
        }
    }
    out
}

fn render_q(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn render_abstract(program: &Program, names: &[String], t: &AbstractTriple) -> String {
    let fun_name = &program.function(t.fun).name;
    let kind = match t.kind {
        TripleKind::Nonneg => "nonneg".to_string(),
        TripleKind::Step { branch, piece } => {
            format!("step {}.{}", branch + 1, piece + 1)
        }
    };
    let mut out = format!("{}@{} [{}]\n", fun_name, t.label.0, kind);
    let mut defs: Vec<String> = Vec::new();
    for (d, m) in t.dims.iter().enumerate() {
        match m {
            DimMeaning::Base(NormBase::Var(_)) => {}
            DimMeaning::Base(NormBase::Floor(e, c)) => defs.push(format!(
                "{} = floor(({})/{})",
                t.dim_names[d],
                e.display(program),
                c
            )),
            DimMeaning::Ln(e) => {
                defs.push(format!("{} = ln({})", t.dim_names[d], e.display(program)))
            }
            DimMeaning::Pow(e) => {
                defs.push(format!("{} = ({})^r", t.dim_names[d], e.display(program)))
            }
            DimMeaning::PowAux(e) => defs.push(format!(
                "{} = ({})^(r-1)",
                t.dim_names[d],
                e.display(program)
            )),
        }
    }
    if !defs.is_empty() {
        out.push_str(&format!("  where {}\n", defs.join(", ")));
    }
    for g in &t.gamma {
        out.push_str(&format!("  {} >= 0\n", render_lin(g, &t.dim_names)));
    }
    let mut ob_parts: Vec<String> = Vec::new();
    for (mono, coef) in &t.obligation {
        let mono_str = if mono.is_empty() {
            String::new()
        } else {
            mono.iter()
                .map(|d| t.dim_names[*d].clone())
                .collect::<Vec<_>>()
                .join("*")
        };
        let c = crate::poly::render_coef(coef, names);
        let piece = if mono_str.is_empty() {
            c.text
        } else if c.is_unit {
            mono_str
        } else if c.compound {
            format!("({})*{}", c.text, mono_str)
        } else {
            format!("{}*{}", c.text, mono_str)
        };
        ob_parts.push(piece);
    }
    out.push_str(&format!("  |=  {}  >=  0\n", ob_parts.join(" + ")));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg;
    use crate::constraints::generate;
    use crate::expansion::expand;
    use crate::frontend::{parse, VarId};
    use crate::rat::rat_floor;
    use crate::template::build_templates;
    use crate::template::Templates;
    use num_bigint::BigInt;

    fn corpus(name: &str) -> String {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus");
        std::fs::read_to_string(format!("{}/{}.rec", dir, name)).unwrap()
    }

    fn abstracted(
        name: &str,
        op: OpKind,
        degree: usize,
    ) -> (Program, Templates, Vec<Triple>, Vec<AbstractTriple>) {
        let program = parse(&corpus(name)).unwrap();
        let cfg = cfg::build(&program);
        let templates = build_templates(&program, &cfg, &op, degree, None).unwrap();
        let ex = expand(&program, &cfg, &templates);
        let ts = generate(&cfg, &templates, &ex);
        let abs = abstract_triples(&program, &ts, &op);
        (program, templates, ts, abs)
    }

    #[test]
    fn directed_constants_round_outward() {
        assert_eq!(directed_ln(&rat_i64(2), Direction::Lower), rat(6931, 10000));
        assert_eq!(directed_ln(&rat_i64(2), Direction::Upper), rat(6932, 10000));
        assert_eq!(directed_euler(Direction::Lower), rat(27182, 10000));
        assert_eq!(directed_euler(Direction::Upper), rat(27183, 10000));
        assert_eq!(
            directed_pow(&rat_i64(2), &rat(8, 5), Direction::Lower),
            rat(30314, 10000)
        );
        assert_eq!(
            directed_pow(&rat_i64(2), &rat(8, 5), Direction::Upper),
            rat(30315, 10000)
        );
        assert_eq!(directed_pow(&rat_i64(2), &rat_i64(1), Direction::Lower), rat_i64(2));
        assert_eq!(directed_ln(&rat_i64(1), Direction::Lower), rat_i64(0));
    }

    fn lin(pairs: &[(usize, BigRational)], c: BigRational) -> LinExpr {
        let mut le = LinExpr::constant(c);
        for (d, k) in pairs {
            le.add_term(*d, k);
        }
        le
    }

    #[test]
    fn binary_search_gamma_sets_match_the_worked_values() {
        let (_program, _templates, ts, abs) =
            abstracted("binary_search", OpKind::Log, 1);
        assert_eq!(ts.len(), 3);
        assert_eq!(abs.len(), 3);
        let one = BigRational::one();
        let el = directed_euler(Direction::Lower);
        let ln2l = directed_ln(&rat_i64(2), Direction::Lower);
        let ln2u = directed_ln(&rat_i64(2), Direction::Upper);

        // Non-negativity triple: dims [n, u1].
        let nonneg = abs.iter().find(|t| t.kind == TripleKind::Nonneg).unwrap();
        assert_eq!(nonneg.dim_names, vec!["n", "u1"]);
        let expected: BTreeSet<LinExpr> = [
            lin(&[(0, one.clone())], rat_i64(-1)),
            lin(&[(0, one.clone()), (1, -el.clone())], rat_i64(0)),
            lin(&[(1, one.clone())], rat_i64(0)),
        ]
        .into_iter()
        .collect();
        assert_eq!(nonneg.gamma.iter().cloned().collect::<BTreeSet<_>>(), expected);

        // Base step triple: dims [n, u1], premise pins n = 1.
        let base = abs
            .iter()
            .find(|t| t.kind != TripleKind::Nonneg && t.dims.len() == 2)
            .unwrap();
        let expected: BTreeSet<LinExpr> = [
            lin(&[(0, one.clone())], rat_i64(-1)),
            lin(&[(0, -one.clone())], rat_i64(1)),
            lin(&[(0, one.clone()), (1, -el.clone())], rat_i64(0)),
            lin(&[(1, one.clone())], rat_i64(0)),
        ]
        .into_iter()
        .collect();
        assert_eq!(base.gamma.iter().cloned().collect::<BTreeSet<_>>(), expected);

        // Recursive step triple: dims [n, w1, u1, u2].
        let rec = abs
            .iter()
            .find(|t| t.kind != TripleKind::Nonneg && t.dims.len() == 4)
            .unwrap();
        assert_eq!(rec.dim_names, vec!["n", "w1", "u1", "u2"]);
        let expected: BTreeSet<LinExpr> = [
            lin(&[(0, one.clone())], rat_i64(-2)),
            lin(&[(1, one.clone())], rat_i64(-1)),
            lin(&[(0, one.clone()), (1, rat_i64(-2))], rat_i64(0)),
            lin(&[(0, -one.clone()), (1, rat_i64(2))], rat_i64(1)),
            lin(&[(0, one.clone()), (2, -el.clone())], rat_i64(0)),
            lin(&[(2, one.clone())], -ln2l.clone()),
            lin(&[(1, one.clone()), (3, -el.clone())], rat_i64(0)),
            lin(&[(3, one.clone())], rat_i64(0)),
            lin(&[(2, one.clone()), (3, -one.clone())], -ln2l.clone()),
            lin(&[(2, -one.clone()), (3, one.clone())], ln2u + rat(1, 2)),
        ]
        .into_iter()
        .collect();
        assert_eq!(
            rec.gamma.iter().cloned().collect::<BTreeSet<_>>(),
            expected,
            "gamma was: {:#?}",
            rec.gamma
        );

        // Obligation: c1*(n - w1) + c2*(u1 - u2) - 2.
        let c1 = crate::poly::TemplateVarId(0);
        let c2 = crate::poly::TemplateVarId(1);
        assert_eq!(rec.obligation[&vec![0]], Coef::from_var(c1));
        assert_eq!(
            rec.obligation[&vec![1]],
            Coef::from_var(c1).scale(&-one.clone())
        );
        assert_eq!(rec.obligation[&vec![2]], Coef::from_var(c2));
        assert_eq!(
            rec.obligation[&vec![3]],
            Coef::from_var(c2).scale(&-one.clone())
        );
        assert_eq!(rec.obligation[&Vec::new()], Coef::from_const(rat_i64(-2)));
    }

    fn dim_enclosure(
        m: &DimMeaning,
        env: impl Fn(VarId) -> BigRational + Copy,
        r: Option<&BigRational>,
        eps: &BigRational,
    ) -> Enclosure {
        match m {
            DimMeaning::Base(NormBase::Var(v)) => Enclosure::exact(env(*v)),
            DimMeaning::Base(NormBase::Floor(e, c)) => {
                let q = e.eval(env) / BigRational::from(c.clone());
                Enclosure::exact(BigRational::from(rat_floor(&q)))
            }
            DimMeaning::Ln(e) => enclose_ln(&e.eval(env), eps),
            DimMeaning::Pow(e) => enclose_pow(&e.eval(env), r.unwrap(), eps),
            DimMeaning::PowAux(e) => {
                let rm1 = r.unwrap() - BigRational::one();
                enclose_pow(&e.eval(env), &rm1, eps)
            }
        }
    }

    fn tiny(digits: u32) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(10).pow(digits))
    }

    fn assert_gamma_sound(
        triples: &[Triple],
        abs: &[AbstractTriple],
        envs: &[BTreeMap<VarId, BigRational>],
        r: Option<&BigRational>,
    ) {
        let eps = tiny(30);
        let slack = -tiny(20);
        assert_eq!(triples.len(), abs.len());
        for (t, a) in triples.iter().zip(abs) {
            for env in envs {
                let look = |v: VarId| env[&v].clone();
                if !t.premise.iter().all(|p| !p.eval(look).is_negative()) {
                    continue;
                }
                let vals: Vec<Enclosure> = a
                    .dims
                    .iter()
                    .map(|m| dim_enclosure(m, look, r, &eps))
                    .collect();
                for g in &a.gamma {
                    let mut total = Enclosure::exact(g.constant.clone());
                    for (d, c) in &g.coeffs {
                        total = total.add(&vals[*d].scale(c));
                    }
                    assert!(
                        total.lo >= slack,
                        "member {:?} fell to {} at {:?}",
                        g,
                        total.lo,
                        env
                    );
                }
            }
        }
    }

    #[test]
    fn binary_search_gamma_holds_on_concrete_states() {
        let (program, _templates, ts, abs) =
            abstracted("binary_search", OpKind::Log, 1);
        let n = program.functions[0].vars[0];
        let envs: Vec<BTreeMap<VarId, BigRational>> = (1..=64)
            .map(|v| [(n, rat_i64(v))].into_iter().collect())
            .collect();
        assert_gamma_sound(&ts, &abs, &envs, None);
    }

    #[test]
    fn karatsuba_gamma_holds_on_concrete_states() {
        let r = rat(8, 5);
        let (program, _templates, ts, abs) =
            abstracted("karatsuba", OpKind::Exp(r.clone()), 2);
        let f = program.fun_by_name("karatsuba").unwrap();
        let mut envs = Vec::new();
        for n in 1..=12i64 {
            let mut env = BTreeMap::new();
            for &v in &f.vars {
                env.insert(v, rat_i64(0));
            }
            env.insert(f.vars[0], rat_i64(n));
            envs.push(env);
        }
        let entry_triples: Vec<Triple> = ts
            .iter()
            .filter(|t| t.fun == f.id)
            .cloned()
            .collect();
        let entry_abs: Vec<AbstractTriple> =
            abs.iter().filter(|t| t.fun == f.id).cloned().collect();
        assert_gamma_sound(&entry_triples, &entry_abs, &envs, Some(&r));
        // Power pair members made it in: some member couples a v to a v'.
        let has_pair = entry_abs.iter().any(|a| {
            a.gamma.iter().any(|g| {
                let touched: Vec<usize> = g.coeffs.keys().copied().collect();
                touched.iter().any(|d| matches!(a.dims[*d], DimMeaning::Pow(_)))
                    && touched
                        .iter()
                        .any(|d| matches!(a.dims[*d], DimMeaning::PowAux(_)))
            })
        });
        assert!(has_pair, "expected a transfer bound between power terms");
    }

    #[test]
    fn mergesort_abstraction_carries_log_pairs() {
        let (_program, _templates, _ts, abs) = abstracted("mergesort", OpKind::Log, 2);
        assert!(!abs.is_empty());
        let has_pair = abs.iter().any(|a| {
            a.gamma.iter().any(|g| {
                g.coeffs
                    .keys()
                    .filter(|d| matches!(a.dims[**d], DimMeaning::Ln(_)))
                    .count()
                    == 2
            })
        });
        assert!(has_pair, "expected a transfer bound between two logarithms");
        for a in &abs {
            for (mono, _) in &a.obligation {
                for d in mono {
                    assert!(*d < a.dims.len());
                }
            }
        }
    }
}
