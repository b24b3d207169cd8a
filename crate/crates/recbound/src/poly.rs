//! Polynomial expressions over program variables, floor terms, logarithms,
//! and real powers, with coefficients that are affine in template
//! variables.
//!
//! A [`Monomial`] is a sorted multiset of [`Factor`]s; substitution maps a
//! variable factor to an affine expression and therefore never increases
//! the factor count of any monomial. Coefficients ([`Coef`]) stay affine in
//! the template unknowns because the synthesis pipeline only ever adds,
//! scales, and substitutes into templates.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::frontend::{NormBase, NormExpr, Program, VarId};
use crate::rat::{enclose_ln, enclose_pow, rat_floor, Enclosure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TemplateVarId(pub usize);

/// Which interpreted function the analysis carries: natural logarithms for
/// `O(n log n)` bounds, or a fixed real power `x^r` with rational `r > 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpKind {
    Log,
    Exp(BigRational),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    Var(VarId),
    Floor(NormExpr, BigInt),
    Ln(NormExpr),
    Pow(NormExpr),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(pub Vec<Factor>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(Vec::new())
    }

    pub fn single(f: Factor) -> Monomial {
        Monomial(vec![f])
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        v.sort();
        Monomial(v)
    }

    pub fn push(&self, f: Factor) -> Monomial {
        let mut v = self.0.clone();
        v.push(f);
        v.sort();
        Monomial(v)
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }
}

/// Affine combination of template variables with a rational constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Coef {
    pub constant: BigRational,
    pub linear: BTreeMap<TemplateVarId, BigRational>,
}

impl Coef {
    pub fn zero() -> Coef {
        Coef::default()
    }

    pub fn from_const(c: BigRational) -> Coef {
        Coef { constant: c, linear: BTreeMap::new() }
    }

    pub fn from_var(v: TemplateVarId) -> Coef {
        let mut linear = BTreeMap::new();
        linear.insert(v, BigRational::one());
        Coef { constant: BigRational::zero(), linear }
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.linear.is_empty()
    }

    pub fn add(&self, other: &Coef) -> Coef {
        let mut out = self.clone();
        out.constant += &other.constant;
        for (v, c) in &other.linear {
            let e = out.linear.entry(*v).or_insert_with(BigRational::zero);
            *e += c;
            if e.is_zero() {
                out.linear.remove(v);
            }
        }
        out
    }

    pub fn scale(&self, k: &BigRational) -> Coef {
        if k.is_zero() {
            return Coef::zero();
        }
        Coef {
            constant: &self.constant * k,
            linear: self.linear.iter().map(|(v, c)| (*v, c * k)).collect(),
        }
    }

    pub fn eval<F: Fn(TemplateVarId) -> BigRational>(&self, env: F) -> BigRational {
        let mut v = self.constant.clone();
        for (t, c) in &self.linear {
            v += c * env(*t);
        }
        v
    }
}

/// Sum of monomials with [`Coef`] coefficients.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct PolyExpr {
    pub terms: BTreeMap<Monomial, Coef>,
}

impl PolyExpr {
    pub fn zero() -> PolyExpr {
        PolyExpr::default()
    }

    pub fn constant(c: BigRational) -> PolyExpr {
        let mut p = PolyExpr::zero();
        p.add_term(Monomial::one(), Coef::from_const(c));
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: Coef) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m.clone()).or_insert_with(Coef::zero);
        *slot = slot.add(&c);
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &PolyExpr) -> PolyExpr {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn add_const(&self, c: &BigRational) -> PolyExpr {
        let mut out = self.clone();
        out.add_term(Monomial::one(), Coef::from_const(c.clone()));
        out
    }

    pub fn scale(&self, k: &BigRational) -> PolyExpr {
        if k.is_zero() {
            return PolyExpr::zero();
        }
        PolyExpr {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.scale(k))).collect(),
        }
    }

    pub fn max_degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Substitutes program variables by affine expressions (which may
    /// contain floors), rewriting floor, log, and power arguments in place.
    /// The factor count of every monomial can only shrink.
    pub fn subst(&self, map: &BTreeMap<VarId, NormExpr>) -> PolyExpr {
        let mut out = PolyExpr::zero();
        for (m, coef) in &self.terms {
            let mut acc: Vec<(Monomial, BigRational)> =
                vec![(Monomial::one(), BigRational::one())];
            let mut dead = false;
            for f in &m.0 {
                let (lin, konst) = subst_factor(f, map);
                if lin.is_empty() && konst.is_zero() {
                    dead = true;
                    break;
                }
                let mut next: Vec<(Monomial, BigRational)> = Vec::new();
                for (mono, k) in &acc {
                    if !konst.is_zero() {
                        push_merged(&mut next, mono.clone(), k * &konst);
                    }
                    for (nf, nk) in &lin {
                        push_merged(&mut next, mono.push(nf.clone()), k * nk);
                    }
                }
                acc = next;
            }
            if dead {
                continue;
            }
            for (mono, k) in acc {
                out.add_term(mono, coef.scale(&k));
            }
        }
        out
    }

    /// All distinct logarithm arguments.
    pub fn ln_args(&self) -> BTreeSet<NormExpr> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for f in &m.0 {
                if let Factor::Ln(e) = f {
                    out.insert(e.clone());
                }
            }
        }
        out
    }

    /// All distinct power arguments.
    pub fn pow_args(&self) -> BTreeSet<NormExpr> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for f in &m.0 {
                if let Factor::Pow(e) = f {
                    out.insert(e.clone());
                }
            }
        }
        out
    }

    /// Fixes the template variables, leaving plain rational coefficients.
    pub fn instantiate<F: Fn(TemplateVarId) -> BigRational>(
        &self,
        env: F,
    ) -> BTreeMap<Monomial, BigRational> {
        let mut out = BTreeMap::new();
        for (m, c) in &self.terms {
            let v = c.eval(&env);
            if !v.is_zero() {
                out.insert(m.clone(), v);
            }
        }
        out
    }

    /// Encloses the value at an integer point under fixed template values.
    /// `r` supplies the exponent for power factors and must be present when
    /// any occur; logarithm and power arguments must be positive there.
    pub fn eval_enclosure<FV, FT>(
        &self,
        var_env: FV,
        template_env: FT,
        r: Option<&BigRational>,
        eps: &BigRational,
    ) -> Enclosure
    where
        FV: Fn(VarId) -> BigRational + Copy,
        FT: Fn(TemplateVarId) -> BigRational,
    {
        let mut total = Enclosure::exact(BigRational::zero());
        for (m, c) in &self.terms {
            let coef = c.eval(&template_env);
            if coef.is_zero() {
                continue;
            }
            let mut term = Enclosure::exact(coef);
            for f in &m.0 {
                let fe = factor_enclosure(f, var_env, r, eps);
                term = term.mul(&fe);
            }
            total = total.add(&term);
        }
        total
    }
}

fn push_merged(acc: &mut Vec<(Monomial, BigRational)>, m: Monomial, k: BigRational) {
    if k.is_zero() {
        return;
    }
    for (em, ek) in acc.iter_mut() {
        if *em == m {
            *ek += k;
            return;
        }
    }
    acc.push((m, k));
}

/// Value of a factor after substitution, as an affine form over factors:
/// a list of (factor, coefficient) pairs plus a constant.
fn subst_factor(
    f: &Factor,
    map: &BTreeMap<VarId, NormExpr>,
) -> (Vec<(Factor, BigRational)>, BigRational) {
    match f {
        Factor::Var(v) => match map.get(v) {
            None => (vec![(Factor::Var(*v), BigRational::one())], BigRational::zero()),
            Some(e) => linform_of_norm(e),
        },
        Factor::Floor(arg, c) => {
            let folded = arg.subst(map).floor_div(c);
            linform_of_norm(&folded)
        }
        Factor::Ln(arg) => {
            let a = arg.subst(map);
            if a.is_constant() && a.constant.is_one() {
                // ln 1 = 0
                (Vec::new(), BigRational::zero())
            } else {
                (vec![(Factor::Ln(a), BigRational::one())], BigRational::zero())
            }
        }
        Factor::Pow(arg) => {
            let a = arg.subst(map);
            if a.is_constant() && a.constant.is_one() {
                // 1^r = 1
                (Vec::new(), BigRational::one())
            } else {
                (vec![(Factor::Pow(a), BigRational::one())], BigRational::zero())
            }
        }
    }
}

/// Affine view of a normalized expression with floor terms as factors.
pub fn linform_of_norm(e: &NormExpr) -> (Vec<(Factor, BigRational)>, BigRational) {
    let mut lin = Vec::new();
    for (b, c) in &e.terms {
        let f = match b {
            NormBase::Var(v) => Factor::Var(*v),
            NormBase::Floor(arg, d) => Factor::Floor((**arg).clone(), d.clone()),
        };
        lin.push((f, c.clone()));
    }
    (lin, e.constant.clone())
}

/// Lifts a normalized expression into a polynomial with the given
/// coefficient applied to every term.
pub fn poly_of_norm(e: &NormExpr, coef: &Coef) -> PolyExpr {
    let mut out = PolyExpr::zero();
    let (lin, konst) = linform_of_norm(e);
    for (f, k) in lin {
        out.add_term(Monomial::single(f), coef.scale(&k));
    }
    out.add_term(Monomial::one(), coef.scale(&konst));
    out
}

fn factor_enclosure<FV>(
    f: &Factor,
    var_env: FV,
    r: Option<&BigRational>,
    eps: &BigRational,
) -> Enclosure
where
    FV: Fn(VarId) -> BigRational + Copy,
{
    match f {
        Factor::Var(v) => Enclosure::exact(var_env(*v)),
        Factor::Floor(arg, c) => {
            let a = arg.eval(var_env);
            let q = a / BigRational::from_integer(c.clone());
            Enclosure::exact(BigRational::from_integer(rat_floor(&q)))
        }
        Factor::Ln(arg) => {
            let a = arg.eval(var_env);
            assert!(a.is_positive(), "logarithm of nonpositive value");
            enclose_ln(&a, eps)
        }
        Factor::Pow(arg) => {
            let a = arg.eval(var_env);
            assert!(a.is_positive(), "power of nonpositive value");
            enclose_pow(&a, r.expect("exponent required for power factors"), eps)
        }
    }
}

/// Renders a template polynomial with symbolic coefficients, e.g.
/// `c1*n + (c2 - 1)*ln(n) + c3 + 2`.
pub fn render_poly(
    program: &Program,
    p: &PolyExpr,
    names: &[String],
    op: &OpKind,
) -> String {
    if p.terms.is_empty() {
        return "0".to_string();
    }
    let mut ordered: Vec<(&Monomial, &Coef)> =
        p.terms.iter().filter(|(m, _)| !m.is_one()).collect();
    if let Some(c) = p.terms.get(&Monomial::one()) {
        ordered.push((&CONST_MONO, c));
    }
    let mut parts: Vec<String> = Vec::new();
    for (m, c) in ordered {
        let coef = render_coef(c, names);
        let piece = if m.is_one() {
            coef.text
        } else {
            let fs: Vec<String> = m.0.iter().map(|f| render_factor(program, f, op)).collect();
            let mono = fs.join("*");
            if coef.is_unit {
                mono
            } else if coef.compound {
                format!("({})*{}", coef.text, mono)
            } else {
                format!("{}*{}", coef.text, mono)
            }
        };
        if parts.is_empty() {
            parts.push(piece);
        } else {
            parts.push(format!("+ {}", piece));
        }
    }
    parts.join(" ")
}

pub struct CoefText {
    pub text: String,
    /// More than one additive term, so a product context needs parentheses.
    pub compound: bool,
    /// Exactly the constant one.
    pub is_unit: bool,
}

pub fn render_coef(c: &Coef, names: &[String]) -> CoefText {
    let mut parts: Vec<String> = Vec::new();
    for (v, k) in &c.linear {
        let name = &names[v.0];
        if k.is_one() {
            parts.push(name.clone());
        } else if (-k.clone()).is_one() {
            parts.push(format!("-{}", name));
        } else {
            parts.push(format!("{}*{}", render_rat(k), name));
        }
    }
    if !c.constant.is_zero() || parts.is_empty() {
        parts.push(render_rat(&c.constant));
    }
    let compound = parts.len() > 1;
    let mut text = String::new();
    for (i, p) in parts.iter().enumerate() {
        if i == 0 {
            text.push_str(p);
        } else if let Some(rest) = p.strip_prefix('-') {
            text.push_str(" - ");
            text.push_str(rest);
        } else {
            text.push_str(" + ");
            text.push_str(p);
        }
    }
    let is_unit = c.linear.is_empty() && c.constant.is_one();
    CoefText { text, compound, is_unit }
}

/// Renders an instantiated polynomial using source variable names.
pub fn render_terms(
    program: &Program,
    terms: &BTreeMap<Monomial, BigRational>,
    op: &OpKind,
) -> String {
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut ordered: Vec<(&Monomial, &BigRational)> =
        terms.iter().filter(|(m, _)| !m.is_one()).collect();
    if let Some(c) = terms.get(&Monomial::one()) {
        ordered.push((&CONST_MONO, c));
    }
    let mut parts: Vec<String> = Vec::new();
    for (m, c) in ordered {
        let mut piece = String::new();
        let abs = c.abs();
        let lead_neg = c.is_negative();
        if m.is_one() {
            piece.push_str(&render_rat(&abs));
        } else {
            if !abs.is_one() {
                piece.push_str(&render_rat(&abs));
                piece.push('*');
            }
            let fs: Vec<String> = m.0.iter().map(|f| render_factor(program, f, op)).collect();
            piece.push_str(&fs.join("*"));
        }
        if parts.is_empty() {
            if lead_neg {
                parts.push(format!("-{}", piece));
            } else {
                parts.push(piece);
            }
        } else if lead_neg {
            parts.push(format!("- {}", piece));
        } else {
            parts.push(format!("+ {}", piece));
        }
    }
    parts.join(" ")
}

static CONST_MONO: Monomial = Monomial(Vec::new());

fn render_rat(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn render_factor(program: &Program, f: &Factor, op: &OpKind) -> String {
    match f {
        Factor::Var(v) => program.var_name(*v).to_string(),
        Factor::Floor(arg, c) => {
            format!("floor(({})/{})", arg.display(program), c)
        }
        Factor::Ln(arg) => format!("ln({})", arg.display(program)),
        Factor::Pow(arg) => match op {
            OpKind::Exp(r) => format!("({})^({})", arg.display(program), render_rat(r)),
            OpKind::Log => format!("({})^r", arg.display(program)),
        },
    }
}
