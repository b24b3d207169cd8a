//! Measure templates: one unknown-coefficient polynomial per significant
//! label.
//!
//! Base terms at a label are the function's variables, plus `ln x` (or
//! `x^r` in power mode) for each parameter `x` whose invariant entails
//! `x >= 1` in every disjunct, plus `ln(x - y + 1)` (or its power) for each
//! ordered parameter pair with `x >= y` entailed in every disjunct.
//! Monomials are all products of at most `degree` base terms; every
//! monomial gets a fresh coefficient, and the constant term comes last.
//! Coefficients are named `c1, c2, ...` in a single sequence across the
//! whole program: functions in source order, labels ascending, and within
//! a label the enumeration order just described.
//!
//! A restriction file can replace the enumeration at chosen labels with an
//! explicit list of term shapes, written in a small expression language of
//! integers, variables, sums, products, and `ln(...)`/`pow(...)` of affine
//! arguments.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::cfg::Cfg;
use crate::frontend::{Dnf, FunctionDecl, Label, NormExpr, Program, VarId};
use crate::invariant::entails_opaque;
use crate::poly::{Coef, Factor, Monomial, OpKind, PolyExpr, TemplateVarId};
use crate::rat::rat_i64;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("restriction key '{0}' is not 'function@label'")]
    BadKey(String),
    #[error("restriction names unknown function '{0}'")]
    UnknownFunction(String),
    #[error("label {1} is not a significant label of function '{0}'")]
    NotSignificant(String, u32),
    #[error("in restriction term '{term}': {msg}")]
    BadTerm { term: String, msg: String },
}

#[derive(Debug, Clone)]
pub struct Templates {
    /// Coefficient names; the index is the template variable id.
    pub names: Vec<String>,
    /// Template polynomial for every significant label.
    pub etas: BTreeMap<Label, PolyExpr>,
}

impl Templates {
    pub fn num_vars(&self) -> usize {
        self.names.len()
    }
}

fn entailed_everywhere(inv: &Dnf, target: &NormExpr) -> bool {
    if inv.is_false() {
        return true;
    }
    inv.disjuncts.iter().all(|c| entails_opaque(&c.atoms, target))
}

/// Interpreted-argument base expressions admissible at a label: parameters
/// known to be at least one, and `x - y + 1` for parameter pairs with
/// `x >= y` known.
fn admissible_args(fun: &FunctionDecl, inv: &Dnf) -> Vec<NormExpr> {
    let params: &[VarId] = &fun.vars[..fun.params.len()];
    let mut out = Vec::new();
    for &x in params {
        let e = NormExpr::var(x);
        if entailed_everywhere(inv, &e.add_const(&rat_i64(-1))) {
            out.push(e);
        }
    }
    for &x in params {
        for &y in params {
            if x == y {
                continue;
            }
            let diff = NormExpr::var(x).sub(&NormExpr::var(y));
            if entailed_everywhere(inv, &diff) {
                out.push(diff.add_const(&rat_i64(1)));
            }
        }
    }
    out
}

fn base_terms(fun: &FunctionDecl, inv: &Dnf, op: &OpKind) -> Vec<Factor> {
    let mut out: Vec<Factor> = fun.vars.iter().map(|&v| Factor::Var(v)).collect();
    for arg in admissible_args(fun, inv) {
        out.push(match op {
            OpKind::Log => Factor::Ln(arg),
            OpKind::Exp(_) => Factor::Pow(arg),
        });
    }
    out
}

/// All multisets of `k` indices out of `0..n`, in ascending lexicographic
/// order.
fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut cur = vec![0usize; k];
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] + 1 < n {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[i];
                }
                break;
            }
        }
    }
}

pub fn build_templates(
    program: &Program,
    cfg: &Cfg,
    op: &OpKind,
    degree: usize,
    restrict: Option<&BTreeMap<String, Vec<String>>>,
) -> Result<Templates, TemplateError> {
    // Validate restriction keys up front.
    let mut restricted: BTreeMap<Label, &Vec<String>> = BTreeMap::new();
    if let Some(r) = restrict {
        for (key, terms) in r {
            let (fname, lbl) = key
                .split_once('@')
                .ok_or_else(|| TemplateError::BadKey(key.clone()))?;
            let fun = program
                .fun_by_name(fname)
                .ok_or_else(|| TemplateError::UnknownFunction(fname.to_string()))?;
            let lbl: u32 = lbl.parse().map_err(|_| TemplateError::BadKey(key.clone()))?;
            let label = Label(lbl);
            if !cfg.significant.contains(&label) || cfg.label_fun.get(&label) != Some(&fun.id) {
                return Err(TemplateError::NotSignificant(fname.to_string(), lbl));
            }
            restricted.insert(label, terms);
        }
    }

    let mut names: Vec<String> = Vec::new();
    let mut etas: BTreeMap<Label, PolyExpr> = BTreeMap::new();
    let fresh = |names: &mut Vec<String>| {
        let id = TemplateVarId(names.len());
        names.push(format!("c{}", names.len() + 1));
        id
    };

    for fun in &program.functions {
        let mut labels: Vec<Label> = cfg
            .significant
            .iter()
            .filter(|l| cfg.label_fun.get(l) == Some(&fun.id))
            .copied()
            .collect();
        labels.sort();
        for label in labels {
            let inv = cfg.annotation(label);
            let mut eta = PolyExpr::zero();
            if let Some(terms) = restricted.get(&label) {
                for term in *terms {
                    let shape = parse_term(program, fun, term)?;
                    let id = fresh(&mut names);
                    for (m, k) in shape {
                        eta.add_term(m, Coef::from_var(id).scale(&k));
                    }
                }
            } else {
                let bases = base_terms(fun, &inv, op);
                for k in 1..=degree {
                    for combo in multisets(bases.len(), k) {
                        let id = fresh(&mut names);
                        let mut m = Monomial::one();
                        for i in combo {
                            m = m.push(bases[i].clone());
                        }
                        eta.add_term(m, Coef::from_var(id));
                    }
                }
                let id = fresh(&mut names);
                eta.add_term(Monomial::one(), Coef::from_var(id));
            }
            etas.insert(label, eta);
        }
    }
    Ok(Templates { names, etas })
}

// ---- restriction term parser ----

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Ident(String),
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
}

fn tokenize(term: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = term.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push(Tok::Int(s.parse().map_err(|_| format!("bad integer '{}'", s))?));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected character '{}'", other)),
        }
    }
    Ok(out)
}

struct TermParser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    program: &'a Program,
    fun: &'a FunctionDecl,
}

type Shape = BTreeMap<Monomial, BigRational>;

fn shape_const(c: BigRational) -> Shape {
    let mut s = Shape::new();
    if !c.is_zero() {
        s.insert(Monomial::one(), c);
    }
    s
}

fn shape_add(a: &Shape, b: &Shape) -> Shape {
    let mut out = a.clone();
    for (m, c) in b {
        let e = out.entry(m.clone()).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            out.remove(m);
        }
    }
    out
}

fn shape_neg(a: &Shape) -> Shape {
    a.iter().map(|(m, c)| (m.clone(), -c.clone())).collect()
}

fn shape_mul(a: &Shape, b: &Shape) -> Shape {
    let mut out = Shape::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            let m = ma.mul(mb);
            let e = out.entry(m.clone()).or_insert_with(BigRational::zero);
            *e += ca * cb;
            if e.is_zero() {
                out.remove(&m);
            }
        }
    }
    out
}

impl<'a> TermParser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<(), String> {
        match self.next() {
            Some(ref got) if *got == t => Ok(()),
            got => Err(format!("expected {:?}, found {:?}", t, got)),
        }
    }

    fn sum(&mut self) -> Result<Shape, String> {
        let mut neg = false;
        if self.peek() == Some(&Tok::Minus) {
            self.next();
            neg = true;
        }
        let mut acc = self.product()?;
        if neg {
            acc = shape_neg(&acc);
        }
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.next();
                    let rhs = self.product()?;
                    acc = shape_add(&acc, &rhs);
                }
                Some(Tok::Minus) => {
                    self.next();
                    let rhs = self.product()?;
                    acc = shape_add(&acc, &shape_neg(&rhs));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<Shape, String> {
        let mut acc = self.atom()?;
        while self.peek() == Some(&Tok::Star) {
            self.next();
            let rhs = self.atom()?;
            acc = shape_mul(&acc, &rhs);
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<Shape, String> {
        match self.next() {
            Some(Tok::Int(n)) => Ok(shape_const(rat_i64(n))),
            Some(Tok::LParen) => {
                let s = self.sum()?;
                self.expect(Tok::RParen)?;
                Ok(s)
            }
            Some(Tok::Ident(name)) if name == "ln" || name == "pow" => {
                self.expect(Tok::LParen)?;
                let inner = self.sum()?;
                self.expect(Tok::RParen)?;
                let arg = affine_of_shape(&inner)
                    .ok_or_else(|| format!("argument of {} must be affine", name))?;
                let f = if name == "ln" { Factor::Ln(arg) } else { Factor::Pow(arg) };
                let mut s = Shape::new();
                s.insert(Monomial::single(f), BigRational::one());
                Ok(s)
            }
            Some(Tok::Ident(name)) => {
                let v = self
                    .program
                    .resolve_var(self.fun.id, &name)
                    .ok_or_else(|| format!("unknown variable '{}'", name))?;
                let mut s = Shape::new();
                s.insert(Monomial::single(Factor::Var(v)), BigRational::one());
                Ok(s)
            }
            None => Err("unexpected end of term".to_string()),
            Some(t) => Err(format!("unexpected token {:?}", t)),
        }
    }
}

/// A shape is affine when every monomial is the constant or one plain
/// variable; converts back to a normalized expression.
fn affine_of_shape(s: &Shape) -> Option<NormExpr> {
    let mut out = NormExpr::zero();
    for (m, c) in s {
        match m.0.as_slice() {
            [] => out = out.add_const(c),
            [Factor::Var(v)] => out = out.add(&NormExpr::var(*v).scale(c)),
            _ => return None,
        }
    }
    Some(out)
}

fn parse_term(
    program: &Program,
    fun: &FunctionDecl,
    term: &str,
) -> Result<Shape, TemplateError> {
    let wrap = |msg: String| TemplateError::BadTerm { term: term.to_string(), msg };
    let toks = tokenize(term).map_err(wrap)?;
    let mut p = TermParser { toks, pos: 0, program, fun };
    let s = p.sum().map_err(wrap)?;
    if p.pos != p.toks.len() {
        return Err(TemplateError::BadTerm {
            term: term.to_string(),
            msg: "trailing input".to_string(),
        });
    }
    Ok(s)
}
