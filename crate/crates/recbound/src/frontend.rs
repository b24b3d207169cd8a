//! Frontend for the analyzed language: lexer, parser, canonical expression
//! forms and predicate normalization.
//!
//! The language is deliberately small:
//!
//! ```text
//! e    ::= int | x | e + e | e - e | int * e | e / int      (integer floor division)
//! lit  ::= e <= e | e >= e
//! b    ::= lit | not b | b and b | b or b
//! s    ::= skip | x := e | f(e, ..., e)
//!        | if b then s else s fi | if * then s else s fi
//!        | [b] while b do s od | while b do s od
//!        | s ; s
//! ```
//!
//! A function is `name(p1, ..., pk) { [b] s }` where the optional leading
//! bracket annotates the entry with an invariant; a bracket immediately
//! before `while` annotates that loop head. Brackets anywhere else are
//! rejected. `//` starts a line comment.
//!
//! Statement labels are assigned in pre-order, numbering functions in
//! source order with a single global counter starting at 1; each function
//! gets one extra terminal label after its body.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FunId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(pub u32);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArithExpr {
    Const(i64),
    Var(String),
    Add(Box<ArithExpr>, Box<ArithExpr>),
    Sub(Box<ArithExpr>, Box<ArithExpr>),
    /// Multiplication by an integer literal; the language has no
    /// variable-by-variable products.
    Mul(i64, Box<ArithExpr>),
    /// Floor division by a nonzero integer literal.
    FloorDiv(Box<ArithExpr>, i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pred {
    Cmp(ArithExpr, CmpOp, ArithExpr),
    Not(Box<Pred>),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cond {
    Pred(Pred),
    Star,
}

#[derive(Debug, Clone)]
pub enum Stmt {
    Skip {
        label: Label,
    },
    Assign {
        label: Label,
        var: String,
        value: ArithExpr,
    },
    Call {
        label: Label,
        callee: String,
        args: Vec<ArithExpr>,
    },
    If {
        label: Label,
        cond: Cond,
        then_branch: Box<Stmt>,
        else_branch: Box<Stmt>,
    },
    While {
        label: Label,
        invariant: Option<Pred>,
        cond: Pred,
        body: Box<Stmt>,
    },
    Seq(Box<Stmt>, Box<Stmt>),
}

impl Stmt {
    pub fn entry_label(&self) -> Label {
        match self {
            Stmt::Skip { label }
            | Stmt::Assign { label, .. }
            | Stmt::Call { label, .. }
            | Stmt::If { label, .. }
            | Stmt::While { label, .. } => *label,
            Stmt::Seq(first, _) => first.entry_label(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FunctionDecl {
    pub id: FunId,
    pub name: String,
    pub params: Vec<String>,
    pub invariant: Option<Pred>,
    pub body: Stmt,
    pub entry_label: Label,
    pub terminal_label: Label,
    /// All variables of the function: parameters first (in declaration
    /// order), then the remaining body variables in alphabetical order.
    pub vars: Vec<VarId>,
}

#[derive(Debug, Clone)]
pub struct VarInfo {
    pub name: String,
    pub fun: FunId,
}

#[derive(Debug, Clone)]
pub struct Program {
    pub functions: Vec<FunctionDecl>,
    pub vars: Vec<VarInfo>,
    pub entry: FunId,
}

#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("{line}:{col}: duplicate function `{name}`")]
    DuplicateFunction { line: u32, col: u32, name: String },
    #[error("{line}:{col}: duplicate parameter `{name}` of `{fun}`")]
    DuplicateParam { line: u32, col: u32, name: String, fun: String },
    #[error("{line}:{col}: call to undeclared function `{name}`")]
    UndeclaredCall { line: u32, col: u32, name: String },
    #[error("{line}:{col}: call to `{name}` passes {got} arguments, expected {want}")]
    ArityMismatch { line: u32, col: u32, name: String, got: usize, want: usize },
    #[error("{line}:{col}: division by zero literal")]
    ZeroDivisor { line: u32, col: u32 },
    #[error("{line}:{col}: invariant bracket is only allowed after a function's opening brace or immediately before `while`")]
    MisplacedInvariant { line: u32, col: u32 },
    #[error("{line}:{col}: invariants must not contain floor division")]
    FloorInInvariant { line: u32, col: u32 },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    KwSkip,
    KwIf,
    KwThen,
    KwElse,
    KwFi,
    KwWhile,
    KwDo,
    KwOd,
    KwNot,
    KwAnd,
    KwOr,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Assign,
    Le,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
}

#[derive(Debug, Clone)]
struct SpannedTok {
    tok: Tok,
    line: u32,
    col: u32,
}

fn lex(src: &str) -> Result<Vec<SpannedTok>, FrontendError> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let (tline, tcol) = (line, col);
        let mut push = |tok: Tok| out.push(SpannedTok { tok, line: tline, col: tcol });
        match c {
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            '/' if i + 1 < bytes.len() && bytes[i + 1] == b'/' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '(' => {
                push(Tok::LParen);
                i += 1;
                col += 1;
            }
            ')' => {
                push(Tok::RParen);
                i += 1;
                col += 1;
            }
            '{' => {
                push(Tok::LBrace);
                i += 1;
                col += 1;
            }
            '}' => {
                push(Tok::RBrace);
                i += 1;
                col += 1;
            }
            '[' => {
                push(Tok::LBracket);
                i += 1;
                col += 1;
            }
            ']' => {
                push(Tok::RBracket);
                i += 1;
                col += 1;
            }
            ',' => {
                push(Tok::Comma);
                i += 1;
                col += 1;
            }
            ';' => {
                push(Tok::Semi);
                i += 1;
                col += 1;
            }
            '+' => {
                push(Tok::Plus);
                i += 1;
                col += 1;
            }
            '-' => {
                push(Tok::Minus);
                i += 1;
                col += 1;
            }
            '*' => {
                push(Tok::Star);
                i += 1;
                col += 1;
            }
            '/' => {
                push(Tok::Slash);
                i += 1;
                col += 1;
            }
            ':' if i + 1 < bytes.len() && bytes[i + 1] == b'=' => {
                push(Tok::Assign);
                i += 2;
                col += 2;
            }
            '<' if i + 1 < bytes.len() && bytes[i + 1] == b'=' => {
                push(Tok::Le);
                i += 2;
                col += 2;
            }
            '>' if i + 1 < bytes.len() && bytes[i + 1] == b'=' => {
                push(Tok::Ge);
                i += 2;
                col += 2;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                    col += 1;
                }
                let text = &src[start..i];
                let v: i64 = text.parse().map_err(|_| FrontendError::Syntax {
                    line: tline,
                    col: tcol,
                    msg: format!("integer literal `{}` out of range", text),
                })?;
                push(Tok::Int(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                    col += 1;
                }
                let word = &src[start..i];
                let tok = match word {
                    "skip" => Tok::KwSkip,
                    "if" => Tok::KwIf,
                    "then" => Tok::KwThen,
                    "else" => Tok::KwElse,
                    "fi" => Tok::KwFi,
                    "while" => Tok::KwWhile,
                    "do" => Tok::KwDo,
                    "od" => Tok::KwOd,
                    "not" => Tok::KwNot,
                    "and" => Tok::KwAnd,
                    "or" => Tok::KwOr,
                    _ => Tok::Ident(word.to_string()),
                };
                push(tok);
            }
            other => {
                return Err(FrontendError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character `{}`", other),
                })
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<SpannedTok>,
    pos: usize,
    next_label: u32,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (u32, u32) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| (t.line, t.col))
            .unwrap_or((1, 1))
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FrontendError> {
        let (line, col) = self.here();
        Err(FrontendError::Syntax { line, col, msg: msg.into() })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, want: Tok, what: &str) -> Result<(), FrontendError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => self.err(format!("expected {}, found {:?}", what, t)),
            None => self.err(format!("expected {}, found end of input", what)),
        }
    }

    fn fresh_label(&mut self) -> Label {
        let l = Label(self.next_label);
        self.next_label += 1;
        l
    }

    fn parse_ident(&mut self, what: &str) -> Result<String, FrontendError> {
        match self.peek() {
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(name)
            }
            _ => self.err(format!("expected {}", what)),
        }
    }

    // expr := ['-'] term (('+' | '-') term)*
    fn parse_expr(&mut self) -> Result<ArithExpr, FrontendError> {
        let mut acc = if matches!(self.peek(), Some(Tok::Minus)) {
            self.pos += 1;
            let t = self.parse_term()?;
            ArithExpr::Sub(Box::new(ArithExpr::Const(0)), Box::new(t))
        } else {
            self.parse_term()?
        };
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let t = self.parse_term()?;
                    acc = ArithExpr::Add(Box::new(acc), Box::new(t));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let t = self.parse_term()?;
                    acc = ArithExpr::Sub(Box::new(acc), Box::new(t));
                }
                _ => return Ok(acc),
            }
        }
    }

    // term := int '*' factor | factor
    fn parse_term(&mut self) -> Result<ArithExpr, FrontendError> {
        if let Some(Tok::Int(v)) = self.peek().cloned() {
            if matches!(self.toks.get(self.pos + 1).map(|t| &t.tok), Some(Tok::Star)) {
                self.pos += 2;
                let f = self.parse_factor()?;
                return Ok(ArithExpr::Mul(v, Box::new(f)));
            }
        }
        self.parse_factor()
    }

    // factor := primary ('/' int)*
    fn parse_factor(&mut self) -> Result<ArithExpr, FrontendError> {
        let mut acc = self.parse_primary()?;
        while matches!(self.peek(), Some(Tok::Slash)) {
            let (line, col) = self.here();
            self.pos += 1;
            let neg = if matches!(self.peek(), Some(Tok::Minus)) {
                self.pos += 1;
                true
            } else {
                false
            };
            match self.bump() {
                Some(Tok::Int(d)) => {
                    let d = if neg { -d } else { d };
                    if d == 0 {
                        return Err(FrontendError::ZeroDivisor { line, col });
                    }
                    acc = ArithExpr::FloorDiv(Box::new(acc), d);
                }
                _ => return self.err("expected integer divisor after `/`"),
            }
        }
        Ok(acc)
    }

    fn parse_primary(&mut self) -> Result<ArithExpr, FrontendError> {
        match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(ArithExpr::Const(v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(ArithExpr::Var(name))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.parse_expr()?;
                self.eat(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => self.err("expected expression"),
        }
    }

    // pred := andpred ('or' andpred)*
    fn parse_pred(&mut self) -> Result<Pred, FrontendError> {
        let mut acc = self.parse_andpred()?;
        while matches!(self.peek(), Some(Tok::KwOr)) {
            self.pos += 1;
            let r = self.parse_andpred()?;
            acc = Pred::Or(Box::new(acc), Box::new(r));
        }
        Ok(acc)
    }

    fn parse_andpred(&mut self) -> Result<Pred, FrontendError> {
        let mut acc = self.parse_unarypred()?;
        while matches!(self.peek(), Some(Tok::KwAnd)) {
            self.pos += 1;
            let r = self.parse_unarypred()?;
            acc = Pred::And(Box::new(acc), Box::new(r));
        }
        Ok(acc)
    }

    fn parse_unarypred(&mut self) -> Result<Pred, FrontendError> {
        if matches!(self.peek(), Some(Tok::KwNot)) {
            self.pos += 1;
            let p = self.parse_unarypred()?;
            return Ok(Pred::Not(Box::new(p)));
        }
        // A literal `e <= e'` may itself start with `(`, so try the literal
        // first and fall back to a parenthesized predicate.
        let save = self.pos;
        match self.parse_literal() {
            Ok(lit) => Ok(lit),
            Err(lit_err) => {
                self.pos = save;
                if matches!(self.peek(), Some(Tok::LParen)) {
                    self.pos += 1;
                    let p = self.parse_pred()?;
                    self.eat(Tok::RParen, "`)`")?;
                    Ok(p)
                } else {
                    Err(lit_err)
                }
            }
        }
    }

    fn parse_literal(&mut self) -> Result<Pred, FrontendError> {
        let lhs = self.parse_expr()?;
        let op = match self.peek() {
            Some(Tok::Le) => CmpOp::Le,
            Some(Tok::Ge) => CmpOp::Ge,
            _ => return self.err("expected `<=` or `>=`"),
        };
        self.pos += 1;
        let rhs = self.parse_expr()?;
        Ok(Pred::Cmp(lhs, op, rhs))
    }

    fn parse_bracket_pred(&mut self) -> Result<Pred, FrontendError> {
        self.eat(Tok::LBracket, "`[`")?;
        let p = self.parse_pred()?;
        self.eat(Tok::RBracket, "`]`")?;
        Ok(p)
    }

    // stmtseq := stmt (';' stmt)*
    fn parse_stmtseq(&mut self) -> Result<Stmt, FrontendError> {
        let mut acc = self.parse_stmt()?;
        while matches!(self.peek(), Some(Tok::Semi)) {
            self.pos += 1;
            let next = self.parse_stmt()?;
            acc = Stmt::Seq(Box::new(acc), Box::new(next));
        }
        Ok(acc)
    }

    fn parse_stmt(&mut self) -> Result<Stmt, FrontendError> {
        match self.peek().cloned() {
            Some(Tok::KwSkip) => {
                self.pos += 1;
                Ok(Stmt::Skip { label: self.fresh_label() })
            }
            Some(Tok::LBracket) => {
                let (line, col) = self.here();
                let inv = self.parse_bracket_pred()?;
                if !matches!(self.peek(), Some(Tok::KwWhile)) {
                    return Err(FrontendError::MisplacedInvariant { line, col });
                }
                self.parse_while(Some(inv))
            }
            Some(Tok::KwWhile) => self.parse_while(None),
            Some(Tok::KwIf) => {
                self.pos += 1;
                let label = self.fresh_label();
                let cond = if matches!(self.peek(), Some(Tok::Star)) {
                    self.pos += 1;
                    Cond::Star
                } else {
                    Cond::Pred(self.parse_pred()?)
                };
                self.eat(Tok::KwThen, "`then`")?;
                let then_branch = self.parse_stmtseq()?;
                self.eat(Tok::KwElse, "`else`")?;
                let else_branch = self.parse_stmtseq()?;
                self.eat(Tok::KwFi, "`fi`")?;
                Ok(Stmt::If {
                    label,
                    cond,
                    then_branch: Box::new(then_branch),
                    else_branch: Box::new(else_branch),
                })
            }
            Some(Tok::Ident(name)) => {
                match self.toks.get(self.pos + 1).map(|t| &t.tok) {
                    Some(Tok::Assign) => {
                        self.pos += 2;
                        let label = self.fresh_label();
                        let value = self.parse_expr()?;
                        Ok(Stmt::Assign { label, var: name, value })
                    }
                    Some(Tok::LParen) => {
                        self.pos += 2;
                        let label = self.fresh_label();
                        let mut args = Vec::new();
                        if !matches!(self.peek(), Some(Tok::RParen)) {
                            loop {
                                args.push(self.parse_expr()?);
                                if matches!(self.peek(), Some(Tok::Comma)) {
                                    self.pos += 1;
                                } else {
                                    break;
                                }
                            }
                        }
                        self.eat(Tok::RParen, "`)`")?;
                        Ok(Stmt::Call { label, callee: name, args })
                    }
                    _ => self.err("expected `:=` or `(` after identifier"),
                }
            }
            _ => self.err("expected statement"),
        }
    }

    fn parse_while(&mut self, invariant: Option<Pred>) -> Result<Stmt, FrontendError> {
        self.eat(Tok::KwWhile, "`while`")?;
        let label = self.fresh_label();
        let cond = self.parse_pred()?;
        self.eat(Tok::KwDo, "`do`")?;
        let body = self.parse_stmtseq()?;
        self.eat(Tok::KwOd, "`od`")?;
        Ok(Stmt::While { label, invariant, cond, body: Box::new(body) })
    }

    fn parse_function(&mut self) -> Result<(String, Vec<String>, Option<Pred>, Stmt, Label, (u32, u32)), FrontendError> {
        let span = self.here();
        let name = self.parse_ident("function name")?;
        self.eat(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if !matches!(self.peek(), Some(Tok::RParen)) {
            loop {
                params.push(self.parse_ident("parameter name")?);
                if matches!(self.peek(), Some(Tok::Comma)) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.eat(Tok::RParen, "`)`")?;
        self.eat(Tok::LBrace, "`{`")?;
        // An invariant bracket directly after `{` annotates the entry,
        // unless it belongs to a leading `while` (then it annotates the
        // loop head, which *is* the entry label).
        let mut invariant = None;
        if matches!(self.peek(), Some(Tok::LBracket)) {
            let save = self.pos;
            let p = self.parse_bracket_pred()?;
            if matches!(self.peek(), Some(Tok::KwWhile)) {
                // Leave it for the statement parser.
                self.pos = save;
            } else {
                invariant = Some(p);
            }
        }
        let body = self.parse_stmtseq()?;
        self.eat(Tok::RBrace, "`}`")?;
        let terminal = self.fresh_label();
        Ok((name, params, invariant, body, terminal, span))
    }
}

/// Parses a whole program. Functions keep their source order; the first
/// function is the default entry.
pub fn parse(src: &str) -> Result<Program, FrontendError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, next_label: 1 };
    let mut raw = Vec::new();
    while p.peek().is_some() {
        raw.push(p.parse_function()?);
    }
    if raw.is_empty() {
        return Err(FrontendError::Syntax { line: 1, col: 1, msg: "empty program".into() });
    }

    let mut names: BTreeMap<String, FunId> = BTreeMap::new();
    for (idx, (name, _, _, _, _, span)) in raw.iter().enumerate() {
        if names.insert(name.clone(), FunId(idx as u32)).is_some() {
            return Err(FrontendError::DuplicateFunction {
                line: span.0,
                col: span.1,
                name: name.clone(),
            });
        }
    }

    let mut vars: Vec<VarInfo> = Vec::new();
    let mut functions = Vec::new();
    for (idx, (name, params, invariant, body, terminal, span)) in raw.iter().enumerate() {
        let id = FunId(idx as u32);
        let mut seen = BTreeSet::new();
        for param in params {
            if !seen.insert(param.clone()) {
                return Err(FrontendError::DuplicateParam {
                    line: span.0,
                    col: span.1,
                    name: param.clone(),
                    fun: name.clone(),
                });
            }
        }
        let mut body_vars = BTreeSet::new();
        collect_stmt_vars(body, &mut body_vars);
        if let Some(inv) = invariant {
            collect_pred_vars(inv, &mut body_vars);
        }
        let mut fun_vars = Vec::new();
        for param in params {
            fun_vars.push(VarId(vars.len() as u32));
            vars.push(VarInfo { name: param.clone(), fun: id });
        }
        for v in body_vars {
            if !params.contains(&v) {
                fun_vars.push(VarId(vars.len() as u32));
                vars.push(VarInfo { name: v, fun: id });
            }
        }
        functions.push(FunctionDecl {
            id,
            name: name.clone(),
            params: params.clone(),
            invariant: invariant.clone(),
            body: body.clone(),
            entry_label: body.entry_label(),
            terminal_label: *terminal,
            vars: fun_vars,
        });
    }

    let program = Program { functions, vars, entry: FunId(0) };
    program.validate(&names)?;
    Ok(program)
}

fn collect_stmt_vars(s: &Stmt, out: &mut BTreeSet<String>) {
    match s {
        Stmt::Skip { .. } => {}
        Stmt::Assign { var, value, .. } => {
            out.insert(var.clone());
            collect_expr_vars(value, out);
        }
        Stmt::Call { args, .. } => {
            for a in args {
                collect_expr_vars(a, out);
            }
        }
        Stmt::If { cond, then_branch, else_branch, .. } => {
            if let Cond::Pred(p) = cond {
                collect_pred_vars(p, out);
            }
            collect_stmt_vars(then_branch, out);
            collect_stmt_vars(else_branch, out);
        }
        Stmt::While { cond, invariant, body, .. } => {
            collect_pred_vars(cond, out);
            if let Some(inv) = invariant {
                collect_pred_vars(inv, out);
            }
            collect_stmt_vars(body, out);
        }
        Stmt::Seq(a, b) => {
            collect_stmt_vars(a, out);
            collect_stmt_vars(b, out);
        }
    }
}

fn collect_expr_vars(e: &ArithExpr, out: &mut BTreeSet<String>) {
    match e {
        ArithExpr::Const(_) => {}
        ArithExpr::Var(v) => {
            out.insert(v.clone());
        }
        ArithExpr::Add(a, b) | ArithExpr::Sub(a, b) => {
            collect_expr_vars(a, out);
            collect_expr_vars(b, out);
        }
        ArithExpr::Mul(_, a) | ArithExpr::FloorDiv(a, _) => collect_expr_vars(a, out),
    }
}

fn collect_pred_vars(p: &Pred, out: &mut BTreeSet<String>) {
    match p {
        Pred::Cmp(a, _, b) => {
            collect_expr_vars(a, out);
            collect_expr_vars(b, out);
        }
        Pred::Not(inner) => collect_pred_vars(inner, out),
        Pred::And(a, b) | Pred::Or(a, b) => {
            collect_pred_vars(a, out);
            collect_pred_vars(b, out);
        }
    }
}

fn pred_has_floor(p: &Pred) -> bool {
    fn expr_has_floor(e: &ArithExpr) -> bool {
        match e {
            ArithExpr::Const(_) | ArithExpr::Var(_) => false,
            ArithExpr::Add(a, b) | ArithExpr::Sub(a, b) => expr_has_floor(a) || expr_has_floor(b),
            ArithExpr::Mul(_, a) => expr_has_floor(a),
            ArithExpr::FloorDiv(..) => true,
        }
    }
    match p {
        Pred::Cmp(a, _, b) => expr_has_floor(a) || expr_has_floor(b),
        Pred::Not(inner) => pred_has_floor(inner),
        Pred::And(a, b) | Pred::Or(a, b) => pred_has_floor(a) || pred_has_floor(b),
    }
}

impl Program {
    fn validate(&self, names: &BTreeMap<String, FunId>) -> Result<(), FrontendError> {
        for f in &self.functions {
            if let Some(inv) = &f.invariant {
                if pred_has_floor(inv) {
                    return Err(FrontendError::FloorInInvariant { line: 0, col: 0 });
                }
            }
            validate_stmt(&f.body, self, names)?;
        }
        Ok(())
    }

    pub fn fun_by_name(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function(&self, id: FunId) -> &FunctionDecl {
        &self.functions[id.0 as usize]
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.vars[v.0 as usize].name
    }

    pub fn var_fun(&self, v: VarId) -> FunId {
        self.vars[v.0 as usize].fun
    }

    pub fn resolve_var(&self, fun: FunId, name: &str) -> Option<VarId> {
        self.functions[fun.0 as usize]
            .vars
            .iter()
            .copied()
            .find(|v| self.vars[v.0 as usize].name == name)
    }

    /// Canonical affine-with-floors form of an expression in a function's scope.
    pub fn normalize_expr(&self, fun: FunId, e: &ArithExpr) -> NormExpr {
        match e {
            ArithExpr::Const(c) => NormExpr::constant(BigRational::from_integer(BigInt::from(*c))),
            ArithExpr::Var(name) => {
                let v = self
                    .resolve_var(fun, name)
                    .expect("variable resolved during validation");
                NormExpr::var(v)
            }
            ArithExpr::Add(a, b) => {
                self.normalize_expr(fun, a).add(&self.normalize_expr(fun, b))
            }
            ArithExpr::Sub(a, b) => {
                self.normalize_expr(fun, a).sub(&self.normalize_expr(fun, b))
            }
            ArithExpr::Mul(c, a) => self
                .normalize_expr(fun, a)
                .scale(&BigRational::from_integer(BigInt::from(*c))),
            ArithExpr::FloorDiv(a, d) => {
                self.normalize_expr(fun, a).floor_div(&BigInt::from(*d))
            }
        }
    }

    /// Disjunctive normal form of a predicate (or its negation) with atoms
    /// `e >= 0`; negation uses the integer tightening `not (e >= 0)` into
    /// `-e - 1 >= 0`.
    pub fn pred_dnf(&self, fun: FunId, p: &Pred, negate: bool) -> Dnf {
        match (p, negate) {
            (Pred::Cmp(a, op, b), neg) => {
                let (a, b) = (self.normalize_expr(fun, a), self.normalize_expr(fun, b));
                let base = match op {
                    CmpOp::Le => b.sub(&a),
                    CmpOp::Ge => a.sub(&b),
                };
                let atom = if neg { base.neg().sub_const_one() } else { base };
                Dnf::literal(atom)
            }
            (Pred::Not(inner), neg) => self.pred_dnf(fun, inner, !neg),
            (Pred::And(a, b), false) | (Pred::Or(a, b), true) => {
                self.pred_dnf(fun, a, negate).and(&self.pred_dnf(fun, b, negate))
            }
            (Pred::And(a, b), true) | (Pred::Or(a, b), false) => {
                self.pred_dnf(fun, a, negate).or(&self.pred_dnf(fun, b, negate))
            }
        }
    }

    /// The invariant annotation of a function entry as a DNF (`true` if absent).
    pub fn entry_invariant_dnf(&self, fun: FunId) -> Dnf {
        match &self.functions[fun.0 as usize].invariant {
            Some(p) => self.pred_dnf(fun, p, false),
            None => Dnf::truth(),
        }
    }
}

fn validate_stmt(
    s: &Stmt,
    program: &Program,
    names: &BTreeMap<String, FunId>,
) -> Result<(), FrontendError> {
    match s {
        Stmt::Skip { .. } | Stmt::Assign { .. } => Ok(()),
        Stmt::Call { callee, args, .. } => match names.get(callee) {
            None => Err(FrontendError::UndeclaredCall {
                line: 0,
                col: 0,
                name: callee.clone(),
            }),
            Some(id) => {
                let want = program.functions[id.0 as usize].params.len();
                if args.len() != want {
                    Err(FrontendError::ArityMismatch {
                        line: 0,
                        col: 0,
                        name: callee.clone(),
                        got: args.len(),
                        want,
                    })
                } else {
                    Ok(())
                }
            }
        },
        Stmt::If { then_branch, else_branch, .. } => {
            validate_stmt(then_branch, program, names)?;
            validate_stmt(else_branch, program, names)
        }
        Stmt::While { invariant, body, .. } => {
            if let Some(inv) = invariant {
                if pred_has_floor(inv) {
                    return Err(FrontendError::FloorInInvariant { line: 0, col: 0 });
                }
            }
            validate_stmt(body, program, names)
        }
        Stmt::Seq(a, b) => {
            validate_stmt(a, program, names)?;
            validate_stmt(b, program, names)
        }
    }
}

// ---------------------------------------------------------------------------
// Canonical expressions
// ---------------------------------------------------------------------------

/// Base of a canonical term: either a program variable or a floor of a
/// canonical expression divided by a nonzero integer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NormBase {
    Var(VarId),
    Floor(Box<NormExpr>, BigInt),
}

/// Canonical affine combination `sum coeff * base + constant` with exact
/// rational coefficients. Structural equality is semantic equality up to
/// the floor atoms being treated as opaque.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NormExpr {
    pub terms: BTreeMap<NormBase, BigRational>,
    pub constant: BigRational,
}

impl NormExpr {
    pub fn constant(c: BigRational) -> Self {
        NormExpr { terms: BTreeMap::new(), constant: c }
    }

    pub fn zero() -> Self {
        NormExpr::constant(BigRational::zero())
    }

    pub fn var(v: VarId) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(NormBase::Var(v), BigRational::one());
        NormExpr { terms, constant: BigRational::zero() }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &NormExpr) -> NormExpr {
        let mut out = self.clone();
        for (b, c) in &other.terms {
            let e = out.terms.entry(b.clone()).or_insert_with(BigRational::zero);
            *e += c;
        }
        out.constant += &other.constant;
        out.prune();
        out
    }

    pub fn sub(&self, other: &NormExpr) -> NormExpr {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> NormExpr {
        self.scale(&-BigRational::one())
    }

    pub fn sub_const_one(&self) -> NormExpr {
        let mut out = self.clone();
        out.constant -= BigRational::one();
        out
    }

    pub fn add_const(&self, c: &BigRational) -> NormExpr {
        let mut out = self.clone();
        out.constant += c;
        out
    }

    pub fn scale(&self, c: &BigRational) -> NormExpr {
        if c.is_zero() {
            return NormExpr::zero();
        }
        NormExpr {
            terms: self.terms.iter().map(|(b, q)| (b.clone(), q * c)).collect(),
            constant: &self.constant * c,
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| !c.is_zero());
    }

    /// Wraps this expression into `floor(self / d)`, folding constants and
    /// exact multiples.
    pub fn floor_div(&self, d: &BigInt) -> NormExpr {
        assert!(!d.is_zero(), "floor division by zero");
        if d.is_one() {
            return self.clone();
        }
        let dr = BigRational::from_integer(d.clone());
        if self.terms.is_empty() {
            let q = &self.constant / &dr;
            return NormExpr::constant(BigRational::from_integer(q.floor().to_integer()));
        }
        // floor((d * e') / d) = e' when every coefficient is divisible by d
        // and all bases are integer-valued (they are).
        let all_divisible = self
            .terms
            .values()
            .chain(std::iter::once(&self.constant))
            .all(|c| (c / &dr).is_integer());
        if all_divisible {
            return self.scale(&dr.recip());
        }
        let mut terms = BTreeMap::new();
        terms.insert(NormBase::Floor(Box::new(self.clone()), d.clone()), BigRational::one());
        NormExpr { terms, constant: BigRational::zero() }
    }

    pub fn has_floor(&self) -> bool {
        self.terms.keys().any(|b| matches!(b, NormBase::Floor(..)))
    }

    pub fn vars(&self, out: &mut BTreeSet<VarId>) {
        for b in self.terms.keys() {
            match b {
                NormBase::Var(v) => {
                    out.insert(*v);
                }
                NormBase::Floor(inner, _) => inner.vars(out),
            }
        }
    }

    /// Substitutes variables by canonical expressions; variables absent from
    /// the map stay.
    pub fn subst(&self, map: &BTreeMap<VarId, NormExpr>) -> NormExpr {
        let mut out = NormExpr::constant(self.constant.clone());
        for (b, c) in &self.terms {
            let contrib = match b {
                NormBase::Var(v) => match map.get(v) {
                    Some(e) => e.scale(c),
                    None => NormExpr::var(*v).scale(c),
                },
                NormBase::Floor(inner, d) => inner.subst(map).floor_div(d).scale(c),
            };
            out = out.add(&contrib);
        }
        out
    }

    /// Evaluates over an integer environment using exact floor semantics.
    pub fn eval<F: Fn(VarId) -> BigRational + Copy>(&self, env: F) -> BigRational {
        let mut acc = self.constant.clone();
        for (b, c) in &self.terms {
            let v = match b {
                NormBase::Var(v) => env(*v),
                NormBase::Floor(inner, d) => {
                    let q = inner.eval(env) / BigRational::from_integer(d.clone());
                    BigRational::from_integer(q.floor().to_integer())
                }
            };
            acc += c * v;
        }
        acc
    }

    pub fn display<'a>(&'a self, program: &'a Program) -> NormExprDisplay<'a> {
        NormExprDisplay { expr: self, program }
    }
}

pub struct NormExprDisplay<'a> {
    expr: &'a NormExpr,
    program: &'a Program,
}

fn fmt_coeff(f: &mut fmt::Formatter<'_>, c: &BigRational, first: bool) -> fmt::Result {
    let (sign, mag) = if c.is_negative() { ("-", -c.clone()) } else { ("+", c.clone()) };
    if first {
        if sign == "-" {
            write!(f, "-")?;
        }
    } else {
        write!(f, " {} ", sign)?;
    }
    if !mag.is_one() {
        if mag.is_integer() {
            write!(f, "{}*", mag.numer())?;
        } else {
            write!(f, "{}/{}*", mag.numer(), mag.denom())?;
        }
    }
    Ok(())
}

impl fmt::Display for NormExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = self.expr;
        if e.terms.is_empty() {
            if e.constant.is_integer() {
                return write!(f, "{}", e.constant.numer());
            }
            return write!(f, "{}/{}", e.constant.numer(), e.constant.denom());
        }
        let mut first = true;
        for (b, c) in &e.terms {
            fmt_coeff(f, c, first)?;
            match b {
                NormBase::Var(v) => write!(f, "{}", self.program.var_name(*v))?,
                NormBase::Floor(inner, d) => {
                    write!(f, "floor(({}) / {})", inner.display(self.program), d)?
                }
            }
            first = false;
        }
        if !e.constant.is_zero() {
            let (sign, mag) = if e.constant.is_negative() {
                ("-", -e.constant.clone())
            } else {
                ("+", e.constant.clone())
            };
            if mag.is_integer() {
                write!(f, " {} {}", sign, mag.numer())?;
            } else {
                write!(f, " {} {}/{}", sign, mag.numer(), mag.denom())?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// DNF predicates
// ---------------------------------------------------------------------------

/// A conjunction of atoms `e >= 0`, kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Conjunct {
    pub atoms: Vec<NormExpr>,
}

impl Conjunct {
    pub fn new(mut atoms: Vec<NormExpr>) -> Option<Conjunct> {
        atoms.retain(|a| {
            // Constant atoms fold away; a false constant kills the conjunct,
            // handled below.
            !(a.is_constant() && !a.constant.is_negative())
        });
        if atoms.iter().any(|a| a.is_constant() && a.constant.is_negative()) {
            return None;
        }
        atoms.sort();
        atoms.dedup();
        Some(Conjunct { atoms })
    }

    pub fn truth() -> Conjunct {
        Conjunct { atoms: Vec::new() }
    }

    pub fn and(&self, other: &Conjunct) -> Option<Conjunct> {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        Conjunct::new(atoms)
    }

    pub fn eval<F: Fn(VarId) -> BigRational + Copy>(&self, env: F) -> bool {
        self.atoms.iter().all(|a| !a.eval(env).is_negative())
    }

    pub fn subst(&self, map: &BTreeMap<VarId, NormExpr>) -> Option<Conjunct> {
        Conjunct::new(self.atoms.iter().map(|a| a.subst(map)).collect())
    }
}

/// Disjunctive normal form: a disjunction of conjuncts. No disjuncts means
/// `false`; a single empty conjunct means `true`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Dnf {
    pub disjuncts: Vec<Conjunct>,
}

impl Dnf {
    pub fn truth() -> Dnf {
        Dnf { disjuncts: vec![Conjunct::truth()] }
    }

    pub fn falsity() -> Dnf {
        Dnf { disjuncts: Vec::new() }
    }

    pub fn literal(atom: NormExpr) -> Dnf {
        match Conjunct::new(vec![atom]) {
            Some(c) => Dnf { disjuncts: vec![c] },
            None => Dnf::falsity(),
        }
    }

    pub fn is_false(&self) -> bool {
        self.disjuncts.is_empty()
    }

    pub fn is_true(&self) -> bool {
        self.disjuncts.iter().any(|c| c.atoms.is_empty())
    }

    pub fn and(&self, other: &Dnf) -> Dnf {
        let mut out = Vec::new();
        for a in &self.disjuncts {
            for b in &other.disjuncts {
                if let Some(c) = a.and(b) {
                    out.push(c);
                }
            }
        }
        out.sort();
        out.dedup();
        Dnf { disjuncts: out }
    }

    pub fn or(&self, other: &Dnf) -> Dnf {
        let mut out = self.disjuncts.clone();
        out.extend(other.disjuncts.iter().cloned());
        out.sort();
        out.dedup();
        Dnf { disjuncts: out }
    }

    pub fn eval<F: Fn(VarId) -> BigRational + Copy>(&self, env: F) -> bool {
        self.disjuncts.iter().any(|c| c.eval(env))
    }

    pub fn subst(&self, map: &BTreeMap<VarId, NormExpr>) -> Dnf {
        let mut out: Vec<Conjunct> =
            self.disjuncts.iter().filter_map(|c| c.subst(map)).collect();
        out.sort();
        out.dedup();
        Dnf { disjuncts: out }
    }

    pub fn has_floor(&self) -> bool {
        self.disjuncts.iter().any(|c| c.atoms.iter().any(|a| a.has_floor()))
    }
}

// ---------------------------------------------------------------------------
// Pretty printer
// ---------------------------------------------------------------------------

fn fmt_expr(e: &ArithExpr, out: &mut String) {
    match e {
        ArithExpr::Const(c) => out.push_str(&c.to_string()),
        ArithExpr::Var(v) => out.push_str(v),
        ArithExpr::Add(a, b) => {
            fmt_expr(a, out);
            out.push_str(" + ");
            fmt_expr_atomic(b, out);
        }
        ArithExpr::Sub(a, b) => {
            fmt_expr(a, out);
            out.push_str(" - ");
            fmt_expr_atomic(b, out);
        }
        ArithExpr::Mul(c, a) => {
            out.push_str(&c.to_string());
            out.push_str(" * ");
            fmt_expr_atomic(a, out);
        }
        ArithExpr::FloorDiv(a, d) => {
            fmt_expr_atomic(a, out);
            out.push_str(" / ");
            out.push_str(&d.to_string());
        }
    }
}

fn fmt_expr_atomic(e: &ArithExpr, out: &mut String) {
    let needs_parens = matches!(e, ArithExpr::Add(..) | ArithExpr::Sub(..));
    if needs_parens {
        out.push('(');
        fmt_expr(e, out);
        out.push(')');
    } else {
        fmt_expr(e, out);
    }
}

pub fn expr_to_string(e: &ArithExpr) -> String {
    let mut s = String::new();
    fmt_expr(e, &mut s);
    s
}

fn fmt_pred(p: &Pred, out: &mut String, parent_prec: u8) {
    // precedence: or = 0, and = 1, not = 2
    match p {
        Pred::Cmp(a, op, b) => {
            fmt_expr(a, out);
            out.push_str(match op {
                CmpOp::Le => " <= ",
                CmpOp::Ge => " >= ",
            });
            fmt_expr(b, out);
        }
        Pred::Not(inner) => {
            out.push_str("not ");
            let needs = !matches!(**inner, Pred::Cmp(..) | Pred::Not(..));
            if needs {
                out.push('(');
                fmt_pred(inner, out, 0);
                out.push(')');
            } else {
                fmt_pred(inner, out, 2);
            }
        }
        Pred::And(a, b) => {
            let needs = parent_prec > 1;
            if needs {
                out.push('(');
            }
            fmt_pred(a, out, 1);
            out.push_str(" and ");
            fmt_pred(b, out, 2);
            if needs {
                out.push(')');
            }
        }
        Pred::Or(a, b) => {
            let needs = parent_prec > 0;
            if needs {
                out.push('(');
            }
            fmt_pred(a, out, 0);
            out.push_str(" or ");
            fmt_pred(b, out, 1);
            if needs {
                out.push(')');
            }
        }
    }
}

pub fn pred_to_string(p: &Pred) -> String {
    let mut s = String::new();
    fmt_pred(p, &mut s, 0);
    s
}

fn fmt_stmt(s: &Stmt, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match s {
        Stmt::Skip { .. } => {
            out.push_str(&pad);
            out.push_str("skip");
        }
        Stmt::Assign { var, value, .. } => {
            out.push_str(&pad);
            out.push_str(var);
            out.push_str(" := ");
            fmt_expr(value, out);
        }
        Stmt::Call { callee, args, .. } => {
            out.push_str(&pad);
            out.push_str(callee);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                fmt_expr(a, out);
            }
            out.push(')');
        }
        Stmt::If { cond, then_branch, else_branch, .. } => {
            out.push_str(&pad);
            out.push_str("if ");
            match cond {
                Cond::Star => out.push('*'),
                Cond::Pred(p) => fmt_pred(p, out, 0),
            }
            out.push_str(" then\n");
            fmt_stmt(then_branch, indent + 1, out);
            out.push('\n');
            out.push_str(&pad);
            out.push_str("else\n");
            fmt_stmt(else_branch, indent + 1, out);
            out.push('\n');
            out.push_str(&pad);
            out.push_str("fi");
        }
        Stmt::While { invariant, cond, body, .. } => {
            if let Some(inv) = invariant {
                out.push_str(&pad);
                out.push('[');
                fmt_pred(inv, out, 0);
                out.push_str("]\n");
            }
            out.push_str(&pad);
            out.push_str("while ");
            fmt_pred(cond, out, 0);
            out.push_str(" do\n");
            fmt_stmt(body, indent + 1, out);
            out.push('\n');
            out.push_str(&pad);
            out.push_str("od");
        }
        Stmt::Seq(a, b) => {
            fmt_stmt(a, indent, out);
            out.push_str(";\n");
            fmt_stmt(b, indent, out);
        }
    }
}

/// Prints the program in the canonical source form accepted by [`parse`].
pub fn print(program: &Program) -> String {
    let mut out = String::new();
    for (i, f) in program.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&f.name);
        out.push('(');
        for (j, p) in f.params.iter().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            out.push_str(p);
        }
        out.push_str(") {\n");
        if let Some(inv) = &f.invariant {
            out.push_str("  [");
            fmt_pred(inv, &mut out, 0);
            out.push_str("]\n");
        }
        fmt_stmt(&f.body, 1, &mut out);
        out.push_str("\n}\n");
    }
    out
}

/// Evaluates a predicate directly on an integer environment (interpreter
/// semantics; DNF conversion is checked against this by tests).
pub fn eval_pred<F: Fn(VarId) -> BigRational + Copy>(
    program: &Program,
    fun: FunId,
    p: &Pred,
    env: F,
) -> bool {
    match p {
        Pred::Cmp(a, op, b) => {
            let av = program.normalize_expr(fun, a).eval(env);
            let bv = program.normalize_expr(fun, b).eval(env);
            match op {
                CmpOp::Le => av <= bv,
                CmpOp::Ge => av >= bv,
            }
        }
        Pred::Not(inner) => !eval_pred(program, fun, inner, env),
        Pred::And(a, b) => {
            eval_pred(program, fun, a, env) && eval_pred(program, fun, b, env)
        }
        Pred::Or(a, b) => eval_pred(program, fun, a, env) || eval_pred(program, fun, b, env),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_i64;

    const FIG1: &str = "f(n) {\n  [n >= 1]\n  if n >= 2 then\n    f(n / 2)\n  else\n    skip\n  fi\n}\n";

    #[test]
    fn fig1_labels_match() {
        let p = parse(FIG1).unwrap();
        assert_eq!(p.functions.len(), 1);
        let f = &p.functions[0];
        assert_eq!(f.entry_label, Label(1));
        assert_eq!(f.terminal_label, Label(4));
        match &f.body {
            Stmt::If { label, then_branch, else_branch, .. } => {
                assert_eq!(*label, Label(1));
                assert_eq!(then_branch.entry_label(), Label(2));
                assert_eq!(else_branch.entry_label(), Label(3));
            }
            other => panic!("expected if, got {:?}", other),
        }
    }

    #[test]
    fn single_skip_gets_two_labels() {
        let p = parse("g(x) { skip }").unwrap();
        let f = &p.functions[0];
        assert_eq!(f.entry_label, Label(1));
        assert!(matches!(f.body, Stmt::Skip { label: Label(1) }));
        assert_eq!(f.terminal_label, Label(2));
    }

    #[test]
    fn second_function_labels_continue() {
        let src = "a(x) { skip }\nb(y) { y := y + 1; skip }\n";
        let p = parse(src).unwrap();
        assert_eq!(p.functions[0].terminal_label, Label(2));
        assert_eq!(p.functions[1].entry_label, Label(3));
        assert_eq!(p.functions[1].terminal_label, Label(5));
    }

    #[test]
    fn negation_uses_integer_tightening() {
        let p = parse("f(n) { if not n >= 2 then skip else skip fi }").unwrap();
        let pred = Pred::Not(Box::new(Pred::Cmp(
            ArithExpr::Var("n".into()),
            CmpOp::Ge,
            ArithExpr::Const(2),
        )));
        let dnf = p.pred_dnf(FunId(0), &pred, false);
        assert_eq!(dnf.disjuncts.len(), 1);
        let atom = &dnf.disjuncts[0].atoms[0];
        // not (n - 2 >= 0)  ~>  1 - n >= 0
        let n = p.resolve_var(FunId(0), "n").unwrap();
        let expected = NormExpr::var(n).neg().add_const(&rat_i64(1));
        assert_eq!(*atom, expected);
    }

    #[test]
    fn roundtrip_fig1() {
        let p1 = parse(FIG1).unwrap();
        let printed = print(&p1);
        let p2 = parse(&printed).unwrap();
        assert_eq!(print(&p2), printed);
        assert_eq!(p2.functions[0].entry_label, Label(1));
        assert_eq!(p2.functions[0].terminal_label, Label(4));
    }

    #[test]
    fn duplicate_function_rejected() {
        let err = parse("f(n) { skip }\nf(m) { skip }").unwrap_err();
        assert!(matches!(err, FrontendError::DuplicateFunction { .. }));
    }

    #[test]
    fn duplicate_param_rejected() {
        let err = parse("f(n, n) { skip }").unwrap_err();
        assert!(matches!(err, FrontendError::DuplicateParam { .. }));
    }

    #[test]
    fn undeclared_call_rejected() {
        let err = parse("f(n) { g(n) }").unwrap_err();
        assert!(matches!(err, FrontendError::UndeclaredCall { .. }));
    }

    #[test]
    fn zero_divisor_rejected() {
        let err = parse("f(n) { n := n / 0 }").unwrap_err();
        assert!(matches!(err, FrontendError::ZeroDivisor { .. }));
    }

    #[test]
    fn misplaced_invariant_rejected() {
        let err = parse("f(n) { skip; [n >= 0] skip }").unwrap_err();
        assert!(matches!(err, FrontendError::MisplacedInvariant { .. }));
    }

    #[test]
    fn invariant_with_floor_rejected() {
        let err = parse("f(n) { [n / 2 >= 0] skip }").unwrap_err();
        assert!(matches!(err, FrontendError::FloorInInvariant { .. }));
    }

    #[test]
    fn floor_folding() {
        let p = parse("f(n) { n := (2 * n) / 2 }").unwrap();
        // floor((2n)/2) = n exactly
        if let Stmt::Assign { value, .. } = &p.functions[0].body {
            let norm = p.normalize_expr(FunId(0), value);
            let n = p.resolve_var(FunId(0), "n").unwrap();
            assert_eq!(norm, NormExpr::var(n));
        } else {
            panic!("expected assignment");
        }
    }

    #[test]
    fn norm_eval_floor_semantics() {
        let p = parse(FIG1).unwrap();
        let n = p.resolve_var(FunId(0), "n").unwrap();
        let e = NormExpr::var(n).floor_div(&BigInt::from(2));
        assert_eq!(e.eval(|_| rat_i64(7)), rat_i64(3));
        assert_eq!(e.eval(|_| rat_i64(-7)), rat_i64(-4));
    }

    #[test]
    fn leading_while_invariant_attaches_to_loop() {
        let src = "f(n) { [n >= 0] while n >= 1 do n := n - 1 od }";
        let p = parse(src).unwrap();
        match &p.functions[0].body {
            Stmt::While { invariant, .. } => assert!(invariant.is_some()),
            other => panic!("expected while, got {:?}", other),
        }
    }
}
