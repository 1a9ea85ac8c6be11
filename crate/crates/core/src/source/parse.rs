//! Surface-syntax parser for source programs and types.
//!
//! Parsing is signature-directed: an identifier in head position resolves to
//! a constant or operation when the signature declares one, otherwise to a
//! variable. The n-ary call syntax `o(M1, ..., Mn)` for operations declared
//! n-ary is desugared here into the general continuation-pair application,
//! with case binders chosen fresh against every identifier in the program.
//! After parsing, all binders are renamed apart so later passes can assume
//! distinct bound names.

use std::collections::BTreeSet;

use thiserror::Error;

use super::signature::Signature;
use super::term::{OpIndex, OpRef, SourceTerm};
use super::types::SourceType;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("parse error at {line}:{col}: {msg}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Keyword(&'static str),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Colon,
    Bar,
    Equals,
    Arrow,
    Plus,
    Star,
    Eof,
}

const KEYWORDS: &[&str] = &[
    "fun", "letrec", "in", "case", "of", "inl", "inr", "absurd", "fst", "snd", "unit", "empty",
];

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

struct Spanned {
    tok: Tok,
    line: u32,
    col: u32,
}

fn lex(text: &str) -> Result<(Vec<Spanned>, BTreeSet<String>), ParseError> {
    let mut lx = Lexer { chars: text.chars().peekable(), line: 1, col: 1 };
    let mut out = Vec::new();
    let mut idents = BTreeSet::new();
    loop {
        while let Some(&c) = lx.chars.peek() {
            if c == '\n' {
                lx.chars.next();
                lx.line += 1;
                lx.col = 1;
            } else if c.is_whitespace() {
                lx.chars.next();
                lx.col += 1;
            } else {
                break;
            }
        }
        let (line, col) = (lx.line, lx.col);
        let Some(&c) = lx.chars.peek() else {
            out.push(Spanned { tok: Tok::Eof, line, col });
            return Ok((out, idents));
        };
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = lx.chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    lx.chars.next();
                    lx.col += 1;
                } else {
                    break;
                }
            }
            if let Some(kw) = KEYWORDS.iter().find(|k| **k == s) {
                Tok::Keyword(kw)
            } else {
                idents.insert(s.clone());
                Tok::Ident(s)
            }
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            let mut seen_dot = false;
            while let Some(&c) = lx.chars.peek() {
                if c.is_ascii_digit() || (c == '.' && !seen_dot && lx.chars.clone().nth(1).is_some_and(|d| d.is_ascii_digit())) {
                    seen_dot |= c == '.';
                    s.push(c);
                    lx.chars.next();
                    lx.col += 1;
                } else {
                    break;
                }
            }
            let n = s.parse::<f64>().map_err(|_| ParseError {
                line,
                col,
                msg: format!("bad number literal `{s}`"),
            })?;
            Tok::Number(n)
        } else {
            lx.chars.next();
            lx.col += 1;
            match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                ':' => Tok::Colon,
                '|' => Tok::Bar,
                '=' => Tok::Equals,
                '+' => Tok::Plus,
                '*' => Tok::Star,
                '-' => {
                    if lx.chars.peek() == Some(&'>') {
                        lx.chars.next();
                        lx.col += 1;
                        Tok::Arrow
                    } else {
                        return Err(ParseError { line, col, msg: "stray `-`".to_string() });
                    }
                }
                _ => {
                    return Err(ParseError { line, col, msg: format!("unexpected character `{c}`") })
                }
            }
        };
        out.push(Spanned { tok, line, col });
    }
}

struct Parser<'s> {
    toks: Vec<Spanned>,
    pos: usize,
    sig: &'s Signature,
    idents: BTreeSet<String>,
    fresh: u32,
}

impl<'s> Parser<'s> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError { line: s.line, col: s.col, msg: msg.into() }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn fresh_name(&mut self, base: &str) -> String {
        loop {
            let cand = format!("{base}{}", self.fresh);
            self.fresh += 1;
            if !self.idents.contains(&cand) {
                self.idents.insert(cand.clone());
                return cand;
            }
        }
    }

    fn binder(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                if self.sig.is_operation(&name) || self.sig.is_constant(&name) {
                    return Err(self.err(format!(
                        "`{name}` is declared in the signature and cannot be bound"
                    )));
                }
                self.next();
                Ok(name)
            }
            _ => Err(self.err("expected a variable name")),
        }
    }

    // Types: arrow (right-assoc) < sum (left) < product (left) < atom.
    fn ty(&mut self) -> Result<SourceType, ParseError> {
        let lhs = self.ty_sum()?;
        if *self.peek() == Tok::Arrow {
            self.next();
            let rhs = self.ty()?;
            Ok(SourceType::arrow(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn ty_sum(&mut self) -> Result<SourceType, ParseError> {
        let mut lhs = self.ty_prod()?;
        while *self.peek() == Tok::Plus {
            self.next();
            let rhs = self.ty_prod()?;
            lhs = SourceType::sum(lhs, rhs);
        }
        Ok(lhs)
    }

    fn ty_prod(&mut self) -> Result<SourceType, ParseError> {
        let mut lhs = self.ty_atom()?;
        while *self.peek() == Tok::Star {
            self.next();
            let rhs = self.ty_atom()?;
            lhs = SourceType::prod(lhs, rhs);
        }
        Ok(lhs)
    }

    fn ty_atom(&mut self) -> Result<SourceType, ParseError> {
        match self.peek().clone() {
            Tok::Keyword("unit") => {
                self.next();
                Ok(SourceType::Unit)
            }
            Tok::Keyword("empty") => {
                self.next();
                Ok(SourceType::Empty)
            }
            Tok::Ident(name) => {
                self.next();
                Ok(SourceType::Base(name))
            }
            Tok::LParen => {
                self.next();
                let t = self.ty()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            _ => Err(self.err("expected a type")),
        }
    }

    fn term(&mut self) -> Result<SourceTerm, ParseError> {
        match self.peek().clone() {
            Tok::Keyword("fun") => {
                self.next();
                let x = self.binder()?;
                self.expect(Tok::Colon, "`:` after binder")?;
                let ty = self.ty()?;
                self.expect(Tok::Dot, "`.` after lambda type")?;
                let body = self.term()?;
                Ok(SourceTerm::lam(x, ty, body))
            }
            Tok::Keyword("letrec") => {
                self.next();
                let f = self.binder()?;
                let x = self.binder()?;
                self.expect(Tok::Equals, "`=` in letrec")?;
                let body = self.term()?;
                self.expect(Tok::Keyword("in"), "`in` after letrec body")?;
                let rest = self.term()?;
                Ok(SourceTerm::letrec(f, x, body, rest))
            }
            Tok::Keyword("case") => {
                self.next();
                let scrut = self.term()?;
                self.expect(Tok::Keyword("of"), "`of` after case scrutinee")?;
                self.expect(Tok::Keyword("inl"), "`inl` branch")?;
                let lb = self.binder()?;
                self.expect(Tok::Arrow, "`->` in case branch")?;
                let left = self.term()?;
                self.expect(Tok::Bar, "`|` between case branches")?;
                self.expect(Tok::Keyword("inr"), "`inr` branch")?;
                let rb = self.binder()?;
                self.expect(Tok::Arrow, "`->` in case branch")?;
                let right = self.term()?;
                Ok(SourceTerm::case(scrut, lb, left, rb, right))
            }
            Tok::Keyword("absurd") => {
                self.next();
                let m = self.term()?;
                Ok(SourceTerm::absurd(m))
            }
            _ => self.appterm(),
        }
    }

    /// A nonempty sequence of atoms, folded left-associatively, with
    /// signature-declared heads turning into constant and operation
    /// applications.
    fn appterm(&mut self) -> Result<SourceTerm, ParseError> {
        enum Item {
            Done(SourceTerm),
            ConstHead(String),
            OpHead(OpRef),
        }
        let mut items = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Ident(name) if self.sig.is_constant(&name) => {
                    self.next();
                    items.push(Item::ConstHead(name));
                }
                Tok::Ident(name) if self.sig.is_operation(&name) => {
                    self.next();
                    let index = if *self.peek() == Tok::LBracket {
                        self.next();
                        let ix = match self.next() {
                            Tok::Ident(s) => OpIndex::Sym(s),
                            Tok::Number(n) => OpIndex::Num(n),
                            _ => return Err(self.err("expected an index literal")),
                        };
                        self.expect(Tok::RBracket, "`]` after index")?;
                        Some(ix)
                    } else {
                        None
                    };
                    let op = OpRef { name, index };
                    if *self.peek() == Tok::LParen {
                        items.push(Item::Done(self.op_call(op)?));
                    } else {
                        items.push(Item::OpHead(op));
                    }
                }
                _ => {
                    if self.starts_atom() {
                        let a = self.atom()?;
                        items.push(Item::Done(a));
                    } else {
                        break;
                    }
                }
            }
        }
        if items.is_empty() {
            return Err(self.err("expected a term"));
        }
        let mut acc: Option<SourceTerm> = None;
        let mut it = items.into_iter().peekable();
        while let Some(item) = it.next() {
            match item {
                Item::Done(t) => {
                    acc = Some(match acc {
                        None => t,
                        Some(f) => SourceTerm::app(f, t),
                    });
                }
                Item::ConstHead(c) => {
                    let arg = match it.next() {
                        Some(Item::Done(t)) => t,
                        _ => return Err(self.err(format!("constant `{c}` requires an argument"))),
                    };
                    let applied = SourceTerm::constant(c, arg);
                    acc = Some(match acc {
                        None => applied,
                        Some(f) => SourceTerm::app(f, applied),
                    });
                }
                Item::OpHead(op) => {
                    let arg = match it.next() {
                        Some(Item::Done(t)) => t,
                        _ => return Err(self.err(format!("operation `{op}` requires an argument"))),
                    };
                    self.sig.lookup(&op).map_err(|e| self.err(e.to_string()))?;
                    let applied = SourceTerm::op(op, arg);
                    acc = Some(match acc {
                        None => applied,
                        Some(f) => SourceTerm::app(f, applied),
                    });
                }
            }
        }
        Ok(acc.expect("nonempty item fold"))
    }

    /// `o(M1, ..., Mn)`: desugar to the continuation-pair form
    /// `o (fun z. case z over n summands, ())`.
    fn op_call(&mut self, op: OpRef) -> Result<SourceTerm, ParseError> {
        let decl = self.sig.lookup(&op).map_err(|e| self.err(e.to_string()))?;
        let nary = decl.nary;
        self.expect(Tok::LParen, "`(` after operation")?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.term()?);
                if *self.peek() == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)` after operation arguments")?;
        match nary {
            None => {
                // General form: the parens hold the continuation-pair
                // argument, either pre-paired or as two components.
                let mut it = args.into_iter();
                match (it.next(), it.next(), it.next()) {
                    (Some(m), None, _) => Ok(SourceTerm::op(op, m)),
                    (Some(m1), Some(m2), None) => {
                        Ok(SourceTerm::op(op, SourceTerm::pair(m1, m2)))
                    }
                    _ => Err(self.err(format!(
                        "operation `{op}` is not declared n-ary; apply it to a continuation pair"
                    ))),
                }
            }
            Some(n) => {
                if args.len() != n as usize {
                    return Err(self.err(format!(
                        "operation `{op}` is {n}-ary but got {} arguments",
                        args.len()
                    )));
                }
                Ok(self.desugar_nary(op, args))
            }
        }
    }

    /// Build `o (fun z : unit+...+unit. <case chain>, ())`. The chain for
    /// arity 0 eliminates `z : empty`; for arity 1 it is the sole branch;
    /// otherwise it cases on `z`, recursing on the left (first n-1 branches)
    /// and taking the last branch on the right.
    fn desugar_nary(&mut self, op: OpRef, args: Vec<SourceTerm>) -> SourceTerm {
        let n = args.len();
        let z = self.fresh_name("z");
        let chain = self.case_chain(&z, args);
        SourceTerm::op(
            op,
            SourceTerm::pair(
                SourceTerm::lam(z, SourceType::finite(n), chain),
                SourceTerm::Unit,
            ),
        )
    }

    fn case_chain(&mut self, scrut: &str, mut args: Vec<SourceTerm>) -> SourceTerm {
        match args.len() {
            0 => SourceTerm::absurd(SourceTerm::var(scrut)),
            1 => args.pop().unwrap(),
            _ => {
                let last = args.pop().unwrap();
                let left_binder = self.fresh_name("z");
                let right_binder = self.fresh_name("x");
                let left_chain = self.case_chain(&left_binder, args);
                SourceTerm::case(
                    SourceTerm::var(scrut),
                    left_binder,
                    left_chain,
                    right_binder,
                    last,
                )
            }
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_)
                | Tok::LParen
                | Tok::Keyword("fst")
                | Tok::Keyword("snd")
                | Tok::Keyword("inl")
                | Tok::Keyword("inr")
        )
    }

    fn atom(&mut self) -> Result<SourceTerm, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.next();
                Ok(SourceTerm::var(name))
            }
            Tok::Keyword("fst") => {
                self.next();
                Ok(SourceTerm::fst(self.atom()?))
            }
            Tok::Keyword("snd") => {
                self.next();
                Ok(SourceTerm::snd(self.atom()?))
            }
            Tok::Keyword("inl") => {
                self.next();
                self.expect(Tok::LBracket, "`[` after inl")?;
                let other = self.ty()?;
                self.expect(Tok::RBracket, "`]` after injection type")?;
                Ok(SourceTerm::inl(other, self.atom()?))
            }
            Tok::Keyword("inr") => {
                self.next();
                self.expect(Tok::LBracket, "`[` after inr")?;
                let other = self.ty()?;
                self.expect(Tok::RBracket, "`]` after injection type")?;
                Ok(SourceTerm::inr(other, self.atom()?))
            }
            Tok::LParen => {
                self.next();
                if *self.peek() == Tok::RParen {
                    self.next();
                    return Ok(SourceTerm::Unit);
                }
                let first = self.term()?;
                if *self.peek() == Tok::Comma {
                    self.next();
                    let second = self.term()?;
                    self.expect(Tok::RParen, "`)` after pair")?;
                    Ok(SourceTerm::pair(first, second))
                } else {
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(first)
                }
            }
            _ => Err(self.err("expected a term")),
        }
    }
}

/// Rename binders so that every bound name in the program is distinct and
/// distinct from every free name. Names that are already unique are kept.
pub(crate) fn alpha_rename(term: SourceTerm, all_idents: &mut BTreeSet<String>) -> SourceTerm {
    let mut used: BTreeSet<String> = term.free_vars();
    let mut counter = 0u32;
    fn fresh(
        base: &str,
        used: &mut BTreeSet<String>,
        all: &mut BTreeSet<String>,
        counter: &mut u32,
    ) -> String {
        let stem: String = {
            let trimmed = base.trim_end_matches(|c: char| c.is_ascii_digit());
            if trimmed.is_empty() { "x" } else { trimmed }.to_string()
        };
        loop {
            let cand = format!("{stem}{counter}");
            *counter += 1;
            if !used.contains(&cand) && !all.contains(&cand) {
                used.insert(cand.clone());
                all.insert(cand.clone());
                return cand;
            }
        }
    }
    fn bind(
        name: &str,
        used: &mut BTreeSet<String>,
        all: &mut BTreeSet<String>,
        counter: &mut u32,
    ) -> String {
        if used.contains(name) {
            fresh(name, used, all, counter)
        } else {
            used.insert(name.to_string());
            name.to_string()
        }
    }
    fn go(
        t: SourceTerm,
        env: &mut Vec<(String, String)>,
        used: &mut BTreeSet<String>,
        all: &mut BTreeSet<String>,
        counter: &mut u32,
    ) -> SourceTerm {
        match t {
            SourceTerm::Var(x) => {
                for (old, new) in env.iter().rev() {
                    if *old == x {
                        return SourceTerm::var(new);
                    }
                }
                SourceTerm::Var(x)
            }
            SourceTerm::Const(c, m) => SourceTerm::constant(c, go(*m, env, used, all, counter)),
            SourceTerm::Op { op, result, arg } => SourceTerm::Op {
                op,
                result,
                arg: Box::new(go(*arg, env, used, all, counter)),
            },
            SourceTerm::Unit => SourceTerm::Unit,
            SourceTerm::Pair(l, r) => SourceTerm::pair(
                go(*l, env, used, all, counter),
                go(*r, env, used, all, counter),
            ),
            SourceTerm::Proj(s, m) => SourceTerm::Proj(s, Box::new(go(*m, env, used, all, counter))),
            SourceTerm::Absurd { result, arg } => SourceTerm::Absurd {
                result,
                arg: Box::new(go(*arg, env, used, all, counter)),
            },
            SourceTerm::Inj(s, ty, m) => SourceTerm::Inj(s, ty, Box::new(go(*m, env, used, all, counter))),
            SourceTerm::Case { scrutinee, left_binder, left, right_binder, right } => {
                let scrutinee = go(*scrutinee, env, used, all, counter);
                let lb = bind(&left_binder, used, all, counter);
                env.push((left_binder, lb.clone()));
                let left = go(*left, env, used, all, counter);
                env.pop();
                let rb = bind(&right_binder, used, all, counter);
                env.push((right_binder, rb.clone()));
                let right = go(*right, env, used, all, counter);
                env.pop();
                SourceTerm::case(scrutinee, lb, left, rb, right)
            }
            SourceTerm::Lam(x, ty, body) => {
                let nx = bind(&x, used, all, counter);
                env.push((x, nx.clone()));
                let body = go(*body, env, used, all, counter);
                env.pop();
                SourceTerm::lam(nx, ty, body)
            }
            SourceTerm::App(f, a) => SourceTerm::app(
                go(*f, env, used, all, counter),
                go(*a, env, used, all, counter),
            ),
            SourceTerm::LetRec { fname, arg, dom, cod, body, rest } => {
                let nf = bind(&fname, used, all, counter);
                env.push((fname, nf.clone()));
                let nx = bind(&arg, used, all, counter);
                env.push((arg, nx.clone()));
                let body = go(*body, env, used, all, counter);
                env.pop();
                let rest = go(*rest, env, used, all, counter);
                env.pop();
                SourceTerm::LetRec {
                    fname: nf,
                    arg: nx,
                    dom,
                    cod,
                    body: Box::new(body),
                    rest: Box::new(rest),
                }
            }
        }
    }
    go(term, &mut Vec::new(), &mut used, all_idents, &mut counter)
}

/// Parse a closed program. Binders come back renamed apart.
pub fn parse_program(sig: &Signature, text: &str) -> Result<SourceTerm, ParseError> {
    let (toks, idents) = lex(text)?;
    let mut p = Parser { toks, pos: 0, sig, idents, fresh: 0 };
    let t = p.term()?;
    if *p.peek() != Tok::Eof {
        return Err(p.err("trailing input after program"));
    }
    let mut all = p.idents;
    Ok(alpha_rename(t, &mut all))
}

/// Parse a standalone type, as used in signature files.
pub fn parse_type(text: &str) -> Result<SourceType, ParseError> {
    let (toks, _) = lex(text)?;
    let sig = Signature::default();
    let mut p = Parser { toks, pos: 0, sig: &sig, idents: BTreeSet::new(), fresh: 0 };
    let t = p.ty()?;
    if *p.peek() != Tok::Eof {
        return Err(p.err("trailing input after type"));
    }
    Ok(t)
}
