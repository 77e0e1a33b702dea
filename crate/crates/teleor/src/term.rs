//! The universal term value: programs, beliefs and wire messages are all
//! made of these. Includes the text codec (the Pedro wire grammar), the
//! substitution/groundness helpers and the one-sided query-to-ground
//! matcher.

use std::collections::BTreeMap;
use std::fmt;

use crate::lexer::{self, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    pub fn as_f64(self) -> f64 {
        match self {
            Number::Int(n) => n as f64,
            Number::Float(x) => x,
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Int(n) => write!(f, "{n}"),
            // {:?} on f64 keeps a `.0` or exponent, so the text re-parses
            // as a float rather than collapsing to an integer.
            Number::Float(x) => write!(f, "{x:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Atom(String),
    Number(Number),
    Str(String),
    Var(String),
    List(Vec<Term>),
    Compound(String, Vec<Term>),
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(name.to_string())
    }

    pub fn int(n: i64) -> Term {
        Term::Number(Number::Int(n))
    }

    pub fn float(x: f64) -> Term {
        Term::Number(Number::Float(x))
    }

    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn compound(functor: &str, args: Vec<Term>) -> Term {
        assert!(!args.is_empty(), "arity-0 compound must be an Atom");
        Term::Compound(functor.to_string(), args)
    }

    /// Functor name and arity, treating a bare atom as arity 0.
    pub fn functor(&self) -> Option<(&str, usize)> {
        match self {
            Term::Atom(name) => Some((name, 0)),
            Term::Compound(name, args) => Some((name, args.len())),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Atom(_) | Term::Number(_) | Term::Str(_) => true,
            Term::List(items) => items.iter().all(Term::is_ground),
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn substitute(&self, bindings: &Bindings) -> Term {
        match self {
            Term::Var(name) => match bindings.get(name) {
                Some(value) => value.clone(),
                None => self.clone(),
            },
            Term::List(items) => {
                Term::List(items.iter().map(|t| t.substitute(bindings)).collect())
            }
            Term::Compound(functor, args) => Term::Compound(
                functor.clone(),
                args.iter().map(|t| t.substitute(bindings)).collect(),
            ),
            _ => self.clone(),
        }
    }
}

/// Mapping from variable names to ground terms. Matching only ever adds
/// consistent entries; it never overwrites.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings(BTreeMap<String, Term>);

impl Bindings {
    pub fn new() -> Bindings {
        Bindings::default()
    }

    pub fn get(&self, name: &str) -> Option<&Term> {
        self.0.get(name)
    }

    pub fn bind(&mut self, name: &str, value: Term) {
        debug_assert!(value.is_ground());
        self.0.insert(name.to_string(), value);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when every entry of `other` is present here unchanged.
    pub fn extends(&self, other: &Bindings) -> bool {
        other.0.iter().all(|(k, v)| self.0.get(k) == Some(v))
    }
}

impl FromIterator<(String, Term)> for Bindings {
    fn from_iter<I: IntoIterator<Item = (String, Term)>>(iter: I) -> Bindings {
        Bindings(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("syntax error at byte {offset}: {message}")]
pub struct SyntaxError {
    pub message: String,
    pub offset: usize,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("internal error: {0}")]
pub struct InternalError(pub String);

/// Infix operators admitted by the term grammar, lowest precedence first.
/// Comparisons are non-associative; `&` and arithmetic are left-associative.
fn operator_precedence(name: &str) -> Option<u8> {
    match name {
        "&" => Some(1),
        "<" | "<=" | ">" | ">=" | "==" => Some(2),
        "+" | "-" => Some(3),
        "*" | "/" => Some(4),
        _ => None,
    }
}

struct TermParser {
    tokens: Vec<Token>,
    pos: usize,
}

impl TermParser {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].offset
    }

    fn bump(&mut self) -> TokenKind {
        let kind = self.tokens[self.pos].kind.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        kind
    }

    fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError { message: message.into(), offset: self.offset() }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), SyntaxError> {
        if *self.peek() == kind {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {kind}, found {}", self.peek())))
        }
    }

    fn binop(&self) -> Option<&'static str> {
        match self.peek() {
            TokenKind::Amp => Some("&"),
            TokenKind::Lt => Some("<"),
            TokenKind::Le => Some("<="),
            TokenKind::Gt => Some(">"),
            TokenKind::Ge => Some(">="),
            TokenKind::EqEq => Some("=="),
            TokenKind::Plus => Some("+"),
            TokenKind::Minus => Some("-"),
            TokenKind::Star => Some("*"),
            TokenKind::Slash => Some("/"),
            _ => None,
        }
    }

    fn parse_term(&mut self, min_prec: u8) -> Result<Term, SyntaxError> {
        let mut lhs = self.parse_primary()?;
        while let Some(op) = self.binop() {
            let prec = operator_precedence(op).unwrap();
            if prec < min_prec {
                break;
            }
            self.bump();
            // comparisons are non-associative, everything else left-assoc
            let rhs = self.parse_term(prec + 1)?;
            lhs = Term::Compound(op.to_string(), vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn parse_primary(&mut self) -> Result<Term, SyntaxError> {
        let start = self.offset();
        match self.bump() {
            TokenKind::Ident(name) => {
                if *self.peek() == TokenKind::LParen {
                    self.bump();
                    let args = self.parse_args()?;
                    if args.is_empty() {
                        return Err(self.error("compound term needs at least one argument"));
                    }
                    Ok(Term::Compound(name, args))
                } else {
                    Ok(Term::Atom(name))
                }
            }
            TokenKind::Var(name) => Ok(Term::Var(name)),
            TokenKind::Int(n) => Ok(Term::Number(Number::Int(n))),
            TokenKind::Float(x) => Ok(Term::Number(Number::Float(x))),
            TokenKind::Str(s) => Ok(Term::Str(s)),
            TokenKind::Minus => match self.bump() {
                TokenKind::Int(n) => Ok(Term::Number(Number::Int(-n))),
                TokenKind::Float(x) => Ok(Term::Number(Number::Float(-x))),
                other => Err(self.error(format!("expected number after `-`, found {other}"))),
            },
            TokenKind::LBracket => {
                if *self.peek() == TokenKind::RBracket {
                    self.bump();
                    return Ok(Term::List(Vec::new()));
                }
                let mut items = vec![self.parse_term(1)?];
                while *self.peek() == TokenKind::Comma {
                    self.bump();
                    items.push(self.parse_term(1)?);
                }
                self.expect(TokenKind::RBracket)?;
                Ok(Term::List(items))
            }
            TokenKind::LParen => {
                let inner = self.parse_term(1)?;
                self.expect(TokenKind::RParen)?;
                Ok(inner)
            }
            other => Err(SyntaxError {
                message: format!("expected a term, found {other}"),
                offset: start,
            }),
        }
    }

    fn parse_args(&mut self) -> Result<Vec<Term>, SyntaxError> {
        let mut args = Vec::new();
        if *self.peek() == TokenKind::RParen {
            self.bump();
            return Ok(args);
        }
        loop {
            args.push(self.parse_term(1)?);
            match self.bump() {
                TokenKind::Comma => continue,
                TokenKind::RParen => break,
                other => {
                    self.pos = self.pos.saturating_sub(1);
                    return Err(self.error(format!("expected `,` or `)`, found {other}")));
                }
            }
        }
        Ok(args)
    }
}

/// Parse a complete term from text.
pub fn parse_term(text: &str) -> Result<Term, SyntaxError> {
    let tokens = lexer::tokenize(text)
        .map_err(|e| SyntaxError { message: e.message, offset: e.offset })?;
    let mut parser = TermParser { tokens, pos: 0 };
    let term = parser.parse_term(1)?;
    if *parser.peek() != TokenKind::Eof {
        return Err(parser.error(format!("trailing input: {}", parser.peek())));
    }
    Ok(term)
}

fn write_term(t: &Term, out: &mut String, parent_prec: u8) {
    match t {
        Term::Atom(name) => out.push_str(name),
        Term::Number(n) => out.push_str(&n.to_string()),
        Term::Str(s) => {
            out.push('"');
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    c => out.push(c),
                }
            }
            out.push('"');
        }
        Term::Var(name) => out.push_str(name),
        Term::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_term(item, out, 0);
            }
            out.push(']');
        }
        Term::Compound(functor, args) => {
            if args.len() == 2 {
                if let Some(prec) = operator_precedence(functor) {
                    let paren = prec <= parent_prec;
                    if paren {
                        out.push('(');
                    }
                    write_term(&args[0], out, prec);
                    out.push_str(functor);
                    write_term(&args[1], out, prec);
                    if paren {
                        out.push(')');
                    }
                    return;
                }
            }
            out.push_str(functor);
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_term(arg, out, 0);
            }
            out.push(')');
        }
    }
}

/// Canonical text for a term: no whitespace, binary operators printed
/// infix, everything else `functor(arg,...)`. The inverse of
/// [`parse_term`].
pub fn format_term(t: &Term) -> String {
    let mut out = String::new();
    write_term(t, &mut out, 0);
    out
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_term(self))
    }
}

/// One-sided match of a query (may contain variables) against a ground
/// term. On success the returned bindings extend `bindings` with exactly
/// the entries forced by the query's variables.
pub fn match_term(
    query: &Term,
    ground: &Term,
    bindings: &Bindings,
) -> Result<Option<Bindings>, InternalError> {
    if !ground.is_ground() {
        return Err(InternalError(format!(
            "match target is not ground: {ground}"
        )));
    }
    let mut out = bindings.clone();
    if match_into(query, ground, &mut out) {
        Ok(Some(out))
    } else {
        Ok(None)
    }
}

fn match_into(query: &Term, ground: &Term, bindings: &mut Bindings) -> bool {
    match (query, ground) {
        (Term::Var(name), g) => match bindings.get(name) {
            Some(bound) => bound == g,
            None => {
                bindings.bind(name, g.clone());
                true
            }
        },
        (Term::Atom(a), Term::Atom(b)) => a == b,
        (Term::Number(a), Term::Number(b)) => a == b,
        (Term::Str(a), Term::Str(b)) => a == b,
        (Term::List(qs), Term::List(gs)) => {
            qs.len() == gs.len() && qs.iter().zip(gs).all(|(q, g)| match_into(q, g, bindings))
        }
        (Term::Compound(qf, qargs), Term::Compound(gf, gargs)) => {
            qf == gf
                && qargs.len() == gargs.len()
                && qargs.iter().zip(gargs).all(|(q, g)| match_into(q, g, bindings))
        }
        _ => false,
    }
}
