//! Recursive-descent parser for TR source files (`.tr`).
//!
//! A program is a sequence of type definitions (`t ::= ...`), typed
//! declarations (`percept p : (num), q : ()`), procedure signatures
//! (`p : (num) ~>`) and procedure definitions (`p(X){ rules }`).

use std::collections::BTreeSet;

use crate::ast::*;
use crate::lexer::{self, Token, TokenKind};
use crate::term::{Number, Term};

#[derive(Debug, Clone, thiserror::Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax { message: String, line: u32, col: u32 },
    #[error("{line}:{col}: duplicate definition of `{name}`")]
    Duplicate { name: String, line: u32, col: u32 },
    #[error("{line}:{col}: unsupported TeleoR feature: {feature}")]
    Unsupported { feature: String, line: u32, col: u32 },
    #[error("{line}:{col}: procedure `{name}` has no matching signature with {arity} parameter(s)")]
    MissingSignature { name: String, arity: usize, line: u32, col: u32 },
}

/// Names that user programs may not redefine.
const RESERVED: &[&str] = &[
    "remember", "forget", "true", "not", "while", "until", "min",
    "atomic", "num", "int", "nat", "atom", "string",
];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn peek2(&self) -> &TokenKind {
        &self.tokens[(self.pos + 1).min(self.tokens.len() - 1)].kind
    }

    fn loc(&self) -> Loc {
        let t = &self.tokens[self.pos];
        Loc { line: t.line, col: t.col }
    }

    fn bump(&mut self) -> TokenKind {
        let kind = self.tokens[self.pos].kind.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        kind
    }

    fn syntax<T>(&self, message: impl Into<String>) -> PResult<T> {
        let loc = self.loc();
        Err(ParseError::Syntax { message: message.into(), line: loc.line, col: loc.col })
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<()> {
        if *self.peek() == kind {
            self.bump();
            Ok(())
        } else {
            self.syntax(format!("expected {kind}, found {}", self.peek()))
        }
    }

    fn expect_ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            TokenKind::Ident(name) => {
                self.bump();
                Ok(name)
            }
            other => self.syntax(format!("expected an identifier, found {other}")),
        }
    }

    fn ident_is(&self, word: &str) -> bool {
        matches!(self.peek(), TokenKind::Ident(name) if name == word)
    }

    // ---- terms inside rules -------------------------------------------

    /// An argument of a predicate: a value, variable or nested predicate.
    fn parse_arg(&mut self) -> PResult<Term> {
        match self.bump() {
            TokenKind::Ident(name) => {
                if *self.peek() == TokenKind::LParen {
                    self.bump();
                    let args = self.parse_arg_list()?;
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
                other => self.syntax(format!("expected number after `-`, found {other}")),
            },
            TokenKind::LBracket => {
                if *self.peek() == TokenKind::RBracket {
                    self.bump();
                    return Ok(Term::List(Vec::new()));
                }
                let mut items = vec![self.parse_arg()?];
                while *self.peek() == TokenKind::Comma {
                    self.bump();
                    items.push(self.parse_arg()?);
                }
                self.expect(TokenKind::RBracket)?;
                Ok(Term::List(items))
            }
            other => self.syntax(format!("expected a term, found {other}")),
        }
    }

    fn parse_arg_list(&mut self) -> PResult<Vec<Term>> {
        let mut args = Vec::new();
        if *self.peek() == TokenKind::RParen {
            self.bump();
            return Ok(args);
        }
        loop {
            args.push(self.parse_arg()?);
            match self.peek() {
                TokenKind::Comma => {
                    self.bump();
                }
                TokenKind::RParen => {
                    self.bump();
                    break;
                }
                other => return self.syntax(format!("expected `,` or `)`, found {other}")),
            }
        }
        Ok(args)
    }

    /// A predicate: `name` or `name(arg, ...)`.
    fn parse_predicate(&mut self) -> PResult<Term> {
        let name = self.expect_ident()?;
        if *self.peek() == TokenKind::LParen {
            self.bump();
            let args = self.parse_arg_list()?;
            if args.is_empty() {
                // `p()` in condition/action position means the 0-ary predicate
                Ok(Term::Atom(name))
            } else {
                Ok(Term::Compound(name, args))
            }
        } else {
            Ok(Term::Atom(name))
        }
    }

    // ---- arithmetic expressions ---------------------------------------

    fn parse_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_expr_mul()?;
        loop {
            let op = match self.peek() {
                TokenKind::Plus => '+',
                TokenKind::Minus => '-',
                _ => break,
            };
            self.bump();
            let rhs = self.parse_expr_mul()?;
            lhs = Expr::BinOp(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_expr_mul(&mut self) -> PResult<Expr> {
        let mut lhs = self.parse_expr_primary()?;
        loop {
            let op = match self.peek() {
                TokenKind::Star => '*',
                TokenKind::Slash => '/',
                _ => break,
            };
            self.bump();
            let rhs = self.parse_expr_primary()?;
            lhs = Expr::BinOp(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_expr_primary(&mut self) -> PResult<Expr> {
        match self.bump() {
            TokenKind::Int(n) => Ok(Expr::NumberLit(Number::Int(n))),
            TokenKind::Float(x) => Ok(Expr::NumberLit(Number::Float(x))),
            TokenKind::Var(name) => Ok(Expr::VarRef(name)),
            TokenKind::Minus => match self.bump() {
                TokenKind::Int(n) => Ok(Expr::NumberLit(Number::Int(-n))),
                TokenKind::Float(x) => Ok(Expr::NumberLit(Number::Float(-x))),
                other => self.syntax(format!("expected number after `-`, found {other}")),
            },
            TokenKind::LParen => {
                let e = self.parse_expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            other => self.syntax(format!("expected an expression, found {other}")),
        }
    }

    fn parse_cmp_op(&mut self) -> PResult<CmpOp> {
        let op = match self.peek() {
            TokenKind::Gt => CmpOp::Gt,
            TokenKind::Ge => CmpOp::Ge,
            TokenKind::EqEq => CmpOp::Eq,
            TokenKind::Le => CmpOp::Le,
            TokenKind::Lt => CmpOp::Lt,
            other => return self.syntax(format!("expected a comparison operator, found {other}")),
        };
        self.bump();
        Ok(op)
    }

    // ---- conditions ----------------------------------------------------

    fn parse_condition(&mut self) -> PResult<Condition> {
        match self.peek().clone() {
            TokenKind::Ident(name) if name == "not" => {
                self.bump();
                let inner = self.parse_predicate()?;
                Ok(Condition::NegatedQuery(inner))
            }
            TokenKind::Ident(name) if name == "true" => {
                self.bump();
                Ok(Condition::TrueLiteral)
            }
            TokenKind::Ident(_) => {
                let pred = self.parse_predicate()?;
                Ok(Condition::Query(pred))
            }
            TokenKind::Var(_)
            | TokenKind::Int(_)
            | TokenKind::Float(_)
            | TokenKind::Minus
            | TokenKind::LParen => {
                let lhs = self.parse_expr()?;
                let op = self.parse_cmp_op()?;
                let rhs = self.parse_expr()?;
                Ok(Condition::Comparison(lhs, op, rhs))
            }
            other => self.syntax(format!("expected a condition, found {other}")),
        }
    }

    fn parse_condition_list(&mut self) -> PResult<Vec<Condition>> {
        let mut conds = vec![self.parse_condition()?];
        while *self.peek() == TokenKind::Amp {
            self.bump();
            conds.push(self.parse_condition()?);
        }
        Ok(conds)
    }

    fn parse_min_time(&mut self) -> PResult<f64> {
        let loc = self.loc();
        let value = match self.bump() {
            TokenKind::Int(n) => n as f64,
            TokenKind::Float(x) => x,
            other => return self.syntax(format!("expected a numeric literal after `min`, found {other}")),
        };
        if value < 0.0 {
            return Err(ParseError::Syntax {
                message: "min time must be non-negative".into(),
                line: loc.line,
                col: loc.col,
            });
        }
        Ok(value)
    }

    // ---- rules ----------------------------------------------------------

    fn parse_rule(&mut self) -> PResult<Rule> {
        let loc = self.loc();
        let guard = self.parse_condition_list()?;

        let mut while_cond = Vec::new();
        let mut while_min = 0.0;
        let mut until_cond = Vec::new();
        let mut until_min = 0.0;

        if self.ident_is("while") {
            self.bump();
            if !self.ident_is("min") {
                while_cond = self.parse_condition_list()?;
            }
            if self.ident_is("min") {
                self.bump();
                while_min = self.parse_min_time()?;
            }
        }
        if self.ident_is("until") {
            self.bump();
            if !self.ident_is("min") {
                until_cond = self.parse_condition_list()?;
            }
            if self.ident_is("min") {
                self.bump();
                until_min = self.parse_min_time()?;
            }
        }

        self.expect(TokenKind::Arrow)?;

        let actions = self.parse_rule_actions()?;
        self.reject_unsupported_rhs()?;

        Ok(Rule { guard, while_cond, while_min, until_cond, until_min, actions, loc })
    }

    fn parse_rule_actions(&mut self) -> PResult<Vec<Term>> {
        // `()` is the empty action tuple
        if *self.peek() == TokenKind::LParen && *self.peek2() == TokenKind::RParen {
            self.bump();
            self.bump();
            return Ok(Vec::new());
        }
        let mut actions = vec![self.parse_predicate()?];
        while *self.peek() == TokenKind::Comma {
            self.bump();
            actions.push(self.parse_predicate()?);
        }
        Ok(actions)
    }

    fn reject_unsupported_rhs(&self) -> PResult<()> {
        let feature = match self.peek() {
            TokenKind::Semicolon => Some("timed action sequences (`;`)"),
            TokenKind::Ident(w) if w == "for" => Some("timed action sequences (`for`)"),
            TokenKind::Ident(w) if w == "wait" => Some("wait/repeat actions"),
            TokenKind::Ident(w) if w == "repeat" => Some("wait/repeat actions"),
            _ => None,
        };
        if let Some(feature) = feature {
            let loc = self.loc();
            return Err(ParseError::Unsupported {
                feature: feature.into(),
                line: loc.line,
                col: loc.col,
            });
        }
        Ok(())
    }

    // ---- top-level constructs -------------------------------------------

    fn parse_type_tuple(&mut self) -> PResult<Vec<String>> {
        self.expect(TokenKind::LParen)?;
        let mut names = Vec::new();
        if *self.peek() == TokenKind::RParen {
            self.bump();
            return Ok(names);
        }
        loop {
            names.push(self.expect_ident()?);
            match self.peek() {
                TokenKind::Comma => {
                    self.bump();
                }
                TokenKind::RParen => {
                    self.bump();
                    break;
                }
                other => return self.syntax(format!("expected `,` or `)`, found {other}")),
            }
        }
        Ok(names)
    }

    fn parse_type_def_body(&mut self) -> PResult<TypeDefBody> {
        if *self.peek() == TokenKind::LParen {
            self.bump();
            let min = self.parse_range_bound()?;
            self.expect(TokenKind::DotDot)?;
            let max = self.parse_range_bound()?;
            self.expect(TokenKind::RParen)?;
            if min > max {
                return self.syntax("range minimum exceeds maximum");
            }
            return Ok(TypeDefBody::IntRange(min, max));
        }
        let first = self.expect_ident()?;
        match self.peek() {
            TokenKind::PipePipe => {
                let mut members = vec![first];
                while *self.peek() == TokenKind::PipePipe {
                    self.bump();
                    members.push(self.expect_ident()?);
                }
                Ok(TypeDefBody::TypeUnion(members))
            }
            TokenKind::Pipe => {
                let mut atoms = vec![first];
                while *self.peek() == TokenKind::Pipe {
                    self.bump();
                    atoms.push(self.expect_ident()?);
                }
                Ok(TypeDefBody::AtomDisjunction(atoms))
            }
            _ => Ok(TypeDefBody::AtomDisjunction(vec![first])),
        }
    }

    fn parse_range_bound(&mut self) -> PResult<i64> {
        match self.bump() {
            TokenKind::Int(n) => Ok(n),
            TokenKind::Minus => match self.bump() {
                TokenKind::Int(n) => Ok(-n),
                other => self.syntax(format!("expected integer, found {other}")),
            },
            other => self.syntax(format!("expected integer, found {other}")),
        }
    }

    fn parse_declarations(&mut self, kind: DeclKind) -> PResult<Vec<Declaration>> {
        self.bump(); // the kind keyword
        let mut decls = Vec::new();
        loop {
            let loc = self.loc();
            let name = self.expect_ident()?;
            self.expect(TokenKind::Colon)?;
            let arg_types = self.parse_type_tuple()?;
            decls.push(Declaration { kind, name, arg_types, loc });
            if *self.peek() == TokenKind::Comma {
                self.bump();
            } else {
                break;
            }
        }
        Ok(decls)
    }

    fn parse_procedure(&mut self, name: String, loc: Loc) -> PResult<Procedure> {
        self.expect(TokenKind::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != TokenKind::RParen {
            loop {
                match self.bump() {
                    TokenKind::Var(v) => params.push(v),
                    other => return self.syntax(format!("expected a parameter variable, found {other}")),
                }
                match self.peek() {
                    TokenKind::Comma => {
                        self.bump();
                    }
                    _ => break,
                }
            }
        }
        self.expect(TokenKind::RParen)?;
        {
            let mut seen = BTreeSet::new();
            for p in &params {
                if !seen.insert(p.clone()) {
                    return self.syntax(format!("duplicate parameter `{p}` in procedure `{name}`"));
                }
            }
        }
        self.expect(TokenKind::LBrace)?;
        let mut rules = Vec::new();
        while *self.peek() != TokenKind::RBrace {
            rules.push(self.parse_rule()?);
        }
        self.expect(TokenKind::RBrace)?;
        if rules.is_empty() {
            return self.syntax(format!("procedure `{name}` has no rules"));
        }
        Ok(Procedure { name, params, rules, loc })
    }
}

/// Parse a complete TR program, enforcing the cross-construct invariants:
/// no name defined twice, every procedure has a signature with the same
/// parameter count.
pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    let tokens = lexer::tokenize(source).map_err(|e| ParseError::Syntax {
        message: e.message,
        line: e.line,
        col: e.col,
    })?;
    let mut p = Parser { tokens, pos: 0 };
    let mut program = Program::default();
    let mut defined: BTreeSet<String> = BTreeSet::new();

    let mut claim = |p: &Parser, name: &str, loc: Loc| -> PResult<()> {
        if RESERVED.contains(&name) {
            return Err(ParseError::Syntax {
                message: format!("`{name}` is a reserved name"),
                line: loc.line,
                col: loc.col,
            });
        }
        let _ = p;
        if !defined.insert(name.to_string()) {
            return Err(ParseError::Duplicate {
                name: name.to_string(),
                line: loc.line,
                col: loc.col,
            });
        }
        Ok(())
    };

    loop {
        match p.peek().clone() {
            TokenKind::Eof => break,
            TokenKind::Ident(word)
                if matches!(word.as_str(), "percept" | "belief" | "durative" | "discrete") =>
            {
                let kind = match word.as_str() {
                    "percept" => DeclKind::Percept,
                    "belief" => DeclKind::Belief,
                    "durative" => DeclKind::Durative,
                    _ => DeclKind::Discrete,
                };
                for decl in p.parse_declarations(kind)? {
                    claim(&p, &decl.name, decl.loc)?;
                    program.declarations.push(decl);
                }
            }
            TokenKind::Ident(name) => {
                let loc = p.loc();
                match p.peek2().clone() {
                    TokenKind::DefinedAs => {
                        p.bump();
                        p.bump();
                        let body = p.parse_type_def_body()?;
                        claim(&p, &name, loc)?;
                        program.type_defs.push(TypeDef { name, body, loc });
                    }
                    TokenKind::Colon => {
                        p.bump();
                        p.bump();
                        let types = p.parse_type_tuple()?;
                        p.expect(TokenKind::Arrow)?;
                        claim(&p, &name, loc)?;
                        program.proc_sigs.insert(name, types);
                    }
                    TokenKind::LParen => {
                        p.bump();
                        let proc = p.parse_procedure(name.clone(), loc)?;
                        if program.procedures.contains_key(&name) {
                            return Err(ParseError::Duplicate {
                                name,
                                line: loc.line,
                                col: loc.col,
                            });
                        }
                        match program.proc_sigs.get(&name) {
                            Some(sig) if sig.len() == proc.params.len() => {}
                            _ => {
                                return Err(ParseError::MissingSignature {
                                    name,
                                    arity: proc.params.len(),
                                    line: loc.line,
                                    col: loc.col,
                                })
                            }
                        }
                        program.procedures.insert(name, proc);
                    }
                    other => {
                        return p.syntax(format!(
                            "expected `::=`, `:` or `(` after `{name}`, found {other}"
                        ))
                    }
                }
            }
            other => return p.syntax(format!("expected a top-level construct, found {other}")),
        }
    }

    // Every signature must have a body too; a dangling signature is a
    // missing-definition error at this stage.
    for (name, _) in program.proc_sigs.iter() {
        if !program.procedures.contains_key(name) {
            return Err(ParseError::MissingSignature {
                name: name.clone(),
                arity: 0,
                line: 0,
                col: 0,
            });
        }
    }

    Ok(program)
}

/// Render a program back to parseable source. Round-trips to an equal AST.
pub fn program_to_source(program: &Program) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for def in &program.type_defs {
        match &def.body {
            TypeDefBody::AtomDisjunction(atoms) => {
                let _ = writeln!(out, "{} ::= {}", def.name, atoms.join(" | "));
            }
            TypeDefBody::TypeUnion(types) => {
                let _ = writeln!(out, "{} ::= {}", def.name, types.join(" || "));
            }
            TypeDefBody::IntRange(min, max) => {
                let _ = writeln!(out, "{} ::= ({} .. {})", def.name, min, max);
            }
        }
    }
    for decl in &program.declarations {
        let _ = writeln!(
            out,
            "{} {} : ({})",
            decl.kind.keyword(),
            decl.name,
            decl.arg_types.join(", ")
        );
    }
    for (name, sig) in &program.proc_sigs {
        let _ = writeln!(out, "{} : ({}) ~>", name, sig.join(", "));
        let proc = &program.procedures[name];
        let _ = writeln!(out, "{}({}){{", name, proc.params.join(", "));
        for rule in &proc.rules {
            let guard: Vec<String> = rule.guard.iter().map(|c| c.to_string()).collect();
            let mut line = guard.join(" & ");
            if !rule.while_cond.is_empty() || rule.while_min != 0.0 {
                line.push_str(" while");
                if !rule.while_cond.is_empty() {
                    let wc: Vec<String> = rule.while_cond.iter().map(|c| c.to_string()).collect();
                    line.push(' ');
                    line.push_str(&wc.join(" & "));
                }
                if rule.while_min != 0.0 {
                    let _ = write!(line, " min {:?}", rule.while_min);
                }
            }
            if !rule.until_cond.is_empty() || rule.until_min != 0.0 {
                line.push_str(" until");
                if !rule.until_cond.is_empty() {
                    let uc: Vec<String> = rule.until_cond.iter().map(|c| c.to_string()).collect();
                    line.push(' ');
                    line.push_str(&uc.join(" & "));
                }
                if rule.until_min != 0.0 {
                    let _ = write!(line, " min {:?}", rule.until_min);
                }
            }
            line.push_str(" ~> ");
            if rule.actions.is_empty() {
                line.push_str("()");
            } else {
                let acts: Vec<String> =
                    rule.actions.iter().map(crate::term::format_term).collect();
                line.push_str(&acts.join(", "));
            }
            let _ = writeln!(out, "{line}");
        }
        let _ = writeln!(out, "}}");
    }
    out
}
