//! Abstract syntax of TR programs: type definitions, declarations,
//! procedure signatures and procedures made of guarded rules.

use std::collections::BTreeMap;

use crate::term::Term;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypeDefBody {
    /// `t ::= a | b | c`
    AtomDisjunction(Vec<String>),
    /// `t ::= u || v` (two or more member types)
    TypeUnion(Vec<String>),
    /// `t ::= (min .. max)`
    IntRange(i64, i64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeDef {
    pub name: String,
    pub body: TypeDefBody,
    pub loc: Loc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeclKind {
    Percept,
    Belief,
    Durative,
    Discrete,
}

impl DeclKind {
    pub fn keyword(self) -> &'static str {
        match self {
            DeclKind::Percept => "percept",
            DeclKind::Belief => "belief",
            DeclKind::Durative => "durative",
            DeclKind::Discrete => "discrete",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declaration {
    pub kind: DeclKind,
    pub name: String,
    pub arg_types: Vec<String>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    NumberLit(crate::term::Number),
    VarRef(String),
    BinOp(char, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Gt,
    Ge,
    Eq,
    Le,
    Lt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    /// A percept/belief query, an atom or compound term.
    Query(Term),
    /// `not q` — negation as failure over a single query.
    NegatedQuery(Term),
    Comparison(Expr, CmpOp, Expr),
    TrueLiteral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub guard: Vec<Condition>,
    /// Empty means the while condition defaults to `false`.
    pub while_cond: Vec<Condition>,
    pub while_min: f64,
    /// Empty means the until condition defaults to `false`.
    pub until_cond: Vec<Condition>,
    pub until_min: f64,
    /// Right-hand side: one procedure call, or a (possibly empty) tuple
    /// of primitive action predicates.
    pub actions: Vec<Term>,
    pub loc: Loc,
}

impl Rule {
    /// True when the rule carries no while/until clause at all.
    pub fn is_plain(&self) -> bool {
        self.while_cond.is_empty()
            && self.until_cond.is_empty()
            && self.while_min == 0.0
            && self.until_min == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Procedure {
    pub name: String,
    pub params: Vec<String>,
    pub rules: Vec<Rule>,
    pub loc: Loc,
}

#[derive(Debug, Clone, Default)]
pub struct Program {
    pub type_defs: Vec<TypeDef>,
    pub declarations: Vec<Declaration>,
    /// Procedure name -> parameter type names, in declaration order.
    pub proc_sigs: BTreeMap<String, Vec<String>>,
    pub procedures: BTreeMap<String, Procedure>,
}

impl Program {
    pub fn declaration(&self, name: &str) -> Option<&Declaration> {
        self.declarations.iter().find(|d| d.name == name)
    }

    pub fn is_action(&self, name: &str) -> bool {
        self.declaration(name)
            .is_some_and(|d| matches!(d.kind, DeclKind::Durative | DeclKind::Discrete))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleActionKind {
    ProcCall,
    ActionTuple,
}

/// A rule's right-hand side is a procedure call exactly when it is a
/// single predicate whose functor names a declared procedure.
pub fn rule_action_kind(rule: &Rule, program: &Program) -> RuleActionKind {
    if rule.actions.len() == 1 {
        if let Some((name, _)) = rule.actions[0].functor() {
            if program.proc_sigs.contains_key(name) {
                return RuleActionKind::ProcCall;
            }
        }
    }
    RuleActionKind::ActionTuple
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Expr::NumberLit(n) => write!(f, "{n}"),
            Expr::VarRef(name) => write!(f, "{name}"),
            Expr::BinOp(op, l, r) => write!(f, "({l}{op}{r})"),
        }
    }
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Condition::Query(t) => write!(f, "{t}"),
            Condition::NegatedQuery(t) => write!(f, "not {t}"),
            Condition::Comparison(l, op, r) => write!(f, "{l} {} {r}", op.symbol()),
            Condition::TrueLiteral => write!(f, "true"),
        }
    }
}
