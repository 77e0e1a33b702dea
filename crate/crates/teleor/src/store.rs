//! The belief store: ground facts (current percepts plus remembered
//! beliefs) and evaluation of conditions, conjunctions and arithmetic.

use crate::ast::{CmpOp, Condition, Expr};
use crate::term::{format_term, match_term, Bindings, Number, Term};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}` in expression")]
    UnboundVariable(String),
    #[error("`{0}` is not a number")]
    NotANumber(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("internal: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tag {
    Percept,
    Remembered,
}

/// Insertion-ordered, deduplicated ground facts. Percepts come first in
/// wire arrival order, remembered facts after in remember order.
#[derive(Debug, Clone, Default)]
pub struct BeliefStore {
    percepts: Vec<Term>,
    remembered: Vec<Term>,
}

impl BeliefStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replace the whole percept partition (the environment sends all
    /// percepts on every update). Duplicates collapse to one fact.
    pub fn set_percepts(&mut self, percepts: Vec<Term>) {
        self.percepts.clear();
        for p in percepts {
            debug_assert!(p.is_ground(), "percept must be ground: {}", format_term(&p));
            if !self.percepts.contains(&p) {
                self.percepts.push(p);
            }
        }
    }

    pub fn remember(&mut self, fact: Term) {
        debug_assert!(fact.is_ground());
        if !self.remembered.contains(&fact) {
            self.remembered.push(fact);
        }
    }

    pub fn forget(&mut self, fact: &Term) {
        self.remembered.retain(|f| f != fact);
    }

    pub fn facts(&self) -> impl Iterator<Item = &Term> {
        self.percepts.iter().chain(self.remembered.iter())
    }

    pub fn percepts(&self) -> &[Term] {
        &self.percepts
    }

    pub fn remembered(&self) -> &[Term] {
        &self.remembered
    }

    fn iter_tagged(&self) -> impl Iterator<Item = (Tag, &Term)> {
        self.percepts
            .iter()
            .map(|t| (Tag::Percept, t))
            .chain(self.remembered.iter().map(|t| (Tag::Remembered, t)))
    }

    pub fn len(&self) -> usize {
        self.percepts.len() + self.remembered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.percepts.is_empty() && self.remembered.is_empty()
    }
}

/// All extensions of `vars` under which `cond` matches a stored fact,
/// in store order.
pub fn evaluate_query(
    cond: &Term,
    store: &BeliefStore,
    vars: &Bindings,
) -> Result<(bool, Vec<Bindings>), EvalError> {
    let query = cond.substitute(vars);
    let mut out = Vec::new();
    for (_, fact) in store.iter_tagged() {
        match match_term(&query, fact, vars) {
            Ok(Some(b)) => out.push(b),
            Ok(None) => {}
            Err(e) => return Err(EvalError::Internal(e.to_string())),
        }
    }
    Ok((!out.is_empty(), out))
}

pub fn evaluate_condition(
    cond: &Condition,
    store: &BeliefStore,
    vars: &Bindings,
) -> Result<(bool, Vec<Bindings>), EvalError> {
    match cond {
        Condition::TrueLiteral => Ok((true, vec![vars.clone()])),
        Condition::Query(q) => evaluate_query(q, store, vars),
        Condition::NegatedQuery(q) => {
            let (ok, _) = evaluate_query(q, store, vars)?;
            if ok {
                Ok((false, Vec::new()))
            } else {
                Ok((true, vec![vars.clone()]))
            }
        }
        Condition::Comparison(lhs, op, rhs) => {
            let l = evaluate_expr(lhs, vars)?.as_f64();
            let r = evaluate_expr(rhs, vars)?.as_f64();
            let holds = match op {
                CmpOp::Gt => l > r,
                CmpOp::Ge => l >= r,
                CmpOp::Eq => l == r,
                CmpOp::Le => l <= r,
                CmpOp::Lt => l < r,
            };
            if holds {
                Ok((true, vec![vars.clone()]))
            } else {
                Ok((false, Vec::new()))
            }
        }
    }
}

/// Left-to-right threading: each condition's answers are expanded under
/// every binding produced so far, preserving order. The first binding of
/// the final list is the engine's answer substitution.
pub fn evaluate_conjunction(
    conds: &[Condition],
    store: &BeliefStore,
    vars: &Bindings,
) -> Result<(bool, Vec<Bindings>), EvalError> {
    let mut current = vec![vars.clone()];
    for cond in conds {
        let mut next = Vec::new();
        for binding in &current {
            let (_, results) = evaluate_condition(cond, store, binding)?;
            next.extend(results);
        }
        if next.is_empty() {
            return Ok((false, Vec::new()));
        }
        current = next;
    }
    Ok((true, current))
}

/// Evaluate an arithmetic expression. Integer arithmetic stays exact;
/// integer division falls back to a float when it does not divide evenly.
pub fn evaluate_expr(e: &Expr, vars: &Bindings) -> Result<Number, EvalError> {
    match e {
        Expr::NumberLit(n) => Ok(*n),
        Expr::VarRef(v) => match vars.get(v) {
            None => Err(EvalError::UnboundVariable(v.clone())),
            Some(Term::Number(n)) => Ok(*n),
            Some(other) => Err(EvalError::NotANumber(format_term(other))),
        },
        Expr::BinOp(op, lhs, rhs) => {
            let l = evaluate_expr(lhs, vars)?;
            let r = evaluate_expr(rhs, vars)?;
            apply_binop(*op, l, r)
        }
    }
}

fn apply_binop(op: char, l: Number, r: Number) -> Result<Number, EvalError> {
    use Number::*;
    if let (Int(a), Int(b)) = (l, r) {
        return match op {
            '+' => Ok(Int(a + b)),
            '-' => Ok(Int(a - b)),
            '*' => Ok(Int(a * b)),
            '/' => {
                if b == 0 {
                    Err(EvalError::DivisionByZero)
                } else if a % b == 0 {
                    Ok(Int(a / b))
                } else {
                    Ok(Float(a as f64 / b as f64))
                }
            }
            _ => Err(EvalError::Internal(format!("unknown operator `{op}`"))),
        };
    }
    let (a, b) = (l.as_f64(), r.as_f64());
    match op {
        '+' => Ok(Float(a + b)),
        '-' => Ok(Float(a - b)),
        '*' => Ok(Float(a * b)),
        '/' => {
            if b == 0.0 {
                Err(EvalError::DivisionByZero)
            } else {
                Ok(Float(a / b))
            }
        }
        _ => Err(EvalError::Internal(format!("unknown operator `{op}`"))),
    }
}

/// Strip `remember`/`forget` out of a ground action tuple, applying them
/// to the store; everything else comes back unchanged, in order.
pub fn apply_belief_updates(actions: &[Term], store: &mut BeliefStore) -> Vec<Term> {
    let mut primitives = Vec::new();
    for action in actions {
        match action {
            Term::Compound(name, args) if name == "remember" && args.len() == 1 => {
                store.remember(args[0].clone());
            }
            Term::Compound(name, args) if name == "forget" && args.len() == 1 => {
                store.forget(&args[0]);
            }
            other => primitives.push(other.clone()),
        }
    }
    primitives
}
