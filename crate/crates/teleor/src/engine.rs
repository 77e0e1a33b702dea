//! The TR interpreter: per-cycle evaluation of the procedure call stack
//! against the belief store, rule continuation (while/until), control
//! diffing and the dependent-predicates re-evaluation guard.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::{Condition, Procedure, Program, Rule};
use crate::store::{
    apply_belief_updates, evaluate_conjunction, BeliefStore, EvalError,
};
use crate::term::{format_term, Bindings, Term};
use crate::types::{build_hierarchy, build_signature_table, check_type, Sort};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("exceeded-recursion-depth: call depth {0} exceeds the maximum")]
    ExceededRecursionDepth(usize),
    #[error("no-firable-rule in procedure `{0}`")]
    NoFirableRule(String),
    #[error("unbound variable in action `{0}`")]
    UnboundAction(String),
    #[error("call to undefined procedure `{0}`")]
    UndefinedProcedure(String),
    #[error("task call does not match any procedure signature")]
    BadTaskCall,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One fired rule on the call stack.
#[derive(Debug, Clone, PartialEq)]
pub struct FiringRecord {
    pub proc: String,
    /// ground arguments of the call that produced this firing
    pub args: Vec<Term>,
    pub rule_index: usize,
    pub bindings: Bindings,
    pub first_fired: f64,
    /// RHS after substitution — ground
    pub actions: Vec<Term>,
}

// ---------------------------------------------------------------------------
// dependent predicates (the re-evaluation guard)

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sign {
    /// `++`: the rule may stop firing if this predicate is added
    Added,
    /// `--`: the rule may stop firing if this predicate is removed
    Removed,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DependencySign {
    pub sign: Sign,
    pub functor: String,
    pub arity: usize,
}

impl std::fmt::Display for DependencySign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let prefix = match self.sign {
            Sign::Added => "++",
            Sign::Removed => "--",
        };
        if self.arity == 0 {
            write!(f, "{prefix}{}", self.functor)
        } else {
            write!(f, "{prefix}{}/{}", self.functor, self.arity)
        }
    }
}

fn positive_query_functors(conds: &[Condition]) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    for c in conds {
        if let Condition::Query(q) = c {
            if let Some((name, arity)) = q.functor() {
                let key = (name.to_string(), arity);
                if !out.contains(&key) {
                    out.push(key);
                }
            }
        }
    }
    out
}

/// `--f` for each positive query functor in the rule's own guard, then
/// `++f` for those of every strictly earlier rule, in rule order.
pub fn local_dependent_predicates(proc: &Procedure, rule_index: usize) -> Vec<DependencySign> {
    let mut out = Vec::new();
    for (name, arity) in positive_query_functors(&proc.rules[rule_index].guard) {
        out.push(DependencySign { sign: Sign::Removed, functor: name, arity });
    }
    for rule in &proc.rules[..rule_index] {
        for (name, arity) in positive_query_functors(&rule.guard) {
            let dep = DependencySign { sign: Sign::Added, functor: name, arity };
            if !out.contains(&dep) {
                out.push(dep);
            }
        }
    }
    out
}

/// Union of the local sets over the whole firing stack.
pub fn dependent_predicates(
    fired_rules: &[FiringRecord],
    program: &Program,
) -> BTreeSet<DependencySign> {
    let mut out = BTreeSet::new();
    for rec in fired_rules {
        if let Some(proc) = program.procedures.get(&rec.proc) {
            out.extend(local_dependent_predicates(proc, rec.rule_index));
        }
    }
    out
}

/// Did the store change in a way that could break any continuation?
pub fn update_is_relevant(
    added: &BTreeSet<(String, usize)>,
    removed: &BTreeSet<(String, usize)>,
    deps: &BTreeSet<DependencySign>,
) -> bool {
    deps.iter().any(|d| {
        let key = (d.functor.clone(), d.arity);
        match d.sign {
            Sign::Added => added.contains(&key),
            Sign::Removed => removed.contains(&key),
        }
    })
}

// ---------------------------------------------------------------------------
// the engine

pub struct Engine {
    program: Program,
    task_proc: String,
    task_args: Vec<Term>,
    max_depth: usize,
    /// step-8 guard: skip re-evaluation when no relevant functor changed
    pub optimize: bool,
    store: BeliefStore,
    fired_rules: Vec<FiringRecord>,
    last_controls: Option<Vec<Term>>,
    prev_facts: BTreeMap<String, (String, usize)>,
    hierarchy: crate::types::TypeHierarchy,
    sigs: crate::types::SignatureTable,
}

/// Ground facts keyed by their printed form, each mapped to its functor.
/// Replacing a fact with a same-functor, different-argument one must show
/// up as both an addition and a removal of that functor: an update like
/// temperature(17.9) -> temperature(18.0) can re-ground a guard even
/// though the set of fact names is unchanged.
fn fact_index(store: &BeliefStore) -> BTreeMap<String, (String, usize)> {
    store
        .facts()
        .filter_map(|f| {
            f.functor()
                .map(|(n, a)| (format_term(f), (n.to_string(), a)))
        })
        .collect()
}

impl Engine {
    /// `task_call` is the ground root call, e.g. `thermostat_task` or
    /// `regulate_temperature(18)`.
    pub fn new(program: Program, task_call: &Term, max_depth: usize) -> Result<Engine, EngineError> {
        let (name, args) = match task_call {
            Term::Atom(n) => (n.clone(), Vec::new()),
            Term::Compound(n, args) => (n.clone(), args.clone()),
            _ => return Err(EngineError::BadTaskCall),
        };
        let proc = program
            .procedures
            .get(&name)
            .ok_or_else(|| EngineError::UndefinedProcedure(name.clone()))?;
        if proc.params.len() != args.len() || !args.iter().all(Term::is_ground) {
            return Err(EngineError::BadTaskCall);
        }
        let hierarchy =
            build_hierarchy(&program.type_defs).map_err(|_| EngineError::BadTaskCall)?;
        let sigs = build_signature_table(&program);
        Ok(Engine {
            program,
            task_proc: name,
            task_args: args,
            max_depth,
            optimize: true,
            store: BeliefStore::new(),
            fired_rules: Vec::new(),
            last_controls: None,
            prev_facts: BTreeMap::new(),
            hierarchy,
            sigs,
        })
    }

    pub fn store(&self) -> &BeliefStore {
        &self.store
    }

    pub fn fired_rules(&self) -> &[FiringRecord] {
        &self.fired_rules
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    /// One evaluation cycle: apply the percept update, re-derive the
    /// action tuple from the root call, and report the primitive actions
    /// if they differ from the previous cycle (None = unchanged).
    pub fn cycle(
        &mut self,
        percepts: Vec<Term>,
        now: f64,
    ) -> Result<Option<Vec<Term>>, EngineError> {
        let percepts = self.validate_percepts(percepts);
        self.store.set_percepts(percepts);

        let current = fact_index(&self.store);
        if self.optimize && !self.fired_rules.is_empty() && self.stack_is_plain() {
            let added: BTreeSet<_> = current
                .iter()
                .filter(|(k, _)| !self.prev_facts.contains_key(*k))
                .map(|(_, v)| v.clone())
                .collect();
            let removed: BTreeSet<_> = self
                .prev_facts
                .iter()
                .filter(|(k, _)| !current.contains_key(*k))
                .map(|(_, v)| v.clone())
                .collect();
            let deps = dependent_predicates(&self.fired_rules, &self.program);
            if !update_is_relevant(&added, &removed, &deps) {
                // nothing that could break a continuation changed; keep
                // every firing and stay silent (same actions, same diff)
                self.prev_facts = current;
                return Ok(None);
            }
        }

        let actions =
            self.call_procedure(&self.task_proc.clone(), self.task_args.clone(), now, 1)?;
        let primitives = apply_belief_updates(&actions, &mut self.store);
        self.prev_facts = fact_index(&self.store);

        let changed = match &self.last_controls {
            Some(prev) => !same_action_set(prev, &primitives),
            None => true,
        };
        if changed {
            self.last_controls = Some(primitives.clone());
            Ok(Some(primitives))
        } else {
            Ok(None)
        }
    }

    /// The step-8 guard only covers plain conjunctive guards: anything
    /// with while/until clauses, comparisons, negations or belief updates
    /// is handled by full re-evaluation.
    fn stack_is_plain(&self) -> bool {
        self.fired_rules.iter().all(|rec| {
            let Some(proc) = self.program.procedures.get(&rec.proc) else {
                return false;
            };
            let rule = &proc.rules[rec.rule_index];
            rule.is_plain()
                && !rule.actions.iter().any(|a| {
                    matches!(a.functor(), Some(("remember" | "forget", _)))
                })
        })
    }

    /// Drop percepts that are not declared or not type-correct; the agent
    /// keeps running on the rest.
    fn validate_percepts(&self, percepts: Vec<Term>) -> Vec<Term> {
        percepts
            .into_iter()
            .filter(|p| {
                let ok = self.percept_is_valid(p);
                if !ok {
                    log::warn!("dropping ill-typed percept {}", format_term(p));
                }
                ok
            })
            .collect()
    }

    fn percept_is_valid(&self, p: &Term) -> bool {
        let Some((name, arity)) = p.functor() else { return false };
        let Some((Sort::Percept, types)) = self.sigs.get(name) else {
            return false;
        };
        if types.len() != arity {
            return false;
        }
        let args: &[Term] = match p {
            Term::Compound(_, args) => args,
            _ => &[],
        };
        args.iter()
            .zip(types)
            .all(|(a, ty)| check_type(a, ty, &self.hierarchy).unwrap_or(false))
    }

    fn call_procedure(
        &mut self,
        proc_name: &str,
        args: Vec<Term>,
        now: f64,
        depth: usize,
    ) -> Result<Vec<Term>, EngineError> {
        if depth > self.max_depth {
            return Err(EngineError::ExceededRecursionDepth(depth));
        }
        let proc = self
            .program
            .procedures
            .get(proc_name)
            .ok_or_else(|| EngineError::UndefinedProcedure(proc_name.to_string()))?
            .clone();

        let mut vars = Bindings::new();
        for (param, arg) in proc.params.iter().zip(&args) {
            vars.bind(param, arg.clone());
        }

        let prev = self
            .fired_rules
            .get(depth - 1)
            .filter(|r| r.proc == proc_name && r.args == args)
            .cloned();

        let new = self.get_action(&proc, &args, &vars, now, prev.as_ref())?;

        let prior = self.fired_rules.get(depth - 1);
        let changed = match prior {
            Some(p) => {
                p.proc != new.proc
                    || p.args != new.args
                    || p.rule_index != new.rule_index
                    || p.actions != new.actions
            }
            None => false,
        };
        if changed {
            // a different firing at this depth invalidates everything below
            self.fired_rules.truncate(depth - 1);
        }
        // (re)install the record at this depth
        if self.fired_rules.len() >= depth {
            self.fired_rules[depth - 1] = new.clone();
        } else {
            self.fired_rules.truncate(depth - 1);
            self.fired_rules.push(new.clone());
        }

        // a procedure call must be the sole RHS entry
        if new.actions.len() == 1 {
            if let Some((name, _)) = new.actions[0].functor() {
                if self.program.procedures.contains_key(name) {
                    let call_args = match &new.actions[0] {
                        Term::Compound(_, a) => a.clone(),
                        _ => Vec::new(),
                    };
                    let name = name.to_string();
                    return self.call_procedure(&name, call_args, now, depth + 1);
                }
            }
        }
        // action tuple: leaf of the descent — nothing deeper may survive
        self.fired_rules.truncate(depth);
        Ok(new.actions)
    }

    fn get_action(
        &self,
        proc: &Procedure,
        args: &[Term],
        vars: &Bindings,
        now: f64,
        prev: Option<&FiringRecord>,
    ) -> Result<FiringRecord, EngineError> {
        if let Some(prev) = prev {
            // while/until continuation: the firing survives even against
            // higher-priority rules until its time windows run out
            let rule = &proc.rules[prev.rule_index];
            if self.clauses_continue(prev, rule, now)? {
                return Ok(prev.clone());
            }
        }
        // otherwise rescan from the top; a rule above the previous firing
        // whose guard became inferable preempts it
        for (idx, rule) in proc.rules.iter().enumerate() {
            let (ok, bindings) = evaluate_conjunction(&rule.guard, &self.store, vars)?;
            if ok {
                let theta = bindings.into_iter().next().unwrap_or_else(|| vars.clone());
                let mut actions = Vec::with_capacity(rule.actions.len());
                for a in &rule.actions {
                    let ground = a.substitute(&theta);
                    if !ground.is_ground() {
                        return Err(EngineError::UnboundAction(format_term(&ground)));
                    }
                    actions.push(ground);
                }
                // same rule and same ground actions is the same firing:
                // its clock keeps running from the original first_fired
                let first_fired = match prev {
                    Some(p) if p.rule_index == idx && p.actions == actions => p.first_fired,
                    _ => now,
                };
                return Ok(FiringRecord {
                    proc: proc.name.clone(),
                    args: args.to_vec(),
                    rule_index: idx,
                    bindings: theta,
                    first_fired,
                    actions,
                });
            }
        }
        Err(EngineError::NoFirableRule(proc.name.clone()))
    }

    /// The while/until part of the continuation condition:
    /// (inferable(WC) ∨ ¬expired(WT)) ∧ (¬inferable(UC) ∨ ¬expired(UT)),
    /// with omitted WC/UC treated as false and omitted times as 0
    /// (expired(0) is always true). Queries run under the firing's frozen
    /// bindings, so only the original instantiation can continue.
    fn clauses_continue(
        &self,
        firing: &FiringRecord,
        rule: &Rule,
        now: f64,
    ) -> Result<bool, EngineError> {
        let theta = &firing.bindings;
        let inferable = |conds: &[Condition]| -> Result<bool, EngineError> {
            if conds.is_empty() {
                return Ok(false); // omitted condition defaults to false
            }
            Ok(evaluate_conjunction(conds, &self.store, theta)?.0)
        };
        let expired = |t: f64| -> bool {
            if t == 0.0 {
                true
            } else {
                now - firing.first_fired > t
            }
        };
        let while_holds = inferable(&rule.while_cond)? || !expired(rule.while_min);
        let until_allows = !inferable(&rule.until_cond)? || !expired(rule.until_min);
        Ok(while_holds && until_allows)
    }

    /// The full continuation condition:
    /// inferable(G) ∨ ((inferable(WC) ∨ ¬expired(WT)) ∧ (¬inferable(UC) ∨ ¬expired(UT))).
    /// The guard disjunct is realized operationally by the top-down rescan
    /// in get_action (which also lets higher-priority rules preempt).
    pub fn continuation_holds(
        &self,
        firing: &FiringRecord,
        rule: &Rule,
        now: f64,
    ) -> Result<bool, EngineError> {
        if !rule.guard.is_empty()
            && evaluate_conjunction(&rule.guard, &self.store, &firing.bindings)?.0
        {
            return Ok(true);
        }
        self.clauses_continue(firing, rule, now)
    }
}

/// Controls are compared as sets: the order actions are listed in a rule
/// carries no meaning.
fn same_action_set(a: &[Term], b: &[Term]) -> bool {
    let ka: BTreeSet<String> = a.iter().map(format_term).collect();
    let kb: BTreeSet<String> = b.iter().map(format_term).collect();
    ka == kb
}
