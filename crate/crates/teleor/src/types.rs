//! Type hierarchy, membership checking and whole-program validation.
//!
//! Built-in types form the chain `atomic > num > int > nat`, with `atom`
//! and `string` also under `atomic`. User definitions hang off that:
//! atom disjunctions under `atom`, int ranges under `int`, and type
//! unions under `atom` above their member types.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ast::*;
use crate::term::{Number, Term};

pub const BUILTIN_TYPES: &[&str] = &["atomic", "num", "int", "nat", "atom", "string"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TypeError {
    #[error("undefined type `{0}`")]
    UndefinedType(String),
    #[error("duplicate type definition `{0}`")]
    DuplicateDefinition(String),
    #[error("invalid type definition `{0}`")]
    InvalidTypeDefinition(String),
}

#[derive(Debug, Clone, Default)]
pub struct TypeHierarchy {
    user_defs: BTreeMap<String, TypeDefBody>,
    /// child -> parents (a type may sit under several unions)
    parents: BTreeMap<String, BTreeSet<String>>,
}

pub fn build_hierarchy(defs: &[TypeDef]) -> Result<TypeHierarchy, TypeError> {
    let mut h = TypeHierarchy::default();
    for (child, parent) in [
        ("num", "atomic"),
        ("int", "num"),
        ("nat", "int"),
        ("atom", "atomic"),
        ("string", "atomic"),
    ] {
        h.parents.entry(child.into()).or_default().insert(parent.into());
    }
    for def in defs {
        if BUILTIN_TYPES.contains(&def.name.as_str()) || h.user_defs.contains_key(&def.name) {
            return Err(TypeError::DuplicateDefinition(def.name.clone()));
        }
        let parent = match &def.body {
            TypeDefBody::AtomDisjunction(atoms) => {
                if atoms.is_empty() {
                    return Err(TypeError::InvalidTypeDefinition(def.name.clone()));
                }
                "atom"
            }
            TypeDefBody::IntRange(min, max) => {
                if min > max {
                    return Err(TypeError::InvalidTypeDefinition(def.name.clone()));
                }
                "int"
            }
            TypeDefBody::TypeUnion(members) => {
                if members.len() < 2 {
                    return Err(TypeError::InvalidTypeDefinition(def.name.clone()));
                }
                for m in members {
                    if !BUILTIN_TYPES.contains(&m.as_str()) && !h.user_defs.contains_key(m) {
                        return Err(TypeError::UndefinedType(m.clone()));
                    }
                    h.parents.entry(m.clone()).or_default().insert(def.name.clone());
                }
                "atom"
            }
        };
        h.parents.entry(def.name.clone()).or_default().insert(parent.into());
        h.user_defs.insert(def.name.clone(), def.body.clone());
    }
    Ok(h)
}

impl TypeHierarchy {
    pub fn is_defined(&self, name: &str) -> bool {
        BUILTIN_TYPES.contains(&name) || self.user_defs.contains_key(name)
    }

    /// All types the given type is a subtype of, including itself.
    pub fn ancestors(&self, name: &str) -> Result<BTreeSet<String>, TypeError> {
        if !self.is_defined(name) {
            return Err(TypeError::UndefinedType(name.to_string()));
        }
        let mut out = BTreeSet::new();
        let mut stack = vec![name.to_string()];
        while let Some(t) = stack.pop() {
            if out.insert(t.clone()) {
                if let Some(ps) = self.parents.get(&t) {
                    stack.extend(ps.iter().cloned());
                }
            }
        }
        Ok(out)
    }
}

/// Is `thing` a member of type `expected`? Variables are accepted for any
/// type: the static checker treats the binding site as the point where the
/// value's type is fixed.
pub fn check_type(thing: &Term, expected: &str, h: &TypeHierarchy) -> Result<bool, TypeError> {
    if matches!(thing, Term::Var(_)) {
        return Ok(true);
    }
    match expected {
        "atomic" => Ok(matches!(thing, Term::Atom(_) | Term::Number(_) | Term::Str(_))),
        "num" => Ok(matches!(thing, Term::Number(_))),
        "int" => Ok(matches!(thing, Term::Number(Number::Int(_)))),
        "nat" => Ok(matches!(thing, Term::Number(Number::Int(n)) if *n >= 0)),
        "atom" => Ok(matches!(thing, Term::Atom(_))),
        "string" => Ok(matches!(thing, Term::Str(_))),
        user => match h.user_defs.get(user) {
            None => Err(TypeError::UndefinedType(user.to_string())),
            Some(TypeDefBody::AtomDisjunction(atoms)) => {
                Ok(matches!(thing, Term::Atom(a) if atoms.contains(a)))
            }
            Some(TypeDefBody::IntRange(min, max)) => {
                Ok(matches!(thing, Term::Number(Number::Int(n)) if min <= n && n <= max))
            }
            Some(TypeDefBody::TypeUnion(members)) => {
                for m in members {
                    if check_type(thing, m, h)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        },
    }
}

// ---------------------------------------------------------------------------
// signature table

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sort {
    Percept,
    Belief,
    Durative,
    Discrete,
    Procedure,
}

impl Sort {
    pub fn describe(self) -> &'static str {
        match self {
            Sort::Percept => "percept",
            Sort::Belief => "belief",
            Sort::Durative => "durative action",
            Sort::Discrete => "discrete action",
            Sort::Procedure => "procedure",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SignatureTable {
    entries: BTreeMap<String, (Sort, Vec<String>)>,
}

impl SignatureTable {
    pub fn get(&self, name: &str) -> Option<&(Sort, Vec<String>)> {
        self.entries.get(name)
    }
}

pub fn build_signature_table(program: &Program) -> SignatureTable {
    let mut table = SignatureTable::default();
    for decl in &program.declarations {
        let sort = match decl.kind {
            DeclKind::Percept => Sort::Percept,
            DeclKind::Belief => Sort::Belief,
            DeclKind::Durative => Sort::Durative,
            DeclKind::Discrete => Sort::Discrete,
        };
        table.entries.insert(decl.name.clone(), (sort, decl.arg_types.clone()));
    }
    for (name, types) in &program.proc_sigs {
        table.entries.insert(name.clone(), (Sort::Procedure, types.clone()));
    }
    table
}

// ---------------------------------------------------------------------------
// whole-program checking

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub loc: Loc,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: error: {}", self.loc.line, self.loc.col, self.message)
    }
}

struct Checker<'p> {
    program: &'p Program,
    hierarchy: TypeHierarchy,
    sigs: SignatureTable,
    diags: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn diag(&mut self, loc: Loc, message: String) {
        self.diags.push(Diagnostic { loc, message });
    }

    fn check_args(&mut self, loc: Loc, name: &str, args: &[Term], types: &[String]) {
        if args.len() != types.len() {
            self.diag(
                loc,
                format!(
                    "`{name}` takes {} argument(s), found {}",
                    types.len(),
                    args.len()
                ),
            );
            return;
        }
        for (arg, ty) in args.iter().zip(types) {
            match check_type(arg, ty, &self.hierarchy) {
                Ok(true) => {}
                Ok(false) => self.diag(
                    loc,
                    format!(
                        "type error: `{}` is not a {ty} (argument of `{name}`)",
                        crate::term::format_term(arg)
                    ),
                ),
                Err(e) => self.diag(loc, format!("in `{name}`: {e}")),
            }
        }
    }

    /// Check a query against the store vocabulary and, if positive,
    /// add its variables to the bound set.
    fn check_query(&mut self, loc: Loc, q: &Term, bound: &mut BTreeSet<String>, binds: bool) {
        let Some((name, _arity)) = q.functor() else {
            self.diag(loc, format!("`{}` cannot be queried", crate::term::format_term(q)));
            return;
        };
        let name = name.to_string();
        let args: Vec<Term> = match q {
            Term::Compound(_, args) => args.clone(),
            _ => Vec::new(),
        };
        match self.sigs.get(&name) {
            Some((Sort::Percept | Sort::Belief, types)) => {
                let types = types.clone();
                self.check_args(loc, &name, &args, &types);
            }
            Some((sort, _)) => self.diag(
                loc,
                format!("`{name}` is a {}, not a percept or belief", sort.describe()),
            ),
            None => self.diag(loc, format!("`{name}` is not a declared percept or belief")),
        }
        if binds {
            collect_vars(&args, bound);
        }
    }

    fn check_expr(&mut self, loc: Loc, e: &Expr, bound: &BTreeSet<String>) {
        match e {
            Expr::NumberLit(_) => {}
            Expr::VarRef(v) => {
                if !bound.contains(v) {
                    self.diag(loc, format!("unbound variable `{v}` in comparison"));
                }
            }
            Expr::BinOp(_, l, r) => {
                self.check_expr(loc, l, bound);
                self.check_expr(loc, r, bound);
            }
        }
    }

    fn check_conditions(&mut self, loc: Loc, conds: &[Condition], bound: &mut BTreeSet<String>) {
        for cond in conds {
            match cond {
                Condition::TrueLiteral => {}
                Condition::Query(q) => self.check_query(loc, q, bound, true),
                Condition::NegatedQuery(q) => self.check_query(loc, q, bound, false),
                Condition::Comparison(l, _, r) => {
                    self.check_expr(loc, l, bound);
                    self.check_expr(loc, r, bound);
                }
            }
        }
    }

    fn check_action(&mut self, loc: Loc, action: &Term, bound: &BTreeSet<String>) {
        let Some((name, _)) = action.functor() else {
            self.diag(loc, format!("`{}` is not an action", crate::term::format_term(action)));
            return;
        };
        let name = name.to_string();
        let args: Vec<Term> = match action {
            Term::Compound(_, args) => args.clone(),
            _ => Vec::new(),
        };
        if name == "remember" || name == "forget" {
            if args.len() != 1 {
                self.diag(loc, format!("`{name}` takes exactly one belief argument"));
                return;
            }
            let inner = &args[0];
            let inner_args: Vec<Term> = match inner {
                Term::Compound(_, a) => a.clone(),
                _ => Vec::new(),
            };
            match inner.functor().map(|(n, _)| n.to_string()) {
                Some(inner_name) => match self.sigs.get(&inner_name) {
                    Some((Sort::Belief, types)) => {
                        let types = types.clone();
                        self.check_args(loc, &inner_name, &inner_args, &types);
                        self.check_rhs_vars(loc, &inner_args, bound);
                    }
                    _ => self.diag(
                        loc,
                        format!("`{name}` argument `{inner_name}` is not a declared belief"),
                    ),
                },
                None => self.diag(loc, format!("`{name}` argument must be a belief predicate")),
            }
            return;
        }
        match self.sigs.get(&name) {
            Some((Sort::Durative | Sort::Discrete | Sort::Procedure, types)) => {
                let types = types.clone();
                self.check_args(loc, &name, &args, &types);
                self.check_rhs_vars(loc, &args, bound);
            }
            Some((sort, _)) => self.diag(
                loc,
                format!("`{name}` is a {}, which cannot appear on a rule's right-hand side", sort.describe()),
            ),
            None => self.diag(loc, format!("`{name}` is not a declared action or procedure")),
        }
    }

    fn check_rhs_vars(&mut self, loc: Loc, args: &[Term], bound: &BTreeSet<String>) {
        let mut vars = BTreeSet::new();
        collect_vars(args, &mut vars);
        for v in vars {
            if !bound.contains(&v) {
                self.diag(loc, format!("unbound RHS variable `{v}`"));
            }
        }
    }

    fn check_rule(&mut self, proc: &Procedure, rule: &Rule) {
        let mut bound: BTreeSet<String> = proc.params.iter().cloned().collect();
        self.check_conditions(rule.loc, &rule.guard, &mut bound);
        // while/until conditions are evaluated later against the same
        // store; they see the guard's bindings and may add their own.
        let mut wc_bound = bound.clone();
        self.check_conditions(rule.loc, &rule.while_cond, &mut wc_bound);
        let mut uc_bound = bound.clone();
        self.check_conditions(rule.loc, &rule.until_cond, &mut uc_bound);

        if rule.actions.len() > 1 {
            // a procedure call must stand alone
            for a in &rule.actions {
                if let Some((name, _)) = a.functor() {
                    if self.program.procedures.contains_key(name) {
                        self.diag(
                            rule.loc,
                            format!("procedure call `{name}` cannot be combined with other actions"),
                        );
                    }
                }
            }
        }
        for action in &rule.actions {
            self.check_action(rule.loc, action, &bound);
        }
    }
}

fn collect_vars(terms: &[Term], out: &mut BTreeSet<String>) {
    for t in terms {
        match t {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Compound(_, args) | Term::List(args) => collect_vars(args, out),
            _ => {}
        }
    }
}

/// Validate a parsed program. An empty result means well-typed.
pub fn check_program(program: &Program) -> Vec<Diagnostic> {
    let hierarchy = match build_hierarchy(&program.type_defs) {
        Ok(h) => h,
        Err(e) => {
            let loc = program.type_defs.first().map(|d| d.loc).unwrap_or_default();
            return vec![Diagnostic { loc, message: e.to_string() }];
        }
    };
    let sigs = build_signature_table(program);
    let mut checker = Checker { program, hierarchy, sigs, diags: Vec::new() };

    for decl in &program.declarations {
        for ty in &decl.arg_types {
            if !checker.hierarchy.is_defined(ty) {
                checker.diag(decl.loc, format!("undefined type `{ty}` in declaration of `{decl_name}`", decl_name = decl.name));
            }
        }
    }
    for (name, types) in &program.proc_sigs {
        let loc = program.procedures.get(name).map(|p| p.loc).unwrap_or_default();
        for ty in types {
            if !checker.hierarchy.is_defined(ty) {
                checker.diag(loc, format!("undefined type `{ty}` in signature of `{name}`"));
            }
        }
    }
    for proc in program.procedures.values() {
        for rule in &proc.rules {
            checker.check_rule(proc, rule);
        }
    }
    checker.diags
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use crate::term::parse_term;
    use proptest::prelude::*;

    fn defs(src: &str) -> Vec<TypeDef> {
        // piggyback on the program parser for typedef syntax
        parse_program(&format!("{src}\n")).unwrap().type_defs
    }

    #[test]
    fn builtins_only_hierarchy() {
        let h = build_hierarchy(&[]).unwrap();
        assert!(check_type(&Term::int(5), "nat", &h).unwrap());
        assert!(check_type(&Term::int(-5), "int", &h).unwrap());
        assert!(!check_type(&Term::int(-5), "nat", &h).unwrap());
        assert!(check_type(&Term::float(1.5), "num", &h).unwrap());
        assert!(!check_type(&Term::float(1.5), "int", &h).unwrap());
        assert!(check_type(&Term::atom("x"), "atom", &h).unwrap());
        assert!(check_type(&Term::Str("s".into()), "string", &h).unwrap());
        assert!(check_type(&Term::Str("s".into()), "atomic", &h).unwrap());
        assert!(!check_type(&Term::List(vec![]), "atomic", &h).unwrap());
    }

    #[test]
    fn atom_disjunction_membership() {
        let h = build_hierarchy(&defs("thing ::= box | shoe | cat")).unwrap();
        assert!(check_type(&Term::atom("cat"), "thing", &h).unwrap());
        assert!(!check_type(&Term::atom("dog"), "thing", &h).unwrap());
    }

    #[test]
    fn int_range_membership() {
        let h = build_hierarchy(&defs("age ::= (0 .. 120)")).unwrap();
        // boundary sweep around both ends of the range
        for (v, expect) in [(-1, false), (0, true), (1, true), (119, true), (120, true), (121, false)] {
            assert_eq!(check_type(&Term::int(v), "age", &h).unwrap(), expect, "age({v})");
        }
        assert!(h.ancestors("age").unwrap().contains("int"));
    }

    #[test]
    fn union_membership_and_parents() {
        let src = "legume ::= bean | pea\ntuber ::= potato | yam\nplant ::= legume || tuber";
        let h = build_hierarchy(&defs(src)).unwrap();
        assert!(check_type(&Term::atom("pea"), "plant", &h).unwrap());
        assert!(check_type(&Term::atom("yam"), "plant", &h).unwrap());
        assert!(!check_type(&Term::atom("oak"), "plant", &h).unwrap());
        let anc = h.ancestors("legume").unwrap();
        assert!(anc.contains("plant") && anc.contains("atom") && anc.contains("atomic"));
    }

    #[test]
    fn union_of_unknown_member_fails() {
        let td = TypeDef {
            name: "p".into(),
            body: TypeDefBody::TypeUnion(vec!["nope".into(), "int".into()]),
            loc: Loc::default(),
        };
        assert_eq!(
            build_hierarchy(&[td]).unwrap_err(),
            TypeError::UndefinedType("nope".into())
        );
    }

    #[test]
    fn unknown_type_is_an_error_not_false() {
        let h = build_hierarchy(&[]).unwrap();
        assert!(check_type(&Term::int(1), "ghost", &h).is_err());
    }

    const FACE_THING: &str = "
thing ::= box | shoe | cat
direction ::= left | right | centre
percept see : (thing, direction, num)
durative turn : (direction)
face_thing : (thing) ~>
face_thing(Thing){
see(Thing, centre, Dist) ~> ()
see(Thing, Dir, Dist) ~> turn(Dir)
}
";

    #[test]
    fn well_typed_program_has_no_diagnostics() {
        let prog = parse_program(FACE_THING).unwrap();
        assert_eq!(check_program(&prog), vec![]);
    }

    #[test]
    fn undeclared_atom_in_guard_is_one_diagnostic() {
        let src = FACE_THING.replace("see(Thing, centre, Dist)", "see(dog, centre, Dist)");
        let prog = parse_program(&src).unwrap();
        let diags = check_program(&prog);
        assert_eq!(diags.len(), 1, "{diags:?}");
        assert!(diags[0].message.contains("dog"), "{}", diags[0].message);
    }

    #[test]
    fn unbound_rhs_variable_is_reported() {
        let src = "
direction ::= left | right
durative turn : (direction)
p : () ~>
p(){ true ~> turn(Dir) }
";
        let prog = parse_program(src).unwrap();
        let diags = check_program(&prog);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("unbound RHS variable"), "{}", diags[0].message);
    }

    #[test]
    fn negated_query_binds_nothing() {
        let src = "
percept seen : (num)
durative chase : (num)
p : () ~>
p(){ not seen(X) ~> chase(X) }
";
        let diags = check_program(&parse_program(src).unwrap());
        assert!(diags.iter().any(|d| d.message.contains("unbound RHS variable `X`")));
    }

    #[test]
    fn comparison_vars_must_be_bound() {
        let src = "
percept temperature : (num)
discrete hot : ()
p : () ~>
p(){ Bogus < 3 ~> hot }
";
        let diags = check_program(&parse_program(src).unwrap());
        assert!(diags.iter().any(|d| d.message.contains("unbound variable `Bogus`")));
    }

    #[test]
    fn actions_in_guard_are_rejected() {
        let src = "
durative go : ()
discrete ping : ()
p : () ~>
p(){ go ~> ping }
";
        let diags = check_program(&parse_program(src).unwrap());
        assert!(diags.iter().any(|d| d.message.contains("not a percept or belief")));
    }

    #[test]
    fn percepts_cannot_be_actions() {
        let src = "
percept hot : ()
p : () ~>
p(){ true ~> hot }
";
        let diags = check_program(&parse_program(src).unwrap());
        assert!(diags.iter().any(|d| d.message.contains("cannot appear on a rule's right-hand side")));
    }

    #[test]
    fn remember_requires_declared_belief() {
        let src = "
belief visited : (num)
percept at : (num)
discrete noop : ()
p : () ~>
p(){ at(X) ~> remember(visited(X)), noop }
";
        assert_eq!(check_program(&parse_program(src).unwrap()), vec![]);
        let bad = src.replace("remember(visited(X))", "remember(seen(X))");
        let diags = check_program(&parse_program(&bad).unwrap());
        assert!(diags.iter().any(|d| d.message.contains("not a declared belief")));
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let src = "
percept see : (num, num)
discrete ok : ()
p : () ~>
p(){ see(X) ~> ok }
";
        let diags = check_program(&parse_program(src).unwrap());
        assert!(diags.iter().any(|d| d.message.contains("takes 2 argument(s), found 1")));
    }

    #[test]
    fn num_parameters_accept_integer_literals() {
        let src = "
percept temperature : (num)
discrete on : (), off : ()
regulate : (num) ~>
regulate(T){
temperature(C) & C < T ~> on
true ~> off
}
main : () ~>
main(){ true ~> regulate(18) }
";
        assert_eq!(check_program(&parse_program(src).unwrap()), vec![]);
    }

    // -- property tests ------------------------------------------------

    fn small_universe() -> Vec<Term> {
        let mut v: Vec<Term> = ["box", "shoe", "cat", "dog", "bean", "pea"]
            .iter()
            .map(|a| Term::atom(a))
            .collect();
        v.extend((-3..125).map(Term::int));
        v.push(Term::float(1.5));
        v.push(Term::Str("s".into()));
        v
    }

    proptest! {
        #[test]
        fn membership_is_monotone_up_the_hierarchy(idx in 0usize..200) {
            let h = build_hierarchy(&defs(
                "thing ::= box | shoe | cat\nage ::= (0 .. 120)\nlegume ::= bean | pea\nstuff ::= thing || legume",
            )).unwrap();
            let universe = small_universe();
            let value = &universe[idx % universe.len()];
            for ty in ["thing", "age", "legume", "stuff", "nat", "int", "num", "atom", "string"] {
                if check_type(value, ty, &h).unwrap() {
                    for up in h.ancestors(ty).unwrap() {
                        prop_assert!(
                            check_type(value, &up, &h).unwrap(),
                            "{value:?} in {ty} but not in ancestor {up}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn check_type_matches_enumeration_oracle() {
        let h = build_hierarchy(&defs("thing ::= box | shoe | cat\nage ::= (0 .. 120)")).unwrap();
        for value in small_universe() {
            let in_thing = matches!(&value, Term::Atom(a) if ["box", "shoe", "cat"].contains(&a.as_str()));
            let in_age = matches!(&value, Term::Number(Number::Int(n)) if (0..=120).contains(n));
            assert_eq!(check_type(&value, "thing", &h).unwrap(), in_thing, "{value:?}");
            assert_eq!(check_type(&value, "age", &h).unwrap(), in_age, "{value:?}");
        }
    }

    #[test]
    fn var_is_accepted_for_any_type() {
        let h = build_hierarchy(&defs("age ::= (0 .. 120)")).unwrap();
        let v = parse_term("X").unwrap();
        for ty in ["age", "nat", "string", "atom"] {
            assert!(check_type(&v, ty, &h).unwrap());
        }
    }
}
