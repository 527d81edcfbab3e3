//! Finite active-domain Datalog.
//!
//! Programs are function-free, positive and range-restricted. The proof
//! system they induce is the inflationary immediate-consequence operator
//! `T(B) = B ∪ T_P(B)`; its iterates reach the deductive closure in finitely
//! many rounds because every derived atom only uses constants that already
//! occur in the base or in the rules.

mod eval;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

pub use eval::naive_closure;
pub use parse::{parse_fact, parse_program};

/// Default bound on the number of ground atoms in an active universe.
pub const DEFAULT_UNIVERSE_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatalogError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported construct at {line}:{column}: {construct}")]
    Unsupported {
        line: usize,
        column: usize,
        construct: String,
    },
    #[error("unsafe rule `{rule}`: head variable {variable} does not occur in the body")]
    UnsafeRule { rule: String, variable: String },
    #[error("predicate `{predicate}` used with arity {found}, previously declared with arity {expected}")]
    ArityConflict {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("active universe has {size} ground atoms, above the cap of {cap}")]
    UniverseTooLarge { size: u128, cap: u128 },
    #[error("fixpoint not reached within {cap} rounds")]
    IterationCap { cap: usize },
}

/// An interned-by-sharing identifier: predicate names, constants and
/// variable names.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

/// A ground atom `pred(c1,...,cn)`; zero-ary atoms print as the bare
/// predicate name.
///
/// The derived ordering (predicate, then arguments lexicographically) is the
/// canonical sorted fact order used wherever a deterministic order is needed.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundFact {
    predicate: Symbol,
    args: Arc<[Symbol]>,
}

impl GroundFact {
    pub fn new<I, S>(predicate: &str, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        GroundFact {
            predicate: Symbol::new(predicate),
            args: args.into_iter().map(|a| Symbol::new(a.as_ref())).collect(),
        }
    }

    /// A zero-ary (propositional) atom.
    pub fn prop(name: &str) -> Self {
        GroundFact {
            predicate: Symbol::new(name),
            args: Arc::from(Vec::new()),
        }
    }

    pub(crate) fn from_symbols(predicate: Symbol, args: Vec<Symbol>) -> Self {
        GroundFact {
            predicate,
            args: args.into(),
        }
    }

    pub fn predicate(&self) -> &Symbol {
        &self.predicate
    }

    pub fn args(&self) -> &[Symbol] {
        &self.args
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

impl fmt::Display for GroundFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Debug for GroundFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for GroundFact {
    type Err = DatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_fact(s)
    }
}

/// Sets of ground facts. Ordered so that every report is deterministic.
pub type FactSet = BTreeSet<GroundFact>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(Symbol),
    Var(Symbol),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) | Term::Var(c) => write!(f, "{c}"),
        }
    }
}

/// A (possibly non-ground) atom appearing in a rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AtomPattern {
    pub predicate: Symbol,
    pub terms: Vec<Term>,
}

impl AtomPattern {
    pub fn new(predicate: &str, terms: Vec<Term>) -> Self {
        AtomPattern {
            predicate: Symbol::new(predicate),
            terms,
        }
    }

    fn variables(&self) -> impl Iterator<Item = &Symbol> {
        self.terms.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        })
    }
}

impl fmt::Display for AtomPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate)?;
        if !self.terms.is_empty() {
            f.write_str("(")?;
            for (i, t) in self.terms.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{t}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub head: AtomPattern,
    pub body: Vec<AtomPattern>,
}

impl Rule {
    /// Builds a rule, rejecting empty bodies and head variables that do not
    /// occur in the body.
    pub fn new(head: AtomPattern, body: Vec<AtomPattern>) -> Result<Self, DatalogError> {
        let rule = Rule { head, body };
        if rule.body.is_empty() {
            return Err(DatalogError::UnsafeRule {
                rule: rule.to_string(),
                variable: "(empty body)".into(),
            });
        }
        let bound: BTreeSet<&Symbol> = rule.body.iter().flat_map(|a| a.variables()).collect();
        if let Some(v) = rule.head.variables().find(|v| !bound.contains(v)) {
            return Err(DatalogError::UnsafeRule {
                rule: rule.to_string(),
                variable: v.to_string(),
            });
        }
        Ok(rule)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", self.head)?;
        for (i, b) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{b}")?;
        }
        f.write_str(".")
    }
}

/// A validated Datalog program: rules in source order, unconditional
/// ground facts (axioms), and the arity of every predicate mentioned.
#[derive(Debug, Clone, Default)]
pub struct Program {
    rules: Vec<Rule>,
    axioms: Vec<GroundFact>,
    predicates: BTreeMap<Symbol, usize>,
    compiled: Vec<eval::CompiledRule>,
}

impl Program {
    pub fn new(rules: Vec<Rule>, axioms: Vec<GroundFact>) -> Result<Self, DatalogError> {
        let mut program = Program::default();
        for rule in rules {
            program.add_rule(rule)?;
        }
        for fact in axioms {
            program.declare(fact.predicate(), fact.arity())?;
            if !program.axioms.contains(&fact) {
                program.axioms.push(fact);
            }
        }
        Ok(program)
    }

    /// The program with no rules: closure is the identity.
    pub fn empty() -> Self {
        Program::default()
    }

    fn add_rule(&mut self, rule: Rule) -> Result<(), DatalogError> {
        for atom in std::iter::once(&rule.head).chain(&rule.body) {
            self.declare(&atom.predicate, atom.terms.len())?;
        }
        self.compiled.push(eval::CompiledRule::compile(&rule));
        self.rules.push(rule);
        Ok(())
    }

    /// Records `predicate/arity`, failing if it clashes with an earlier use.
    pub fn declare(&mut self, predicate: &Symbol, arity: usize) -> Result<(), DatalogError> {
        match self.predicates.get(predicate) {
            Some(&expected) if expected != arity => Err(DatalogError::ArityConflict {
                predicate: predicate.to_string(),
                expected,
                found: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.predicates.insert(predicate.clone(), arity);
                Ok(())
            }
        }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn axioms(&self) -> &[GroundFact] {
        &self.axioms
    }

    pub fn predicates(&self) -> &BTreeMap<Symbol, usize> {
        &self.predicates
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty() && self.axioms.is_empty()
    }

    /// Predicates that occur in some rule head or as an axiom. Facts over
    /// any other predicate can only be in a closure if they are in the base.
    pub fn derived_predicates(&self) -> BTreeSet<Symbol> {
        self.rules
            .iter()
            .map(|r| r.head.predicate.clone())
            .chain(self.axioms.iter().map(|a| a.predicate.clone()))
            .collect()
    }

    /// Constants appearing in rules and axioms.
    pub fn constants(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for rule in &self.rules {
            for atom in std::iter::once(&rule.head).chain(&rule.body) {
                for t in &atom.terms {
                    if let Term::Const(c) = t {
                        out.insert(c.clone());
                    }
                }
            }
        }
        for a in &self.axioms {
            out.extend(a.args().iter().cloned());
        }
        out
    }

    /// One application of the inflationary operator: `base ∪ T_P(base)`.
    pub fn immediate_consequence(&self, base: &FactSet) -> FactSet {
        eval::immediate_consequence(self, base)
    }

    /// Least fixpoint of the immediate-consequence operator above `base`.
    pub fn closure(&self, base: &FactSet) -> FactSet {
        eval::Evaluation::run(self, base, None).into_facts()
    }

    /// Like [`Program::closure`] but fails if more than `max_rounds` rounds
    /// are needed.
    pub fn closure_capped(
        &self,
        base: &FactSet,
        max_rounds: usize,
    ) -> Result<FactSet, DatalogError> {
        let eval = eval::Evaluation::run(self, base, Some(max_rounds + 1));
        if eval.rounds() > max_rounds {
            return Err(DatalogError::IterationCap { cap: max_rounds });
        }
        Ok(eval.into_facts())
    }

    /// `T^depth(base)`; `depth = 0` returns `base`.
    pub fn bounded_closure(&self, base: &FactSet, depth: usize) -> FactSet {
        eval::Evaluation::run(self, base, Some(depth)).into_facts()
    }

    /// Closure of `closed ∪ extra`, where `closed` is already a fixpoint.
    /// Only derivations that use something from `extra` are explored.
    pub fn extend_closure(&self, closed: &FactSet, extra: &[GroundFact]) -> FactSet {
        eval::Evaluation::extend(self, closed, extra).into_facts()
    }

    pub fn derives(&self, base: &FactSet, fact: &GroundFact) -> bool {
        if base.contains(fact) {
            return true;
        }
        if !self.derived_predicates().contains(fact.predicate()) {
            return false;
        }
        self.closure(base).contains(fact)
    }

    /// `min { n : fact ∈ T^n(base) }`, or `None` when the fact is not in
    /// the closure.
    pub fn derivation_depth(&self, base: &FactSet, fact: &GroundFact) -> Option<usize> {
        if base.contains(fact) {
            return Some(0);
        }
        self.depths(base).get(fact).copied()
    }

    /// Derivation depth of every fact in the closure of `base`.
    pub fn depths(&self, base: &FactSet) -> BTreeMap<GroundFact, usize> {
        eval::Evaluation::run(self, base, None).into_depths()
    }

    /// Number of rounds after which `T^n(base)` stops growing.
    pub fn stabilization_index(&self, base: &FactSet) -> usize {
        eval::Evaluation::run(self, base, None).rounds()
    }
}

/// All ground atoms over a finite active domain for a fixed set of
/// predicates. Stored implicitly: membership and size are computed, and
/// atoms are only enumerated on request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    domain: BTreeSet<Symbol>,
    predicates: BTreeMap<Symbol, usize>,
}

impl Universe {
    pub fn domain(&self) -> &BTreeSet<Symbol> {
        &self.domain
    }

    pub fn predicates(&self) -> &BTreeMap<Symbol, usize> {
        &self.predicates
    }

    pub fn len(&self) -> u128 {
        let n = self.domain.len() as u128;
        self.predicates
            .values()
            .map(|&arity| n.saturating_pow(arity as u32))
            .fold(0u128, |acc, x| acc.saturating_add(x))
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, fact: &GroundFact) -> bool {
        self.predicates.get(fact.predicate()) == Some(&fact.arity())
            && fact.args().iter().all(|a| self.domain.contains(a))
    }

    /// Enumerates every atom in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = GroundFact> + '_ {
        let domain: Vec<Symbol> = self.domain.iter().cloned().collect();
        self.predicates.iter().flat_map(move |(pred, &arity)| {
            let domain = domain.clone();
            let total = if arity == 0 {
                1
            } else {
                domain.len().checked_pow(arity as u32).unwrap_or(usize::MAX)
            };
            (0..total).map(move |mut code| {
                let mut args = vec![domain[0].clone(); arity];
                for slot in args.iter_mut().rev() {
                    *slot = domain[code % domain.len()].clone();
                    code /= domain.len();
                }
                GroundFact::from_symbols(pred.clone(), args)
            })
        })
    }
}

/// Builds the active universe for `program` and `seeds`: the domain is every
/// constant appearing in the seeds or the program, and the predicates are
/// those of the program plus any seed predicates.
pub fn active_universe<'a, I>(
    program: &Program,
    seeds: I,
    cap: u128,
) -> Result<Universe, DatalogError>
where
    I: IntoIterator<Item = &'a GroundFact>,
{
    let mut predicates = program.predicates().clone();
    let mut domain = program.constants();
    for fact in seeds {
        match predicates.get(fact.predicate()) {
            Some(&a) if a != fact.arity() => {
                return Err(DatalogError::ArityConflict {
                    predicate: fact.predicate().to_string(),
                    expected: a,
                    found: fact.arity(),
                })
            }
            _ => {
                predicates.insert(fact.predicate().clone(), fact.arity());
            }
        }
        domain.extend(fact.args().iter().cloned());
    }
    let universe = Universe { domain, predicates };
    let size = universe.len();
    if size > cap {
        return Err(DatalogError::UniverseTooLarge { size, cap });
    }
    Ok(universe)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(facts: &[&str]) -> FactSet {
        facts.iter().map(|f| f.parse().unwrap()).collect()
    }

    fn example_depth() -> Program {
        parse_program("c :- a.\nd :- c.\nf :- b.\ne :- f.").unwrap()
    }

    #[test]
    fn universe_of_one_binary_predicate() {
        let program = parse_program("reachable(X,Y) :- connected(X,Y).").unwrap();
        let seeds = set(&["connected(l1,l2)"]);
        let u = active_universe(&program, &seeds, DEFAULT_UNIVERSE_CAP).unwrap();
        // two predicates, each with 2^2 atoms
        assert_eq!(u.len(), 8);
        let connected: Vec<_> = u
            .iter()
            .filter(|f| f.predicate().as_str() == "connected")
            .collect();
        assert_eq!(connected.len(), 4);
        assert!(u.contains(&"connected(l2,l1)".parse().unwrap()));
        assert!(!u.contains(&"connected(l2,l3)".parse().unwrap()));
    }

    #[test]
    fn universe_contains_auxiliary_statements() {
        let seeds = set(&["a", "b", "d", "e"]);
        let u = active_universe(&example_depth(), &seeds, DEFAULT_UNIVERSE_CAP).unwrap();
        assert!(u.contains(&GroundFact::prop("c")));
        assert!(u.contains(&GroundFact::prop("f")));
        assert_eq!(u.len(), 6);
    }

    #[test]
    fn empty_universe_without_constants() {
        let program = parse_program("p(X) :- q(X).").unwrap();
        let u = active_universe(&program, &FactSet::new(), DEFAULT_UNIVERSE_CAP).unwrap();
        assert!(u.is_empty());
        assert_eq!(u.iter().count(), 0);
    }

    #[test]
    fn universe_cap_is_enforced() {
        let program = parse_program("p(X,Y,Z) :- q(X,Y,Z).").unwrap();
        let seeds: FactSet = (0..20)
            .map(|i| GroundFact::new("q", [format!("c{i}"), "x".into(), "y".into()]))
            .collect();
        let err = active_universe(&program, &seeds, 1000).unwrap_err();
        assert!(matches!(err, DatalogError::UniverseTooLarge { .. }));
    }

    #[test]
    fn immediate_consequence_one_step() {
        let out = example_depth().immediate_consequence(&set(&["a", "b"]));
        assert_eq!(out, set(&["a", "b", "c", "f"]));
        let empty = Program::empty();
        assert_eq!(empty.immediate_consequence(&set(&["a"])), set(&["a"]));
    }

    #[test]
    fn immediate_consequence_at_top_is_identity() {
        let p = example_depth();
        let top = set(&["a", "b", "c", "d", "e", "f"]);
        assert_eq!(p.immediate_consequence(&top), top);
    }

    #[test]
    fn closure_and_bounded_closure() {
        let p = example_depth();
        assert_eq!(p.closure(&set(&["a"])), set(&["a", "c", "d"]));
        assert_eq!(
            p.bounded_closure(&set(&["a", "b", "e"]), 1),
            set(&["a", "b", "e", "c", "f"])
        );
        assert_eq!(p.bounded_closure(&set(&["a"]), 0), set(&["a"]));
        assert_eq!(p.bounded_closure(&set(&["a"]), 6), p.closure(&set(&["a"])));
    }

    #[test]
    fn closure_with_confusable_rules() {
        let p = parse_program("r :- a1, a2.\na1 :- b, r.\na2 :- b, r.").unwrap();
        assert_eq!(
            p.closure(&set(&["a2", "b", "r"])),
            set(&["a1", "a2", "b", "r"])
        );
    }

    #[test]
    fn derives_and_depth() {
        let p = example_depth();
        assert_eq!(
            p.derivation_depth(&set(&["a", "b"]), &GroundFact::prop("d")),
            Some(2)
        );
        assert_eq!(
            p.derivation_depth(&set(&["a"]), &GroundFact::prop("a")),
            Some(0)
        );
        assert!(p.derives(&set(&["a"]), &GroundFact::prop("a")));
        let min = parse_program("c :- a, b.").unwrap();
        assert!(min.derives(&set(&["a", "b"]), &GroundFact::prop("c")));
        let none = Program::empty();
        assert!(!none.derives(&set(&["a"]), &GroundFact::prop("b")));
        assert_eq!(
            none.derivation_depth(&set(&["a"]), &GroundFact::prop("b")),
            None
        );
    }

    #[test]
    fn closure_cap() {
        let p = example_depth();
        assert!(p.closure_capped(&set(&["a"]), 2).is_ok());
        assert_eq!(
            p.closure_capped(&set(&["a"]), 1),
            Err(DatalogError::IterationCap { cap: 1 })
        );
    }

    #[test]
    fn axioms_enter_at_depth_one() {
        let p = parse_program("edge(x,y).\npath(X,Y) :- edge(X,Y).").unwrap();
        let c = p.depths(&FactSet::new());
        assert_eq!(c.get(&"edge(x,y)".parse().unwrap()), Some(&1));
        assert_eq!(c.get(&"path(x,y)".parse().unwrap()), Some(&2));
    }

    #[test]
    fn extend_closure_matches_full_closure() {
        let p = parse_program("r :- a1, a2.\na1 :- b, r.\na2 :- b, r.").unwrap();
        let closed = p.closure(&set(&["a2", "b"]));
        let extended = p.extend_closure(&closed, &[GroundFact::prop("r")]);
        assert_eq!(extended, p.closure(&set(&["a2", "b", "r"])));
    }

    #[test]
    fn transitive_closure_over_variables() {
        let p = parse_program(
            "reachable(X,Y) :- connected(X,Y).\nreachable(X,Z) :- reachable(X,Y), connected(Y,Z).",
        )
        .unwrap();
        let base = set(&["connected(a,b)", "connected(b,c)", "connected(c,d)"]);
        let c = p.closure(&base);
        assert!(c.contains(&"reachable(a,d)".parse().unwrap()));
        assert!(!c.contains(&"reachable(d,a)".parse().unwrap()));
        assert_eq!(c.len(), 3 + 6);
        assert_eq!(
            p.derivation_depth(&base, &"reachable(a,d)".parse().unwrap()),
            Some(3)
        );
        assert_eq!(naive_closure(&p, &base), c);
    }
}
