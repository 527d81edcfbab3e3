//! Bottom-up evaluation.
//!
//! [`Evaluation`] is semi-naive: round `n + 1` only fires rule instances that
//! use at least one fact first derived in round `n`. Because every instance
//! whose body lies in `T^{n-1}(B)` already fired in round `n`, the facts
//! added in round `n + 1` are exactly `T^{n+1}(B) \ T^n(B)`, so round numbers
//! are derivation depths. [`naive_closure`] re-fires everything each round
//! and is kept as an independent cross-check.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::{FactSet, GroundFact, Program, Rule, Symbol, Term};

#[derive(Debug, Clone)]
enum Slot {
    Const(Symbol),
    Var(usize),
}

#[derive(Debug, Clone)]
struct CompiledAtom {
    predicate: Symbol,
    slots: Vec<Slot>,
}

#[derive(Debug, Clone)]
pub(super) struct CompiledRule {
    head: CompiledAtom,
    body: Vec<CompiledAtom>,
    vars: usize,
}

impl CompiledRule {
    pub(super) fn compile(rule: &Rule) -> Self {
        let mut names: Vec<Symbol> = Vec::new();
        let mut compile_atom = |atom: &super::AtomPattern| CompiledAtom {
            predicate: atom.predicate.clone(),
            slots: atom
                .terms
                .iter()
                .map(|t| match t {
                    Term::Const(c) => Slot::Const(c.clone()),
                    Term::Var(v) => {
                        let idx = names.iter().position(|n| n == v).unwrap_or_else(|| {
                            names.push(v.clone());
                            names.len() - 1
                        });
                        Slot::Var(idx)
                    }
                })
                .collect(),
        };
        let body: Vec<CompiledAtom> = rule.body.iter().map(&mut compile_atom).collect();
        let head = compile_atom(&rule.head);
        CompiledRule {
            head,
            body,
            vars: names.len(),
        }
    }
}

#[derive(Default)]
struct Store {
    all: HashSet<GroundFact>,
    by_pred: HashMap<Symbol, Vec<GroundFact>>,
    by_arg: HashMap<(Symbol, usize, Symbol), Vec<GroundFact>>,
}

impl Store {
    fn insert(&mut self, fact: GroundFact) -> bool {
        if !self.all.insert(fact.clone()) {
            return false;
        }
        for (i, a) in fact.args().iter().enumerate() {
            self.by_arg
                .entry((fact.predicate().clone(), i, a.clone()))
                .or_default()
                .push(fact.clone());
        }
        self.by_pred
            .entry(fact.predicate().clone())
            .or_default()
            .push(fact);
        true
    }

    fn candidates(&self, atom: &CompiledAtom, bindings: &[Option<Symbol>]) -> &[GroundFact] {
        for (i, slot) in atom.slots.iter().enumerate() {
            let value = match slot {
                Slot::Const(c) => Some(c),
                Slot::Var(v) => bindings[*v].as_ref(),
            };
            if let Some(value) = value {
                return self
                    .by_arg
                    .get(&(atom.predicate.clone(), i, value.clone()))
                    .map_or(&[], Vec::as_slice);
            }
        }
        self.by_pred.get(&atom.predicate).map_or(&[], Vec::as_slice)
    }
}

/// Extends `bindings` so that `atom` matches `fact`. Newly bound variables
/// are pushed on `trail`; on failure nothing is left bound.
fn unify(
    atom: &CompiledAtom,
    fact: &GroundFact,
    bindings: &mut [Option<Symbol>],
    trail: &mut Vec<usize>,
) -> bool {
    if atom.predicate != *fact.predicate() || atom.slots.len() != fact.arity() {
        return false;
    }
    let mark = trail.len();
    for (slot, value) in atom.slots.iter().zip(fact.args()) {
        let ok = match slot {
            Slot::Const(c) => c == value,
            Slot::Var(v) => match &bindings[*v] {
                Some(bound) => bound == value,
                None => {
                    bindings[*v] = Some(value.clone());
                    trail.push(*v);
                    true
                }
            },
        };
        if !ok {
            undo(bindings, trail, mark);
            return false;
        }
    }
    true
}

fn undo(bindings: &mut [Option<Symbol>], trail: &mut Vec<usize>, mark: usize) {
    for v in trail.drain(mark..) {
        bindings[v] = None;
    }
}

fn instantiate(atom: &CompiledAtom, bindings: &[Option<Symbol>]) -> GroundFact {
    let args = atom
        .slots
        .iter()
        .map(|s| match s {
            Slot::Const(c) => c.clone(),
            Slot::Var(v) => bindings[*v].clone().expect("range-restricted rule"),
        })
        .collect();
    GroundFact::from_symbols(atom.predicate.clone(), args)
}

struct Join<'a> {
    rule: &'a CompiledRule,
    order: Vec<usize>,
    store: &'a Store,
    bindings: Vec<Option<Symbol>>,
    trail: Vec<usize>,
}

impl<'a> Join<'a> {
    fn new(rule: &'a CompiledRule, store: &'a Store, skip: Option<usize>) -> Self {
        Join {
            rule,
            order: (0..rule.body.len()).filter(|&i| Some(i) != skip).collect(),
            store,
            bindings: vec![None; rule.vars],
            trail: Vec::new(),
        }
    }

    fn run(&mut self, depth: usize, emit: &mut dyn FnMut(GroundFact)) {
        if depth == self.order.len() {
            emit(instantiate(&self.rule.head, &self.bindings));
            return;
        }
        let rule = self.rule;
        let atom = &rule.body[self.order[depth]];
        let store = self.store;
        for fact in store.candidates(atom, &self.bindings) {
            let mark = self.trail.len();
            if unify(atom, fact, &mut self.bindings, &mut self.trail) {
                self.run(depth + 1, emit);
                undo(&mut self.bindings, &mut self.trail, mark);
            }
        }
    }
}

/// Fires every rule instance whose body lies in `store`.
fn fire_all(program: &Program, store: &Store, emit: &mut dyn FnMut(GroundFact)) {
    for fact in program.axioms() {
        emit(fact.clone());
    }
    for rule in &program.compiled {
        Join::new(rule, store, None).run(0, emit);
    }
}

/// Fires the rule instances that use at least one fact of `delta`.
fn fire_delta(
    program: &Program,
    store: &Store,
    delta: &[GroundFact],
    emit: &mut dyn FnMut(GroundFact),
) {
    let mut delta_by_pred: HashMap<&Symbol, Vec<&GroundFact>> = HashMap::new();
    for f in delta {
        delta_by_pred.entry(f.predicate()).or_default().push(f);
    }
    for rule in &program.compiled {
        for (i, atom) in rule.body.iter().enumerate() {
            let Some(facts) = delta_by_pred.get(&atom.predicate) else {
                continue;
            };
            let mut join = Join::new(rule, store, Some(i));
            for fact in facts {
                let mark = join.trail.len();
                if unify(atom, fact, &mut join.bindings, &mut join.trail) {
                    join.run(0, emit);
                    undo(&mut join.bindings, &mut join.trail, mark);
                }
            }
        }
    }
}

pub(super) struct Evaluation {
    store: Store,
    depths: HashMap<GroundFact, usize>,
    rounds: usize,
}

impl Evaluation {
    /// Runs at most `max_rounds` rounds (all of them when `None`).
    pub(super) fn run(program: &Program, base: &FactSet, max_rounds: Option<usize>) -> Self {
        let mut eval = Evaluation {
            store: Store::default(),
            depths: HashMap::new(),
            rounds: 0,
        };
        for f in base {
            eval.store.insert(f.clone());
            eval.depths.insert(f.clone(), 0);
        }
        if program.is_empty() || max_rounds == Some(0) {
            return eval;
        }
        let mut new = Vec::new();
        {
            let store = &eval.store;
            let mut seen = HashSet::new();
            fire_all(program, store, &mut |f| {
                if !store.all.contains(&f) && seen.insert(f.clone()) {
                    new.push(f);
                }
            });
        }
        eval.iterate(program, new, 1, max_rounds);
        eval
    }

    /// Continues from a fixpoint `closed` after adding `extra`.
    pub(super) fn extend(program: &Program, closed: &FactSet, extra: &[GroundFact]) -> Self {
        let mut eval = Evaluation {
            store: Store::default(),
            depths: HashMap::new(),
            rounds: 0,
        };
        for f in closed {
            eval.store.insert(f.clone());
        }
        let delta: Vec<GroundFact> = extra
            .iter()
            .filter(|f| eval.store.insert((*f).clone()))
            .cloned()
            .collect();
        if !delta.is_empty() && !program.is_empty() {
            let mut new = Vec::new();
            {
                let store = &eval.store;
                let mut seen = HashSet::new();
                fire_delta(program, store, &delta, &mut |f| {
                    if !store.all.contains(&f) && seen.insert(f.clone()) {
                        new.push(f);
                    }
                });
            }
            eval.iterate(program, new, 1, None);
        }
        eval
    }

    fn iterate(
        &mut self,
        program: &Program,
        mut new: Vec<GroundFact>,
        mut round: usize,
        max_rounds: Option<usize>,
    ) {
        while !new.is_empty() {
            for f in &new {
                self.store.insert(f.clone());
                self.depths.insert(f.clone(), round);
            }
            self.rounds = round;
            if max_rounds.is_some_and(|m| round >= m) {
                break;
            }
            round += 1;
            let delta = std::mem::take(&mut new);
            let store = &self.store;
            let mut seen = HashSet::new();
            fire_delta(program, store, &delta, &mut |f| {
                if !store.all.contains(&f) && seen.insert(f.clone()) {
                    new.push(f);
                }
            });
        }
    }

    pub(super) fn rounds(&self) -> usize {
        self.rounds
    }

    pub(super) fn into_facts(self) -> FactSet {
        self.store.all.into_iter().collect()
    }

    pub(super) fn into_depths(self) -> BTreeMap<GroundFact, usize> {
        self.depths.into_iter().collect()
    }
}

pub(super) fn immediate_consequence(program: &Program, base: &FactSet) -> FactSet {
    let mut store = Store::default();
    for f in base {
        store.insert(f.clone());
    }
    let mut out = base.clone();
    fire_all(program, &store, &mut |f| {
        out.insert(f);
    });
    out
}

/// Closure by plain iteration of the immediate-consequence operator.
pub fn naive_closure(program: &Program, base: &FactSet) -> FactSet {
    let mut current = base.clone();
    loop {
        let next = immediate_consequence(program, &current);
        if next.len() == current.len() {
            return current;
        }
        current = next;
    }
}
