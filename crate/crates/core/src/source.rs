//! Deductive sources, irredundant cores and the δ-core filtration.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::datalog::{
    active_universe, parse_fact, parse_program, DatalogError, FactSet, GroundFact, Program, Symbol,
    Universe, DEFAULT_UNIVERSE_CAP,
};
use crate::info::entropy;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SourceError {
    #[error(transparent)]
    Datalog(#[from] DatalogError),
    #[error("stored fact `{0}` occurs twice")]
    DuplicateFact(String),
    #[error("{facts} stored facts but {probs} probabilities")]
    LengthMismatch { facts: usize, probs: usize },
    #[error("probability of `{fact}` is {value}, not in [0,1]")]
    BadProbability { fact: String, value: f64 },
    #[error("probabilities sum to {0}, not 1")]
    ProbabilitySum(f64),
    #[error("reconstruction alphabet is empty")]
    EmptyReconstruction,
    #[error("no stored facts")]
    EmptySource,
    #[error("instance line {line}: {message}")]
    Instance { line: usize, message: String },
}

/// How the reconstruction alphabet was specified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReconSpec {
    /// `Cn(S_O)`.
    Closure,
    /// `S_O` itself.
    Stored,
    Explicit(Vec<GroundFact>),
}

/// A finite knowledge base with a distribution over its stored facts, a
/// Datalog program and a reconstruction alphabet.
#[derive(Debug, Clone)]
pub struct DeductiveSource {
    program: Program,
    stored: Vec<GroundFact>,
    probs: Vec<f64>,
    recon: Vec<GroundFact>,
    recon_spec: ReconSpec,
    universe: Universe,
    closure: FactSet,
}

impl DeductiveSource {
    pub fn new(
        program: Program,
        stored: Vec<GroundFact>,
        probs: Vec<f64>,
        recon: ReconSpec,
    ) -> Result<Self, SourceError> {
        Self::with_cap(program, stored, probs, recon, DEFAULT_UNIVERSE_CAP)
    }

    /// Uniform distribution over `stored`.
    pub fn uniform(
        program: Program,
        stored: Vec<GroundFact>,
        recon: ReconSpec,
    ) -> Result<Self, SourceError> {
        let n = stored.len();
        let probs = vec![1.0 / n.max(1) as f64; n];
        Self::new(program, stored, probs, recon)
    }

    pub fn with_cap(
        program: Program,
        stored: Vec<GroundFact>,
        probs: Vec<f64>,
        recon: ReconSpec,
        cap: u128,
    ) -> Result<Self, SourceError> {
        if stored.is_empty() {
            return Err(SourceError::EmptySource);
        }
        if stored.len() != probs.len() {
            return Err(SourceError::LengthMismatch {
                facts: stored.len(),
                probs: probs.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for f in &stored {
            if !seen.insert(f) {
                return Err(SourceError::DuplicateFact(f.to_string()));
            }
        }
        for (f, &p) in stored.iter().zip(&probs) {
            if !(0.0..=1.0).contains(&p) {
                return Err(SourceError::BadProbability {
                    fact: f.to_string(),
                    value: p,
                });
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(SourceError::ProbabilitySum(total));
        }
        let base: FactSet = stored.iter().cloned().collect();
        let explicit: Vec<GroundFact> = match &recon {
            ReconSpec::Explicit(v) => v.clone(),
            _ => Vec::new(),
        };
        let universe = active_universe(&program, stored.iter().chain(&explicit), cap)?;
        let closure = program.closure(&base);
        let recon_set: Vec<GroundFact> = match &recon {
            ReconSpec::Closure => closure.iter().cloned().collect(),
            ReconSpec::Stored => base.iter().cloned().collect(),
            ReconSpec::Explicit(v) => v
                .iter()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        };
        if recon_set.is_empty() {
            return Err(SourceError::EmptyReconstruction);
        }
        Ok(DeductiveSource {
            program,
            stored,
            probs,
            recon: recon_set,
            recon_spec: recon,
            universe,
            closure,
        })
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    /// Stored facts in canonical scan order.
    pub fn stored(&self) -> &[GroundFact] {
        &self.stored
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// The reconstruction alphabet in canonical fact order.
    pub fn recon(&self) -> &[GroundFact] {
        &self.recon
    }

    pub fn recon_spec(&self) -> &ReconSpec {
        &self.recon_spec
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    /// `Cn(S_O)`.
    pub fn closure(&self) -> &FactSet {
        &self.closure
    }

    pub fn stored_set(&self) -> FactSet {
        self.stored.iter().cloned().collect()
    }

    pub fn index_of(&self, fact: &GroundFact) -> Option<usize> {
        self.stored.iter().position(|f| f == fact)
    }

    pub fn prob_of(&self, fact: &GroundFact) -> f64 {
        self.index_of(fact).map_or(0.0, |i| self.probs[i])
    }

    /// The same source with the stored list reordered: position `i` of the
    /// result holds `stored[order[i]]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        assert_eq!(
            order.len(),
            self.stored.len(),
            "order must be a permutation"
        );
        let mut out = self.clone();
        out.stored = order.iter().map(|&i| self.stored[i].clone()).collect();
        out.probs = order.iter().map(|&i| self.probs[i]).collect();
        out
    }

    /// Same facts and program with a different reconstruction alphabet.
    pub fn with_recon(&self, recon: ReconSpec) -> Result<Self, SourceError> {
        Self::new(
            self.program.clone(),
            self.stored.clone(),
            self.probs.clone(),
            recon,
        )
    }

    /// Stored facts whose predicate no rule or axiom can produce. They are
    /// essential and belong to every core.
    fn underivable(&self) -> Vec<bool> {
        let derived = self.program.derived_predicates();
        self.stored
            .iter()
            .map(|f| !derived.contains(f.predicate()))
            .collect()
    }

    /// Parses the instance file format.
    pub fn from_instance_str(text: &str) -> Result<Self, SourceError> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Rules,
            Stored,
            Recon,
        }
        let mut section = Section::None;
        let mut rules = String::new();
        let mut rules_start = 0;
        let mut stored = Vec::new();
        let mut probs = Vec::new();
        let mut recon_lines: Vec<(usize, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('%').next().unwrap_or("").trim();
            match line {
                "[rules]" => {
                    section = Section::Rules;
                    rules_start = lineno;
                    continue;
                }
                "[stored]" => {
                    section = Section::Stored;
                    continue;
                }
                "[reconstruction]" => {
                    section = Section::Recon;
                    continue;
                }
                _ => {}
            }
            if section == Section::Rules {
                rules.push_str(raw);
                rules.push('\n');
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let err = |message: String| SourceError::Instance {
                line: lineno,
                message,
            };
            match section {
                Section::None => return Err(err(format!("`{line}` outside of any section"))),
                Section::Rules => unreachable!(),
                Section::Stored => {
                    let (fact, p) = line
                        .rsplit_once("p=")
                        .ok_or_else(|| err("expected `fact. p=<probability>`".into()))?;
                    let fact = parse_fact(fact.trim()).map_err(|e| err(e.to_string()))?;
                    let p: f64 = p
                        .trim()
                        .parse()
                        .map_err(|_| err(format!("bad probability `{}`", p.trim())))?;
                    stored.push(fact);
                    probs.push(p);
                }
                Section::Recon => recon_lines.push((lineno, line.to_string())),
            }
        }
        let program = parse_program(&rules).map_err(|e| match e {
            DatalogError::Syntax {
                line,
                column,
                message,
            } => DatalogError::Syntax {
                line: line + rules_start,
                column,
                message,
            },
            DatalogError::Unsupported {
                line,
                column,
                construct,
            } => DatalogError::Unsupported {
                line: line + rules_start,
                column,
                construct,
            },
            other => other,
        })?;
        let recon = match recon_lines.as_slice() {
            [] => ReconSpec::Stored,
            [(_, kw)] if kw == "closure" => ReconSpec::Closure,
            [(_, kw)] if kw == "stored" => ReconSpec::Stored,
            lines => ReconSpec::Explicit(
                lines
                    .iter()
                    .map(|(l, s)| {
                        parse_fact(s).map_err(|e| SourceError::Instance {
                            line: *l,
                            message: e.to_string(),
                        })
                    })
                    .collect::<Result<_, _>>()?,
            ),
        };
        Self::new(program, stored, probs, recon)
    }

    /// Writes the instance file format. Probabilities use the shortest
    /// decimal that parses back to the same `f64`.
    pub fn to_instance_string(&self) -> String {
        let mut out = String::from("[rules]\n");
        for rule in self.program.rules() {
            let _ = writeln!(out, "{rule}");
        }
        for fact in self.program.axioms() {
            let _ = writeln!(out, "{fact}.");
        }
        out.push_str("\n[stored]\n");
        for (f, p) in self.stored.iter().zip(&self.probs) {
            let _ = writeln!(out, "{f}. p={p}");
        }
        out.push_str("\n[reconstruction]\n");
        match &self.recon_spec {
            ReconSpec::Closure => out.push_str("closure\n"),
            ReconSpec::Stored => out.push_str("stored\n"),
            ReconSpec::Explicit(_) => {
                for f in &self.recon {
                    let _ = writeln!(out, "{f}.");
                }
            }
        }
        out
    }
}

/// A core `A`, its complement `J = S_O \ A`, the mass `P_A` and the
/// conditional distribution `π_A` (absent when `P_A = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct CoreDecomposition {
    pub core: Vec<GroundFact>,
    /// Positions of the core facts in the stored list.
    pub core_idx: Vec<usize>,
    pub redundant: Vec<GroundFact>,
    pub mass: f64,
    pub cond: Option<Vec<f64>>,
}

impl CoreDecomposition {
    fn from_mask(source: &DeductiveSource, keep: &[bool]) -> Self {
        let core_idx: Vec<usize> = (0..keep.len()).filter(|&i| keep[i]).collect();
        let core = core_idx.iter().map(|&i| source.stored[i].clone()).collect();
        let redundant = (0..keep.len())
            .filter(|&i| !keep[i])
            .map(|i| source.stored[i].clone())
            .collect();
        let (mass, cond) = mass_and_cond(source.probs(), &core_idx);
        CoreDecomposition {
            core,
            core_idx,
            redundant,
            mass,
            cond,
        }
    }

    pub fn core_set(&self) -> FactSet {
        self.core.iter().cloned().collect()
    }

    /// `P_A H(π_A)` in bits.
    pub fn weighted_entropy(&self) -> f64 {
        self.cond.as_ref().map_or(0.0, |c| self.mass * entropy(c))
    }
}

fn mass_and_cond(probs: &[f64], idx: &[usize]) -> (f64, Option<Vec<f64>>) {
    let mass: f64 = idx.iter().map(|&i| probs[i]).sum();
    let cond = (mass > 0.0).then(|| idx.iter().map(|&i| probs[i] / mass).collect());
    (mass, cond)
}

/// The deletion procedure: scan the stored list in order and drop each fact
/// that follows from the facts still kept.
pub fn extract_core(source: &DeductiveSource) -> CoreDecomposition {
    let program = source.program();
    let underivable = source.underivable();
    let base: FactSet = source
        .stored
        .iter()
        .zip(&underivable)
        .filter(|(_, &u)| u)
        .map(|(f, _)| f.clone())
        .collect();
    let from_base = program.closure(&base);
    let mut keep = vec![true; source.stored.len()];
    let mut current = source.stored_set();
    for (i, s) in source.stored.iter().enumerate() {
        if underivable[i] {
            continue;
        }
        current.remove(s);
        if from_base.contains(s) || program.derives(&current, s) {
            keep[i] = false;
        } else {
            current.insert(s.clone());
        }
    }
    CoreDecomposition::from_mask(source, &keep)
}

/// `{s ∈ S_O : s ∉ Cn(S_O \ {s})}`.
pub fn essential_set(source: &DeductiveSource) -> FactSet {
    let program = source.program();
    let underivable = source.underivable();
    let base: FactSet = source
        .stored
        .iter()
        .zip(&underivable)
        .filter(|(_, &u)| u)
        .map(|(f, _)| f.clone())
        .collect();
    let from_base = program.closure(&base);
    let all = source.stored_set();
    let mut out = base.clone();
    for (i, s) in source.stored.iter().enumerate() {
        if underivable[i] || from_base.contains(s) {
            continue;
        }
        let mut rest = all.clone();
        rest.remove(s);
        if !program.derives(&rest, s) {
            out.insert(s.clone());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderRobustness {
    /// Whether the core for the current order equals the essential set.
    pub robust: bool,
    pub core: FactSet,
    pub essential: FactSet,
    /// `Cn(Ess) = Cn(S_O)`, which makes every order robust.
    pub essential_generates: bool,
}

pub fn is_order_robust(source: &DeductiveSource) -> OrderRobustness {
    let core = extract_core(source).core_set();
    let essential = essential_set(source);
    let essential_generates = source.program().closure(&essential) == *source.closure();
    OrderRobustness {
        robust: core == essential,
        core,
        essential,
        essential_generates,
    }
}

/// `Dd(s | S_O \ {s})` for every stored fact, `None` when `s` is not
/// derivable from the others. `A_δ` is the set of facts with value `> δ`.
pub fn removal_depths(source: &DeductiveSource) -> Vec<Option<usize>> {
    let program = source.program();
    let underivable = source.underivable();
    let all = source.stored_set();
    source
        .stored
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if underivable[i] {
                return None;
            }
            let mut rest = all.clone();
            rest.remove(s);
            program.derivation_depth(&rest, s)
        })
        .collect()
}

/// `A_δ = {s ∈ S_O : s ∉ T^δ(S_O \ {s})}` in stored order.
pub fn delta_core(source: &DeductiveSource, delta: usize) -> Vec<GroundFact> {
    let program = source.program();
    let underivable = source.underivable();
    let base: FactSet = source
        .stored
        .iter()
        .zip(&underivable)
        .filter(|(_, &u)| u)
        .map(|(f, _)| f.clone())
        .collect();
    let shallow = program.bounded_closure(&base, delta);
    let all = source.stored_set();
    source
        .stored
        .iter()
        .enumerate()
        .filter(|&(i, s)| {
            if underivable[i] {
                return true;
            }
            if shallow.contains(s) && !base.contains(s) {
                return false;
            }
            let mut rest = all.clone();
            rest.remove(s);
            !program.bounded_closure(&rest, delta).contains(s)
        })
        .map(|(_, s)| s.clone())
        .collect()
}

/// The δ-core filtration up to the depth where it has stabilized.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthProfile {
    /// `A_δ` for `δ = 0..=last`, each in stored order.
    pub cores_by_depth: Vec<Vec<GroundFact>>,
    pub core_idx_by_depth: Vec<Vec<usize>>,
    pub masses: Vec<f64>,
    pub conds: Vec<Option<Vec<f64>>>,
    /// `D_d = max_{q ∈ S_O} Dd(q | A)` with `max ∅ = 0`.
    pub max_depth: usize,
}

impl DepthProfile {
    /// Index of the last tabulated depth; deeper queries repeat it.
    pub fn last(&self) -> usize {
        self.cores_by_depth.len() - 1
    }

    pub fn core_at(&self, delta: usize) -> &[GroundFact] {
        &self.cores_by_depth[delta.min(self.last())]
    }

    pub fn core_idx_at(&self, delta: usize) -> &[usize] {
        &self.core_idx_by_depth[delta.min(self.last())]
    }

    pub fn mass_at(&self, delta: usize) -> f64 {
        self.masses[delta.min(self.last())]
    }

    pub fn cond_at(&self, delta: usize) -> Option<&[f64]> {
        self.conds[delta.min(self.last())].as_deref()
    }

    /// `φ(δ) = P_δ H(π_δ)` in bits.
    pub fn phi(&self, delta: usize) -> f64 {
        self.cond_at(delta)
            .map_or(0.0, |c| self.mass_at(delta) * entropy(c))
    }
}

/// Tabulates `A_δ` for `δ = 0..=max(D_d, max_s n_s)`, where `n_s` is the
/// finite removal depth of `s`; beyond that index `A_δ` no longer changes.
pub fn depth_profile(source: &DeductiveSource) -> DepthProfile {
    let depths = removal_depths(source);
    let core = extract_core(source);
    let depth_from_core = source.program().depths(&core.core_set());
    let max_depth = source
        .stored
        .iter()
        .map(|q| depth_from_core.get(q).copied().unwrap_or(0))
        .max()
        .unwrap_or(0);
    let last = depths
        .iter()
        .flatten()
        .copied()
        .max()
        .unwrap_or(0)
        .max(max_depth);
    let mut profile = DepthProfile {
        cores_by_depth: Vec::new(),
        core_idx_by_depth: Vec::new(),
        masses: Vec::new(),
        conds: Vec::new(),
        max_depth,
    };
    for delta in 0..=last {
        let idx: Vec<usize> = (0..depths.len())
            .filter(|&i| depths[i].is_none_or(|n| n > delta))
            .collect();
        let (mass, cond) = mass_and_cond(source.probs(), &idx);
        profile
            .cores_by_depth
            .push(idx.iter().map(|&i| source.stored[i].clone()).collect());
        profile.core_idx_by_depth.push(idx);
        profile.masses.push(mass);
        profile.conds.push(cond);
    }
    profile
}

/// Stored facts over predicates in `preds`, in stored order.
pub fn facts_over(source: &DeductiveSource, preds: &BTreeSet<Symbol>) -> Vec<GroundFact> {
    source
        .stored
        .iter()
        .filter(|f| preds.contains(f.predicate()))
        .cloned()
        .collect()
}
