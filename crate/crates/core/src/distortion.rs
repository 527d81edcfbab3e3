//! Closure, Hamming and δ-step distortion, zero-distortion reconstruction
//! sets, and the assumption validators built on them.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::datalog::{FactSet, GroundFact, Program};
use crate::format::sig12;
use crate::source::{depth_profile, extract_core, DeductiveSource};

/// Default bound on the core size for exhaustive clique checks.
pub const DEFAULT_CORE_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistortionError {
    #[error("core has {size} facts; exhaustive check is capped at {cap}")]
    CoreTooLarge { size: usize, cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistortionKind {
    Closure,
    Hamming,
    Delta(usize),
}

impl fmt::Display for DistortionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistortionKind::Closure => f.write_str("closure"),
            DistortionKind::Hamming => f.write_str("hamming"),
            DistortionKind::Delta(d) => write!(f, "delta({d})"),
        }
    }
}

impl FromStr for DistortionKind {
    type Err = String;

    /// `closure`, `hamming`, `delta` (δ = 0) or `delta(N)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "closure" => Ok(DistortionKind::Closure),
            "hamming" => Ok(DistortionKind::Hamming),
            "delta" => Ok(DistortionKind::Delta(0)),
            _ => s
                .strip_prefix("delta(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|n| n.parse().ok())
                .map(DistortionKind::Delta)
                .ok_or_else(|| format!("unknown distortion `{s}`")),
        }
    }
}

/// Jaccard similarity `|Cn(S) ∩ Cn(T)| / |Cn(S) ∪ Cn(T)|`, with `0/0 = 1`.
pub fn closure_fidelity(program: &Program, s: &FactSet, t: &FactSet) -> f64 {
    jaccard_similarity(&program.closure(s), &program.closure(t))
}

fn jaccard_similarity(a: &FactSet, b: &FactSet) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Jaccard distance between `Cn(S_O)` and `Cn((S_O \ {s}) ∪ {ŝ})`, with
/// `0/0 = 0`.
pub fn closure_distortion(source: &DeductiveSource, s: &GroundFact, s_hat: &GroundFact) -> f64 {
    let mut rest = source.stored_set();
    rest.remove(s);
    let without = source.program().closure(&rest);
    substituted_distortion(source, &without, s_hat)
}

fn substituted_distortion(source: &DeductiveSource, without: &FactSet, s_hat: &GroundFact) -> f64 {
    let full = source.closure();
    let sub = source
        .program()
        .extend_closure(without, std::slice::from_ref(s_hat));
    if sub == *full {
        return 0.0;
    }
    let inter = full.intersection(&sub).count();
    let union = full.len() + sub.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

pub fn hamming_distortion(s: &GroundFact, s_hat: &GroundFact) -> f64 {
    if s == s_hat {
        0.0
    } else {
        1.0
    }
}

/// 0 when all of `S_O` lies in `T^δ((S_O \ {s}) ∪ {ŝ})`, else 1.
pub fn delta_distortion(
    source: &DeductiveSource,
    s: &GroundFact,
    s_hat: &GroundFact,
    delta: usize,
) -> f64 {
    if s == s_hat {
        return 0.0;
    }
    let mut base = source.stored_set();
    base.remove(s);
    base.insert(s_hat.clone());
    if source.program().bounded_closure(&base, delta).contains(s) {
        0.0
    } else {
        1.0
    }
}

/// Distortion values with rows indexed by stored facts and columns by
/// reconstruction symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMatrix {
    pub kind: DistortionKind,
    pub rows: Vec<GroundFact>,
    pub cols: Vec<GroundFact>,
    pub values: Vec<Vec<f64>>,
}

impl DistortionMatrix {
    /// Header row of column facts, then one row per stored fact; entries
    /// use 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header =
            std::iter::once(String::new()).chain(self.cols.iter().map(ToString::to_string));
        w.write_record(header).expect("write to memory");
        for (fact, row) in self.rows.iter().zip(&self.values) {
            let record = std::iter::once(fact.to_string()).chain(row.iter().map(|v| sig12(*v)));
            w.write_record(record).expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8")
    }
}

/// Full matrix over stored facts × reconstruction alphabet.
pub fn distortion_matrix(source: &DeductiveSource, kind: DistortionKind) -> DistortionMatrix {
    let rows: Vec<usize> = (0..source.stored().len()).collect();
    distortion_submatrix(source, kind, &rows, source.recon())
}

/// Matrix restricted to the stored facts at `rows` and the columns `cols`.
pub fn distortion_submatrix(
    source: &DeductiveSource,
    kind: DistortionKind,
    rows: &[usize],
    cols: &[GroundFact],
) -> DistortionMatrix {
    let stored = source.stored();
    let values = rows
        .iter()
        .map(|&i| {
            let s = &stored[i];
            match kind {
                DistortionKind::Hamming => cols.iter().map(|c| hamming_distortion(s, c)).collect(),
                DistortionKind::Delta(d) => cols
                    .iter()
                    .map(|c| delta_distortion(source, s, c, d))
                    .collect(),
                DistortionKind::Closure => {
                    let mut rest = source.stored_set();
                    rest.remove(s);
                    let without = source.program().closure(&rest);
                    cols.iter()
                        .map(|c| substituted_distortion(source, &without, c))
                        .collect()
                }
            }
        })
        .collect();
    DistortionMatrix {
        kind,
        rows: rows.iter().map(|&i| stored[i].clone()).collect(),
        cols: cols.to_vec(),
        values,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReconVariant {
    /// Closure distortion over the reconstruction alphabet.
    Unbounded,
    /// δ-step distortion over the reconstruction alphabet.
    Delta(usize),
    /// Closure distortion over a restricted alphabet `V`.
    Restricted(Vec<GroundFact>),
}

/// Exact zero-distortion sets `R(s)` for every stored fact.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconSets {
    pub variant: ReconVariant,
    /// Column alphabet: `Ŝ_O`, or `V` for the restricted variant.
    pub candidates: Vec<GroundFact>,
    /// `sets[i]` holds indices into `candidates` for stored fact `i`.
    pub sets: Vec<BTreeSet<usize>>,
}

impl ReconSets {
    pub fn facts_of(&self, i: usize) -> Vec<GroundFact> {
        self.sets[i]
            .iter()
            .map(|&j| self.candidates[j].clone())
            .collect()
    }

    /// `W(ŝ) = {i ∈ rows : ŝ ∈ R(i)}` for each candidate, as positions in
    /// `rows`.
    pub fn witness_sets(&self, rows: &[usize]) -> Vec<BTreeSet<usize>> {
        (0..self.candidates.len())
            .map(|c| {
                (0..rows.len())
                    .filter(|&k| self.sets[rows[k]].contains(&c))
                    .collect()
            })
            .collect()
    }
}

/// Zero-distortion sets under the requested distortion.
pub fn recon_sets(source: &DeductiveSource, variant: ReconVariant) -> ReconSets {
    let candidates: Vec<GroundFact> = match &variant {
        ReconVariant::Restricted(v) => v
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
        _ => source.recon().to_vec(),
    };
    let program = source.program();
    let full = source.closure();
    let all = source.stored_set();
    let sets = source
        .stored()
        .iter()
        .map(|s| {
            let mut rest = all.clone();
            rest.remove(s);
            match &variant {
                ReconVariant::Delta(d) => (0..candidates.len())
                    .filter(|&j| delta_distortion(source, s, &candidates[j], *d) == 0.0)
                    .collect(),
                _ => {
                    let without = program.closure(&rest);
                    let redundant = without.contains(s);
                    (0..candidates.len())
                        .filter(|&j| {
                            let c = &candidates[j];
                            // zero distortion forces c ∈ Cn(S_O); then it only
                            // remains to recover s itself
                            full.contains(c)
                                && (redundant
                                    || c == s
                                    || program
                                        .extend_closure(&without, std::slice::from_ref(c))
                                        .contains(s))
                        })
                        .collect()
                }
            }
        })
        .collect();
    ReconSets {
        variant,
        candidates,
        sets,
    }
}

/// Two core facts sharing a zero-distortion reconstruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overlap {
    pub first: GroundFact,
    pub second: GroundFact,
    pub shared: GroundFact,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisjointCheck {
    pub holds: bool,
    pub witness: Option<Overlap>,
}

/// Pairwise disjointness of `R(a)` over the stored facts at `rows`.
pub fn disjoint_on(source: &DeductiveSource, sets: &ReconSets, rows: &[usize]) -> DisjointCheck {
    for (k, &i) in rows.iter().enumerate() {
        for &j in &rows[k + 1..] {
            if let Some(&c) = sets.sets[i].intersection(&sets.sets[j]).next() {
                return DisjointCheck {
                    holds: false,
                    witness: Some(Overlap {
                        first: source.stored()[i].clone(),
                        second: source.stored()[j].clone(),
                        shared: sets.candidates[c].clone(),
                    }),
                };
            }
        }
    }
    DisjointCheck {
        holds: true,
        witness: None,
    }
}

/// Whether the closure zero sets of distinct core facts are disjoint.
pub fn check_core_disjoint(source: &DeductiveSource) -> DisjointCheck {
    let core = extract_core(source);
    let sets = recon_sets(source, ReconVariant::Unbounded);
    disjoint_on(source, &sets, &core.core_idx)
}

/// Whether the δ-step zero sets are disjoint over `A_δ`.
pub fn check_delta_disjoint(source: &DeductiveSource, delta: usize) -> DisjointCheck {
    let profile = depth_profile(source);
    let sets = recon_sets(source, ReconVariant::Delta(delta));
    disjoint_on(source, &sets, profile.core_idx_at(delta))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageCheck {
    pub holds: bool,
    /// Core facts with an empty zero set.
    pub uncovered: Vec<GroundFact>,
}

/// Either `P_A = 0` and some candidate lies in `Cn(S_O)`, or `P_A > 0` and
/// every core fact at `rows` has a nonempty zero set.
pub fn coverage_on(source: &DeductiveSource, sets: &ReconSets, rows: &[usize]) -> CoverageCheck {
    let mass: f64 = rows.iter().map(|&i| source.probs()[i]).sum();
    let uncovered: Vec<GroundFact> = rows
        .iter()
        .filter(|&&i| sets.sets[i].is_empty())
        .map(|&i| source.stored()[i].clone())
        .collect();
    let holds = if mass == 0.0 {
        sets.candidates.iter().any(|c| source.closure().contains(c))
    } else {
        uncovered.is_empty()
    };
    CoverageCheck { holds, uncovered }
}

pub fn check_core_coverage(source: &DeductiveSource) -> CoverageCheck {
    let core = extract_core(source);
    let sets = recon_sets(source, ReconVariant::Unbounded);
    coverage_on(source, &sets, &core.core_idx)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairwiseCheck {
    pub holds: bool,
    /// A set of core facts that is pairwise compatible but has no common
    /// zero-distortion reconstruction.
    pub violating: Option<Vec<GroundFact>>,
}

/// Maximal cliques of the graph on `0..n` with adjacency masks `adj`
/// (Bron-Kerbosch with pivoting).
pub fn maximal_cliques(adj: &[u64]) -> Vec<u64> {
    fn expand(adj: &[u64], r: u64, mut p: u64, mut x: u64, out: &mut Vec<u64>) {
        if p == 0 && x == 0 {
            out.push(r);
            return;
        }
        let pivot = (p | x).trailing_zeros() as usize;
        let mut candidates = p & !adj[pivot];
        while candidates != 0 {
            let v = candidates.trailing_zeros() as usize;
            let bit = 1u64 << v;
            expand(adj, r | bit, p & adj[v], x & adj[v], out);
            p &= !bit;
            x |= bit;
            candidates &= !bit;
        }
    }
    assert!(adj.len() <= 64, "at most 64 vertices");
    let all = if adj.len() == 64 {
        u64::MAX
    } else {
        (1u64 << adj.len()) - 1
    };
    let mut out = Vec::new();
    expand(adj, 0, all, 0, &mut out);
    out.sort_unstable();
    out
}

/// Compatibility masks: `k ~ l` when `R(rows[k]) ∩ R(rows[l]) ≠ ∅`.
pub fn compatibility_masks(sets: &ReconSets, rows: &[usize]) -> Vec<u64> {
    (0..rows.len())
        .map(|k| {
            (0..rows.len())
                .filter(|&l| l != k && !sets.sets[rows[k]].is_disjoint(&sets.sets[rows[l]]))
                .fold(0u64, |m, l| m | 1 << l)
        })
        .collect()
}

pub fn pairwise_on(
    source: &DeductiveSource,
    sets: &ReconSets,
    rows: &[usize],
    cap: usize,
) -> Result<PairwiseCheck, DistortionError> {
    let cap = cap.min(64);
    if rows.len() > cap {
        return Err(DistortionError::CoreTooLarge {
            size: rows.len(),
            cap,
        });
    }
    let adj = compatibility_masks(sets, rows);
    let witnesses: Vec<u64> = sets
        .witness_sets(rows)
        .iter()
        .map(|w| w.iter().fold(0u64, |m, &k| m | 1 << k))
        .collect();
    for clique in maximal_cliques(&adj) {
        if !witnesses.iter().any(|w| clique & !w == 0) {
            let members = (0..rows.len())
                .filter(|k| clique >> k & 1 == 1)
                .map(|k| source.stored()[rows[k]].clone())
                .collect();
            return Ok(PairwiseCheck {
                holds: false,
                violating: Some(members),
            });
        }
    }
    Ok(PairwiseCheck {
        holds: true,
        violating: None,
    })
}

/// Every pairwise-compatible set of core facts has a common
/// zero-distortion reconstruction. Checked on maximal cliques of the
/// compatibility graph against the witness sets `W(ŝ)`.
pub fn check_pairwise_realisability(
    source: &DeductiveSource,
    cap: usize,
) -> Result<PairwiseCheck, DistortionError> {
    let core = extract_core(source);
    let sets = recon_sets(source, ReconVariant::Unbounded);
    pairwise_on(source, &sets, &core.core_idx, cap)
}
