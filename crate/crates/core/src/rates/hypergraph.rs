//! The core zero-distortion hypergraph and the incompatibility graph.

use std::collections::BTreeSet;

use crate::datalog::GroundFact;
use crate::distortion::{compatibility_masks, maximal_cliques, ReconSets};
use crate::source::DeductiveSource;

/// Maximal hyperedges of `Γ0`, each with one reconstruction that serves
/// every member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    /// Members as positions in the row list the hypergraph was built on,
    /// sorted lexicographically.
    pub edges: Vec<Vec<usize>>,
    pub witnesses: Vec<GroundFact>,
    /// The row facts, so that `facts[edges[e][k]]` names a member.
    pub facts: Vec<GroundFact>,
    /// Rows covered by no edge (empty zero set).
    pub uncovered: Vec<GroundFact>,
}

impl Hypergraph {
    pub fn edge_facts(&self) -> Vec<Vec<GroundFact>> {
        self.edges
            .iter()
            .map(|e| e.iter().map(|&k| self.facts[k].clone()).collect())
            .collect()
    }

    /// For each row, the edges containing it.
    pub fn supports(&self) -> Vec<Vec<usize>> {
        (0..self.facts.len())
            .map(|k| {
                (0..self.edges.len())
                    .filter(|&e| self.edges[e].contains(&k))
                    .collect()
            })
            .collect()
    }
}

/// Witness inversion: `W(ŝ) = {a : ŝ ∈ R(a)}` for every candidate, keeping the
/// maximal nonempty sets.
pub fn gamma0_on(source: &DeductiveSource, sets: &ReconSets, rows: &[usize]) -> Hypergraph {
    let mut found: Vec<(BTreeSet<usize>, GroundFact)> = Vec::new();
    for (c, w) in sets.witness_sets(rows).into_iter().enumerate() {
        if w.is_empty() || found.iter().any(|(f, _)| w.is_subset(f)) {
            continue;
        }
        found.retain(|(f, _)| !f.is_subset(&w));
        found.push((w, sets.candidates[c].clone()));
    }
    let mut edges: Vec<(Vec<usize>, GroundFact)> = found
        .into_iter()
        .map(|(w, c)| (w.into_iter().collect(), c))
        .collect();
    edges.sort();
    let facts: Vec<GroundFact> = rows.iter().map(|&i| source.stored()[i].clone()).collect();
    let uncovered = (0..rows.len())
        .filter(|&k| !edges.iter().any(|(e, _)| e.contains(&k)))
        .map(|k| facts[k].clone())
        .collect();
    let (edges, witnesses) = edges.into_iter().unzip();
    Hypergraph {
        edges,
        witnesses,
        facts,
        uncovered,
    }
}

/// Maximal independent sets of the incompatibility graph, in the same
/// layout as [`gamma0_on`]. Witnesses are left empty.
pub fn independent_sets_on(
    source: &DeductiveSource,
    sets: &ReconSets,
    rows: &[usize],
) -> Hypergraph {
    let adj = compatibility_masks(sets, rows);
    let mut edges: Vec<Vec<usize>> = maximal_cliques(&adj)
        .into_iter()
        .filter(|&m| m != 0)
        .map(|m| (0..rows.len()).filter(|k| m >> k & 1 == 1).collect())
        .collect();
    edges.sort();
    Hypergraph {
        edges,
        witnesses: Vec::new(),
        facts: rows.iter().map(|&i| source.stored()[i].clone()).collect(),
        uncovered: Vec::new(),
    }
}

/// Edges `{a, a'}` of the incompatibility graph: pairs with disjoint zero
/// sets.
pub fn incompatibility_edges(
    source: &DeductiveSource,
    sets: &ReconSets,
    rows: &[usize],
) -> Vec<(GroundFact, GroundFact)> {
    let mut out = Vec::new();
    for (k, &i) in rows.iter().enumerate() {
        for &j in &rows[k + 1..] {
            if sets.sets[i].is_disjoint(&sets.sets[j]) {
                out.push((source.stored()[i].clone(), source.stored()[j].clone()));
            }
        }
    }
    out
}
