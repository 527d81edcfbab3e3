//! Rates of deductive sources: exact zero-distortion rates in the disjoint,
//! hypergraph and graph regimes, the core-decomposed rate-distortion
//! function, rate-depth laws and restricted reconstruction alphabets.

mod hypergraph;

use std::fmt::{self, Write as _};

use thiserror::Error;

pub use hypergraph::{gamma0_on, incompatibility_edges, independent_sets_on, Hypergraph};

use crate::datalog::GroundFact;
use crate::distortion::{
    coverage_on, disjoint_on, distortion_matrix, distortion_submatrix, pairwise_on, recon_sets,
    DistortionError, DistortionKind, Overlap, ReconSets, ReconVariant, DEFAULT_CORE_CAP,
};
use crate::format::sig12;
use crate::info::{
    ba_rate_distortion, distortion_range, min_information_constrained, BaOptions,
    ConstrainedOptions, InfoError, RdCurve, RdPoint,
};
use crate::source::{
    depth_profile, extract_core, CoreDecomposition, DeductiveSource, DepthProfile,
};

/// A rate in bits, or infinity when zero distortion is infeasible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Bits(f64),
    Infinite,
}

impl Rate {
    /// The value as `f64`, with `Infinite` mapped to `f64::INFINITY`.
    pub fn bits(self) -> f64 {
        match self {
            Rate::Bits(b) => b,
            Rate::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Rate::Infinite)
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Bits(b) => write!(f, "{} bits", sig12(*b)),
            Rate::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Disjoint,
    Hypergraph,
    Graph,
    Infeasible,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Disjoint => "disjoint",
            Regime::Hypergraph => "hypergraph",
            Regime::Graph => "graph",
            Regime::Infeasible => "infeasible",
        })
    }
}

/// One assumption check and its outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub name: &'static str,
    pub holds: bool,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub value: Rate,
    pub regime: Regime,
    pub assumptions: Vec<Verdict>,
    /// The core the rate was computed on (`A`, `A_δ`).
    pub core: Vec<GroundFact>,
    pub mass: f64,
    /// Maximal hyperedges (or independent sets) used by the solver.
    pub hyperedges: Option<Vec<Vec<GroundFact>>>,
    /// Positive-probability facts without a zero-distortion reconstruction.
    pub uncovered: Vec<GroundFact>,
    /// Regimes that were tried first and did not apply.
    pub downgrades: Vec<String>,
}

impl RateReport {
    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "value: {}", self.value);
        let _ = writeln!(out, "regime: {}", self.regime);
        let _ = writeln!(out, "core: {}", join(&self.core));
        let _ = writeln!(out, "mass: {}", sig12(self.mass));
        for v in &self.assumptions {
            let _ = write!(out, "assumption.{}: {}", v.name, v.holds);
            if let Some(d) = &v.detail {
                let _ = write!(out, " ({d})");
            }
            out.push('\n');
        }
        if let Some(edges) = &self.hyperedges {
            let shown: Vec<String> = edges.iter().map(|e| format!("{{{}}}", join(e))).collect();
            let _ = writeln!(out, "hyperedges: {}", shown.join(" "));
        }
        if !self.uncovered.is_empty() {
            let _ = writeln!(out, "uncovered: {}", join(&self.uncovered));
        }
        for d in &self.downgrades {
            let _ = writeln!(out, "downgrade: {d}");
        }
        out
    }
}

fn join(facts: &[GroundFact]) -> String {
    facts
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RatesError {
    #[error("zero sets of {} and {} share {}; use the general rate", .0.first, .0.second, .0.shared)]
    NotDisjoint(Overlap),
    #[error("δ-zero sets at depth {delta} of {} and {} share {}", .overlap.first, .overlap.second, .overlap.shared)]
    DeltaNotDisjoint { delta: usize, overlap: Overlap },
    #[error("core facts missing from the reconstruction alphabet: {0:?}")]
    CoreNotInRecon(Vec<GroundFact>),
    #[error("reconstruction symbols outside Cn(S_O): {0:?}")]
    ReconOutsideClosure(Vec<GroundFact>),
    #[error("pairwise realisability fails on {0:?}")]
    NotPairwiseRealisable(Vec<GroundFact>),
    #[error("restricted alphabet is empty")]
    EmptyAlphabet,
    #[error(transparent)]
    Distortion(#[from] DistortionError),
    #[error(transparent)]
    Info(#[from] InfoError),
}

fn verdict(name: &'static str, holds: bool, detail: Option<String>) -> Verdict {
    Verdict {
        name,
        holds,
        detail,
    }
}

fn overlap_detail(o: &Overlap) -> String {
    format!("{} and {} share {}", o.first, o.second, o.shared)
}

/// Positive-probability stored facts with an empty zero set.
fn uncovered_positive(source: &DeductiveSource, sets: &ReconSets) -> Vec<GroundFact> {
    (0..source.stored().len())
        .filter(|&i| source.probs()[i] > 0.0 && sets.sets[i].is_empty())
        .map(|i| source.stored()[i].clone())
        .collect()
}

/// `P_A H(π_A)` under disjoint core zero sets.
pub fn zero_rate_disjoint(source: &DeductiveSource) -> Result<RateReport, RatesError> {
    let core = extract_core(source);
    let missing: Vec<GroundFact> = core
        .core
        .iter()
        .filter(|a| source.recon().binary_search(a).is_err())
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(RatesError::CoreNotInRecon(missing));
    }
    let sets = recon_sets(source, ReconVariant::Unbounded);
    let check = disjoint_on(source, &sets, &core.core_idx);
    if let Some(o) = check.witness {
        return Err(RatesError::NotDisjoint(o));
    }
    Ok(RateReport {
        value: Rate::Bits(core.weighted_entropy()),
        regime: Regime::Disjoint,
        assumptions: vec![
            verdict("core_disjoint", true, None),
            verdict("core_in_recon", true, None),
        ],
        core: core.core,
        mass: core.mass,
        hyperedges: None,
        uncovered: Vec::new(),
        downgrades: Vec::new(),
    })
}

/// Maximal hyperedges of `Γ0` over the core.
pub fn build_gamma0(source: &DeductiveSource) -> Hypergraph {
    let core = extract_core(source);
    let sets = recon_sets(source, ReconVariant::Unbounded);
    gamma0_on(source, &sets, &core.core_idx)
}

/// `P_A` times the minimum information over kernels that map each core fact
/// into an edge containing it.
fn edge_rate(
    source: &DeductiveSource,
    core: &CoreDecomposition,
    graph: &Hypergraph,
) -> Result<f64, RatesError> {
    let Some(cond) = &core.cond else {
        return Ok(0.0);
    };
    let supports = graph.supports();
    let live: Vec<usize> = (0..cond.len()).filter(|&k| cond[k] > 0.0).collect();
    let p: Vec<f64> = live.iter().map(|&k| cond[k]).collect();
    let s: Vec<Vec<usize>> = live.iter().map(|&k| supports[k].clone()).collect();
    let sol =
        min_information_constrained(&p, &s, graph.edges.len(), &ConstrainedOptions::default())?;
    let _ = source;
    Ok(core.mass * sol.bits)
}

fn general_on(
    source: &DeductiveSource,
    core: CoreDecomposition,
    sets: &ReconSets,
    mut assumptions: Vec<Verdict>,
) -> Result<RateReport, RatesError> {
    let coverage = coverage_on(source, sets, &core.core_idx);
    assumptions.push(verdict(
        "core_coverage",
        coverage.holds,
        (!coverage.uncovered.is_empty())
            .then(|| format!("uncovered: {}", join(&coverage.uncovered))),
    ));
    let disjoint = disjoint_on(source, sets, &core.core_idx);
    assumptions.push(verdict(
        "core_disjoint",
        disjoint.holds,
        disjoint.witness.as_ref().map(overlap_detail),
    ));
    let uncovered = uncovered_positive(source, sets);
    let graph = gamma0_on(source, sets, &core.core_idx);
    let hyperedges = Some(graph.edge_facts());
    if !uncovered.is_empty() {
        return Ok(RateReport {
            value: Rate::Infinite,
            regime: Regime::Infeasible,
            assumptions,
            core: core.core,
            mass: core.mass,
            hyperedges,
            uncovered,
            downgrades: Vec::new(),
        });
    }
    let bits = edge_rate(source, &core, &graph)?;
    Ok(RateReport {
        value: Rate::Bits(bits),
        regime: Regime::Hypergraph,
        assumptions,
        core: core.core,
        mass: core.mass,
        hyperedges,
        uncovered,
        downgrades: Vec::new(),
    })
}

/// `P_A H_Γ0(π_A)`, or infinity when some positive-probability fact has no
/// zero-distortion reconstruction.
pub fn zero_rate_general(source: &DeductiveSource) -> Result<RateReport, RatesError> {
    let core = extract_core(source);
    let sets = recon_sets(source, ReconVariant::Unbounded);
    general_on(source, core, &sets, Vec::new())
}

/// `P_A H_{G_inc}(π_A)`, defined when pairwise realisability holds.
pub fn zero_rate_graph(source: &DeductiveSource) -> Result<RateReport, RatesError> {
    let core = extract_core(source);
    let sets = recon_sets(source, ReconVariant::Unbounded);
    let check = pairwise_on(source, &sets, &core.core_idx, DEFAULT_CORE_CAP)?;
    if let Some(v) = check.violating {
        return Err(RatesError::NotPairwiseRealisable(v));
    }
    let uncovered = uncovered_positive(source, &sets);
    let graph = independent_sets_on(source, &sets, &core.core_idx);
    let hyperedges = Some(graph.edge_facts());
    let assumptions = vec![verdict("pairwise_realisability", true, None)];
    if !uncovered.is_empty() {
        return Ok(RateReport {
            value: Rate::Infinite,
            regime: Regime::Infeasible,
            assumptions,
            core: core.core,
            mass: core.mass,
            hyperedges,
            uncovered,
            downgrades: Vec::new(),
        });
    }
    let bits = edge_rate(source, &core, &graph)?;
    Ok(RateReport {
        value: Rate::Bits(bits),
        regime: Regime::Graph,
        assumptions,
        core: core.core,
        mass: core.mass,
        hyperedges,
        uncovered,
        downgrades: Vec::new(),
    })
}

/// The zero-distortion rate: `P_A H(π_A)` when the core zero sets are
/// disjoint, the hypergraph law otherwise. When pairwise realisability holds
/// the graph law is evaluated as well and recorded as an assumption check.
pub fn zero_rate(source: &DeductiveSource) -> Result<RateReport, RatesError> {
    let downgrade = match zero_rate_disjoint(source) {
        Ok(r) => return Ok(r),
        Err(e @ (RatesError::NotDisjoint(_) | RatesError::CoreNotInRecon(_))) => {
            format!("disjoint: {e}")
        }
        Err(e) => return Err(e),
    };
    let mut r = zero_rate_general(source)?;
    r.downgrades.push(downgrade);
    match zero_rate_graph(source) {
        Ok(g) => {
            let agree = match (g.value, r.value) {
                (Rate::Bits(a), Rate::Bits(b)) => (a - b).abs() <= 1e-9,
                (a, b) => a == b,
            };
            r.assumptions.push(verdict(
                "pairwise_realisability",
                true,
                Some(format!("graph law gives {}", g.value)),
            ));
            r.assumptions.push(verdict("graph_agrees", agree, None));
        }
        Err(RatesError::NotPairwiseRealisable(v)) => {
            r.assumptions.push(verdict(
                "pairwise_realisability",
                false,
                Some(format!("violated by {{{}}}", join(&v))),
            ));
        }
        Err(RatesError::Distortion(e)) => {
            r.assumptions.push(verdict(
                "pairwise_realisability",
                false,
                Some(e.to_string()),
            ));
        }
        Err(e) => return Err(e),
    }
    Ok(r)
}

/// Rate-distortion by core decomposition: `P_A R^(A)(D / P_A)`, with the
/// core sub-source solved under closure distortion restricted to `A`. Point
/// kernels have one row per core fact.
pub fn rd_curve(
    source: &DeductiveSource,
    targets: &[f64],
    opts: &BaOptions,
) -> Result<RdCurve, RatesError> {
    check_recon_in_closure(source)?;
    let core = extract_core(source);
    let Some(cond) = &core.cond else {
        let points = targets
            .iter()
            .map(|&d| RdPoint {
                distortion: d,
                achieved: 0.0,
                rate: 0.0,
                slope: Some(0.0),
                iterations: 0,
                residual: 0.0,
                kernel: crate::info::Kernel { rows: Vec::new() },
            })
            .collect();
        return Ok(RdCurve {
            points,
            d_min: 0.0,
            d_max: 0.0,
        });
    };
    let m = distortion_submatrix(
        source,
        DistortionKind::Closure,
        &core.core_idx,
        source.recon(),
    );
    scaled_curve(cond, &m.values, core.mass, targets, opts)
}

/// Single-point form of [`rd_curve`].
pub fn rd_function(source: &DeductiveSource, d: f64, opts: &BaOptions) -> Result<f64, RatesError> {
    Ok(rd_curve(source, &[d], opts)?.points[0].rate)
}

fn scaled_curve(
    cond: &[f64],
    d: &[Vec<f64>],
    mass: f64,
    targets: &[f64],
    opts: &BaOptions,
) -> Result<RdCurve, RatesError> {
    let scaled: Vec<f64> = targets.iter().map(|t| t / mass).collect();
    let mut curve = ba_rate_distortion(cond, d, &scaled, opts)?;
    for (pt, &t) in curve.points.iter_mut().zip(targets) {
        pt.distortion = t;
        pt.achieved *= mass;
        pt.rate *= mass;
        pt.residual *= mass;
    }
    curve.d_min *= mass;
    curve.d_max *= mass;
    Ok(curve)
}

fn check_recon_in_closure(source: &DeductiveSource) -> Result<(), RatesError> {
    let outside: Vec<GroundFact> = source
        .recon()
        .iter()
        .filter(|c| !source.closure().contains(*c))
        .cloned()
        .collect();
    if outside.is_empty() {
        Ok(())
    } else {
        Err(RatesError::ReconOutsideClosure(outside))
    }
}

/// `n` evenly spaced distortions from the decomposition's `d_min` to
/// `d_max` (full-source units).
pub fn default_grid(source: &DeductiveSource, n: usize) -> Result<Vec<f64>, RatesError> {
    check_recon_in_closure(source)?;
    let core = extract_core(source);
    let Some(cond) = &core.cond else {
        return Ok(vec![0.0; n.min(1)]);
    };
    let m = distortion_submatrix(
        source,
        DistortionKind::Closure,
        &core.core_idx,
        source.recon(),
    );
    let (lo, hi) = distortion_range(cond, &m.values);
    Ok(even_grid(core.mass * lo, core.mass * hi, n))
}

pub fn even_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Plain Blahut-Arimoto on the full stored × reconstruction matrix of the
/// given distortion, without any decomposition.
pub fn rd_curve_direct(
    source: &DeductiveSource,
    kind: DistortionKind,
    targets: &[f64],
    opts: &BaOptions,
) -> Result<RdCurve, RatesError> {
    let m = distortion_matrix(source, kind);
    Ok(ba_rate_distortion(
        source.probs(),
        &m.values,
        targets,
        opts,
    )?)
}

/// `P_δ H(π_δ)` under δ-step distortion.
pub fn rate_depth_zero(source: &DeductiveSource, delta: usize) -> Result<RateReport, RatesError> {
    rate_depth_zero_with(source, &depth_profile(source), delta)
}

fn rate_depth_zero_with(
    source: &DeductiveSource,
    profile: &DepthProfile,
    delta: usize,
) -> Result<RateReport, RatesError> {
    let core = profile.core_at(delta).to_vec();
    let missing: Vec<GroundFact> = core
        .iter()
        .filter(|a| source.recon().binary_search(a).is_err())
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(RatesError::CoreNotInRecon(missing));
    }
    let sets = recon_sets(source, ReconVariant::Delta(delta));
    let check = disjoint_on(source, &sets, profile.core_idx_at(delta));
    if let Some(overlap) = check.witness {
        return Err(RatesError::DeltaNotDisjoint { delta, overlap });
    }
    Ok(RateReport {
        value: Rate::Bits(profile.phi(delta)),
        regime: Regime::Disjoint,
        assumptions: vec![verdict(
            "delta_disjoint",
            true,
            Some(format!("δ = {delta}")),
        )],
        core,
        mass: profile.mass_at(delta),
        hyperedges: None,
        uncovered: Vec::new(),
        downgrades: Vec::new(),
    })
}

/// `P_δ R^(A_δ)(D / P_δ)` under δ-step distortion.
pub fn rate_depth_distortion(
    source: &DeductiveSource,
    d: f64,
    delta: usize,
    opts: &BaOptions,
) -> Result<f64, RatesError> {
    Ok(rate_depth_curve(source, &[d], delta, opts)?.points[0].rate)
}

pub fn rate_depth_curve(
    source: &DeductiveSource,
    targets: &[f64],
    delta: usize,
    opts: &BaOptions,
) -> Result<RdCurve, RatesError> {
    let profile = depth_profile(source);
    let Some(cond) = profile.cond_at(delta) else {
        return rd_curve(source, targets, opts);
    };
    let m = distortion_submatrix(
        source,
        DistortionKind::Delta(delta),
        profile.core_idx_at(delta),
        source.recon(),
    );
    scaled_curve(cond, &m.values, profile.mass_at(delta), targets, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthRow {
    pub delta: usize,
    pub core: Vec<GroundFact>,
    pub mass: f64,
    /// `φ(δ) = P_δ H(π_δ)`.
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthSweep {
    /// One row per δ up to the depth where `A_δ` stabilizes.
    pub rows: Vec<DepthRow>,
    pub max_depth: usize,
}

impl DepthSweep {
    /// `φ(δ)`, constant beyond the last row.
    pub fn phi(&self, delta: usize) -> f64 {
        self.rows[delta.min(self.rows.len() - 1)].phi
    }
}

/// `φ(δ)` for every δ until the filtration stabilizes; fails if δ-disjointness
/// fails at some depth.
pub fn rate_depth_sweep(source: &DeductiveSource) -> Result<DepthSweep, RatesError> {
    let profile = depth_profile(source);
    let mut rows = Vec::new();
    for delta in 0..=profile.last() {
        let r = rate_depth_zero_with(source, &profile, delta)?;
        rows.push(DepthRow {
            delta,
            core: r.core,
            mass: r.mass,
            phi: r.value.bits(),
        });
    }
    Ok(DepthSweep {
        rows,
        max_depth: profile.max_depth,
    })
}

/// Zero-distortion rate when the decoder may only output symbols of `v`.
pub fn restricted_zero_rate(
    source: &DeductiveSource,
    v: &[GroundFact],
) -> Result<RateReport, RatesError> {
    if v.is_empty() {
        return Err(RatesError::EmptyAlphabet);
    }
    let core = extract_core(source);
    let sets = recon_sets(source, ReconVariant::Restricted(v.to_vec()));
    let h1: Vec<GroundFact> = core
        .core_idx
        .iter()
        .filter(|&&i| sets.sets[i].is_empty())
        .map(|&i| source.stored()[i].clone())
        .collect();
    let h2 = disjoint_on(source, &sets, &core.core_idx);
    let assumptions = vec![
        verdict(
            "h1_nonempty",
            h1.is_empty(),
            (!h1.is_empty()).then(|| format!("empty: {}", join(&h1))),
        ),
        verdict(
            "h2_disjoint",
            h2.holds,
            h2.witness.as_ref().map(overlap_detail),
        ),
    ];
    let uncovered = uncovered_positive(source, &sets);
    if !uncovered.is_empty() {
        return Ok(RateReport {
            value: Rate::Infinite,
            regime: Regime::Infeasible,
            assumptions,
            core: core.core,
            mass: core.mass,
            hyperedges: None,
            uncovered,
            downgrades: Vec::new(),
        });
    }
    if h1.is_empty() && h2.holds {
        return Ok(RateReport {
            value: Rate::Bits(core.weighted_entropy()),
            regime: Regime::Disjoint,
            assumptions,
            core: core.core,
            mass: core.mass,
            hyperedges: None,
            uncovered,
            downgrades: Vec::new(),
        });
    }
    let mut r = general_on(source, core, &sets, assumptions)?;
    r.downgrades
        .push("disjoint: (H1) or (H2) fails over the restricted alphabet".into());
    Ok(r)
}
