//! Channel-facing consequences: separation verdicts, depth-budget
//! thresholds, message-set bounds, blocklength benchmarks and the
//! closure-adapted Fano bound.

use std::fmt;

use thiserror::Error;

use crate::distortion::{check_core_disjoint, recon_sets, ReconVariant};
use crate::info::{ba_capacity, binary_entropy, mutual_information, BaOptions, InfoError, Kernel};
use crate::rates::{
    rate_depth_distortion, rate_depth_sweep, rate_depth_zero, rd_function, zero_rate, DepthSweep,
    Rate, RatesError,
};
use crate::source::{extract_core, DeductiveSource};

/// Rates within this distance of `κC` are reported as boundary cases.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConsequenceError {
    #[error(transparent)]
    Rates(#[from] RatesError),
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("channel file: {0}")]
    Channel(String),
}

/// A discrete memoryless channel with labelled alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub kernel: Kernel,
    capacity: f64,
}

impl ChannelModel {
    pub fn new(
        inputs: Vec<String>,
        outputs: Vec<String>,
        kernel: Kernel,
    ) -> Result<Self, ConsequenceError> {
        if kernel.inputs() == 0 {
            return Err(ConsequenceError::Channel("no inputs".into()));
        }
        if inputs.len() != kernel.inputs() || outputs.len() != kernel.outputs() {
            return Err(ConsequenceError::Channel(format!(
                "{}x{} labels for a {}x{} matrix",
                inputs.len(),
                outputs.len(),
                kernel.inputs(),
                kernel.outputs()
            )));
        }
        let capacity = ba_capacity(&kernel, &BaOptions::default())?.bits;
        Ok(ChannelModel {
            inputs,
            outputs,
            kernel,
            capacity,
        })
    }

    /// Inputs and outputs labelled `0..n`.
    pub fn from_kernel(kernel: Kernel) -> Result<Self, ConsequenceError> {
        let inputs = (0..kernel.inputs()).map(|i| i.to_string()).collect();
        let outputs = (0..kernel.outputs()).map(|i| i.to_string()).collect();
        Self::new(inputs, outputs, kernel)
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Result<Self, ConsequenceError> {
        let kernel = Kernel::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])?;
        Self::from_kernel(kernel)
    }

    /// Capacity in bits.
    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// A header row of output labels, then one row per input. When the first
    /// header cell is empty or `input`, the first column holds input labels.
    pub fn from_csv(text: &str) -> Result<Self, ConsequenceError> {
        let bad = |e: csv::Error| ConsequenceError::Channel(e.to_string());
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(bad)?
            .iter()
            .map(str::to_string)
            .collect();
        let labelled = matches!(header.first().map(String::as_str), Some("" | "input"));
        let outputs: Vec<String> = if labelled {
            header[1..].to_vec()
        } else {
            header
        };
        let mut inputs = Vec::new();
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(bad)?;
            let mut cells = record.iter();
            inputs.push(if labelled {
                cells.next().unwrap_or("").to_string()
            } else {
                i.to_string()
            });
            let row = cells
                .map(|c| {
                    c.parse::<f64>().map_err(|_| {
                        ConsequenceError::Channel(format!("row {}: `{c}` is not a number", i + 1))
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if row.len() != outputs.len() {
                return Err(ConsequenceError::Channel(format!(
                    "row {} has {} entries for {} outputs",
                    i + 1,
                    row.len(),
                    outputs.len()
                )));
            }
            rows.push(row);
        }
        let kernel = Kernel::new(rows).map_err(|e| ConsequenceError::Channel(e.to_string()))?;
        Self::new(inputs, outputs, kernel)
    }

    pub fn to_csv(&self) -> String {
        self.kernel.to_csv(&self.inputs, &self.outputs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationVerdict {
    Achievable,
    NotAchievable,
    /// `rate = κC` within [`BOUNDARY_TOLERANCE`]; left undecided.
    Boundary,
}

impl fmt::Display for SeparationVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeparationVerdict::Achievable => "achievable",
            SeparationVerdict::NotAchievable => "not-achievable",
            SeparationVerdict::Boundary => "boundary",
        })
    }
}

/// Compares a source rate with the channel budget `κC`.
pub fn compare(rate: Rate, kappa_c: f64) -> SeparationVerdict {
    match rate {
        Rate::Infinite => SeparationVerdict::NotAchievable,
        Rate::Bits(r) if (r - kappa_c).abs() <= BOUNDARY_TOLERANCE => SeparationVerdict::Boundary,
        Rate::Bits(r) if r < kappa_c => SeparationVerdict::Achievable,
        Rate::Bits(_) => SeparationVerdict::NotAchievable,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationMode {
    Unbounded,
    Depth(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport {
    pub rate: Rate,
    pub kappa: f64,
    pub capacity: f64,
    pub kappa_c: f64,
    pub verdict: SeparationVerdict,
}

/// Source rate at distortion `d` against `κ C(W)`. At `d = 0` the
/// unbounded mode uses the exact zero-distortion rate in whichever regime
/// applies, and the depth mode uses `P_δ H(π_δ)`.
pub fn separation_check(
    source: &DeductiveSource,
    channel: &ChannelModel,
    kappa: f64,
    d: f64,
    mode: SeparationMode,
) -> Result<SeparationReport, ConsequenceError> {
    if !(kappa > 0.0) {
        return Err(ConsequenceError::Parameter(format!(
            "kappa {kappa} must be positive"
        )));
    }
    if !(d >= 0.0) {
        return Err(ConsequenceError::Parameter(format!(
            "distortion {d} must be non-negative"
        )));
    }
    let opts = BaOptions::default();
    let rate = match (mode, d == 0.0) {
        (SeparationMode::Unbounded, true) => zero_rate(source)?.value,
        (SeparationMode::Unbounded, false) => Rate::Bits(rd_function(source, d, &opts)?),
        (SeparationMode::Depth(delta), true) => rate_depth_zero(source, delta)?.value,
        (SeparationMode::Depth(delta), false) => {
            Rate::Bits(rate_depth_distortion(source, d, delta, &opts)?)
        }
    };
    let kappa_c = kappa * channel.capacity();
    Ok(SeparationReport {
        rate,
        kappa,
        capacity: channel.capacity(),
        kappa_c,
        verdict: compare(rate, kappa_c),
    })
}

/// Which case of the depth-budget picture an instance falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthRegime {
    /// `H(P_O) < κC`: no inference needed.
    NoInference,
    /// `P_A H(π_A) > κC`: no finite depth suffices.
    Unreachable,
    /// `P_A H(π_A) < κC < H(P_O)`: thresholds lie in `1..=D_d`.
    Intermediate,
    /// One of the endpoints meets `κC` within the boundary tolerance.
    Boundary,
}

impl fmt::Display for DepthRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DepthRegime::NoInference => "no-inference",
            DepthRegime::Unreachable => "unreachable",
            DepthRegime::Intermediate => "intermediate",
            DepthRegime::Boundary => "boundary",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthThresholds {
    /// Smallest δ with `φ(δ) < κC`; `None` is infinity.
    pub achievable: Option<usize>,
    /// Smallest δ with `φ(δ) ≤ κC`; `None` is infinity.
    pub necessary: Option<usize>,
    pub kappa_c: f64,
    pub regime: DepthRegime,
    pub phi: Vec<f64>,
    pub max_depth: usize,
}

/// Thresholds from an existing sweep; the sweep's `φ` is the single table
/// both thresholds read.
pub fn thresholds_from_sweep(sweep: &DepthSweep, kappa_c: f64) -> DepthThresholds {
    let phi: Vec<f64> = sweep.rows.iter().map(|r| r.phi).collect();
    let achievable = phi
        .iter()
        .position(|&p| compare(Rate::Bits(p), kappa_c) == SeparationVerdict::Achievable);
    let necessary = phi
        .iter()
        .position(|&p| compare(Rate::Bits(p), kappa_c) != SeparationVerdict::NotAchievable);
    let first = compare(Rate::Bits(phi[0]), kappa_c);
    let last = compare(Rate::Bits(phi[phi.len() - 1]), kappa_c);
    let regime = match (first, last) {
        (SeparationVerdict::Achievable, _) => DepthRegime::NoInference,
        (_, SeparationVerdict::NotAchievable) => DepthRegime::Unreachable,
        (SeparationVerdict::NotAchievable, SeparationVerdict::Achievable) => {
            DepthRegime::Intermediate
        }
        _ => DepthRegime::Boundary,
    };
    DepthThresholds {
        achievable,
        necessary,
        kappa_c,
        regime,
        phi,
        max_depth: sweep.max_depth,
    }
}

pub fn depth_thresholds(
    source: &DeductiveSource,
    channel: &ChannelModel,
    kappa: f64,
) -> Result<DepthThresholds, ConsequenceError> {
    if !(kappa > 0.0) {
        return Err(ConsequenceError::Parameter(format!(
            "kappa {kappa} must be positive"
        )));
    }
    let sweep = rate_depth_sweep(source)?;
    Ok(thresholds_from_sweep(&sweep, kappa * channel.capacity()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConverseReport {
    /// `(nC + 1) / (1 - ε)` in bits.
    pub bound: f64,
    /// `log2` of the message or core count.
    pub log_count: f64,
    /// Whether `log_count ≤ bound`.
    pub consistent: bool,
}

/// Fano converse for an `(n, M)` code with error at most `ε`.
pub fn message_converse(
    n: usize,
    capacity: f64,
    eps: f64,
    count: usize,
) -> Result<ConverseReport, ConsequenceError> {
    if n == 0 {
        return Err(ConsequenceError::Parameter(
            "blocklength must be at least 1".into(),
        ));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(ConsequenceError::Parameter(format!(
            "error probability {eps} not in [0, 1)"
        )));
    }
    if !(capacity >= 0.0) || count == 0 {
        return Err(ConsequenceError::Parameter(
            "capacity must be non-negative and count positive".into(),
        ));
    }
    let bound = (n as f64 * capacity + 1.0) / (1.0 - eps);
    let log_count = (count as f64).log2();
    Ok(ConverseReport {
        bound,
        log_count,
        consistent: log_count <= bound,
    })
}

/// The closure form of [`message_converse`] with `count = |A|`; requires
/// disjoint core zero sets.
pub fn closure_converse(
    source: &DeductiveSource,
    n: usize,
    capacity: f64,
    eps: f64,
) -> Result<ConverseReport, ConsequenceError> {
    let core = extract_core(source);
    if core.core.is_empty() {
        return Err(ConsequenceError::Hypothesis("empty core".into()));
    }
    let check = check_core_disjoint(source);
    if let Some(o) = check.witness {
        return Err(ConsequenceError::Hypothesis(format!(
            "core zero sets of {} and {} share {}",
            o.first, o.second, o.shared
        )));
    }
    message_converse(n, capacity, eps, core.core.len())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Achievability {
    /// `log|S_O| / n < C`.
    pub hamming: bool,
    /// `log|A| / n < C`.
    pub closure: bool,
}

/// Channel-coding sufficient conditions for Hamming- and closure-reliable
/// transmission at blocklength `n`.
pub fn achievability(
    stored: usize,
    core: usize,
    n: usize,
    capacity: f64,
) -> Result<Achievability, ConsequenceError> {
    if n == 0 || core == 0 || stored < core {
        return Err(ConsequenceError::Parameter(
            "need n ≥ 1 and 1 ≤ |A| ≤ |S_O|".into(),
        ));
    }
    Ok(Achievability {
        hamming: (stored as f64).log2() / (n as f64) < capacity,
        closure: (core as f64).log2() / (n as f64) < capacity,
    })
}

/// Benchmark blocklengths. These ignore finite-blocklength backoff and are
/// heuristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blocklength {
    pub n_hamming: u64,
    pub n_closure: u64,
    /// `log|A| / log|S_O|`.
    pub ratio: f64,
}

pub fn blocklength_benchmarks(
    stored: usize,
    core: usize,
    capacity: f64,
) -> Result<Blocklength, ConsequenceError> {
    if core == 0 || stored < core {
        return Err(ConsequenceError::Parameter("need 1 ≤ |A| ≤ |S_O|".into()));
    }
    if !(capacity > 0.0) {
        return Err(ConsequenceError::Parameter(
            "capacity must be positive".into(),
        ));
    }
    let ls = (stored as f64).log2();
    let la = (core as f64).log2();
    Ok(Blocklength {
        n_hamming: (ls / capacity).ceil() as u64,
        n_closure: (la / capacity).ceil() as u64,
        ratio: if core == stored { 1.0 } else { la / ls },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanoReport {
    pub information: f64,
    /// `ε_Cn`, the probability of positive closure distortion.
    pub error: f64,
    pub bound: f64,
}

/// The closure-adapted Fano bound for a test kernel with rows in stored
/// order and columns in reconstruction-alphabet order.
pub fn fano_bound(
    source: &DeductiveSource,
    kernel: &Kernel,
) -> Result<FanoReport, ConsequenceError> {
    if kernel.inputs() != source.stored().len() || kernel.outputs() != source.recon().len() {
        return Err(ConsequenceError::Parameter(format!(
            "kernel is {}x{}, source needs {}x{}",
            kernel.inputs(),
            kernel.outputs(),
            source.stored().len(),
            source.recon().len()
        )));
    }
    if let Some(i) = source.probs().iter().position(|&p| p <= 0.0) {
        return Err(ConsequenceError::Hypothesis(format!(
            "{} has zero probability",
            source.stored()[i]
        )));
    }
    if let Some(c) = source
        .recon()
        .iter()
        .find(|c| !source.closure().contains(*c))
    {
        return Err(ConsequenceError::Hypothesis(format!(
            "{c} lies outside Cn(S_O)"
        )));
    }
    let core = extract_core(source);
    let a = core.core.len();
    if a >= 2 {
        if let Some(o) = check_core_disjoint(source).witness {
            return Err(ConsequenceError::Hypothesis(format!(
                "core zero sets of {} and {} share {}",
                o.first, o.second, o.shared
            )));
        }
    }
    let sets = recon_sets(source, ReconVariant::Unbounded);
    let error: f64 = core
        .core_idx
        .iter()
        .map(|&i| {
            let miss: f64 = (0..kernel.outputs())
                .filter(|j| !sets.sets[i].contains(j))
                .map(|j| kernel.rows[i][j])
                .sum();
            source.probs()[i] * miss
        })
        .sum::<f64>()
        .clamp(0.0, 1.0);
    let information = mutual_information(source.probs(), kernel);
    let bound = if a >= 2 {
        core.weighted_entropy() - binary_entropy(error)? - error * ((a - 1) as f64).log2()
    } else {
        0.0
    };
    Ok(FanoReport {
        information,
        error,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;
    use crate::generators::{example, ExampleName};
    use crate::source::ReconSpec;

    #[test]
    fn verdicts() {
        assert_eq!(
            compare(Rate::Bits(2.0 / 3.0), 1.0),
            SeparationVerdict::Achievable
        );
        assert_eq!(compare(Rate::Bits(1.0), 1.0), SeparationVerdict::Boundary);
        assert_eq!(
            compare(Rate::Bits(1.5), 1.0),
            SeparationVerdict::NotAchievable
        );
        assert_eq!(
            compare(Rate::Infinite, 1e300),
            SeparationVerdict::NotAchievable
        );
    }

    #[test]
    fn separation_on_minimal_example() {
        let src = example(ExampleName::Min);
        let noiseless = ChannelModel::bsc(0.0).unwrap();
        assert!((noiseless.capacity() - 1.0).abs() < 1e-9);
        let r = separation_check(&src, &noiseless, 1.0, 0.0, SeparationMode::Unbounded).unwrap();
        assert_eq!(r.verdict, SeparationVerdict::Achievable);
        let r = separation_check(&src, &noiseless, 0.5, 0.0, SeparationMode::Unbounded).unwrap();
        assert_eq!(r.verdict, SeparationVerdict::NotAchievable);
        let r = separation_check(&src, &noiseless, 1.0, 0.0, SeparationMode::Depth(0)).unwrap();
        assert_eq!(r.verdict, SeparationVerdict::NotAchievable);
        assert!(separation_check(&src, &noiseless, 0.0, 0.0, SeparationMode::Unbounded).is_err());
    }

    #[test]
    fn separation_with_infinite_rate() {
        let src = example(ExampleName::Restrict);
        let ch = ChannelModel::bsc(0.0).unwrap();
        let r = separation_check(&src, &ch, 1e6, 0.0, SeparationMode::Unbounded).unwrap();
        assert_eq!(r.rate, Rate::Infinite);
        assert_eq!(r.verdict, SeparationVerdict::NotAchievable);
    }

    #[test]
    fn thresholds_on_two_step_example() {
        let src = example(ExampleName::Depth);
        let ch = ChannelModel::bsc(0.0).unwrap();
        let t = depth_thresholds(&src, &ch, 1.0).unwrap();
        assert_eq!((t.achievable, t.necessary), (Some(2), Some(2)));
        assert_eq!(t.regime, DepthRegime::Intermediate);
        let t = depth_thresholds(&src, &ch, 3.0).unwrap();
        assert_eq!((t.achievable, t.necessary), (Some(0), Some(0)));
        assert_eq!(t.regime, DepthRegime::NoInference);
        let t = depth_thresholds(&src, &ch, 0.25).unwrap();
        assert_eq!((t.achievable, t.necessary), (None, None));
        assert_eq!(t.regime, DepthRegime::Unreachable);
        // κC equal to φ(2): necessary reached, achievable never
        let t = depth_thresholds(&src, &ch, 0.5).unwrap();
        assert_eq!((t.achievable, t.necessary), (None, Some(2)));
        assert_eq!(t.regime, DepthRegime::Boundary);
    }

    #[test]
    fn converse_values() {
        let r = message_converse(10, 0.5, 0.1, 64).unwrap();
        assert!((r.bound - 6.0 / 0.9).abs() < 1e-12);
        assert_eq!(r.log_count, 6.0);
        assert!(r.consistent);
        assert_eq!(message_converse(3, 1.0, 0.0, 2).unwrap().bound, 4.0);
        assert!(message_converse(1, 0.0, 0.0, 1).unwrap().consistent);
        assert!(message_converse(1, 0.0, 0.0, 4)
            .map(|r| !r.consistent)
            .unwrap());
        assert!(message_converse(1, 1.0, 1.0, 2).is_err());
        assert!(closure_converse(&example(ExampleName::Conf), 1, 1.0, 0.0).is_err());
        let r = closure_converse(&example(ExampleName::Min), 1, 0.0, 0.0).unwrap();
        assert_eq!(r.log_count, 1.0);
    }

    #[test]
    fn blocklengths() {
        let b = blocklength_benchmarks(4, 2, 1.0).unwrap();
        assert_eq!((b.n_hamming, b.n_closure, b.ratio), (2, 1, 0.5));
        assert_eq!(blocklength_benchmarks(7, 7, 0.3).unwrap().ratio, 1.0);
        let b = blocklength_benchmarks(45105, 1705, 0.8).unwrap();
        assert_eq!(format!("{:.3}", b.ratio), "0.694");
        assert!(blocklength_benchmarks(4, 2, 0.0).is_err());
        let a = achievability(4, 2, 1, 1.5).unwrap();
        assert!(!a.hamming && a.closure);
    }

    #[test]
    fn fano_endpoints() {
        let src = example(ExampleName::Min);
        // stored a, b, c; recon a, b, c
        let exact = Kernel::identity(3);
        let r = fano_bound(&src, &exact).unwrap();
        assert_eq!(r.error, 0.0);
        assert!((r.bound - 2.0 / 3.0).abs() < 1e-12);
        assert!(r.information >= r.bound);
        let single = DeductiveSource::uniform(
            parse_program("b :- a.").unwrap(),
            vec![
                crate::datalog::GroundFact::prop("a"),
                crate::datalog::GroundFact::prop("b"),
            ],
            ReconSpec::Stored,
        )
        .unwrap();
        let r = fano_bound(
            &single,
            &Kernel::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap(),
        )
        .unwrap();
        assert_eq!(r.bound, 0.0);
        assert!(fano_bound(&example(ExampleName::Conf), &Kernel::identity(4)).is_err());
    }

    #[test]
    fn channel_csv() {
        let labelled = "input,y0,y1\nx0,0.9,0.1\nx1,0.1,0.9\n";
        let ch = ChannelModel::from_csv(labelled).unwrap();
        assert_eq!(ch.inputs, vec!["x0", "x1"]);
        assert_eq!(ch.outputs, vec!["y0", "y1"]);
        let oracle = 1.0 - binary_entropy(0.1).unwrap();
        assert!((ch.capacity() - oracle).abs() < 1e-9);
        let bare = ChannelModel::from_csv("a,b\n1,0\n0,1\n").unwrap();
        assert_eq!(bare.inputs, vec!["0", "1"]);
        assert!((bare.capacity() - 1.0).abs() < 1e-9);
        let back = ChannelModel::from_csv(&ch.to_csv()).unwrap();
        assert_eq!(back.kernel, ch.kernel);
        assert!(ChannelModel::from_csv("a,b\n0.5\n").is_err());
        assert!(ChannelModel::from_csv("a,b\n0.5,0.6\n").is_err());
        assert!(ChannelModel::from_csv("a,b\nx,1\n").is_err());
    }
}
