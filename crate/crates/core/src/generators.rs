//! Deterministic instance construction: the worked examples, tag-seeded
//! Datalog instances and materialized supply-chain stores.
//!
//! All randomness comes from a `ChaCha8Rng` seeded with the spec's seed, so
//! the same spec always yields byte-identical instance files.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::datalog::{parse_program, FactSet, GroundFact, Program};
use crate::source::{extract_core, DeductiveSource, ReconSpec, SourceError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("unknown example `{0}`")]
    UnknownExample(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error(transparent)]
    Source(#[from] SourceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExampleName {
    /// `p ← q`, `q ← p`, plus an independent `r`.
    Order,
    /// `c ← a, b` over `{a, b, c}`.
    Min,
    /// Two-step chains `a → c → d` and `b → f → e`.
    Depth,
    /// Confusable core: `r ← a1, a2`, `a1 ← b, r`, `a2 ← b, r`.
    Conf,
    /// No rules over `{a, b}`, decoder restricted to `{a}`.
    Restrict,
}

impl ExampleName {
    pub const ALL: [ExampleName; 5] = [
        ExampleName::Order,
        ExampleName::Min,
        ExampleName::Depth,
        ExampleName::Conf,
        ExampleName::Restrict,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExampleName::Order => "EX_ORDER",
            ExampleName::Min => "EX_MIN",
            ExampleName::Depth => "EX_DEPTH",
            ExampleName::Conf => "EX_CONF",
            ExampleName::Restrict => "EX_RESTRICT",
        }
    }
}

impl fmt::Display for ExampleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExampleName {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        let key = upper.strip_prefix("EX_").unwrap_or(&upper);
        ExampleName::ALL
            .into_iter()
            .find(|n| &n.as_str()[3..] == key)
            .ok_or_else(|| GenError::UnknownExample(s.to_string()))
    }
}

fn props(names: &[&str]) -> Vec<GroundFact> {
    names.iter().map(|n| GroundFact::prop(n)).collect()
}

/// The worked example with a uniform distribution.
pub fn example(name: ExampleName) -> DeductiveSource {
    let (rules, stored, recon) = match name {
        ExampleName::Order => (
            "p :- q.\nq :- p.",
            props(&["p", "q", "r"]),
            ReconSpec::Stored,
        ),
        ExampleName::Min => ("c :- a, b.", props(&["a", "b", "c"]), ReconSpec::Stored),
        ExampleName::Depth => (
            "c :- a.\nd :- c.\nf :- b.\ne :- f.",
            props(&["a", "b", "d", "e"]),
            ReconSpec::Stored,
        ),
        ExampleName::Conf => (
            "r :- a1, a2.\na1 :- b, r.\na2 :- b, r.",
            props(&["a1", "a2", "b"]),
            ReconSpec::Explicit(props(&["a1", "a2", "b", "r"])),
        ),
        ExampleName::Restrict => ("", props(&["a", "b"]), ReconSpec::Explicit(props(&["a"]))),
    };
    let program = parse_program(rules).expect("example program parses");
    DeductiveSource::uniform(program, stored, recon).expect("example source is valid")
}

/// The restricted decoder alphabet `V = {a}` of the restricted example.
pub fn restrict_alphabet() -> Vec<GroundFact> {
    props(&["a"])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weights {
    #[default]
    Uniform,
    /// Independent uniform weights in `[0.05, 1)`, normalized.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TagSeededParams {
    /// Number of core facts, one per tag.
    pub k: usize,
    /// Stored chain facts per tag.
    pub depth: usize,
    pub weights: Weights,
}

/// `k` facts `core(t_i)` and, per tag, stored chain facts
/// `step1(t_i) .. step<depth>(t_i)`. Each `step_j` rule has a body of one or
/// two earlier levels of the same tag, chosen from the seed, so every rule
/// carries the tag of its premises and never introduces a new one. The
/// stored order is shuffled.
pub fn gen_tag_seeded(
    params: TagSeededParams,
    recon: ReconSpec,
    seed: u64,
) -> Result<DeductiveSource, GenError> {
    let TagSeededParams { k, depth, weights } = params;
    if k == 0 || depth == 0 {
        return Err(GenError::Parameter(
            "tag-seeded instances need k ≥ 1 and depth ≥ 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let level = |j: usize| {
        if j == 0 {
            "core".to_string()
        } else {
            format!("step{j}")
        }
    };
    let mut rules = String::new();
    for j in 1..=depth {
        let first = rng.random_range(0..j);
        let mut body = vec![level(first)];
        if j >= 2 && rng.random_bool(0.5) {
            let second = rng.random_range(0..j);
            if second != first {
                body.push(level(second));
            }
        }
        let body: Vec<String> = body.iter().map(|p| format!("{p}(X)")).collect();
        rules.push_str(&format!("{}(X) :- {}.\n", level(j), body.join(", ")));
    }
    let program = parse_program(&rules).map_err(SourceError::from)?;
    let mut stored: Vec<GroundFact> = (0..k)
        .flat_map(|t| (0..=depth).map(move |j| (t, j)))
        .map(|(t, j)| GroundFact::new(&level(j), [format!("t{t}")]))
        .collect();
    stored.shuffle(&mut rng);
    let probs = draw_weights(&mut rng, stored.len(), weights);
    Ok(DeductiveSource::new(program, stored, probs, recon)?)
}

fn draw_weights(rng: &mut ChaCha8Rng, n: usize, weights: Weights) -> Vec<f64> {
    match weights {
        Weights::Uniform => vec![1.0 / n as f64; n],
        Weights::Random => {
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|w| w / total).collect()
        }
    }
}

pub const SUPPLY_CHAIN_RULES: &str = "\
reachable(X, Y) :- connected(X, Y).
reachable(X, Z) :- reachable(X, Y), connected(Y, Z).
available(I, L) :- produces(S, I), supplies(S, L).
available(I, L) :- produces(S, I), supplies(S, L0), reachable(L0, L).
";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupplyChainParams {
    pub locations: usize,
    pub suppliers: usize,
    pub items: usize,
    /// Probability of each candidate EDB fact.
    pub density: f64,
    /// Materialization level `μ ∈ [0, 1]`.
    pub mu: f64,
}

impl Default for SupplyChainParams {
    fn default() -> Self {
        SupplyChainParams {
            locations: 8,
            suppliers: 3,
            items: 4,
            density: 0.2,
            mu: 0.5,
        }
    }
}

impl SupplyChainParams {
    fn validate(&self) -> Result<(), GenError> {
        if self.locations == 0 || self.suppliers == 0 || self.items == 0 {
            return Err(GenError::Parameter(
                "locations, suppliers and items must be positive".into(),
            ));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(GenError::Parameter(format!(
                "density {} not in (0, 1]",
                self.density
            )));
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(GenError::Parameter(format!("mu {} not in [0, 1]", self.mu)));
        }
        Ok(())
    }
}

/// Random EDB facts for the supply-chain program. Every supplier serves at
/// least one location and every item has at least one producer.
pub fn supply_chain_edb(
    params: &SupplyChainParams,
    seed: u64,
) -> Result<Vec<GroundFact>, GenError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loc = |i: usize| format!("l{i}");
    let sup = |i: usize| format!("s{i}");
    let item = |i: usize| format!("i{i}");
    let mut edb = Vec::new();
    for x in 0..params.locations {
        for y in 0..params.locations {
            if x != y && rng.random_bool(params.density) {
                edb.push(GroundFact::new("connected", [loc(x), loc(y)]));
            }
        }
    }
    for s in 0..params.suppliers {
        let forced = rng.random_range(0..params.locations);
        for l in 0..params.locations {
            if l == forced || rng.random_bool(params.density) {
                edb.push(GroundFact::new("supplies", [sup(s), loc(l)]));
            }
        }
    }
    for i in 0..params.items {
        let forced = rng.random_range(0..params.suppliers);
        for s in 0..params.suppliers {
            if s == forced || rng.random_bool(params.density) {
                edb.push(GroundFact::new("produces", [sup(s), item(i)]));
            }
        }
    }
    Ok(edb)
}

pub fn supply_chain_program() -> Program {
    parse_program(SUPPLY_CHAIN_RULES).expect("supply-chain program parses")
}

/// The derived IDB facts of `edb`, in sorted order.
pub fn supply_chain_idb(program: &Program, edb: &[GroundFact]) -> Vec<GroundFact> {
    let base: FactSet = edb.iter().cloned().collect();
    program
        .closure(&base)
        .into_iter()
        .filter(|f| !base.contains(f))
        .collect()
}

/// Stores the EDB followed by the first `⌈μ·|IDB|⌉` derived facts in sorted
/// order. Uniform distribution, reconstruction alphabet `S_O`.
pub fn gen_supply_chain(
    params: &SupplyChainParams,
    seed: u64,
) -> Result<DeductiveSource, GenError> {
    let edb = supply_chain_edb(params, seed)?;
    materialize(&edb, params.mu)
}

fn materialize(edb: &[GroundFact], mu: f64) -> Result<DeductiveSource, GenError> {
    let program = supply_chain_program();
    let idb = supply_chain_idb(&program, edb);
    let take = (mu * idb.len() as f64).ceil() as usize;
    let stored: Vec<GroundFact> = edb
        .iter()
        .cloned()
        .chain(idb.into_iter().take(take))
        .collect();
    Ok(DeductiveSource::uniform(
        program,
        stored,
        ReconSpec::Stored,
    )?)
}

/// `(|A|/|S_O|) log|A| / log|S_O|` and `log|A| / log|S_O|`, both 1 when
/// `|A| = |S_O|`.
pub fn compression_ratios(core: usize, stored: usize) -> (f64, f64) {
    if core == stored {
        return (1.0, 1.0);
    }
    let log_ratio = (core as f64).log2() / (stored as f64).log2();
    (core as f64 / stored as f64 * log_ratio, log_ratio)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub mu: f64,
    /// Materialized IDB facts `|J|`.
    pub materialized: usize,
    pub stored: usize,
    pub core: usize,
    /// `R_sem(0) / R(0; d_H)` under the uniform source.
    pub ratio: f64,
    pub log_ratio: f64,
}

/// One row per `μ`, all over the same EDB. `|A|` is taken from the extracted
/// core of each materialized instance.
pub fn materialization_sweep(
    params: &SupplyChainParams,
    mus: &[f64],
    seed: u64,
) -> Result<Vec<SweepRow>, GenError> {
    let edb = supply_chain_edb(params, seed)?;
    let mut rows = Vec::new();
    for &mu in mus {
        if !(0.0..=1.0).contains(&mu) {
            return Err(GenError::Parameter(format!("mu {mu} not in [0, 1]")));
        }
        let src = materialize(&edb, mu)?;
        let core = extract_core(&src).core.len();
        let stored = src.stored().len();
        let (ratio, log_ratio) = compression_ratios(core, stored);
        rows.push(SweepRow {
            mu,
            materialized: stored - edb.len(),
            stored,
            core,
            ratio,
            log_ratio,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Example(ExampleName),
    TagSeeded(TagSeededParams),
    SupplyChain(SupplyChainParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub family: Family,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<DeductiveSource, GenError> {
        match &self.family {
            Family::Example(name) => Ok(example(*name)),
            Family::TagSeeded(p) => gen_tag_seeded(*p, ReconSpec::Stored, self.seed),
            Family::SupplyChain(p) => gen_supply_chain(p, self.seed),
        }
    }

    /// Builds a spec from `key=value` pairs. Keys: `family` (`example`,
    /// `tag_seeded`, `supply_chain`), `name`, `k`, `depth`, `weights`
    /// (`uniform`, `random`), `locations`, `suppliers`, `items`, `density`,
    /// `mu`, `seed`. Missing numeric keys take defaults.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self, GenError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut family = None;
        let mut name = None;
        let mut seed = 0u64;
        let mut tag = TagSeededParams {
            k: 3,
            depth: 2,
            weights: Weights::Uniform,
        };
        let mut chain = SupplyChainParams::default();
        for (key, value) in pairs {
            let bad = |e: &dyn std::fmt::Display| {
                GenError::Parameter(format!("bad value `{value}` for `{key}`: {e}"))
            };
            match key.trim() {
                "family" => family = Some(value.trim().to_string()),
                "name" => name = Some(value.parse::<ExampleName>()?),
                "seed" => seed = value.trim().parse().map_err(|e| bad(&e))?,
                "k" => tag.k = value.trim().parse().map_err(|e| bad(&e))?,
                "depth" => tag.depth = value.trim().parse().map_err(|e| bad(&e))?,
                "weights" => {
                    tag.weights = match value.trim() {
                        "uniform" => Weights::Uniform,
                        "random" => Weights::Random,
                        _ => return Err(GenError::Parameter(format!("unknown weights `{value}`"))),
                    }
                }
                "locations" => chain.locations = value.trim().parse().map_err(|e| bad(&e))?,
                "suppliers" => chain.suppliers = value.trim().parse().map_err(|e| bad(&e))?,
                "items" => chain.items = value.trim().parse().map_err(|e| bad(&e))?,
                "density" => chain.density = value.trim().parse().map_err(|e| bad(&e))?,
                "mu" => chain.mu = value.trim().parse().map_err(|e| bad(&e))?,
                other => return Err(GenError::Parameter(format!("unknown key `{other}`"))),
            }
        }
        let family = match family.as_deref() {
            Some("example") => Family::Example(
                name.ok_or_else(|| GenError::Parameter("family=example needs name".into()))?,
            ),
            Some("tag_seeded") => Family::TagSeeded(tag),
            Some("supply_chain") => {
                chain.validate()?;
                Family::SupplyChain(chain)
            }
            Some(other) => return Err(GenError::Parameter(format!("unknown family `{other}`"))),
            None => match name {
                Some(n) => Family::Example(n),
                None => return Err(GenError::Parameter("missing `family`".into())),
            },
        };
        Ok(GeneratorSpec { family, seed })
    }

    /// `key=value` lines; blank lines and `#` comments are skipped.
    pub fn from_config_str(text: &str) -> Result<Self, GenError> {
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| GenError::Config {
                line: n + 1,
                message: format!("expected key=value, found `{line}`"),
            })?;
            pairs.push((k.trim(), v.trim()));
        }
        Self::from_pairs(pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::check_core_disjoint;
    use crate::source::essential_set;

    #[test]
    fn example_names_parse() {
        for n in ExampleName::ALL {
            assert_eq!(n.as_str().parse::<ExampleName>().unwrap(), n);
        }
        assert_eq!("min".parse::<ExampleName>().unwrap(), ExampleName::Min);
        assert!("EX_NOPE".parse::<ExampleName>().is_err());
    }

    #[test]
    fn example_shapes() {
        let min = example(ExampleName::Min);
        assert_eq!(min.stored().len(), 3);
        assert_eq!(extract_core(&min).core, props(&["a", "b"]));
        let conf = example(ExampleName::Conf);
        assert_eq!(conf.recon(), props(&["a1", "a2", "b", "r"]).as_slice());
    }

    #[test]
    fn tag_seeded_sizes_and_rate() {
        let params = TagSeededParams {
            k: 4,
            depth: 3,
            weights: Weights::Uniform,
        };
        let src = gen_tag_seeded(params, ReconSpec::Stored, 7).unwrap();
        assert_eq!(src.stored().len(), 16);
        let core = extract_core(&src);
        assert_eq!(core.core.len(), 4);
        assert!((core.weighted_entropy() - 0.5).abs() < 1e-12);
        assert!(check_core_disjoint(&src).holds);
    }

    #[test]
    fn tag_seeded_single_core_has_zero_rate() {
        let params = TagSeededParams {
            k: 1,
            depth: 2,
            weights: Weights::Random,
        };
        let src = gen_tag_seeded(params, ReconSpec::Closure, 3).unwrap();
        assert_eq!(extract_core(&src).weighted_entropy(), 0.0);
    }

    #[test]
    fn tag_seeded_rejects_empty() {
        let params = TagSeededParams {
            k: 0,
            depth: 1,
            weights: Weights::Uniform,
        };
        assert!(gen_tag_seeded(params, ReconSpec::Stored, 0).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GeneratorSpec::from_config_str(
            "family = supply_chain\nseed = 11\nmu = 0.3\n# comment\n",
        )
        .unwrap();
        let a = spec.generate().unwrap().to_instance_string();
        let b = spec.generate().unwrap().to_instance_string();
        assert_eq!(a, b);
        let other = GeneratorSpec {
            seed: 12,
            ..spec.clone()
        };
        assert_ne!(a, other.generate().unwrap().to_instance_string());
    }

    #[test]
    fn supply_chain_core_is_edb() {
        let params = SupplyChainParams {
            mu: 0.7,
            ..SupplyChainParams::default()
        };
        let edb = supply_chain_edb(&params, 5).unwrap();
        let src = gen_supply_chain(&params, 5).unwrap();
        assert_eq!(&src.stored()[..edb.len()], edb.as_slice());
        let mut sorted = edb.clone();
        sorted.sort();
        assert_eq!(
            extract_core(&src).core.iter().cloned().collect::<FactSet>(),
            sorted.iter().cloned().collect()
        );
        assert_eq!(essential_set(&src), sorted.into_iter().collect());
    }

    #[test]
    fn zero_materialization_stores_edb_only() {
        let params = SupplyChainParams {
            mu: 0.0,
            ..SupplyChainParams::default()
        };
        let src = gen_supply_chain(&params, 1).unwrap();
        assert_eq!(
            src.stored().len(),
            supply_chain_edb(&params, 1).unwrap().len()
        );
        assert_eq!(extract_core(&src).core.len(), src.stored().len());
    }

    #[test]
    fn sweep_ratios_decrease() {
        let rows = materialization_sweep(
            &SupplyChainParams::default(),
            &[0.0, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0],
            2,
        )
        .unwrap();
        assert_eq!(rows[0].ratio, 1.0);
        assert_eq!(rows[0].log_ratio, 1.0);
        for w in rows.windows(2) {
            assert!(w[1].ratio <= w[0].ratio);
            assert!(w[1].log_ratio <= w[0].log_ratio);
        }
    }

    #[test]
    fn ratio_arithmetic() {
        let (r, l) = compression_ratios(1705, 6045);
        assert_eq!(format!("{r:.3} {l:.3}"), "0.241 0.855");
        let (r, l) = compression_ratios(1705, 45105);
        assert_eq!(format!("{r:.3} {l:.3}"), "0.026 0.694");
    }

    #[test]
    fn config_errors() {
        assert!(GeneratorSpec::from_config_str("family=nope").is_err());
        assert!(GeneratorSpec::from_config_str("mu").is_err());
        assert!(GeneratorSpec::from_config_str("family=supply_chain\nmu=2").is_err());
        let spec = GeneratorSpec::from_config_str("name=EX_DEPTH").unwrap();
        assert_eq!(spec.family, Family::Example(ExampleName::Depth));
    }
}
