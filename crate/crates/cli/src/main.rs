mod report;

use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use deductive_rd::consequences::{
    blocklength_benchmarks, closure_converse, compare, fano_bound, message_converse,
    thresholds_from_sweep, ChannelModel, ConsequenceError,
};
use deductive_rd::datalog::{parse_fact, GroundFact};
use deductive_rd::distortion::{
    check_core_coverage, check_core_disjoint, check_delta_disjoint, check_pairwise_realisability,
    closure_distortion, distortion_matrix, recon_sets, DistortionKind, ReconVariant,
    DEFAULT_CORE_CAP,
};
use deductive_rd::generators::{materialization_sweep, ExampleName, Family, GeneratorSpec};
use deductive_rd::info::{
    brute_force_min_information, distortion_range, BaOptions, Kernel, RdCurve,
};
use deductive_rd::rates::{
    build_gamma0, default_grid, even_grid, incompatibility_edges, rate_depth_curve,
    rate_depth_sweep, rate_depth_zero, rd_curve, rd_curve_direct, restricted_zero_rate, zero_rate,
    zero_rate_disjoint, zero_rate_general, zero_rate_graph, RateReport, RatesError,
};
use deductive_rd::source::{depth_profile, extract_core, is_order_robust, DeductiveSource};

use report::{Cell, Format, Report};

#[derive(Parser)]
#[command(
    name = "deductive-rd",
    version,
    about = "Rates of deductive sources under closure fidelity"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Solver stopping tolerance (nats).
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

/// An instance file, `-` for standard input, or an example name such as
/// `EX_MIN`.
#[derive(Args)]
struct Input {
    instance: String,
}

#[derive(Args)]
struct ChannelArgs {
    /// Channel matrix CSV (header of output labels).
    #[arg(long)]
    channel: Option<PathBuf>,
    /// Channel capacity in bits, instead of a channel file.
    #[arg(long, conflicts_with = "channel")]
    capacity: Option<f64>,
    /// Channel uses per source symbol.
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Irredundant core, essential set and order robustness.
    Core(Input),
    /// Assumption checks; exits 2 when any fails.
    Check {
        #[command(flatten)]
        input: Input,
        /// Also check δ-disjointness at this depth.
        #[arg(long)]
        delta: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_CORE_CAP)]
        cap: usize,
    },
    /// Zero-distortion rate.
    Rates {
        #[command(flatten)]
        input: Input,
        /// Zero distortion (the default; kept for explicitness).
        #[arg(long)]
        zero: bool,
        /// Force a regime instead of choosing one.
        #[arg(long, value_parser = ["auto", "disjoint", "graph", "hypergraph"], default_value = "auto")]
        regime: String,
        /// Depth budget δ: rate under δ-step distortion.
        #[arg(long, conflicts_with = "restrict")]
        delta: Option<usize>,
        /// File of facts (one per line) the decoder is restricted to.
        #[arg(long)]
        restrict: Option<PathBuf>,
        #[command(flatten)]
        channel: ChannelArgs,
    },
    /// Rate-distortion curve as a table.
    RdCurve {
        #[command(flatten)]
        input: Input,
        /// Number of grid points.
        #[arg(long, default_value_t = 33)]
        grid: usize,
        /// closure, hamming, delta or delta(N).
        #[arg(long, default_value = "closure")]
        distortion: String,
        /// Depth budget for the δ-step distortion.
        #[arg(long)]
        delta: Option<usize>,
        /// Plain Blahut-Arimoto on the full matrix, without core decomposition.
        #[arg(long)]
        direct: bool,
    },
    /// `φ(δ)` for every depth until the filtration stabilizes.
    DepthSweep(Input),
    /// Zero-distortion hypergraph, incompatibility graph and pairwise check.
    Hypergraph {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = DEFAULT_CORE_CAP)]
        cap: usize,
    },
    /// Depth-budget thresholds, separation verdict and blocklength benchmarks.
    Thresholds {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        channel: ChannelArgs,
        /// Blocklength for the message-set converse.
        #[arg(long)]
        n: Option<usize>,
        /// Error probability for the message-set converse.
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// Closure-adapted Fano bound for a test kernel.
    Fano {
        #[command(flatten)]
        input: Input,
        /// Test kernel CSV: rows in stored order, columns in
        /// reconstruction order.
        #[arg(long)]
        channel: PathBuf,
    },
    /// Generate an instance file.
    Gen(GenArgs),
    /// Compare the zero-distortion solver with an exhaustive grid search.
    Oracle {
        #[command(flatten)]
        input: Input,
        /// Grid spacing.
        #[arg(long, default_value_t = 0.02)]
        step: f64,
    },
}

#[derive(Args)]
struct GenArgs {
    /// example, tag_seeded or supply_chain.
    #[arg(long)]
    family: Option<String>,
    /// `key=value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Defaults to 0, or the config file's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Example name for `--family example`.
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    /// uniform or random.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    locations: Option<usize>,
    #[arg(long)]
    suppliers: Option<usize>,
    #[arg(long)]
    items: Option<usize>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Comma-separated materialization levels: print the sweep table instead.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<f64>>,
}

enum Failure {
    Usage(anyhow::Error),
    Validation(String, Option<Report>),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn rates_failure(e: RatesError) -> Failure {
    match e {
        RatesError::NotDisjoint(_)
        | RatesError::DeltaNotDisjoint { .. }
        | RatesError::CoreNotInRecon(_)
        | RatesError::ReconOutsideClosure(_)
        | RatesError::NotPairwiseRealisable(_) => Failure::Validation(e.to_string(), None),
        other => Failure::Usage(other.into()),
    }
}

fn consequence_failure(e: ConsequenceError) -> Failure {
    match e {
        ConsequenceError::Rates(r) => rates_failure(r),
        ConsequenceError::Hypothesis(_) => Failure::Validation(e.to_string(), None),
        other => Failure::Usage(other.into()),
    }
}

fn load(arg: &str) -> anyhow::Result<DeductiveSource> {
    let text = if arg == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        s
    } else if Path::new(arg).exists() {
        std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?
    } else if let Ok(name) = arg.parse::<ExampleName>() {
        return Ok(deductive_rd::generators::example(name));
    } else {
        bail!("`{arg}` is neither a file nor an example name");
    };
    DeductiveSource::from_instance_str(&text).with_context(|| format!("parsing {arg}"))
}

fn read_facts(path: &Path) -> anyhow::Result<Vec<GroundFact>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .map(|l| l.split('%').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| parse_fact(l).with_context(|| format!("in {}", path.display())))
        .collect()
}

fn read_channel(path: &Path) -> anyhow::Result<ChannelModel> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ChannelModel::from_csv(&text).with_context(|| format!("parsing {}", path.display()))
}

/// `κC` from either a channel file or a bare capacity.
fn budget(args: &ChannelArgs) -> anyhow::Result<Option<(f64, f64)>> {
    if !(args.kappa > 0.0) {
        bail!("--kappa must be positive");
    }
    let capacity = match (&args.channel, args.capacity) {
        (Some(p), _) => read_channel(p)?.capacity(),
        (None, Some(c)) if c >= 0.0 => c,
        (None, Some(_)) => bail!("--capacity must be non-negative"),
        (None, None) => return Ok(None),
    };
    Ok(Some((capacity, args.kappa * capacity)))
}

fn rate_report(r: &RateReport) -> Report {
    let mut out = Report::new()
        .field("rate", Cell::rate(r.value))
        .field("regime", Cell::Text(r.regime.to_string()))
        .field("core", Cell::facts(&r.core))
        .field("mass", Cell::Num(r.mass));
    for v in &r.assumptions {
        out.push(&format!("assumption.{}", v.name), Cell::Bool(v.holds));
        if let Some(d) = &v.detail {
            out.push(
                &format!("assumption.{}.detail", v.name),
                Cell::Text(d.clone()),
            );
        }
    }
    if let Some(edges) = &r.hyperedges {
        let shown: Vec<String> = edges.iter().map(|e| format!("{{{}}}", join(e))).collect();
        out.push("hyperedges", Cell::Facts(shown));
    }
    if !r.uncovered.is_empty() {
        out.push("uncovered", Cell::facts(&r.uncovered));
    }
    for (k, d) in r.downgrades.iter().enumerate() {
        out.push(&format!("downgrade.{k}"), Cell::Text(d.clone()));
    }
    out
}

fn join(facts: &[GroundFact]) -> String {
    facts
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn curve_report(curve: &RdCurve) -> Report {
    let rows = curve
        .points
        .iter()
        .map(|p| {
            vec![
                Cell::Num(p.distortion),
                Cell::Bits(p.rate),
                p.slope.map_or(Cell::Null, Cell::Num),
                Cell::Num(p.achieved),
                Cell::Int(p.iterations as u64),
            ]
        })
        .collect();
    Report::new()
        .field("d_min", Cell::Num(curve.d_min))
        .field("d_max", Cell::Num(curve.d_max))
        .table(&["D", "R", "slope", "achieved", "iterations"], rows)
}

fn run(cli: Cli) -> Result<Report, Failure> {
    let mut opts = BaOptions::default();
    if let Some(t) = cli.tolerance {
        if !(t > 0.0) {
            return Err(anyhow!("--tolerance must be positive").into());
        }
        opts.tolerance = t;
    }
    match cli.command {
        Command::Core(input) => {
            let src = load(&input.instance)?;
            let core = extract_core(&src);
            let rob = is_order_robust(&src);
            let mut out = Report::new()
                .field("stored", Cell::facts(src.stored()))
                .field("core", Cell::facts(&core.core))
                .field("redundant", Cell::facts(&core.redundant))
                .field("mass", Cell::Num(core.mass))
                .field("rate", Cell::Bits(core.weighted_entropy()));
            if let Some(cond) = &core.cond {
                out.push("cond", Cell::Nums(cond.clone()));
            }
            let ess: Vec<GroundFact> = rob.essential.iter().cloned().collect();
            Ok(out
                .field("essential", Cell::facts(&ess))
                .field("order_robust", Cell::Bool(rob.robust))
                .field("essential_generates", Cell::Bool(rob.essential_generates)))
        }
        Command::Check { input, delta, cap } => {
            let src = load(&input.instance)?;
            let mut out = Report::new();
            let mut ok = true;
            let disjoint = check_core_disjoint(&src);
            ok &= disjoint.holds;
            out.push("core_disjoint", Cell::Bool(disjoint.holds));
            if let Some(o) = &disjoint.witness {
                out.push(
                    "core_disjoint.witness",
                    Cell::Text(format!("{} and {} share {}", o.first, o.second, o.shared)),
                );
            }
            let coverage = check_core_coverage(&src);
            ok &= coverage.holds;
            out.push("core_coverage", Cell::Bool(coverage.holds));
            if !coverage.uncovered.is_empty() {
                out.push("core_coverage.uncovered", Cell::facts(&coverage.uncovered));
            }
            match check_pairwise_realisability(&src, cap) {
                Ok(p) => {
                    ok &= p.holds;
                    out.push("pairwise_realisability", Cell::Bool(p.holds));
                    if let Some(v) = &p.violating {
                        out.push("pairwise_realisability.witness", Cell::facts(v));
                    }
                }
                Err(e) => {
                    ok = false;
                    out.push("pairwise_realisability", Cell::Text(e.to_string()));
                }
            }
            let rob = is_order_robust(&src);
            ok &= rob.robust;
            out.push("order_robust", Cell::Bool(rob.robust));
            let outside: Vec<&GroundFact> = src
                .recon()
                .iter()
                .filter(|c| !src.closure().contains(*c))
                .collect();
            ok &= outside.is_empty();
            out.push("recon_in_closure", Cell::Bool(outside.is_empty()));
            if !outside.is_empty() {
                out.push("recon_in_closure.outside", Cell::facts(&outside));
            }
            if let Some(d) = delta {
                let c = check_delta_disjoint(&src, d);
                ok &= c.holds;
                out.push("delta_disjoint", Cell::Bool(c.holds));
                if let Some(o) = &c.witness {
                    out.push(
                        "delta_disjoint.witness",
                        Cell::Text(format!("{} and {} share {}", o.first, o.second, o.shared)),
                    );
                }
            }
            if ok {
                Ok(out)
            } else {
                Err(Failure::Validation(
                    "some assumption checks fail".into(),
                    Some(out),
                ))
            }
        }
        Command::Rates {
            input,
            zero: _,
            regime,
            delta,
            restrict,
            channel,
        } => {
            let src = load(&input.instance)?;
            let r = if let Some(path) = restrict {
                restricted_zero_rate(&src, &read_facts(&path)?).map_err(rates_failure)?
            } else if let Some(d) = delta {
                rate_depth_zero(&src, d).map_err(rates_failure)?
            } else {
                match regime.as_str() {
                    "disjoint" => zero_rate_disjoint(&src),
                    "graph" => zero_rate_graph(&src),
                    "hypergraph" => zero_rate_general(&src),
                    _ => zero_rate(&src),
                }
                .map_err(rates_failure)?
            };
            let mut out = rate_report(&r);
            if let Some((capacity, kappa_c)) = budget(&channel)? {
                out.push("capacity", Cell::Bits(capacity));
                out.push("kappa_c", Cell::Bits(kappa_c));
                let verdict = compare(r.value, kappa_c);
                out.push("separation", Cell::Text(verdict.to_string()));
            }
            Ok(out)
        }
        Command::RdCurve {
            input,
            grid,
            distortion,
            delta,
            direct,
        } => {
            let src = load(&input.instance)?;
            let mut kind: DistortionKind = distortion.parse().map_err(|e: String| anyhow!(e))?;
            if let Some(d) = delta {
                kind = DistortionKind::Delta(d);
            }
            if grid == 0 {
                return Err(anyhow!("--grid must be at least 1").into());
            }
            let curve = match kind {
                DistortionKind::Closure if !direct => {
                    let targets = default_grid(&src, grid).map_err(rates_failure)?;
                    rd_curve(&src, &targets, &opts).map_err(rates_failure)?
                }
                DistortionKind::Delta(d) if !direct => {
                    let profile = depth_profile(&src);
                    let targets = match profile.cond_at(d) {
                        Some(cond) => {
                            let m = deductive_rd::distortion::distortion_submatrix(
                                &src,
                                kind,
                                profile.core_idx_at(d),
                                src.recon(),
                            );
                            let (lo, hi) = distortion_range(cond, &m.values);
                            even_grid(lo * profile.mass_at(d), hi * profile.mass_at(d), grid)
                        }
                        None => vec![0.0],
                    };
                    rate_depth_curve(&src, &targets, d, &opts).map_err(rates_failure)?
                }
                _ => {
                    let m = distortion_matrix(&src, kind);
                    let (lo, hi) = distortion_range(src.probs(), &m.values);
                    rd_curve_direct(&src, kind, &even_grid(lo, hi, grid), &opts)
                        .map_err(rates_failure)?
                }
            };
            Ok(curve_report(&curve).field("distortion", Cell::Text(kind.to_string())))
        }
        Command::DepthSweep(input) => {
            let src = load(&input.instance)?;
            let sweep = rate_depth_sweep(&src).map_err(rates_failure)?;
            let rows = sweep
                .rows
                .iter()
                .map(|r| {
                    vec![
                        Cell::Int(r.delta as u64),
                        Cell::Int(r.core.len() as u64),
                        Cell::Num(r.mass),
                        Cell::Bits(r.phi),
                        Cell::facts(&r.core),
                    ]
                })
                .collect();
            Ok(Report::new()
                .field("max_depth", Cell::Int(sweep.max_depth as u64))
                .table(&["delta", "core_size", "mass", "phi", "core"], rows))
        }
        Command::Hypergraph { input, cap } => {
            let src = load(&input.instance)?;
            let gamma = build_gamma0(&src);
            let edges: Vec<String> = gamma
                .edge_facts()
                .iter()
                .zip(&gamma.witnesses)
                .map(|(e, w)| format!("{{{}}} via {w}", join(e)))
                .collect();
            let core = extract_core(&src);
            let sets = recon_sets(&src, ReconVariant::Unbounded);
            let incompatible: Vec<String> = incompatibility_edges(&src, &sets, &core.core_idx)
                .iter()
                .map(|(a, b)| format!("{a} -- {b}"))
                .collect();
            let zero_sets: Vec<String> = core
                .core_idx
                .iter()
                .map(|&i| format!("R({}) = {{{}}}", src.stored()[i], join(&sets.facts_of(i))))
                .collect();
            let mut out = Report::new()
                .field("core", Cell::facts(&core.core))
                .field("zero_sets", Cell::Facts(zero_sets))
                .field("hyperedges", Cell::Facts(edges))
                .field("uncovered", Cell::facts(&gamma.uncovered))
                .field("incompatibility_edges", Cell::Facts(incompatible));
            match check_pairwise_realisability(&src, cap) {
                Ok(p) => {
                    out.push("pairwise_realisability", Cell::Bool(p.holds));
                    if let Some(v) = &p.violating {
                        out.push("pairwise_realisability.witness", Cell::facts(v));
                    }
                }
                Err(e) => out.push("pairwise_realisability", Cell::Text(e.to_string())),
            }
            Ok(out)
        }
        Command::Thresholds {
            input,
            channel,
            n,
            eps,
        } => {
            let src = load(&input.instance)?;
            let (capacity, kappa_c) =
                budget(&channel)?.ok_or_else(|| anyhow!("need --channel or --capacity"))?;
            let sweep = rate_depth_sweep(&src).map_err(rates_failure)?;
            let t = thresholds_from_sweep(&sweep, kappa_c);
            let sep_rate = zero_rate(&src).map_err(rates_failure)?;
            let verdict = compare(sep_rate.value, kappa_c);
            let core = extract_core(&src);
            let mut out = Report::new()
                .field("capacity", Cell::Bits(capacity))
                .field("kappa", Cell::Num(channel.kappa))
                .field("kappa_c", Cell::Bits(kappa_c))
                .field("delta_ach", Cell::opt_depth(t.achievable))
                .field("delta_nec", Cell::opt_depth(t.necessary))
                .field("depth_regime", Cell::Text(t.regime.to_string()))
                .field("max_depth", Cell::Int(t.max_depth as u64))
                .field("zero_rate", Cell::rate(sep_rate.value))
                .field("separation", Cell::Text(verdict.to_string()));
            if capacity > 0.0 && !core.core.is_empty() {
                let b = blocklength_benchmarks(src.stored().len(), core.core.len(), capacity)
                    .map_err(consequence_failure)?;
                out.push("heuristic.n_hamming", Cell::Int(b.n_hamming));
                out.push("heuristic.n_closure", Cell::Int(b.n_closure));
                out.push("heuristic.ratio", Cell::Num(b.ratio));
            }
            if let Some(n) = n {
                let hamming = message_converse(n, capacity, eps, src.stored().len())
                    .map_err(consequence_failure)?;
                out.push("converse.bound", Cell::Bits(hamming.bound));
                out.push("converse.log_stored", Cell::Bits(hamming.log_count));
                out.push("converse.stored_consistent", Cell::Bool(hamming.consistent));
                if check_core_disjoint(&src).holds && !core.core.is_empty() {
                    let closure =
                        closure_converse(&src, n, capacity, eps).map_err(consequence_failure)?;
                    out.push("converse.log_core", Cell::Bits(closure.log_count));
                    out.push("converse.core_consistent", Cell::Bool(closure.consistent));
                }
            }
            let rows = t
                .phi
                .iter()
                .enumerate()
                .map(|(d, p)| vec![Cell::Int(d as u64), Cell::Bits(*p)])
                .collect();
            Ok(out.table(&["delta", "phi"], rows))
        }
        Command::Fano { input, channel } => {
            let src = load(&input.instance)?;
            let ch = read_channel(&channel)?;
            let kernel: Kernel = ch.kernel;
            let r = fano_bound(&src, &kernel).map_err(consequence_failure)?;
            Ok(Report::new()
                .field("information", Cell::Bits(r.information))
                .field("closure_error", Cell::Num(r.error))
                .field("bound", Cell::Bits(r.bound))
                .field("holds", Cell::Bool(r.information >= r.bound - 1e-12)))
        }
        Command::Gen(args) => generate(args),
        Command::Oracle { input, step } => {
            let src = load(&input.instance)?;
            let core = extract_core(&src);
            let solver = zero_rate_general(&src).map_err(rates_failure)?;
            let Some(cond) = &core.cond else {
                return Ok(Report::new()
                    .field("solver", Cell::rate(solver.value))
                    .field("oracle", Cell::Bits(0.0)));
            };
            let supports: Vec<Vec<usize>> = core
                .core
                .iter()
                .map(|a| {
                    (0..src.recon().len())
                        .filter(|&j| closure_distortion(&src, a, &src.recon()[j]) == 0.0)
                        .collect()
                })
                .collect();
            if supports.iter().any(Vec::is_empty) {
                return Ok(Report::new()
                    .field("solver", Cell::rate(solver.value))
                    .field("oracle", Cell::Text("inf".into())));
            }
            let bf = brute_force_min_information(cond, &supports, src.recon().len(), step)
                .map_err(|e| anyhow!(e))?;
            let oracle = core.mass * bf;
            Ok(Report::new()
                .field("solver", Cell::rate(solver.value))
                .field("oracle", Cell::Bits(oracle))
                .field("step", Cell::Num(step))
                .field("gap", Cell::Num(oracle - solver.value.bits())))
        }
    }
}

fn generate(args: GenArgs) -> Result<Report, Failure> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    if let Some(path) = &args.config {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        // validates the file and reports line numbers
        GeneratorSpec::from_config_str(&text).map_err(|e| anyhow!(e))?;
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if let Some((k, v)) = line.split_once('=') {
                pairs.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
    }
    let mut set = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            pairs.push((k.to_string(), v));
        }
    };
    set("family", args.family.clone());
    set("name", args.name.clone());
    set("k", args.k.map(|v| v.to_string()));
    set("depth", args.depth.map(|v| v.to_string()));
    set("weights", args.weights.clone());
    set("locations", args.locations.map(|v| v.to_string()));
    set("suppliers", args.suppliers.map(|v| v.to_string()));
    set("items", args.items.map(|v| v.to_string()));
    set("density", args.density.map(|v| v.to_string()));
    set("mu", args.mu.map(|v| v.to_string()));
    set("seed", args.seed.map(|v| v.to_string()));
    let spec = GeneratorSpec::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
        .map_err(|e| anyhow!(e))?;
    if let Some(mus) = &args.sweep {
        let Family::SupplyChain(params) = &spec.family else {
            return Err(anyhow!("--sweep needs --family supply_chain").into());
        };
        let rows = materialization_sweep(params, mus, spec.seed)
            .map_err(|e| anyhow!(e))?
            .iter()
            .map(|r| {
                vec![
                    Cell::Num(r.mu),
                    Cell::Int(r.materialized as u64),
                    Cell::Int(r.stored as u64),
                    Cell::Int(r.core as u64),
                    Cell::Num(r.ratio),
                    Cell::Num(r.log_ratio),
                ]
            })
            .collect();
        return Ok(Report::new().table(
            &["mu", "materialized", "stored", "core", "ratio", "log_ratio"],
            rows,
        ));
    }
    let src = spec.generate().map_err(|e| anyhow!(e))?;
    print!("{}", src.to_instance_string());
    Ok(Report::new())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let format = cli.format;
    let is_gen = matches!(cli.command, Command::Gen(ref a) if a.sweep.is_none());
    match run(cli) {
        Ok(report) => {
            if !is_gen {
                print!("{}", report.render(format));
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Validation(message, report)) => {
            if let Some(r) = report {
                print!("{}", r.render(format));
            }
            eprintln!("validation failed: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
