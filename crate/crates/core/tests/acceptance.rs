//! End-to-end acceptance checks. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::{hb, random_instance};
use deductive_rd::consequences::{compare, fano_bound, thresholds_from_sweep, SeparationVerdict};
use deductive_rd::datalog::{FactSet, GroundFact};
use deductive_rd::distortion::{
    check_core_disjoint, check_pairwise_realisability, closure_distortion, DistortionKind,
};
use deductive_rd::generators::{
    compression_ratios, example, gen_supply_chain, gen_tag_seeded, restrict_alphabet,
    supply_chain_edb, ExampleName, SupplyChainParams, TagSeededParams, Weights,
};
use deductive_rd::info::{
    ba_capacity, ba_rate_distortion, brute_force_min_information, mutual_information, BaOptions,
    Kernel,
};
use deductive_rd::rates::{
    build_gamma0, default_grid, rd_curve, rd_curve_direct, restricted_zero_rate,
    zero_rate_disjoint, zero_rate_general, zero_rate_graph, DepthRow, DepthSweep, Rate, RatesError,
};
use deductive_rd::source::{
    depth_profile, essential_set, extract_core, is_order_robust, DeductiveSource, ReconSpec,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn props(names: &[&str]) -> Vec<GroundFact> {
    names.iter().map(|n| GroundFact::prop(n)).collect()
}

fn set(names: &[&str]) -> FactSet {
    props(names).into_iter().collect()
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:?}, limit {limit:?}"))
}

fn minimal_example() -> Outcome {
    let start = Instant::now();
    let src = example(ExampleName::Min);
    let r = zero_rate_disjoint(&src).map_err(|e| e.to_string())?;
    let oracle = 2.0 / 3.0 * 1.0;
    let got = r.value.bits();
    ensure((got - oracle).abs() <= 1e-12, || {
        format!("R_sem(0) = {got}")
    })?;
    let hamming = rd_curve_direct(&src, DistortionKind::Hamming, &[0.0], &BaOptions::default())
        .map_err(|e| e.to_string())?
        .points[0]
        .rate;
    ensure((hamming - 3f64.ln() / 2f64.ln()).abs() <= 1e-9, || {
        format!("Hamming R(0) = {hamming}")
    })?;
    within(start, Duration::from_secs(1))?;
    Ok(format!(
        "R_sem(0) = {got:.15}, Hamming R(0) = {hamming:.12}"
    ))
}

fn two_step_example() -> Outcome {
    let start = Instant::now();
    let src = example(ExampleName::Depth);
    let sweep = deductive_rd::rates::rate_depth_sweep(&src).map_err(|e| e.to_string())?;
    let phi: Vec<f64> = sweep.rows.iter().map(|r| r.phi).collect();
    let expected = [2.0, 2.0, 0.5];
    ensure(
        phi.len() == 3 && phi.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12),
        || format!("phi = {phi:?}"),
    )?;
    ensure(sweep.max_depth == 2, || {
        format!("D_d = {}", sweep.max_depth)
    })?;
    let a1: FactSet = sweep.rows[1].core.iter().cloned().collect();
    let a2: FactSet = sweep.rows[2].core.iter().cloned().collect();
    ensure(a1 == src.stored_set(), || format!("A_1 = {a1:?}"))?;
    ensure(a2 == set(&["a", "b"]), || format!("A_2 = {a2:?}"))?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("phi = {phi:?}, D_d = 2"))
}

fn order_dependence() -> Outcome {
    let src = example(ExampleName::Order);
    // stored order p, q, r
    let pqr = extract_core(&src).core_set();
    let qpr = extract_core(&src.permuted(&[1, 0, 2])).core_set();
    ensure(pqr == set(&["q", "r"]), || format!("p<q<r core {pqr:?}"))?;
    ensure(qpr == set(&["p", "r"]), || format!("q<p<r core {qpr:?}"))?;
    let program = src.program();
    ensure(program.closure(&pqr) == program.closure(&qpr), || {
        "closures differ".into()
    })?;
    let ess = essential_set(&src);
    ensure(ess.is_subset(&pqr) && ess.is_subset(&qpr), || {
        format!("Ess = {ess:?}")
    })?;
    Ok(format!("cores {{q,r}} and {{p,r}}, Ess = {ess:?}"))
}

fn confusable_example() -> Outcome {
    let src = example(ExampleName::Conf);
    match zero_rate_disjoint(&src) {
        Err(RatesError::NotDisjoint(o)) => ensure(o.shared == GroundFact::prop("r"), || {
            format!("witness {}", o.shared)
        })?,
        other => return Err(format!("disjointness did not fail: {other:?}")),
    }
    let gamma = build_gamma0(&src);
    let edges: BTreeSet<FactSet> = gamma
        .edge_facts()
        .into_iter()
        .map(|e| e.into_iter().collect())
        .collect();
    let expected: BTreeSet<FactSet> = [set(&["a1", "a2"]), set(&["b"])].into_iter().collect();
    ensure(edges == expected, || format!("edges {edges:?}"))?;
    let general = zero_rate_general(&src)
        .map_err(|e| e.to_string())?
        .value
        .bits();
    let oracle = hb(1.0 / 3.0);
    ensure(
        (general - oracle).abs() <= 1e-6 && (oracle - 0.918296).abs() < 1e-6,
        || format!("general {general}, oracle {oracle}"),
    )?;
    // grid oracle: each core fact may go to any symbol at closure distortion 0
    let core = extract_core(&src);
    let supports: Vec<Vec<usize>> = core
        .core
        .iter()
        .map(|a| {
            (0..src.recon().len())
                .filter(|&j| closure_distortion(&src, a, &src.recon()[j]) == 0.0)
                .collect()
        })
        .collect();
    let cond = core.cond.clone().ok_or("empty core")?;
    let bf = core.mass
        * brute_force_min_information(&cond, &supports, src.recon().len(), 0.02)
            .map_err(|e| e.to_string())?;
    ensure(general <= bf + 1e-12 && bf - general <= 0.02, || {
        format!("grid oracle {bf}")
    })?;
    let pairwise = check_pairwise_realisability(&src, 16).map_err(|e| e.to_string())?;
    ensure(pairwise.holds, || {
        format!("pairwise fails on {:?}", pairwise.violating)
    })?;
    let graph = zero_rate_graph(&src)
        .map_err(|e| e.to_string())?
        .value
        .bits();
    ensure((graph - general).abs() <= 1e-9, || format!("graph {graph}"))?;
    Ok(format!(
        "general {general:.9}, grid {bf:.9}, graph {graph:.9}"
    ))
}

fn restricted_alphabet() -> Outcome {
    let src = example(ExampleName::Restrict);
    let r = restricted_zero_rate(&src, &restrict_alphabet()).map_err(|e| e.to_string())?;
    ensure(r.value == Rate::Infinite, || format!("rate {}", r.value))?;
    Ok(format!("rate {}, uncovered {:?}", r.value, r.uncovered))
}

fn table_arithmetic() -> Outcome {
    let rows = [
        (6045, "0.241", "0.855"),
        (10385, "0.132", "0.805"),
        (14725, "0.090", "0.775"),
        (23405, "0.054", "0.740"),
        (36425, "0.033", "0.709"),
        (45105, "0.026", "0.694"),
    ];
    let mut mismatches = Vec::new();
    for (stored, ratio, log_ratio) in rows {
        let (r, l) = compression_ratios(1705, stored);
        let got = (format!("{r:.3}"), format!("{l:.3}"));
        if got != (ratio.to_string(), log_ratio.to_string()) {
            mismatches.push(format!(
                "|S_O| = {stored}: computed ({r:.6}, {l:.6}), printed ({ratio}, {log_ratio})"
            ));
        }
    }
    ensure(mismatches.is_empty(), || mismatches.join("; "))?;
    let (r, l) = compression_ratios(1705, 1705);
    ensure(format!("{r:.3} {l:.3}") == "1.000 1.000", || {
        "μ = 0 row".into()
    })?;
    Ok("6 rows match to 3 decimals".into())
}

fn decomposition() -> Outcome {
    let start = Instant::now();
    let shapes = [
        (1, 1),
        (1, 2),
        (1, 3),
        (1, 4),
        (1, 5),
        (2, 1),
        (2, 2),
        (3, 1),
    ];
    let opts = BaOptions::default();
    let mut worst = 0.0f64;
    let mut count = 0;
    for seed in 0..24u64 {
        let (k, depth) = shapes[seed as usize % shapes.len()];
        let params = TagSeededParams {
            k,
            depth,
            weights: Weights::Random,
        };
        let src = gen_tag_seeded(params, ReconSpec::Closure, seed).map_err(|e| e.to_string())?;
        ensure(src.stored().len() <= 6, || "instance too large".into())?;
        let grid = default_grid(&src, 33).map_err(|e| e.to_string())?;
        let decomposed = rd_curve(&src, &grid, &opts).map_err(|e| format!("seed {seed}: {e}"))?;
        let direct = rd_curve_direct(&src, DistortionKind::Closure, &grid, &opts)
            .map_err(|e| format!("seed {seed}: {e}"))?;
        for (a, b) in decomposed.points.iter().zip(&direct.points) {
            let gap = (a.rate - b.rate).abs();
            worst = worst.max(gap);
            ensure(gap <= 1e-5, || {
                format!(
                    "seed {seed}, D = {}: {} vs {}",
                    a.distortion, a.rate, b.rate
                )
            })?;
        }
        count += 1;
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "{count} instances, max gap {worst:.2e}, {:?}",
        start.elapsed()
    ))
}

fn solver_sanity() -> Outcome {
    let p = [0.5, 0.5];
    let d = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    let targets: Vec<f64> = (0..10).map(|k| k as f64 * 0.05).collect();
    let curve =
        ba_rate_distortion(&p, &d, &targets, &BaOptions::default()).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for pt in &curve.points {
        let gap = (pt.rate - (1.0 - hb(pt.distortion))).abs();
        worst = worst.max(gap);
        ensure(gap <= 1e-4, || {
            format!("D = {}: {}", pt.distortion, pt.rate)
        })?;
    }
    let bsc = Kernel::new(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).map_err(|e| e.to_string())?;
    let c = ba_capacity(&bsc, &BaOptions::default())
        .map_err(|e| e.to_string())?
        .bits;
    ensure((c - (1.0 - hb(0.1))).abs() <= 1e-6, || {
        format!("capacity {c}")
    })?;
    Ok(format!("max R(D) gap {worst:.2e}, C(BSC 0.1) = {c:.9}"))
}

fn fano() -> Outcome {
    let src = example(ExampleName::Min);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (n, m) = (src.stored().len(), src.recon().len());
    let mut min_slack = f64::INFINITY;
    for trial in 0..1000 {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                // sparse rows now and then, to reach the zero-error corner
                let raw: Vec<f64> = (0..m)
                    .map(|_| {
                        if rng.random_bool(0.2) {
                            0.0
                        } else {
                            rng.random::<f64>()
                        }
                    })
                    .collect();
                let total: f64 = raw.iter().sum();
                if total == 0.0 {
                    let mut r = vec![0.0; m];
                    r[rng.random_range(0..m)] = 1.0;
                    r
                } else {
                    raw.iter().map(|x| x / total).collect()
                }
            })
            .collect();
        let kernel = Kernel::new(rows).map_err(|e| e.to_string())?;
        let report = fano_bound(&src, &kernel).map_err(|e| e.to_string())?;
        let info = mutual_information(src.probs(), &kernel);
        let slack = info - report.bound;
        min_slack = min_slack.min(slack);
        ensure(slack >= -1e-12, || {
            format!("trial {trial}: I = {info}, bound = {}", report.bound)
        })?;
    }
    Ok(format!("1000 kernels, min slack {min_slack:.3e}"))
}

fn filtration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut robust = 0;
    let mut n = 0;
    for seed in 0..60u64 {
        let src = if seed % 2 == 0 {
            let params = TagSeededParams {
                k: rng.random_range(1..=4),
                depth: rng.random_range(1..=4),
                weights: Weights::Random,
            };
            gen_tag_seeded(params, ReconSpec::Stored, seed).map_err(|e| e.to_string())?
        } else {
            random_instance(seed, 6, 7, ReconSpec::Stored)
        };
        n += 1;
        let profile = depth_profile(&src);
        let sets: Vec<FactSet> = profile
            .cores_by_depth
            .iter()
            .map(|c| c.iter().cloned().collect())
            .collect();
        ensure(sets[0] == src.stored_set(), || {
            format!("seed {seed}: A_0 != S_O")
        })?;
        for d in 0..sets.len() - 1 {
            ensure(sets[d + 1].is_subset(&sets[d]), || {
                format!("seed {seed}: A_{} not inside A_{d}", d + 1)
            })?;
            ensure(profile.phi(d + 1) <= profile.phi(d) + 1e-12, || {
                format!("seed {seed}: phi increases at {d}")
            })?;
        }
        let rob = is_order_robust(&src);
        if rob.robust {
            robust += 1;
            for d in profile.max_depth..profile.max_depth + 3 {
                let a: FactSet = profile.core_at(d).iter().cloned().collect();
                ensure(a == rob.core, || format!("seed {seed}: A_{d} != Atom"))?;
            }
        }
        let sweep = DepthSweep {
            rows: (0..=profile.last())
                .map(|d| DepthRow {
                    delta: d,
                    core: profile.core_at(d).to_vec(),
                    mass: profile.mass_at(d),
                    phi: profile.phi(d),
                })
                .collect(),
            max_depth: profile.max_depth,
        };
        for _ in 0..5 {
            let kc = rng.random_range(0.0..3.0);
            let t = thresholds_from_sweep(&sweep, kc);
            let nec = t.necessary.unwrap_or(usize::MAX);
            let ach = t.achievable.unwrap_or(usize::MAX);
            ensure(nec <= ach, || format!("seed {seed}: nec {nec} > ach {ach}"))?;
        }
        // exact boundary: κC equal to some φ value
        let kc = profile.phi(profile.last());
        let t = thresholds_from_sweep(&sweep, kc);
        ensure(
            t.necessary.unwrap_or(usize::MAX) <= t.achievable.unwrap_or(usize::MAX),
            || format!("seed {seed}: boundary thresholds"),
        )?;
        ensure(
            compare(Rate::Bits(kc), kc) == SeparationVerdict::Boundary,
            || "boundary verdict".into(),
        )?;
    }
    ensure(n >= 50, || "too few instances".into())?;
    Ok(format!("{n} instances, {robust} order-robust"))
}

fn edb_idb() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut total_stored = 0;
    for seed in 0..20u64 {
        let params = SupplyChainParams {
            locations: rng.random_range(3..=7),
            suppliers: rng.random_range(1..=3),
            items: rng.random_range(1..=4),
            density: rng.random_range(0.15..0.5),
            mu: rng.random_range(0.2..=1.0),
        };
        let src = gen_supply_chain(&params, seed).map_err(|e| e.to_string())?;
        let edb: FactSet = supply_chain_edb(&params, seed)
            .map_err(|e| e.to_string())?
            .into_iter()
            .collect();
        total_stored += src.stored().len();
        let mut order: Vec<usize> = (0..src.stored().len()).collect();
        for _ in 0..20 {
            order.shuffle(&mut rng);
            let core = extract_core(&src.permuted(&order)).core_set();
            ensure(core == edb, || {
                format!("seed {seed}: core {} facts, EDB {}", core.len(), edb.len())
            })?;
        }
    }
    Ok(format!(
        "20 instances x 20 orders, {total_stored} stored facts in total"
    ))
}

fn regimes() -> Outcome {
    let mut disjoint = 0;
    let mut pairwise = 0;
    let mut sources: Vec<DeductiveSource> = (0..80u64)
        .map(|s| random_instance(1000 + s, 5, 8, ReconSpec::Closure))
        .collect();
    sources.push(example(ExampleName::Conf));
    sources.push(example(ExampleName::Min));
    for (i, src) in sources.iter().enumerate() {
        let general = zero_rate_general(src).map_err(|e| e.to_string())?.value;
        if check_core_disjoint(src).holds {
            if let Ok(d) = zero_rate_disjoint(src) {
                disjoint += 1;
                let gap = (general.bits() - d.value.bits()).abs();
                ensure(gap <= 1e-9, || {
                    format!("instance {i}: general {general} vs disjoint {}", d.value)
                })?;
            }
        }
        if check_pairwise_realisability(src, 16)
            .map_err(|e| e.to_string())?
            .holds
        {
            pairwise += 1;
            let g = zero_rate_graph(src).map_err(|e| e.to_string())?.value;
            let same = match (g, general) {
                (Rate::Infinite, Rate::Infinite) => true,
                (Rate::Bits(a), Rate::Bits(b)) => (a - b).abs() <= 1e-9,
                _ => false,
            };
            ensure(same, || {
                format!("instance {i}: graph {g} vs general {general}")
            })?;
        }
    }
    ensure(disjoint > 0 && pairwise > 0, || {
        "no instance exercised a regime".into()
    })?;
    Ok(format!(
        "{} instances, {disjoint} disjoint, {pairwise} pairwise-realisable",
        sources.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("minimal redundancy example", minimal_example),
        ("two-step shortcut sweep", two_step_example),
        ("order-dependent cores", order_dependence),
        ("confusable core", confusable_example),
        ("restricted alphabet", restricted_alphabet),
        ("compression table arithmetic", table_arithmetic),
        ("core decomposition vs direct BA", decomposition),
        ("solver sanity", solver_sanity),
        ("closure Fano bound", fano),
        ("depth filtration", filtration),
        ("EDB/IDB order invariance", edb_idb),
        ("regime consistency", regimes),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", k + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
