mod common;

use common::random_instance;
use deductive_rd::consequences::{compare, SeparationVerdict, BOUNDARY_TOLERANCE};
use deductive_rd::distortion::{check_core_coverage, check_core_disjoint, closure_distortion};
use deductive_rd::generators::{
    gen_supply_chain, gen_tag_seeded, materialization_sweep, SupplyChainParams, TagSeededParams,
    Weights,
};
use deductive_rd::rates::{zero_rate, Rate};
use deductive_rd::source::{extract_core, ReconSpec};
use proptest::prelude::*;

fn entropy_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

#[test]
fn tag_seeded_cores_are_tags_and_disjoint() {
    let mut count = 0;
    for k in 1..=5 {
        for depth in 1..=4 {
            for seed in 0..3 {
                let weights = if seed % 2 == 0 {
                    Weights::Uniform
                } else {
                    Weights::Random
                };
                let src = gen_tag_seeded(
                    TagSeededParams { k, depth, weights },
                    ReconSpec::Stored,
                    seed,
                )
                .unwrap();
                assert_eq!(src.stored().len(), k * (depth + 1));
                let core = extract_core(&src);
                assert_eq!(core.core.len(), k, "k={k} depth={depth} seed={seed}");
                assert!(core.core.iter().all(|f| f.predicate().as_str() == "core"));
                assert!(check_core_disjoint(&src).holds);
                assert!(check_core_coverage(&src).holds);
                count += 1;
            }
        }
    }
    assert!(count >= 50);
}

#[test]
fn generators_are_deterministic() {
    let p = TagSeededParams {
        k: 4,
        depth: 3,
        weights: Weights::Random,
    };
    let a = gen_tag_seeded(p, ReconSpec::Stored, 17).unwrap();
    let b = gen_tag_seeded(p, ReconSpec::Stored, 17).unwrap();
    assert_eq!(a.to_instance_string(), b.to_instance_string());
    let c = gen_tag_seeded(p, ReconSpec::Stored, 18).unwrap();
    assert_ne!(a.to_instance_string(), c.to_instance_string());

    let sc = SupplyChainParams::default();
    assert_eq!(
        gen_supply_chain(&sc, 3).unwrap().to_instance_string(),
        gen_supply_chain(&sc, 3).unwrap().to_instance_string()
    );
}

#[test]
fn materialization_grows_stored_set_but_not_core() {
    let params = SupplyChainParams::default();
    let mus = [0.0, 0.25, 0.5, 0.75, 1.0];
    for seed in 0..5 {
        let rows = materialization_sweep(&params, &mus, seed).unwrap();
        for w in rows.windows(2) {
            assert!(w[0].stored <= w[1].stored);
            assert_eq!(w[0].core, w[1].core);
            assert!(w[0].ratio >= w[1].ratio - 1e-12);
        }
        assert_eq!(rows[0].materialized, 0);
        assert_eq!(rows[0].ratio, 1.0);
    }
}

proptest! {
    #[test]
    fn separation_verdict_is_antisymmetric(x in 0.0f64..10.0, y in 0.0f64..10.0) {
        let forward = compare(Rate::Bits(x), y);
        let backward = compare(Rate::Bits(y), x);
        if (x - y).abs() > BOUNDARY_TOLERANCE {
            prop_assert_eq!(forward == SeparationVerdict::Achievable, backward == SeparationVerdict::NotAchievable);
        } else {
            prop_assert_eq!(forward, SeparationVerdict::Boundary);
            prop_assert_eq!(backward, SeparationVerdict::Boundary);
        }
    }

    #[test]
    fn infinite_rate_is_never_achievable(c in 0.0f64..1e6) {
        prop_assert_eq!(compare(Rate::Infinite, c), SeparationVerdict::NotAchievable);
    }

    #[test]
    fn closure_distortion_is_bounded_and_free_on_redundant_facts(seed in 0u64..500) {
        let src = random_instance(seed, 5, 6, ReconSpec::Stored);
        let core = extract_core(&src);
        for s in src.stored() {
            prop_assert_eq!(closure_distortion(&src, s, s), 0.0);
            for t in src.stored() {
                let d = closure_distortion(&src, s, t);
                prop_assert!((0.0..=1.0).contains(&d));
                if core.redundant.contains(s) {
                    prop_assert_eq!(d, 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_rate_lies_between_zero_and_core_entropy(seed in 0u64..500) {
        let src = random_instance(seed, 5, 6, ReconSpec::Stored);
        let core = extract_core(&src);
        let report = zero_rate(&src).unwrap();
        let upper = core.mass * core.cond.as_deref().map_or(0.0, entropy_bits);
        let r = report.value.bits();
        prop_assert!(r >= -1e-12);
        prop_assert!(r <= upper + 1e-9, "rate {} above core entropy {}", r, upper);
        prop_assert!(upper <= entropy_bits(src.probs()) + 1e-12);
    }
}
