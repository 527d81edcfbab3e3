#![allow(dead_code)]

use deductive_rd::datalog::{parse_program, GroundFact};
use deductive_rd::source::{DeductiveSource, ReconSpec};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random propositional program over `x0..x{atoms-1}` with up to
/// `max_rules` rules of one or two body atoms, and a random nonempty stored
/// subset with random weights.
pub fn random_instance(
    seed: u64,
    atoms: usize,
    max_rules: usize,
    recon: ReconSpec,
) -> DeductiveSource {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    for _ in 0..rng.random_range(0..=max_rules) {
        let head = rng.random_range(0..atoms);
        let b1 = rng.random_range(0..atoms);
        let body = if rng.random_bool(0.5) {
            format!("x{b1}")
        } else {
            format!("x{b1}, x{}", rng.random_range(0..atoms))
        };
        text.push_str(&format!("x{head} :- {body}.\n"));
    }
    let program = parse_program(&text).expect("generated program parses");
    let mut names: Vec<usize> = (0..atoms).collect();
    names.shuffle(&mut rng);
    let n = rng.random_range(1..=atoms);
    let stored: Vec<GroundFact> = names[..n]
        .iter()
        .map(|i| GroundFact::prop(&format!("x{i}")))
        .collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let probs = raw.iter().map(|w| w / total).collect();
    DeductiveSource::new(program, stored, probs, recon).expect("generated source is valid")
}

/// `-p log2 p - (1-p) log2 (1-p)`, written out independently of the crate.
pub fn hb(p: f64) -> f64 {
    let t = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    t(p) + t(1.0 - p)
}
