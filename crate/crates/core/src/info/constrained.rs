//! Minimum mutual information when each source symbol may only be mapped
//! into an allowed set of outputs.
//!
//! For an output distribution `q`, the best kernel is `Q(y|x) = q_y / q(S_x)`
//! on `S_x`, with value at most `f(q) = -Σ_x p_x ln q(S_x)`. `f` is convex and
//! the EM update `q_y <- q_y g_y`, `g_y = Σ_{x: y ∈ S_x} p_x / q(S_x)`, never
//! increases it. Jensen gives `f(q) - min f <= ln max_y g_y`, which is the
//! stopping certificate.

use super::{mutual_information, InfoError, Kernel};

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstrainedOptions {
    /// Certificate threshold in nats.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Certificate accepted when `max_iterations` runs out. Boundary optima
    /// converge sublinearly under EM.
    pub max_residual: f64,
}

impl Default for ConstrainedOptions {
    fn default() -> Self {
        ConstrainedOptions {
            tolerance: 1e-12,
            max_iterations: 1_000_000,
            max_residual: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedSolution {
    /// `I` of the returned kernel, in bits.
    pub bits: f64,
    pub kernel: Kernel,
    /// Output distribution `q` at termination.
    pub output: Vec<f64>,
    pub iterations: usize,
    /// Upper bound (nats) on the distance to the optimum.
    pub certificate: f64,
    /// `f(q_t)` in bits, one entry per iteration.
    pub history: Vec<f64>,
}

/// `min I(X; Y)` over kernels with `supp Q(.|x) ⊆ supports[x]`. Outputs are
/// `0..outputs`; source symbols with zero probability get arbitrary allowed
/// rows.
pub fn min_information_constrained(
    p: &[f64],
    supports: &[Vec<usize>],
    outputs: usize,
    opts: &ConstrainedOptions,
) -> Result<ConstrainedSolution, InfoError> {
    if p.len() != supports.len() {
        return Err(InfoError::Dimension(format!(
            "{} probabilities, {} supports",
            p.len(),
            supports.len()
        )));
    }
    for (x, s) in supports.iter().enumerate() {
        if s.is_empty() {
            return Err(InfoError::EmptySupport(x));
        }
        if s.iter().any(|&y| y >= outputs) {
            return Err(InfoError::Dimension(format!(
                "support of {x} names an output beyond {outputs}"
            )));
        }
    }
    let live: Vec<usize> = (0..p.len()).filter(|&x| p[x] > 0.0).collect();
    let mut used = vec![false; outputs];
    for &x in &live {
        for &y in &supports[x] {
            used[y] = true;
        }
    }
    let n_used = used.iter().filter(|&&u| u).count().max(1);
    let mut q: Vec<f64> = used
        .iter()
        .map(|&u| if u { 1.0 / n_used as f64 } else { 0.0 })
        .collect();
    let mut g = vec![0.0; outputs];
    let mut history = Vec::new();
    let mut iterations = 0;
    let certificate = loop {
        iterations += 1;
        g.iter_mut().for_each(|v| *v = 0.0);
        let mut f = 0.0;
        for &x in &live {
            let mass: f64 = supports[x].iter().map(|&y| q[y]).sum();
            f -= p[x] * mass.ln();
            for &y in &supports[x] {
                g[y] += p[x] / mass;
            }
        }
        history.push(f / LN2);
        let cert = (0..outputs)
            .filter(|&y| used[y])
            .map(|y| g[y])
            .fold(1.0f64, f64::max)
            .ln();
        if cert <= opts.tolerance {
            break cert;
        }
        if iterations >= opts.max_iterations {
            if cert <= opts.max_residual {
                break cert;
            }
            return Err(InfoError::NonConvergence {
                iterations,
                residual: cert,
            });
        }
        let mut total = 0.0;
        for y in 0..outputs {
            q[y] *= g[y];
            total += q[y];
        }
        q.iter_mut().for_each(|v| *v /= total);
    };
    let rows: Vec<Vec<f64>> = supports
        .iter()
        .map(|s| {
            let mass: f64 = s.iter().map(|&y| q[y]).sum();
            let mut row = vec![0.0; outputs];
            if mass > 0.0 {
                for &y in s {
                    row[y] = q[y] / mass;
                }
            } else {
                row[s[0]] = 1.0;
            }
            row
        })
        .collect();
    let kernel = Kernel { rows };
    Ok(ConstrainedSolution {
        bits: mutual_information(p, &kernel),
        kernel,
        output: q,
        iterations,
        certificate,
        history,
    })
}

/// Exhaustive search over kernels whose rows lie on the grid with spacing
/// `step` inside each allowed simplex. Returns the smallest `I` found, an
/// upper bound on the true minimum.
pub fn brute_force_min_information(
    p: &[f64],
    supports: &[Vec<usize>],
    outputs: usize,
    step: f64,
) -> Result<f64, InfoError> {
    if p.len() > 3 {
        return Err(InfoError::TooLarge(format!(
            "{} source labels (at most 3)",
            p.len()
        )));
    }
    if supports.iter().any(|s| s.len() > 4) {
        return Err(InfoError::TooLarge(
            "support with more than 4 outputs".into(),
        ));
    }
    if !(0.01..=1.0).contains(&step) {
        return Err(InfoError::TooLarge(format!(
            "grid step {step} (at least 0.01)"
        )));
    }
    if let Some(x) = supports.iter().position(Vec::is_empty) {
        return Err(InfoError::EmptySupport(x));
    }
    let n = (1.0 / step).round() as usize;
    let rows: Vec<Vec<Vec<f64>>> = supports
        .iter()
        .map(|s| {
            compositions(n, s.len())
                .into_iter()
                .map(|c| {
                    let mut row = vec![0.0; outputs];
                    for (&y, k) in s.iter().zip(c) {
                        row[y] = k as f64 / n as f64;
                    }
                    row
                })
                .collect()
        })
        .collect();
    let total: f64 = rows.iter().map(|r| r.len() as f64).product();
    if total > 2e7 {
        return Err(InfoError::TooLarge(format!("{total} grid kernels")));
    }
    let mut best = f64::INFINITY;
    let mut choice = vec![0usize; rows.len()];
    loop {
        let kernel = Kernel {
            rows: choice
                .iter()
                .zip(&rows)
                .map(|(&i, r)| r[i].clone())
                .collect(),
        };
        best = best.min(mutual_information(p, &kernel));
        let mut pos = 0;
        loop {
            if pos == choice.len() {
                return Ok(best);
            }
            choice[pos] += 1;
            if choice[pos] < rows[pos].len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

/// All ways of writing `n` as an ordered sum of `k` nonnegative integers.
fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}
