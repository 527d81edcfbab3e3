//! Blahut-Arimoto for rate-distortion and channel capacity.
//!
//! Internally everything is in nats. For a fixed slope `β` the iteration
//! `q_y <- q_y c_y` with `c_y = Σ_x p_x e^{-β d_xy} / Z_x` decreases
//! `F(q) = -Σ_x p_x ln Z_x`, the Lagrangian `min_Q I(Q) + β E d(Q)` for the
//! current output marginal, and `F(q) - ln max_y c_y` is a lower bound on the
//! optimum. `R(D) = max_β [L(β) - β D]` with `L` concave, so each target is
//! found by a golden-section search over `ln β`.

use std::fmt::Write as _;

use super::constrained::{min_information_constrained, ConstrainedOptions};
use super::{InfoError, Kernel};
use crate::format::sig12;

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaOptions {
    /// Stop a fixed-slope run once the duality gap (nats) is below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Width of the final `ln β` bracket.
    pub slope_tolerance: f64,
    /// A run whose final gap exceeds this is reported as non-convergence.
    pub max_residual: f64,
}

impl Default for BaOptions {
    fn default() -> Self {
        BaOptions {
            tolerance: 1e-12,
            max_iterations: 50_000,
            slope_tolerance: 1e-7,
            max_residual: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RdPoint {
    /// The requested target.
    pub distortion: f64,
    /// Expected distortion of `kernel`.
    pub achieved: f64,
    pub rate: f64,
    /// `dR/dD` in bits per unit distortion; `None` at the minimum distortion.
    pub slope: Option<f64>,
    pub iterations: usize,
    /// Final duality gap in bits.
    pub residual: f64,
    pub kernel: Kernel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RdCurve {
    pub points: Vec<RdPoint>,
    pub d_min: f64,
    pub d_max: f64,
}

impl RdCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("D,R,slope,iterations\n");
        for pt in &self.points {
            let slope = pt.slope.map(sig12).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{}",
                sig12(pt.distortion),
                sig12(pt.rate),
                slope,
                pt.iterations
            );
        }
        out
    }
}

struct Problem<'a> {
    /// Positions of the positive-probability rows.
    keep: Vec<usize>,
    p: Vec<f64>,
    d: Vec<&'a [f64]>,
    rowmin: Vec<f64>,
    outputs: usize,
}

struct Eval {
    /// `F(q)` in nats.
    value: f64,
    gap: f64,
    distortion: f64,
    rows: Vec<Vec<f64>>,
    iterations: usize,
}

impl Problem<'_> {
    fn solve(&self, beta: f64, q: &mut [f64], opts: &BaOptions) -> Eval {
        let m = self.outputs;
        let w: Vec<Vec<f64>> = self
            .d
            .iter()
            .zip(&self.rowmin)
            .map(|(row, &lo)| row.iter().map(|&dxy| (-beta * (dxy - lo)).exp()).collect())
            .collect();
        let shift: f64 = self
            .p
            .iter()
            .zip(&self.rowmin)
            .map(|(p, lo)| p * lo)
            .sum::<f64>()
            * beta;
        let mut z = vec![0.0; self.p.len()];
        let mut c = vec![0.0; m];
        let mut iterations = 0;
        loop {
            iterations += 1;
            for (zx, wx) in z.iter_mut().zip(&w) {
                *zx = wx.iter().zip(q.iter()).map(|(a, b)| a * b).sum();
            }
            if z.iter().any(|&zx| zx <= 0.0) {
                // an output marginal underflowed on every cheapest column of some row
                for qy in q.iter_mut() {
                    *qy = 0.5 * *qy + 0.5 / m as f64;
                }
                continue;
            }
            c.iter_mut().for_each(|cy| *cy = 0.0);
            for ((px, zx), wx) in self.p.iter().zip(&z).zip(&w) {
                let scale = px / zx;
                for (cy, wxy) in c.iter_mut().zip(wx) {
                    *cy += scale * wxy;
                }
            }
            let value = shift
                - self
                    .p
                    .iter()
                    .zip(&z)
                    .map(|(p, zx)| p * zx.ln())
                    .sum::<f64>();
            let gap = c.iter().cloned().fold(f64::MIN, f64::max).ln().max(0.0);
            if gap <= opts.tolerance || iterations >= opts.max_iterations {
                let rows: Vec<Vec<f64>> = w
                    .iter()
                    .zip(&z)
                    .map(|(wx, zx)| wx.iter().zip(q.iter()).map(|(a, b)| a * b / zx).collect())
                    .collect();
                let distortion = rows
                    .iter()
                    .zip(&self.d)
                    .zip(&self.p)
                    .map(|((r, d), p)| p * r.iter().zip(d.iter()).map(|(a, b)| a * b).sum::<f64>())
                    .sum();
                return Eval {
                    value,
                    gap,
                    distortion,
                    rows,
                    iterations,
                };
            }
            let mut total = 0.0;
            for (qy, cy) in q.iter_mut().zip(&c) {
                *qy *= cy;
                total += *qy;
            }
            q.iter_mut().for_each(|qy| *qy /= total);
        }
    }

    /// Reinserts the dropped zero-probability rows as point masses on a
    /// cheapest column.
    fn full_kernel(&self, d: &[Vec<f64>], rows: Vec<Vec<f64>>) -> Kernel {
        let mut out: Vec<Vec<f64>> = d
            .iter()
            .map(|row| {
                let j = argmin(row);
                (0..self.outputs)
                    .map(|y| if y == j { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        for (x, row) in self.keep.iter().zip(rows) {
            out[*x] = row;
        }
        Kernel { rows: out }
    }
}

fn argmin(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v < row[best] {
            best = j;
        }
    }
    best
}

/// `(d_min, d_max)`: the expected row minimum, below which no kernel is
/// feasible, and the cheapest constant reconstruction, above which the rate
/// is zero.
pub fn distortion_range(p: &[f64], d: &[Vec<f64>]) -> (f64, f64) {
    let mut d_min = 0.0;
    let mut cost = vec![0.0; d.first().map_or(0, Vec::len)];
    for (&px, row) in p.iter().zip(d) {
        if px == 0.0 {
            continue;
        }
        d_min += px * row[argmin(row)];
        for (c, v) in cost.iter_mut().zip(row) {
            *c += px * v;
        }
    }
    let d_max = cost.get(argmin(&cost)).copied().unwrap_or(0.0);
    (d_min, d_max)
}

/// Minimum of `I(X; Y)` subject to `E d(X, Y) <= D`, for each target `D`.
pub fn ba_rate_distortion(
    p: &[f64],
    d: &[Vec<f64>],
    targets: &[f64],
    opts: &BaOptions,
) -> Result<RdCurve, InfoError> {
    if p.len() != d.len() {
        return Err(InfoError::Dimension(format!(
            "{} probabilities, {} matrix rows",
            p.len(),
            d.len()
        )));
    }
    let outputs = d.first().map_or(0, Vec::len);
    if outputs == 0 || d.iter().any(|r| r.len() != outputs) {
        return Err(InfoError::Dimension(
            "distortion matrix must be rectangular and nonempty".into(),
        ));
    }
    if d.iter().flatten().any(|v| !v.is_finite()) {
        return Err(InfoError::Dimension(
            "distortion entries must be finite".into(),
        ));
    }
    let keep: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let prob = Problem {
        p: keep.iter().map(|&i| p[i]).collect(),
        d: keep.iter().map(|&i| d[i].as_slice()).collect(),
        rowmin: keep.iter().map(|&i| d[i][argmin(&d[i])]).collect(),
        keep,
        outputs,
    };
    let (d_min, d_max) = distortion_range(p, d);
    let column_cost: Vec<f64> = (0..outputs)
        .map(|y| prob.p.iter().zip(&prob.d).map(|(p, row)| p * row[y]).sum())
        .collect();
    let best_column = argmin(&column_cost);

    let mut q = vec![1.0 / outputs as f64; outputs];
    let mut points = Vec::with_capacity(targets.len());
    for &target in targets {
        if target < d_min - 1e-12 {
            return Err(InfoError::Infeasible {
                target,
                minimum: d_min,
            });
        }
        if target >= d_max {
            let rows = prob
                .p
                .iter()
                .map(|_| {
                    (0..outputs)
                        .map(|y| if y == best_column { 1.0 } else { 0.0 })
                        .collect()
                })
                .collect();
            points.push(RdPoint {
                distortion: target,
                achieved: d_max,
                rate: 0.0,
                slope: Some(0.0),
                iterations: 0,
                residual: 0.0,
                kernel: prob.full_kernel(d, rows),
            });
            continue;
        }
        if target <= d_min + 1e-12 {
            let supports: Vec<Vec<usize>> = prob
                .d
                .iter()
                .zip(&prob.rowmin)
                .map(|(row, &lo)| (0..outputs).filter(|&y| row[y] <= lo + 1e-12).collect())
                .collect();
            let copts = ConstrainedOptions {
                tolerance: opts.tolerance,
                max_iterations: opts.max_iterations * 20,
                max_residual: opts.max_residual,
            };
            let sol = min_information_constrained(&prob.p, &supports, outputs, &copts)?;
            points.push(RdPoint {
                distortion: target,
                achieved: d_min,
                rate: sol.bits,
                slope: None,
                iterations: sol.iterations,
                residual: sol.certificate / LN2,
                kernel: prob.full_kernel(d, sol.kernel.rows),
            });
            continue;
        }
        points.push(golden_search(&prob, d, target, &mut q, opts)?);
    }
    Ok(RdCurve {
        points,
        d_min,
        d_max,
    })
}

fn golden_search(
    prob: &Problem,
    d: &[Vec<f64>],
    target: f64,
    q: &mut Vec<f64>,
    opts: &BaOptions,
) -> Result<RdPoint, InfoError> {
    const PHI: f64 = 0.618_033_988_749_894_9;
    let mut iterations = 0;
    let mut best: Option<(f64, f64, Eval)> = None;
    let mut eval = |t: f64, q: &mut Vec<f64>| -> f64 {
        let beta = t.exp();
        for qy in q.iter_mut() {
            *qy = (1.0 - 1e-9) * *qy + 1e-9 / prob.outputs as f64;
        }
        let e = prob.solve(beta, q, opts);
        iterations += e.iterations;
        let g = e.value - beta * target;
        if best.as_ref().is_none_or(|(bg, _, _)| g > *bg) {
            best = Some((g, beta, e));
        }
        g
    };
    let (mut lo, mut hi) = ((1e-9f64).ln(), (1e9f64).ln());
    let mut x1 = hi - PHI * (hi - lo);
    let mut x2 = lo + PHI * (hi - lo);
    let mut g1 = eval(x1, q);
    let mut g2 = eval(x2, q);
    while hi - lo > opts.slope_tolerance {
        if g1 < g2 {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + PHI * (hi - lo);
            g2 = eval(x2, q);
        } else {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - PHI * (hi - lo);
            g1 = eval(x1, q);
        }
    }
    let (g, beta, e) = best.expect("at least two evaluations");
    if e.gap > opts.max_residual {
        return Err(InfoError::NonConvergence {
            iterations,
            residual: e.gap,
        });
    }
    Ok(RdPoint {
        distortion: target,
        achieved: e.distortion,
        rate: (g / LN2).max(0.0),
        slope: Some(-beta / LN2),
        iterations,
        residual: e.gap / LN2,
        kernel: prob.full_kernel(d, e.rows),
    })
}

/// Capacity of a discrete memoryless channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Capacity {
    pub bits: f64,
    /// A capacity-achieving input distribution (up to the final gap).
    pub input: Vec<f64>,
    pub iterations: usize,
    /// Width of the final bracket in bits.
    pub gap: f64,
}

pub fn ba_capacity(w: &Kernel, opts: &BaOptions) -> Result<Capacity, InfoError> {
    let n = w.inputs();
    if n == 0 {
        return Err(InfoError::Dimension("channel has no inputs".into()));
    }
    let mut r = vec![1.0 / n as f64; n];
    let mut c = vec![0.0; n];
    let cap = opts.max_iterations * 20;
    for iterations in 1..=cap {
        let q = w.output_marginal(&r);
        for (cx, row) in c.iter_mut().zip(&w.rows) {
            let div: f64 = row
                .iter()
                .zip(&q)
                .filter(|(wy, _)| **wy > 0.0)
                .map(|(wy, qy)| wy * (wy / qy).ln())
                .sum();
            *cx = div.exp();
        }
        let total: f64 = r.iter().zip(&c).map(|(a, b)| a * b).sum();
        let lower = total.ln();
        let upper = c.iter().cloned().fold(f64::MIN, f64::max).ln();
        if upper - lower <= opts.tolerance {
            return Ok(Capacity {
                bits: (0.5 * (lower + upper) / LN2).max(0.0),
                input: r,
                iterations,
                gap: (upper - lower) / LN2,
            });
        }
        for (rx, cx) in r.iter_mut().zip(&c) {
            *rx *= cx / total;
        }
        if iterations == cap {
            return Err(InfoError::NonConvergence {
                iterations,
                residual: upper - lower,
            });
        }
    }
    unreachable!("loop returns")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::binary_entropy;

    fn hamming(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect()
    }

    #[test]
    fn binary_hamming_closed_form() {
        let targets: Vec<f64> = (0..10).map(|i| i as f64 * 0.05).collect();
        let curve =
            ba_rate_distortion(&[0.5, 0.5], &hamming(2), &targets, &BaOptions::default()).unwrap();
        for pt in &curve.points {
            let oracle = 1.0 - binary_entropy(pt.distortion).unwrap();
            assert!(
                (pt.rate - oracle).abs() < 1e-8,
                "D={} R={} oracle={oracle}",
                pt.distortion,
                pt.rate
            );
        }
        assert_eq!(curve.d_min, 0.0);
        assert_eq!(curve.d_max, 0.5);
    }

    #[test]
    fn slope_matches_derivative() {
        // dR/dD = log2(D / (1 - D)) for the binary Hamming source
        let curve =
            ba_rate_distortion(&[0.5, 0.5], &hamming(2), &[0.2], &BaOptions::default()).unwrap();
        let slope = curve.points[0].slope.unwrap();
        assert!((slope - (0.2f64 / 0.8).log2()).abs() < 1e-5, "{slope}");
    }

    #[test]
    fn nonuniform_ternary_hamming() {
        // R(D) = H(p) - h_b(D) - D log2(m-1) for D below the smallest
        // probability-dependent threshold
        let p = [0.5, 0.3, 0.2];
        let dd = 0.1;
        let oracle = crate::info::entropy(&p) - binary_entropy(dd).unwrap() - dd;
        let curve = ba_rate_distortion(&p, &hamming(3), &[dd], &BaOptions::default()).unwrap();
        assert!((curve.points[0].rate - oracle).abs() < 1e-8);
    }

    #[test]
    fn large_target_gives_zero_rate() {
        let curve =
            ba_rate_distortion(&[0.5, 0.5], &hamming(2), &[0.5, 0.9], &BaOptions::default())
                .unwrap();
        assert!(curve.points.iter().all(|p| p.rate == 0.0));
    }

    #[test]
    fn infeasible_target() {
        let d = vec![vec![0.2, 1.0], vec![1.0, 0.2]];
        let err = ba_rate_distortion(&[0.5, 0.5], &d, &[0.1], &BaOptions::default()).unwrap_err();
        assert!(matches!(err, InfoError::Infeasible { .. }));
    }

    #[test]
    fn zero_probability_rows_are_ignored() {
        let d = hamming(3);
        let a = ba_rate_distortion(&[0.5, 0.5, 0.0], &d, &[0.1], &BaOptions::default()).unwrap();
        let b = ba_rate_distortion(
            &[0.5, 0.5],
            &[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0]],
            &[0.1],
            &BaOptions::default(),
        )
        .unwrap();
        assert!((a.points[0].rate - b.points[0].rate).abs() < 1e-9);
        assert_eq!(a.points[0].kernel.rows.len(), 3);
    }

    #[test]
    fn minimum_distortion_uses_support_restriction() {
        // zero sets {0,1} and {2}: partition into two confusable classes
        let d = vec![
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ];
        let merged = vec![vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        let p = [0.25, 0.25, 0.5];
        let full = ba_rate_distortion(&p, &d, &[0.0], &BaOptions::default()).unwrap();
        assert!((full.points[0].rate - 1.5).abs() < 1e-9);
        let part = ba_rate_distortion(&p, &merged, &[0.0], &BaOptions::default()).unwrap();
        assert!((part.points[0].rate - 1.0).abs() < 1e-9);
    }

    #[test]
    fn capacity_values() {
        let opts = BaOptions::default();
        let bsc = Kernel::new(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        let c = ba_capacity(&bsc, &opts).unwrap();
        assert!((c.bits - (1.0 - binary_entropy(0.1).unwrap())).abs() < 1e-9);
        assert!((ba_capacity(&Kernel::identity(2), &opts).unwrap().bits - 1.0).abs() < 1e-12);
        let noisy = Kernel::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert!(ba_capacity(&noisy, &opts).unwrap().bits.abs() < 1e-12);
        // Z channel with crossover 1/2: log2(5/4)
        let z = Kernel::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let cz = ba_capacity(&z, &opts).unwrap();
        assert!((cz.bits - (1.25f64).log2()).abs() < 1e-9, "{}", cz.bits);
    }
}
