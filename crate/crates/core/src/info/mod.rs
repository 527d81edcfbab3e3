//! Entropy and mutual information over finite alphabets, Blahut-Arimoto
//! solvers, and a support-constrained minimum-information solver.
//!
//! All public quantities are in bits.

mod blahut;
mod constrained;

use thiserror::Error;

pub use blahut::{
    ba_capacity, ba_rate_distortion, distortion_range, BaOptions, Capacity, RdCurve, RdPoint,
};
pub use constrained::{
    brute_force_min_information, min_information_constrained, ConstrainedOptions,
    ConstrainedSolution,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InfoError {
    #[error("target distortion {target} is below the minimum achievable {minimum}")]
    Infeasible { target: f64, minimum: f64 },
    #[error("solver stopped after {iterations} iterations with residual {residual:e}")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("source label {0} has an empty allowed set")]
    EmptySupport(usize),
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("{0} is not a probability")]
    OutOfRange(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// A conditional distribution: `rows[x][y] = W(y | x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub rows: Vec<Vec<f64>>,
}

impl Kernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, InfoError> {
        let width = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(InfoError::Dimension(format!(
                    "row {i} has {} entries, expected {width}",
                    row.len()
                )));
            }
            if row.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
                return Err(InfoError::Dimension(format!(
                    "row {i} has an entry outside [0,1]"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(InfoError::Dimension(format!("row {i} sums to {s}")));
            }
        }
        Ok(Kernel { rows })
    }

    pub fn identity(n: usize) -> Self {
        Kernel {
            rows: (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn outputs(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Output distribution induced by input distribution `p`.
    pub fn output_marginal(&self, p: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.outputs()];
        for (px, row) in p.iter().zip(&self.rows) {
            for (qy, w) in q.iter_mut().zip(row) {
                *qy += px * w;
            }
        }
        q
    }

    /// Header `input,<outputs...>`, then one labelled row per input.
    pub fn to_csv(&self, inputs: &[String], outputs: &[String]) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once("input".to_string()).chain(outputs.iter().cloned());
        w.write_record(header).expect("write to memory");
        for (label, row) in inputs.iter().zip(&self.rows) {
            let record =
                std::iter::once(label.clone()).chain(row.iter().map(|v| crate::format::sig12(*v)));
            w.write_record(record).expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8")
    }
}

fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// `-Σ p log2 p` with `0 log 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlog2x(x)).sum::<f64>()
}

pub fn binary_entropy(p: f64) -> Result<f64, InfoError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(InfoError::OutOfRange(p));
    }
    Ok(entropy(&[p, 1.0 - p]))
}

/// `I(X; Y)` in bits for input distribution `p` and channel `k`.
pub fn mutual_information(p: &[f64], k: &Kernel) -> f64 {
    let q = k.output_marginal(p);
    let mut total = 0.0;
    for (px, row) in p.iter().zip(&k.rows) {
        if *px == 0.0 {
            continue;
        }
        for (w, qy) in row.iter().zip(&q) {
            if *w > 0.0 {
                total += px * w * (w / qy).log2();
            }
        }
    }
    total.max(0.0)
}
