//! Stationary distributions by power iteration and the entropy rate of a chain.

use crate::error::{Error, Result};
use crate::model::{RankVector, TransitionModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    /// Stop once `‖πP − π‖₁` is at or below this value.
    pub tolerance: f64,
    pub max_iters: usize,
    /// Probability of jumping to a uniformly random state. Zero gives the
    /// plain stochastic matrix.
    pub teleport: f64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration {
            tolerance: 1e-10,
            max_iters: 10_000,
            teleport: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarySolution {
    pub rank: RankVector,
    pub iterations: usize,
    /// L1 residual `‖πP − π‖₁` of the returned vector.
    pub residual: f64,
}

impl PowerIteration {
    pub fn with_tolerance(tolerance: f64) -> Self {
        PowerIteration {
            tolerance,
            ..Self::default()
        }
    }

    /// Iterates `π ← πP` from the uniform vector.
    pub fn solve(&self, model: &TransitionModel) -> Result<StationarySolution> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.teleport) {
            return Err(Error::InvalidParameter("teleport must lie in [0, 1)".into()));
        }
        let n = model.n_states();
        if n == 0 {
            return Err(Error::InvalidParameter("model has no states".into()));
        }
        let empty: Vec<usize> = model
            .rows()
            .filter(|(_, r)| r.is_empty())
            .map(|(i, _)| i.0)
            .collect();
        let step = |pi: &[f64]| -> Vec<f64> {
            let mut next = model.left_multiply(pi);
            // Mass sitting on empty rows is redistributed uniformly, as is the teleport share.
            let lost: f64 = empty.iter().map(|&i| pi[i]).sum();
            let spread = (1.0 - self.teleport) * lost + self.teleport;
            let scale = 1.0 - self.teleport;
            let uniform = spread / n as f64;
            for x in &mut next {
                *x = scale * *x + uniform;
            }
            next
        };

        let mut pi = vec![1.0 / n as f64; n];
        let mut residual = f64::INFINITY;
        for iteration in 1..=self.max_iters {
            let next = step(&pi);
            residual = l1(&next, &pi);
            pi = next;
            if residual <= self.tolerance {
                // Re-measure on the vector actually returned.
                let after = step(&pi);
                let final_residual = l1(&after, &pi);
                let sum: f64 = pi.iter().sum();
                pi.iter_mut().for_each(|x| *x /= sum);
                return Ok(StationarySolution {
                    rank: RankVector::new(pi, model.kind())?,
                    iterations: iteration,
                    residual: final_residual,
                });
            }
        }
        Err(Error::NotConverged {
            iterations: self.max_iters,
            residual,
        })
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Power iteration on the plain stochastic matrix.
pub fn power_iteration(model: &TransitionModel, tolerance: f64, max_iters: usize) -> Result<StationarySolution> {
    PowerIteration {
        tolerance,
        max_iters,
        teleport: 0.0,
    }
    .solve(model)
}

/// Entropy rate `−Σᵢ πᵢ Σⱼ Pᵢⱼ log₂ Pᵢⱼ` in bits per step.
pub fn entropy_theory(model: &TransitionModel, pi: &RankVector) -> Result<f64> {
    if pi.len() != model.n_states() {
        return Err(Error::DimensionMismatch {
            expected: model.n_states(),
            found: pi.len(),
        });
    }
    let h = model
        .rows()
        .map(|(i, row)| pi.get(i) * row_entropy(row))
        .sum::<f64>();
    Ok(h.max(0.0))
}

/// Shannon entropy in bits of one transition row.
pub fn row_entropy(row: &[(crate::model::PageId, f64)]) -> f64 {
    -row.iter()
        .filter(|&&(_, p)| p > 0.0)
        .map(|&(_, p)| p * p.log2())
        .sum::<f64>()
}
