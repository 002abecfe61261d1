use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::TransitionModel;

/// Row-by-row relative entropy `Σᵢ Σⱼ Pᵢⱼ log₂(Pᵢⱼ / Qᵢⱼ)` in bits.
///
/// Rows are summed without any stationary weighting. Every transition of
/// `p` must have positive probability under `q`.
pub fn relative_entropy(p: &TransitionModel, q: &TransitionModel) -> Result<f64> {
    if p.n_states() != q.n_states() {
        return Err(Error::DimensionMismatch {
            expected: q.n_states(),
            found: p.n_states(),
        });
    }
    let mut d = 0.0;
    for (i, row) in p.rows() {
        for &(j, pij) in row {
            let qij = q.prob(i, j);
            if qij <= 0.0 {
                return Err(Error::SupportViolation { row: i.0, col: j.0 });
            }
            d += pij * (pij / qij).log2();
        }
    }
    Ok(d.max(0.0))
}

/// `Σᵢ log₂ |support(Qᵢ)|`: the divergence reached when every row of P is a
/// point mass, for Q with uniform rows.
pub fn max_relative_entropy(q: &TransitionModel) -> f64 {
    q.rows()
        .filter(|(_, r)| !r.is_empty())
        .map(|(_, r)| (r.len() as f64).log2())
        .sum()
}

/// `relative_entropy / max_relative_entropy`, with `0 / 0 = 0`.
pub fn normalized_relative_entropy(p: &TransitionModel, q: &TransitionModel) -> Result<f64> {
    Ok(Divergence::between(p, q)?.normalized)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Divergence {
    pub relative_entropy: f64,
    pub max_relative_entropy: f64,
    pub normalized: f64,
}

impl Divergence {
    pub fn between(p: &TransitionModel, q: &TransitionModel) -> Result<Self> {
        let d = relative_entropy(p, q)?;
        let d_max = max_relative_entropy(q);
        let normalized = if d_max > 0.0 {
            d / d_max
        } else {
            // Every row of Q is a point mass, so absolute continuity forces P = Q.
            assert!(d <= 1e-12, "positive divergence {d} against a deterministic reference");
            0.0
        };
        Ok(Divergence {
            relative_entropy: d,
            max_relative_entropy: d_max,
            normalized,
        })
    }
}
