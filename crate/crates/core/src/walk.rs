//! Entropy and stationary estimates from walks on a chain.
//!
//! A walk starts at home and, once it has made at least `min_steps`
//! transitions, stops the next time it reaches home; `t` is its number of
//! visits, one more than its number of transitions. The entropy is the
//! plug-in value `−Σ m_ij log₂(m_ij / m_i)` over the walk's own transition
//! counts, with `m_i` the number of departures from `i`.
//!
//! Replayed session walks use the counts of [`crate::chains::build_counts`],
//! whose closing home self-loop makes every visit a departure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chains::build_counts;
use crate::error::{Error, Result};
use crate::model::{CountModel, PageId, SessionSet, TransitionModel, WalkStats};

/// Walks give up after this many multiples of `min_steps`.
pub const STEP_CAP_FACTOR: u64 = 100;

/// Default multiplier in `factor · (N + L)`.
pub const DEFAULT_WALK_FACTOR: u64 = 10;

/// `factor · (N + L)`.
pub fn default_walk_length(n_states: usize, n_transitions: usize, factor: u64) -> u64 {
    factor * (n_states as u64 + n_transitions as u64)
}

/// Walk length for a model, taking `L` as its number of nonzero transitions.
pub fn walk_length_for(model: &TransitionModel, factor: u64) -> u64 {
    default_walk_length(model.n_states(), model.n_transitions(), factor)
}

/// `−Σ m_ij log₂(m_ij / m_i)` in bits.
pub fn plugin_entropy(counts: &CountModel) -> f64 {
    let mut h = 0.0;
    for (row, &m) in counts.transitions.iter().zip(&counts.visits) {
        let m = m as f64;
        for &(_, c) in row {
            let c = c as f64;
            h -= c * (c / m).log2();
        }
    }
    h.max(0.0)
}

/// Statistics of a walk given its transition counts and per-page visits.
pub fn walk_stats(transitions: &CountModel, visits: &[u64], seed: Option<u64>) -> WalkStats {
    let entropy = plugin_entropy(transitions);
    let t: u64 = visits.iter().sum::<u64>().max(1);
    WalkStats {
        entropy,
        visits: t,
        per_step: entropy / t as f64,
        pi_hat: visits.iter().map(|&m| m as f64 / t as f64).collect(),
        seed,
    }
}

/// Simulates a walk on `model` and returns its statistics.
pub fn random_walk(model: &TransitionModel, home: PageId, min_steps: u64, seed: u64) -> Result<WalkStats> {
    let counts = random_walk_counts(model, home, min_steps, seed)?;
    let mut visits = counts.visits.clone();
    visits[home.0] += 1;
    Ok(walk_stats(&counts, &visits, Some(seed)))
}

/// Transition counts of a simulated walk. `visits` holds departures, so the
/// final arrival at home is not included. Next states are drawn by inverting
/// the cumulative row probabilities in ascending destination order.
pub fn random_walk_counts(model: &TransitionModel, home: PageId, min_steps: u64, seed: u64) -> Result<CountModel> {
    let n = model.n_states();
    if home.0 >= n {
        return Err(Error::InvalidParameter(format!("home index {} out of range", home.0)));
    }
    if min_steps == 0 {
        return Err(Error::InvalidParameter("min_steps must be at least 1".into()));
    }
    let cap = min_steps.saturating_mul(STEP_CAP_FACTOR);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tallies: Vec<Vec<u64>> = model.rows().map(|(_, r)| vec![0; r.len()]).collect();

    let mut state = home;
    let mut steps = 0u64;
    loop {
        let row = model.row(state);
        if row.is_empty() {
            return Err(Error::EmptyRow(state.0));
        }
        let k = sample_index(row, rng.random::<f64>());
        tallies[state.0][k] += 1;
        state = row[k].0;
        steps += 1;
        if state == home && steps >= min_steps {
            break;
        }
        if steps >= cap {
            return Err(Error::WalkCapExceeded { cap });
        }
    }

    let triples = tallies.iter().enumerate().flat_map(|(i, t)| {
        let row = model.row(PageId(i));
        t.iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(k, &c)| (PageId(i), row[k].0, c))
    });
    Ok(CountModel::from_transitions(n, home, triples))
}

fn sample_index(row: &[(PageId, f64)], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &(_, p)) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    row.len() - 1
}

/// Treats the concatenated, home-anchored sessions as the walk.
pub fn replay_walk(sessions: &SessionSet, home: PageId) -> Result<WalkStats> {
    let counts = build_counts(sessions, home)?;
    Ok(walk_stats(&counts, &counts.visits, None))
}
