use std::collections::{HashMap, HashSet};
use std::hash::Hash;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{PageId, Pages, RankVector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedPage {
    pub rank: usize,
    pub label: String,
    pub probability: f64,
    #[serde(skip)]
    pub page: PageId,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopK {
    pub entries: Vec<RankedPage>,
    /// Set when fewer than the requested `k` pages exist.
    pub truncated: bool,
}

impl TopK {
    pub fn labels(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.label.as_str()).collect()
    }
}

/// The `k` most probable pages, ties broken by ascending label.
pub fn top_k(pi: &RankVector, pages: &Pages, k: usize) -> Result<TopK> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if pi.len() != pages.len() {
        return Err(Error::DimensionMismatch {
            expected: pages.len(),
            found: pi.len(),
        });
    }
    let mut order: Vec<PageId> = pages.ids().collect();
    order.sort_by(|&a, &b| {
        pi.get(b)
            .total_cmp(&pi.get(a))
            .then_with(|| pages.label(a).cmp(pages.label(b)))
    });
    let truncated = k > order.len();
    let entries = order
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, page)| RankedPage {
            rank: i + 1,
            label: pages.label(page).to_owned(),
            probability: pi.get(page),
            page,
        })
        .collect();
    Ok(TopK { entries, truncated })
}

fn positions<T: Eq + Hash + Clone + std::fmt::Debug>(list: &[T], k: usize) -> Result<HashMap<T, usize>> {
    if list.len() > k {
        return Err(Error::InvalidParameter(format!(
            "ranking has {} entries, more than k = {k}",
            list.len()
        )));
    }
    let mut pos = HashMap::with_capacity(list.len());
    for (i, item) in list.iter().enumerate() {
        if pos.insert(item.clone(), i + 1).is_some() {
            return Err(Error::DuplicateLabel(format!("{item:?}")));
        }
    }
    Ok(pos)
}

/// Spearman's footrule over the union of two top-`k` lists, placing items
/// missing from a list at rank `k + 1`.
pub fn footrule_distance<T: Eq + Hash + Clone + std::fmt::Debug>(a: &[T], b: &[T], k: usize) -> Result<usize> {
    let pa = positions(a, k)?;
    let pb = positions(b, k)?;
    let union: HashSet<&T> = a.iter().chain(b).collect();
    Ok(union
        .into_iter()
        .map(|item| {
            let ra = pa.get(item).copied().unwrap_or(k + 1);
            let rb = pb.get(item).copied().unwrap_or(k + 1);
            ra.abs_diff(rb)
        })
        .sum())
}

/// `1 − F / (k (k + 1))`, where `k (k + 1)` is the footrule of two disjoint lists.
pub fn footrule_complement<T: Eq + Hash + Clone + std::fmt::Debug>(a: &[T], b: &[T], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let f = footrule_distance(a, b, k)?;
    Ok(1.0 - f as f64 / (k * (k + 1)) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelKind;

    #[test]
    fn ties_break_by_label() {
        let pages = Pages::from_labels(["c", "a", "b", "d"]).unwrap();
        let pi = RankVector::new(vec![0.25; 4], ModelKind::Site).unwrap();
        let top = top_k(&pi, &pages, 3).unwrap();
        assert_eq!(top.labels(), ["a", "b", "c"]);
        assert_eq!(top.entries[2].rank, 3);
        assert!(!top.truncated);
    }

    #[test]
    fn k_larger_than_n_is_flagged() {
        let pages = Pages::from_labels(["x", "y"]).unwrap();
        let pi = RankVector::new(vec![0.3, 0.7], ModelKind::Site).unwrap();
        let top = top_k(&pi, &pages, 5).unwrap();
        assert_eq!(top.labels(), ["y", "x"]);
        assert!(top.truncated);
        assert_eq!(top_k(&pi, &pages, 1).unwrap().labels(), ["y"]);
        assert!(top_k(&pi, &pages, 0).is_err());
    }

    #[test]
    fn footrule_extremes() {
        let a = ["p", "q", "r"];
        assert_eq!(footrule_complement(&a, &a, 3).unwrap(), 1.0);
        assert_eq!(footrule_complement(&a, &["x", "y", "z"], 3).unwrap(), 0.0);
        assert_eq!(footrule_distance(&a, &["r", "q", "p"], 3).unwrap(), 4);
    }

    #[test]
    fn footrule_input_errors() {
        assert!(matches!(footrule_complement(&["a", "a"], &["b"], 2), Err(Error::DuplicateLabel(_))));
        assert!(footrule_complement(&["a", "b", "c"], &["b"], 2).is_err());
    }
}
