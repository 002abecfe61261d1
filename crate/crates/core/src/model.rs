//! Shared domain types.
//!
//! Pages are addressed by dense indices; labels live in a separate
//! [`Pages`] table so that the numeric code never touches URL strings.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance used for every "sums to one" check in the crate.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PageId(pub usize);

impl PageId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for PageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Label table mapping dense page indices to opaque labels and back.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Pages {
    labels: Vec<String>,
    index: HashMap<String, PageId>,
}

impl Pages {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a table from labels in order. Fails on a repeated label.
    pub fn from_labels<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut pages = Pages::new();
        for label in labels {
            let label = label.into();
            if pages.get(&label).is_some() {
                return Err(Error::DuplicateLabel(label));
            }
            pages.intern(&label);
        }
        Ok(pages)
    }

    /// Returns the id of `label`, appending it to the table if new.
    pub fn intern(&mut self, label: &str) -> PageId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = PageId(self.labels.len());
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), id);
        id
    }

    pub fn get(&self, label: &str) -> Option<PageId> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: PageId) -> &str {
        &self.labels[id.0]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn ids(&self) -> impl Iterator<Item = PageId> {
        (0..self.labels.len()).map(PageId)
    }
}

/// Pages of a site with their directed links and a designated home page.
///
/// Construction enforces: no duplicate links, a home self-loop, and every
/// page reachable from home.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pages: Pages,
    home: PageId,
    out: Vec<Vec<PageId>>,
}

impl Topology {
    /// Builds a topology from an explicit link list.
    ///
    /// A missing home self-loop is added. Duplicate links and pages that
    /// cannot be reached from home are errors; the reported page is the
    /// lowest-indexed offender.
    pub fn new(pages: Pages, home: PageId, links: &[(PageId, PageId)]) -> Result<Self> {
        let n = pages.len();
        if home.0 >= n {
            return Err(Error::InvalidParameter(format!(
                "home index {} out of range for {n} pages",
                home.0
            )));
        }
        let mut out = vec![Vec::new(); n];
        for &(src, dst) in links {
            if src.0 >= n || dst.0 >= n {
                return Err(Error::InvalidParameter(format!(
                    "link {src} -> {dst} refers to a page outside 0..{n}"
                )));
            }
            out[src.0].push(dst);
        }
        for (src, row) in out.iter_mut().enumerate() {
            row.sort_unstable();
            if let Some(w) = row.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateLink {
                    src: pages.label(PageId(src)).to_owned(),
                    dst: pages.label(w[0]).to_owned(),
                });
            }
        }
        let topo = Self::from_rows(pages, home, out);
        topo.check_reachable()?;
        Ok(topo)
    }

    /// Assembles from per-page sorted, duplicate-free outlink rows and adds
    /// the home self-loop. Reachability is not checked.
    pub(crate) fn from_rows(pages: Pages, home: PageId, mut out: Vec<Vec<PageId>>) -> Self {
        let row = &mut out[home.0];
        if let Err(pos) = row.binary_search(&home) {
            row.insert(pos, home);
        }
        Topology { pages, home, out }
    }

    fn check_reachable(&self) -> Result<()> {
        let seen = self.reachable_from_home();
        match seen.iter().position(|&s| !s) {
            Some(i) => Err(Error::Unreachable(self.pages.label(PageId(i)).to_owned())),
            None => Ok(()),
        }
    }

    pub(crate) fn reachable_from_home(&self) -> Vec<bool> {
        let mut seen = vec![false; self.n_pages()];
        let mut queue = VecDeque::from([self.home]);
        seen[self.home.0] = true;
        while let Some(p) = queue.pop_front() {
            for &q in &self.out[p.0] {
                if !seen[q.0] {
                    seen[q.0] = true;
                    queue.push_back(q);
                }
            }
        }
        seen
    }

    /// Pages from which home can be reached.
    pub fn reaches_home(&self) -> Vec<bool> {
        let mut incoming = vec![Vec::new(); self.n_pages()];
        for (src, dst) in self.links() {
            incoming[dst.0].push(src);
        }
        let mut seen = vec![false; self.n_pages()];
        let mut queue = VecDeque::from([self.home]);
        seen[self.home.0] = true;
        while let Some(p) = queue.pop_front() {
            for &q in &incoming[p.0] {
                if !seen[q.0] {
                    seen[q.0] = true;
                    queue.push_back(q);
                }
            }
        }
        seen
    }

    /// Pages in breadth-first discovery order from home, visiting outlinks in
    /// ascending index order.
    pub fn bfs_order(&self) -> Vec<PageId> {
        let mut seen = vec![false; self.n_pages()];
        let mut order = Vec::with_capacity(self.n_pages());
        let mut queue = VecDeque::from([self.home]);
        seen[self.home.0] = true;
        while let Some(p) = queue.pop_front() {
            order.push(p);
            for &q in &self.out[p.0] {
                if !seen[q.0] {
                    seen[q.0] = true;
                    queue.push_back(q);
                }
            }
        }
        order
    }

    /// Returns a copy with `extra` links added; links already present are kept once.
    pub fn with_links(&self, extra: impl IntoIterator<Item = (PageId, PageId)>) -> Result<Self> {
        let n = self.n_pages();
        let mut out = self.out.clone();
        for (src, dst) in extra {
            if src.0 >= n || dst.0 >= n {
                return Err(Error::InvalidParameter(format!(
                    "link {src} -> {dst} refers to a page outside 0..{n}"
                )));
            }
            let row = &mut out[src.0];
            if let Err(pos) = row.binary_search(&dst) {
                row.insert(pos, dst);
            }
        }
        Ok(Topology {
            pages: self.pages.clone(),
            home: self.home,
            out,
        })
    }

    /// The same site over another page table, matching pages by label.
    pub fn reindex(&self, target: &Pages) -> Result<Self> {
        let map: Vec<PageId> = self
            .pages
            .labels()
            .iter()
            .map(|l| target.get(l).ok_or_else(|| Error::UnknownPage(l.clone())))
            .collect::<Result<_>>()?;
        let links: Vec<(PageId, PageId)> = self.links().map(|(s, d)| (map[s.0], map[d.0])).collect();
        let mut out = vec![Vec::new(); target.len()];
        for (s, d) in links {
            out[s.0].push(d);
        }
        out.iter_mut().for_each(|r| r.sort_unstable());
        let topo = Self::from_rows(target.clone(), map[self.home.0], out);
        topo.check_reachable()?;
        Ok(topo)
    }

    /// Renumbers pages in [`Self::bfs_order`], the order in which an edge list
    /// written by [`crate::ingest::write_topology`] introduces them.
    pub fn canonical(&self) -> Self {
        let labels = self.bfs_order().into_iter().map(|p| self.pages.label(p).to_owned());
        let pages = Pages::from_labels(labels).expect("labels are already unique");
        self.reindex(&pages).expect("every page is reachable from home")
    }

    pub fn pages(&self) -> &Pages {
        &self.pages
    }

    pub fn home(&self) -> PageId {
        self.home
    }

    pub fn n_pages(&self) -> usize {
        self.pages.len()
    }

    pub fn n_links(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    /// Outlinks of `page` in ascending index order.
    pub fn outlinks(&self, page: PageId) -> &[PageId] {
        &self.out[page.0]
    }

    pub fn out_degree(&self, page: PageId) -> usize {
        self.out[page.0].len()
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        self.out.iter().map(Vec::len).collect()
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_pages()];
        for (_, dst) in self.links() {
            deg[dst.0] += 1;
        }
        deg
    }

    pub fn has_link(&self, src: PageId, dst: PageId) -> bool {
        self.out[src.0].binary_search(&dst).is_ok()
    }

    /// All links ordered by (src, dst).
    pub fn links(&self) -> impl Iterator<Item = (PageId, PageId)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(src, row)| row.iter().map(move |&dst| (PageId(src), dst)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub pages: Vec<PageId>,
    /// Number of occurrences of this exact session.
    pub weight: u64,
}

impl Session {
    pub fn new(pages: Vec<PageId>, weight: u64) -> Self {
        Session { pages, weight }
    }

    pub fn len(&self) -> usize {
        self.pages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pages.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SessionSet {
    pub sessions: Vec<Session>,
    pub pages: Pages,
}

impl SessionSet {
    pub fn new(sessions: Vec<Session>, pages: Pages) -> Self {
        SessionSet { sessions, pages }
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    /// Sum of session weights.
    pub fn total_weight(&self) -> u64 {
        self.sessions.iter().map(|s| s.weight).sum()
    }

    /// Re-expresses every session in the index space of `target`.
    pub fn reindex(&self, target: &Pages) -> Result<SessionSet> {
        let map: Vec<PageId> = self
            .pages
            .labels()
            .iter()
            .map(|l| target.get(l).ok_or_else(|| Error::UnknownPage(l.clone())))
            .collect::<Result<_>>()?;
        let sessions = self
            .sessions
            .iter()
            .map(|s| Session::new(s.pages.iter().map(|p| map[p.0]).collect(), s.weight))
            .collect();
        Ok(SessionSet::new(sessions, target.clone()))
    }
}

/// Visit and traversal counts of the walk obtained by concatenating sessions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountModel {
    pub home: PageId,
    /// Visits per page, equal to the row sums of `transitions`.
    pub visits: Vec<u64>,
    /// Per-page outgoing traversal counts, ascending by destination.
    pub transitions: Vec<Vec<(PageId, u64)>>,
    /// Per-page number of unpopular outlinks folded into `transitions`.
    pub unpopular: Vec<u64>,
    pub total: u64,
}

impl CountModel {
    /// Builds from sparse `(src, dst, count)` triples; zero counts are dropped
    /// and visits are derived as row sums.
    pub fn from_transitions(
        n_pages: usize,
        home: PageId,
        triples: impl IntoIterator<Item = (PageId, PageId, u64)>,
    ) -> Self {
        let mut rows: Vec<Vec<(PageId, u64)>> = vec![Vec::new(); n_pages];
        for (src, dst, c) in triples {
            if c > 0 {
                rows[src.0].push((dst, c));
            }
        }
        for row in &mut rows {
            row.sort_unstable_by_key(|&(d, _)| d);
            row.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
        }
        let visits: Vec<u64> = rows.iter().map(|r| r.iter().map(|&(_, c)| c).sum()).collect();
        let total = visits.iter().sum();
        CountModel {
            home,
            visits,
            transitions: rows,
            unpopular: vec![0; n_pages],
            total,
        }
    }

    pub fn n_pages(&self) -> usize {
        self.visits.len()
    }

    pub fn count(&self, src: PageId, dst: PageId) -> u64 {
        let row = &self.transitions[src.0];
        row.binary_search_by_key(&dst, |&(d, _)| d)
            .map(|i| row[i].1)
            .unwrap_or(0)
    }

    /// Number of distinct traversed links.
    pub fn n_links(&self) -> usize {
        self.transitions.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Popularity,
    PopularityUnpopular,
    Site,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Popularity => "popularity",
            ModelKind::PopularityUnpopular => "popularity-unpopular",
            ModelKind::Site => "site",
        })
    }
}

/// Sparse row-stochastic transition structure.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    rows: Vec<Vec<(PageId, f64)>>,
    kind: ModelKind,
}

impl TransitionModel {
    /// Validates and stores the rows. Entries are sorted by destination;
    /// every nonempty row must sum to one within [`STOCHASTIC_TOLERANCE`]
    /// and every probability must lie in (0, 1].
    pub fn new(mut rows: Vec<Vec<(PageId, f64)>>, kind: ModelKind) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|&(d, _)| d);
            let mut sum = 0.0;
            for &(dst, p) in row.iter() {
                if dst.0 >= n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: dst.0 + 1,
                    });
                }
                if !(p > 0.0 && p <= 1.0 + STOCHASTIC_TOLERANCE) {
                    return Err(Error::InvalidProbability {
                        row: i,
                        col: dst.0,
                        value: p,
                    });
                }
                sum += p;
            }
            if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidParameter(format!(
                    "row {i} lists column {} twice",
                    w[0].0 .0
                )));
            }
            if !row.is_empty() && (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Err(Error::RowNotStochastic { row: i, sum });
            }
        }
        Ok(TransitionModel { rows, kind })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, state: PageId) -> &[(PageId, f64)] {
        &self.rows[state.0]
    }

    pub fn rows(&self) -> impl Iterator<Item = (PageId, &[(PageId, f64)])> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| (PageId(i), r.as_slice()))
    }

    pub fn prob(&self, src: PageId, dst: PageId) -> f64 {
        let row = &self.rows[src.0];
        row.binary_search_by_key(&dst, |&(d, _)| d)
            .map(|i| row[i].1)
            .unwrap_or(0.0)
    }

    /// Number of transitions with nonzero probability.
    pub fn n_transitions(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Computes `pi * P`.
    pub fn left_multiply(&self, pi: &[f64]) -> Vec<f64> {
        let mut next = vec![0.0; self.rows.len()];
        for (i, row) in self.rows.iter().enumerate() {
            let w = pi[i];
            if w == 0.0 {
                continue;
            }
            for &(j, p) in row {
                next[j.0] += w * p;
            }
        }
        next
    }
}

/// A probability vector over pages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankVector {
    pub values: Vec<f64>,
    pub kind: ModelKind,
}

impl RankVector {
    pub fn new(values: Vec<f64>, kind: ModelKind) -> Result<Self> {
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| v.is_nan() || **v < 0.0) {
            return Err(Error::InvalidProbability {
                row: 0,
                col: i,
                value: v,
            });
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
            return Err(Error::RowNotStochastic { row: 0, sum });
        }
        Ok(RankVector { values, kind })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, page: PageId) -> f64 {
        self.values[page.0]
    }

    /// L1 distance to another vector of the same length.
    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// Outcome of a (simulated or replayed) walk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkStats {
    /// Plug-in entropy of the walk's counts, in bits.
    pub entropy: f64,
    /// Number of visits.
    pub visits: u64,
    /// `entropy / visits`, bits per step.
    pub per_step: f64,
    pub pi_hat: Vec<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionFit {
    /// Magnitude of the log-log slope.
    pub exponent: f64,
    pub intercept: f64,
    pub correlation: f64,
    pub points_dropped: usize,
    pub points_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct SummaryStats {
    pub n_pages: usize,
    pub n_links: usize,
    pub n_sessions: u64,
    pub n_requests: u64,
    pub session_length_mean: f64,
    pub session_length_stdev: f64,
    pub session_length_max: usize,
    pub n_initial_pages: usize,
    pub n_terminating_pages: usize,
    pub out_degree_mean: f64,
    pub out_degree_stdev: f64,
    pub in_degree_mean: f64,
    pub in_degree_stdev: f64,
}
