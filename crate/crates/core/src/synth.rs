//! Synthetic sites and navigation sessions.
//!
//! Topologies come from matching power-law distributed out- and in-link
//! stubs at random. Sessions start at a page drawn from the Site Rank, follow
//! outlinks uniformly at random, and end when a per-page termination draw fires or
//! a power-law distributed length cap is reached.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chains::{build_counts, extend_unpopular, site_chain, HomeBalancing};
use crate::error::{Error, Result};
use crate::exact::{entropy_theory, PowerIteration};
use crate::infometrics::Divergence;
use crate::ingest::anchor_home;
use crate::model::{PageId, Pages, RankVector, Session, SessionSet, Topology, TransitionModel};
use crate::walk::{random_walk, walk_length_for, DEFAULT_WALK_FACTOR};

pub const HOME_LABEL: &str = "HP";
pub const DEFAULT_IN_EXPONENT: f64 = 2.1;
pub const DEFAULT_OUT_EXPONENT: f64 = 2.72;
pub const DEFAULT_TERMINATION_PROB: f64 = 0.15;
pub const DEFAULT_LENGTH_EXPONENT: f64 = 2.0;
pub const DEFAULT_MAX_SESSION_LENGTH: usize = 1000;
/// Sessions per page.
pub const SESSIONS_PER_PAGE: f64 = 1.2;

const TOPOLOGY_STREAM: u64 = 0;
const SESSION_STREAM: u64 = 1;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `P(k) ∝ k^(−exponent)` on `1..=max`, sampled by inverting the CDF.
#[derive(Debug, Clone)]
pub struct DiscretePowerLaw {
    cdf: Vec<f64>,
}

impl DiscretePowerLaw {
    pub fn new(exponent: f64, max: usize) -> Result<Self> {
        if !exponent.is_finite() || exponent <= 1.0 {
            return Err(Error::InvalidParameter(format!("power-law exponent must exceed 1, got {exponent}")));
        }
        if max == 0 {
            return Err(Error::InvalidParameter("power-law support must be non-empty".into()));
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = (1..=max)
            .map(|k| {
                acc += (k as f64).powf(-exponent);
                acc
            })
            .collect();
        let total = acc;
        cdf.iter_mut().for_each(|c| *c /= total);
        Ok(DiscretePowerLaw { cdf })
    }

    pub fn max(&self) -> usize {
        self.cdf.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        (self.cdf.partition_point(|&c| c <= u) + 1).min(self.cdf.len())
    }
}

fn sample_cumulative(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

fn reach(out: &[Vec<usize>], start: usize, seen: &mut [bool]) {
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(p) = stack.pop() {
        for &q in &out[p] {
            if !seen[q] {
                seen[q] = true;
                stack.push(q);
            }
        }
    }
}

/// Random site with power-law in- and out-degrees.
///
/// Out- and in-stubs are paired uniformly at random; pairings that would
/// create a self-link or a repeated link are redrawn, up to 100 times the
/// smaller stub total, after which unmatched stubs are dropped. Pages that
/// home cannot reach get a link from home and pages that cannot reach home
/// get a link to it. Page 0 is the home page; pages are numbered in
/// breadth-first order from home and labelled `HP`, `p1`, `p2`, ...
pub fn generate_topology(n_pages: usize, in_exponent: f64, out_exponent: f64, seed: u64) -> Result<Topology> {
    if n_pages < 2 {
        return Err(Error::InvalidParameter("a synthetic site needs at least 2 pages".into()));
    }
    let in_law = DiscretePowerLaw::new(in_exponent, n_pages - 1)?;
    let out_law = DiscretePowerLaw::new(out_exponent, n_pages - 1)?;
    let mut rng = rng_for(seed, TOPOLOGY_STREAM);

    let mut out_stubs = Vec::new();
    let mut in_stubs = Vec::new();
    for page in 0..n_pages {
        out_stubs.extend(std::iter::repeat_n(page, out_law.sample(&mut rng)));
        in_stubs.extend(std::iter::repeat_n(page, in_law.sample(&mut rng)));
    }

    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n_pages];
    let mut links = HashSet::new();
    let budget = 100 * out_stubs.len().min(in_stubs.len());
    let mut failures = 0;
    while !out_stubs.is_empty() && !in_stubs.is_empty() && failures < budget {
        let a = rng.random_range(0..out_stubs.len());
        let b = rng.random_range(0..in_stubs.len());
        let (src, dst) = (out_stubs[a], in_stubs[b]);
        if src == dst || links.contains(&(src, dst)) {
            failures += 1;
            continue;
        }
        links.insert((src, dst));
        out[src].push(dst);
        out_stubs.swap_remove(a);
        in_stubs.swap_remove(b);
    }

    let home = 0;
    out[home].push(home);
    let mut seen = vec![false; n_pages];
    reach(&out, home, &mut seen);
    for page in 1..n_pages {
        if !seen[page] {
            out[home].push(page);
            reach(&out, page, &mut seen);
        }
    }
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n_pages];
    for (src, row) in out.iter().enumerate() {
        for &dst in row {
            incoming[dst].push(src);
        }
    }
    let mut back = vec![false; n_pages];
    reach(&incoming, home, &mut back);
    for page in 1..n_pages {
        if !back[page] {
            out[page].push(home);
            incoming[home].push(page);
            reach(&incoming, page, &mut back);
        }
    }

    // Renumber in BFS order so that written edge lists reload identically.
    let provisional = Topology::from_rows(
        Pages::from_labels((0..n_pages).map(|i| i.to_string()))?,
        PageId(home),
        out.into_iter()
            .map(|mut r| {
                r.sort_unstable();
                r.into_iter().map(PageId).collect()
            })
            .collect(),
    );
    let order = provisional.bfs_order();
    debug_assert_eq!(order.len(), n_pages);
    let mut new_index = vec![0; n_pages];
    for (new, old) in order.iter().enumerate() {
        new_index[old.0] = new;
    }
    let labels = (0..n_pages).map(|i| if i == 0 { HOME_LABEL.to_owned() } else { format!("p{i}") });
    let relabelled: Vec<(PageId, PageId)> = provisional
        .links()
        .map(|(s, d)| (PageId(new_index[s.0]), PageId(new_index[d.0])))
        .collect();
    Topology::new(Pages::from_labels(labels)?, PageId(0), &relabelled)
}

/// Upper bound on session length before home anchoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthCap {
    /// Cap drawn per session from a discrete power law on `1..=max`.
    PowerLaw { exponent: f64, max: usize },
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SessionParams {
    pub termination_prob: f64,
    pub length_cap: LengthCap,
}

impl Default for SessionParams {
    fn default() -> Self {
        SessionParams {
            termination_prob: DEFAULT_TERMINATION_PROB,
            length_cap: LengthCap::PowerLaw {
                exponent: DEFAULT_LENGTH_EXPONENT,
                max: DEFAULT_MAX_SESSION_LENGTH,
            },
        }
    }
}

/// Sessions before home anchoring, indexed in the topology's page table.
pub fn generate_raw_sessions(
    topo: &Topology,
    n_sessions: usize,
    seed: u64,
    params: &SessionParams,
) -> Result<SessionSet> {
    let p_end = params.termination_prob;
    if !(0.0..=1.0).contains(&p_end) {
        return Err(Error::InvalidParameter(format!("termination probability {p_end} outside [0, 1]")));
    }
    let cap_law = match params.length_cap {
        LengthCap::PowerLaw { exponent, max } => Some(DiscretePowerLaw::new(exponent, max)?),
        LengthCap::Unbounded if p_end == 0.0 => {
            return Err(Error::InvalidParameter(
                "sessions need either a termination probability or a length cap".into(),
            ))
        }
        LengthCap::Unbounded => None,
    };
    if n_sessions == 0 {
        return Err(Error::InvalidParameter("n_sessions must be at least 1".into()));
    }

    let surfer = site_chain(topo)?;
    let start = PowerIteration::default().solve(&surfer)?.rank;
    let mut acc = 0.0;
    let start_cdf: Vec<f64> = start
        .values
        .iter()
        .map(|&p| {
            acc += p;
            acc
        })
        .collect();
    let mut rng = rng_for(seed, SESSION_STREAM);
    let mut sessions = Vec::with_capacity(n_sessions);
    for _ in 0..n_sessions {
        let mut page = PageId(sample_cumulative(&start_cdf, rng.random()));
        let cap = cap_law.as_ref().map_or(usize::MAX, |law| law.sample(&mut rng));
        let mut pages = vec![page];
        while pages.len() < cap {
            if rng.random::<f64>() < p_end {
                break;
            }
            let out = topo.outlinks(page);
            if out.is_empty() {
                break;
            }
            page = out[rng.random_range(0..out.len())];
            pages.push(page);
        }
        sessions.push(Session::new(pages, 1));
    }
    Ok(SessionSet::new(sessions, topo.pages().clone()))
}

/// Home-anchored synthetic sessions.
pub fn generate_sessions(topo: &Topology, n_sessions: usize, seed: u64, params: &SessionParams) -> Result<SessionSet> {
    let raw = generate_raw_sessions(topo, n_sessions, seed, params)?;
    Ok(anchor_home(&raw, topo.pages().label(topo.home())))
}

/// `ceil(1.2 · N)`.
pub fn default_session_count(n_pages: usize) -> usize {
    (SESSIONS_PER_PAGE * n_pages as f64).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiteParams {
    pub n_pages: usize,
    pub in_exponent: f64,
    pub out_exponent: f64,
    /// Defaults to [`default_session_count`].
    pub n_sessions: Option<usize>,
    pub sessions: SessionParams,
}

impl SiteParams {
    pub fn new(n_pages: usize) -> Self {
        SiteParams {
            n_pages,
            in_exponent: DEFAULT_IN_EXPONENT,
            out_exponent: DEFAULT_OUT_EXPONENT,
            n_sessions: None,
            sessions: SessionParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSite {
    /// Topology as generated.
    pub generated: Topology,
    /// Generated topology plus the home links introduced by session anchoring.
    pub topology: Topology,
    pub raw_sessions: SessionSet,
    pub sessions: SessionSet,
}

/// Topology and anchored sessions sharing one page table, numbered so that
/// the written topology reloads identically.
pub fn generate_site(params: &SiteParams, seed: u64) -> Result<SyntheticSite> {
    let generated = generate_topology(params.n_pages, params.in_exponent, params.out_exponent, seed)?;
    let n_sessions = params.n_sessions.unwrap_or_else(|| default_session_count(params.n_pages));
    let raw_sessions = generate_raw_sessions(&generated, n_sessions, seed, &params.sessions)?;
    let sessions = anchor_home(&raw_sessions, generated.pages().label(generated.home()));
    let traversed: Vec<(PageId, PageId)> = sessions
        .sessions
        .iter()
        .flat_map(|s| s.pages.windows(2).map(|w| (w[0], w[1])))
        .collect();
    // Anchoring can add links that change the breadth-first numbering.
    let topology = generated.with_links(traversed)?.canonical();
    let pages = topology.pages();
    Ok(SyntheticSite {
        generated: generated.reindex(pages)?,
        raw_sessions: raw_sessions.reindex(pages)?,
        sessions: sessions.reindex(pages)?,
        topology,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub in_exponent: f64,
    pub out_exponent: f64,
    pub sessions: SessionParams,
    pub walk_factor: u64,
    #[serde(skip)]
    pub balancing: HomeBalancing,
}

impl ExperimentConfig {
    pub fn new(sizes: Vec<usize>, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            sizes,
            seeds,
            in_exponent: DEFAULT_IN_EXPONENT,
            out_exponent: DEFAULT_OUT_EXPONENT,
            sessions: SessionParams::default(),
            walk_factor: DEFAULT_WALK_FACTOR,
            balancing: HomeBalancing::ViaHome,
        }
    }
}

/// One row of the scaling report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub size: usize,
    #[serde(rename = "N")]
    pub n_pages: usize,
    #[serde(rename = "L")]
    pub n_links: usize,
    #[serde(rename = "H_walk_pop")]
    pub h_walk_pop: f64,
    #[serde(rename = "H_theory_pop")]
    pub h_theory_pop: f64,
    #[serde(rename = "H_walk_site")]
    pub h_walk_site: f64,
    #[serde(rename = "H_theory_site")]
    pub h_theory_site: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "Dmax")]
    pub d_max: f64,
    #[serde(rename = "D_normalized")]
    pub d_normalized: f64,
    pub seed: u64,
}

/// Models and ranks of one experiment cell, kept for follow-up analysis.
#[derive(Debug, Clone)]
pub struct ExperimentCell {
    pub row: ExperimentRow,
    pub site: SyntheticSite,
    /// Popularity chain with unpopular links.
    pub popularity: TransitionModel,
    /// Site chain over the topology including unpopular and balancing links.
    pub site_model: TransitionModel,
    /// Stationary vector of `popularity`.
    pub popularity_rank: RankVector,
    /// Site Rank of the generated topology.
    pub site_rank: RankVector,
    /// Stationary vector of `site_model`.
    pub site_model_rank: RankVector,
}

/// Builds both chains for one synthetic site and measures them.
pub fn run_cell(size: usize, seed: u64, config: &ExperimentConfig) -> Result<ExperimentCell> {
    let params = SiteParams {
        n_pages: size,
        in_exponent: config.in_exponent,
        out_exponent: config.out_exponent,
        n_sessions: None,
        sessions: config.sessions,
    };
    let site = generate_site(&params, seed)?;
    let home = site.topology.home();
    let counts = build_counts(&site.sessions, home)?;
    let ext = extend_unpopular(&counts, &site.topology, config.balancing)?;
    let popularity = ext.chain()?;
    let site_model = ext.site_chain()?;

    let solver = PowerIteration::default();
    let popularity_rank = match config.balancing {
        HomeBalancing::ViaHome => ext.stationary()?,
        HomeBalancing::Off => solver.solve(&popularity)?.rank,
    };
    let site_model_rank = solver.solve(&site_model)?.rank;
    let site_rank = solver.solve(&site_chain(&site.generated)?)?.rank;

    let pop_walk = random_walk(
        &popularity,
        home,
        walk_length_for(&popularity, config.walk_factor),
        seed.wrapping_add(1),
    )?;
    let site_walk = random_walk(
        &site_model,
        home,
        walk_length_for(&site_model, config.walk_factor),
        seed.wrapping_add(2),
    )?;
    let div = Divergence::between(&popularity, &site_model)?;

    let row = ExperimentRow {
        size,
        n_pages: ext.topology.n_pages(),
        n_links: ext.topology.n_links(),
        h_walk_pop: pop_walk.per_step,
        h_theory_pop: entropy_theory(&popularity, &popularity_rank)?,
        h_walk_site: site_walk.per_step,
        h_theory_site: entropy_theory(&site_model, &site_model_rank)?,
        d: div.relative_entropy,
        d_max: div.max_relative_entropy,
        d_normalized: div.normalized,
        seed,
    };
    Ok(ExperimentCell {
        row,
        site,
        popularity,
        site_model,
        popularity_rank,
        site_rank,
        site_model_rank,
    })
}

/// Runs every (size, seed) cell, sizes outermost.
pub fn run_scaling_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentCell>> {
    if config.sizes.is_empty() {
        return Err(Error::InvalidParameter("at least one site size is required".into()));
    }
    if config.seeds.is_empty() {
        return Err(Error::InvalidParameter("at least one seed is required".into()));
    }
    config
        .sizes
        .iter()
        .flat_map(|&size| config.seeds.iter().map(move |&seed| (size, seed)))
        .map(|(size, seed)| run_cell(size, seed, config))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{load_topology, write_topology};
    use crate::model::SessionSet;

    #[test]
    fn power_law_sampler_respects_support_and_shape() {
        let law = DiscretePowerLaw::new(2.0, 50).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws: Vec<usize> = (0..20_000).map(|_| law.sample(&mut rng)).collect();
        assert!(draws.iter().all(|&k| (1..=50).contains(&k)));
        let ones = draws.iter().filter(|&&k| k == 1).count() as f64 / draws.len() as f64;
        let zeta: f64 = (1..=50).map(|k| (k as f64).powi(-2)).sum();
        assert!((ones - 1.0 / zeta).abs() < 0.02, "{ones}");
        assert!(DiscretePowerLaw::new(1.0, 5).is_err());
        assert!(DiscretePowerLaw::new(2.0, 0).is_err());
    }

    #[test]
    fn two_page_site() {
        let t = generate_topology(2, 2.5, 2.5, 9).unwrap();
        assert_eq!(t.n_pages(), 2);
        assert_eq!(t.n_links(), 3);
        assert!(t.has_link(PageId(0), PageId(1)));
        assert!(t.has_link(PageId(1), PageId(0)));
        assert!(t.has_link(PageId(0), PageId(0)));
        assert_eq!(t.pages().labels(), ["HP", "p1"]);
    }

    #[test]
    fn topologies_are_deterministic_and_valid() {
        let a = generate_topology(5, 2.5, 2.5, 42).unwrap();
        let b = generate_topology(5, 2.5, 2.5, 42).unwrap();
        assert_eq!(a, b);
        for seed in 0..20 {
            let t = generate_topology(60, 2.1, 2.72, seed).unwrap();
            assert!(t.reaches_home().iter().all(|&r| r));
            assert_eq!(load_topology(&write_topology(&t), HOME_LABEL).unwrap(), t);
        }
        assert!(generate_topology(1, 2.0, 2.0, 0).is_err());
        assert!(generate_topology(10, 0.5, 2.0, 0).is_err());
    }

    fn raw_lengths(s: &SessionSet) -> Vec<usize> {
        s.sessions.iter().map(|s| s.len()).collect()
    }

    #[test]
    fn immediate_termination_gives_single_pages() {
        let t = generate_topology(30, 2.1, 2.72, 3).unwrap();
        let params = SessionParams {
            termination_prob: 1.0,
            ..SessionParams::default()
        };
        let raw = generate_raw_sessions(&t, 40, 5, &params).unwrap();
        assert!(raw_lengths(&raw).iter().all(|&l| l == 1));
        let anchored = generate_sessions(&t, 40, 5, &params).unwrap();
        for s in &anchored.sessions {
            assert_eq!(s.pages.first(), Some(&t.home()));
            assert_eq!(s.pages.last(), Some(&t.home()));
            assert!(s.len() <= 3);
        }
    }

    #[test]
    fn sessions_are_reproducible() {
        let t = generate_topology(5, 2.5, 2.5, 1).unwrap();
        let p = SessionParams::default();
        assert_eq!(generate_sessions(&t, 6, 7, &p).unwrap(), generate_sessions(&t, 6, 7, &p).unwrap());
        let unbounded = SessionParams {
            termination_prob: 0.0,
            length_cap: LengthCap::Unbounded,
        };
        assert!(generate_sessions(&t, 6, 7, &unbounded).is_err());
        assert!(generate_sessions(&t, 0, 7, &p).is_err());
    }

    #[test]
    fn site_topology_contains_every_traversed_link() {
        let site = generate_site(&SiteParams::new(80), 4).unwrap();
        for s in &site.sessions.sessions {
            for w in s.pages.windows(2) {
                assert!(site.topology.has_link(w[0], w[1]));
            }
        }
        assert_eq!(site.sessions.len(), 96);
        assert!(site.topology.n_links() >= site.generated.n_links());
    }

    #[test]
    fn dense_site_with_tiny_home_mass_solves() {
        let t = generate_topology(200, 1.9, 2.1, 1).unwrap();
        let pi = PowerIteration::default().solve(&site_chain(&t).unwrap()).unwrap().rank;
        assert!(pi.values.iter().all(|&p| p >= 0.0));
        assert!(pi.get(PageId(0)) < 1e-6);
    }

    #[test]
    fn empty_experiment_is_rejected() {
        assert!(run_scaling_experiment(&ExperimentConfig::new(vec![], vec![1])).is_err());
    }

    #[test]
    fn tiny_experiment_cell() {
        let cfg = ExperimentConfig::new(vec![5], vec![3]);
        let cells = run_scaling_experiment(&cfg).unwrap();
        assert_eq!(cells.len(), 1);
        let r = &cells[0].row;
        assert_eq!(r.n_pages, 5);
        assert!(r.d >= 0.0 && r.d <= r.d_max + 1e-9);
        assert!((0.0..=1.0).contains(&r.d_normalized));
    }
}
