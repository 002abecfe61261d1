//! Count models and the three transition models built from them.
//!
//! Sessions are concatenated into one closed walk: the terminal home of a
//! session is the initial home of the next, and a single home self-loop
//! transition closes the walk after the last session. With that convention
//! every page's visit count equals its outgoing traversal count, so `m / t`
//! is an exact fixed point of the popularity chain.

use crate::error::{Error, Result};
use crate::model::{CountModel, ModelKind, PageId, RankVector, SessionSet, Topology, TransitionModel};

/// Counts visits and link traversals of the concatenated session walk.
pub fn build_counts(sessions: &SessionSet, home: PageId) -> Result<CountModel> {
    let n = sessions.pages.len();
    if home.0 >= n {
        return Err(Error::InvalidParameter(format!("home index {} out of range", home.0)));
    }
    let mut triples = Vec::new();
    for (index, s) in sessions.sessions.iter().enumerate() {
        if s.pages.first() != Some(&home) || s.pages.last() != Some(&home) {
            return Err(Error::NotAnchored { index });
        }
        triples.extend(s.pages.windows(2).map(|w| (w[0], w[1], s.weight)));
    }
    triples.push((home, home, 1));
    Ok(CountModel::from_transitions(n, home, triples))
}

fn chain_from_counts(counts: &CountModel, kind: ModelKind) -> Result<TransitionModel> {
    let rows = counts
        .transitions
        .iter()
        .zip(&counts.visits)
        .map(|(row, &m)| {
            row.iter()
                .map(|&(j, c)| (j, c as f64 / m as f64))
                .collect::<Vec<_>>()
        })
        .collect();
    TransitionModel::new(rows, kind)
}

/// Empirical chain `m_ij / m_i`. Pages never visited get an empty row.
pub fn popularity_chain(counts: &CountModel) -> Result<TransitionModel> {
    chain_from_counts(counts, ModelKind::Popularity)
}

/// Whether untraversed links are followed by routing count imbalances
/// through the home page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HomeBalancing {
    /// Unpopular links get one count each and nothing else changes.
    Off,
    /// After the unit counts are added, every page whose outgoing count
    /// exceeds its incoming count receives the difference on a link from
    /// home, and every page with the opposite surplus sends it on a link to
    /// home. Missing home links are added to the topology.
    #[default]
    ViaHome,
}

/// Traversal counts extended with unpopular links, and the topology they live on.
#[derive(Debug, Clone, PartialEq)]
pub struct UnpopularExtension {
    pub counts: CountModel,
    pub topology: Topology,
}

impl UnpopularExtension {
    pub fn chain(&self) -> Result<TransitionModel> {
        chain_from_counts(&self.counts, ModelKind::PopularityUnpopular)
    }

    /// `m'_i / t'`. This is the stationary vector of [`Self::chain`] when
    /// the extension was built with [`HomeBalancing::ViaHome`].
    pub fn stationary(&self) -> Result<RankVector> {
        stationary_from_counts(&self.counts, ModelKind::PopularityUnpopular)
    }

    pub fn site_chain(&self) -> Result<TransitionModel> {
        site_chain(&self.topology)
    }
}

fn check_compatible(counts: &CountModel, topo: &Topology) -> Result<()> {
    if counts.n_pages() != topo.n_pages() {
        return Err(Error::DimensionMismatch {
            expected: topo.n_pages(),
            found: counts.n_pages(),
        });
    }
    if counts.home != topo.home() {
        return Err(Error::InvalidParameter("counts and topology disagree on the home page".into()));
    }
    let pages = topo.pages();
    for (i, row) in counts.transitions.iter().enumerate() {
        for &(j, _) in row {
            if !topo.has_link(PageId(i), j) {
                return Err(Error::LinkNotInTopology {
                    src: pages.label(PageId(i)).to_owned(),
                    dst: pages.label(j).to_owned(),
                });
            }
        }
    }
    Ok(())
}

/// Adds every untraversed topology link to the counts with a count of one.
pub fn extend_unpopular(
    counts: &CountModel,
    topo: &Topology,
    balancing: HomeBalancing,
) -> Result<UnpopularExtension> {
    check_compatible(counts, topo)?;
    let n = topo.n_pages();
    let home = topo.home();
    let mut triples = Vec::with_capacity(topo.n_links() + n);
    let mut unpopular = vec![0u64; n];
    for (src, dst) in topo.links() {
        let c = counts.count(src, dst);
        if c == 0 {
            unpopular[src.0] += 1;
            triples.push((src, dst, 1));
        } else {
            triples.push((src, dst, c));
        }
    }

    let mut topology = topo.clone();
    if balancing == HomeBalancing::ViaHome {
        let mut surplus = vec![0i128; n];
        for &(src, dst, c) in &triples {
            surplus[src.0] += c as i128;
            surplus[dst.0] -= c as i128;
        }
        let mut added = Vec::new();
        for (j, &s) in surplus.iter().enumerate() {
            let page = PageId(j);
            if page == home || s == 0 {
                continue;
            }
            let link = if s > 0 { (home, page) } else { (page, home) };
            triples.push((link.0, link.1, s.unsigned_abs() as u64));
            if !topo.has_link(link.0, link.1) {
                added.push(link);
            }
        }
        if !added.is_empty() {
            topology = topo.with_links(added)?;
        }
    }

    let mut extended = CountModel::from_transitions(n, home, triples);
    extended.unpopular = unpopular;
    Ok(UnpopularExtension {
        counts: extended,
        topology,
    })
}

/// Unpopular-link chain: `m_ij / (m_i + u_i)` on traversed links and
/// `1 / (m_i + u_i)` on untraversed ones, without home balancing.
pub fn popularity_chain_unpopular(counts: &CountModel, topo: &Topology) -> Result<TransitionModel> {
    extend_unpopular(counts, topo, HomeBalancing::Off)?.chain()
}

/// Uniform random-surfer chain: home moves to each of the N pages with
/// probability `1/N`, every other page to each outlink with `1/d_i`.
pub fn site_chain(topo: &Topology) -> Result<TransitionModel> {
    let n = topo.n_pages();
    let home = topo.home();
    let mut rows = Vec::with_capacity(n);
    for page in topo.pages().ids() {
        if page == home {
            let p = 1.0 / n as f64;
            rows.push(topo.pages().ids().map(|j| (j, p)).collect());
            continue;
        }
        let out = topo.outlinks(page);
        if out.is_empty() {
            return Err(Error::DeadEnd(topo.pages().label(page).to_owned()));
        }
        let p = 1.0 / out.len() as f64;
        rows.push(out.iter().map(|&j| (j, p)).collect());
    }
    TransitionModel::new(rows, ModelKind::Site)
}

/// `pi_i = m_i / t`.
pub fn stationary_from_counts(counts: &CountModel, kind: ModelKind) -> Result<RankVector> {
    if counts.total == 0 {
        return Err(Error::InvalidParameter("count model has no visits".into()));
    }
    let t = counts.total as f64;
    RankVector::new(counts.visits.iter().map(|&m| m as f64 / t).collect(), kind)
}

/// True when every page's incoming count equals its outgoing count.
pub fn is_balanced(counts: &CountModel) -> bool {
    let mut incoming = vec![0u64; counts.n_pages()];
    for row in &counts.transitions {
        for &(j, c) in row {
            incoming[j.0] += c;
        }
    }
    incoming == counts.visits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{infer_topology, load_topology, parse_sessions};

    const TABLE1: &str = "3\tHP A1 A2 A3 HP\n2\tHP A4 A1 A4 A2 A3 HP\n2\tHP A1 A4 A3 HP\n4\tHP A1 A4 A2 HP\n";

    fn table1() -> (SessionSet, CountModel) {
        let s = parse_sessions(TABLE1).unwrap();
        let home = s.pages.get("HP").unwrap();
        let c = build_counts(&s, home).unwrap();
        (s, c)
    }

    fn id(s: &SessionSet, l: &str) -> PageId {
        s.pages.get(l).unwrap()
    }

    #[test]
    fn table1_counts() {
        let (s, c) = table1();
        let m: Vec<u64> = ["HP", "A1", "A2", "A3", "A4"].iter().map(|l| c.visits[id(&s, l).0]).collect();
        assert_eq!(m, [12, 11, 9, 7, 10]);
        assert_eq!(c.total, 49);
        let expect = [
            ("HP", "A1", 9),
            ("HP", "A4", 2),
            ("HP", "HP", 1),
            ("A1", "A2", 3),
            ("A1", "A4", 8),
            ("A2", "A3", 5),
            ("A2", "HP", 4),
            ("A3", "HP", 7),
            ("A4", "A1", 2),
            ("A4", "A2", 6),
            ("A4", "A3", 2),
        ];
        for (a, b, n) in expect {
            assert_eq!(c.count(id(&s, a), id(&s, b)), n, "{a}->{b}");
        }
        assert_eq!(c.n_links(), 11);
        assert!(is_balanced(&c));
    }

    #[test]
    fn degenerate_and_small_walks() {
        let s = parse_sessions("HP\n").unwrap();
        let c = build_counts(&s, PageId(0)).unwrap();
        assert_eq!(c.visits, vec![1]);
        assert_eq!(c.count(PageId(0), PageId(0)), 1);
        assert_eq!(c.total, 1);
        let p = popularity_chain(&c).unwrap();
        assert_eq!(p.row(PageId(0)), &[(PageId(0), 1.0)]);

        let s = parse_sessions("2\tHP A1 HP\n").unwrap();
        let c = build_counts(&s, PageId(0)).unwrap();
        assert_eq!(c.visits, vec![3, 2]);
        assert_eq!(c.count(PageId(0), PageId(1)), 2);
        assert_eq!(c.count(PageId(1), PageId(0)), 2);
        assert_eq!(c.count(PageId(0), PageId(0)), 1);
        assert_eq!(c.total, 5);
        let pi = stationary_from_counts(&c, ModelKind::Popularity).unwrap();
        assert_eq!(pi.values, vec![0.6, 0.4]);
    }

    #[test]
    fn unanchored_sessions_are_rejected() {
        let s = parse_sessions("HP A\n").unwrap();
        assert_eq!(build_counts(&s, PageId(0)), Err(Error::NotAnchored { index: 0 }));
    }

    #[test]
    fn popularity_rows() {
        let (s, c) = table1();
        let p = popularity_chain(&c).unwrap();
        let hp = id(&s, "HP");
        assert_eq!(p.prob(hp, id(&s, "A1")), 9.0 / 12.0);
        assert_eq!(p.prob(hp, id(&s, "A4")), 2.0 / 12.0);
        assert_eq!(p.prob(hp, hp), 1.0 / 12.0);
        assert_eq!(p.row(id(&s, "A3")), &[(hp, 1.0)]);
        assert_eq!(p.kind(), ModelKind::Popularity);
    }

    #[test]
    fn uniform_usage_matches_site_rows() {
        let s = parse_sessions("HP A HP\nHP B HP\n").unwrap();
        let c = build_counts(&s, PageId(0)).unwrap();
        let t = infer_topology(&s, "HP").unwrap();
        let p = popularity_chain(&c).unwrap();
        let q = site_chain(&t).unwrap();
        for page in [PageId(1), PageId(2)] {
            assert_eq!(p.row(page), q.row(page));
        }
    }

    const FIG2: &str = "HP\tA1\nHP\tA4\nHP\tHP\nHP\tA3\nA1\tA2\nA1\tA4\nA1\tHP\nA2\tA3\nA2\tHP\nA2\tA1\n\
                        A3\tHP\nA3\tA2\nA3\tA4\nA4\tA1\nA4\tA2\nA4\tA3\nA4\tHP\n";

    fn fig2() -> (SessionSet, Topology, CountModel) {
        let topo = load_topology(FIG2, "HP").unwrap();
        let s = parse_sessions(TABLE1).unwrap().reindex(topo.pages()).unwrap();
        let c = build_counts(&s, topo.home()).unwrap();
        (s, topo, c)
    }

    #[test]
    fn unpopular_rows_count_untraversed_links_once() {
        let (s, topo, c) = fig2();
        let p = popularity_chain_unpopular(&c, &topo).unwrap();
        let a3 = id(&s, "A3");
        assert!((p.prob(a3, id(&s, "HP")) - 7.0 / 9.0).abs() < 1e-15);
        assert!((p.prob(a3, id(&s, "A2")) - 1.0 / 9.0).abs() < 1e-15);
        assert!((p.prob(a3, id(&s, "A4")) - 1.0 / 9.0).abs() < 1e-15);
        let a1 = id(&s, "A1");
        assert!((p.prob(a1, id(&s, "A2")) - 3.0 / 12.0).abs() < 1e-15);
        assert!((p.prob(a1, id(&s, "A4")) - 8.0 / 12.0).abs() < 1e-15);
        assert!((p.prob(a1, id(&s, "HP")) - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(p.kind(), ModelKind::PopularityUnpopular);
    }

    #[test]
    fn home_balancing_on_figure2() {
        let (s, topo, c) = fig2();
        let ext = extend_unpopular(&c, &topo, HomeBalancing::ViaHome).unwrap();
        assert!(is_balanced(&ext.counts));
        // The untraversed HP->A3 link carries one unit plus one balancing unit.
        assert_eq!(ext.counts.count(id(&s, "HP"), id(&s, "A3")), 2);
        let m: Vec<u64> = ["HP", "A1", "A2", "A3", "A4"]
            .iter()
            .map(|l| ext.counts.visits[id(&s, l).0])
            .collect();
        assert_eq!(m, [14, 12, 10, 9, 11]);
        assert_eq!(ext.counts.total, 56);
        assert_eq!(ext.topology, topo);
        let u: Vec<u64> = ["HP", "A1", "A2", "A3", "A4"]
            .iter()
            .map(|l| ext.counts.unpopular[id(&s, l).0])
            .collect();
        assert_eq!(u, [1, 1, 1, 2, 1]);
    }

    #[test]
    fn balancing_adds_missing_home_links() {
        // X is never visited but receives two unit counts and sends one, so
        // it needs a link back to home that the topology lacks.
        let topo = load_topology("HP\tA\nA\tHP\nA\tX\nX\tA\nHP\tY\nY\tX\n", "HP").unwrap();
        let s = parse_sessions("HP A HP\n").unwrap().reindex(topo.pages()).unwrap();
        let c = build_counts(&s, topo.home()).unwrap();
        let ext = extend_unpopular(&c, &topo, HomeBalancing::ViaHome).unwrap();
        assert!(is_balanced(&ext.counts));
        let x = topo.pages().get("X").unwrap();
        assert!(!topo.has_link(x, topo.home()));
        assert!(ext.topology.has_link(x, topo.home()));
        assert_eq!(ext.counts.count(x, topo.home()), 1);
        assert_eq!(ext.topology.n_links(), topo.n_links() + 1);

        let topo = load_topology("HP\tA\nA\tB\nB\tHP\nA\tC\nC\tB\n", "HP").unwrap();
        let s = parse_sessions("HP A B HP\n").unwrap().reindex(topo.pages()).unwrap();
        let c = build_counts(&s, topo.home()).unwrap();
        let ext = extend_unpopular(&c, &topo, HomeBalancing::ViaHome).unwrap();
        assert!(is_balanced(&ext.counts));
        // A->C and C->B are unit counts; B now receives one more than it sends.
        let (b, hp) = (topo.pages().get("B").unwrap(), topo.home());
        assert_eq!(ext.counts.count(b, hp), 2);
        let plain = extend_unpopular(&c, &topo, HomeBalancing::Off).unwrap();
        assert!(!is_balanced(&plain.counts));
    }

    #[test]
    fn no_unpopular_links_reduces_to_popularity() {
        let (s, c) = table1();
        let topo = infer_topology(&s, "HP").unwrap();
        let p = popularity_chain(&c).unwrap();
        let p2 = popularity_chain_unpopular(&c, &topo).unwrap();
        for (i, row) in p.rows() {
            assert_eq!(row, p2.row(i));
        }
        let ext = extend_unpopular(&c, &topo, HomeBalancing::ViaHome).unwrap();
        assert_eq!(ext.counts.visits, c.visits);
    }

    #[test]
    fn unvisited_page_gets_uniform_row() {
        let topo = load_topology("HP\tA\nA\tHP\nHP\tB\nB\tHP\nB\tA\n", "HP").unwrap();
        let s = parse_sessions("HP A HP\n").unwrap().reindex(topo.pages()).unwrap();
        let c = build_counts(&s, topo.home()).unwrap();
        let p = popularity_chain_unpopular(&c, &topo).unwrap();
        let b = topo.pages().get("B").unwrap();
        assert_eq!(p.row(b).len(), 2);
        assert!(p.row(b).iter().all(|&(_, x)| x == 0.5));
    }

    #[test]
    fn traversed_link_must_exist() {
        let topo = load_topology("HP\tA\nA\tHP\nHP\tB\nB\tHP\n", "HP").unwrap();
        let s = parse_sessions("HP A B HP\n").unwrap().reindex(topo.pages()).unwrap();
        let c = build_counts(&s, topo.home()).unwrap();
        assert_eq!(
            popularity_chain_unpopular(&c, &topo),
            Err(Error::LinkNotInTopology {
                src: "A".into(),
                dst: "B".into()
            })
        );
    }

    #[test]
    fn site_rows() {
        let (s, _) = table1();
        let topo = infer_topology(&s, "HP").unwrap();
        let q = site_chain(&topo).unwrap();
        assert_eq!(q.row(topo.home()).len(), 5);
        assert!(q.row(topo.home()).iter().all(|&(_, p)| p == 0.2));
        let a4 = id(&s, "A4");
        assert_eq!(q.row(a4).len(), 3);
        assert!(q.row(a4).iter().all(|&(_, p)| p == 1.0 / 3.0));
        assert_eq!(q.n_transitions(), 13);

        let two = load_topology("HP\tA\nA\tHP\n", "HP").unwrap();
        let q = site_chain(&two).unwrap();
        assert_eq!(q.row(PageId(0)), &[(PageId(0), 0.5), (PageId(1), 0.5)]);
        assert_eq!(q.row(PageId(1)), &[(PageId(0), 1.0)]);

        let (s2, t2, _) = fig2();
        let q = site_chain(&t2).unwrap();
        let a1 = id(&s2, "A1");
        assert_eq!(q.row(a1).len(), 3);
        assert!(q.row(a1).iter().all(|&(_, p)| p == 1.0 / 3.0));
    }

    #[test]
    fn site_chain_rejects_dead_ends() {
        let topo = load_topology("HP\tA\n", "HP").unwrap();
        assert_eq!(site_chain(&topo), Err(Error::DeadEnd("A".into())));
    }

    #[test]
    fn table1_stationary() {
        let (s, c) = table1();
        let pi = stationary_from_counts(&c, ModelKind::Popularity).unwrap();
        let expect = [12.0, 11.0, 9.0, 7.0, 10.0];
        for (l, e) in ["HP", "A1", "A2", "A3", "A4"].iter().zip(expect) {
            assert_eq!(pi.get(id(&s, l)), e / 49.0);
        }
        let single = build_counts(&parse_sessions("HP\n").unwrap(), PageId(0)).unwrap();
        assert_eq!(stationary_from_counts(&single, ModelKind::Popularity).unwrap().values, vec![1.0]);
    }
}
