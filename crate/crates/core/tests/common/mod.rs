#![allow(dead_code)]

use std::path::PathBuf;

use proptest::prelude::*;

use siterank::chains::{build_counts, extend_unpopular, HomeBalancing, UnpopularExtension};
use siterank::ingest::{infer_topology, load_topology, parse_sessions};
use siterank::model::{CountModel, ModelKind, PageId, SessionSet, Topology, TransitionModel};

pub const HOME: &str = "HP";
pub const WORKED_LABELS: [&str; 5] = ["HP", "A1", "A2", "A3", "A4"];

pub fn fixture(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

/// The worked example: sessions, the site they induce, and the site with
/// unpopular links added.
pub struct Worked {
    pub sessions: SessionSet,
    pub topology: Topology,
    pub counts: CountModel,
    pub unpopular_topology: Topology,
    /// Sessions and counts renumbered to `unpopular_topology`'s page table.
    pub unpopular_counts: CountModel,
}

impl Worked {
    pub fn load() -> Self {
        let sessions = parse_sessions(&fixture("worked.sessions.txt")).unwrap();
        let topology = infer_topology(&sessions, HOME).unwrap();
        let counts = build_counts(&sessions, topology.home()).unwrap();
        let unpopular_topology = load_topology(&fixture("worked_unpopular.topology.tsv"), HOME).unwrap();
        let reindexed = sessions.reindex(unpopular_topology.pages()).unwrap();
        let unpopular_counts = build_counts(&reindexed, unpopular_topology.home()).unwrap();
        Worked {
            sessions,
            topology,
            counts,
            unpopular_topology,
            unpopular_counts,
        }
    }

    pub fn extension(&self, balancing: HomeBalancing) -> UnpopularExtension {
        extend_unpopular(&self.unpopular_counts, &self.unpopular_topology, balancing).unwrap()
    }
}

/// Values in `labels` order, looked up through `pages`.
pub fn by_label(values: &[f64], pages: &siterank::model::Pages, labels: &[&str]) -> Vec<f64> {
    labels.iter().map(|l| values[pages.get(l).unwrap().0]).collect()
}

/// Rounding to `decimals` places, half away from zero.
pub fn round_to(x: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (x * s).round() / s
}

pub fn top10(name: &str) -> Vec<String> {
    fixture(name)
        .lines()
        .map(|l| l.split('\t').nth(1).unwrap().to_owned())
        .collect()
}

/// Session files over up to `max_pages` labels; every session is a nonempty
/// label sequence and is later anchored at home.
pub fn session_text(max_pages: usize) -> impl Strategy<Value = String> {
    let session = (prop::collection::vec(0..max_pages, 1..8), 1u64..4);
    prop::collection::vec(session, 1..12).prop_map(|sessions| {
        sessions
            .into_iter()
            .map(|(pages, count)| {
                let labels: Vec<String> = std::iter::once(HOME.to_owned())
                    .chain(pages.into_iter().map(|p| if p == 0 { HOME.to_owned() } else { format!("p{p}") }))
                    .chain(std::iter::once(HOME.to_owned()))
                    .collect();
                format!("{count}\t{}\n", labels.join(" "))
            })
            .collect()
    })
}

fn normalized(weights: Vec<f64>) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// A pair `(P, Q)` on `n` states with Q strictly positive everywhere and P
/// positive on a random nonempty subset of each row.
pub fn model_pair() -> impl Strategy<Value = (TransitionModel, TransitionModel)> {
    (2usize..7).prop_flat_map(|n| {
        let q_rows = prop::collection::vec(prop::collection::vec(0.05f64..1.0, n), n);
        let p_rows = prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), 0.05f64..1.0], n), n);
        let keep = prop::collection::vec(0..n, n);
        (q_rows, p_rows, keep).prop_map(move |(q, p, keep)| {
            let q_rows = q
                .into_iter()
                .map(|w| normalized(w).into_iter().enumerate().map(|(j, v)| (PageId(j), v)).collect())
                .collect();
            let p_rows = p
                .into_iter()
                .zip(keep)
                .map(|(mut w, k)| {
                    if w.iter().all(|&x| x == 0.0) {
                        w[k] = 1.0;
                    }
                    normalized(w)
                        .into_iter()
                        .enumerate()
                        .filter(|&(_, v)| v > 0.0)
                        .map(|(j, v)| (PageId(j), v))
                        .collect()
                })
                .collect();
            (
                TransitionModel::new(p_rows, ModelKind::Popularity).unwrap(),
                TransitionModel::new(q_rows, ModelKind::Site).unwrap(),
            )
        })
    })
}

/// Two distinct top-10 lists drawn from a pool of 20 labels.
pub fn top10_pair() -> impl Strategy<Value = (Vec<String>, Vec<String>)> {
    let pool: Vec<String> = (0..20).map(|i| format!("/page/{i}")).collect();
    let list = Just(pool).prop_shuffle().prop_map(|v| v.into_iter().take(10).collect::<Vec<_>>());
    (list.clone(), list)
}
