//! Reading sessions, logs and topologies, and deriving site structure from them.
//!
//! Session file: one session per line, an optional positive occurrence count
//! followed by a TAB, then page labels separated by single spaces. Lines
//! starting with `#` and blank lines are ignored.
//!
//! Topology file: one `src<TAB>dst` link per line, same comment rules.
//!
//! Log file: CSV with header `user,timestamp,page`, timestamps in whole
//! seconds since the epoch.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{PageId, Pages, Session, SessionSet, SummaryStats, Topology};

/// Default sessionization timeout.
pub const DEFAULT_TIMEOUT_MINUTES: u64 = 30;

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses the session file format. Labels are numbered in order of first appearance.
pub fn parse_sessions(text: &str) -> Result<SessionSet> {
    let mut pages = Pages::new();
    let mut sessions = Vec::new();
    for (line_no, line) in content_lines(text) {
        let (weight, body) = match line.split_once('\t') {
            Some((count, body)) => {
                let weight: u64 = count
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("invalid occurrence count {count:?}")))?;
                if weight == 0 {
                    return Err(parse_err(line_no, "occurrence count must be positive"));
                }
                (weight, body)
            }
            None => (1, line),
        };
        if body.is_empty() {
            return Err(parse_err(line_no, "session has no pages"));
        }
        let mut ids = Vec::new();
        for token in body.split(' ') {
            if token.is_empty() {
                return Err(parse_err(line_no, "empty page label (pages are separated by single spaces)"));
            }
            if token.contains('\t') {
                return Err(parse_err(line_no, "unexpected TAB inside the page list"));
            }
            ids.push(pages.intern(token));
        }
        sessions.push(Session::new(ids, weight));
    }
    if sessions.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(SessionSet::new(sessions, pages))
}

/// Serialises sessions in the session file format, always writing the count column.
pub fn write_sessions(sessions: &SessionSet) -> String {
    let mut out = String::new();
    for s in &sessions.sessions {
        let labels: Vec<&str> = s.pages.iter().map(|&p| sessions.pages.label(p)).collect();
        let _ = writeln!(out, "{}\t{}", s.weight, labels.join(" "));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct LogRecord {
    pub user: String,
    pub timestamp: i64,
    pub page: String,
}

impl LogRecord {
    pub fn new(user: impl Into<String>, timestamp: i64, page: impl Into<String>) -> Self {
        LogRecord {
            user: user.into(),
            timestamp,
            page: page.into(),
        }
    }
}

/// Reads a `user,timestamp,page` CSV log.
pub fn parse_log_csv(text: &str) -> Result<Vec<LogRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let expected = ["user", "timestamp", "page"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(parse_err(1, "expected header `user,timestamp,page`"));
    }
    reader
        .deserialize()
        .enumerate()
        .map(|(i, rec)| rec.map_err(|e| parse_err(i + 2, e.to_string())))
        .collect()
}

/// Splits per-user request streams into sessions whose total duration does
/// not exceed `timeout_minutes`.
///
/// A request joins the current session while `timestamp - session_start <=
/// timeout`; otherwise it opens a new session. Users are emitted in
/// ascending key order, sessions in time order.
pub fn sessionize_log(records: &[LogRecord], timeout_minutes: u64) -> Result<SessionSet> {
    if timeout_minutes == 0 {
        return Err(Error::InvalidParameter("timeout must be positive".into()));
    }
    let timeout = i64::try_from(timeout_minutes.saturating_mul(60)).unwrap_or(i64::MAX);
    let mut order: Vec<&LogRecord> = records.iter().collect();
    order.sort_by(|a, b| a.user.cmp(&b.user).then(a.timestamp.cmp(&b.timestamp)));

    let mut pages = Pages::new();
    let mut sessions = Vec::new();
    let mut current: Vec<PageId> = Vec::new();
    let mut current_user: Option<&str> = None;
    let mut start = 0i64;
    for rec in order {
        let same_user = current_user == Some(rec.user.as_str());
        if !same_user || rec.timestamp - start > timeout {
            if !current.is_empty() {
                sessions.push(Session::new(std::mem::take(&mut current), 1));
            }
            current_user = Some(rec.user.as_str());
            start = rec.timestamp;
        }
        current.push(pages.intern(&rec.page));
    }
    if !current.is_empty() {
        sessions.push(Session::new(current, 1));
    }
    Ok(SessionSet::new(sessions, pages))
}

/// Makes every session start and end at the home page, creating the home
/// label if it is missing. A session that is just `[home]` is left alone.
pub fn anchor_home(sessions: &SessionSet, home_label: &str) -> SessionSet {
    let mut pages = sessions.pages.clone();
    let home = pages.intern(home_label);
    let anchored = sessions
        .sessions
        .iter()
        .map(|s| {
            let mut p = Vec::with_capacity(s.pages.len() + 2);
            if s.pages.first() != Some(&home) {
                p.push(home);
            }
            p.extend_from_slice(&s.pages);
            if p.last() != Some(&home) {
                p.push(home);
            }
            Session::new(p, s.weight)
        })
        .collect();
    SessionSet::new(anchored, pages)
}

fn home_id(pages: &Pages, home_label: &str) -> Result<PageId> {
    pages
        .get(home_label)
        .ok_or_else(|| Error::UnknownHome(home_label.to_owned()))
}

/// Link set traversed by the sessions, plus the home self-loop.
pub fn infer_topology(sessions: &SessionSet, home_label: &str) -> Result<Topology> {
    let home = home_id(&sessions.pages, home_label)?;
    let mut links = BTreeSet::new();
    for s in &sessions.sessions {
        for w in s.pages.windows(2) {
            links.insert((w[0], w[1]));
        }
    }
    let links: Vec<_> = links.into_iter().collect();
    Topology::new(sessions.pages.clone(), home, &links)
}

/// Parses the topology file format and validates it.
pub fn load_topology(text: &str, home_label: &str) -> Result<Topology> {
    let mut pages = Pages::new();
    let mut links = Vec::new();
    let mut seen = HashSet::new();
    for (line_no, line) in content_lines(text) {
        let (src, dst) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(line_no, "expected `src<TAB>dst`"))?;
        if src.is_empty() || dst.is_empty() || dst.contains('\t') {
            return Err(parse_err(line_no, "expected exactly two non-empty fields"));
        }
        let link = (pages.intern(src), pages.intern(dst));
        if !seen.insert(link) {
            return Err(Error::DuplicateLink {
                src: src.to_owned(),
                dst: dst.to_owned(),
            });
        }
        links.push(link);
    }
    let home = home_id(&pages, home_label)?;
    Topology::new(pages, home, &links)
}

/// Serialises a topology as an edge list in breadth-first order from home,
/// so that loading the output numbers pages in that same order.
pub fn write_topology(topo: &Topology) -> String {
    let mut out = String::new();
    let pages = topo.pages();
    for src in topo.bfs_order() {
        for &dst in topo.outlinks(src) {
            let _ = writeln!(out, "{}\t{}", pages.label(src), pages.label(dst));
        }
    }
    out
}

fn mean_and_population_stdev(values: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let (mut n, mut sum, mut sum_sq) = (0.0, 0.0, 0.0);
    for (x, w) in values {
        n += w;
        sum += w * x;
        sum_sq += w * x * x;
    }
    if n == 0.0 {
        return (0.0, 0.0);
    }
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    (mean, var.sqrt())
}

/// Site and session statistics. `raw` should be the sessions as read,
/// before home anchoring; lengths and initial/terminating pages are measured
/// on it. Standard deviations are population values.
pub fn summary_stats(raw: &SessionSet, topo: &Topology) -> SummaryStats {
    let n_sessions = raw.total_weight();
    let n_requests = raw
        .sessions
        .iter()
        .map(|s| s.weight * s.len() as u64)
        .sum();
    let (len_mean, len_sd) = mean_and_population_stdev(
        raw.sessions.iter().map(|s| (s.len() as f64, s.weight as f64)),
    );
    let initial: HashSet<_> = raw.sessions.iter().filter_map(|s| s.pages.first()).collect();
    let terminal: HashSet<_> = raw.sessions.iter().filter_map(|s| s.pages.last()).collect();
    let (out_mean, out_sd) =
        mean_and_population_stdev(topo.out_degrees().into_iter().map(|d| (d as f64, 1.0)));
    let (in_mean, in_sd) =
        mean_and_population_stdev(topo.in_degrees().into_iter().map(|d| (d as f64, 1.0)));
    SummaryStats {
        n_pages: topo.n_pages(),
        n_links: topo.n_links(),
        n_sessions,
        n_requests,
        session_length_mean: len_mean,
        session_length_stdev: len_sd,
        session_length_max: raw.sessions.iter().map(Session::len).max().unwrap_or(0),
        n_initial_pages: initial.len(),
        n_terminating_pages: terminal.len(),
        out_degree_mean: out_mean,
        out_degree_stdev: out_sd,
        in_degree_mean: in_mean,
        in_degree_stdev: in_sd,
    }
}
