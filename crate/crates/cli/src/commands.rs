use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use siterank::chains::{build_counts, extend_unpopular, popularity_chain, site_chain, stationary_from_counts, HomeBalancing};
use siterank::exact::{entropy_theory, PowerIteration};
use siterank::infometrics::{footrule_complement, powerlaw_fit, residuals, top_k, Divergence, TopK};
use siterank::ingest::{
    anchor_home, infer_topology, load_topology, parse_log_csv, parse_sessions, sessionize_log, summary_stats,
    write_sessions, write_topology,
};
use siterank::model::{CountModel, ModelKind, Pages, RankVector, RegressionFit, SessionSet, SummaryStats, Topology, TransitionModel};
use siterank::synth::{
    default_session_count, generate_site, run_scaling_experiment, ExperimentConfig, LengthCap, SessionParams, SiteParams,
};
use siterank::walk::{random_walk, walk_length_for};

use crate::{CompareArgs, ExperimentArgs, GeneratorArgs, InputArgs, Method, Mode, RankArgs, SynthArgs};

const TOOL_VERSION: &str = concat!("siterank ", env!("CARGO_PKG_VERSION"));

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<siterank::Error> for CliError {
    fn from(e: siterank::Error) -> Self {
        match e {
            siterank::Error::InvalidParameter(m) => CliError::Usage(m),
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn in_context(path: &Path) -> impl FnOnce(siterank::Error) -> CliError + '_ {
    move |e| match CliError::from(e) {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn emit<T: Serialize>(report: &T, output: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(report).expect("reports serialise") + "\n";
    match output {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn seconds(start: Instant) -> f64 {
    (start.elapsed().as_secs_f64() * 100.0).round() / 100.0
}

/// Sessions anchored at home, plus the topology they live on.
struct Loaded {
    sessions: SessionSet,
    topology: Topology,
    /// Whether `topology` was read from a file rather than inferred.
    explicit: bool,
}

impl Loaded {
    fn counts(&self) -> CliResult<CountModel> {
        Ok(build_counts(&self.sessions, self.topology.home())?)
    }

    fn balancing(input: &InputArgs) -> HomeBalancing {
        if input.no_balance {
            HomeBalancing::Off
        } else {
            HomeBalancing::ViaHome
        }
    }
}

fn load(input: &InputArgs) -> CliResult<Loaded> {
    let text = read(&input.sessions)?;
    let raw = if input.log {
        let records = parse_log_csv(&text).map_err(in_context(&input.sessions))?;
        sessionize_log(&records, input.timeout).map_err(in_context(&input.sessions))?
    } else {
        parse_sessions(&text).map_err(in_context(&input.sessions))?
    };
    let anchored = anchor_home(&raw, &input.home);
    let (topology, explicit) = match &input.topology {
        Some(path) => (load_topology(&read(path)?, &input.home).map_err(in_context(path))?, true),
        None => (infer_topology(&anchored, &input.home)?, false),
    };
    let sessions = anchored.reindex(topology.pages())?;
    Ok(Loaded {
        sessions,
        topology,
        explicit,
    })
}

fn solver(input: &InputArgs) -> PowerIteration {
    PowerIteration::with_tolerance(input.tol)
}

#[derive(Debug, Serialize)]
struct PageProbability<'a> {
    label: &'a str,
    probability: f64,
}

fn full_vector<'a>(pi: &RankVector, pages: &'a Pages) -> Vec<PageProbability<'a>> {
    pages
        .ids()
        .map(|p| PageProbability {
            label: pages.label(p),
            probability: pi.get(p),
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct WalkReport {
    seed: u64,
    min_steps: u64,
    entropy: f64,
    t: u64,
    per_step: f64,
}

#[derive(Debug, Serialize)]
struct RankReport<'a> {
    tool_version: &'static str,
    command: &'static str,
    params: &'a RankArgs,
    model: ModelKind,
    n_pages: usize,
    n_transitions: usize,
    pi: Vec<PageProbability<'a>>,
    top_k: TopK,
    #[serde(skip_serializing_if = "Option::is_none")]
    entropy_theory: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    walk: Option<WalkReport>,
    seconds: f64,
}

/// The chain of `mode` and, when it has one in closed form, its stationary vector.
fn chain_for(mode: Mode, loaded: &Loaded, input: &InputArgs) -> CliResult<(TransitionModel, Topology, Option<RankVector>)> {
    let counts = loaded.counts()?;
    Ok(match mode {
        Mode::Popularity => {
            let pi = stationary_from_counts(&counts, ModelKind::Popularity)?;
            (popularity_chain(&counts)?, loaded.topology.clone(), Some(pi))
        }
        Mode::PopularityUnpopular => {
            let balancing = Loaded::balancing(input);
            let ext = extend_unpopular(&counts, &loaded.topology, balancing)?;
            let pi = match balancing {
                HomeBalancing::ViaHome => Some(ext.stationary()?),
                HomeBalancing::Off => None,
            };
            (ext.chain()?, ext.topology, pi)
        }
        Mode::Site => (site_chain(&loaded.topology)?, loaded.topology.clone(), None),
    })
}

pub fn rank(args: &RankArgs) -> CliResult<()> {
    let start = Instant::now();
    let input = &args.input;
    if args.mode == Mode::PopularityUnpopular && input.topology.is_none() {
        return Err(CliError::Usage(
            "--mode popularity-unpopular needs --topology: unpopular links are links absent from the sessions".into(),
        ));
    }
    let seed = match (args.method, args.seed) {
        (Method::Walk, None) => return Err(CliError::Usage("--method walk needs --seed".into())),
        (_, seed) => seed,
    };
    let loaded = load(input)?;
    let (model, topology, closed_form) = chain_for(args.mode, &loaded, input)?;
    let pages = topology.pages();

    let mut report = RankReport {
        tool_version: TOOL_VERSION,
        command: "rank",
        params: args,
        model: model.kind(),
        n_pages: model.n_states(),
        n_transitions: model.n_transitions(),
        pi: Vec::new(),
        top_k: TopK {
            entries: Vec::new(),
            truncated: false,
        },
        entropy_theory: None,
        t: None,
        iterations: None,
        residual: None,
        walk: None,
        seconds: 0.0,
    };
    let pi = match args.method {
        Method::Exact => {
            let pi = match closed_form {
                Some(pi) => {
                    report.residual = Some(pi.l1_distance(&model.left_multiply(&pi.values)));
                    if args.mode == Mode::Popularity {
                        report.t = Some(loaded.counts()?.total);
                    }
                    pi
                }
                None => {
                    let sol = solver(input).solve(&model)?;
                    report.iterations = Some(sol.iterations);
                    report.residual = Some(sol.residual);
                    sol.rank
                }
            };
            report.entropy_theory = Some(entropy_theory(&model, &pi)?);
            pi
        }
        Method::Walk => {
            let seed = seed.expect("checked above");
            let min_steps = walk_length_for(&model, input.walk_factor);
            let walk = random_walk(&model, topology.home(), min_steps, seed)?;
            report.t = Some(walk.visits);
            report.walk = Some(WalkReport {
                seed,
                min_steps,
                entropy: walk.entropy,
                t: walk.visits,
                per_step: walk.per_step,
            });
            RankVector::new(walk.pi_hat, model.kind())?
        }
    };
    report.top_k = top_k(&pi, pages, input.k)?;
    report.pi = full_vector(&pi, pages);
    report.seconds = seconds(start);
    emit(&report, input.output.as_deref())
}

#[derive(Debug, Serialize)]
struct ModelSummary<'a> {
    model: ModelKind,
    n_transitions: usize,
    entropy_theory: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    walk: Option<WalkReport>,
    top_k: TopK,
    powerlaw: Option<RegressionFit>,
    pi: Vec<PageProbability<'a>>,
}

#[derive(Debug, Serialize)]
struct CompareReport<'a> {
    tool_version: &'static str,
    command: &'static str,
    params: &'a CompareArgs,
    unpopular_links: bool,
    n_pages: usize,
    relative_entropy: f64,
    max_relative_entropy: f64,
    normalized_relative_entropy: f64,
    footrule_complement: f64,
    popularity: ModelSummary<'a>,
    site: ModelSummary<'a>,
    seconds: f64,
}

fn summarise<'a>(
    model: &TransitionModel,
    pi: RankVector,
    pages: &'a Pages,
    home: siterank::model::PageId,
    input: &InputArgs,
    seed: Option<u64>,
    drop_first: usize,
) -> CliResult<ModelSummary<'a>> {
    let walk = match seed {
        Some(seed) => {
            let min_steps = walk_length_for(model, input.walk_factor);
            let w = random_walk(model, home, min_steps, seed)?;
            Some(WalkReport {
                seed,
                min_steps,
                entropy: w.entropy,
                t: w.visits,
                per_step: w.per_step,
            })
        }
        None => None,
    };
    // Too few distinct probabilities for a line is reported as no fit.
    let powerlaw = match powerlaw_fit(&pi.values, drop_first) {
        Ok(fit) => Some(fit),
        Err(siterank::Error::InsufficientPoints(_)) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(ModelSummary {
        model: model.kind(),
        n_transitions: model.n_transitions(),
        entropy_theory: entropy_theory(model, &pi)?,
        walk,
        top_k: top_k(&pi, pages, input.k)?,
        powerlaw,
        pi: full_vector(&pi, pages),
    })
}

pub fn compare(args: &CompareArgs) -> CliResult<()> {
    let start = Instant::now();
    let input = &args.input;
    let loaded = load(input)?;
    let counts = loaded.counts()?;
    let solver = solver(input);
    let (p, q, topology, pi_p) = if loaded.explicit {
        let balancing = Loaded::balancing(input);
        let ext = extend_unpopular(&counts, &loaded.topology, balancing)?;
        let p = ext.chain()?;
        let pi_p = match balancing {
            HomeBalancing::ViaHome => ext.stationary()?,
            HomeBalancing::Off => solver.solve(&p)?.rank,
        };
        (p, ext.site_chain()?, ext.topology, pi_p)
    } else {
        let p = popularity_chain(&counts)?;
        let pi_p = stationary_from_counts(&counts, ModelKind::Popularity)?;
        (p, site_chain(&loaded.topology)?, loaded.topology.clone(), pi_p)
    };
    let pi_q = solver.solve(&q)?.rank;
    let div = Divergence::between(&p, &q)?;
    let pages = topology.pages();
    let home = topology.home();
    let walk_seeds = args.seed.map(|s| (s, s.wrapping_add(1)));
    let popularity = summarise(&p, pi_p, pages, home, input, walk_seeds.map(|s| s.0), 0)?;
    let site = summarise(&q, pi_q, pages, home, input, walk_seeds.map(|s| s.1), args.drop_first)?;
    let footrule = footrule_complement(&popularity.top_k.labels(), &site.top_k.labels(), input.k)?;
    let report = CompareReport {
        tool_version: TOOL_VERSION,
        command: "compare",
        params: args,
        unpopular_links: loaded.explicit,
        n_pages: topology.n_pages(),
        relative_entropy: div.relative_entropy,
        max_relative_entropy: div.max_relative_entropy,
        normalized_relative_entropy: div.normalized,
        footrule_complement: footrule,
        popularity,
        site,
        seconds: seconds(start),
    };
    emit(&report, input.output.as_deref())
}

fn session_params(g: &GeneratorArgs) -> SessionParams {
    SessionParams {
        termination_prob: g.termination,
        length_cap: if g.no_length_cap {
            LengthCap::Unbounded
        } else {
            LengthCap::PowerLaw {
                exponent: g.length_exponent,
                max: g.max_length,
            }
        },
    }
}

#[derive(Debug, Serialize)]
struct SynthReport<'a> {
    tool_version: &'static str,
    command: &'static str,
    params: &'a SynthArgs,
    n_sessions: usize,
    topology_file: PathBuf,
    sessions_file: PathBuf,
    summary: SummaryStats,
    seconds: f64,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

pub fn synth(args: &SynthArgs) -> CliResult<()> {
    let start = Instant::now();
    let n_sessions = args.sessions.unwrap_or_else(|| default_session_count(args.pages));
    let params = SiteParams {
        n_pages: args.pages,
        in_exponent: args.generator.in_exponent,
        out_exponent: args.generator.out_exponent,
        n_sessions: Some(n_sessions),
        sessions: session_params(&args.generator),
    };
    let site = generate_site(&params, args.seed)?;
    let topology_file = with_suffix(&args.out, ".topology.tsv");
    let sessions_file = with_suffix(&args.out, ".sessions.txt");
    write(&topology_file, &write_topology(&site.topology))?;
    write(&sessions_file, &write_sessions(&site.sessions))?;
    let report = SynthReport {
        tool_version: TOOL_VERSION,
        command: "synth",
        params: args,
        n_sessions,
        topology_file,
        sessions_file,
        summary: summary_stats(&site.raw_sessions, &site.topology),
        seconds: seconds(start),
    };
    emit(&report, None)
}

#[derive(Debug, Serialize)]
struct ResidualRow<'a> {
    size: usize,
    seed: u64,
    distribution: &'a str,
    rank: usize,
    probability: f64,
    log2_residual: f64,
    tool_version: &'a str,
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

pub fn experiment(args: &ExperimentArgs) -> CliResult<()> {
    let start = Instant::now();
    let config = ExperimentConfig {
        sizes: args.sizes.clone(),
        seeds: args.seeds.clone(),
        in_exponent: args.generator.in_exponent,
        out_exponent: args.generator.out_exponent,
        sessions: session_params(&args.generator),
        walk_factor: args.walk_factor,
        balancing: if args.no_balance {
            HomeBalancing::Off
        } else {
            HomeBalancing::ViaHome
        },
    };
    let cells = run_scaling_experiment(&config)?;
    let params = serde_json::to_string(args).expect("parameters serialise");

    let mut table = csv::Writer::from_path(&args.out).map_err(csv_error(&args.out))?;
    table
        .write_record([
            "size",
            "N",
            "L",
            "H_walk_pop",
            "H_theory_pop",
            "H_walk_site",
            "H_theory_site",
            "D",
            "Dmax",
            "D_normalized",
            "seed",
            "tool_version",
            "params",
        ])
        .map_err(csv_error(&args.out))?;
    for cell in &cells {
        let r = &cell.row;
        table
            .write_record([
                r.size.to_string(),
                r.n_pages.to_string(),
                r.n_links.to_string(),
                r.h_walk_pop.to_string(),
                r.h_theory_pop.to_string(),
                r.h_walk_site.to_string(),
                r.h_theory_site.to_string(),
                r.d.to_string(),
                r.d_max.to_string(),
                r.d_normalized.to_string(),
                r.seed.to_string(),
                TOOL_VERSION.to_owned(),
                params.clone(),
            ])
            .map_err(csv_error(&args.out))?;
    }
    table.flush().map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;

    let residual_path = args
        .residuals
        .clone()
        .unwrap_or_else(|| args.out.with_extension("residuals.csv"));
    let mut out = csv::Writer::from_path(&residual_path).map_err(csv_error(&residual_path))?;
    for cell in &cells {
        for (name, pi, drop) in [
            ("popularity", &cell.popularity_rank, 0),
            ("site", &cell.site_rank, args.drop_first),
        ] {
            let fit = powerlaw_fit(&pi.values, drop)?;
            for (rank, probability, log2_residual) in residuals(&pi.values, &fit) {
                out.serialize(ResidualRow {
                    size: cell.row.size,
                    seed: cell.row.seed,
                    distribution: name,
                    rank,
                    probability,
                    log2_residual,
                    tool_version: TOOL_VERSION,
                })
                .map_err(csv_error(&residual_path))?;
            }
        }
    }
    out.flush()
        .map_err(|e| CliError::Data(format!("{}: {e}", residual_path.display())))?;

    #[derive(Serialize)]
    struct Summary<'a> {
        tool_version: &'static str,
        command: &'static str,
        params: &'a ExperimentArgs,
        rows: usize,
        table: &'a Path,
        residuals: &'a Path,
        seconds: f64,
    }
    emit(
        &Summary {
            tool_version: TOOL_VERSION,
            command: "experiment",
            params: args,
            rows: cells.len(),
            table: &args.out,
            residuals: &residual_path,
            seconds: seconds(start),
        },
        None,
    )
}
