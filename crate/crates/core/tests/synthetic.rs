use siterank::infometrics::powerlaw_fit;
use siterank::ingest::{load_topology, parse_sessions, write_sessions, write_topology};
use siterank::synth::*;

#[test]
fn degree_distributions_follow_their_exponents() {
    let topo = generate_topology(1000, 2.1, 2.7, 11).unwrap();
    // A rank-size plot of a power law with exponent g has slope 1 / (g - 1).
    for (degrees, target) in [(topo.in_degrees(), 2.1), (topo.out_degrees(), 2.7)] {
        let values: Vec<f64> = degrees.iter().map(|&d| d as f64).collect();
        let fit = powerlaw_fit(&values, 0).unwrap();
        let implied = 1.0 + 1.0 / fit.exponent;
        assert!((implied - target).abs() < 0.3 * target, "implied exponent {implied} vs {target}");
    }
}

#[test]
fn mean_session_length_tracks_termination_when_uncapped() {
    let topo = generate_topology(1000, 2.1, 2.72, 5).unwrap();
    let params = SessionParams {
        termination_prob: 0.15,
        length_cap: LengthCap::Unbounded,
    };
    let raw = generate_raw_sessions(&topo, default_session_count(1000), 8, &params).unwrap();
    let mean = raw.sessions.iter().map(|s| s.len()).sum::<usize>() as f64 / raw.len() as f64;
    assert!((4.0..=9.0).contains(&mean), "{mean}");

    let many = generate_raw_sessions(&topo, 10_000, 9, &params).unwrap();
    let mean = many.sessions.iter().map(|s| s.len()).sum::<usize>() as f64 / many.len() as f64;
    assert!((mean - 1.0 / 0.15).abs() <= 0.25 / 0.15, "{mean}");
}

#[test]
fn synthetic_files_reload() {
    let site = generate_site(&SiteParams::new(100), 21).unwrap();
    let topo_text = write_topology(&site.topology);
    let topo = load_topology(&topo_text, HOME_LABEL).unwrap();
    assert_eq!(topo, site.topology);
    let sessions = parse_sessions(&write_sessions(&site.sessions)).unwrap();
    assert_eq!(sessions.reindex(topo.pages()).unwrap().sessions, site.sessions.sessions);
    let again = generate_site(&SiteParams::new(100), 21).unwrap();
    assert_eq!(write_topology(&again.topology), topo_text);
}

#[test]
fn experiment_rows_are_reproducible() {
    let config = ExperimentConfig::new(vec![50, 80], vec![1, 2]);
    let a = run_scaling_experiment(&config).unwrap();
    let b = run_scaling_experiment(&config).unwrap();
    assert_eq!(a.len(), 4);
    let rows = |cells: &[ExperimentCell]| cells.iter().map(|c| c.row.clone()).collect::<Vec<_>>();
    assert_eq!(rows(&a), rows(&b));
    assert_eq!(a.iter().map(|c| (c.row.size, c.row.seed)).collect::<Vec<_>>(), [(50, 1), (50, 2), (80, 1), (80, 2)]);
}
