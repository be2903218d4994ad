use super::*;
use crate::anoht_local::bin_compositions;
use crate::anoht_tree::{authenticity, sigma_bridge, sigma_star};
use crate::rng::stream_rng;
use rand::Rng;

fn sample(times: &[f64], labels: Vec<String>, events: &[bool]) -> SortedSample {
    labelled_lifetimes(times, labels, events).unwrap()
}

fn draws(seed: u64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0);
    (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect()
}

fn reference() -> UniformityTest {
    UniformityTest::ReferenceLine
}

#[test]
fn uncensored_masses_are_bin_proportions() {
    let times = draws(1, 300, 0.0, 4.0);
    let s = sample(&times, vec!["a".into(); 300], &[true; 300]);
    let (ch, _, _) = censored_histogram(&s, &BuildOptions::default(), &reference()).unwrap();
    for (bin, m) in ch.histogram.bins.iter().zip(&ch.masses) {
        assert!((m - bin.count() as f64 / 300.0).abs() < 1e-12);
    }
    assert!((ch.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn heavy_censoring_leaves_the_tail_mass_out() {
    let mut rng = stream_rng(9, 0);
    let times = draws(2, 600, 0.0, 10.0);
    let events: Vec<bool> = (0..600).map(|_| rng.random::<f64>() < 1.0 / 3.0).collect();
    let s = sample(&times, vec!["a".into(); 600], &events);
    let (ch, _, uncensored) = censored_histogram(&s, &BuildOptions::default(), &reference()).unwrap();
    assert_eq!(uncensored.len(), ch.n_events);
    assert!(ch.masses.iter().all(|&m| m >= 0.0));
    let last = *ch.survival_at_edges.last().unwrap();
    let total: f64 = ch.masses.iter().sum();
    assert!(total < 1.0);
    assert!((total - (1.0 - last)).abs() < 1e-12);
}

#[test]
fn tight_event_cluster_is_one_bin() {
    let mut times = draws(3, 60, 5.0, 5.1);
    let mut events = vec![true; 60];
    times.extend(draws(4, 40, 0.0, 10.0));
    events.extend([false; 40]);
    let s = sample(&times, vec!["a".into(); 100], &events);
    let (ch, _, _) = censored_histogram(&s, &BuildOptions::default(), &reference()).unwrap();
    assert_eq!(ch.histogram.n_bins(), 1);
    let km = kaplan_meier(&s).unwrap();
    assert!((ch.masses[0] - (1.0 - km.eval(ch.histogram.bins[0].b))).abs() < 1e-12);
}

#[test]
fn too_few_events_are_rejected() {
    let s = sample(&[1.0, 2.0, 3.0], vec!["a".into(); 3], &[true, false, false]);
    assert!(censored_histogram(&s, &BuildOptions::default(), &reference()).is_err());
}

#[test]
fn covariance_examples() {
    assert_eq!(sigma_km(&[0.5], &[0.4]).unwrap().matrix, [[0.25 * 0.4]]);
    let zero = sigma_km(&[0.9, 0.5, 0.2], &[0.0; 3]).unwrap();
    assert!(zero.matrix.iter().flatten().all(|&v| v == 0.0));
    assert!(sigma_km(&[0.2, 0.5], &[0.1, 0.1]).is_err());
    let na = sigma_na(&[0.1, 0.2, 0.3]).unwrap();
    assert_eq!(na.matrix, [[0.1, 0.0, 0.0], [0.0, 0.2, 0.0], [0.0, 0.0, 0.3]]);
    assert!(sigma_na(&[0.0; 2]).unwrap().matrix.iter().flatten().all(|&v| v == 0.0));
    assert!(sigma_na(&[-0.1]).is_err());
}

#[test]
fn uncensored_km_covariance_is_the_empirical_bridge() {
    let n = 400;
    let times = draws(5, n, 0.0, 1.0);
    let l = Lifetimes::new(&times, &vec![true; n]).unwrap();
    let edges = [-0.1, 0.2, 0.45, 0.7, 0.9];
    let km = l.kaplan_meier();
    let survival: Vec<f64> = edges[1..].iter().map(|&e| km.eval(e)).collect();
    let sharp = sigma_km(&survival, &l.bin_integrals(&edges).unwrap()).unwrap();
    let ecdf: Vec<f64> = survival.iter().map(|s| 1.0 - s).collect();
    let bridge = sigma_bridge(&ecdf).unwrap();
    for (a, b) in sharp.matrix.iter().flatten().zip(bridge.matrix.iter().flatten()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn uncensored_rows_reduce_to_bin_proportions() {
    let mut times = draws(6, 120, 0.0, 1.0);
    times.extend(draws(7, 80, 0.5, 2.0));
    let labels: Vec<String> = (0..200).map(|i| if i < 120 { "x" } else { "y" }.to_string()).collect();
    let s = sample(&times, labels, &[true; 200]);
    let (ch, _, uncensored) = censored_histogram(&s, &BuildOptions::default(), &reference()).unwrap();
    let t = bin_compositions(&ch.histogram, &uncensored).unwrap();
    let rows = censored_rows(&s, &ch.histogram.edges(), Basis::Km).unwrap();
    for (j, r) in rows.iter().enumerate() {
        let p: Vec<f64> = t.counts()[j].iter().map(|&c| c as f64 / t.n_j()[j] as f64).collect();
        assert!(r.row.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-12));
        let star = sigma_star(&p).unwrap();
        for (a, b) in r.covariance.matrix.iter().flatten().zip(star.matrix.iter().flatten()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
    let km = censored_authenticity(&s, &ch.histogram, 2000, 4, Basis::Km).unwrap();
    let plain = authenticity(&t, 2000, 4).unwrap();
    for (a, b) in km.nodes.iter().zip(&plain.nodes) {
        assert_eq!(a.leaf_set, b.leaf_set);
        let se = (b.index * (1.0 - b.index) / 2000.0).sqrt().max(1.0 / 2000.0);
        assert!((a.index - b.index).abs() <= 3.0 * se, "{} vs {}", a.index, b.index);
    }
}

#[test]
fn treatments_without_events_are_dropped() {
    let times = draws(8, 90, 0.0, 3.0);
    let labels: Vec<String> = (0..90).map(|i| ["p", "q", "r"][i % 3].to_string()).collect();
    let events: Vec<bool> = (0..90).map(|i| i % 3 != 2).collect();
    let s = sample(&times, labels, &events);
    let (ch, _, _) = censored_histogram(&s, &BuildOptions::default(), &reference()).unwrap();
    for basis in [Basis::Km, Basis::Na] {
        let rows = censored_rows(&s, &ch.histogram.edges(), basis).unwrap();
        assert_eq!(rows.iter().map(|r| r.name.as_str()).collect::<Vec<_>>(), ["p", "q"]);
        let rep = censored_authenticity(&s, &ch.histogram, 100, 1, basis).unwrap();
        assert_eq!(rep.nodes.len(), 1);
    }
}

#[test]
fn hazard_rows_use_a_diagonal_covariance() {
    let mut rng = stream_rng(10, 0);
    let times = draws(11, 200, 0.0, 5.0);
    let labels: Vec<String> = (0..200).map(|i| ["p", "q", "r"][i % 3].to_string()).collect();
    let events: Vec<bool> = (0..200).map(|_| rng.random::<f64>() < 0.5).collect();
    let s = sample(&times, labels, &events);
    let (ch, _, _) = censored_histogram(&s, &BuildOptions::default(), &reference()).unwrap();
    for r in censored_rows(&s, &ch.histogram.edges(), Basis::Na).unwrap() {
        assert_eq!(r.covariance.kind, CovarianceKind::NelsonAalen);
        for (i, row) in r.covariance.matrix.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert!(i == j || v == 0.0);
            }
        }
        assert!(r.row.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn phase1_weightings() {
    let mut rng = stream_rng(12, 0);
    let mut times = draws(13, 150, 0.0, 1.0);
    times.extend(draws(14, 150, 2.0, 3.0));
    let labels: Vec<String> = (0..300).map(|i| if i < 150 { "early" } else { "late" }.to_string()).collect();
    let events: Vec<bool> = (0..300).map(|_| rng.random::<f64>() < 0.6).collect();
    let s = sample(&times, labels, &events);
    let (ch, _, _) = censored_histogram(&s, &BuildOptions::default(), &reference()).unwrap();
    for w in [Weighting::KaplanMeier, Weighting::RawEvents] {
        let p = censored_phase1(&s, &ch.histogram, 200, 3, w).unwrap();
        assert_eq!(p.bins.len(), ch.histogram.n_bins());
        assert!(p.global.p_value <= 1.0 / 201.0 + 1e-12, "{w:?}: {}", p.global.p_value);
        assert!(p.bins.iter().all(|b| b.p_value > 0.0 && b.p_value <= 1.0));
        assert_eq!(p, censored_phase1(&s, &ch.histogram, 200, 3, w).unwrap());
    }
    // Without censoring the weighted counts are the plain counts.
    let all = sample(&times, (0..300).map(|i| ["u", "v"][i % 2].to_string()).collect(), &[true; 300]);
    let (ch, _, _) = censored_histogram(&all, &BuildOptions::default(), &reference()).unwrap();
    let km = censored_phase1(&all, &ch.histogram, 100, 0, Weighting::KaplanMeier).unwrap();
    let raw = censored_phase1(&all, &ch.histogram, 100, 0, Weighting::RawEvents).unwrap();
    for (a, b) in km.bins.iter().zip(&raw.bins) {
        assert!(a.effective_counts.iter().zip(&b.effective_counts).all(|(x, y)| (x - y).abs() < 1e-9));
        assert!((a.entropy_ratio - b.entropy_ratio).abs() < 1e-9);
    }
}

#[test]
fn basis_parses() {
    assert_eq!("km".parse::<Basis>().unwrap(), Basis::Km);
    assert_eq!("na".parse::<Basis>().unwrap(), Basis::Na);
    assert!("cox".parse::<Basis>().is_err());
}
