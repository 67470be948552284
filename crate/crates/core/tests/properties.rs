use ndarray::Array2;
use proptest::prelude::*;

use nci::baselines::{kendall_tau_b, kendall_tau_score};
use nci::embedding::{EmbeddingMatrix, EmbeddingSource, SpectralFactor};
use nci::graph::{Graph, Labels};
use nci::ime::{mean_reciprocal_rank, rank_of};
use nci::nci::{clustering_coherence_rate, smoothness_coherence_rate, CoherenceParams};
use nci::relations::cache::SimilarityCache;
use nci::relations::{compute_similarity, personalized_pagerank, RelationSpec};

/// Random graph with attributes and labels on 4..=12 nodes.
fn arb_graph() -> impl Strategy<Value = Graph> {
    (4usize..=12)
        .prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec((0..n, 0..n), 1..3 * n),
                proptest::collection::vec(0.0f64..2.0, n * 3),
                proptest::collection::vec(0usize..3, n),
            )
        })
        .prop_map(|(n, pairs, attrs, classes)| {
            let edges: Vec<_> = pairs.into_iter().filter(|(a, b)| a != b).collect();
            let ids = (0..n).map(|u| format!("v{u}")).collect();
            Graph::new(ids, &edges)
                .unwrap()
                .with_attributes(Array2::from_shape_vec((n, 3), attrs).unwrap())
                .unwrap()
                .with_labels(Labels {
                    classes,
                    class_names: vec!["x".into(), "y".into(), "z".into()],
                })
                .unwrap()
        })
}

fn embedding(n: usize, d: usize, values: Vec<f64>) -> EmbeddingMatrix {
    EmbeddingMatrix::new(Array2::from_shape_vec((n, d), values).unwrap(), EmbeddingSource::Constructed)
}

fn arb_embedding(n: usize, d: usize) -> impl Strategy<Value = EmbeddingMatrix> {
    proptest::collection::vec(-3.0f64..3.0, n * d).prop_map(move |v| embedding(n, d, v))
}

fn tau_oracle(x: &[f64], y: &[f64]) -> f64 {
    let (mut c, mut d, mut tx, mut ty) = (0.0, 0.0, 0.0, 0.0);
    let n = x.len();
    for i in 0..n {
        for j in i + 1..n {
            let a = (x[i] - x[j]).signum() * f64::from(x[i] != x[j]);
            let b = (y[i] - y[j]).signum() * f64::from(y[i] != y[j]);
            if a == 0.0 {
                tx += 1.0;
            }
            if b == 0.0 {
                ty += 1.0;
            }
            if a * b > 0.0 {
                c += 1.0;
            } else if a * b < 0.0 {
                d += 1.0;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as f64;
    (c - d) / ((n0 - tx) * (n0 - ty)).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn similarities_lie_in_unit_interval_with_unit_diagonal(g in arb_graph()) {
        for spec in RelationSpec::computable_on(&g) {
            let s = compute_similarity(&g, &spec).unwrap();
            let m = s.to_dense();
            for u in 0..g.node_count() {
                prop_assert_eq!(m[[u, u]], 1.0);
                for v in 0..g.node_count() {
                    prop_assert!((0.0..=1.0).contains(&m[[u, v]]), "{} {}", s.name(), m[[u, v]]);
                    if s.is_symmetric() {
                        prop_assert!((m[[u, v]] - m[[v, u]]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn pagerank_is_a_distribution(g in arb_graph(), alpha in 0.05f64..0.95) {
        for u in 0..g.node_count() {
            let pi = personalized_pagerank(&g, u, alpha).unwrap();
            prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-8);
            prop_assert!(pi.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn cache_round_trip_matches_direct_computation(g in arb_graph()) {
        let dir = tempfile::tempdir().unwrap();
        let cache = SimilarityCache::new(dir.path()).unwrap();
        for spec in RelationSpec::computable_on(&g) {
            let direct = compute_similarity(&g, &spec).unwrap();
            let (cold, hit) = cache.get_or_compute(&g, &spec).unwrap();
            prop_assert!(!hit);
            let (warm, hit) = cache.get_or_compute(&g, &spec).unwrap();
            prop_assert!(hit);
            prop_assert_eq!(direct.content_hash(), cold.content_hash());
            prop_assert_eq!(direct.content_hash(), warm.content_hash());
        }
    }

    #[test]
    fn tau_matches_quadratic_oracle(
        xy in (2usize..=60).prop_flat_map(|n| (
            proptest::collection::vec(0u8..6, n),
            proptest::collection::vec(0u8..6, n),
        ))
    ) {
        let x: Vec<f64> = xy.0.iter().map(|&v| f64::from(v)).collect();
        let y: Vec<f64> = xy.1.iter().map(|&v| f64::from(v)).collect();
        let expect = tau_oracle(&x, &y);
        match kendall_tau_b(&x, &y) {
            Ok(t) if expect.is_nan() => prop_assert_eq!(t, 0.0),
            Ok(t) => prop_assert!((t - expect).abs() < 1e-12, "{t} vs {expect}"),
            Err(_) => prop_assert!(x.windows(2).all(|w| w[0] == w[1]) && y.windows(2).all(|w| w[0] == w[1])),
        }
    }

    #[test]
    fn tau_is_invariant_to_monotone_maps(
        x in proptest::collection::vec(-5.0f64..5.0, 3..40),
        seed in any::<u64>(),
    ) {
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v.sin() + (i as u64 ^ seed) as f64 % 3.0).collect();
        let Ok(t) = kendall_tau_b(&x, &y) else { return Ok(()) };
        let mapped: Vec<f64> = x.iter().map(|v| v.exp() * 2.0 + 1.0).collect();
        prop_assert!((kendall_tau_b(&mapped, &y).unwrap() - t).abs() < 1e-12);
        let negated: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert!((kendall_tau_b(&negated, &y).unwrap() + t).abs() < 1e-12);
    }

    #[test]
    fn coherence_rates_are_rates_and_scale_free(
        g in arb_graph(),
        seed in 0u64..1000,
        scale in 0.1f64..10.0,
    ) {
        let n = g.node_count();
        let z = nci::embedding::demo_rp_embedding(&g, 4, seed).unwrap();
        let scaled = EmbeddingMatrix::new(z.values() * scale, EmbeddingSource::Constructed);
        let p = CoherenceParams::default().with_seed(seed);
        for spec in RelationSpec::computable_on(&g) {
            let s = compute_similarity(&g, &spec).unwrap();
            for rate in [clustering_coherence_rate, smoothness_coherence_rate] {
                if let Ok(r) = rate(&z, &s, &p) {
                    prop_assert!((0.0..=1.0).contains(&r));
                    let r2 = rate(&scaled, &s, &p).unwrap();
                    prop_assert!((r - r2).abs() < 1e-9, "{} {r} vs {r2}", s.name());
                }
            }
            if s.is_symmetric() {
                let t = kendall_tau_score(&z, &s, 100_000, seed);
                if let Ok(t) = t {
                    prop_assert!((-1.0..=1.0).contains(&t));
                }
            }
        }
        prop_assert_eq!(z.node_count(), n);
    }

    #[test]
    fn shuffling_rows_keeps_the_distance_spread(z in arb_embedding(15, 3), seed in any::<u64>()) {
        let a = z.distance_std_exhaustive();
        let b = z.shuffle(seed).distance_std_exhaustive();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn full_rank_evd_reconstructs_psd_input(x in proptest::collection::vec(0.01f64..1.0, 10 * 4)) {
        let m = Array2::from_shape_vec((10, 4), x).unwrap();
        let gram = m.dot(&m.t());
        let d = gram.diag().mapv(f64::sqrt);
        let s = Array2::from_shape_fn((10, 10), |(i, j)| gram[[i, j]] / (d[i] * d[j]));
        let z = SpectralFactor::from_symmetric(s.clone(), "psd").unwrap().embedding(10).unwrap();
        let err = (&z.values().dot(&z.values().t()) - &s).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
        prop_assert!(err < 1e-9);
    }

    #[test]
    fn ranks_and_mrr_are_bounded(scores in proptest::collection::vec(0.0f64..1.0, 1..20)) {
        let ranks: Vec<usize> = (0..scores.len()).map(|t| rank_of(&scores, t).0).collect();
        prop_assert!(ranks.iter().all(|&r| r >= 1 && r <= scores.len()));
        prop_assert!(ranks.contains(&1));
        let mrr = mean_reciprocal_rank(&ranks);
        prop_assert!(mrr > 0.0 && mrr <= 1.0);
    }
}
