//! Louvain and modularity against exhaustive enumeration on small graphs.

use fedgraph_core::datagen::{generate_client_graph, GenConfig};
use fedgraph_core::partition::{louvain, louvain_traced, modularity, CommunityAssignment};
use fedgraph_core::{rng, Graph, Matrix};
use proptest::prelude::*;
use rand::Rng;

fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
    Graph::from_edges(edges, Matrix::zeros(n, 1), vec![None; n], 1).unwrap()
}

/// `Q = (1/2m) Σ_ij [A_ij − k_i k_j / 2m] δ(c_i, c_j)` over the dense
/// adjacency.
fn brute_modularity(g: &Graph, comm: &[usize]) -> f64 {
    let a = g.adjacency().to_dense();
    let n = g.node_count();
    let k: Vec<f64> = (0..n).map(|i| a.row(i).iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if comm[i] == comm[j] {
                q += a.row(i)[j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Best modularity over every set partition, enumerated as restricted
/// growth strings.
fn exhaustive_best(g: &Graph) -> (f64, Vec<usize>) {
    let n = g.node_count();
    let mut labels = vec![0usize; n];
    let mut best = (f64::NEG_INFINITY, labels.clone());
    fn rec(i: usize, max: usize, labels: &mut Vec<usize>, g: &Graph, best: &mut (f64, Vec<usize>)) {
        if i == labels.len() {
            let q = brute_modularity(g, labels);
            if q > best.0 {
                *best = (q, labels.clone());
            }
            return;
        }
        for c in 0..=max + 1 {
            labels[i] = c;
            rec(i + 1, max.max(c), labels, g, best);
        }
    }
    rec(1, 0, &mut labels, g, &mut best);
    best
}

fn two_cliques_bridged() -> Graph {
    let mut e = Vec::new();
    for base in [0, 5] {
        for i in 0..5 {
            for j in i + 1..5 {
                e.push((base + i, base + j));
            }
        }
    }
    e.push((4, 5));
    graph(10, &e)
}

fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut r = rng::rng(seed, &[77]);
    let mut e = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.random_bool(p) {
                e.push((u, v));
            }
        }
    }
    if e.is_empty() {
        e.push((0, 1));
    }
    graph(n, &e)
}

#[test]
fn bridged_cliques_reach_exhaustive_optimum() {
    let g = two_cliques_bridged();
    let (best_q, best_labels) = exhaustive_best(&g);
    let best = CommunityAssignment::from_labels(&best_labels);
    assert_eq!(best.count(), 2);
    for seed in 0..5 {
        let found = louvain(&g, seed).unwrap();
        let q = modularity(&g, &found);
        assert!((q - best_q).abs() <= 1e-12, "seed {seed}: {q} vs {best_q}");
        assert_eq!(found.count(), 2);
        for v in 0..10 {
            assert_eq!(found.community(v) == found.community(0), v < 5);
        }
    }
}

#[test]
fn random_graphs_never_beat_the_optimum() {
    for seed in 0..6 {
        let g = random_graph(9, 0.35, seed);
        let (best_q, _) = exhaustive_best(&g);
        let out = louvain_traced(&g, seed).unwrap();
        let q = modularity(&g, &out.assignment);
        assert!(q <= best_q + 1e-12, "seed {seed}: {q} above optimum {best_q}");
        assert!(q >= 0.0);
        assert!((out.modularity_per_pass.last().unwrap() - q).abs() <= 1e-12);
    }
}

#[test]
fn generator_graph_passes_are_monotone() {
    let cfg = GenConfig {
        mu1: vec![1.0, 0.0],
        mu2: vec![-1.0, 0.0],
        p: vec![0.9],
        q: vec![0.5],
        majority: vec![0],
        nodes: 400,
        mean_degree: 6.0,
    };
    let g = generate_client_graph(&cfg, 0, 3).unwrap();
    let out = louvain_traced(&g, 3).unwrap();
    for w in out.modularity_per_pass.windows(2) {
        assert!(w[1] >= w[0] - 1e-12, "{:?}", out.modularity_per_pass);
    }
    let q = modularity(&g, &out.assignment);
    assert!((q - brute_modularity(&g, out.assignment.membership())).abs() <= 1e-9);
    assert!(q > 0.3, "homophilous graph should have clear communities, got {q}");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn modularity_matches_brute_force(seed in 0u64..1_000_000, n in 2usize..16, k in 1usize..5) {
        let g = random_graph(n, 0.3, seed);
        let mut r = rng::rng(seed, &[78]);
        let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..k)).collect();
        let a = CommunityAssignment::from_labels(&labels);
        let got = modularity(&g, &a);
        prop_assert!((got - brute_modularity(&g, &labels)).abs() <= 1e-12);
        prop_assert!((-0.5..=1.0).contains(&got));
    }

    #[test]
    fn louvain_is_a_partition_with_monotone_passes(seed in 0u64..1_000_000, n in 2usize..40) {
        let g = random_graph(n, 0.15, seed);
        let out = louvain_traced(&g, seed).unwrap();
        let m = out.assignment.membership();
        prop_assert_eq!(m.len(), n);
        prop_assert!(m.iter().all(|&c| c < out.assignment.count()));
        prop_assert_eq!(out.assignment.sizes().iter().sum::<usize>(), n);
        for w in out.modularity_per_pass.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
    }
}
