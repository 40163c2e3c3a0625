//! Detection checked against an independent dense oracle and against
//! properties of absorption probabilities.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seedwalk::walker::DEFAULT_STEP_CAP;
use seedwalk::{
    assign_crisp, detect_multi, estimate_affinity, run_walks, AbsorbingChain, DetectOptions, Graph,
    SeedSet, SolverMode,
};

/// Random spanning tree plus `extra` random edges.
fn connected_graph(n: usize, extra: usize, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            edges.push((a, b));
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

fn random_seeds(n: usize, count: usize, l: usize, rng: &mut ChaCha8Rng) -> SeedSet {
    let nodes = rand::seq::index::sample(rng, n, count).into_vec();
    let mut seeds = SeedSet::new(l).unwrap();
    for v in nodes {
        let row: Vec<f64> = (0..l).map(|_| rng.random_range(0.0..=1.0)).collect();
        seeds.insert(v, row).unwrap();
    }
    seeds
}

/// Absorption affinities from the transition matrix itself: builds `I - Q`
/// and `R β` entry by entry from neighbour counts and solves by Gaussian
/// elimination with partial pivoting.
fn oracle(graph: &Graph, seeds: &SeedSet) -> Vec<(usize, Vec<f64>)> {
    let n = graph.node_count();
    let l = seeds.communities();
    let transient: Vec<usize> = (0..n).filter(|&v| !seeds.contains(v)).collect();
    let mut index = vec![usize::MAX; n];
    for (i, &v) in transient.iter().enumerate() {
        index[v] = i;
    }
    let t = transient.len();
    let width = t + l;
    let mut m = vec![vec![0.0; width]; t];
    for (i, &v) in transient.iter().enumerate() {
        m[i][i] = 1.0;
        let p = 1.0 / graph.neighbors(v).len() as f64;
        for &w in graph.neighbors(v) {
            match seeds.affinities(w) {
                Some(beta) => {
                    for c in 0..l {
                        m[i][t + c] += p * beta[c];
                    }
                }
                None => m[i][index[w]] -= p,
            }
        }
    }
    for col in 0..t {
        let pivot = (col..t)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let d = m[col][col];
        m[col][col..].iter_mut().for_each(|x| *x /= d);
        let pivot_row = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            let f = row[col];
            if r != col && f != 0.0 {
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * p;
                }
            }
        }
    }
    transient
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, m[i][t..].to_vec()))
        .collect()
}

fn max_gap(graph: &Graph, seeds: &SeedSet, mode: SolverMode) -> f64 {
    let opts = DetectOptions {
        tolerance: 1e-12,
        ..DetectOptions::with_mode(mode)
    };
    let det = detect_multi(graph, seeds, &opts).unwrap();
    let mut gap: f64 = 0.0;
    for (v, want) in oracle(graph, seeds) {
        let got = det.affinities.row_of(v).unwrap();
        for (a, b) in got.iter().zip(&want) {
            gap = gap.max((a - b).abs());
        }
    }
    gap
}

#[test]
fn solvers_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..25 {
        let n = rng.random_range(5..120);
        let g = connected_graph(n, rng.random_range(0..3 * n), &mut rng);
        let count = rng.random_range(1..=n / 3 + 1);
        let l = rng.random_range(1..5);
        let seeds = random_seeds(n, count, l, &mut rng);
        assert!(max_gap(&g, &seeds, SolverMode::Direct) < 1e-9);
        assert!(max_gap(&g, &seeds, SolverMode::Iterative) < 1e-8);
    }
}

#[test]
fn gamblers_ruin_profile() {
    for k in [1, 2, 7, 50, 100] {
        // s = 0, v_i = i, t = k + 1.
        let edges: Vec<(usize, usize)> = (0..=k).map(|i| (i, i + 1)).collect();
        let g = Graph::from_edges(k + 2, &edges).unwrap();
        let mut seeds = SeedSet::new(1).unwrap();
        seeds.insert(0, vec![1.0]).unwrap();
        seeds.insert(k + 1, vec![0.0]).unwrap();
        for mode in [SolverMode::Direct, SolverMode::Iterative] {
            let opts = DetectOptions {
                tolerance: 1e-12,
                ..DetectOptions::with_mode(mode)
            };
            let det = detect_multi(&g, &seeds, &opts).unwrap();
            for i in 1..=k {
                let want = 1.0 - i as f64 / (k + 1) as f64;
                let got = det.affinities.row_of(i).unwrap()[0];
                assert!((got - want).abs() < 1e-8, "k {k} i {i}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn walker_agrees_with_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for round in 0..3 {
        let g = connected_graph(40, 60, &mut rng);
        let seeds = random_seeds(40, 6, 2, &mut rng);
        let det = detect_multi(&g, &seeds, &DetectOptions::default()).unwrap();
        let chain = AbsorbingChain::new(&g, &seeds.nodes()).unwrap();
        for &v in det.affinities.nodes().iter().take(4) {
            let stats = run_walks(&chain, v, 100_000, round, DEFAULT_STEP_CAP).unwrap();
            for c in 0..2 {
                let want = det.affinities.row_of(v).unwrap()[c];
                let got = estimate_affinity(&stats, &seeds, c);
                assert!(
                    (got - want).abs() < 0.01,
                    "node {v} community {c}: {got} vs {want}"
                );
            }
        }
    }
}

fn graph_and_seeds() -> impl Strategy<Value = (Graph, SeedSet, u64)> {
    (4usize..60, any::<u64>(), 1usize..4).prop_map(|(n, seed, l)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = connected_graph(n, n, &mut rng);
        let count = rng.random_range(1..=n / 2);
        let seeds = random_seeds(n, count, l, &mut rng);
        (g, seeds, seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rows_conserve_seed_row_sums((g, seeds, seed) in graph_and_seeds(), c in prop::sample::select(vec![0.5, 1.0, 2.0])) {
        // Rescale every seed row to sum to c, keeping entries within [0, 1].
        let l = seeds.communities();
        prop_assume!(c <= l as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let balanced = seeds.map_rows(|_, _| {
            let mut row: Vec<f64> = (0..l).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x *= c / total);
            for _ in 0..50 {
                if row.iter().all(|&x| x <= 1.0) {
                    break;
                }
                let over: f64 = row.iter().map(|&x| (x - 1.0).max(0.0)).sum();
                let room: f64 = row.iter().map(|&x| (1.0 - x).max(0.0)).sum();
                row.iter_mut().for_each(|x| {
                    *x = if *x > 1.0 { 1.0 } else { *x + over * (1.0 - *x) / room };
                });
            }
            row.iter().map(|x| x.min(1.0)).collect()
        }).unwrap();
        let det = detect_multi(&g, &balanced, &DetectOptions::default()).unwrap();
        for (_, row) in det.affinities.rows() {
            prop_assert!((row.iter().sum::<f64>() - c).abs() < 1e-6);
        }
    }

    #[test]
    fn affinities_are_linear_in_seed_values((g, seeds, seed) in graph_and_seeds(), w in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let other = seeds.map_rows(|_, row| row.iter().map(|_| rng.random_range(0.0..=1.0)).collect()).unwrap();
        let mix = seeds.map_rows(|v, row| {
            let o = other.affinities(v).unwrap();
            row.iter().zip(o).map(|(a, b)| w * a + (1.0 - w) * b).collect()
        }).unwrap();
        let opts = DetectOptions::with_mode(SolverMode::Direct);
        let a = detect_multi(&g, &seeds, &opts).unwrap().affinities;
        let b = detect_multi(&g, &other, &opts).unwrap().affinities;
        let m = detect_multi(&g, &mix, &opts).unwrap().affinities;
        for i in 0..m.len() {
            for c in 0..m.communities() {
                let want = w * a.row(i)[c] + (1.0 - w) * b.row(i)[c];
                prop_assert!((m.row(i)[c] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn affinities_stay_between_seed_extremes((g, seeds, _) in graph_and_seeds()) {
        let det = detect_multi(&g, &seeds, &DetectOptions::default()).unwrap();
        for c in 0..seeds.communities() {
            let given: Vec<f64> = seeds.iter().map(|(_, row)| row[c]).collect();
            let lo = given.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = given.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for x in det.affinities.column(c) {
                prop_assert!(x >= lo - 1e-9 && x <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn crisp_assignment_ignores_uniform_scaling((g, seeds, _) in graph_and_seeds(), s in 0.1f64..1.0) {
        let scaled = seeds.map_rows(|_, row| row.iter().map(|x| s * x).collect()).unwrap();
        let opts = DetectOptions::with_mode(SolverMode::Direct);
        let a = detect_multi(&g, &seeds, &opts).unwrap().affinities;
        let b = detect_multi(&g, &scaled, &opts).unwrap().affinities;
        let (ca, cb) = (assign_crisp(&a), assign_crisp(&b));
        for (v, c) in &ca {
            // Near-ties may legitimately flip under rounding.
            let row = a.row_of(*v).unwrap();
            let mut sorted = row.to_vec();
            sorted.sort_by(|x, y| y.total_cmp(x));
            if sorted.len() < 2 || sorted[0] - sorted[1] > 1e-9 {
                prop_assert_eq!(cb[v], *c);
            }
        }
    }

    #[test]
    fn solvers_agree((g, seeds, _) in graph_and_seeds()) {
        let direct = detect_multi(&g, &seeds, &DetectOptions::with_mode(SolverMode::Direct)).unwrap();
        let cg = detect_multi(&g, &seeds, &DetectOptions { tolerance: 1e-12, ..DetectOptions::with_mode(SolverMode::Iterative) }).unwrap();
        for i in 0..direct.affinities.len() {
            for (a, b) in direct.affinities.row(i).iter().zip(cg.affinities.row(i)) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }
    }
}
