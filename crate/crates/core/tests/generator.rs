use proptest::prelude::*;

use seedwalk::{generate, LfrParams};

/// Maximum-likelihood exponent of a discrete power law truncated to
/// `[lo, hi]`, by golden-section search on the log-likelihood.
fn fit_exponent(xs: &[usize], lo: usize, hi: usize) -> f64 {
    let mean_log = xs.iter().map(|&x| (x as f64).ln()).sum::<f64>() / xs.len() as f64;
    let loglik = |a: f64| {
        let z: f64 = (lo..=hi).map(|x| (x as f64).powf(-a)).sum();
        -a * mean_log - z.ln()
    };
    let (mut a, mut b) = (1.01, 6.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if loglik(c) > loglik(d) {
            b = d;
        } else {
            a = c;
        }
    }
    (a + b) / 2.0
}

#[test]
fn degree_exponent_is_recovered() {
    for gamma in [2.0, 2.5, 3.0] {
        let params = LfrParams::new(5000, 20.0, gamma, 2.0, 0.3).with_seed(17);
        let bounds = params.resolve().unwrap();
        let pg = generate(&params).unwrap();
        let degrees: Vec<usize> = (0..5000)
            .map(|v| pg.graph.degree(v).unwrap())
            .filter(|&k| (bounds.k_min..=bounds.k_max).contains(&k))
            .collect();
        let fitted = fit_exponent(&degrees, bounds.k_min, bounds.k_max);
        assert!(
            (fitted - gamma).abs() <= 0.3,
            "gamma {gamma}: fitted {fitted}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generated_graphs_are_well_formed(mu in 0.0f64..=1.0, seed in any::<u64>()) {
        let pg = generate(&LfrParams::new(500, 20.0, 2.0, 2.0, mu).with_seed(seed)).unwrap();
        let g = &pg.graph;
        prop_assert_eq!(g.node_count(), 500);
        prop_assert_eq!(pg.membership.len(), 500);
        prop_assert_eq!(pg.sizes.iter().sum::<usize>(), 500);
        for (c, &size) in pg.sizes.iter().enumerate() {
            prop_assert_eq!(pg.membership.iter().filter(|&&m| m == c).count(), size);
        }
        for v in 0..500 {
            let nbrs = g.neighbors(v);
            prop_assert!(!nbrs.contains(&v));
            prop_assert!(nbrs.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(nbrs.iter().all(|&w| g.neighbors(w).binary_search(&v).is_ok()));
        }
        let mean = 2.0 * g.edge_count() as f64 / 500.0;
        prop_assert!((mean - 20.0).abs() <= 0.05 * 20.0 + 0.2, "mean degree {}", mean);
        if (0.05..=0.95).contains(&mu) {
            prop_assert!((pg.mixing_fraction() - mu).abs() <= 0.05, "mixing {} for mu {}", pg.mixing_fraction(), mu);
        }
    }
}
