use graphlb_core::graph::{gen_erased_regular, gen_erdos_renyi, gen_rgg_torus, rgg_radius};
use graphlb_core::stats::mean;

#[test]
fn erdos_renyi_edge_count_matches_binomial_mean() {
    let (n, p, seeds) = (500usize, 0.02, 200u64);
    let pairs = (n * (n - 1) / 2) as f64;
    let counts: Vec<f64> = (0..seeds).map(|s| gen_erdos_renyi(n, p, s).unwrap().edge_count() as f64).collect();
    let sd_of_mean = (pairs * p * (1.0 - p) / seeds as f64).sqrt();
    let m = mean(&counts);
    assert!((m - pairs * p).abs() <= 4.0 * sd_of_mean, "mean {m} vs {}", pairs * p);
    let single_sd = (pairs * p * (1.0 - p)).sqrt();
    assert!(counts.iter().all(|c| (c - pairs * p).abs() <= 6.0 * single_sd));
}

#[test]
fn erdos_renyi_large_mean_degree() {
    let (n, p) = (10_000usize, 0.01);
    let g = gen_erdos_renyi(n, p, 11).unwrap();
    let pairs = (n * (n - 1) / 2) as f64;
    let sd = 2.0 * (pairs * p * (1.0 - p)).sqrt() / n as f64;
    let expected = (n - 1) as f64 * p;
    assert!((g.mean_degree() - expected).abs() <= 4.0 * sd, "{} vs {expected}", g.mean_degree());
}

#[test]
fn erased_regular_keeps_most_of_the_degree() {
    for (n, d) in [(100usize, 2usize), (100, 5), (400, 10), (1000, 20)] {
        let means: Vec<f64> = (0..100)
            .map(|s| {
                let g = gen_erased_regular(n, d, s).unwrap();
                assert!(g.max_degree() <= d);
                g.mean_degree()
            })
            .collect();
        let m = mean(&means);
        assert!(m >= 0.95 * d as f64, "n={n} d={d}: {m}");
        if (n, d) == (1000, 20) {
            assert!(m >= d as f64 - 1.0);
        }
    }
}

#[test]
fn erased_regular_rejects_odd_half_edge_count() {
    assert!(gen_erased_regular(5, 3, 0).is_err());
}

#[test]
fn rgg_vertex_degree_matches_disc_area() {
    let (n, seeds) = (200usize, 400u64);
    for r in [0.05, 0.1, rgg_radius(n, 8.0), 0.3] {
        let p = std::f64::consts::PI * r * r;
        let degrees: Vec<f64> = (0..seeds).map(|s| gen_rgg_torus(n, r, s).unwrap().degree(0) as f64).collect();
        let expected = (n - 1) as f64 * p;
        let sd_of_mean = ((n - 1) as f64 * p * (1.0 - p) / seeds as f64).sqrt();
        let m = mean(&degrees);
        assert!((m - expected).abs() <= 4.0 * sd_of_mean, "r={r}: {m} vs {expected}");
    }
}
