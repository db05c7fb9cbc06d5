use hetsched::traffic::{mtc_arrival_times, poisson_arrivals};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn beta_mean_over_many_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = mtc_arrival_times(&mut rng, 100_000, 10.0);
    let mean = t.iter().sum::<f64>() / t.len() as f64;
    assert!((mean - 10.0 * 3.0 / 7.0).abs() < 0.02, "{mean}");
    assert!(t.iter().all(|&x| (0.0..=10.0).contains(&x)));
}

#[test]
fn poisson_gaps_are_uncorrelated() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let times = poisson_arrivals(&mut rng, 100.0, 1000.0);
    let gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let n = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / n;
    let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n;
    let lag1 = gaps.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / n / var;
    assert!(lag1.abs() < 0.02, "{lag1}");
    assert!((mean - 0.01).abs() < 0.0005, "{mean}");
}

#[test]
fn poisson_count_matches_rate() {
    let mean = (0..50u64)
        .map(|s| poisson_arrivals(&mut ChaCha8Rng::seed_from_u64(s), 100.0, 100.0).len() as f64)
        .sum::<f64>()
        / 50.0;
    assert!((mean - 10_000.0).abs() / 10_000.0 < 0.02);
}
