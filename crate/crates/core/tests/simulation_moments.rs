use jdinfer_core::{
    bs_small_noise_model, euler_path, sample_noise, JumpMeasure, JumpSizes, NoiseBundle, TimeGrid,
};

#[test]
fn jump_counts_are_poisson() {
    let g = TimeGrid::new(2.0, 10).unwrap();
    let m = JumpMeasure::compound_poisson(3.0, JumpSizes::Exponential { mean: 1.0 }).unwrap();
    let counts: Vec<f64> = (0..20_000)
        .map(|s| sample_noise(&g, &m, s).jump_times().len() as f64)
        .collect();
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    // λT = 6; sd of the mean ≈ √(6/n)
    assert!((mean - 6.0).abs() < 4.0 * (6.0 / n).sqrt(), "mean {mean}");
    assert!((var - 6.0).abs() < 0.4, "var {var}");
}

fn strong_error(steps: usize) -> f64 {
    // exact solution on the same Brownian path
    let (mu, sigma, eps) = (0.2, 1.0, 0.5);
    let m = bs_small_noise_model(mu, sigma, eps, 1.0).unwrap();
    let fine = TimeGrid::new(1.0, steps).unwrap();
    (0..200)
        .map(|s| {
            let noise = sample_noise(&fine, &JumpMeasure::none(), s);
            let x = euler_path(&m, &[mu, sigma], &noise).unwrap();
            let w = noise.brownian_path();
            let s2 = eps * eps * sigma * sigma;
            let exact = ((mu - 0.5 * s2) + eps * sigma * w[steps]).exp();
            (x.terminal() - exact).abs()
        })
        .sum::<f64>()
        / 200.0
}

#[test]
fn euler_strong_error_decreases() {
    assert!(strong_error(400) < strong_error(100));
}

#[test]
fn zero_noise_is_deterministic() {
    let m = bs_small_noise_model(0.3, 1.0, 0.4, 2.0).unwrap();
    let g = TimeGrid::new(1.0, 50).unwrap();
    let x = euler_path(&m, &[0.3, 1.0], &NoiseBundle::zero(g)).unwrap();
    assert!((x.terminal() - 2.0 * (1.0f64 + 0.3 / 50.0).powi(50)).abs() < 1e-12);
}
