use jdinfer_core::experiment::{order_check, OrderCheckConfig};
use jdinfer_core::{
    build_derivative_system, euler_with_derivative, ou_derivative_closed_form, ou_jump_model,
    sample_noise, ModelSpec, TimeGrid,
};

fn spec(json: &str) -> ModelSpec {
    serde_json::from_str(json).unwrap()
}

fn config(model: &str, direction: Vec<f64>, scales: Vec<f64>) -> OrderCheckConfig {
    OrderCheckConfig {
        model: spec(model),
        theta: None,
        direction,
        scales,
        horizon: 1.0,
        steps: 100,
        paths: 400,
        root_seed: 5,
        moment: 2,
    }
}

#[test]
fn black_scholes_residual_is_fourth_order() {
    let cfg = config(
        r#"{"model":"black_scholes","params":[0.2,1.0],"epsilon":0.2,"x0":1.0}"#,
        vec![0.6, 0.8],
        vec![0.4, 0.2, 0.1, 0.05, 0.025],
    );
    let slope = order_check(&cfg).unwrap().slope.unwrap();
    assert!((slope - 4.0).abs() < 0.6, "slope {slope}");
}

#[test]
fn ou_mean_reversion_direction_is_fourth_order() {
    let cfg = config(
        r#"{"model":"ou_jump","params":[1.0,0.3,0.5],"jump":{"intensity":1.0},"x0":1.0}"#,
        vec![1.0, 0.0, 0.0],
        vec![0.4, 0.2, 0.1, 0.05, 0.025],
    );
    let slope = order_check(&cfg).unwrap().slope.unwrap();
    assert!((slope - 4.0).abs() < 0.6, "slope {slope}");
}

#[test]
fn ou_affine_directions_have_no_residual() {
    for dir in [
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![0.0, 0.6, 0.8],
    ] {
        let cfg = config(
            r#"{"model":"ou_jump","params":[1.0,0.3,0.5],"jump":{"intensity":1.0},"x0":1.0}"#,
            dir,
            vec![0.2, 0.1],
        );
        assert!(order_check(&cfg).unwrap().max_moment < 1e-20);
    }
}

#[test]
fn levy_residual_is_exactly_zero() {
    let cfg = config(
        r#"{"model":"levy","params":[0.1,0.5,0.7],"x0":0.0}"#,
        vec![0.5, 0.5, 0.7],
        vec![0.3, 0.1],
    );
    assert!(order_check(&cfg).unwrap().max_moment < 1e-20);
}

// Euler Y against the left-point closed form on shared noise
fn max_gap(steps: usize, seed: u64) -> f64 {
    let th = [1.0, 0.3, 0.5];
    let m = ou_jump_model(th[0], th[1], th[2], 1.0, 1.0).unwrap();
    let sys = build_derivative_system(&m).unwrap();
    let noise = sample_noise(&TimeGrid::new(1.0, steps).unwrap(), &m.jump_measure, seed);
    let (x, y) = euler_with_derivative(&sys, &th, &noise).unwrap();
    let cf = ou_derivative_closed_form(&th, 1.0, 1.0, &noise).unwrap();
    let mut gap = 0.0f64;
    for k in 0..=steps {
        gap = gap.max((x.values[k] - cf.x[k]).abs());
        for i in 0..3 {
            gap = gap.max((y.at(k)[i] - cf.y[i][k]).abs());
        }
    }
    gap
}

#[test]
fn ou_euler_approaches_closed_form_at_first_order() {
    let coarse: f64 = (0..20).map(|s| max_gap(100, s)).sum();
    let fine: f64 = (0..20).map(|s| max_gap(400, s)).sum();
    let ratio = coarse / fine;
    assert!(ratio > 3.0 && ratio < 5.5, "ratio {ratio}");
}
