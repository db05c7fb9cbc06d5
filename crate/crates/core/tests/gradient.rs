use hetsched::dqn::{train_step, LstmQNet, Transition};
use hetsched::rl::LearnParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn central_difference(net: &LstmQNet, items: &[(&[f64], usize, f64)], k: usize, h: f64) -> f64 {
    let mut plus = net.clone();
    plus.params_mut()[k] += h;
    let mut minus = net.clone();
    minus.params_mut()[k] -= h;
    (plus.loss_and_gradient(items).unwrap().0 - minus.loss_and_gradient(items).unwrap().0) / (2.0 * h)
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (input, hidden, w, actions) = (2, 4, 3, 3);
        let net = LstmQNet::init(input, hidden, actions, &mut rng).unwrap();
        let x: Vec<f64> = (0..input * w).map(|_| rng.random_range(-1.5..1.5)).collect();
        let items = [(x.as_slice(), seed as usize % actions, 0.7)];
        let (_, grad) = net.loss_and_gradient(&items).unwrap();
        for (k, g) in grad.iter().enumerate() {
            let num = central_difference(&net, &items, k, 1e-5);
            let rel = (g - num).abs() / g.abs().max(num.abs()).max(1e-8);
            assert!(rel < 1e-4, "seed {seed} param {k}: {g} vs {num}");
        }
    }
}

#[test]
fn repeated_steps_fit_a_constant_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut net = LstmQNet::init(2, 6, 2, &mut rng).unwrap();
    let t = Transition {
        window: vec![0.5, -0.5, 0.25, 0.0],
        action: 1,
        reward: 1.0,
        next_window: vec![0.5, -0.5, 0.25, 0.0],
    };
    let p = LearnParams { gamma: 0.0, ..LearnParams::default() };
    let first = train_step(&mut net, &[&t], &p, 0.05).unwrap();
    let mut last = first;
    for _ in 0..500 {
        last = train_step(&mut net, &[&t], &p, 0.05).unwrap();
    }
    assert!(last < first * 1e-3, "{first} -> {last}");
    assert!((net.forward(&t.window).unwrap()[1] - 1.0).abs() < 0.05);
}
