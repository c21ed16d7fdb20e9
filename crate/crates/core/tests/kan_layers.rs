mod common;

use nalgebra::{DMatrix, DVector};
use polcbm::kan::{silu, BSplineGrid, KanEdge, KanLayer, KanNetwork, NetworkCache};
use polcbm::optim::Parameters;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn perturbed_network(widths: &[usize], seed: u64) -> KanNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = KanNetwork::new(widths, &BSplineGrid::default(), &mut rng).unwrap();
    for g in net.groups_mut() {
        for v in g.iter_mut() {
            *v += rng.random_range(-0.3..0.3);
        }
    }
    net
}

fn check_network_gradients(widths: &[usize], seed: u64, samples: usize) {
    let mut net = perturbed_network(widths, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    let inputs: Vec<Vec<f64>> = (0..samples)
        .map(|_| (0..widths[0]).map(|_| rng.random_range(-0.95..0.95)).collect())
        .collect();
    let upstream: Vec<f64> = (0..*widths.last().unwrap()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let loss = |n: &KanNetwork| -> f64 {
        inputs
            .iter()
            .map(|x| n.forward(x).unwrap().iter().zip(&upstream).map(|(o, u)| o * u).sum::<f64>())
            .sum()
    };
    let mut grads = net.zeros_like();
    let mut input_grads = Vec::new();
    for x in &inputs {
        let mut cache = NetworkCache::default();
        net.forward_cached(x, &mut cache).unwrap();
        let mut gi = vec![0.0; widths[0]];
        net.backward(&mut cache, &upstream, &mut grads, Some(&mut gi));
        input_grads.push(gi);
    }
    let (checked, bad) = common::finite_difference_mismatches(&mut net, &grads, 1e-4, 1e-3, 1e-6, loss);
    assert_eq!(checked, net.parameter_count());
    assert!(bad.is_empty(), "{} of {checked} mismatches, first {:?}", bad.len(), bad.first());

    for (x, gi) in inputs.iter().zip(&input_grads) {
        for p in 0..x.len() {
            let f = |d: f64| {
                let mut y = x.clone();
                y[p] += d;
                net.forward(&y).unwrap().iter().zip(&upstream).map(|(o, u)| o * u).sum::<f64>()
            };
            let numeric = (f(1e-4) - f(-1e-4)) / 2e-4;
            let diff = (numeric - gi[p]).abs();
            assert!(diff <= 1e-6 || diff <= 1e-3 * numeric.abs().max(gi[p].abs()), "input {p}: {} vs {numeric}", gi[p]);
        }
    }
}

#[test]
fn gradients_match_finite_differences_2_3_1() {
    for seed in 0..5 {
        check_network_gradients(&[2, 3, 1], seed, 4);
    }
}

#[test]
fn gradients_match_finite_differences_for_model_shapes() {
    check_network_gradients(&[32, 33], 11, 2);
    check_network_gradients(&[33, 16, 6], 12, 2);
}

#[test]
fn zero_function_gradients_follow_the_basis() {
    let grid = BSplineGrid::default();
    let mut layer = KanLayer::zeros(1, 1, grid.clone());
    layer
        .set_edge(0, 0, &KanEdge { coef: vec![0.0; grid.basis_count()], w_base: 0.0, w_spline: 1.0 })
        .unwrap();
    let net = KanNetwork::from_layers(vec![layer]).unwrap();
    let x = 0.37;
    let up = 1.7;
    let mut cache = NetworkCache::default();
    net.forward_cached(&[x], &mut cache).unwrap();
    assert_eq!(cache.output(), &[0.0]);
    let mut grads = net.zeros_like();
    net.backward(&mut cache, &[up], &mut grads, None);
    let g = &grads.layers()[0];
    let basis = grid.basis(x);
    for (a, b) in g.coef().iter().zip(&basis) {
        assert!((a - up * b).abs() < 1e-15);
    }
    assert!((g.w_base()[0] - up * silu(x)).abs() < 1e-15);
    assert_eq!(g.w_spline()[0], 0.0);
}

#[test]
fn zero_upstream_gives_zero_gradients() {
    let net = perturbed_network(&[3, 4, 2], 3);
    let mut cache = NetworkCache::default();
    net.forward_cached(&[0.1, -0.5, 0.9], &mut cache).unwrap();
    let mut grads = net.zeros_like();
    let mut gi = vec![0.0; 3];
    net.backward(&mut cache, &[0.0, 0.0], &mut grads, Some(&mut gi));
    assert!(grads.flatten().iter().all(|&g| g == 0.0));
    assert!(gi.iter().all(|&g| g == 0.0));
}

#[test]
fn edge_examples() {
    let grid = BSplineGrid::default();
    let zero = KanEdge { coef: vec![0.0; grid.basis_count()], w_base: 0.0, w_spline: 1.0 };
    for x in [-3.0, -0.2, 0.0, 0.8, 5.0] {
        assert_eq!(zero.eval(x, &grid), 0.0);
    }
    let base_only = KanEdge { coef: vec![0.4; grid.basis_count()], w_base: 1.0, w_spline: 0.0 };
    assert_eq!(base_only.eval(0.0, &grid), 0.0);
}

/// Least-squares spline coefficients for `φ(x) = x` with the base term off.
fn identity_edge(grid: &BSplineGrid) -> KanEdge {
    let xs: Vec<f64> = (0..201).map(|i| -1.0 + i as f64 / 100.0).collect();
    let nb = grid.basis_count();
    let a = DMatrix::from_fn(xs.len(), nb, |r, c| grid.basis(xs[r])[c]);
    let y = DVector::from_column_slice(&xs);
    let coef = a.svd(true, true).solve(&y, 1e-12).unwrap();
    KanEdge { coef: coef.iter().copied().collect(), w_base: 0.0, w_spline: 1.0 }
}

#[test]
fn least_squares_identity_edge() {
    let grid = BSplineGrid::default();
    let e = identity_edge(&grid);
    assert!((e.eval(0.5, &grid) - 0.5).abs() < 1e-3);
}

#[test]
fn layer_examples() {
    let grid = BSplineGrid::default();
    let id = identity_edge(&grid);

    let zero = KanLayer::zeros(3, 2, grid.clone());
    assert_eq!(zero.forward(&[0.2, -0.7, 0.1]).unwrap(), vec![0.0, 0.0]);

    let mut single = KanLayer::zeros(1, 1, grid.clone());
    let edge = KanEdge { coef: (0..grid.basis_count()).map(|i| (i as f64).sin()).collect(), w_base: 0.6, w_spline: 1.3 };
    single.set_edge(0, 0, &edge).unwrap();
    for x in [-0.9, -0.1, 0.33, 0.99] {
        assert_eq!(single.forward(&[x]).unwrap()[0], edge.eval(x, &grid));
    }

    let mut pair = KanLayer::zeros(2, 1, grid.clone());
    pair.set_edge(0, 0, &id).unwrap();
    pair.set_edge(0, 1, &id).unwrap();
    assert!((pair.forward(&[0.3, 0.4]).unwrap()[0] - 0.7).abs() < 1e-3);

    assert!(pair.forward(&[0.3]).is_err());
}

#[test]
fn initialisation_statistics() {
    let grid = BSplineGrid::default();
    let nb = grid.basis_count();
    let edges = 100_000 / nb + 1;
    let layer = KanLayer::init(edges, 1, grid.clone(), &mut ChaCha8Rng::seed_from_u64(5));
    let coef = layer.coef();
    assert!(coef.len() >= 100_000);
    let n = coef.len() as f64;
    let mean = coef.iter().sum::<f64>() / n;
    let var = coef.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1.0);
    let expected = 0.01 / nb as f64;
    assert!((var - expected).abs() < 0.1 * expected, "variance {var} vs {expected}");
    assert!(layer.w_base().iter().all(|&w| w == 1.0));
    assert!(layer.w_spline().iter().all(|&w| w == 1.0));

    let again = KanLayer::init(edges, 1, grid, &mut ChaCha8Rng::seed_from_u64(5));
    assert_eq!(layer, again);
}

#[test]
fn basis_derivatives_sum_to_zero() {
    let grid = BSplineGrid::default();
    for i in 0..=200 {
        let x = -0.999 + i as f64 * (1.998 / 200.0);
        let s: f64 = grid.basis_derivative(x).iter().sum();
        assert!(s.abs() < 1e-9, "x = {x}: {s}");
    }
}

#[test]
fn inputs_outside_the_grid_are_clamped() {
    let net = perturbed_network(&[1, 1], 9);
    let edge = net.layers()[0].edge(0, 0);
    let grid = BSplineGrid::default();
    let spline = |x: f64| edge.eval(x, &grid) - edge.w_base * silu(x);
    assert!((spline(3.0) - spline(1.0)).abs() < 1e-12);
    assert!((spline(-7.0) - spline(-1.0)).abs() < 1e-12);
}
