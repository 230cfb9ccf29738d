mod common;

use mphnet::nn::{softmax, Activation, AdamState, Network, NetworkConfig, Tensor, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reference_config(variant: Variant) -> NetworkConfig {
    NetworkConfig::new(variant, 4, 10, 40, 40)
}

fn random_input(seed: u64, shape: [usize; 3]) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    Tensor::from_vec(&shape, (0..n).map(|_| rng.random::<f64>()).collect()).unwrap()
}

#[test]
fn layer_shapes_for_a_40_by_40_input() {
    for variant in [Variant::Lattice, Variant::Standard] {
        let net = Network::build(&reference_config(variant), 0).unwrap();
        let shapes = net.layer_shapes().unwrap();
        let kinds: Vec<&str> = net.layers.iter().map(|l| l.kind()).collect();
        let conv = if variant == Variant::Lattice {
            "lattice_conv"
        } else {
            "standard_conv"
        };
        assert_eq!(
            kinds,
            [
                conv,
                "relu",
                "max_pool",
                conv,
                "relu",
                "max_pool",
                conv,
                "relu",
                "flatten",
                "fully_connected",
                "relu",
                "fully_connected"
            ]
        );
        let expect: [&[usize]; 12] = [
            &[16, 40, 40],
            &[16, 40, 40],
            &[16, 20, 20],
            &[16, 20, 20],
            &[16, 20, 20],
            &[16, 10, 10],
            &[8, 10, 10],
            &[8, 10, 10],
            &[800],
            &[32],
            &[32],
            &[10],
        ];
        for (got, want) in shapes.iter().zip(expect) {
            assert_eq!(got.as_slice(), want);
        }
    }
}

#[test]
fn closed_form_parameter_counts() {
    let lat = Network::build(&reference_config(Variant::Lattice), 0).unwrap();
    let std = Network::build(&reference_config(Variant::Standard), 0).unwrap();
    assert_eq!(lat.layers[0].param_count(), 2 * (16 * 4 * 4 * 4) + 16);
    assert_eq!(std.layers[0].param_count(), 16 * 4 * 4 * 4 + 16);
    assert_eq!(lat.layers[0].param_count(), 2064);
    assert_eq!(std.layers[0].param_count(), 1040);
    // FC1 is 800 x 32 in both
    assert_eq!(lat.layers[9].param_count(), 800 * 32 + 32);
    assert_eq!(std.layers[9].param_count(), 800 * 32 + 32);
}

#[test]
fn lattice_supports_follow_each_pooled_lattice() {
    let net = Network::build(&reference_config(Variant::Lattice), 0).unwrap();
    let supports: Vec<_> = net
        .layers
        .iter()
        .filter_map(|l| match l {
            mphnet::nn::Layer::Lattice(l) => Some(l.support.xs.clone()),
            _ => None,
        })
        .collect();
    assert_eq!(
        supports,
        vec![vec![0, 13, 26, 39], vec![0, 6, 13, 19], vec![0, 3, 6, 9]]
    );
}

#[test]
fn softmax_of_the_output_sums_to_one() {
    for variant in [Variant::Lattice, Variant::Standard] {
        let net = Network::build(&reference_config(variant), 1).unwrap();
        let out = net.forward(&random_input(4, [4, 40, 40])).unwrap();
        assert_eq!(out.shape(), &[10]);
        let total: f64 = softmax(out.data()).iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}

#[test]
fn indivisible_grid_is_rejected() {
    assert!(Network::build(&NetworkConfig::new(Variant::Lattice, 4, 3, 42, 40), 0).is_err());
    assert!(Network::build(&NetworkConfig::new(Variant::Standard, 4, 3, 4, 4), 0).is_err());
}

#[test]
fn whole_network_gradient_matches_finite_differences() {
    // tanh keeps the composed map smooth; random inputs make pooling ties unlikely
    for variant in [Variant::Lattice, Variant::Standard] {
        let mut cfg = NetworkConfig::new(variant, 2, 3, 8, 8);
        cfg.activation = Activation::Tanh;
        cfg.conv_channels = [3, 2, 2];
        cfg.fc_hidden = 5;
        let net = Network::build(&cfg, 3).unwrap();
        let x = random_input(9, [2, 8, 8]);
        let (_, _, grads) = net.loss_and_grads(&x, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut worst: f64 = 0.0;
        for (pi, g) in grads.iter().enumerate() {
            for _ in 0..6 {
                let k = rng.random_range(0..g.len());
                let loss_at = |delta: f64| {
                    let mut n = net.clone();
                    n.params_mut()[pi].data_mut()[k] += delta;
                    n.loss_and_grads(&x, 1).unwrap().0
                };
                let fd = (loss_at(common::FD_STEP) - loss_at(-common::FD_STEP)) / (2.0 * common::FD_STEP);
                worst = worst.max(common::rel_err(g.data()[k], fd));
            }
        }
        assert!(worst < 1e-4, "{variant}: {worst:e}");
    }
}

#[test]
fn single_example_overfits_monotonically() {
    for variant in [Variant::Lattice, Variant::Standard] {
        let cfg = NetworkConfig::new(variant, 4, 3, 8, 8);
        let mut net = Network::build(&cfg, 0).unwrap();
        let x = random_input(7, [4, 8, 8]);
        let mut adam = AdamState::new(net.params(), 1e-3);
        let mut last = f64::INFINITY;
        let mut reached = None;
        for step in 0..500 {
            let (loss, _, grads) = net.loss_and_grads(&x, 2).unwrap();
            assert!(loss < last, "{variant}: loss rose at step {step}: {last} -> {loss}");
            last = loss;
            if loss < 1e-3 {
                reached = Some(step);
                break;
            }
            adam.step(&mut net.params_mut(), &grads).unwrap();
        }
        assert!(reached.is_some(), "{variant}: loss still {last} after 500 steps");
    }
}

#[test]
fn identical_seeds_give_identical_trajectories() {
    let run = || {
        let cfg = NetworkConfig::new(Variant::Lattice, 4, 3, 8, 8);
        let mut net = Network::build(&cfg, 5).unwrap();
        let mut adam = AdamState::new(net.params(), 2e-4);
        let x = random_input(2, [4, 8, 8]);
        for _ in 0..10 {
            let (_, _, grads) = net.loss_and_grads(&x, 0).unwrap();
            adam.step(&mut net.params_mut(), &grads).unwrap();
        }
        net
    };
    assert_eq!(run(), run());
}
