//! Finite-difference gradient checks, one per layer type.
//!
//! Each check draws a random small instance from `seed`, contracts the layer
//! output against a random cotangent `c` (so the scalar is `<c, layer(x)>`
//! and the upstream gradient is `c`), and returns the largest relative error
//! over every parameter and input coordinate.

use mphnet::grid_lattice::{kernel_support, GridLattice, KernelSupport};
use mphnet::nn::lattice_conv::{bias_grad, lattice_conv_backward, LatticeConvKernel, LatticeOp};
use mphnet::nn::network::{LatticeLayer, Layer};
use mphnet::nn::{
    fully_connected, fully_connected_backward, join_conv, max_pool_2x2, max_pool_backward, meet_conv,
    softmax_cross_entropy, standard_conv, standard_conv_backward, Tensor,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dot, fd_max_rel_err, uniform_vec};

pub const LAYER_TYPES: [&str; 7] = [
    "meet_conv",
    "join_conv",
    "mixed",
    "standard_conv",
    "max_pool",
    "fully_connected",
    "softmax_ce",
];

pub fn check(layer: &str, seed: u64) -> f64 {
    match layer {
        "meet_conv" => lattice_single(LatticeOp::Meet, seed),
        "join_conv" => lattice_single(LatticeOp::Join, seed),
        "mixed" => mixed(seed),
        "standard_conv" => conv(seed),
        "max_pool" => pool(seed),
        "fully_connected" => dense(seed),
        "softmax_ce" => softmax_ce(seed),
        other => panic!("unknown layer type {other}"),
    }
}

fn t(shape: &[usize], data: &[f64]) -> Tensor {
    Tensor::from_vec(shape, data.to_vec()).unwrap()
}

struct LatticeShape {
    n_in: usize,
    n_out: usize,
    h: usize,
    w: usize,
    support: KernelSupport,
}

fn lattice_shape(rng: &mut ChaCha8Rng) -> LatticeShape {
    let (h, w) = (rng.random_range(2..=6), rng.random_range(2..=6));
    let lattice = GridLattice::for_grid(h, w).unwrap();
    let side = rng.random_range(2..=h.min(w).min(4));
    LatticeShape {
        n_in: rng.random_range(1..=3),
        n_out: rng.random_range(1..=3),
        h,
        w,
        support: kernel_support(&lattice, side).unwrap(),
    }
}

fn lattice_single(op: LatticeOp, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = lattice_shape(&mut rng);
    let mut kernel = LatticeConvKernel::zeros(s.n_out, s.n_in, s.support.clone());
    let wv = uniform_vec(&mut rng, kernel.weights.len());
    kernel.weights.data_mut().copy_from_slice(&wv);
    kernel.bias.data_mut().copy_from_slice(&uniform_vec(&mut rng, s.n_out));
    let in_shape = [s.n_in, s.h, s.w];
    let x = uniform_vec(&mut rng, s.n_in * s.h * s.w);
    let c = uniform_vec(&mut rng, s.n_out * s.h * s.w);
    let apply = |f: &Tensor, k: &LatticeConvKernel| match op {
        LatticeOp::Meet => meet_conv(f, k).unwrap(),
        LatticeOp::Join => join_conv(f, k).unwrap(),
    };
    let up = t(&[s.n_out, s.h, s.w], &c);
    let g = lattice_conv_backward(&t(&in_shape, &x), &kernel.weights, &s.support, op, 1.0, &up).unwrap();
    let gb = bias_grad(&up).unwrap();

    let e_x = fd_max_rel_err(|p| dot(&c, apply(&t(&in_shape, p), &kernel).data()), &x, g.input.data());
    let w0 = kernel.weights.data().to_vec();
    let e_w = fd_max_rel_err(
        |p| {
            let mut k = kernel.clone();
            k.weights.data_mut().copy_from_slice(p);
            dot(&c, apply(&t(&in_shape, &x), &k).data())
        },
        &w0,
        g.weights.data(),
    );
    let b0 = kernel.bias.data().to_vec();
    let e_b = fd_max_rel_err(
        |p| {
            let mut k = kernel.clone();
            k.bias.data_mut().copy_from_slice(p);
            dot(&c, apply(&t(&in_shape, &x), &k).data())
        },
        &b0,
        gb.data(),
    );
    e_x.max(e_w).max(e_b)
}

fn mixed(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = lattice_shape(&mut rng);
    let wshape = [s.n_out, s.n_in, s.support.xs.len(), s.support.ys.len()];
    let wlen = wshape.iter().product();
    let layer = LatticeLayer {
        meet: t(&wshape, &uniform_vec(&mut rng, wlen)),
        join: t(&wshape, &uniform_vec(&mut rng, wlen)),
        bias: t(&[s.n_out], &uniform_vec(&mut rng, s.n_out)),
        support: s.support.clone(),
        alpha: rng.random(),
    };
    let in_shape = [s.n_in, s.h, s.w];
    let x = uniform_vec(&mut rng, s.n_in * s.h * s.w);
    let c = uniform_vec(&mut rng, s.n_out * s.h * s.w);
    let value = |l: &LatticeLayer, x: &[f64]| {
        let (out, _) = Layer::Lattice(l.clone()).forward(&t(&in_shape, x)).unwrap();
        dot(&c, out.data())
    };
    let wrapped = Layer::Lattice(layer.clone());
    let (_, cache) = wrapped.forward(&t(&in_shape, &x)).unwrap();
    let (grads, gx) = wrapped
        .backward(&t(&in_shape, &x), &cache, &t(&[s.n_out, s.h, s.w], &c))
        .unwrap();

    let mut worst = fd_max_rel_err(|p| value(&layer, p), &x, gx.data());
    for (idx, g) in grads.iter().enumerate() {
        let p0 = match idx {
            0 => layer.meet.data().to_vec(),
            1 => layer.join.data().to_vec(),
            _ => layer.bias.data().to_vec(),
        };
        let e = fd_max_rel_err(
            |p| {
                let mut l = layer.clone();
                let target = match idx {
                    0 => &mut l.meet,
                    1 => &mut l.join,
                    _ => &mut l.bias,
                };
                target.data_mut().copy_from_slice(p);
                value(&l, &x)
            },
            &p0,
            g.data(),
        );
        worst = worst.max(e);
    }
    worst
}

fn conv(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n_in, n_out) = (rng.random_range(1..=3), rng.random_range(1..=3));
    let (h, w) = (rng.random_range(1..=6), rng.random_range(1..=6));
    let wshape = [n_out, n_in, 4, 4];
    let w0 = uniform_vec(&mut rng, n_out * n_in * 16);
    let b0 = uniform_vec(&mut rng, n_out);
    let x = uniform_vec(&mut rng, n_in * h * w);
    let c = uniform_vec(&mut rng, n_out * h * w);
    let in_shape = [n_in, h, w];
    let value = |x: &[f64], wt: &[f64], b: &[f64]| {
        dot(
            &c,
            standard_conv(&t(&in_shape, x), &t(&wshape, wt), &t(&[n_out], b))
                .unwrap()
                .data(),
        )
    };
    let g = standard_conv_backward(
        &t(&in_shape, &x),
        &t(&wshape, &w0),
        &t(&[n_out], &b0),
        &t(&[n_out, h, w], &c),
    )
    .unwrap();
    let e_x = fd_max_rel_err(|p| value(p, &w0, &b0), &x, g.input.data());
    let e_w = fd_max_rel_err(|p| value(&x, p, &b0), &w0, g.weights.data());
    let e_b = fd_max_rel_err(|p| value(&x, &w0, p), &b0, g.bias.data());
    e_x.max(e_w).max(e_b)
}

/// Inputs are a shuffled ladder with spacing 0.01, far wider than the
/// finite-difference step, so no perturbation changes an argmax.
fn pool(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ch = rng.random_range(1..=3);
    let (h, w) = (2 * rng.random_range(1..=3), 2 * rng.random_range(1..=3));
    let len = ch * h * w;
    let mut x: Vec<f64> = (0..len).map(|i| i as f64 * 0.01 - 0.3).collect();
    x.shuffle(&mut rng);
    let c = uniform_vec(&mut rng, len / 4);
    let shape = [ch, h, w];
    let p = max_pool_2x2(&t(&shape, &x)).unwrap();
    let g = max_pool_backward(&shape, &p.argmax, &t(p.output.shape(), &c)).unwrap();
    fd_max_rel_err(
        |v| dot(&c, max_pool_2x2(&t(&shape, v)).unwrap().output.data()),
        &x,
        g.data(),
    )
}

fn dense(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d_in, d_out) = (rng.random_range(1..=12), rng.random_range(1..=8));
    let w0 = uniform_vec(&mut rng, d_out * d_in);
    let b0 = uniform_vec(&mut rng, d_out);
    let x = uniform_vec(&mut rng, d_in);
    let c = uniform_vec(&mut rng, d_out);
    let value = |x: &[f64], wt: &[f64], b: &[f64]| {
        dot(
            &c,
            fully_connected(&t(&[d_in], x), &t(&[d_out, d_in], wt), &t(&[d_out], b))
                .unwrap()
                .data(),
        )
    };
    let g = fully_connected_backward(
        &t(&[d_in], &x),
        &t(&[d_out, d_in], &w0),
        &t(&[d_out], &b0),
        &t(&[d_out], &c),
    )
    .unwrap();
    let e_x = fd_max_rel_err(|p| value(p, &w0, &b0), &x, g.input.data());
    let e_w = fd_max_rel_err(|p| value(&x, p, &b0), &w0, g.weights.data());
    let e_b = fd_max_rel_err(|p| value(&x, &w0, p), &b0, g.bias.data());
    e_x.max(e_w).max(e_b)
}

fn softmax_ce(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = rng.random_range(2..=10);
    let scale = [0.5, 1.0, 3.0][rng.random_range(0..3)];
    let z: Vec<f64> = uniform_vec(&mut rng, classes).iter().map(|v| v * scale).collect();
    let label = rng.random_range(0..classes);
    let (_, g) = softmax_cross_entropy(&t(&[classes], &z), label).unwrap();
    fd_max_rel_err(
        |p| softmax_cross_entropy(&t(&[classes], p), label).unwrap().0,
        &z,
        g.data(),
    )
}
