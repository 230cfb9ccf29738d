//! Meet and join convolutions on `[m] x [n]`.
//!
//! ```text
//! MeetConv(f)(x, y)^j = bias_j + sum_i sum_{(a,b) in support} f_i(x ∧ a, y ∧ b) g^i_j(a, b)
//! ```
//!
//! and the same with `∨` for the join. Weights exist only on the support
//! sites; every other lattice element carries no parameter.

use super::taps::{self, Taps};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::grid_lattice::{join, meet, GridLattice, GridPoint, KernelSupport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeOp {
    Meet,
    Join,
}

impl LatticeOp {
    fn apply(self, a: GridPoint, b: GridPoint) -> GridPoint {
        match self {
            LatticeOp::Meet => meet(a, b),
            LatticeOp::Join => join(a, b),
        }
    }
}

/// Weights `(n_out, n_in, |xs|, |ys|)` on the support sites and one bias per output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeConvKernel {
    pub weights: Tensor,
    pub support: KernelSupport,
    pub bias: Tensor,
}

impl LatticeConvKernel {
    pub fn zeros(n_out: usize, n_in: usize, support: KernelSupport) -> Self {
        Self {
            weights: Tensor::zeros(&[n_out, n_in, support.xs.len(), support.ys.len()]),
            bias: Tensor::zeros(&[n_out]),
            support,
        }
    }

    pub fn n_out(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn n_in(&self) -> usize {
        self.weights.shape()[1]
    }

    /// Mutable weight at support site `(xs[p], ys[q])`.
    pub fn weight_mut(&mut self, j: usize, i: usize, p: usize, q: usize) -> &mut f64 {
        let s = self.weights.shape().to_vec();
        &mut self.weights.data_mut()[((j * s[1] + i) * s[2] + p) * s[3] + q]
    }
}

pub(crate) fn lattice_taps(lattice: &GridLattice, support: &KernelSupport, op: LatticeOp) -> Taps {
    let cols = lattice.cols();
    let gather = support
        .sites()
        .map(|site| {
            lattice
                .points()
                .map(|p| {
                    let q = op.apply(p, site);
                    (q.x * cols + q.y) as u32
                })
                .collect()
        })
        .collect();
    Taps {
        hw: lattice.len(),
        gather,
    }
}

pub(crate) fn check_kernel(f: &Tensor, weights: &Tensor, support: &KernelSupport) -> Result<GridLattice> {
    let (c, h, w) = f.dims3("lattice conv input")?;
    let lattice = GridLattice::for_grid(h, w)?;
    let s = weights.shape();
    if s.len() != 4 || s[1] != c || s[2] != support.xs.len() || s[3] != support.ys.len() {
        return Err(Error::shape(format!(
            "lattice kernel {s:?} does not match input channels {c} and support {}x{}",
            support.xs.len(),
            support.ys.len()
        )));
    }
    if !support.fits(&lattice) {
        return Err(Error::shape(format!(
            "kernel support exceeds lattice [{}]x[{}]",
            lattice.m, lattice.n
        )));
    }
    Ok(lattice)
}

fn check_bias(bias: &Tensor, n_out: usize) -> Result<()> {
    bias.expect_shape(&[n_out], "lattice conv bias")
}

fn add_bias(out: &mut Tensor, bias: &Tensor) {
    let n_out = bias.len();
    let hw = out.len() / n_out;
    for (j, &b) in bias.data().iter().enumerate() {
        for v in &mut out.data_mut()[j * hw..(j + 1) * hw] {
            *v += b;
        }
    }
}

fn single(f: &Tensor, kernel: &LatticeConvKernel, op: LatticeOp) -> Result<Tensor> {
    let lattice = check_kernel(f, &kernel.weights, &kernel.support)?;
    let (n_out, n_in) = (kernel.n_out(), kernel.n_in());
    check_bias(&kernel.bias, n_out)?;
    let taps = lattice_taps(&lattice, &kernel.support, op);
    let mut out = Tensor::zeros(&[n_out, lattice.rows(), lattice.cols()]);
    add_bias(&mut out, &kernel.bias);
    taps::forward(f.data(), kernel.weights.data(), &taps, n_in, n_out, 1.0, out.data_mut());
    Ok(out)
}

pub fn meet_conv(f: &Tensor, kernel: &LatticeConvKernel) -> Result<Tensor> {
    single(f, kernel, LatticeOp::Meet)
}

pub fn join_conv(f: &Tensor, kernel: &LatticeConvKernel) -> Result<Tensor> {
    single(f, kernel, LatticeOp::Join)
}

/// `alpha * MeetConv(f) + (1 - alpha) * JoinConv(f)`; biases of both kernels are added
/// with the same weights.
pub fn mixed_lattice_layer(
    f: &Tensor,
    kernel_meet: &LatticeConvKernel,
    kernel_join: &LatticeConvKernel,
    alpha: f64,
) -> Result<Tensor> {
    check_alpha(alpha)?;
    let mut out = meet_conv(f, kernel_meet)?;
    out.scale(alpha);
    let mut j = join_conv(f, kernel_join)?;
    j.scale(1.0 - alpha);
    out.add_assign(&j);
    Ok(out)
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must be in [0,1], got {alpha}")))
    }
}

/// Gradients of one lattice convolution (without bias) scaled by `scale`.
pub struct LatticeConvGrads {
    pub weights: Tensor,
    pub input: Tensor,
}

/// Reverse pass of `scale * conv_op(f)`: `d/dg[j][i](a,b) = f_i(x op a, y op b)` summed
/// against the upstream gradient, and the input gradient scattered to `(x op a, y op b)`.
pub fn lattice_conv_backward(
    f: &Tensor,
    weights: &Tensor,
    support: &KernelSupport,
    op: LatticeOp,
    scale: f64,
    upstream: &Tensor,
) -> Result<LatticeConvGrads> {
    let lattice = check_kernel(f, weights, support)?;
    let (n_out, n_in) = (weights.shape()[0], weights.shape()[1]);
    upstream.expect_shape(&[n_out, lattice.rows(), lattice.cols()], "lattice conv upstream")?;
    let taps = lattice_taps(&lattice, support, op);
    let mut gw = Tensor::zeros(weights.shape());
    let mut gf = Tensor::zeros(f.shape());
    taps::backward(
        f.data(),
        weights.data(),
        &taps,
        n_in,
        n_out,
        scale,
        upstream.data(),
        gw.data_mut(),
        gf.data_mut(),
    );
    Ok(LatticeConvGrads { weights: gw, input: gf })
}

/// Sum of the upstream gradient per output channel.
pub fn bias_grad(upstream: &Tensor) -> Result<Tensor> {
    let (c, h, w) = upstream.dims3("bias upstream")?;
    let hw = h * w;
    let data = (0..c)
        .map(|j| upstream.data()[j * hw..(j + 1) * hw].iter().sum())
        .collect();
    Tensor::from_vec(&[c], data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_lattice::kernel_support;

    fn grid2() -> Tensor {
        Tensor::from_vec(&[1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    fn corner_kernel() -> LatticeConvKernel {
        let support = kernel_support(&GridLattice::new(1, 1), 2).unwrap();
        let mut k = LatticeConvKernel::zeros(1, 1, support);
        *k.weight_mut(0, 0, 0, 0) = 1.0;
        *k.weight_mut(0, 0, 1, 1) = 1.0;
        k
    }

    #[test]
    fn meet_example() {
        let out = meet_conv(&grid2(), &corner_kernel()).unwrap();
        assert_eq!(out.data(), &[2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn join_example() {
        let out = join_conv(&grid2(), &corner_kernel()).unwrap();
        assert_eq!(out.data(), &[5.0, 6.0, 7.0, 8.0]);
    }

    fn delta(lattice: GridLattice, at_top: bool, channels: usize) -> LatticeConvKernel {
        let support = kernel_support(&lattice, 3).unwrap();
        let (p, q) = if at_top {
            (support.xs.len() - 1, support.ys.len() - 1)
        } else {
            (0, 0)
        };
        let mut k = LatticeConvKernel::zeros(channels, channels, support);
        for c in 0..channels {
            *k.weight_mut(c, c, p, q) = 1.0;
        }
        k
    }

    fn ramp(c: usize, h: usize, w: usize) -> Tensor {
        let data = (0..c * h * w).map(|v| ((v * 7919) % 101) as f64 / 7.0 - 3.0).collect();
        Tensor::from_vec(&[c, h, w], data).unwrap()
    }

    #[test]
    fn neutral_kernels() {
        let f = ramp(2, 5, 4);
        let l = GridLattice::new(4, 3);
        assert_eq!(meet_conv(&f, &delta(l, true, 2)).unwrap(), f);
        assert_eq!(join_conv(&f, &delta(l, false, 2)).unwrap(), f);
        assert_eq!(
            mixed_lattice_layer(&f, &delta(l, true, 2), &delta(l, false, 2), 0.5).unwrap(),
            f
        );
    }

    #[test]
    fn constant_input() {
        let f = Tensor::filled(&[1, 4, 4], 2.5);
        let support = kernel_support(&GridLattice::new(3, 3), 3).unwrap();
        let mut k = LatticeConvKernel::zeros(1, 1, support);
        for (n, w) in k.weights.data_mut().iter_mut().enumerate() {
            *w = n as f64 * 0.25 - 1.0;
        }
        let total: f64 = k.weights.data().iter().sum();
        for out in [meet_conv(&f, &k).unwrap(), join_conv(&f, &k).unwrap()] {
            for &v in out.data() {
                assert!((v - 2.5 * total).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn alpha_extremes() {
        let f = ramp(1, 4, 4);
        let support = kernel_support(&GridLattice::new(3, 3), 4).unwrap();
        let mut km = LatticeConvKernel::zeros(2, 1, support.clone());
        let mut kj = LatticeConvKernel::zeros(2, 1, support);
        for (n, w) in km.weights.data_mut().iter_mut().enumerate() {
            *w = (n % 5) as f64 - 2.0;
        }
        for (n, w) in kj.weights.data_mut().iter_mut().enumerate() {
            *w = (n % 3) as f64 + 0.5;
        }
        assert_eq!(
            mixed_lattice_layer(&f, &km, &kj, 1.0).unwrap(),
            meet_conv(&f, &km).unwrap()
        );
        assert_eq!(
            mixed_lattice_layer(&f, &km, &kj, 0.0).unwrap(),
            join_conv(&f, &kj).unwrap()
        );
        assert!(mixed_lattice_layer(&f, &km, &kj, 1.5).is_err());
        assert!(mixed_lattice_layer(&f, &km, &kj, -0.1).is_err());
    }

    #[test]
    fn shape_mismatch() {
        let k = corner_kernel();
        assert!(meet_conv(&Tensor::zeros(&[2, 2, 2]), &k).is_err());
        // support index 1 does not fit a 1x1 lattice
        assert!(meet_conv(&Tensor::zeros(&[1, 1, 1]), &k).is_err());
        assert!(meet_conv(&Tensor::zeros(&[4]), &k).is_err());
    }

    #[test]
    fn delta_top_backward_is_identity() {
        let f = ramp(2, 4, 5);
        let k = delta(GridLattice::new(3, 4), true, 2);
        let up = ramp(2, 4, 5);
        let g = lattice_conv_backward(&f, &k.weights, &k.support, LatticeOp::Meet, 1.0, &up).unwrap();
        assert_eq!(g.input, up);
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let f = ramp(2, 4, 4);
        let k = delta(GridLattice::new(3, 3), true, 2);
        let up = Tensor::zeros(&[2, 4, 4]);
        let g = lattice_conv_backward(&f, &k.weights, &k.support, LatticeOp::Join, 1.0, &up).unwrap();
        assert!(g.weights.data().iter().all(|&v| v == 0.0));
        assert!(g.input.data().iter().all(|&v| v == 0.0));
        assert!(bias_grad(&up).unwrap().data().iter().all(|&v| v == 0.0));
    }
}
