//! Shared machinery for convolutions written as a weighted sum of gathered
//! copies of the input.
//!
//! Every kernel tap `k` owns a gather table: output cell `c` reads input cell
//! `gather[k][c]` (or zero for padding). Meet/join convolutions gather at
//! `x ∧ a` / `x ∨ a`; standard convolution gathers at shifted offsets.

pub(crate) const PAD: u32 = u32::MAX;

pub(crate) struct Taps {
    pub hw: usize,
    pub gather: Vec<Vec<u32>>,
}

impl Taps {
    pub fn len(&self) -> usize {
        self.gather.len()
    }

    fn gathered(&self, plane: &[f64], tap: usize, buf: &mut [f64]) {
        for (dst, &src) in buf.iter_mut().zip(&self.gather[tap]) {
            *dst = if src == PAD { 0.0 } else { plane[src as usize] };
        }
    }
}

/// `out[j] += scale * sum_i sum_k w[j][i][k] * gather_k(f[i])`.
///
/// `f` is `(n_in, hw)`, `w` is `(n_out, n_in, taps)`, `out` is `(n_out, hw)`.
pub(crate) fn forward(f: &[f64], w: &[f64], taps: &Taps, n_in: usize, n_out: usize, scale: f64, out: &mut [f64]) {
    let hw = taps.hw;
    let nt = taps.len();
    let mut shifted = vec![0.0; hw];
    for i in 0..n_in {
        let plane = &f[i * hw..(i + 1) * hw];
        for k in 0..nt {
            taps.gathered(plane, k, &mut shifted);
            for j in 0..n_out {
                let wk = scale * w[(j * n_in + i) * nt + k];
                if wk == 0.0 {
                    continue;
                }
                for (o, s) in out[j * hw..(j + 1) * hw].iter_mut().zip(&shifted) {
                    *o += wk * s;
                }
            }
        }
    }
}

/// Accumulates gradients of [`forward`] given the upstream gradient `up`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn backward(
    f: &[f64],
    w: &[f64],
    taps: &Taps,
    n_in: usize,
    n_out: usize,
    scale: f64,
    up: &[f64],
    grad_w: &mut [f64],
    grad_f: &mut [f64],
) {
    let hw = taps.hw;
    let nt = taps.len();
    let mut shifted = vec![0.0; hw];
    let mut grad_shifted = vec![0.0; hw];
    for i in 0..n_in {
        let plane = &f[i * hw..(i + 1) * hw];
        for k in 0..nt {
            taps.gathered(plane, k, &mut shifted);
            grad_shifted.fill(0.0);
            for j in 0..n_out {
                let upj = &up[j * hw..(j + 1) * hw];
                let dot: f64 = upj.iter().zip(&shifted).map(|(u, s)| u * s).sum();
                let idx = (j * n_in + i) * nt + k;
                grad_w[idx] += scale * dot;
                let wk = scale * w[idx];
                for (g, u) in grad_shifted.iter_mut().zip(upj) {
                    *g += wk * u;
                }
            }
            let gplane = &mut grad_f[i * hw..(i + 1) * hw];
            for (g, &src) in grad_shifted.iter().zip(&taps.gather[k]) {
                if src != PAD {
                    gplane[src as usize] += g;
                }
            }
        }
    }
}
