//! Standard 2-D cross-correlation with a 4x4 kernel and "same" zero padding
//! (two cells before, one after), so spatial dims are preserved.

use super::taps::{self, Taps, PAD};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const KERNEL: usize = 4;
const PAD_BEFORE: isize = 2;

fn conv_taps(h: usize, w: usize) -> Taps {
    let mut gather = Vec::with_capacity(KERNEL * KERNEL);
    for u in 0..KERNEL as isize {
        for v in 0..KERNEL as isize {
            let mut g = Vec::with_capacity(h * w);
            for x in 0..h as isize {
                for y in 0..w as isize {
                    let (sx, sy) = (x + u - PAD_BEFORE, y + v - PAD_BEFORE);
                    g.push(if sx >= 0 && sy >= 0 && sx < h as isize && sy < w as isize {
                        (sx as usize * w + sy as usize) as u32
                    } else {
                        PAD
                    });
                }
            }
            gather.push(g);
        }
    }
    Taps { hw: h * w, gather }
}

fn check(f: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<(usize, usize, usize, usize)> {
    let (c, h, w) = f.dims3("conv input")?;
    if h == 0 || w == 0 {
        return Err(Error::shape("conv input has an empty spatial dimension"));
    }
    let s = weights.shape();
    if s.len() != 4 || s[1] != c || s[2] != KERNEL || s[3] != KERNEL {
        return Err(Error::shape(format!("conv weights {s:?} for {c} input channels")));
    }
    bias.expect_shape(&[s[0]], "conv bias")?;
    Ok((c, s[0], h, w))
}

/// `out[j][x][y] = bias[j] + sum_{i,u,v} w[j][i][u][v] * f[i][x+u-2][y+v-2]`, zero outside.
pub fn standard_conv(f: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (n_in, n_out, h, w) = check(f, weights, bias)?;
    let mut out = Tensor::zeros(&[n_out, h, w]);
    for (j, &b) in bias.data().iter().enumerate() {
        out.data_mut()[j * h * w..(j + 1) * h * w].fill(b);
    }
    taps::forward(
        f.data(),
        weights.data(),
        &conv_taps(h, w),
        n_in,
        n_out,
        1.0,
        out.data_mut(),
    );
    Ok(out)
}

pub struct ConvGrads {
    pub weights: Tensor,
    pub bias: Tensor,
    pub input: Tensor,
}

pub fn standard_conv_backward(f: &Tensor, weights: &Tensor, bias: &Tensor, upstream: &Tensor) -> Result<ConvGrads> {
    let (n_in, n_out, h, w) = check(f, weights, bias)?;
    upstream.expect_shape(&[n_out, h, w], "conv upstream")?;
    let mut gw = Tensor::zeros(weights.shape());
    let mut gf = Tensor::zeros(f.shape());
    taps::backward(
        f.data(),
        weights.data(),
        &conv_taps(h, w),
        n_in,
        n_out,
        1.0,
        upstream.data(),
        gw.data_mut(),
        gf.data_mut(),
    );
    let hw = h * w;
    let gb = (0..n_out)
        .map(|j| upstream.data()[j * hw..(j + 1) * hw].iter().sum())
        .collect();
    Ok(ConvGrads {
        weights: gw,
        bias: Tensor::from_vec(&[n_out], gb)?,
        input: gf,
    })
}
