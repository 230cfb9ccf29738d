use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Output of 2x2 max pooling plus the flat input index chosen for each output cell.
pub struct Pooled {
    pub output: Tensor,
    pub argmax: Vec<usize>,
}

/// Stride-2 max over 2x2 blocks. Ties go to the first cell in row-major order.
pub fn max_pool_2x2(f: &Tensor) -> Result<Pooled> {
    let (c, h, w) = f.dims3("max pool input")?;
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::shape(format!("max pool needs even spatial dims, got {h}x{w}")));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut argmax = Vec::with_capacity(c * oh * ow);
    let d = f.data();
    for ch in 0..c {
        for x in 0..oh {
            for y in 0..ow {
                let mut best = ch * h * w + 2 * x * w + 2 * y;
                for (dx, dy) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = ch * h * w + (2 * x + dx) * w + 2 * y + dy;
                    if d[idx] > d[best] {
                        best = idx;
                    }
                }
                out.push(d[best]);
                argmax.push(best);
            }
        }
    }
    Ok(Pooled {
        output: Tensor::from_vec(&[c, oh, ow], out)?,
        argmax,
    })
}

/// Routes each upstream value to the input cell that won the max.
pub fn max_pool_backward(input_shape: &[usize], argmax: &[usize], upstream: &Tensor) -> Result<Tensor> {
    if upstream.len() != argmax.len() {
        return Err(Error::shape("max pool upstream does not match recorded argmax"));
    }
    let mut g = Tensor::zeros(input_shape);
    for (&idx, &u) in argmax.iter().zip(upstream.data()) {
        g.data_mut()[idx] += u;
    }
    Ok(g)
}
