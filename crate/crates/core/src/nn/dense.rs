use super::tensor::Tensor;
use crate::error::{Error, Result};

fn check(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<(usize, usize)> {
    let (d_out, d_in) = match w.shape() {
        &[o, i] => (o, i),
        s => return Err(Error::shape(format!("dense weights must be 2-D, got {s:?}"))),
    };
    x.expect_shape(&[d_in], "dense input")?;
    b.expect_shape(&[d_out], "dense bias")?;
    Ok((d_out, d_in))
}

/// `W x + b` with `W` of shape `(d_out, d_in)`.
pub fn fully_connected(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (d_out, d_in) = check(x, w, b)?;
    let out = (0..d_out)
        .map(|o| {
            let row = &w.data()[o * d_in..(o + 1) * d_in];
            b.data()[o] + row.iter().zip(x.data()).map(|(a, v)| a * v).sum::<f64>()
        })
        .collect();
    Tensor::from_vec(&[d_out], out)
}

pub struct DenseGrads {
    pub weights: Tensor,
    pub bias: Tensor,
    pub input: Tensor,
}

pub fn fully_connected_backward(x: &Tensor, w: &Tensor, b: &Tensor, upstream: &Tensor) -> Result<DenseGrads> {
    let (d_out, d_in) = check(x, w, b)?;
    upstream.expect_shape(&[d_out], "dense upstream")?;
    let mut gw = Tensor::zeros(w.shape());
    let mut gx = Tensor::zeros(&[d_in]);
    for (o, &u) in upstream.data().iter().enumerate() {
        let row = &w.data()[o * d_in..(o + 1) * d_in];
        for (g, v) in gw.data_mut()[o * d_in..(o + 1) * d_in].iter_mut().zip(x.data()) {
            *g = u * v;
        }
        for (g, a) in gx.data_mut().iter_mut().zip(row) {
            *g += u * a;
        }
    }
    Ok(DenseGrads {
        weights: gw,
        bias: upstream.clone(),
        input: gx,
    })
}
