use crate::error::{mismatch, Result};
use crate::par;
use crate::tensor::Tensor;

pub fn relu(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    relu_in_place(&mut out);
    out
}

pub fn relu_in_place(x: &mut Tensor) {
    for v in x.data_mut() {
        *v = v.max(0.0);
    }
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    for v in out.data_mut() {
        *v = 1.0 / (1.0 + libm::expf(-*v));
    }
    out
}

fn same_shape(a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(mismatch!("{:?} vs {:?}", a.shape(), b.shape()));
    }
    Ok(())
}

pub fn add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    same_shape(a, b)?;
    let mut out = a.clone();
    for (o, v) in out.data_mut().iter_mut().zip(b.data()) {
        *o += v;
    }
    Ok(out)
}

pub fn elementwise_max(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    same_shape(a, b)?;
    let mut out = a.clone();
    for (o, &v) in out.data_mut().iter_mut().zip(b.data()) {
        *o = o.max(v);
    }
    Ok(out)
}

/// Multiplies every spatial position of channel `c` by `weights[c]`.
pub fn scale_channels(x: &Tensor, weights: &[f32]) -> Result<Tensor> {
    if weights.len() != x.channels() {
        return Err(mismatch!(
            "{} channel weights for {} channels",
            weights.len(),
            x.channels()
        ));
    }
    let mut out = x.clone();
    let plane = x.plane_len();
    par::for_each_chunk(out.data_mut(), plane, |c, dst| {
        for v in dst.iter_mut() {
            *v *= weights[c];
        }
    });
    Ok(out)
}
