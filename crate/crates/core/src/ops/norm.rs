use alloc::vec::Vec;

use crate::error::{invalid, mismatch, Result};
use crate::par;
use crate::tensor::Tensor;

/// Frozen batch-normalisation statistics and affine terms, one entry per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub scale: Vec<f32>,
    pub shift: Vec<f32>,
    pub running_mean: Vec<f32>,
    pub running_var: Vec<f32>,
    pub epsilon: f32,
}

impl BatchNorm {
    pub fn identity(channels: usize) -> Self {
        Self {
            scale: alloc::vec![1.0; channels],
            shift: alloc::vec![0.0; channels],
            running_mean: alloc::vec![0.0; channels],
            running_var: alloc::vec![1.0; channels],
            epsilon: 0.0,
        }
    }

    pub fn channels(&self) -> usize {
        self.scale.len()
    }
}

/// `(x - mean) / sqrt(var + eps) * scale + shift`, channel-wise.
pub fn batchnorm_inference(x: &Tensor, bn: &BatchNorm) -> Result<Tensor> {
    let c = x.channels();
    for (name, len) in [
        ("scale", bn.scale.len()),
        ("shift", bn.shift.len()),
        ("running_mean", bn.running_mean.len()),
        ("running_var", bn.running_var.len()),
    ] {
        if len != c {
            return Err(mismatch!("batch-norm {name} has {len} entries for {c} channels"));
        }
    }
    let inv_std: Vec<f32> = bn
        .running_var
        .iter()
        .map(|&v| {
            let d = v + bn.epsilon;
            if v < 0.0 || d <= 0.0 || !d.is_finite() {
                Err(invalid!("batch-norm variance {v} with epsilon {}", bn.epsilon))
            } else {
                Ok(1.0 / libm::sqrtf(d))
            }
        })
        .collect::<Result<_>>()?;
    let mut out = x.clone();
    let plane = x.plane_len();
    par::for_each_chunk(out.data_mut(), plane, |ch, dst| {
        let (m, s, g, b) = (bn.running_mean[ch], inv_std[ch], bn.scale[ch], bn.shift[ch]);
        for v in dst.iter_mut() {
            *v = (*v - m) * s * g + b;
        }
    });
    Ok(out)
}
