use alloc::vec::Vec;

use crate::error::{mismatch, Result};

/// `weight · input + bias` for a row-major `outputs × input.len()` matrix.
pub fn linear(input: &[f32], weight: &[f32], bias: Option<&[f32]>) -> Result<Vec<f32>> {
    let n = input.len();
    if n == 0 || !weight.len().is_multiple_of(n) {
        return Err(mismatch!("{} weights for {n} inputs", weight.len()));
    }
    let rows = weight.len() / n;
    if let Some(b) = bias {
        if b.len() != rows {
            return Err(mismatch!("{} biases for {rows} outputs", b.len()));
        }
    }
    Ok(weight
        .chunks_exact(n)
        .enumerate()
        .map(|(r, row)| {
            let dot = row.iter().zip(input).fold(0.0f32, |acc, (w, v)| acc + w * v);
            dot + bias.map_or(0.0, |b| b[r])
        })
        .collect())
}
