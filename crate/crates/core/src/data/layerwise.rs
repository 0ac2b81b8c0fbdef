use crate::data::tensor::AttentionTensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Head-summed attention of shape `(layers, T, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerwiseAttention<T> {
    layers: usize,
    total: usize,
    values: Vec<T>,
}

impl<T: Scalar> LayerwiseAttention<T> {
    /// Wraps raw values. Only the shape is checked; rows need not sum to anything
    /// in particular, so rescaled layers are representable.
    pub fn from_values(layers: usize, total: usize, values: Vec<T>) -> Result<Self> {
        if layers == 0 || total == 0 {
            return Err(Error::Dims("layerwise attention needs layers >= 1 and T >= 1".into()));
        }
        if values.len() != layers * total * total {
            return Err(Error::LengthMismatch {
                expected: layers * total * total,
                actual: values.len(),
            });
        }
        Ok(Self {
            layers,
            total,
            values,
        })
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn get(&self, layer: usize, row: usize, col: usize) -> T {
        self.values[(layer * self.total + row) * self.total + col]
    }

    pub fn layer(&self, layer: usize) -> &[T] {
        let len = self.total * self.total;
        &self.values[layer * len..(layer + 1) * len]
    }

    /// Multiplies one layer slice by `k`.
    pub fn scale_layer(&mut self, layer: usize, k: T) {
        let len = self.total * self.total;
        for v in &mut self.values[layer * len..(layer + 1) * len] {
            *v = *v * k;
        }
    }
}

/// Sums the head dimension: `out[z,i,j] = Σ_h t[z,h,i,j]`.
///
/// Accumulates in `f64` in head order so results are independent of `T`.
pub fn head_sum<T: Scalar>(t: &AttentionTensor<T>) -> LayerwiseAttention<T> {
    let total = t.total();
    let area = total * total;
    let mut values = Vec::with_capacity(t.layers() * area);
    let mut acc = vec![0.0f64; area];
    for z in 0..t.layers() {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for h in 0..t.heads() {
            for (a, v) in acc.iter_mut().zip(t.slice(z, h)) {
                *a += v.as_f64();
            }
        }
        values.extend(acc.iter().map(|&a| T::of(a)));
    }
    LayerwiseAttention {
        layers: t.layers(),
        total,
        values,
    }
}
