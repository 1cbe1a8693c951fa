//! Dense real vectors and the per-round message batch.

use alloc::vec::Vec;

use crate::error::{invalid, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// `y += s * x`
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn scale(s: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= s;
    }
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// The `m` messages of one round, each of dimension `d`, stored row-major.
///
/// Construction validates that every vector has the same nonzero dimension
/// and that every coordinate is finite, so the aggregation rules never see
/// NaN or infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorBatch {
    data: Vec<f64>,
    m: usize,
    d: usize,
}

impl VectorBatch {
    pub fn new<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Self> {
        let m = vectors.len();
        if m == 0 {
            return Err(invalid!("batch must contain at least one vector"));
        }
        let d = vectors[0].as_ref().len();
        if d == 0 {
            return Err(invalid!("vectors must have dimension >= 1"));
        }
        let mut data = Vec::with_capacity(m * d);
        for (i, v) in vectors.iter().enumerate() {
            let v = v.as_ref();
            if v.len() != d {
                return Err(invalid!(
                    "vector {i} has dimension {} but batch dimension is {d}",
                    v.len()
                ));
            }
            if let Some(k) = v.iter().position(|x| !x.is_finite()) {
                return Err(invalid!("vector {i} coordinate {k} is not finite"));
            }
            data.extend_from_slice(v);
        }
        Ok(Self { data, m, d })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    /// Collects coordinate `k` of every vector into `buf`.
    pub fn column_into(&self, k: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(self.iter().map(|v| v[k]));
    }
}
