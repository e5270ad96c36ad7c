//! Dense double-precision tensors, reverse-mode autodiff, parameter
//! storage, checkpoint IO and a finite-difference gradient checker.
//!
//! Everything is 2-D: vectors are single-row matrices, scalars are 1×1.
//! Double precision is used throughout so gradient checks have clean
//! tolerances.

pub mod autodiff;
pub mod checkpoint;
pub mod gradcheck;

pub use autodiff::{Graph, NodeId};
pub use gradcheck::{grad_check, GradCheckReport};

use std::sync::Arc;

/// Row-major dense matrix of f64.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn full(rows: usize, cols: usize, value: f64) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor {
            rows: 1,
            cols: 1,
            data: vec![value],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "tensor data length mismatch");
        Tensor { rows, cols, data }
    }

    pub fn row_vector(data: Vec<f64>) -> Self {
        Tensor {
            rows: 1,
            cols: data.len(),
            data,
        }
    }

    /// Gaussian init with the given standard deviation (Box-Muller on the
    /// caller's RNG, so runs are reproducible from the seed alone).
    pub fn randn<R: rand::Rng>(rows: usize, cols: usize, std: f64, rng: &mut R) -> Self {
        let n = rows * cols;
        let mut data = Vec::with_capacity(n);
        while data.len() < n {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            let r = (-2.0 * u1.ln()).sqrt();
            let theta = 2.0 * std::f64::consts::PI * u2;
            data.push(std * r * theta.cos());
            if data.len() < n {
                data.push(std * r * theta.sin());
            }
        }
        Tensor { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    pub fn row_slice(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// The single value of a 1×1 tensor.
    pub fn item(&self) -> f64 {
        assert_eq!(self.data.len(), 1, "item() on non-scalar tensor");
        self.data[0]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Tensor {
        let mut out = Tensor::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// Plain matrix product; the autodiff engine and any value-only path
    /// share this kernel so both produce bit-identical results.
    pub fn matmul(&self, other: &Tensor) -> Tensor {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} . {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Tensor::zeros(self.rows, other.cols);
        let n = other.cols;
        for r in 0..self.rows {
            let a_row = &self.data[r * self.cols..(r + 1) * self.cols];
            let out_row = &mut out.data[r * n..(r + 1) * n];
            for (k, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row.iter()) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn add_assign_scaled(&mut self, other: &Tensor, scale: f64) {
        assert_eq!(self.shape(), other.shape(), "add shape mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += scale * b;
        }
    }
}

/// One named trainable (or frozen) tensor plus its gradient accumulator.
#[derive(Clone, Debug)]
pub struct Param {
    pub value: Arc<Tensor>,
    pub grad: Tensor,
    pub trainable: bool,
}

/// Named map of parameters with deterministic (insertion) order.
#[derive(Clone, Debug, Default)]
pub struct ParameterSet {
    names: Vec<String>,
    index: std::collections::HashMap<String, usize>,
    params: Vec<Param>,
}

impl ParameterSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, value: Tensor, trainable: bool) {
        assert!(
            !self.index.contains_key(name),
            "duplicate parameter name {name}"
        );
        let grad = Tensor::zeros(value.rows(), value.cols());
        self.index.insert(name.to_string(), self.params.len());
        self.names.push(name.to_string());
        self.params.push(Param {
            value: Arc::new(value),
            grad,
            trainable,
        });
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn get(&self, name: &str) -> &Param {
        let idx = *self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"));
        &self.params[idx]
    }

    pub fn value(&self, name: &str) -> &Arc<Tensor> {
        &self.get(name).value
    }

    /// Mutable access to a parameter's values (optimizer update path).
    pub fn value_mut(&mut self, name: &str) -> &mut Tensor {
        let idx = *self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"));
        Arc::make_mut(&mut self.params[idx].value)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param)> {
        self.names
            .iter()
            .map(move |n| (n.as_str(), &self.params[self.index[n]]))
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.data_mut().iter_mut().for_each(|x| *x = 0.0);
        }
    }

    /// Adds `grad` into the named parameter's accumulator. Callers
    /// serialize: parallel workers produce per-graph gradient maps which
    /// are folded in here in deterministic order.
    pub fn accumulate_grad(&mut self, name: &str, grad: &Tensor) {
        let idx = *self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"));
        self.params[idx].grad.add_assign_scaled(grad, 1.0);
    }

    /// Cheap copy sharing the value storage, with fresh zero grads.
    /// Perturbing one tensor in the fork copies only that tensor.
    pub fn fork_values(&self) -> ParameterSet {
        let mut out = ParameterSet::new();
        for (name, p) in self.iter() {
            out.index.insert(name.to_string(), out.params.len());
            out.names.push(name.to_string());
            out.params.push(Param {
                value: Arc::clone(&p.value),
                grad: Tensor::zeros(0, 0),
                trainable: p.trainable,
            });
        }
        out
    }

    pub fn total_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.value.all_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_identity() {
        let id = Tensor::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        let v = Tensor::from_vec(2, 2, vec![3.0, -1.0, 2.5, 7.0]);
        assert_eq!(id.matmul(&v), v);
    }

    #[test]
    fn matmul_scalar() {
        let a = Tensor::scalar(3.0);
        let b = Tensor::scalar(-2.0);
        assert_eq!(a.matmul(&b).item(), -6.0);
    }

    #[test]
    fn transpose_roundtrip() {
        let a = Tensor::from_vec(2, 3, vec![1., 2., 3., 4., 5., 6.]);
        assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn parameter_set_order_and_grads() {
        let mut ps = ParameterSet::new();
        ps.insert("b", Tensor::scalar(1.0), true);
        ps.insert("a", Tensor::scalar(2.0), false);
        let names: Vec<_> = ps.iter().map(|(n, _)| n.to_string()).collect();
        assert_eq!(names, vec!["b", "a"]);
        ps.accumulate_grad("b", &Tensor::scalar(0.5));
        ps.accumulate_grad("b", &Tensor::scalar(0.25));
        assert_eq!(ps.get("b").grad.item(), 0.75);
        ps.zero_grads();
        assert_eq!(ps.get("b").grad.item(), 0.0);
    }
}
