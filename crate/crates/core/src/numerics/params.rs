use std::ops::{Index, IndexMut};

use rand::Rng;

use super::{Matrix, Real};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named parameters with gradient buffers of identical shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterStore<T> {
    names: Vec<String>,
    values: Vec<Matrix<T>>,
    grads: Vec<Matrix<T>>,
}

/// Read view of parameter values indexed by [`ParamId`].
pub struct Values<'a, T>(&'a [Matrix<T>]);

/// Mutable view of gradients indexed by [`ParamId`].
pub struct Grads<'a, T>(&'a mut [Matrix<T>]);

impl<T> Index<ParamId> for Values<'_, T> {
    type Output = Matrix<T>;
    fn index(&self, id: ParamId) -> &Matrix<T> {
        &self.0[id.0]
    }
}

impl<T> Index<ParamId> for Grads<'_, T> {
    type Output = Matrix<T>;
    fn index(&self, id: ParamId) -> &Matrix<T> {
        &self.0[id.0]
    }
}

impl<T> IndexMut<ParamId> for Grads<'_, T> {
    fn index_mut(&mut self, id: ParamId) -> &mut Matrix<T> {
        &mut self.0[id.0]
    }
}

impl<T: Real> Default for ParameterStore<T> {
    fn default() -> Self {
        ParameterStore { names: Vec::new(), values: Vec::new(), grads: Vec::new() }
    }
}

impl<T: Real> ParameterStore<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, value: Matrix<T>) -> Result<ParamId> {
        if self.id(name).is_some() {
            return Err(Error::Config(format!("duplicate parameter name {name}")));
        }
        self.grads.push(Matrix::zeros(value.rows(), value.cols()));
        self.values.push(value);
        self.names.push(name.to_string());
        Ok(ParamId(self.names.len() - 1))
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.names.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Matrix<T> {
        &self.values[id.0]
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Matrix<T> {
        &mut self.values[id.0]
    }

    pub fn grad(&self, id: ParamId) -> &Matrix<T> {
        &self.grads[id.0]
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut Matrix<T> {
        &mut self.grads[id.0]
    }

    /// Values and gradients borrowed together for a backward pass.
    pub fn split_mut(&mut self) -> (Values<'_, T>, Grads<'_, T>) {
        (Values(&self.values), Grads(&mut self.grads))
    }

    pub fn values(&self) -> Values<'_, T> {
        Values(&self.values)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix<T>)> {
        self.names.iter().map(String::as_str).zip(&self.values)
    }

    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(Matrix::len).sum()
    }

    pub fn zero_grads(&mut self) {
        self.grads.iter_mut().for_each(|g| g.fill(T::zero()));
    }

    pub fn scale_grads(&mut self, s: T) {
        for g in &mut self.grads {
            g.as_mut_slice().iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn grad_norm(&self) -> f64 {
        self.grads.iter().map(Matrix::sq_norm).sum::<f64>().sqrt()
    }

    /// Rescales all gradients so their global norm is at most `max_norm`;
    /// returns the norm before clipping.
    pub fn clip_grad_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.grad_norm();
        if norm > max_norm && norm.is_finite() {
            self.scale_grads(T::of(max_norm / norm));
        }
        norm
    }

    pub fn check_finite_grads(&self) -> Result<()> {
        match self.grads.iter().position(|g| !g.is_finite()) {
            Some(i) => Err(Error::NonFinite(format!("gradient of {}", self.names[i]))),
            None => Ok(()),
        }
    }

    pub fn cast<U: Real>(&self) -> ParameterStore<U> {
        ParameterStore {
            names: self.names.clone(),
            values: self.values.iter().map(Matrix::cast).collect(),
            grads: self.grads.iter().map(Matrix::cast).collect(),
        }
    }

    /// Replaces every value from `(name, matrix)` pairs that must match this
    /// store's names, order and shapes.
    pub fn load(&mut self, entries: Vec<(String, Matrix<T>)>) -> Result<()> {
        if entries.len() != self.len() {
            return Err(Error::Checkpoint(format!("{} parameters, expected {}", entries.len(), self.len())));
        }
        for (i, (name, m)) in entries.iter().enumerate() {
            if *name != self.names[i] || m.shape() != self.values[i].shape() {
                return Err(Error::Checkpoint(format!(
                    "parameter {i}: found {name} {:?}, expected {} {:?}",
                    m.shape(),
                    self.names[i],
                    self.values[i].shape()
                )));
            }
        }
        self.values = entries.into_iter().map(|(_, m)| m).collect();
        Ok(())
    }
}

/// Default initialisation scale, `1/√fan_in`.
pub fn fan_in_scale(fan_in: usize) -> f64 {
    1.0 / (fan_in.max(1) as f64).sqrt()
}

/// I.i.d. draws from `[−scale, scale]`.
pub fn init_uniform<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Matrix<T> {
    let scale = scale.abs();
    let data = (0..rows * cols).map(|_| T::of(rng.gen_range(-scale..=scale))).collect();
    Matrix::from_vec(rows, cols, data).expect("length matches shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;

    #[test]
    fn init_uniform_bounds_and_mean() {
        let scale = 0.3;
        let m: Matrix<f64> = init_uniform(100, 1000, scale, &mut rng(1));
        assert!(m.as_slice().iter().all(|x| x.abs() <= scale));
        let mean = m.as_slice().iter().sum::<f64>() / m.len() as f64;
        assert!(mean.abs() < 0.01 * scale, "{mean}");
        let again: Matrix<f64> = init_uniform(100, 1000, scale, &mut rng(1));
        assert_eq!(m, again);
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut s = ParameterStore::<f32>::new();
        s.add("w", Matrix::zeros(2, 2)).unwrap();
        assert!(s.add("w", Matrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn clip_scales_to_max_norm() {
        let mut s = ParameterStore::<f64>::new();
        let a = s.add("a", Matrix::zeros(1, 2)).unwrap();
        s.grad_mut(a).as_mut_slice().copy_from_slice(&[3.0, 4.0]);
        assert_eq!(s.clip_grad_norm(1.0), 5.0);
        assert!((s.grad_norm() - 1.0).abs() < 1e-12);
        assert_eq!(s.clip_grad_norm(10.0), 1.0);
    }

    #[test]
    fn non_finite_gradient_named() {
        let mut s = ParameterStore::<f32>::new();
        s.add("ok", Matrix::zeros(1, 1)).unwrap();
        let b = s.add("bad", Matrix::zeros(1, 1)).unwrap();
        s.grad_mut(b).set(0, 0, f32::NAN);
        let err = s.check_finite_grads().unwrap_err().to_string();
        assert!(err.contains("bad"), "{err}");
    }
}
