use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};

/// Fixed-length dense vector of `f64`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn zeros(len: usize) -> Self {
        Vector(vec![0.0; len])
    }

    pub fn filled(len: usize, value: f64) -> Self {
        Vector(vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// `self += alpha * x`, in place.
    pub fn add_scaled(&mut self, alpha: f64, x: &Vector) -> Result<()> {
        check_len(self.len(), x.len())?;
        for (y, &xi) in self.0.iter_mut().zip(&x.0) {
            *y += alpha * xi;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        for y in &mut self.0 {
            *y *= alpha;
        }
    }

    pub fn dot(&self, other: &Vector) -> Result<f64> {
        check_len(self.len(), other.len())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub(crate) fn debug_check_finite(&self) {
        debug_assert!(self.is_finite(), "vector contains NaN or Inf");
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl FromIterator<f64> for Vector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Vector(iter.into_iter().collect())
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl<'a> IntoIterator for &'a Vector {
    type Item = &'a f64;
    type IntoIter = std::slice::Iter<'a, f64>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Elementwise product `a ⊙ b`.
pub fn hadamard(a: &Vector, b: &Vector) -> Result<Vector> {
    check_len(a.len(), b.len())?;
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| x * y).collect())
}

/// Returns `alpha * x + y`.
pub fn axpy(alpha: f64, x: &Vector, y: &Vector) -> Result<Vector> {
    check_len(x.len(), y.len())?;
    Ok(x.0.iter().zip(&y.0).map(|(xi, yi)| alpha * xi + yi).collect())
}
