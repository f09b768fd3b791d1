use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::numeric::Vector;

/// One named matrix inside a flat parameter vector, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

impl Block {
    pub fn new(name: &str, rows: usize, cols: usize) -> Self {
        Block { name: name.to_owned(), rows, cols }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Flat model weights (or a gradient / update) with the layout needed to unflatten them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    layout: Vec<Block>,
    values: Vector,
}

impl ParameterVector {
    pub fn new(layout: Vec<Block>, values: Vector) -> Result<Self> {
        let total: usize = layout.iter().map(Block::len).sum();
        check_len(total, values.len())?;
        Ok(ParameterVector { layout, values })
    }

    pub fn zeros(layout: Vec<Block>) -> Self {
        let total = layout.iter().map(Block::len).sum();
        ParameterVector { layout, values: Vector::zeros(total) }
    }

    pub fn layout(&self) -> &[Block] {
        &self.layout
    }

    pub fn values(&self) -> &Vector {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Vector {
        &mut self.values
    }

    pub fn into_values(self) -> Vector {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Per-block slices in layout order.
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.layout.len());
        let mut offset = 0;
        for b in &self.layout {
            out.push(&self.values.as_slice()[offset..offset + b.len()]);
            offset += b.len();
        }
        out
    }

    pub fn ensure_same_layout(&self, other: &ParameterVector) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::Shape(format!("{:?} vs {:?}", self.layout, other.layout)));
        }
        Ok(())
    }

    /// `w ← w + delta`.
    pub fn apply_update(&mut self, delta: &Vector) -> Result<()> {
        self.values.add_scaled(1.0, delta)?;
        self.values.debug_check_finite();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_count_must_match_layout() {
        let layout = vec![Block::new("w", 2, 3), Block::new("b", 1, 3)];
        assert!(ParameterVector::new(layout.clone(), Vector::zeros(9)).is_ok());
        assert!(ParameterVector::new(layout, Vector::zeros(8)).is_err());
    }

    #[test]
    fn blocks_split_in_order() {
        let layout = vec![Block::new("w", 1, 2), Block::new("b", 1, 1)];
        let p = ParameterVector::new(layout, vec![1.0, 2.0, 3.0].into()).unwrap();
        assert_eq!(p.blocks(), vec![&[1.0, 2.0][..], &[3.0][..]]);
    }

    #[test]
    fn layouts_must_agree() {
        let a = ParameterVector::zeros(vec![Block::new("w", 2, 2)]);
        let b = ParameterVector::zeros(vec![Block::new("w", 1, 4)]);
        assert!(a.ensure_same_layout(&b).is_err());
        assert!(a.ensure_same_layout(&a.clone()).is_ok());
    }
}
