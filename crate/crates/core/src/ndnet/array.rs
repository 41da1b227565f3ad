use crate::error::{Error, Result};

/// Ordered list of positive extents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::invalid("shape needs at least one extent"));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::invalid(format!(
                "extent {pos} of shape {dims:?} is zero"
            )));
        }
        Ok(Shape(dims))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Extent of the innermost dimension.
    pub fn last(&self) -> usize {
        *self.0.last().expect("shape is never empty")
    }
}

/// Dense row-major array of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct NdArray {
    shape: Shape,
    values: Vec<f64>,
}

impl NdArray {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let shape = Shape::new(dims)?;
        if shape.len() != values.len() {
            return Err(Error::ShapeMismatch {
                op: "NdArray::new",
                expected: shape.dims().to_vec(),
                found: vec![values.len()],
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "NdArray::new".into(),
                index,
            });
        }
        Ok(NdArray { shape, values })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let shape = Shape::new(dims)?;
        let values = vec![0.0; shape.len()];
        Ok(NdArray { shape, values })
    }

    /// One-dimensional array. Panics on an empty vector.
    pub fn from_vec(values: Vec<f64>) -> Self {
        let n = values.len();
        NdArray::new(vec![n], values).expect("from_vec requires a non-empty finite vector")
    }

    /// `rows × cols` matrix from row-major values.
    pub fn matrix(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        NdArray::new(vec![rows, cols], values)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of rows when viewed as `(len / last) × last`.
    pub fn rows(&self) -> usize {
        self.values.len() / self.shape.last()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.shape.last();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn reshape(self, dims: Vec<usize>) -> Result<Self> {
        let shape = Shape::new(dims)?;
        if shape.len() != self.values.len() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                expected: shape.dims().to_vec(),
                found: self.shape.dims().to_vec(),
            });
        }
        Ok(NdArray {
            shape,
            values: self.values,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> NdArray {
        NdArray {
            shape: self.shape.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn from_parts_unchecked(shape: Shape, values: Vec<f64>) -> Self {
        debug_assert_eq!(shape.len(), values.len());
        NdArray { shape, values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_extent_and_length_mismatch() {
        assert!(Shape::new(vec![2, 0]).is_err());
        assert!(NdArray::new(vec![2, 2], vec![1.0; 3]).is_err());
        assert!(NdArray::new(vec![1], vec![f64::NAN]).is_err());
    }

    #[test]
    fn element_count_is_product() {
        let a = NdArray::zeros(vec![2, 3, 4]).unwrap();
        assert_eq!(a.len(), 24);
        assert_eq!(a.rows(), 6);
    }
}
