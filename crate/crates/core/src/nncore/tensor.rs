use super::Scalar;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("dimension error in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },
    #[error("non-finite value encountered in {op}")]
    NonFinite { op: &'static str },
    #[error("batch size {got} too small for {op} (need >= {need})")]
    BatchTooSmall {
        op: &'static str,
        got: usize,
        need: usize,
    },
}

/// Dense row-major n-dimensional array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T: Scalar> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::ZERO; len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape {:?} does not match data length {}",
            shape,
            data.len()
        );
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn scalar(value: T) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![value],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Reinterprets the buffer under a new shape of the same total size.
    pub fn reshape(mut self, shape: &[usize]) -> Self {
        assert_eq!(shape.iter().product::<usize>(), self.data.len());
        self.shape = shape.to_vec();
        self
    }

    pub fn fill(&mut self, value: T) {
        for x in &mut self.data {
            *x = value;
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|x| {
                let v = x.to_f64();
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Converts element type, e.g. an f32 checkpoint loaded for f64 checks.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| U::from_f64(x.to_f64())).collect(),
        }
    }

    /// Debug-build invariant: every op leaves only finite entries behind.
    #[inline]
    pub fn debug_assert_finite(&self, op: &'static str) {
        debug_assert!(self.all_finite(), "non-finite output in {op}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_shape_product() {
        let t: Tensor<f64> = Tensor::zeros(&[2, 3, 4]);
        assert_eq!(t.len(), 24);
        assert_eq!(t.shape(), &[2, 3, 4]);
    }

    #[test]
    #[should_panic]
    fn from_vec_rejects_mismatch() {
        let _: Tensor<f64> = Tensor::from_vec(&[2, 2], vec![1.0; 3]);
    }

    #[test]
    fn cast_round_trip() {
        let t: Tensor<f64> = Tensor::from_vec(&[3], vec![0.5, -1.25, 2.0]);
        let f: Tensor<f32> = t.cast();
        let back: Tensor<f64> = f.cast();
        assert_eq!(t, back);
    }
}
