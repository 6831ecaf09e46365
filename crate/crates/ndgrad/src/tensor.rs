use crate::{NdError, NdResult, Scalar};

/// Dense row-major tensor.
///
/// Rank-3 tensors are laid out `[channels, height, width]` so that each
/// channel is one contiguous plane; rank-2 kernels are `[kh, kw]`. The shape
/// is immutable after construction, only the data can be rewritten in place.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> NdResult<Self> {
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(NdError::LengthMismatch {
                shape,
                len: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![T::zero(); len],
        }
    }

    pub fn full(shape: Vec<usize>, value: T) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![value; len],
        }
    }

    pub fn scalar(value: T) -> Self {
        Self {
            shape: vec![1],
            data: vec![value],
        }
    }

    /// Builds a tensor by evaluating `f` at every flat index.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(usize) -> T) -> Self {
        let len: usize = shape.iter().product();
        Self {
            shape,
            data: (0..len).map(|i| f(i)).collect(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
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

    /// The single element of a `[1]` tensor.
    pub fn item(&self) -> NdResult<T> {
        if self.data.len() != 1 {
            return Err(NdError::NonScalarRoot(self.shape.clone()));
        }
        Ok(self.data[0])
    }

    /// Extents `(c, h, w)` of a rank-3 tensor.
    pub fn dims3(&self, op: &'static str) -> NdResult<(usize, usize, usize)> {
        match self.shape[..] {
            [c, h, w] => Ok((c, h, w)),
            _ => Err(NdError::RankMismatch {
                op,
                want: 3,
                got: self.shape.clone(),
            }),
        }
    }

    /// Extents `(h, w)` of a rank-2 tensor.
    pub fn dims2(&self, op: &'static str) -> NdResult<(usize, usize)> {
        match self.shape[..] {
            [h, w] => Ok((h, w)),
            _ => Err(NdError::RankMismatch {
                op,
                want: 2,
                got: self.shape.clone(),
            }),
        }
    }

    /// Contiguous `h*w` plane of channel `c` in a `[c, h, w]` tensor.
    pub fn plane(&self, c: usize) -> &[T] {
        let plane = self.shape[1] * self.shape[2];
        &self.data[c * plane..(c + 1) * plane]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [T] {
        let plane = self.shape[1] * self.shape[2];
        &mut self.data[c * plane..(c + 1) * plane]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, op: &'static str, f: impl Fn(T, T) -> T) -> NdResult<Self> {
        if self.shape != other.shape {
            return Err(NdError::ShapeMismatch {
                op,
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `self += other`, used for gradient accumulation. Shapes must already agree.
    pub fn add_in_place(&mut self, other: &Self) {
        debug_assert_eq!(self.shape, other.shape);
        for (d, s) in self.data.iter_mut().zip(&other.data) {
            *d += *s;
        }
    }

    pub fn scale_in_place(&mut self, factor: T) {
        for d in &mut self.data {
            *d *= factor;
        }
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &v| T::max(acc, v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Lossy conversion between precisions; exact when widening.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::of_f64(v.as_f64())).collect(),
        }
    }
}
