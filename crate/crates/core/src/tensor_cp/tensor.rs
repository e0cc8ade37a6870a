use crate::error::{Error, Result};

/// Dense `m x n x k` array. Slice `s` is the row-major `m x n` block at
/// `data[s*m*n .. (s+1)*m*n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    m: usize,
    n: usize,
    k: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(m: usize, n: usize, k: usize) -> Self {
        Tensor3 {
            m,
            n,
            k,
            data: vec![0.0; m * n * k],
        }
    }

    pub fn from_vec(m: usize, n: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 || k == 0 {
            return Err(Error::DimensionMismatch(format!(
                "tensor dims must be positive, got {m}x{n}x{k}"
            )));
        }
        if data.len() != m * n * k {
            return Err(Error::DimensionMismatch(format!(
                "{} entries supplied for a {m}x{n}x{k} tensor",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("tensor has non-finite entries".into()));
        }
        Ok(Tensor3 { m, n, k, data })
    }

    pub fn from_fn(
        m: usize,
        n: usize,
        k: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(m * n * k);
        for s in 0..k {
            for i in 0..m {
                for j in 0..n {
                    data.push(f(i, j, s));
                }
            }
        }
        Tensor3 { m, n, k, data }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.m, self.n, self.k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, s: usize) -> f64 {
        self.data[(s * self.m + i) * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, s: usize, value: f64) {
        self.data[(s * self.m + i) * self.n + j] = value;
    }

    pub fn slice(&self, s: usize) -> &[f64] {
        let len = self.m * self.n;
        &self.data[s * len..(s + 1) * len]
    }

    pub fn slice_mut(&mut self, s: usize) -> &mut [f64] {
        let len = self.m * self.n;
        &mut self.data[s * len..(s + 1) * len]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Tensor3) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// `||self - other||_F`.
    pub fn distance(&self, other: &Tensor3) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> Tensor3 {
        Tensor3 {
            m: self.m,
            n: self.n,
            k: self.k,
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }
}
