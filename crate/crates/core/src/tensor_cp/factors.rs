use nalgebra::DMatrix;

use super::Tensor3;
use crate::error::{Error, Result};

/// CP factors `<lambda, A, B, C>`: the tensor `sum_r lambda_r a_r (x) b_r (x) c_r`.
///
/// Columns of `a`, `b`, `c` have unit norm and components are ordered by
/// decreasing `|lambda_r|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpFactors {
    pub lambdas: Vec<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl CpFactors {
    /// Rank-0 factor set for a tensor of the given dims.
    pub fn empty(dims: (usize, usize, usize)) -> Self {
        CpFactors {
            lambdas: Vec::new(),
            a: DMatrix::zeros(dims.0, 0),
            b: DMatrix::zeros(dims.1, 0),
            c: DMatrix::zeros(dims.2, 0),
        }
    }

    pub fn rank(&self) -> usize {
        self.lambdas.len()
    }

    /// Builds factors from raw components, normalising every column and
    /// sorting by decreasing `|lambda|`. Column norms are folded into lambda.
    pub fn from_components(
        lambdas: Vec<f64>,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
    ) -> Result<Self> {
        let rank = lambdas.len();
        if a.ncols() != rank || b.ncols() != rank || c.ncols() != rank {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients but factor matrices have {}, {}, {} columns",
                rank,
                a.ncols(),
                b.ncols(),
                c.ncols()
            )));
        }
        let mut parts: Vec<(f64, usize, f64)> = Vec::with_capacity(rank);
        for r in 0..rank {
            let scale = a.column(r).norm() * b.column(r).norm() * c.column(r).norm();
            if scale == 0.0 {
                return Err(Error::InvalidConfig(format!("factor column {r} is zero")));
            }
            parts.push((lambdas[r] * scale, r, scale));
        }
        parts.sort_by(|x, y| y.0.abs().total_cmp(&x.0.abs()).then(x.1.cmp(&y.1)));

        let mut out = CpFactors {
            lambdas: Vec::with_capacity(rank),
            a: DMatrix::zeros(a.nrows(), rank),
            b: DMatrix::zeros(b.nrows(), rank),
            c: DMatrix::zeros(c.nrows(), rank),
        };
        for (dst, &(lambda, src, _)) in parts.iter().enumerate() {
            out.lambdas.push(lambda);
            out.a.set_column(dst, &a.column(src).normalize());
            out.b.set_column(dst, &b.column(src).normalize());
            out.c.set_column(dst, &c.column(src).normalize());
        }
        Ok(out)
    }
}

/// Keeps the `min(ell, R)` components with largest `|lambda|`.
pub fn truncate_rank(f: &CpFactors, ell: usize) -> CpFactors {
    let keep = ell.min(f.rank());
    if keep == f.rank() {
        return f.clone();
    }
    CpFactors {
        lambdas: f.lambdas[..keep].to_vec(),
        a: f.a.columns(0, keep).into_owned(),
        b: f.b.columns(0, keep).into_owned(),
        c: f.c.columns(0, keep).into_owned(),
    }
}

/// Entry `(i, j, s) = sum_r lambda_r A(i,r) B(j,r) C(s,r)`.
pub fn reconstruct_cp(f: &CpFactors, dims: (usize, usize, usize)) -> Result<Tensor3> {
    let (m, n, k) = dims;
    if f.a.nrows() != m || f.b.nrows() != n || f.c.nrows() != k {
        return Err(Error::DimensionMismatch(format!(
            "factors are {}x{}x{}, requested {m}x{n}x{k}",
            f.a.nrows(),
            f.b.nrows(),
            f.c.nrows()
        )));
    }
    let mut out = Tensor3::zeros(m, n, k);
    for (r, &lambda) in f.lambdas.iter().enumerate() {
        for s in 0..k {
            let weight = lambda * f.c[(s, r)];
            if weight == 0.0 {
                continue;
            }
            let slice = out.slice_mut(s);
            for i in 0..m {
                let wa = weight * f.a[(i, r)];
                let row = &mut slice[i * n..(i + 1) * n];
                for (j, v) in row.iter_mut().enumerate() {
                    *v += wa * f.b[(j, r)];
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_component() -> CpFactors {
        CpFactors::from_components(
            vec![3.0, 2.0, 1.0],
            DMatrix::identity(3, 3),
            DMatrix::identity(3, 3),
            DMatrix::identity(4, 3),
        )
        .unwrap()
    }

    #[test]
    fn truncate_keeps_leading_components() {
        let f = three_component();
        let t = truncate_rank(&f, 2);
        assert_eq!(t.lambdas, vec![3.0, 2.0]);
        assert_eq!(t.a, f.a.columns(0, 2).into_owned());
        assert_eq!(t.c, f.c.columns(0, 2).into_owned());
    }

    #[test]
    fn truncate_beyond_rank_is_noop() {
        let f = three_component();
        assert_eq!(truncate_rank(&f, 5), f);
        assert_eq!(truncate_rank(&f, 3), f);
    }

    #[test]
    fn reconstruct_empty_is_zero() {
        let t = reconstruct_cp(&CpFactors::empty((2, 3, 4)), (2, 3, 4)).unwrap();
        assert_eq!(t, Tensor3::zeros(2, 3, 4));
    }

    #[test]
    fn reconstruct_basis_vectors() {
        let f = CpFactors::from_components(
            vec![2.0],
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
        )
        .unwrap();
        let t = reconstruct_cp(&f, (2, 3, 2)).unwrap();
        let expected = Tensor3::from_fn(2, 3, 2, |i, j, s| if i + j + s == 0 { 2.0 } else { 0.0 });
        assert_eq!(t, expected);
    }

    #[test]
    fn reconstruct_rejects_wrong_dims() {
        assert!(reconstruct_cp(&three_component(), (3, 3, 5)).is_err());
    }

    #[test]
    fn from_components_sorts_and_normalises() {
        let f = CpFactors::from_components(
            vec![1.0, -4.0],
            DMatrix::from_column_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        assert_eq!(f.lambdas, vec![-4.0, 2.0]);
        for col in f.a.column_iter() {
            assert!((col.norm() - 1.0).abs() < 1e-12);
        }
    }
}
