//! Alternating least-squares refinement of a CP factor set.
//!
//! Starting from given factors (typically a truncated Jenrich decomposition),
//! missing components are seeded from the leading singular directions of the
//! residual, and each sweep re-solves `C`, `A` and `B` in turn with the other
//! two fixed.

use nalgebra::DMatrix;

use super::{linalg, reconstruct_cp, CpFactors, Tensor3};
use crate::error::{Error, Result};

const RIDGE: f64 = 1e-12;

/// Refines `init` into a rank-`rank` fit of `t` with `sweeps` ALS sweeps.
///
/// `rank` is capped at `min(m, n)`. Components beyond `init.rank()` are added
/// from the residual before the first sweep. With `sweeps == 0` and no
/// padding needed, `init` is returned unchanged.
pub fn refine_als(t: &Tensor3, init: &CpFactors, rank: usize, sweeps: usize) -> Result<CpFactors> {
    let (m, n, k) = t.dims();
    if init.a.nrows() != m || init.b.nrows() != n || init.c.nrows() != k {
        return Err(Error::DimensionMismatch(format!(
            "factors are {}x{}x{}, tensor is {m}x{n}x{k}",
            init.a.nrows(),
            init.b.nrows(),
            init.c.nrows()
        )));
    }
    let rank = rank.min(m).min(n);
    if rank == 0 {
        return Ok(CpFactors::empty((m, n, k)));
    }
    if sweeps == 0 && init.rank() >= rank {
        return Ok(init.clone());
    }

    let keep = init.rank().min(rank);
    let (mut a, mut b) = pad_factors(t, init, keep, rank)?;
    let mut c = solve_c(t, &a, &b)?;
    for _ in 0..sweeps {
        a = solve_a(t, &b, &c)?;
        b = solve_b(t, &a, &c)?;
        c = solve_c(t, &a, &b)?;
    }

    let mut cols = Vec::with_capacity(rank);
    for r in 0..rank {
        let scale = a.column(r).norm() * b.column(r).norm() * c.column(r).norm();
        if scale.is_finite() && scale > 0.0 {
            cols.push(r);
        }
    }
    if cols.len() < rank {
        if cols.is_empty() {
            return Ok(CpFactors::empty((m, n, k)));
        }
        a = a.select_columns(&cols);
        b = b.select_columns(&cols);
        c = c.select_columns(&cols);
    }
    CpFactors::from_components(vec![1.0; cols.len()], a, b, c)
}

/// Leading `keep` columns of `init` plus `rank - keep` columns from the top
/// eigenvectors of the residual's mode-1 and mode-2 Gram matrices.
fn pad_factors(
    t: &Tensor3,
    init: &CpFactors,
    keep: usize,
    rank: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (m, n, k) = t.dims();
    let mut a = DMatrix::zeros(m, rank);
    let mut b = DMatrix::zeros(n, rank);
    for r in 0..keep {
        a.set_column(r, &init.a.column(r));
        b.set_column(r, &init.b.column(r));
    }
    if keep == rank {
        return Ok((a, b));
    }

    let kept = CpFactors {
        lambdas: init.lambdas[..keep].to_vec(),
        a: init.a.columns(0, keep).into_owned(),
        b: init.b.columns(0, keep).into_owned(),
        c: init.c.columns(0, keep).into_owned(),
    };
    let approx = reconstruct_cp(&kept, (m, n, k))?;
    let resid: Vec<f64> = t
        .as_slice()
        .iter()
        .zip(approx.as_slice())
        .map(|(x, y)| x - y)
        .collect();

    let mut g1 = DMatrix::<f64>::zeros(m, m);
    let mut g2 = DMatrix::<f64>::zeros(n, n);
    for s in 0..k {
        let slice = DMatrix::from_row_slice(m, n, &resid[s * m * n..(s + 1) * m * n]);
        g1 += &slice * slice.transpose();
        g2 += slice.transpose() * &slice;
    }
    let dirs_a = leading_eigenvectors(g1, rank - keep)?;
    let dirs_b = leading_eigenvectors(g2, rank - keep)?;
    for r in 0..rank - keep {
        a.set_column(keep + r, &dirs_a.column(r));
        b.set_column(keep + r, &dirs_b.column(r));
    }
    Ok((a, b))
}

fn leading_eigenvectors(gram: DMatrix<f64>, count: usize) -> Result<DMatrix<f64>> {
    let (values, vectors) = linalg::symmetric_eigen(&gram)?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&x, &y| values[y].total_cmp(&values[x]).then(x.cmp(&y)));
    let mut out = DMatrix::zeros(vectors.nrows(), count);
    for (dst, &src) in order.iter().take(count).enumerate() {
        out.set_column(dst, &vectors.column(src));
    }
    Ok(out)
}

/// Solves `X G = M` for symmetric positive semi-definite `G`.
fn solve_right(mttkrp: DMatrix<f64>, mut gram: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let r = gram.nrows();
    let ridge = RIDGE * gram.trace().abs().max(f64::MIN_POSITIVE) / r as f64;
    for i in 0..r {
        gram[(i, i)] += ridge;
    }
    let rhs = mttkrp.transpose();
    let sol = match gram.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => linalg::svd(gram)?
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::DegenerateEigensystem(e.to_string()))?,
    };
    Ok(sol.transpose())
}

fn solve_c(t: &Tensor3, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (m, n, k) = t.dims();
    let r = a.ncols();
    let mut mt = DMatrix::zeros(k, r);
    for s in 0..k {
        let slice = t.slice(s);
        for col in 0..r {
            let mut acc = 0.0;
            for i in 0..m {
                let row = &slice[i * n..(i + 1) * n];
                let mut inner = 0.0;
                for (j, &x) in row.iter().enumerate() {
                    inner += x * b[(j, col)];
                }
                acc += a[(i, col)] * inner;
            }
            mt[(s, col)] = acc;
        }
    }
    let gram = (a.transpose() * a).component_mul(&(b.transpose() * b));
    solve_right(mt, gram)
}

fn solve_a(t: &Tensor3, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (m, n, k) = t.dims();
    let r = b.ncols();
    let mut mt = DMatrix::zeros(m, r);
    for s in 0..k {
        let slice = t.slice(s);
        for i in 0..m {
            let row = &slice[i * n..(i + 1) * n];
            for col in 0..r {
                let mut inner = 0.0;
                for (j, &x) in row.iter().enumerate() {
                    inner += x * b[(j, col)];
                }
                mt[(i, col)] += inner * c[(s, col)];
            }
        }
    }
    let gram = (b.transpose() * b).component_mul(&(c.transpose() * c));
    solve_right(mt, gram)
}

fn solve_b(t: &Tensor3, a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (m, n, k) = t.dims();
    let r = a.ncols();
    let mut mt = DMatrix::zeros(n, r);
    for s in 0..k {
        let slice = t.slice(s);
        for col in 0..r {
            let w = c[(s, col)];
            for i in 0..m {
                let ai = a[(i, col)] * w;
                if ai == 0.0 {
                    continue;
                }
                for (j, &x) in slice[i * n..(i + 1) * n].iter().enumerate() {
                    mt[(j, col)] += x * ai;
                }
            }
        }
    }
    let gram = (a.transpose() * a).component_mul(&(c.transpose() * c));
    solve_right(mt, gram)
}
