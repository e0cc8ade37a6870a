//! Jenrich's simultaneous-diagonalisation algorithm for 3-way CP decomposition.
//!
//! Two random contractions `T_u = sum_s u_s T[:,:,s]` and `T_v` share the
//! factor matrices `A` and `B`, so `A` diagonalises `T_u T_v^+` and `B`
//! diagonalises `T_u^T (T_v^T)^+`. Both systems have the same spectrum
//! `{<c_r,u> / <c_r,v>}`, which is used to pair the columns. The third factor
//! and the coefficients then follow from a linear least-squares fit.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{linalg, CpFactors, Tensor3};
use crate::error::{Error, Result};

/// Numerical thresholds for [`jenrich_decompose_with`].
#[derive(Debug, Clone, Copy)]
pub struct JenrichOptions {
    /// Singular values below `pinv_rel_tol * sigma_max` are treated as zero.
    pub pinv_rel_tol: f64,
    /// Eigenvalues with `|im| > imag_rel_tol * |lambda|` are discarded.
    pub imag_rel_tol: f64,
    /// Relative tolerance for matching eigenvalues across the two systems.
    pub pair_rel_tol: f64,
}

impl Default for JenrichOptions {
    fn default() -> Self {
        JenrichOptions {
            pinv_rel_tol: 1e-10,
            imag_rel_tol: 1e-6,
            pair_rel_tol: 1e-6,
        }
    }
}

/// Number of reseeded attempts after the first one in [`decompose_with_retries`].
pub const DEFAULT_RETRIES: usize = 3;

pub fn jenrich_decompose(t: &Tensor3, rng_seed: u64) -> Result<CpFactors> {
    jenrich_decompose_with(t, rng_seed, &JenrichOptions::default())
}

/// Runs [`jenrich_decompose`] and, on `DegenerateEigensystem`, retries with
/// derived seeds up to `retries` more times.
pub fn decompose_with_retries(t: &Tensor3, rng_seed: u64, retries: usize) -> Result<CpFactors> {
    let mut last = None;
    for attempt in 0..=retries as u64 {
        let seed = rng_seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        match jenrich_decompose(t, seed) {
            Err(e @ Error::DegenerateEigensystem(_)) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

pub fn jenrich_decompose_with(
    t: &Tensor3,
    rng_seed: u64,
    opts: &JenrichOptions,
) -> Result<CpFactors> {
    let (m, n, k) = t.dims();
    if m < 2 || n < 2 || k < 2 {
        return Err(Error::DimensionMismatch(format!(
            "jenrich needs every dim >= 2, got {m}x{n}x{k}"
        )));
    }
    let norm = t.frobenius_norm();
    if norm < 1e-12 * (m * n * k) as f64 {
        return Err(Error::ZeroTensor);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let u = random_unit_vector(&mut rng, k);
    let v = random_unit_vector(&mut rng, k);
    let tu = contract(t, &u);
    let tv = contract(t, &v);

    // T_v = U S V^T truncated to its numerical rank.
    let svd = linalg::svd(tv.clone())?;
    let (su, sv) = match (&svd.u, &svd.v_t) {
        (Some(u), Some(v_t)) => (u.clone(), v_t.transpose()),
        _ => unreachable!("u and v_t were requested"),
    };
    let sigma_max = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > opts.pinv_rel_tol * sigma_max)
        .count();
    if rank == 0 {
        return Err(Error::DegenerateEigensystem("contraction T_v is zero".into()));
    }
    let order = sorted_desc(svd.singular_values.as_slice());
    let mut ur = DMatrix::zeros(m, rank);
    let mut vr = DMatrix::zeros(n, rank);
    let mut inv_s = DMatrix::zeros(rank, rank);
    for (dst, &src) in order.iter().take(rank).enumerate() {
        ur.set_column(dst, &su.column(src));
        vr.set_column(dst, &sv.column(src));
        inv_s[(dst, dst)] = 1.0 / svd.singular_values[src];
    }

    // Nonzero spectrum of X Y equals that of Y X, and X w is the matching
    // eigenvector of X Y.
    //   a-system: T_u T_v^+        = (T_u V S^-1)(U^T)
    //   b-system: T_u^T (T_v^T)^+  = (T_u^T U S^-1)(V^T)
    let xa = &tu * &vr * &inv_s;
    let xb = tu.transpose() * &ur * &inv_s;
    let ka = ur.transpose() * &xa;
    let kb = vr.transpose() * &xb;

    let eig_a = real_eigenpairs(&ka, &xa, opts)?;
    let eig_b = real_eigenpairs(&kb, &xb, opts)?;

    let pairs = pair_by_eigenvalue(&eig_a, &eig_b, opts.pair_rel_tol);
    if pairs.is_empty() {
        return Err(Error::DegenerateEigensystem(
            "no eigenvalues matched between the two systems".into(),
        ));
    }

    let r = pairs.len();
    let mut a = DMatrix::zeros(m, r);
    let mut b = DMatrix::zeros(n, r);
    for (col, &(ia, ib)) in pairs.iter().enumerate() {
        a.set_column(col, &eig_a[ia].1);
        b.set_column(col, &eig_b[ib].1);
    }

    fit_third_factor(t, a, b, norm)
}

fn random_unit_vector(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..len).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn contract(t: &Tensor3, w: &[f64]) -> DMatrix<f64> {
    let (m, n, k) = t.dims();
    let mut out = DMatrix::zeros(m, n);
    for (s, &ws) in w.iter().enumerate().take(k) {
        let slice = t.slice(s);
        for i in 0..m {
            for j in 0..n {
                out[(i, j)] += ws * slice[i * n + j];
            }
        }
    }
    out
}

fn sorted_desc(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&x, &y| values[y].total_cmp(&values[x]));
    idx
}

/// Real eigenpairs of the reduced matrix `k`, lifted through `lift` into unit
/// eigenvectors of the full system.
fn real_eigenpairs(
    k: &DMatrix<f64>,
    lift: &DMatrix<f64>,
    opts: &JenrichOptions,
) -> Result<Vec<(f64, DVector<f64>)>> {
    let size = k.nrows();
    let eigenvalues = linalg::eigenvalues(k.clone())?;
    let mut real: Vec<f64> = eigenvalues
        .iter()
        .filter(|z| z.im.abs() <= opts.imag_rel_tol * z.norm())
        .map(|z| z.re)
        .collect();
    if real.is_empty() {
        return Err(Error::DegenerateEigensystem(
            "every eigenvalue is complex".into(),
        ));
    }
    real.sort_by(|x, y| y.total_cmp(x));

    let scale = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for w in real.windows(2) {
        if (w[0] - w[1]).abs() <= opts.pair_rel_tol * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::DegenerateEigensystem(format!(
                "repeated eigenvalue {}",
                w[0]
            )));
        }
    }

    let mut pairs = Vec::with_capacity(real.len());
    for lambda in real {
        let shifted = k - DMatrix::identity(size, size) * lambda;
        let svd = linalg::svd(shifted)?;
        let v_t = svd.v_t.as_ref().expect("v_t was requested");
        let (min_idx, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .expect("non-empty spectrum");
        let w = v_t.row(min_idx).transpose();
        let lifted = lift * w;
        let norm = lifted.norm();
        if norm <= f64::MIN_POSITIVE || !norm.is_finite() {
            continue;
        }
        pairs.push((lambda, lifted / norm));
    }
    if pairs.is_empty() {
        return Err(Error::DegenerateEigensystem(
            "eigenvectors vanished after lifting".into(),
        ));
    }
    Ok(pairs)
}

/// Greedy one-to-one matching of eigenvalues, closest pairs first.
fn pair_by_eigenvalue(
    a: &[(f64, DVector<f64>)],
    b: &[(f64, DVector<f64>)],
    rel_tol: f64,
) -> Vec<(usize, usize)> {
    let scale = a
        .iter()
        .chain(b)
        .map(|(l, _)| l.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut candidates = Vec::new();
    for (i, (la, _)) in a.iter().enumerate() {
        for (j, (lb, _)) in b.iter().enumerate() {
            let gap = (la - lb).abs();
            if gap <= rel_tol * scale {
                candidates.push((gap, i, j));
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Least-squares fit of `T[:,:,s] ~ sum_r w_r(s) a_r b_r^T` for every slice,
/// then `lambda_r = ||w_r||`, `c_r = w_r / lambda_r`.
fn fit_third_factor(
    t: &Tensor3,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    tensor_norm: f64,
) -> Result<CpFactors> {
    let (m, n, k) = t.dims();
    let r = a.ncols();
    let gram = (a.transpose() * &a).component_mul(&(b.transpose() * &b));

    // rhs[(r, s)] = a_r^T T_s b_r
    let mut rhs = DMatrix::zeros(r, k);
    for s in 0..k {
        let slice = t.slice(s);
        for col in 0..r {
            let mut acc = 0.0;
            for i in 0..m {
                let ai = a[(i, col)];
                if ai == 0.0 {
                    continue;
                }
                let row = &slice[i * n..(i + 1) * n];
                let mut inner = 0.0;
                for (j, &x) in row.iter().enumerate() {
                    inner += x * b[(j, col)];
                }
                acc += ai * inner;
            }
            rhs[(col, s)] = acc;
        }
    }

    let weights = match gram.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => linalg::svd(gram)?
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::DegenerateEigensystem(e.to_string()))?,
    };

    let mut keep = Vec::with_capacity(r);
    for col in 0..r {
        let lambda = weights.row(col).norm();
        if lambda.is_finite() && lambda > 1e-14 * tensor_norm {
            keep.push(col);
        }
    }
    if keep.is_empty() {
        return Err(Error::DegenerateEigensystem(
            "all fitted coefficients vanished".into(),
        ));
    }
    let a = a.select_columns(&keep);
    let b = b.select_columns(&keep);
    let c = weights.select_rows(&keep).transpose();
    // `a`, `b` are unit columns, so folding the norm of `c` yields lambda = ||w_r||.
    CpFactors::from_components(vec![1.0; keep.len()], a, b, c)
}
