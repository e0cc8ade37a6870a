//! Closed-form ADMM steps for
//! `min ||y - Phi x||^2 + beta ||x - z + mu/(2 beta)||^2 + eta sum_p ||T_p z - L_p||^2`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use super::{LowRankField, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::Image;
use crate::sensing::{GaussianMatrix, Measurement, SensingOperator};

/// Iterates of the inner ADMM loop.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x: Image,
    pub z: Image,
    pub mu: Image,
    pub outer: usize,
    pub inner: usize,
}

impl AdmmState {
    /// `x = z = x0`, `mu = 0`.
    pub fn start(x0: Image) -> Self {
        let (h, w) = x0.dims();
        AdmmState {
            z: x0.clone(),
            x: x0,
            mu: Image::zeros(h, w),
            outer: 0,
            inner: 0,
        }
    }
}

/// `z = (eta C + beta)^-1 (beta x + mu/2 + eta N)` with `C` the overlap counts
/// and `N` the aggregated low-rank patches. `C` is diagonal, so the solve is
/// pointwise.
pub fn z_update_with(
    x: &Image,
    mu: &Image,
    field: &LowRankField,
    eta: f64,
    beta: f64,
) -> Result<Image> {
    x.same_dims(mu)?;
    x.same_dims(&field.counts)?;
    let n = field.agg_numerator.as_slice();
    let c = field.counts.as_slice();
    let data = x
        .as_slice()
        .iter()
        .zip(mu.as_slice())
        .zip(n.iter().zip(c))
        .map(|((&xi, &mi), (&ni, &ci))| (beta * xi + 0.5 * mi + eta * ni) / (eta * ci + beta))
        .collect();
    Image::from_vec(x.height(), x.width(), data)
}

pub fn z_update(state: &AdmmState, field: &LowRankField, cfg: &SolverConfig) -> Result<Image> {
    z_update_with(&state.x, &state.mu, field, cfg.eta, cfg.beta)
}

/// Right-hand side `beta z - mu/2` shared by both x-updates.
fn penalty_rhs(state: &AdmmState, beta: f64) -> Result<Image> {
    state.z.same_dims(&state.mu)?;
    Ok(state.z.zip_map(&state.mu, |z, m| beta * z - 0.5 * m))
}

/// Fourier-domain x-update for `Phi = D F`:
/// `x = F^H (D^H D + beta)^-1 (D^H y + F(beta z - mu/2))`.
pub fn x_update_fourier(
    state: &AdmmState,
    op: &SensingOperator,
    y: &Measurement,
    cfg: &SolverConfig,
) -> Result<Image> {
    x_update_fourier_with(state, op, y, cfg.beta)
}

pub fn x_update_fourier_with(
    state: &AdmmState,
    op: &SensingOperator,
    y: &Measurement,
    beta: f64,
) -> Result<Image> {
    let SensingOperator::PartialFourier(pf) = op else {
        return Err(Error::WrongOperatorVariant {
            expected: "partial-fourier",
        });
    };
    let Measurement::Complex(values) = y else {
        return Err(Error::DimensionMismatch(
            "fourier x-update needs complex measurements".into(),
        ));
    };
    if values.len() != pf.indices().len() {
        return Err(Error::DimensionMismatch(format!(
            "{} measurements for {} sampled bins",
            values.len(),
            pf.indices().len()
        )));
    }
    if state.x.dims() != op.input_dims() {
        return Err(Error::DimensionMismatch("state does not match operator".into()));
    }
    let rhs = penalty_rhs(state, beta)?;
    let mut spectrum = pf.fft().forward_real(rhs.as_slice());
    let mut measured = vec![false; spectrum.len()];
    for (&idx, &v) in pf.indices().iter().zip(values) {
        spectrum[idx] += v;
        measured[idx] = true;
    }
    for (s, &m) in spectrum.iter_mut().zip(&measured) {
        *s /= if m { 1.0 + beta } else { beta };
    }
    pf.fft().inverse(&mut spectrum);
    let (h, w) = op.input_dims();
    Image::from_vec(h, w, spectrum.iter().map(|z: &Complex64| z.re).collect())
}

/// Cached Cholesky factor of `V = beta I + Phi Phi^T` for the Woodbury form
/// `(Phi^T Phi + beta I)^-1 = beta^-1 (I - Phi^T V^-1 Phi)`.
#[derive(Debug, Clone)]
pub struct WoodburyCache {
    beta: f64,
    rows: usize,
    cols: usize,
    fingerprint: u64,
    chol: Cholesky<f64, Dyn>,
}

/// Label recorded in run reports for the dense inverter.
pub const EXACT_WOODBURY: &str = "exact-woodbury";

impl WoodburyCache {
    pub fn build(op: &SensingOperator, beta: f64) -> Result<Self> {
        let SensingOperator::DenseGaussian(g) = op else {
            return Err(Error::WrongOperatorVariant {
                expected: "dense-gaussian",
            });
        };
        if !(beta > 0.0) {
            return Err(Error::InvalidConfig(format!("beta must be positive, got {beta}")));
        }
        let m = g.rows();
        let mut v = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            let ri = g.row(i);
            for j in 0..=i {
                let dot: f64 = ri.iter().zip(g.row(j)).map(|(a, b)| a * b).sum();
                v[(i, j)] = dot;
                v[(j, i)] = dot;
            }
            v[(i, i)] += beta;
        }
        let chol = v.cholesky().ok_or_else(|| {
            Error::InvalidConfig("beta I + Phi Phi^T is not positive definite".into())
        })?;
        Ok(WoodburyCache {
            beta,
            rows: m,
            cols: g.cols(),
            fingerprint: fingerprint(g),
            chol,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn matches(&self, g: &GaussianMatrix, beta: f64) -> bool {
        self.beta == beta
            && self.rows == g.rows()
            && self.cols == g.cols()
            && self.fingerprint == fingerprint(g)
    }

    /// `(Phi^T Phi + beta I)^-1 r`.
    pub fn solve(&self, g: &GaussianMatrix, r: &[f64]) -> Vec<f64> {
        let phi_r = DVector::from_vec(g.apply(r));
        let inner = self.chol.solve(&phi_r);
        let back = g.apply_transpose(inner.as_slice());
        r.iter()
            .zip(back)
            .map(|(ri, bi)| (ri - bi) / self.beta)
            .collect()
    }
}

/// FNV-1a over the matrix shape, seed and entry bits.
fn fingerprint(g: &GaussianMatrix) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |v: u64| {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    feed(g.rows() as u64);
    feed(g.cols() as u64);
    feed(g.seed());
    for v in g.data() {
        feed(v.to_bits());
    }
    h
}

/// Dense x-update `x = beta^-1 (I - Phi^T V^-1 Phi)(Phi^T y + beta z - mu/2)`.
pub fn x_update_dense(
    state: &AdmmState,
    op: &SensingOperator,
    y: &Measurement,
    cfg: &SolverConfig,
    cache: &WoodburyCache,
) -> Result<Image> {
    x_update_dense_with(state, op, y, cfg.beta, cache)
}

pub fn x_update_dense_with(
    state: &AdmmState,
    op: &SensingOperator,
    y: &Measurement,
    beta: f64,
    cache: &WoodburyCache,
) -> Result<Image> {
    let SensingOperator::DenseGaussian(g) = op else {
        return Err(Error::WrongOperatorVariant {
            expected: "dense-gaussian",
        });
    };
    if !cache.matches(g, beta) {
        return Err(Error::CacheMismatch);
    }
    let rhs = op.adjoint(y)?.zip_map(&penalty_rhs(state, beta)?, |a, b| a + b);
    let (h, w) = op.input_dims();
    Image::from_vec(h, w, cache.solve(g, rhs.as_slice()))
}

/// `mu + 2 beta (x - z)`.
pub fn mu_update_with(x: &Image, z: &Image, mu: &Image, beta: f64) -> Result<Image> {
    x.same_dims(z)?;
    x.same_dims(mu)?;
    let data = x
        .as_slice()
        .iter()
        .zip(z.as_slice())
        .zip(mu.as_slice())
        .map(|((&xi, &zi), &mi)| mi + 2.0 * beta * (xi - zi))
        .collect();
    Image::from_vec(x.height(), x.width(), data)
}

pub fn mu_update(state: &AdmmState, cfg: &SolverConfig) -> Result<Image> {
    mu_update_with(&state.x, &state.z, &state.mu, cfg.beta)
}

/// Per-operator x-update strategy, with the Woodbury factor built once.
#[derive(Debug)]
pub enum XUpdater {
    Fourier,
    Dense(WoodburyCache),
}

impl XUpdater {
    pub fn new(op: &SensingOperator, beta: f64) -> Result<Self> {
        Ok(match op {
            SensingOperator::PartialFourier(_) => XUpdater::Fourier,
            SensingOperator::DenseGaussian(_) => XUpdater::Dense(WoodburyCache::build(op, beta)?),
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            XUpdater::Fourier => "fourier-diagonal",
            XUpdater::Dense(_) => EXACT_WOODBURY,
        }
    }

    pub fn apply(
        &self,
        state: &AdmmState,
        op: &SensingOperator,
        y: &Measurement,
        beta: f64,
    ) -> Result<Image> {
        match self {
            XUpdater::Fourier => x_update_fourier_with(state, op, y, beta),
            XUpdater::Dense(cache) => x_update_dense_with(state, op, y, beta, cache),
        }
    }
}

/// Runs `iters` inner iterations (z, x, mu) from `state` against a fixed field.
pub fn run_inner(
    state: &mut AdmmState,
    op: &SensingOperator,
    y: &Measurement,
    field: &LowRankField,
    eta: f64,
    beta: f64,
    updater: &XUpdater,
    iters: usize,
) -> Result<()> {
    for _ in 0..iters {
        state.z = z_update_with(&state.x, &state.mu, field, eta, beta)?;
        state.x = updater.apply(state, op, y, beta)?;
        state.mu = mu_update_with(&state.x, &state.z, &state.mu, beta)?;
        state.inner += 1;
    }
    Ok(())
}

/// `||y - Phi x||^2 + beta ||x - z + mu/(2 beta)||^2 + eta sum_p ||T_p z - L_p||^2`.
#[allow(clippy::too_many_arguments)]
pub fn augmented_objective(
    op: &SensingOperator,
    y: &Measurement,
    field: &LowRankField,
    eta: f64,
    beta: f64,
    state: &AdmmState,
) -> Result<f64> {
    let fidelity = op.forward(&state.x)?.distance(y)?.powi(2);
    let coupling: f64 = state
        .x
        .as_slice()
        .iter()
        .zip(state.z.as_slice())
        .zip(state.mu.as_slice())
        .map(|((x, z), m)| (x - z + m / (2.0 * beta)).powi(2))
        .sum();
    Ok(fidelity + beta * coupling + eta * field.residual(&state.z)?)
}
