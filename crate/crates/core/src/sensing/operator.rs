use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::fft::Fft2;
use super::mask::RadialMask;
use crate::error::{Error, Result};
use crate::grid::Image;

/// Measurement vector `y`: complex for Fourier sensing, real for dense sensing.
#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Measurement {
    pub fn len(&self) -> usize {
        match self {
            Measurement::Real(v) => v.len(),
            Measurement::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, Measurement::Complex(_))
    }

    pub fn zeros_like(&self) -> Measurement {
        match self {
            Measurement::Real(v) => Measurement::Real(vec![0.0; v.len()]),
            Measurement::Complex(v) => Measurement::Complex(vec![Complex64::new(0.0, 0.0); v.len()]),
        }
    }

    /// Real part of `<self, other>` with the conjugate on `other`.
    pub fn inner(&self, other: &Measurement) -> Result<f64> {
        match (self, other) {
            (Measurement::Real(a), Measurement::Real(b)) if a.len() == b.len() => {
                Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
            }
            (Measurement::Complex(a), Measurement::Complex(b)) if a.len() == b.len() => {
                Ok(a.iter().zip(b).map(|(x, y)| (x * y.conj()).re).sum())
            }
            _ => Err(Error::DimensionMismatch(
                "measurements differ in kind or length".into(),
            )),
        }
    }

    /// `||self - other||_2`.
    pub fn distance(&self, other: &Measurement) -> Result<f64> {
        match (self, other) {
            (Measurement::Real(a), Measurement::Real(b)) if a.len() == b.len() => {
                Ok(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
            }
            (Measurement::Complex(a), Measurement::Complex(b)) if a.len() == b.len() => {
                Ok(a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt())
            }
            _ => Err(Error::DimensionMismatch(
                "measurements differ in kind or length".into(),
            )),
        }
    }
}

/// Row-selected orthonormal 2D DFT, `Phi = D F`.
#[derive(Debug, Clone)]
pub struct PartialFourier {
    mask: RadialMask,
    indices: Vec<usize>,
    fft: Fft2,
}

impl PartialFourier {
    pub fn new(mask: RadialMask) -> Self {
        let (h, w) = mask.dims();
        PartialFourier {
            indices: mask.kept_indices(),
            fft: Fft2::new(h, w),
            mask,
        }
    }

    pub fn mask(&self) -> &RadialMask {
        &self.mask
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    /// Row-major flat indices of the measured frequency bins.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// `D^H y`: measurements zero-filled onto the full frequency grid.
    pub fn zero_fill(&self, y: &[Complex64]) -> Vec<Complex64> {
        let (h, w) = self.mask.dims();
        let mut grid = vec![Complex64::new(0.0, 0.0); h * w];
        for (&idx, &v) in self.indices.iter().zip(y) {
            grid[idx] = v;
        }
        grid
    }
}

/// Dense `M x N` Gaussian sensing matrix with entries `N(0, 1) / sqrt(M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMatrix {
    rows: usize,
    cols: usize,
    seed: u64,
    input_dims: (usize, usize),
    data: Vec<f64>,
}

impl GaussianMatrix {
    pub fn generate(rows: usize, input_dims: (usize, usize), seed: u64) -> Result<Self> {
        let cols = input_dims.0 * input_dims.1;
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(
                "gaussian operator needs M >= 1 and N >= 1".into(),
            ));
        }
        let scale = 1.0 / (rows as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            })
            .collect();
        Ok(GaussianMatrix {
            rows,
            cols,
            seed,
            input_dims,
            data,
        })
    }

    /// Wraps an explicit row-major matrix, e.g. one read from disk.
    pub fn from_raw(
        rows: usize,
        input_dims: (usize, usize),
        seed: u64,
        data: Vec<f64>,
    ) -> Result<Self> {
        let cols = input_dims.0 * input_dims.1;
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(GaussianMatrix {
            rows,
            cols,
            seed,
            input_dims,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dims(&self) -> (usize, usize) {
        self.input_dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub enum SensingOperator {
    PartialFourier(PartialFourier),
    DenseGaussian(GaussianMatrix),
}

impl SensingOperator {
    pub fn partial_fourier(mask: RadialMask) -> Self {
        SensingOperator::PartialFourier(PartialFourier::new(mask))
    }

    /// Gaussian operator with `M = round(csr * N)` rows (at least one).
    pub fn gaussian_with_ratio(input_dims: (usize, usize), csr: f64, seed: u64) -> Result<Self> {
        if !(csr > 0.0 && csr <= 1.0) {
            return Err(Error::InvalidRatio(csr));
        }
        let n = input_dims.0 * input_dims.1;
        let m = ((csr * n as f64).round() as usize).max(1);
        Ok(SensingOperator::DenseGaussian(GaussianMatrix::generate(
            m, input_dims, seed,
        )?))
    }

    pub fn input_dims(&self) -> (usize, usize) {
        match self {
            SensingOperator::PartialFourier(p) => p.mask.dims(),
            SensingOperator::DenseGaussian(g) => g.input_dims,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            SensingOperator::PartialFourier(p) => p.indices.len(),
            SensingOperator::DenseGaussian(g) => g.rows,
        }
    }

    /// `M / N`.
    pub fn csr(&self) -> f64 {
        let (h, w) = self.input_dims();
        self.output_dim() as f64 / (h * w) as f64
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SensingOperator::PartialFourier(_) => "partial-fourier",
            SensingOperator::DenseGaussian(_) => "dense-gaussian",
        }
    }

    fn check_image(&self, x: &Image) -> Result<()> {
        if x.dims() != self.input_dims() {
            return Err(Error::DimensionMismatch(format!(
                "operator expects {:?} images, got {:?}",
                self.input_dims(),
                x.dims()
            )));
        }
        Ok(())
    }

    fn check_measurement(&self, y: &Measurement) -> Result<()> {
        let kind_ok = matches!(
            (self, y),
            (SensingOperator::PartialFourier(_), Measurement::Complex(_))
                | (SensingOperator::DenseGaussian(_), Measurement::Real(_))
        );
        if !kind_ok || y.len() != self.output_dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} operator expects {} {} measurements, got {} {}",
                self.kind(),
                self.output_dim(),
                if matches!(self, SensingOperator::PartialFourier(_)) {
                    "complex"
                } else {
                    "real"
                },
                y.len(),
                if y.is_complex() { "complex" } else { "real" }
            )));
        }
        Ok(())
    }

    /// `y = Phi x`.
    pub fn forward(&self, x: &Image) -> Result<Measurement> {
        self.check_image(x)?;
        Ok(match self {
            SensingOperator::PartialFourier(p) => {
                let spectrum = p.fft.forward_real(x.as_slice());
                Measurement::Complex(p.indices.iter().map(|&i| spectrum[i]).collect())
            }
            SensingOperator::DenseGaussian(g) => Measurement::Real(g.apply(x.as_slice())),
        })
    }

    /// `Phi^H y`, real part.
    pub fn adjoint(&self, y: &Measurement) -> Result<Image> {
        self.check_measurement(y)?;
        let (h, w) = self.input_dims();
        let data = match (self, y) {
            (SensingOperator::PartialFourier(p), Measurement::Complex(values)) => {
                let mut grid = p.zero_fill(values);
                p.fft.inverse(&mut grid);
                grid.into_iter().map(|z| z.re).collect()
            }
            (SensingOperator::DenseGaussian(g), Measurement::Real(values)) => {
                g.apply_transpose(values)
            }
            _ => unreachable!("checked above"),
        };
        Image::from_vec(h, w, data)
    }

    /// `forward(x) + e` with Gaussian noise of standard deviation `sigma` per
    /// real measurement; complex measurements get `sigma^2 / 2` variance on
    /// each of the real and imaginary parts.
    pub fn measure_noisy(&self, x: &Image, sigma: f64, noise_seed: u64) -> Result<Measurement> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise sigma {sigma} must be >= 0")));
        }
        let mut y = self.forward(x)?;
        if sigma == 0.0 {
            return Ok(y);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        match &mut y {
            Measurement::Real(values) => {
                let normal = Normal::new(0.0, sigma).expect("sigma > 0");
                for v in values.iter_mut() {
                    *v += normal.sample(&mut rng);
                }
            }
            Measurement::Complex(values) => {
                let normal = Normal::new(0.0, sigma / std::f64::consts::SQRT_2).expect("sigma > 0");
                for v in values.iter_mut() {
                    v.re += normal.sample(&mut rng);
                    v.im += normal.sample(&mut rng);
                }
            }
        }
        Ok(y)
    }

    /// Diagonal of `D^H D` on the frequency grid (1 where measured).
    /// `None` for dense operators.
    pub fn sampling_grid(&self) -> Option<Image> {
        match self {
            SensingOperator::PartialFourier(p) => {
                let (h, w) = p.mask.dims();
                Some(Image::from_fn(h, w, |u, v| {
                    if p.mask.is_kept(u, v) {
                        1.0
                    } else {
                        0.0
                    }
                }))
            }
            SensingOperator::DenseGaussian(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::make_radial_mask;

    fn test_image(h: usize, w: usize) -> Image {
        Image::from_fn(h, w, |r, c| ((r * 13 + c * 7) % 17) as f64 * 9.0)
    }

    #[test]
    fn zero_image_gives_zero_measurement() {
        let op = SensingOperator::partial_fourier(make_radial_mask((8, 8), 0.3, 0).unwrap());
        let y = op.forward(&Image::zeros(8, 8)).unwrap();
        assert!(matches!(&y, Measurement::Complex(v) if v.iter().all(|z| z.norm() == 0.0)));
    }

    #[test]
    fn constant_image_has_only_dc() {
        let op = SensingOperator::partial_fourier(RadialMask::full(8, 8));
        let y = op.forward(&Image::filled(8, 8, 5.0)).unwrap();
        let Measurement::Complex(v) = y else { panic!() };
        assert!((v[0].re - 5.0 * 8.0).abs() < 1e-12);
        assert!(v[1..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn full_mask_adjoint_inverts() {
        let op = SensingOperator::partial_fourier(RadialMask::full(6, 10));
        let x = test_image(6, 10);
        let back = op.adjoint(&op.forward(&x).unwrap()).unwrap();
        for (a, b) in back.as_slice().iter().zip(x.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn kept_bins_roundtrip() {
        // D D^H = I on the measured bins.
        let op = SensingOperator::partial_fourier(make_radial_mask((16, 16), 0.2, 0).unwrap());
        let x = test_image(16, 16);
        let y = op.forward(&x).unwrap();
        let y2 = op.forward(&op.adjoint(&y).unwrap()).unwrap();
        assert!(y.distance(&y2).unwrap() < 1e-9 * y.inner(&y).unwrap().sqrt());
    }

    #[test]
    fn wrong_dims_are_rejected() {
        let op = SensingOperator::partial_fourier(RadialMask::full(4, 4));
        assert!(op.forward(&Image::zeros(4, 5)).is_err());
        assert!(op.adjoint(&Measurement::Complex(vec![])).is_err());
        assert!(op.adjoint(&Measurement::Real(vec![0.0; 16])).is_err());
    }

    #[test]
    fn noiseless_measure_equals_forward() {
        let op = SensingOperator::gaussian_with_ratio((8, 8), 0.25, 3).unwrap();
        let x = test_image(8, 8);
        assert_eq!(op.measure_noisy(&x, 0.0, 9).unwrap(), op.forward(&x).unwrap());
        assert_eq!(
            op.measure_noisy(&x, 2.0, 9).unwrap(),
            op.measure_noisy(&x, 2.0, 9).unwrap()
        );
        assert!(op.measure_noisy(&x, -1.0, 9).is_err());
    }

    #[test]
    fn gaussian_is_reproducible_from_seed() {
        let a = GaussianMatrix::generate(5, (4, 4), 17).unwrap();
        let b = GaussianMatrix::generate(5, (4, 4), 17).unwrap();
        let c = GaussianMatrix::generate(5, (4, 4), 18).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
