use approx::assert_relative_eq;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use nlrtfa::metrics::{psnr, ssim};
use nlrtfa::patch::{aggregate, extract_patch_groups, form_tensor, scatter_add, GroupingConfig};
use nlrtfa::sensing::{make_radial_mask, Measurement, SensingOperator};
use nlrtfa::tensor_cp::{decompose_with_retries, reconstruct_cp, truncate_rank, CpFactors, Tensor3};
use nlrtfa::Image;

fn image_strategy(h: usize, w: usize) -> impl Strategy<Value = Image> {
    proptest::collection::vec(0.0f64..255.0, h * w).prop_map(move |v| Image::from_vec(h, w, v).unwrap())
}

fn matrix(rows: usize, cols: usize, values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(rows, cols, &values[..rows * cols])
}

fn inner(a: &Tensor3, b: &Tensor3) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

#[test]
fn psnr_of_unit_mse_is_known() {
    let a = Image::filled(8, 8, 100.0);
    let b = Image::filled(8, 8, 101.0);
    assert_relative_eq!(psnr(&a, &b).unwrap(), 48.130_803_608_679_1, epsilon = 1e-9);
}

#[test]
fn psnr_of_offset_sixteen_is_known() {
    let a = Image::filled(4, 4, 0.0);
    let b = Image::filled(4, 4, 16.0);
    assert_relative_eq!(psnr(&a, &b).unwrap(), 24.048_403_955_560_6, epsilon = 1e-9);
}

#[test]
fn rank_one_tensor_by_hand() {
    let f = CpFactors {
        lambdas: vec![2.0],
        a: DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
        b: DMatrix::from_column_slice(2, 1, &[0.6, 0.8]),
        c: DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
    };
    let t = reconstruct_cp(&f, (2, 2, 2)).unwrap();
    assert_eq!(t.get(0, 0, 1), 1.2);
    assert_eq!(t.get(0, 1, 1), 1.6);
    assert_eq!(t.get(0, 1, 0), 0.0);
    assert_eq!(t.get(1, 1, 1), 0.0);
}

#[test]
fn full_mask_measurement_is_the_unitary_dft() {
    let img = Image::from_fn(4, 4, |r, c| (r * 4 + c) as f64);
    let op = SensingOperator::partial_fourier(make_radial_mask((4, 4), 1.0, 0).unwrap());
    let Measurement::Complex(y) = op.forward(&img).unwrap() else {
        panic!("Fourier measurements are complex");
    };
    assert_eq!(y.len(), 16);
    let dc: f64 = img.as_slice().iter().sum::<f64>() / 4.0;
    assert!(y.iter().any(|z| (z.re - dc).abs() < 1e-9 && z.im.abs() < 1e-9));
    let energy: f64 = y.iter().map(|z| z.norm_sqr()).sum();
    assert_relative_eq!(energy, img.norm().powi(2), max_relative = 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generic_cp_tensors_decompose_exactly(
        m in 3usize..7,
        n in 3usize..7,
        k in 3usize..9,
        rank_frac in 0.0f64..1.0,
        values in proptest::collection::vec(-1.0f64..1.0, 3 * 8 * 8 + 8),
        seed in any::<u64>(),
    ) {
        let rank = 1 + ((m.min(n) - 1) as f64 * rank_frac) as usize;
        let a = matrix(m, rank, &values);
        let b = matrix(n, rank, &values[64..]);
        let c = matrix(k, rank, &values[128..]);
        let lambdas: Vec<f64> = values[192..192 + rank].iter().map(|x| 1.0 + x.abs()).collect();
        let Ok(truth) = CpFactors::from_components(lambdas, a, b, c) else {
            return Ok(());
        };
        let t = reconstruct_cp(&truth, (m, n, k)).unwrap();
        let f = decompose_with_retries(&t, seed, 8).unwrap();
        let back = reconstruct_cp(&f, (m, n, k)).unwrap();
        prop_assert!(t.distance(&back) <= 1e-6 * t.frobenius_norm().max(1.0),
            "rank {rank} {m}x{n}x{k}: error {}", t.distance(&back));
    }

    #[test]
    fn truncation_keeps_the_largest_components(
        lambdas in proptest::collection::vec(0.1f64..10.0, 1..6),
        ell in 0usize..8,
    ) {
        let r = lambdas.len();
        let a = DMatrix::from_fn(4, r, |i, j| ((i + 2 * j) % 5) as f64 + 1.0);
        let f = CpFactors::from_components(lambdas, a.clone(), a.clone(), a).unwrap();
        let t = truncate_rank(&f, ell);
        prop_assert_eq!(t.rank(), ell.min(r));
        prop_assert_eq!(&t.lambdas[..], &f.lambdas[..ell.min(r)]);
        prop_assert!(f.lambdas.windows(2).all(|w| w[0].abs() >= w[1].abs()));
    }

    #[test]
    fn fourier_operator_is_adjoint(
        x in image_strategy(12, 10),
        v in proptest::collection::vec(-10.0f64..10.0, 240),
        csr in 0.05f64..1.0,
        seed in any::<u64>(),
    ) {
        let op = SensingOperator::partial_fourier(make_radial_mask((12, 10), csr, seed).unwrap());
        let m = op.output_dim();
        let y = Measurement::Complex((0..m).map(|i| Complex64::new(v[2 * i], v[2 * i + 1])).collect());
        let lhs = op.forward(&x).unwrap().inner(&y).unwrap();
        let rhs = x.dot(&op.adjoint(&y).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn gaussian_operator_is_adjoint(
        x in image_strategy(6, 7),
        v in proptest::collection::vec(-10.0f64..10.0, 42),
        csr in 0.1f64..1.0,
        seed in any::<u64>(),
    ) {
        let op = SensingOperator::gaussian_with_ratio((6, 7), csr, seed).unwrap();
        let y = Measurement::Real(v[..op.output_dim()].to_vec());
        let lhs = op.forward(&x).unwrap().inner(&y).unwrap();
        let rhs = x.dot(&op.adjoint(&y).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn radial_mask_meets_the_ratio(h in 8usize..40, w in 8usize..40, csr in 0.02f64..1.0, seed in any::<u64>()) {
        let mask = make_radial_mask((h, w), csr, seed).unwrap();
        let actual = mask.csr_actual();
        prop_assert!(actual >= csr - 1e-12, "{actual} < {csr}");
        prop_assert!(mask.is_kept(0, 0));
        prop_assert_eq!(mask.kept_count(), mask.kept_indices().len());
    }

    #[test]
    fn gather_and_scatter_are_adjoint(x in image_strategy(14, 13), seed in any::<u64>(), patch in 2usize..5) {
        let cfg = GroupingConfig { patch_m: patch, patch_n: patch, k: 6, stride: 3, search_window: 5 };
        let groups = extract_patch_groups(&x, &cfg).unwrap();
        let mut state = seed | 1;
        for g in groups.iter().take(4) {
            let (m, n) = g.patch_dims;
            let t = Tensor3::from_fn(m, n, g.members.len(), |_, _, _| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state % 1000) as f64 / 100.0 - 5.0
            });
            let mut back = Image::zeros(14, 13);
            scatter_add(&t, g, &mut back).unwrap();
            let lhs = inner(&form_tensor(&x, g).unwrap(), &t);
            let rhs = x.dot(&back);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn aggregating_own_patches_returns_the_image(x in image_strategy(12, 12), patch in 2usize..5) {
        let cfg = GroupingConfig { patch_m: patch, patch_n: patch, k: 4, stride: 1, search_window: 0 };
        let groups = extract_patch_groups(&x, &cfg).unwrap();
        let tensors: Vec<Tensor3> = groups.iter().map(|g| form_tensor(&x, g).unwrap()).collect();
        let (num, counts) = aggregate(&groups, &tensors, x.dims()).unwrap();
        for ((&s, &c), &v) in num.as_slice().iter().zip(counts.as_slice()).zip(x.as_slice()) {
            prop_assert!(c > 0.0);
            prop_assert!((s / c - v).abs() < 1e-9);
        }
    }

    #[test]
    fn metrics_are_symmetric_and_bounded(a in image_strategy(11, 11), b in image_strategy(11, 11)) {
        let p = psnr(&a, &b).unwrap();
        prop_assert_eq!(p, psnr(&b, &a).unwrap());
        let s = ssim(&a, &b).unwrap();
        prop_assert!((s - ssim(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(s <= 1.0 + 1e-12 && s >= -1.0 - 1e-12);
        prop_assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }
}
