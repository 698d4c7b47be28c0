mod common;

use std::f64::consts::PI;

use common::{assert_close, uniform_image};
use proptest::prelude::*;
use rdlimit::io::{generate_source, SyntheticSourceSpec};
use rdlimit::transforms::{
    analyze, dct_basis, fit_klt, mse, psnr, synthesize, Basis, ImagePlane, TransformKind,
    TransformSpec,
};

/// 2-D DCT-II coefficient straight from the cosine sum.
fn dct_coefficient(block: &[f64], b: usize, u: usize, v: usize) -> f64 {
    let alpha = |k: usize| {
        if k == 0 {
            (1.0 / b as f64).sqrt()
        } else {
            (2.0 / b as f64).sqrt()
        }
    };
    let mut acc = 0.0;
    for y in 0..b {
        for x in 0..b {
            acc += block[y * b + x]
                * (PI * (2 * y + 1) as f64 * u as f64 / (2 * b) as f64).cos()
                * (PI * (2 * x + 1) as f64 * v as f64 / (2 * b) as f64).cos();
        }
    }
    alpha(u) * alpha(v) * acc
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix, descending, with
/// eigenvectors as rows.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (head, tail) = a.split_at_mut(q);
                for (x, y) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                    let (apk, aqk) = (*x, *y);
                    *x = c * apk - s * aqk;
                    *y = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    (values, vectors)
}

/// Block covariance of a separable AR(1) field: σ² a^|Δy| a^|Δx|.
fn ar1_block_covariance(b: usize, a: f64, variance: f64) -> Vec<Vec<f64>> {
    let d = b * b;
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let (yi, xi) = ((i / b) as i32, (i % b) as i32);
                    let (yj, xj) = ((j / b) as i32, (j % b) as i32);
                    variance * a.powi((yi - yj).abs()) * a.powi((xi - xj).abs())
                })
                .collect()
        })
        .collect()
}

fn channel_correlation(latents: &rdlimit::transforms::LatentGrid, i: usize, j: usize) -> f64 {
    let (a, b) = (latents.channel(i), latents.channel(j));
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let mut cab = 0.0;
    let mut caa = 0.0;
    let mut cbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cab += (x - ma) * (y - mb);
        caa += (x - ma) * (x - ma);
        cbb += (y - mb) * (y - mb);
    }
    cab / (caa * cbb).sqrt()
}

#[test]
fn dct_basis_matches_cosine_formula() {
    for b in [1, 2, 4, 8] {
        let basis = dct_basis(b);
        for u in 0..b {
            for v in 0..b {
                for y in 0..b {
                    for x in 0..b {
                        let mut delta = vec![0.0; b * b];
                        delta[y * b + x] = 1.0;
                        let expected = dct_coefficient(&delta, b, u, v);
                        assert_close(basis.row(u * b + v)[y * b + x], expected, 1e-14);
                    }
                }
            }
        }
    }
}

#[test]
fn analyze_matches_direct_dct() {
    let b = 8;
    let image = uniform_image(24, 16, 5);
    let spec = TransformSpec::dct(b).unwrap();
    let latents = analyze(&image, &spec).unwrap();
    assert_eq!((latents.block_rows(), latents.block_cols()), (2, 3));
    for br in 0..2 {
        for bc in 0..3 {
            let block: Vec<f64> = (0..b * b)
                .map(|k| image.get(br * b + k / b, bc * b + k % b))
                .collect();
            for u in 0..b {
                for v in 0..b {
                    let expected = dct_coefficient(&block, b, u, v);
                    assert_close(latents.get(u * b + v, br, bc), expected, 1e-12);
                }
            }
        }
    }
}

#[test]
fn identity_latents_are_pixels() {
    let image = uniform_image(13, 7, 2);
    let spec = TransformSpec::identity();
    assert_eq!(spec.kind(), TransformKind::Identity);
    assert_eq!(spec.block_size(), 1);
    let latents = analyze(&image, &spec).unwrap();
    assert_eq!(latents.channels(), 1);
    assert_eq!(latents.coefficients(), image.samples());
    assert_eq!(synthesize(&latents, &spec).unwrap(), image);
}

#[test]
fn round_trip_with_padding() {
    let image = uniform_image(19, 11, 8);
    for spec in [
        TransformSpec::dct(4).unwrap(),
        TransformSpec::dct(8).unwrap(),
    ] {
        let latents = analyze(&image, &spec).unwrap();
        let back = synthesize(&latents, &spec).unwrap();
        assert_eq!((back.width(), back.height()), (19, 11));
        assert!(mse(&image, &back).unwrap() < 1e-28);
    }
}

#[test]
fn rejects_bad_specs() {
    assert!(TransformSpec::dct(0).is_err());
    assert!(TransformSpec::dct(6).is_err());
    assert!(TransformSpec::dct(128).is_err());
    assert!(Basis::from_rows(2, vec![1.0, 0.0, 0.5, 1.0]).is_err());
    assert!(Basis::from_rows(2, vec![1.0, 0.0, 0.0]).is_err());
    assert!(TransformSpec::klt(2, Basis::identity(9)).is_err());
    assert!(ImagePlane::new(2, 2, vec![0.0; 3]).is_err());
    assert!(ImagePlane::new(1, 1, vec![f64::NAN]).is_err());
    let latents = analyze(&uniform_image(8, 8, 1), &TransformSpec::dct(4).unwrap()).unwrap();
    assert!(synthesize(&latents, &TransformSpec::dct(8).unwrap()).is_err());
}

#[test]
fn psnr_of_unit_range_images() {
    assert_close(psnr(0.01), 20.0, 1e-12);
    assert_close(psnr(1e-4), 40.0, 1e-12);
}

#[test]
fn klt_matches_ar1_eigen_oracle() {
    let (b, a) = (4, 0.9);
    let field = generate_source(&SyntheticSourceSpec::ar1_field(512, 512, 1.0, a, 13)).unwrap();
    let fit = fit_klt(std::slice::from_ref(&field), b).unwrap();
    assert!(!fit.rank_deficient);
    assert_eq!(fit.num_blocks, 128 * 128);

    let (oracle_values, oracle_vectors) = jacobi_eigen(ar1_block_covariance(b, a, 1.0));
    let total: f64 = oracle_values.iter().sum();
    assert_close(total, 16.0, 1e-9);
    for (k, (&got, &want)) in fit
        .eigenvalues
        .iter()
        .zip(&oracle_values)
        .take(4)
        .enumerate()
    {
        let rel = (got - want).abs() / want;
        assert!(rel < 0.1, "eigenvalue {k}: {got} vs {want}");
    }
    // the leading direction is well separated, so it must match closely
    let basis = fit.spec.basis();
    let dot: f64 = basis
        .row(0)
        .iter()
        .zip(&oracle_vectors[0])
        .map(|(x, y)| x * y)
        .sum();
    assert!(dot.abs() > 0.99, "leading eigenvector overlap {dot}");

    let latents = analyze(&field, &fit.spec).unwrap();
    for i in 0..16 {
        for j in i + 1..16 {
            let r = channel_correlation(&latents, i, j);
            assert!(r.abs() < 0.05, "channels {i},{j} correlate at {r}");
        }
    }
}

#[test]
fn klt_eigenvalues_ordered_and_basis_orthonormal() {
    let fit = fit_klt(&[uniform_image(64, 64, 3), uniform_image(32, 48, 4)], 4).unwrap();
    assert!(fit.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    assert!(fit.spec.basis().orthonormality_error() < 1e-10);
    let again = fit_klt(&[uniform_image(64, 64, 3), uniform_image(32, 48, 4)], 4).unwrap();
    assert_eq!(fit, again);
}

#[test]
fn klt_handles_constant_images() {
    let flat = ImagePlane::filled(32, 32, 0.4).unwrap();
    let fit = fit_klt(std::slice::from_ref(&flat), 4).unwrap();
    assert!(fit.rank_deficient);
    assert!(fit.eigenvalues.iter().all(|&l| l == 0.0));
    assert!(fit.spec.basis().orthonormality_error() < 1e-10);
    let back = synthesize(&analyze(&flat, &fit.spec).unwrap(), &fit.spec).unwrap();
    assert!(mse(&flat, &back).unwrap() < 1e-28);
}

#[test]
fn klt_needs_enough_blocks() {
    assert!(fit_klt(&[uniform_image(16, 16, 1)], 8).is_err());
}

fn image_strategy() -> impl Strategy<Value = (ImagePlane, usize)> {
    (
        prop::sample::select(vec![2usize, 4, 8]),
        1usize..6,
        1usize..6,
        any::<u64>(),
    )
        .prop_map(|(b, bw, bh, seed)| (uniform_image(b * bw, b * bh, seed), b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dct_preserves_mse((image, b) in image_strategy(), scale in 1e-3f64..1.0, seed in any::<u64>()) {
        let spec = TransformSpec::dct(b).unwrap();
        let latents = analyze(&image, &spec).unwrap();
        let noise = uniform_image(latents.len(), 1, seed);
        let perturbed: Vec<f64> = latents
            .coefficients()
            .iter()
            .zip(noise.samples())
            .map(|(c, n)| c + scale * (n - 0.5))
            .collect();
        let perturbed = latents.with_coefficients(perturbed).unwrap();
        let recon = synthesize(&perturbed, &spec).unwrap();
        let pixel = mse(&image, &recon).unwrap();
        let latent = mse(&latents, &perturbed).unwrap();
        prop_assert!((pixel - latent).abs() <= 1e-12);
    }

    #[test]
    fn energy_is_preserved((image, b) in image_strategy()) {
        let spec = TransformSpec::dct(b).unwrap();
        let latents = analyze(&image, &spec).unwrap();
        let e_pix: f64 = image.samples().iter().map(|v| v * v).sum();
        let e_lat: f64 = latents.coefficients().iter().map(|v| v * v).sum();
        prop_assert!((e_pix - e_lat).abs() <= 1e-10 * e_pix.max(1.0));
    }

    #[test]
    fn any_size_round_trips(
        w in 1usize..40,
        h in 1usize..40,
        b in prop::sample::select(vec![1usize, 2, 4, 8, 16]),
        seed in any::<u64>(),
    ) {
        let image = uniform_image(w, h, seed);
        let spec = TransformSpec::dct(b).unwrap();
        let back = synthesize(&analyze(&image, &spec).unwrap(), &spec).unwrap();
        prop_assert!(mse(&image, &back).unwrap() < 1e-26);
    }
}
