//! Matrix distances between Fisher information matrices: Frobenius,
//! square-root, and Procrustes, with rank-aware fast paths that avoid
//! assembling dense matrices wherever possible.

use nalgebra::{DMatrix, DVector};
use std::cell::Cell;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::{fisher_info, Family, InfoFactor, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Frobenius,
    SquareRoot,
    Procrustes,
}

thread_local! {
    static DOT_OPS: Cell<u64> = const { Cell::new(0) };
}

/// Operation counter for the batched rank-1 path: one unit per
/// `dim_beta`-length vector operation. Used by complexity tests.
pub mod opcount {
    use super::DOT_OPS;

    pub fn reset() {
        DOT_OPS.with(|c| c.set(0));
    }

    pub fn get() -> u64 {
        DOT_OPS.with(|c| c.get())
    }

    pub(super) fn record(n: u64) {
        DOT_OPS.with(|c| c.set(c.get() + n));
    }
}

/// Sum of the inner products squared between all factor pairs:
/// <A, B>_F for A = sum a_r a_r', B = sum b_s b_s'.
fn cross_inner(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let mut s = 0.0;
    for fa in a {
        for fb in b {
            let d = fa.dot(fb);
            s += d * d;
        }
    }
    s
}

/// Sum of the singular values of the cross factor product L2' L1, computed
/// in closed form for up to 2x2 matrices.
fn sum_singular_values(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let (r1, r2) = (a.len(), b.len());
    // C = L2' L1 with entries C[s][r] = b_s . a_r
    match (r1, r2) {
        (1, 1) => a[0].dot(&b[0]).abs(),
        (1, 2) | (2, 1) => {
            // rank-one cross matrix: single singular value = Frobenius norm
            cross_matrix_sq_norm(a, b).sqrt()
        }
        (2, 2) => {
            let c00 = b[0].dot(&a[0]);
            let c01 = b[0].dot(&a[1]);
            let c10 = b[1].dot(&a[0]);
            let c11 = b[1].dot(&a[1]);
            let fro2 = c00 * c00 + c01 * c01 + c10 * c10 + c11 * c11;
            let det = (c00 * c11 - c01 * c10).abs();
            // sigma1 + sigma2 = sqrt(|C|_F^2 + 2 sigma1 sigma2), sigma1 sigma2 = |det C|
            (fro2 + 2.0 * det).max(0.0).sqrt()
        }
        _ => {
            let c = DMatrix::from_fn(r2, r1, |s, r| b[s].dot(&a[r]));
            c.singular_values().iter().sum()
        }
    }
}

fn cross_matrix_sq_norm(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let mut s = 0.0;
    for fb in b {
        for fa in a {
            let d = fb.dot(fa);
            s += d * d;
        }
    }
    s
}

/// Symmetric PSD square root via eigen-decomposition, eigenvalues clamped
/// at zero.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let d = m.nrows();
    let lam_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-12 * lam_max;
    let mut out = DMatrix::zeros(d, d);
    for k in 0..d {
        let lam = if eig.eigenvalues[k] <= floor {
            0.0
        } else {
            eig.eigenvalues[k].sqrt()
        };
        let v = eig.eigenvectors.column(k);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] += lam * v[i] * v[j];
            }
        }
    }
    out
}

/// Distance between two Fisher information matrices given in factored form.
pub fn distance(metric: Metric, a: &InfoFactor, b: &InfoFactor) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let fa = &a.factors;
    let fb = &b.factors;
    match metric {
        Metric::Frobenius => {
            let d2 = cross_inner(fa, fa) + cross_inner(fb, fb) - 2.0 * cross_inner(fa, fb);
            Ok(d2.max(0.0).sqrt())
        }
        Metric::SquareRoot => {
            if a.rank() == 1 && b.rank() == 1 {
                let na = fa[0].norm();
                let nb = fb[0].norm();
                if na < 1e-300 || nb < 1e-300 {
                    return Ok((na * na + nb * nb).sqrt());
                }
                let dot = fa[0].dot(&fb[0]);
                let d2 = na * na + nb * nb - 2.0 * dot * dot / (na * nb);
                Ok(d2.max(0.0).sqrt())
            } else {
                let sa = psd_sqrt(&a.dense());
                let sb = psd_sqrt(&b.dense());
                Ok((sa - sb).norm())
            }
        }
        Metric::Procrustes => {
            let norms2: f64 = fa.iter().map(|f| f.norm_squared()).sum::<f64>()
                + fb.iter().map(|f| f.norm_squared()).sum::<f64>();
            let d2 = norms2 - 2.0 * sum_singular_values(fa, fb);
            Ok(d2.max(0.0).sqrt())
        }
    }
}

/// Distances from one information matrix to every row of the dataset, in a
/// single pass without n x n storage. Rank-1 families use the closed forms
/// with O(dim_beta) arithmetic per row.
pub fn distance_row(
    metric: Metric,
    a: &InfoFactor,
    dataset: &Dataset,
    model: &ModelSpec,
    beta: &DVector<f64>,
) -> Result<Vec<f64>> {
    if a.dim() != model.dim_beta() {
        return Err(Error::DimensionMismatch {
            expected: model.dim_beta(),
            got: a.dim(),
        });
    }
    let n = dataset.n();
    let mut out = Vec::with_capacity(n);
    match model.family {
        Family::Logistic | Family::LogisticNoIntercept | Family::Linear => {
            // Rank-1 fast path: closed forms on Phi = phi(z, beta) z.
            debug_assert_eq!(a.rank(), 1);
            let phi_a = &a.factors[0];
            let na2 = phi_a.norm_squared();
            let na = na2.sqrt();
            for j in 0..n {
                let x = dataset.row(j);
                let info = fisher_info(model, beta, &x)
                    .map_err(|e| Error::AtRow { row: j, source: Box::new(e) })?;
                let phi_b = &info.factors[0];
                let nb2 = phi_b.norm_squared();
                let dot = phi_a.dot(phi_b);
                opcount::record(3);
                let d2 = match metric {
                    Metric::Frobenius => na2 * na2 + nb2 * nb2 - 2.0 * dot * dot,
                    Metric::SquareRoot => {
                        let nb = nb2.sqrt();
                        if na < 1e-300 || nb < 1e-300 {
                            na2 + nb2
                        } else {
                            na2 + nb2 - 2.0 * dot * dot / (na * nb)
                        }
                    }
                    Metric::Procrustes => na2 + nb2 - 2.0 * dot.abs(),
                };
                out.push(d2.max(0.0).sqrt());
            }
        }
        Family::HeteroLogVar => {
            for j in 0..n {
                let x = dataset.row(j);
                let info = fisher_info(model, beta, &x)
                    .map_err(|e| Error::AtRow { row: j, source: Box::new(e) })?;
                let d = distance(metric, a, &info)
                    .map_err(|e| Error::AtRow { row: j, source: Box::new(e) })?;
                out.push(d);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn dense_frobenius(a: &InfoFactor, b: &InfoFactor) -> f64 {
        (a.dense() - b.dense()).norm()
    }

    fn dense_sqrt_dist(a: &InfoFactor, b: &InfoFactor) -> f64 {
        (psd_sqrt(&a.dense()) - psd_sqrt(&b.dense())).norm()
    }

    /// Procrustes via the SVD formula on the dense square roots.
    fn dense_procrustes(a: &InfoFactor, b: &InfoFactor) -> f64 {
        let l1 = psd_sqrt(&a.dense());
        let l2 = psd_sqrt(&b.dense());
        let sum_sigma: f64 = (l2.transpose() * &l1).singular_values().iter().sum();
        let d2 = l1.norm_squared() + l2.norm_squared() - 2.0 * sum_sigma;
        d2.max(0.0).sqrt()
    }

    fn random_rank1(rng: &mut ChaCha8Rng, d: usize) -> InfoFactor {
        InfoFactor {
            factors: vec![DVector::from_fn(d, |_, _| rng.gen_range(-2.0..2.0))],
        }
    }

    fn random_rank2(rng: &mut ChaCha8Rng, d: usize) -> InfoFactor {
        InfoFactor {
            factors: vec![
                DVector::from_fn(d, |_, _| rng.gen_range(-2.0..2.0)),
                DVector::from_fn(d, |_, _| rng.gen_range(-2.0..2.0)),
            ],
        }
    }

    #[test]
    fn identical_inputs_have_zero_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_rank2(&mut rng, 4);
        for m in [Metric::Frobenius, Metric::SquareRoot, Metric::Procrustes] {
            assert!(distance(m, &a, &a).unwrap() < 1e-10);
        }
    }

    #[test]
    fn logistic_hand_example() {
        // Logistic with intercept, beta = 0, p = 1: I(0) = 1/4 [[1,0],[0,0]],
        // I(1) = 1/4 [[1,1],[1,1]], d_F = sqrt(3)/4.
        let model = ModelSpec::new(Family::Logistic, 1);
        let beta = dvector![0.0, 0.0];
        let a = fisher_info(&model, &beta, &dvector![0.0]).unwrap();
        let b = fisher_info(&model, &beta, &dvector![1.0]).unwrap();
        let d = distance(Metric::Frobenius, &a, &b).unwrap();
        assert!((d - 3.0_f64.sqrt() / 4.0).abs() < 1e-12);
        assert!((d - dense_frobenius(&a, &b)).abs() < 1e-14);
    }

    #[test]
    fn rank1_closed_forms_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = ModelSpec::new(Family::Logistic, 3);
        for _ in 0..1000 {
            let beta = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
            let x1 = DVector::from_fn(3, |_, _| rng.gen_range(-3.0..3.0));
            let x2 = DVector::from_fn(3, |_, _| rng.gen_range(-3.0..3.0));
            let a = fisher_info(&model, &beta, &x1).unwrap();
            let b = fisher_info(&model, &beta, &x2).unwrap();
            let checks = [
                (Metric::Frobenius, dense_frobenius(&a, &b)),
                (Metric::SquareRoot, dense_sqrt_dist(&a, &b)),
                (Metric::Procrustes, dense_procrustes(&a, &b)),
            ];
            for (m, oracle) in checks {
                let fast = distance(m, &a, &b).unwrap();
                assert!(
                    (fast - oracle).abs() <= 1e-10 * oracle.max(1.0),
                    "{m:?}: fast {fast} vs dense {oracle}"
                );
            }
        }
    }

    #[test]
    fn rank2_frobenius_closed_form_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..500 {
            let a = random_rank2(&mut rng, 5);
            let b = random_rank2(&mut rng, 5);
            let fast = distance(Metric::Frobenius, &a, &b).unwrap();
            let oracle = dense_frobenius(&a, &b);
            assert!((fast - oracle).abs() <= 1e-10 * oracle.max(1.0));
        }
    }

    #[test]
    fn procrustes_formula_lower_bounds_random_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = random_rank2(&mut rng, 3);
        let b = random_rank2(&mut rng, 3);
        let formula = distance(Metric::Procrustes, &a, &b).unwrap();
        let l1 = psd_sqrt(&a.dense());
        let l2 = psd_sqrt(&b.dense());
        for _ in 0..10_000 {
            let g = DMatrix::from_fn(3, 3, |_, _| {
                rng.sample::<f64, _>(rand_distr::StandardNormal)
            });
            let qr = g.qr();
            let k = qr.q();
            let sampled = (&l1 - &l2 * k).norm();
            assert!(formula <= sampled + 1e-9);
        }
    }

    #[test]
    fn symmetry_and_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..100 {
            let a = random_rank1(&mut rng, 4);
            let b = random_rank2(&mut rng, 4);
            for m in [Metric::Frobenius, Metric::SquareRoot, Metric::Procrustes] {
                let ab = distance(m, &a, &b).unwrap();
                let ba = distance(m, &b, &a).unwrap();
                assert!((ab - ba).abs() < 1e-12);
                assert!(ab >= 0.0);
            }
            // Frobenius scales linearly in the matrices: factors scale by sqrt(c)
            let c: f64 = rng.gen_range(0.1..5.0);
            let scale = |f: &InfoFactor| InfoFactor {
                factors: f.factors.iter().map(|v| v * c.sqrt()).collect(),
            };
            let d1 = distance(Metric::Frobenius, &a, &b).unwrap();
            let d2 = distance(Metric::Frobenius, &scale(&a), &scale(&b)).unwrap();
            assert!((d2 - c * d1).abs() < 1e-9 * (c * d1).max(1.0));
        }
    }

    #[test]
    fn triangle_inequality_frobenius_and_sqrt() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let a = random_rank2(&mut rng, 3);
            let b = random_rank2(&mut rng, 3);
            let c = random_rank2(&mut rng, 3);
            for m in [Metric::Frobenius, Metric::SquareRoot] {
                let ab = distance(m, &a, &b).unwrap();
                let bc = distance(m, &b, &c).unwrap();
                let ac = distance(m, &a, &c).unwrap();
                assert!(ac <= ab + bc + 1e-10);
            }
        }
    }

    #[test]
    fn distance_row_matches_pointwise_calls() {
        use nalgebra::dmatrix;
        let model = ModelSpec::new(Family::LogisticNoIntercept, 2);
        let beta = dvector![0.5, -0.3];
        let data = crate::data::Dataset::new(
            dmatrix![0.1, 0.2; -1.0, 0.7; 2.0, -0.5; 0.0, 0.0],
            dvector![0.0, 1.0, 1.0, 0.0],
        )
        .unwrap();
        let a = fisher_info(&model, &beta, &dvector![2.0, -0.5]).unwrap();
        for m in [Metric::Frobenius, Metric::SquareRoot, Metric::Procrustes] {
            let row = distance_row(m, &a, &data, &model, &beta).unwrap();
            for (j, &dj) in row.iter().enumerate() {
                let b = fisher_info(&model, &beta, &data.row(j)).unwrap();
                let direct = distance(m, &a, &b).unwrap();
                assert!((dj - direct).abs() < 1e-12);
            }
            // support point itself has distance 0
            assert!(row[2].abs() < 1e-12);
        }
    }

    #[test]
    fn rank1_batched_path_is_linear_in_n() {
        use nalgebra::DMatrix;
        let model = ModelSpec::new(Family::LogisticNoIntercept, 3);
        let beta = dvector![0.5, 0.5, 0.5];
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut counts = Vec::new();
        for n in [500usize, 1000, 2000] {
            let x = DMatrix::from_fn(n, 3, |_, _| rng.gen_range(-1.0..1.0));
            let y = DVector::zeros(n);
            let data = crate::data::Dataset::new(x, y).unwrap();
            let a = fisher_info(&model, &beta, &dvector![1.0, 0.0, 0.0]).unwrap();
            opcount::reset();
            distance_row(Metric::Frobenius, &a, &data, &model, &beta).unwrap();
            counts.push(opcount::get());
        }
        // exactly proportional to n: constant vector ops per row
        assert_eq!(counts[1], 2 * counts[0]);
        assert_eq!(counts[2], 2 * counts[1]);
        assert!(counts[0] <= 10 * 500);
    }
}
