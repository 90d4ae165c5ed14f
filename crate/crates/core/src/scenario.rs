//! Simulation scenario generators: the three covariance structures, the
//! covariate laws (normal, t, skew-normal, skew-t, two-mode normal mixture),
//! and response sampling for the logistic and heteroskedastic models.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::models::{sigmoid, Family, ModelSpec};

#[derive(Debug, Clone)]
pub enum SigmaKind {
    /// AR(1)-type structure (0.5^|i-j|).
    S1,
    /// Five dominant random orthonormal directions plus 0.1 * S1.
    S2,
    /// Three dominant random orthonormal directions plus 0.1 * S1.
    S3,
    Custom(DMatrix<f64>),
}

#[derive(Debug, Clone)]
pub enum CovariateLaw {
    Normal,
    /// Multivariate t with the covariance as scale matrix.
    T { kappa: f64 },
    SkewNormal { alpha: DVector<f64> },
    SkewT { alpha: DVector<f64>, kappa: f64 },
    /// Equal-probability two-component normal mixture with shared covariance.
    NormalMixture { mu1: DVector<f64>, mu2: DVector<f64> },
}

/// A complete data-generating configuration for one simulation study.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub model: ModelSpec,
    pub beta: DVector<f64>,
    pub n: usize,
    pub law: CovariateLaw,
    pub sigma: SigmaKind,
    /// Center of the covariate law (ignored by the mixture, which carries
    /// its own component centers).
    pub center: DVector<f64>,
    pub seed: u64,
}

impl Scenario {
    /// Standard logistic study: no intercept, beta = 0.5 * 1, normal
    /// covariates centered at 0.
    pub fn logistic(id: &str, p: usize, n: usize, sigma: SigmaKind, seed: u64) -> Self {
        Self {
            id: id.to_string(),
            model: ModelSpec::new(Family::LogisticNoIntercept, p),
            beta: DVector::from_element(p, 0.5),
            n,
            law: CovariateLaw::Normal,
            sigma,
            center: DVector::zeros(p),
            seed,
        }
    }

    /// Heteroskedastic study: intercept model with beta = 0.25 * 1.
    pub fn hetero(id: &str, p: usize, n: usize, sigma: SigmaKind, seed: u64) -> Self {
        Self {
            id: id.to_string(),
            model: ModelSpec::new(Family::HeteroLogVar, p),
            beta: DVector::from_element(p + 1, 0.25),
            n,
            law: CovariateLaw::Normal,
            sigma,
            center: DVector::zeros(p),
            seed,
        }
    }
}

fn random_orthonormal_frame(p: usize, r: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(p, r, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    qr.q()
}

/// Builds one of the three covariance structures. S2/S3 draw their dominant
/// directions from the seed, so each replicate gets a fresh frame.
pub fn make_sigma(kind: &SigmaKind, p: usize, seed: u64) -> Result<DMatrix<f64>> {
    let s1 = DMatrix::from_fn(p, p, |i, j| 0.5_f64.powi((i as i32 - j as i32).abs()));
    match kind {
        SigmaKind::S1 => Ok(s1),
        SigmaKind::Custom(m) => {
            if m.nrows() != p || m.ncols() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: m.nrows(),
                });
            }
            Ok(m.clone())
        }
        SigmaKind::S2 | SigmaKind::S3 => {
            let c: &[f64] = match kind {
                SigmaKind::S2 => &[2.0, 1.8, 1.6, 1.4, 1.2],
                _ => &[3.0, 2.0, 1.0],
            };
            if p < c.len() {
                return Err(Error::InvalidArgument(format!(
                    "need p >= {} for this covariance structure, got {p}",
                    c.len()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = random_orthonormal_frame(p, c.len(), &mut rng);
            let mut m = &s1 * 0.1;
            for (r, &cr) in c.iter().enumerate() {
                let er = e.column(r);
                m.syger(cr, &er, &er, 1.0);
            }
            m.fill_upper_triangle_with_lower_triangle();
            Ok(m)
        }
    }
}

fn cholesky_factor(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Cholesky::new(sigma.clone())
        .map(|c| c.l())
        .ok_or_else(|| Error::DegenerateData("covariance matrix is not positive definite".into()))
}

fn chi2_scale(kappa: f64, rng: &mut ChaCha8Rng) -> f64 {
    // chi-square via sum of squared normals for small integer kappa;
    // general kappa uses the gamma sampler
    let k = kappa.round();
    let chi2 = if (kappa - k).abs() < 1e-12 && k >= 1.0 && k <= 64.0 {
        (0..k as usize)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                z * z
            })
            .sum::<f64>()
    } else {
        let gamma = rand_distr::Gamma::new(kappa / 2.0, 2.0).expect("kappa > 0");
        rng.sample(gamma)
    };
    (chi2 / kappa).sqrt().max(1e-12)
}

/// Draws n i.i.d. covariate rows for the scenario's law. The covariance
/// frame (S2/S3) and all randomness derive from `seed`, so a fixed seed is
/// fully reproducible.
pub fn sample_covariates(scenario: &Scenario, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    let p = scenario.model.p;
    let sigma = make_sigma(&scenario.sigma, p, seed ^ 0x5347)?;
    let l = cholesky_factor(&sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::zeros(n, p);
    let mut z = DVector::zeros(p);
    for i in 0..n {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let mut row = &l * &z;
        match &scenario.law {
            CovariateLaw::Normal => {
                row += &scenario.center;
            }
            CovariateLaw::T { kappa } => {
                row /= chi2_scale(*kappa, &mut rng);
                row += &scenario.center;
            }
            CovariateLaw::SkewNormal { alpha } => {
                // latent-sign construction of the 2 phi(x) Phi(alpha'x) law
                let u: f64 = rng.sample(StandardNormal);
                if u >= alpha.dot(&row) {
                    row = -row;
                }
                row += &scenario.center;
            }
            CovariateLaw::SkewT { alpha, kappa } => {
                let u: f64 = rng.sample(StandardNormal);
                if u >= alpha.dot(&row) {
                    row = -row;
                }
                row /= chi2_scale(*kappa, &mut rng);
                row += &scenario.center;
            }
            CovariateLaw::NormalMixture { mu1, mu2 } => {
                row += if rng.gen::<bool>() { mu1 } else { mu2 };
            }
        }
        x.row_mut(i).copy_from(&row.transpose());
    }
    Ok(x)
}

/// Draws a response vector for the scenario's model family at the true
/// parameter: Bernoulli for the logistic families, normal with the model's
/// (possibly covariate-dependent) variance otherwise.
pub fn sample_responses(scenario: &Scenario, x: &DMatrix<f64>, seed: u64) -> Result<DVector<f64>> {
    let model = &scenario.model;
    let beta = &scenario.beta;
    if beta.len() != model.dim_beta() {
        return Err(Error::DimensionMismatch {
            expected: model.dim_beta(),
            got: beta.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = x.nrows();
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let xi = x.row(i).transpose();
        let z = model.reg_vector(&xi);
        let mean = z.dot(beta);
        y[i] = match model.family {
            Family::Logistic | Family::LogisticNoIntercept => {
                if rng.gen::<f64>() < sigmoid(mean) {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Linear => {
                let e: f64 = rng.sample(StandardNormal);
                mean + e
            }
            Family::HeteroLogVar => {
                let log_var: f64 = xi.dot(&beta.rows(1, model.p));
                let e: f64 = rng.sample(StandardNormal);
                mean + e * (0.5 * log_var).exp()
            }
        };
    }
    Ok(y)
}
