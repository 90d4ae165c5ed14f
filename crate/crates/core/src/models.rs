//! Regression model families, Fisher information at a point, and (weighted)
//! maximum likelihood estimation.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// The regression families supported by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Logistic regression with intercept, z = (1, x').
    Logistic,
    /// Logistic regression without intercept, z = x.
    LogisticNoIntercept,
    /// Homoskedastic linear regression with intercept (oracle tests only).
    Linear,
    /// Heteroskedastic linear model with log-linear variance
    /// sigma^2(x, beta) = exp(x' (beta_1..beta_p)).
    HeteroLogVar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub family: Family,
    /// Covariate dimension.
    pub p: usize,
}

impl ModelSpec {
    pub fn new(family: Family, p: usize) -> Self {
        Self { family, p }
    }

    /// Parameter dimension: p for the no-intercept logistic, p + 1 otherwise.
    pub fn dim_beta(&self) -> usize {
        match self.family {
            Family::LogisticNoIntercept => self.p,
            _ => self.p + 1,
        }
    }

    /// The regression vector z for a covariate point x.
    pub fn reg_vector(&self, x: &DVector<f64>) -> DVector<f64> {
        match self.family {
            Family::LogisticNoIntercept => x.clone(),
            _ => {
                let mut z = DVector::zeros(self.p + 1);
                z[0] = 1.0;
                z.rows_mut(1, self.p).copy_from(x);
                z
            }
        }
    }

    fn check_dims(&self, beta: &DVector<f64>, x: &DVector<f64>) -> Result<()> {
        if beta.len() != self.dim_beta() {
            return Err(Error::DimensionMismatch {
                expected: self.dim_beta(),
                got: beta.len(),
            });
        }
        if x.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Low-rank factor representation of a Fisher information matrix at a point:
/// I(beta, x) = sum_r Phi_r Phi_r'.
#[derive(Debug, Clone)]
pub struct InfoFactor {
    pub factors: Vec<DVector<f64>>,
}

impl InfoFactor {
    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn dim(&self) -> usize {
        self.factors[0].len()
    }

    /// Assemble the dense information matrix from the factors.
    pub fn dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for f in &self.factors {
            m.syger(1.0, f, f, 1.0);
        }
        // syger fills the lower triangle only
        m.fill_upper_triangle_with_lower_triangle();
        m
    }
}

#[derive(Debug, Clone)]
pub struct ParamEstimate {
    pub beta: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub score_norm: f64,
}

/// phi(t) = exp(t/2) / (1 + exp(t)) = 1 / (2 cosh(t/2)), overflow-safe.
pub fn logistic_phi(t: f64) -> f64 {
    let c = (t / 2.0).cosh();
    if c.is_finite() {
        0.5 / c
    } else {
        0.0
    }
}

/// sigmoid(t), overflow-safe.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(t)), overflow-safe.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

const LOG_VAR_CLAMP: f64 = 700.0;

/// log sigma^2(x, beta) for the heteroskedastic family.
fn log_variance(model: &ModelSpec, beta: &DVector<f64>, x: &DVector<f64>) -> Result<f64> {
    debug_assert_eq!(model.family, Family::HeteroLogVar);
    let e: f64 = x.dot(&beta.rows(1, model.p));
    if e.abs() > LOG_VAR_CLAMP {
        return Err(Error::NumericOverflow {
            point: x.iter().copied().collect(),
        });
    }
    Ok(e)
}

/// Fisher information matrix at the point `x`, in factored form.
pub fn fisher_info(model: &ModelSpec, beta: &DVector<f64>, x: &DVector<f64>) -> Result<InfoFactor> {
    model.check_dims(beta, x)?;
    let z = model.reg_vector(x);
    match model.family {
        Family::Logistic | Family::LogisticNoIntercept => {
            let phi = logistic_phi(z.dot(beta));
            Ok(InfoFactor {
                factors: vec![&z * phi],
            })
        }
        Family::Linear => Ok(InfoFactor { factors: vec![z] }),
        Family::HeteroLogVar => {
            let e = log_variance(model, beta, x)?;
            let sigma_inv = (-e / 2.0).exp();
            let phi1 = &z * sigma_inv;
            let mut phi2 = DVector::zeros(model.p + 1);
            phi2.rows_mut(1, model.p)
                .copy_from(&(x * std::f64::consts::FRAC_1_SQRT_2));
            Ok(InfoFactor {
                factors: vec![phi1, phi2],
            })
        }
    }
}

fn check_weights(n: usize, weights: Option<&DVector<f64>>) -> Result<()> {
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: w.len(),
            });
        }
        if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "weights must be positive and finite".into(),
            ));
        }
    }
    Ok(())
}

/// Weighted log-likelihood of the dataset at `beta`. Weight w_i multiplies the
/// i-th log-likelihood term.
pub fn log_likelihood(
    model: &ModelSpec,
    beta: &DVector<f64>,
    data: &Dataset,
    weights: Option<&DVector<f64>>,
) -> Result<f64> {
    if beta.len() != model.dim_beta() {
        return Err(Error::DimensionMismatch {
            expected: model.dim_beta(),
            got: beta.len(),
        });
    }
    if beta.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("beta contains NaN".into()));
    }
    check_weights(data.n(), weights)?;
    let wi = |i: usize| weights.map_or(1.0, |w| w[i]);
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();

    let mut ll = 0.0;
    for i in 0..data.n() {
        let x = data.row(i);
        let z = model.reg_vector(&x);
        let y = data.responses()[i];
        let term = match model.family {
            Family::Logistic | Family::LogisticNoIntercept => {
                let t = z.dot(beta);
                y * t - softplus(t)
            }
            Family::Linear => {
                let r = y - z.dot(beta);
                -0.5 * (ln_2pi + r * r)
            }
            Family::HeteroLogVar => {
                let e = log_variance(model, beta, &x)?;
                let r = y - z.dot(beta);
                -0.5 * (ln_2pi + e + r * r * (-e).exp())
            }
        };
        ll += wi(i) * term;
    }
    if ll.is_nan() {
        return Err(Error::InvalidArgument(
            "log-likelihood evaluated to NaN".into(),
        ));
    }
    Ok(ll)
}

/// Analytic score (gradient of `log_likelihood` in `beta`).
pub fn score(
    model: &ModelSpec,
    beta: &DVector<f64>,
    data: &Dataset,
    weights: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    check_weights(data.n(), weights)?;
    let wi = |i: usize| weights.map_or(1.0, |w| w[i]);
    let d = model.dim_beta();
    let mut g = DVector::zeros(d);
    for i in 0..data.n() {
        let x = data.row(i);
        let z = model.reg_vector(&x);
        let y = data.responses()[i];
        match model.family {
            Family::Logistic | Family::LogisticNoIntercept => {
                let pi = sigmoid(z.dot(beta));
                g.axpy(wi(i) * (y - pi), &z, 1.0);
            }
            Family::Linear => {
                let r = y - z.dot(beta);
                g.axpy(wi(i) * r, &z, 1.0);
            }
            Family::HeteroLogVar => {
                let e = log_variance(model, beta, &x)?;
                let v_inv = (-e).exp();
                let r = y - z.dot(beta);
                g.axpy(wi(i) * r * v_inv, &z, 1.0);
                // d log v / d beta = (0, x')'
                let coeff = wi(i) * 0.5 * (r * r * v_inv - 1.0);
                for j in 0..model.p {
                    g[j + 1] += coeff * x[j];
                }
            }
        }
    }
    Ok(g)
}

fn solve_spd(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(chol) = h.clone().cholesky() {
        return Some(chol.solve(g));
    }
    h.clone().lu().solve(g)
}

const SEPARATION_NORM: f64 = 1.0e3;

/// Maximum likelihood estimation via Newton-Raphson with step-halving.
///
/// Logistic families start at 0 (IRLS form); the heteroskedastic family
/// starts at the ordinary-least-squares estimate and falls back to Fisher
/// scoring when the Newton direction is not an ascent direction. The linear
/// family is solved in closed form.
pub fn fit_mle(
    model: &ModelSpec,
    data: &Dataset,
    weights: Option<&DVector<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<ParamEstimate> {
    check_weights(data.n(), weights)?;
    let d = model.dim_beta();
    if data.p() != model.p {
        return Err(Error::DimensionMismatch {
            expected: model.p,
            got: data.p(),
        });
    }
    match model.family {
        Family::Logistic | Family::LogisticNoIntercept => {
            let ys = data.responses();
            let n_pos = ys.iter().filter(|&&y| y > 0.5).count();
            if n_pos == 0 || n_pos == data.n() {
                return Err(Error::InvalidArgument(
                    "both response classes must be present".into(),
                ));
            }
        }
        Family::Linear => {
            let beta = ols(model, data, weights)?;
            let g = score(model, &beta, data, weights)?;
            return Ok(ParamEstimate {
                beta,
                converged: true,
                iterations: 1,
                score_norm: g.norm(),
            });
        }
        Family::HeteroLogVar => {}
    }

    let mut beta = match model.family {
        Family::HeteroLogVar => ols(model, data, weights)?,
        _ => DVector::zeros(d),
    };
    let mut ll = log_likelihood(model, &beta, data, weights)?;
    let mut iterations = 0;
    let mut converged = false;
    let mut g = score(model, &beta, data, weights)?;

    while iterations < max_iter {
        if g.norm() <= tol {
            converged = true;
            break;
        }
        iterations += 1;
        let neg_h = negative_hessian(model, &beta, data, weights)?;
        let mut dir = match solve_spd(&neg_h, &g) {
            Some(dir) => dir,
            None => break,
        };
        if dir.dot(&g) <= 0.0 {
            // Non-ascent Newton direction; retry with the Fisher-scoring
            // (expected-information) direction.
            let fi = expected_information(model, &beta, data, weights)?;
            match solve_spd(&fi, &g) {
                Some(alt) if alt.dot(&g) > 0.0 => dir = alt,
                _ => break,
            }
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = &beta + &dir * step;
            if let Ok(cand_ll) = log_likelihood(model, &cand, data, weights) {
                if cand_ll > ll || (cand_ll == ll && step == 1.0) {
                    beta = cand;
                    ll = cand_ll;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        if beta.norm() > SEPARATION_NORM {
            return Err(Error::Separation);
        }
        g = score(model, &beta, data, weights)?;
    }
    if g.norm() <= tol {
        converged = true;
    }
    Ok(ParamEstimate {
        score_norm: g.norm(),
        beta,
        converged,
        iterations,
    })
}

/// Weighted least squares of y on the regression vector z.
fn ols(
    model: &ModelSpec,
    data: &Dataset,
    weights: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    let d = model.dim_beta();
    let wi = |i: usize| weights.map_or(1.0, |w| w[i]);
    let mut ztz = DMatrix::zeros(d, d);
    let mut zty = DVector::zeros(d);
    for i in 0..data.n() {
        let z = model.reg_vector(&data.row(i));
        ztz.syger(wi(i), &z, &z, 1.0);
        zty.axpy(wi(i) * data.responses()[i], &z, 1.0);
    }
    ztz.fill_upper_triangle_with_lower_triangle();
    solve_spd(&ztz, &zty).ok_or_else(|| {
        Error::DegenerateData("singular normal equations in least-squares start".into())
    })
}

/// Negative observed Hessian of the weighted log-likelihood.
fn negative_hessian(
    model: &ModelSpec,
    beta: &DVector<f64>,
    data: &Dataset,
    weights: Option<&DVector<f64>>,
) -> Result<DMatrix<f64>> {
    let d = model.dim_beta();
    let wi = |i: usize| weights.map_or(1.0, |w| w[i]);
    let mut h = DMatrix::zeros(d, d);
    for i in 0..data.n() {
        let x = data.row(i);
        let z = model.reg_vector(&x);
        let y = data.responses()[i];
        match model.family {
            Family::Logistic | Family::LogisticNoIntercept => {
                let pi = sigmoid(z.dot(beta));
                h.syger(wi(i) * pi * (1.0 - pi), &z, &z, 1.0);
            }
            Family::Linear => {
                h.syger(wi(i), &z, &z, 1.0);
            }
            Family::HeteroLogVar => {
                let e = log_variance(model, beta, &x)?;
                let v_inv = (-e).exp();
                let r = y - z.dot(beta);
                let mut xt = DVector::zeros(d);
                xt.rows_mut(1, model.p).copy_from(&x);
                let w = wi(i);
                h.syger(w * v_inv, &z, &z, 1.0);
                h.syger(w * 0.5 * r * r * v_inv, &xt, &xt, 1.0);
                // cross term r/v (z xt' + xt z'), lower triangle
                let c = w * r * v_inv;
                for a in 0..d {
                    for b in 0..=a {
                        h[(a, b)] += c * (z[a] * xt[b] + xt[a] * z[b]);
                    }
                }
            }
        }
    }
    h.fill_upper_triangle_with_lower_triangle();
    Ok(h)
}

/// Expected (Fisher) information of the weighted log-likelihood.
fn expected_information(
    model: &ModelSpec,
    beta: &DVector<f64>,
    data: &Dataset,
    weights: Option<&DVector<f64>>,
) -> Result<DMatrix<f64>> {
    let d = model.dim_beta();
    let wi = |i: usize| weights.map_or(1.0, |w| w[i]);
    let mut h = DMatrix::zeros(d, d);
    for i in 0..data.n() {
        let info = fisher_info(model, beta, &data.row(i))?;
        for f in &info.factors {
            h.syger(wi(i), f, f, 1.0);
        }
    }
    h.fill_upper_triangle_with_lower_triangle();
    Ok(h)
}
