//! Kiefer Psi_q criteria, approximate optimal designs on a finite candidate
//! set, and support-point reduction.
//!
//! The solver combines multiplicative weight updates with occasional
//! vertex-exchange steps and certifies (near-)optimality through the general
//! equivalence theorem.

use nalgebra::{DMatrix, DVector};

use crate::clustering::DesignSpace;
use crate::error::{Error, Result};
use crate::models::{fisher_info, ModelSpec};

/// Psi_q optimality criterion for -inf <= q < 1. `A`, `D` and `E` are the
/// classical special cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Criterion {
    pub q: f64,
}

impl Criterion {
    pub const A: Criterion = Criterion { q: -1.0 };
    pub const D: Criterion = Criterion { q: 0.0 };
    pub const E: Criterion = Criterion {
        q: f64::NEG_INFINITY,
    };

    pub fn new(q: f64) -> Result<Self> {
        if q.is_nan() || q >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "criterion exponent must lie in [-inf, 1), got {q}"
            )));
        }
        Ok(Self { q })
    }
}

/// An approximate design: support points with probability weights, kept
/// sorted by descending weight.
#[derive(Debug, Clone)]
pub struct Design {
    pub support: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
    /// True when the equivalence-theorem certificate held at return time.
    pub certified: bool,
}

impl Design {
    pub fn new(support: Vec<DVector<f64>>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                got: weights.len(),
            });
        }
        if support.is_empty() {
            return Err(Error::InvalidArgument("design must be nonempty".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidArgument(
                "design weights must be nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "design weights must sum to 1, got {total}"
            )));
        }
        let mut d = Self {
            support,
            weights,
            certified: false,
        };
        d.sort_descending();
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    fn sort_descending(&mut self) {
        let mut order: Vec<usize> = (0..self.weights.len()).collect();
        order.sort_by(|&a, &b| self.weights[b].partial_cmp(&self.weights[a]).unwrap());
        self.support = order.iter().map(|&i| self.support[i].clone()).collect();
        self.weights = order.iter().map(|&i| self.weights[i]).collect();
    }
}

/// The information matrix of a design: M = sum_i w_i I(beta, x_i).
pub fn info_matrix(design: &Design, model: &ModelSpec, beta: &DVector<f64>) -> Result<DMatrix<f64>> {
    let d = model.dim_beta();
    let mut m = DMatrix::zeros(d, d);
    for (x, &w) in design.support.iter().zip(&design.weights) {
        let info = fisher_info(model, beta, x)?;
        for phi in &info.factors {
            m.syger(w, phi, phi, 1.0);
        }
    }
    m.fill_upper_triangle_with_lower_triangle();
    Ok(m)
}

fn sym_eigenvalues(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvectors, eig.eigenvalues)
}

fn is_singular(eigenvalues: &DVector<f64>) -> bool {
    let max = eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    eigenvalues.iter().any(|&l| l <= 1e-12 * max.max(1e-300))
}

/// Psi_q value of an information matrix: (tr M^q)^(1/q) for finite q != 0,
/// det(M)^(1/dim) for q = 0, and the smallest eigenvalue for q = -inf.
/// Singular matrices with q <= 0 evaluate to 0.
pub fn criterion_value(m: &DMatrix<f64>, crit: Criterion) -> f64 {
    // Cholesky fast paths for the two most common exponents; both detect
    // singular matrices through the factorization failing or a tiny pivot
    if crit.q == -1.0 || crit.q == 0.0 {
        let d = m.nrows();
        if let Some(chol) = m.clone().cholesky() {
            let l = chol.l();
            let tiny = (0..d).any(|i| l[(i, i)] <= 1e-7 * l[(0, 0)].max(1e-150));
            if !tiny {
                if crit.q == 0.0 {
                    let log_det: f64 = (0..d).map(|i| l[(i, i)].ln()).sum();
                    return (2.0 * log_det / d as f64).exp();
                }
                let inv = chol.inverse();
                let tr: f64 = (0..d).map(|i| inv[(i, i)]).sum();
                return 1.0 / tr;
            }
        } else {
            return 0.0;
        }
    }
    let (_, eigenvalues) = sym_eigenvalues(m);
    criterion_from_eigenvalues(&eigenvalues, crit)
}

fn criterion_from_eigenvalues(eigenvalues: &DVector<f64>, crit: Criterion) -> f64 {
    let q = crit.q;
    let singular = is_singular(eigenvalues);
    if singular && q <= 0.0 {
        return 0.0;
    }
    if q == f64::NEG_INFINITY {
        return eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
    }
    if q == 0.0 {
        let d = eigenvalues.len() as f64;
        let log_det: f64 = eigenvalues.iter().map(|&l| l.ln()).sum();
        return (log_det / d).exp();
    }
    let tr: f64 = eigenvalues.iter().map(|&l| l.max(0.0).powf(q)).sum();
    tr.powf(1.0 / q)
}

/// Stacked per-candidate information factors, shared by the solver loop.
struct CandidateFactors {
    /// d x (s * rank) column-stacked factors.
    f: DMatrix<f64>,
    /// factor column range of candidate i: offsets[i]..offsets[i + 1]
    offsets: Vec<usize>,
}

fn stack_factors(
    candidates: &[DVector<f64>],
    model: &ModelSpec,
    beta: &DVector<f64>,
) -> Result<CandidateFactors> {
    let d = model.dim_beta();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    let mut offsets = Vec::with_capacity(candidates.len() + 1);
    offsets.push(0);
    for x in candidates {
        let info = fisher_info(model, beta, x)?;
        cols.extend(info.factors);
        offsets.push(cols.len());
    }
    let mut f = DMatrix::zeros(d, cols.len());
    for (j, c) in cols.iter().enumerate() {
        f.column_mut(j).copy_from(c);
    }
    Ok(CandidateFactors { f, offsets })
}

/// M(w) = sum_{i in active} w_i I_i assembled from the stacked factors.
fn weighted_info(fac: &CandidateFactors, w: &[f64], active: &[usize]) -> DMatrix<f64> {
    let d = fac.f.nrows();
    let cols: usize = active
        .iter()
        .map(|&i| fac.offsets[i + 1] - fac.offsets[i])
        .sum();
    let mut scaled = DMatrix::zeros(d, cols);
    let mut c = 0;
    for &i in active {
        let s = w[i].max(0.0).sqrt();
        for j in fac.offsets[i]..fac.offsets[i + 1] {
            scaled.column_mut(c).copy_from(&(fac.f.column(j) * s));
            c += 1;
        }
    }
    let mut m = DMatrix::zeros(d, d);
    m.gemm(1.0, &scaled, &scaled.transpose(), 0.0);
    // symmetrize round-off
    let mt = m.transpose();
    (m + mt) * 0.5
}

/// Directional-derivative ratios r_i = tr(B I_i) / denom for all candidates,
/// where B and denom depend on the criterion (see the equivalence theorem).
fn derivative_ratios(fac: &CandidateFactors, b: &DMatrix<f64>, denom: f64) -> Vec<f64> {
    let h = b * &fac.f;
    let s = fac.offsets.len() - 1;
    let mut ratios = Vec::with_capacity(s);
    for i in 0..s {
        let mut num = 0.0;
        for j in fac.offsets[i]..fac.offsets[i + 1] {
            num += fac.f.column(j).dot(&h.column(j));
        }
        ratios.push(num / denom);
    }
    ratios
}

/// `derivative_ratios` restricted to a subset of candidates, without the
/// full-width matrix product.
fn subset_ratios(fac: &CandidateFactors, b: &DMatrix<f64>, denom: f64, subset: &[usize]) -> Vec<f64> {
    subset
        .iter()
        .map(|&i| {
            let mut num = 0.0;
            for j in fac.offsets[i]..fac.offsets[i + 1] {
                let col = fac.f.column(j);
                num += col.dot(&(b * col));
            }
            num / denom
        })
        .collect()
}

/// B and denom for the certificate/update at the current M, from its
/// eigen-decomposition. Finite q: B = M^(q-1), denom = tr M^q. D: B = M^-1,
/// denom = dim. E: B = u u' for the smallest eigenvector u, denom = lambda_min.
fn certificate_operator(
    vectors: &DMatrix<f64>,
    eigenvalues: &DVector<f64>,
    crit: Criterion,
) -> (DMatrix<f64>, f64) {
    let d = eigenvalues.len();
    let q = crit.q;
    if q == f64::NEG_INFINITY {
        let (jmin, lmin) = eigenvalues
            .iter()
            .cloned()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        let u = vectors.column(jmin).clone_owned();
        return (&u * u.transpose(), lmin);
    }
    let exponent = if q == 0.0 { -1.0 } else { q - 1.0 };
    let mut b = DMatrix::zeros(d, d);
    for j in 0..d {
        let u = vectors.column(j);
        b.syger(eigenvalues[j].powf(exponent), &u, &u, 1.0);
    }
    b.fill_upper_triangle_with_lower_triangle();
    let denom = if q == 0.0 {
        d as f64
    } else {
        eigenvalues.iter().map(|&l| l.powf(q)).sum()
    };
    (b, denom)
}

/// Golden-section maximization of a concave function on [lo, hi]. The
/// criterion is concave along any matrix segment, so this is exact up to the
/// interval tolerance.
fn line_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, evals: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..evals {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

const PRUNE_WEIGHT: f64 = 1e-8;
/// Candidates whose weight decays below this leave the working set; a global
/// certificate pass can re-admit them later.
const ACTIVE_DROP: f64 = 1e-10;
/// How often the certificate is evaluated over the full candidate set.
const GLOBAL_CHECK_PERIOD: usize = 25;
/// Seed weight for candidates re-admitted by a global pass.
const REACTIVATION_WEIGHT: f64 = 1e-5;

/// Approximate Psi_q-optimal design over a finite candidate set.
///
/// Multiplicative weight updates (exponent 1 for D, 1/2 otherwise) run on a
/// working set of candidates with non-negligible weight; a periodic global
/// pass evaluates the equivalence-theorem certificate over every candidate,
/// re-admits violators, and takes a vertex-exchange step toward the steepest
/// one. Stops once the global certificate max_i r_i <= 1 + tol holds, or at
/// `max_iter` (returning the best iterate, flagged uncertified).
pub fn optimize_design(
    candidates: &DesignSpace,
    model: &ModelSpec,
    beta: &DVector<f64>,
    crit: Criterion,
    tol: f64,
    max_iter: usize,
) -> Result<Design> {
    if !(tol > 0.0 && tol <= 0.1) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must lie in (0, 0.1], got {tol}"
        )));
    }
    let s = candidates.points.len();
    if s == 0 {
        return Err(Error::DesignSpaceEmpty);
    }
    let fac = stack_factors(&candidates.points, model, beta)?;
    let mut w = vec![1.0 / s as f64; s];
    let mut active: Vec<usize> = (0..s).collect();

    // feasibility: uniform weights have maximal range, so a singular M here
    // means no weighting is nonsingular
    {
        let m = weighted_info(&fac, &w, &active);
        let (_, eigenvalues) = sym_eigenvalues(&m);
        if is_singular(&eigenvalues) {
            return Err(Error::InfeasibleDesign);
        }
    }

    let lambda = if crit.q == 0.0 { 1.0 } else { 0.5 };
    // best iterate stored sparsely: (candidate, weight) over its support
    let mut best: Vec<(usize, f64)> = active.iter().map(|&j| (j, w[j])).collect();
    let mut best_value = f64::NEG_INFINITY;
    let mut certified = false;

    // dense information matrix of a single candidate
    let candidate_info = |j: usize| {
        let d = fac.f.nrows();
        let mut mj = DMatrix::zeros(d, d);
        for c in fac.offsets[j]..fac.offsets[j + 1] {
            let col = fac.f.column(c).clone_owned();
            mj.syger(1.0, &col, &col, 1.0);
        }
        mj.fill_upper_triangle_with_lower_triangle();
        mj
    };

    let mut iter = 0;
    while iter < max_iter {
        iter += 1;
        let m = weighted_info(&fac, &w, &active);
        let (vectors, eigenvalues) = sym_eigenvalues(&m);
        let value = criterion_from_eigenvalues(&eigenvalues, crit);
        if value > best_value {
            best_value = value;
            best = active.iter().map(|&j| (j, w[j])).collect();
        }
        let (b, denom) = certificate_operator(&vectors, &eigenvalues, crit);
        let active_ratios = subset_ratios(&fac, &b, denom, &active);
        let active_rmax = active_ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

        if iter % GLOBAL_CHECK_PERIOD == 1 || active_rmax <= 1.0 + tol {
            // global certificate pass
            let ratios = derivative_ratios(&fac, &b, denom);
            let (jmax, rmax) = ratios
                .iter()
                .cloned()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            if rmax <= 1.0 + tol {
                certified = true;
                best = active.iter().map(|&j| (j, w[j])).collect();
                break;
            }
            // re-admit candidates the working set wrote off too early
            let mut added = 0.0;
            for (j, &r) in ratios.iter().enumerate() {
                if r > 1.0 + 0.5 * tol && w[j] <= 0.0 {
                    w[j] = REACTIVATION_WEIGHT;
                    active.push(j);
                    added += REACTIVATION_WEIGHT;
                }
            }
            if added > 0.0 {
                for &j in &active {
                    w[j] /= 1.0 + added;
                }
            }
            // vertex exchange: line search in matrix space toward the
            // steepest candidate, best improving step taken
            let mj = candidate_info(jmax);
            let (best_alpha, best_tv) = line_max(
                |alpha| criterion_value(&(&m * (1.0 - alpha) + &mj * alpha), crit),
                0.0,
                1.0,
                28,
            );
            if best_tv > value && best_alpha > 0.0 {
                for &j in &active {
                    w[j] *= 1.0 - best_alpha;
                }
                if w[jmax] <= 0.0 {
                    active.push(jmax);
                }
                w[jmax] += best_alpha;
            }
            continue;
        }

        // pair exchange on alternating iterations: transfer weight from the
        // worst-performing support point to the best candidate (the
        // "nearest-neighbour exchange" that breaks the slow multiplicative
        // tail), accepted only on criterion improvement
        if iter % 2 == 0 && active.len() >= 2 && active.len() <= 512 {
            // sweep of pair exchanges: transfer weight from low-ratio support
            // points to high-ratio ones (the nearest-neighbour exchanges that
            // break the slow multiplicative tail), each step an exact line
            // search accepted only on criterion improvement
            let mut order: Vec<usize> = (0..active.len()).collect();
            order.sort_by(|&a, &b| active_ratios[a].partial_cmp(&active_ratios[b]).unwrap());
            let pairs = (active.len() / 2).min(8);
            let mut m_cur = m.clone();
            let mut value_cur = value;
            let mut drained: Vec<usize> = Vec::new();
            for t in 0..pairs {
                let jw = active[order[t]];
                let jb = active[order[active.len() - 1 - t]];
                if jb == jw || active_ratios[order[active.len() - 1 - t]] <= active_ratios[order[t]]
                    || w[jw] <= 0.0
                {
                    continue;
                }
                let dir = candidate_info(jb) - candidate_info(jw);
                let (delta, tv) = line_max(
                    |delta| criterion_value(&(&m_cur + &dir * delta), crit),
                    0.0,
                    w[jw],
                    28,
                );
                if tv > value_cur && delta > 0.0 {
                    w[jw] -= delta;
                    w[jb] += delta;
                    m_cur += &dir * delta;
                    value_cur = tv;
                    if w[jw] < ACTIVE_DROP {
                        w[jw] = 0.0;
                        drained.push(jw);
                    }
                }
            }
            if !drained.is_empty() {
                active.retain(|j| !drained.contains(j));
            }
            continue;
        }

        let mut total = 0.0;
        for (pos, &j) in active.iter().enumerate() {
            w[j] *= active_ratios[pos].max(0.0).powf(lambda);
            total += w[j];
        }
        if !(total > 0.0) || !total.is_finite() {
            break; // numerically stuck; fall back to the best iterate
        }
        for &j in &active {
            w[j] /= total;
        }
        active.retain(|&j| {
            if w[j] < ACTIVE_DROP {
                w[j] = 0.0;
                false
            } else {
                true
            }
        });
    }

    let mut best_w = vec![0.0; s];
    for (j, wj) in best {
        best_w[j] = wj;
    }
    finalize_design(&candidates.points, best_w, model.dim_beta(), certified)
}

fn finalize_design(
    points: &[DVector<f64>],
    weights: Vec<f64>,
    dim_beta: usize,
    certified: bool,
) -> Result<Design> {
    let mut pairs: Vec<(usize, f64)> = weights
        .into_iter()
        .enumerate()
        .filter(|&(_, w)| w >= PRUNE_WEIGHT)
        .collect();
    pairs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    // existence bound on the support size
    let b_max = dim_beta * (dim_beta + 1) / 2 + 1;
    pairs.truncate(b_max);
    let total: f64 = pairs.iter().map(|&(_, w)| w).sum();
    if !(total > 0.0) {
        return Err(Error::InfeasibleDesign);
    }
    let support: Vec<DVector<f64>> = pairs.iter().map(|&(i, _)| points[i].clone()).collect();
    let weights: Vec<f64> = pairs.iter().map(|&(_, w)| w / total).collect();
    let mut design = Design::new(support, weights)?;
    design.certified = certified;
    Ok(design)
}

/// Psi-efficiency of `design` relative to `reference`, clipped to [0, 1].
pub fn efficiency(
    design: &Design,
    reference: &Design,
    model: &ModelSpec,
    beta: &DVector<f64>,
    crit: Criterion,
) -> Result<f64> {
    let ref_value = criterion_value(&info_matrix(reference, model, beta)?, crit);
    if ref_value == 0.0 {
        return Err(Error::InvalidReference);
    }
    let value = criterion_value(&info_matrix(design, model, beta)?, crit);
    Ok((value / ref_value).clamp(0.0, 1.0))
}

/// Support reduction: repeatedly drop the smallest-weight point and
/// renormalize while the reduced design keeps more than dim_beta - 1 support
/// points and its criterion value stays above `zeta` times the input's.
pub fn reduce_support(
    design: &Design,
    zeta: f64,
    model: &ModelSpec,
    beta: &DVector<f64>,
    crit: Criterion,
) -> Result<Design> {
    if !(zeta > 0.5 && zeta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "zeta must lie in (0.5, 1), got {zeta}"
        )));
    }
    let threshold = zeta * criterion_value(&info_matrix(design, model, beta)?, crit);
    let mut current = design.clone();
    current.sort_descending();
    while current.len() > model.dim_beta() {
        let mut reduced = current.clone();
        reduced.support.pop();
        let dropped = reduced.weights.pop().unwrap();
        let keep = 1.0 - dropped;
        if !(keep > 0.0) {
            break;
        }
        for w in reduced.weights.iter_mut() {
            *w /= keep;
        }
        if criterion_value(&info_matrix(&reduced, model, beta)?, crit) > threshold {
            current = reduced;
        } else {
            break;
        }
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Family;
    use nalgebra::dvector;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn space(points: Vec<DVector<f64>>) -> DesignSpace {
        DesignSpace {
            points,
            source: crate::clustering::SpaceSource::FullSample,
        }
    }

    fn design(points: Vec<DVector<f64>>, weights: Vec<f64>) -> Design {
        Design::new(points, weights).unwrap()
    }

    #[test]
    fn info_matrix_single_point() {
        let model = ModelSpec::new(Family::Logistic, 2);
        let beta = dvector![0.3, -0.2, 0.5];
        let x = dvector![1.0, -2.0];
        let d = design(vec![x.clone()], vec![1.0]);
        let m = info_matrix(&d, &model, &beta).unwrap();
        let dense = fisher_info(&model, &beta, &x).unwrap().dense();
        assert!((m - dense).norm() < 1e-14);
    }

    #[test]
    fn info_matrix_symmetric_line_design() {
        let model = ModelSpec::new(Family::Linear, 1);
        let beta = dvector![0.0, 0.0];
        let d = design(vec![dvector![-1.0], dvector![1.0]], vec![0.5, 0.5]);
        let m = info_matrix(&d, &model, &beta).unwrap();
        assert!((m - DMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn info_matrix_matches_summation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = ModelSpec::new(Family::Logistic, 3);
        let beta = DVector::from_fn(4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let pts: Vec<DVector<f64>> = (0..3)
            .map(|_| DVector::from_fn(3, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let w = vec![0.2, 0.5, 0.3];
        let d = design(pts.clone(), w.clone());
        let m = info_matrix(&d, &model, &beta).unwrap();
        let mut oracle = DMatrix::zeros(4, 4);
        for (x, wi) in pts.iter().zip(&w) {
            oracle += fisher_info(&model, &beta, x).unwrap().dense() * *wi;
        }
        assert!((m - oracle).norm() < 1e-14);
    }

    #[test]
    fn criterion_special_values() {
        let eye3 = DMatrix::<f64>::identity(3, 3);
        assert!((criterion_value(&eye3, Criterion::A) - 1.0 / 3.0).abs() < 1e-14);
        let diag = DMatrix::from_diagonal(&dvector![4.0, 1.0]);
        assert!((criterion_value(&diag, Criterion::D) - 2.0).abs() < 1e-12);
        assert!((criterion_value(&diag, Criterion::E) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn criterion_zero_on_singular() {
        let m = DMatrix::from_diagonal(&dvector![1.0, 0.0]);
        for crit in [Criterion::A, Criterion::D, Criterion::E, Criterion::new(-2.5).unwrap()] {
            assert_eq!(criterion_value(&m, crit), 0.0);
        }
    }

    fn random_psd(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        &a * a.transpose() + DMatrix::identity(d, d) * 0.1
    }

    #[test]
    fn criterion_positively_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let m = random_psd(&mut rng, 4);
            let c = rng.gen_range(0.1..5.0);
            for q in [-1.0, 0.0, f64::NEG_INFINITY, -3.0, 0.5] {
                let crit = Criterion::new(q).unwrap();
                let lhs = criterion_value(&(&m * c), crit);
                let rhs = c * criterion_value(&m, crit);
                assert!(
                    (lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0),
                    "q = {q}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn normalized_criterion_monotone_in_q() {
        // power means of the spectrum are nondecreasing in the exponent; the
        // normalization (dim)^(-1/q) turns Psi_q into the q-power mean
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = 4.0_f64;
        for _ in 0..20 {
            let m = random_psd(&mut rng, 4);
            let qs = [f64::NEG_INFINITY, -4.0, -1.0, -0.25, 0.0, 0.25, 0.5, 0.9];
            let means: Vec<f64> = qs
                .iter()
                .map(|&q| {
                    let v = criterion_value(&m, Criterion::new(q).unwrap());
                    if q == 0.0 || q == f64::NEG_INFINITY {
                        v
                    } else {
                        v * d.powf(-1.0 / q)
                    }
                })
                .collect();
            for w in means.windows(2) {
                assert!(w[0] <= w[1] * (1.0 + 1e-12), "{means:?}");
            }
        }
    }

    #[test]
    fn d_optimal_line_design_is_two_point() {
        let model = ModelSpec::new(Family::Linear, 1);
        let beta = dvector![0.0, 0.0];
        let cands = space(vec![dvector![-1.0], dvector![0.0], dvector![1.0]]);
        let d = optimize_design(&cands, &model, &beta, Criterion::D, 1e-6, 10_000).unwrap();
        assert!(d.certified);
        // classical answer: mass 1/2 on each endpoint, nothing in the middle
        let weight_at = |x0: f64| -> f64 {
            d.support
                .iter()
                .zip(&d.weights)
                .filter(|(x, _)| x[0] == x0)
                .map(|(_, &w)| w)
                .sum()
        };
        assert!((weight_at(-1.0) - 0.5).abs() < 1e-4);
        assert!((weight_at(1.0) - 0.5).abs() < 1e-4);
        assert!(weight_at(0.0) < 1e-5);
    }

    #[test]
    fn single_candidate_gets_full_weight() {
        let model = ModelSpec::new(Family::LogisticNoIntercept, 1);
        let beta = dvector![0.5];
        let cands = space(vec![dvector![1.5]]);
        let d = optimize_design(&cands, &model, &beta, Criterion::A, 1e-4, 1000).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d.weights[0] - 1.0).abs() < 1e-12);
        assert!(d.certified);
    }

    /// Exhaustive search over the weight simplex at a fixed resolution.
    fn simplex_oracle(
        points: &[DVector<f64>],
        model: &ModelSpec,
        beta: &DVector<f64>,
        crit: Criterion,
        steps: usize,
    ) -> f64 {
        fn recurse(
            points: &[DVector<f64>],
            model: &ModelSpec,
            beta: &DVector<f64>,
            crit: Criterion,
            steps: usize,
            i: usize,
            left: usize,
            counts: &mut Vec<usize>,
            best: &mut f64,
        ) {
            if i == points.len() - 1 {
                counts.push(left);
                let w: Vec<f64> = counts.iter().map(|&c| c as f64 / steps as f64).collect();
                let d = Design::new(points.to_vec(), w).unwrap();
                let v = criterion_value(&info_matrix(&d, model, beta).unwrap(), crit);
                if v > *best {
                    *best = v;
                }
                counts.pop();
                return;
            }
            for c in 0..=left {
                counts.push(c);
                recurse(points, model, beta, crit, steps, i + 1, left - c, counts, best);
                counts.pop();
            }
        }
        let mut best = f64::NEG_INFINITY;
        recurse(
            points,
            model,
            beta,
            crit,
            steps,
            0,
            steps,
            &mut Vec::new(),
            &mut best,
        );
        best
    }

    #[test]
    fn a_optimal_matches_simplex_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let model = ModelSpec::new(Family::LogisticNoIntercept, 2);
        let beta = dvector![0.5, 0.5];
        let pts: Vec<DVector<f64>> = (0..5)
            .map(|_| DVector::from_fn(2, |_, _| 2.0 * rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let d = optimize_design(&space(pts.clone()), &model, &beta, Criterion::A, 1e-6, 10_000)
            .unwrap();
        assert!(d.certified);
        let solver_value = criterion_value(&info_matrix(&d, &model, &beta).unwrap(), Criterion::A);
        let oracle = simplex_oracle(&pts, &model, &beta, Criterion::A, 50);
        assert!(solver_value >= oracle - 1e-12, "{solver_value} < {oracle}");
        assert!((solver_value - oracle).abs() < 1e-3);
    }

    #[test]
    fn d_optimal_matches_simplex_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let model = ModelSpec::new(Family::Linear, 2);
        let beta = dvector![0.0, 0.0, 0.0];
        let pts: Vec<DVector<f64>> = (0..5)
            .map(|_| DVector::from_fn(2, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let d = optimize_design(&space(pts.clone()), &model, &beta, Criterion::D, 1e-6, 10_000)
            .unwrap();
        let solver_value = criterion_value(&info_matrix(&d, &model, &beta).unwrap(), Criterion::D);
        let oracle = simplex_oracle(&pts, &model, &beta, Criterion::D, 50);
        assert!(solver_value >= oracle - 1e-12);
        assert!((solver_value - oracle).abs() < 1e-3);
    }

    #[test]
    fn infeasible_candidates_rejected() {
        // two proportional points cannot span a 2x2 information matrix
        let model = ModelSpec::new(Family::LogisticNoIntercept, 2);
        let beta = dvector![0.1, 0.1];
        let cands = space(vec![dvector![1.0, 1.0], dvector![2.0, 2.0]]);
        assert!(matches!(
            optimize_design(&cands, &model, &beta, Criterion::A, 1e-4, 100),
            Err(Error::InfeasibleDesign)
        ));
    }

    #[test]
    fn permutation_invariant_criterion_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let model = ModelSpec::new(Family::Logistic, 2);
        let beta = dvector![0.2, 0.5, -0.3];
        let mut pts: Vec<DVector<f64>> = (0..12)
            .map(|_| DVector::from_fn(2, |_, _| 1.5 * rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let d1 = optimize_design(&space(pts.clone()), &model, &beta, Criterion::A, 1e-5, 10_000)
            .unwrap();
        pts.shuffle(&mut rng);
        let d2 = optimize_design(&space(pts), &model, &beta, Criterion::A, 1e-5, 10_000).unwrap();
        let v1 = criterion_value(&info_matrix(&d1, &model, &beta).unwrap(), Criterion::A);
        let v2 = criterion_value(&info_matrix(&d2, &model, &beta).unwrap(), Criterion::A);
        assert!((v1 - v2).abs() <= 1e-6 * v1);
        assert!(d1.certified && d2.certified);
        // existence bound on the support
        let b_max = 4 * 5 / 2 + 1;
        assert!(d1.len() <= b_max);
    }

    #[test]
    fn e_optimal_certificate_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let model = ModelSpec::new(Family::Linear, 2);
        let beta = dvector![0.0, 0.0, 0.0];
        let pts: Vec<DVector<f64>> = (0..5)
            .map(|_| DVector::from_fn(2, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let d = optimize_design(&space(pts.clone()), &model, &beta, Criterion::E, 5e-3, 10_000)
            .unwrap();
        let v = criterion_value(&info_matrix(&d, &model, &beta).unwrap(), Criterion::E);
        let oracle = simplex_oracle(&pts, &model, &beta, Criterion::E, 50);
        assert!(v >= oracle - 1e-2 * oracle, "{v} < {oracle}");
    }

    #[test]
    fn efficiency_trivial_cases() {
        let model = ModelSpec::new(Family::Linear, 1);
        let beta = dvector![0.0, 0.0];
        let reference = design(vec![dvector![-1.0], dvector![1.0]], vec![0.5, 0.5]);
        assert!(
            (efficiency(&reference, &reference, &model, &beta, Criterion::D).unwrap() - 1.0).abs()
                < 1e-14
        );
        let singular = design(vec![dvector![1.0]], vec![1.0]);
        assert_eq!(
            efficiency(&singular, &reference, &model, &beta, Criterion::D).unwrap(),
            0.0
        );
        assert!(matches!(
            efficiency(&reference, &singular, &model, &beta, Criterion::D),
            Err(Error::InvalidReference)
        ));
    }

    #[test]
    fn efficiency_matches_determinant_oracle() {
        let model = ModelSpec::new(Family::Linear, 1);
        let beta = dvector![0.0, 0.0];
        let reference = design(vec![dvector![-1.0], dvector![1.0]], vec![0.5, 0.5]);
        let three = design(
            vec![dvector![-1.0], dvector![0.0], dvector![1.0]],
            vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        );
        // M(three) = [[1, 0], [0, 2/3]], det = 2/3; M(ref) = I, det = 1
        let expected = (2.0_f64 / 3.0).sqrt();
        let eff = efficiency(&three, &reference, &model, &beta, Criterion::D).unwrap();
        assert!((eff - expected).abs() < 1e-12);
    }

    #[test]
    fn reduce_support_noop_at_dim_beta() {
        let model = ModelSpec::new(Family::Linear, 1);
        let beta = dvector![0.0, 0.0];
        let d = design(vec![dvector![-1.0], dvector![1.0]], vec![0.5, 0.5]);
        let r = reduce_support(&d, 0.95, &model, &beta, Criterion::D).unwrap();
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn reduce_support_drops_negligible_point() {
        let model = ModelSpec::new(Family::Linear, 1);
        let beta = dvector![0.0, 0.0];
        let d = design(
            vec![dvector![-1.0], dvector![0.0], dvector![1.0]],
            vec![0.499999, 0.000002, 0.499999],
        );
        let r = reduce_support(&d, 0.95, &model, &beta, Criterion::D).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.support.iter().all(|x| x[0] != 0.0));
        // oracle check: dropping the middle point keeps det essentially 1
        let v_orig = criterion_value(&info_matrix(&d, &model, &beta).unwrap(), Criterion::D);
        let v_red = criterion_value(&info_matrix(&r, &model, &beta).unwrap(), Criterion::D);
        assert!(v_red > 0.95 * v_orig);
    }

    #[test]
    fn reduce_support_keeps_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let model = ModelSpec::new(Family::Logistic, 2);
        let beta = dvector![0.2, 0.4, -0.1];
        for _ in 0..10 {
            let pts: Vec<DVector<f64>> = (0..10)
                .map(|_| DVector::from_fn(2, |_, _| 1.5 * rng.sample::<f64, _>(StandardNormal)))
                .collect();
            let opt =
                optimize_design(&space(pts), &model, &beta, Criterion::A, 1e-5, 10_000).unwrap();
            let zeta = 0.9;
            let red = reduce_support(&opt, zeta, &model, &beta, Criterion::A).unwrap();
            let eff = efficiency(&red, &opt, &model, &beta, Criterion::A).unwrap();
            if red.len() < opt.len() {
                assert!(eff > zeta, "efficiency {eff} <= {zeta}");
            }
            assert!(red.len() >= model.dim_beta().min(opt.len()));
        }
    }
}
