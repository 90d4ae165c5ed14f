//! Subsampling front end: the three-stage ODBSS pipeline, distance-based
//! allocation around the optimal-design support, and the baseline
//! subsamplers (uniform, OSMAC with mixture weights, IBOSS-style extremes).

use std::collections::HashSet;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::clustering::{
    dbscan_fit, epsilon_rule, grid_design_space, mh_design_space, training_bounds, DesignSpace,
    SpaceSource,
};
use crate::data::Dataset;
use crate::design::{optimize_design, reduce_support, Criterion, Design};
use crate::distances::{distance_row, Metric};
use crate::error::{Error, Result};
use crate::models::{fisher_info, fit_mle, sigmoid, Family, ModelSpec, ParamEstimate};

/// Upper bound on grid candidate-set size; beyond it the pipeline falls back
/// to MH sampling of the design space.
pub const GRID_BUDGET: usize = 200_000;

const MLE_TOL: f64 = 1e-8;
const MLE_MAX_ITER: usize = 200;
const SOLVER_MAX_ITER: usize = 10_000;

/// How the stage-2 candidate set is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceMode {
    Grid,
    Mh,
    /// All covariate rows form the candidate set (the ODBSS-2 variant).
    FullSample,
    /// Grid when (L + 1)^p fits the budget with L >= 4, MH otherwise.
    Auto,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StageTimings {
    pub stage1: Duration,
    pub stage2: Duration,
    pub stage3: Duration,
}

/// Output of any subsampler: selected rows plus the stage artifacts that
/// produced them.
#[derive(Debug, Clone)]
pub struct SubsampleResult {
    /// Selected row indices, sorted ascending, distinct.
    pub indices: Vec<usize>,
    /// The stage-1 pilot rows (always a subset of `indices`).
    pub initial_indices: Vec<usize>,
    /// The (reduced) optimal design, when the method computes one.
    pub design_used: Option<Design>,
    /// Per-index inverse-probability estimation weights (OSMAC), aligned
    /// with `indices`; duplicates from with-replacement draws are folded in.
    pub weights_for_estimation: Option<Vec<f64>>,
    pub timings: StageTimings,
}

/// Tuning knobs of the ODBSS pipeline. `OdbssConfig::new(k, seed)` fills in
/// the recommended defaults.
#[derive(Debug, Clone)]
pub struct OdbssConfig {
    pub k: usize,
    pub k0_fraction: f64,
    pub criterion: Criterion,
    pub metric: Metric,
    /// Efficiency threshold for support reduction; 1.0 disables reduction.
    pub zeta: f64,
    pub space_mode: SpaceMode,
    /// Grid partitions per dimension; derived from the budget when `None`.
    pub l: Option<usize>,
    /// DBSCAN radius override; the epsilon tuning rule applies when `None`.
    pub epsilon: Option<f64>,
    pub m_p: usize,
    pub solver_tol: f64,
    pub seed: u64,
}

impl OdbssConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            k0_fraction: 0.2,
            criterion: Criterion::A,
            metric: Metric::Frobenius,
            zeta: 0.95,
            space_mode: SpaceMode::Auto,
            l: None,
            epsilon: None,
            m_p: 5,
            solver_tol: 1e-4,
            seed,
        }
    }

    fn validate(&self, model: &ModelSpec) -> Result<usize> {
        if !(self.k0_fraction > 0.0 && self.k0_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "k0 fraction must lie in (0, 1), got {}",
                self.k0_fraction
            )));
        }
        if !(self.zeta > 0.5 && self.zeta <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "zeta must lie in (0.5, 1], got {}",
                self.zeta
            )));
        }
        let k0 = (self.k0_fraction * self.k as f64).round() as usize;
        if k0 < model.dim_beta() + 1 {
            return Err(Error::InvalidArgument(format!(
                "pilot size k0 = {k0} too small; need at least dim_beta + 1 = {}",
                model.dim_beta() + 1
            )));
        }
        if k0 >= self.k {
            return Err(Error::InvalidArgument(format!(
                "pilot size k0 = {k0} must be smaller than k = {}",
                self.k
            )));
        }
        Ok(k0)
    }
}

/// Uniform subsample of `k` distinct indices from `0..n`, sorted.
pub fn uniform_subsample(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {k} distinct indices from {n} rows"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Distance-based allocation (the final pipeline stage): walk the support
/// points in descending-weight order, give point i the floor(w_i * k1)
/// closest unclaimed rows under the matrix distance, then top the remainder
/// up by one row per support in largest-fractional-part order so exactly
/// `k1` indices return. Ties break toward the lower row index; `_seed` is
/// accepted for interface uniformity but the procedure is deterministic.
pub fn allocate(
    dataset: &Dataset,
    design: &Design,
    metric: Metric,
    model: &ModelSpec,
    beta: &DVector<f64>,
    k1: usize,
    excluded: &HashSet<usize>,
    _seed: u64,
) -> Result<Vec<usize>> {
    let n = dataset.n();
    if design.is_empty() {
        return Err(Error::InvalidArgument("design must be nonempty".into()));
    }
    let available = n - excluded.iter().filter(|&&i| i < n).count();
    if k1 > available {
        return Err(Error::Shortfall {
            requested: k1,
            available,
        });
    }

    let b = design.len();
    // per-support row orderings by (distance, row index)
    let mut orders: Vec<Vec<usize>> = Vec::with_capacity(b);
    for x in &design.support {
        let info = fisher_info(model, beta, x)?;
        let d = distance_row(metric, &info, dataset, model, beta)?;
        let mut order: Vec<usize> = (0..n).filter(|i| !excluded.contains(i)).collect();
        order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap().then(i.cmp(&j)));
        orders.push(order);
    }

    let mut taken = vec![false; n];
    let mut cursors = vec![0usize; b];
    let mut out = Vec::with_capacity(k1);
    let claim = |support: usize,
                     count: usize,
                     taken: &mut Vec<bool>,
                     cursors: &mut Vec<usize>,
                     out: &mut Vec<usize>| {
        let order = &orders[support];
        let mut claimed = 0;
        while claimed < count && cursors[support] < order.len() {
            let row = order[cursors[support]];
            cursors[support] += 1;
            if !taken[row] {
                taken[row] = true;
                out.push(row);
                claimed += 1;
            }
        }
    };

    let quotas: Vec<usize> = design
        .weights
        .iter()
        .map(|w| (w * k1 as f64).floor() as usize)
        .collect();
    for i in 0..b {
        claim(i, quotas[i], &mut taken, &mut cursors, &mut out);
    }

    // largest-remainder top-up, one extra row per support point
    let mut frac_order: Vec<usize> = (0..b).collect();
    frac_order.sort_by(|&i, &j| {
        let fi = design.weights[i] * k1 as f64 - quotas[i] as f64;
        let fj = design.weights[j] * k1 as f64 - quotas[j] as f64;
        fj.partial_cmp(&fi).unwrap().then(i.cmp(&j))
    });
    let mut fi = 0;
    while out.len() < k1 {
        let support = frac_order[fi % b];
        claim(support, 1, &mut taken, &mut cursors, &mut out);
        fi += 1;
        if fi > b * (k1 + 1) {
            break; // all orderings exhausted
        }
    }
    if out.len() < k1 {
        return Err(Error::Shortfall {
            requested: k1,
            available: out.len(),
        });
    }
    out.sort_unstable();
    Ok(out)
}

fn pilot_fit(model: &ModelSpec, pilot: &Dataset, k0: usize) -> Result<ParamEstimate> {
    fit_mle(model, pilot, None, MLE_TOL, MLE_MAX_ITER).map_err(|e| match e {
        Error::Separation => Error::InvalidArgument(format!(
            "separation in the stage-1 pilot fit (k0 = {k0}); increase k or the k0 fraction"
        )),
        other => other,
    })
}

/// Largest grid resolution L with (L + 1)^p within the candidate budget.
fn derive_grid_l(p: usize, budget: usize) -> usize {
    let per_dim = (budget as f64).powf(1.0 / p as f64).floor() as usize;
    per_dim.saturating_sub(1)
}

/// The full three-stage pipeline: uniform pilot with clustering and a pilot
/// MLE, an approximate optimal design on the estimated design space with
/// support reduction, and distance-based allocation of the remaining
/// k - k0 rows.
pub fn odbss(dataset: &Dataset, model: &ModelSpec, config: &OdbssConfig) -> Result<SubsampleResult> {
    let n = dataset.n();
    let k0 = config.validate(model)?;
    if config.k >= n {
        return Err(Error::InvalidArgument(format!(
            "subsample size k = {} must be smaller than n = {n}",
            config.k
        )));
    }
    let k1 = config.k - k0;

    // stage 1: pilot sample, design-space clustering, pilot estimate
    let t1 = Instant::now();
    let initial = uniform_subsample(n, k0, config.seed)?;
    let pilot = dataset.select(&initial);
    let epsilon = match config.epsilon {
        Some(e) => e,
        None => epsilon_rule(pilot.covariates())?,
    };
    let cluster = dbscan_fit(pilot.covariates().clone(), epsilon, config.m_p)?;
    let estimate = pilot_fit(model, &pilot, k0)?;
    let beta = estimate.beta.clone();
    let stage1 = t1.elapsed();

    // stage 2: candidate design space, optimal design, support reduction
    let t2 = Instant::now();
    let space = match config.space_mode {
        SpaceMode::FullSample => DesignSpace {
            points: (0..n).map(|i| dataset.row(i)).collect(),
            source: SpaceSource::FullSample,
        },
        SpaceMode::Mh => mh_design_space(&cluster, config.seed ^ 0x6d68, None)?,
        SpaceMode::Grid => {
            let l = config.l.unwrap_or_else(|| derive_grid_l(model.p, GRID_BUDGET));
            let bounds = training_bounds(&cluster.points);
            grid_design_space(&cluster, l, &bounds, GRID_BUDGET)?
        }
        SpaceMode::Auto => {
            let l = config.l.unwrap_or_else(|| derive_grid_l(model.p, GRID_BUDGET));
            if l < 4 {
                mh_design_space(&cluster, config.seed ^ 0x6d68, None)?
            } else {
                let bounds = training_bounds(&cluster.points);
                grid_design_space(&cluster, l, &bounds, GRID_BUDGET)?
            }
        }
    };
    if space.points.is_empty() {
        return Err(Error::DesignSpaceEmpty);
    }
    let full = optimize_design(
        &space,
        model,
        &beta,
        config.criterion,
        config.solver_tol,
        SOLVER_MAX_ITER,
    )?;
    let design = if config.zeta < 1.0 {
        reduce_support(&full, config.zeta, model, &beta, config.criterion)?
    } else {
        full
    };
    let stage2 = t2.elapsed();

    // stage 3: allocate k1 rows around the support, stage-1 rows excluded
    let t3 = Instant::now();
    let excluded: HashSet<usize> = initial.iter().copied().collect();
    let allocated = allocate(
        dataset,
        &design,
        config.metric,
        model,
        &beta,
        k1,
        &excluded,
        config.seed,
    )?;
    let stage3 = t3.elapsed();

    debug_assert!(allocated.iter().all(|i| !excluded.contains(i)));
    let mut indices = initial.clone();
    indices.extend_from_slice(&allocated);
    indices.sort_unstable();

    Ok(SubsampleResult {
        indices,
        initial_indices: initial,
        design_used: Some(design),
        weights_for_estimation: None,
        timings: StageTimings {
            stage1,
            stage2,
            stage3,
        },
    })
}

/// Normalized OSMAC sampling probabilities at a given parameter value:
/// pi_i proportional to |y_i - p_i(beta)| times ||z_i|| (mVc) or
/// ||M_X^{-1} z_i|| (mMSE), where M_X is the average information of the
/// pilot sample (the full dataset when no pilot is given).
pub fn osmac_probabilities(
    dataset: &Dataset,
    model: &ModelSpec,
    beta: &DVector<f64>,
    pilot: Option<&Dataset>,
    variant: OsmacVariant,
) -> Result<Vec<f64>> {
    let n = dataset.n();
    let minv = match variant {
        OsmacVariant::MVc => None,
        OsmacVariant::MMse => {
            let d = model.dim_beta();
            let base = pilot.unwrap_or(dataset);
            let mut m = DMatrix::zeros(d, d);
            for i in 0..base.n() {
                let info = fisher_info(model, beta, &base.row(i))?;
                for phi in &info.factors {
                    m.syger(1.0 / base.n() as f64, phi, phi, 1.0);
                }
            }
            m.fill_upper_triangle_with_lower_triangle();
            Some(m.try_inverse().ok_or(Error::DegenerateData(
                "pilot information matrix is singular".into(),
            ))?)
        }
    };
    let mut pi = Vec::with_capacity(n);
    for i in 0..n {
        let x = dataset.row(i);
        let z = model.reg_vector(&x);
        let resid = (dataset.responses()[i] - sigmoid(z.dot(beta))).abs();
        let norm = match &minv {
            None => z.norm(),
            Some(mi) => (mi * &z).norm(),
        };
        pi.push(resid * norm);
    }
    let total: f64 = pi.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateData(
            "all sampling probabilities are zero".into(),
        ));
    }
    for p in pi.iter_mut() {
        *p /= total;
    }
    Ok(pi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsmacVariant {
    /// pi_i proportional to |y_i - p_i| * ||z_i||.
    MVc,
    /// pi_i proportional to |y_i - p_i| * ||M_X^{-1} z_i||.
    MMse,
}

/// OSMAC two-step subsampling with mixture estimation weights: a uniform
/// pilot of size `k0` fits beta, the remaining k - k0 draws are taken with
/// replacement from the variant's "optimal" probabilities, and every
/// selected row gets the inverse mixture probability (times its draw
/// multiplicity) as estimation weight. Duplicate draws are folded, so the
/// returned index set can be smaller than k.
pub fn osmac_subsample(
    dataset: &Dataset,
    model: &ModelSpec,
    k: usize,
    k0: usize,
    variant: OsmacVariant,
    seed: u64,
) -> Result<SubsampleResult> {
    if !matches!(model.family, Family::Logistic | Family::LogisticNoIntercept) {
        return Err(Error::InvalidArgument(
            "OSMAC applies to the logistic families".into(),
        ));
    }
    let n = dataset.n();
    if k0 > k || k > n {
        return Err(Error::InvalidArgument(format!(
            "need k0 <= k <= n, got k0 = {k0}, k = {k}, n = {n}"
        )));
    }

    let t1 = Instant::now();
    let initial = uniform_subsample(n, k0, seed)?;
    let pilot = dataset.select(&initial);
    let beta = pilot_fit(model, &pilot, k0)?.beta;
    let stage1 = t1.elapsed();

    let t2 = Instant::now();
    let pi = osmac_probabilities(dataset, model, &beta, Some(&pilot), variant)?;

    let k1 = k - k0;
    let mut multiplicity: Vec<usize> = vec![0; n];
    for &i in &initial {
        multiplicity[i] += 1;
    }
    if k1 > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6f73);
        let dist = WeightedIndex::new(&pi)
            .map_err(|e| Error::InvalidArgument(format!("bad sampling weights: {e}")))?;
        for _ in 0..k1 {
            multiplicity[dist.sample(&mut rng)] += 1;
        }
    }

    let indices: Vec<usize> = (0..n).filter(|&i| multiplicity[i] > 0).collect();
    let weights: Vec<f64> = indices
        .iter()
        .map(|&i| {
            let mixture = (k0 as f64 / k as f64) / n as f64 + (k1 as f64 / k as f64) * pi[i];
            multiplicity[i] as f64 / mixture
        })
        .collect();
    let stage2 = t2.elapsed();

    Ok(SubsampleResult {
        indices,
        initial_indices: initial,
        design_used: None,
        weights_for_estimation: Some(weights),
        timings: StageTimings {
            stage1,
            stage2,
            stage3: Duration::ZERO,
        },
    })
}

/// IBOSS-style deterministic extremes: cycling over the covariate
/// dimensions, take the floor(k / 2p) smallest and largest not-yet-taken
/// values per dimension, then keep cycling one row at a time until exactly
/// `k` rows are selected. The logistic variant applies the rule to
/// pilot-standardized columns scaled by the root variance function, so rows
/// that are both extreme and informative under the pilot estimate win.
pub fn iboss_subsample(
    dataset: &Dataset,
    model: &ModelSpec,
    k: usize,
    seed: u64,
) -> Result<SubsampleResult> {
    let n = dataset.n();
    let p = dataset.p();
    if k < 2 * p {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be at least 2p = {}",
            2 * p
        )));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "cannot select {k} of {n} rows"
        )));
    }

    let t1 = Instant::now();
    let logistic = matches!(
        model.family,
        Family::Logistic | Family::LogisticNoIntercept
    );
    let (scores, initial) = if logistic {
        // pilot standardization: center/scale columns and weight each row by
        // the root variance function at the pilot estimate
        let k0 = ((0.2 * k as f64).round() as usize).max(model.dim_beta() + 1);
        let initial = uniform_subsample(n, k0.min(n), seed)?;
        let pilot = dataset.select(&initial);
        let beta = pilot_fit(model, &pilot, k0)?.beta;
        let mut scores = DMatrix::zeros(n, p);
        let (means, sds) = column_moments(pilot.covariates());
        for i in 0..n {
            let x = dataset.row(i);
            let z = model.reg_vector(&x);
            let phi = crate::models::logistic_phi(z.dot(&beta));
            for j in 0..p {
                scores[(i, j)] = phi * (x[j] - means[j]) / sds[j];
            }
        }
        (scores, initial)
    } else {
        (dataset.covariates().clone(), Vec::new())
    };
    let stage1 = t1.elapsed();

    let t2 = Instant::now();
    let r = k / (2 * p);
    let mut taken = vec![false; n];
    let mut selected = Vec::with_capacity(k);
    // per-dimension orderings, reused by the top-up pass
    let orders: Vec<Vec<usize>> = (0..p)
        .map(|j| {
            let mut o: Vec<usize> = (0..n).collect();
            o.sort_by(|&a, &b| scores[(a, j)].partial_cmp(&scores[(b, j)]).unwrap().then(a.cmp(&b)));
            o
        })
        .collect();
    let take_extreme = |j: usize, low: bool, taken: &mut Vec<bool>, selected: &mut Vec<usize>| {
        let order = &orders[j];
        let it: Box<dyn Iterator<Item = &usize>> = if low {
            Box::new(order.iter())
        } else {
            Box::new(order.iter().rev())
        };
        for &row in it {
            if !taken[row] {
                taken[row] = true;
                selected.push(row);
                return true;
            }
        }
        false
    };
    for j in 0..p {
        for _ in 0..r {
            take_extreme(j, true, &mut taken, &mut selected);
            take_extreme(j, false, &mut taken, &mut selected);
        }
    }
    let mut side = true;
    let mut j = 0;
    while selected.len() < k {
        take_extreme(j, side, &mut taken, &mut selected);
        side = !side;
        if side {
            j = (j + 1) % p;
        }
    }
    selected.truncate(k);
    selected.sort_unstable();
    let stage2 = t2.elapsed();

    let initial: Vec<usize> = initial.into_iter().filter(|i| taken[*i]).collect();
    Ok(SubsampleResult {
        indices: selected,
        initial_indices: initial,
        design_used: None,
        weights_for_estimation: None,
        timings: StageTimings {
            stage1,
            stage2,
            stage3: Duration::ZERO,
        },
    })
}

fn column_moments(m: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = m.nrows() as f64;
    (0..m.ncols())
        .map(|j| {
            let col = m.column(j);
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            (mean, var.sqrt().max(1e-12))
        })
        .unzip()
}
