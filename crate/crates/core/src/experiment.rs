//! Monte-Carlo experiment harness: runs subsampling methods over seeded
//! replicates, records squared estimation errors and stage timings as CSV
//! rows, and aggregates them into plot-ready summaries.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::fit_mle;
use crate::sampler::{
    iboss_subsample, odbss, osmac_subsample, uniform_subsample, OdbssConfig, OsmacVariant,
    SpaceMode, StageTimings, SubsampleResult,
};
use crate::scenario::{sample_covariates, sample_responses, Scenario};

const FIT_TOL: f64 = 1e-8;
const FIT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Odbss,
    Odbss2,
    Uniform,
    Iboss,
    OsmacMvc,
    OsmacMmse,
    Full,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Odbss => "odbss",
            Method::Odbss2 => "odbss2",
            Method::Uniform => "uniform",
            Method::Iboss => "iboss",
            Method::OsmacMvc => "osmac-mvc",
            Method::OsmacMmse => "osmac-mmse",
            Method::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "odbss" => Method::Odbss,
            "odbss2" => Method::Odbss2,
            "uniform" => Method::Uniform,
            "iboss" => Method::Iboss,
            "osmac-mvc" => Method::OsmacMvc,
            "osmac-mmse" => Method::OsmacMmse,
            "full" => Method::Full,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown method '{other}'"
                )))
            }
        })
    }
}

/// One benchmark measurement (or failure) in the fixed CSV schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub method: String,
    pub k: usize,
    pub rep: usize,
    pub mse: Option<f64>,
    pub support_count: Option<usize>,
    pub t_stage1_ms: f64,
    pub t_stage2_ms: f64,
    pub t_stage3_ms: f64,
    pub error: Option<String>,
}

/// Aggregated view of `ResultRow`s sharing a scenario, method, and k.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub method: String,
    pub k: usize,
    pub replicates: usize,
    pub failures: usize,
    pub mean_mse: Option<f64>,
    pub se_mse: Option<f64>,
    pub mean_support_count: Option<f64>,
    pub mean_t_stage1_ms: f64,
    pub mean_t_stage2_ms: f64,
    pub mean_t_stage3_ms: f64,
}

/// Experiment settings shared across all scenarios of a run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub ks: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    /// Template for the ODBSS methods; `k` and `seed` are overwritten per
    /// run, `space_mode` per method.
    pub odbss: OdbssConfig,
}

impl ExperimentConfig {
    pub fn new(methods: Vec<Method>, ks: Vec<usize>, replicates: usize, seed: u64) -> Self {
        Self {
            methods,
            ks,
            replicates,
            seed,
            odbss: OdbssConfig::new(0, 0),
        }
    }
}

fn split_seed(master: u64, scenario_idx: usize, rep: usize, stream: u64) -> u64 {
    // SplitMix64-style mixing keeps the streams decorrelated
    let mut z = master
        .wrapping_add((scenario_idx as u64).wrapping_mul(0x9e3779b97f4a7c15))
        .wrapping_add((rep as u64).wrapping_mul(0xbf58476d1ce4e5b9))
        .wrapping_add(stream.wrapping_mul(0x94d049bb133111eb));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn timings_ms(t: &StageTimings) -> (f64, f64, f64) {
    (
        t.stage1.as_secs_f64() * 1e3,
        t.stage2.as_secs_f64() * 1e3,
        t.stage3.as_secs_f64() * 1e3,
    )
}

fn squared_error(beta_true: &DVector<f64>, beta_hat: &DVector<f64>) -> f64 {
    (beta_true - beta_hat).norm_squared()
}

fn fit_on_subsample(
    scenario: &Scenario,
    data: &Dataset,
    result: &SubsampleResult,
) -> Result<f64> {
    let sub = data.select(&result.indices);
    let weights = result
        .weights_for_estimation
        .as_ref()
        .map(|w| DVector::from_vec(w.clone()));
    let est = fit_mle(&scenario.model, &sub, weights.as_ref(), FIT_TOL, FIT_MAX_ITER)?;
    Ok(squared_error(&scenario.beta, &est.beta))
}

fn run_method(
    scenario: &Scenario,
    data: &Dataset,
    method: Method,
    k: usize,
    seed: u64,
    template: &OdbssConfig,
) -> Result<(f64, Option<usize>, StageTimings)> {
    match method {
        Method::Full => {
            let t = std::time::Instant::now();
            let est = fit_mle(&scenario.model, data, None, FIT_TOL, FIT_MAX_ITER)?;
            let mut timings = StageTimings::default();
            timings.stage1 = t.elapsed();
            Ok((squared_error(&scenario.beta, &est.beta), None, timings))
        }
        Method::Uniform => {
            let t = std::time::Instant::now();
            let indices = uniform_subsample(data.n(), k, seed)?;
            let mut timings = StageTimings::default();
            timings.stage1 = t.elapsed();
            let result = SubsampleResult {
                indices,
                initial_indices: Vec::new(),
                design_used: None,
                weights_for_estimation: None,
                timings,
            };
            Ok((fit_on_subsample(scenario, data, &result)?, None, timings))
        }
        Method::Iboss => {
            let result = iboss_subsample(data, &scenario.model, k, seed)?;
            let mse = fit_on_subsample(scenario, data, &result)?;
            Ok((mse, None, result.timings))
        }
        Method::OsmacMvc | Method::OsmacMmse => {
            let variant = if method == Method::OsmacMvc {
                OsmacVariant::MVc
            } else {
                OsmacVariant::MMse
            };
            let k0 = ((0.2 * k as f64).round() as usize).max(scenario.model.dim_beta() + 1);
            let result = osmac_subsample(data, &scenario.model, k, k0, variant, seed)?;
            let mse = fit_on_subsample(scenario, data, &result)?;
            Ok((mse, None, result.timings))
        }
        Method::Odbss | Method::Odbss2 => {
            let mut config = template.clone();
            config.k = k;
            config.seed = seed;
            if method == Method::Odbss2 {
                config.space_mode = SpaceMode::FullSample;
            }
            let result = odbss(data, &scenario.model, &config)?;
            let mse = fit_on_subsample(scenario, data, &result)?;
            let support = result.design_used.as_ref().map(|d| d.len());
            Ok((mse, support, result.timings))
        }
    }
}

/// Runs every (scenario, replicate, method, k) cell. All methods of a
/// replicate share one generated dataset; failures become rows with the
/// error column set. Rows are streamed to `out` (when given) as they
/// complete.
pub fn run_experiment(
    scenarios: &[Scenario],
    config: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<Vec<ResultRow>> {
    let mut writer = match out {
        Some(path) => Some(csv_writer(path)?),
        None => None,
    };
    let mut rows = Vec::new();
    for (si, scenario) in scenarios.iter().enumerate() {
        for rep in 0..config.replicates {
            let data_seed = split_seed(config.seed ^ scenario.seed, si, rep, 0);
            let x = sample_covariates(scenario, scenario.n, data_seed)?;
            let y = sample_responses(scenario, &x, data_seed ^ 0x7265)?;
            let data = Dataset::new(x, y)?;
            for (mi, &method) in config.methods.iter().enumerate() {
                for &k in &config.ks {
                    let method_seed = split_seed(config.seed, si, rep, 1 + mi as u64);
                    let row = match run_method(scenario, &data, method, k, method_seed, &config.odbss)
                    {
                        Ok((mse, support, timings)) => {
                            let (t1, t2, t3) = timings_ms(&timings);
                            ResultRow {
                                scenario: scenario.id.clone(),
                                method: method.name().to_string(),
                                k,
                                rep,
                                mse: Some(mse),
                                support_count: support,
                                t_stage1_ms: t1,
                                t_stage2_ms: t2,
                                t_stage3_ms: t3,
                                error: None,
                            }
                        }
                        Err(e) => ResultRow {
                            scenario: scenario.id.clone(),
                            method: method.name().to_string(),
                            k,
                            rep,
                            mse: None,
                            support_count: None,
                            t_stage1_ms: 0.0,
                            t_stage2_ms: 0.0,
                            t_stage3_ms: 0.0,
                            error: Some(e.to_string()),
                        },
                    };
                    if let Some(w) = writer.as_mut() {
                        w.serialize(&row)
                            .map_err(|e| Error::InvalidArgument(format!("csv write: {e}")))?;
                        w.flush()
                            .map_err(|e| Error::InvalidArgument(format!("csv flush: {e}")))?;
                    }
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot create {}: {e}", path.display())))?;
    Ok(csv::Writer::from_writer(file))
}

/// Writes rows to a CSV file in the fixed schema.
pub fn write_rows(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    for row in rows {
        w.serialize(row)
            .map_err(|e| Error::InvalidArgument(format!("csv write: {e}")))?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv flush: {e}")))
}

/// Reads rows from a CSV file in the fixed schema.
pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::InvalidArgument(format!("csv parse: {e}"))))
        .collect()
}

/// Groups rows by (scenario, method, k) and reports the Monte-Carlo mean,
/// standard error, and mean timings. Failed rows are counted but excluded
/// from the averages; a single observation gets SE = 0.
pub fn summarize(rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no rows to summarize".into()));
    }
    let mut keys: Vec<(String, String, usize)> = Vec::new();
    for row in rows {
        let key = (row.scenario.clone(), row.method.clone(), row.k);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut out = Vec::with_capacity(keys.len());
    for (scenario, method, k) in keys {
        let group: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| r.scenario == scenario && r.method == method && r.k == k)
            .collect();
        let ok: Vec<&&ResultRow> = group.iter().filter(|r| r.error.is_none()).collect();
        let failures = group.len() - ok.len();
        let mses: Vec<f64> = ok.iter().filter_map(|r| r.mse).collect();
        let (mean_mse, se_mse) = if mses.is_empty() {
            (None, None)
        } else {
            let m = mses.len() as f64;
            let mean = mses.iter().sum::<f64>() / m;
            let se = if mses.len() < 2 {
                0.0
            } else {
                let var = mses.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
                (var / m).sqrt()
            };
            (Some(mean), Some(se))
        };
        let supports: Vec<f64> = ok
            .iter()
            .filter_map(|r| r.support_count.map(|s| s as f64))
            .collect();
        let mean_support_count = if supports.is_empty() {
            None
        } else {
            Some(supports.iter().sum::<f64>() / supports.len() as f64)
        };
        let avg = |f: fn(&ResultRow) -> f64| {
            if ok.is_empty() {
                0.0
            } else {
                ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
            }
        };
        out.push(SummaryRow {
            scenario,
            method,
            k,
            replicates: group.len(),
            failures,
            mean_mse,
            se_mse,
            mean_support_count,
            mean_t_stage1_ms: avg(|r| r.t_stage1_ms),
            mean_t_stage2_ms: avg(|r| r.t_stage2_ms),
            mean_t_stage3_ms: avg(|r| r.t_stage3_ms),
        });
    }
    Ok(out)
}

/// Writes summaries as plot-ready long-format CSV.
pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot create {}: {e}", path.display())))?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row)
            .map_err(|e| Error::InvalidArgument(format!("csv write: {e}")))?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv flush: {e}")))
}

/// Writes a subsample result in the CLI contract: one 0-based index per
/// line, plus a JSON sidecar with the design and timings.
pub fn write_subsample(result: &SubsampleResult, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot create {}: {e}", path.display())))?;
    for i in &result.indices {
        writeln!(file, "{i}").map_err(|e| Error::InvalidArgument(format!("write: {e}")))?;
    }
    let sidecar = path.with_extension("json");
    let json = subsample_json(result);
    std::fs::write(&sidecar, serde_json::to_string_pretty(&json).unwrap())
        .map_err(|e| Error::InvalidArgument(format!("cannot write sidecar: {e}")))
}

/// JSON view of the stage artifacts (support points, weights, timings).
pub fn subsample_json(result: &SubsampleResult) -> serde_json::Value {
    let design = result.design_used.as_ref().map(|d| {
        serde_json::json!({
            "support": d.support.iter().map(|x| x.iter().cloned().collect::<Vec<f64>>()).collect::<Vec<_>>(),
            "weights": d.weights,
            "certified": d.certified,
        })
    });
    serde_json::json!({
        "k": result.indices.len(),
        "k0": result.initial_indices.len(),
        "design": design,
        "weights_for_estimation": result.weights_for_estimation,
        "timings_ms": {
            "stage1": result.timings.stage1.as_secs_f64() * 1e3,
            "stage2": result.timings.stage2.as_secs_f64() * 1e3,
            "stage3": result.timings.stage3.as_secs_f64() * 1e3,
        },
    })
}
