//! Benchmark configuration JSON, mirroring the scenario and experiment
//! parameters.
//!
//! ```json
//! {
//!   "scenarios": [{
//!     "id": "s1-normal", "family": "logistic-no-intercept",
//!     "p": 7, "n": 100000, "beta": 0.5,
//!     "law": {"type": "normal"}, "sigma": "s1", "center": 0.0, "seed": 1
//!   }],
//!   "methods": ["odbss", "uniform"],
//!   "ks": [1250, 2500, 5000],
//!   "replicates": 20,
//!   "seed": 42,
//!   "odbss": {"zeta": 0.95, "metric": "frobenius", "space": "auto"}
//! }
//! ```

use std::path::Path;

use nalgebra::DVector;
use serde::Deserialize;

use odbss::design::Criterion;
use odbss::distances::Metric;
use odbss::experiment::{ExperimentConfig, Method};
use odbss::models::{Family, ModelSpec};
use odbss::sampler::SpaceMode;
use odbss::scenario::{CovariateLaw, Scenario, SigmaKind};
use odbss::{Error, Result};

/// A scalar that broadcasts to a vector, or an explicit vector.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum VecOrScalar {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl VecOrScalar {
    fn expand(&self, len: usize) -> DVector<f64> {
        match self {
            VecOrScalar::Scalar(v) => DVector::from_element(len, *v),
            VecOrScalar::Vector(v) => DVector::from_vec(v.clone()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum LawSpec {
    Normal,
    T { kappa: f64 },
    SkewNormal { alpha: VecOrScalar },
    SkewT { alpha: VecOrScalar, kappa: f64 },
    NormalMixture { mu1: VecOrScalar, mu2: VecOrScalar },
}

#[derive(Debug, Clone, Deserialize)]
pub struct ScenarioSpec {
    pub id: String,
    pub family: String,
    pub p: usize,
    pub n: usize,
    pub beta: Option<VecOrScalar>,
    #[serde(default = "default_law")]
    pub law: LawSpec,
    #[serde(default = "default_sigma")]
    pub sigma: String,
    pub center: Option<VecOrScalar>,
    #[serde(default)]
    pub seed: u64,
}

fn default_law() -> LawSpec {
    LawSpec::Normal
}

fn default_sigma() -> String {
    "s1".into()
}

#[derive(Debug, Clone, Deserialize, Default)]
pub struct OdbssSpec {
    pub k0_fraction: Option<f64>,
    pub criterion: Option<String>,
    pub metric: Option<String>,
    pub zeta: Option<f64>,
    pub space: Option<String>,
    pub l: Option<usize>,
    pub epsilon: Option<f64>,
    pub m_p: Option<usize>,
    pub solver_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct BenchSpec {
    pub scenarios: Vec<ScenarioSpec>,
    pub methods: Vec<String>,
    pub ks: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub odbss: OdbssSpec,
}

fn default_replicates() -> usize {
    100
}

pub fn load(path: &Path) -> Result<BenchSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidArgument(format!("bad config {}: {e}", path.display())))
}

fn parse_family(s: &str) -> Result<Family> {
    Ok(match s {
        "logistic" => Family::Logistic,
        "logistic-no-intercept" => Family::LogisticNoIntercept,
        "linear" => Family::Linear,
        "hetero" => Family::HeteroLogVar,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown model family '{other}'"
            )))
        }
    })
}

fn parse_sigma(s: &str) -> Result<SigmaKind> {
    Ok(match s {
        "s1" => SigmaKind::S1,
        "s2" => SigmaKind::S2,
        "s3" => SigmaKind::S3,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown covariance id '{other}' (use s1, s2, or s3)"
            )))
        }
    })
}

fn parse_metric(s: &str) -> Result<Metric> {
    Ok(match s {
        "frobenius" => Metric::Frobenius,
        "sqrt" => Metric::SquareRoot,
        "procrustes" => Metric::Procrustes,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown metric '{other}'"
            )))
        }
    })
}

fn parse_criterion(s: &str) -> Result<Criterion> {
    Ok(match s {
        "A" | "a" => Criterion::A,
        "D" | "d" => Criterion::D,
        "E" | "e" => Criterion::E,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown criterion '{other}'"
            )))
        }
    })
}

fn parse_space(s: &str) -> Result<SpaceMode> {
    Ok(match s {
        "grid" => SpaceMode::Grid,
        "mh" => SpaceMode::Mh,
        "full" => SpaceMode::FullSample,
        "auto" => SpaceMode::Auto,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown space mode '{other}'"
            )))
        }
    })
}

impl BenchSpec {
    pub fn scenarios(&self) -> Result<Vec<Scenario>> {
        self.scenarios
            .iter()
            .map(|s| {
                let family = parse_family(&s.family)?;
                let model = ModelSpec::new(family, s.p);
                let default_beta = match family {
                    Family::HeteroLogVar => 0.25,
                    _ => 0.5,
                };
                let beta = s
                    .beta
                    .clone()
                    .unwrap_or(VecOrScalar::Scalar(default_beta))
                    .expand(model.dim_beta());
                if beta.len() != model.dim_beta() {
                    return Err(Error::DimensionMismatch {
                        expected: model.dim_beta(),
                        got: beta.len(),
                    });
                }
                let law = match &s.law {
                    LawSpec::Normal => CovariateLaw::Normal,
                    LawSpec::T { kappa } => CovariateLaw::T { kappa: *kappa },
                    LawSpec::SkewNormal { alpha } => CovariateLaw::SkewNormal {
                        alpha: alpha.expand(s.p),
                    },
                    LawSpec::SkewT { alpha, kappa } => CovariateLaw::SkewT {
                        alpha: alpha.expand(s.p),
                        kappa: *kappa,
                    },
                    LawSpec::NormalMixture { mu1, mu2 } => CovariateLaw::NormalMixture {
                        mu1: mu1.expand(s.p),
                        mu2: mu2.expand(s.p),
                    },
                };
                Ok(Scenario {
                    id: s.id.clone(),
                    model,
                    beta,
                    n: s.n,
                    law,
                    sigma: parse_sigma(&s.sigma)?,
                    center: s
                        .center
                        .clone()
                        .unwrap_or(VecOrScalar::Scalar(0.0))
                        .expand(s.p),
                    seed: s.seed,
                })
            })
            .collect()
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let methods: Vec<Method> = self
            .methods
            .iter()
            .map(|m| Method::parse(m))
            .collect::<Result<_>>()?;
        let mut config = ExperimentConfig::new(methods, self.ks.clone(), self.replicates, self.seed);
        let o = &self.odbss;
        let template = &mut config.odbss;
        if let Some(v) = o.k0_fraction {
            template.k0_fraction = v;
        }
        if let Some(c) = &o.criterion {
            template.criterion = parse_criterion(c)?;
        }
        if let Some(m) = &o.metric {
            template.metric = parse_metric(m)?;
        }
        if let Some(z) = o.zeta {
            template.zeta = z;
        }
        if let Some(s) = &o.space {
            template.space_mode = parse_space(s)?;
        }
        template.l = o.l;
        template.epsilon = o.epsilon;
        if let Some(m) = o.m_p {
            template.m_p = m;
        }
        if let Some(t) = o.solver_tol {
            template.solver_tol = t;
        }
        Ok(config)
    }
}
