//! JSON experiment configuration.
//!
//! Every field has a default, so `{}` is a valid config for each experiment
//! kind and reproduces the desk-scale synthetic setups. Unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};
use crate::missing::MissingModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Denoise,
    Complete,
    Continuous,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Denoise => "denoise",
            ExperimentKind::Complete => "complete",
            ExperimentKind::Continuous => "continuous",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Framework {
    #[serde(rename = "GRP")]
    Grp,
    #[serde(rename = "TV")]
    Tv,
    #[serde(rename = "GSP")]
    Gsp,
    #[serde(rename = "TS")]
    Ts,
}

impl Framework {
    pub fn label(self) -> &'static str {
        match self {
            Framework::Grp => "GRP",
            Framework::Tv => "TV",
            Framework::Gsp => "GSP",
            Framework::Ts => "TS",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    /// Gaussian-weighted k-NN graph on vertex coordinates (`id,x,y` CSV), or
    /// on uniform random points in the unit square when no file is given.
    Knn {
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default)]
        coords: Option<PathBuf>,
    },
    ErdosRenyi {
        #[serde(default = "default_edge_probability")]
        p: f64,
        #[serde(default = "default_true")]
        connected: bool,
    },
    EdgeList {
        path: PathBuf,
    },
    /// Unit-weight edges between vertices whose training series have
    /// absolute Pearson correlation above `threshold`.
    Correlation {
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
}

fn default_k() -> usize {
    5
}

fn default_edge_probability() -> f64 {
    0.5
}

fn default_true() -> bool {
    true
}

fn default_threshold() -> f64 {
    0.75
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsvSchema {
    /// `sample,vertex,coord,value`
    #[default]
    Long,
    /// `sample,vertex,c0,c1,...`
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    #[default]
    Synthetic,
    Csv {
        path: PathBuf,
        #[serde(default)]
        schema: CsvSchema,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseParams {
    pub vertices: usize,
    pub features: usize,
    pub train: usize,
    pub test: usize,
    pub input_snr_db: Vec<f64>,
    /// Range of the lag-one feature correlation drawn for the synthetic
    /// feature covariance.
    pub feature_correlation: [f64; 2],
}

impl Default for DenoiseParams {
    fn default() -> Self {
        Self {
            vertices: 30,
            features: 3,
            train: 200,
            test: 200,
            input_snr_db: vec![-5.0, 0.0, 5.0, 10.0],
            feature_correlation: [0.8, 0.95],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillMethod {
    ZeroPad,
    Interpolate,
}

impl FillMethod {
    pub fn label(self) -> &'static str {
        match self {
            FillMethod::ZeroPad => "TV-zero",
            FillMethod::Interpolate => "TV-interp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorScope {
    #[default]
    Hidden,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompleteParams {
    pub vertices: usize,
    pub features: usize,
    pub hours: usize,
    /// Number of synthetic days; half go to training.
    pub days: usize,
    /// Observation noise level relative to the mean signal power.
    pub noise_snr_db: f64,
    pub hidden_fractions: Vec<f64>,
    pub missing: MissingModel,
    /// Lanes hidden per test day. Derived from each target hidden fraction
    /// when absent.
    pub lanes_per_day: Option<usize>,
    /// Lanes hidden per training day under the consecutive model.
    pub train_lanes_per_day: usize,
    pub tv_fill: Vec<FillMethod>,
    /// Which cells the headline error is computed on.
    pub headline: ErrorScope,
    pub feature_correlation: [f64; 2],
    /// Power of temporal harmonic `f` decays as `1 / (1 + (f / time_scale)²)`.
    pub time_scale: f64,
}

impl Default for CompleteParams {
    fn default() -> Self {
        Self {
            vertices: 30,
            features: 3,
            hours: 24,
            days: 120,
            noise_snr_db: 20.0,
            hidden_fractions: vec![0.05, 0.1, 0.2],
            missing: MissingModel::default(),
            lanes_per_day: None,
            train_lanes_per_day: 2,
            tv_fill: vec![FillMethod::ZeroPad, FillMethod::Interpolate],
            headline: ErrorScope::Hidden,
            feature_correlation: [0.6, 0.9],
            time_scale: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingScheme {
    /// `m` points drawn without replacement from the `2m`-point grid.
    Equispaced,
    /// `m` points uniform on `[-π, π]`.
    Uniform,
}

impl SamplingScheme {
    pub fn name(self) -> &'static str {
        match self {
            SamplingScheme::Equispaced => "equispaced",
            SamplingScheme::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuousParams {
    pub vertices: usize,
    pub m0: usize,
    pub samples_per_vertex: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub schemes: Vec<SamplingScheme>,
    pub train: usize,
    pub test: usize,
    pub betas: usize,
    pub beta_range: [f64; 2],
    pub eval_points: usize,
    pub em_max_iter: usize,
    pub em_tol: f64,
    pub write_em: bool,
}

impl Default for ContinuousParams {
    fn default() -> Self {
        Self {
            vertices: 30,
            m0: 20,
            samples_per_vertex: vec![60],
            snr_db: vec![8.6],
            schemes: vec![SamplingScheme::Equispaced, SamplingScheme::Uniform],
            train: 60,
            test: 60,
            betas: 3,
            beta_range: [1.0, 15.0],
            eval_points: 512,
            em_max_iter: 40,
            em_tol: 1e-6,
            write_em: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the CLI subcommand when present.
    pub kind: Option<ExperimentKind>,
    pub frameworks: Option<Vec<Framework>>,
    pub repetitions: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub graph: Option<GraphSource>,
    pub data: DataSource,
    pub denoise: DenoiseParams,
    pub complete: CompleteParams,
    pub continuous: ContinuousParams,
}

fn config_err(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn frameworks_for(&self, kind: ExperimentKind) -> Vec<Framework> {
        let mut fw = self.frameworks.clone().unwrap_or_else(|| match kind {
            ExperimentKind::Denoise | ExperimentKind::Complete => vec![Framework::Grp, Framework::Tv, Framework::Gsp],
            ExperimentKind::Continuous => vec![Framework::Grp, Framework::Tv, Framework::Ts],
        });
        fw.sort();
        fw.dedup();
        fw
    }

    pub fn repetitions_for(&self, kind: ExperimentKind) -> usize {
        self.repetitions.unwrap_or(match kind {
            ExperimentKind::Denoise => 20,
            ExperimentKind::Complete => 40,
            ExperimentKind::Continuous => 30,
        })
    }

    pub fn graph_for(&self, kind: ExperimentKind) -> GraphSource {
        self.graph.clone().unwrap_or(match kind {
            ExperimentKind::Continuous => GraphSource::ErdosRenyi {
                p: default_edge_probability(),
                connected: true,
            },
            _ => GraphSource::Knn {
                k: default_k(),
                coords: None,
            },
        })
    }

    /// Checks everything that can be checked before touching data: kind,
    /// framework support, parameter ranges and that referenced files exist.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(config_err(format!("config is for {}, not {}", k.name(), kind.name())));
            }
        }
        if self.repetitions_for(kind) == 0 {
            return Err(config_err("repetitions must be at least 1"));
        }
        let fw = self.frameworks_for(kind);
        if fw.is_empty() {
            return Err(config_err("no frameworks selected"));
        }
        let allowed: &[Framework] = match kind {
            ExperimentKind::Denoise | ExperimentKind::Complete => &[Framework::Grp, Framework::Tv, Framework::Gsp],
            ExperimentKind::Continuous => &[Framework::Grp, Framework::Tv, Framework::Ts],
        };
        if let Some(f) = fw.iter().find(|f| !allowed.contains(f)) {
            return Err(config_err(format!("{} is not available for {}", f.label(), kind.name())));
        }
        for path in self.referenced_paths(kind) {
            if !path.exists() {
                return Err(config_err(format!("{} does not exist", path.display())));
            }
        }
        match self.graph_for(kind) {
            GraphSource::Knn { k: 0, .. } => return Err(config_err("k must be at least 1")),
            GraphSource::ErdosRenyi { p, .. } if !(p > 0.0 && p <= 1.0) => {
                return Err(config_err("edge probability must be in (0, 1]"))
            }
            GraphSource::Correlation { threshold } if !threshold.is_finite() => {
                return Err(config_err("correlation threshold must be finite"))
            }
            _ => {}
        }
        match kind {
            ExperimentKind::Denoise => self.validate_denoise(),
            ExperimentKind::Complete => self.validate_complete(),
            ExperimentKind::Continuous => self.validate_continuous(),
        }
    }

    fn referenced_paths(&self, kind: ExperimentKind) -> Vec<PathBuf> {
        let mut out = Vec::new();
        if let DataSource::Csv { path, .. } = &self.data {
            out.push(path.clone());
        }
        match self.graph_for(kind) {
            GraphSource::Knn { coords: Some(p), .. } | GraphSource::EdgeList { path: p } => out.push(p),
            _ => {}
        }
        out
    }

    fn validate_denoise(&self) -> Result<()> {
        let p = &self.denoise;
        if p.input_snr_db.is_empty() || p.input_snr_db.iter().any(|s| !s.is_finite()) {
            return Err(config_err("input_snr_db must be a non-empty list of finite values"));
        }
        check_correlation(p.feature_correlation)?;
        if matches!(self.data, DataSource::Synthetic) {
            if p.vertices < 2 || p.features < 1 || p.train < 2 || p.test < 1 {
                return Err(config_err("synthetic denoise needs vertices >= 2, features >= 1, train >= 2, test >= 1"));
            }
            if self.frameworks_for(ExperimentKind::Denoise).contains(&Framework::Tv) && p.features < 3 {
                return Err(config_err("TV needs at least 3 features (cycle harmonics)"));
            }
        }
        if matches!(self.graph_for(ExperimentKind::Denoise), GraphSource::Correlation { .. })
            && matches!(self.data, DataSource::Synthetic)
        {
            return Err(config_err("correlation graphs need CSV data"));
        }
        Ok(())
    }

    fn validate_complete(&self) -> Result<()> {
        let p = &self.complete;
        if p.hidden_fractions.is_empty() || p.hidden_fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(config_err("hidden_fractions must be a non-empty list in (0, 1)"));
        }
        if !p.noise_snr_db.is_finite() {
            return Err(config_err("noise_snr_db must be finite"));
        }
        if p.features < 1 || p.hours < 3 || p.vertices < 2 {
            return Err(config_err("complete needs vertices >= 2, features >= 1, hours >= 3"));
        }
        if matches!(self.data, DataSource::Synthetic) && p.days < 4 {
            return Err(config_err("need at least 4 days"));
        }
        if self.frameworks_for(ExperimentKind::Complete).contains(&Framework::Tv) && p.tv_fill.is_empty() {
            return Err(config_err("tv_fill must name at least one fill method"));
        }
        if p.time_scale.is_nan() || p.time_scale <= 0.0 {
            return Err(config_err("time_scale must be positive"));
        }
        check_correlation(p.feature_correlation)?;
        p.missing.validate()?;
        if matches!(self.graph_for(ExperimentKind::Complete), GraphSource::Correlation { .. }) {
            return Err(config_err("correlation graphs are only supported for denoise"));
        }
        Ok(())
    }

    fn validate_continuous(&self) -> Result<()> {
        let p = &self.continuous;
        if !matches!(self.data, DataSource::Synthetic) {
            return Err(config_err("continuous recovery runs on synthetic data only"));
        }
        if !matches!(self.graph_for(ExperimentKind::Continuous), GraphSource::ErdosRenyi { .. } | GraphSource::EdgeList { .. }) {
            return Err(config_err("continuous recovery needs an erdos_renyi or edge_list graph"));
        }
        if p.m0 < 1 || p.betas < 1 || p.train < 1 || p.test < 1 || p.eval_points < 2 || p.vertices < 1 {
            return Err(config_err("m0, betas, train, test must be >= 1 and eval_points >= 2"));
        }
        if p.samples_per_vertex.is_empty() || p.samples_per_vertex.contains(&0) {
            return Err(config_err("samples_per_vertex must be a non-empty list of positive counts"));
        }
        if p.snr_db.is_empty() || p.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(config_err("snr_db must be a non-empty list of finite values"));
        }
        if p.schemes.is_empty() {
            return Err(config_err("no sampling schemes selected"));
        }
        let [lo, hi] = p.beta_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
            return Err(config_err("beta_range must satisfy 0 < lo <= hi"));
        }
        if self.frameworks_for(ExperimentKind::Continuous).contains(&Framework::Tv)
            && p.samples_per_vertex.iter().any(|&m| 2 * m < p.m0.max(3))
        {
            return Err(config_err("TV needs a grid of 2m >= m0 points"));
        }
        Ok(())
    }
}

fn check_correlation([lo, hi]: [f64; 2]) -> Result<()> {
    if !(-1.0 < lo && lo <= hi && hi < 1.0) {
        return Err(config_err("feature_correlation must satisfy -1 < lo <= hi < 1"));
    }
    Ok(())
}
