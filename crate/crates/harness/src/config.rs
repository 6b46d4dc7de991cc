//! Experiment configuration files.
//!
//! A config is a TOML document:
//!
//! ```toml
//! [experiment]
//! axis = "T"              # "T", "m" or "sigma"
//! values = [200, 400]
//! trials = 5
//! seed_base = 2024
//! methods = ["meta-sp", "altmin"]
//! record_wall_time = false
//!
//! [dgp]
//! d = 100
//! s = 5
//! m = 25
//! T = 400                 # overridden by the axis when axis = "T"
//! sigma = 1.0
//!
//! [solvers.meta-sp]
//! step_size = 0.25
//! max_iters = 200
//! ```
//!
//! Optional `[search]`, `[rip]` and `[adapt]` sections configure the
//! `min-tasks`, `rip-probe` and `adapt` commands.

use std::path::{Path, PathBuf};

use metasp_core::baselines::{default_reg_coeff, AltMinConfig, AltMinGdConfig, BmConfig, NucConfig};
use metasp_core::metasp::MetaSpConfig;
use metasp_core::seed::derive_seed;
use metasp_core::solver::MomConfig;
use metasp_core::synthetic::{DgpConfig, FeatureDistribution};
use metasp_core::Method;
use serde::Deserialize;

use crate::error::{HarnessError, Result};

/// `λ` for the nuclear-norm solver on noiseless data, where the
/// noise-derived value would be zero.
pub const NOISELESS_REG_COEFF: f64 = 1e-5;

const SOLVER_STREAM: u64 = 0x5EED_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Axis {
    T,
    #[serde(rename = "m")]
    M,
    #[serde(rename = "sigma")]
    Sigma,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::T => "T",
            Axis::M => "m",
            Axis::Sigma => "sigma",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub dgp: DgpSection,
    #[serde(default)]
    pub solvers: SolverSections,
    pub search: Option<SearchSection>,
    pub rip: Option<RipSection>,
    pub adapt: Option<AdaptSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_axis")]
    pub axis: Axis,
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed_base: u64,
    pub methods: Vec<String>,
    /// Off by default so that outputs are byte-reproducible.
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_axis() -> Axis {
    Axis::T
}

fn default_trials() -> usize {
    5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSection {
    pub d: usize,
    pub s: usize,
    pub m: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub sigma: f64,
    #[serde(default)]
    pub features: Features,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Features {
    #[default]
    Gaussian,
    Rademacher,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSections {
    #[serde(rename = "meta-sp", default)]
    pub meta_sp: StepSection,
    #[serde(default)]
    pub altmin: IterSection,
    #[serde(default)]
    pub altmingd: StepSection,
    #[serde(default)]
    pub bm: StepSection,
    #[serde(default)]
    pub nuc: NucSection,
}

/// Step size, iteration budget and stopping tolerance of a gradient method.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSection {
    pub step_size: Option<f64>,
    pub max_iters: Option<usize>,
    pub rel_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterSection {
    pub max_iters: Option<usize>,
    pub rel_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NucSection {
    pub reg_coeff: Option<f64>,
    pub max_iters: Option<usize>,
    pub rel_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub m_values: Vec<usize>,
    #[serde(default = "default_target")]
    pub target: f64,
    #[serde(default = "default_start")]
    pub start: usize,
    #[serde(default = "default_ceiling")]
    pub ceiling: usize,
    /// Fixed granularity; by default 100 once the bracket reaches 1000
    /// tasks and 10 below.
    pub granularity: Option<usize>,
}

fn default_target() -> f64 {
    0.1
}

fn default_start() -> usize {
    10
}

fn default_ceiling() -> usize {
    12800
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RipSection {
    pub r: usize,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default = "default_rip_a")]
    pub a: f64,
    #[serde(default = "default_rip_eps")]
    pub eps: f64,
}

fn default_probes() -> usize {
    100
}

fn default_rip_a() -> f64 {
    10.0
}

fn default_rip_eps() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptSection {
    /// Task table CSV; synthetic data from `[dgp]` when absent.
    pub data: Option<PathBuf>,
    /// Transform sidecar for `data`.
    pub transforms: Option<PathBuf>,
    pub train_points: usize,
    #[serde(default = "default_meta_fraction")]
    pub meta_fraction: f64,
    /// Compare predictions after `exp` (responses stored on log scale).
    #[serde(default)]
    pub delog: bool,
}

fn default_meta_fraction() -> f64 {
    0.8
}

/// Which DGP fields a sweep point overrides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub d: usize,
    pub s: usize,
    pub m: usize,
    pub t: usize,
    pub sigma: f64,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.trials == 0 {
            return Err(HarnessError::config("trials must be >= 1"));
        }
        if e.methods.is_empty() {
            return Err(HarnessError::config("methods must be nonempty"));
        }
        for name in &e.methods {
            if Method::RESERVED.contains(&name.as_str()) {
                return Err(HarnessError::config(format!("method {name} is not implemented")));
            }
            if !Method::NAMES.contains(&name.as_str()) {
                return Err(HarnessError::config(format!("unknown method {name}")));
            }
        }
        let mut seen = e.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != e.methods.len() {
            return Err(HarnessError::config("duplicate method"));
        }
        for &v in &e.values {
            let ok = match e.axis {
                Axis::Sigma => v.is_finite() && v >= 0.0,
                Axis::T | Axis::M => v >= 1.0 && v.fract() == 0.0 && v < u32::MAX as f64,
            };
            if !ok {
                return Err(HarnessError::config(format!("bad {} value {v}", e.axis.name())));
            }
        }
        self.dgp_config(self.base_point(), 0)?;
        for &v in &e.values {
            self.dgp_config(self.point(v), 0)?;
        }
        if let Some(s) = &self.search {
            if !(s.target > 0.0 && s.target <= 1.0) {
                return Err(HarnessError::config("search target must lie in (0, 1]"));
            }
            if s.start == 0 || s.ceiling < s.start || s.m_values.is_empty() {
                return Err(HarnessError::config("need 1 <= start <= ceiling and nonempty m_values"));
            }
            if s.granularity == Some(0) {
                return Err(HarnessError::config("granularity must be >= 1"));
            }
        }
        if let Some(a) = &self.adapt {
            if !(a.meta_fraction > 0.0 && a.meta_fraction < 1.0) {
                return Err(HarnessError::config("meta_fraction must lie in (0, 1)"));
            }
            if a.data.is_some() != a.transforms.is_some() {
                return Err(HarnessError::config("adapt.data and adapt.transforms go together"));
            }
        }
        Ok(())
    }

    pub fn base_point(&self) -> Point {
        let g = &self.dgp;
        Point {
            d: g.d,
            s: g.s,
            m: g.m,
            t: g.t,
            sigma: g.sigma,
        }
    }

    /// The DGP point with the sweep axis set to `value`.
    pub fn point(&self, value: f64) -> Point {
        let mut p = self.base_point();
        match self.experiment.axis {
            Axis::T => p.t = value as usize,
            Axis::M => p.m = value as usize,
            Axis::Sigma => p.sigma = value,
        }
        p
    }

    pub fn dgp_config(&self, p: Point, seed: u64) -> Result<DgpConfig> {
        let mut cfg = DgpConfig::new(p.d, p.s, p.t, p.m, p.sigma, seed)?;
        cfg.features = match self.dgp.features {
            Features::Gaussian => FeatureDistribution::Gaussian,
            Features::Rademacher => FeatureDistribution::Rademacher,
        };
        Ok(cfg)
    }

    /// Builds a configured solver. Random initializations draw from a
    /// stream derived from `trial_seed`.
    pub fn method(&self, name: &str, p: Point, trial_seed: u64) -> Result<Method> {
        let sv = &self.solvers;
        let seed = derive_seed(&[trial_seed, SOLVER_STREAM]);
        let method = match name {
            "meta-sp" => {
                let mut c = MetaSpConfig::new(p.s, sv.meta_sp.step_size.unwrap_or(0.5), sv.meta_sp.max_iters.unwrap_or(200));
                if let Some(tol) = sv.meta_sp.rel_tol {
                    c.rel_tol = tol;
                }
                Method::MetaSp(c)
            }
            "mom" => Method::MoM(MomConfig { rank: p.s }),
            "altmin" => {
                let mut c = AltMinConfig::new(p.s, sv.altmin.max_iters.unwrap_or(100), seed);
                if let Some(tol) = sv.altmin.rel_tol {
                    c.rel_tol = tol;
                }
                Method::AltMin(c)
            }
            "altmingd" => {
                let s = &sv.altmingd;
                let mut c = AltMinGdConfig::new(p.s, s.step_size.unwrap_or(1.0), s.max_iters.unwrap_or(200), seed);
                if let Some(tol) = s.rel_tol {
                    c.rel_tol = tol;
                }
                Method::AltMinGd(c)
            }
            "bm" => {
                let s = &sv.bm;
                let mut c = BmConfig::new(p.s, s.step_size.unwrap_or(0.05), s.max_iters.unwrap_or(1000), seed);
                if let Some(tol) = s.rel_tol {
                    c.rel_tol = tol;
                }
                Method::Bm(c)
            }
            "nuc" => {
                let s = &sv.nuc;
                let lambda = s.reg_coeff.unwrap_or(if p.sigma > 0.0 {
                    default_reg_coeff(p.sigma, p.t, p.d, p.m)
                } else {
                    NOISELESS_REG_COEFF
                });
                let mut c = NucConfig::new(p.s, lambda, s.max_iters.unwrap_or(3000), seed);
                if let Some(tol) = s.rel_tol {
                    c.rel_tol = tol;
                }
                Method::Nuc(c)
            }
            other => return Err(HarnessError::config(format!("unknown method {other}"))),
        };
        Ok(method)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[experiment]
values = [10, 20]
methods = ["meta-sp"]

[dgp]
d = 10
s = 2
m = 5
T = 10
sigma = 0.5
"#;

    #[test]
    fn defaults() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.experiment.trials, 5);
        assert_eq!(cfg.experiment.axis, Axis::T);
        assert!(!cfg.experiment.record_wall_time);
        assert_eq!(cfg.point(20.0).t, 20);
        match cfg.method("meta-sp", cfg.base_point(), 0).unwrap() {
            Method::MetaSp(c) => assert_eq!((c.rank, c.step_size, c.max_iters), (2, 0.5, 200)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            MINIMAL.replace("methods = [\"meta-sp\"]", "methods = []"),
            MINIMAL.replace("methods = [\"meta-sp\"]", "methods = [\"anil\"]"),
            MINIMAL.replace("methods = [\"meta-sp\"]", "methods = [\"meta-sp\", \"meta-sp\"]"),
            MINIMAL.replace("values = [10, 20]", "values = [10.5]"),
            MINIMAL.replace("values = [10, 20]", "values = [1]\ntrials = 0"),
            MINIMAL.replace("s = 2", "s = 20"),
            MINIMAL.replace("sigma = 0.5", "sigma = 0.5\nunknown = 1"),
        ];
        for text in bad {
            assert!(matches!(ExperimentConfig::parse(&text), Err(HarnessError::Config(_))), "{text}");
        }
    }

    #[test]
    fn noiseless_nuc_uses_floor() {
        let cfg = ExperimentConfig::parse(&MINIMAL.replace("sigma = 0.5", "sigma = 0.0")).unwrap();
        match cfg.method("nuc", cfg.base_point(), 1).unwrap() {
            Method::Nuc(c) => assert_eq!(c.reg_coeff, Some(NOISELESS_REG_COEFF)),
            _ => unreachable!(),
        }
    }
}
