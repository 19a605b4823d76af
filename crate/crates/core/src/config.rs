//! TOML experiment configuration shared by the command-line tools.
//!
//! Every key is optional; omitted keys take the defaults of the coverage
//! study (Matérn on `[0,1]²`, `A₀D_Ω = 25`, `α = 0.05`, `C₀ = 1`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::abo::{Acquisition, BetaSchedule};
use crate::coverage::CoverageConfig;
use crate::error::{Error, Result};
use crate::kernels::{kernel_for_target, Domain, Family, Kernel1d, ProductKernel};
use crate::uq::{t_for_level, UqConstants, DEFAULT_C0};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Calibrate,
    Coverage,
    Optimize,
    UpperCl,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Calibrate => "calibrate",
            Mode::Coverage => "coverage",
            Mode::Optimize => "optimize",
            Mode::UpperCl => "upper-cl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub seed: u64,
    pub output: Option<String>,
    pub kernel: KernelSpec,
    pub domain: Option<DomainSpec>,
    pub uq: UqSpec,
    pub coverage: CoverageSpec,
    pub optimize: OptimizeSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: None,
            seed: 2017,
            output: None,
            kernel: KernelSpec::default(),
            domain: None,
            uq: UqSpec::default(),
            coverage: CoverageSpec::default(),
            optimize: OptimizeSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSpec {
    pub family: Family,
    pub nu: Option<f64>,
    /// One scale per dimension, or a single shared scale. When absent the
    /// scale is set so that `A₀ · D_Ω` equals `a0_d_omega`.
    pub theta: Option<Vec<f64>>,
    pub a0_d_omega: f64,
    pub variance: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            family: Family::Matern,
            nu: Some(2.5),
            theta: None,
            a0_d_omega: 25.0,
            variance: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UqSpec {
    pub alpha: f64,
    pub c0: f64,
    /// Halton points used for the region mask and the interval sweep. When
    /// absent: a 51-per-axis mesh for p ≤ 2, 4096 random points otherwise.
    pub candidates: Option<usize>,
    /// Locally refine the best sweep candidates when maximizing.
    pub polish: bool,
}

impl Default for UqSpec {
    fn default() -> Self {
        UqSpec {
            alpha: 0.05,
            c0: DEFAULT_C0,
            candidates: None,
            polish: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaKind {
    Srinivas,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverageSpec {
    pub nus: Vec<f64>,
    pub n_initial: usize,
    pub checkpoints: Vec<usize>,
    pub n_repetitions: usize,
    pub mesh_size: usize,
    pub beta: BetaKind,
    pub beta_delta: f64,
    pub beta_value: f64,
    pub maximin_candidates: usize,
}

impl Default for CoverageSpec {
    fn default() -> Self {
        let d = CoverageConfig::default();
        CoverageSpec {
            nus: d.nus,
            n_initial: d.n_initial,
            checkpoints: d.checkpoints,
            n_repetitions: d.n_repetitions,
            mesh_size: d.mesh_size,
            beta: BetaKind::Srinivas,
            beta_delta: 0.1,
            beta_value: 2.0,
            maximin_candidates: d.maximin_candidates,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcquisitionKind {
    Ucb,
    Ei,
    Pes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopKind {
    Budget,
    NoImprovement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeSpec {
    pub acquisition: AcquisitionKind,
    pub n_initial: usize,
    pub stop: StopKind,
    /// Iterations for the fixed-budget rule (the initial design counts as one).
    pub budget: usize,
    pub window: usize,
    pub epsilon: f64,
    pub hard_cap: usize,
    /// Halton points swept when maximizing the acquisition.
    pub candidates: usize,
    pub beta: BetaKind,
    pub beta_delta: f64,
    pub beta_value: f64,
    pub pes_features: usize,
    pub maximin_candidates: usize,
}

impl Default for OptimizeSpec {
    fn default() -> Self {
        OptimizeSpec {
            acquisition: AcquisitionKind::Ucb,
            n_initial: 5,
            stop: StopKind::Budget,
            budget: 10,
            window: 3,
            epsilon: 1e-3,
            hard_cap: crate::abo::DEFAULT_HARD_CAP,
            candidates: 1000,
            beta: BetaKind::Srinivas,
            beta_delta: 0.1,
            beta_value: 2.0,
            pes_features: 512,
            maximin_candidates: crate::designs::DEFAULT_MAXIMIN_CANDIDATES,
        }
    }
}

fn beta_schedule(kind: BetaKind, delta: f64, value: f64) -> Result<BetaSchedule> {
    match kind {
        BetaKind::Srinivas if delta > 0.0 && delta < 1.0 => Ok(BetaSchedule::Srinivas { delta }),
        BetaKind::Constant if value >= 0.0 && value.is_finite() => Ok(BetaSchedule::Constant(value)),
        _ => Err(Error::Config(
            "beta_delta must lie in (0, 1) and beta_value must be finite and >= 0".to_string(),
        )),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.domain()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fails when the file names a different mode than the command.
    pub fn check_mode(&self, mode: Mode) -> Result<()> {
        match self.mode {
            Some(m) if m != mode => Err(Error::Config(format!(
                "config is for mode {:?} but the command is {:?}",
                m.as_str(),
                mode.as_str()
            ))),
            _ => Ok(()),
        }
    }

    /// The configured domain, `[0,1]²` by default.
    pub fn domain(&self) -> Result<Domain> {
        match &self.domain {
            Some(d) => Domain::new(d.lower.clone(), d.upper.clone()).map_err(|e| Error::Config(e.to_string())),
            None => Ok(Domain::unit(2)),
        }
    }

    pub fn kernel(&self, domain: &Domain) -> Result<ProductKernel> {
        let k = &self.kernel;
        let nu = match k.family {
            Family::Gaussian => None,
            Family::Matern => Some(k.nu.ok_or_else(|| Error::Config("matern kernels need nu".to_string()))?),
        };
        let built = match &k.theta {
            Some(thetas) => {
                let p = domain.dim();
                let thetas: Vec<f64> = match thetas.len() {
                    1 => vec![thetas[0]; p],
                    n if n == p => thetas.clone(),
                    n => {
                        return Err(Error::Config(format!(
                            "theta has {n} entries for a {p}-dimensional domain"
                        )))
                    }
                };
                let comps = thetas
                    .iter()
                    .map(|&t| Kernel1d::new(k.family, nu, t))
                    .collect::<Result<Vec<_>>>()?;
                ProductKernel::new(comps, k.variance)
            }
            None => kernel_for_target(k.family, nu, k.a0_d_omega, domain, k.variance),
        };
        built.map_err(|e| Error::Config(e.to_string()))
    }

    pub fn uq_constants(&self, kernel: &ProductKernel, domain: &Domain) -> Result<UqConstants> {
        let t = t_for_level(self.uq.alpha).map_err(|e| Error::Config(e.to_string()))?;
        UqConstants::for_kernel(kernel, domain, self.uq.c0, t).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn coverage_config(&self) -> Result<CoverageConfig> {
        let domain = self.domain()?;
        if domain != Domain::unit(domain.dim()) {
            return Err(Error::Config("the coverage study runs on the unit cube".to_string()));
        }
        if self.kernel.family != Family::Matern {
            return Err(Error::Config("the coverage study uses Matern kernels".to_string()));
        }
        let c = &self.coverage;
        let cfg = CoverageConfig {
            p: domain.dim(),
            nus: c.nus.clone(),
            a0_d_omega: self.kernel.a0_d_omega,
            mesh_size: c.mesh_size,
            n_initial: c.n_initial,
            checkpoints: c.checkpoints.clone(),
            n_repetitions: c.n_repetitions,
            alpha: self.uq.alpha,
            c0: self.uq.c0,
            beta: beta_schedule(c.beta, c.beta_delta, c.beta_value)?,
            maximin_candidates: c.maximin_candidates,
            seed: self.seed,
        };
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn acquisition(&self) -> Result<Acquisition> {
        let o = &self.optimize;
        Ok(match o.acquisition {
            AcquisitionKind::Ei => Acquisition::Ei,
            AcquisitionKind::Ucb => Acquisition::Ucb(beta_schedule(o.beta, o.beta_delta, o.beta_value)?),
            AcquisitionKind::Pes => Acquisition::Pes {
                n_features: o.pes_features.max(1),
            },
        })
    }

    /// The resolved config as TOML lines, for provenance comments.
    pub fn provenance_lines(&self) -> Vec<String> {
        let text = toml::to_string(self).expect("config serializes");
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::to_string)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        let cov = c.coverage_config().unwrap();
        assert_eq!(cov.nus, vec![1.5, 2.5, 3.5]);
        assert_eq!(cov.a0_d_omega, 25.0);
        assert_eq!(cov.n_initial, 5);
        assert_eq!(cov.checkpoints, vec![5, 10, 15, 20, 25, 30]);
        assert_eq!(cov.n_repetitions, 100);
        assert_eq!(cov.alpha, 0.05);
        assert_eq!(cov.c0, 1.0);
        assert_eq!(cov.p, 2);
    }

    #[test]
    fn kernel_from_target_and_theta() {
        let c = ExperimentConfig::parse(
            "[kernel]\nfamily = \"gaussian\"\na0_d_omega = 3.0\n[domain]\nlower = [0.0]\nupper = [2.0]\n",
        )
        .unwrap();
        let d = c.domain().unwrap();
        let k = c.kernel(&d).unwrap();
        assert!((k.a0_moment().unwrap() * d.diameter() - 3.0).abs() < 1e-10);
        let c = ExperimentConfig::parse("[kernel]\ntheta = [0.3]\nnu = 1.5\n").unwrap();
        let k = c.kernel(&c.domain().unwrap()).unwrap();
        assert_eq!(k.dim(), 2);
        assert_eq!(k.components()[1].theta(), 0.3);
        let c = ExperimentConfig::parse("[kernel]\ntheta = [0.3, 0.2, 0.1]\n").unwrap();
        assert!(c.kernel(&c.domain().unwrap()).is_err());
    }

    #[test]
    fn rejects_bad_files() {
        assert!(ExperimentConfig::parse("unknown_key = 3").is_err());
        assert!(ExperimentConfig::parse("[domain]\nlower = [1.0]\nupper = [0.0]\n").is_err());
        assert!(ExperimentConfig::parse("seed = \"x\"").is_err());
        let c = ExperimentConfig::parse("mode = \"coverage\"").unwrap();
        assert!(c.check_mode(Mode::Coverage).is_ok());
        assert!(c.check_mode(Mode::Optimize).is_err());
        let c = ExperimentConfig::parse("[uq]\nalpha = 2.0").unwrap();
        let d = c.domain().unwrap();
        assert!(c.uq_constants(&c.kernel(&d).unwrap(), &d).is_err());
    }

    #[test]
    fn provenance_round_trips() {
        let c = ExperimentConfig::parse("seed = 9\n[optimize]\nacquisition = \"ei\"\n").unwrap();
        let text = c.provenance_lines().join("\n");
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), c);
    }
}
