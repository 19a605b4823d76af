//! Built-in objectives for the optimize command, all posed as maximization.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gp::{spectral_sample, SpectralDraw};
use crate::kernels::{Domain, ProductKernel};

pub const OBJECTIVE_NAMES: [&str; 3] = ["gp-sample", "branin", "six-hump-camel"];

/// Random features used for the sampled-GP objective.
pub const GP_SAMPLE_FEATURES: usize = 2048;

pub enum Objective {
    /// A random-feature draw from the configured kernel.
    GpSample(SpectralDraw),
    /// Negated Branin on `[−5, 10] × [0, 15]`; maximum `−0.397887…`.
    Branin,
    /// Negated six-hump camel on `[−3, 3] × [−2, 2]`; maximum `1.031628…`.
    SixHumpCamel,
}

impl Objective {
    pub fn by_name(name: &str, kernel: &ProductKernel, seed: u64) -> Result<Self> {
        match name {
            "gp-sample" => Ok(Objective::GpSample(spectral_sample(kernel, GP_SAMPLE_FEATURES, seed)?)),
            "branin" => Ok(Objective::Branin),
            "six-hump-camel" => Ok(Objective::SixHumpCamel),
            _ => Err(Error::Config(format!(
                "unknown objective {name:?}; available: {}",
                OBJECTIVE_NAMES.join(", ")
            ))),
        }
    }

    /// Required input dimension, if fixed.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Objective::GpSample(_) => None,
            Objective::Branin | Objective::SixHumpCamel => Some(2),
        }
    }

    /// The usual search box for the classical functions.
    pub fn natural_domain(&self) -> Option<Domain> {
        let d = |lo: [f64; 2], hi: [f64; 2]| Domain::new(lo.to_vec(), hi.to_vec()).expect("valid box");
        match self {
            Objective::GpSample(_) => None,
            Objective::Branin => Some(d([-5.0, 0.0], [10.0, 15.0])),
            Objective::SixHumpCamel => Some(d([-3.0, -2.0], [3.0, 2.0])),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Objective::GpSample(draw) => draw.eval(x),
            Objective::Branin => -branin(x[0], x[1]),
            Objective::SixHumpCamel => -six_hump_camel(x[0], x[1]),
        }
    }
}

pub fn branin(x1: f64, x2: f64) -> f64 {
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
}

pub fn six_hump_camel(x: f64, y: f64) -> f64 {
    (4.0 - 2.1 * x * x + x.powi(4) / 3.0) * x * x + x * y + (-4.0 + 4.0 * y * y) * y * y
}
