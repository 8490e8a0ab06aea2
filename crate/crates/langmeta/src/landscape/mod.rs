//! Objective functions with exact derivatives and certified regularity
//! constants, plus the numerical certifiers (dissipativity, strongly-Morse,
//! local-minimum search) that the bound calculators consume.

mod checks;
mod families;

pub use checks::{
    certify_strongly_morse, certify_strongly_morse_population, check_dissipativity,
    find_local_minimum, DissipativityReport, MorseReport,
};
pub use families::{
    build_double_well, build_gaussian_location_erm, build_quadratic, build_tilted_double_well_erm,
    DoubleWell, GaussianLocationErm, Quadratic, TiltedDoubleWell,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::NoiseSource;

/// Regularity constants attached to a landscape.
///
/// `value_bound`, `grad_bound`, `hess_bound` bound |f(0,z)|, the gradient
/// norm, and the Hessian norm at the origin; `grad_lipschitz` and
/// `hess_lipschitz` are Lipschitz constants of the gradient and Hessian;
/// `(dissipativity_m, dissipativity_b)` are the dissipativity pair, and
/// `radius = sqrt(b/m)` is the ball containing all critical points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityConstants {
    pub value_bound: f64,
    pub grad_bound: f64,
    pub hess_bound: f64,
    pub grad_lipschitz: f64,
    pub hess_lipschitz: f64,
    pub dissipativity_m: f64,
    pub dissipativity_b: f64,
    pub radius: f64,
}

impl RegularityConstants {
    pub fn new(
        value_bound: f64,
        grad_bound: f64,
        hess_bound: f64,
        grad_lipschitz: f64,
        hess_lipschitz: f64,
        dissipativity_m: f64,
        dissipativity_b: f64,
    ) -> Result<Self> {
        let all = [
            value_bound,
            grad_bound,
            hess_bound,
            grad_lipschitz,
            hess_lipschitz,
            dissipativity_m,
            dissipativity_b,
        ];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConstants(
                "all constants must be finite and nonnegative".into(),
            ));
        }
        if grad_lipschitz <= 0.0 || hess_lipschitz <= 0.0 || dissipativity_m <= 0.0 {
            return Err(Error::InvalidConstants(
                "M, L and m must be strictly positive".into(),
            ));
        }
        let radius = (dissipativity_b / dissipativity_m).sqrt();
        let c = Self {
            value_bound,
            grad_bound,
            hess_bound,
            grad_lipschitz,
            hess_lipschitz,
            dissipativity_m,
            dissipativity_b,
            radius,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let lhs = self.radius * self.radius * self.dissipativity_m;
        let scale = self.dissipativity_b.abs().max(1e-300);
        if lhs > self.dissipativity_b + 1e-12 * scale {
            return Err(Error::InvalidConstants(format!(
                "R^2 m = {lhs} exceeds b = {}",
                self.dissipativity_b
            )));
        }
        Ok(())
    }
}

/// An objective with exact value, gradient and Hessian. Evaluations are pure;
/// implementations are immutable after construction and safe to share across
/// workers.
pub trait Landscape: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, w: &DVector<f64>) -> f64;
    fn gradient(&self, w: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, w: &DVector<f64>) -> DMatrix<f64>;
    fn constants(&self) -> &RegularityConstants;
    /// Closed-form population risk, when the family has one.
    fn population_value(&self, _w: &DVector<f64>) -> Option<f64> {
        None
    }
    fn population_gradient(&self, _w: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }
    fn population_hessian(&self, _w: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }
}

/// An i.i.d. sample with the description of the law and seed that produced it,
/// so it can be re-drawn exactly.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<DVector<f64>>,
    pub sampler_spec: String,
}

impl Dataset {
    pub fn new(samples: Vec<DVector<f64>>, sampler_spec: String) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            samples,
            sampler_spec,
        })
    }

    /// Draws n samples with i.i.d. coordinates from N(0,1) truncated to
    /// [-radius, radius], by rejection from the position-addressable stream.
    pub fn truncated_gaussian(d: usize, n: usize, radius: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut noise = NoiseSource::new(seed);
        let mut samples = Vec::with_capacity(n);
        let mut step = 0u64;
        let mut buf = [0.0f64; 1];
        for _ in 0..n {
            let mut z = DVector::zeros(d);
            for j in 0..d {
                loop {
                    noise.fill_step(step, &mut buf);
                    step += 1;
                    if buf[0].abs() <= radius {
                        z[j] = buf[0];
                        break;
                    }
                }
            }
            samples.push(z);
        }
        let spec = format!("truncated_gaussian(d={d},n={n},radius={radius},seed={seed})");
        Ok(Self {
            samples,
            sampler_spec: spec,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Writes the samples as CSV, one row per sample.
    pub fn to_csv(&self) -> String {
        let d = self.samples[0].len();
        let mut out = String::new();
        let header: Vec<String> = (1..=d).map(|j| format!("z_{j}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for z in &self.samples {
            let row: Vec<String> = z.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// A nondegenerate local minimum together with the exact Hessian there.
#[derive(Debug, Clone)]
pub struct LocalMinimum {
    pub location: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub gradient_norm_residual: f64,
}
