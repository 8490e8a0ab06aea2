//! The three simulated processes: the discrete Langevin algorithm, a
//! fine-step Euler-Maruyama proxy for the continuous diffusion, and the exact
//! linearized Ornstein-Uhlenbeck process around a local minimum.

mod ou;

pub use ou::{h_norm, matrix_flow_q, ou_marginal, run_exact_ou, OuLinearization};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::Landscape;
use crate::rng::NoiseSource;

/// Inverse temperature. `Infinite` is the explicit noiseless mode, not a
/// large float stand-in. Serializes as a number, or the string "infinite".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Serialize for Beta {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Beta::Finite(b) => s.serialize_f64(*b),
            Beta::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::Number(n) => n
                .as_f64()
                .map(Beta::Finite)
                .ok_or_else(|| D::Error::custom("beta must be a float")),
            serde_json::Value::String(s) if s == "infinite" => Ok(Beta::Infinite),
            other => Err(D::Error::custom(format!(
                "beta must be a number or \"infinite\", got {other}"
            ))),
        }
    }
}

impl Beta {
    pub fn validate(&self) -> Result<()> {
        match self {
            Beta::Finite(b) if !(b.is_finite() && *b > 0.0) => Err(Error::InvalidConfig(
                format!("beta must be positive and finite, got {b}"),
            )),
            _ => Ok(()),
        }
    }

    /// Per-step noise amplitude sqrt(2 eta / beta); zero in noiseless mode.
    pub fn noise_scale(&self, eta: f64) -> f64 {
        match self {
            Beta::Finite(b) => (2.0 * eta / b).sqrt(),
            Beta::Infinite => 0.0,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Beta::Finite(b) => Some(*b),
            Beta::Infinite => None,
        }
    }
}

/// Full specification of one Langevin run; together with the landscape it
/// determines the trajectory bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangevinConfig {
    pub eta: f64,
    pub beta: Beta,
    pub horizon_k: usize,
    pub initial_point: Vec<f64>,
    pub seed: u64,
}

impl LangevinConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "eta must be finite and >= 0, got {}",
                self.eta
            )));
        }
        self.beta.validate()?;
        if self.horizon_k == 0 {
            return Err(Error::InvalidConfig("horizon_k must be >= 1".into()));
        }
        if self.initial_point.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("initial point must be finite".into()));
        }
        Ok(())
    }

    pub fn initial_vector(&self) -> DVector<f64> {
        DVector::from_vec(self.initial_point.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Discrete,
    DiffusionProxy,
    ExactOu,
}

/// Time-indexed iterate sequence with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    pub times: Vec<f64>,
    pub points: Vec<DVector<f64>>,
    pub config: LangevinConfig,
    pub substep_factor: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }
}

/// Shared Euler-Maruyama inner loop. The discrete algorithm is this loop with
/// step = eta; the diffusion proxy is the same loop with step = eta/substeps
/// and the substep index addressing the noise stream, so that substeps = 1
/// reproduces the discrete iteration bit-for-bit.
fn euler_maruyama(
    landscape: &dyn Landscape,
    w0: DVector<f64>,
    step: f64,
    n_steps: usize,
    noise_scale: f64,
    seed: u64,
) -> Result<Vec<DVector<f64>>> {
    let d = w0.len();
    let mut noise = NoiseSource::new(seed);
    let mut xi = vec![0.0f64; d];
    let mut points = Vec::with_capacity(n_steps + 1);
    let mut w = w0;
    points.push(w.clone());
    for k in 0..n_steps {
        let g = landscape.gradient(&w);
        if noise_scale != 0.0 {
            noise.fill_step(k as u64, &mut xi);
        }
        for j in 0..d {
            w[j] = w[j] - step * g[j] + noise_scale * xi[j];
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged(k + 1));
        }
        points.push(w.clone());
    }
    Ok(points)
}

/// W^{(k+1)} = W^{(k)} - eta grad F(W^{(k)}) + sqrt(2 eta / beta) xi^{(k)}.
pub fn run_discrete_langevin(
    landscape: &dyn Landscape,
    config: &LangevinConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let scale = config.beta.noise_scale(config.eta);
    let points = euler_maruyama(
        landscape,
        config.initial_vector(),
        config.eta,
        config.horizon_k,
        scale,
        config.seed,
    )?;
    let times = (0..=config.horizon_k).map(|k| k as f64 * config.eta).collect();
    Ok(Trajectory {
        kind: TrajectoryKind::Discrete,
        times,
        points,
        config: config.clone(),
        substep_factor: 1,
    })
}

/// Euler-Maruyama proxy for the continuous diffusion with inner step
/// eta / substep_factor; all substeps are recorded so inter-grid oscillation
/// is observable.
pub fn run_diffusion_proxy(
    landscape: &dyn Landscape,
    config: &LangevinConfig,
    substep_factor: usize,
) -> Result<Trajectory> {
    config.validate()?;
    if substep_factor == 0 {
        return Err(Error::InvalidConfig("substep_factor must be >= 1".into()));
    }
    let h = config.eta / substep_factor as f64;
    let n = config.horizon_k * substep_factor;
    let scale = config.beta.noise_scale(h);
    let points = euler_maruyama(landscape, config.initial_vector(), h, n, scale, config.seed)?;
    let times = (0..=n).map(|k| k as f64 * h).collect();
    Ok(Trajectory {
        kind: TrajectoryKind::DiffusionProxy,
        times,
        points,
        config: config.clone(),
        substep_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::build_quadratic;
    use approx::assert_relative_eq;

    fn config(eta: f64, beta: Beta, k: usize, w0: Vec<f64>, seed: u64) -> LangevinConfig {
        LangevinConfig {
            eta,
            beta,
            horizon_k: k,
            initial_point: w0,
            seed,
        }
    }

    #[test]
    fn noiseless_quadratic_is_geometric() {
        let f = build_quadratic(1, 1.0).unwrap();
        let cfg = config(0.1, Beta::Infinite, 50, vec![1.0], 0);
        let traj = run_discrete_langevin(&f, &cfg).unwrap();
        for (k, p) in traj.points.iter().enumerate() {
            assert_relative_eq!(p[0], 0.9f64.powi(k as i32), max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_eta_is_constant() {
        let f = build_quadratic(2, 1.0).unwrap();
        let cfg = config(0.0, Beta::Finite(5.0), 20, vec![0.3, -0.7], 3);
        let traj = run_discrete_langevin(&f, &cfg).unwrap();
        for p in &traj.points {
            assert_eq!(p[0], 0.3);
            assert_eq!(p[1], -0.7);
        }
    }

    #[test]
    fn discrete_stationary_variance_matches_ar1() {
        // AR(1) stationary variance: (2 eta / beta) / (1 - (1 - eta m)^2)
        let f = build_quadratic(1, 1.0).unwrap();
        let (eta, beta, k) = (0.01, 10.0, 100_000);
        let cfg = config(eta, Beta::Finite(beta), k, vec![0.0], 42);
        let traj = run_discrete_langevin(&f, &cfg).unwrap();
        let burn = 5000;
        let xs: Vec<f64> = traj.points[burn..].iter().map(|p| p[0]).collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        let expected = (2.0 * eta / beta) / (1.0 - (1.0 - eta).powi(2));
        assert!(
            (var - expected).abs() / expected < 0.05,
            "var {var} vs {expected}"
        );
    }

    #[test]
    fn proxy_substep_one_is_bit_identical() {
        let f = build_quadratic(3, 0.7).unwrap();
        let cfg = config(0.05, Beta::Finite(4.0), 200, vec![1.0, -1.0, 0.5], 77);
        let a = run_discrete_langevin(&f, &cfg).unwrap();
        let b = run_diffusion_proxy(&f, &cfg, 1).unwrap();
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn proxy_stationary_variance_is_ou() {
        let f = build_quadratic(1, 1.0).unwrap();
        let cfg = config(0.01, Beta::Finite(4.0), 40_000, vec![0.0], 5);
        let traj = run_diffusion_proxy(&f, &cfg, 16).unwrap();
        let burn = traj.len() / 10;
        let xs: Vec<f64> = traj.points[burn..].iter().map(|p| p[0]).collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((var - 0.25).abs() < 0.0125, "var {var}");
    }

    #[test]
    fn seed_determinism() {
        let f = build_quadratic(2, 1.0).unwrap();
        let cfg = config(0.01, Beta::Finite(2.0), 500, vec![1.0, 1.0], 123);
        let a = run_discrete_langevin(&f, &cfg).unwrap();
        let b = run_discrete_langevin(&f, &cfg).unwrap();
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn discrete_times_are_exact_multiples() {
        let f = build_quadratic(1, 1.0).unwrap();
        let cfg = config(0.3, Beta::Infinite, 10, vec![0.1], 0);
        let traj = run_discrete_langevin(&f, &cfg).unwrap();
        for (k, t) in traj.times.iter().enumerate() {
            assert_eq!(*t, k as f64 * 0.3);
        }
    }

    #[test]
    fn beta_serde_roundtrip() {
        let f = serde_json::to_string(&Beta::Finite(2.5)).unwrap();
        assert_eq!(f, "2.5");
        let inf = serde_json::to_string(&Beta::Infinite).unwrap();
        assert_eq!(inf, "\"infinite\"");
        assert_eq!(
            serde_json::from_str::<Beta>("2.5").unwrap(),
            Beta::Finite(2.5)
        );
        assert_eq!(
            serde_json::from_str::<Beta>("\"infinite\"").unwrap(),
            Beta::Infinite
        );
    }
}
