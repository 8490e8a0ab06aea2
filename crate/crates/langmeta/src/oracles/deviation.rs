//! Scaling-rate verification for the uniform deviation of empirical risk,
//! gradient, and Hessian from their population counterparts: the 0.9-quantile
//! of the grid-sup deviation must follow the (n / log n)^{-1/2} law.

use nalgebra::DVector;

use super::{OracleVerdict, Status};
use crate::error::{Error, Result};
use crate::exec::map_replicas;
use crate::landscape::{build_gaussian_location_erm, Dataset, Landscape};
use crate::rng::derive_replica_seed;
use crate::stats::{linear_regression, quantile};

#[derive(Debug, Clone)]
pub struct DeviationSettings {
    pub d: usize,
    pub n_grid: Vec<usize>,
    pub grid_resolution: usize,
    pub dataset_replicas: usize,
    pub trunc_radius: f64,
    pub ridge: f64,
    pub delta: f64,
}

impl Default for DeviationSettings {
    fn default() -> Self {
        Self {
            d: 1,
            n_grid: vec![100, 400, 1600, 6400],
            grid_resolution: 41,
            dataset_replicas: 200,
            trunc_radius: 5.0,
            ridge: 0.1,
            delta: 0.1,
        }
    }
}

impl DeviationSettings {
    pub fn run(&self, seed: u64) -> Result<OracleVerdict> {
        verify_uniform_deviation_scaling(self, seed)
    }
}

/// Points of the certification ball B^d(R), cube grid restricted to the ball.
fn ball_grid(d: usize, radius: f64, resolution: usize) -> Vec<DVector<f64>> {
    let n = resolution;
    let total = n.pow(d as u32);
    let mut out = Vec::new();
    for idx in 0..total {
        let mut rem = idx;
        let mut w = DVector::zeros(d);
        for j in 0..d {
            let i = rem % n;
            rem /= n;
            w[j] = -radius + 2.0 * radius * i as f64 / (n - 1) as f64;
        }
        if w.norm() <= radius {
            out.push(w);
        }
    }
    out
}

/// (sup value deviation, sup gradient deviation, sup Hessian deviation) for
/// one empirical landscape against its population counterpart.
fn sup_deviations(f: &dyn Landscape, grid: &[DVector<f64>]) -> (f64, f64, f64) {
    let mut dv = 0.0f64;
    let mut dg = 0.0f64;
    for w in grid {
        dv = dv.max((f.value(w) - f.population_value(w).unwrap()).abs());
        dg = dg.max((f.gradient(w) - f.population_gradient(w).unwrap()).norm());
    }
    // the Hessian deviation is position-independent for every shipped family
    // with a closed-form population risk; one evaluation suffices, but probe
    // the whole grid anyway so the check stays family-agnostic
    let mut dh = 0.0f64;
    for w in grid {
        let diff = f.hessian(w) - f.population_hessian(w).unwrap();
        dh = dh.max(diff.symmetric_eigenvalues().amax());
    }
    (dv, dg, dh)
}

/// PASS iff the log-log regression of the (1 - delta)-quantile sup deviation
/// against n / log n has slope within 0.1 of -1/2 for every non-degenerate
/// level; levels that vanish identically (constant Hessian families) are
/// reported as degenerate passes.
pub fn verify_uniform_deviation_scaling(
    settings: &DeviationSettings,
    seed: u64,
) -> Result<OracleVerdict> {
    let s = settings;
    if s.d > 2 {
        return Err(Error::DimensionTooLarge(s.d, 2));
    }
    if s.n_grid.len() < 4 {
        return Err(Error::ParamOutOfRange(
            "n_grid needs >= 4 points for the regression".into(),
        ));
    }
    if s.grid_resolution < 2 || s.dataset_replicas < 10 {
        return Err(Error::ParamOutOfRange(
            "need grid_resolution >= 2 and dataset_replicas >= 10".into(),
        ));
    }
    // the certification radius is dataset-independent; probe a throwaway
    // instance for it
    let probe = build_gaussian_location_erm(
        &Dataset::truncated_gaussian(s.d, 1, s.trunc_radius, seed)?,
        s.ridge,
        s.trunc_radius,
    )?;
    let grid = ball_grid(s.d, probe.constants().radius, s.grid_resolution);
    // common random numbers: each replica draws one dataset at the largest n
    // and every smaller n reuses its prefix, so quantile noise is positively
    // correlated across n and largely cancels out of the fitted slope
    let n_max = *s.n_grid.iter().max().unwrap();
    let n_grid = s.n_grid.clone();
    let per_replica: Vec<Vec<(f64, f64, f64)>> = map_replicas(s.dataset_replicas, |rep| {
        let ds_seed = derive_replica_seed(seed, rep as u64);
        let ds = Dataset::truncated_gaussian(s.d, n_max, s.trunc_radius, ds_seed).unwrap();
        n_grid
            .iter()
            .map(|&n| {
                let prefix =
                    Dataset::new(ds.samples[..n].to_vec(), ds.sampler_spec.clone()).unwrap();
                let f = build_gaussian_location_erm(&prefix, s.ridge, s.trunc_radius).unwrap();
                sup_deviations(&f, &grid)
            })
            .collect()
    });
    let q = 1.0 - s.delta;
    let mut quantiles = vec![Vec::new(); 3]; // value, gradient, hessian
    for ni in 0..s.n_grid.len() {
        let dv: Vec<f64> = per_replica.iter().map(|r| r[ni].0).collect();
        let dg: Vec<f64> = per_replica.iter().map(|r| r[ni].1).collect();
        let dh: Vec<f64> = per_replica.iter().map(|r| r[ni].2).collect();
        quantiles[0].push(quantile(&dv, q));
        quantiles[1].push(quantile(&dg, q));
        quantiles[2].push(quantile(&dh, q));
    }
    let xs: Vec<f64> = s
        .n_grid
        .iter()
        .map(|&n| (n as f64 / (n as f64).ln()).ln())
        .collect();
    let level_names = ["risk", "gradient", "hessian"];
    let mut details = Vec::new();
    let mut worst = 0.0f64;
    for (level, qs) in quantiles.iter().enumerate() {
        if qs.iter().all(|&v| v < 1e-12) {
            details.push(format!(
                "{}: identically zero at all n (degenerate PASS)",
                level_names[level]
            ));
            continue;
        }
        let ys: Vec<f64> = qs.iter().map(|v| v.ln()).collect();
        let (slope, _, r2) = linear_regression(&xs, &ys);
        let dist = (slope + 0.5).abs();
        worst = worst.max(dist);
        details.push(format!(
            "{}: slope {:.4} (target -0.5 +- 0.1), r2 {:.4}, quantiles {:?}",
            level_names[level], slope, r2, qs
        ));
    }
    let status = if worst <= 0.1 { Status::Pass } else { Status::Fail };
    Ok(OracleVerdict {
        name: "uniform_deviation_scaling".into(),
        status,
        statistic: worst,
        threshold: 0.1,
        standard_error: None,
        seed,
        sample_count: (s.dataset_replicas * s.n_grid.len()) as u64,
        details,
    })
}
