//! Monte Carlo dominance check for the sub-Gaussian tail bound on the
//! supremum of the transformed Ornstein-Uhlenbeck noise martingale.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{OracleVerdict, Status};
use crate::dynamics::OuLinearization;
use crate::error::{Error, Result};
use crate::exec::map_replicas;
use crate::rng::derive_replica_seed;
use crate::stats::wilson_interval;
use crate::theory::martingale_tail_bound;

/// Default verification setting: a 2-d diagonal linearization probed on an
/// 8-point h-grid.
#[derive(Debug, Clone)]
pub struct TailSettings {
    pub eigenvalues: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
    pub beta: f64,
    pub y0: Vec<f64>,
    pub h_grid: Vec<f64>,
    pub replicas: usize,
    pub substeps: usize,
}

impl Default for TailSettings {
    fn default() -> Self {
        Self {
            eigenvalues: vec![1.0, 2.0],
            t0: 0.5,
            t1: 1.0,
            beta: 10.0,
            y0: vec![0.0, 0.0],
            h_grid: vec![0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7],
            replicas: 10_000,
            substeps: 64,
        }
    }
}

impl TailSettings {
    pub fn run(&self, seed: u64) -> Result<OracleVerdict> {
        let d = self.eigenvalues.len();
        let lin = OuLinearization::new(
            DVector::zeros(d),
            DMatrix::from_diagonal(&DVector::from_vec(self.eigenvalues.clone())),
        )?;
        verify_martingale_tail(
            &lin,
            self.t0,
            self.t1,
            self.beta,
            &DVector::from_vec(self.y0.clone()),
            &self.h_grid,
            self.replicas,
            self.substeps,
            seed,
        )
    }
}

/// Per-replica supremum over the grid t0 = s_0 < ... < s_substeps = t1 of
/// ||M_t||, where M_t is the transformed noise martingale started from y0.
/// Sampled exactly in the eigenbasis: the accumulation over [0, t0] is one
/// Gaussian lump, each substep adds an independent increment with its exact
/// variance.
fn simulate_sups(
    eigs: &DVector<f64>,
    u0: &DVector<f64>,
    t0: f64,
    t1: f64,
    beta: f64,
    substeps: usize,
    replicas: usize,
    seed: u64,
) -> Vec<f64> {
    let d = eigs.len();
    let mu: Vec<f64> = (0..d)
        .map(|i| eigs[i].sqrt() * (-t1 * eigs[i]).exp() * u0[i])
        .collect();
    let dt = (t1 - t0) / substeps as f64;
    // increment standard deviations: lump over [0, t0], then each substep
    let mut inc_sd = vec![vec![0.0f64; substeps + 1]; d];
    for i in 0..d {
        let l = eigs[i];
        let pref = (-2.0 * t1 * l).exp() / beta;
        inc_sd[i][0] = (pref * ((2.0 * t0 * l).exp() - 1.0)).max(0.0).sqrt();
        for j in 0..substeps {
            let a = t0 + j as f64 * dt;
            let b = t0 + (j + 1) as f64 * dt;
            inc_sd[i][j + 1] = (pref * ((2.0 * b * l).exp() - (2.0 * a * l).exp()))
                .max(0.0)
                .sqrt();
        }
    }
    map_replicas(replicas, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_replica_seed(seed, r as u64));
        let mut m = mu.clone();
        let mut sup = 0.0f64;
        for j in 0..=substeps {
            for i in 0..d {
                let xi: f64 = StandardNormal.sample(&mut rng);
                m[i] += inc_sd[i][j] * xi;
            }
            let norm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > sup {
                sup = norm;
            }
        }
        sup
    })
}

fn empirical_tails(sups: &[f64], h_grid: &[f64]) -> Vec<(f64, f64)> {
    h_grid
        .iter()
        .map(|&h| {
            let hits = sups.iter().filter(|&&s| s >= h).count();
            let (_, hi) = wilson_interval(hits, sups.len());
            (hits as f64 / sups.len() as f64, hi)
        })
        .collect()
}

/// Analytic bound minimized over a lambda grid inside (0, 1/2).
fn best_bound(
    eigs: &DVector<f64>,
    u0: &DVector<f64>,
    t1: f64,
    beta: f64,
    h: f64,
) -> Result<f64> {
    let d = eigs.len();
    let mu = DVector::from_fn(d, |i, _| {
        eigs[i].sqrt() * (-t1 * eigs[i]).exp() * u0[i]
    });
    let sigma = DMatrix::from_diagonal(&DVector::from_fn(d, |i, _| {
        (1.0 - (-2.0 * t1 * eigs[i]).exp()) / beta
    }));
    let mut best = f64::INFINITY;
    for k in 1..10 {
        let lambda = k as f64 * 0.05;
        if let Ok(tb) = martingale_tail_bound(&mu, &sigma, beta, lambda, h) {
            best = best.min(tb.clamped);
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::NotPositiveDefinite(
            "tail bound undefined on the whole lambda grid".into(),
        ))
    }
}

/// PASS iff, at every h, the Wilson upper 95% bound on the empirical tail of
/// sup ||M_t|| is dominated by the analytic bound, and the estimate is stable
/// (< 2% absolute) under doubling the time grid.
#[allow(clippy::too_many_arguments)]
pub fn verify_martingale_tail(
    lin: &OuLinearization,
    t0: f64,
    t1: f64,
    beta: f64,
    y0: &DVector<f64>,
    h_grid: &[f64],
    replicas: usize,
    substeps: usize,
    seed: u64,
) -> Result<OracleVerdict> {
    if !(t0 >= 0.0 && t1 > t0) {
        return Err(Error::ParamOutOfRange("need 0 <= t0 < t1".into()));
    }
    if !(beta > 0.0) {
        return Err(Error::ParamOutOfRange("beta must be > 0".into()));
    }
    if replicas < 10_000 {
        return Err(Error::ParamOutOfRange(format!(
            "tail oracle needs >= 1e4 replicas, got {replicas}"
        )));
    }
    if h_grid.is_empty() || h_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ParamOutOfRange(
            "h_grid must be nonempty and increasing".into(),
        ));
    }
    if substeps < 8 {
        return Err(Error::SubstepTooCoarse(substeps));
    }
    let eigs = lin.eigenvalues.clone();
    let u0 = lin.eigenvectors.transpose() * y0;
    let sups = simulate_sups(&eigs, &u0, t0, t1, beta, substeps, replicas, seed);
    let tails = empirical_tails(&sups, h_grid);
    // refinement study: doubled time grid, fresh noise
    let sups_fine = simulate_sups(
        &eigs,
        &u0,
        t0,
        t1,
        beta,
        substeps * 2,
        replicas,
        derive_replica_seed(seed, u64::MAX),
    );
    let tails_fine = empirical_tails(&sups_fine, h_grid);
    let mut details = Vec::new();
    let mut worst_margin = f64::NEG_INFINITY;
    let mut worst_refine = 0.0f64;
    for ((&h, (p, hi)), (p2, _)) in h_grid.iter().zip(&tails).zip(&tails_fine) {
        let bound = best_bound(&eigs, &u0, t1, beta, h)?;
        let margin = hi - bound;
        let refine = (p - p2).abs();
        worst_margin = worst_margin.max(margin);
        worst_refine = worst_refine.max(refine);
        details.push(format!(
            "h {:.3}: empirical {:.4} (upper {:.4}), bound {:.4}, refinement drift {:.4}",
            h, p, hi, bound, refine
        ));
    }
    details.push(format!(
        "grid sup is a lower bound on the path sup; refinement drift max {worst_refine:.4} (stability threshold 0.02)"
    ));
    let status = if worst_margin > 0.0 {
        Status::Fail
    } else if worst_refine >= 0.02 {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    Ok(OracleVerdict {
        name: "martingale_tail".into(),
        status,
        statistic: worst_margin,
        threshold: 0.0,
        standard_error: Some((0.25 / replicas as f64).sqrt()),
        seed,
        sample_count: replicas as u64,
        details,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_setting_dominates() {
        let v = TailSettings::default().run(7).unwrap();
        assert_eq!(v.status, Status::Pass, "{}", v.render());
    }

    #[test]
    fn vacuous_low_h_still_dominated() {
        // h below the deterministic component with beta huge: tail ~ 1 and
        // the bound is >= 1 (clamped), still dominant
        let mut s = TailSettings::default();
        s.y0 = vec![2.0, 0.0];
        s.beta = 1e4;
        s.h_grid = vec![0.1, 0.4];
        let v = s.run(3).unwrap();
        assert_eq!(v.status, Status::Pass, "{}", v.render());
        assert!(v.details[0].contains("empirical 1.0000"));
    }

    #[test]
    fn rejects_bad_windows_and_small_samples() {
        let s = TailSettings::default();
        let d = s.eigenvalues.len();
        let lin = OuLinearization::new(
            DVector::zeros(d),
            DMatrix::identity(d, d),
        )
        .unwrap();
        let y0 = DVector::zeros(d);
        assert!(verify_martingale_tail(&lin, 0.5, 0.5, 1.0, &y0, &[1.0], 10_000, 16, 0).is_err());
        assert!(verify_martingale_tail(&lin, 0.0, 1.0, 1.0, &y0, &[1.0], 100, 16, 0).is_err());
        assert!(verify_martingale_tail(&lin, 0.0, 1.0, 1.0, &y0, &[], 10_000, 16, 0).is_err());
        assert!(
            verify_martingale_tail(&lin, 0.0, 1.0, 1.0, &y0, &[1.0], 10_000, 4, 0).is_err()
        );
    }
}
