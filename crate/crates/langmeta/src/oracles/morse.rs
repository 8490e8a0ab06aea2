//! Transfer check: a population risk certified strongly Morse at doubled
//! margins should yield empirical risks certified at the base margins for
//! all but a delta-fraction of datasets.

use super::{OracleVerdict, Status};
use crate::error::{Error, Result};
use crate::exec::map_replicas;
use crate::landscape::{
    build_tilted_double_well_erm, certify_strongly_morse, certify_strongly_morse_population,
    Dataset,
};
use crate::rng::derive_replica_seed;
use crate::stats::wilson_interval;

#[derive(Debug, Clone)]
pub struct MorseTransferSettings {
    pub barrier_scale: f64,
    pub tilt_radius: f64,
    pub eps0: f64,
    pub m: f64,
    pub n: usize,
    pub dataset_replicas: usize,
    pub grid_resolution: usize,
    pub delta: f64,
}

impl Default for MorseTransferSettings {
    fn default() -> Self {
        Self {
            barrier_scale: 1.0,
            tilt_radius: 0.5,
            eps0: 0.05,
            m: 0.4,
            n: 200,
            dataset_replicas: 200,
            grid_resolution: 801,
            delta: 0.05,
        }
    }
}

impl MorseTransferSettings {
    pub fn run(&self, seed: u64) -> Result<OracleVerdict> {
        verify_strongly_morse_transfer(self, seed)
    }
}

/// Certifies the population risk at (2 eps0, 2m), then counts the fraction of
/// dataset replicas whose empirical risk certifies at (eps0, m); PASS iff
/// the Wilson upper bound on that fraction reaches 1 - delta.
pub fn verify_strongly_morse_transfer(
    settings: &MorseTransferSettings,
    seed: u64,
) -> Result<OracleVerdict> {
    let s = settings;
    if s.dataset_replicas < 20 {
        return Err(Error::ParamOutOfRange(
            "morse transfer oracle needs >= 20 dataset replicas".into(),
        ));
    }
    // the population risk is dataset-independent; any instance carries it
    let probe = build_tilted_double_well_erm(
        &Dataset::truncated_gaussian(1, 1, s.tilt_radius, seed)?,
        s.barrier_scale,
        s.tilt_radius,
    )?;
    let pop = certify_strongly_morse_population(
        &probe,
        2.0 * s.eps0,
        2.0 * s.m,
        s.grid_resolution,
    )?;
    if !pop.pass {
        return Err(Error::PopulationCertificateMissing(format!(
            "population risk fails the ({}, {}) certificate",
            2.0 * s.eps0,
            2.0 * s.m
        )));
    }
    let passes: Vec<bool> = map_replicas(s.dataset_replicas, |rep| {
        let ds_seed = derive_replica_seed(seed, rep as u64);
        let ds = Dataset::truncated_gaussian(1, s.n, s.tilt_radius, ds_seed).unwrap();
        let f = build_tilted_double_well_erm(&ds, s.barrier_scale, s.tilt_radius).unwrap();
        certify_strongly_morse(&f, s.eps0, s.m, s.grid_resolution)
            .map(|rep| rep.pass)
            .unwrap_or(false)
    });
    let hits = passes.iter().filter(|&&p| p).count();
    let fraction = hits as f64 / s.dataset_replicas as f64;
    let (_, upper) = wilson_interval(hits, s.dataset_replicas);
    let threshold = 1.0 - s.delta;
    let status = if upper >= threshold {
        Status::Pass
    } else {
        Status::Fail
    };
    Ok(OracleVerdict {
        name: "strongly_morse_transfer".into(),
        status,
        statistic: upper,
        threshold,
        standard_error: Some(
            (fraction * (1.0 - fraction) / s.dataset_replicas as f64).sqrt(),
        ),
        seed,
        sample_count: s.dataset_replicas as u64,
        details: vec![
            format!(
                "population certified at ({}, {}); empirical pass fraction {:.4} ({} of {}) at ({}, {})",
                2.0 * s.eps0,
                2.0 * s.m,
                fraction,
                hits,
                s.dataset_replicas,
                s.eps0,
                s.m
            ),
        ],
    })
}
