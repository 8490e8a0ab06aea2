use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Landscape, LocalMinimum};
use crate::error::{Error, Result};

/// Deterministic gradient descent followed by Newton refinement. Fails if the
/// gradient tolerance is not reached, or if the Hessian at the found point has
/// an eigenvalue below the declared dissipativity m (degenerate minimum).
pub fn find_local_minimum(
    landscape: &dyn Landscape,
    start: &DVector<f64>,
    tolerance: f64,
) -> Result<LocalMinimum> {
    let m_lip = landscape.constants().grad_lipschitz;
    let step = 1.0 / m_lip;
    let mut w = start.clone();
    let gd_budget = 200_000;
    let mut reached_coarse = false;
    for _ in 0..gd_budget {
        let g = landscape.gradient(&w);
        if g.norm() <= tolerance.sqrt().min(1e-3) {
            reached_coarse = true;
            break;
        }
        w -= g * step;
    }
    if !reached_coarse {
        return Err(Error::NoConvergence(gd_budget));
    }
    // Newton refinement
    for _ in 0..100 {
        let g = landscape.gradient(&w);
        if g.norm() <= tolerance {
            break;
        }
        let h = landscape.hessian(&w);
        let delta = h
            .lu()
            .solve(&g)
            .ok_or_else(|| Error::NotPositiveDefinite("Hessian singular in Newton step".into()))?;
        w -= delta;
    }
    let residual = landscape.gradient(&w).norm();
    if residual > tolerance {
        return Err(Error::NoConvergence(gd_budget + 100));
    }
    let hessian = landscape.hessian(&w);
    let eig = hessian.clone().symmetric_eigenvalues();
    let min_eigenvalue = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let m = landscape.constants().dissipativity_m;
    if min_eigenvalue < m {
        return Err(Error::DegenerateMinimum {
            lambda_min: min_eigenvalue,
            m,
        });
    }
    Ok(LocalMinimum {
        location: w,
        hessian,
        min_eigenvalue,
        gradient_norm_residual: residual,
    })
}

#[derive(Debug, Clone)]
pub struct DissipativityReport {
    pub m: f64,
    pub b: f64,
    pub probe_count: usize,
    pub probe_seed: u64,
    pub min_margin: f64,
    pub worst_point: DVector<f64>,
    pub pass: bool,
}

/// Probes <w, grad F(w)> - m ||w||^2 + b at seeded directions over an
/// expanding radius schedule covering [0, 2R]. PASS iff the worst margin is
/// >= -1e-9. FAIL is a report outcome, not an error.
pub fn check_dissipativity(
    landscape: &dyn Landscape,
    m: f64,
    b: f64,
    probe_count: usize,
) -> DissipativityReport {
    let probe_seed = 0x5EEDu64;
    let d = landscape.dim();
    let r_max = 2.0 * landscape.constants().radius;
    let mut rng = ChaCha8Rng::seed_from_u64(probe_seed);
    let mut min_margin = f64::INFINITY;
    let mut worst_point = DVector::zeros(d);
    for i in 0..probe_count.max(1) {
        let frac = if probe_count > 1 {
            i as f64 / (probe_count - 1) as f64
        } else {
            1.0
        };
        let radius = frac * r_max;
        let mut dir = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = dir.norm();
        if n > 0.0 {
            dir /= n;
        }
        let w = dir * radius;
        let margin = w.dot(&landscape.gradient(&w)) - m * w.norm_squared() + b;
        if margin < min_margin {
            min_margin = margin;
            worst_point = w;
        }
    }
    DissipativityReport {
        m,
        b,
        probe_count,
        probe_seed,
        min_margin,
        worst_point,
        pass: min_margin >= -1e-9,
    }
}

#[derive(Debug, Clone)]
pub struct MorseReport {
    pub eps0: f64,
    pub m: f64,
    pub grid_resolution: usize,
    pub near_stationary_points: usize,
    pub pass: bool,
    /// Near-stationary grid point with the smallest |lambda|_min, if any.
    pub worst_point: Option<DVector<f64>>,
    pub worst_min_abs_eigenvalue: Option<f64>,
}

const MORSE_MAX_DIM: usize = 3;

/// Grid-sup certification of (eps0, m)-strong Morseness over B^d(R): every
/// grid point with small gradient must have all Hessian eigenvalues at least
/// m in magnitude. Desk-scale only (d <= 3).
pub fn certify_strongly_morse(
    landscape: &dyn Landscape,
    eps0: f64,
    m: f64,
    grid_resolution: usize,
) -> Result<MorseReport> {
    certify_strongly_morse_impl(landscape, eps0, m, grid_resolution, false)
}

/// Same certification applied to the population risk of an ERM family.
pub fn certify_strongly_morse_population(
    landscape: &dyn Landscape,
    eps0: f64,
    m: f64,
    grid_resolution: usize,
) -> Result<MorseReport> {
    certify_strongly_morse_impl(landscape, eps0, m, grid_resolution, true)
}

fn certify_strongly_morse_impl(
    landscape: &dyn Landscape,
    eps0: f64,
    m: f64,
    grid_resolution: usize,
    population: bool,
) -> Result<MorseReport> {
    let d = landscape.dim();
    if d > MORSE_MAX_DIM {
        return Err(Error::DimensionTooLarge(d, MORSE_MAX_DIM));
    }
    if grid_resolution < 2 {
        return Err(Error::InvalidConfig("grid_resolution must be >= 2".into()));
    }
    let radius = landscape.constants().radius;
    let n = grid_resolution;
    let mut near_stationary = 0usize;
    let mut worst: Option<(DVector<f64>, f64)> = None;
    let total = n.pow(d as u32);
    for idx in 0..total {
        let mut rem = idx;
        let mut w = DVector::zeros(d);
        for j in 0..d {
            let i = rem % n;
            rem /= n;
            w[j] = -radius + 2.0 * radius * i as f64 / (n - 1) as f64;
        }
        if w.norm() > radius {
            continue;
        }
        let grad_norm = if population {
            landscape
                .population_gradient(&w)
                .ok_or_else(|| {
                    Error::PopulationCertificateMissing("family has no population gradient".into())
                })?
                .norm()
        } else {
            landscape.gradient(&w).norm()
        };
        if grad_norm > eps0 {
            continue;
        }
        near_stationary += 1;
        let h = if population {
            landscape.population_hessian(&w).ok_or_else(|| {
                Error::PopulationCertificateMissing("family has no population Hessian".into())
            })?
        } else {
            landscape.hessian(&w)
        };
        let eig = h.symmetric_eigenvalues();
        let min_abs = eig.iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min);
        if worst.as_ref().map_or(true, |(_, v)| min_abs < *v) {
            worst = Some((w, min_abs));
        }
    }
    let pass = worst.as_ref().map_or(true, |(_, v)| *v >= m);
    let (worst_point, worst_min_abs) = match worst {
        Some((w, v)) => (Some(w), Some(v)),
        None => (None, None),
    };
    Ok(MorseReport {
        eps0,
        m,
        grid_resolution,
        near_stationary_points: near_stationary,
        pass,
        worst_point,
        worst_min_abs_eigenvalue: worst_min_abs,
    })
}
