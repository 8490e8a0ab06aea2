//! Two-event path classification, stopping-time estimation, the violation-rate
//! study, the escape-time beta sweep, and the inter-grid oscillation check.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_discrete_langevin, Beta, LangevinConfig, Trajectory, TrajectoryKind};
use crate::error::{Error, Result};
use crate::exec::map_replicas;
use crate::landscape::{Landscape, LocalMinimum};
use crate::rng::{derive_replica_seed, NoiseSource};
use crate::stats::{linear_regression, wilson_interval};
use crate::theory::{self, ProblemParams};

/// Shrinking tube around a local minimum: radius rho(t) = epsilon + r e^{-mt}
/// measured in the local Hessian norm ||v||_H = sqrt(<v, Hv>).
#[derive(Debug, Clone)]
pub struct TubeSpec {
    pub center: DVector<f64>,
    pub h: DMatrix<f64>,
    pub epsilon: f64,
    pub r: f64,
    pub m: f64,
}

impl TubeSpec {
    pub fn new(center: DVector<f64>, h: DMatrix<f64>, epsilon: f64, r: f64, m: f64) -> Result<Self> {
        if !(epsilon > 0.0 && r > 0.0 && m > 0.0) {
            return Err(Error::ParamOutOfRange(
                "tube requires epsilon, r, m > 0".into(),
            ));
        }
        if h.nrows() != center.len() || h.ncols() != center.len() {
            return Err(Error::InvalidConfig("tube H shape mismatch".into()));
        }
        Ok(Self {
            center,
            h,
            epsilon,
            r,
            m,
        })
    }

    /// rho(t) = epsilon + r e^{-mt}; strictly decreasing to epsilon.
    pub fn radius(&self, t: f64) -> f64 {
        self.epsilon + self.r * (-self.m * t).exp()
    }

    pub fn h_distance(&self, w: &DVector<f64>) -> f64 {
        let v = w - &self.center;
        v.dot(&(&self.h * &v)).max(0.0).sqrt()
    }

    /// ||w - center||_H / rho(t).
    pub fn ratio(&self, w: &DVector<f64>, t: f64) -> f64 {
        self.h_distance(w) / self.radius(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "EXIT_EARLY")]
    ExitEarly,
    #[serde(rename = "STAY")]
    Stay,
    #[serde(rename = "VIOLATION")]
    Violation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventClassification {
    pub outcome: Outcome,
    /// First index witnessing the early-exit event, if any.
    pub first_exit_index: Option<usize>,
    /// First grid time with tube ratio >= 1, if reached within the horizon.
    pub tau_estimate: Option<f64>,
    /// Max of ||W - center||_H / (rho(t)/2) over k <= floor(T_rec/eta).
    pub max_tube_ratio_pre: f64,
    /// Max of ||W - center||_H / rho(t) over ceil(T_rec/eta) <= k <= floor(T_esc/eta).
    pub max_tube_ratio_post: f64,
}

/// Classifies one discrete trajectory against the two-event dichotomy:
/// early exit is ||W^{(k)} - center||_H >= rho(k eta)/2 for some
/// k <= floor(T_rec/eta); stay is the full-tube containment over the window
/// ceil(T_rec/eta) <= k <= floor(T_esc/eta); anything else is a violation.
pub fn classify_trajectory(
    traj: &Trajectory,
    tube: &TubeSpec,
    t_rec: f64,
    t_esc: f64,
) -> Result<EventClassification> {
    if traj.kind != TrajectoryKind::Discrete {
        return Err(Error::InvalidConfig(
            "classification applies to the discrete trajectory".into(),
        ));
    }
    if !(t_esc >= t_rec && t_rec >= 0.0) {
        return Err(Error::ParamOutOfRange("need 0 <= T_rec <= T_esc".into()));
    }
    let eta = traj.config.eta;
    if !(eta > 0.0) {
        return Err(Error::InvalidConfig("classification needs eta > 0".into()));
    }
    let k_rec_lo = (t_rec / eta).floor() as usize;
    let k_rec_hi = (t_rec / eta).ceil() as usize;
    let k_esc = (t_esc / eta).floor() as usize;
    if traj.len() <= k_esc {
        return Err(Error::TrajectoryTooShort {
            needed: k_esc + 1,
            have: traj.len(),
        });
    }
    let mut first_exit_index = None;
    let mut max_pre = 0.0f64;
    for k in 0..=k_rec_lo {
        let t = k as f64 * eta;
        let half_ratio = tube.h_distance(&traj.points[k]) / (0.5 * tube.radius(t));
        if half_ratio > max_pre {
            max_pre = half_ratio;
        }
        if half_ratio >= 1.0 && first_exit_index.is_none() {
            first_exit_index = Some(k);
        }
    }
    let mut max_post = 0.0f64;
    for k in k_rec_hi..=k_esc {
        let t = k as f64 * eta;
        let ratio = tube.ratio(&traj.points[k], t);
        if ratio > max_post {
            max_post = ratio;
        }
    }
    let outcome = if first_exit_index.is_some() {
        Outcome::ExitEarly
    } else if max_post <= 1.0 {
        Outcome::Stay
    } else {
        Outcome::Violation
    };
    let tau_estimate = estimate_tau_within(traj, tube, k_esc);
    Ok(EventClassification {
        outcome,
        first_exit_index,
        tau_estimate,
        max_tube_ratio_pre: max_pre,
        max_tube_ratio_post: max_post,
    })
}

/// First grid time with ||W_t - center||_H >= rho(t); `None` when the horizon
/// ends with the path still inside (censored).
pub fn estimate_tau(traj: &Trajectory, tube: &TubeSpec) -> Option<f64> {
    estimate_tau_within(traj, tube, traj.len().saturating_sub(1))
}

fn estimate_tau_within(traj: &Trajectory, tube: &TubeSpec, last: usize) -> Option<f64> {
    for (k, (t, w)) in traj.times.iter().zip(&traj.points).enumerate() {
        if k > last {
            break;
        }
        if tube.ratio(w, *t) >= 1.0 {
            return Some(*t);
        }
    }
    None
}

/// How the violation study picks its hyperparameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum EtaBetaChoice {
    /// Computed jointly from the problem parameters.
    Auto,
    Fixed { eta: f64, beta: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViolationReport {
    pub eta: f64,
    pub beta: f64,
    pub admissible: bool,
    pub overridden: bool,
    pub t_rec: f64,
    pub t_esc: f64,
    pub horizon_k: usize,
    pub initial_point: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    pub exit_early: usize,
    pub stay: usize,
    pub violation: usize,
    pub violation_fraction: f64,
    pub violation_wilson_low: f64,
    pub violation_wilson_high: f64,
    pub delta: f64,
}

/// Canonical initial point center + (r / sqrt(lambda_max(H))) e1, pulled back
/// into the Euclidean ball of radius R when necessary.
pub fn default_initial_point(
    local_min: &LocalMinimum,
    r: f64,
    big_radius: f64,
) -> DVector<f64> {
    let lambda_max = local_min
        .hessian
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut w0 = local_min.location.clone();
    w0[0] += r / lambda_max.sqrt();
    let norm = w0.norm();
    if norm > big_radius && norm > 0.0 {
        w0 *= big_radius / norm;
    }
    w0
}

/// Runs `replicas` independent discrete trajectories from the canonical
/// initial point and tallies the classification outcomes against delta.
pub fn run_violation_study(
    landscape: &dyn Landscape,
    local_min: &LocalMinimum,
    params: &ProblemParams,
    choice: EtaBetaChoice,
    override_admissibility: bool,
    replicas: usize,
    seed: u64,
) -> Result<ViolationReport> {
    let t_rec = theory::recurrence_time(params)?;
    let t_esc = t_rec + params.t_dwell;
    let (eta, beta) = match choice {
        EtaBetaChoice::Auto => {
            let adm = theory::admissible_eta_beta(params)?;
            (adm.eta_max, adm.beta_min)
        }
        EtaBetaChoice::Fixed { eta, beta } => (eta, beta),
    };
    let admissible = theory::is_admissible(params, eta, beta).unwrap_or(false);
    if !admissible && !override_admissibility {
        return Err(Error::Inadmissible {
            eta,
            beta,
            reason: "pair fails the joint step-size/temperature conditions".into(),
        });
    }
    let tube = TubeSpec::new(
        local_min.location.clone(),
        local_min.hessian.clone(),
        params.epsilon,
        params.r,
        params.constants.dissipativity_m,
    )?;
    let w0 = default_initial_point(local_min, params.r, params.constants.radius);
    let horizon_k = ((t_esc / eta).floor() as usize).max(1);
    let outcomes: Vec<Result<Outcome>> = map_replicas(replicas, |i| {
        let cfg = LangevinConfig {
            eta,
            beta: Beta::Finite(beta),
            horizon_k,
            initial_point: w0.iter().cloned().collect(),
            seed: derive_replica_seed(seed, i as u64),
        };
        let traj = run_discrete_langevin(landscape, &cfg)?;
        Ok(classify_trajectory(&traj, &tube, t_rec, t_esc)?.outcome)
    });
    let mut exit_early = 0;
    let mut stay = 0;
    let mut violation = 0;
    for o in outcomes {
        match o? {
            Outcome::ExitEarly => exit_early += 1,
            Outcome::Stay => stay += 1,
            Outcome::Violation => violation += 1,
        }
    }
    let (lo, hi) = wilson_interval(violation, replicas);
    Ok(ViolationReport {
        eta,
        beta,
        admissible,
        overridden: !admissible,
        t_rec,
        t_esc,
        horizon_k,
        initial_point: w0.iter().cloned().collect(),
        replicas,
        seed,
        exit_early,
        stay,
        violation,
        violation_fraction: violation as f64 / replicas.max(1) as f64,
        violation_wilson_low: lo,
        violation_wilson_high: hi,
        delta: params.delta,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EscapeStats {
    pub betas: Vec<f64>,
    /// Mean over uncensored replicas; `None` when every replica was censored.
    pub mean_escape: Vec<Option<f64>>,
    pub log_mean_escape: Vec<Option<f64>>,
    pub replica_counts: Vec<usize>,
    pub censored_counts: Vec<usize>,
    /// Per (beta, replica) escape time; `None` marks a censored run.
    pub escape_times: Vec<Vec<Option<f64>>>,
    /// (slope, intercept, r^2) of log mean escape vs beta over the betas with
    /// at least one uncensored replica; absent with fewer than two such betas.
    pub regression: Option<(f64, f64, f64)>,
    pub eta: f64,
    pub budget_k: usize,
    pub seed: u64,
}

/// First-passage sweep: for each beta, the mean first time the iterate leaves
/// the starting basin (sign change of w1 relative to the starting minimum).
/// Runs are early-stopped at the crossing, so only first-passage times are
/// retained, never whole trajectories.
pub fn escape_time_sweep(
    landscape: &dyn Landscape,
    local_min: &LocalMinimum,
    betas: &[f64],
    eta: f64,
    budget_k: usize,
    replicas: usize,
    seed: u64,
) -> Result<EscapeStats> {
    if betas.windows(2).any(|w| w[1] <= w[0]) || betas.is_empty() {
        return Err(Error::ParamOutOfRange(
            "betas must be nonempty and strictly increasing".into(),
        ));
    }
    if !(eta > 0.0) {
        return Err(Error::ParamOutOfRange("eta must be > 0".into()));
    }
    let basin_sign = local_min.location[0].signum();
    if basin_sign == 0.0 {
        return Err(Error::InvalidConfig(
            "starting minimum sits on the separating hyperplane".into(),
        ));
    }
    let mut mean_escape = Vec::with_capacity(betas.len());
    let mut log_mean = Vec::with_capacity(betas.len());
    let mut censored_counts = Vec::with_capacity(betas.len());
    let mut escape_times = Vec::with_capacity(betas.len());
    for (bi, &beta) in betas.iter().enumerate() {
        let times: Vec<Option<f64>> = map_replicas(replicas, |i| {
            first_passage_time(
                landscape,
                &local_min.location,
                basin_sign,
                eta,
                beta,
                budget_k,
                derive_replica_seed(seed, (bi * replicas + i) as u64),
            )
        });
        let uncensored: Vec<f64> = times.iter().filter_map(|t| *t).collect();
        let censored = replicas - uncensored.len();
        let mean = if uncensored.is_empty() {
            None
        } else {
            Some(uncensored.iter().sum::<f64>() / uncensored.len() as f64)
        };
        mean_escape.push(mean);
        log_mean.push(mean.map(f64::ln));
        censored_counts.push(censored);
        escape_times.push(times);
    }
    let pts: Vec<(f64, f64)> = betas
        .iter()
        .zip(&log_mean)
        .filter_map(|(b, l)| l.map(|l| (*b, l)))
        .collect();
    let regression = if pts.len() >= 2 {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        Some(linear_regression(&xs, &ys))
    } else {
        None
    };
    Ok(EscapeStats {
        betas: betas.to_vec(),
        mean_escape,
        log_mean_escape: log_mean,
        replica_counts: vec![replicas; betas.len()],
        censored_counts,
        escape_times,
        regression,
        eta,
        budget_k,
        seed,
    })
}

/// Single early-stopped run; returns the first time k*eta with
/// sign(w1) != sign of the starting basin, or None if censored at the budget.
fn first_passage_time(
    landscape: &dyn Landscape,
    w0: &DVector<f64>,
    basin_sign: f64,
    eta: f64,
    beta: f64,
    budget_k: usize,
    seed: u64,
) -> Option<f64> {
    let d = w0.len();
    let scale = (2.0 * eta / beta).sqrt();
    let mut noise = NoiseSource::new(seed);
    let mut xi = vec![0.0f64; d];
    let mut w = w0.clone();
    for k in 0..budget_k {
        let g = landscape.gradient(&w);
        noise.fill_step(k as u64, &mut xi);
        for j in 0..d {
            w[j] = w[j] - eta * g[j] + scale * xi[j];
        }
        if w[0].signum() != basin_sign {
            return Some((k + 1) as f64 * eta);
        }
    }
    None
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OscillationReport {
    pub intervals: usize,
    pub threshold: f64,
    pub violating_intervals: usize,
    pub violation_fraction: f64,
    pub max_oscillation: f64,
    pub median_oscillation: f64,
    pub q90_oscillation: f64,
}

/// Measures, on a fine-substep trajectory, the per-interval quantity
/// max over substep t in [t_k, t_{k+1}] of ||W_t - W_{t_{k+1}}||, and compares
/// it against the threshold epsilon / (2 sqrt(M)).
pub fn interstep_oscillation_check(
    traj: &Trajectory,
    epsilon: f64,
    m_lip: f64,
) -> Result<OscillationReport> {
    if traj.kind != TrajectoryKind::DiffusionProxy {
        return Err(Error::InvalidConfig(
            "oscillation check needs a fine-substep trajectory".into(),
        ));
    }
    let sf = traj.substep_factor;
    if sf < 4 {
        return Err(Error::SubstepTooCoarse(sf));
    }
    if !(epsilon > 0.0 && m_lip > 0.0) {
        return Err(Error::ParamOutOfRange("epsilon, M must be > 0".into()));
    }
    let intervals = (traj.len() - 1) / sf;
    if intervals == 0 {
        return Err(Error::TrajectoryTooShort {
            needed: sf + 1,
            have: traj.len(),
        });
    }
    let threshold = epsilon / (2.0 * m_lip.sqrt());
    let mut oscillations = Vec::with_capacity(intervals);
    for k in 0..intervals {
        let end = &traj.points[(k + 1) * sf];
        let mut worst = 0.0f64;
        for s in 0..=sf {
            let osc = (&traj.points[k * sf + s] - end).norm();
            if osc > worst {
                worst = osc;
            }
        }
        oscillations.push(worst);
    }
    let violating = oscillations.iter().filter(|&&o| o > threshold).count();
    let max = oscillations.iter().cloned().fold(0.0f64, f64::max);
    Ok(OscillationReport {
        intervals,
        threshold,
        violating_intervals: violating,
        violation_fraction: violating as f64 / intervals as f64,
        max_oscillation: max,
        median_oscillation: crate::stats::quantile(&oscillations, 0.5),
        q90_oscillation: crate::stats::quantile(&oscillations, 0.9),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::run_diffusion_proxy;
    use crate::landscape::{build_double_well, build_quadratic, find_local_minimum};
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    fn unit_tube(eps: f64, r: f64, m: f64) -> TubeSpec {
        TubeSpec::new(dvector![0.0], dmatrix![1.0], eps, r, m).unwrap()
    }

    fn synthetic_discrete(eta: f64, points: Vec<DVector<f64>>) -> Trajectory {
        let times = (0..points.len()).map(|k| k as f64 * eta).collect();
        Trajectory {
            kind: TrajectoryKind::Discrete,
            times,
            config: LangevinConfig {
                eta,
                beta: Beta::Infinite,
                horizon_k: points.len() - 1,
                initial_point: points[0].iter().cloned().collect(),
                seed: 0,
            },
            points,
            substep_factor: 1,
        }
    }

    #[test]
    fn constant_center_trajectory_stays() {
        let traj = synthetic_discrete(0.1, vec![dvector![0.0]; 101]);
        let tube = unit_tube(0.2, 0.5, 1.0);
        let c = classify_trajectory(&traj, &tube, 2.0, 10.0).unwrap();
        assert_eq!(c.outcome, Outcome::Stay);
        assert_eq!(c.first_exit_index, None);
        assert_eq!(c.max_tube_ratio_pre, 0.0);
        assert_eq!(c.max_tube_ratio_post, 0.0);
        assert_eq!(c.tau_estimate, None);
    }

    #[test]
    fn early_jump_is_exit_early() {
        let mut pts = vec![dvector![0.0]; 101];
        let tube = unit_tube(0.2, 0.5, 1.0);
        for p in pts.iter_mut().skip(1) {
            *p = dvector![10.0 * (tube.epsilon + tube.r)];
        }
        let traj = synthetic_discrete(0.1, pts);
        let c = classify_trajectory(&traj, &tube, 2.0, 10.0).unwrap();
        assert_eq!(c.outcome, Outcome::ExitEarly);
        assert_eq!(c.first_exit_index, Some(1));
        assert_eq!(c.tau_estimate, Some(0.1));
    }

    #[test]
    fn late_crossing_is_violation() {
        // inside the half-tube through T_rec, one full-tube crossing later
        let tube = unit_tube(0.2, 0.5, 1.0);
        let mut pts = vec![dvector![0.0]; 101];
        pts[60] = dvector![2.0 * tube.radius(6.0)];
        let traj = synthetic_discrete(0.1, pts);
        let c = classify_trajectory(&traj, &tube, 2.0, 10.0).unwrap();
        assert_eq!(c.outcome, Outcome::Violation);
        assert!(c.max_tube_ratio_post > 1.0);
        assert_eq!(c.first_exit_index, None);
    }

    #[test]
    fn too_short_trajectory_errors() {
        let traj = synthetic_discrete(0.1, vec![dvector![0.0]; 10]);
        let tube = unit_tube(0.2, 0.5, 1.0);
        assert!(matches!(
            classify_trajectory(&traj, &tube, 2.0, 10.0),
            Err(Error::TrajectoryTooShort { .. })
        ));
    }

    #[test]
    fn appending_iterates_does_not_change_class() {
        let tube = unit_tube(0.2, 0.5, 1.0);
        let mut pts = vec![dvector![0.0]; 101];
        pts[60] = dvector![2.0 * tube.radius(6.0)];
        let base = classify_trajectory(&synthetic_discrete(0.1, pts.clone()), &tube, 2.0, 10.0)
            .unwrap();
        pts.extend(vec![dvector![100.0]; 50]);
        let longer =
            classify_trajectory(&synthetic_discrete(0.1, pts), &tube, 2.0, 10.0).unwrap();
        assert_eq!(base.outcome, longer.outcome);
        assert_eq!(base.max_tube_ratio_post, longer.max_tube_ratio_post);
    }

    #[test]
    fn tube_rescaling_invariance() {
        // H -> c^2 H with (eps, r) -> (c eps, c r) leaves ratios unchanged
        let c = 3.7f64;
        let pts: Vec<DVector<f64>> = (0..101)
            .map(|k| dvector![0.3 * ((k as f64) * 0.37).sin(), 0.2 * ((k as f64) * 0.11).cos()])
            .collect();
        let h = dmatrix![2.0, 0.3; 0.3, 1.0];
        let t1 = TubeSpec::new(dvector![0.0, 0.0], h.clone(), 0.2, 0.5, 1.0).unwrap();
        let t2 = TubeSpec::new(dvector![0.0, 0.0], h * (c * c), c * 0.2, c * 0.5, 1.0).unwrap();
        let traj = synthetic_discrete(0.1, pts);
        let a = classify_trajectory(&traj, &t1, 2.0, 10.0).unwrap();
        let b = classify_trajectory(&traj, &t2, 2.0, 10.0).unwrap();
        assert_eq!(a.outcome, b.outcome);
        assert_relative_eq!(a.max_tube_ratio_post, b.max_tube_ratio_post, max_relative = 1e-12);
        assert_eq!(a.tau_estimate, b.tau_estimate);
    }

    #[test]
    fn tau_outside_start_is_zero() {
        let tube = unit_tube(0.2, 0.5, 1.0);
        let traj = synthetic_discrete(0.1, vec![dvector![5.0]; 3]);
        assert_eq!(estimate_tau(&traj, &tube), Some(0.0));
    }

    #[test]
    fn tau_noiseless_contraction_is_censored() {
        // noiseless quadratic from H-distance r: ||Y_t||_H = r e^{-mt} < rho(t)
        let f = build_quadratic(1, 1.0).unwrap();
        let cfg = LangevinConfig {
            eta: 0.001,
            beta: Beta::Infinite,
            horizon_k: 20_000,
            initial_point: vec![0.5],
            seed: 0,
        };
        let traj = run_discrete_langevin(&f, &cfg).unwrap();
        let tube = unit_tube(0.1, 0.5, 1.0);
        assert_eq!(estimate_tau(&traj, &tube), None);
    }

    #[test]
    fn tau_monotone_in_epsilon() {
        let f = build_double_well(1, 1.0).unwrap();
        let mut prev: Option<f64> = None;
        for (i, eps) in [0.05, 0.1, 0.2, 0.4].iter().enumerate() {
            let cfg = LangevinConfig {
                eta: 0.01,
                beta: Beta::Finite(6.0),
                horizon_k: 20_000,
                initial_point: vec![1.0],
                seed: 99,
            };
            let traj = run_discrete_langevin(&f, &cfg).unwrap();
            let tube = TubeSpec::new(dvector![1.0], dmatrix![2.0], *eps, 0.3, 0.5).unwrap();
            let tau = estimate_tau(&traj, &tube).unwrap_or(f64::INFINITY);
            if i > 0 {
                assert!(tau >= prev.unwrap(), "tau shrank when the tube grew");
            }
            prev = Some(tau);
        }
    }

    #[test]
    fn violation_study_noiseless_override_all_stay() {
        // beta = infinity analogue: a huge finite beta from inside the
        // half-tube on the quadratic contracts deterministically
        let f = build_quadratic(1, 1.0).unwrap();
        let lm = find_local_minimum(&f, &dvector![0.2], 1e-12).unwrap();
        // r <= epsilon keeps the canonical start inside the half-tube
        let p = ProblemParams::new(f.constants().clone(), 1, 0.3, 0.1, 0.2, 1.0).unwrap();
        let rep = run_violation_study(
            &f,
            &lm,
            &p,
            EtaBetaChoice::Fixed {
                eta: 0.01,
                beta: 1e12,
            },
            true,
            20,
            7,
        )
        .unwrap();
        assert_eq!(rep.stay, 20);
        assert_eq!(rep.violation, 0);
        assert!(rep.overridden);
    }

    #[test]
    fn violation_study_rejects_inadmissible_without_override() {
        let f = build_quadratic(1, 1.0).unwrap();
        let lm = find_local_minimum(&f, &dvector![0.2], 1e-12).unwrap();
        let p = ProblemParams::new(f.constants().clone(), 1, 0.2, 0.1, 0.4, 1.0).unwrap();
        let err = run_violation_study(
            &f,
            &lm,
            &p,
            EtaBetaChoice::Fixed { eta: 0.5, beta: 1.0 },
            false,
            10,
            7,
        );
        assert!(matches!(err, Err(Error::Inadmissible { .. })));
    }

    #[test]
    fn violation_study_is_deterministic() {
        let f = build_quadratic(1, 1.0).unwrap();
        let lm = find_local_minimum(&f, &dvector![0.2], 1e-12).unwrap();
        let p = ProblemParams::new(f.constants().clone(), 1, 0.2, 0.1, 0.4, 1.0).unwrap();
        let run = || {
            run_violation_study(
                &f,
                &lm,
                &p,
                EtaBetaChoice::Fixed {
                    eta: 0.005,
                    beta: 300.0,
                },
                true,
                50,
                12,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn escape_sweep_rejects_unsorted_betas() {
        let f = build_double_well(1, 1.0).unwrap();
        let lm = find_local_minimum(&f, &dvector![0.9], 1e-10).unwrap();
        assert!(escape_time_sweep(&f, &lm, &[10.0, 8.0], 0.01, 100, 4, 0).is_err());
    }

    #[test]
    fn escape_sweep_censors_at_tiny_budget() {
        let f = build_double_well(1, 1.0).unwrap();
        let lm = find_local_minimum(&f, &dvector![0.9], 1e-10).unwrap();
        let stats = escape_time_sweep(&f, &lm, &[50.0], 0.01, 10, 8, 3).unwrap();
        assert_eq!(stats.censored_counts[0], 8);
        assert_eq!(stats.mean_escape[0], None);
        assert!(stats.regression.is_none());
    }

    #[test]
    fn escape_time_grows_with_beta() {
        let f = build_double_well(1, 1.0).unwrap();
        let lm = find_local_minimum(&f, &dvector![0.9], 1e-10).unwrap();
        let stats = escape_time_sweep(&f, &lm, &[4.0, 8.0], 0.02, 60_000, 24, 11).unwrap();
        let m4 = stats.mean_escape[0].unwrap();
        let m8 = stats.mean_escape[1].unwrap();
        assert!(m8 > m4, "mean escape {m8} at beta 8 vs {m4} at beta 4");
    }

    #[test]
    fn oscillation_noiseless_far_below_threshold() {
        // noiseless drift gap on the quadratic is O(eta ||w||), way below
        // eps/(2 sqrt(M)) for small eta
        let f = build_quadratic(1, 1.0).unwrap();
        let cfg = LangevinConfig {
            eta: 0.001,
            beta: Beta::Infinite,
            horizon_k: 100,
            initial_point: vec![1.0],
            seed: 0,
        };
        let traj = run_diffusion_proxy(&f, &cfg, 8).unwrap();
        let rep = interstep_oscillation_check(&traj, 0.2, 1.0).unwrap();
        assert_eq!(rep.violating_intervals, 0);
        assert!(rep.max_oscillation < 0.001 * 1.1);
    }

    #[test]
    fn oscillation_rejects_coarse_substeps() {
        let f = build_quadratic(1, 1.0).unwrap();
        let cfg = LangevinConfig {
            eta: 0.001,
            beta: Beta::Infinite,
            horizon_k: 10,
            initial_point: vec![1.0],
            seed: 0,
        };
        let traj = run_diffusion_proxy(&f, &cfg, 2).unwrap();
        assert!(matches!(
            interstep_oscillation_check(&traj, 0.2, 1.0),
            Err(Error::SubstepTooCoarse(2))
        ));
    }

    #[test]
    fn oscillation_grows_with_eta() {
        let f = build_quadratic(1, 1.0).unwrap();
        let run = |eta: f64| {
            let cfg = LangevinConfig {
                eta,
                beta: Beta::Finite(10.0),
                horizon_k: 400,
                initial_point: vec![0.0],
                seed: 21,
            };
            let traj = run_diffusion_proxy(&f, &cfg, 8).unwrap();
            interstep_oscillation_check(&traj, 0.2, 1.0).unwrap()
        };
        let small = run(0.005);
        let large = run(0.02);
        assert!(large.median_oscillation > small.median_oscillation);
        assert!(large.q90_oscillation > small.q90_oscillation);
    }
}
