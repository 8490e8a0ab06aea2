//! End-to-end check of the a-posteriori generalization inequality: the
//! population risk at the empirical minimizer is bounded by the best
//! empirical risk seen in the post-recurrence window plus the deviation
//! threshold evaluated with unit constant.

use nalgebra::DVector;

use super::{OracleVerdict, Status};
use crate::dynamics::{run_discrete_langevin, Beta, LangevinConfig};
use crate::error::{Error, Result};
use crate::exec::map_replicas;
use crate::landscape::{build_gaussian_location_erm, find_local_minimum, Dataset, Landscape};
use crate::metastability::TubeSpec;
use crate::rng::derive_replica_seed;
use crate::stats::wilson_interval;
use crate::theory::{self, ProblemParams};

#[derive(Debug, Clone)]
pub struct AposterioriSettings {
    pub d: usize,
    pub n: usize,
    pub dataset_replicas: usize,
    pub trunc_radius: f64,
    pub ridge: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Initial H-distance budget r; the run starts at the minimizer itself,
    /// so any r < 8 epsilon works and only sets T_rec.
    pub r: f64,
    pub t_dwell: f64,
}

impl Default for AposterioriSettings {
    fn default() -> Self {
        Self {
            d: 2,
            n: 2000,
            dataset_replicas: 40,
            trunc_radius: 2.0,
            ridge: 0.1,
            epsilon: 1.0,
            delta: 0.1,
            r: 1.01 / 8.0,
            t_dwell: 0.5,
        }
    }
}

impl AposterioriSettings {
    pub fn run(&self, seed: u64) -> Result<OracleVerdict> {
        verify_aposteriori_bound(self, seed)
    }
}

enum ReplicaOutcome {
    ExitedEarly,
    Retained {
        holds: bool,
        e1: f64,
        e2: f64,
        e2_sign_ok: bool,
    },
}

/// Per dataset replica: locate the empirical minimizer, run the discrete
/// algorithm at the computed admissible pair, discard early exits (H-distance
/// >= 2 epsilon before the recurrence time), and check
/// F(min) <= min_window F_Z + sigma sqrt(d log n / n). PASS iff the Wilson
/// upper bound on the holding fraction among retained replicas reaches
/// 1 - delta.
pub fn verify_aposteriori_bound(
    settings: &AposterioriSettings,
    seed: u64,
) -> Result<OracleVerdict> {
    let s = settings;
    if s.dataset_replicas < 10 {
        return Err(Error::ParamOutOfRange(
            "aposteriori oracle needs >= 10 dataset replicas".into(),
        ));
    }
    // shared landscape-level quantities from a probe instance: constants,
    // admissible pair, thresholds (all dataset-independent)
    let probe = build_gaussian_location_erm(
        &Dataset::truncated_gaussian(s.d, 1, s.trunc_radius, seed)?,
        s.ridge,
        s.trunc_radius,
    )?;
    let k = probe.constants().clone();
    let eps_cap = 3.0 * k.dissipativity_m.powf(1.5) / (2.0 * k.hess_lipschitz);
    if s.epsilon > eps_cap {
        return Err(Error::ParamOutOfRange(format!(
            "epsilon = {} above the curvature cap 3 m^{{3/2}}/(2L) = {eps_cap}",
            s.epsilon
        )));
    }
    let params = ProblemParams::new(k.clone(), s.d, s.epsilon, s.delta, s.r, s.t_dwell)?;
    let adm = theory::admissible_eta_beta(&params)?;
    let (eta, beta) = (adm.eta_max, adm.beta_min);
    let k_rec = (adm.t_rec / eta).floor() as usize;
    let k_lo = (adm.t_rec / eta).ceil() as usize;
    let k_hi = (adm.t_esc / eta).floor() as usize;
    let sigma = {
        let dev = theory::deviation_threshold(&params, s.n.max(16))?;
        dev.sigma
    };
    // unit absolute constant: sigma sqrt(1 * d log n / n)
    let threshold = sigma * (s.d as f64 * (s.n as f64).ln() / s.n as f64).sqrt();
    let outcomes: Vec<Result<ReplicaOutcome>> = map_replicas(s.dataset_replicas, |rep| {
        let ds_seed = derive_replica_seed(seed, 2 * rep as u64);
        let run_seed = derive_replica_seed(seed, 2 * rep as u64 + 1);
        let ds = Dataset::truncated_gaussian(s.d, s.n, s.trunc_radius, ds_seed)?;
        let f = build_gaussian_location_erm(&ds, s.ridge, s.trunc_radius)?;
        let lm = find_local_minimum(&f, &DVector::zeros(s.d), 1e-10)?;
        let tube = TubeSpec::new(
            lm.location.clone(),
            lm.hessian.clone(),
            s.epsilon,
            s.r,
            k.dissipativity_m,
        )?;
        let cfg = LangevinConfig {
            eta,
            beta: Beta::Finite(beta),
            horizon_k: k_hi.max(1),
            initial_point: lm.location.iter().cloned().collect(),
            seed: run_seed,
        };
        let traj = run_discrete_langevin(&f, &cfg)?;
        let two_eps = 2.0 * s.epsilon;
        if traj.points[..=k_rec]
            .iter()
            .any(|w| tube.h_distance(w) >= two_eps)
        {
            return Ok(ReplicaOutcome::ExitedEarly);
        }
        let mut min_emp = f64::INFINITY;
        let mut window_inside = true;
        for w in &traj.points[k_lo..=k_hi] {
            min_emp = min_emp.min(f.value(w));
            window_inside &= tube.h_distance(w) <= two_eps;
        }
        let f_z_at_min = f.value(&lm.location);
        let f_pop_at_min = f.population_value(&lm.location).unwrap();
        let e1 = f_pop_at_min - f_z_at_min;
        let e2 = f_z_at_min - min_emp;
        let holds = f_pop_at_min <= min_emp + threshold;
        // whenever every retained window iterate stays within 2 epsilon and
        // epsilon respects the curvature cap, the minimizer branch forces
        // E2 <= 0
        let e2_sign_ok = !window_inside || e2 <= 1e-9;
        Ok(ReplicaOutcome::Retained {
            holds,
            e1,
            e2,
            e2_sign_ok,
        })
    });
    let mut exited = 0usize;
    let mut retained = 0usize;
    let mut holds = 0usize;
    let mut sign_failures = 0usize;
    let mut e1_sum = 0.0;
    let mut e2_sum = 0.0;
    for o in outcomes {
        match o? {
            ReplicaOutcome::ExitedEarly => exited += 1,
            ReplicaOutcome::Retained {
                holds: h,
                e1,
                e2,
                e2_sign_ok,
            } => {
                retained += 1;
                holds += h as usize;
                sign_failures += (!e2_sign_ok) as usize;
                e1_sum += e1;
                e2_sum += e2;
            }
        }
    }
    let mut details = vec![
        format!(
            "eta {eta:.6e}, beta {beta:.4}, window [{k_lo}, {k_hi}], deviation threshold {threshold:.6}"
        ),
        format!(
            "replicas: {} retained, {} exited early; mean E1 {:.6e}, mean E2 {:.6e}",
            retained,
            exited,
            e1_sum / retained.max(1) as f64,
            e2_sum / retained.max(1) as f64
        ),
    ];
    if retained == 0 {
        details.push("every replica exited early; nothing to test".into());
        return Ok(OracleVerdict {
            name: "aposteriori_bound".into(),
            status: Status::Inconclusive,
            statistic: 0.0,
            threshold: 1.0 - s.delta,
            standard_error: None,
            seed,
            sample_count: s.dataset_replicas as u64,
            details,
        });
    }
    let fraction = holds as f64 / retained as f64;
    let (_, upper) = wilson_interval(holds, retained);
    details.push(format!(
        "inequality held in {holds}/{retained} retained replicas (fraction {fraction:.4}, upper {upper:.4})"
    ));
    let status = if sign_failures > 0 {
        details.push(format!(
            "{sign_failures} replicas broke the E2 <= 0 branch despite full containment"
        ));
        Status::Fail
    } else if upper >= 1.0 - s.delta {
        Status::Pass
    } else {
        Status::Fail
    };
    Ok(OracleVerdict {
        name: "aposteriori_bound".into(),
        status,
        statistic: upper,
        threshold: 1.0 - s.delta,
        standard_error: Some((fraction * (1.0 - fraction) / retained as f64).sqrt()),
        seed,
        sample_count: s.dataset_replicas as u64,
        details,
    })
}
