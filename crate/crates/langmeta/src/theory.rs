//! Closed-form bound and admissibility calculators. All functions are pure
//! in their inputs; unspecified absolute constants are configuration fields
//! defaulting to 1.0 and every downstream check that would depend on them is
//! scaling- or dominance-based.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::RegularityConstants;

/// Problem constants plus the target radius, failure probability, initial
/// H-distance, and dwell horizon the calculators consume.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemParams {
    pub constants: RegularityConstants,
    pub d: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub r: f64,
    /// Post-recurrence dwell horizon T; T_esc = T_rec + T.
    pub t_dwell: f64,
    pub c1: f64,
    pub c2: f64,
    pub c: f64,
    pub c0: f64,
    pub c_prime: f64,
    /// Scalar reflection-principle constant in the per-interval oscillation
    /// tail 2d exp(-c u^2/(d eta)); defaults to 1/2, our choice.
    pub c_reflect: f64,
}

impl ProblemParams {
    pub fn new(constants: RegularityConstants, d: usize, epsilon: f64, delta: f64, r: f64, t_dwell: f64) -> Result<Self> {
        let p = Self {
            constants,
            d,
            epsilon,
            delta,
            r,
            t_dwell,
            c1: 1.0,
            c2: 1.0,
            c: 1.0,
            c0: 1.0,
            c_prime: 1.0,
            c_reflect: 0.5,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::ParamOutOfRange("epsilon must be > 0".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::ParamOutOfRange("delta must be in (0,1)".into()));
        }
        if !(self.r > 0.0) {
            return Err(Error::ParamOutOfRange("r must be > 0".into()));
        }
        if !(self.t_dwell >= 0.0) {
            return Err(Error::ParamOutOfRange("T must be >= 0".into()));
        }
        self.constants.validate()
    }

    /// Upper end of the admissible epsilon range for the metastability
    /// calculators: (c1 m^2 / (L sqrt(M))) ∧ 8r.
    pub fn epsilon_ceiling(&self) -> f64 {
        let k = &self.constants;
        let m = k.dissipativity_m;
        (self.c1 * m * m / (k.hess_lipschitz * k.grad_lipschitz.sqrt())).min(8.0 * self.r)
    }

    /// The curvature ceiling is strict; the 8r endpoint is admitted because
    /// epsilon = 8r is exactly the T_rec = 0 boundary case.
    pub fn check_epsilon_range(&self) -> Result<()> {
        let k = &self.constants;
        let m = k.dissipativity_m;
        let curv = self.c1 * m * m / (k.hess_lipschitz * k.grad_lipschitz.sqrt());
        if self.epsilon >= curv {
            return Err(Error::ParamOutOfRange(format!(
                "epsilon = {} not below c1 m^2/(L sqrt(M)) = {curv}",
                self.epsilon
            )));
        }
        if self.epsilon > 8.0 * self.r {
            return Err(Error::ParamOutOfRange(format!(
                "epsilon = {} exceeds 8r = {}",
                self.epsilon,
                8.0 * self.r
            )));
        }
        Ok(())
    }
}

/// T_rec = (2/m) log(8r / epsilon); zero exactly when r = epsilon/8.
pub fn recurrence_time(params: &ProblemParams) -> Result<f64> {
    if params.epsilon > 8.0 * params.r {
        return Err(Error::ParamOutOfRange(format!(
            "epsilon = {} exceeds 8r = {}",
            params.epsilon,
            8.0 * params.r
        )));
    }
    Ok(2.0 / params.constants.dissipativity_m * (8.0 * params.r / params.epsilon).ln())
}

pub fn escape_time(params: &ProblemParams) -> Result<f64> {
    Ok(recurrence_time(params)? + params.t_dwell)
}

/// G0 = 2M^2 (R^2 + 2(1 ∨ 1/m)(b + B^2 + d/beta)) + 2B^2.
pub fn g0(params: &ProblemParams, beta: f64) -> f64 {
    let k = &params.constants;
    let m2 = k.grad_lipschitz * k.grad_lipschitz;
    let amp = 1.0f64.max(1.0 / k.dissipativity_m);
    2.0 * m2
        * (k.radius * k.radius
            + 2.0 * amp * (k.dissipativity_b + k.grad_bound * k.grad_bound + params.d as f64 / beta))
        + 2.0 * k.grad_bound * k.grad_bound
}

/// G1 = R + (b + d)/m.
pub fn g1(params: &ProblemParams) -> f64 {
    let k = &params.constants;
    k.radius + (k.dissipativity_b + params.d as f64) / k.dissipativity_m
}

/// Largest admissible step size at a given beta:
/// min{1, m/(2M^2), c1 d^2/(M^2 (beta G0 + d) T_esc), c1 d eps^2/(M^3 G1 T_rec)},
/// with the T_rec term dropped when T_rec = 0.
pub fn eta_max_at(params: &ProblemParams, beta: f64) -> Result<f64> {
    let k = &params.constants;
    let m_lip = k.grad_lipschitz;
    let t_rec = recurrence_time(params)?;
    let t_esc = t_rec + params.t_dwell;
    let mut eta = 1.0f64.min(k.dissipativity_m / (2.0 * m_lip * m_lip));
    if t_esc > 0.0 {
        eta = eta.min(
            params.c1 * params.delta * params.delta
                / (m_lip * m_lip * (beta * g0(params, beta) + params.d as f64) * t_esc),
        );
    }
    if t_rec > 0.0 {
        eta = eta.min(
            params.c1 * params.delta * params.epsilon * params.epsilon
                / (m_lip.powi(3) * g1(params) * t_rec),
        );
    }
    Ok(eta)
}

/// Smallest admissible inverse temperature at a given eta:
/// (c2/eps^2)(d + log(M T_esc/delta)) ∨ (c2 M d/eps^2) log(d T_rec/(delta eta)),
/// with the second term dropped when T_rec = 0.
pub fn beta_min_at(params: &ProblemParams, eta: f64) -> Result<f64> {
    let k = &params.constants;
    let eps2 = params.epsilon * params.epsilon;
    let t_rec = recurrence_time(params)?;
    let t_esc = t_rec + params.t_dwell;
    let first = params.c2 / eps2
        * (params.d as f64 + (k.grad_lipschitz * t_esc / params.delta).ln());
    let second = if t_rec > 0.0 {
        params.c2 * k.grad_lipschitz * params.d as f64 / eps2
            * (params.d as f64 * t_rec / (params.delta * eta)).ln()
    } else {
        0.0
    };
    Ok(first.max(second))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Admissibility {
    pub eta_max: f64,
    pub beta_min: f64,
    pub g0: f64,
    pub g1: f64,
    pub t_rec: f64,
    pub t_esc: f64,
}

/// Joint (eta_max, beta_min) fixpoint. The two ceilings are coupled: eta_max
/// depends on beta through beta G0(beta), and beta_min depends on eta through
/// log(1/eta). Alternating the two maps contracts (the feedback is only
/// logarithmic in eta), so iterate from beta = 1 until both quantities are
/// stable to 1e-9 relative; failure to settle within 100 passes is an error.
pub fn admissible_eta_beta(params: &ProblemParams) -> Result<Admissibility> {
    params.validate()?;
    params.check_epsilon_range()?;
    let t_rec = recurrence_time(params)?;
    let t_esc = t_rec + params.t_dwell;
    let mut beta = 1.0f64;
    let mut eta = eta_max_at(params, beta)?;
    let mut settled = false;
    for _ in 0..100 {
        let beta_next = beta_min_at(params, eta)?;
        if !(beta_next.is_finite() && beta_next > 0.0) {
            return Err(Error::UnsatisfiableFixpoint(format!(
                "beta_min evaluated to {beta_next}"
            )));
        }
        let eta_next = eta_max_at(params, beta_next)?;
        let beta_osc = (beta_next - beta).abs() / beta_next;
        let eta_osc = (eta_next - eta).abs() / eta_next.max(f64::MIN_POSITIVE);
        beta = beta_next;
        eta = eta_next;
        if beta_osc < 1e-9 && eta_osc < 1e-9 {
            settled = true;
            break;
        }
    }
    if !settled {
        return Err(Error::UnsatisfiableFixpoint(
            "eta/beta alternation did not settle within 100 passes".into(),
        ));
    }
    Ok(Admissibility {
        eta_max: eta,
        beta_min: beta,
        g0: g0(params, beta),
        g1: g1(params),
        t_rec,
        t_esc,
    })
}

/// Checks a concrete (eta, beta) pair against the joint conditions, with a
/// 1e-6 relative slack so the computed fixpoint itself passes.
pub fn is_admissible(params: &ProblemParams, eta: f64, beta: f64) -> Result<bool> {
    params.check_epsilon_range()?;
    Ok(eta > 0.0
        && beta > 0.0
        && eta <= eta_max_at(params, beta)? * (1.0 + 1e-6)
        && beta >= beta_min_at(params, eta)? * (1.0 - 1e-6))
}

/// Inverse-temperature threshold of the diffusion-level statement:
/// (128/(3 eps^2))(d + log((2MT + 1)/delta)).
pub fn proposition1_beta_min(params: &ProblemParams) -> Result<f64> {
    let k = &params.constants;
    let m = k.dissipativity_m;
    let ceil = ((std::f64::consts::SQRT_2 - 1.0) * m * m
        / (4.0 * k.hess_lipschitz * (2.0 * k.grad_lipschitz).sqrt()))
    .min(8.0 * params.r);
    if !(params.epsilon > 0.0 && params.epsilon < ceil) {
        return Err(Error::ParamOutOfRange(format!(
            "epsilon = {} not in (0, ((sqrt(2)-1) m^2/(4 L sqrt(2M))) ∧ 8r) = (0, {ceil})",
            params.epsilon
        )));
    }
    let eps2 = params.epsilon * params.epsilon;
    Ok(128.0 / (3.0 * eps2)
        * (params.d as f64
            + ((2.0 * k.grad_lipschitz * params.t_dwell + 1.0) / params.delta).ln()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailBound {
    pub raw: f64,
    /// raw clamped to [0, 1] for reporting.
    pub clamped: f64,
    /// Set when lambda >= 1/2: outside the stated lemma range but accepted
    /// whenever I - beta lambda Sigma stays positive definite.
    pub lambda_beyond_half: bool,
}

/// Sub-Gaussian tail bound for the supremum of the transformed
/// Ornstein-Uhlenbeck martingale:
/// (1/(1-lambda))^{d/2} exp(-(beta lambda/2)[h^2 - <mu, (I - beta lambda Sigma)^{-1} mu>]).
pub fn martingale_tail_bound(
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    beta: f64,
    lambda: f64,
    h: f64,
) -> Result<TailBound> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::ParamOutOfRange(format!(
            "lambda must be in (0,1), got {lambda}"
        )));
    }
    if beta <= 0.0 {
        return Err(Error::ParamOutOfRange("beta must be > 0".into()));
    }
    let d = mu.len();
    let a = DMatrix::identity(d, d) - sigma * (beta * lambda);
    let chol = Cholesky::new(a)
        .ok_or_else(|| Error::NotPositiveDefinite("I - beta lambda Sigma".into()))?;
    let quad = mu.dot(&chol.solve(mu));
    let raw = (1.0 / (1.0 - lambda)).powf(d as f64 / 2.0)
        * (-(beta * lambda / 2.0) * (h * h - quad)).exp();
    Ok(TailBound {
        raw,
        clamped: raw.clamp(0.0, 1.0),
        lambda_beyond_half: lambda >= 0.5,
    })
}

/// E[exp(gamma ||V||^2)] for V ~ N(mu, Sigma):
/// det(I - 2 gamma Sigma)^{-1/2} exp(gamma <mu, (I - 2 gamma Sigma)^{-1} mu>).
pub fn gaussian_quadratic_mgf(
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    gamma: f64,
) -> Result<f64> {
    let d = mu.len();
    let a = DMatrix::identity(d, d) - sigma * (2.0 * gamma);
    let chol =
        Cholesky::new(a).ok_or_else(|| Error::NotPositiveDefinite("I - 2 gamma Sigma".into()))?;
    let quad = mu.dot(&chol.solve(mu));
    Ok((gamma * quad).exp() / chol.determinant().sqrt())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KlTvBounds {
    pub kl: f64,
    pub tv_raw: f64,
    pub tv_clamped: f64,
}

/// Path-law coupling bounds between the discrete algorithm and the diffusion:
/// KL = M^2 (beta G0/2 + d) K eta^2 and TV = sqrt(KL/2), the latter reported
/// raw and clamped to 1.
pub fn kl_tv_coupling_bounds(
    params: &ProblemParams,
    k_steps: usize,
    eta: f64,
    beta: f64,
) -> Result<KlTvBounds> {
    let kc = &params.constants;
    let limit = 1.0f64.min(kc.dissipativity_m / (kc.grad_lipschitz * kc.grad_lipschitz));
    if !(eta > 0.0 && eta < limit) {
        return Err(Error::ParamOutOfRange(format!(
            "eta = {eta} outside validity range (0, 1 ∧ m/M^2) = (0, {limit})"
        )));
    }
    let m2 = kc.grad_lipschitz * kc.grad_lipschitz;
    let kl = m2 * (beta * g0(params, beta) / 2.0 + params.d as f64) * k_steps as f64 * eta * eta;
    let tv_raw = (kl / 2.0).sqrt();
    Ok(KlTvBounds {
        kl,
        tv_raw,
        tv_clamped: tv_raw.min(1.0),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventBBound {
    pub k0: u64,
    pub per_interval: f64,
    pub total: f64,
}

/// Upper bound on the probability of large inter-grid oscillation over the
/// recurrence window:
/// K0 (16 G1 M^3 eta^2/eps^2 e^{2 M eta} + 2d exp(-c' beta eps^2/(M d eta) e^{-2 M eta}))
/// with K0 = ceil(T_rec/eta).
pub fn event_b_bound(params: &ProblemParams, eta: f64, beta: f64) -> Result<EventBBound> {
    if !(eta > 0.0 && beta > 0.0) {
        return Err(Error::ParamOutOfRange("eta, beta must be > 0".into()));
    }
    let t_rec = recurrence_time(params)?;
    let k0 = (t_rec / eta).ceil() as u64;
    Ok(event_b_bound_with_k0(params, eta, beta, k0))
}

pub fn event_b_bound_with_k0(
    params: &ProblemParams,
    eta: f64,
    beta: f64,
    k0: u64,
) -> EventBBound {
    let k = &params.constants;
    let m_lip = k.grad_lipschitz;
    let eps2 = params.epsilon * params.epsilon;
    let d = params.d as f64;
    let osc = 16.0 * g1(params) * m_lip.powi(3) * eta * eta / eps2 * (2.0 * m_lip * eta).exp();
    let refl = 2.0
        * d
        * (-(params.c_prime * beta * eps2 / (m_lip * d * eta)) * (-2.0 * m_lip * eta).exp()).exp();
    let per_interval = osc + refl;
    EventBBound {
        k0,
        per_interval,
        total: k0 as f64 * per_interval,
    }
}

/// Per-interval reflection-principle tail 2d exp(-c_reflect u^2/(d eta)):
/// the probability that the Brownian oscillation over one step of length eta
/// exceeds u in some coordinate direction.
pub fn reflection_tail(params: &ProblemParams, u: f64, eta: f64) -> Result<f64> {
    if !(u >= 0.0 && eta > 0.0) {
        return Err(Error::ParamOutOfRange("need u >= 0 and eta > 0".into()));
    }
    let d = params.d as f64;
    Ok(2.0 * d * (-params.c_reflect * u * u / (d * eta)).exp())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviationThresholds {
    pub sigma0: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma: f64,
    pub c: f64,
    /// Common threshold sigma sqrt(c d log n / n) for the risk, gradient and
    /// Hessian deviation levels.
    pub risk: f64,
    pub grad: f64,
    pub hess: f64,
}

/// The sub-Gaussian proxies sigma0 = A + (B + MR)R, sigma1 = B + MR,
/// sigma2 = C + LR, their maximum sigma, and the uniform-deviation threshold
/// sigma sqrt(c d log n / n) with c = c0 (1 ∨ log((M ∨ L ∨ (B+MR)) R sigma / delta)).
pub fn deviation_threshold(params: &ProblemParams, n: usize) -> Result<DeviationThresholds> {
    let k = &params.constants;
    let sigma1 = k.grad_bound + k.grad_lipschitz * k.radius;
    let sigma0 = k.value_bound + sigma1 * k.radius;
    let sigma2 = k.hess_bound + k.hess_lipschitz * k.radius;
    let sigma = sigma0.max(sigma1).max(sigma2);
    let c = deviation_c(params, sigma);
    let d = params.d as f64;
    let floor = c * d * d.ln();
    if (n as f64) < floor {
        return Err(Error::ParamOutOfRange(format!(
            "n = {n} below the floor c d log d = {floor}"
        )));
    }
    let threshold = sigma * (c * d * (n as f64).ln() / n as f64).sqrt();
    Ok(DeviationThresholds {
        sigma0,
        sigma1,
        sigma2,
        sigma,
        c,
        risk: threshold,
        grad: threshold,
        hess: threshold,
    })
}

fn deviation_c(params: &ProblemParams, sigma: f64) -> f64 {
    let k = &params.constants;
    let scale = k
        .grad_lipschitz
        .max(k.hess_lipschitz)
        .max(k.grad_bound + k.grad_lipschitz * k.radius);
    params.c0 * 1.0f64.max((scale * k.radius * sigma / params.delta).ln())
}

/// Smallest n with n >= c d log d and n / log n >= c sigma^2 d / (eps0 ∧ m)^2.
pub fn theorem2_sample_floor(params: &ProblemParams, eps0: f64, m: f64) -> Result<u64> {
    if !(eps0 > 0.0 && m > 0.0) {
        return Err(Error::ParamOutOfRange("eps0 and m must be > 0".into()));
    }
    let k = &params.constants;
    let sigma1 = k.grad_bound + k.grad_lipschitz * k.radius;
    let sigma = (k.value_bound + sigma1 * k.radius)
        .max(sigma1)
        .max(k.hess_bound + k.hess_lipschitz * k.radius);
    let c = deviation_c(params, sigma);
    let d = params.d as f64;
    let t1 = c * d * d.ln();
    let t2 = c * sigma * sigma * d / (eps0.min(m)).powi(2);
    let ok = |n: u64| -> bool {
        let nf = n as f64;
        nf >= t1 && nf / nf.ln() >= t2
    };
    // n/log n is not monotone below n = 3; probe the small cases directly.
    for n in 2..=4u64 {
        if ok(n) {
            return Ok(n);
        }
    }
    let mut hi = 8u64;
    while !ok(hi) {
        hi = hi.saturating_mul(2);
        if hi > 1 << 62 {
            return Err(Error::ParamOutOfRange(
                "sample floor exceeds 2^62".into(),
            ));
        }
    }
    let mut lo = 4u64; // ok is monotone on n >= 3
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Every closed-form quantity evaluated for one parameter set, as surfaced by
/// the `bounds` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryBounds {
    pub t_rec: f64,
    pub t_esc: f64,
    pub eta_max: f64,
    pub beta_min: f64,
    pub g0: f64,
    pub g1: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma: f64,
    pub kl_bound: f64,
    pub tv_bound_raw: f64,
    pub tv_bound: f64,
    pub event_b_bound: f64,
    pub proposition1_beta_min: Option<f64>,
    pub sample_size_min: u64,
}

impl TheoryBounds {
    /// Evaluates the whole record at the admissible (eta_max, beta_min) pair
    /// with K = floor(T_esc/eta_max). The sample-size floor uses eps0 =
    /// epsilon and the dissipativity m.
    pub fn evaluate(params: &ProblemParams) -> Result<Self> {
        let adm = admissible_eta_beta(params)?;
        let k_steps = (adm.t_esc / adm.eta_max).floor() as usize;
        let kltv = kl_tv_coupling_bounds(params, k_steps, adm.eta_max, adm.beta_min)?;
        let eb = event_b_bound(params, adm.eta_max, adm.beta_min)?;
        // Large-n stand-in: thresholds scale like sqrt(log n / n); n here only
        // fixes the reported sigma values, which are n-independent.
        let dev = deviation_threshold(params, u32::MAX as usize)?;
        let p1 = proposition1_beta_min(params).ok();
        let floor = theorem2_sample_floor(params, params.epsilon, params.constants.dissipativity_m)?;
        Ok(Self {
            t_rec: adm.t_rec,
            t_esc: adm.t_esc,
            eta_max: adm.eta_max,
            beta_min: adm.beta_min,
            g0: adm.g0,
            g1: adm.g1,
            sigma0: dev.sigma0,
            sigma1: dev.sigma1,
            sigma2: dev.sigma2,
            sigma: dev.sigma,
            kl_bound: kltv.kl,
            tv_bound_raw: kltv.tv_raw,
            tv_bound: kltv.tv_clamped,
            event_b_bound: eb.total,
            proposition1_beta_min: p1,
            sample_size_min: floor,
        })
    }

    /// Aligned human-readable table; each row names the defining formula.
    pub fn render_table(&self) -> String {
        let mut rows: Vec<(String, String, &str)> = vec![
            ("T_rec".into(), format!("{:.12e}", self.t_rec), "(2/m) log(8r/eps)"),
            ("T_esc".into(), format!("{:.12e}", self.t_esc), "T_rec + T"),
            ("eta_max".into(), format!("{:.12e}", self.eta_max), "step-size ceiling"),
            ("beta_min".into(), format!("{:.12e}", self.beta_min), "inverse-temperature floor"),
            ("G0".into(), format!("{:.12e}", self.g0), "squared-gradient moment bound"),
            ("G1".into(), format!("{:.12e}", self.g1), "R + (b+d)/m"),
            ("sigma0".into(), format!("{:.12e}", self.sigma0), "A + (B+MR)R"),
            ("sigma1".into(), format!("{:.12e}", self.sigma1), "B + MR"),
            ("sigma2".into(), format!("{:.12e}", self.sigma2), "C + LR"),
            ("sigma".into(), format!("{:.12e}", self.sigma), "max of sigma0..sigma2"),
            ("kl_bound".into(), format!("{:.12e}", self.kl_bound), "M^2(beta G0/2 + d) K eta^2"),
            ("tv_bound".into(), format!("{:.12e}", self.tv_bound), "sqrt(KL/2), clamped"),
            ("event_b_bound".into(), format!("{:.12e}", self.event_b_bound), "inter-grid oscillation bound"),
            ("sample_size_min".into(), format!("{}", self.sample_size_min), "uniform-deviation sample floor"),
        ];
        if let Some(p1) = self.proposition1_beta_min {
            rows.push((
                "prop1_beta_min".into(),
                format!("{p1:.12e}"),
                "(128/(3 eps^2))(d + log((2MT+1)/delta))",
            ));
        }
        let name_w = rows.iter().map(|r| r.0.len()).max().unwrap();
        let val_w = rows.iter().map(|r| r.1.len()).max().unwrap();
        let mut out = String::new();
        for (name, val, label) in rows {
            out.push_str(&format!("{name:<name_w$}  {val:>val_w$}  {label}\n"));
        }
        out
    }
}
