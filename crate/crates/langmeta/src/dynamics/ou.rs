use nalgebra::{DMatrix, DVector};

use super::{Beta, LangevinConfig, Trajectory, TrajectoryKind};
use crate::error::{Error, Result};
use crate::landscape::LocalMinimum;
use crate::rng::NoiseSource;

/// Linearization of the gradient flow around a nondegenerate local minimum:
/// the center, the SPD Hessian H, its principal square root, and the
/// eigendecomposition used for exact matrix exponentials.
#[derive(Debug, Clone)]
pub struct OuLinearization {
    pub center: DVector<f64>,
    pub h: DMatrix<f64>,
    pub h_sqrt: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
    /// Orthonormal eigenvectors, one per column.
    pub eigenvectors: DMatrix<f64>,
}

impl OuLinearization {
    pub fn new(center: DVector<f64>, h: DMatrix<f64>) -> Result<Self> {
        let eig = h.clone().symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= 0.0 {
            return Err(Error::NotPositiveDefinite(format!(
                "Hessian has eigenvalue {min:.6e}"
            )));
        }
        let h_sqrt = Self::apply_spectral(&eig.eigenvectors, &eig.eigenvalues, f64::sqrt);
        Ok(Self {
            center,
            h,
            h_sqrt,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn from_local_minimum(min: &LocalMinimum) -> Result<Self> {
        Self::new(min.location.clone(), min.hessian.clone())
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    fn apply_spectral(
        vecs: &DMatrix<f64>,
        vals: &DVector<f64>,
        f: impl Fn(f64) -> f64,
    ) -> DMatrix<f64> {
        let d = vals.len();
        let diag = DMatrix::from_diagonal(&DVector::from_fn(d, |i, _| f(vals[i])));
        vecs * diag * vecs.transpose()
    }

    /// g(H) for a scalar function g, via the eigendecomposition.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        Self::apply_spectral(&self.eigenvectors, &self.eigenvalues, f)
    }

    /// ||v||_H = sqrt(<v, H v>), evaluated as ||diag(sqrt(lambda)) U^T v||.
    pub fn h_norm(&self, v: &DVector<f64>) -> f64 {
        let c = self.eigenvectors.transpose() * v;
        c.iter()
            .zip(self.eigenvalues.iter())
            .map(|(ci, li)| li * ci * ci)
            .sum::<f64>()
            .sqrt()
    }

    /// H-distance of a point from the center.
    pub fn h_distance(&self, w: &DVector<f64>) -> f64 {
        self.h_norm(&(w - &self.center))
    }
}

/// ||v||_H = sqrt(<v, H v>) for an explicit SPD matrix.
pub fn h_norm(h: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(h * v)).sqrt()
}

/// Matrix flow Q_{t0}(t) = H^{1/2} e^{(t0 - t) H}; Q_{t0}(t0) = H^{1/2}.
pub fn matrix_flow_q(lin: &OuLinearization, t0: f64, t: f64) -> Result<DMatrix<f64>> {
    if !(t >= t0 && t0 >= 0.0) {
        return Err(Error::ParamOutOfRange(format!(
            "matrix flow requires t >= t0 >= 0, got t0={t0}, t={t}"
        )));
    }
    Ok(lin.spectral_map(|l| l.sqrt() * ((t0 - t) * l).exp()))
}

/// Closed-form marginal of the linearized process: Y_t | Y_0 = y0 is Gaussian
/// with mean e^{-tH} y0 and covariance (1/beta)(I - e^{-2tH}).
pub fn ou_marginal(
    lin: &OuLinearization,
    y0: &DVector<f64>,
    t: f64,
    beta: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if t < 0.0 || beta <= 0.0 {
        return Err(Error::ParamOutOfRange(format!(
            "ou_marginal requires t >= 0 and beta > 0, got t={t}, beta={beta}"
        )));
    }
    let mean = lin.spectral_map(|l| (-t * l).exp()) * y0;
    let cov = lin.spectral_map(|l| (1.0 - (-2.0 * t * l).exp()) / beta);
    Ok((mean, cov))
}

/// Samples the linearized process exactly on the grid t_k = k eta:
/// Y_{k+1} | Y_k is Gaussian with mean e^{-eta H} Y_k and covariance
/// (1/beta)(I - e^{-2 eta H}), drawn coordinatewise in the eigenbasis.
/// Returns W = center + Y.
pub fn run_exact_ou(lin: &OuLinearization, config: &LangevinConfig) -> Result<Trajectory> {
    config.validate()?;
    let d = lin.dim();
    if config.initial_point.len() != d {
        return Err(Error::InvalidConfig(format!(
            "initial point has dimension {}, linearization {}",
            config.initial_point.len(),
            d
        )));
    }
    let eta = config.eta;
    let decay: Vec<f64> = lin.eigenvalues.iter().map(|l| (-eta * l).exp()).collect();
    let sd: Vec<f64> = match config.beta {
        Beta::Finite(beta) => lin
            .eigenvalues
            .iter()
            .map(|l| ((1.0 - (-2.0 * eta * l).exp()) / beta).sqrt())
            .collect(),
        Beta::Infinite => vec![0.0; d],
    };
    let mut noise = NoiseSource::new(config.seed);
    let mut xi = vec![0.0f64; d];
    // eigenbasis coordinates of the displacement
    let mut c = lin.eigenvectors.transpose() * (config.initial_vector() - &lin.center);
    let mut points = Vec::with_capacity(config.horizon_k + 1);
    let mut times = Vec::with_capacity(config.horizon_k + 1);
    points.push(&lin.center + &lin.eigenvectors * &c);
    times.push(0.0);
    for k in 0..config.horizon_k {
        if matches!(config.beta, Beta::Finite(_)) {
            noise.fill_step(k as u64, &mut xi);
        }
        for j in 0..d {
            c[j] = decay[j] * c[j] + sd[j] * xi[j];
        }
        points.push(&lin.center + &lin.eigenvectors * &c);
        times.push((k + 1) as f64 * eta);
    }
    Ok(Trajectory {
        kind: TrajectoryKind::ExactOu,
        times,
        points,
        config: config.clone(),
        substep_factor: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lin_diag(vals: &[f64]) -> OuLinearization {
        let d = vals.len();
        let h = DMatrix::from_diagonal(&DVector::from_row_slice(vals));
        OuLinearization::new(DVector::zeros(d), h).unwrap()
    }

    #[test]
    fn sqrt_squares_back() {
        let h = dmatrix![2.0, 0.5; 0.5, 1.0];
        let lin = OuLinearization::new(dvector![0.0, 0.0], h.clone()).unwrap();
        let back = &lin.h_sqrt * &lin.h_sqrt;
        assert!((back - h).norm() < 1e-10);
    }

    #[test]
    fn rejects_indefinite() {
        let h = dmatrix![1.0, 0.0; 0.0, -0.5];
        assert!(OuLinearization::new(dvector![0.0, 0.0], h).is_err());
    }

    #[test]
    fn noiseless_flow_is_matrix_exponential() {
        let lin = lin_diag(&[1.0, 2.0]);
        let cfg = LangevinConfig {
            eta: 1.0,
            beta: Beta::Infinite,
            horizon_k: 1,
            initial_point: vec![1.0, 1.0],
            seed: 0,
        };
        let traj = run_exact_ou(&lin, &cfg).unwrap();
        assert_relative_eq!(traj.points[1][0], (-1.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(traj.points[1][1], (-2.0f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn long_run_variance_reaches_one_over_beta() {
        let lin = lin_diag(&[1.0]);
        let beta = 4.0;
        let cfg = LangevinConfig {
            eta: 0.5,
            beta: Beta::Finite(beta),
            horizon_k: 200_000,
            initial_point: vec![0.0],
            seed: 9,
        };
        let traj = run_exact_ou(&lin, &cfg).unwrap();
        let xs: Vec<f64> = traj.points[1000..].iter().map(|p| p[0]).collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((var - 1.0 / beta).abs() < 0.01, "var {var}");
    }

    #[test]
    fn marginal_identity_cases() {
        let lin = lin_diag(&[1.0]);
        let y0 = dvector![1.0];
        let (mean, cov) = ou_marginal(&lin, &y0, 0.0, 1.0).unwrap();
        assert_relative_eq!(mean[0], 1.0);
        assert_relative_eq!(cov[(0, 0)], 0.0);
        let (mean, cov) = ou_marginal(&lin, &y0, 2.0f64.ln(), 1.0).unwrap();
        assert_relative_eq!(mean[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(cov[(0, 0)], 0.75, max_relative = 1e-14);
    }

    #[test]
    fn marginal_matches_monte_carlo() {
        let lin = lin_diag(&[1.0, 3.0]);
        let beta = 2.0;
        let t = 0.7;
        let eta = t;
        let y0 = dvector![0.5, -0.25];
        let (mean, cov) = ou_marginal(&lin, &y0, t, beta).unwrap();
        let n = 10_000;
        let mut sum = DVector::zeros(2);
        let mut sumsq = DVector::zeros(2);
        for rep in 0..n {
            let cfg = LangevinConfig {
                eta,
                beta: Beta::Finite(beta),
                horizon_k: 1,
                initial_point: vec![y0[0], y0[1]],
                seed: crate::rng::derive_replica_seed(100, rep),
            };
            let traj = run_exact_ou(&lin, &cfg).unwrap();
            let p = &traj.points[1];
            sum += p;
            sumsq += p.component_mul(p);
        }
        let nf = n as f64;
        for j in 0..2 {
            let mc_mean = sum[j] / nf;
            let mc_var = sumsq[j] / nf - mc_mean * mc_mean;
            let se_mean = (cov[(j, j)] / nf).sqrt();
            assert!(
                (mc_mean - mean[j]).abs() <= 3.0 * se_mean,
                "mean coord {j}: {mc_mean} vs {}",
                mean[j]
            );
            let se_var = cov[(j, j)] * (2.0 / nf).sqrt();
            assert!(
                (mc_var - cov[(j, j)]).abs() <= 3.0 * se_var,
                "var coord {j}: {mc_var} vs {}",
                cov[(j, j)]
            );
        }
    }

    #[test]
    fn matrix_flow_values() {
        let lin = lin_diag(&[4.0]);
        let q = matrix_flow_q(&lin, 0.5, 0.5).unwrap();
        assert_relative_eq!(q[(0, 0)], 2.0, max_relative = 1e-14);
        let lin_i = lin_diag(&[1.0, 1.0]);
        let q = matrix_flow_q(&lin_i, 0.0, 1.0).unwrap();
        assert_relative_eq!(q[(0, 0)], (-1.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(q[(1, 1)], (-1.0f64).exp(), max_relative = 1e-14);
        assert!(matrix_flow_q(&lin, 1.0, 0.5).is_err());
    }

    #[test]
    fn matrix_flow_norm_bound_random_spd() {
        // ||Q_{t0}(t)|| <= sqrt(||H||) e^{-lambda_min (t - t0)}
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let a = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
            let h = &a * a.transpose() + DMatrix::identity(3, 3) * 0.2;
            let lin = OuLinearization::new(DVector::zeros(3), h).unwrap();
            let (t0, t) = (0.3, 1.1);
            let q = matrix_flow_q(&lin, t0, t).unwrap();
            let op_norm = q.clone().symmetric_eigen().eigenvalues.abs().max();
            let bound =
                lin.max_eigenvalue().sqrt() * (-(lin.min_eigenvalue()) * (t - t0)).exp();
            assert!(op_norm <= bound * (1.0 + 1e-12), "{op_norm} vs {bound}");
        }
    }

    #[test]
    fn h_norm_agrees_with_sqrt_route() {
        let h = dmatrix![2.0, 0.3; 0.3, 1.5];
        let lin = OuLinearization::new(dvector![0.0, 0.0], h.clone()).unwrap();
        let v = dvector![0.7, -0.2];
        let a = lin.h_norm(&v);
        let b = (&lin.h_sqrt * &v).norm();
        let c = h_norm(&h, &v);
        assert_relative_eq!(a, b, epsilon = 1e-10);
        assert_relative_eq!(a, c, epsilon = 1e-10);
    }

    #[test]
    fn noiseless_contraction_in_h_norm() {
        let h = dmatrix![2.0, 0.4; 0.4, 1.0];
        let lin = OuLinearization::new(dvector![0.0, 0.0], h).unwrap();
        let cfg = LangevinConfig {
            eta: 0.25,
            beta: Beta::Infinite,
            horizon_k: 20,
            initial_point: vec![1.0, -0.5],
            seed: 0,
        };
        let traj = run_exact_ou(&lin, &cfg).unwrap();
        let m = lin.min_eigenvalue();
        let y0 = lin.h_norm(&traj.points[0]);
        for (t, p) in traj.times.iter().zip(&traj.points) {
            assert!(lin.h_norm(p) <= y0 * (-m * t).exp() * (1.0 + 1e-12));
        }
    }
}
