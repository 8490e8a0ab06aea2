use nalgebra::{DMatrix, DVector};
use statrs::function::erf::erf;

use super::{Dataset, Landscape, RegularityConstants};
use crate::error::{Error, Result};

/// Hessian-Lipschitz constant reported for families whose Hessian is
/// constant (the true value is 0, but the constants require L > 0).
const TINY_HESS_LIPSCHITZ: f64 = 1e-6;

/// F(w) = (c/2)||w||^2.
#[derive(Debug, Clone)]
pub struct Quadratic {
    d: usize,
    curvature: f64,
    constants: RegularityConstants,
}

/// Builds the isotropic quadratic (c/2)||w||^2; its minimum is the origin and
/// the landscape equals its own linearization there.
pub fn build_quadratic(dimension: usize, curvature: f64) -> Result<Quadratic> {
    if dimension == 0 || curvature <= 0.0 {
        return Err(Error::InvalidConfig(
            "quadratic needs dimension >= 1 and curvature > 0".into(),
        ));
    }
    // b = curvature gives a unit certification ball R = 1.
    let constants = RegularityConstants::new(
        0.0,
        0.0,
        curvature,
        curvature,
        TINY_HESS_LIPSCHITZ,
        curvature,
        curvature,
    )?;
    Ok(Quadratic {
        d: dimension,
        curvature,
        constants,
    })
}

impl Landscape for Quadratic {
    fn dim(&self) -> usize {
        self.d
    }
    fn value(&self, w: &DVector<f64>) -> f64 {
        0.5 * self.curvature * w.norm_squared()
    }
    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        w * self.curvature
    }
    fn hessian(&self, _w: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.d, self.d) * self.curvature
    }
    fn constants(&self) -> &RegularityConstants {
        &self.constants
    }
}

/// F(w) = scale * ((w1^2-1)^2/4 + (1/2) sum_{j>=2} wj^2): two minima at
/// w1 = +-1, a saddle at the origin, barrier height scale/4.
#[derive(Debug, Clone)]
pub struct DoubleWell {
    d: usize,
    scale: f64,
    constants: RegularityConstants,
}

pub fn build_double_well(dimension: usize, barrier_scale: f64) -> Result<DoubleWell> {
    if dimension == 0 || barrier_scale <= 0.0 {
        return Err(Error::InvalidConfig(
            "double well needs dimension >= 1 and barrier_scale > 0".into(),
        ));
    }
    let s = barrier_scale;
    // (m, b) = (s/2, 0.6 s): min over w of <w, grad F> - m||w||^2 + b is
    // s (0.6 - 9/16) = 0.0375 s >= 0, attained at w1^2 = 3/4.
    let m = 0.5 * s;
    let b = 0.6 * s;
    let r2 = b / m; // = 1.2
    let two_r = 2.0 * r2.sqrt();
    let grad_lip = s * (3.0 * two_r * two_r - 1.0).max(1.0);
    let hess_lip = 6.0 * s * two_r;
    let constants = RegularityConstants::new(0.25 * s, 0.0, s, grad_lip, hess_lip, m, b)?;
    Ok(DoubleWell {
        d: dimension,
        scale: s,
        constants,
    })
}

impl DoubleWell {
    pub fn barrier_height(&self) -> f64 {
        0.25 * self.scale
    }
}

impl Landscape for DoubleWell {
    fn dim(&self) -> usize {
        self.d
    }
    fn value(&self, w: &DVector<f64>) -> f64 {
        let q = w[0] * w[0] - 1.0;
        let tail: f64 = (1..self.d).map(|j| w[j] * w[j]).sum();
        self.scale * (0.25 * q * q + 0.5 * tail)
    }
    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut g = w * self.scale;
        g[0] = self.scale * (w[0] * w[0] * w[0] - w[0]);
        g
    }
    fn hessian(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let mut h = DMatrix::identity(self.d, self.d) * self.scale;
        h[(0, 0)] = self.scale * (3.0 * w[0] * w[0] - 1.0);
        h
    }
    fn constants(&self) -> &RegularityConstants {
        &self.constants
    }
}

/// Per-coordinate variance of N(0,1) truncated to [-radius, radius].
pub(crate) fn truncated_normal_variance(radius: f64) -> f64 {
    let phi = (-0.5 * radius * radius).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mass = erf(radius / std::f64::consts::SQRT_2);
    1.0 - 2.0 * radius * phi / mass
}

/// ERM for the loss f(w,z) = (1/2)||w - z||^2 + ridge ||w||^2 with z drawn
/// from a coordinatewise truncated Gaussian. Sufficient statistics are
/// precomputed so evaluation is O(d); the population risk is closed-form.
#[derive(Debug, Clone)]
pub struct GaussianLocationErm {
    d: usize,
    ridge: f64,
    mean: DVector<f64>,
    mean_sq_norm: f64,
    trunc_variance: f64,
    constants: RegularityConstants,
}

pub fn build_gaussian_location_erm(
    dataset: &Dataset,
    ridge: f64,
    trunc_radius: f64,
) -> Result<GaussianLocationErm> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if ridge < 0.0 || trunc_radius <= 0.0 {
        return Err(Error::InvalidConfig(
            "gaussian location needs ridge >= 0 and trunc_radius > 0".into(),
        ));
    }
    let d = dataset.samples[0].len();
    let n = dataset.len() as f64;
    let mut mean = DVector::zeros(d);
    let mut mean_sq_norm = 0.0;
    for z in &dataset.samples {
        mean += z;
        mean_sq_norm += z.norm_squared();
    }
    mean /= n;
    mean_sq_norm /= n;

    let z_max = trunc_radius * (d as f64).sqrt();
    // <w, grad f(w,z)> >= (1/2 + 2 ridge)||w||^2 - ||z||^2 / 2 by Young.
    let m = 0.5 + 2.0 * ridge;
    let b = 0.5 * z_max * z_max;
    let curv = 1.0 + 2.0 * ridge;
    let constants = RegularityConstants::new(
        0.5 * z_max * z_max,
        z_max,
        curv,
        curv,
        TINY_HESS_LIPSCHITZ,
        m,
        b,
    )?;
    Ok(GaussianLocationErm {
        d,
        ridge,
        mean,
        mean_sq_norm,
        trunc_variance: truncated_normal_variance(trunc_radius),
        constants,
    })
}

impl GaussianLocationErm {
    /// The ridge-shrunk sample mean, the unique empirical minimizer.
    pub fn empirical_minimizer(&self) -> DVector<f64> {
        &self.mean / (1.0 + 2.0 * self.ridge)
    }
}

impl Landscape for GaussianLocationErm {
    fn dim(&self) -> usize {
        self.d
    }
    fn value(&self, w: &DVector<f64>) -> f64 {
        (0.5 + self.ridge) * w.norm_squared() - w.dot(&self.mean) + 0.5 * self.mean_sq_norm
    }
    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        w * (1.0 + 2.0 * self.ridge) - &self.mean
    }
    fn hessian(&self, _w: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.d, self.d) * (1.0 + 2.0 * self.ridge)
    }
    fn constants(&self) -> &RegularityConstants {
        &self.constants
    }
    fn population_value(&self, w: &DVector<f64>) -> Option<f64> {
        Some(
            (0.5 + self.ridge) * w.norm_squared()
                + 0.5 * self.d as f64 * self.trunc_variance,
        )
    }
    fn population_gradient(&self, w: &DVector<f64>) -> Option<DVector<f64>> {
        Some(w * (1.0 + 2.0 * self.ridge))
    }
    fn population_hessian(&self, _w: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(self.d, self.d) * (1.0 + 2.0 * self.ridge))
    }
}

/// ERM for the loss f(w,z) = DW(w) - <z, w> over a bounded z law: the
/// empirical risk is a tilted double well, the population risk is the plain
/// double well. The tilt moves critical points without touching the Hessian,
/// which makes the strongly-Morse transfer check nontrivial.
#[derive(Debug, Clone)]
pub struct TiltedDoubleWell {
    inner: DoubleWell,
    tilt: DVector<f64>,
    constants: RegularityConstants,
}

pub fn build_tilted_double_well_erm(
    dataset: &Dataset,
    barrier_scale: f64,
    tilt_radius: f64,
) -> Result<TiltedDoubleWell> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let d = dataset.samples[0].len();
    let inner = build_double_well(d, barrier_scale)?;
    let n = dataset.len() as f64;
    let mut tilt = DVector::zeros(d);
    for z in &dataset.samples {
        tilt += z;
    }
    tilt /= n;

    let s = barrier_scale;
    let z_max = tilt_radius * (d as f64).sqrt();
    // <w, grad DW> - <w, z> >= (s/4)||w||^2 - (0.6 s + 9 s/16... ) : absorb
    // the tilt via Young with weight s/4.
    let m = 0.25 * s;
    let b = 0.6 * s + z_max * z_max / s;
    let r2 = b / m;
    let two_r = 2.0 * r2.sqrt();
    let grad_lip = s * (3.0 * two_r * two_r - 1.0).max(1.0);
    let hess_lip = 6.0 * s * two_r;
    let constants =
        RegularityConstants::new(0.25 * s, z_max, s, grad_lip, hess_lip, m, b)?;
    Ok(TiltedDoubleWell {
        inner,
        tilt,
        constants,
    })
}

impl Landscape for TiltedDoubleWell {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, w: &DVector<f64>) -> f64 {
        self.inner.value(w) - self.tilt.dot(w)
    }
    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        self.inner.gradient(w) - &self.tilt
    }
    fn hessian(&self, w: &DVector<f64>) -> DMatrix<f64> {
        self.inner.hessian(w)
    }
    fn constants(&self) -> &RegularityConstants {
        &self.constants
    }
    fn population_value(&self, w: &DVector<f64>) -> Option<f64> {
        Some(self.inner.value(w))
    }
    fn population_gradient(&self, w: &DVector<f64>) -> Option<DVector<f64>> {
        Some(self.inner.gradient(w))
    }
    fn population_hessian(&self, w: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.inner.hessian(w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    #[test]
    fn double_well_at_minimum() {
        let f = build_double_well(1, 1.0).unwrap();
        let w = dvector![1.0];
        assert_relative_eq!(f.value(&w), 0.0);
        assert_relative_eq!(f.gradient(&w)[0], 0.0);
        assert_relative_eq!(f.hessian(&w)[(0, 0)], 2.0);
    }

    #[test]
    fn double_well_at_saddle() {
        let f = build_double_well(1, 1.0).unwrap();
        let w = dvector![0.0];
        assert_relative_eq!(f.value(&w), 0.25);
        assert_relative_eq!(f.barrier_height(), 0.25);
    }

    #[test]
    fn double_well_2d() {
        let f = build_double_well(2, 1.0).unwrap();
        let w = dvector![1.0, 0.0];
        let g = f.gradient(&w);
        assert_relative_eq!(g[0], 0.0);
        assert_relative_eq!(g[1], 0.0);
        let h = f.hessian(&w);
        assert_relative_eq!(h[(0, 0)], 2.0);
        assert_relative_eq!(h[(1, 1)], 1.0);
        assert_relative_eq!(h[(0, 1)], 0.0);
    }

    #[test]
    fn gaussian_location_single_sample_identity() {
        let ds = Dataset::new(vec![dvector![0.0]], "z1=0".into()).unwrap();
        let f = build_gaussian_location_erm(&ds, 0.0, 5.0).unwrap();
        let w = dvector![0.0];
        assert_relative_eq!(f.value(&w), 0.0);
        assert_relative_eq!(f.empirical_minimizer()[0], 0.0);
    }

    #[test]
    fn gaussian_location_two_samples() {
        let ds = Dataset::new(vec![dvector![1.0], dvector![-1.0]], "pm1".into()).unwrap();
        let f = build_gaussian_location_erm(&ds, 0.0, 5.0).unwrap();
        let w = dvector![0.0];
        // (1/2)(1/2 * 1 + 1/2 * 1) = 1/2
        assert_relative_eq!(f.value(&w), 0.5);
        assert_relative_eq!(f.empirical_minimizer()[0], 0.0);
    }

    #[test]
    fn gaussian_location_minimizer_is_sample_mean() {
        let ds = Dataset::truncated_gaussian(2, 100, 5.0, 11).unwrap();
        let f = build_gaussian_location_erm(&ds, 0.0, 5.0).unwrap();
        let mut mean = DVector::zeros(2);
        for z in &ds.samples {
            mean += z;
        }
        mean /= 100.0;
        assert_relative_eq!(f.empirical_minimizer(), mean, epsilon = 1e-14);
        assert!(f.gradient(&mean).norm() < 1e-14);
    }

    #[test]
    fn truncated_variance_limits() {
        // wide truncation -> variance 1; narrow -> small
        assert_relative_eq!(truncated_normal_variance(8.0), 1.0, epsilon = 1e-10);
        assert!(truncated_normal_variance(0.5) < 0.1);
    }

    #[test]
    fn tilted_double_well_population_is_plain() {
        let ds = Dataset::truncated_gaussian(1, 20, 1.0, 3).unwrap();
        let f = build_tilted_double_well_erm(&ds, 1.0, 1.0).unwrap();
        let dw = build_double_well(1, 1.0).unwrap();
        let w = dvector![0.7];
        assert_relative_eq!(f.population_value(&w).unwrap(), dw.value(&w));
        assert_eq!(f.hessian(&w), dw.hessian(&w));
    }
}
