use alloc::string::ToString;
use alloc::vec::Vec;

use super::{log_sum_exp, LogTarget};
use crate::{Error, Result};

/// Mixture of isotropic Gaussians,
/// `π(x) ∝ Σ_j w_j (τ²_j)^{-d/2} exp(-‖x − μ_j‖² / (2τ²_j))`.
///
/// For `d = 2` the prefactor is `w_j / τ²_j`; in every dimension the mass of
/// component `j` is proportional to `w_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    dim: usize,
    means: Vec<f64>,
    variances: Vec<f64>,
    weights: Vec<f64>,
    log_prefactors: Vec<f64>,
}

/// Closed-form raw moments of a mixture, per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureMoments {
    pub mean: Vec<f64>,
    pub second: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(means: Vec<Vec<f64>>, variances: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let m = means.len();
        if m == 0 {
            return Err(Error::InvalidParameter(
                "mixture needs at least one component".to_string(),
            ));
        }
        if variances.len() != m || weights.len() != m {
            return Err(Error::InvalidParameter(
                "means, variances and weights must have equal length".to_string(),
            ));
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "zero-dimensional mixture".to_string(),
            ));
        }
        if let Some(bad) = means.iter().find(|mu| mu.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        let positive = |v: &f64| *v > 0.0 && v.is_finite();
        if !variances.iter().all(positive) || !weights.iter().all(positive) {
            return Err(Error::InvalidParameter(
                "variances and weights must be positive and finite".to_string(),
            ));
        }
        let log_prefactors = weights
            .iter()
            .zip(&variances)
            .map(|(w, v)| libm::log(*w) - 0.5 * dim as f64 * libm::log(*v))
            .collect();
        Ok(Self {
            dim,
            means: means.concat(),
            variances,
            weights,
            log_prefactors,
        })
    }

    /// Twenty bivariate modes, equal weights `1/20` and variances `1/100`.
    pub fn equal_modes(modes: &[[f64; 2]]) -> Result<Self> {
        let m = modes.len();
        Self::new(
            modes.iter().map(|p| p.to_vec()).collect(),
            alloc::vec![0.01; m],
            alloc::vec![1.0 / m as f64; m],
        )
    }

    /// Unequal bivariate modes: with `r_j = ‖μ_j − (5, 5)‖`, weight `1/r_j` and
    /// variance `r_j / 20`, so modes near (5, 5) are heavier and tighter.
    pub fn unequal_modes(modes: &[[f64; 2]]) -> Result<Self> {
        let r: Vec<f64> = modes
            .iter()
            .map(|p| libm::hypot(p[0] - 5.0, p[1] - 5.0))
            .collect();
        Self::new(
            modes.iter().map(|p| p.to_vec()).collect(),
            r.iter().map(|r| r / 20.0).collect(),
            r.iter().map(|r| 1.0 / r).collect(),
        )
    }

    /// Eight unit-variance modes in `dim ≥ 3` dimensions. The first three
    /// coordinates are the vertices of the cube `[0, 10]³`; the remaining ones
    /// alternate `0, 10, …` when the third coordinate is 10 and `10, 0, …`
    /// otherwise.
    pub fn cube_modes(dim: usize) -> Result<Self> {
        if dim < 3 {
            return Err(Error::InvalidParameter(
                "cube mixture needs dim >= 3".to_string(),
            ));
        }
        Self::new(
            cube_mode_locations(dim),
            alloc::vec![1.0; 8],
            alloc::vec![1.0; 8],
        )
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn mean(&self, j: usize) -> &[f64] {
        &self.means[j * self.dim..(j + 1) * self.dim]
    }

    pub fn modes(&self) -> Vec<Vec<f64>> {
        self.means.chunks(self.dim).map(|c| c.to_vec()).collect()
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Normalized component masses (proportional to the weights).
    pub fn component_masses(&self) -> Vec<f64> {
        let s: f64 = self.weights.iter().sum();
        self.weights.iter().map(|w| w / s).collect()
    }

    pub fn moments(&self) -> MixtureMoments {
        let p = self.component_masses();
        let mut mean = alloc::vec![0.0; self.dim];
        let mut second = alloc::vec![0.0; self.dim];
        for (j, pj) in p.iter().enumerate() {
            for (k, mu) in self.mean(j).iter().enumerate() {
                mean[k] += pj * mu;
                second[k] += pj * (mu * mu + self.variances[j]);
            }
        }
        MixtureMoments { mean, second }
    }

    fn component_log_terms<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = f64> + Clone + 'a {
        (0..self.n_components()).map(move |j| {
            let d2: f64 = self
                .mean(j)
                .iter()
                .zip(x)
                .map(|(m, v)| (v - m) * (v - m))
                .sum();
            self.log_prefactors[j] - d2 / (2.0 * self.variances[j])
        })
    }
}

impl LogTarget for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let v = log_sum_exp(self.component_log_terms(x));
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }
}

fn cube_mode_locations(dim: usize) -> Vec<Vec<f64>> {
    const CUBE: [[f64; 3]; 8] = [
        [10.0, 10.0, 10.0],
        [0.0, 0.0, 0.0],
        [10.0, 0.0, 10.0],
        [0.0, 10.0, 10.0],
        [0.0, 0.0, 10.0],
        [0.0, 10.0, 0.0],
        [10.0, 0.0, 0.0],
        [10.0, 10.0, 0.0],
    ];
    CUBE.iter()
        .map(|head| {
            let lead_zero = head[2] == 10.0;
            let mut mu = head.to_vec();
            mu.extend((3..dim).map(|i| {
                let even = (i - 3) % 2 == 0;
                if even == lead_zero {
                    0.0
                } else {
                    10.0
                }
            }));
            mu
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn single_component_is_half_squared_norm() {
        let t = GaussianMixture::new(vec![vec![0.0, 0.0]], vec![1.0], vec![1.0]).unwrap();
        assert_eq!(t.log_density(&[3.0, 4.0]), -12.5);
    }

    #[test]
    fn two_far_components_at_first_mean() {
        let t = GaussianMixture::new(
            vec![vec![0.0, 0.0], vec![10.0, 10.0]],
            vec![1.0, 1.0],
            vec![0.5, 0.5],
        )
        .unwrap();
        let expected = libm::log(0.5 * (1.0 + libm::exp(-100.0)));
        assert!((t.log_density(&[0.0, 0.0]) - expected).abs() < 1e-15);
    }

    #[test]
    fn cube_modes_match_listed_vectors() {
        let t = GaussianMixture::cube_modes(7).unwrap();
        assert_eq!(t.mean(0), &[10.0, 10.0, 10.0, 0.0, 10.0, 0.0, 10.0]);
        assert_eq!(t.mean(1), &[0.0, 0.0, 0.0, 10.0, 0.0, 10.0, 0.0]);
        assert_eq!(t.mean(2), &[10.0, 0.0, 10.0, 0.0, 10.0, 0.0, 10.0]);
        assert_eq!(t.mean(5), &[0.0, 10.0, 0.0, 10.0, 0.0, 10.0, 0.0]);
        assert_eq!(t.mean(7), &[10.0, 10.0, 0.0, 10.0, 0.0, 10.0, 0.0]);
        assert!(GaussianMixture::cube_modes(2).is_err());
    }

    #[test]
    fn cube_modes_have_equal_peak_density() {
        for d in [3, 5, 11] {
            let t = GaussianMixture::cube_modes(d).unwrap();
            let v0 = t.log_density(t.mean(0));
            for j in 1..8 {
                assert!((t.log_density(t.mean(j)) - v0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn far_away_point_is_neg_infinity_not_nan() {
        let t = GaussianMixture::equal_modes(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let v = t.log_density(&[1e200, 1e200]);
        assert_eq!(v, f64::NEG_INFINITY);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GaussianMixture::new(vec![vec![0.0]], vec![0.0], vec![1.0]).is_err());
        assert!(GaussianMixture::new(vec![vec![0.0]], vec![1.0, 1.0], vec![1.0]).is_err());
        assert!(
            GaussianMixture::new(vec![vec![0.0], vec![0.0, 1.0]], vec![1.0; 2], vec![1.0; 2])
                .is_err()
        );
    }
}
