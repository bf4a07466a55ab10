//! Symmetric jumping rules.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg;
use crate::rng::KernelRng;
use crate::{Error, Result};

/// A symmetric proposal: the density of moving `a → b` equals that of `b → a`.
pub trait Proposal {
    fn dim(&self) -> usize;

    /// Writes a draw centred at `center` into `out`.
    fn propose<R: KernelRng + ?Sized>(&self, center: &[f64], out: &mut [f64], rng: &mut R);
}

impl<P: Proposal + ?Sized> Proposal for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn propose<R: KernelRng + ?Sized>(&self, center: &[f64], out: &mut [f64], rng: &mut R) {
        (**self).propose(center, out, rng)
    }
}

/// Gaussian random-walk proposal `N(center, Σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianProposal {
    dim: usize,
    covariance: Vec<f64>,
    chol: Vec<f64>,
}

impl GaussianProposal {
    /// From a row-major `dim × dim` covariance matrix.
    pub fn new(covariance: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "proposal dimension must be positive".to_string(),
            ));
        }
        if covariance.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: covariance.len(),
            });
        }
        if !linalg::is_symmetric(&covariance, dim, 1e-12) {
            return Err(Error::NotPositiveDefinite);
        }
        let chol = linalg::cholesky(&covariance, dim)?;
        Ok(Self {
            dim,
            covariance,
            chol,
        })
    }

    /// `σ² I`.
    pub fn isotropic(dim: usize, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(
                "sigma must be positive".to_string(),
            ));
        }
        let mut cov = vec![0.0; dim * dim];
        for i in 0..dim {
            cov[i * dim + i] = sigma * sigma;
        }
        Self::new(cov, dim)
    }

    /// The `(2.38² / d) I` scale used for Metropolis pre-runs.
    pub fn metropolis_preset(dim: usize) -> Result<Self> {
        Self::isotropic(dim, 2.38 / libm::sqrt(dim as f64))
    }

    /// Sample covariance (denominator `n − 1`) of `draws`. Two chains are pooled
    /// by passing their concatenation. If the factorization fails,
    /// `1e-10 · trace / d` is added to the diagonal once before giving up.
    pub fn adapt_from_sample<'a, I>(draws: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let draws: Vec<&[f64]> = draws.into_iter().collect();
        let dim = draws.first().map_or(0, |d| d.len());
        if dim == 0 || draws.len() < dim + 1 {
            return Err(Error::TooFewDraws {
                needed: dim.max(1) + 1,
                got: draws.len(),
            });
        }
        if let Some(bad) = draws.iter().find(|d| d.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        let n = draws.len() as f64;
        let mut mean = vec![0.0; dim];
        for d in &draws {
            for (m, v) in mean.iter_mut().zip(d.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut cov = vec![0.0; dim * dim];
        for d in &draws {
            for i in 0..dim {
                let di = d[i] - mean[i];
                for j in 0..=i {
                    cov[i * dim + j] += di * (d[j] - mean[j]);
                }
            }
        }
        for i in 0..dim {
            for j in 0..=i {
                let v = cov[i * dim + j] / (n - 1.0);
                cov[i * dim + j] = v;
                cov[j * dim + i] = v;
            }
        }
        match Self::new(cov.clone(), dim) {
            Ok(p) => Ok(p),
            Err(Error::NotPositiveDefinite) => {
                let trace: f64 = (0..dim).map(|i| cov[i * dim + i]).sum();
                let jitter = 1e-10 * trace / dim as f64;
                for i in 0..dim {
                    cov[i * dim + i] += jitter;
                }
                Self::new(cov, dim)
            }
            Err(e) => Err(e),
        }
    }

    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }

    /// Returns `center + L ξ` with `ξ` standard normal.
    pub fn draw<R: KernelRng + ?Sized>(&self, center: &[f64], rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.propose(center, &mut out, rng);
        out
    }

    /// Log density of moving from `from` to `to`, up to the shared constant
    /// `−(d/2) log 2π − log det L`.
    pub fn log_kernel(&self, from: &[f64], to: &[f64]) -> f64 {
        // forward substitution L y = to − from
        let d = self.dim;
        let mut y = vec![0.0; d];
        for i in 0..d {
            let s: f64 = (0..i).map(|k| self.chol[i * d + k] * y[k]).sum();
            y[i] = (to[i] - from[i] - s) / self.chol[i * d + i];
        }
        -0.5 * y.iter().map(|v| v * v).sum::<f64>()
    }
}

impl Proposal for GaussianProposal {
    fn dim(&self) -> usize {
        self.dim
    }

    fn propose<R: KernelRng + ?Sized>(&self, center: &[f64], out: &mut [f64], rng: &mut R) {
        debug_assert_eq!(center.len(), self.dim);
        let mut xi = [0.0f64; 16];
        let mut heap;
        let xi: &mut [f64] = if self.dim <= 16 {
            &mut xi[..self.dim]
        } else {
            heap = vec![0.0; self.dim];
            &mut heap
        };
        xi.iter_mut().for_each(|v| *v = rng.standard_normal());
        linalg::lower_mul(&self.chol, xi, out);
        out.iter_mut().zip(center).for_each(|(o, c)| *o += c);
    }
}

/// A symmetric proposal on the states `0..n` given by a symmetric stochastic
/// matrix `q[i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteProposal {
    n: usize,
    matrix: Vec<f64>,
}

impl DiscreteProposal {
    pub fn new(matrix: Vec<f64>, n: usize) -> Result<Self> {
        if matrix.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: matrix.len(),
            });
        }
        if !linalg::is_symmetric(&matrix, n, 1e-12) {
            return Err(Error::InvalidParameter(
                "proposal matrix must be symmetric".to_string(),
            ));
        }
        for row in matrix.chunks(n) {
            let s: f64 = row.iter().sum();
            if row.iter().any(|v| *v < 0.0) || libm::fabs(s - 1.0) > 1e-12 {
                return Err(Error::InvalidParameter(
                    "proposal rows must be distributions".to_string(),
                ));
            }
        }
        Ok(Self { n, matrix })
    }

    /// Uniform over the other `n − 1` states.
    pub fn uniform_other(n: usize) -> Self {
        let mut m = vec![1.0 / (n - 1) as f64; n * n];
        for i in 0..n {
            m[i * n + i] = 0.0;
        }
        Self { n, matrix: m }
    }

    /// Steps to `i ± 1` with probability ½ each; an end state stays put with
    /// probability ½.
    pub fn nearest_neighbor(n: usize) -> Self {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            if i > 0 {
                m[i * n + i - 1] = 0.5;
            } else {
                m[i * n + i] += 0.5;
            }
            if i + 1 < n {
                m[i * n + i + 1] = 0.5;
            } else {
                m[i * n + i] += 0.5;
            }
        }
        Self { n, matrix: m }
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }
}

impl Proposal for DiscreteProposal {
    fn dim(&self) -> usize {
        1
    }

    fn propose<R: KernelRng + ?Sized>(&self, center: &[f64], out: &mut [f64], rng: &mut R) {
        let i = libm::round(center[0]) as usize;
        let row = &self.matrix[i * self.n..(i + 1) * self.n];
        let u = rng.uniform();
        let mut acc = 0.0;
        let mut pick = self.n - 1;
        for (j, q) in row.iter().enumerate() {
            acc += q;
            if u < acc {
                pick = j;
                break;
            }
        }
        // guard against rounding in the cumulative sum landing on a zero entry
        while row[pick] == 0.0 && pick > 0 {
            pick -= 1;
        }
        out[0] = pick as f64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Zeros;
    impl KernelRng for Zeros {
        fn uniform(&mut self) -> f64 {
            0.0
        }
        fn standard_normal(&mut self) -> f64 {
            0.0
        }
    }

    #[test]
    fn zero_innovation_returns_center() {
        let p = GaussianProposal::isotropic(2, 1.0).unwrap();
        assert_eq!(p.draw(&[1.5, -2.0], &mut Zeros), vec![1.5, -2.0]);
    }

    #[test]
    fn empirical_covariance_of_draws() {
        let p = GaussianProposal::new(vec![4.0, 0.0, 0.0, 1.0], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws: Vec<Vec<f64>> = (0..100_000)
            .map(|_| p.draw(&[0.0, 0.0], &mut rng))
            .collect();
        let est = GaussianProposal::adapt_from_sample(draws.iter().map(|d| d.as_slice())).unwrap();
        let c = est.covariance();
        assert!((c[0] - 4.0).abs() < 0.2);
        assert!((c[3] - 1.0).abs() < 0.05);
        // off-diagonal: within 5% of the larger scale
        assert!(c[1].abs() < 0.1);
    }

    #[test]
    fn isotropic_sigma_four_marginal_sd() {
        let p = GaussianProposal::isotropic(2, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let d = p.draw(&[0.0, 0.0], &mut rng);
            s += d[1];
            s2 += d[1] * d[1];
        }
        let sd = (s2 / n as f64 - (s / n as f64).powi(2)).sqrt();
        assert!((sd - 4.0).abs() < 0.05);
    }

    #[test]
    fn kernel_density_is_symmetric() {
        let p = GaussianProposal::new(vec![2.0, 0.3, 0.3, 0.5], 2).unwrap();
        let (a, b) = ([0.3, -1.0], [2.0, 0.7]);
        assert!((p.log_kernel(&a, &b) - p.log_kernel(&b, &a)).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        assert!(GaussianProposal::new(vec![1.0, 0.5, 0.4, 1.0], 2).is_err());
        assert_eq!(
            GaussianProposal::new(vec![1.0, 2.0, 2.0, 1.0], 2),
            Err(Error::NotPositiveDefinite)
        );
    }

    #[test]
    fn identical_draws_fail_adaptation() {
        let draws = vec![vec![1.0, 1.0]; 10];
        let err = GaussianProposal::adapt_from_sample(draws.iter().map(|d| d.as_slice()));
        assert_eq!(err, Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn too_few_draws() {
        let draws = [vec![1.0, 2.0], vec![0.0, 1.0]];
        assert!(matches!(
            GaussianProposal::adapt_from_sample(draws.iter().map(|d| d.as_slice())),
            Err(Error::TooFewDraws { .. })
        ));
    }

    #[test]
    fn recovers_diag_nine_one() {
        let truth = GaussianProposal::new(vec![9.0, 0.0, 0.0, 1.0], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws: Vec<Vec<f64>> = (0..10_000)
            .map(|_| truth.draw(&[0.0, 0.0], &mut rng))
            .collect();
        let est = GaussianProposal::adapt_from_sample(draws.iter().map(|d| d.as_slice())).unwrap();
        let c = est.covariance();
        assert!((c[0] - 9.0).abs() < 0.9 && (c[3] - 1.0).abs() < 0.1);
        assert!(c[1].abs() < 0.3);
    }

    #[test]
    fn pooled_chains_use_concatenation() {
        // two tight clusters far apart: the pooled covariance sees the gap,
        // the average of within-chain covariances would not
        let a: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i % 5) as f64 * 0.01, (i % 7) as f64 * 0.01])
            .collect();
        let b: Vec<Vec<f64>> = a.iter().map(|v| vec![v[0] + 10.0, v[1] + 10.0]).collect();
        let pooled =
            GaussianProposal::adapt_from_sample(a.iter().chain(&b).map(|d| d.as_slice())).unwrap();
        assert!(pooled.covariance()[0] > 20.0);
    }

    #[test]
    fn discrete_proposals_are_symmetric_stochastic() {
        for p in [
            DiscreteProposal::uniform_other(4),
            DiscreteProposal::nearest_neighbor(5),
        ] {
            let n = p.n_states();
            assert!(DiscreteProposal::new(p.matrix().to_vec(), n).is_ok());
        }
    }
}
