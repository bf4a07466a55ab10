use alloc::vec::Vec;

use super::LogTarget;
use crate::rng::KernelRng;

/// Standard deviation of the Gaussian distance measurement error.
pub const OBS_SD: f64 = 0.02;
/// Length scale of the detection probability `exp(-d² / (2·0.3²))`.
pub const DETECT_SCALE: f64 = 0.3;
/// Prior standard deviation of each unknown coordinate.
pub const PRIOR_SD: f64 = 10.0;

const N_SENSORS: usize = 6;
const N_UNKNOWN: usize = 4;

/// True sensor locations used to simulate the network; the last two sensors
/// are the ones with known positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorTruth(pub [[f64; 2]; N_SENSORS]);

impl Default for SensorTruth {
    fn default() -> Self {
        SensorTruth([
            [0.57, 0.91],
            [0.10, 0.37],
            [0.26, 0.14],
            [0.85, 0.04],
            [0.50, 0.30],
            [0.30, 0.70],
        ])
    }
}

/// Posterior over the locations of four sensors given noisy, partially
/// observed pairwise distances to each other and to two sensors at known
/// positions. The state vector is `(x1, x2, x3, x4)` flattened to length 8.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorNetwork {
    known: [[f64; 2]; N_SENSORS - N_UNKNOWN],
    observed: [[bool; N_SENSORS]; N_SENSORS],
    distances: [[f64; N_SENSORS]; N_SENSORS],
}

impl SensorNetwork {
    /// Builds a network from observation flags and distances. Only the upper
    /// triangle (`i < j`) is read; the stored matrices are symmetrized.
    pub fn new(
        known: [[f64; 2]; 2],
        observed: [[bool; N_SENSORS]; N_SENSORS],
        distances: [[f64; N_SENSORS]; N_SENSORS],
    ) -> Self {
        let mut w = [[false; N_SENSORS]; N_SENSORS];
        let mut y = [[0.0; N_SENSORS]; N_SENSORS];
        for i in 0..N_SENSORS {
            for j in i + 1..N_SENSORS {
                w[i][j] = observed[i][j];
                w[j][i] = observed[i][j];
                if observed[i][j] {
                    y[i][j] = distances[i][j];
                    y[j][i] = distances[i][j];
                }
            }
        }
        Self {
            known,
            observed: w,
            distances: y,
        }
    }

    /// Draws `w_ij ~ Bernoulli(exp(-‖x_i − x_j‖² / 0.18))` and, where observed,
    /// `y_ij ~ N(‖x_i − x_j‖, 0.02²)` for every pair `i < j`.
    pub fn simulate<R: KernelRng + ?Sized>(truth: &SensorTruth, rng: &mut R) -> Self {
        let x = &truth.0;
        let mut w = [[false; N_SENSORS]; N_SENSORS];
        let mut y = [[0.0; N_SENSORS]; N_SENSORS];
        for i in 0..N_SENSORS {
            for j in i + 1..N_SENSORS {
                let d = dist(&x[i], &x[j]);
                if rng.uniform() < detection_probability(d) {
                    w[i][j] = true;
                    y[i][j] = d + OBS_SD * rng.standard_normal();
                }
            }
        }
        Self::new([x[4], x[5]], w, y)
    }

    pub fn known_locations(&self) -> [[f64; 2]; 2] {
        self.known
    }

    pub fn observed(&self, i: usize, j: usize) -> bool {
        self.observed[i][j]
    }

    pub fn distance(&self, i: usize, j: usize) -> Option<f64> {
        self.observed[i][j].then_some(self.distances[i][j])
    }

    pub fn observed_pairs(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..N_SENSORS {
            for j in i + 1..N_SENSORS {
                if self.observed[i][j] {
                    out.push((i, j, self.distances[i][j]));
                }
            }
        }
        out
    }

    /// Log posterior at unknown locations `x1..x4`.
    pub fn log_posterior(&self, unknown: &[[f64; 2]; N_UNKNOWN]) -> f64 {
        let loc = |k: usize| {
            if k < N_UNKNOWN {
                unknown[k]
            } else {
                self.known[k - N_UNKNOWN]
            }
        };
        let two_det = 2.0 * DETECT_SCALE * DETECT_SCALE;
        let two_obs = 2.0 * OBS_SD * OBS_SD;
        let mut lp = 0.0;
        for i in 0..N_SENSORS {
            for j in i + 1..N_SENSORS {
                let (a, b) = (loc(i), loc(j));
                let d2 = (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]);
                if self.observed[i][j] {
                    let r = self.distances[i][j] - libm::sqrt(d2);
                    lp -= r * r / two_obs + d2 / two_det;
                } else {
                    // log(1 − exp(−a)); −∞ for coincident sensors
                    lp += libm::log(-libm::expm1(-d2 / two_det));
                }
            }
        }
        let prior: f64 = unknown.iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum();
        lp - prior / (2.0 * PRIOR_SD * PRIOR_SD)
    }
}

impl LogTarget for SensorNetwork {
    fn dim(&self) -> usize {
        2 * N_UNKNOWN
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let u = [[x[0], x[1]], [x[2], x[3]], [x[4], x[5]], [x[6], x[7]]];
        let v = self.log_posterior(&u);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }
}

pub(crate) fn detection_probability(d: f64) -> f64 {
    libm::exp(-d * d / (2.0 * DETECT_SCALE * DETECT_SCALE))
}

fn dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    libm::hypot(a[0] - b[0], a[1] - b[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unobserved() -> SensorNetwork {
        SensorNetwork::new([[0.0, 0.0]; 2], [[false; 6]; 6], [[0.0; 6]; 6])
    }

    #[test]
    fn coincident_unobserved_sensors_give_neg_infinity() {
        let t = unobserved();
        assert_eq!(t.log_posterior(&[[0.0, 0.0]; 4]), f64::NEG_INFINITY);
    }

    #[test]
    fn zero_residual_contributes_only_detection_term() {
        let mut w = [[false; 6]; 6];
        let mut y = [[0.0; 6]; 6];
        w[0][1] = true;
        y[0][1] = 5.0;
        let t = SensorNetwork::new([[100.0, 0.0], [0.0, 100.0]], w, y);
        let x = [[0.0, 0.0], [3.0, 4.0], [50.0, 50.0], [-50.0, 50.0]];
        let full = t.log_posterior(&x);

        let mut w2 = w;
        w2[0][1] = false;
        let baseline = SensorNetwork::new([[100.0, 0.0], [0.0, 100.0]], w2, y).log_posterior(&x);
        // swapping an unobserved pair for an observed one with zero residual
        // changes the pair term from log(1 − e^{−25/0.18}) to −25/0.18
        let expected = baseline - libm::log(-libm::expm1(-25.0 / 0.18)) - 25.0 / 0.18;
        assert!((full - expected).abs() < 1e-9);
    }

    #[test]
    fn detection_probability_values() {
        assert_eq!(detection_probability(0.0), 1.0);
        assert!((detection_probability(0.3) - libm::exp(-0.5)).abs() < 1e-15);
        assert!((detection_probability(0.3) - 0.6065).abs() < 1e-4);
    }

    #[test]
    fn simulation_is_deterministic_and_symmetric() {
        let truth = SensorTruth::default();
        let a = SensorNetwork::simulate(&truth, &mut ChaCha8Rng::seed_from_u64(7));
        let b = SensorNetwork::simulate(&truth, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(a.observed(i, j), a.observed(j, i));
                assert_eq!(a.distance(i, j), a.distance(j, i));
            }
        }
    }

    #[test]
    fn coincident_sensors_are_always_detected() {
        let truth = SensorTruth([[0.2, 0.2]; 6]);
        for seed in 0..20 {
            let t = SensorNetwork::simulate(&truth, &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(t.observed_pairs().len(), 15);
        }
    }

    #[test]
    fn truth_beats_far_perturbation() {
        let truth = SensorTruth::default();
        let t = SensorNetwork::simulate(&truth, &mut ChaCha8Rng::seed_from_u64(11));
        let x: Vec<f64> = truth.0[..4].iter().flatten().copied().collect();
        let at_truth = t.log_density(&x);
        assert!(at_truth.is_finite());
        let far: Vec<f64> = x.iter().map(|v| v + 5.0).collect();
        assert!(at_truth > t.log_density(&far));
    }
}
