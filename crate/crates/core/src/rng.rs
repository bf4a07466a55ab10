//! The randomness contract used by every kernel.
//!
//! Kernels only ever ask for uniforms on `[0, 1)`, standard normals and
//! uniform indices. Any [`rand::RngCore`] satisfies the contract; tests can
//! implement [`KernelRng`] directly to script a particular path.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

pub trait KernelRng {
    /// A draw from Uniform[0, 1).
    fn uniform(&mut self) -> f64;

    fn standard_normal(&mut self) -> f64;

    /// A uniform index in `0..n`. `n` must be positive.
    fn index(&mut self, n: usize) -> usize {
        let k = (self.uniform() * n as f64) as usize;
        k.min(n - 1)
    }
}

impl<R: RngCore> KernelRng for R {
    fn uniform(&mut self) -> f64 {
        self.random::<f64>()
    }

    fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }

    fn index(&mut self, n: usize) -> usize {
        self.random_range(0..n)
    }
}
