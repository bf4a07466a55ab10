//! Seeded Monte Carlo checks of kernel laws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ram_core::diagnostics::{autocorrelation, nearest_mode_frequencies};
use ram_core::gibbs::{BlockKernel, BlockSpec, GibbsSampler};
use ram_core::kernels::{forced_downhill, forced_uphill, DEFAULT_MAX_TRIES};
use ram_core::oracle::{forced_kernel, DEFAULT_EPS};
use ram_core::proposal::DiscreteProposal;
use ram_core::targets::{DiscreteTarget, GaussianMixture};
use ram_core::{EvalCounter, GaussianProposal, KernelRng};

/// Pearson statistic and the 0.999 quantile for `df` degrees of freedom
/// (Wilson-Hilferty).
fn chi_square(observed: &[u64], expected: &[f64]) -> (f64, f64) {
    let stat = observed
        .iter()
        .zip(expected)
        .filter(|(_, e)| **e > 0.0)
        .map(|(o, e)| (*o as f64 - e).powi(2) / e)
        .sum();
    let df = expected.iter().filter(|e| **e > 0.0).count() as f64 - 1.0;
    let z = 3.090_232;
    let q = df * (1.0 - 2.0 / (9.0 * df) + z * (2.0 / (9.0 * df)).sqrt()).powi(3);
    (stat, q)
}

#[test]
fn forced_moves_follow_the_normalized_law() {
    let pi = [1.0, 2.0, 4.0, 0.5, 3.0];
    let target = DiscreteTarget::from_weights(&pi);
    let q = DiscreteProposal::uniform_other(5);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let draws = 200_000;
    for downhill in [true, false] {
        let law = forced_kernel(&pi, q.matrix(), DEFAULT_EPS, downhill);
        for start in 0..5 {
            let mut counts = vec![0u64; 5];
            let mut counter = EvalCounter::new();
            let x = [start as f64];
            for _ in 0..draws {
                let mv = if downhill {
                    forced_downhill(
                        &x,
                        pi[start].ln(),
                        &q,
                        &target,
                        &mut rng,
                        &mut counter,
                        DEFAULT_MAX_TRIES,
                    )
                } else {
                    forced_uphill(
                        &x,
                        pi[start].ln(),
                        &q,
                        &target,
                        &mut rng,
                        &mut counter,
                        DEFAULT_MAX_TRIES,
                    )
                }
                .unwrap();
                counts[DiscreteTarget::state_of(&mv.point)] += 1;
            }
            let expected: Vec<f64> = law[start * 5..start * 5 + 5]
                .iter()
                .map(|p| p * draws as f64)
                .collect();
            let (stat, crit) = chi_square(&counts, &expected);
            assert!(
                stat < crit,
                "start {start} downhill {downhill}: {stat} >= {crit}"
            );
        }
    }
}

#[test]
fn white_noise_and_ar1_autocorrelation() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let n = 100_000;
    let noise: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
    let acf = autocorrelation(&noise, 5).unwrap();
    assert_eq!(acf[0], 1.0);
    assert!(acf[1].abs() < 3.0 / (n as f64).sqrt());

    let mut ar = Vec::with_capacity(n);
    let mut v = 0.0;
    for e in &noise {
        v = 0.9 * v + e;
        ar.push(v);
    }
    // var of the lag-1 estimate is about (1 − ρ²)/n
    let se = ((1.0 - 0.81) / n as f64).sqrt();
    let acf = autocorrelation(&ar, 1).unwrap();
    assert!((acf[1] - 0.9).abs() < 3.0 * se + 1e-3, "{}", acf[1]);
}

#[test]
fn uniform_cube_occupancy() {
    let mix = GaussianMixture::cube_modes(3).unwrap();
    let modes = mix.modes();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let n = 100_000;
    let mut vals = Vec::with_capacity(3 * n);
    for _ in 0..n {
        let j = rng.index(8);
        vals.extend(modes[j].iter().map(|m| m + rng.standard_normal()));
    }
    let f = nearest_mode_frequencies(&vals, 3, &modes);
    let se = (0.125f64 * 0.875 / n as f64).sqrt();
    assert!(
        f.iter().all(|p| (p - 0.125).abs() < 3.0 * se + 1e-3),
        "{f:?}"
    );
    assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

fn gibbs_endpoints(kernel: impl Fn() -> BlockKernel<GaussianProposal>, seed: u64) -> Vec<u64> {
    let target = GaussianMixture::new(
        vec![vec![0.0, 0.0], vec![3.0, 3.0]],
        vec![0.6, 0.6],
        vec![0.3, 0.7],
    )
    .unwrap();
    let modes = target.modes();
    let blocks = vec![
        BlockSpec {
            name: "a".into(),
            indices: vec![0],
            kernel: kernel(),
        },
        BlockSpec {
            name: "b".into(),
            indices: vec![1],
            kernel: kernel(),
        },
    ];
    let sampler = GibbsSampler::new(2, blocks).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // bins: nearest mode × sign of x0 − x1
    let mut bins = vec![0u64; 4];
    for _ in 0..3000 {
        let start = vec![rng.uniform() * 3.0, rng.uniform() * 3.0];
        let mut state = sampler.init(&target, start).unwrap();
        for _ in 0..60 {
            sampler.sweep(&mut state, &target, &mut rng).unwrap();
        }
        let j = ram_core::diagnostics::nearest_mode(&state.x, &modes);
        bins[2 * j + usize::from(state.x[0] > state.x[1])] += 1;
    }
    bins
}

#[test]
fn gibbs_metropolis_and_ram_blocks_agree() {
    let p = || GaussianProposal::isotropic(1, 2.0).unwrap();
    let met = gibbs_endpoints(|| BlockKernel::Metropolis(p()), 1);
    let ram = gibbs_endpoints(
        || BlockKernel::Ram {
            proposal: p(),
            max_tries: DEFAULT_MAX_TRIES,
        },
        2,
    );
    // 2 × 4 contingency table, df = 3, 0.999 quantile 16.27
    let (n1, n2) = (
        met.iter().sum::<u64>() as f64,
        ram.iter().sum::<u64>() as f64,
    );
    let mut stat = 0.0;
    for k in 0..4 {
        let total = (met[k] + ram[k]) as f64;
        for (obs, n) in [(met[k], n1), (ram[k], n2)] {
            let e = total * n / (n1 + n2);
            stat += (obs as f64 - e).powi(2) / e;
        }
    }
    assert!(stat < 16.27, "{met:?} vs {ram:?}: {stat}");
    // and both put about 70% of the mass on the second mode
    for b in [&met, &ram] {
        let share = (b[2] + b[3]) as f64 / 3000.0;
        assert!((share - 0.7).abs() < 0.05, "{b:?}");
    }
}
