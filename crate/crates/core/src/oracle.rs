//! Exact transition matrices on small discrete state spaces.
//!
//! Each builder enumerates a kernel in closed form, in probability space and
//! with the literal `(π(a) + ε) / (π(b) + ε)` ratios, independently of the
//! log-space code in [`crate::kernels`] and [`crate::baselines`]. Forced
//! transitions are written as `q·α / A` with the normalizer `A` summed
//! explicitly rather than simulated by retries.
//!
//! Matrices are row-major and row-stochastic: `p[i * n + j]` is the
//! probability of moving from state `i` to state `j`.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg;

/// The ε used in forced-transition and joint acceptance ratios.
pub const DEFAULT_EPS: f64 = 1e-308;

/// An enumerated kernel: `labels[i]` names state `i` (e.g. `[x, z]` for the
/// RAM joint chain or one entry per rung for parallel tempering).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernelMatrix {
    pub labels: Vec<Vec<usize>>,
    pub p: Vec<f64>,
}

impl DiscreteKernelMatrix {
    pub fn n_states(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n_states() + j]
    }

    /// Largest `|Σ_j P_ij − 1|`.
    pub fn row_sum_error(&self) -> f64 {
        let n = self.n_states();
        self.p
            .chunks(n)
            .map(|r| libm::fabs(r.iter().sum::<f64>() - 1.0))
            .fold(0.0, f64::max)
    }

    pub fn entries_in_unit_interval(&self) -> bool {
        self.p.iter().all(|v| (-1e-15..=1.0 + 1e-15).contains(v))
    }

    /// The stationary distribution, assuming it is unique.
    pub fn stationary_distribution(&self) -> Option<Vec<f64>> {
        let n = self.n_states();
        // (Pᵀ − I) v = 0 with the last equation replaced by Σ v = 1
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = self.get(j, i) - if i == j { 1.0 } else { 0.0 };
            }
        }
        for j in 0..n {
            a[(n - 1) * n + j] = 1.0;
        }
        let mut b = vec![0.0; n];
        b[n - 1] = 1.0;
        linalg::solve(a, b)
    }

    /// Sums a distribution over this matrix's states down to component
    /// `which` of the labels.
    pub fn marginal(&self, dist: &[f64], which: usize, n_values: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_values];
        for (label, v) in self.labels.iter().zip(dist) {
            out[label[which]] += v;
        }
        out
    }

    fn multiply(&self, other: &DiscreteKernelMatrix) -> DiscreteKernelMatrix {
        let n = self.n_states();
        let mut p = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.p[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    p[i * n + j] += a * other.p[k * n + j];
                }
            }
        }
        DiscreteKernelMatrix {
            labels: self.labels.clone(),
            p,
        }
    }
}

/// `‖targetᵀ P − targetᵀ‖∞`.
pub fn check_stationarity(m: &DiscreteKernelMatrix, target: &[f64]) -> f64 {
    let n = m.n_states();
    assert_eq!(target.len(), n, "target has the wrong number of states");
    (0..n)
        .map(|j| {
            let flow: f64 = (0..n).map(|i| target[i] * m.get(i, j)).sum();
            libm::fabs(flow - target[j])
        })
        .fold(0.0, f64::max)
}

/// `max_{a,b} |target(a) P(a→b) − target(b) P(b→a)|`.
pub fn detailed_balance_residual(m: &DiscreteKernelMatrix, target: &[f64]) -> f64 {
    let n = m.n_states();
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            worst = worst.max(libm::fabs(
                target[a] * m.get(a, b) - target[b] * m.get(b, a),
            ));
        }
    }
    worst
}

pub fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

fn n_of(q: &[f64]) -> usize {
    let n = libm::sqrt(q.len() as f64) as usize;
    assert_eq!(n * n, q.len(), "proposal matrix must be square");
    n
}

fn eps_ratio(a: f64, b: f64, eps: f64) -> f64 {
    (a + eps) / (b + eps)
}

/// `min{1, (π(to)/π(from))^{1/T}}`; a move off a zero-density state is
/// always accepted.
fn metropolis_acceptance(from: f64, to: f64, temperature: f64) -> f64 {
    if from == 0.0 {
        return 1.0;
    }
    libm::fmin(1.0, libm::pow(to / from, 1.0 / temperature))
}

/// Metropolis kernel for `π^{1/T}` with symmetric proposal `q`.
fn metropolis_kernel(pi: &[f64], q: &[f64], temperature: f64) -> Vec<f64> {
    let n = pi.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        let mut stay = 1.0;
        for j in 0..n {
            if j != i {
                let v = q[i * n + j] * metropolis_acceptance(pi[i], pi[j], temperature);
                k[i * n + j] = v;
                stay -= v;
            }
        }
        k[i * n + i] = stay;
    }
    k
}

/// Forced Metropolis kernel `q(b|a) α(b|a) / A(a)`: downhill uses
/// `min{1, (π(a)+ε)/(π(b)+ε)}`, uphill the reciprocal.
pub fn forced_kernel(pi: &[f64], q: &[f64], eps: f64, downhill: bool) -> Vec<f64> {
    let n = pi.len();
    assert_eq!(n_of(q), n);
    let mut k = vec![0.0; n * n];
    for a in 0..n {
        let row = &mut k[a * n..(a + 1) * n];
        for b in 0..n {
            let r = if downhill {
                eps_ratio(pi[a], pi[b], eps)
            } else {
                eps_ratio(pi[b], pi[a], eps)
            };
            row[b] = q[a * n + b] * libm::fmin(1.0, r);
        }
        let norm: f64 = row.iter().sum();
        assert!(norm > 0.0, "forced transition impossible from state {a}");
        row.iter_mut().for_each(|v| *v /= norm);
    }
    k
}

/// Down-up proposal `q^DU(x*|x) = Σ_x' q^D(x'|x) q^U(x*|x')`.
pub fn down_up_kernel(pi: &[f64], q: &[f64], eps: f64) -> Vec<f64> {
    let n = pi.len();
    let d = forced_kernel(pi, q, eps, true);
    let u = forced_kernel(pi, q, eps, false);
    let mut du = vec![0.0; n * n];
    for x in 0..n {
        for m in 0..n {
            for s in 0..n {
                du[x * n + s] += d[x * n + m] * u[m * n + s];
            }
        }
    }
    du
}

/// Joint acceptance in probability space.
pub fn joint_acceptance(pi_x: f64, pi_z: f64, pi_xs: f64, pi_zs: f64, eps: f64) -> f64 {
    let num = pi_xs * libm::fmin(1.0, eps_ratio(pi_x, pi_z, eps));
    let den = pi_x * libm::fmin(1.0, eps_ratio(pi_xs, pi_zs, eps));
    if den == 0.0 {
        return 1.0;
    }
    libm::fmin(1.0, num / den)
}

/// Metropolis with symmetric proposal `q`.
pub fn build_metropolis_matrix(pi: &[f64], q: &[f64]) -> DiscreteKernelMatrix {
    assert_eq!(n_of(q), pi.len());
    DiscreteKernelMatrix {
        labels: (0..pi.len()).map(|i| vec![i]).collect(),
        p: metropolis_kernel(pi, q, 1.0),
    }
}

/// The RAM chain on joint states `(x, z)`, indexed `x * n + z`.
pub fn build_ram_joint_matrix(pi: &[f64], q: &[f64], eps: f64) -> DiscreteKernelMatrix {
    build_ram_joint_with(pi, q, eps, joint_acceptance)
}

fn build_ram_joint_with<F>(pi: &[f64], q: &[f64], eps: f64, accept: F) -> DiscreteKernelMatrix
where
    F: Fn(f64, f64, f64, f64, f64) -> f64,
{
    let n = pi.len();
    assert_eq!(n_of(q), n);
    let du = down_up_kernel(pi, q, eps);
    let d = forced_kernel(pi, q, eps, true);
    let nn = n * n;
    let mut p = vec![0.0; nn * nn];
    for x in 0..n {
        for z in 0..n {
            let from = x * n + z;
            let mut moved = 0.0;
            for xs in 0..n {
                for zs in 0..n {
                    let to = xs * n + zs;
                    if to == from {
                        continue;
                    }
                    let prop = du[x * n + xs] * d[xs * n + zs];
                    if prop == 0.0 {
                        continue;
                    }
                    let v = prop * accept(pi[x], pi[z], pi[xs], pi[zs], eps);
                    p[from * nn + to] = v;
                    moved += v;
                }
            }
            p[from * nn + from] = 1.0 - moved;
        }
    }
    let labels = (0..nn).map(|i| vec![i / n, i % n]).collect();
    DiscreteKernelMatrix { labels, p }
}

/// `π(x) q(z|x)`, normalized, on the joint states of
/// [`build_ram_joint_matrix`].
pub fn ram_joint_target(pi: &[f64], q: &[f64]) -> Vec<f64> {
    let n = pi.len();
    let pi = normalize(pi);
    (0..n * n)
        .map(|i| pi[i / n] * q[(i / n) * n + i % n])
        .collect()
}

/// Swap schedule for [`build_pt_matrix`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PtSwaps {
    SingleAdjacent,
    Batch { count: usize, prob: f64 },
}

fn index_to_tuple(mut i: usize, n: usize, r: usize) -> Vec<usize> {
    let mut t = vec![0; r];
    for slot in t.iter_mut() {
        *slot = i % n;
        i /= n;
    }
    t
}

fn tuple_to_index(t: &[usize], n: usize) -> usize {
    t.iter().rev().fold(0, |acc, &v| acc * n + v)
}

/// Parallel tempering on rung tuples `(x_0, …, x_{R−1})`: a Metropolis
/// update per rung against `π^{1/T_j}`, then swaps of adjacent rungs.
pub fn build_pt_matrix(
    pi: &[f64],
    proposals: &[&[f64]],
    temps: &[f64],
    swaps: PtSwaps,
) -> DiscreteKernelMatrix {
    let n = pi.len();
    let r = temps.len();
    assert_eq!(proposals.len(), r);
    let size = n.pow(r as u32);
    let kernels: Vec<Vec<f64>> = proposals
        .iter()
        .zip(temps)
        .map(|(q, t)| metropolis_kernel(pi, q, *t))
        .collect();
    let labels: Vec<Vec<usize>> = (0..size).map(|i| index_to_tuple(i, n, r)).collect();

    let mut update = vec![0.0; size * size];
    for (s, from) in labels.iter().enumerate() {
        for (t, to) in labels.iter().enumerate() {
            update[s * size + t] = (0..r).map(|j| kernels[j][from[j] * n + to[j]]).product();
        }
    }
    let update = DiscreteKernelMatrix {
        labels: labels.clone(),
        p: update,
    };

    let mut single = vec![0.0; size * size];
    for (s, from) in labels.iter().enumerate() {
        if r < 2 {
            single[s * size + s] = 1.0;
            continue;
        }
        let w = 1.0 / (r - 1) as f64;
        for j in 0..r - 1 {
            let (lo, hi) = (pi[from[j]], pi[from[j + 1]]);
            let beta = 1.0 / temps[j] - 1.0 / temps[j + 1];
            let a = if lo == 0.0 {
                1.0
            } else {
                libm::fmin(1.0, libm::pow(hi / lo, beta))
            };
            let mut swapped = from.clone();
            swapped.swap(j, j + 1);
            let t = tuple_to_index(&swapped, n);
            single[s * size + t] += w * a;
            single[s * size + s] += w * (1.0 - a);
        }
    }
    let single = DiscreteKernelMatrix {
        labels: labels.clone(),
        p: single,
    };
    let swap = match swaps {
        PtSwaps::SingleAdjacent => single,
        PtSwaps::Batch { count, prob } => {
            let mut many = identity(labels.clone());
            for _ in 0..count {
                many = many.multiply(&single);
            }
            let mut p = vec![0.0; size * size];
            for i in 0..size {
                p[i * size + i] += 1.0 - prob;
            }
            for (v, m) in p.iter_mut().zip(&many.p) {
                *v += prob * m;
            }
            DiscreteKernelMatrix { labels, p }
        }
    };
    update.multiply(&swap)
}

/// `Π_j π^{1/T_j}(x_j)`, normalized, on the states of [`build_pt_matrix`].
pub fn pt_product_target(pi: &[f64], temps: &[f64]) -> Vec<f64> {
    let n = pi.len();
    let size = n.pow(temps.len() as u32);
    let w: Vec<f64> = (0..size)
        .map(|i| {
            index_to_tuple(i, n, temps.len())
                .iter()
                .zip(temps)
                .map(|(&x, t)| libm::pow(pi[x], 1.0 / t))
                .product()
        })
        .collect();
    normalize(&w)
}

fn identity(labels: Vec<Vec<usize>>) -> DiscreteKernelMatrix {
    let n = labels.len();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        p[i * n + i] = 1.0;
    }
    DiscreteKernelMatrix { labels, p }
}

/// Which temperature the descending move out of rung `j` targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Descent {
    /// Reapply the rung-`j` kernel (invariant for `π_j`).
    SameRung,
    /// Target `π_{j−1}` with the rung-`j` proposal.
    #[cfg_attr(not(test), allow(dead_code))]
    LowerRung,
}

/// Tempered transitions: ascend rungs `1..=J`, descend `J..=1`, accept the
/// end point with the telescoping product. `proposals[j]` is used at rung
/// `j`; `proposals[0]` is ignored.
pub fn build_tt_matrix(pi: &[f64], proposals: &[&[f64]], temps: &[f64]) -> DiscreteKernelMatrix {
    build_tt_with(pi, proposals, temps, Descent::SameRung)
}

fn build_tt_with(
    pi: &[f64],
    proposals: &[&[f64]],
    temps: &[f64],
    descent: Descent,
) -> DiscreteKernelMatrix {
    let n = pi.len();
    let top = temps.len() - 1;
    assert_eq!(proposals.len(), temps.len());
    let up: Vec<Vec<f64>> = (0..=top)
        .map(|j| metropolis_kernel(pi, proposals[j], temps[j]))
        .collect();
    let down: Vec<Vec<f64>> = (0..=top)
        .map(|j| match descent {
            Descent::SameRung => up[j].clone(),
            Descent::LowerRung if j > 0 => metropolis_kernel(pi, proposals[j], temps[j - 1]),
            Descent::LowerRung => up[0].clone(),
        })
        .collect();
    // π_j(a) / π_{j−1}(a) = π(a)^{1/T_j − 1/T_{j−1}}
    let factor = |j: usize, a: usize| libm::pow(pi[a], 1.0 / temps[j] - 1.0 / temps[j - 1]);

    let mut walk = Walk {
        n,
        top,
        up: &up,
        down: &down,
        factor: &factor,
        start: 0,
        p: vec![0.0; n * n],
    };
    for start in 0..n {
        if top == 0 {
            walk.p[start * n + start] = 1.0;
            continue;
        }
        walk.start = start;
        walk.step(start, 1, true, 1.0, 1.0);
    }
    DiscreteKernelMatrix {
        labels: (0..n).map(|i| vec![i]).collect(),
        p: walk.p,
    }
}

/// Path enumeration state for [`build_tt_with`].
struct Walk<'a> {
    n: usize,
    top: usize,
    up: &'a [Vec<f64>],
    down: &'a [Vec<f64>],
    factor: &'a dyn Fn(usize, usize) -> f64,
    start: usize,
    p: Vec<f64>,
}

impl Walk<'_> {
    /// Ascending: `cur` is x̂_{j−1} and the rung-`j` move comes next.
    /// Descending: `cur` is x̌_j.
    fn step(&mut self, cur: usize, j: usize, ascending: bool, weight: f64, ratio: f64) {
        if weight == 0.0 {
            return;
        }
        let n = self.n;
        if ascending {
            let ratio = ratio * (self.factor)(j, cur);
            for next in 0..n {
                let k = self.up[j][cur * n + next];
                if j == self.top {
                    self.step(next, j, false, weight * k, ratio);
                } else {
                    self.step(next, j + 1, true, weight * k, ratio);
                }
            }
        } else {
            for next in 0..n {
                let k = self.down[j][cur * n + next];
                if k == 0.0 {
                    continue;
                }
                let ratio = ratio / (self.factor)(j, next);
                if j == 1 {
                    let a = libm::fmin(1.0, ratio);
                    let a = if a.is_nan() { 1.0 } else { a };
                    let s = self.start;
                    self.p[s * n + next] += weight * k * a;
                    self.p[s * n + s] += weight * k * (1.0 - a);
                } else {
                    self.step(next, j - 1, false, weight * k, ratio);
                }
            }
        }
    }
}

/// Systematic-scan Gibbs over two discrete blocks `(a, b)` with a RAM kernel
/// per block. `pi[a * n_b + b]` is the joint weight. States are
/// `(a, z_a, b, z_b)`.
pub fn build_gibbs_ram_matrix(
    pi: &[f64],
    n_a: usize,
    n_b: usize,
    q_a: &[f64],
    q_b: &[f64],
    eps: f64,
) -> DiscreteKernelMatrix {
    assert_eq!(pi.len(), n_a * n_b);
    let size = n_a * n_a * n_b * n_b;
    let index = |a: usize, za: usize, b: usize, zb: usize| ((a * n_a + za) * n_b + b) * n_b + zb;
    let mut labels = vec![Vec::new(); size];
    for a in 0..n_a {
        for za in 0..n_a {
            for b in 0..n_b {
                for zb in 0..n_b {
                    labels[index(a, za, b, zb)] = vec![a, za, b, zb];
                }
            }
        }
    }
    let mut k1 = vec![0.0; size * size];
    for b in 0..n_b {
        let cond: Vec<f64> = (0..n_a).map(|a| pi[a * n_b + b]).collect();
        let r = build_ram_joint_matrix(&cond, q_a, eps);
        for from in 0..n_a * n_a {
            for to in 0..n_a * n_a {
                let v = r.p[from * n_a * n_a + to];
                for zb in 0..n_b {
                    let s = index(from / n_a, from % n_a, b, zb);
                    let t = index(to / n_a, to % n_a, b, zb);
                    k1[s * size + t] = v;
                }
            }
        }
    }
    let mut k2 = vec![0.0; size * size];
    for a in 0..n_a {
        let cond: Vec<f64> = (0..n_b).map(|b| pi[a * n_b + b]).collect();
        let r = build_ram_joint_matrix(&cond, q_b, eps);
        for from in 0..n_b * n_b {
            for to in 0..n_b * n_b {
                let v = r.p[from * n_b * n_b + to];
                for za in 0..n_a {
                    let s = index(a, za, from / n_b, from % n_b);
                    let t = index(a, za, to / n_b, to % n_b);
                    k2[s * size + t] = v;
                }
            }
        }
    }
    let k1 = DiscreteKernelMatrix {
        labels: labels.clone(),
        p: k1,
    };
    let k2 = DiscreteKernelMatrix { labels, p: k2 };
    k1.multiply(&k2)
}

/// `π(a, b) q_a(z_a|a) q_b(z_b|b)`, normalized, on the states of
/// [`build_gibbs_ram_matrix`].
pub fn gibbs_ram_target(pi: &[f64], n_a: usize, n_b: usize, q_a: &[f64], q_b: &[f64]) -> Vec<f64> {
    let mut w = Vec::with_capacity(n_a * n_a * n_b * n_b);
    for a in 0..n_a {
        for za in 0..n_a {
            for b in 0..n_b {
                for zb in 0..n_b {
                    w.push(pi[a * n_b + b] * q_a[a * n_a + za] * q_b[b * n_b + zb]);
                }
            }
        }
    }
    normalize(&w)
}
