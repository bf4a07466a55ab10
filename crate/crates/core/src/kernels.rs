//! The RAM kernel and the Metropolis baseline.
//!
//! Densities are cached: a RAM step evaluates the target exactly once per
//! proposal drawn in its three forced transitions, and a Metropolis step
//! exactly once.

use alloc::vec;
use alloc::vec::Vec;

use crate::proposal::Proposal;
use crate::rng::KernelRng;
use crate::targets::{
    acceptance_from_log, eval_logpi, log_ratio_eps, EvalCounter, LogTarget, Phase,
};
use crate::{Error, Result};

/// Cap on proposals per forced transition.
pub const DEFAULT_MAX_TRIES: u64 = 1_000_000;

/// Direction of a forced Metropolis transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Accepts with `min{1, π(from)/π(to)}`.
    Downhill,
    /// Accepts with `min{1, π(to)/π(from)}`.
    Uphill,
}

impl Direction {
    /// Log acceptance ratio of a move `from → to` under the ε rule.
    pub fn log_ratio(self, log_from: f64, log_to: f64) -> f64 {
        match self {
            Direction::Downhill => log_ratio_eps(log_from, log_to),
            Direction::Uphill => log_ratio_eps(log_to, log_from),
        }
    }
}

/// Result of a forced transition.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcedMove {
    pub point: Vec<f64>,
    pub log_density: f64,
    pub tries: u64,
}

/// Draws proposals from `proposal` around `from` until one is accepted.
/// Every proposal costs one evaluation, charged to `phase`.
#[allow(clippy::too_many_arguments)]
pub fn forced_transition<T, P, R>(
    direction: Direction,
    from: &[f64],
    log_from: f64,
    proposal: &P,
    target: &T,
    rng: &mut R,
    counter: &mut EvalCounter,
    phase: Phase,
    max_tries: u64,
) -> Result<ForcedMove>
where
    T: LogTarget + ?Sized,
    P: Proposal + ?Sized,
    R: KernelRng + ?Sized,
{
    let mut point = vec![0.0; from.len()];
    for tries in 1..=max_tries {
        proposal.propose(from, &mut point, rng);
        let log_density = eval_logpi(target, &point, counter, phase)?;
        let alpha = acceptance_from_log(direction.log_ratio(log_from, log_density));
        if rng.uniform() < alpha {
            return Ok(ForcedMove {
                point,
                log_density,
                tries,
            });
        }
    }
    Err(Error::ForcedTransitionExhausted { phase, max_tries })
}

/// Forced downhill move from `x` (charged to [`Phase::Downhill`]).
pub fn forced_downhill<T, P, R>(
    x: &[f64],
    logpi_x: f64,
    proposal: &P,
    target: &T,
    rng: &mut R,
    counter: &mut EvalCounter,
    max_tries: u64,
) -> Result<ForcedMove>
where
    T: LogTarget + ?Sized,
    P: Proposal + ?Sized,
    R: KernelRng + ?Sized,
{
    forced_transition(
        Direction::Downhill,
        x,
        logpi_x,
        proposal,
        target,
        rng,
        counter,
        Phase::Downhill,
        max_tries,
    )
}

/// Forced uphill move from `x` (charged to [`Phase::Uphill`]).
pub fn forced_uphill<T, P, R>(
    x: &[f64],
    logpi_x: f64,
    proposal: &P,
    target: &T,
    rng: &mut R,
    counter: &mut EvalCounter,
    max_tries: u64,
) -> Result<ForcedMove>
where
    T: LogTarget + ?Sized,
    P: Proposal + ?Sized,
    R: KernelRng + ?Sized,
{
    forced_transition(
        Direction::Uphill,
        x,
        logpi_x,
        proposal,
        target,
        rng,
        counter,
        Phase::Uphill,
        max_tries,
    )
}

/// Joint chain state `(x, z)` with cached log-densities.
#[derive(Debug, Clone, PartialEq)]
pub struct RamState {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub logpi_x: f64,
    pub logpi_z: f64,
}

impl RamState {
    /// Starts the joint chain at `(x0, x0)`; one evaluation, charged to
    /// [`Phase::Other`].
    pub fn new<T: LogTarget + ?Sized>(
        target: &T,
        x0: Vec<f64>,
        counter: &mut EvalCounter,
    ) -> Result<Self> {
        let lp = eval_logpi(target, &x0, counter, Phase::Other)?;
        Ok(Self {
            z: x0.clone(),
            x: x0,
            logpi_x: lp,
            logpi_z: lp,
        })
    }

    /// From already-known values; the caller vouches for the caches.
    pub fn from_parts(x: Vec<f64>, z: Vec<f64>, logpi_x: f64, logpi_z: f64) -> Self {
        Self {
            x,
            z,
            logpi_x,
            logpi_z,
        }
    }
}

/// What one RAM step did.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KernelStepReport {
    pub accepted: bool,
    pub n_down: u64,
    pub n_up: u64,
    pub n_aux: u64,
    pub evals: u64,
}

/// Log of the joint acceptance probability
/// `min{1, π(x*) min{1, π(x)/π(z)} / (π(x) min{1, π(x*)/π(z*)})}`,
/// with every ratio taken under the ε rule.
///
/// When `z` and `z*` are no denser than `x` and `x*` this is exactly the
/// Metropolis log ratio `min{0, log π(x*) − log π(x)}`.
pub fn joint_log_acceptance(logpi_x: f64, logpi_z: f64, logpi_xs: f64, logpi_zs: f64) -> f64 {
    let ninf = f64::NEG_INFINITY;
    match (logpi_x == ninf, logpi_xs == ninf) {
        (false, true) => return ninf,
        (true, false) => return 0.0,
        _ => {}
    }
    let current = log_ratio_eps(logpi_x, logpi_z).min(0.0);
    let proposed = log_ratio_eps(logpi_xs, logpi_zs).min(0.0);
    let r = log_ratio_eps(logpi_xs, logpi_x) + current - proposed;
    // only reachable when x and x* both have zero density
    if r.is_nan() {
        0.0
    } else {
        r.min(0.0)
    }
}

/// One RAM iteration: downhill from `x`, uphill from `x'`, downhill from `x*`
/// to draw `z*`, then accept `(x*, z*)` jointly or keep `(x, z)`.
pub fn ram_step<T, P, R>(
    state: &mut RamState,
    proposal: &P,
    target: &T,
    rng: &mut R,
    counter: &mut EvalCounter,
    max_tries: u64,
) -> Result<KernelStepReport>
where
    T: LogTarget + ?Sized,
    P: Proposal + ?Sized,
    R: KernelRng + ?Sized,
{
    let before = counter.total();
    let down = forced_transition(
        Direction::Downhill,
        &state.x,
        state.logpi_x,
        proposal,
        target,
        rng,
        counter,
        Phase::Downhill,
        max_tries,
    )?;
    let up = forced_transition(
        Direction::Uphill,
        &down.point,
        down.log_density,
        proposal,
        target,
        rng,
        counter,
        Phase::Uphill,
        max_tries,
    )?;
    let aux = forced_transition(
        Direction::Downhill,
        &up.point,
        up.log_density,
        proposal,
        target,
        rng,
        counter,
        Phase::AuxDownhill,
        max_tries,
    )?;
    let log_alpha = joint_log_acceptance(
        state.logpi_x,
        state.logpi_z,
        up.log_density,
        aux.log_density,
    );
    let accepted = rng.uniform() < acceptance_from_log(log_alpha);
    if accepted {
        state.x = up.point;
        state.logpi_x = up.log_density;
        state.z = aux.point;
        state.logpi_z = aux.log_density;
    }
    Ok(KernelStepReport {
        accepted,
        n_down: down.tries,
        n_up: up.tries,
        n_aux: aux.tries,
        evals: counter.total() - before,
    })
}

/// One Metropolis step with a cached current density; evaluates only the
/// proposal (charged to [`Phase::Other`]). Returns whether it moved.
pub fn metropolis_step<T, P, R>(
    x: &mut [f64],
    logpi_x: &mut f64,
    proposal: &P,
    target: &T,
    rng: &mut R,
    counter: &mut EvalCounter,
) -> Result<bool>
where
    T: LogTarget + ?Sized,
    P: Proposal + ?Sized,
    R: KernelRng + ?Sized,
{
    let mut y = vec![0.0; x.len()];
    proposal.propose(x, &mut y, rng);
    let ly = eval_logpi(target, &y, counter, Phase::Other)?;
    let accepted = rng.uniform() < acceptance_from_log(log_ratio_eps(ly, *logpi_x));
    if accepted {
        x.copy_from_slice(&y);
        *logpi_x = ly;
    }
    Ok(accepted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proposal::{DiscreteProposal, GaussianProposal};
    use crate::targets::DiscreteTarget;
    use alloc::collections::VecDeque;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Replays scripted uniforms and normals.
    struct Scripted {
        uniforms: VecDeque<f64>,
        normals: VecDeque<f64>,
    }

    impl KernelRng for Scripted {
        fn uniform(&mut self) -> f64 {
            self.uniforms
                .pop_front()
                .expect("script ran out of uniforms")
        }
        fn standard_normal(&mut self) -> f64 {
            self.normals.pop_front().expect("script ran out of normals")
        }
    }

    struct Flat;
    impl LogTarget for Flat {
        fn dim(&self) -> usize {
            1
        }
        fn log_density(&self, _: &[f64]) -> f64 {
            0.0
        }
    }

    struct Normal1;
    impl LogTarget for Normal1 {
        fn dim(&self) -> usize {
            1
        }
        fn log_density(&self, x: &[f64]) -> f64 {
            -0.5 * x[0] * x[0]
        }
    }

    /// Zero density everywhere except a tiny window.
    struct Spike;
    impl LogTarget for Spike {
        fn dim(&self) -> usize {
            1
        }
        fn log_density(&self, x: &[f64]) -> f64 {
            if x[0].abs() < 1.0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        }
    }

    #[test]
    fn flat_target_accepts_first_downhill_proposal() {
        let p = GaussianProposal::isotropic(1, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut c = EvalCounter::new();
        for _ in 0..100 {
            let m = forced_downhill(&[0.0], 0.0, &p, &Flat, &mut rng, &mut c, 10).unwrap();
            assert_eq!(m.tries, 1);
        }
    }

    #[test]
    fn strictly_downhill_proposal_accepted_with_u_near_one() {
        let p = GaussianProposal::isotropic(1, 1.0).unwrap();
        let mut rng = Scripted {
            uniforms: [0.999_999].into(),
            normals: [2.0].into(),
        };
        let mut c = EvalCounter::new();
        let m = forced_downhill(&[0.0], 0.0, &p, &Normal1, &mut rng, &mut c, 10).unwrap();
        assert_eq!((m.point[0], m.tries), (2.0, 1));
    }

    #[test]
    fn strictly_uphill_proposal_accepted() {
        let p = GaussianProposal::isotropic(1, 1.0).unwrap();
        let mut rng = Scripted {
            uniforms: [0.999_999].into(),
            normals: [-2.5].into(),
        };
        let mut c = EvalCounter::new();
        let m = forced_uphill(&[3.0], -4.5, &p, &Normal1, &mut rng, &mut c, 10).unwrap();
        assert_eq!((m.point[0], m.tries), (0.5, 1));
    }

    #[test]
    fn uphill_between_zero_density_points_is_accepted() {
        let p = GaussianProposal::isotropic(1, 1.0).unwrap();
        let mut rng = Scripted {
            uniforms: [0.999_999].into(),
            normals: [1.0].into(),
        };
        let mut c = EvalCounter::new();
        let m = forced_uphill(&[5.0], f64::NEG_INFINITY, &p, &Spike, &mut rng, &mut c, 10).unwrap();
        assert_eq!(m.log_density, f64::NEG_INFINITY);
        assert_eq!(m.tries, 1);
    }

    #[test]
    fn exhausting_max_tries_is_an_error() {
        // uphill from the spike into zero density is never accepted
        let p = GaussianProposal::isotropic(1, 1.0).unwrap();
        let mut rng = Scripted {
            uniforms: [0.0; 3].into(),
            normals: [10.0; 3].into(),
        };
        let mut c = EvalCounter::new();
        let err = forced_uphill(&[0.0], 0.0, &p, &Spike, &mut rng, &mut c, 3).unwrap_err();
        assert_eq!(
            err,
            Error::ForcedTransitionExhausted {
                phase: Phase::Uphill,
                max_tries: 3
            }
        );
        assert_eq!(c.total(), 3);
    }

    #[test]
    fn identity_proposal_is_accepted_with_probability_one() {
        // normals of zero make x' = x* = z* = x; α^J = 1 because z = x
        let p = GaussianProposal::isotropic(1, 1.0).unwrap();
        let mut c = EvalCounter::new();
        let mut s = RamState::new(&Normal1, vec![0.7], &mut c).unwrap();
        let mut rng = Scripted {
            uniforms: [0.5, 0.5, 0.5, 0.999_999_9].into(),
            normals: [0.0; 3].into(),
        };
        let r = ram_step(&mut s, &p, &Normal1, &mut rng, &mut c, 10).unwrap();
        assert!(r.accepted);
        assert_eq!(
            joint_log_acceptance(s.logpi_x, s.logpi_z, s.logpi_x, s.logpi_z),
            0.0
        );
    }

    #[test]
    fn reduction_to_metropolis() {
        let cases = [
            (-1.0, -2.0, -3.0, -5.0),
            (-3.0, -3.0, -1.0, -1.5),
            (0.0, -10.0, -0.5, -0.5),
        ];
        for (x, z, xs, zs) in cases {
            assert_eq!(joint_log_acceptance(x, z, xs, zs), (xs - x).min(0.0));
        }
    }

    #[test]
    fn joint_acceptance_edge_cases() {
        let ninf = f64::NEG_INFINITY;
        assert_eq!(joint_log_acceptance(-1.0, -2.0, ninf, ninf), ninf);
        assert_eq!(joint_log_acceptance(ninf, -2.0, -1.0, -3.0), 0.0);
        assert_eq!(joint_log_acceptance(ninf, -2.0, ninf, -3.0), 0.0);
        // z denser than x penalises the current state
        assert_eq!(joint_log_acceptance(-2.0, -1.0, -2.0, -3.0), -1.0);
    }

    #[test]
    fn evals_equal_proposal_counts() {
        let t = crate::targets::GaussianMixture::equal_modes(&[[0.0, 0.0], [5.0, 5.0]]).unwrap();
        let p = GaussianProposal::isotropic(2, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut c = EvalCounter::new();
        let mut s = RamState::new(&t, vec![0.0, 0.0], &mut c).unwrap();
        assert_eq!(c.total(), 1);
        for _ in 0..500 {
            let before = c;
            let r = ram_step(&mut s, &p, &t, &mut rng, &mut c, DEFAULT_MAX_TRIES).unwrap();
            assert!(r.n_down >= 1 && r.n_up >= 1 && r.n_aux >= 1);
            assert_eq!(r.evals, r.n_down + r.n_up + r.n_aux);
            assert_eq!(
                c.phase(Phase::Downhill) - before.phase(Phase::Downhill),
                r.n_down
            );
            assert_eq!(c.phase(Phase::Uphill) - before.phase(Phase::Uphill), r.n_up);
            assert_eq!(
                c.phase(Phase::AuxDownhill) - before.phase(Phase::AuxDownhill),
                r.n_aux
            );
            assert_eq!(c.phase(Phase::Other), 1);
            assert_eq!(s.logpi_x, t.log_density(&s.x));
            assert_eq!(s.logpi_z, t.log_density(&s.z));
        }
    }

    #[test]
    fn metropolis_uphill_always_accepted_and_one_eval() {
        let p = GaussianProposal::isotropic(1, 1.0).unwrap();
        let mut rng = Scripted {
            uniforms: [0.999_999].into(),
            normals: [-1.0].into(),
        };
        let mut c = EvalCounter::new();
        let (mut x, mut lp) = (vec![2.0], -2.0);
        assert!(metropolis_step(&mut x, &mut lp, &p, &Normal1, &mut rng, &mut c).unwrap());
        assert_eq!((x[0], lp, c.total()), (1.0, -0.5, 1));
    }

    #[test]
    fn metropolis_normal_mean() {
        let p = GaussianProposal::isotropic(1, 2.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut c = EvalCounter::new();
        let (mut x, mut lp) = (vec![0.0], 0.0);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            metropolis_step(&mut x, &mut lp, &p, &Normal1, &mut rng, &mut c).unwrap();
            sum += x[0];
        }
        assert_eq!(c.total(), n as u64);
        // integrated autocorrelation time of this chain is about 4
        let se = (4.0 / n as f64).sqrt();
        assert!((sum / n as f64).abs() < 3.0 * se, "mean {}", sum / n as f64);
    }

    #[test]
    fn forced_downhill_on_three_states_from_top() {
        // π ∝ (1, 2, 4), start at state 2 (weight 4): both other states are
        // downhill so q·α^D / A^D is uniform over {0, 1}
        let t = DiscreteTarget::from_weights(&[1.0, 2.0, 4.0]);
        let q = DiscreteProposal::uniform_other(3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut c = EvalCounter::new();
        let mut hits = [0u32; 3];
        let lp = libm::log(4.0);
        for _ in 0..20_000 {
            let m = forced_downhill(&[2.0], lp, &q, &t, &mut rng, &mut c, 100).unwrap();
            assert_eq!(m.tries, 1);
            hits[DiscreteTarget::state_of(&m.point)] += 1;
        }
        assert_eq!(hits[2], 0);
        let f = hits[0] as f64 / 20_000.0;
        assert!((f - 0.5).abs() < 4.0 * (0.25f64 / 20_000.0).sqrt());
    }

    #[test]
    fn forced_uphill_on_three_states_from_bottom() {
        let t = DiscreteTarget::from_weights(&[1.0, 2.0, 4.0]);
        let q = DiscreteProposal::uniform_other(3);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut c = EvalCounter::new();
        let mut hits = [0u32; 3];
        for _ in 0..20_000 {
            let m = forced_uphill(&[0.0], 0.0, &q, &t, &mut rng, &mut c, 100).unwrap();
            assert_eq!(m.tries, 1);
            hits[DiscreteTarget::state_of(&m.point)] += 1;
        }
        assert_eq!(hits[0], 0);
        let f = hits[1] as f64 / 20_000.0;
        assert!((f - 0.5).abs() < 4.0 * (0.25f64 / 20_000.0).sqrt());
    }
}
