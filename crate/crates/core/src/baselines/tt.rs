use alloc::vec;
use alloc::vec::Vec;

use super::TemperatureLadder;
use crate::proposal::Proposal;
use crate::rng::KernelRng;
use crate::targets::{
    acceptance_from_log, eval_logpi, log_ratio_eps, EvalCounter, LogTarget, Phase,
};
use crate::Result;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TtStepReport {
    pub accepted: bool,
    /// Accepted with an end point different from the start. An accepted
    /// identity path (every intra-rung move rejected) leaves `x` unchanged.
    pub moved: bool,
    /// Intra-rung Metropolis moves that were accepted, out of `2J`.
    pub inner_accepted: u32,
    /// Log of the final acceptance probability before capping at 1.
    pub log_alpha: f64,
    pub evals: u64,
}

/// One tempered-transitions update of `x` against `target`.
///
/// Ascends with a Metropolis move invariant for `π^{1/T_j}` at each rung
/// `j = 1..=J`, then descends applying the rung-`j` move again for
/// `j = J..=1`. The end point is accepted with probability
/// `min{1, Π_j [π_j(x̂_{j−1}) / π_{j−1}(x̂_{j−1})] [π_{j−1}(x̌_{j−1}) / π_j(x̌_{j−1})]}`,
/// where `x̂` are the ascending and `x̌` the descending states. Costs exactly
/// `2J` evaluations; the current density is taken from `logpi_x`.
pub fn tempered_transition_step<T, P, R>(
    x: &mut Vec<f64>,
    logpi_x: &mut f64,
    target: &T,
    ladder: &TemperatureLadder<P>,
    rng: &mut R,
    counter: &mut EvalCounter,
) -> Result<TtStepReport>
where
    T: LogTarget + ?Sized,
    P: Proposal,
    R: KernelRng + ?Sized,
{
    let top = ladder.top();
    let before = counter.total();
    let mut report = TtStepReport::default();

    let mut cur = x.clone();
    let mut lcur = *logpi_x;
    let mut y = vec![0.0; cur.len()];
    // log π at x̂_0..x̂_{J−1}
    let mut ascent = Vec::with_capacity(top);

    let mut rung_move = |j: usize,
                         cur: &mut Vec<f64>,
                         lcur: &mut f64,
                         rng: &mut R,
                         counter: &mut EvalCounter|
     -> Result<()> {
        ladder.proposals[j].propose(cur, &mut y, rng);
        let ly = eval_logpi(target, &y, counter, Phase::Other)?;
        let a = log_ratio_eps(ly, *lcur) / ladder.temps[j];
        if rng.uniform() < acceptance_from_log(a) {
            cur.copy_from_slice(&y);
            *lcur = ly;
            report.inner_accepted += 1;
        }
        Ok(())
    };

    for j in 1..=top {
        ascent.push(lcur);
        rung_move(j, &mut cur, &mut lcur, rng, counter)?;
    }
    let mut log_alpha = 0.0;
    for j in (1..=top).rev() {
        rung_move(j, &mut cur, &mut lcur, rng, counter)?;
        // pairs the ascending and descending factors that share temperatures
        let dbeta = 1.0 / ladder.temps[j] - 1.0 / ladder.temps[j - 1];
        let diff = log_ratio_eps(ascent[j - 1], lcur);
        if diff != 0.0 {
            log_alpha += dbeta * diff;
        }
    }
    if log_alpha.is_nan() {
        log_alpha = 0.0;
    }
    report.log_alpha = log_alpha;
    report.accepted = rng.uniform() < acceptance_from_log(log_alpha);
    if report.accepted {
        report.moved = cur != *x;
        *x = cur;
        *logpi_x = lcur;
    }
    report.evals = counter.total() - before;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proposal::GaussianProposal;

    /// Every uniform is just below 1 and every normal is `+1`, so each
    /// proposal lands one scale unit away and is rejected unless uphill.
    struct Rigged;

    impl KernelRng for Rigged {
        fn uniform(&mut self) -> f64 {
            1.0 - f64::EPSILON
        }
        fn standard_normal(&mut self) -> f64 {
            1.0
        }
    }

    struct Peak;

    impl LogTarget for Peak {
        fn dim(&self) -> usize {
            2
        }
        fn log_density(&self, x: &[f64]) -> f64 {
            -50.0 * (x[0] * x[0] + x[1] * x[1])
        }
    }

    struct Flat;

    impl LogTarget for Flat {
        fn dim(&self) -> usize {
            2
        }
        fn log_density(&self, _: &[f64]) -> f64 {
            0.0
        }
    }

    fn ladder() -> TemperatureLadder<GaussianProposal> {
        let p = |s| GaussianProposal::isotropic(2, s).unwrap();
        TemperatureLadder::new(
            vec![1.0, 2.0, 4.0, 8.0],
            vec![p(0.9), p(0.9), p(1.08), p(1.296)],
        )
        .unwrap()
    }

    #[test]
    fn identity_path_has_acceptance_exactly_one() {
        let mut x = vec![0.0, 0.0];
        let mut lx = Peak.log_density(&x);
        let mut c = EvalCounter::new();
        let r = tempered_transition_step(&mut x, &mut lx, &Peak, &ladder(), &mut Rigged, &mut c)
            .unwrap();
        assert_eq!(r.inner_accepted, 0);
        assert_eq!(r.log_alpha, 0.0);
        assert_eq!(acceptance_from_log(r.log_alpha), 1.0);
        assert!(r.accepted && !r.moved);
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(r.evals, 6);
    }

    #[test]
    fn flat_target_always_accepts_and_moves() {
        let mut x = vec![0.3, -0.2];
        let mut lx = 0.0;
        let mut c = EvalCounter::new();
        let r = tempered_transition_step(&mut x, &mut lx, &Flat, &ladder(), &mut Rigged, &mut c)
            .unwrap();
        assert_eq!(r.inner_accepted, 6);
        assert_eq!(r.log_alpha, 0.0);
        assert!(r.accepted && r.moved);
        assert_eq!(c.total(), 6);
        assert_eq!(c.phase(Phase::Other), 6);
    }
}
