//! Exact-oracle checks behind the `verify` subcommand.

use serde::{Deserialize, Serialize};

use ram_core::oracle::{
    build_gibbs_ram_matrix, build_metropolis_matrix, build_pt_matrix, build_ram_joint_matrix,
    build_tt_matrix, check_stationarity, detailed_balance_residual, gibbs_ram_target, normalize,
    pt_product_target, ram_joint_target, DiscreteKernelMatrix, PtSwaps, DEFAULT_EPS,
};
use ram_core::proposal::DiscreteProposal;

pub const ORACLE_TOL: f64 = 1e-10;
pub const ROW_TOL: f64 = 1e-12;

/// Probabilities to compare a marginal against, and the map from a state
/// label to its index in that vector.
type Marginal<'a> = (&'a [f64], &'a dyn Fn(&[usize]) -> usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub states: usize,
    pub row_error: f64,
    pub stationarity: f64,
    pub detailed_balance: Option<f64>,
    /// Largest error of the stationary vector's `x` marginal against `π`.
    pub marginal_error: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

fn check(
    name: &str,
    m: &DiscreteKernelMatrix,
    target: &[f64],
    reversible: bool,
    marginal: Option<Marginal>,
    tol: f64,
) -> OracleCheck {
    let row_error = m.row_sum_error();
    let stationarity = check_stationarity(m, target);
    let detailed_balance = reversible.then(|| detailed_balance_residual(m, target));
    let marginal_error = marginal.map(|(pi, key)| {
        let s = m
            .stationary_distribution()
            .expect("kernel has a unique stationary vector");
        let mut acc = vec![0.0; pi.len()];
        for (label, v) in m.labels.iter().zip(&s) {
            acc[key(label)] += v;
        }
        acc.iter()
            .zip(normalize(pi))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    });
    let passed = row_error < ROW_TOL
        && m.entries_in_unit_interval()
        && stationarity < tol
        && detailed_balance.is_none_or(|d| d < tol)
        && marginal_error.is_none_or(|e| e < tol);
    OracleCheck {
        name: name.to_string(),
        states: m.n_states(),
        row_error,
        stationarity,
        detailed_balance,
        marginal_error,
        tolerance: tol,
        passed,
    }
}

pub fn oracle_checks() -> Vec<OracleCheck> {
    let mut out = Vec::new();
    let first = |l: &[usize]| l[0];

    let three = [1.0, 2.0, 4.0];
    let bimodal = [4.0, 1.0, 0.01, 1.0, 4.0];
    let with_zero = [3.0, 0.0, 1.0, 2.0];
    let u3 = DiscreteProposal::uniform_other(3);
    let u4 = DiscreteProposal::uniform_other(4);
    let nn5 = DiscreteProposal::nearest_neighbor(5);

    for (name, pi, q) in [
        ("ram joint, 3 states", &three[..], &u3),
        ("ram joint, 5-state bimodal", &bimodal[..], &nn5),
        ("ram joint, zero-density state", &with_zero[..], &u4),
    ] {
        let m = build_ram_joint_matrix(pi, q.matrix(), DEFAULT_EPS);
        out.push(check(
            name,
            &m,
            &ram_joint_target(pi, q.matrix()),
            true,
            Some((pi, &first)),
            ORACLE_TOL,
        ));
    }

    let m = build_metropolis_matrix(&three, u3.matrix());
    out.push(check(
        "metropolis, 3 states",
        &m,
        &normalize(&three),
        true,
        Some((&three, &first)),
        ORACLE_TOL,
    ));

    let temps = [1.0, 3.0];
    let m = build_pt_matrix(&three, &[u3.matrix(); 2], &temps, PtSwaps::SingleAdjacent);
    out.push(check(
        "parallel tempering, 2 rungs x 3 states",
        &m,
        &pt_product_target(&three, &temps),
        false,
        Some((&three, &first)),
        ORACLE_TOL,
    ));

    let temps = [1.0, 2.0, 4.0];
    let m = build_pt_matrix(
        &bimodal,
        &[nn5.matrix(); 3],
        &temps,
        PtSwaps::Batch {
            count: 4,
            prob: 0.1,
        },
    );
    out.push(check(
        "parallel tempering, batch swaps, 3 rungs x 5 states",
        &m,
        &pt_product_target(&bimodal, &temps),
        false,
        None,
        ORACLE_TOL,
    ));

    let temps = [1.0, 2.0, 4.0, 8.0];
    let m = build_tt_matrix(&bimodal, &[nn5.matrix(); 4], &temps);
    out.push(check(
        "tempered transitions, 3 heated rungs",
        &m,
        &normalize(&bimodal),
        false,
        Some((&bimodal, &first)),
        ORACLE_TOL,
    ));

    let joint = [5.0, 0.2, 0.1, 0.2, 0.05, 0.3, 0.1, 0.3, 4.0];
    let m = build_gibbs_ram_matrix(&joint, 3, 3, u3.matrix(), u3.matrix(), DEFAULT_EPS);
    let key = |l: &[usize]| l[0] * 3 + l[2];
    out.push(check(
        "gibbs with two ram blocks",
        &m,
        &gibbs_ram_target(&joint, 3, 3, u3.matrix(), u3.matrix()),
        false,
        Some((&joint, &key)),
        1e-8,
    ));
    out
}

pub fn format_report(checks: &[OracleCheck]) -> String {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2e}"));
    let mut s = String::new();
    for c in checks {
        s.push_str(&format!(
            "{} {:<52} states={:<4} rows={:.1e} stationarity={:.2e} balance={} marginal={} tol={:.0e}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.states,
            c.row_error,
            c.stationarity,
            opt(c.detailed_balance),
            opt(c.marginal_error),
            c.tolerance
        ));
    }
    s
}
